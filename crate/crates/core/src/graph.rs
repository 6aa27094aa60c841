//! Coupling graph over sites and the discrete curvature operator.
//!
//! The curvature at a site is `κ_i = Σ_{j ~ i} (u_j - u_i)`, i.e. `-(L u)_i`
//! with `L = D - A` the combinatorial graph Laplacian. On a path graph this is
//! the familiar three-point stencil with one-sided rows at the endpoints.

use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result, SmcfError};

/// Undirected, unweighted graph over `site_count` sites.
///
/// Immutable after construction. Neighbor lists are kept alongside the pair
/// list so that curvature costs `O(|E|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    site_count: usize,
    pairs: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

/// Scalar position per site at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub positions: Vec<f64>,
    pub time: f64,
}

impl State {
    pub fn new(positions: Vec<f64>, time: f64) -> Self {
        Self { positions, time }
    }

    pub fn at_zero(positions: Vec<f64>) -> Self {
        Self::new(positions, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.positions.iter().all(|x| x.is_finite())
    }
}

impl Network {
    /// Chain `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(SmcfError::TooFewSites(n));
        }
        Self::from_pairs(n, (0..n - 1).map(|i| (i, i + 1)))
    }

    /// Ring `0 - 1 - ... - (n-1) - 0`.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(SmcfError::InvalidArgument(format!(
                "a cycle needs at least 3 sites, got {n}"
            )));
        }
        Self::from_pairs(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    /// Builds a network from an explicit list of unordered pairs.
    ///
    /// `(i, j)` and `(j, i)` name the same pair and count as a duplicate.
    pub fn from_pairs<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(SmcfError::TooFewSites(0));
        }
        let mut seen = HashSet::new();
        let mut stored = Vec::new();
        let mut neighbors = vec![Vec::new(); n];
        for (a, b) in pairs {
            for site in [a, b] {
                if site >= n {
                    return Err(SmcfError::SiteOutOfRange { site, sites: n });
                }
            }
            if a == b {
                return Err(SmcfError::SelfLoop(a));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(SmcfError::DuplicatePair(a, b));
            }
            stored.push((a, b));
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        neighbors.iter_mut().for_each(|v| v.sort_unstable());
        Ok(Self {
            site_count: n,
            pairs: stored,
            neighbors,
        })
    }

    pub fn site_count(&self) -> usize {
        self.site_count
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn neighbors(&self, site: usize) -> &[usize] {
        &self.neighbors[site]
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    /// Curvature at a single site, reading whatever values `u` currently holds.
    ///
    /// Evaluated as `-deg·u_i` followed by the neighbours in ascending order,
    /// which on a chain rounds exactly like `u[i-1] - 2u[i] + u[i+1]`.
    #[inline]
    pub fn curvature_at(&self, u: &[f64], site: usize) -> f64 {
        let nbrs = &self.neighbors[site];
        nbrs.iter().fold(-(nbrs.len() as f64) * u[site], |acc, &j| acc + u[j])
    }

    /// `κ = -L u`.
    pub fn curvature(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.site_count, u.len())?;
        Ok((0..self.site_count)
            .map(|i| self.curvature_at(u, i))
            .collect())
    }

    pub fn curvature_of(&self, state: &State) -> Result<Vec<f64>> {
        self.curvature(&state.positions)
    }

    /// Dense `L = D - A`.
    pub fn laplacian_matrix(&self) -> DMatrix<f64> {
        let n = self.site_count;
        let mut l = DMatrix::zeros(n, n);
        for (i, nbrs) in self.neighbors.iter().enumerate() {
            l[(i, i)] = nbrs.len() as f64;
        }
        for &(a, b) in &self.pairs {
            l[(a, b)] = -1.0;
            l[(b, a)] = -1.0;
        }
        l
    }

    /// Largest Laplacian eigenvalue estimated by power iteration, clamped to
    /// the Gershgorin bound `2 * max_degree`.
    pub fn spectral_radius_estimate(&self) -> f64 {
        let n = self.site_count;
        let bound = 2.0 * self.degrees().into_iter().max().unwrap_or(0) as f64;
        if self.pairs.is_empty() {
            return 0.0;
        }
        let mut x: Vec<f64> = (0..n)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } + 0.01 * i as f64)
            .collect();
        let mut estimate = 0.0;
        for _ in 0..500 {
            let y: Vec<f64> = (0..n).map(|i| -self.curvature_at(&x, i)).collect();
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            estimate = norm / xnorm;
            x = y.into_iter().map(|v| v / norm).collect();
        }
        estimate.min(bound)
    }

    /// Number of connected components.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.site_count];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.site_count {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(i) = stack.pop() {
                for &j in &self.neighbors[i] {
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        count
    }
}
