//! CSV encodings of trajectories and Itô ledgers.
//!
//! Values are written in scientific notation with 17 significant digits, so
//! every `f64` round-trips exactly. Lines end in `\n`.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::functionals::ItoLedger;
use crate::sde::Trajectory;

pub const LEDGER_HEADER: &str = "time,f_value,drift_cum,noise_cum,qv_cum,residual";

fn push_value(line: &mut String, x: f64) {
    write!(line, "{x:.16e}").expect("writing to a String cannot fail");
}

pub fn trajectory_header(sites: usize) -> String {
    let mut h = String::from("time");
    for i in 0..sites {
        write!(h, ",site_{i}").unwrap();
    }
    h
}

/// `time,site_0,...,site_{N-1}`, one row per record.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> io::Result<()> {
    writeln!(out, "{}", trajectory_header(traj.site_count()))?;
    let mut line = String::new();
    for (t, row) in traj.times.iter().zip(&traj.samples) {
        line.clear();
        push_value(&mut line, *t);
        for x in row {
            line.push(',');
            push_value(&mut line, *x);
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn trajectory_csv_string(traj: &Trajectory) -> String {
    let mut buf = Vec::new();
    write_trajectory_csv(traj, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

pub fn write_ledger_csv<W: Write>(ledger: &ItoLedger, mut out: W) -> io::Result<()> {
    writeln!(out, "{LEDGER_HEADER}")?;
    let residuals = ledger.residuals();
    let mut line = String::new();
    for k in 0..ledger.times.len() {
        line.clear();
        let cols = [
            ledger.times[k],
            ledger.f_values[k],
            ledger.drift_cum[k],
            ledger.noise_cum[k],
            ledger.qv_cum[k],
            residuals[k],
        ];
        for (c, x) in cols.iter().enumerate() {
            if c > 0 {
                line.push(',');
            }
            push_value(&mut line, *x);
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}
