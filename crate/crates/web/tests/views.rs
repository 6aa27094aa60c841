use smcf_web::{ensemble_view, ledger_view, parse_config, simulate_paths};

#[test]
fn empty_config_means_defaults() {
    let rc = parse_config("  ").unwrap();
    assert_eq!(rc.sites, 10);
    assert!(parse_config("{\"sites\": \"ten\"}").is_err());
}

#[test]
fn paths_are_flattened_path_major() {
    let rc = parse_config(r#"{"sites": 4, "t_end": 0.1}"#).unwrap();
    let paths = simulate_paths(&rc, 3).unwrap();
    assert_eq!((paths.sites(), paths.records(), paths.path_count()), (4, 11, 3));
    let values = paths.values();
    assert_eq!(values.len(), 3 * 11 * 4);
    assert_eq!(paths.times().len(), 11);

    // Path 1 on its own matches the second block.
    let (net, cfg) = rc.resolve().unwrap();
    let traj = smcf::simulate(&net, &cfg, &mut smcf::NoiseStream::new(cfg.seed, 1)).unwrap();
    let flat: Vec<f64> = traj.samples.into_iter().flatten().collect();
    assert_eq!(&values[44..88], flat.as_slice());
}

#[test]
fn ensemble_tracks_oracle() {
    let rc = parse_config(r#"{"sites": 6}"#).unwrap();
    let view = ensemble_view(&rc, 2000).unwrap();
    assert_eq!(view.times.len(), 101);
    assert_eq!(view.graph_mean_variance_exact[0], 0.0);
    let last = view.times.len() - 1;
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    assert!(rel(view.graph_mean_variance[last], view.graph_mean_variance_exact[last]) < 0.15);
    assert!((view.energy_mean[last] - view.energy_exact[last]).abs() < 4.0 * view.energy_se[last] + 0.01);
    for (v, x) in view.terminal_variance.iter().zip(&view.terminal_variance_exact) {
        assert!(rel(*v, *x) < 0.15);
    }
}

#[test]
fn ledger_closes_at_every_step() {
    let rc = parse_config(r#"{"record_every": 10}"#).unwrap();
    let view = ledger_view(&rc, 0).unwrap();
    assert_eq!(view.times.len(), 101);
    assert_eq!(view.residual[0], 0.0);
    assert!(view.residual.iter().all(|r| r.abs() < 5e-3));
}
