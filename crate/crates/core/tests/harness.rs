use mlgif::harness::{run_orbit_variant, FilterSpec, RunMetrics, ScenarioConfig};

fn late_position_stats(m: &RunMetrics, from_epoch: usize) -> (f64, f64) {
    let (mut err, mut var, mut count) = (0.0, 0.0, 0usize);
    for t in &m.traces {
        for r in t.records.iter().filter(|r| r.epoch > from_epoch) {
            err += r.error[..3].iter().map(|e| e * e).sum::<f64>();
            var += r.sigma3[..3].iter().map(|s| (s / 3.0).powi(2)).sum::<f64>();
            count += 1;
        }
    }
    ((err / count as f64).sqrt(), (var / count as f64).sqrt())
}

/// Angles at 0.015 deg bound a single fix to about 1.8 km across the line of
/// sight, which keeps the ballistic steady state near 300 m; the check is
/// convergence well below that and agreement between error and reported sigma.
#[test]
fn ballistic_truth_is_tracked_by_both_filters() {
    let cfg = ScenarioConfig { runs: 6, epochs: 15, truth_thrust: 0.0, noise_sigma: 1e-9, ..ScenarioConfig::default() };
    for spec in [FilterSpec::gif(5), FilterSpec::ukf()] {
        let m = run_orbit_variant(&cfg, &spec).unwrap();
        assert!(m.failures.is_empty());
        let (rmse, sigma) = late_position_stats(&m, 10);
        assert!(rmse < 500.0, "{:?}: {rmse} m", spec.variant);
        assert!(rmse < 1.5 * sigma, "{:?}: rmse {rmse} m against sigma {sigma} m", spec.variant);
    }
}

#[test]
fn more_thrust_never_helps_the_baseline() {
    let rmse = |thrust: f64| {
        let cfg = ScenarioConfig { runs: 4, epochs: 10, truth_thrust: thrust, ..ScenarioConfig::default() };
        run_orbit_variant(&cfg, &FilterSpec::ukf()).unwrap().pos_rmse
    };
    let levels = [rmse(0.0), rmse(1.5e-4), rmse(3e-4)];
    assert!(levels[0] <= levels[1] && levels[1] <= levels[2], "{levels:?}");
}

#[test]
fn aggregates_stay_in_range() {
    let cfg = ScenarioConfig { runs: 3, epochs: 5, ..ScenarioConfig::default() };
    let m = run_orbit_variant(&cfg, &FilterSpec::gif_interp(2, 10)).unwrap();
    assert!(m.pos_rmse >= 0.0 && m.vel_rmse >= 0.0);
    assert!((0.0..=100.0).contains(&m.pct_outside_axis));
    assert!((0.0..=100.0).contains(&m.pct_outside_mahalanobis));
    assert_eq!(m.traces.len(), 3);
    assert!(m.traces.iter().all(|t| t.records.len() == 5));
}
