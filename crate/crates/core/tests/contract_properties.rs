use std::sync::Arc;

use proptest::prelude::*;
use rhcontract::contract::*;
use rhcontract::mc::NoiseStream;
use rhcontract::model::*;

fn euro() -> ModelPrimitives {
    ModelPrimitives::euro_quadratic(0.25, 0.0).unwrap()
}

fn grid(t_end: f64, dt: f64) -> Vec<f64> {
    let n = (t_end / dt).round() as usize;
    (0..=n).map(|i| i as f64 * dt).collect()
}

/// Output path under constant drift `a` and unit volatility.
fn brownian_output(times: &[f64], a: f64, seed: u64) -> Vec<f64> {
    let mut noise = NoiseStream::new(seed, 0, false);
    let mut x = vec![0.0];
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        let last = *x.last().unwrap();
        x.push(last + a * dt + dt.sqrt() * noise.next_normal());
    }
    x
}

#[test]
fn euler_converges_on_smooth_path() {
    let m = euro();
    let c = RevealingContract::constant_z(&m, 1.0, 1.0, Termination::Fixed { horizon: 1.0 }).unwrap();
    let path = |dt: f64| {
        let t = grid(1.0, dt);
        let x: Vec<f64> = t.iter().map(|s| (2.0 * std::f64::consts::PI * s).sin()).collect();
        propagate_y_with(&c, &t, &x, &m, 1e-2).unwrap().terminal_y
    };
    let (coarse, fine) = (path(1e-3), path(1e-5));
    assert!((coarse - fine).abs() < 5e-3, "{coarse} vs {fine}");
}

#[test]
fn identity_residual_vanishes_at_maximizer() {
    for (m, z) in [(euro(), 1.0), (ModelPrimitives::sannikov(0.1, Interval::new(0.0, 1.0).unwrap(), 0.0).unwrap(), 0.5)]
    {
        let mut worst: Vec<f64> = Vec::new();
        for dt in [1e-2, 1e-3] {
            let c = RevealingContract::constant_z(&m, 1.0, z, Termination::Fixed { horizon: 1.0 }).unwrap();
            let t = grid(1.0, dt);
            let a = maximizer(&m, &HamiltonianQuery::at(1.0, z)).unwrap().drift;
            let x = brownian_output(&t, a, 11);
            let p = propagate_y(&c, &t, &x, &m).unwrap();
            let r = identity_residuals(&m, &c, &p, &EffortPolicy::Maximizer).unwrap();
            worst.push(r.iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
        }
        assert!(worst[0] < 0.05 && worst[1] < 0.005, "{} residuals {worst:?}", m.name);
    }
}

#[test]
fn suboptimal_effort_drains_the_identity() {
    let m = euro();
    let c = RevealingContract::constant_z(&m, 1.0, 1.0, Termination::Fixed { horizon: 2.0 }).unwrap();
    let t = grid(2.0, 1e-3);
    for a in [0.0, 0.5, 2.0] {
        let x = brownian_output(&t, a, 5);
        let p = propagate_y(&c, &t, &x, &m).unwrap();
        let r = identity_residuals(&m, &c, &p, &EffortPolicy::constant_drift(&m, a)).unwrap();
        let rate = 0.5 * (a - 1.0f64).powi(2);
        for w in r.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "a = {a}");
        }
        let expected = -rate * 2.0;
        assert!((r.last().unwrap() - expected).abs() < 1e-9, "a = {a}: {} vs {expected}", r.last().unwrap());
    }
}

#[test]
fn discount_factor_matches_its_increments() {
    let m = ModelPrimitives::sannikov(0.1, Interval::new(0.0, 1.0).unwrap(), 0.0).unwrap();
    let c = RevealingContract::constant_z(&m, 1.0, 0.5, Termination::Fixed { horizon: 1.0 }).unwrap();
    let t = grid(1.0, 1e-3);
    let p = propagate_y(&c, &t, &brownian_output(&t, 0.5, 2), &m).unwrap();
    for (i, d) in p.discount.iter().enumerate() {
        assert!(*d > 0.0);
        assert!((d - (-0.1 * t[i]).exp()).abs() < 1e-12);
    }
    assert_eq!(p.times.len(), p.y.len());
    assert_eq!(p.x.len(), p.discount.len());
}

#[test]
fn payment_enters_the_drift() {
    let m = euro();
    let c = RevealingContract::constant_z(&m, 1.0, 0.0, Termination::Fixed { horizon: 1.0 })
        .unwrap()
        .with_payment(Arc::new(|_, _, _| 0.25));
    let t = grid(1.0, 1e-2);
    let p = propagate_y(&c, &t, &vec![0.0; t.len()], &m).unwrap();
    assert!((p.terminal_y - 0.75).abs() < 1e-12);
}

proptest! {
    #[test]
    fn hitting_time_monotone_in_level(seed in 0u64..1000, l1 in -1.0..1.0f64, dl in 0.0..1.0f64) {
        let m = euro();
        let c = RevealingContract::constant_z(&m, 0.5, 1.0, Termination::Fixed { horizon: 1.0 }).unwrap();
        let t = grid(1.0, 1e-2);
        let p = propagate_y(&c, &t, &brownian_output(&t, 1.0, seed), &m).unwrap();
        let hit = |l: f64| hitting_time(&p, l).unwrap_or(f64::INFINITY);
        prop_assert!(hit(l1) >= hit(l1 + dl));
    }

    #[test]
    fn zero_sensitivity_freezes_any_path(seed in 0u64..1000, y0 in 0.0..5.0f64) {
        let m = euro();
        let c = RevealingContract::constant_z(&m, y0, 0.0, Termination::Fixed { horizon: 1.0 }).unwrap();
        let t = grid(1.0, 1e-2);
        let p = propagate_y(&c, &t, &brownian_output(&t, 0.3, seed), &m).unwrap();
        prop_assert!(p.y.iter().all(|&y| y == y0));
    }
}

#[test]
fn path_csv_has_one_row_per_sample() {
    let m = euro();
    let c = RevealingContract::constant_z(&m, 1.0, 1.0, Termination::Fixed { horizon: 0.1 }).unwrap();
    let t = grid(0.1, 1e-2);
    let p = propagate_y(&c, &t, &vec![0.0; t.len()], &m).unwrap();
    let mut buf = Vec::new();
    write_path_csv(&p, &mut buf).unwrap();
    let mut r = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(r.headers().unwrap(), vec!["t", "x", "y", "discount", "flags"]);
    assert_eq!(r.records().count(), t.len());
}
