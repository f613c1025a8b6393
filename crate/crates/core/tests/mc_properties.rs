mod common;

use std::sync::Arc;

use rhcontract::contract::*;
use rhcontract::mc::*;
use rhcontract::model::*;
use rhcontract::Error;

fn euro() -> ModelPrimitives {
    ModelPrimitives::euro_quadratic(0.25, f64::NEG_INFINITY).unwrap()
}

fn fixed(horizon: f64) -> Termination {
    Termination::Fixed { horizon }
}

fn terminal_outputs(model: &ModelPrimitives, a: f64, n: usize) -> Vec<f64> {
    let c = RevealingContract::constant_z(model, 0.0, 0.0, fixed(1.0)).unwrap();
    let cfg = SimulationConfig::new(n, 1e-2, 2.0, 17).with_paths_recorded();
    let batch = simulate_output(model, &EffortPolicy::constant_drift(model, a), &c, &cfg).unwrap();
    assert_eq!(batch.paths.len(), n);
    assert_eq!(batch.agent_payoffs.len(), n);
    batch.paths.iter().map(|p| *p.x.last().unwrap() - p.x[0]).collect()
}

#[test]
fn driftless_output_is_centred() {
    let e = Estimate::from_samples(&terminal_outputs(&euro(), 0.0, 20_000));
    assert!(e.within(0.0, 3.0), "{e:?}");
}

#[test]
fn unit_drift_has_unit_mean_and_variance() {
    let xs = terminal_outputs(&euro(), 1.0, 20_000);
    let e = Estimate::from_samples(&xs);
    assert!(e.within(1.0, 3.0), "{e:?}");
    let var = xs.iter().map(|x| (x - e.estimate).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    assert!((var - 1.0).abs() < 0.05, "variance {var}");
}

#[test]
fn zero_contract_pays_nothing() {
    let m = euro();
    let c = RevealingContract::constant_z(&m, 0.0, 0.0, fixed(1.0)).unwrap();
    let cfg = SimulationConfig::new(2000, 1e-2, 2.0, 1);
    let e = agent_value_mc(&m, &c, &EffortPolicy::constant_drift(&m, 0.0), &cfg).unwrap();
    assert_eq!(e.estimate, 0.0);
    assert_eq!(e.std_error, 0.0);
}

#[test]
fn revealing_contract_delivers_its_promise() {
    let m = euro();
    for z in [0.5, 1.0, 2.0] {
        let c = RevealingContract::constant_z(&m, 1.0, z, fixed(1.0)).unwrap();
        let cfg = SimulationConfig::new(20_000, 1e-3, 2.0, 3);
        let e = agent_value_mc(&m, &c, &EffortPolicy::Maximizer, &cfg).unwrap();
        assert!(e.within(1.0, BAND), "z = {z}: {e:?}");
        let dev = agent_value_mc(&m, &c, &EffortPolicy::constant_drift(&m, z + 0.5), &cfg).unwrap();
        assert!(dev.estimate <= 1.0 - 0.1 * 0.25 / 2.0 + BAND * dev.std_error, "z = {z}: {dev:?}");
    }
}

#[test]
fn seeded_runs_are_bit_identical() {
    let m = euro();
    let c = RevealingContract::constant_z(&m, 1.0, 1.0, fixed(1.0)).unwrap();
    let cfg = SimulationConfig::new(500, 1e-2, 2.0, 99);
    let a = simulate_output(&m, &EffortPolicy::Maximizer, &c, &cfg).unwrap();
    let b = simulate_output(&m, &EffortPolicy::Maximizer, &c, &cfg).unwrap();
    assert_eq!(a, b);
    let other = simulate_output(&m, &EffortPolicy::Maximizer, &c, &SimulationConfig::new(500, 1e-2, 2.0, 100)).unwrap();
    assert_ne!(a.agent_payoffs, other.agent_payoffs);
}

#[test]
fn antithetic_toggle_is_statistically_neutral() {
    let m = euro();
    let c = RevealingContract::constant_z(&m, 1.0, 1.0, fixed(1.0)).unwrap();
    let cfg = SimulationConfig::new(20_000, 1e-2, 2.0, 5);
    let plain = principal_value_mc(&m, &c, &cfg).unwrap();
    let anti = principal_value_mc(&m, &c, &cfg.clone().with_antithetic(true)).unwrap();
    assert!((plain.estimate - anti.estimate).abs() < BAND * plain.combined_error(&anti));

    let mut still = euro();
    still.vol = Arc::new(|_, _, _| 0.0);
    let a = agent_value_mc(&still, &c, &EffortPolicy::Maximizer, &cfg).unwrap();
    let b = agent_value_mc(&still, &c, &EffortPolicy::Maximizer, &cfg.clone().with_antithetic(true)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn doubling_the_cap_leaves_estimates_in_place() {
    let (m, c) = common::retiring_economy(1.0);
    let short = SimulationConfig::new(20_000, 1e-2, 15.0, 8);
    let long = SimulationConfig::new(20_000, 1e-2, 30.0, 8);
    let a = simulate_output(&m, &EffortPolicy::Maximizer, &c, &short).unwrap();
    let b = simulate_output(&m, &EffortPolicy::Maximizer, &c, &long).unwrap();
    let (ea, eb) = (a.agent_value(), b.agent_value());
    assert!((ea.estimate - eb.estimate).abs() < ea.combined_error(&eb) + ABSOLUTE_FLOOR, "{ea:?} {eb:?}");
}

#[test]
fn short_cap_raises_horizon_error() {
    let (m, c) = common::retiring_economy(1.0);
    let cfg = SimulationConfig::new(2000, 1e-2, 0.05, 8);
    assert!(matches!(simulate_output(&m, &EffortPolicy::Maximizer, &c, &cfg), Err(Error::Horizon { .. })));
}

#[test]
fn self_comparison_has_zero_gap() {
    let m = euro();
    let c = RevealingContract::constant_z(&m, 1.0, 1.0, fixed(1.0)).unwrap();
    let cfg = SimulationConfig::new(2000, 1e-2, 2.0, 4);
    let r = best_response_audit(&m, &c, &cfg, &[Deviation::new("self", EffortPolicy::Maximizer)]).unwrap();
    assert_eq!(r.deviations[0].gap, 0.0);
}

#[test]
fn idle_and_overwork_both_lose_the_compensator() {
    let m = euro();
    let c = RevealingContract::constant_z(&m, 1.0, 1.0, fixed(1.0)).unwrap();
    let cfg = SimulationConfig::new(20_000, 1e-3, 2.0, 6);
    let devs = [
        Deviation::new("a = 0", EffortPolicy::constant_drift(&m, 0.0)),
        Deviation::new("a = 2", EffortPolicy::constant_drift(&m, 2.0)),
    ];
    let r = best_response_audit(&m, &c, &cfg, &devs).unwrap();
    for g in &r.deviations {
        assert!(g.strictly_loses(), "{g:?}");
        let oracle = common::adaptive_gk(|_| 0.5, 0.0, 1.0, 1e-12);
        assert!((g.gap - oracle).abs() < BAND * g.combined_error, "{g:?}");
    }
}

#[test]
fn sannikov_overwork_loses() {
    let m = ModelPrimitives::sannikov(0.1, Interval::new(0.0, 1.0).unwrap(), 0.0).unwrap();
    let c = RevealingContract::constant_z(&m, 3.0, 0.5, fixed(1.0)).unwrap();
    let cfg = SimulationConfig::new(20_000, 1e-3, 2.0, 7);
    let devs = [Deviation::new("a = 1", EffortPolicy::constant_drift(&m, 1.0))];
    let r = best_response_audit(&m, &c, &cfg, &devs).unwrap();
    assert!(r.deviations[0].strictly_loses(), "{:?}", r.deviations[0]);
    let (a_star, _) = common::grid_max(|a| 0.5 * a - 0.5 * a * a, 0.0, 1.0, 10_001);
    assert!((a_star - 0.5).abs() < 1e-3);
}

#[test]
fn beaten_maximizer_fails_the_audit_by_name() {
    let m = euro().with_drift_actions(Interval::new(0.0, 0.2).unwrap()).unwrap();
    let c = RevealingContract::constant_z(&m, 1.0, 1.0, fixed(1.0)).unwrap();
    let cfg = SimulationConfig::new(5000, 1e-2, 2.0, 4);
    let devs = [Deviation::new("outside the box", EffortPolicy::constant_drift(&m, 1.0))];
    let r = evaluate_best_response(&m, &c, &cfg, &devs).unwrap();
    assert!(!r.passed && r.deviations[0].gap < 0.0);
    match best_response_audit(&m, &c, &cfg, &devs) {
        Err(Error::Audit(msg)) => assert!(msg.contains("best_response") && msg.contains("outside the box"), "{msg}"),
        other => panic!("expected an audit failure, got {other:?}"),
    }
}

#[test]
fn martingale_drift_signs() {
    let m = euro();
    let c = RevealingContract::constant_z(&m, 1.0, 1.0, fixed(1.0)).unwrap();
    let cfg = SimulationConfig::new(5000, 1e-3, 2.0, 11);
    let on = martingale_audit(&m, &c, &EffortPolicy::Maximizer, &cfg).unwrap();
    assert!(on.driftless(), "{on:?}");
    let off = martingale_audit(&m, &c, &EffortPolicy::constant_drift(&m, 1.5), &cfg).unwrap();
    assert!(off.decreasing(), "{off:?}");
    assert!((off.slope + 0.125).abs() < BAND * off.std_error + 1e-2, "{off:?}");
}

#[test]
fn principal_value_matches_closed_form() {
    let m = euro();
    let beta: f64 = 0.25;
    for (z, y0) in [(1.0, 1.0), (0.5, 2.0)] {
        let c = RevealingContract::constant_z(&m, y0, z, fixed(1.0)).unwrap();
        let e = principal_value_mc(&m, &c, &SimulationConfig::new(20_000, 1e-3, 2.0, 12)).unwrap();
        let output = common::adaptive_gk(|t| (-beta * t).exp() * z, 0.0, 1.0, 1e-13);
        let oracle = output - (-beta).exp() * (y0 + 0.5 * z * z);
        assert!(e.within(oracle, BAND), "z = {z}: {e:?} vs {oracle}");
    }
}

#[test]
fn idle_principal_pays_discounted_promise() {
    let m = euro();
    let c = RevealingContract::constant_z(&m, 2.0, 0.0, fixed(1.0)).unwrap();
    let e = principal_value_mc(&m, &c, &SimulationConfig::new(20_000, 1e-2, 2.0, 13)).unwrap();
    assert!(e.within(-(-0.25f64).exp() * 2.0, BAND), "{e:?}");
}

#[test]
fn american_quit_at_first_hit_is_optimal() {
    let (m, c) = common::retiring_economy(1.0);
    let cfg = SimulationConfig::new(20_000, 1e-2, 20.0, 21);
    let r = american_stop_audit(&m, &c, &cfg).unwrap();
    assert!(r.passed && !r.immediate);
    assert_eq!(r.best_label, "hit");
    let early = r.variants.iter().find(|v| v.label == "min(hit, 0.1)").unwrap();
    assert!(early.gap > BAND * early.combined_error, "{early:?}");
    let late = r.variants.iter().find(|v| v.label == "hit + 0.5").unwrap();
    assert!(late.gap.abs() <= BAND * late.combined_error + ABSOLUTE_FLOOR, "{late:?}");
}

#[test]
fn retirement_at_start_is_immediate() {
    let (m, c) = common::retiring_economy(0.0);
    let r = american_stop_audit(&m, &c, &SimulationConfig::new(2000, 1e-2, 20.0, 22)).unwrap();
    assert!(r.immediate && r.mean_stopping_time == 0.0);
    assert!(r.variants.iter().all(|v| v.gap == 0.0));
}

#[test]
fn batch_summary_serializes() {
    let m = euro();
    let c = RevealingContract::constant_z(&m, 1.0, 1.0, fixed(1.0)).unwrap();
    let cfg = SimulationConfig::new(1000, 1e-2, 2.0, 14);
    let b = simulate_output(&m, &EffortPolicy::Maximizer, &c, &cfg).unwrap();
    let s = BatchSummary::new(b.agent_value(), &b, &cfg);
    let json = serde_json::to_string(&s).unwrap();
    let back: BatchSummary = serde_json::from_str(&json).unwrap();
    assert_eq!(s, back);
    for key in ["estimate", "std_error", "n_paths", "truncated_count", "seed"] {
        assert!(json.contains(key));
    }
}
