mod common;

use common::*;
use h2grid::grid::{plan, DispatchDecision, stage_cost, validate_trajectory_with, BuildOptions, PlanOptions, ValidateOptions};
use proptest::prelude::*;

#[test]
fn milp_matches_segment_leaf_enumeration() {
    for seed in 0..8u64 {
        let t = 2 + (seed % 3) as usize;
        let (spec, scen) = small_instance(seed, t);
        let b = BuildOptions::default();
        let milp = milp_objective(&spec, &scen, &b);
        let oracle = leaf_enumeration(&spec, &scen, &b);
        assert!((milp - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()), "seed {seed}: {milp} vs {oracle}");
    }
}

#[test]
fn cheaper_battery_discharges_before_hydrogen() {
    let mut discharging = 0;
    for seed in 100..120u64 {
        let (spec, scen) = small_instance(seed, 6);
        assert!(spec.prices.c_b < spec.prices.c_h);
        let b = BuildOptions { terminal: false, ..Default::default() };
        let p = plan(&spec, &scen, 6, &b, &exact_plan_options()).unwrap();
        discharging += p.trajectory.iter().filter(|d| d.p_h_d > 1e-6).count();
        let bad = priority_violations(&spec, &p.trajectory, false, 1e-6);
        assert!(bad.is_empty(), "seed {seed}: steps {bad:?}");
    }
    assert!(discharging > 10, "the fixture never discharges hydrogen");
}

#[test]
fn priority_check_flags_idle_battery() {
    let spec = spec_with_segments(2);
    let step = |p_b_d: f64, p_h_d: f64, e_b: f64| DispatchDecision { p_b_d, p_h_d, e_b, e_h: 100.0, ..Default::default() };
    // battery idle at half charge while the fuel cell runs
    assert_eq!(priority_violations(&spec, &[step(0.0, 10.0, 50.0), step(0.0, 0.0, 50.0)], false, 1e-6), vec![0]);
    // battery at its power limit
    assert!(priority_violations(&spec, &[step(spec.battery.p_max, 10.0, 50.0)], false, 1e-6).is_empty());
    // battery empty later on, so its energy is spoken for
    assert!(priority_violations(&spec, &[step(0.0, 10.0, 50.0), step(50.0, 0.0, 0.0)], false, 1e-6).is_empty());
    // the terminal floor holds the battery at its initial level
    let e0 = spec.battery.e0;
    assert!(priority_violations(&spec, &[step(0.0, 10.0, e0)], true, 1e-6).is_empty());
    assert_eq!(priority_violations(&spec, &[step(0.0, 10.0, e0)], false, 1e-6), vec![0]);
}

#[test]
fn objective_is_sum_of_stage_costs() {
    let (spec, scen) = small_instance(7, 12);
    let p = plan(&spec, &scen, 12, &BuildOptions::default(), &PlanOptions::default()).unwrap();
    let total: f64 = p.trajectory.iter().map(|d| stage_cost(d, &spec, spec.dt).total).sum();
    assert!((total - p.objective).abs() <= 1e-6 * (1.0 + total.abs()), "{total} vs {}", p.objective);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn planned_trajectories_are_physical(seed in 0u64..100_000, t in 1usize..10, terminal in any::<bool>()) {
        let (spec, scen) = small_instance(seed, t);
        let b = BuildOptions { terminal, ..Default::default() };
        let p = plan(&spec, &scen, t, &b, &PlanOptions::default()).unwrap();
        let v = validate_trajectory_with(&p.trajectory, &spec, &scen, &ValidateOptions { terminal, tol: 1e-5, ..Default::default() });
        prop_assert!(v.is_empty(), "{v:?}");
        for d in &p.trajectory {
            prop_assert!(d.e_h >= spec.hydrogen.e_min - 1e-6 && d.e_h <= spec.hydrogen.e_max + 1e-6);
        }
    }
}
