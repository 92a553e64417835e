//! Oracles and fixtures shared by the integration tests and the acceptance
//! suite. Each test binary uses a different subset.
#![allow(dead_code, clippy::needless_range_loop)]

use chrono::NaiveDate;
use h2grid::grid::{
    build_horizon_program, plan, BuildOptions, CurveSettings, DispatchDecision, EfficiencyModel, MicrogridSpec, PlanMode,
    PlanOptions, ScenarioSeries, StepSegments,
};
use h2grid::milp::{solve_lp, LpEngine, Sense, SolveOptions, StandardFormProgram, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub fn simplex() -> SolveOptions {
    SolveOptions { lp_engine: LpEngine::Simplex, ..Default::default() }
}

/// Binary program with up to 12 binaries whose feasibility is guaranteed by
/// a planted point.
pub fn random_milp(rng: &mut ChaCha8Rng) -> StandardFormProgram {
    let nb = rng.gen_range(1..=12);
    let nc = rng.gen_range(1..=40);
    let mut p = StandardFormProgram::new();
    for k in 0..nb {
        p.add_binary(format!("b{k}"), rng.gen_range(-10.0..10.0));
    }
    let pt: Vec<f64> = (0..nc).map(|_| rng.gen_range(0.0..3.0)).collect();
    let bpt: Vec<f64> = (0..nb).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect();
    for j in 0..nc {
        p.add_var(format!("x{j}"), 0.0, rng.gen_range(3.0..8.0), rng.gen_range(-5.0..5.0));
    }
    // indicator-style links x_j ≤ U·b_k
    for j in 0..nc {
        if rng.gen_bool(0.3) {
            let k = rng.gen_range(0..nb);
            if bpt[k] > 0.5 || pt[j] == 0.0 {
                p.add_row(format!("link{j}"), vec![(nb + j, 1.0), (k, -10.0)], Sense::Le, 0.0);
            }
        }
    }
    let m = rng.gen_range(2..10);
    for i in 0..m {
        let mut coefs: Vec<(usize, f64)> = Vec::new();
        for k in 0..nb {
            if rng.gen_bool(0.4) {
                coefs.push((k, rng.gen_range(-5.0..5.0)));
            }
        }
        for j in 0..nc {
            if rng.gen_bool(0.3) {
                coefs.push((nb + j, rng.gen_range(-5.0..5.0)));
            }
        }
        let act: f64 = coefs.iter().map(|&(c, a)| a * if c < nb { bpt[c] } else { pt[c - nb] }).sum();
        p.add_row(format!("r{i}"), coefs, Sense::Le, act + rng.gen_range(0.0..4.0));
    }
    p
}

/// Optimum over every 0/1 assignment of the binaries, one LP each.
pub fn enumerate_binaries(p: &StandardFormProgram) -> f64 {
    let bins: Vec<usize> = (0..p.num_vars()).filter(|&j| p.binary[j]).collect();
    (0u32..(1 << bins.len()))
        .into_par_iter()
        .map(|mask| {
            let mut q = p.relaxed();
            for (k, &j) in bins.iter().enumerate() {
                let v = (mask >> k & 1) as f64;
                q.lower[j] = v;
                q.upper[j] = v;
            }
            let s = solve_lp(&q, &simplex()).unwrap();
            if s.status == Status::Optimal {
                s.objective
            } else {
                f64::INFINITY
            }
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Test system with `segments` segments per hydrogen curve.
pub fn spec_with_segments(segments: usize) -> MicrogridSpec {
    let cs = CurveSettings { segments_charge: segments, segments_discharge: segments, ..Default::default() };
    MicrogridSpec::from_curves(cs.curves(EfficiencyModel::E1).unwrap()).unwrap()
}

pub fn hourly(label: &str, load: Vec<f64>, solar: Vec<f64>, wind: Vec<f64>) -> ScenarioSeries {
    let start = NaiveDate::from_ymd_opt(2023, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    ScenarioSeries::hourly(label, start, load, solar, wind).unwrap()
}

/// Random `t`-step scenario. Renewables swing between scarcity and
/// surplus so that both hydrogen directions are attractive somewhere.
pub fn random_scenario(rng: &mut ChaCha8Rng, t: usize) -> ScenarioSeries {
    let load = (0..t).map(|_| rng.gen_range(20.0..100.0)).collect();
    let solar = (0..t).map(|_| if rng.gen_bool(0.5) { rng.gen_range(0.0..100.0) } else { 0.0 }).collect();
    let wind = (0..t).map(|_| rng.gen_range(0.0..60.0)).collect();
    hourly("random", load, solar, wind)
}

/// Small microgrid instance: 2+2 segments, `t` steps, with the initial
/// storage levels drawn at random.
pub fn small_instance(seed: u64, t: usize) -> (MicrogridSpec, ScenarioSeries) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = spec_with_segments(2);
    spec.battery.e0 = rng.gen_range(0.0..spec.battery.e_max);
    spec.hydrogen.e0 = rng.gen_range(0.0..spec.hydrogen.e_max);
    spec.diesel.initial = None;
    let scen = random_scenario(&mut rng, t);
    (spec, scen)
}

pub fn exact_plan_options() -> PlanOptions {
    PlanOptions { mode: PlanMode::Exact, ..Default::default() }
}

/// Optimum over every fixed assignment of hydrogen segments (idle or one
/// segment per direction and step), one LP per leaf.
pub fn leaf_enumeration(spec: &MicrogridSpec, scen: &ScenarioSeries, build: &BuildOptions) -> f64 {
    let t = scen.len();
    let nc = spec.hydrogen.charge_curve.n_segments();
    let nd = spec.hydrogen.discharge_curve.n_segments();
    let per_step: Vec<StepSegments> = (0..=nc)
        .flat_map(|c| (0..=nd).map(move |d| StepSegments::fixed(c.checked_sub(1), d.checked_sub(1))))
        .collect();
    let k = per_step.len();
    let leaves = k.pow(t as u32);
    (0..leaves)
        .into_par_iter()
        .map(|mut code| {
            let segs: Vec<StepSegments> = (0..t)
                .map(|_| {
                    let s = per_step[code % k];
                    code /= k;
                    s
                })
                .collect();
            let opts = BuildOptions { segments: Some(segs), ..build.clone() };
            let hp = build_horizon_program(spec, scen, t, &opts).unwrap();
            match solve_lp(&hp.program, &simplex()) {
                Ok(s) if s.status == Status::Optimal => s.objective,
                _ => f64::INFINITY,
            }
        })
        .reduce(|| f64::INFINITY, f64::min)
}

pub fn milp_objective(spec: &MicrogridSpec, scen: &ScenarioSeries, build: &BuildOptions) -> f64 {
    plan(spec, scen, scen.len(), build, &exact_plan_options()).unwrap().objective
}

/// Steps where the fuel cell runs although the battery could have covered
/// a little more of it: the battery is below its power limit and not
/// charging, and its energy stays above the floor (the terminal level at
/// the last step when `terminal`) from that step to the end. Moving a small
/// amount of discharge from hydrogen to the battery there would be feasible
/// and cheaper whenever `c_b < c_h`.
pub fn priority_violations(spec: &MicrogridSpec, traj: &[DispatchDecision], terminal: bool, tol: f64) -> Vec<usize> {
    let b = &spec.battery;
    let n = traj.len();
    let mut spare = vec![0.0; n];
    let mut run = f64::INFINITY;
    for t in (0..n).rev() {
        let floor = if terminal && t == n - 1 { b.e_min.max(b.e0) } else { b.e_min };
        run = run.min(traj[t].e_b - floor);
        spare[t] = run;
    }
    (0..n)
        .filter(|&t| {
            let d = &traj[t];
            d.p_h_d > tol && d.p_b_d < b.p_max - tol && d.p_b_c <= tol && spare[t] > tol
        })
        .collect()
}

/// Exact minimizer of the clipped objective in one dimension: the objective
/// is quadratic between the roots of the constraints, so each piece is
/// minimized in closed form.
#[allow(clippy::too_many_arguments)]
pub fn clipped_min_1d(x_prev: f64, grad: f64, q: &[f64], g: &[(f64, f64)], lo: f64, hi: f64, alpha: f64, beta: f64) -> f64 {
    let f = |x: f64| {
        let pen: f64 = q.iter().zip(g).map(|(q, (a, c))| q * (a * x + c).max(0.0)).sum();
        alpha * grad * x + alpha * beta * pen + (x - x_prev) * (x - x_prev)
    };
    let mut cuts = vec![lo, hi];
    cuts.extend(g.iter().filter(|(a, _)| *a != 0.0).map(|(a, c)| -c / a).filter(|r| *r > lo && *r < hi));
    cuts.sort_by(f64::total_cmp);
    let mut best = f64::INFINITY;
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let slope: f64 = q.iter().zip(g).filter(|(_, (a, c))| a * mid + c > 0.0).map(|(q, (a, _))| q * a).sum();
        let x = (x_prev - 0.5 * (alpha * grad + alpha * beta * slope)).clamp(w[0], w[1]);
        best = best.min(f(x)).min(f(w[0])).min(f(w[1]));
    }
    best
}
