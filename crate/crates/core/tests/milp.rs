#![allow(clippy::needless_range_loop)]

use h2grid::milp::{
    export_mps, import_mps, solve_lp, solve_milp, solve_qp, LpEngine, Sense, SolveOptions, StandardFormProgram, Status,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> StandardFormProgram {
    let mut p = StandardFormProgram::new();
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
    for j in 0..n {
        let lo = if rng.gen_bool(0.2) { -rng.gen_range(0.0..3.0) } else { 0.0 };
        p.add_var(format!("x{j}"), lo, rng.gen_range(5.0..10.0), rng.gen_range(-10.0..10.0));
    }
    for i in 0..m {
        let mut coefs: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.5) {
                coefs.push((j, rng.gen_range(-5.0..5.0)));
            }
        }
        let act: f64 = coefs.iter().map(|&(j, a)| a * x0[j]).sum();
        let sense = match rng.gen_range(0..4) {
            0 => Sense::Ge,
            1 => Sense::Eq,
            _ => Sense::Le,
        };
        let rhs = match sense {
            Sense::Le => act + rng.gen_range(0.0..5.0),
            Sense::Ge => act - rng.gen_range(0.0..5.0),
            Sense::Eq => act,
        };
        p.add_row(format!("r{i}"), coefs, sense, rhs);
    }
    p
}

fn simplex() -> SolveOptions {
    SolveOptions { lp_engine: LpEngine::Simplex, ..Default::default() }
}

fn ipm() -> SolveOptions {
    SolveOptions { lp_engine: LpEngine::InteriorPoint, ..Default::default() }
}

/// Objective of the dual `max bᵀy + Σ l·max(d,0) + Σ u·min(d,0)` with `d = c − Aᵀy`.
fn dual_objective(p: &StandardFormProgram, y: &[f64]) -> f64 {
    let mut d = p.objective.clone();
    let mut v = p.objective_offset;
    for (i, r) in p.rows.iter().enumerate() {
        v += r.rhs * y[i];
        for &(j, a) in &r.coefs {
            d[j] -= a * y[i];
        }
    }
    for j in 0..p.num_vars() {
        if d[j] > 0.0 {
            v += d[j] * p.lower[j];
        } else {
            v += d[j] * p.upper[j];
        }
    }
    v
}

#[test]
fn lp_engines_agree_and_duality_gap_closes() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..60 {
        let n = rng.gen_range(2..15);
        let m = rng.gen_range(1..12);
        let p = random_lp(&mut rng, n, m);
        let a = solve_lp(&p, &simplex()).unwrap();
        let b = solve_lp(&p, &ipm()).unwrap();
        assert_eq!(a.status, Status::Optimal);
        assert_eq!(b.status, Status::Optimal);
        assert!((a.objective - b.objective).abs() <= 1e-6 * (1.0 + a.objective.abs()), "{} {}", a.objective, b.objective);
        assert!(p.max_violation(&a.x) <= 1e-6);
        assert!(p.max_violation(&b.x) <= 1e-6);
        for s in [&a, &b] {
            let dual = dual_objective(&p, s.duals.as_ref().unwrap());
            assert!((s.objective - dual).abs() <= 1e-6 * (1.0 + s.objective.abs()), "primal {} dual {dual}", s.objective);
        }
    }
}

#[test]
fn lp_through_qp_matches_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let p = random_lp(&mut rng, 8, 6);
        let a = solve_lp(&p, &simplex()).unwrap();
        let b = solve_qp(&p, &SolveOptions::default()).unwrap();
        assert!((a.objective - b.objective).abs() <= 1e-6 * (1.0 + a.objective.abs()));
    }
}

fn random_milp(rng: &mut ChaCha8Rng) -> StandardFormProgram {
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
            let rhs_ok = bpt[k] > 0.5 || pt[j] == 0.0;
            if rhs_ok {
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
        let act: f64 = coefs
            .iter()
            .map(|&(c, a)| a * if c < nb { bpt[c] } else { pt[c - nb] })
            .sum();
        p.add_row(format!("r{i}"), coefs, Sense::Le, act + rng.gen_range(0.0..4.0));
    }
    p
}

fn enumerate(p: &StandardFormProgram) -> f64 {
    let bins: Vec<usize> = (0..p.num_vars()).filter(|&j| p.binary[j]).collect();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << bins.len()) {
        let mut q = p.relaxed();
        for (k, &j) in bins.iter().enumerate() {
            let v = (mask >> k & 1) as f64;
            q.lower[j] = v;
            q.upper[j] = v;
        }
        let s = solve_lp(&q, &simplex()).unwrap();
        if s.status == Status::Optimal {
            best = best.min(s.objective);
        }
    }
    best
}

#[test]
fn random_milps_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let p = random_milp(&mut rng);
        let s = solve_milp(&p, &SolveOptions::default()).unwrap();
        let oracle = enumerate(&p);
        assert_eq!(s.status, Status::Optimal, "case {case}");
        assert!((s.objective - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()), "case {case}: {} vs {oracle}", s.objective);
        assert!(p.max_violation(&s.x) <= 1e-6);
        assert!(p.max_fractionality(&s.x) == 0.0);
        assert!(s.incumbent_history.windows(2).all(|w| w[1] <= w[0]));
    }
}

/// Projected gradient on a box-constrained diagonal QP.
fn projected_gradient(q: &[f64], c: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let lmax = q.iter().cloned().fold(1e-3, f64::max);
    let step = 1.0 / lmax;
    let mut x: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
    for _ in 0..20000 {
        for j in 0..x.len() {
            let g = c[j] + q[j] * x[j];
            x[j] = (x[j] - step * g).clamp(lo[j], hi[j]);
        }
    }
    x
}

#[test]
fn random_box_qps_match_projected_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let n = rng.gen_range(1..20);
        let mut p = StandardFormProgram::new();
        let mut q = Vec::new();
        for j in 0..n {
            let lo = rng.gen_range(-5.0..0.0);
            p.add_var(format!("x{j}"), lo, lo + rng.gen_range(0.5..6.0), rng.gen_range(-4.0..4.0));
            let qj = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.1..4.0) };
            q.push(qj);
        }
        for (j, &qj) in q.iter().enumerate() {
            p.add_quadratic(j, qj);
        }
        let s = solve_qp(&p, &SolveOptions::default()).unwrap();
        let x = projected_gradient(&q, &p.objective, &p.lower, &p.upper);
        let oracle = p.evaluate_objective(&x);
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - oracle).abs() <= 1e-5 * (1.0 + oracle.abs()), "{} vs {oracle}", s.objective);
    }
}

#[test]
fn mps_round_trip_random_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let mut p = random_milp(&mut rng);
        p.objective_offset = rng.gen_range(-1.0..1.0);
        let text = export_mps(&p).unwrap();
        assert_eq!(text, export_mps(&p.clone()).unwrap());
        let back = import_mps(&text).unwrap();
        assert_eq!(back.num_vars(), p.num_vars());
        assert_eq!(back.num_rows(), p.num_rows());
        for j in 0..p.num_vars() {
            assert!((back.objective[j] - p.objective[j]).abs() <= 1e-12);
        }
        for (a, b) in back.rows.iter().zip(&p.rows) {
            assert_eq!(a.coefs.len(), b.coefs.len());
            assert!((a.rhs - b.rhs).abs() <= 1e-12);
        }
        let mut sorted = p.clone();
        sorted.rows.iter_mut().for_each(|r| r.coefs.sort_by_key(|c| c.0));
        assert_eq!(back, sorted);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimal_lp_solutions_are_feasible(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_lp(&mut rng, 6, 5);
        let s = solve_lp(&p, &SolveOptions::default()).unwrap();
        prop_assert_eq!(s.status, Status::Optimal);
        prop_assert!(p.max_violation(&s.x) <= 1e-6);
    }

    #[test]
    fn bnb_incumbents_never_increase(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_milp(&mut rng);
        let s = solve_milp(&p, &SolveOptions::default()).unwrap();
        prop_assert!(s.incumbent_history.windows(2).all(|w| w[1] <= w[0]));
    }
}
