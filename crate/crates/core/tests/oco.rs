mod common;

use common::clipped_min_1d;
use h2grid::milp::SolveOptions;
use h2grid::oco::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn affine(coefs: Vec<(usize, f64)>, constant: f64) -> Affine {
    Affine { coefs, constant }
}

#[test]
fn initial_weights_sum_to_one() {
    for m in 1..=16 {
        let w = initial_weights(m);
        assert_eq!(w.len(), m);
        assert!(w.iter().all(|v| *v > 0.0));
        let s: f64 = w.iter().sum();
        assert_eq!(s, 1.0, "M = {m}");
    }
}

#[test]
fn queues_never_decrease() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut q = vec![0.0; 5];
    for _ in 0..10_000 {
        let g: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let beta = rng.gen_range(0.01..5.0);
        let next = update_virtual_queue(&q, &g, beta);
        for k in 0..5 {
            assert!(next[k] >= q[k]);
            assert!((next[k] - q[k] - beta * g[k].max(0.0)).abs() <= 1e-12 * (1.0 + q[k]));
        }
        q = next;
    }
}

#[test]
fn slack_qp_matches_clipped_objective_in_one_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let opts = SolveOptions::default();
    for case in 0..100 {
        let (lo, hi) = (rng.gen_range(-2.0..0.0), rng.gen_range(0.5..3.0));
        let x_prev = rng.gen_range(lo..hi);
        let grad = rng.gen_range(-3.0..3.0);
        let k = rng.gen_range(1..=3);
        let g1: Vec<(f64, f64)> = (0..k).map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0))).collect();
        let q: Vec<f64> = (0..k).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..4.0) }).collect();
        let (alpha, beta) = (rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0));
        let g: Vec<Affine> = g1.iter().map(|&(a, c)| affine(vec![(0, a)], c)).collect();
        let set = FeasibleSet::boxed(vec![lo], vec![hi]);
        let x = expert_decision(&[x_prev], &[grad], &q, &g, &set, alpha, beta, &opts).unwrap();
        let got = clipped_objective(&x, &[x_prev], &[grad], &q, &g, alpha, beta);
        let want = clipped_min_1d(x_prev, grad, &q, &g1, lo, hi, alpha, beta);
        assert!((got - want).abs() <= 1e-6, "case {case}: {got} vs {want}");
    }
}

#[test]
fn expert_step_beats_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = SolveOptions::default();
    for _ in 0..30 {
        let n = rng.gen_range(2..=5);
        let x_prev: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let grad: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let g: Vec<Affine> = (0..2).map(|_| affine((0..n).map(|j| (j, rng.gen_range(-1.0..1.0))).collect(), rng.gen_range(-0.5..0.5))).collect();
        let q = vec![rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0)];
        let set = FeasibleSet::boxed(vec![0.0; n], vec![1.0; n]);
        let x = expert_decision(&x_prev, &grad, &q, &g, &set, 0.7, 1.3, &opts).unwrap();
        assert!(set.contains(&x, 1e-9));
        let fx = clipped_objective(&x, &x_prev, &grad, &q, &g, 0.7, 1.3);
        for _ in 0..500 {
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            assert!(fx <= clipped_objective(&y, &x_prev, &grad, &q, &g, 0.7, 1.3) + 1e-7);
        }
    }
}

#[test]
fn regret_grows_sublinearly() {
    let pts = bench_regret(&[256, 512, 1024, 2048, 4096], 4, 11, &OcoConfig::default()).unwrap();
    let x: Vec<f64> = pts.iter().map(|p| p.horizon as f64).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.regret).collect();
    assert!(y.iter().all(|r| *r > 0.0));
    let slope = log_log_slope(&x, &y).unwrap();
    assert!(slope <= 0.95, "slope {slope}");
}

proptest! {
    #[test]
    fn expert_weights_stay_on_simplex(
        rho in prop::collection::vec(0.01f64..1.0, 1..8),
        losses in prop::collection::vec(-50.0f64..50.0, 8),
        gamma in 0.0f64..10.0,
    ) {
        let s: f64 = rho.iter().sum();
        let rho: Vec<f64> = rho.iter().map(|v| v / s).collect();
        let w = update_expert_weights(&rho, &losses[..rho.len()], gamma);
        prop_assert!(w.iter().all(|v| *v >= 0.0 && v.is_finite()));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lower_loss_gains_weight(l1 in -5.0f64..5.0, d in 0.01f64..5.0, gamma in 0.01f64..2.0) {
        let w = update_expert_weights(&[0.5, 0.5], &[l1, l1 + d], gamma);
        prop_assert!(w[0] > w[1]);
    }

    #[test]
    fn aggregate_lies_in_box(
        rho in prop::collection::vec(0.01f64..1.0, 1..6),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s: f64 = rho.iter().sum();
        let rho: Vec<f64> = rho.iter().map(|v| v / s).collect();
        let xs: Vec<Vec<f64>> = rho.iter().map(|_| (0..3).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let a = aggregate_decision(&rho, &xs);
        for j in 0..3 {
            let lo = xs.iter().map(|x| x[j]).fold(f64::INFINITY, f64::min);
            let hi = xs.iter().map(|x| x[j]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(a[j] >= lo - 1e-12 && a[j] <= hi + 1e-12);
        }
    }
}
