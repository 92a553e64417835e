mod common;

use common::{hourly, random_scenario};
use h2grid::grid::{plan, BuildOptions, Capacities, MicrogridSpec, PlanOptions, ScenarioSeries};
use h2grid::reference::*;
use h2grid::sim::{synthetic_year, SynthConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn caps() -> Capacities {
    Capacities { wind: 60.0, solar: 100.0, load: 100.0 }
}

fn random_library(seed: u64, n: usize, t: usize) -> ScenarioLibrary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ScenarioLibrary::new((0..n).map(|_| random_scenario(&mut rng, t)).collect()).unwrap()
}

#[test]
fn hand_case_weights() {
    let w = kernel_weights(&[1.0, 4.0], 1, 1.0).unwrap();
    let want = (-1f64).exp() / ((-1f64).exp() + (-4f64).exp());
    assert!((w.weights[0] - want).abs() < 1e-12);
    assert!((w.weights[0] - 0.9526).abs() < 5e-5);
    assert!(!w.fallback);
}

#[test]
fn exact_match_takes_all_weight() {
    let lib = random_library(3, 4, 48);
    let observed = lib.scenarios()[2].clone();
    let mut tr = KernelTracker::new(&lib, caps(), 0.05).unwrap();
    let mut last = 0.0;
    for t in 0..48 {
        let w = tr.observe(observed.load[t], observed.solar[t], observed.wind[t]).unwrap();
        assert!(w[2] >= last - 1e-12, "step {t}");
        last = w[2];
    }
    assert!(last > 1.0 - 1e-9, "{last}");
}

#[test]
fn blended_reference_is_a_convex_combination() {
    let lib = random_library(9, 3, 6);
    let spec = MicrogridSpec::test_system().unwrap();
    let refs = generate_offline_references(&lib, &spec, &BuildOptions::default(), &PlanOptions::default()).unwrap();
    let observed = random_scenario(&mut ChaCha8Rng::seed_from_u64(77), 6);
    let recs = track_reference(&lib, &refs, caps(), &observed, 0.2).unwrap();
    assert_eq!(recs.len(), 6);
    for r in &recs {
        let col: Vec<f64> = refs.references.iter().map(|s| s.e_h[r.t]).collect();
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(r.blended >= lo - 1e-9 && r.blended <= hi + 1e-9);
    }
    // no observation before the first step
    assert!(recs[0].weights.iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-15));
}

#[test]
fn offline_references_match_direct_plans() {
    let lib = random_library(21, 2, 5);
    let spec = MicrogridSpec::test_system().unwrap();
    let build = BuildOptions::default();
    let opts = PlanOptions::default();
    let refs = generate_offline_references(&lib, &spec, &build, &opts).unwrap();
    for (s, r) in lib.scenarios().iter().zip(&refs.references) {
        let p = plan(&spec, s, s.len(), &build, &opts).unwrap();
        assert!((p.objective - r.objective.unwrap()).abs() < 1e-9);
        let e_h: Vec<f64> = p.trajectory.iter().map(|d| d.e_h).collect();
        assert_eq!(e_h, r.e_h);
    }
}

#[test]
fn reference_csv_round_trip() {
    let lib = random_library(4, 2, 4);
    let spec = MicrogridSpec::test_system().unwrap();
    let refs = generate_offline_references(&lib, &spec, &BuildOptions::default(), &PlanOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("refs.csv");
    refs.write_csv(&path).unwrap();
    let back = read_reference_csv(&path).unwrap();
    assert_eq!(back.len(), refs.len());
    for (a, b) in back.references.iter().zip(&refs.references) {
        assert_eq!(a.e_h, b.e_h);
        assert_eq!(a.seg_c, b.seg_c);
        assert_eq!(a.seg_d, b.seg_d);
        assert!(a.objective.is_none());
    }
}

#[test]
fn perturbation_keeps_shape_and_signs() {
    let year = synthetic_year(&SynthConfig { days: 200, ..Default::default() }).unwrap();
    let lib = ScenarioLibrary::new(vec![year.clone()]).unwrap();
    for mode in [PerturbMode::R3, PerturbMode::R4, PerturbMode::R5] {
        let p = perturb_scenarios(&lib, mode, (0.05, 0.3), 17).unwrap();
        let s = &p.scenarios()[0];
        assert_eq!(s.len(), year.len());
        assert_eq!(s.dt, year.dt);
        assert_eq!(s.timestamps, year.timestamps);
        assert_eq!(s.load, year.load);
        assert!(s.solar.iter().chain(&s.wind).all(|v| *v >= 0.0));
        let sum = |v: &[f64]| v.iter().sum::<f64>();
        match mode {
            PerturbMode::R3 => assert!(sum(&s.solar) < sum(&year.solar) && sum(&s.wind) > sum(&year.wind)),
            PerturbMode::R4 => assert!(sum(&s.solar) < sum(&year.solar) && sum(&s.wind) < sum(&year.wind)),
            _ => assert!(sum(&s.solar) > sum(&year.solar) && sum(&s.wind) > sum(&year.wind)),
        }
    }
    let a = perturb_scenarios(&lib, PerturbMode::R6, (0.05, 0.3), 17).unwrap();
    let b = perturb_scenarios(&lib, PerturbMode::R6, (0.05, 0.3), 17).unwrap();
    assert_eq!(a.scenarios(), b.scenarios());
}

fn permuted(s: &ScenarioSeries, label: &str) -> ScenarioSeries {
    hourly(label, s.load.clone(), s.solar.clone(), s.wind.clone())
}

proptest! {
    #[test]
    fn kernel_weights_on_simplex(d in prop::collection::vec(0.0f64..1e6, 1..10), t in 1usize..500, sigma in 1e-3f64..10.0) {
        let w = kernel_weights(&d, t, sigma).unwrap().weights;
        prop_assert!(w.iter().all(|v| *v >= 0.0 && *v <= 1.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // the nearest scenario never loses to a farther one
        for i in 0..d.len() {
            for j in 0..d.len() {
                if d[i] < d[j] {
                    prop_assert!(w[i] >= w[j]);
                }
            }
        }
    }

    #[test]
    fn kernel_weights_permute_with_distances(d in prop::collection::vec(0.0f64..50.0, 2..8), shift in 1usize..8, sigma in 0.1f64..5.0) {
        let n = d.len();
        let rot: Vec<f64> = (0..n).map(|i| d[(i + shift) % n]).collect();
        let w = kernel_weights(&d, 3, sigma).unwrap().weights;
        let wr = kernel_weights(&rot, 3, sigma).unwrap().weights;
        for i in 0..n {
            prop_assert!((wr[i] - w[(i + shift) % n]).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_flatten_as_prefix_grows(d in prop::collection::vec(0.0f64..20.0, 2..6), t in 1usize..100) {
        // fixed accumulated distances spread over more steps: the weights move toward uniform
        let w1 = kernel_weights(&d, t, 1.0).unwrap().weights;
        let w2 = kernel_weights(&d, t + 1, 1.0).unwrap().weights;
        let spread = |w: &[f64]| w.iter().copied().fold(f64::NEG_INFINITY, f64::max) - w.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(spread(&w2) <= spread(&w1) + 1e-12);
    }

    #[test]
    fn tracker_is_permutation_equivariant(seed in 0u64..1000) {
        let lib = random_library(seed, 3, 12);
        let observed = random_scenario(&mut ChaCha8Rng::seed_from_u64(seed + 1), 12);
        let s = lib.scenarios();
        let rot = ScenarioLibrary::new(vec![permuted(&s[1], "b"), permuted(&s[2], "c"), permuted(&s[0], "a")]).unwrap();
        let mut a = KernelTracker::new(&lib, caps(), 0.3).unwrap();
        let mut b = KernelTracker::new(&rot, caps(), 0.3).unwrap();
        for t in 0..12 {
            let wa = a.observe(observed.load[t], observed.solar[t], observed.wind[t]).unwrap().to_vec();
            let wb = b.observe(observed.load[t], observed.solar[t], observed.wind[t]).unwrap().to_vec();
            for i in 0..3 {
                prop_assert!((wb[i] - wa[(i + 1) % 3]).abs() < 1e-12);
            }
        }
    }
}
