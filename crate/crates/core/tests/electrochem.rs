use h2grid::electrochem::*;
use proptest::prelude::*;

const LHV: f64 = 33.33;

fn efficiency_grid(params: &ElectrolyzerParams, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let f = 0.01 + 0.99 * k as f64 / (n - 1) as f64;
            let p = f * params.p_rated;
            (f, params.efficiency_at_power(p).unwrap())
        })
        .collect()
}

#[test]
fn charging_efficiency_peaks_at_low_load() {
    let p = ElectrolyzerParams::default();
    let g = efficiency_grid(&p, 500);
    let (f_peak, eta_peak) = g.iter().copied().fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    assert!((0.10..=0.35).contains(&f_peak), "peak at {f_peak}");
    assert!(eta_peak < 0.7 && eta_peak > 0.55, "{eta_peak}");
}

#[test]
fn efficiency_from_rate_matches_voltage_formula() {
    let p = ElectrolyzerParams::default();
    for pw in [8.0, 20.0, 49.0] {
        let from_rate = p.production_rate(pw).unwrap() * LHV / pw;
        assert!((from_rate - p.efficiency_at_power(pw).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn four_segment_fits_meet_quality_bar() {
    let el = ElectrolyzerParams::default();
    let fc = FuelCellParams::default();
    let es = sample_electrolyzer(&el, 200).unwrap();
    let fs = sample_fuel_cell(&fc, 200).unwrap();
    let ef = fit_piecewise(&es, 4, el.p_min(), Direction::Charging).unwrap();
    let ff = fit_piecewise(&fs, 4, 0.0, Direction::Discharging).unwrap();
    for r in [&ef, &ff] {
        assert!(r.relative_rmse <= 0.02, "{}", r.relative_rmse);
        assert!(r.curve.continuity_residual() <= 1e-6);
        assert!(r.max_abs_error <= 5.0 * r.rmse + 1e-12);
    }
    assert_eq!(ef.curve.p_min(), el.p_min());
    assert_eq!(ff.curve.p_min(), 0.0);
}

#[test]
fn more_segments_never_fit_worse() {
    let el = ElectrolyzerParams::default();
    let es = sample_electrolyzer(&el, 120).unwrap();
    let mut prev = f64::INFINITY;
    for n in 1..=5 {
        let r = fit_piecewise(&es, n, el.p_min(), Direction::Charging).unwrap();
        assert!(r.rmse <= prev + 1e-15, "n={n}");
        prev = r.rmse;
    }
}

#[test]
fn fitted_charging_efficiency_has_single_peak() {
    let el = ElectrolyzerParams::default();
    let es = sample_electrolyzer(&el, 200).unwrap();
    let c = fit_piecewise(&es, 4, el.p_min(), Direction::Charging).unwrap().curve;
    let n = 2000;
    let eta: Vec<f64> = (0..n)
        .map(|k| {
            let p = c.p_min() + (c.p_max() - c.p_min()) * k as f64 / (n - 1) as f64;
            c.eval(p).unwrap() * LHV / p
        })
        .collect();
    let local_max = (1..n - 1).filter(|&k| eta[k] > eta[k - 1] && eta[k] >= eta[k + 1]).count();
    let edge = usize::from(eta[0] > eta[1]) + usize::from(eta[n - 1] > eta[n - 2]);
    assert_eq!(local_max + edge, 1);
}

#[test]
fn curve_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let el = ElectrolyzerParams::default();
    let fc = FuelCellParams::default();
    let ec = fit_piecewise(&sample_electrolyzer(&el, 60).unwrap(), 3, el.p_min(), Direction::Charging).unwrap().curve;
    let dc = fit_piecewise(&sample_fuel_cell(&fc, 60).unwrap(), 3, 0.0, Direction::Discharging).unwrap().curve;
    let path = dir.path().join("curves.csv");
    write_curve_csv(&path, &[&ec, &dc]).unwrap();
    let back = read_curve_csv(&path).unwrap();
    assert_eq!(back, vec![ec, dc]);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("p_lo,p_hi,slope,intercept,direction\n"));
    let sp = dir.path().join("samples.csv");
    let samples = sample_fuel_cell(&fc, 10).unwrap();
    write_samples_csv(&sp, &samples).unwrap();
    assert_eq!(read_samples_csv(&sp).unwrap(), samples);
}

proptest! {
    #[test]
    fn voltage_increases_with_current(i in 1.0f64..5000.0, di in 0.01f64..100.0) {
        let p = ElectrolyzerParams { d1: 0.0, ..Default::default() };
        let a = electrolyzer_cell_voltage(i, &p).unwrap();
        let b = electrolyzer_cell_voltage(i + di, &p).unwrap();
        prop_assert!(b > a);
    }

    #[test]
    fn faraday_monotone_and_bounded(j in 0.0f64..20000.0, dj in 0.0f64..1000.0) {
        let p = ElectrolyzerParams::default();
        let a = faraday_efficiency(j, p.theta, &p).unwrap();
        let b = faraday_efficiency(j + dj, p.theta, &p).unwrap();
        prop_assert!(b >= a);
        prop_assert!(b <= p.f3 + p.f4 * p.theta + 1e-15);
    }

    #[test]
    fn mass_rate_linear(i in 0.0f64..2000.0, n in 1u32..300, k in 0.0f64..5.0) {
        let a = hydrogen_mass_rate(i, n, 0.9, Direction::Charging).unwrap();
        let b = hydrogen_mass_rate(k * i, n, 0.9, Direction::Charging).unwrap();
        prop_assert!((b - k * a).abs() <= 1e-9 * (1.0 + b.abs()));
        let c = hydrogen_mass_rate(i, 2 * n, 0.9, Direction::Charging).unwrap();
        prop_assert!((c - 2.0 * a).abs() <= 1e-9 * (1.0 + c.abs()));
    }

    #[test]
    fn breakpoint_values_agree(seed in 0u64..500) {
        let pts: Vec<(f64, f64)> = (0..40)
            .map(|k| {
                let x = k as f64;
                (x, (x * 0.1 + (seed as f64) * 1e-3).sin() + 0.05 * x)
            })
            .collect();
        let c = fit_piecewise(&pts, 3, 0.0, Direction::Discharging).unwrap().curve;
        for w in c.segments.windows(2) {
            prop_assert!((w[0].value(w[0].p_hi) - w[1].value(w[1].p_lo)).abs() <= 1e-6);
        }
    }
}
