use std::ffi::{CStr, CString};
use std::ptr;

use h2grid_ffi::*;

fn last_error() -> String {
    let p = h2grid_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn config_round_trip_and_errors() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(h2grid_config_new(&mut cfg), H2Status::Ok);
        assert!(h2grid_last_error().is_null());
        let mut text = ptr::null_mut();
        assert_eq!(h2grid_config_to_toml(cfg, &mut text), H2Status::Ok);
        let toml = CStr::from_ptr(text).to_owned();
        h2grid_string_free(text);
        let mut again = ptr::null_mut();
        assert_eq!(h2grid_config_from_toml(toml.as_ptr(), &mut again), H2Status::Ok);
        h2grid_config_free(again);

        assert_eq!(h2grid_config_set_tracking(cfg, -1.0, 0.1), H2Status::InvalidArgument);
        assert!(last_error().contains("phi"));
        h2grid_config_free(cfg);

        let bad = CString::new("[prices]\nc_x = 1\n").unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(h2grid_config_from_toml(bad.as_ptr(), &mut out), H2Status::Data);
        assert!(out.is_null());
        assert!(last_error().contains("c_x"));

        assert_eq!(h2grid_config_from_toml(ptr::null(), &mut out), H2Status::NullPointer);
        assert_eq!(h2grid_config_new(ptr::null_mut()), H2Status::NullPointer);
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(h2grid_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn scenario_handles() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(h2grid_scenario_synthetic(7, 3, &mut s), H2Status::Ok);
        assert_eq!(h2grid_scenario_len(s), 72);
        h2grid_scenario_free(s);
        assert_eq!(h2grid_scenario_len(ptr::null()), 0);

        let load = [40.0; 4];
        let zero = [0.0; 4];
        let mut s = ptr::null_mut();
        assert_eq!(h2grid_scenario_from_arrays(load.as_ptr(), zero.as_ptr(), zero.as_ptr(), 4, 2023, &mut s), H2Status::Ok);
        assert_eq!(h2grid_scenario_len(s), 4);
        h2grid_scenario_free(s);

        let neg = [-1.0; 4];
        let mut s = ptr::null_mut();
        assert_eq!(h2grid_scenario_from_arrays(neg.as_ptr(), zero.as_ptr(), zero.as_ptr(), 4, 2023, &mut s), H2Status::Data);
        assert!(s.is_null());

        let missing = CString::new("/nonexistent/scenario.csv").unwrap();
        assert_eq!(h2grid_scenario_from_csv(missing.as_ptr(), 60, &mut s), H2Status::Data);
    }
}

#[test]
fn scenario_from_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    std::fs::write(&path, "timestamp,load_kw,solar_kw,wind_kw\n2023-01-01 00:00,1,0,0\n2023-01-01 00:30,3,0,0\n").unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(h2grid_scenario_from_csv(c.as_ptr(), 60, &mut s), H2Status::Ok);
        assert_eq!(h2grid_scenario_len(s), 1);
        h2grid_scenario_free(s);
    }
}

#[test]
fn compare_two_days() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(h2grid_config_new(&mut cfg), H2Status::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(h2grid_scenario_synthetic(2023, 2, &mut s), H2Status::Ok);
        let methods = CString::new("M1,M3").unwrap();
        let mut r = ptr::null_mut();
        if h2grid_compare(cfg, s, methods.as_ptr(), &mut r) != H2Status::Ok {
            panic!("{}", last_error());
        }
        assert_eq!(h2grid_results_len(r), 3);

        let mut sum = H2Summary::default();
        assert_eq!(h2grid_results_summary(r, 0, &mut sum), H2Status::Ok);
        assert_eq!(sum.method, 0);
        assert!(sum.cost_usd.is_finite() && sum.loss_of_load_mwh >= 0.0);
        assert_eq!(h2grid_results_summary(r, 1, &mut sum), H2Status::Ok);
        assert_eq!(sum.method, 1);
        assert!(sum.rmse_pct.is_finite());
        assert_eq!(h2grid_results_summary(r, 9, &mut sum), H2Status::InvalidArgument);

        let mut n = 0usize;
        assert_eq!(h2grid_results_hydrogen(r, 1, ptr::null_mut(), 0, &mut n), H2Status::InvalidArgument);
        assert_eq!(n, 48);
        let mut buf = vec![0.0; n];
        assert_eq!(h2grid_results_hydrogen(r, 1, buf.as_mut_ptr(), buf.len(), &mut n), H2Status::Ok);
        assert!(buf.iter().all(|&e| e >= 0.0));

        let mut csv = ptr::null_mut();
        assert_eq!(h2grid_results_csv(r, false, &mut csv), H2Status::Ok);
        let text = CStr::from_ptr(csv).to_string_lossy().into_owned();
        h2grid_string_free(csv);
        assert!(text.starts_with("method,cost_usd,dg_mwh,lol_mwh,rmse_pct,step_ms\n"));
        assert_eq!(text.lines().count(), 4);

        let bad = CString::new("M7").unwrap();
        let mut r2 = ptr::null_mut();
        assert_eq!(h2grid_compare(cfg, s, bad.as_ptr(), &mut r2), H2Status::Data);
        assert!(last_error().contains("M7"));

        h2grid_results_free(r);
        h2grid_scenario_free(s);
        h2grid_config_free(cfg);
    }
}

#[test]
fn regret_points() {
    let hs = [128u64, 256];
    let mut out = [H2RegretPoint::default(); 2];
    unsafe {
        assert_eq!(h2grid_bench_regret(hs.as_ptr(), 2, 3, 1, out.as_mut_ptr()), H2Status::Ok);
        assert_eq!(h2grid_bench_regret(hs.as_ptr(), 0, 3, 1, out.as_mut_ptr()), H2Status::InvalidArgument);
    }
    assert_eq!(out[1].horizon, 256);
    assert!(out.iter().all(|p| p.regret.is_finite() && p.path_length >= 0.0));
}

#[test]
fn errors_are_per_thread() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(h2grid_config_from_toml(ptr::null(), &mut out), H2Status::NullPointer);
    }
    let other = std::thread::spawn(|| h2grid_last_error().is_null()).join().unwrap();
    assert!(other);
    assert!(!h2grid_last_error().is_null());
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/h2grid.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for f in exports {
        assert!(header.contains(&format!("{f}(")), "{f} missing from the header");
    }
    assert!(header.contains("typedef struct H2Results H2Results;"));
}
