use std::ffi::{CStr, CString};
use std::ptr;

use superhedge_ffi::*;

const BINOMIAL: &str = r#"{
  "horizon": 1,
  "market": { "kind": "proportional", "assets": 1 },
  "initial_state": [100, 100],
  "support": { "kind": "multiplicative", "factors": [0.8, 1.2] },
  "payoff": { "kind": "cash_settled_call", "asset": 0, "strike": 100 },
  "grid": { "axes": [ { "min": -2, "max": 2, "step": 0.01 } ] }
}"#;

fn load(json: &str) -> Result<*mut ShProblem, ShStatus> {
    let json = CString::new(json).unwrap();
    let mut p = ptr::null_mut();
    let status = unsafe { sh_problem_from_json(json.as_ptr(), ptr::null(), &mut p) };
    if status == ShStatus::Ok {
        Ok(p)
    } else {
        Err(status)
    }
}

fn last_error() -> String {
    let p = sh_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

#[test]
fn solve_and_query() {
    let p = load(BINOMIAL).unwrap();
    unsafe {
        assert_eq!(sh_problem_assets(p), 1);
        let mut sol = ptr::null_mut();
        assert_eq!(sh_solve(p, &mut sol), ShStatus::Ok);
        let mut price = f64::NAN;
        assert_eq!(sh_solution_price(sol, &mut price), ShStatus::Ok);
        assert!((price - 10.0).abs() < 1e-9);

        let v = [0.0];
        let mut g = f64::NAN;
        assert_eq!(sh_solution_gamma(sol, 0, 0, v.as_ptr(), 1, &mut g), ShStatus::Ok);
        assert!((g - price).abs() < 1e-12);

        let outside = [5.0];
        assert_eq!(sh_solution_gamma(sol, 0, 0, outside.as_ptr(), 1, &mut g), ShStatus::InvalidArgument);
        assert_eq!(sh_solution_gamma(sol, 9, 0, v.as_ptr(), 1, &mut g), ShStatus::InvalidArgument);
        sh_solution_free(sol);
        sh_problem_free(p);
    }
}

#[test]
fn cost_matches_quotes() {
    let p = load(BINOMIAL).unwrap();
    unsafe {
        let s = [99.0, 101.0];
        let mut c = 0.0;
        assert_eq!(sh_cost(p, 0, s.as_ptr(), 2, 0.0, [2.0].as_ptr(), 1, &mut c), ShStatus::Ok);
        assert_eq!(c, 202.0);
        assert_eq!(sh_cost(p, 0, s.as_ptr(), 2, 5.0, [-2.0].as_ptr(), 1, &mut c), ShStatus::Ok);
        assert_eq!(c, 5.0 - 198.0);
        assert_ne!(sh_cost(p, 0, s.as_ptr(), 1, 0.0, [1.0].as_ptr(), 1, &mut c), ShStatus::Ok);
        sh_problem_free(p);
    }
}

#[test]
fn arbitrage_report_is_json() {
    let p = load(BINOMIAL).unwrap();
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(sh_check_arbitrage_json(p, &mut s), ShStatus::Ok);
        let text = CStr::from_ptr(s).to_str().unwrap().to_owned();
        sh_string_free(s);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["times"].is_array());
        sh_problem_free(p);
    }
}

#[test]
fn config_errors_map_to_status() {
    let err = load("{").unwrap_err();
    assert_eq!(err, ShStatus::Config);
    assert!(!last_error().is_empty());

    let mut v: serde_json::Value = serde_json::from_str(BINOMIAL).unwrap();
    v.as_object_mut().unwrap().remove("grid");
    assert_eq!(load(&v.to_string()).unwrap_err(), ShStatus::Config);
}

#[test]
fn null_arguments_are_rejected() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(sh_problem_from_json(ptr::null(), ptr::null(), &mut p), ShStatus::InvalidArgument);
        assert!(p.is_null());
        let mut sol = ptr::null_mut();
        assert_eq!(sh_solve(ptr::null(), &mut sol), ShStatus::InvalidArgument);
        assert_eq!(last_error(), "problem or out is null");
        sh_problem_free(ptr::null_mut());
        sh_solution_free(ptr::null_mut());
        sh_string_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = include_str!("../include/superhedge.h");
    for name in [
        "sh_last_error_message",
        "sh_problem_from_json",
        "sh_problem_free",
        "sh_problem_assets",
        "sh_solve",
        "sh_solution_free",
        "sh_solution_price",
        "sh_solution_gamma",
        "sh_check_arbitrage_json",
        "sh_cost",
        "sh_string_free",
        "typedef struct ShProblem ShProblem",
        "SH_STATUS_RADIUS_DEGENERATE = 4",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
