//! C ABI for the `superhedge` solver.
//!
//! Problems and solutions are opaque handles created and destroyed through
//! this interface. Every fallible call returns an [`ShStatus`]; on failure the
//! message is available from [`sh_last_error_message`] on the same thread.
//! Strings returned by the library must be released with [`sh_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use superhedge::arbitrage::check_arbitrage;
use superhedge::cli::exit_code;
use superhedge::config::RunConfig;
use superhedge::dpp::{HedgingProblem, SolveOutput};
use superhedge::market::{MarketState, Position};
use superhedge::payoff::Payoff;
use superhedge::Error;

/// Status codes; the nonzero values match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShStatus {
    Ok = 0,
    InvalidArgument = 1,
    Config = 2,
    NotHedgeable = 3,
    RadiusDegenerate = 4,
    Internal = 5,
}

/// A market, scenario lattice, grid and claim loaded from a configuration.
pub struct ShProblem {
    problem: HedgingProblem,
    payoff: Payoff,
}

/// The value layers and policy of a solved problem.
pub struct ShSolution {
    output: SolveOutput,
    grid: superhedge::dpp::PositionGrid,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(e: Error) -> ShStatus {
    let status = match exit_code(&e) {
        2 => ShStatus::Config,
        3 => ShStatus::NotHedgeable,
        4 => ShStatus::RadiusDegenerate,
        _ => ShStatus::Internal,
    };
    set_error(e.to_string());
    status
}

fn invalid(msg: &str) -> ShStatus {
    set_error(msg);
    ShStatus::InvalidArgument
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, ShStatus> {
    if p.is_null() {
        return Err(invalid(&format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(&format!("{name} is not UTF-8")))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sh_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a JSON configuration and builds the problem.
///
/// # Safety
/// `json` must be a NUL-terminated string; `base_dir` is null or a
/// NUL-terminated path used to resolve relative CSV paths; `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sh_problem_from_json(
    json: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut ShProblem,
) -> ShStatus {
    if out.is_null() {
        return invalid("out is null");
    }
    let json = match str_arg(json, "json") {
        Ok(s) => s,
        Err(s) => return s,
    };
    let base = if base_dir.is_null() {
        "."
    } else {
        match str_arg(base_dir, "base_dir") {
            Ok(s) => s,
            Err(s) => return s,
        }
    };
    let built = RunConfig::from_json_str(json, Path::new(base)).and_then(|c| c.build());
    match built {
        Ok((problem, payoff)) => {
            *out = Box::into_raw(Box::new(ShProblem { problem, payoff }));
            ShStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Releases a problem. Null is ignored.
///
/// # Safety
/// `problem` must come from [`sh_problem_from_json`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn sh_problem_free(problem: *mut ShProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Number of risky assets in the problem's market.
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sh_problem_assets(problem: *const ShProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.problem.market().assets())
}

/// Solves the configured claim.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sh_solve(problem: *const ShProblem, out: *mut *mut ShSolution) -> ShStatus {
    let (Some(p), false) = (problem.as_ref(), out.is_null()) else {
        return invalid("problem or out is null");
    };
    match p.problem.solve(&p.payoff) {
        Ok(output) => {
            *out = Box::into_raw(Box::new(ShSolution { output, grid: p.problem.grid().clone() }));
            ShStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Releases a solution. Null is ignored.
///
/// # Safety
/// `solution` must come from [`sh_solve`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn sh_solution_free(solution: *mut ShSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Hedging cost at the root with no initial risky holdings.
///
/// # Safety
/// `solution` must be a live handle and `price` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sh_solution_price(solution: *const ShSolution, price: *mut f64) -> ShStatus {
    let (Some(s), false) = (solution.as_ref(), price.is_null()) else {
        return invalid("solution or price is null");
    };
    *price = s.output.price;
    ShStatus::Ok
}

/// `gamma_t(node, v)` interpolated multilinearly at the risky position `v`
/// (`n` coordinates), which must lie inside the grid box.
///
/// # Safety
/// `solution` must be a live handle, `v` must point to `n` doubles and
/// `value` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sh_solution_gamma(
    solution: *const ShSolution,
    t: usize,
    node: usize,
    v: *const f64,
    n: usize,
    value: *mut f64,
) -> ShStatus {
    let (Some(s), false, false) = (solution.as_ref(), v.is_null(), value.is_null()) else {
        return invalid("null argument");
    };
    let Some(layer) = s.output.layers.get(t) else {
        return invalid("t out of range");
    };
    if node >= layer.nodes {
        return invalid("node out of range");
    }
    if n != s.grid.dim() {
        return invalid("position has the wrong dimension");
    }
    let v = std::slice::from_raw_parts(v, n);
    if !s.grid.contains(v) {
        return invalid("position outside the grid");
    }
    *value = s.grid.interpolate(layer.node_gamma(node), v);
    ShStatus::Ok
}

/// Runs the no-arbitrage checks and returns the report as JSON.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer; the returned
/// string must be released with [`sh_string_free`].
#[no_mangle]
pub unsafe extern "C" fn sh_check_arbitrage_json(problem: *const ShProblem, out: *mut *mut c_char) -> ShStatus {
    let (Some(p), false) = (problem.as_ref(), out.is_null()) else {
        return invalid("problem or out is null");
    };
    match check_arbitrage(&p.problem) {
        Ok(report) => {
            let text = serde_json::to_string(&report).expect("report serializes");
            *out = CString::new(text).expect("JSON has no NUL").into_raw();
            ShStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// `C_t(s, z)` in the problem's market, with `z = (cash, risky[0..n])`.
///
/// # Safety
/// `state` must point to `state_len` doubles, `risky` to `n` doubles and
/// `value` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sh_cost(
    problem: *const ShProblem,
    t: usize,
    state: *const f64,
    state_len: usize,
    cash: f64,
    risky: *const f64,
    n: usize,
    value: *mut f64,
) -> ShStatus {
    let (Some(p), false, false, false) = (problem.as_ref(), state.is_null(), risky.is_null(), value.is_null()) else {
        return invalid("null argument");
    };
    let s = MarketState::new(std::slice::from_raw_parts(state, state_len).to_vec());
    let z = Position::new(cash, std::slice::from_raw_parts(risky, n).to_vec());
    match p.problem.market().cost(t, &s, &z) {
        Ok(c) => {
            *value = c;
            ShStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn sh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
