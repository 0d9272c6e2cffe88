//! C ABI over `crnmix`.
//!
//! Every fallible call returns a status code and writes its result through
//! an out-pointer. On failure `crn_last_error_message` describes the error
//! on the calling thread. Strings returned through `char **` are owned by
//! the caller and must be released with `crn_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use crnmix::certification::certify;
use crnmix::equilibrium::{find_equilibrium, NewtonOptions, StationaryReport, DEFAULT_BALANCE_TOLERANCE};
use crnmix::kinetics::{self, drift_scan, DriftError, DriftExponent, DriftParams, LyapunovKind};
use crnmix::mixing::{self, emit_curves, estimate_mixing_time, MixingError};
use crnmix::simulation::{irreducibility_probe, transient_distribution, SimulationConfig, SimulationError};
use crnmix::{graph, parse_network, ReactionNetwork};

pub const CRN_OK: i32 = 0;
/// Null pointer, bad length or out-of-range argument.
pub const CRN_ERR_USAGE: i32 = 1;
/// Malformed network text, dimension mismatch or numerical failure.
pub const CRN_ERR_INPUT: i32 = 2;
/// Box too large or explosion budget exceeded.
pub const CRN_ERR_RESOURCE: i32 = 3;
/// `crn_certify_json` succeeded but no class matched.
pub const CRN_NOT_CERTIFIED: i32 = 4;
pub const CRN_ERR_PANIC: i32 = 5;

/// Opaque parsed network.
pub struct CrnNetwork {
    inner: ReactionNetwork,
}

/// Test function for `crn_generator`: receives a state of length `len`.
pub type CrnStateFn = Option<unsafe extern "C" fn(x: *const u32, len: usize, user: *mut c_void) -> f64>;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Fail(i32, String);

impl Fail {
    fn usage(msg: impl Into<String>) -> Self {
        Fail(CRN_ERR_USAGE, msg.into())
    }
    fn input(msg: impl ToString) -> Self {
        Fail(CRN_ERR_INPUT, msg.to_string())
    }
}

impl From<SimulationError> for Fail {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::InvalidConfig(_) => Fail::input(e),
            _ => Fail(CRN_ERR_RESOURCE, e.to_string()),
        }
    }
}

impl From<MixingError> for Fail {
    fn from(e: MixingError) -> Self {
        match e {
            MixingError::Simulation(s) => s.into(),
            other => Fail::input(other),
        }
    }
}

impl From<DriftError> for Fail {
    fn from(e: DriftError) -> Self {
        match e {
            DriftError::BoxTooLarge { .. } => Fail(CRN_ERR_RESOURCE, e.to_string()),
            DriftError::InvalidParameter(_) => Fail::input(e),
        }
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<i32, Fail>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(code)) => {
            set_error("");
            code
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            CRN_ERR_PANIC
        }
    }
}

unsafe fn network<'a>(net: *const CrnNetwork) -> Result<&'a ReactionNetwork, Fail> {
    net.as_ref().map(|n| &n.inner).ok_or_else(|| Fail::usage("null network handle"))
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Fail::usage("null array with nonzero length"));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn state<'a>(net: &ReactionNetwork, ptr: *const u32, len: usize) -> Result<&'a [u32], Fail> {
    if len != net.dim() {
        return Err(Fail::input(format!("state has length {len}, network has {} species", net.dim())));
    }
    slice(ptr, len)
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::usage("null output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail::input("output contains a NUL byte"))?;
    write(out, c.into_raw())
}

/// Parse network text. On success `*out` owns a handle for `crn_network_free`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crn_network_parse(text: *const c_char, out: *mut *mut CrnNetwork) -> i32 {
    guard(|| {
        if text.is_null() {
            return Err(Fail::usage("null text"));
        }
        let text = CStr::from_ptr(text).to_str().map_err(|_| Fail::input("text is not UTF-8"))?;
        let inner = parse_network(text).map_err(Fail::input)?;
        write(out, Box::into_raw(Box::new(CrnNetwork { inner })))?;
        Ok(CRN_OK)
    })
}

/// # Safety
/// `net` must come from `crn_network_parse` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn crn_network_free(net: *mut CrnNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Number of species, or 0 for a null handle.
///
/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn crn_network_species_count(net: *const CrnNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.inner.dim())
}

/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn crn_network_reaction_count(net: *const CrnNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.inner.reactions().len())
}

/// Ergodicity certificate as JSON. Returns `CRN_NOT_CERTIFIED` (with the
/// JSON still written) when no class matches.
///
/// # Safety
/// `net` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crn_certify_json(net: *const CrnNetwork, out: *mut *mut c_char) -> i32 {
    guard(|| {
        let cert = certify(network(net)?);
        write_string(out, cert.to_json())?;
        Ok(if cert.is_certified() { CRN_OK } else { CRN_NOT_CERTIFIED })
    })
}

/// Mass-action intensity of reaction `reaction` at state `x`.
///
/// # Safety
/// `x` must point to `len` values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn crn_intensity(
    net: *const CrnNetwork,
    reaction: usize,
    x: *const u32,
    len: usize,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let n = network(net)?;
        let x = state(n, x, len)?;
        let r = n
            .reactions()
            .get(reaction)
            .ok_or_else(|| Fail::usage(format!("reaction index {reaction} out of range")))?;
        write(out, kinetics::intensity(r, x))?;
        Ok(CRN_OK)
    })
}

/// Generator applied to the caller's function `f` at state `x`.
///
/// # Safety
/// `f` must be safe to call with states of length `len` and `user`.
#[no_mangle]
pub unsafe extern "C" fn crn_generator(
    net: *const CrnNetwork,
    f: CrnStateFn,
    user: *mut c_void,
    x: *const u32,
    len: usize,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let n = network(net)?;
        let x = state(n, x, len)?;
        let f = f.ok_or_else(|| Fail::usage("null callback"))?;
        let value = kinetics::apply_generator(n, |y| f(y.as_ptr(), y.len(), user), x);
        write(out, value)?;
        Ok(CRN_OK)
    })
}

/// `V(x)` for a state of length `len`.
///
/// # Safety
/// `x` must point to `len` values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn crn_lyapunov_v(x: *const u32, len: usize, out: *mut f64) -> i32 {
    guard(|| {
        write(out, kinetics::lyapunov_v(slice(x, len)?))?;
        Ok(CRN_OK)
    })
}

/// Drift scan over `[0, box_radius]^d`. `delta` is 0 or 0.5. With
/// `linear_w` nonzero the scan uses the core conservation vector.
///
/// # Safety
/// `net` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crn_drift_scan_json(
    net: *const CrnNetwork,
    a: f64,
    delta: f64,
    box_radius: u32,
    linear_w: i32,
    out: *mut *mut c_char,
) -> i32 {
    guard(|| {
        let n = network(net)?;
        let exponent =
            DriftExponent::from_delta(delta).ok_or_else(|| Fail::input(format!("delta must be 0 or 0.5, got {delta}")))?;
        let kind = if linear_w != 0 {
            let flows = graph::flow_decomposition(n);
            let core: Vec<_> = flows.core_reactions.iter().map(|&i| n.reactions()[i].clone()).collect();
            let w = graph::find_conservation_vector(n.dim(), &core)
                .ok_or_else(|| Fail::input("core has no positive conservation vector"))?;
            LyapunovKind::linear(&w)
        } else {
            LyapunovKind::LogV
        };
        let report = drift_scan(n, &kind, DriftParams::new(a, exponent, box_radius))?;
        write_string(out, serde_json::to_string_pretty(&report).expect("serializable"))?;
        Ok(CRN_OK)
    })
}

/// Equilibrium from `guess` (all ones when null), complex-balance report
/// and stationary law kind, as JSON.
///
/// # Safety
/// `guess` must be null or point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn crn_stationary_json(
    net: *const CrnNetwork,
    guess: *const f64,
    len: usize,
    out: *mut *mut c_char,
) -> i32 {
    guard(|| {
        let n = network(net)?;
        let guess = if guess.is_null() {
            vec![1.0; n.dim()]
        } else {
            slice(guess, len)?.to_vec()
        };
        let eq = find_equilibrium(n, &guess, NewtonOptions::default()).map_err(Fail::input)?;
        let probe = irreducibility_probe(n, &vec![1; n.dim()], 20);
        let report = StationaryReport::new(n, &eq, DEFAULT_BALANCE_TOLERANCE, probe);
        write_string(out, report.to_json())?;
        Ok(CRN_OK)
    })
}

/// Empirical law at time `t` from `x0` as CSV (species columns, count,
/// frequency).
///
/// # Safety
/// `x0` must point to `len` values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn crn_transient_csv(
    net: *const CrnNetwork,
    x0: *const u32,
    len: usize,
    t: f64,
    seed: u64,
    replicates: u64,
    box_radius: u32,
    out: *mut *mut c_char,
) -> i32 {
    guard(|| {
        let n = network(net)?;
        let x0 = state(n, x0, len)?;
        let d = transient_distribution(n, x0, t, &SimulationConfig::new(seed, replicates), box_radius)?;
        write_string(out, d.to_csv(n))?;
        Ok(CRN_OK)
    })
}

/// TV curve from `x0` along `t_grid` against the reference stationary law,
/// as the long-format curve CSV. `*tau` receives the first grid time with
/// conservative TV at most `epsilon`, or -1 when not reached.
///
/// # Safety
/// Arrays must hold `len` and `grid_len` values; `out` and `tau` must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn crn_mixing_csv(
    net: *const CrnNetwork,
    x0: *const u32,
    len: usize,
    t_grid: *const f64,
    grid_len: usize,
    epsilon: f64,
    seed: u64,
    replicates: u64,
    box_radius: u32,
    out: *mut *mut c_char,
    tau: *mut f64,
) -> i32 {
    guard(|| {
        let n = network(net)?;
        let x0 = state(n, x0, len)?;
        let grid = slice(t_grid, grid_len)?;
        if tau.is_null() {
            return Err(Fail::usage("null tau pointer"));
        }
        let config = SimulationConfig::new(seed, replicates);
        let pi = mixing::reference_stationary(n, x0, box_radius, 100.0, &config)?;
        let est = estimate_mixing_time(n, x0, &pi, epsilon, grid, &config, box_radius)?;
        let found = est.tau.unwrap_or(-1.0);
        let (curve, _) = emit_curves(std::slice::from_ref(&est));
        write_string(out, curve)?;
        write(tau, found)?;
        Ok(CRN_OK)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn crn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn crn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
