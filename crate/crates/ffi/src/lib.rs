//! C ABI for randamp.
//!
//! Every fallible function returns a [`RandampStatus`] and writes results through out-pointers.
//! On failure the message is kept per thread and can be read with [`randamp_last_error`].
//! Boxes and simulations are opaque handles released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use randamp::bell::{is_no_signaling, standard_bell_value, IidStrategy, NsBox, Outcome, Setting, TABLE_LEN};
use randamp::lp::{build_instance, certification_report, predictability_bound, solve, MicroLp};
use randamp::protocol::bounds::{
    acceptance_threshold, azuma_rejection_bound, completeness_bound, proposition_bound, robustness_threshold,
};
use randamp::protocol::simulate::{estimate_output_bias, Adversary, BiasEstimate, TrialRecord};
use randamp::protocol::ProtocolParams;
use randamp::quantum::{noisy_quantum_box, NoiseSpec};
use randamp::sv::{BiasStrategy, ConstantBias, GreedyTarget, Honest};
use randamp::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RandampStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidBox = 2,
    InvalidParameter = 3,
    Solver = 4,
    CertificationFailed = 5,
    SizeGuard = 6,
    OutOfRange = 7,
    BufferTooSmall = 8,
    Panic = 9,
    Other = 10,
}

/// Santha-Vazirani source behaviour for simulations.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RandampSvKind {
    Honest = 0,
    /// Every bit leans toward 0 by the full ε.
    GreedyZeros = 1,
    /// Every bit has the same bias ε.
    Constant = 2,
}

/// Scalar protocol parameters; per-device use counts are passed separately.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct RandampParams {
    pub epsilon: f64,
    pub delta: f64,
    pub mu: f64,
    pub k: usize,
    pub t: f64,
}

/// Four-party no-signaling box.
pub struct RandampBox(NsBox);

/// Finished batch of simulated protocol runs.
pub struct RandampSimulation {
    estimate: BiasEstimate,
    records: Vec<TrialRecord>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> RandampStatus {
    match err {
        Error::InvalidBox(_) | Error::Unnormalized(_) => RandampStatus::InvalidBox,
        Error::InvalidParameter { .. } | Error::SettingOutsideInequality(_) | Error::Empty(_) => {
            RandampStatus::InvalidParameter
        }
        Error::Solver { .. } => RandampStatus::Solver,
        Error::Certification { .. } => RandampStatus::CertificationFailed,
        Error::SizeGuard(_) => RandampStatus::SizeGuard,
        _ => RandampStatus::Other,
    }
}

/// Runs `f`, converting errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (RandampStatus, String)>) -> RandampStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RandampStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RandampStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (RandampStatus, String)>;
}

impl<T> IntoFfi<T> for randamp::Result<T> {
    fn ffi(self) -> Result<T, (RandampStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn non_null<'a, T>(p: *const T, name: &str) -> Result<&'a T, (RandampStatus, String)> {
    // SAFETY: callers pass either null or a valid pointer they own for the call
    unsafe { p.as_ref() }.ok_or_else(|| (RandampStatus::NullPointer, format!("`{name}` is null")))
}

fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (RandampStatus, String)> {
    // SAFETY: as above, for a writable location
    unsafe { p.as_mut() }.ok_or_else(|| (RandampStatus::NullPointer, format!("`{name}` is null")))
}

fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], (RandampStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, name)?;
    // SAFETY: non-null and the caller promises `len` readable elements
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn table(p: *const f64, len: usize) -> Result<[f64; TABLE_LEN], (RandampStatus, String)> {
    if len != TABLE_LEN {
        return Err((RandampStatus::InvalidBox, format!("table has {len} entries, expected {TABLE_LEN}")));
    }
    let mut t = [0.0; TABLE_LEN];
    t.copy_from_slice(slice(p, len, "table")?);
    Ok(t)
}

fn params_of(p: &RandampParams, n: Vec<u64>) -> ProtocolParams {
    ProtocolParams { epsilon: p.epsilon, delta: p.delta, mu: p.mu, k: p.k, t: p.t, n }
}

fn scalar_params(p: *const RandampParams) -> Result<ProtocolParams, (RandampStatus, String)> {
    let params = params_of(non_null(p, "params")?, Vec::new());
    params.validate_scalars().ffi()?;
    Ok(params)
}

/// Copies the last error message of this thread into `buf` (NUL-terminated, truncated to
/// `len`) and returns the full message length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn randamp_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: caller guarantees `len` bytes at `buf`
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn randamp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a box from 256 probabilities in outcome-major order (`p[x*16 + u]`).
///
/// # Safety
/// `p` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn randamp_box_from_table(
    p: *const f64,
    len: usize,
    out_box: *mut *mut RandampBox,
) -> RandampStatus {
    guard(|| {
        let slot = out(out_box, "out_box")?;
        let b = NsBox::new(table(p, len)?).ffi()?;
        *slot = Box::into_raw(Box::new(RandampBox(b)));
        Ok(())
    })
}

/// The box with every outcome equally likely.
#[no_mangle]
pub extern "C" fn randamp_box_uniform() -> *mut RandampBox {
    Box::into_raw(Box::new(RandampBox(NsBox::uniform())))
}

/// Quantum box from the four-qubit state with white-noise weight `state_mixing` and every
/// basis rotated by `basis_rotation` radians.
///
/// # Safety
/// `out_box` must be writable.
#[no_mangle]
pub unsafe extern "C" fn randamp_box_quantum(
    state_mixing: f64,
    basis_rotation: f64,
    out_box: *mut *mut RandampBox,
) -> RandampStatus {
    guard(|| {
        let slot = out(out_box, "out_box")?;
        let b = noisy_quantum_box(&NoiseSpec { state_mixing, basis_rotation }).ffi()?;
        *slot = Box::into_raw(Box::new(RandampBox(b)));
        Ok(())
    })
}

/// Releases a box. Null is ignored.
///
/// # Safety
/// `b` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn randamp_box_free(b: *mut RandampBox) {
    if !b.is_null() {
        // SAFETY: created by Box::into_raw in this crate
        drop(unsafe { Box::from_raw(b) });
    }
}

/// Value of the Bell functional (0 is the algebraic minimum, 2 the local bound).
///
/// # Safety
/// `b` must be a live box; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn randamp_box_bell_value(b: *const RandampBox, value: *mut f64) -> RandampStatus {
    guard(|| {
        *out(value, "value")? = standard_bell_value(&non_null(b, "box")?.0);
        Ok(())
    })
}

/// `P(x | u)` for 4-bit outcome and setting indices.
///
/// # Safety
/// `b` must be a live box; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn randamp_box_prob(b: *const RandampBox, x: u8, u: u8, value: *mut f64) -> RandampStatus {
    guard(|| {
        let b = non_null(b, "box")?;
        let range = |e: Error| (RandampStatus::OutOfRange, e.to_string());
        let (x, u) = (Outcome::new(x).map_err(range)?, Setting::new(u).map_err(range)?);
        *out(value, "value")? = b.0.prob(x, u);
        Ok(())
    })
}

/// Copies the 256-entry table into `buf`.
///
/// # Safety
/// `b` must be a live box; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn randamp_box_table(b: *const RandampBox, buf: *mut f64, len: usize) -> RandampStatus {
    guard(|| {
        let b = non_null(b, "box")?;
        if len < TABLE_LEN {
            return Err((RandampStatus::BufferTooSmall, format!("need {TABLE_LEN} doubles, got {len}")));
        }
        out(buf, "buf")?;
        // SAFETY: checked non-null and at least TABLE_LEN long
        unsafe { std::ptr::copy_nonoverlapping(b.0.table().as_ptr(), buf, TABLE_LEN) };
        Ok(())
    })
}

/// Whether a raw table is a valid no-signaling distribution within `tol`.
///
/// # Safety
/// `p` must point to `len` doubles; `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn randamp_is_no_signaling(
    p: *const f64,
    len: usize,
    tol: f64,
    result: *mut bool,
) -> RandampStatus {
    guard(|| {
        let slot = out(result, "result")?;
        *slot = is_no_signaling(&table(p, len)?, tol).0;
        Ok(())
    })
}

/// `min((11 + 7δ)/32, 1/2)`.
#[no_mangle]
pub extern "C" fn randamp_predictability_bound(delta: f64) -> f64 {
    predictability_bound(delta)
}

/// Largest `P(maj = guess) − 1/2` over no-signaling boxes with Bell value at most `delta`
/// at the given inequality setting.
///
/// # Safety
/// `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn randamp_lp_max_bias(delta: f64, setting: u8, guess: u8, value: *mut f64) -> RandampStatus {
    guard(|| {
        let slot = out(value, "value")?;
        let u = Setting::new(setting).map_err(|e| (RandampStatus::OutOfRange, e.to_string()))?;
        *slot = solve(&build_instance(u, delta, guess).ffi()?).ffi()?.value;
        Ok(())
    })
}

/// Solves all 16 instances at `delta` with both back-ends and reports the largest optimum
/// and whether it stays below the bound with the back-ends in agreement.
///
/// # Safety
/// Out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn randamp_certify(delta: f64, max_optimum: *mut f64, pass: *mut bool) -> RandampStatus {
    guard(|| {
        let (m, p) = (out(max_optimum, "max_optimum")?, out(pass, "pass")?);
        let r = certification_report(delta, Some(&MicroLp)).ffi()?;
        *m = r.max_optimum;
        *p = r.pass;
        Ok(())
    })
}

/// Threshold on the observed Bell statistic below which the protocol accepts.
///
/// # Safety
/// `params` must be readable; `value` writable.
#[no_mangle]
pub unsafe extern "C" fn randamp_acceptance_threshold(params: *const RandampParams, value: *mut f64) -> RandampStatus {
    guard(|| {
        let p = scalar_params(params)?;
        *out(value, "value")? = acceptance_threshold(&p);
        Ok(())
    })
}

/// Closed-form probability bounds for `params`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct RandampBounds {
    /// Rejection probability lower bound for devices that are not (μ, δ)-good.
    pub soundness: f64,
    /// Acceptance probability lower bound for honest devices under the noise threshold.
    pub completeness: f64,
    /// Largest honest Bell value tolerated.
    pub noise_threshold: f64,
    /// `log₂` of the LP term of the final distance bound.
    pub lp_term_log2: f64,
    pub estimation_term: f64,
    pub definetti_term: f64,
    /// Sum of the three terms; may be infinite.
    pub total: f64,
}

/// # Safety
/// `params` must be readable; `bounds` writable.
#[no_mangle]
pub unsafe extern "C" fn randamp_bounds(params: *const RandampParams, bounds: *mut RandampBounds) -> RandampStatus {
    guard(|| {
        let p = scalar_params(params)?;
        let prop = proposition_bound(&p);
        *out(bounds, "bounds")? = RandampBounds {
            soundness: azuma_rejection_bound(&p),
            completeness: completeness_bound(&p),
            noise_threshold: robustness_threshold(p.epsilon, p.mu, p.delta),
            lp_term_log2: prop.lp_term_log2,
            estimation_term: prop.estimation_term,
            definetti_term: prop.definetti_term,
            total: prop.total,
        };
        Ok(())
    })
}

/// Runs `trials` protocol runs with every device an i.i.d. copy of `device`, fed by the
/// given source. `n` holds `params.k` per-device use counts. Deterministic in `seed`.
///
/// # Safety
/// `params` and `device` must be readable, `n` must hold `params.k` values, `out_sim` writable.
#[no_mangle]
pub unsafe extern "C" fn randamp_simulate(
    params: *const RandampParams,
    n: *const u64,
    device: *const RandampBox,
    sv: RandampSvKind,
    trials: u64,
    seed: u64,
    out_sim: *mut *mut RandampSimulation,
) -> RandampStatus {
    guard(|| {
        let slot = out(out_sim, "out_sim")?;
        let raw = non_null(params, "params")?;
        let params = params_of(raw, slice(n, raw.k, "n")?.to_vec());
        params.validate().ffi()?;
        let device = non_null(device, "device")?.0.clone();
        let strategy: Arc<dyn BiasStrategy> = match sv {
            RandampSvKind::Honest => Arc::new(Honest),
            RandampSvKind::GreedyZeros => Arc::new(GreedyTarget::all_zeros(params.epsilon)),
            RandampSvKind::Constant => Arc::new(ConstantBias(params.epsilon)),
        };
        let adversary = Adversary::single(Arc::new(IidStrategy::new(device)), strategy);
        let (estimate, records) = estimate_output_bias(&params, &adversary, trials, seed).ffi()?;
        *slot = Box::into_raw(Box::new(RandampSimulation { estimate, records }));
        Ok(())
    })
}

/// Summary of a finished simulation. `d` and `d_c` are NaN when no run was accepted.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct RandampSimulationSummary {
    pub trials: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    pub d: f64,
    pub d_c: f64,
    pub d_sigma: f64,
}

/// # Safety
/// `sim` must be live; `summary` writable.
#[no_mangle]
pub unsafe extern "C" fn randamp_simulation_summary(
    sim: *const RandampSimulation,
    summary: *mut RandampSimulationSummary,
) -> RandampStatus {
    guard(|| {
        let e = &non_null(sim, "sim")?.estimate;
        *out(summary, "summary")? = RandampSimulationSummary {
            trials: e.trials,
            accepted: e.accepted,
            acceptance_rate: e.acceptance_rate,
            d: e.distance.as_ref().map_or(f64::NAN, |d| d.d),
            d_c: e.distance.as_ref().map_or(f64::NAN, |d| d.d_c),
            d_sigma: e.d_sigma.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Output of run `trial`: 0 or 1 when accepted, −1 when the run aborted.
///
/// # Safety
/// `sim` must be live; `bit` writable.
#[no_mangle]
pub unsafe extern "C" fn randamp_simulation_output(
    sim: *const RandampSimulation,
    trial: u64,
    bit: *mut i8,
) -> RandampStatus {
    guard(|| {
        let records = &non_null(sim, "sim")?.records;
        let r = usize::try_from(trial)
            .ok()
            .and_then(|i| records.get(i))
            .ok_or_else(|| (RandampStatus::OutOfRange, format!("trial {trial} of {}", records.len())))?;
        *out(bit, "bit")? = r.output_bit.map_or(-1, |b| b as i8);
        Ok(())
    })
}

/// Releases a simulation. Null is ignored.
///
/// # Safety
/// `sim` must come from [`randamp_simulate`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn randamp_simulation_free(sim: *mut RandampSimulation) {
    if !sim.is_null() {
        // SAFETY: created by Box::into_raw in this crate
        drop(unsafe { Box::from_raw(sim) });
    }
}
