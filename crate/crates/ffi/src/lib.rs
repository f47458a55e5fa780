//! C ABI for `dpbandit`.
//!
//! Objects are opaque handles created by `dpb_*_new` and released by the
//! matching `dpb_*_free`. Every fallible call returns a [`DpbStatus`]; on
//! failure the message is available from [`dpb_last_error`] on the same
//! thread until the next failing call. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use dpbandit::harness::{self, ExperimentConfig};
use dpbandit::linear::{LinUcb, LinUcbConfig};
use dpbandit::model::RoundContexts;
use dpbandit::privacy::{noise_bound, TreeCounter};
use dpbandit::stats::{max_info_bound, pvalue_correction};
use dpbandit::stochastic::{PrivUcb, Ucb};
use dpbandit::{Error, Policy};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpbStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    SensitivityViolation = 3,
    EmptyCounter = 4,
    ProtocolViolation = 5,
    DimensionMismatch = 6,
    Config = 7,
    Io = 8,
    Internal = 9,
    Panic = 10,
}

/// Private continual counter of a stream of values in [0, 1].
pub struct DpbTreeCounter(TreeCounter);

/// Bandit policy: UCB, private UCB, OFUL or reward-private linear UCB.
pub struct DpbPolicy {
    inner: Box<dyn Policy + Send>,
    dim: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> DpbStatus {
    match e {
        Error::InvalidParameter(_) | Error::UntestableCoordinate { .. } => {
            DpbStatus::InvalidArgument
        }
        Error::SensitivityViolation { .. } => DpbStatus::SensitivityViolation,
        Error::EmptyCounter => DpbStatus::EmptyCounter,
        Error::ProtocolViolation { .. } => DpbStatus::ProtocolViolation,
        Error::DimensionMismatch { .. } | Error::MissingContexts => DpbStatus::DimensionMismatch,
        Error::Config(_) => DpbStatus::Config,
        Error::Io { .. } => DpbStatus::Io,
        Error::Invariant(_) => DpbStatus::Internal,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (DpbStatus, String)>) -> DpbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DpbStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside dpbandit".into());
            DpbStatus::Panic
        }
    }
}

fn lib<T>(r: dpbandit::Result<T>) -> Result<T, (DpbStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (DpbStatus, String) {
    (DpbStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (DpbStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dpb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a counter with privacy budget `eps`; `eps = INFINITY` disables
/// noise.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dpb_counter_new(
    eps: f64,
    seed: u64,
    out: *mut *mut DpbTreeCounter,
) -> DpbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let c = lib(TreeCounter::new(eps, seed))?;
        *out = Box::into_raw(Box::new(DpbTreeCounter(c)));
        Ok(())
    })
}

/// # Safety
/// `counter` must be NULL or a handle from [`dpb_counter_new`] not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn dpb_counter_free(counter: *mut DpbTreeCounter) {
    if !counter.is_null() {
        drop(Box::from_raw(counter));
    }
}

/// Appends `y` in [0, 1].
///
/// # Safety
/// `counter` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dpb_counter_add(counter: *mut DpbTreeCounter, y: f64) -> DpbStatus {
    guard(|| {
        let c = out_ref(counter, "counter")?;
        lib(c.0.add(y))
    })
}

/// Writes the noisy running sum to `out`.
///
/// # Safety
/// `counter` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dpb_counter_release(
    counter: *mut DpbTreeCounter,
    out: *mut f64,
) -> DpbStatus {
    guard(|| {
        let c = out_ref(counter, "counter")?;
        let out = out_ref(out, "out")?;
        *out = lib(c.0.release())?;
        Ok(())
    })
}

/// Number of values added, or 0 for a NULL handle.
///
/// # Safety
/// `counter` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dpb_counter_len(counter: *const DpbTreeCounter) -> u64 {
    counter.as_ref().map_or(0, |c| c.0.len())
}

/// High-probability radius of a counter's noise after `t` values.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpb_noise_bound(
    t: u64,
    eps: f64,
    delta_fail: f64,
    out: *mut f64,
) -> DpbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = lib(noise_bound(t, eps, delta_fail))?;
        Ok(())
    })
}

/// Max-information bound, in bits, of ε-DP gathering over `horizon` rounds.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpb_max_info_bound(
    eps: f64,
    horizon: u64,
    beta: f64,
    out: *mut f64,
) -> DpbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = lib(max_info_bound(eps, horizon, beta))?;
        Ok(())
    })
}

/// `max((alpha - beta) / 2^k, 0)`.
#[no_mangle]
pub extern "C" fn dpb_pvalue_correction(alpha: f64, beta: f64, k: f64) -> f64 {
    pvalue_correction(alpha, beta, k)
}

fn new_policy(
    out: *mut *mut DpbPolicy,
    dim: usize,
    make: impl FnOnce() -> dpbandit::Result<Box<dyn Policy + Send>>,
) -> DpbStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out")? };
        let inner = lib(make())?;
        *out = Box::into_raw(Box::new(DpbPolicy { inner, dim }));
        Ok(())
    })
}

/// UCB1 with confidence parameter `delta`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpb_policy_ucb_new(
    arms: usize,
    delta: f64,
    out: *mut *mut DpbPolicy,
) -> DpbStatus {
    new_policy(out, 0, || Ok(Box::new(Ucb::new(arms, delta)?)))
}

/// Private UCB with total budget `eps` split evenly across arms.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpb_policy_privucb_new(
    arms: usize,
    horizon: usize,
    eps: f64,
    delta: f64,
    seed: u64,
    out: *mut *mut DpbPolicy,
) -> DpbStatus {
    new_policy(out, 0, || {
        Ok(Box::new(PrivUcb::new(arms, horizon, eps, delta, seed)?))
    })
}

/// OFUL when `eps <= 0`, reward-private linear UCB with budget `eps`
/// otherwise.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpb_policy_linucb_new(
    arms: usize,
    dim: usize,
    horizon: usize,
    lambda: f64,
    delta: f64,
    eps: f64,
    seed: u64,
    out: *mut *mut DpbPolicy,
) -> DpbStatus {
    new_policy(out, dim, || {
        let cfg = LinUcbConfig {
            arms,
            dim,
            horizon,
            lambda,
            delta,
            epsilon: (eps > 0.0).then_some(eps),
        };
        Ok(Box::new(LinUcb::new(cfg, seed)?))
    })
}

/// # Safety
/// `policy` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dpb_policy_free(policy: *mut DpbPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Chooses a 0-based arm for 1-based `round`. Linear policies read
/// `arms * dim` context values, arm-major, from `contexts`; other policies
/// ignore it and accept NULL.
///
/// # Safety
/// `policy` must be a live handle, `arm` writable, and `contexts` readable
/// for `arms * dim` doubles when the policy is linear.
#[no_mangle]
pub unsafe extern "C" fn dpb_policy_select(
    policy: *mut DpbPolicy,
    round: usize,
    contexts: *const f64,
    arm: *mut usize,
) -> DpbStatus {
    guard(|| {
        let p = out_ref(policy, "policy")?;
        let arm = out_ref(arm, "arm")?;
        if round == 0 {
            return Err((DpbStatus::InvalidArgument, "rounds are 1-based".into()));
        }
        let ctx = if p.dim > 0 {
            if contexts.is_null() {
                return Err(null("contexts"));
            }
            let data = std::slice::from_raw_parts(contexts, p.inner.arms() * p.dim);
            Some(RoundContexts::new(p.dim, data))
        } else {
            None
        };
        *arm = lib(p.inner.select(round, ctx))?;
        Ok(())
    })
}

/// Feeds back the reward of `arm`; linear policies also read the arm's
/// `dim` context values from `context`.
///
/// # Safety
/// `policy` must be a live handle; `context` must be readable for `dim`
/// doubles when the policy is linear.
#[no_mangle]
pub unsafe extern "C" fn dpb_policy_observe(
    policy: *mut DpbPolicy,
    arm: usize,
    context: *const f64,
    reward: f64,
) -> DpbStatus {
    guard(|| {
        let p = out_ref(policy, "policy")?;
        if arm >= p.inner.arms() {
            return Err((
                DpbStatus::ProtocolViolation,
                format!("arm {arm} out of range for {} arms", p.inner.arms()),
            ));
        }
        let ctx = if p.dim > 0 {
            if context.is_null() {
                return Err(null("context"));
            }
            Some(std::slice::from_raw_parts(context, p.dim))
        } else {
            None
        };
        lib(p.inner.observe(arm, ctx, reward))
    })
}

/// Runs the experiment in the config file at `config_path`, writing outputs
/// to `out_dir` (or the config's `out` when NULL).
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `out_dir` NULL or one.
#[no_mangle]
pub unsafe extern "C" fn dpb_run_experiment(
    config_path: *const c_char,
    out_dir: *const c_char,
) -> DpbStatus {
    guard(|| {
        if config_path.is_null() {
            return Err(null("config_path"));
        }
        let path = PathBuf::from(CStr::from_ptr(config_path).to_string_lossy().into_owned());
        let text = std::fs::read_to_string(&path).map_err(|e| {
            (
                DpbStatus::Io,
                format!("cannot read {}: {e}", path.display()),
            )
        })?;
        let mut cfg = lib(ExperimentConfig::parse_text(&text))?;
        if !out_dir.is_null() {
            cfg.out = PathBuf::from(CStr::from_ptr(out_dir).to_string_lossy().into_owned());
        }
        lib(harness::run_and_write(&cfg)).map(|_| ())
    })
}
