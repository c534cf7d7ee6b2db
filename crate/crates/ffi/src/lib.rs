//! C ABI for contact-oed.
//!
//! Fallible functions return a [`CoedStatus`]. On failure a message is kept per
//! thread and can be read with [`coed_last_error_message`] until the next call
//! on that thread. Scenarios and runs are opaque handles released with their
//! `_free` functions; passing null to a `_free` function is a no-op.
//!
//! Matrices cross the boundary as row-major `double` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use contact_oed::contact::{ContactModel, ContactParams, ContactState};
use contact_oed::estimation::belief_update;
use contact_oed::fisher::{EngineMode, FisherEngine};
use contact_oed::harness::{run_active_learning, write_run, RunConfig, RunRecord};
use contact_oed::scenarios::{ScenarioKind, ScenarioSpec};
use contact_oed::types::{Bounds, ParamBelief, ParamVector};
use contact_oed::Error;
use nalgebra::{DMatrix, DVector};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoedStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    UnknownScenario = 4,
    /// A covariance or information matrix is not symmetric positive (semi)definite.
    InvalidMatrix = 5,
    /// A rollout diverged or no candidate plan could be scored.
    Diverged = 6,
    Io = 7,
    BufferTooSmall = 8,
    /// A Rust panic was caught at the boundary.
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoedEngine {
    ContactAware = 0,
    Baseline = 1,
}

/// K (N/m), C (N·s/m), μ, R (N·s/m).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoedContactParams {
    pub stiffness: f64,
    pub damping: f64,
    pub friction: f64,
    pub resistance: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoedContactState {
    pub phi_n: f64,
    pub v_n: f64,
    pub v_t: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoedContactForce {
    pub lambda_n: f64,
    pub lambda_t: f64,
}

/// Opaque scenario definition.
pub struct CoedScenario {
    spec: ScenarioSpec,
}

/// Opaque record of a finished active-learning run.
pub struct CoedRun {
    record: RunRecord,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

enum Failure {
    Null(&'static str),
    Argument(String),
    Buffer { needed: usize, given: usize },
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn status(&self) -> CoedStatus {
        match self {
            Failure::Null(_) => CoedStatus::NullPointer,
            Failure::Argument(_) => CoedStatus::InvalidArgument,
            Failure::Buffer { .. } => CoedStatus::BufferTooSmall,
            Failure::Core(e) => match e.kind() {
                "unknown_scenario" => CoedStatus::UnknownScenario,
                "invalid_information_matrix" | "invalid_covariance" => CoedStatus::InvalidMatrix,
                "diverged_rollout" | "planning_failed" => CoedStatus::Diverged,
                "dimension_mismatch" => CoedStatus::InvalidArgument,
                "io" => CoedStatus::Io,
                _ => CoedStatus::InvalidConfig,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Null(what) => format!("{what} is null"),
            Failure::Argument(m) => m.clone(),
            Failure::Buffer { needed, given } => format!("buffer holds {given} values, {needed} needed"),
            Failure::Core(e) => format!("{}: {e}", e.kind()),
        }
    }
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CoedStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CoedStatus::Ok,
        Ok(Err(failure)) => {
            set_error(failure.message());
            failure.status()
        }
        Err(_) => {
            set_error("internal panic".into());
            CoedStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Argument(format!("{what} is not valid UTF-8")))
}

unsafe fn reference<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn output<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn fill(buf: *mut f64, len: usize, values: &[f64]) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(Failure::Null("output buffer"));
    }
    if len < values.len() {
        return Err(Failure::Buffer { needed: values.len(), given: len });
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread, or null if none failed yet.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn coed_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static, nul-terminated name of a status code.
#[no_mangle]
pub extern "C" fn coed_status_name(status: CoedStatus) -> *const c_char {
    let name: &'static CStr = match status {
        CoedStatus::Ok => c"ok",
        CoedStatus::NullPointer => c"null_pointer",
        CoedStatus::InvalidArgument => c"invalid_argument",
        CoedStatus::InvalidConfig => c"invalid_config",
        CoedStatus::UnknownScenario => c"unknown_scenario",
        CoedStatus::InvalidMatrix => c"invalid_matrix",
        CoedStatus::Diverged => c"diverged",
        CoedStatus::Io => c"io",
        CoedStatus::BufferTooSmall => c"buffer_too_small",
        CoedStatus::Panic => c"panic",
    };
    name.as_ptr()
}

#[no_mangle]
pub extern "C" fn coed_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates one of the built-in scenarios: "hefting", "rubbing", "pinching" or "contouring".
///
/// # Safety
/// `name` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn coed_scenario_new(name: *const c_char, out: *mut *mut CoedScenario) -> CoedStatus {
    guard(|| {
        let out = output(out, "out")?;
        let kind: ScenarioKind = text(name, "name")?.parse()?;
        *out = Box::into_raw(Box::new(CoedScenario { spec: contact_oed::scenarios::scenario(kind) }));
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from [`coed_scenario_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn coed_scenario_free(scenario: *mut CoedScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Number of estimated parameters.
///
/// # Safety
/// `scenario` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coed_scenario_param_count(scenario: *const CoedScenario, out: *mut usize) -> CoedStatus {
    guard(|| {
        *output(out, "out")? = reference(scenario, "scenario")?.spec.dim();
        Ok(())
    })
}

/// Ground-truth parameter values θ*.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn coed_scenario_true_params(scenario: *const CoedScenario, buf: *mut f64, len: usize) -> CoedStatus {
    guard(|| fill(buf, len, &reference(scenario, "scenario")?.spec.true_params))
}

/// Moves the prior mode, keeping its covariance and support.
///
/// # Safety
/// `values` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn coed_scenario_set_prior_mode(
    scenario: *mut CoedScenario,
    values: *const f64,
    len: usize,
) -> CoedStatus {
    guard(|| {
        let s = output(scenario, "scenario")?;
        let values = slice(values, len, "values")?;
        if len != s.spec.dim() {
            return Err(Failure::Argument(format!("expected {} values, got {len}", s.spec.dim())));
        }
        s.spec = s.spec.clone().with_prior_mode(values)?;
        Ok(())
    })
}

/// Evaluates the soft contact law.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn coed_contact_force(
    params: *const CoedContactParams,
    state: *const CoedContactState,
    signed_damping: bool,
    out: *mut CoedContactForce,
) -> CoedStatus {
    guard(|| {
        let (p, s) = convert(reference(params, "params")?, reference(state, "state")?)?;
        let model = ContactModel { softplus_sharpness: None, signed_damping };
        let f = model.force(&p, &s);
        *output(out, "out")? = CoedContactForce { lambda_n: f.lambda_n, lambda_t: f.lambda_t };
        Ok(())
    })
}

/// Jacobian of (λ_n, λ_t): `wrt_params` receives 2×4 entries over (K, C, μ, R),
/// `wrt_state` 2×3 entries over (φ_n, v_n, v_t), both row-major. Either may be null.
///
/// # Safety
/// Non-null outputs must hold 8 and 6 doubles respectively.
#[no_mangle]
pub unsafe extern "C" fn coed_contact_force_grad(
    params: *const CoedContactParams,
    state: *const CoedContactState,
    wrt_params: *mut f64,
    wrt_state: *mut f64,
) -> CoedStatus {
    guard(|| {
        let (p, s) = convert(reference(params, "params")?, reference(state, "state")?)?;
        let g = ContactModel::default().force_grad(&p, &s);
        if !wrt_params.is_null() {
            let rows: Vec<f64> = (0..2).flat_map(|r| (0..4).map(move |c| g.wrt_params[(r, c)])).collect();
            fill(wrt_params, 8, &rows)?;
        }
        if !wrt_state.is_null() {
            let rows: Vec<f64> = (0..2).flat_map(|r| (0..3).map(move |c| g.wrt_state[(r, c)])).collect();
            fill(wrt_state, 6, &rows)?;
        }
        Ok(())
    })
}

fn convert(p: &CoedContactParams, s: &CoedContactState) -> Result<(ContactParams, ContactState), Failure> {
    let params = ContactParams::new(p.stiffness, p.damping, p.friction, p.resistance);
    if !params.is_valid() {
        return Err(Failure::Argument("contact parameters must be finite and nonnegative".into()));
    }
    let state = ContactState::new(s.phi_n, s.v_n, s.v_t);
    if !state.is_finite() {
        return Err(Failure::Argument("contact state must be finite".into()));
    }
    Ok((params, state))
}

/// Runs `k_max` rounds of plan, execute, estimate on a copy of `scenario`.
///
/// # Safety
/// `scenario` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coed_run_new(
    scenario: *const CoedScenario,
    seed: u64,
    k_max: usize,
    engine: CoedEngine,
    out: *mut *mut CoedRun,
) -> CoedStatus {
    guard(|| {
        let out = output(out, "out")?;
        let spec = &reference(scenario, "scenario")?.spec;
        let mut cfg = RunConfig::new(spec.name);
        cfg.scenario = spec.clone();
        cfg.seed = seed;
        cfg.k_max = k_max;
        cfg.engine = FisherEngine::with_mode(match engine {
            CoedEngine::ContactAware => EngineMode::ContactAware,
            CoedEngine::Baseline => EngineMode::Baseline,
        });
        *out = Box::into_raw(Box::new(CoedRun { record: run_active_learning(&cfg)? }));
        Ok(())
    })
}

/// Runs from a TOML configuration, applied on top of the defaults of the scenario it names.
///
/// # Safety
/// `config` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coed_run_from_config(config: *const c_char, out: *mut *mut CoedRun) -> CoedStatus {
    guard(|| {
        let out = output(out, "out")?;
        let cfg = RunConfig::from_overrides(None, text(config, "config")?)?;
        *out = Box::into_raw(Box::new(CoedRun { record: run_active_learning(&cfg)? }));
        Ok(())
    })
}

/// # Safety
/// `run` must come from a `coed_run_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn coed_run_free(run: *mut CoedRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of completed experiments; 0 for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coed_run_experiment_count(run: *const CoedRun) -> usize {
    run.as_ref().map_or(0, |r| r.record.experiments.len())
}

unsafe fn experiment<'a>(run: *const CoedRun, k: usize) -> Result<&'a contact_oed::harness::ExperimentRecord, Failure> {
    let r = reference(run, "run")?;
    r.record
        .experiments
        .get(k)
        .ok_or_else(|| Failure::Argument(format!("experiment {k} of {}", r.record.experiments.len())))
}

/// Belief mode after experiment `k`.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn coed_run_theta(run: *const CoedRun, k: usize, buf: *mut f64, len: usize) -> CoedStatus {
    guard(|| fill(buf, len, &experiment(run, k)?.theta_hat))
}

/// trace(Σ) after experiment `k`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coed_run_trace_covariance(run: *const CoedRun, k: usize, out: *mut f64) -> CoedStatus {
    guard(|| {
        *output(out, "out")? = experiment(run, k)?.trace_covariance;
        Ok(())
    })
}

/// trace(F) of experiment `k` at its estimate.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coed_run_trace_information(run: *const CoedRun, k: usize, out: *mut f64) -> CoedStatus {
    guard(|| {
        *output(out, "out")? = experiment(run, k)?.trace_information;
        Ok(())
    })
}

/// Euclidean norm of the final per-parameter percent errors.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coed_run_final_error(run: *const CoedRun, out: *mut f64) -> CoedStatus {
    guard(|| {
        let r = reference(run, "run")?;
        if r.record.experiments.is_empty() {
            return Err(Failure::Argument("run has no experiments".into()));
        }
        *output(out, "out")? = r.record.final_error();
        Ok(())
    })
}

/// Writes config, CSV logs and JSON summaries into `dir`.
///
/// # Safety
/// `dir` must be a nul-terminated path.
#[no_mangle]
pub unsafe extern "C" fn coed_run_write(run: *const CoedRun, dir: *const c_char) -> CoedStatus {
    guard(|| {
        let r = reference(run, "run")?;
        write_run(&r.record, Path::new(text(dir, "dir")?))?;
        Ok(())
    })
}

/// Posterior covariance `(F + Σ⁻¹)⁻¹` for a `dim`×`dim` prior covariance and information matrix.
///
/// # Safety
/// `prior_cov`, `fim` and `out_cov` must each hold `dim * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn coed_belief_update(
    dim: usize,
    prior_cov: *const f64,
    fim: *const f64,
    out_cov: *mut f64,
) -> CoedStatus {
    guard(|| {
        if dim == 0 {
            return Err(Failure::Argument("dim must be positive".into()));
        }
        let n = dim * dim;
        let sigma = DMatrix::from_row_slice(dim, dim, slice(prior_cov, n, "prior_cov")?);
        let f = DMatrix::from_row_slice(dim, dim, slice(fim, n, "fim")?);
        let names = (0..dim).map(|i| format!("theta_{i}")).collect();
        let mode = ParamVector::new(DVector::zeros(dim), names)?;
        let prior = ParamBelief::new(mode, sigma, vec![Bounds::new(-1.0, 1.0); dim])?;
        let post = belief_update(&prior, &f, &DVector::zeros(dim))?;
        let rows: Vec<f64> = (0..dim).flat_map(|r| (0..dim).map(move |c| (r, c))).map(|(r, c)| post.covariance[(r, c)]).collect();
        fill(out_cov, n, &rows)
    })
}
