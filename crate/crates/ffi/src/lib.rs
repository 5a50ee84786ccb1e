//! C ABI over the boost converter workbench.
//!
//! Every entry point returns a [`BoostStatus`]; on failure a message is kept
//! per thread and can be copied out with [`boost_last_error`]. Handles are
//! opaque and must be released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use boost_core::converter::{reward_step, BoostEnv, ConverterParams, EpisodeSpec, InputProfile, ParamSet};
use boost_core::metrics::{step_metrics, MetricsConfig, Trajectory};
use boost_core::nn::{Activation, Mlp};
use boost_core::pi::{pi_step, PiGains, PiState};
use boost_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoostStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoostParamSet {
    Desk = 0,
    Paper = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoostProfile {
    Fixed = 0,
    /// 24 → 26 V input step at 0.5 s.
    Variable = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoostObservation {
    pub v_out: f64,
    pub error: f64,
    pub error_rate: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoostStep {
    pub observation: BoostObservation,
    pub reward: f64,
    pub duty: f64,
    pub i_l: f64,
    pub time: f64,
    pub done: bool,
    pub terminated: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoostReward {
    pub reward: f64,
    pub flag: bool,
    pub terminate: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoostStepMetrics {
    pub rise_time: f64,
    pub settling_time: f64,
    pub overshoot_pct: f64,
    pub undershoot_pct: f64,
    pub steady_state_error: f64,
    pub settled: bool,
}

/// Opaque environment handle.
pub struct BoostEnvHandle(BoostEnv);

/// Opaque network handle.
pub struct BoostMlpHandle(Mlp);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> BoostStatus {
    match err {
        Error::NonFinite(_) | Error::NumericalBlowup { .. } | Error::Diverged(_) => {
            BoostStatus::Numerical
        }
        Error::Io(_) | Error::MissingArtifact(_) | Error::Checkpoint(_) | Error::Json(_) | Error::Csv(_) => {
            BoostStatus::Io
        }
        _ => BoostStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F>(f: F) -> BoostStatus
where
    F: FnOnce() -> Result<(), (BoostStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            BoostStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside boost_ffi".into());
            BoostStatus::Panic
        }
    }
}

fn core<T>(r: boost_core::Result<T>) -> Result<T, (BoostStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (BoostStatus, String) {
    (BoostStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (BoostStatus, String) {
    (BoostStatus::InvalidArgument, msg.into())
}

/// Copies the calling thread's last error message (NUL-terminated, truncated
/// to `len`) into `buf` and returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn boost_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates an environment for `v_ref` with the default limits and horizon.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn boost_env_new(
    params: BoostParamSet,
    v_ref: f64,
    profile: BoostProfile,
    terminate: bool,
    out: *mut *mut BoostEnvHandle,
) -> BoostStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = ConverterParams::from_set(match params {
            BoostParamSet::Desk => ParamSet::Desk,
            BoostParamSet::Paper => ParamSet::Paper,
        });
        let input = match profile {
            BoostProfile::Fixed => InputProfile::fixed(params.v_in_nominal),
            BoostProfile::Variable => InputProfile::variable_input(),
        };
        let spec = EpisodeSpec::new(v_ref, input, &params);
        let mut env = core(BoostEnv::new(params, spec))?;
        if !terminate {
            env = env.without_termination();
        }
        *out = Box::into_raw(Box::new(BoostEnvHandle(env)));
        Ok(())
    })
}

/// # Safety
/// `env` must come from [`boost_env_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn boost_env_free(env: *mut BoostEnvHandle) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// # Safety
/// `env` must be a live handle; `obs` null or writable.
#[no_mangle]
pub unsafe extern "C" fn boost_env_reset(
    env: *mut BoostEnvHandle,
    seed: u64,
    obs: *mut BoostObservation,
) -> BoostStatus {
    guard(|| {
        let env = env.as_mut().ok_or_else(|| null("env"))?;
        let (_, o, _) = env.0.reset(seed);
        if !obs.is_null() {
            *obs = BoostObservation {
                v_out: o.v_out,
                error: o.error,
                error_rate: o.error_rate,
            };
        }
        Ok(())
    })
}

/// Advances one control sample with the given duty.
///
/// # Safety
/// `env` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn boost_env_step(
    env: *mut BoostEnvHandle,
    duty: f64,
    out: *mut BoostStep,
) -> BoostStatus {
    guard(|| {
        let env = env.as_mut().ok_or_else(|| null("env"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = core(env.0.step(duty))?;
        *out = BoostStep {
            observation: BoostObservation {
                v_out: s.observation.v_out,
                error: s.observation.error,
                error_rate: s.observation.error_rate,
            },
            reward: s.reward,
            duty: s.duty,
            i_l: s.state.i_l,
            time: s.time,
            done: s.done,
            terminated: s.terminated,
        };
        Ok(())
    })
}

/// Builds a tanh network with an identity output layer.
///
/// # Safety
/// `sizes` must point to `n_sizes` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn boost_mlp_new(
    sizes: *const usize,
    n_sizes: usize,
    seed: u64,
    out: *mut *mut BoostMlpHandle,
) -> BoostStatus {
    guard(|| {
        if sizes.is_null() {
            return Err(null("sizes"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let sizes = std::slice::from_raw_parts(sizes, n_sizes);
        let net = core(Mlp::new(sizes, Activation::Tanh, Activation::Identity, seed))?;
        *out = Box::into_raw(Box::new(BoostMlpHandle(net)));
        Ok(())
    })
}

/// Loads a network checkpoint (JSON).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn boost_mlp_load(
    path: *const c_char,
    out: *mut *mut BoostMlpHandle,
) -> BoostStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| invalid("path is not UTF-8"))?;
        let net = core(Mlp::load(path))?;
        *out = Box::into_raw(Box::new(BoostMlpHandle(net)));
        Ok(())
    })
}

/// # Safety
/// `net` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn boost_mlp_free(net: *mut BoostMlpHandle) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// # Safety
/// `net` must be a live handle and `n_out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn boost_mlp_dims(
    net: *const BoostMlpHandle,
    n_in: *mut usize,
    n_out: *mut usize,
) -> BoostStatus {
    guard(|| {
        let net = net.as_ref().ok_or_else(|| null("net"))?;
        if !n_in.is_null() {
            *n_in = net.0.input_dim();
        }
        if !n_out.is_null() {
            *n_out = net.0.output_dim();
        }
        Ok(())
    })
}

/// Forward pass; `input`/`output` lengths must match the network widths.
///
/// # Safety
/// `input` must point to `n_in` values and `output` to `n_out` writable values.
#[no_mangle]
pub unsafe extern "C" fn boost_mlp_forward(
    net: *const BoostMlpHandle,
    input: *const f64,
    n_in: usize,
    output: *mut f64,
    n_out: usize,
) -> BoostStatus {
    guard(|| {
        let net = net.as_ref().ok_or_else(|| null("net"))?;
        if input.is_null() {
            return Err(null("input"));
        }
        if output.is_null() {
            return Err(null("output"));
        }
        if n_out != net.0.output_dim() {
            return Err(invalid(format!(
                "output length {n_out}, network produces {}",
                net.0.output_dim()
            )));
        }
        let y = core(net.0.predict(std::slice::from_raw_parts(input, n_in)))?;
        std::slice::from_raw_parts_mut(output, n_out).copy_from_slice(&y);
        Ok(())
    })
}

/// One PI sample with conditional-integration anti-windup; `integral` is
/// read and updated in place.
///
/// # Safety
/// `integral` and `duty` must be writable.
#[no_mangle]
pub unsafe extern "C" fn boost_pi_step(
    kp: f64,
    ki: f64,
    integral: *mut f64,
    error: f64,
    dt: f64,
    duty_min: f64,
    duty_max: f64,
    duty: *mut f64,
) -> BoostStatus {
    guard(|| {
        let integral = integral.as_mut().ok_or_else(|| null("integral"))?;
        let duty = duty.as_mut().ok_or_else(|| null("duty"))?;
        if !(dt > 0.0) || !(duty_min <= duty_max) {
            return Err(invalid("dt must be positive and duty_min <= duty_max"));
        }
        let (d, next) = pi_step(
            &PiGains::new(kp, ki),
            &PiState { integral: *integral },
            error,
            dt,
            duty_min,
            duty_max,
        );
        *integral = next.integral;
        *duty = d;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn boost_reward_step(
    v_out: f64,
    v_ref: f64,
    v_up: f64,
    v_low: f64,
    flag: bool,
    out: *mut BoostReward,
) -> BoostStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = reward_step(v_out, v_ref, v_up, v_low, flag);
        *out = BoostReward {
            reward: r.reward,
            flag: r.flag,
            terminate: r.terminate,
        };
        Ok(())
    })
}

/// Step-response metrics of a uniformly sampled output trace (2 % band).
///
/// # Safety
/// `v_out` must point to `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn boost_step_metrics(
    v_out: *const f64,
    n: usize,
    dt: f64,
    v_ref: f64,
    out: *mut BoostStepMetrics,
) -> BoostStatus {
    guard(|| {
        if v_out.is_null() {
            return Err(null("v_out"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let traj = core(Trajectory::from_outputs(dt, std::slice::from_raw_parts(v_out, n)))?;
        let m = core(step_metrics(&traj, v_ref, &MetricsConfig::default()))?;
        *out = BoostStepMetrics {
            rise_time: m.rise_time,
            settling_time: m.settling_time,
            overshoot_pct: m.overshoot_pct,
            undershoot_pct: m.undershoot_pct,
            steady_state_error: m.steady_state_error,
            settled: m.settled,
        };
        Ok(())
    })
}
