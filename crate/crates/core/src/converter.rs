//! Averaged boost-converter plant and the episodic control environment built on it.
//!
//! State is `(i_L, v_C)`. The switch-closed and switch-open linear systems are
//! blended by the duty ratio into one averaged system, which is integrated with
//! classical RK4 while the duty and input voltage are held over each sample.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Trajectory, TrajectorySample};

/// Upper bound applied to `1 / |e|` rewards (corresponds to |e| = 1 mV).
pub const REWARD_CAP: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamSet {
    /// Component values exactly as tabulated (C = 400 mF).
    Paper,
    /// Same values with C = 400 µF, giving sub-second dynamics.
    #[default]
    Desk,
}

impl std::fmt::Display for ParamSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ParamSet::Paper => "paper",
            ParamSet::Desk => "desk",
        })
    }
}

impl std::str::FromStr for ParamSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(ParamSet::Paper),
            "desk" => Ok(ParamSet::Desk),
            other => Err(Error::Config(format!("unknown parameter set `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConverterParams {
    pub v_in_nominal: f64,
    pub resistance: f64,
    pub inductance: f64,
    pub capacitance: f64,
    pub duty_min: f64,
    pub duty_max: f64,
    /// Integration and control sample step, seconds.
    pub dt: f64,
}

impl ConverterParams {
    pub fn paper() -> Self {
        Self {
            v_in_nominal: 24.0,
            resistance: 50.0,
            inductance: 10e-6,
            capacitance: 400e-3,
            duty_min: 0.05,
            duty_max: 0.95,
            dt: 2e-4,
        }
    }

    pub fn desk() -> Self {
        Self {
            capacitance: 400e-6,
            ..Self::paper()
        }
    }

    pub fn from_set(set: ParamSet) -> Self {
        match set {
            ParamSet::Paper => Self::paper(),
            ParamSet::Desk => Self::desk(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("R", self.resistance),
            ("L", self.inductance),
            ("C", self.capacitance),
            ("dt", self.dt),
            ("v_in", self.v_in_nominal),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0 <= self.duty_min && self.duty_min < self.duty_max && self.duty_max < 1.0) {
            return Err(Error::Config(format!(
                "duty bounds must satisfy 0 <= min < max < 1, got [{}, {}]",
                self.duty_min, self.duty_max
            )));
        }
        Ok(())
    }

    pub fn clamp_duty(&self, duty: f64) -> f64 {
        if duty.is_nan() {
            return self.duty_min;
        }
        duty.clamp(self.duty_min, self.duty_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConverterState {
    pub i_l: f64,
    pub v_c: f64,
}

impl ConverterState {
    pub fn is_finite(&self) -> bool {
        self.i_l.is_finite() && self.v_c.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub di_l: f64,
    pub dv_c: f64,
}

/// `ẋ = A x + B u` for one switch configuration, with `u = v_in`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSystem {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
}

impl LinearSystem {
    fn blend(&self, other: &LinearSystem, weight: f64) -> LinearSystem {
        let mut out = *self;
        for r in 0..2 {
            for c in 0..2 {
                out.a[r][c] = weight * self.a[r][c] + (1.0 - weight) * other.a[r][c];
            }
            out.b[r] = weight * self.b[r] + (1.0 - weight) * other.b[r];
        }
        out
    }

    fn eval(&self, x: [f64; 2], u: f64) -> [f64; 2] {
        [
            self.a[0][0] * x[0] + self.a[0][1] * x[1] + self.b[0] * u,
            self.a[1][0] * x[0] + self.a[1][1] * x[1] + self.b[1] * u,
        ]
    }
}

/// Switch closed: `L di/dt = v_in`, `C dv/dt = −v/R`.
pub fn closed_mode(params: &ConverterParams) -> LinearSystem {
    let rc = params.resistance * params.capacitance;
    LinearSystem {
        a: [[0.0, 0.0], [0.0, -1.0 / rc]],
        b: [1.0 / params.inductance, 0.0],
    }
}

/// Switch open: `L di/dt = v_in − v`, `C dv/dt = i − v/R`.
pub fn open_mode(params: &ConverterParams) -> LinearSystem {
    let rc = params.resistance * params.capacitance;
    LinearSystem {
        a: [
            [0.0, -1.0 / params.inductance],
            [1.0 / params.capacitance, -1.0 / rc],
        ],
        b: [1.0 / params.inductance, 0.0],
    }
}

/// `Ā = A₁ d + A₂ (1 − d)`, `B̄ = B₁ d + B₂ (1 − d)`.
pub fn averaged_system(params: &ConverterParams, duty: f64) -> LinearSystem {
    closed_mode(params).blend(&open_mode(params), duty)
}

pub fn averaged_derivative(
    params: &ConverterParams,
    state: &ConverterState,
    duty: f64,
    v_in: f64,
) -> Result<StateDerivative> {
    if !(0.0..1.0).contains(&duty) {
        return Err(Error::Config(format!("duty must lie in [0, 1), got {duty}")));
    }
    let [di_l, dv_c] = averaged_system(params, duty).eval([state.i_l, state.v_c], v_in);
    Ok(StateDerivative { di_l, dv_c })
}

/// One RK4 step with `duty` and `v_in` held over `dt`; inductor current is
/// clamped at zero afterwards.
pub fn integrate_step(
    params: &ConverterParams,
    state: &ConverterState,
    duty: f64,
    v_in: f64,
    dt: f64,
) -> Result<ConverterState> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    if !(0.0..1.0).contains(&duty) {
        return Err(Error::Config(format!("duty must lie in [0, 1), got {duty}")));
    }
    let sys = averaged_system(params, duty);
    let x = [state.i_l, state.v_c];
    let f = |y: [f64; 2]| sys.eval(y, v_in);
    let shift = |y: [f64; 2], k: [f64; 2], h: f64| [y[0] + h * k[0], y[1] + h * k[1]];
    let k1 = f(x);
    let k2 = f(shift(x, k1, dt / 2.0));
    let k3 = f(shift(x, k2, dt / 2.0));
    let k4 = f(shift(x, k3, dt));
    let next = ConverterState {
        i_l: x[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        v_c: x[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    };
    if !next.is_finite() {
        return Err(Error::NonFinite("converter state".into()));
    }
    Ok(ConverterState {
        i_l: next.i_l.max(0.0),
        ..next
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Fixed,
    Step,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputProfile {
    pub kind: ProfileKind,
    pub v_initial: f64,
    #[serde(default)]
    pub v_final: f64,
    #[serde(default)]
    pub step_time: f64,
}

impl InputProfile {
    pub fn fixed(v: f64) -> Self {
        Self {
            kind: ProfileKind::Fixed,
            v_initial: v,
            v_final: v,
            step_time: 0.0,
        }
    }

    pub fn step(v_initial: f64, v_final: f64, step_time: f64) -> Self {
        Self {
            kind: ProfileKind::Step,
            v_initial,
            v_final,
            step_time,
        }
    }

    /// The 24 V → 26 V step at 0.5 s used for the variable-input runs.
    pub fn variable_input() -> Self {
        Self::step(24.0, 26.0, 0.5)
    }

    pub fn at(&self, t: f64) -> f64 {
        match self.kind {
            ProfileKind::Fixed => self.v_initial,
            ProfileKind::Step if t < self.step_time => self.v_initial,
            ProfileKind::Step => self.v_final,
        }
    }

    pub fn validate(&self, horizon: f64) -> Result<()> {
        let finals_ok = self.kind == ProfileKind::Fixed || self.v_final > 0.0;
        if !(self.v_initial > 0.0 && finals_ok) {
            return Err(Error::Config("input voltages must be positive".into()));
        }
        if self.kind == ProfileKind::Step && !(0.0..=horizon).contains(&self.step_time) {
            return Err(Error::Config(format!(
                "step time {} outside [0, {horizon}]",
                self.step_time
            )));
        }
        Ok(())
    }
}

pub fn input_profile_at(profile: &InputProfile, t: f64) -> f64 {
    profile.at(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub v_ref: f64,
    pub v_up: f64,
    pub v_low: f64,
    /// Error threshold carried for completeness; the reward does not use it.
    pub e_th: f64,
    pub horizon_steps: usize,
    pub input_profile: InputProfile,
}

impl EpisodeSpec {
    /// Limits default to ±20 % of the reference; the horizon defaults to 1 s.
    pub fn new(v_ref: f64, input_profile: InputProfile, params: &ConverterParams) -> Self {
        Self {
            v_ref,
            v_up: 1.2 * v_ref,
            v_low: 0.8 * v_ref,
            e_th: 0.02 * v_ref,
            horizon_steps: (1.0 / params.dt).round() as usize,
            input_profile,
        }
    }

    pub fn validate(&self, params: &ConverterParams) -> Result<()> {
        if !(self.v_low < self.v_ref && self.v_ref < self.v_up) {
            return Err(Error::Config(format!(
                "limits must satisfy v_low < v_ref < v_up, got {} < {} < {}",
                self.v_low, self.v_ref, self.v_up
            )));
        }
        if self.horizon_steps == 0 {
            return Err(Error::Config("horizon_steps must be at least 1".into()));
        }
        self.input_profile
            .validate(self.horizon_steps as f64 * params.dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub v_out: f64,
    /// `v_ref − v_out`
    pub error: f64,
    /// Backward difference of the error, V/s.
    pub error_rate: f64,
}

impl Observation {
    /// Scaled features fed to networks: `(v/v_ref, e/v_ref, e'·dt/v_ref)`.
    pub fn normalized(&self, v_ref: f64, dt: f64) -> [f64; 3] {
        [
            self.v_out / v_ref,
            self.error / v_ref,
            self.error_rate * dt / v_ref,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RewardFlagState {
    pub flag: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardOutcome {
    pub reward: f64,
    pub flag: bool,
    pub terminate: bool,
}

/// Reward and termination rule: −1 and terminate on leaving the limits
/// (the lower limit only counts once the reference has been reached),
/// otherwise `min(1/|e|, REWARD_CAP)`.
pub fn reward_step(v_out: f64, v_ref: f64, v_up: f64, v_low: f64, flag: bool) -> RewardOutcome {
    let flag = flag || v_out >= v_ref;
    let terminate = v_out >= v_up || (v_out <= v_low && flag);
    let reward = if terminate {
        -1.0
    } else {
        (1.0 / (v_ref - v_out).abs()).min(REWARD_CAP)
    };
    RewardOutcome {
        reward,
        flag,
        terminate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    /// True when the episode ended on a limit violation rather than the horizon.
    pub terminated: bool,
    pub duty: f64,
    pub v_in: f64,
    pub state: ConverterState,
    pub time: f64,
}

/// Episodic environment over the averaged plant.
#[derive(Debug, Clone)]
pub struct BoostEnv {
    params: ConverterParams,
    spec: EpisodeSpec,
    state: ConverterState,
    flag: RewardFlagState,
    steps: usize,
    last_error: f64,
    done: bool,
    limits_terminate: bool,
}

impl BoostEnv {
    pub fn new(params: ConverterParams, spec: EpisodeSpec) -> Result<Self> {
        params.validate()?;
        spec.validate(&params)?;
        Ok(Self {
            params,
            spec,
            state: ConverterState::default(),
            flag: RewardFlagState::default(),
            steps: 0,
            last_error: spec.v_ref,
            done: false,
            limits_terminate: true,
        })
    }

    /// Evaluation runs keep going past limit violations.
    pub fn without_termination(mut self) -> Self {
        self.limits_terminate = false;
        self
    }

    pub fn params(&self) -> &ConverterParams {
        &self.params
    }

    pub fn spec(&self) -> &EpisodeSpec {
        &self.spec
    }

    pub fn state(&self) -> ConverterState {
        self.state
    }

    pub fn flag(&self) -> RewardFlagState {
        self.flag
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.params.dt
    }

    /// Input voltage applied over the next step.
    pub fn current_v_in(&self) -> f64 {
        self.spec.input_profile.at(self.time())
    }

    pub fn observation(&self) -> Observation {
        Observation {
            v_out: self.state.v_c,
            error: self.spec.v_ref - self.state.v_c,
            error_rate: if self.steps == 0 {
                0.0
            } else {
                ((self.spec.v_ref - self.state.v_c) - self.last_error) / self.params.dt
            },
        }
    }

    /// The seed is accepted for interface symmetry; the initial state is always at rest.
    pub fn reset(&mut self, _seed: u64) -> (ConverterState, Observation, RewardFlagState) {
        self.state = ConverterState::default();
        self.flag = RewardFlagState::default();
        self.steps = 0;
        self.last_error = self.spec.v_ref;
        self.done = false;
        (self.state, self.observation(), self.flag)
    }

    pub fn step(&mut self, action_duty: f64) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Usage("step called on a finished episode".into()));
        }
        let duty = self.params.clamp_duty(action_duty);
        let v_in = self.current_v_in();
        let prev_error = self.spec.v_ref - self.state.v_c;
        self.state = integrate_step(&self.params, &self.state, duty, v_in, self.params.dt)
            .map_err(|_| Error::NumericalBlowup {
                step: self.steps,
                time: self.time(),
            })?;
        self.last_error = prev_error;
        self.steps += 1;
        let observation = self.observation();
        let outcome = reward_step(
            self.state.v_c,
            self.spec.v_ref,
            self.spec.v_up,
            self.spec.v_low,
            self.flag.flag,
        );
        self.flag.flag = outcome.flag;
        let terminated = self.limits_terminate && outcome.terminate;
        self.done = terminated || self.steps >= self.spec.horizon_steps;
        Ok(StepOutcome {
            observation,
            reward: outcome.reward,
            done: self.done,
            terminated,
            duty,
            v_in,
            state: self.state,
            time: self.time(),
        })
    }
}

/// Writes a trajectory with header `t,v_in,duty,i_L,v_out,e,reward`.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, v_ref: f64, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "v_in", "duty", "i_L", "v_out", "e", "reward"])?;
    for s in traj.samples() {
        w.write_record(&[
            s.t.to_string(),
            s.v_in.to_string(),
            s.duty.to_string(),
            s.i_l.to_string(),
            s.v_out.to_string(),
            (v_ref - s.v_out).to_string(),
            s.reward.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trajectory_csv(traj: &Trajectory, v_ref: f64, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_trajectory_csv(traj, v_ref, std::io::BufWriter::new(file))
}

impl From<&StepOutcome> for TrajectorySample {
    fn from(o: &StepOutcome) -> Self {
        TrajectorySample {
            t: o.time,
            v_in: o.v_in,
            duty: o.duty,
            i_l: o.state.i_l,
            v_out: o.state.v_c,
            reward: o.reward,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hand_params() -> ConverterParams {
        ConverterParams {
            v_in_nominal: 24.0,
            resistance: 50.0,
            inductance: 1e-5,
            capacitance: 0.4,
            duty_min: 0.05,
            duty_max: 0.95,
            dt: 2e-4,
        }
    }

    #[test]
    fn derivative_by_hand() {
        let p = hand_params();
        let d = averaged_derivative(&p, &ConverterState::default(), 0.5, 24.0).unwrap();
        assert_relative_eq!(d.di_l, 2.4e6, max_relative = 1e-12);
        assert_eq!(d.dv_c, 0.0);
    }

    #[test]
    fn closed_mode_limit() {
        let p = hand_params();
        let d = averaged_derivative(&p, &ConverterState::default(), 0.95, 24.0).unwrap();
        assert_relative_eq!(d.di_l, 24.0 / p.inductance, max_relative = 1e-12);
    }

    #[test]
    fn equilibrium_probe_has_zero_derivative() {
        let p = hand_params();
        let s = ConverterState { i_l: 1.92, v_c: 48.0 };
        let d = averaged_derivative(&p, &s, 0.5, 24.0).unwrap();
        assert!(d.di_l.abs() < 1e-9 && d.dv_c.abs() < 1e-12, "{d:?}");
        let next = integrate_step(&p, &s, 0.5, 24.0, p.dt).unwrap();
        assert_relative_eq!(next.i_l, s.i_l, max_relative = 1e-14);
        assert_relative_eq!(next.v_c, s.v_c, max_relative = 1e-14);
    }

    #[test]
    fn averaged_matrices_match_explicit_form() {
        let p = ConverterParams::desk();
        let d = 0.37;
        let s = averaged_system(&p, d);
        assert_relative_eq!(s.a[0][1], -(1.0 - d) / p.inductance, max_relative = 1e-12);
        assert_relative_eq!(s.a[1][0], (1.0 - d) / p.capacitance, max_relative = 1e-12);
        assert_relative_eq!(
            s.a[1][1],
            -1.0 / (p.resistance * p.capacitance),
            max_relative = 1e-12
        );
        assert_eq!(s.a[0][0], 0.0);
        assert_relative_eq!(s.b[0], 1.0 / p.inductance, max_relative = 1e-12);
    }

    #[test]
    fn rejects_out_of_range_duty() {
        let p = hand_params();
        let s = ConverterState::default();
        assert!(averaged_derivative(&p, &s, 1.0, 24.0).is_err());
        assert!(averaged_derivative(&p, &s, -0.1, 24.0).is_err());
        assert!(integrate_step(&p, &s, 0.5, 24.0, 0.0).is_err());
    }

    #[test]
    fn blowup_is_reported() {
        let p = hand_params();
        let s = ConverterState { i_l: f64::MAX, v_c: f64::MAX };
        assert!(integrate_step(&p, &s, 0.5, 24.0, p.dt).is_err());
    }

    #[test]
    fn inductor_current_never_negative() {
        let p = ConverterParams::desk();
        let mut s = ConverterState { i_l: 0.0, v_c: 200.0 };
        for _ in 0..100 {
            s = integrate_step(&p, &s, 0.05, 24.0, p.dt).unwrap();
            assert!(s.i_l >= 0.0);
        }
    }

    #[test]
    fn profiles() {
        assert_eq!(InputProfile::fixed(24.0).at(0.7), 24.0);
        let step = InputProfile::variable_input();
        assert_eq!(input_profile_at(&step, 0.49), 24.0);
        assert_eq!(input_profile_at(&step, 0.5), 26.0);
        let flat = InputProfile::step(24.0, 24.0, 0.3);
        assert!([0.0, 0.29, 0.3, 0.9].iter().all(|&t| flat.at(t) == 24.0));
        assert!(InputProfile::step(24.0, 26.0, 2.0).validate(1.0).is_err());
    }

    #[test]
    fn reward_cases() {
        let r = reward_step(46.0, 48.0, 57.6, 38.4, false);
        assert_eq!((r.reward, r.flag, r.terminate), (0.5, false, false));

        let r = reward_step(58.0, 48.0, 57.6, 38.4, false);
        assert_eq!(r.reward, -1.0);
        assert!(r.terminate);

        let first = reward_step(48.0005, 48.0, 57.6, 38.4, false);
        assert!(first.flag && !first.terminate);
        let second = reward_step(38.0, 48.0, 57.6, 38.4, first.flag);
        assert!(second.terminate);
        assert_eq!(second.reward, -1.0);

        // Below the lower limit before ever reaching the reference is not a violation.
        let early = reward_step(10.0, 48.0, 57.6, 38.4, false);
        assert!(!early.terminate && !early.flag);

        assert_eq!(reward_step(48.0, 48.0, 57.6, 38.4, false).reward, REWARD_CAP);
    }

    fn desk_env(v_ref: f64) -> BoostEnv {
        let p = ConverterParams::desk();
        BoostEnv::new(p, EpisodeSpec::new(v_ref, InputProfile::fixed(24.0), &p)).unwrap()
    }

    #[test]
    fn reset_conditions() {
        let mut env = desk_env(48.0);
        let (s, obs, flag) = env.reset(1);
        assert_eq!(s, ConverterState::default());
        assert_eq!(obs.error, 48.0);
        assert_eq!(obs.error_rate, 0.0);
        assert!(!flag.flag);
        assert_eq!(env.reset(1), env.reset(1));
    }

    #[test]
    fn reset_clears_terminated_episode() {
        let mut env = desk_env(48.0);
        env.reset(0);
        let mut done = false;
        while !done {
            done = env.step(0.95).unwrap().done;
        }
        assert!(env.flag().flag);
        assert!(env.step(0.5).is_err());
        env.reset(0);
        assert_eq!(env.steps(), 0);
        assert!(!env.flag().flag);
        assert!(env.step(0.5).is_ok());
    }

    #[test]
    fn horizon_spans_one_second() {
        let mut env = desk_env(48.0).without_termination();
        env.reset(0);
        let mut last = None;
        for _ in 0..env.spec().horizon_steps {
            last = Some(env.step(0.5).unwrap());
        }
        let last = last.unwrap();
        assert_eq!(env.spec().horizon_steps, 5000);
        assert!(last.done && !last.terminated);
        assert_relative_eq!(last.time, 1.0, max_relative = 1e-12);
        assert_relative_eq!(last.state.v_c, 48.0, max_relative = 1e-3);
    }

    #[test]
    fn error_rate_is_backward_difference() {
        let mut env = desk_env(48.0);
        env.reset(0);
        let a = env.step(0.3).unwrap();
        let b = env.step(0.3).unwrap();
        let expected = (b.observation.error - a.observation.error) / env.params().dt;
        assert_relative_eq!(b.observation.error_rate, expected, max_relative = 1e-12);
    }

    #[test]
    fn action_is_clamped() {
        let mut a = desk_env(48.0).without_termination();
        let mut b = desk_env(48.0).without_termination();
        a.reset(0);
        b.reset(0);
        for _ in 0..200 {
            let x = a.step(5.0).unwrap();
            let y = b.step(0.95).unwrap();
            assert_eq!(x.state, y.state);
            assert_eq!(x.duty, 0.95);
        }
    }
}
