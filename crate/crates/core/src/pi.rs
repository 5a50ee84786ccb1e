//! Discrete PI controller with conditional-integration anti-windup.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiGains {
    pub kp: f64,
    pub ki: f64,
}

impl PiGains {
    pub const fn new(kp: f64, ki: f64) -> Self {
        Self { kp, ki }
    }

    /// Gains reported for the PSO-tuned controller.
    pub const PSO_REFERENCE: PiGains = PiGains::new(0.002, 0.315);
    /// Gains reported for the GA-tuned controller.
    pub const GA_REFERENCE: PiGains = PiGains::new(0.0021, 0.314);
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PiState {
    pub integral: f64,
}

pub fn pi_reset() -> PiState {
    PiState::default()
}

/// Rectangle-rule integration, `raw = kp·e + ki·∫e`, clamped to the duty range.
/// When the output saturates the integral increment of this step is discarded.
pub fn pi_step(
    gains: &PiGains,
    state: &PiState,
    error: f64,
    dt: f64,
    duty_min: f64,
    duty_max: f64,
) -> (f64, PiState) {
    let integral = state.integral + error * dt;
    let raw = gains.kp * error + gains.ki * integral;
    let duty = raw.clamp(duty_min, duty_max);
    let next = if duty != raw { *state } else { PiState { integral } };
    (duty, next)
}

/// Raw (unclamped) actuation for the given error and accumulated integral.
pub fn pi_actuation(gains: &PiGains, error: f64, integral: f64) -> f64 {
    gains.kp * error + gains.ki * integral
}

#[derive(Debug, Clone)]
pub struct PiController {
    pub gains: PiGains,
    state: PiState,
    duty_min: f64,
    duty_max: f64,
}

impl PiController {
    pub fn new(gains: PiGains, duty_min: f64, duty_max: f64) -> Self {
        Self {
            gains,
            state: pi_reset(),
            duty_min,
            duty_max,
        }
    }

    pub fn reset(&mut self) {
        self.state = pi_reset();
    }

    pub fn state(&self) -> PiState {
        self.state
    }

    pub fn step(&mut self, error: f64, dt: f64) -> f64 {
        let (duty, next) = pi_step(
            &self.gains,
            &self.state,
            error,
            dt,
            self.duty_min,
            self.duty_max,
        );
        self.state = next;
        duty
    }
}
