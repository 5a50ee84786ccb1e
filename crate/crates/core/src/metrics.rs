//! Step-response characteristics and the MAE fitness value.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reported for rise and settling times that were never reached.
pub const NOT_REACHED: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub v_in: f64,
    pub duty: f64,
    pub i_l: f64,
    pub v_out: f64,
    pub reward: f64,
}

/// Uniformly sampled closed-loop record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    dt: f64,
    samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn new(dt: f64, samples: Vec<TrajectorySample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Config("trajectory is empty".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        let tol = 1e-6 * dt;
        for w in samples.windows(2) {
            if ((w[1].t - w[0].t) - dt).abs() > tol {
                return Err(Error::Config(format!(
                    "samples at t = {} and {} are not spaced by dt = {dt}",
                    w[0].t, w[1].t
                )));
            }
        }
        Ok(Self { dt, samples })
    }

    /// Builds a trajectory from output voltages alone, starting at `t = 0`.
    pub fn from_outputs(dt: f64, v_out: &[f64]) -> Result<Self> {
        let samples = v_out
            .iter()
            .enumerate()
            .map(|(k, &v)| TrajectorySample {
                t: k as f64 * dt,
                v_in: 0.0,
                duty: 0.0,
                i_l: 0.0,
                v_out: v,
                reward: 0.0,
            })
            .collect();
        Self::new(dt, samples)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn outputs(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.v_out)
    }

    fn start(&self) -> f64 {
        self.samples[0].t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub settle_band_pct: f64,
    pub rise_lo_pct: f64,
    pub rise_hi_pct: f64,
    /// Length of the trailing window averaged for the steady-state error.
    pub steady_window_s: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            settle_band_pct: 2.0,
            rise_lo_pct: 10.0,
            rise_hi_pct: 90.0,
            steady_window_s: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub rise_time: f64,
    pub settling_time: f64,
    pub overshoot_pct: f64,
    pub undershoot_pct: f64,
    /// Mean of `v_ref − v_out` over the trailing window.
    pub steady_state_error: f64,
    pub settled: bool,
}

/// First time the output reaches `level`, linearly interpolated between samples.
fn first_crossing(traj: &Trajectory, level: f64) -> Option<f64> {
    let s = traj.samples();
    if s[0].v_out >= level {
        return Some(s[0].t);
    }
    s.windows(2).find(|w| w[1].v_out >= level).map(|w| {
        let frac = (level - w[0].v_out) / (w[1].v_out - w[0].v_out);
        w[0].t + frac * (w[1].t - w[0].t)
    })
}

/// Rise time between the `rise_lo_pct` and `rise_hi_pct` crossings of `v_ref`,
/// settling time into the ±`settle_band_pct` band (measured from the first
/// sample), and peak excursions relative to `v_ref`.
pub fn step_metrics(traj: &Trajectory, v_ref: f64, cfg: &MetricsConfig) -> Result<StepMetrics> {
    if traj.is_empty() {
        return Err(Error::Config("trajectory is empty".into()));
    }
    let s = traj.samples();
    let t0 = traj.start();

    let rise_time = match (
        first_crossing(traj, cfg.rise_lo_pct / 100.0 * v_ref),
        first_crossing(traj, cfg.rise_hi_pct / 100.0 * v_ref),
    ) {
        (Some(lo), Some(hi)) => (hi - lo).max(0.0),
        _ => NOT_REACHED,
    };

    let band = cfg.settle_band_pct / 100.0 * v_ref;
    let deviation = |k: usize| (s[k].v_out - v_ref).abs();
    let (settled, settling_time) = match (0..s.len()).rev().find(|&k| deviation(k) > band) {
        None => (true, 0.0),
        Some(k) if k + 1 == s.len() => (false, NOT_REACHED),
        Some(k) => {
            let (d0, d1) = (deviation(k), deviation(k + 1));
            let frac = (d0 - band) / (d0 - d1);
            (true, s[k].t + frac * traj.dt() - t0)
        }
    };

    let peak = s.iter().map(|x| x.v_out).fold(f64::NEG_INFINITY, f64::max);
    let overshoot_pct = ((peak - v_ref) / v_ref * 100.0).max(0.0);

    let undershoot_pct = match s.iter().position(|x| x.v_out >= v_ref) {
        Some(k) => {
            let trough = s[k..].iter().map(|x| x.v_out).fold(f64::INFINITY, f64::min);
            ((v_ref - trough) / v_ref * 100.0).max(0.0)
        }
        None => 0.0,
    };

    let window = ((cfg.steady_window_s / traj.dt()).round() as usize).clamp(1, s.len());
    let steady_state_error =
        s[s.len() - window..].iter().map(|x| v_ref - x.v_out).sum::<f64>() / window as f64;

    Ok(StepMetrics {
        rise_time,
        settling_time,
        overshoot_pct,
        undershoot_pct,
        steady_state_error,
        settled,
    })
}

/// Mean absolute error `mean |v_ref − v_out|` over all samples.
pub fn mae(traj: &Trajectory, v_ref: f64) -> f64 {
    traj.outputs().map(|v| (v_ref - v).abs()).sum::<f64>() / traj.len() as f64
}

/// Mean |e| over the trailing `window_s` seconds.
pub fn tail_mean_abs_error(traj: &Trajectory, v_ref: f64, window_s: f64) -> f64 {
    let s = traj.samples();
    let window = ((window_s / traj.dt()).round() as usize).clamp(1, s.len());
    s[s.len() - window..]
        .iter()
        .map(|x| (v_ref - x.v_out).abs())
        .sum::<f64>()
        / window as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub controller: String,
    pub scenario: String,
    pub v_ref: f64,
    pub rise_s: f64,
    pub settle_s: f64,
    pub overshoot_pct: f64,
    pub undershoot_pct: f64,
    pub mae: f64,
}

/// CSV with header `controller,scenario,v_ref,rise_s,settle_s,overshoot_pct,undershoot_pct,mae`.
pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record([
            "controller",
            "scenario",
            "v_ref",
            "rise_s",
            "settle_s",
            "overshoot_pct",
            "undershoot_pct",
            "mae",
        ])?;
    }
    w.flush()?;
    Ok(())
}
