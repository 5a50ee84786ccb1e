//! Scenario configuration, closed-loop evaluation and the controller ×
//! scenario experiment grid.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ann::{ann_duty, AnnModel};
use crate::converter::{
    save_trajectory_csv, BoostEnv, ConverterParams, EpisodeSpec, InputProfile, ParamSet,
};
use crate::error::{Error, Result};
use crate::metrics::{
    mae, step_metrics, write_metrics_csv, MetricsConfig, MetricsRow, StepMetrics, Trajectory,
    TrajectorySample,
};
use crate::pi::{PiController, PiGains};
use crate::ppo::{features, AgentCheckpoint, GaussianPolicy};
use crate::tuning::TunerOutput;

pub const REFERENCE_VOLTAGES: [f64; 3] = [48.0, 54.0, 60.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioProfile {
    /// Input held at the nominal voltage.
    Fixed,
    /// 24 → 26 V step at 0.5 s.
    #[serde(alias = "step")]
    Variable,
}

impl ScenarioProfile {
    pub fn id(self) -> &'static str {
        match self {
            ScenarioProfile::Fixed => "fixed",
            ScenarioProfile::Variable => "variable",
        }
    }

    pub fn input_profile(self, params: &ConverterParams) -> InputProfile {
        match self {
            ScenarioProfile::Fixed => InputProfile::fixed(params.v_in_nominal),
            ScenarioProfile::Variable => InputProfile::variable_input(),
        }
    }
}

impl std::str::FromStr for ScenarioProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(ScenarioProfile::Fixed),
            "variable" | "step" => Ok(ScenarioProfile::Variable),
            other => Err(Error::Config(format!("unknown profile {other:?}"))),
        }
    }
}

fn default_v_ref() -> f64 {
    48.0
}

fn default_profile() -> ScenarioProfile {
    ScenarioProfile::Fixed
}

/// JSON scenario description; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub params_set: ParamSet,
    #[serde(default = "default_v_ref")]
    pub v_ref: f64,
    #[serde(default = "default_profile")]
    pub profile: ScenarioProfile,
    #[serde(default)]
    pub horizon_steps: Option<usize>,
    #[serde(default)]
    pub v_up: Option<f64>,
    #[serde(default)]
    pub v_low: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            params_set: ParamSet::default(),
            v_ref: default_v_ref(),
            profile: default_profile(),
            horizon_steps: None,
            v_up: None,
            v_low: None,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn new(params_set: ParamSet, v_ref: f64, profile: ScenarioProfile) -> Self {
        Self {
            params_set,
            v_ref,
            profile,
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.build()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Plant parameters and a validated episode specification.
    pub fn build(&self) -> Result<(ConverterParams, EpisodeSpec)> {
        let params = ConverterParams::from_set(self.params_set);
        let mut spec = EpisodeSpec::new(self.v_ref, self.profile.input_profile(&params), &params);
        if let Some(n) = self.horizon_steps {
            spec.horizon_steps = n;
        }
        if let Some(v) = self.v_up {
            spec.v_up = v;
        }
        if let Some(v) = self.v_low {
            spec.v_low = v;
        }
        spec.validate(&params)?;
        Ok((params, spec))
    }
}

/// Anything that can close the loop around the converter.
#[derive(Debug, Clone)]
pub enum Controller {
    Pi(PiGains),
    Ann(Box<AnnModel>),
    /// Evaluated with the mean action; `trained_v_ref` must match the scenario.
    Ppo {
        policy: Box<GaussianPolicy>,
        trained_v_ref: f64,
    },
    ConstantDuty(f64),
}

impl Controller {
    pub fn from_checkpoint(ckpt: AgentCheckpoint) -> Self {
        Controller::Ppo {
            trained_v_ref: ckpt.header.v_ref,
            policy: Box::new(ckpt.policy),
        }
    }
}

/// Simulates the full horizon with termination disabled.
///
/// Sample `k` holds the state at `t_k = k·dt`, the input voltage at `t_k`, the
/// duty applied over `[t_k, t_k + dt)` and the reward of the step that ended
/// at `t_k`. The final sample repeats the last applied duty.
pub fn run_closed_loop(
    controller: &Controller,
    params: &ConverterParams,
    spec: &EpisodeSpec,
) -> Result<Trajectory> {
    if let Controller::Ppo { trained_v_ref, .. } = controller {
        if (trained_v_ref - spec.v_ref).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "policy was trained for v_ref = {trained_v_ref} V but the scenario asks for {} V",
                spec.v_ref
            )));
        }
    }
    let mut env = BoostEnv::new(*params, *spec)?.without_termination();
    let (_, mut obs, _) = env.reset(0);
    let mut pi = match controller {
        Controller::Pi(g) => Some(PiController::new(*g, params.duty_min, params.duty_max)),
        _ => None,
    };
    let mut samples = Vec::with_capacity(spec.horizon_steps + 1);
    let mut reward = 0.0;
    let mut applied = params.duty_min;
    for _ in 0..spec.horizon_steps {
        let command = match controller {
            Controller::Pi(_) => pi
                .as_mut()
                .expect("PI state exists for PI controller")
                .step(obs.error, params.dt),
            Controller::Ann(model) => ann_duty(
                model,
                env.current_v_in(),
                spec.v_ref,
                params.duty_min,
                params.duty_max,
            ),
            Controller::Ppo { policy, .. } => policy.mean(&features(&env, &obs))?,
            Controller::ConstantDuty(d) => *d,
        };
        applied = params.clamp_duty(command);
        let state = env.state();
        samples.push(TrajectorySample {
            t: env.time(),
            v_in: env.current_v_in(),
            duty: applied,
            i_l: state.i_l,
            v_out: state.v_c,
            reward,
        });
        let out = env.step(command)?;
        reward = out.reward;
        obs = out.observation;
    }
    let state = env.state();
    samples.push(TrajectorySample {
        t: env.time(),
        v_in: env.current_v_in(),
        duty: applied,
        i_l: state.i_l,
        v_out: state.v_c,
        reward,
    });
    Trajectory::new(params.dt, samples)
}

/// Controller identifiers used in reports.
pub const CONTROLLER_IDS: [&str; 4] = ["pi-pso", "pi-ga", "ann", "rl"];

/// Trained or tuned artifacts; a missing one carries the reason instead.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub pi_pso: std::result::Result<PiGains, String>,
    pub pi_ga: std::result::Result<PiGains, String>,
    pub ann: std::result::Result<AnnModel, String>,
    /// PPO agents keyed by the reference voltage they were trained for.
    pub ppo: Vec<(f64, GaussianPolicy)>,
}

impl Default for Artifacts {
    fn default() -> Self {
        Self {
            pi_pso: Err("no PSO gains artifact".into()),
            pi_ga: Err("no GA gains artifact".into()),
            ann: Err("no ANN model artifact".into()),
            ppo: Vec::new(),
        }
    }
}

pub fn pi_artifact_path(dir: &Path, method: &str) -> PathBuf {
    dir.join(format!("pi_{method}.json"))
}

pub fn ann_artifact_path(dir: &Path) -> PathBuf {
    dir.join("ann.json")
}

pub fn ppo_artifact_dir(dir: &Path, v_ref: f64) -> PathBuf {
    dir.join(format!("ppo_{}", format_vref(v_ref)))
}

fn format_vref(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

impl Artifacts {
    /// Loads whatever exists under `dir`; absent files become per-cell failures.
    pub fn load(dir: impl AsRef<Path>, v_refs: &[f64]) -> Self {
        let dir = dir.as_ref();
        let gains = |m: &str| {
            TunerOutput::load(pi_artifact_path(dir, m))
                .map(|t| t.gains())
                .map_err(|e| e.to_string())
        };
        let mut ppo = Vec::new();
        for &v in v_refs {
            match AgentCheckpoint::load(ppo_artifact_dir(dir, v)) {
                Ok(ckpt) => ppo.push((ckpt.header.v_ref, ckpt.policy)),
                Err(e) => log::warn!("PPO agent for {v} V unavailable: {e}"),
            }
        }
        Self {
            pi_pso: gains("pso"),
            pi_ga: gains("ga"),
            ann: AnnModel::load(ann_artifact_path(dir)).map_err(|e| e.to_string()),
            ppo,
        }
    }

    pub fn controller(&self, id: &str, v_ref: f64) -> std::result::Result<Controller, String> {
        match id {
            "pi-pso" => self.pi_pso.clone().map(Controller::Pi),
            "pi-ga" => self.pi_ga.clone().map(Controller::Pi),
            "ann" => self.ann.clone().map(|m| Controller::Ann(Box::new(m))),
            "rl" => self
                .ppo
                .iter()
                .find(|(v, _)| (v - v_ref).abs() < 1e-9)
                .map(|(v, p)| Controller::Ppo {
                    policy: Box::new(p.clone()),
                    trained_v_ref: *v,
                })
                .ok_or_else(|| format!("no PPO checkpoint for {v_ref} V")),
            other => Err(format!("unknown controller {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub params_set: ParamSet,
    pub controllers: Vec<String>,
    pub v_refs: Vec<f64>,
    pub profiles: Vec<ScenarioProfile>,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            params_set: ParamSet::Desk,
            controllers: CONTROLLER_IDS.iter().map(|s| s.to_string()).collect(),
            v_refs: REFERENCE_VOLTAGES.to_vec(),
            profiles: vec![ScenarioProfile::Fixed, ScenarioProfile::Variable],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub controller: String,
    pub scenario: ScenarioProfile,
    pub v_ref: f64,
    pub metrics: Option<StepMetrics>,
    pub mae: Option<f64>,
    /// Why the cell produced no metrics.
    pub error: Option<String>,
}

impl ReportRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub cells: usize,
    pub succeeded: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub params_set: ParamSet,
    pub rows: Vec<ReportRow>,
    pub summary: ReportSummary,
}

impl Report {
    pub fn row(&self, controller: &str, scenario: ScenarioProfile, v_ref: f64) -> Option<&ReportRow> {
        self.rows.iter().find(|r| {
            r.controller == controller && r.scenario == scenario && (r.v_ref - v_ref).abs() < 1e-9
        })
    }

    pub fn metrics(&self, controller: &str, scenario: ScenarioProfile, v_ref: f64) -> Option<&StepMetrics> {
        self.row(controller, scenario, v_ref).and_then(|r| r.metrics.as_ref())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::MissingArtifact(format!("{}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn metrics_rows(&self) -> Vec<MetricsRow> {
        self.rows
            .iter()
            .filter_map(|r| {
                let m = r.metrics.as_ref()?;
                Some(MetricsRow {
                    controller: r.controller.clone(),
                    scenario: r.scenario.id().to_string(),
                    v_ref: r.v_ref,
                    rise_s: m.rise_time,
                    settle_s: m.settling_time,
                    overshoot_pct: m.overshoot_pct,
                    undershoot_pct: m.undershoot_pct,
                    mae: r.mae?,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: Report,
    /// Same order as `report.rows`; `None` for failed cells.
    pub trajectories: Vec<Option<Trajectory>>,
}

/// Evaluates every (controller, v_ref, profile) cell. Cells run in parallel
/// and are reassembled in grid order, so the output does not depend on
/// scheduling.
pub fn run_experiment(grid: &ExperimentGrid, artifacts: &Artifacts) -> ExperimentOutput {
    let params = ConverterParams::from_set(grid.params_set);
    let mut cells = Vec::new();
    for c in &grid.controllers {
        for &p in &grid.profiles {
            for &v in &grid.v_refs {
                cells.push((c.clone(), p, v));
            }
        }
    }
    let results: Vec<(ReportRow, Option<Trajectory>)> = cells
        .par_iter()
        .map(|(c, p, v)| {
            let outcome = artifacts
                .controller(c, *v)
                .map_err(Error::MissingArtifact)
                .and_then(|ctrl| {
                    let spec = EpisodeSpec::new(*v, p.input_profile(&params), &params);
                    let traj = run_closed_loop(&ctrl, &params, &spec)?;
                    let m = step_metrics(&traj, *v, &MetricsConfig::default())?;
                    Ok((m, mae(&traj, *v), traj))
                });
            match outcome {
                Ok((m, e, traj)) => (
                    ReportRow {
                        controller: c.clone(),
                        scenario: *p,
                        v_ref: *v,
                        metrics: Some(m),
                        mae: Some(e),
                        error: None,
                    },
                    Some(traj),
                ),
                Err(err) => {
                    log::warn!("cell {c}/{}/{v} failed: {err}", p.id());
                    (
                        ReportRow {
                            controller: c.clone(),
                            scenario: *p,
                            v_ref: *v,
                            metrics: None,
                            mae: None,
                            error: Some(err.to_string()),
                        },
                        None,
                    )
                }
            }
        })
        .collect();
    let (rows, trajectories): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let succeeded = rows.iter().filter(|r| r.is_ok()).count();
    ExperimentOutput {
        report: Report {
            params_set: grid.params_set,
            summary: ReportSummary {
                cells: rows.len(),
                succeeded,
                failed: rows.len() - succeeded,
            },
            rows,
        },
        trajectories,
    }
}

/// Writes `report.json`, `metrics.csv`, `reference_comparison.csv` and one
/// trajectory CSV per successful cell under `dir`.
pub fn write_experiment(out: &ExperimentOutput, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir.join("trajectories"))?;
    std::fs::write(dir.join("report.json"), out.report.to_json()?)?;
    write_metrics_csv(
        &out.report.metrics_rows(),
        std::fs::File::create(dir.join("metrics.csv"))?,
    )?;
    write_comparison_csv(
        &out.report,
        std::fs::File::create(dir.join("reference_comparison.csv"))?,
    )?;
    for (row, traj) in out.report.rows.iter().zip(&out.trajectories) {
        if let Some(traj) = traj {
            let name = format!(
                "{}_{}_{}.csv",
                row.controller,
                row.scenario.id(),
                format_vref(row.v_ref)
            );
            save_trajectory_csv(traj, row.v_ref, dir.join("trajectories").join(name))?;
        }
    }
    Ok(())
}

/// One published row of step-response characteristics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub controller: String,
    pub scenario: ScenarioProfile,
    pub v_ref: f64,
    pub rise_s: f64,
    pub settle_s: f64,
    pub overshoot_pct: f64,
    pub undershoot_pct: f64,
}

#[derive(Debug, Deserialize)]
struct ReferenceFile {
    rows: Vec<ReferenceRow>,
}

const REFERENCE_JSON: &str = include_str!("../data/reference.json");

/// Published values, shipped for side-by-side inspection only.
pub fn reference_rows() -> Vec<ReferenceRow> {
    let file: ReferenceFile =
        serde_json::from_str(REFERENCE_JSON).expect("bundled reference data is valid JSON");
    file.rows
}

#[derive(Debug, Serialize)]
struct ComparisonRecord<'a> {
    controller: &'a str,
    scenario: &'a str,
    v_ref: f64,
    metric: &'a str,
    produced: Option<f64>,
    reference: Option<f64>,
}

/// Long-format CSV pairing every produced metric with the published one.
pub fn write_comparison_csv<W: Write>(report: &Report, out: W) -> Result<()> {
    let refs = reference_rows();
    let mut w = csv::Writer::from_writer(out);
    for row in &report.rows {
        let r = refs.iter().find(|r| {
            r.controller == row.controller
                && r.scenario == row.scenario
                && (r.v_ref - row.v_ref).abs() < 1e-9
        });
        let m = row.metrics.as_ref();
        let pairs = [
            ("rise_s", m.map(|m| m.rise_time), r.map(|r| r.rise_s)),
            ("settle_s", m.map(|m| m.settling_time), r.map(|r| r.settle_s)),
            ("overshoot_pct", m.map(|m| m.overshoot_pct), r.map(|r| r.overshoot_pct)),
            ("undershoot_pct", m.map(|m| m.undershoot_pct), r.map(|r| r.undershoot_pct)),
        ];
        for (metric, produced, reference) in pairs {
            w.serialize(ComparisonRecord {
                controller: &row.controller,
                scenario: row.scenario.id(),
                v_ref: row.v_ref,
                metric,
                produced,
                reference,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
