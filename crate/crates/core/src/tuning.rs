//! PSO and real-coded GA searches over PI gains, minimising closed-loop MAE.
//!
//! Both optimisers draw every random number on the calling thread in a fixed
//! order and only fan out the (pure) objective evaluations, so a seeded run is
//! reproducible whether or not the evaluations run in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::converter::{ConverterParams, EpisodeSpec, InputProfile};
use crate::error::{Error, Result};
use crate::harness::{run_closed_loop, Controller};
use crate::metrics::mae;
use crate::pi::PiGains;

pub const DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: [f64; DIM],
    pub hi: [f64; DIM],
}

impl Default for Bounds {
    /// `k_p ∈ [0, 0.05]`, `k_i ∈ [0, 2]`.
    fn default() -> Self {
        Self {
            lo: [0.0, 0.0],
            hi: [0.05, 2.0],
        }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        for d in 0..DIM {
            if !(self.lo[d].is_finite() && self.hi[d].is_finite() && self.lo[d] < self.hi[d]) {
                return Err(Error::Config(format!(
                    "bounds for dimension {d} must satisfy lo < hi, got [{}, {}]",
                    self.lo[d], self.hi[d]
                )));
            }
        }
        Ok(())
    }

    pub fn range(&self, d: usize) -> f64 {
        self.hi[d] - self.lo[d]
    }

    pub fn clamp(&self, x: [f64; DIM]) -> [f64; DIM] {
        let mut out = x;
        for d in 0..DIM {
            out[d] = x[d].clamp(self.lo[d], self.hi[d]);
        }
        out
    }

    pub fn contains(&self, x: &[f64; DIM]) -> bool {
        (0..DIM).all(|d| x[d] >= self.lo[d] && x[d] <= self.hi[d])
    }

    fn sample(&self, rng: &mut impl Rng) -> [f64; DIM] {
        let mut x = [0.0; DIM];
        for d in 0..DIM {
            x[d] = rng.gen_range(self.lo[d]..=self.hi[d]);
        }
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub position: [f64; DIM],
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub best: Candidate,
    /// Best fitness seen so far, recorded after initialisation and after each
    /// iteration/generation.
    pub history: Vec<f64>,
}

/// NaN counts as the worst possible fitness.
fn sanitize(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

fn evaluate<F>(objective: &F, positions: &[[f64; DIM]]) -> Vec<f64>
where
    F: Fn(&[f64; DIM]) -> f64 + Sync,
{
    positions.par_iter().map(|x| sanitize(objective(x))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub c1: f64,
    pub c2: f64,
    /// Velocity limit as a fraction of each dimension's range.
    pub velocity_clamp: f64,
    pub bounds: Bounds,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 20,
            iterations: 50,
            inertia: 0.7,
            c1: 1.5,
            c2: 1.5,
            velocity_clamp: 0.2,
            bounds: Bounds::default(),
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size == 0 || self.iterations == 0 {
            return Err(Error::Config("swarm size and iterations must be at least 1".into()));
        }
        if !(self.velocity_clamp > 0.0) {
            return Err(Error::Config("velocity clamp must be positive".into()));
        }
        self.bounds.validate()
    }
}

/// `v' = w·v + c1·u1·(p_best − x) + c2·u2·(g_best − x)`, component-wise, then
/// limited to `±v_max`.
#[allow(clippy::too_many_arguments)]
pub fn pso_velocity_update(
    v: [f64; DIM],
    x: [f64; DIM],
    p_best: [f64; DIM],
    g_best: [f64; DIM],
    w: f64,
    c1: f64,
    c2: f64,
    u1: [f64; DIM],
    u2: [f64; DIM],
    v_max: [f64; DIM],
) -> [f64; DIM] {
    let mut out = [0.0; DIM];
    for d in 0..DIM {
        let raw = w * v[d] + c1 * u1[d] * (p_best[d] - x[d]) + c2 * u2[d] * (g_best[d] - x[d]);
        out[d] = raw.clamp(-v_max[d], v_max[d]);
    }
    out
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

pub fn pso_optimize<F>(config: &PsoConfig, objective: F) -> Result<OptimizeResult>
where
    F: Fn(&[f64; DIM]) -> f64 + Sync,
{
    config.validate()?;
    let b = &config.bounds;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut v_max = [0.0; DIM];
    for (d, vm) in v_max.iter_mut().enumerate() {
        *vm = config.velocity_clamp * b.range(d);
    }

    let mut x: Vec<[f64; DIM]> = (0..config.swarm_size).map(|_| b.sample(&mut rng)).collect();
    let mut v: Vec<[f64; DIM]> = (0..config.swarm_size)
        .map(|_| {
            let mut vel = [0.0; DIM];
            for d in 0..DIM {
                vel[d] = rng.gen_range(-v_max[d]..=v_max[d]);
            }
            vel
        })
        .collect();
    let fit = evaluate(&objective, &x);
    let mut p_best = x.clone();
    let mut p_fit = fit;
    let g = argmin(&p_fit);
    let mut g_best = Candidate {
        position: p_best[g],
        fitness: p_fit[g],
    };
    let mut history = vec![g_best.fitness];

    for _ in 0..config.iterations {
        for i in 0..config.swarm_size {
            let mut u1 = [0.0; DIM];
            let mut u2 = [0.0; DIM];
            for d in 0..DIM {
                u1[d] = rng.gen::<f64>();
                u2[d] = rng.gen::<f64>();
            }
            v[i] = pso_velocity_update(
                v[i],
                x[i],
                p_best[i],
                g_best.position,
                config.inertia,
                config.c1,
                config.c2,
                u1,
                u2,
                v_max,
            );
            let mut next = x[i];
            for d in 0..DIM {
                next[d] += v[i][d];
            }
            x[i] = b.clamp(next);
        }
        let fit = evaluate(&objective, &x);
        for i in 0..config.swarm_size {
            if fit[i] < p_fit[i] {
                p_fit[i] = fit[i];
                p_best[i] = x[i];
            }
            if fit[i] < g_best.fitness {
                g_best = Candidate {
                    position: x[i],
                    fitness: fit[i],
                };
            }
        }
        history.push(g_best.fitness);
    }
    Ok(OptimizeResult {
        best: g_best,
        history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Mutation standard deviation as a fraction of each dimension's range.
    pub mutation_sigma: f64,
    pub elitism_count: usize,
    pub bounds: Bounds,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 30,
            generations: 60,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            mutation_sigma: 0.05,
            elitism_count: 2,
            bounds: Bounds::default(),
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 || self.generations == 0 {
            return Err(Error::Config(
                "population size and generations must be at least 1".into(),
            ));
        }
        let unit = |r: f64| (0.0..=1.0).contains(&r);
        if !unit(self.crossover_rate) || !unit(self.mutation_rate) {
            return Err(Error::Config("GA rates must lie in [0, 1]".into()));
        }
        if !(self.mutation_sigma >= 0.0) {
            return Err(Error::Config("mutation sigma must be non-negative".into()));
        }
        // A fully elitist population is allowed: it freezes the search.
        if self.elitism_count > self.population_size {
            return Err(Error::Config(
                "elitism count cannot exceed the population size".into(),
            ));
        }
        self.bounds.validate()
    }
}

const BLX_ALPHA: f64 = 0.5;

fn tournament(fit: &[f64], rng: &mut impl Rng) -> usize {
    let a = rng.gen_range(0..fit.len());
    let b = rng.gen_range(0..fit.len());
    if fit[b] < fit[a] {
        b
    } else {
        a
    }
}

/// Indices sorted by fitness, ties broken by index.
fn ranked(fit: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fit.len()).collect();
    idx.sort_by(|&i, &j| fit[i].total_cmp(&fit[j]).then(i.cmp(&j)));
    idx
}

pub fn ga_optimize<F>(config: &GaConfig, objective: F) -> Result<OptimizeResult>
where
    F: Fn(&[f64; DIM]) -> f64 + Sync,
{
    config.validate()?;
    let b = &config.bounds;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pop: Vec<[f64; DIM]> = (0..config.population_size)
        .map(|_| b.sample(&mut rng))
        .collect();
    let mut fit = evaluate(&objective, &pop);
    let g = argmin(&fit);
    let mut best = Candidate {
        position: pop[g],
        fitness: fit[g],
    };
    let mut history = vec![best.fitness];
    let sigmas: Vec<Normal<f64>> = (0..DIM)
        .map(|d| {
            Normal::new(0.0, config.mutation_sigma * b.range(d))
                .map_err(|e| Error::Config(e.to_string()))
        })
        .collect::<Result<_>>()?;

    for _ in 0..config.generations {
        let order = ranked(&fit);
        let mut next: Vec<[f64; DIM]> = order[..config.elitism_count]
            .iter()
            .map(|&i| pop[i])
            .collect();
        let mut next_fit: Vec<f64> = order[..config.elitism_count]
            .iter()
            .map(|&i| fit[i])
            .collect();
        let mut children = Vec::with_capacity(config.population_size - next.len());
        while next.len() + children.len() < config.population_size {
            let p1 = pop[tournament(&fit, &mut rng)];
            let p2 = pop[tournament(&fit, &mut rng)];
            let mut child = p1;
            if rng.gen::<f64>() < config.crossover_rate {
                for d in 0..DIM {
                    let (lo, hi) = (p1[d].min(p2[d]), p1[d].max(p2[d]));
                    let ext = BLX_ALPHA * (hi - lo);
                    child[d] = if hi - lo > 0.0 {
                        rng.gen_range(lo - ext..=hi + ext)
                    } else {
                        lo
                    };
                }
            }
            for d in 0..DIM {
                if rng.gen::<f64>() < config.mutation_rate {
                    child[d] += sigmas[d].sample(&mut rng);
                }
            }
            children.push(b.clamp(child));
        }
        next_fit.extend(evaluate(&objective, &children));
        next.extend(children);
        pop = next;
        fit = next_fit;
        let g = argmin(&fit);
        if fit[g] < best.fitness {
            best = Candidate {
                position: pop[g],
                fitness: fit[g],
            };
        }
        history.push(best.fitness);
    }
    Ok(OptimizeResult { best, history })
}

/// Closed-loop scenario the PI gains are scored on.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningScenario {
    pub params: ConverterParams,
    pub spec: EpisodeSpec,
}

impl TuningScenario {
    /// Fixed 24 V input, full one-second horizon.
    pub fn fixed_input(params: ConverterParams, v_ref: f64) -> Self {
        let spec = EpisodeSpec::new(v_ref, InputProfile::fixed(params.v_in_nominal), &params);
        Self { params, spec }
    }
}

/// Whole-run MAE of the PI closed loop; `+∞` when the simulation blows up.
pub fn fitness(gains: &PiGains, scenario: &TuningScenario) -> f64 {
    match run_closed_loop(&Controller::Pi(*gains), &scenario.params, &scenario.spec) {
        Ok(traj) => sanitize(mae(&traj, scenario.spec.v_ref)),
        Err(e) => {
            log::debug!("candidate {gains:?} rejected: {e}");
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TuneMethod {
    Pso,
    Ga,
}

impl std::fmt::Display for TuneMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TuneMethod::Pso => "pso",
            TuneMethod::Ga => "ga",
        })
    }
}

impl std::str::FromStr for TuneMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pso" => Ok(TuneMethod::Pso),
            "ga" => Ok(TuneMethod::Ga),
            other => Err(Error::Config(format!("unknown tuning method {other:?}"))),
        }
    }
}

/// On-disk tuner result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunerOutput {
    pub method: TuneMethod,
    pub k_p: f64,
    pub k_i: f64,
    pub mae: f64,
    pub history: Vec<f64>,
}

impl TunerOutput {
    pub fn gains(&self) -> PiGains {
        PiGains::new(self.k_p, self.k_i)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::MissingArtifact(format!("{}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Runs the chosen optimiser on the PI fitness of `scenario`.
pub fn tune_pi(
    method: TuneMethod,
    scenario: &TuningScenario,
    pso: &PsoConfig,
    ga: &GaConfig,
) -> Result<TunerOutput> {
    let objective = |x: &[f64; DIM]| fitness(&PiGains::new(x[0], x[1]), scenario);
    let result = match method {
        TuneMethod::Pso => pso_optimize(pso, objective)?,
        TuneMethod::Ga => ga_optimize(ga, objective)?,
    };
    Ok(TunerOutput {
        method,
        k_p: result.best.position[0],
        k_i: result.best.position[1],
        mae: result.best.fitness,
        history: result.history,
    })
}
