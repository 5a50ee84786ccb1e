//! Proximal policy optimisation over a continuous duty action.
//!
//! The actor maps normalised observations to the mean of a Gaussian over the
//! duty ratio; a separate critic regresses GAE returns. One episode is
//! collected per training round, then the clipped surrogate and the value loss
//! are minimised for `epochs` passes over shuffled minibatches.

use std::f64::consts::PI;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::converter::{BoostEnv, Observation};
use crate::error::{Error, Result};
use crate::harness::ScenarioConfig;
use crate::nn::{Activation, Mlp, ParamGrads};

pub const OBS_DIM: usize = 3;
pub const LOG_STD_MIN: f64 = -6.907_755_278_982_137; // ln(1e-3)
pub const LOG_STD_MAX: f64 = 0.0;
/// Bound on `new_log_prob − old_log_prob` before exponentiation.
pub const RATIO_EXPONENT_LIMIT: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PpoConfig {
    pub episodes: usize,
    pub epochs: usize,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub gamma: f64,
    pub clip_eps: f64,
    pub gae_lambda: f64,
    pub minibatch_size: usize,
    pub hidden_layers: usize,
    pub neurons: usize,
    pub seed: u64,
    pub normalize_advantages: bool,
    pub max_grad_norm: f64,
    pub init_log_std: f64,
    /// Added to the actor output to form the mean duty.
    pub action_offset: f64,
    /// Scale applied to the actor's output-layer weights at init; small
    /// values start the policy near a constant duty of `action_offset`.
    pub head_gain: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            episodes: 50,
            epochs: 5,
            lr_actor: 0.05,
            lr_critic: 0.05,
            gamma: 0.99,
            clip_eps: 0.2,
            gae_lambda: 0.98,
            minibatch_size: 8,
            hidden_layers: 3,
            neurons: 256,
            seed: 0,
            // Raw advantages: with per-batch normalisation the first
            // terminated episodes dominate the update and push the duty up.
            normalize_advantages: false,
            max_grad_norm: 0.5,
            init_log_std: -4.0,
            // Largest round duty whose startup transient stays inside the
            // termination band on the desk plant.
            action_offset: 0.2,
            head_gain: 0.01,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        if !unit(self.gamma) || !unit(self.gae_lambda) {
            return Err(Error::Config("gamma and lambda must lie in (0, 1]".into()));
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return Err(Error::Config("clip epsilon must lie in (0, 1)".into()));
        }
        if self.minibatch_size == 0 || self.epochs == 0 || self.neurons == 0 {
            return Err(Error::Config(
                "minibatch size, epochs and neurons must be positive".into(),
            ));
        }
        if !(self.head_gain.is_finite() && self.head_gain >= 0.0) {
            return Err(Error::Config("head gain must be finite and non-negative".into()));
        }
        if !(self.lr_actor > 0.0 && self.lr_critic > 0.0 && self.max_grad_norm > 0.0) {
            return Err(Error::Config(
                "learning rates and gradient clip must be positive".into(),
            ));
        }
        Ok(())
    }

    fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![OBS_DIM];
        sizes.extend(std::iter::repeat_n(self.neurons, self.hidden_layers));
        sizes.push(1);
        sizes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub actor: Mlp,
    pub log_std: f64,
    pub action_offset: f64,
}

fn gaussian_log_density(x: f64, mean: f64, log_std: f64) -> f64 {
    let std = log_std.exp();
    let z = (x - mean) / std;
    -0.5 * z * z - log_std - 0.5 * (2.0 * PI).ln()
}

impl GaussianPolicy {
    pub fn new(config: &PpoConfig) -> Result<Self> {
        let mut actor = Mlp::new(
            &config.layer_sizes(),
            Activation::Tanh,
            Activation::Identity,
            config.seed,
        )?;
        if let Some(head) = actor.layers_mut().last_mut() {
            head.weights.iter_mut().for_each(|w| *w *= config.head_gain);
            head.biases.iter_mut().for_each(|b| *b = 0.0);
        }
        Ok(Self {
            actor,
            log_std: config.init_log_std.clamp(LOG_STD_MIN, LOG_STD_MAX),
            action_offset: config.action_offset,
        })
    }

    pub fn std(&self) -> f64 {
        self.log_std.clamp(LOG_STD_MIN, LOG_STD_MAX).exp()
    }

    fn effective_log_std(&self) -> f64 {
        self.log_std.clamp(LOG_STD_MIN, LOG_STD_MAX)
    }

    pub fn mean(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.actor.predict(obs)?[0] + self.action_offset)
    }

    pub fn log_prob(&self, obs: &[f64], action: f64) -> Result<f64> {
        Ok(gaussian_log_density(
            action,
            self.mean(obs)?,
            self.effective_log_std(),
        ))
    }
}

/// Draws `action ~ N(mean(obs), std²)` and returns it with its exact log-density.
pub fn policy_sample(
    policy: &GaussianPolicy,
    obs: &[f64],
    rng: &mut impl rand::Rng,
) -> Result<(f64, f64)> {
    let mean = policy.mean(obs)?;
    let noise: f64 = StandardNormal.sample(rng);
    let action = mean + policy.std() * noise;
    Ok((
        action,
        gaussian_log_density(action, mean, policy.effective_log_std()),
    ))
}

/// `exp(new − old)` with the exponent limited to ±[`RATIO_EXPONENT_LIMIT`].
pub fn prob_ratio(new_log_prob: f64, old_log_prob: f64) -> f64 {
    (new_log_prob - old_log_prob)
        .clamp(-RATIO_EXPONENT_LIMIT, RATIO_EXPONENT_LIMIT)
        .exp()
}

/// `min(r·A, clip(r, 1 − ε, 1 + ε)·A)`
pub fn clipped_surrogate(ratio: f64, advantage: f64, eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
    (ratio * advantage).min(clipped * advantage)
}

/// Generalised advantage estimation. `values[t]` is `V(s_t)`; the value after
/// the last step is `bootstrap_value`, and `dones[t]` cuts the recursion.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap_value: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(Error::Dimension {
            context: "gae inputs",
            expected: n,
            got: if values.len() != n {
                values.len()
            } else {
                dones.len()
            },
        });
    }
    let mut advantages = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { bootstrap_value };
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        advantages[t] = next_adv;
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((advantages, returns))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub observation: [f64; OBS_DIM],
    /// Sampled action before the environment clamps it.
    pub action: f64,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    pub done: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub transitions: Vec<Transition>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn push(&mut self, t: Transition) {
        self.transitions.push(t);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Computes advantages and return targets. Normalisation, when enabled,
    /// rescales advantages to zero mean and unit variance over the buffer.
    pub fn finish(&mut self, bootstrap_value: f64, gamma: f64, lambda: f64, normalize: bool) -> Result<()> {
        let rewards: Vec<f64> = self.transitions.iter().map(|t| t.reward).collect();
        let values: Vec<f64> = self.transitions.iter().map(|t| t.value).collect();
        let dones: Vec<bool> = self.transitions.iter().map(|t| t.done).collect();
        let (adv, ret) = compute_gae(&rewards, &values, &dones, bootstrap_value, gamma, lambda)?;
        self.returns = ret;
        self.advantages = if normalize { normalize_advantages(&adv) } else { adv };
        Ok(())
    }
}

pub fn normalize_advantages(adv: &[f64]) -> Vec<f64> {
    let n = adv.len() as f64;
    if adv.len() < 2 {
        return adv.iter().map(|_| 0.0).collect();
    }
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < 1e-12 {
        return adv.iter().map(|_| 0.0).collect();
    }
    adv.iter().map(|a| (a - mean) / std).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UpdateStats {
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
    pub minibatches: usize,
}

/// Actor-loss quantities for one minibatch; the parameter gradient itself is
/// written into the caller's buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActorGradient {
    pub log_std: f64,
    pub loss: f64,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
}

/// Gradient of `−mean(min(r·A, clip(r)·A))` with respect to the actor
/// parameters (into `grads`, overwritten) and `log_std`.
pub fn actor_minibatch_gradient(
    policy: &GaussianPolicy,
    batch: &[(&Transition, f64)],
    clip_eps: f64,
    grads: &mut ParamGrads,
) -> Result<ActorGradient> {
    let m = batch.len() as f64;
    let log_std = policy.effective_log_std();
    let var = (2.0 * log_std).exp();
    let log_std_live = policy.log_std > LOG_STD_MIN && policy.log_std < LOG_STD_MAX;
    let inputs: Vec<&[f64]> = batch.iter().map(|(t, _)| &t.observation[..]).collect();
    let cache = policy.actor.forward_batch(&inputs)?;
    let mut out_grads = vec![0.0; batch.len()];
    let mut g_log_std = 0.0;
    let (mut loss, mut ratio_sum, mut clipped) = (0.0, 0.0, 0usize);
    for (s, (t, adv)) in batch.iter().enumerate() {
        let mean = cache.output(s)[0] + policy.action_offset;
        let new_lp = gaussian_log_density(t.action, mean, log_std);
        let ratio = prob_ratio(new_lp, t.log_prob);
        loss -= clipped_surrogate(ratio, *adv, clip_eps) / m;
        ratio_sum += ratio;
        if (ratio - 1.0).abs() > clip_eps {
            clipped += 1;
        }
        // The unclipped branch carries the gradient; the clipped one is flat.
        let exponent = new_lp - t.log_prob;
        let unclipped_active = ratio * adv <= ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps) * adv
            && exponent.abs() < RATIO_EXPONENT_LIMIT;
        if !unclipped_active {
            continue;
        }
        let dl_dlogp = -ratio * adv / m;
        let diff = t.action - mean;
        out_grads[s] = dl_dlogp * diff / var;
        if log_std_live {
            g_log_std += dl_dlogp * (diff * diff / var - 1.0);
        }
    }
    grads.fill_zero();
    policy
        .actor
        .backward_batch_accumulate(&cache, &out_grads, grads)?;
    Ok(ActorGradient {
        log_std: g_log_std,
        loss,
        mean_ratio: ratio_sum / m,
        clip_fraction: clipped as f64 / m,
    })
}

/// Gradient of `mean((R − V(s))²)` over the minibatch into `grads`
/// (overwritten); returns the loss.
pub fn critic_minibatch_gradient(
    critic: &Mlp,
    batch: &[(&Transition, f64)],
    grads: &mut ParamGrads,
) -> Result<f64> {
    let m = batch.len() as f64;
    let inputs: Vec<&[f64]> = batch.iter().map(|(t, _)| &t.observation[..]).collect();
    let cache = critic.forward_batch(&inputs)?;
    let mut loss = 0.0;
    let out_grads: Vec<f64> = batch
        .iter()
        .enumerate()
        .map(|(s, (_, ret))| {
            let residual = ret - cache.output(s)[0];
            loss += residual * residual / m;
            -2.0 * residual / m
        })
        .collect();
    grads.fill_zero();
    critic.backward_batch_accumulate(&cache, &out_grads, grads)?;
    Ok(loss)
}

fn clip_norm(grads: &mut ParamGrads, extra: &mut f64, max_norm: f64) {
    let norm = (grads.squared_norm() + *extra * *extra).sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grads.scale(s);
        *extra *= s;
    }
}

/// K epochs of shuffled minibatch updates on actor and critic.
pub fn ppo_update(
    policy: &mut GaussianPolicy,
    critic: &mut Mlp,
    buffer: &RolloutBuffer,
    config: &PpoConfig,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateStats> {
    if buffer.advantages.len() != buffer.len() || buffer.returns.len() != buffer.len() {
        return Err(Error::Usage("advantages not computed for this buffer".into()));
    }
    let mut stats = UpdateStats::default();
    let mut actor_grads = ParamGrads::zeros_like(&policy.actor);
    let mut critic_grads = ParamGrads::zeros_like(critic);
    let mut order: Vec<usize> = (0..buffer.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(config.minibatch_size) {
            let actor_batch: Vec<(&Transition, f64)> = chunk
                .iter()
                .map(|&k| (&buffer.transitions[k], buffer.advantages[k]))
                .collect();
            let critic_batch: Vec<(&Transition, f64)> = chunk
                .iter()
                .map(|&k| (&buffer.transitions[k], buffer.returns[k]))
                .collect();

            let closs = critic_minibatch_gradient(critic, &critic_batch, &mut critic_grads)?;
            let mut ag =
                actor_minibatch_gradient(policy, &actor_batch, config.clip_eps, &mut actor_grads)?;
            if !(closs.is_finite() && ag.loss.is_finite()) {
                return Err(Error::Diverged(format!(
                    "non-finite loss (actor {}, critic {closs}); last stats {stats:?}",
                    ag.loss
                )));
            }
            let mut none = 0.0;
            clip_norm(&mut critic_grads, &mut none, config.max_grad_norm);
            clip_norm(&mut actor_grads, &mut ag.log_std, config.max_grad_norm);

            critic.apply_update(&critic_grads, config.lr_critic)?;
            policy.actor.apply_update(&actor_grads, config.lr_actor)?;
            policy.log_std =
                (policy.log_std - config.lr_actor * ag.log_std).clamp(LOG_STD_MIN, LOG_STD_MAX);

            stats.actor_loss += ag.loss;
            stats.critic_loss += closs;
            stats.mean_ratio += ag.mean_ratio;
            stats.clip_fraction += ag.clip_fraction;
            stats.minibatches += 1;
        }
    }
    if stats.minibatches > 0 {
        let n = stats.minibatches as f64;
        stats.actor_loss /= n;
        stats.critic_loss /= n;
        stats.mean_ratio /= n;
        stats.clip_fraction /= n;
    }
    Ok(stats)
}

pub fn features(env: &BoostEnv, obs: &Observation) -> [f64; OBS_DIM] {
    obs.normalized(env.spec().v_ref, env.params().dt)
}

/// Runs one episode with the stochastic policy and fills a buffer.
pub fn collect_episode(
    env: &mut BoostEnv,
    policy: &GaussianPolicy,
    critic: &Mlp,
    rng: &mut ChaCha8Rng,
    seed: u64,
) -> Result<(RolloutBuffer, f64)> {
    let (_, mut obs, _) = env.reset(seed);
    let mut buffer = RolloutBuffer::default();
    loop {
        let x = features(env, &obs);
        let value = critic.predict(&x)?[0];
        let (action, log_prob) = policy_sample(policy, &x, rng)?;
        let out = env.step(action)?;
        buffer.push(Transition {
            observation: x,
            action,
            log_prob,
            reward: out.reward,
            value,
            done: out.terminated,
        });
        obs = out.observation;
        if out.done {
            let bootstrap = if out.terminated {
                0.0
            } else {
                critic.predict(&features(env, &obs))?[0]
            };
            return Ok((buffer, bootstrap));
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: GaussianPolicy,
    pub critic: Mlp,
    pub reward_curve: Vec<f64>,
    pub stats: Vec<UpdateStats>,
}

pub fn init_networks(config: &PpoConfig) -> Result<(GaussianPolicy, Mlp)> {
    let policy = GaussianPolicy::new(config)?;
    let critic = Mlp::new(
        &config.layer_sizes(),
        Activation::Tanh,
        Activation::Identity,
        config.seed.wrapping_add(1),
    )?;
    Ok((policy, critic))
}

/// Alternates episode collection and clipped-surrogate updates for
/// `config.episodes` rounds.
pub fn train<F>(env_factory: F, config: &PpoConfig) -> Result<TrainOutcome>
where
    F: Fn() -> Result<BoostEnv>,
{
    config.validate()?;
    let (mut policy, mut critic) = init_networks(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(2));
    let mut env = env_factory()?;
    let mut reward_curve = Vec::with_capacity(config.episodes);
    let mut all_stats = Vec::with_capacity(config.episodes);
    for episode in 0..config.episodes {
        let (mut buffer, bootstrap) =
            collect_episode(&mut env, &policy, &critic, &mut rng, config.seed)?;
        let total: f64 = buffer.transitions.iter().map(|t| t.reward).sum();
        buffer.finish(
            bootstrap,
            config.gamma,
            config.gae_lambda,
            config.normalize_advantages,
        )?;
        let stats = ppo_update(&mut policy, &mut critic, &buffer, config, &mut rng)?;
        log::info!(
            "episode {episode}: steps {} reward {total:.1} actor {:.4} critic {:.3e} clip {:.3} std {:.4}",
            buffer.len(),
            stats.actor_loss,
            stats.critic_loss,
            stats.clip_fraction,
            policy.std()
        );
        reward_curve.push(total);
        all_stats.push(stats);
    }
    Ok(TrainOutcome {
        policy,
        critic,
        reward_curve,
        stats: all_stats,
    })
}

/// Learning rate retried once when training at the configured rate diverges.
pub const FALLBACK_LR: f64 = 3e-3;

/// Trains an agent on `scenario` and packages it as a checkpoint. A diverged
/// run is retried once with both learning rates at [`FALLBACK_LR`].
pub fn train_agent(scenario: &ScenarioConfig, config: &PpoConfig) -> Result<AgentCheckpoint> {
    let (params, spec) = scenario.build()?;
    let factory = || BoostEnv::new(params, spec);
    let (outcome, config) = match train(factory, config) {
        Err(Error::Diverged(msg)) if config.lr_actor != FALLBACK_LR => {
            log::warn!("training diverged ({msg}); retrying with lr {FALLBACK_LR}");
            let retry = PpoConfig {
                lr_actor: FALLBACK_LR,
                lr_critic: FALLBACK_LR,
                ..config.clone()
            };
            (train(factory, &retry)?, retry)
        }
        other => (other?, config.clone()),
    };
    Ok(AgentCheckpoint {
        header: AgentHeader {
            log_std: outcome.policy.log_std,
            action_offset: outcome.policy.action_offset,
            reward_curve: outcome.reward_curve,
            v_ref: scenario.v_ref,
            params_set: scenario.params_set.to_string(),
            config,
        },
        policy: outcome.policy,
        critic: outcome.critic,
    })
}

/// JSON header stored next to the actor and critic checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentHeader {
    pub config: PpoConfig,
    pub log_std: f64,
    pub action_offset: f64,
    pub reward_curve: Vec<f64>,
    pub v_ref: f64,
    pub params_set: String,
}

#[derive(Debug, Clone)]
pub struct AgentCheckpoint {
    pub header: AgentHeader,
    pub policy: GaussianPolicy,
    pub critic: Mlp,
}

impl AgentCheckpoint {
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.policy.actor.save(dir.join("actor.json"))?;
        self.critic.save(dir.join("critic.json"))?;
        std::fs::write(
            dir.join("agent.json"),
            serde_json::to_string_pretty(&self.header)?,
        )?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let header_path = dir.join("agent.json");
        let text = std::fs::read_to_string(&header_path).map_err(|e| {
            Error::MissingArtifact(format!("{}: {e}", header_path.display()))
        })?;
        let header: AgentHeader = serde_json::from_str(&text)?;
        let actor = Mlp::load(dir.join("actor.json"))?;
        let critic = Mlp::load(dir.join("critic.json"))?;
        if actor.input_dim() != OBS_DIM || critic.input_dim() != OBS_DIM {
            return Err(Error::Checkpoint("actor/critic input width is not 3".into()));
        }
        Ok(Self {
            policy: GaussianPolicy {
                actor,
                log_std: header.log_std,
                action_offset: header.action_offset,
            },
            critic,
            header,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn small_config() -> PpoConfig {
        PpoConfig {
            neurons: 8,
            hidden_layers: 2,
            ..PpoConfig::default()
        }
    }

    #[test]
    fn ratio_cases() {
        assert_eq!(prob_ratio(-1.3, -1.3), 1.0);
        assert_relative_eq!(prob_ratio(2f64.ln() - 0.7, -0.7), 2.0, max_relative = 1e-12);
        assert_eq!(prob_ratio(50.0, 0.0), 20f64.exp());
        assert_eq!(prob_ratio(0.0, 50.0), (-20f64).exp());
    }

    #[test]
    fn surrogate_cases() {
        for a in [-3.0, 0.0, 0.7] {
            assert_eq!(clipped_surrogate(1.0, a, 0.2), a);
        }
        assert_relative_eq!(clipped_surrogate(2.0, 1.0, 0.2), 1.2);
        assert_relative_eq!(clipped_surrogate(0.5, -1.0, 0.2), -0.8);
    }

    #[test]
    fn gae_single_terminal_step() {
        let (a, r) = compute_gae(&[1.0], &[0.0], &[true], 123.0, 0.99, 0.98).unwrap();
        assert_eq!(a, vec![1.0]);
        assert_eq!(r, vec![1.0]);
    }

    #[test]
    fn gae_lambda_zero_is_td_error() {
        let rewards = [0.5, -1.0, 2.0];
        let values = [0.1, 0.4, -0.3];
        let (a, _) = compute_gae(&rewards, &values, &[false; 3], 0.7, 0.9, 0.0).unwrap();
        assert_relative_eq!(a[0], 0.5 + 0.9 * 0.4 - 0.1);
        assert_relative_eq!(a[1], -1.0 + 0.9 * -0.3 - 0.4);
        assert_relative_eq!(a[2], 2.0 + 0.9 * 0.7 + 0.3);
    }

    #[test]
    fn gae_rejects_length_mismatch() {
        assert!(compute_gae(&[1.0, 2.0], &[0.0], &[false, false], 0.0, 0.9, 0.9).is_err());
    }

    #[test]
    fn log_prob_at_mean() {
        let mut policy = GaussianPolicy::new(&small_config()).unwrap();
        policy.log_std = 0.3f64.ln();
        let obs = [1.0, 0.0, 0.0];
        let mean = policy.mean(&obs).unwrap();
        assert_relative_eq!(
            policy.log_prob(&obs, mean).unwrap(),
            -(0.3 * (2.0 * PI).sqrt()).ln(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn sampling_at_std_floor_returns_mean() {
        let mut policy = GaussianPolicy::new(&small_config()).unwrap();
        policy.log_std = -100.0;
        assert_relative_eq!(policy.std(), 1e-3, max_relative = 1e-12);
        let obs = [0.5, 0.5, 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (a, _) = policy_sample(&policy, &obs, &mut rng).unwrap();
        assert!((a - policy.mean(&obs).unwrap()).abs() < 5e-3);
    }

    #[test]
    fn seeded_sampling_reproducible() {
        let policy = GaussianPolicy::new(&small_config()).unwrap();
        let obs = [0.1, 0.9, 0.0];
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..5)
                .map(|_| policy_sample(&policy, &obs, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn advantage_normalization_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let adv: Vec<f64> = (0..257).map(|_| rng.gen_range(-50.0..300.0)).collect();
        let n = normalize_advantages(&adv);
        let mean = n.iter().sum::<f64>() / n.len() as f64;
        let var = n.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n.len() as f64;
        assert!(mean.abs() < 1e-10);
        assert!((var - 1.0).abs() < 1e-6);
    }

    fn frozen_buffer(policy: &GaussianPolicy, n: usize, seed: u64) -> RolloutBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut buf = RolloutBuffer::default();
        for _ in 0..n {
            let obs = [
                rng.gen_range(0.0..1.2),
                rng.gen_range(-0.2..1.0),
                rng.gen_range(-0.1..0.1),
            ];
            let (action, log_prob) = policy_sample(policy, &obs, &mut rng).unwrap();
            buf.push(Transition {
                observation: obs,
                action,
                log_prob,
                reward: rng.gen_range(0.0..2.0),
                value: 0.0,
                done: false,
            });
        }
        buf.advantages = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        buf.returns = vec![1.0; n];
        buf
    }

    #[test]
    fn zero_advantages_leave_actor_unchanged() {
        let cfg = small_config();
        let (mut policy, mut critic) = init_networks(&cfg).unwrap();
        let mut buf = frozen_buffer(&policy, 16, 3);
        buf.advantages = vec![0.0; 16];
        let before = policy.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        ppo_update(&mut policy, &mut critic, &buf, &cfg, &mut rng).unwrap();
        assert_eq!(policy, before);
    }

    #[test]
    fn ratios_are_one_right_after_snapshot() {
        let cfg = small_config();
        let (policy, _) = init_networks(&cfg).unwrap();
        let buf = frozen_buffer(&policy, 8, 5);
        let batch: Vec<(&Transition, f64)> = buf
            .transitions
            .iter()
            .zip(&buf.advantages)
            .map(|(t, &a)| (t, a))
            .collect();
        let mut grads = ParamGrads::zeros_like(&policy.actor);
        let g = actor_minibatch_gradient(&policy, &batch, cfg.clip_eps, &mut grads).unwrap();
        assert!((g.mean_ratio - 1.0).abs() <= 1e-12);
        assert_eq!(g.clip_fraction, 0.0);
        let mean_adv = buf.advantages.iter().sum::<f64>() / 8.0;
        assert!((g.loss + mean_adv).abs() < 1e-12);
    }

    #[test]
    fn critic_regresses_constant_returns() {
        let cfg = PpoConfig {
            lr_critic: 0.05,
            ..small_config()
        };
        let (mut policy, mut critic) = init_networks(&cfg).unwrap();
        let mut buf = frozen_buffer(&policy, 64, 8);
        buf.returns = vec![0.8; 64];
        buf.advantages = vec![0.0; 64];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = PpoConfig { epochs: 100, ..cfg };
        ppo_update(&mut policy, &mut critic, &buf, &cfg, &mut rng).unwrap();
        for t in &buf.transitions {
            let v = critic.predict(&t.observation).unwrap()[0];
            assert!((v - 0.8).abs() < 5e-2, "{v}");
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let cfg = small_config();
        let (policy, critic) = init_networks(&cfg).unwrap();
        let ckpt = AgentCheckpoint {
            header: AgentHeader {
                config: cfg.clone(),
                log_std: policy.log_std,
                action_offset: policy.action_offset,
                reward_curve: vec![1.0, 2.5],
                v_ref: 48.0,
                params_set: "desk".into(),
            },
            policy,
            critic,
        };
        let dir = tempfile::tempdir().unwrap();
        ckpt.save(dir.path()).unwrap();
        let back = AgentCheckpoint::load(dir.path()).unwrap();
        assert_eq!(back.header, ckpt.header);
        assert_eq!(back.policy, ckpt.policy);
        assert_eq!(back.critic, ckpt.critic);
    }

    #[test]
    fn config_validation() {
        assert!(PpoConfig::default().validate().is_ok());
        assert!(PpoConfig { gamma: 0.0, ..PpoConfig::default() }.validate().is_err());
        assert!(PpoConfig { clip_eps: 1.0, ..PpoConfig::default() }.validate().is_err());
        assert!(PpoConfig { minibatch_size: 0, ..PpoConfig::default() }.validate().is_err());
    }
}
