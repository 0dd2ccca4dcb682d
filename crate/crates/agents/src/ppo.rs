//! Proximal policy optimisation over the layout environment.
//!
//! Rollouts use the masked stochastic policy; updates maximise the clipped
//! surrogate with generalised advantage estimates, a squared-error value
//! loss and an entropy bonus.

use std::path::Path;
use std::time::Instant;

use laserwall_core::{EnvConfig, LayoutEnv};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::Agent;
use crate::error::AgentError;
use crate::features::{self, PLANES};
use crate::nn::{Adam, NetShape, Network};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub clip: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub epochs: usize,
    pub batch_episodes: usize,
    pub minibatch: usize,
    pub learning_rate: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    /// Multiplies environment rewards before advantage estimation.
    pub reward_scale: f64,
    /// When positive, episodes start from a fixed pool of this many reset
    /// seeds, cycled in order; otherwise every episode draws a fresh seed.
    pub seed_pool: usize,
    pub conv1: usize,
    pub conv2: usize,
    pub hidden: usize,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            epochs: 4,
            batch_episodes: 4,
            minibatch: 64,
            learning_rate: 3e-4,
            entropy_coef: 0.01,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            reward_scale: 0.02,
            seed_pool: 0,
            conv1: 8,
            conv2: 16,
            hidden: 64,
            seed: 0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::Config(m.to_string()));
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return bad("clip must lie in (0, 1)");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) || !(self.gae_lambda > 0.0 && self.gae_lambda <= 1.0) {
            return bad("gamma and lambda must lie in (0, 1]");
        }
        if self.epochs == 0 || self.batch_episodes == 0 || self.minibatch == 0 {
            return bad("epochs, batch_episodes and minibatch must be positive");
        }
        if self.conv1 == 0 || self.conv2 == 0 || self.hidden == 0 {
            return bad("layer sizes must be positive");
        }
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if ![self.learning_rate, self.entropy_coef, self.value_coef, self.max_grad_norm, self.reward_scale]
            .into_iter()
            .all(finite_nonneg)
        {
            return bad("rates and coefficients must be finite and non-negative");
        }
        Ok(())
    }

    pub fn net_shape(&self, env: &EnvConfig) -> NetShape {
        NetShape {
            in_channels: PLANES,
            height: env.scenario.grid.height as usize,
            width: env.scenario.grid.width as usize,
            conv1: self.conv1,
            conv2: self.conv2,
            hidden: self.hidden,
            n_actions: env.n_actions(),
        }
    }
}

/// Softmax over unmasked logits. Masked entries get probability exactly 0.
pub fn masked_softmax(logits: &[f64], mask: &[bool]) -> Vec<f64> {
    let max = logits.iter().zip(mask).filter(|(_, &m)| m).map(|(&l, _)| l).fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logits.iter().zip(mask).map(|(&l, &m)| if m { (l - max).exp() } else { 0.0 }).collect();
    let z: f64 = p.iter().sum();
    if z > 0.0 {
        p.iter_mut().for_each(|x| *x /= z);
    }
    p
}

/// Loss terms of one sample and their gradients at the network outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleLoss {
    pub loss: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub dlogits: Vec<f64>,
    pub dvalue: f64,
}

pub struct SampleTarget<'a> {
    pub mask: &'a [bool],
    pub action: usize,
    pub old_logp: f64,
    pub advantage: f64,
    pub ret: f64,
}

/// Clipped-surrogate loss plus value and entropy terms for one sample:
/// `-min(r A, clip(r) A) + c_v (V - R)^2 / 2 - c_e H`.
pub fn sample_loss(logits: &[f64], value: f64, t: &SampleTarget<'_>, cfg: &PpoConfig) -> SampleLoss {
    let p = masked_softmax(logits, t.mask);
    let logp = p[t.action].ln();
    let ratio = (logp - t.old_logp).exp();
    let a = t.advantage;
    let unclipped = ratio * a;
    let clipped = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip) * a;
    let policy = -unclipped.min(clipped);
    let entropy: f64 = -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>();
    let value_err = value - t.ret;
    let value_loss = 0.5 * value_err * value_err;

    // The surrogate passes gradient only where the unclipped branch is the
    // active minimum.
    let active = unclipped <= clipped;
    let dlogp = if active { -ratio * a } else { 0.0 };
    let dlogits = p
        .iter()
        .enumerate()
        .map(|(j, &pj)| {
            if !t.mask[j] {
                return 0.0;
            }
            let onehot = if j == t.action { 1.0 } else { 0.0 };
            let d_pol = dlogp * (onehot - pj);
            let d_ent = if pj > 0.0 { cfg.entropy_coef * pj * (pj.ln() + entropy) } else { 0.0 };
            d_pol + d_ent
        })
        .collect();
    SampleLoss {
        loss: policy + cfg.value_coef * value_loss - cfg.entropy_coef * entropy,
        policy,
        value: value_loss,
        entropy,
        dlogits,
        dvalue: cfg.value_coef * value_err,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PpoPolicy {
    pub config: PpoConfig,
    pub net: Network,
}

impl PpoPolicy {
    pub fn new(config: PpoConfig, env: &EnvConfig) -> Result<Self, AgentError> {
        config.validate()?;
        let shape = config.net_shape(env);
        let net = Network::new(shape, config.seed);
        Ok(Self { config, net })
    }

    pub fn observe(&self, env: &LayoutEnv) -> Result<Vec<f64>, AgentError> {
        let state = env.state().ok_or(AgentError::Env(laserwall_core::EnvError::NotReset))?;
        let metrics = env.metrics().expect("metrics exist after reset");
        Ok(features::encode(state, metrics, &env.config().scenario))
    }

    /// Action probabilities and value estimate for the current state.
    pub fn evaluate(&self, env: &LayoutEnv) -> Result<(Vec<f64>, f64), AgentError> {
        let cache = self.net.forward(&self.observe(env)?);
        Ok((masked_softmax(&cache.logits, &env.action_mask()), cache.value))
    }
}

/// Samples from the masked policy, or takes its mode when `greedy`.
#[derive(Clone, Debug)]
pub struct PpoAgent {
    pub policy: PpoPolicy,
    pub greedy: bool,
    rng: ChaCha8Rng,
}

impl PpoAgent {
    pub fn new(policy: PpoPolicy, greedy: bool, seed: u64) -> Self {
        Self { policy, greedy, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

fn sample(p: &[f64], rng: &mut impl Rng) -> Option<usize> {
    let mut u: f64 = rng.gen();
    let mut last = None;
    for (i, &x) in p.iter().enumerate() {
        if x > 0.0 {
            last = Some(i);
            if u < x {
                return Some(i);
            }
            u -= x;
        }
    }
    last
}

fn argmax(p: &[f64]) -> Option<usize> {
    p.iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .fold(None, |best: Option<(usize, f64)>, (i, &x)| match best {
            Some((_, bx)) if bx >= x => best,
            _ => Some((i, x)),
        })
        .map(|(i, _)| i)
}

impl Agent for PpoAgent {
    fn act(&mut self, env: &LayoutEnv) -> Result<usize, AgentError> {
        let (p, _) = self.policy.evaluate(env)?;
        let choice = if self.greedy { argmax(&p) } else { sample(&p, &mut self.rng) };
        choice.ok_or(AgentError::NoLegalAction)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub mean_reward: f64,
    pub mean_length: f64,
    /// Closeness when each episode ended.
    pub mean_closeness: f64,
    pub success_rate: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed: u64,
    pub iterations: Vec<IterationStats>,
    pub wall_clock_secs: f64,
}

impl TrainReport {
    /// Mean of `mean_reward` over iterations `range`.
    pub fn mean_reward(&self, range: std::ops::Range<usize>) -> f64 {
        let xs = &self.iterations[range];
        xs.iter().map(|s| s.mean_reward).sum::<f64>() / xs.len().max(1) as f64
    }
}

struct Step {
    obs: Vec<f64>,
    mask: Vec<bool>,
    action: usize,
    logp: f64,
    value: f64,
    reward: f64,
}

struct Sample {
    obs: Vec<f64>,
    mask: Vec<bool>,
    action: usize,
    logp: f64,
    advantage: f64,
    ret: f64,
}

struct EpisodeOutcome {
    reward: f64,
    length: usize,
    closeness: f64,
    success: bool,
}

fn rollout(
    policy: &PpoPolicy,
    env: &mut LayoutEnv,
    seed: u64,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<Sample>,
) -> Result<EpisodeOutcome, AgentError> {
    let cfg = &policy.config;
    env.reset(seed)?;
    let mut steps: Vec<Step> = Vec::new();
    let (mut total, mut success, mut bootstrap) = (0.0, false, 0.0);
    loop {
        let obs = policy.observe(env)?;
        let mask = env.action_mask();
        let cache = policy.net.forward(&obs);
        let p = masked_softmax(&cache.logits, &mask);
        let Some(action) = sample(&p, rng) else { break };
        let tr = env.step(action)?;
        total += tr.reward;
        steps.push(Step { obs, mask, action, logp: p[action].ln(), value: cache.value, reward: tr.reward });
        if tr.terminated {
            success = true;
            break;
        }
        if tr.truncated {
            bootstrap = policy.net.forward(&policy.observe(env)?).value;
            break;
        }
    }
    let length = steps.len();
    let mut next_value = bootstrap;
    let mut gae = 0.0;
    let mut samples = Vec::with_capacity(length);
    for s in steps.into_iter().rev() {
        let delta = s.reward * cfg.reward_scale + cfg.gamma * next_value - s.value;
        gae = delta + cfg.gamma * cfg.gae_lambda * gae;
        next_value = s.value;
        samples.push(Sample {
            obs: s.obs,
            mask: s.mask,
            action: s.action,
            logp: s.logp,
            advantage: gae,
            ret: gae + s.value,
        });
    }
    samples.reverse();
    out.extend(samples);
    Ok(EpisodeOutcome { reward: total, length, closeness: env.closeness(), success })
}

fn global_norm_clip(grads: &mut [f64], max_norm: f64) {
    if max_norm <= 0.0 {
        return;
    }
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let k = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= k);
    }
}

/// Trains a fresh policy for `iterations` rounds of `batch_episodes`
/// rollouts each, writing a checkpoint to `checkpoint` when given.
pub fn train(
    config: &PpoConfig,
    env_config: &EnvConfig,
    iterations: usize,
    checkpoint: Option<&Path>,
) -> Result<(PpoPolicy, TrainReport), AgentError> {
    let mut policy = PpoPolicy::new(config.clone(), env_config)?;
    let report = train_policy(&mut policy, env_config, iterations)?;
    if let Some(path) = checkpoint {
        crate::checkpoint::save(&policy, path)?;
    }
    Ok((policy, report))
}

/// Continues training `policy` in place.
pub fn train_policy(
    policy: &mut PpoPolicy,
    env_config: &EnvConfig,
    iterations: usize,
) -> Result<TrainReport, AgentError> {
    let cfg = policy.config.clone();
    cfg.validate()?;
    let start = Instant::now();
    let mut env = LayoutEnv::new(env_config.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut opt = Adam::new(policy.net.params.len(), cfg.learning_rate);
    let mut report = TrainReport { seed: cfg.seed, ..Default::default() };
    let pool: Vec<u64> = (0..cfg.seed_pool).map(|_| rng.gen()).collect();
    let mut episode = 0usize;

    for iteration in 0..iterations {
        let mut samples = Vec::new();
        let mut outcomes = Vec::with_capacity(cfg.batch_episodes);
        for _ in 0..cfg.batch_episodes {
            let episode_seed = if pool.is_empty() { rng.gen() } else { pool[episode % pool.len()] };
            episode += 1;
            outcomes.push(rollout(policy, &mut env, episode_seed, &mut rng, &mut samples)?);
        }

        let n = samples.len();
        if n > 1 {
            let mean = samples.iter().map(|s| s.advantage).sum::<f64>() / n as f64;
            let var = samples.iter().map(|s| (s.advantage - mean).powi(2)).sum::<f64>() / n as f64;
            let sd = var.sqrt().max(1e-8);
            samples.iter_mut().for_each(|s| s.advantage = (s.advantage - mean) / sd);
        }

        let (mut pol, mut val, mut ent, mut count) = (0.0, 0.0, 0.0, 0usize);
        let mut order: Vec<usize> = (0..n).collect();
        let mut grads = vec![0.0; policy.net.params.len()];
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(cfg.minibatch) {
                grads.iter_mut().for_each(|g| *g = 0.0);
                let scale = 1.0 / batch.len() as f64;
                let mut batch_loss = 0.0;
                for &i in batch {
                    let s = &samples[i];
                    let cache = policy.net.forward(&s.obs);
                    let target = SampleTarget {
                        mask: &s.mask,
                        action: s.action,
                        old_logp: s.logp,
                        advantage: s.advantage,
                        ret: s.ret,
                    };
                    let l = sample_loss(&cache.logits, cache.value, &target, &cfg);
                    batch_loss += l.loss;
                    pol += l.policy;
                    val += l.value;
                    ent += l.entropy;
                    count += 1;
                    let dl: Vec<f64> = l.dlogits.iter().map(|g| g * scale).collect();
                    policy.net.backward(&cache, &dl, l.dvalue * scale, &mut grads);
                }
                if !batch_loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                    report.wall_clock_secs = start.elapsed().as_secs_f64();
                    return Err(AgentError::DivergenceDetected { iteration, report: Box::new(report) });
                }
                global_norm_clip(&mut grads, cfg.max_grad_norm);
                opt.step(&mut policy.net.params, &grads);
            }
        }

        let m = outcomes.len().max(1) as f64;
        let c = count.max(1) as f64;
        report.iterations.push(IterationStats {
            iteration,
            mean_reward: outcomes.iter().map(|o| o.reward).sum::<f64>() / m,
            mean_length: outcomes.iter().map(|o| o.length as f64).sum::<f64>() / m,
            mean_closeness: outcomes.iter().map(|o| o.closeness).sum::<f64>() / m,
            success_rate: outcomes.iter().filter(|o| o.success).count() as f64 / m,
            policy_loss: pol / c,
            value_loss: val / c,
            entropy: ent / c,
        });
    }
    report.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masked_entries_get_zero_probability() {
        let p = masked_softmax(&[5.0, 1.0, 100.0, 0.0], &[true, true, false, true]);
        assert_eq!(p[2], 0.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(masked_softmax(&[1.0, 2.0], &[false, false]), vec![0.0, 0.0]);
    }

    #[test]
    fn sample_loss_gradient_matches_finite_differences() {
        let cfg = PpoConfig { entropy_coef: 0.05, ..Default::default() };
        let mask = [true, false, true, true, true];
        for (adv, old_logp) in [(1.3, -1.2), (-0.7, -1.6), (2.0, -3.0), (-1.5, -0.2)] {
            let logits = [0.2, 9.0, -0.4, 0.9, 0.1];
            let target = SampleTarget { mask: &mask, action: 3, old_logp, advantage: adv, ret: 0.4 };
            let base = sample_loss(&logits, -0.3, &target, &cfg);
            assert_eq!(base.dlogits[1], 0.0);
            let eps = 1e-6;
            for j in [0, 2, 3, 4] {
                let mut up = logits;
                up[j] += eps;
                let mut dn = logits;
                dn[j] -= eps;
                let fd = (sample_loss(&up, -0.3, &target, &cfg).loss - sample_loss(&dn, -0.3, &target, &cfg).loss)
                    / (2.0 * eps);
                assert!((fd - base.dlogits[j]).abs() < 1e-6, "logit {j}: fd {fd} vs {}", base.dlogits[j]);
            }
            let fd = (sample_loss(&logits, -0.3 + eps, &target, &cfg).loss
                - sample_loss(&logits, -0.3 - eps, &target, &cfg).loss)
                / (2.0 * eps);
            assert!((fd - base.dvalue).abs() < 1e-6);
        }
    }

    #[test]
    fn config_bounds() {
        assert!(PpoConfig::default().validate().is_ok());
        assert!(PpoConfig { clip: 1.0, ..Default::default() }.validate().is_err());
        assert!(PpoConfig { gamma: 0.0, ..Default::default() }.validate().is_err());
        assert!(PpoConfig { gae_lambda: 1.0, ..Default::default() }.validate().is_ok());
    }
}
