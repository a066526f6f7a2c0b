//! Training objectives with exact gradients.
//!
//! All losses work on [`Sample`]s, whose feature tables are built once, and
//! evaluate the policy at temperature 1. Gradients are with respect to the
//! full parameter vector.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{GameKind, PlayerId, StepKey};
use crate::interaction::Trajectory;
use crate::policy::{FeatureTable, Policy};
use crate::rewards::{Label, LabeledStep};

/// One training example: a state's legal actions and the chosen one.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub game: GameKind,
    pub key: StepKey,
    pub table: FeatureTable,
    pub chosen: usize,
    pub label: Label,
    /// Seat of the actor; used by the SPAG objective.
    pub seat: PlayerId,
    /// Step reward; the advantage in the SPAG objective.
    pub reward: f64,
}

impl Sample {
    pub fn from_labeled(policy: &Policy, step: &LabeledStep) -> Result<Self> {
        let state = step.state()?;
        let table = policy.feature_table(&state)?;
        let action = step.action()?;
        let chosen = table.index_of(action).ok_or_else(|| Error::IllegalAction {
            game: step.game.as_str(),
            action: step.action.clone(),
            reason: "labeled action is not legal in its replayed state".into(),
        })?;
        Ok(Self {
            game: step.game,
            key: step.key.clone(),
            table,
            chosen,
            label: step.label,
            seat: state.to_move(),
            reward: step.reward,
        })
    }

    pub fn is_desirable(&self) -> bool {
        self.label == Label::Desirable
    }

    fn log_probs(&self, theta: &[f64]) -> Vec<f64> {
        self.table.log_probs(theta, 1.0)
    }

    fn add_grad(&self, probs: &[f64], scale: f64, grad: &mut [f64]) {
        self.table.add_log_prob_grad(probs, self.chosen, 1.0, scale, grad);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub loss: f64,
    pub gradient: Vec<f64>,
    pub n_desirable: usize,
    pub n_undesirable: usize,
    /// KL baseline used by KTO.
    pub z0: Option<f64>,
}

impl LossReport {
    fn new(dim: usize) -> Self {
        Self {
            loss: 0.0,
            gradient: vec![0.0; dim],
            n_desirable: 0,
            n_undesirable: 0,
            z0: None,
        }
    }

    fn count(&mut self, samples: &[&Sample]) {
        self.n_desirable = samples.iter().filter(|s| s.is_desirable()).count();
        self.n_undesirable = samples.len() - self.n_desirable;
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log sigmoid(x)` without overflow.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn exp_all(lp: &[f64]) -> Vec<f64> {
    lp.iter().map(|x| x.exp()).collect()
}

/// `KL(p || q)` from log-probabilities.
fn kl(lp: &[f64], lq: &[f64]) -> f64 {
    lp.iter().zip(lq).map(|(a, b)| a.exp() * (a - b)).sum()
}

fn ref_log_prob(sample: &Sample, lq: &[f64]) -> Result<f64> {
    let v = lq[sample.chosen];
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::ZeroReferenceProbability(sample.key.to_string()))
    }
}

/// Mean negative log-likelihood of the chosen (desirable) actions.
pub fn bc_loss(theta: &[f64], samples: &[&Sample]) -> Result<LossReport> {
    if samples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if samples.iter().any(|s| !s.is_desirable()) {
        return Err(Error::InvalidParameter("behavioral cloning takes desirable steps only".into()));
    }
    let n = samples.len() as f64;
    let mut r = LossReport::new(theta.len());
    r.count(samples);
    for s in samples {
        let lp = s.log_probs(theta);
        r.loss -= lp[s.chosen] / n;
        s.add_grad(&exp_all(&lp), -1.0 / n, &mut r.gradient);
    }
    Ok(r)
}

/// How KTO's KL baseline `z0` is estimated for a batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Z0Estimator {
    /// Batch mean of the exact `KL(pi_theta || pi_ref)` at each state.
    ExactKl,
    /// Batch mean of `r_theta(x_i, y_{i+1})` over the cyclically shifted
    /// pairs whose action is legal in the other state (0 if none is).
    Shifted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KtoParams {
    pub beta: f64,
    pub lambda_d: f64,
    pub lambda_u: f64,
    pub z0: Z0Estimator,
    /// Use this `z0` instead of estimating it.
    pub fixed_z0: Option<f64>,
}

impl KtoParams {
    pub fn new(beta: f64, lambda_d: f64, lambda_u: f64) -> Self {
        Self {
            beta,
            lambda_d,
            lambda_u,
            z0: Z0Estimator::ExactKl,
            fixed_z0: None,
        }
    }
}

/// Weights with `lambda_d * n_d = lambda_u * n_u` and the larger one 1.
/// With one class empty both weights are 1.
pub fn balance_lambdas(n_desirable: usize, n_undesirable: usize) -> (f64, f64) {
    if n_desirable == 0 || n_undesirable == 0 {
        return (1.0, 1.0);
    }
    if n_desirable >= n_undesirable {
        (n_undesirable as f64 / n_desirable as f64, 1.0)
    } else {
        (1.0, n_desirable as f64 / n_undesirable as f64)
    }
}

/// The detached, clamped KL baseline for a batch.
pub fn estimate_z0(theta: &[f64], theta_ref: &[f64], samples: &[&Sample], estimator: Z0Estimator) -> f64 {
    let z = match estimator {
        Z0Estimator::ExactKl => {
            samples
                .iter()
                .map(|s| kl(&s.log_probs(theta), &s.log_probs(theta_ref)))
                .sum::<f64>()
                / samples.len() as f64
        }
        Z0Estimator::Shifted => {
            let n = samples.len();
            let mut sum = 0.0;
            let mut used = 0usize;
            for i in 0..n {
                let x = samples[i];
                let y = samples[(i + 1) % n];
                if n == 1 || x.game != y.game {
                    continue;
                }
                if let Some(j) = x.table.index_of(y.table.actions[y.chosen]) {
                    sum += x.log_probs(theta)[j] - x.log_probs(theta_ref)[j];
                    used += 1;
                }
            }
            if used == 0 {
                0.0
            } else {
                sum / used as f64
            }
        }
    };
    z.max(0.0)
}

pub fn kto_loss(theta: &[f64], theta_ref: &[f64], samples: &[&Sample], p: &KtoParams) -> Result<LossReport> {
    if samples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n = samples.len() as f64;
    let z0 = p.fixed_z0.unwrap_or_else(|| estimate_z0(theta, theta_ref, samples, p.z0));
    let mut r = LossReport::new(theta.len());
    r.count(samples);
    r.z0 = Some(z0);
    for s in samples {
        let lp = s.log_probs(theta);
        let lq = s.log_probs(theta_ref);
        let ratio = lp[s.chosen] - ref_log_prob(s, &lq)?;
        let (lambda, x, sign) = if s.is_desirable() {
            (p.lambda_d, p.beta * (ratio - z0), 1.0)
        } else {
            (p.lambda_u, p.beta * (z0 - ratio), -1.0)
        };
        let sg = sigmoid(x);
        r.loss += (lambda - lambda * sg) / n;
        // d/dtheta of -lambda * sigmoid(x), with dx/dratio = sign * beta
        let scale = -lambda * sg * (1.0 - sg) * sign * p.beta / n;
        s.add_grad(&exp_all(&lp), scale, &mut r.gradient);
    }
    Ok(r)
}

/// Desirable/undesirable pairs from the same state, at most `cap` per state.
pub fn build_pairs<'a>(samples: &[&'a Sample], cap: usize) -> Vec<(&'a Sample, &'a Sample)> {
    let mut by_state: BTreeMap<&str, (Vec<&'a Sample>, Vec<&'a Sample>)> = BTreeMap::new();
    for &s in samples {
        let e = by_state.entry(s.key.state_part()).or_default();
        if s.is_desirable() {
            e.0.push(s);
        } else {
            e.1.push(s);
        }
    }
    let mut pairs = Vec::new();
    for (good, bad) in by_state.values() {
        let mut taken = 0;
        'outer: for &g in good {
            for &b in bad {
                if taken == cap {
                    break 'outer;
                }
                pairs.push((g, b));
                taken += 1;
            }
        }
    }
    pairs
}

pub fn dpo_loss(theta: &[f64], theta_ref: &[f64], pairs: &[(&Sample, &Sample)], beta: f64) -> Result<LossReport> {
    if pairs.is_empty() {
        return Err(Error::NoPairs);
    }
    let n = pairs.len() as f64;
    let mut r = LossReport::new(theta.len());
    r.n_desirable = pairs.len();
    r.n_undesirable = pairs.len();
    for (good, bad) in pairs {
        if good.key.state_part() != bad.key.state_part() {
            return Err(Error::InvalidParameter("pair members come from different states".into()));
        }
        let lpg = good.log_probs(theta);
        let lpb = bad.log_probs(theta);
        let rg = lpg[good.chosen] - ref_log_prob(good, &good.log_probs(theta_ref))?;
        let rb = lpb[bad.chosen] - ref_log_prob(bad, &bad.log_probs(theta_ref))?;
        let m = beta * (rg - rb);
        r.loss -= log_sigmoid(m) / n;
        let scale = -(1.0 - sigmoid(m)) * beta / n;
        good.add_grad(&exp_all(&lpg), scale, &mut r.gradient);
        bad.add_grad(&exp_all(&lpb), -scale, &mut r.gradient);
    }
    Ok(r)
}

/// Per-step rewards: the winner's step in round `t` gets
/// `(1 - g) g^(T - t) / (1 - g^(T + 1))`, the loser's the negation, ties 0.
/// A round is one move by each player, so ply `j` is in round `j / 2 + 1`
/// and `T` is the number of rounds.
pub fn spag_assign_rewards(trajectory: &Trajectory, gamma: f64) -> Result<Vec<f64>> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!("gamma must be in (0, 1), got {gamma}")));
    }
    let n = trajectory.steps.len();
    let rounds = n.div_ceil(2) as i32;
    let norm = (1.0 - gamma) / (1.0 - gamma.powi(rounds + 1));
    Ok(trajectory
        .steps
        .iter()
        .enumerate()
        .map(|(j, step)| {
            let t = (j / 2 + 1) as i32;
            let magnitude = norm * gamma.powi(rounds - t);
            match trajectory.outcome.result_for(step.actor) {
                crate::games::GameResult::Win => magnitude,
                crate::games::GameResult::Lose => -magnitude,
                crate::games::GameResult::Tie => 0.0,
            }
        })
        .collect())
}

/// `-sum_seat w_seat * mean_i [ratio_i * A_i - beta2 * KL_i]` with
/// `ratio = pi_theta / pi_ref` at the taken action and `KL` the exact
/// per-state divergence. Each seat present gets weight 1/2 (1 if alone).
pub fn spag_loss(theta: &[f64], theta_ref: &[f64], samples: &[&Sample], beta2: f64) -> Result<LossReport> {
    if samples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut per_seat = [0usize; 2];
    for s in samples {
        per_seat[s.seat.index()] += 1;
    }
    let seats = per_seat.iter().filter(|&&c| c > 0).count() as f64;
    let mut r = LossReport::new(theta.len());
    r.count(samples);
    for s in samples {
        let w = 1.0 / (seats * per_seat[s.seat.index()] as f64);
        let lp = s.log_probs(theta);
        let lq = s.log_probs(theta_ref);
        let probs = exp_all(&lp);
        let ratio = (lp[s.chosen] - ref_log_prob(s, &lq)?).exp();
        let divergence = kl(&lp, &lq);
        r.loss -= w * (ratio * s.reward - beta2 * divergence);
        // d ratio = ratio * d log pi(a)
        s.add_grad(&probs, -w * ratio * s.reward, &mut r.gradient);
        // d KL = sum_b p_b (d_b - KL) phi_b, d_b = log p_b - log q_b
        let scale = w * beta2;
        for (b, fs) in s.table.features.iter().enumerate() {
            let coef = scale * probs[b] * (lp[b] - lq[b] - divergence);
            for &(i, v) in fs {
                r.gradient[i] += coef * v;
            }
        }
    }
    Ok(r)
}
