//! Mini-batch gradient descent over the refinement objectives.

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::data::{balance_by_game, winning_trajectory_steps};
use super::losses::{
    balance_lambdas, bc_loss, build_pairs, dpo_loss, kto_loss, spag_assign_rewards, spag_loss, KtoParams, LossReport,
    Sample, Z0Estimator,
};
use crate::error::{Error, Result};
use crate::interaction::Trajectory;
use crate::parallel::Execution;
use crate::policy::Policy;
use crate::rewards::{Label, LabeledDataset, LabeledStep};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Behavioral cloning on desirable steps, then KTO against the cloned policy.
    TwoStage,
    /// KTO against the initial policy, no cloning stage.
    DirectKto,
    /// Cloning and KTO losses summed in one stage.
    JointLoss,
    BcOnly,
    /// Behavioral cloning, then DPO on same-state pairs.
    BcDpo,
    /// Outcome-discounted rewards with an importance-weighted objective;
    /// trains from trajectories rather than labeled steps.
    Spag,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::TwoStage => "two_stage",
            Method::DirectKto => "direct_kto",
            Method::JointLoss => "joint_loss",
            Method::BcOnly => "bc_only",
            Method::BcDpo => "bc_dpo",
            Method::Spag => "spag",
        }
    }
}

/// Which steps the cloning stage imitates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcData {
    /// Steps whose estimated reward clears the threshold.
    RewardBased,
    /// Every learner step of every won trajectory.
    TrajectoryBased,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub grad_accum: usize,
    pub epochs: usize,
    /// Fraction of updates over which the step size ramps up linearly.
    pub warmup_ratio: f64,
}

impl StageConfig {
    pub const BC: StageConfig = StageConfig {
        learning_rate: 1e-2,
        batch_size: 2,
        grad_accum: 1,
        epochs: 5,
        warmup_ratio: 0.1,
    };

    pub const PREFERENCE: StageConfig = StageConfig {
        learning_rate: 1e-2,
        batch_size: 2,
        grad_accum: 8,
        epochs: 5,
        warmup_ratio: 0.0,
    };

    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite())
            || self.batch_size == 0
            || self.grad_accum == 0
            || self.epochs == 0
            || !(0.0..=1.0).contains(&self.warmup_ratio)
        {
            return Err(Error::Config(format!("invalid {name} stage settings: {self:?}")));
        }
        Ok(())
    }
}

/// A stage table in which omitted keys keep that stage's defaults.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialStage {
    learning_rate: Option<f64>,
    batch_size: Option<usize>,
    grad_accum: Option<usize>,
    epochs: Option<usize>,
    warmup_ratio: Option<f64>,
}

impl PartialStage {
    fn over(self, base: StageConfig) -> StageConfig {
        StageConfig {
            learning_rate: self.learning_rate.unwrap_or(base.learning_rate),
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            grad_accum: self.grad_accum.unwrap_or(base.grad_accum),
            epochs: self.epochs.unwrap_or(base.epochs),
            warmup_ratio: self.warmup_ratio.unwrap_or(base.warmup_ratio),
        }
    }
}

fn de_bc_stage<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<StageConfig, D::Error> {
    Ok(PartialStage::deserialize(d)?.over(StageConfig::BC))
}

fn de_preference_stage<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<StageConfig, D::Error> {
    Ok(PartialStage::deserialize(d)?.over(StageConfig::PREFERENCE))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub method: Method,
    #[serde(deserialize_with = "de_bc_stage")]
    pub bc: StageConfig,
    /// Settings of the preference stage (KTO, DPO, SPAG, joint loss).
    #[serde(deserialize_with = "de_preference_stage")]
    pub preference: StageConfig,
    pub beta: f64,
    /// Both weights must be given to override automatic balancing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_u: Option<f64>,
    pub z0: Z0Estimator,
    pub dpo_pair_cap: usize,
    pub spag_beta2: f64,
    pub spag_gamma: f64,
    pub bc_data: BcData,
    pub balance_games: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::TwoStage,
            bc: StageConfig::BC,
            preference: StageConfig::PREFERENCE,
            beta: 0.1,
            lambda_d: None,
            lambda_u: None,
            z0: Z0Estimator::ExactKl,
            dpo_pair_cap: 4,
            spag_beta2: 0.2,
            spag_gamma: 0.8,
            bc_data: BcData::RewardBased,
            balance_games: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.bc.validate("bc")?;
        self.preference.validate("preference")?;
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config("beta must be positive".into()));
        }
        if self.lambda_d.is_some() != self.lambda_u.is_some() {
            return Err(Error::Config("set both lambda_d and lambda_u, or neither".into()));
        }
        if let (Some(d), Some(u)) = (self.lambda_d, self.lambda_u) {
            if !(d > 0.0 && u > 0.0) {
                return Err(Error::Config("lambda weights must be positive".into()));
            }
        }
        if self.dpo_pair_cap == 0 {
            return Err(Error::Config("dpo_pair_cap must be at least 1".into()));
        }
        if self.spag_beta2.is_nan() || self.spag_beta2 < 0.0 || !(0.0 < self.spag_gamma && self.spag_gamma < 1.0) {
            return Err(Error::Config("spag_beta2 must be >= 0 and spag_gamma in (0, 1)".into()));
        }
        Ok(())
    }

    fn lambdas(&self, n_d: usize, n_u: usize) -> (f64, f64) {
        match (self.lambda_d, self.lambda_u) {
            (Some(d), Some(u)) => (d, u),
            _ => balance_lambdas(n_d, n_u),
        }
    }
}

/// One row of the metrics log, per stage and epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub stage: String,
    pub epoch: usize,
    pub loss: f64,
    pub n_d: usize,
    pub n_u: usize,
    pub lambda_d: Option<f64>,
    pub lambda_u: Option<f64>,
    pub z0: Option<f64>,
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: Policy,
    pub metrics: Vec<MetricRow>,
}

struct Stage<'a> {
    name: &'a str,
    config: StageConfig,
    seed: u64,
}

/// Shuffled mini-batches with gradient accumulation. Each update applies the
/// mean of `grad_accum` batch gradients. Returns per-epoch (mean loss, mean z0).
fn descend<F>(policy: &mut Policy, n: usize, stage: &Stage, mut loss: F) -> Result<Vec<(f64, Option<f64>)>>
where
    F: FnMut(&[f64], &[usize]) -> Result<LossReport>,
{
    let cfg = stage.config;
    let batches_per_epoch = n.div_ceil(cfg.batch_size);
    let updates_per_epoch = batches_per_epoch.div_ceil(cfg.grad_accum);
    let total_updates = updates_per_epoch * cfg.epochs;
    let warmup = (cfg.warmup_ratio * total_updates as f64).ceil() as usize;
    let mut update = 0usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut per_epoch = Vec::with_capacity(cfg.epochs);
    let dim = policy.dim();
    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut seed::rng(seed::combine(stage.seed, epoch as u64)));
        let (mut loss_sum, mut z0_sum, mut z0_seen) = (0.0, 0.0, false);
        let mut acc = vec![0.0; dim];
        let mut in_acc = 0usize;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let r = loss(policy.theta(), batch)?;
            if !r.loss.is_finite() {
                return Err(Error::Diverged {
                    stage: stage.name.to_string(),
                    epoch: epoch + 1,
                });
            }
            loss_sum += r.loss;
            if let Some(z) = r.z0 {
                z0_sum += z;
                z0_seen = true;
            }
            for (a, g) in acc.iter_mut().zip(&r.gradient) {
                *a += g;
            }
            in_acc += 1;
            if in_acc == cfg.grad_accum || b + 1 == batches_per_epoch {
                let scale = if warmup > 0 && update < warmup {
                    (update + 1) as f64 / warmup as f64
                } else {
                    1.0
                };
                let step = cfg.learning_rate * scale / in_acc as f64;
                for (t, a) in policy.theta_mut().iter_mut().zip(acc.iter_mut()) {
                    *t -= step * *a;
                    *a = 0.0;
                }
                if policy.theta().iter().any(|t| !t.is_finite()) {
                    return Err(Error::Diverged {
                        stage: stage.name.to_string(),
                        epoch: epoch + 1,
                    });
                }
                in_acc = 0;
                update += 1;
            }
        }
        let batches = batches_per_epoch as f64;
        per_epoch.push((loss_sum / batches, z0_seen.then(|| z0_sum / batches)));
    }
    Ok(per_epoch)
}

fn build_samples(policy: &Policy, steps: &[LabeledStep], exec: Execution) -> Result<Vec<Sample>> {
    exec.map_slice(steps, |s| Sample::from_labeled(policy, s)).into_iter().collect()
}

fn bc_stage(policy: &mut Policy, samples: &[Sample], cfg: &TrainConfig, metrics: &mut Vec<MetricRow>) -> Result<()> {
    let good: Vec<&Sample> = samples.iter().filter(|s| s.is_desirable()).collect();
    if good.is_empty() {
        return Ok(());
    }
    let stage = Stage {
        name: "bc",
        config: cfg.bc,
        seed: seed::combine(cfg.seed, 1),
    };
    let epochs = descend(policy, good.len(), &stage, |theta, idx| {
        let batch: Vec<&Sample> = idx.iter().map(|&i| good[i]).collect();
        bc_loss(theta, &batch)
    })?;
    for (e, (loss, _)) in epochs.into_iter().enumerate() {
        metrics.push(MetricRow {
            stage: "bc".into(),
            epoch: e + 1,
            loss,
            n_d: good.len(),
            n_u: 0,
            lambda_d: None,
            lambda_u: None,
            z0: None,
        });
    }
    Ok(())
}

fn kto_stage(
    policy: &mut Policy,
    reference: &Policy,
    samples: &[Sample],
    cfg: &TrainConfig,
    with_bc: bool,
    metrics: &mut Vec<MetricRow>,
) -> Result<()> {
    let n_d = samples.iter().filter(|s| s.is_desirable()).count();
    let n_u = samples.len() - n_d;
    let (lambda_d, lambda_u) = cfg.lambdas(n_d, n_u);
    let params = KtoParams {
        z0: cfg.z0,
        ..KtoParams::new(cfg.beta, lambda_d, lambda_u)
    };
    let name = if with_bc { "joint" } else { "kto" };
    let stage = Stage {
        name,
        config: cfg.preference,
        seed: seed::combine(cfg.seed, 2),
    };
    let theta_ref = reference.theta();
    let epochs = descend(policy, samples.len(), &stage, |theta, idx| {
        let batch: Vec<&Sample> = idx.iter().map(|&i| &samples[i]).collect();
        let mut r = kto_loss(theta, theta_ref, &batch, &params)?;
        if with_bc {
            let good: Vec<&Sample> = batch.iter().copied().filter(|s| s.is_desirable()).collect();
            if !good.is_empty() {
                let b = bc_loss(theta, &good)?;
                r.loss += b.loss;
                for (g, x) in r.gradient.iter_mut().zip(b.gradient) {
                    *g += x;
                }
            }
        }
        Ok(r)
    })?;
    for (e, (loss, z0)) in epochs.into_iter().enumerate() {
        metrics.push(MetricRow {
            stage: name.into(),
            epoch: e + 1,
            loss,
            n_d,
            n_u,
            lambda_d: Some(lambda_d),
            lambda_u: Some(lambda_u),
            z0,
        });
    }
    Ok(())
}

fn dpo_stage(
    policy: &mut Policy,
    reference: &Policy,
    samples: &[Sample],
    cfg: &TrainConfig,
    metrics: &mut Vec<MetricRow>,
) -> Result<()> {
    let all: Vec<&Sample> = samples.iter().collect();
    let pairs = build_pairs(&all, cfg.dpo_pair_cap);
    if pairs.is_empty() {
        return Err(Error::NoPairs);
    }
    let stage = Stage {
        name: "dpo",
        config: cfg.preference,
        seed: seed::combine(cfg.seed, 3),
    };
    let theta_ref = reference.theta();
    let epochs = descend(policy, pairs.len(), &stage, |theta, idx| {
        let batch: Vec<(&Sample, &Sample)> = idx.iter().map(|&i| pairs[i]).collect();
        dpo_loss(theta, theta_ref, &batch, cfg.beta)
    })?;
    for (e, (loss, _)) in epochs.into_iter().enumerate() {
        metrics.push(MetricRow {
            stage: "dpo".into(),
            epoch: e + 1,
            loss,
            n_d: pairs.len(),
            n_u: pairs.len(),
            lambda_d: None,
            lambda_u: None,
            z0: None,
        });
    }
    Ok(())
}

/// Trains a copy of `initial` on a labeled dataset. `bc_steps` replaces the
/// cloning data when `cfg.bc_data` asks for trajectory-based imitation.
/// A cloning stage with no desirable steps is skipped.
pub fn train(
    initial: &Policy,
    data: &LabeledDataset,
    bc_steps: Option<&LabeledDataset>,
    cfg: &TrainConfig,
    exec: Execution,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if cfg.method == Method::Spag {
        return Err(Error::Config("the spag method trains from trajectories".into()));
    }
    if data.steps.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let data = if cfg.balance_games {
        balance_by_game(data, seed::combine(cfg.seed, 4))
    } else {
        data.clone()
    };
    let samples = build_samples(initial, &data.steps, exec)?;
    let bc_samples = match (cfg.bc_data, bc_steps) {
        (BcData::TrajectoryBased, Some(steps)) => build_samples(initial, &steps.steps, exec)?,
        (BcData::TrajectoryBased, None) => {
            return Err(Error::Config("trajectory-based cloning needs the trajectory store".into()))
        }
        (BcData::RewardBased, _) => samples.clone(),
    };
    let mut policy = initial.clone();
    let mut metrics = Vec::new();
    match cfg.method {
        Method::TwoStage => {
            bc_stage(&mut policy, &bc_samples, cfg, &mut metrics)?;
            let reference = policy.clone();
            kto_stage(&mut policy, &reference, &samples, cfg, false, &mut metrics)?;
        }
        Method::DirectKto => kto_stage(&mut policy, initial, &samples, cfg, false, &mut metrics)?,
        Method::JointLoss => kto_stage(&mut policy, initial, &samples, cfg, true, &mut metrics)?,
        Method::BcOnly => bc_stage(&mut policy, &bc_samples, cfg, &mut metrics)?,
        Method::BcDpo => {
            bc_stage(&mut policy, &bc_samples, cfg, &mut metrics)?;
            let reference = policy.clone();
            dpo_stage(&mut policy, &reference, &samples, cfg, &mut metrics)?;
        }
        Method::Spag => unreachable!(),
    }
    policy.set_version(initial.version() + 1);
    Ok(TrainOutcome { policy, metrics })
}

/// SPAG samples: every learner step with its outcome-discounted reward.
pub fn spag_samples(policy: &Policy, trajectories: &[Trajectory], gamma: f64, exec: Execution) -> Result<Vec<Sample>> {
    let per_traj = exec.map_slice(trajectories, |t| -> Result<Vec<Sample>> {
        let rewards = spag_assign_rewards(t, gamma)?;
        let counted = if t.learner.iter().any(|&l| l) { t.learner } else { [true, true] };
        let mut state = crate::games::GameState::new(t.game, t.seeds.chance, &t.options);
        let mut out = Vec::new();
        for (step, reward) in t.steps.iter().zip(rewards) {
            let action = crate::games::Action::parse(t.game, &step.action)?;
            if counted[step.actor.index()] {
                let table = policy.feature_table(&state)?;
                let chosen = table
                    .index_of(action)
                    .ok_or_else(|| Error::CorruptTrajectory(format!("illegal step in episode {}", t.episode)))?;
                out.push(Sample {
                    game: t.game,
                    key: step.key.clone(),
                    table,
                    chosen,
                    label: if reward > 0.0 { Label::Desirable } else { Label::Undesirable },
                    seat: step.actor,
                    reward,
                });
            }
            state.apply_mut(action)?;
        }
        Ok(out)
    });
    let mut all = Vec::new();
    for v in per_traj {
        all.extend(v?);
    }
    Ok(all)
}

/// SPAG training against the behavior policy that produced the trajectories.
pub fn train_spag(behavior: &Policy, trajectories: &[Trajectory], cfg: &TrainConfig, exec: Execution) -> Result<TrainOutcome> {
    cfg.validate()?;
    let samples = spag_samples(behavior, trajectories, cfg.spag_gamma, exec)?;
    if samples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let stage = Stage {
        name: "spag",
        config: cfg.preference,
        seed: seed::combine(cfg.seed, 5),
    };
    let mut policy = behavior.clone();
    let theta_ref = behavior.theta().to_vec();
    let epochs = descend(&mut policy, samples.len(), &stage, |theta, idx| {
        let batch: Vec<&Sample> = idx.iter().map(|&i| &samples[i]).collect();
        spag_loss(theta, &theta_ref, &batch, cfg.spag_beta2)
    })?;
    let n_d = samples.iter().filter(|s| s.is_desirable()).count();
    let metrics = epochs
        .into_iter()
        .enumerate()
        .map(|(e, (loss, _))| MetricRow {
            stage: "spag".into(),
            epoch: e + 1,
            loss,
            n_d,
            n_u: samples.len() - n_d,
            lambda_d: None,
            lambda_u: None,
            z0: None,
        })
        .collect();
    policy.set_version(behavior.version() + 1);
    Ok(TrainOutcome { policy, metrics })
}

/// Builds the cloning set for `cfg.bc_data` from a trajectory store.
pub fn bc_steps_for(cfg: &TrainConfig, trajectories: &[Trajectory]) -> Option<LabeledDataset> {
    (cfg.bc_data == BcData::TrajectoryBased).then(|| winning_trajectory_steps(trajectories))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{GameKind, GameOptions};
    use crate::interaction::Matchup;
    use crate::opponents::AgentSpec;
    use crate::rewards::{label_store, Estimator};
    use std::sync::Arc;

    fn setup(games: &[GameKind], episodes: u64) -> (Policy, Vec<Trajectory>, LabeledDataset) {
        let p = Policy::new(&GameOptions::default()).unwrap();
        let m = Matchup::new(AgentSpec::SelfPlay, AgentSpec::SelfPlay, Some(Arc::new(p.clone())));
        let store = m.collect(games, episodes, 5, Execution::Sequential).unwrap();
        let ds = label_store(&store, &Estimator::default(), 0.5, 1, Execution::Sequential).unwrap();
        (p, store, ds)
    }

    #[test]
    fn every_method_runs_and_is_deterministic() {
        let (p, store, ds) = setup(&[GameKind::TicTacToe, GameKind::Nim], 40);
        for method in [Method::TwoStage, Method::DirectKto, Method::JointLoss, Method::BcOnly, Method::BcDpo] {
            let cfg = TrainConfig {
                method,
                ..TrainConfig::default()
            };
            let a = train(&p, &ds, None, &cfg, Execution::Sequential).unwrap();
            let b = train(&p, &ds, None, &cfg, Execution::Parallel).unwrap();
            assert_eq!(a.policy, b.policy, "{method:?}");
            assert_eq!(a.policy.version(), 1);
            assert!(!a.metrics.is_empty());
            assert_ne!(a.policy.theta(), p.theta());
        }
        let cfg = TrainConfig {
            method: Method::Spag,
            ..TrainConfig::default()
        };
        let a = train_spag(&p, &store, &cfg, Execution::Sequential).unwrap();
        assert_eq!(a.policy, train_spag(&p, &store, &cfg, Execution::Sequential).unwrap().policy);
    }

    #[test]
    fn two_stage_logs_both_stages_with_balanced_lambdas() {
        let (p, _, ds) = setup(&[GameKind::TicTacToe], 30);
        let out = train(&p, &ds, None, &TrainConfig::default(), Execution::Sequential).unwrap();
        let bc: Vec<_> = out.metrics.iter().filter(|r| r.stage == "bc").collect();
        let kto: Vec<_> = out.metrics.iter().filter(|r| r.stage == "kto").collect();
        assert_eq!((bc.len(), kto.len()), (5, 5));
        let r = kto[0];
        let (d, u) = (r.lambda_d.unwrap(), r.lambda_u.unwrap());
        assert!((d * r.n_d as f64 - u * r.n_u as f64).abs() < 1e-9);
        assert_eq!(d.max(u), 1.0);
        assert!(bc.last().unwrap().loss < bc[0].loss);
    }

    #[test]
    fn desirable_only_data_still_trains() {
        let (p, _, ds) = setup(&[GameKind::Nim], 20);
        let only_good = LabeledDataset {
            steps: ds.steps.into_iter().filter(|s| s.is_desirable()).collect(),
        };
        let out = train(&p, &only_good, None, &TrainConfig::default(), Execution::Sequential).unwrap();
        assert!(out.metrics.iter().all(|r| r.loss.is_finite()));
    }

    #[test]
    fn trajectory_based_cloning_needs_the_store() {
        let (p, store, ds) = setup(&[GameKind::TicTacToe], 20);
        let cfg = TrainConfig {
            bc_data: BcData::TrajectoryBased,
            ..TrainConfig::default()
        };
        assert!(train(&p, &ds, None, &cfg, Execution::Sequential).is_err());
        let bc = bc_steps_for(&cfg, &store).unwrap();
        assert!(train(&p, &ds, Some(&bc), &cfg, Execution::Sequential).is_ok());
    }

    #[test]
    fn divergence_is_reported() {
        let (p, _, ds) = setup(&[GameKind::TicTacToe], 10);
        let mut cfg = TrainConfig::default();
        cfg.bc.learning_rate = 1e308;
        cfg.bc.warmup_ratio = 0.0;
        let err = train(&p, &ds, None, &cfg, Execution::Sequential).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }), "{err}");
    }

    #[test]
    fn bad_configs_are_rejected() {
        let cfg = TrainConfig { lambda_d: Some(1.0), ..Default::default() };
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::default();
        cfg.preference.batch_size = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn metrics_csv_has_fixed_columns() {
        let (p, _, ds) = setup(&[GameKind::Nim], 10);
        let out = train(&p, &ds, None, &TrainConfig::default(), Execution::Sequential).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        write_metrics_csv(&path, &out.metrics).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("stage,epoch,loss,n_d,n_u,lambda_d,lambda_u,z0\n"));
    }
}
