//! Dataset resampling: per-game balancing and class-count scaling.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::GameKind;
use crate::interaction::Trajectory;
use crate::rewards::{Label, LabeledDataset, LabeledStep};
use crate::seed;

/// Every original index once, plus `target - n` draws with replacement.
fn upsample<R: Rng>(n: usize, target: usize, rng: &mut R) -> Vec<usize> {
    let mut out: Vec<usize> = (0..n).collect();
    if n > 0 {
        out.extend((n..target).map(|_| rng.random_range(0..n)));
    }
    out
}

fn resample<R: Rng>(n: usize, target: usize, rng: &mut R) -> Vec<usize> {
    if target >= n {
        upsample(n, target, rng)
    } else {
        let mut picked = index::sample(rng, n, target).into_vec();
        picked.sort_unstable();
        picked
    }
}

fn pick(steps: &[&LabeledStep], indices: Vec<usize>) -> Vec<LabeledStep> {
    indices.into_iter().map(|i| steps[i].clone()).collect()
}

/// Equalizes per-game counts at `total / games` (the remainder goes to the
/// first games in order), upsampling small games and downsampling large ones.
pub fn balance_by_game(dataset: &LabeledDataset, seed: u64) -> LabeledDataset {
    let mut by_game: BTreeMap<GameKind, Vec<&LabeledStep>> = BTreeMap::new();
    for s in &dataset.steps {
        by_game.entry(s.game).or_default().push(s);
    }
    if by_game.len() <= 1 {
        return dataset.clone();
    }
    let total = dataset.steps.len();
    let (base, extra) = (total / by_game.len(), total % by_game.len());
    let mut steps = Vec::with_capacity(total);
    for (i, (game, group)) in by_game.iter().enumerate() {
        let target = base + (i < extra) as usize;
        let mut rng = seed::rng(seed::combine(seed, game.index() as u64));
        steps.extend(pick(group, resample(group.len(), target, &mut rng)));
    }
    LabeledDataset { steps }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScaleMode {
    /// Grow to `total` samples keeping the desirable:undesirable ratio.
    Scale1 { total: usize },
    /// Grow each class to its own target.
    Scale2 { desirable: usize, undesirable: usize },
}

/// Class targets for `mode` given current counts.
pub fn scale_targets(n_desirable: usize, n_undesirable: usize, mode: ScaleMode) -> Result<(usize, usize)> {
    let (d, u) = match mode {
        ScaleMode::Scale1 { total } => {
            let current = n_desirable + n_undesirable;
            if current == 0 {
                return Err(Error::EmptyBatch);
            }
            let d = (total as f64 * n_desirable as f64 / current as f64).round() as usize;
            (d, total.saturating_sub(d))
        }
        ScaleMode::Scale2 { desirable, undesirable } => (desirable, undesirable),
    };
    if d < n_desirable || u < n_undesirable {
        return Err(Error::InvalidParameter(format!(
            "scaling targets ({d}, {u}) are below the current counts ({n_desirable}, {n_undesirable}); only upsampling is supported"
        )));
    }
    Ok((d, u))
}

/// Upsamples each label class with replacement to the targets of `mode`.
pub fn scale_dataset(dataset: &LabeledDataset, mode: ScaleMode, seed: u64) -> Result<LabeledDataset> {
    let good: Vec<&LabeledStep> = dataset.steps.iter().filter(|s| s.is_desirable()).collect();
    let bad: Vec<&LabeledStep> = dataset.steps.iter().filter(|s| !s.is_desirable()).collect();
    let (d, u) = scale_targets(good.len(), bad.len(), mode)?;
    if (d > 0 && good.is_empty()) || (u > 0 && bad.is_empty()) {
        return Err(Error::InvalidParameter("cannot upsample an empty class".into()));
    }
    let mut rng = seed::rng(seed);
    let mut steps = pick(&good, upsample(good.len(), d, &mut rng));
    steps.extend(pick(&bad, upsample(bad.len(), u, &mut rng)));
    Ok(LabeledDataset { steps })
}

/// Every learner step of every won trajectory, labeled desirable. The
/// coarser alternative to reward-thresholded behavioral-cloning data.
pub fn winning_trajectory_steps(trajectories: &[Trajectory]) -> LabeledDataset {
    let mut steps = Vec::new();
    for t in trajectories {
        let counted = if t.learner.iter().any(|&l| l) { t.learner } else { [true, true] };
        let mut history = Vec::new();
        for step in &t.steps {
            let p = step.actor;
            if counted[p.index()] && t.outcome.result_for(p) == crate::games::GameResult::Win {
                steps.push(LabeledStep {
                    game: t.game,
                    key: step.key.clone(),
                    options: t.options,
                    chance_seed: t.seeds.chance,
                    history: history.clone(),
                    action: step.action.clone(),
                    reward: 1.0,
                    label: Label::Desirable,
                    n_all: 1,
                });
            }
            history.push(step.action.clone());
        }
    }
    LabeledDataset { steps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{GameOptions, StepKey};

    fn fake(game: GameKind, n: usize, label: Label) -> Vec<LabeledStep> {
        (0..n)
            .map(|i| LabeledStep {
                game,
                key: StepKey(format!("{game}|{i}|x")),
                options: GameOptions::default(),
                chance_seed: 0,
                history: vec![],
                action: String::new(),
                reward: 0.0,
                label,
                n_all: 1,
            })
            .collect()
    }

    #[test]
    fn balancing_equalizes_and_preserves_total() {
        let mut steps = fake(GameKind::TicTacToe, 100, Label::Desirable);
        steps.extend(fake(GameKind::Nim, 300, Label::Undesirable));
        let ds = LabeledDataset { steps };
        let out = balance_by_game(&ds, 3);
        let counts = out.count_by_game();
        assert_eq!(counts[&GameKind::TicTacToe].0, 200);
        assert_eq!(counts[&GameKind::Nim].1, 200);
        assert_eq!(out.steps.len(), 400);
        assert_eq!(out, balance_by_game(&ds, 3));
        // the small game keeps every original example
        for i in 0..100 {
            let k = StepKey(format!("tictactoe|{i}|x"));
            assert!(out.steps.iter().any(|s| s.key == k));
        }
    }

    #[test]
    fn balancing_uneven_total_and_single_game() {
        let mut steps = fake(GameKind::TicTacToe, 10, Label::Desirable);
        steps.extend(fake(GameKind::Nim, 3, Label::Desirable));
        steps.extend(fake(GameKind::KuhnPoker, 8, Label::Desirable));
        let out = balance_by_game(&LabeledDataset { steps }, 0);
        let sizes: Vec<usize> = out.count_by_game().values().map(|c| c.0).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 21);
        assert!(sizes.iter().all(|&c| c == 7));
        let single = LabeledDataset {
            steps: fake(GameKind::Nim, 5, Label::Desirable),
        };
        assert_eq!(balance_by_game(&single, 1), single);
    }

    #[test]
    fn scale1_keeps_ratio() {
        let (d, u) = scale_targets(5448, 14999, ScaleMode::Scale1 { total: 36116 }).unwrap();
        assert_eq!(d + u, 36116);
        // ratio-preserving oracle: d / total == 5448 / 20447 to rounding
        let exact = 36116.0 * 5448.0 / (5448.0 + 14999.0);
        assert!((d as f64 - exact).abs() <= 0.5);
        assert_eq!(scale_targets(5448, 14999, ScaleMode::Scale1 { total: 20447 }).unwrap(), (5448, 14999));
        assert!(scale_targets(10, 10, ScaleMode::Scale1 { total: 5 }).is_err());
    }

    #[test]
    fn scale2_hits_targets() {
        let mut steps = fake(GameKind::TicTacToe, 12, Label::Desirable);
        steps.extend(fake(GameKind::TicTacToe, 20, Label::Undesirable));
        let ds = LabeledDataset { steps };
        let out = scale_dataset(
            &ds,
            ScaleMode::Scale2 {
                desirable: 40,
                undesirable: 50,
            },
            9,
        )
        .unwrap();
        assert_eq!((out.n_desirable(), out.n_undesirable()), (40, 50));
        assert_eq!(scale_dataset(&ds, ScaleMode::Scale1 { total: 32 }, 1).unwrap().steps.len(), 32);
        assert!(scale_dataset(&ds, ScaleMode::Scale2 { desirable: 5, undesirable: 50 }, 9).is_err());
    }
}
