//! Linear softmax policy over legal actions.
//!
//! `logit(s, a) = theta . phi(s, a)`, and the action distribution at
//! temperature `tau` is `softmax(logits / tau)` over the legal actions of `s`
//! in canonical order. `theta` is split into one block per game.

pub mod features;

use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::games::{Action, GameKind, GameOptions, GameState};
use crate::seed;
pub use features::Feature;

const CHECKPOINT_MAGIC: &str = "scopal-policy v1";

/// Where each game's parameters live inside `theta`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    offsets: [usize; 6],
    dims: [usize; 6],
    options: GameOptions,
}

impl Layout {
    pub fn new(options: &GameOptions) -> Result<Self> {
        options.validate()?;
        let mut offsets = [0; 6];
        let mut dims = [0; 6];
        let mut next = 0;
        for game in GameKind::ALL_BY_INDEX {
            let i = game.index();
            dims[i] = features::dimension(game, options);
            offsets[i] = next;
            next += dims[i];
        }
        Ok(Self {
            offsets,
            dims,
            options: *options,
        })
    }

    pub fn block(&self, game: GameKind) -> Range<usize> {
        let i = game.index();
        self.offsets[i]..self.offsets[i] + self.dims[i]
    }

    pub fn total(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn options(&self) -> &GameOptions {
        &self.options
    }
}

/// Legal actions of one state with their global feature vectors; the unit all
/// losses work on, so that features are computed once per training example.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub actions: Vec<Action>,
    pub features: Vec<Vec<Feature>>,
}

impl FeatureTable {
    pub fn logits(&self, theta: &[f64]) -> Vec<f64> {
        self.features
            .iter()
            .map(|fs| fs.iter().map(|&(i, v)| theta[i] * v).sum())
            .collect()
    }

    /// Log-probabilities at temperature `tau`.
    pub fn log_probs(&self, theta: &[f64], tau: f64) -> Vec<f64> {
        log_softmax(&self.logits(theta), tau)
    }

    pub fn index_of(&self, action: Action) -> Option<usize> {
        self.actions.iter().position(|&a| a == action)
    }

    /// Adds `scale * d log pi(actions[chosen]) / d theta` into `grad`, given
    /// this table's probabilities `probs` at temperature `tau`.
    pub fn add_log_prob_grad(&self, probs: &[f64], chosen: usize, tau: f64, scale: f64, grad: &mut [f64]) {
        for &(i, v) in &self.features[chosen] {
            grad[i] += scale * v / tau;
        }
        for (fs, &p) in self.features.iter().zip(probs) {
            let w = scale * p / tau;
            for &(i, v) in fs {
                grad[i] -= w * v;
            }
        }
    }
}

/// Numerically stable `log softmax(z / tau)`.
pub fn log_softmax(logits: &[f64], tau: f64) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|z| ((z - max) / tau).exp()).sum::<f64>().ln();
    logits.iter().map(|z| (z - max) / tau - lse).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    theta: Vec<f64>,
    layout: Layout,
    version: u64,
}

fn check_temperature(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("temperature must be positive, got {tau}")))
    }
}

impl Policy {
    /// The uniform policy, `theta = 0`.
    pub fn new(options: &GameOptions) -> Result<Self> {
        let layout = Layout::new(options)?;
        Ok(Self {
            theta: vec![0.0; layout.total()],
            layout,
            version: 0,
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn set_version(&mut self, version: u64) {
        self.version = version;
    }

    fn check_state(&self, state: &GameState) -> Result<()> {
        if state.is_terminal() {
            return Err(Error::TerminalState);
        }
        if state.game() == GameKind::Breakthrough {
            let o = self.layout.options;
            if let crate::games::Board::Breakthrough(b) = state.board() {
                if (b.columns(), b.rows()) != (o.breakthrough_columns as usize, o.breakthrough_rows as usize) {
                    return Err(Error::InvalidParameter(format!(
                        "policy expects a {}x{} Breakthrough board, got {}x{}",
                        o.breakthrough_columns,
                        o.breakthrough_rows,
                        b.columns(),
                        b.rows()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Global feature vector of `(state, action)`.
    pub fn features(&self, state: &GameState, action: Action) -> Result<Vec<Feature>> {
        self.check_state(state)?;
        if !state.is_legal(action) {
            return Err(Error::IllegalAction {
                game: state.game().as_str(),
                action: action.to_string(),
                reason: "not a legal action in this state".into(),
            });
        }
        let offset = self.layout.block(state.game()).start;
        let mut out = Vec::new();
        features::encode(state, action, &mut out);
        for f in &mut out {
            f.0 += offset;
        }
        Ok(out)
    }

    pub fn feature_table(&self, state: &GameState) -> Result<FeatureTable> {
        self.check_state(state)?;
        let offset = self.layout.block(state.game()).start;
        let actions = state.legal_actions();
        let features = actions
            .iter()
            .map(|&a| {
                let mut v = Vec::new();
                features::encode(state, a, &mut v);
                for f in &mut v {
                    f.0 += offset;
                }
                v
            })
            .collect();
        Ok(FeatureTable { actions, features })
    }

    /// Probabilities over `state.legal_actions()` in canonical order.
    pub fn action_distribution(&self, state: &GameState, temperature: f64) -> Result<Vec<f64>> {
        check_temperature(temperature)?;
        let table = self.feature_table(state)?;
        Ok(table.log_probs(&self.theta, temperature).into_iter().map(f64::exp).collect())
    }

    pub fn log_prob(&self, state: &GameState, action: Action, temperature: f64) -> Result<f64> {
        Ok(self.log_prob_and_grad(state, action, temperature)?.0)
    }

    /// `log pi(action | state)` and its gradient, a full-length vector that is
    /// zero outside the block of `state`'s game.
    pub fn log_prob_and_grad(&self, state: &GameState, action: Action, temperature: f64) -> Result<(f64, Vec<f64>)> {
        check_temperature(temperature)?;
        let table = self.feature_table(state)?;
        let chosen = table.index_of(action).ok_or_else(|| Error::IllegalAction {
            game: state.game().as_str(),
            action: action.to_string(),
            reason: "not a legal action in this state".into(),
        })?;
        let lp = table.log_probs(&self.theta, temperature);
        let probs: Vec<f64> = lp.iter().map(|x| x.exp()).collect();
        let mut grad = vec![0.0; self.dim()];
        table.add_log_prob_grad(&probs, chosen, temperature, 1.0, &mut grad);
        Ok((lp[chosen], grad))
    }

    /// Draws an action by inverting the CDF with one uniform from `seed`.
    pub fn sample_action(&self, state: &GameState, temperature: f64, seed: u64) -> Result<Action> {
        let probs = self.action_distribution(state, temperature)?;
        let actions = state.legal_actions();
        let u: f64 = seed::rng(seed).random();
        let mut acc = 0.0;
        for (a, p) in actions.iter().zip(&probs) {
            acc += p;
            if u < acc {
                return Ok(*a);
            }
        }
        Ok(*actions.last().expect("non-terminal state has actions"))
    }

    /// Text checkpoint. Values use Rust's shortest round-trip float format,
    /// so save followed by load is bit-exact.
    pub fn to_checkpoint(&self) -> String {
        let o = self.layout.options;
        let mut s = String::new();
        writeln!(s, "{CHECKPOINT_MAGIC}").unwrap();
        writeln!(s, "version {}", self.version).unwrap();
        writeln!(s, "breakthrough {}x{}", o.breakthrough_columns, o.breakthrough_rows).unwrap();
        for game in GameKind::ALL_BY_INDEX {
            let block = self.layout.block(game);
            writeln!(s, "block {} {}", game.as_str(), block.len()).unwrap();
            for v in &self.theta[block] {
                writeln!(s, "{v:?}").unwrap();
            }
        }
        s
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Checkpoint(msg.to_string());
        let mut lines = text.lines();
        if lines.next() != Some(CHECKPOINT_MAGIC) {
            return Err(bad("missing header line"));
        }
        let version = lines
            .next()
            .and_then(|l| l.strip_prefix("version "))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("bad version line"))?;
        let (cols, rows) = lines
            .next()
            .and_then(|l| l.strip_prefix("breakthrough "))
            .and_then(|v| v.split_once('x'))
            .and_then(|(c, r)| Some((c.parse().ok()?, r.parse().ok()?)))
            .ok_or_else(|| bad("bad breakthrough line"))?;
        let options = GameOptions {
            breakthrough_columns: cols,
            breakthrough_rows: rows,
        };
        let mut policy = Policy::new(&options)?;
        policy.version = version;
        for game in GameKind::ALL_BY_INDEX {
            let header = lines.next().ok_or_else(|| bad("truncated"))?;
            let expected = format!("block {} {}", game.as_str(), policy.layout.block(game).len());
            if header != expected {
                return Err(Error::Checkpoint(format!("expected `{expected}`, found `{header}`")));
            }
            for i in policy.layout.block(game) {
                let line = lines.next().ok_or_else(|| bad("truncated"))?;
                policy.theta[i] = line
                    .parse()
                    .map_err(|_| Error::Checkpoint(format!("bad value `{line}`")))?;
            }
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(bad("trailing data"));
        }
        Ok(policy)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&std::fs::read_to_string(path)?)
    }
}
