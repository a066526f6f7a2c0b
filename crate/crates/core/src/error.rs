use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown game identifier `{0}`")]
    UnknownGame(String),

    #[error("illegal action `{action}` in {game}: {reason}")]
    IllegalAction {
        game: &'static str,
        action: String,
        reason: String,
    },

    #[error("cannot parse `{text}` as a {game} action")]
    BadNotation { game: &'static str, text: String },

    #[error("state is terminal; no action can be chosen")]
    TerminalState,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid agent spec `{0}` (expected random, self, minimax, mcts:<n> or policy:<path>)")]
    BadAgentSpec(String),

    #[error("corrupt trajectory record: {0}")]
    CorruptTrajectory(String),

    #[error("empty batch")]
    EmptyBatch,

    #[error("reference policy assigns zero probability to `{0}`")]
    ZeroReferenceProbability(String),

    #[error("no desirable/undesirable pairs share a state")]
    NoPairs,

    #[error("training diverged: non-finite loss in {stage} epoch {epoch}")]
    Diverged { stage: String, epoch: usize },

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("{0} is not solvable by the bundled exact solver")]
    Unsolvable(&'static str),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
