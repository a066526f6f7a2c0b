//! `scopal`: interact, label, train and evaluate from the command line.

mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use scopal::config::ExperimentConfig;
use scopal::eval::{
    head_to_head, iterate, mean_win_rate, opponent_sweep, regret, sweep::refine_round, sweep::round_checkpoint,
    tournament, write_head2head_csv, write_iterate_csv, write_regret_csv, write_sweep_csv, write_tournament_csv,
    MatchReport,
};
use scopal::games::GameKind;
use scopal::interaction::{self, Matchup};
use scopal::opponents::{AgentSpec, PolicyPool};
use scopal::parallel::{with_jobs, Execution};
use scopal::policy::Policy;
use scopal::refine::{bc_steps_for, train, train_spag, write_metrics_csv, Method};
use scopal::rewards::{label_store, LabeledDataset};
use scopal::{Error, Result};

use run::{Inputs, RunDir};

#[derive(Parser)]
#[command(name = "scopal", version, about = "Self-play step-level policy optimization for two-player games")]
struct Cli {
    /// Experiment config (TOML). Defaults apply when omitted.
    #[arg(long, global = true, env = "SCOPAL_CONFIG")]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true, env = "SCOPAL_SEED")]
    seed: Option<u64>,
    /// Worker threads; 1 runs everything on the calling thread.
    #[arg(long, global = true, env = "SCOPAL_JOBS")]
    jobs: Option<usize>,
    /// Root for run directories, overriding the config.
    #[arg(long, global = true, env = "SCOPAL_OUT")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PolicyArg {
    /// Starting policy checkpoint; the zero policy when omitted.
    #[arg(long)]
    policy: Option<PathBuf>,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Play the policy against the configured opponent; writes traj.jsonl.
    Interact(PolicyArg),
    /// Estimate step rewards and labels from a trajectory store; writes labeled.jsonl.
    Estimate {
        #[arg(long)]
        trajectories: PathBuf,
    },
    /// Train a policy on labeled steps; writes policy.ckpt and metrics.csv.
    Train {
        #[arg(long)]
        labeled: Option<PathBuf>,
        /// Needed for trajectory-based cloning and for the spag method.
        #[arg(long)]
        trajectories: Option<PathBuf>,
        #[command(flatten)]
        policy: PolicyArg,
    },
    /// Tournament against the evaluation opponents; writes tournament.csv.
    Evaluate(PolicyArg),
    /// Refine from the same base against every ladder rung; writes sweep.csv.
    Sweep(PolicyArg),
    /// Pairwise win-rate matrix of the configured agents; writes head2head.csv.
    Head2head(PolicyArg),
    /// Repeated rounds against the previous checkpoint; writes iterate.csv.
    Iterate(PolicyArg),
    /// Exact-solver regret on Tic-Tac-Toe and Nim; writes regret.csv.
    Regret(PolicyArg),
    /// interact, estimate, train and evaluate in one run.
    Pipeline(PolicyArg),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Interact(_) => "interact",
            Command::Estimate { .. } => "estimate",
            Command::Train { .. } => "train",
            Command::Evaluate(_) => "evaluate",
            Command::Sweep(_) => "sweep",
            Command::Head2head(_) => "head2head",
            Command::Iterate(_) => "iterate",
            Command::Regret(_) => "regret",
            Command::Pipeline(_) => "pipeline",
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn base_policy(cfg: &ExperimentConfig, arg: &PolicyArg, inputs: &mut Inputs) -> Result<Arc<Policy>> {
    let policy = match &arg.policy {
        Some(p) => {
            inputs.add("policy", p)?;
            let policy = Policy::load(p)?;
            if *policy.layout().options() != cfg.options {
                return Err(Error::Config("checkpoint game options differ from the config".into()));
            }
            policy
        }
        None => Policy::new(&cfg.options)?,
    };
    Ok(Arc::new(policy))
}

/// Adds every `policy:` checkpoint the config refers to.
fn hash_policy_specs(cfg: &ExperimentConfig, inputs: &mut Inputs) -> Result<()> {
    let specs = std::iter::once(&cfg.opponent)
        .chain(&cfg.eval_opponents)
        .chain(&cfg.ladder)
        .chain(&cfg.head2head)
        .chain(std::iter::once(&cfg.regret_opponent));
    for spec in specs {
        if let AgentSpec::Policy(p) = spec {
            inputs.add(&spec.to_string(), p)?;
        }
    }
    Ok(())
}

fn print_reports(reports: &[MatchReport]) {
    for r in reports {
        println!("{:<13} {:<10} vs {:<12} win rate {:.3} ({}/{}/{})", r.game, r.agent, r.opponent, r.win_rate, r.n_win, r.n_lose, r.n_tie);
    }
    println!("mean win rate {:.4}", mean_win_rate(reports));
}

fn interact_store(cfg: &ExperimentConfig, current: &Arc<Policy>, exec: Execution) -> Result<Vec<interaction::Trajectory>> {
    let sweep = cfg.sweep_config();
    let matchup = Matchup {
        agent1: AgentSpec::SelfPlay,
        agent2: cfg.opponent.clone(),
        current: Some(current.clone()),
        pool: PolicyPool::new(),
        temperature: cfg.interact_temperature,
        mcts: cfg.mcts,
        options: cfg.options,
    };
    matchup.collect(&sweep.games, sweep.episodes, sweep.master_seed, exec)
}

fn write_trajectories(path: &Path, trajectories: &[interaction::Trajectory]) -> Result<()> {
    std::fs::File::create(path)?;
    interaction::append_jsonl(path, trajectories)
}

fn execute(cli: &Cli, exec: Execution) -> Result<PathBuf> {
    let cfg = load_config(cli)?;
    let mut inputs = Inputs::default();
    hash_policy_specs(&cfg, &mut inputs)?;
    let sweep = cfg.sweep_config();
    let command = cli.command.clone();
    match command {
        Command::Interact(arg) => {
            let current = base_policy(&cfg, &arg, &mut inputs)?;
            let run = RunDir::create("interact", &cfg, inputs)?;
            let trajectories = interact_store(&cfg, &current, exec)?;
            write_trajectories(&run.path("traj.jsonl"), &trajectories)?;
            println!("{} episodes", trajectories.len());
            run.finish()
        }
        Command::Estimate { trajectories } => {
            inputs.add("trajectories", &trajectories)?;
            let run = RunDir::create("estimate", &cfg, inputs)?;
            let store = interaction::read_jsonl(&trajectories)?;
            let labeled = label_store(&store, &cfg.estimator, cfg.delta, cfg.min_count, exec)?;
            labeled.write_jsonl(&run.path("labeled.jsonl"))?;
            println!("{} desirable, {} undesirable", labeled.n_desirable(), labeled.n_undesirable());
            run.finish()
        }
        Command::Train {
            labeled,
            trajectories,
            policy,
        } => {
            let current = base_policy(&cfg, &policy, &mut inputs)?;
            if let Some(p) = &labeled {
                inputs.add("labeled", p)?;
            }
            if let Some(p) = &trajectories {
                inputs.add("trajectories", p)?;
            }
            let store = trajectories.as_deref().map(interaction::read_jsonl).transpose()?;
            let outcome = if sweep.train.method == Method::Spag {
                let store = store.ok_or_else(|| Error::Config("the spag method needs --trajectories".into()))?;
                let run = RunDir::create("train", &cfg, inputs)?;
                let outcome = train_spag(&current, &store, &sweep.train, exec)?;
                (run, outcome)
            } else {
                let labeled = labeled.ok_or_else(|| Error::Config("train needs --labeled".into()))?;
                let run = RunDir::create("train", &cfg, inputs)?;
                let data = LabeledDataset::read_jsonl(&labeled)?;
                let bc = store.as_deref().and_then(|s| bc_steps_for(&sweep.train, s));
                let outcome = train(&current, &data, bc.as_ref(), &sweep.train, exec)?;
                (run, outcome)
            };
            let (run, outcome) = outcome;
            outcome.policy.save(&run.path("policy.ckpt"))?;
            write_metrics_csv(&run.path("metrics.csv"), &outcome.metrics)?;
            run.finish()
        }
        Command::Evaluate(arg) => {
            let current = base_policy(&cfg, &arg, &mut inputs)?;
            let run = RunDir::create("evaluate", &cfg, inputs)?;
            let reports = tournament(&AgentSpec::SelfPlay, Some(&current), &cfg.eval_opponents, &cfg.games, &sweep.eval, exec)?;
            write_tournament_csv(&run.path("tournament.csv"), &reports)?;
            print_reports(&reports);
            run.finish()
        }
        Command::Sweep(arg) => {
            let current = base_policy(&cfg, &arg, &mut inputs)?;
            let run = RunDir::create("sweep", &cfg, inputs)?;
            let rows = opponent_sweep(&current, &cfg.ladder, &sweep, exec)?;
            write_sweep_csv(&run.path("sweep.csv"), &rows)?;
            for r in &rows {
                println!(
                    "{:<10} interact {:.3}  D {:>6}  U {:>6}  eval {:.3}",
                    r.opponent, r.interact_win_rate, r.n_desirable, r.n_undesirable, r.eval_win_rate
                );
            }
            run.finish()
        }
        Command::Head2head(arg) => {
            let current = base_policy(&cfg, &arg, &mut inputs)?;
            let run = RunDir::create("head2head", &cfg, inputs)?;
            let h = head_to_head(&cfg.head2head, Some(&current), &cfg.games, &sweep.eval, exec)?;
            write_head2head_csv(&run.path("head2head.csv"), &h)?;
            for (label, row) in h.labels.iter().zip(&h.matrix) {
                let cells: Vec<String> = row.iter().map(|w| format!("{w:.3}")).collect();
                println!("{label:<12} {}", cells.join(" "));
            }
            run.finish()
        }
        Command::Iterate(arg) => {
            let current = base_policy(&cfg, &arg, &mut inputs)?;
            let run = RunDir::create("iterate", &cfg, inputs)?;
            let (checkpoints, rows) = iterate(&current, cfg.rounds, &sweep, exec)?;
            for (i, p) in checkpoints.iter().enumerate() {
                p.save(&run.path(&round_checkpoint(i + 1).to_string_lossy()))?;
            }
            write_iterate_csv(&run.path("iterate.csv"), &rows)?;
            for r in &rows {
                println!("round {} vs {:<20} eval {:.3}", r.round, r.opponent, r.eval_win_rate);
            }
            run.finish()
        }
        Command::Regret(arg) => {
            let current = base_policy(&cfg, &arg, &mut inputs)?;
            let games: Vec<GameKind> = cfg
                .games
                .iter()
                .copied()
                .filter(|g| matches!(g, GameKind::TicTacToe | GameKind::Nim))
                .collect();
            if games.is_empty() {
                return Err(Error::Config("regret needs tictactoe or nim among the games".into()));
            }
            let run = RunDir::create("regret", &cfg, inputs)?;
            let mut rows = Vec::new();
            for g in games {
                let r = regret(&AgentSpec::SelfPlay, Some(&current), &cfg.regret_opponent, g, &sweep.eval, exec)?;
                println!("{:<10} mean regret {:.4} over {} moves", r.game, r.mean_regret, r.moves);
                rows.push(r);
            }
            write_regret_csv(&run.path("regret.csv"), &rows)?;
            run.finish()
        }
        Command::Pipeline(arg) => {
            let current = base_policy(&cfg, &arg, &mut inputs)?;
            let run = RunDir::create("pipeline", &cfg, inputs)?;
            let out = refine_round(&current, &cfg.opponent, &PolicyPool::new(), &sweep, sweep.master_seed, exec)?;
            write_trajectories(&run.path("traj.jsonl"), &out.trajectories)?;
            out.dataset.write_jsonl(&run.path("labeled.jsonl"))?;
            out.trained.policy.save(&run.path("policy.ckpt"))?;
            write_metrics_csv(&run.path("metrics.csv"), &out.trained.metrics)?;
            write_tournament_csv(&run.path("tournament.csv"), &out.evaluation)?;
            println!("{} desirable, {} undesirable", out.dataset.n_desirable(), out.dataset.n_undesirable());
            print_reports(&out.evaluation);
            run.finish()
        }
    }
}

/// Invalid configuration and bad agent or game names exit with 2.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::BadAgentSpec(_) | Error::UnknownGame(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = Execution::from_jobs(cli.jobs);
    match with_jobs(cli.jobs, || execute(&cli, exec)) {
        Ok(dir) => {
            println!("{} written to {}", cli.command.name(), dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
