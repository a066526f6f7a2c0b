//! Acceptance gate: each criterion runs at its stated tolerance and budget
//! and prints one PASS/FAIL line. The process fails if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use scopal::config::ExperimentConfig;
use scopal::eval::sweep::refine_round;
use scopal::eval::{mean_win_rate, tournament, EvalSettings};
use scopal::games::{new_game, Action, GameKind, GameOptions, GameResult, Outcome, PlayerId};
use scopal::interaction::{Matchup, Step, Trajectory};
use scopal::opponents::{AgentSpec, PolicyPool};
use scopal::parallel::Execution;
use scopal::policy::Policy;
use scopal::refine::{
    bc_loss, build_pairs, dpo_loss, estimate_z0, kto_loss, spag_assign_rewards, spag_loss, spag_samples, KtoParams,
    LossReport, Method, Sample, Z0Estimator,
};
use scopal::rewards::{accumulate_stats, label_store, Estimator, StepStats};
use scopal::seed::{self, EpisodeSeeds};

type Check = Result<String, String>;

fn within(elapsed: Duration, budget: Duration) -> Result<(), String> {
    if elapsed > budget {
        Err(format!("took {:.1}s, budget {:.0}s", elapsed.as_secs_f64(), budget.as_secs_f64()))
    } else {
        Ok(())
    }
}

fn zero_policy() -> Arc<Policy> {
    Arc::new(Policy::new(&GameOptions::default()).unwrap())
}

// 1 ---------------------------------------------------------------------

#[derive(Debug, Default, PartialEq)]
struct Recount {
    n_all: u64,
    n_win: u64,
    n_tie: u64,
    n_lose: u64,
    net_by_exponent: BTreeMap<u32, i64>,
}

/// Rescans the whole store once per distinct key.
fn brute_force(store: &[Trajectory]) -> BTreeMap<String, Recount> {
    let keys: BTreeSet<String> = store.iter().flat_map(|t| t.steps.iter().map(|s| s.key.0.clone())).collect();
    let mut out = BTreeMap::new();
    for key in keys {
        let mut r = Recount::default();
        for t in store {
            let any_learner = t.learner[0] || t.learner[1];
            for (i, s) in t.steps.iter().enumerate() {
                if s.key.0 != key || (any_learner && !t.learner[s.actor.index()]) {
                    continue;
                }
                let total = t.steps.iter().filter(|x| x.actor == s.actor).count() as u32;
                let upto = t.steps[..=i].iter().filter(|x| x.actor == s.actor).count() as u32;
                let result = t.outcome.result_for(s.actor);
                r.n_all += 1;
                match result {
                    GameResult::Win => r.n_win += 1,
                    GameResult::Tie => r.n_tie += 1,
                    GameResult::Lose => r.n_lose += 1,
                }
                let signed = match result {
                    GameResult::Win => 1,
                    GameResult::Tie => 0,
                    GameResult::Lose => -1,
                };
                *r.net_by_exponent.entry(total - upto).or_insert(0) += signed;
            }
        }
        if r.n_all > 0 {
            out.insert(key, r);
        }
    }
    out
}

fn from_stats(s: &StepStats) -> Recount {
    Recount {
        n_all: s.n_all,
        n_win: s.n_win,
        n_tie: s.n_tie,
        n_lose: s.n_lose,
        net_by_exponent: s.net_by_exponent.clone(),
    }
}

fn counting_oracle() -> Check {
    let start = Instant::now();
    let mut keys = 0;
    for opponent in [AgentSpec::SelfPlay, AgentSpec::Mcts(10)] {
        let store = Matchup::new(AgentSpec::SelfPlay, opponent.clone(), Some(zero_policy()))
            .collect(&[GameKind::TicTacToe], 100, 1, Execution::Parallel)
            .map_err(|e| e.to_string())?;
        let stats = accumulate_stats(&store, Execution::Parallel).map_err(|e| e.to_string())?;
        let got: BTreeMap<String, Recount> = stats.iter().map(|(k, v)| (k.0.clone(), from_stats(v))).collect();
        let want = brute_force(&store);
        if got != want {
            let diff = want.iter().find(|(k, v)| got.get(*k) != Some(v)).map(|(k, _)| k.clone());
            return Err(format!("vs {opponent}: mismatch at {diff:?}"));
        }
        keys += got.len();
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("{keys} keys identical, {:.2}s", elapsed.as_secs_f64()))
}

// 2 ---------------------------------------------------------------------

const FD_STEP: f64 = 1e-5;

fn normal<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

fn random_theta(dim: usize, s: u64) -> Vec<f64> {
    let mut rng = seed::rng(s);
    (0..dim).map(|_| 0.5 * normal(&mut rng)).collect()
}

fn support(samples: &[&Sample]) -> Vec<usize> {
    let mut s = BTreeSet::new();
    for x in samples {
        for fs in &x.table.features {
            s.extend(fs.iter().map(|&(i, _)| i));
        }
    }
    s.into_iter().collect()
}

fn relative_error(loss: &dyn Fn(&[f64]) -> LossReport, theta: &[f64], coords: &[usize]) -> f64 {
    let analytic = loss(theta).gradient;
    let mut t = theta.to_vec();
    let mut worst: f64 = 0.0;
    for &i in coords {
        t[i] = theta[i] + FD_STEP;
        let up = loss(&t).loss;
        t[i] = theta[i] - FD_STEP;
        let down = loss(&t).loss;
        t[i] = theta[i];
        let numeric = (up - down) / (2.0 * FD_STEP);
        worst = worst.max((analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-6));
    }
    worst
}

fn gradient_suite() -> Check {
    let start = Instant::now();
    let policy = zero_policy();
    let store = Matchup::new(AgentSpec::SelfPlay, AgentSpec::SelfPlay, Some(policy.clone()))
        .collect(&[GameKind::TicTacToe, GameKind::Nim], 6, 5, Execution::Parallel)
        .map_err(|e| e.to_string())?;
    let labeled = label_store(&store, &Estimator::default(), 0.5, 1, Execution::Parallel).map_err(|e| e.to_string())?;
    let samples: Vec<Sample> = labeled.steps.iter().map(|s| Sample::from_labeled(&policy, s).unwrap()).collect();
    let good: Vec<&Sample> = samples.iter().filter(|s| s.is_desirable()).take(40).collect();
    let mixed: Vec<&Sample> = samples.iter().step_by(3).take(40).collect();
    let all: Vec<&Sample> = samples.iter().collect();
    let pairs = build_pairs(&all, 4);
    let members: Vec<&Sample> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    let spag = spag_samples(&policy, &store[..4], 0.8, Execution::Parallel).map_err(|e| e.to_string())?;
    let spag: Vec<&Sample> = spag.iter().collect();
    let dim = policy.dim();
    let theta_ref = random_theta(dim, 99);

    let worst_over_points = |error_at: &dyn Fn(&[f64]) -> f64| -> f64 {
        (0..64)
            .map(|point| error_at(&random_theta(dim, seed::combine(0x6772_6164, point))))
            .fold(0.0, f64::max)
    };
    let (c_bc, c_kto, c_dpo, c_spag) = (support(&good), support(&mixed), support(&members), support(&spag));
    let results = [
        ("bc", worst_over_points(&|theta| relative_error(&|t| bc_loss(t, &good).unwrap(), theta, &c_bc))),
        (
            "kto",
            worst_over_points(&|theta| {
                // z0 is detached: hold it at its value at the evaluation point
                let mut p = KtoParams::new(0.1, 1.0, 0.7);
                p.fixed_z0 = Some(estimate_z0(theta, &theta_ref, &mixed, Z0Estimator::ExactKl));
                relative_error(&|t| kto_loss(t, &theta_ref, &mixed, &p).unwrap(), theta, &c_kto)
            }),
        ),
        ("dpo", worst_over_points(&|theta| relative_error(&|t| dpo_loss(t, &theta_ref, &pairs, 0.1).unwrap(), theta, &c_dpo))),
        ("spag", worst_over_points(&|theta| relative_error(&|t| spag_loss(t, &theta_ref, &spag, 0.2).unwrap(), theta, &c_spag))),
    ];
    let failed = results.iter().any(|&(_, e)| e.is_nan() || e >= 1e-4);
    let report: Vec<String> = results.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    let elapsed = start.elapsed();
    let summary = format!("max rel. error {}, {:.2}s", report.join(", "), elapsed.as_secs_f64());
    if failed {
        return Err(summary);
    }
    within(elapsed, Duration::from_secs(30))?;
    Ok(summary)
}

// 3 ---------------------------------------------------------------------

fn kto_fixed_point() -> Check {
    let policy = zero_policy();
    let store = Matchup::new(AgentSpec::SelfPlay, AgentSpec::SelfPlay, Some(policy.clone()))
        .collect(&[GameKind::TicTacToe, GameKind::Nim, GameKind::KuhnPoker], 10, 3, Execution::Parallel)
        .map_err(|e| e.to_string())?;
    let labeled = label_store(&store, &Estimator::default(), 0.5, 1, Execution::Parallel).map_err(|e| e.to_string())?;
    let samples: Vec<Sample> = labeled.steps.iter().map(|s| Sample::from_labeled(&policy, s).unwrap()).collect();
    let (ld, lu) = (1.0, 0.6);
    let mut worst_kto: f64 = 0.0;
    let mut worst_dpo: f64 = 0.0;
    let mut checked = 0;
    for point in 0..8 {
        let theta = random_theta(policy.dim(), seed::combine(0x6669_7865, point));
        for estimator in [Z0Estimator::ExactKl, Z0Estimator::Shifted] {
            let mut p = KtoParams::new(0.1, ld, lu);
            p.z0 = estimator;
            for s in &samples {
                let loss = kto_loss(&theta, &theta, &[s], &p).map_err(|e| e.to_string())?.loss;
                let lambda = if s.is_desirable() { ld } else { lu };
                worst_kto = worst_kto.max((loss - lambda / 2.0).abs());
                checked += 1;
            }
        }
        let all: Vec<&Sample> = samples.iter().collect();
        for pair in build_pairs(&all, 4) {
            let loss = dpo_loss(&theta, &theta, &[pair], 0.1).map_err(|e| e.to_string())?.loss;
            worst_dpo = worst_dpo.max((loss - std::f64::consts::LN_2).abs());
        }
    }
    let summary = format!("{checked} examples, max |kto - lambda/2| {worst_kto:.1e}, max |dpo - ln2| {worst_dpo:.1e}");
    if worst_kto <= 1e-9 && worst_dpo <= 1e-9 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

// 4 ---------------------------------------------------------------------

fn exact_solvers() -> Check {
    let start = Instant::now();
    let m = Matchup::new(AgentSpec::Minimax, AgentSpec::Minimax, None);
    let ttt = m.collect(&[GameKind::TicTacToe], 20, 0, Execution::Parallel).map_err(|e| e.to_string())?;
    let nim = m.collect(&[GameKind::Nim], 20, 0, Execution::Parallel).map_err(|e| e.to_string())?;
    let ties = ttt.iter().filter(|t| t.outcome == Outcome::Tie).count();
    let second = nim.iter().filter(|t| t.outcome.result_for(PlayerId::P2) == GameResult::Win).count();
    let elapsed = start.elapsed();
    let summary = format!(
        "tictactoe ties {ties}/{}, nim second-player wins {second}/{}, {:.2}s",
        ttt.len(),
        nim.len(),
        elapsed.as_secs_f64()
    );
    if ties != ttt.len() || second != nim.len() {
        return Err(summary);
    }
    within(elapsed, Duration::from_secs(60))?;
    Ok(summary)
}

// 5 ---------------------------------------------------------------------

fn mcts_monotonicity() -> Check {
    let start = Instant::now();
    let settings = EvalSettings {
        episodes: 200,
        master_seed: 5,
        ..EvalSettings::default()
    };
    let r = tournament(&AgentSpec::Mcts(1000), None, &[AgentSpec::Mcts(5)], &[GameKind::ConnectFour], &settings, Execution::Parallel)
        .map_err(|e| e.to_string())?;
    let r = &r[0];
    let elapsed = start.elapsed();
    let summary = format!(
        "mcts:1000 vs mcts:5 win rate {:.3} ({}/{}/{}), {:.1}s",
        r.win_rate,
        r.n_win,
        r.n_lose,
        r.n_tie,
        elapsed.as_secs_f64()
    );
    if r.win_rate < 0.60 {
        return Err(summary);
    }
    within(elapsed, Duration::from_secs(600))?;
    Ok(summary)
}

// 6 ---------------------------------------------------------------------

fn self_play_balance() -> Check {
    let mut fractions = Vec::new();
    for opponent in [AgentSpec::SelfPlay, AgentSpec::Mcts(1000)] {
        let store = Matchup::new(AgentSpec::SelfPlay, opponent, Some(zero_policy()))
            .collect(&[GameKind::TicTacToe], 500, 21, Execution::Parallel)
            .map_err(|e| e.to_string())?;
        let ds = label_store(&store, &Estimator::default(), 0.5, 1, Execution::Parallel).map_err(|e| e.to_string())?;
        fractions.push(ds.desirable_fraction());
    }
    let factor = fractions[0] / fractions[1];
    let summary = format!(
        "desirable fraction self {:.3} vs mcts:1000 {:.3}, factor {factor:.2}",
        fractions[0], fractions[1]
    );
    if factor >= 2.0 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

// 7 ---------------------------------------------------------------------

fn training_efficacy() -> Check {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        games: vec![GameKind::TicTacToe],
        episodes: 1000,
        eval_episodes: 500,
        eval_opponents: vec![AgentSpec::Random],
        ..ExperimentConfig::default()
    };
    let sweep = cfg.sweep_config();
    let base = zero_policy();
    let before = tournament(&AgentSpec::SelfPlay, Some(&base), &[AgentSpec::Random], &cfg.games, &sweep.eval, Execution::Parallel)
        .map_err(|e| e.to_string())?;
    let out = refine_round(&base, &AgentSpec::SelfPlay, &PolicyPool::new(), &sweep, sweep.master_seed, Execution::Parallel)
        .map_err(|e| e.to_string())?;
    let (b, a) = (before[0].win_rate, out.evaluation[0].win_rate);
    let elapsed = start.elapsed();
    let summary = format!(
        "vs random {b:.3} -> {a:.3} (+{:.1} points), {:.1}s",
        100.0 * (a - b),
        elapsed.as_secs_f64()
    );
    if a - b < 0.10 {
        return Err(summary);
    }
    within(elapsed, Duration::from_secs(600))?;
    Ok(summary)
}

// 8 ---------------------------------------------------------------------

fn two_stage_vs_direct() -> Check {
    let mut cfg = ExperimentConfig {
        games: vec![GameKind::TicTacToe, GameKind::Nim],
        ..ExperimentConfig::default()
    };
    let mut rates = Vec::new();
    for method in [Method::TwoStage, Method::DirectKto] {
        cfg.train.method = method;
        let sweep = cfg.sweep_config();
        let out = refine_round(&zero_policy(), &AgentSpec::SelfPlay, &PolicyPool::new(), &sweep, sweep.master_seed, Execution::Parallel)
            .map_err(|e| e.to_string())?;
        rates.push(mean_win_rate(&out.evaluation));
    }
    let summary = format!("two-stage {:.4} vs direct KTO {:.4}", rates[0], rates[1]);
    if rates[0] >= rates[1] - 0.01 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

// 9 ---------------------------------------------------------------------

fn spag_rewards() -> Check {
    // X wins on the top row in five plies: three rounds
    let moves = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0)];
    let mut state = new_game(GameKind::TicTacToe, 0);
    let mut steps = Vec::new();
    for (i, &(col, row)) in moves.iter().enumerate() {
        let a = Action::Cell { col, row };
        steps.push(Step {
            key: state.canonical_key(a),
            actor: state.to_move(),
            action: a.to_string(),
            move_index: i as u32,
        });
        state.apply_mut(a).map_err(|e| e.to_string())?;
    }
    let outcome = state.terminal_outcome().ok_or("game did not end")?;
    if outcome.result_for(PlayerId::P1) != GameResult::Win {
        return Err("fixture is not a first-player win".into());
    }
    let t = Trajectory {
        game: GameKind::TicTacToe,
        options: GameOptions::default(),
        episode: 0,
        seeds: EpisodeSeeds::derive(0, GameKind::TicTacToe, 0),
        agents: ["self".into(), "self".into()],
        learner: [true, true],
        first_player_agent: "self".into(),
        steps,
        outcome,
        truncated: false,
    };
    let rewards = spag_assign_rewards(&t, 0.8).map_err(|e| e.to_string())?;
    let winner: Vec<f64> = rewards.iter().step_by(2).copied().collect();
    let (gamma, big_t) = (0.8f64, 3);
    let closed: Vec<f64> = (1..=big_t)
        .map(|k| (1.0 - gamma) * gamma.powi(big_t - k) / (1.0 - gamma.powi(big_t + 1)))
        .collect();
    let published = [0.21680, 0.27100, 0.33875];
    let ok = winner.len() == 3
        && winner.iter().zip(&closed).all(|(a, b)| (a - b).abs() <= 1e-5)
        && winner.iter().zip(&published).all(|(a, b)| (a - b).abs() <= 1e-5)
        && rewards.iter().skip(1).step_by(2).zip(&closed).all(|(a, b)| (a + b).abs() <= 1e-12);
    let summary = format!("winner rewards {:.5?}", winner);
    if ok {
        Ok(summary)
    } else {
        Err(format!("{summary}, expected {closed:.5?}"))
    }
}

// 10 --------------------------------------------------------------------

const DETERMINISM_CONFIG: &str = r#"
games = ["tictactoe", "nim", "kuhn_poker", "liars_dice"]
episodes = 30
eval_episodes = 6
eval_opponents = ["random", "mcts:20"]
ladder = ["random", "self", "mcts:10"]
head2head = ["self", "random", "mcts:10"]
rounds = 2
regret_opponent = "mcts:20"

[train.bc]
epochs = 2

[train.preference]
epochs = 2
"#;

fn scopal(args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_scopal")).args(args).output().map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("scopal {args:?}: {}", String::from_utf8_lossy(&o.stderr)))
    }
}

fn run_dir(root: &Path, prefix: &str) -> Result<PathBuf, String> {
    fs::read_dir(root)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_string_lossy().starts_with(prefix))
        .ok_or(format!("no {prefix} run under {}", root.display()))
}

/// Runs every subcommand under `root`; returns file name -> bytes.
fn run_all(cfg: &Path, root: &Path, jobs: &str) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let (c, r) = (cfg.to_str().unwrap(), root.to_str().unwrap());
    let base = ["--config", c, "--out", r, "--jobs", jobs];
    let with = |extra: &[&str]| -> Vec<String> { base.iter().chain(extra).map(|s| s.to_string()).collect() };
    let call = |extra: &[&str]| -> Result<(), String> {
        let args = with(extra);
        scopal(&args.iter().map(String::as_str).collect::<Vec<_>>())
    };
    for sub in ["interact", "evaluate", "sweep", "head2head", "iterate", "regret", "pipeline"] {
        call(&[sub])?;
    }
    let traj = run_dir(root, "interact-")?.join("traj.jsonl");
    call(&["estimate", "--trajectories", traj.to_str().unwrap()])?;
    let labeled = run_dir(root, "estimate-")?.join("labeled.jsonl");
    call(&["train", "--labeled", labeled.to_str().unwrap()])?;

    let mut files = BTreeMap::new();
    for run in fs::read_dir(root).map_err(|e| e.to_string())? {
        let run = run.map_err(|e| e.to_string())?.path();
        for f in fs::read_dir(&run).map_err(|e| e.to_string())? {
            let f = f.map_err(|e| e.to_string())?.path();
            let name = format!("{}/{}", run.file_name().unwrap().to_string_lossy(), f.file_name().unwrap().to_string_lossy());
            files.insert(name, fs::read(&f).map_err(|e| e.to_string())?);
        }
    }
    Ok(files)
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("config.toml");
    fs::write(&cfg, DETERMINISM_CONFIG).map_err(|e| e.to_string())?;
    let a = run_all(&cfg, &dir.path().join("a"), "0")?;
    let b = run_all(&cfg, &dir.path().join("b"), "1")?;
    if a.keys().ne(b.keys()) {
        return Err("run directories or artifact names differ".into());
    }
    let differing: Vec<&String> = a.iter().filter(|(k, v)| b[*k] != **v).map(|(k, _)| k).collect();
    let artifacts = a.keys().filter(|k| k.ends_with(".jsonl") || k.ends_with(".csv")).count();
    if differing.is_empty() {
        Ok(format!("9 subcommands, {} files ({artifacts} JSONL/CSV) byte-identical across reruns", a.len()))
    } else {
        Err(format!("differing artifacts: {differing:?}"))
    }
}

fn main() {
    type Criterion = (&'static str, fn() -> Check);
    let criteria: [Criterion; 10] = [
        ("counting oracle", counting_oracle),
        ("gradient suite", gradient_suite),
        ("KTO/DPO fixed point", kto_fixed_point),
        ("exact solvers", exact_solvers),
        ("MCTS monotonicity", mcts_monotonicity),
        ("self-play balance", self_play_balance),
        ("training efficacy", training_efficacy),
        ("two-stage vs direct KTO", two_stage_vs_direct),
        ("SPAG reward assignment", spag_rewards),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
