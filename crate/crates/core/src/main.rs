use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ffp::envs::{box_pushing, toy_posg, uav_game, uav_game_printed, BoxPushingConfig};
use ffp::game::GameFile;
use ffp::harness::{sweep_matrix, sweep_posg, MatrixSweepParams, PosgSweepParams};
use ffp::learn::{detect_convergence, default_window, run_fp, FilterSpec, FpConfig, StepSchedule};
use ffp::lffp::{run_lffp, LffpConfig};
use ffp::posg::{Posg, PosgFile};
use ffp::NormalFormGame;

#[derive(Parser)]
#[command(name = "ffp", about = "Fictitious play under noisy observations", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a game's payoffs, pure equilibria, and potential diagnostics.
    ShowGame {
        #[arg(long, default_value = "uav")]
        game: String,
    },
    /// One repeated-game learning run; writes a belief-trace CSV.
    RunMatrix(RunMatrixArgs),
    /// One POSG learning run; writes an episode-reward CSV.
    RunPosg(RunPosgArgs),
    /// Batch eps sweep over repeated-game runs.
    SweepMatrix(SweepMatrixArgs),
    /// Batch eps sweep over POSG runs.
    SweepPosg(SweepPosgArgs),
}

#[derive(Args)]
struct RunMatrixArgs {
    #[arg(long, default_value = "uav")]
    game: String,
    /// gwfp (identity filter) or ffp (Bayes filter).
    #[arg(long, default_value = "ffp")]
    algo: String,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Filter coefficient; defaults to --eps.
    #[arg(long)]
    assumed_eps: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    iters: u64,
    /// Step schedule as "c,rho" for (c + t)^(-rho).
    #[arg(long, default_value = "0,1")]
    schedule: String,
    #[arg(long, default_value_t = 100)]
    snapshot_stride: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunPosgArgs {
    /// box, toy, or a path to a JSON environment file.
    #[arg(long, default_value = "box")]
    env: String,
    #[arg(long)]
    env_config: Option<PathBuf>,
    /// lffp (Bayes filter) or lgwfp (identity filter).
    #[arg(long, default_value = "lffp")]
    algo: String,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long)]
    assumed_eps: Option<f64>,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 1.0)]
    xi0: f64,
    #[arg(long, default_value_t = 20_000)]
    steps: u64,
    #[arg(long, default_value_t = 100)]
    horizon: u64,
    #[arg(long, default_value = "0,1")]
    schedule: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepMatrixArgs {
    #[arg(long, default_value = "uav")]
    game: String,
    /// JSON sweep parameters; defaults match the headline noise sweep.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (0 = all cores, 1 = sequential).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Overrides the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SweepPosgArgs {
    #[arg(long, default_value = "box")]
    env: String,
    #[arg(long)]
    env_config: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    seed: Option<u64>,
}

fn load_game(name: &str) -> Result<NormalFormGame> {
    match name {
        "uav" => Ok(uav_game()),
        "uav-printed" => Ok(uav_game_printed()),
        path => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading game file {path}"))?;
            let file: GameFile = serde_json::from_str(&text).context("parsing game file")?;
            Ok(NormalFormGame::from_file_repr(&file)?)
        }
    }
}

fn load_posg(name: &str, env_config: Option<&PathBuf>) -> Result<Posg> {
    match name {
        "toy" => Ok(toy_posg()),
        "box" => {
            let cfg = match env_config {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .with_context(|| format!("reading env config {}", path.display()))?;
                    serde_json::from_str(&text).context("parsing env config")?
                }
                None => BoxPushingConfig::default(),
            };
            let built = box_pushing(&cfg)?;
            eprintln!("box pushing: {} reachable states", built.state_count);
            Ok(built.posg)
        }
        path => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading environment file {path}"))?;
            let file: PosgFile = serde_json::from_str(&text).context("parsing environment file")?;
            Ok(Posg::from_file_repr(&file)?)
        }
    }
}

fn parse_schedule(spec: &str) -> Result<StepSchedule> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 {
        bail!("schedule must be \"c,rho\"");
    }
    let c: f64 = parts[0].trim().parse().context("schedule constant")?;
    let rho: f64 = parts[1].trim().parse().context("schedule exponent")?;
    Ok(StepSchedule::new(c, rho)?)
}

fn matrix_filter(algo: &str, eps: f64, assumed: Option<f64>) -> Result<FilterSpec> {
    match algo {
        "gwfp" => Ok(FilterSpec::Identity),
        "ffp" => Ok(FilterSpec::Bayes { assumed_eps: assumed.unwrap_or(eps) }),
        other => bail!("unknown algorithm {other:?} (expected gwfp or ffp)"),
    }
}

fn write_or_print(out: Option<&PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)?;
                }
            }
            fs::write(path, content)?;
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_show_game(game: &str) -> Result<()> {
    let g = load_game(game)?;
    println!("players: {}", g.num_players());
    println!("actions: {:?}", g.action_counts());
    for joint in g.joint_actions() {
        let payoffs: Vec<f64> = (0..g.num_players()).map(|p| g.payoff(p, &joint)).collect();
        println!("  {joint:?} -> {payoffs:?}");
    }
    let equilibria = g.pure_nash();
    for eq in &equilibria {
        println!(
            "pure NE: {:?}{}",
            eq.joint,
            if eq.strict { " (strict)" } else { "" }
        );
    }
    match g.potential_reconstruct() {
        Ok(phi) => {
            println!("potential game: yes");
            for joint in g.joint_actions() {
                println!("  phi{joint:?} = {}", phi.value(&joint));
            }
        }
        Err(witness) => {
            println!("potential game: no ({witness:?})");
        }
    }
    for eq in &equilibria {
        if let Ok(report) = g.min_p_dominance(&eq.joint) {
            println!(
                "min p-dominance at {:?}: {} (noise threshold {})",
                eq.joint,
                report.min_p,
                ffp::gwfp_noise_threshold(report.min_p, g.num_players())?
            );
        }
    }
    Ok(())
}

fn cmd_run_matrix(args: &RunMatrixArgs) -> Result<()> {
    let game = load_game(&args.game)?;
    let schedule = parse_schedule(&args.schedule)?;
    let filter = matrix_filter(&args.algo, args.eps, args.assumed_eps)?;
    let mut config = FpConfig::new(args.eps, filter, schedule, args.iters);
    config.snapshot_stride = args.snapshot_stride;
    let trace = run_fp(&game, &config, args.seed)?;

    let mut csv = String::from("t,agent,opponent,action,belief\n");
    for (t, profiles) in &trace.snapshots {
        for (agent, profile) in profiles.iter().enumerate() {
            for opponent in 0..game.num_players() {
                if opponent == agent {
                    continue;
                }
                for (action, p) in profile.strategy(opponent).probs().iter().enumerate() {
                    csv.push_str(&format!("{t},{agent},{opponent},{action},{p}\n"));
                }
            }
        }
    }
    write_or_print(args.out.as_ref(), &csv)?;

    let verdict = detect_convergence(&trace, default_window(args.iters), 0.05, &game)?;
    eprintln!("verdict: {}", verdict.label());
    Ok(())
}

fn cmd_run_posg(args: &RunPosgArgs) -> Result<()> {
    let posg = load_posg(&args.env, args.env_config.as_ref())?;
    let schedule = parse_schedule(&args.schedule)?;
    let filter = match args.algo.as_str() {
        "lffp" => FilterSpec::Bayes { assumed_eps: args.assumed_eps.unwrap_or(args.eps) },
        "lgwfp" => FilterSpec::Identity,
        other => bail!("unknown algorithm {other:?} (expected lffp or lgwfp)"),
    };
    let config = LffpConfig::new(args.depth, args.xi0, filter, schedule)?;
    let trace = run_lffp(&posg, args.eps, &config, args.steps, args.horizon, args.seed)?;

    let mut csv = String::from("episode,steps_elapsed,team_reward,eps,algo,seed\n");
    for row in &trace.episodes {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.episode, row.steps_elapsed, row.team_reward, args.eps, args.algo, args.seed
        ));
    }
    write_or_print(args.out.as_ref(), &csv)?;
    eprintln!(
        "mean episode reward {:.4}, final quartile {:.4}, {} belief resets",
        trace.mean_episode_reward(),
        trace.final_quartile_reward(),
        trace.belief_resets
    );
    Ok(())
}

fn load_params<T: serde::de::DeserializeOwned>(path: Option<&PathBuf>, default: T) -> Result<T> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading sweep config {}", p.display()))?;
            Ok(serde_json::from_str(&text).context("parsing sweep config")?)
        }
        None => Ok(default),
    }
}

fn cmd_sweep_matrix(args: &SweepMatrixArgs) -> Result<()> {
    let game = load_game(&args.game)?;
    let mut params: MatrixSweepParams =
        load_params(args.config.as_ref(), MatrixSweepParams::fig1_defaults())?;
    if let Some(seed) = args.seed {
        params.base_seed = seed;
    }
    let tables = sweep_matrix(&game, &params, args.workers)?;
    let manifest = serde_json::json!({
        "kind": "matrix-sweep",
        "game": args.game,
        "params": params,
        "version": env!("CARGO_PKG_VERSION"),
    });
    ffp::harness::emit_outputs(&tables, &manifest, &args.out)?;
    for a in &tables.aggregates {
        println!(
            "{} eps={:.2}: {}={:.2} ± {:.2} (n={})",
            a.algo, a.eps, a.metric, a.value, a.two_se, a.n
        );
    }
    Ok(())
}

fn cmd_sweep_posg(args: &SweepPosgArgs) -> Result<()> {
    let posg = load_posg(&args.env, args.env_config.as_ref())?;
    let mut params: PosgSweepParams =
        load_params(args.config.as_ref(), PosgSweepParams::fig2_defaults())?;
    if let Some(seed) = args.seed {
        params.base_seed = seed;
    }
    let tables = sweep_posg(&posg, &params, args.workers)?;
    let manifest = serde_json::json!({
        "kind": "posg-sweep",
        "env": args.env,
        "params": params,
        "version": env!("CARGO_PKG_VERSION"),
    });
    ffp::harness::emit_outputs(&tables, &manifest, &args.out)?;
    for a in &tables.aggregates {
        println!(
            "{} eps={:.2}: {}={:.4} ± {:.4} (n={})",
            a.algo, a.eps, a.metric, a.value, a.two_se, a.n
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::ShowGame { game } => cmd_show_game(game),
        Command::RunMatrix(args) => cmd_run_matrix(args),
        Command::RunPosg(args) => cmd_run_posg(args),
        Command::SweepMatrix(args) => cmd_sweep_matrix(args),
        Command::SweepPosg(args) => cmd_sweep_posg(args),
    }
}
