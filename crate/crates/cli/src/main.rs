use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ctlsynth::formula::{parse_formula_with_groups, OuterFormula};
use ctlsynth::oracle::{RobustBudget, Verdict};
use ctlsynth::pipeline::{
    anchor_verdicts, labeled_continuous, synthesize, verify, Attempt, Backend, Engine, Outcome,
    SynthRequest, Trajectories,
};
use ctlsynth::solver::{resolve_solver_cmd, SolverConfig};
use ctlsynth::system::{load_model, CollisionMode, LoadedModel};
use ctlsynth::trajectory::LabeledLasso;

const EXIT_VERIFIED: u8 = 0;
const EXIT_INFEASIBLE: u8 = 1;
const EXIT_FALSIFIED: u8 = 2;
const EXIT_ERROR: u8 = 3;
const EXIT_BUDGET: u8 = 4;

/// Multirobot trajectory synthesis from counting temporal logic.
#[derive(Parser)]
#[command(name = "ctlsynth", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode, solve, extract and verify.
    Synth(SynthArgs),
    /// Check given trajectories against a formula.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Auto,
    Cltlplus,
    Cltl,
    Continuous,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Bundled,
    External,
}

#[derive(Clone, Copy, ValueEnum)]
enum CollisionArg {
    Off,
    Excl,
    Swap,
}

#[derive(clap::Args)]
struct SynthArgs {
    /// Model file (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Formula text, or a file holding it.
    #[arg(long)]
    formula: String,
    /// First horizon to try.
    #[arg(long)]
    horizon: usize,
    /// Last horizon to try; defaults to --horizon.
    #[arg(long)]
    horizon_max: Option<usize>,
    #[arg(long, default_value_t = 0)]
    tau: usize,
    #[arg(long, value_enum, default_value = "auto")]
    engine: EngineArg,
    #[arg(long, value_enum, default_value = "bundled")]
    solver: SolverArg,
    /// External solver command with {lp} and {sol} placeholders.
    #[arg(long)]
    solver_cmd: Option<String>,
    /// Write the LP model of the last horizon tried.
    #[arg(long)]
    export_lp: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Override the model's collision mode.
    #[arg(long, value_enum)]
    collision: Option<CollisionArg>,
    /// Trajectory JSON.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Encoding and search statistics JSON.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Occupancy CSV per step, written into this directory.
    #[arg(long)]
    emit_frames: Option<PathBuf>,
    /// Solver wall-clock budget per horizon, in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Solver node budget per horizon.
    #[arg(long)]
    node_limit: Option<u64>,
    /// Polytope margin for continuous models.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Trajectory JSON as written by `synth --output`.
    #[arg(long)]
    trajectories: PathBuf,
    #[arg(long)]
    formula: String,
    #[arg(long, default_value_t = 0)]
    tau: usize,
    /// Explicit execution horizon; defaults to the longest lasso plus τ + 1.
    #[arg(long)]
    max_t: Option<usize>,
    /// Enumerate every execution when N · max_t is at most this.
    #[arg(long, default_value_t = 16)]
    enum_cap: usize,
    /// Executions sampled when enumeration is too large.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    emit_frames: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_VERIFIED };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let run = match cli.command {
        Command::Synth(a) => run_synth(a),
        Command::Simulate(a) => run_simulate(a),
    };
    match run {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn read_formula(arg: &str, groups: &BTreeMap<String, Vec<usize>>) -> Result<OuterFormula> {
    let path = Path::new(arg);
    let text = if path.is_file() {
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
    } else {
        arg.to_string()
    };
    parse_formula_with_groups(text.trim(), groups).map_err(|e| anyhow::anyhow!("formula: {e}"))
}

fn read_model(path: &Path) -> Result<LoadedModel> {
    load_model(path).with_context(|| format!("loading model {}", path.display()))
}

fn groups_of(model: &LoadedModel) -> &BTreeMap<String, Vec<usize>> {
    match model {
        LoadedModel::Discrete(i) => &i.groups,
        LoadedModel::Continuous(s) => &s.groups,
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// The stats file: everything but timings, so repeated runs compare equal.
#[derive(Serialize)]
struct StatsFile<'a> {
    engine: Engine,
    tau: usize,
    outcome: Outcome,
    horizon: Option<usize>,
    attempts: &'a [Attempt],
    verdict: &'a Option<Verdict>,
    collisions: &'a [String],
    warnings: &'a [String],
}

fn run_synth(a: SynthArgs) -> Result<u8> {
    let mut model = read_model(&a.model)?;
    if let Some(c) = a.collision {
        match &mut model {
            LoadedModel::Discrete(inst) => {
                inst.collision = match c {
                    CollisionArg::Off => CollisionMode::Off,
                    CollisionArg::Excl => CollisionMode::MutualExclusion,
                    CollisionArg::Swap => CollisionMode::MutualExclusionPlusSwap,
                }
            }
            LoadedModel::Continuous(_) => bail!("--collision applies to discrete models only"),
        }
    }
    let mu = read_formula(&a.formula, groups_of(&model))?;
    let h_max = a.horizon_max.unwrap_or(a.horizon);
    let mut req = SynthRequest::new(a.horizon, a.tau);
    req.h_max = h_max;
    req.engine = match a.engine {
        EngineArg::Auto => Engine::Auto,
        EngineArg::Cltlplus => Engine::CltlPlus,
        EngineArg::Cltl => Engine::Cltl,
        EngineArg::Continuous => Engine::Continuous,
    };
    if a.threads == 0 {
        bail!("--threads must be at least 1");
    }
    let time_budget = match a.time_limit {
        Some(s) if !(s > 0.0 && s.is_finite()) => bail!("--time-limit must be a positive number of seconds"),
        Some(s) => Some(Duration::from_secs_f64(s)),
        None => None,
    };
    req.solver = SolverConfig {
        time_budget,
        node_budget: a.node_limit,
        seed: a.seed,
        threads: a.threads,
    };
    req.check.seed = a.seed;
    req.eps = a.eps;
    req.export_lp = a.export_lp.clone();
    if a.solver == SolverArg::External {
        let cmd = resolve_solver_cmd(a.solver_cmd.as_deref())
            .context("--solver external needs --solver-cmd or CTL_SOLVER_CMD")?;
        let workdir = std::env::temp_dir().join(format!("ctlsynth-{}", std::process::id()));
        std::fs::create_dir_all(&workdir)?;
        req.backend = Backend::External { cmd, workdir };
    } else if a.solver_cmd.is_some() {
        bail!("--solver-cmd needs --solver external");
    }

    let out = synthesize(&model, &mu, &req)?;
    if let Backend::External { workdir, .. } = &req.backend {
        let _ = std::fs::remove_dir_all(workdir);
    }

    println!("formula: {mu}");
    println!("engine: {:?}", out.engine);
    for w in &out.warnings {
        println!("warning: {w}");
    }
    for at in &out.attempts {
        let search = at
            .search
            .map(|s| format!(", {} nodes", s.nodes))
            .unwrap_or_default();
        println!(
            "h = {}: {:?} ({} vars, {} constraints{search}, {:.2}s)",
            at.horizon, at.status, at.model.variables, at.model.constraints, at.seconds
        );
    }
    for c in &out.collisions {
        println!("violation: {c}");
    }
    if let Some(v) = &out.verdict {
        print_verdict(v);
    }
    println!("outcome: {:?}", out.outcome);

    if let Some(p) = &a.stats {
        write_json(
            p,
            &StatsFile {
                engine: out.engine,
                tau: out.tau,
                outcome: out.outcome,
                horizon: out.horizon,
                attempts: &out.attempts,
                verdict: &out.verdict,
                collisions: &out.collisions,
                warnings: &out.warnings,
            },
        )?;
    }
    if let Some(trajs) = &out.trajectories {
        if let Some(p) = &a.output {
            write_json(p, trajs)?;
        }
        if let Some(dir) = &a.emit_frames {
            emit_frames(dir, &model, trajs)?;
        }
    }
    Ok(match out.outcome {
        Outcome::Verified => EXIT_VERIFIED,
        Outcome::Infeasible => EXIT_INFEASIBLE,
        Outcome::Falsified => EXIT_FALSIFIED,
        Outcome::Unknown => EXIT_BUDGET,
    })
}

fn run_simulate(a: SimulateArgs) -> Result<u8> {
    let model = read_model(&a.model)?;
    let mu = read_formula(&a.formula, groups_of(&model))?;
    let text = std::fs::read_to_string(&a.trajectories)
        .with_context(|| format!("reading {}", a.trajectories.display()))?;
    let trajs: Trajectories = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", a.trajectories.display()))?;
    let pi = labeled(&model, &trajs)?;
    if pi.len() != mu_population(&model) {
        bail!(
            "the model has {} robots but the trajectory file has {}",
            mu_population(&model),
            pi.len()
        );
    }
    let longest = pi.iter().map(LabeledLasso::len).max().unwrap_or(0);
    let max_t = a.max_t.unwrap_or(longest + a.tau + 1);
    if max_t == 0 {
        bail!("--max-t must be positive");
    }
    if a.enum_cap == 0 && a.samples == 0 {
        bail!("--samples must be positive when enumeration is disabled");
    }
    let budget = RobustBudget {
        max_t,
        enumeration_cap: a.enum_cap,
        samples: a.samples,
        seed: a.seed,
    };

    println!("formula: {mu}");
    println!("tau: {}", a.tau);
    let v = verify(&pi, &mu, a.tau, &budget);
    print_verdict(&v);
    println!("anchor  verdict");
    for (t, v) in anchor_verdicts(&pi, &mu, a.tau, &budget, longest).iter().enumerate() {
        println!("{t:>6}  {}", if v.is_verified() { "holds" } else { "fails" });
    }
    if let Some(dir) = &a.emit_frames {
        emit_frames(dir, &model, &trajs)?;
    }
    Ok(if v.is_verified() { EXIT_VERIFIED } else { EXIT_FALSIFIED })
}

fn mu_population(model: &LoadedModel) -> usize {
    match model {
        LoadedModel::Discrete(i) => i.systems.len(),
        LoadedModel::Continuous(s) => s.robots.len(),
    }
}

fn labeled(model: &LoadedModel, trajs: &Trajectories) -> Result<Vec<LabeledLasso>> {
    match (model, trajs) {
        (LoadedModel::Discrete(inst), Trajectories::Discrete { robots }) => robots
            .iter()
            .zip(&inst.systems)
            .enumerate()
            .map(|(n, (t, ts))| {
                t.check(ts).map_err(|e| anyhow::anyhow!("robot {n}: {e}"))?;
                Ok(t.labeled(ts))
            })
            .collect(),
        (LoadedModel::Continuous(sys), Trajectories::Continuous { robots }) => {
            for (n, t) in robots.iter().enumerate() {
                if t.states.len() < 2 || t.loop_start + 1 >= t.states.len() {
                    bail!("robot {n}: malformed lasso");
                }
            }
            Ok(labeled_continuous(sys, robots))
        }
        _ => bail!("trajectory kind does not match the model"),
    }
}

fn print_verdict(v: &Verdict) {
    println!(
        "verdict: {} ({} execution{}, {})",
        if v.is_verified() { "verified_bounded" } else { "falsified" },
        v.executions,
        if v.executions == 1 { "" } else { "s" },
        if v.exhaustive { "exhaustive" } else { "sampled" }
    );
    if let Some(c) = &v.counterexample {
        let k = &c.execution;
        println!("counterexample at global time {}:", c.time);
        let steps = k.horizon().max(c.time) + 1;
        let mut line = String::from("     t");
        for n in 0..k.n_robots {
            let _ = write!(line, "  k{n:<3}");
        }
        println!("{line}");
        for t in 0..steps {
            let mut line = format!("{t:>6}");
            for kn in k.counters(t) {
                let _ = write!(line, "  {kn:<4}");
            }
            if t == c.time {
                line.push_str("  <-");
            }
            println!("{line}");
        }
    }
}

/// Parses the `c{x}_{y}` names of grid cells.
fn grid_shape(names: &[String]) -> Option<(usize, usize)> {
    let mut cells = Vec::with_capacity(names.len());
    for s in names {
        let (x, y) = s.strip_prefix('c')?.split_once('_')?;
        cells.push((x.parse::<usize>().ok()?, y.parse::<usize>().ok()?));
    }
    let w = cells.iter().map(|c| c.0).max()? + 1;
    let h = cells.iter().map(|c| c.1).max()? + 1;
    let ordered = cells.iter().enumerate().all(|(i, &(x, y))| y * w + x == i);
    (ordered && w * h == names.len()).then_some((w, h))
}

/// One CSV per step: cell counts on grids, a count row per state otherwise,
/// and one position row per robot for continuous models.
fn emit_frames(dir: &Path, model: &LoadedModel, trajs: &Trajectories) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let frames: Vec<String> = match (model, trajs) {
        (LoadedModel::Discrete(inst), Trajectories::Discrete { robots }) => {
            let names = &inst.systems[0].states;
            let steps = robots.iter().map(|r| r.horizon()).max().unwrap_or(0) + 1;
            (0..steps)
                .map(|t| {
                    let mut count = vec![0usize; names.len()];
                    for r in robots {
                        count[r.state_at(t)] += 1;
                    }
                    match grid_shape(names) {
                        Some((w, _)) => count
                            .chunks(w)
                            .map(|row| join(row.iter().map(|c| c.to_string())) + "\n")
                            .collect(),
                        None => format!("{}\n{}\n", join(names.iter().cloned()), join(count.iter().map(|c| c.to_string()))),
                    }
                })
                .collect()
        }
        (LoadedModel::Continuous(_), Trajectories::Continuous { robots }) => {
            let steps = robots.iter().map(|r| r.states.len()).max().unwrap_or(0);
            (0..steps)
                .map(|t| {
                    let mut out = String::new();
                    for (n, r) in robots.iter().enumerate() {
                        let w = &r.states[t.min(r.states.len() - 1)];
                        let _ = writeln!(out, "{n},{}", join(w.iter().map(|x| x.to_string())));
                    }
                    out
                })
                .collect()
        }
        _ => bail!("trajectory kind does not match the model"),
    };
    for (t, f) in frames.iter().enumerate() {
        let p = dir.join(format!("frame_{t:04}.csv"));
        std::fs::write(&p, f).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(",")
}
