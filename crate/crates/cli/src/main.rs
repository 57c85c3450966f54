use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mdpcores::analysis::{extrapolate_mean_payoff, extrapolate_reach, stability};
use mdpcores::bench::{rows_to_csv, run_bench, summary_table, BenchConfig};
use mdpcores::boundedcore::{learn_finite_core, StoreKind};
use mdpcores::learncore::{
    check_core, learn_core, CoreResult, Heuristic, LearnConfig, LearnError, LearnStats, VerdictKind,
};
use mdpcores::model::generators::{
    build_airplane, build_fig2, build_fig3, build_knapsack_mdp, build_random, random_rewards,
    AirplaneConfig, AirplaneModel, KnapsackInstance, RandomMdpConfig,
};
use mdpcores::model::{parse_model, serialize_model, Model};
use mdpcores::numerics::{
    bounded_max_reach, max_reach_interval, FrontierPolicy, Horizon, IntervalConfig, ORACLE_DELTA,
};
use mdpcores::report::CoreRecord;
use mdpcores::{ExplicitMdp, StateSet};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_UNVERIFIED: u8 = 2;
const EXIT_RESOURCE_CAP: u8 = 3;

#[derive(Parser)]
#[command(name = "mdpcores", version, about = "Learn and analyse epsilon-cores of MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a model file from a built-in family
    Gen(GenArgs),
    /// Learn an unbounded core
    Learn(LearnArgs),
    /// Learn an n-step core
    LearnBounded(BoundedArgs),
    /// Check a core file against its model
    Verify(VerifyArgs),
    /// Maximal reachability probabilities on the full model
    Reach(ReachArgs),
    /// Exit probability of a core for every step bound
    Stability(StabilityArgs),
    /// Bounds on reachability or average reward from a core alone
    Extrapolate(ExtrapolateArgs),
    /// Batch runs over heuristics, horizons and seeds
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    family: Family,
    /// Output file; standard output if omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone)]
enum Family {
    Airplane(AirplaneArgs),
    Knapsack(KnapsackArgs),
    Fig2,
    Fig3 {
        #[arg(long, default_value_t = 0.3)]
        epsilon: f64,
    },
    Random(RandomArgs),
}

#[derive(Args, Clone)]
struct AirplaneArgs {
    #[arg(long, default_value_t = 100)]
    size: usize,
    #[arg(long, default_value_t = 1e-10)]
    tau: f64,
    /// Add the return trip from the destination back to the origin
    #[arg(long = "return")]
    return_trip: bool,
}

#[derive(Args, Clone)]
struct KnapsackArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    weights: Vec<u64>,
    /// Value threshold
    #[arg(long = "v")]
    threshold: u64,
    /// Weight limit
    #[arg(long = "w")]
    weight_limit: u64,
    #[arg(long, default_value_t = 0.3)]
    epsilon: f64,
}

#[derive(Args, Clone)]
struct RandomArgs {
    #[arg(long, default_value_t = 50)]
    states: usize,
    #[arg(long, default_value_t = 3)]
    actions: usize,
    #[arg(long, default_value_t = 3)]
    branching: usize,
    #[arg(long, default_value_t = 0.1)]
    sink_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Attach uniform rewards in [0, 1)
    #[arg(long)]
    rewards: bool,
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long)]
    model: PathBuf,
    /// Core file to write
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct BoundedArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    steps: usize,
    #[command(flatten)]
    store: StoreArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, default_value = "weighted")]
    heuristic: Heuristic,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wall-clock limit in seconds
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    max_episodes: Option<u64>,
    #[arg(long, default_value_t = LearnConfig::default().revisit_limit)]
    revisit_limit: u32,
    #[arg(long, default_value_t = LearnConfig::default().ec_growth)]
    ec_growth: f64,
    #[arg(long, default_value_t = LearnConfig::default().stall_episodes)]
    stall_episodes: u64,
    #[arg(long, default_value_t = LearnConfig::default().exact_every)]
    exact_every: u64,
}

impl RunArgs {
    fn config(&self) -> Result<LearnConfig> {
        Ok(LearnConfig {
            revisit_limit: self.revisit_limit,
            ec_growth: self.ec_growth,
            stall_episodes: self.stall_episodes,
            exact_every: self.exact_every,
            max_episodes: self.max_episodes,
            time_limit: self.time_limit.map(seconds).transpose()?,
            ..LearnConfig::default()
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StoreName {
    Dense,
    Sparse,
}

#[derive(Args, Clone)]
struct StoreArgs {
    #[arg(long, value_enum, default_value = "sparse")]
    store: StoreName,
    /// Spacing of the sparse store
    #[arg(long = "K", default_value_t = StoreKind::DEFAULT_K)]
    k: usize,
}

impl StoreArgs {
    fn kind(&self) -> StoreKind {
        match self.store {
            StoreName::Dense => StoreKind::Dense,
            StoreName::Sparse => StoreKind::Sparse { k: self.k },
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    core: PathBuf,
    /// Check against this epsilon instead of the one in the core file
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct ReachArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    targets: Vec<usize>,
    /// Step bound; unbounded if omitted
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = ORACLE_DELTA)]
    delta: f64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    core: PathBuf,
    /// Largest step bound
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveName {
    Reach,
    MeanPayoff,
}

#[derive(Args)]
struct ExtrapolateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    core: PathBuf,
    #[arg(long)]
    steps: usize,
    #[arg(long, value_enum, default_value = "reach")]
    objective: ObjectiveName,
    #[arg(long, value_delimiter = ',')]
    targets: Vec<usize>,
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    /// Also bound the unbounded reachability value
    #[arg(long)]
    unbounded: bool,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchFamily {
    Airplane,
    Fig2,
    Fig3,
    Random,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, conflicts_with = "family")]
    model: Option<PathBuf>,
    /// Built-in family, generated in memory
    #[arg(long, value_enum, required_unless_present = "model")]
    family: Option<BenchFamily>,
    #[arg(long, default_value_t = 100)]
    size: usize,
    #[arg(long, default_value_t = 1e-10)]
    tau: f64,
    #[arg(long = "return")]
    return_trip: bool,
    #[arg(long, default_value_t = 50)]
    states: usize,
    #[arg(long, default_value_t = 0)]
    model_seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Heuristics to run; all five if omitted
    #[arg(long, value_delimiter = ',')]
    heuristic: Vec<Heuristic>,
    /// Horizons: `unbounded` or a step count
    #[arg(long, value_delimiter = ',', default_value = "unbounded", value_parser = parse_horizon)]
    horizons: Vec<Horizon>,
    #[arg(long, default_value_t = 1)]
    repetitions: u32,
    /// Seed of the first repetition
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    time_limit: Option<f64>,
    #[command(flatten)]
    store: StoreArgs,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Leave the time column empty
    #[arg(long)]
    no_timing: bool,
}

fn parse_horizon(s: &str) -> Result<Horizon, String> {
    if s == "unbounded" {
        return Ok(Horizon::Unbounded);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(Horizon::Steps(n)),
        _ => Err(format!("expected 'unbounded' or a positive step count, got '{s}'")),
    }
}

fn seconds(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).with_context(|| format!("invalid time limit {s}"))
}

fn read_model(path: &Path) -> Result<ExplicitMdp> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_model(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_core(path: &Path, mdp: &ExplicitMdp) -> Result<(CoreRecord, StateSet)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let record = CoreRecord::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    let states = record.states_for(mdp)?;
    Ok((record, states))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn target_set(n: usize, targets: &[usize]) -> Result<StateSet> {
    if let Some(t) = targets.iter().find(|&&t| t >= n) {
        bail!("target state {t} out of range (model has {n} states)");
    }
    Ok(StateSet::from_indices(n, targets.iter().copied()))
}

fn cmd_gen(args: GenArgs) -> Result<u8> {
    let mut note = None;
    let mdp = match args.family {
        Family::Airplane(a) => build_airplane(&AirplaneConfig {
            size: a.size,
            return_trip: a.return_trip,
            tau: a.tau,
        })?,
        Family::Knapsack(k) => {
            let inst = KnapsackInstance {
                values: k.values,
                weights: k.weights,
                threshold: k.threshold,
                weight_limit: k.weight_limit,
            };
            let reduction = build_knapsack_mdp(&inst, k.epsilon)?;
            note = Some(format!("k={}", reduction.k));
            reduction.mdp
        }
        Family::Fig2 => build_fig2(),
        Family::Fig3 { epsilon } => build_fig3(epsilon)?,
        Family::Random(r) => {
            let m = build_random(&RandomMdpConfig {
                num_states: r.states,
                max_actions: r.actions,
                max_branching: r.branching,
                sink_fraction: r.sink_fraction,
                seed: r.seed,
            })?;
            if r.rewards {
                let n = m.num_states();
                m.with_rewards(random_rewards(n, 0.0, 1.0, r.seed))?
            } else {
                m
            }
        }
    };
    let text = serialize_model(&mdp);
    match &args.out {
        Some(p) => {
            fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
            if let Some(n) = note {
                println!("{n}");
            }
        }
        None => {
            print!("{text}");
            if let Some(n) = note {
                eprintln!("{n}");
            }
        }
    }
    Ok(EXIT_OK)
}

fn summary(core: &CoreResult, stats: &LearnStats) -> String {
    format!(
        "states={} explored={} exit_upper={} time={:.3}",
        core.states.len(),
        stats.states_explored,
        core.verified_exit_upper,
        stats.wall_time_secs
    )
}

/// Writes the core file and summary and maps the learner outcome to an exit code.
fn finish_learning(
    mdp: &ExplicitMdp,
    result: Result<CoreResult, LearnError>,
    out: Option<&Path>,
) -> Result<u8> {
    let (core, code) = match result {
        Ok(core) => (core, EXIT_OK),
        Err(LearnError::ResourceCap(partial)) => {
            log::warn!("resource cap reached; writing an unverified core");
            (*partial, EXIT_RESOURCE_CAP)
        }
        Err(e @ (LearnError::Rejected { .. } | LearnError::Inconclusive { .. })) => {
            eprintln!("error: {e}");
            return Ok(EXIT_UNVERIFIED);
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(p) = out {
        let text = CoreRecord::from_result(mdp, &core).to_json();
        fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    println!("{}", summary(&core, &core.stats));
    Ok(code)
}

fn cmd_learn(args: LearnArgs) -> Result<u8> {
    let mdp = read_model(&args.model)?;
    let cfg = args.run.config()?;
    log::info!("learning a core of {} states, epsilon {}", mdp.num_states(), args.run.epsilon);
    let started = Instant::now();
    let result = learn_core(&mdp, args.run.epsilon, args.run.heuristic, args.run.seed, &cfg, None);
    log::debug!("learner returned after {:?}", started.elapsed());
    finish_learning(&mdp, result, args.out.as_deref())
}

fn cmd_learn_bounded(args: BoundedArgs) -> Result<u8> {
    let mdp = read_model(&args.model)?;
    let cfg = args.run.config()?;
    let kind = args.store.kind();
    log::info!("learning a {}-step core with the {kind} store", args.steps);
    let result = learn_finite_core(
        &mdp,
        args.run.epsilon,
        args.steps,
        args.run.heuristic,
        kind,
        args.run.seed,
        &cfg,
        None,
    );
    finish_learning(&mdp, result, args.out.as_deref())
}

fn cmd_verify(args: VerifyArgs) -> Result<u8> {
    let mdp = read_model(&args.model)?;
    let (record, states) = read_core(&args.core, &mdp)?;
    let epsilon = args.epsilon.unwrap_or(record.epsilon);
    let verdict = check_core(&mdp, &states, epsilon, record.horizon()?)?;
    let verified = verdict.kind == VerdictKind::Accepted;
    println!(
        "verified={verified} exit_lower={} exit_upper={} epsilon={epsilon}",
        verdict.exit.lower, verdict.exit.upper
    );
    Ok(if verified { EXIT_OK } else { EXIT_UNVERIFIED })
}

fn cmd_reach(args: ReachArgs) -> Result<u8> {
    let mdp = read_model(&args.model)?;
    let n = mdp.num_states();
    let targets = target_set(n, &args.targets)?;
    let all = StateSet::full(n);
    let values = match args.steps {
        Some(k) => bounded_max_reach(&mdp, &all, &targets, k, FrontierPolicy::ABSORBING)?,
        None => {
            let cfg = IntervalConfig {
                delta: args.delta,
                ..IntervalConfig::default()
            };
            max_reach_interval(&mdp, &all, &targets, FrontierPolicy::ABSORBING, &cfg)?
        }
    };
    let mut out = String::from("state,lower,upper\n");
    for s in 0..n {
        let v = values.at(s);
        out.push_str(&format!("{s},{},{}\n", v.lower, v.upper));
    }
    write_or_print(args.csv.as_deref(), &out)?;
    Ok(EXIT_OK)
}

fn cmd_stability(args: StabilityArgs) -> Result<u8> {
    let mdp = read_model(&args.model)?;
    let (record, states) = read_core(&args.core, &mdp)?;
    let core = CoreResult {
        states,
        epsilon: record.epsilon,
        horizon: record.horizon()?,
        heuristic: record.heuristic()?,
        seed: record.seed,
        verified_exit_upper: record.verified_exit_upper,
        verified: record.verified,
        bound_store: None,
        stats: LearnStats::default(),
    };
    let profile = stability(&mdp, &core, args.steps)?;
    write_or_print(args.csv.as_deref(), &profile.to_csv())?;
    Ok(EXIT_OK)
}

fn cmd_extrapolate(args: ExtrapolateArgs) -> Result<u8> {
    let mdp = read_model(&args.model)?;
    let (_, states) = read_core(&args.core, &mdp)?;
    let curve = match args.objective {
        ObjectiveName::Reach => {
            if args.targets.is_empty() {
                bail!("--targets is required for the reach objective");
            }
            let targets = target_set(mdp.num_states(), &args.targets)?;
            let delta = args.unbounded.then_some(ORACLE_DELTA);
            extrapolate_reach(&mdp, &states, &targets, args.steps, delta)?
        }
        ObjectiveName::MeanPayoff => {
            let (Some(r_min), Some(r_max)) = (args.r_min, args.r_max) else {
                bail!("--r-min and --r-max are required for the mean-payoff objective");
            };
            extrapolate_mean_payoff(&mdp, &states, r_min, r_max, args.steps)?
        }
    };
    write_or_print(args.csv.as_deref(), &curve.to_csv())?;
    if let Some(u) = curve.unbounded {
        eprintln!("unbounded: [{}, {}]", u.lower, u.upper);
    }
    Ok(EXIT_OK)
}

fn cmd_bench(args: BenchArgs) -> Result<u8> {
    let heuristics = if args.heuristic.is_empty() {
        Heuristic::ALL.to_vec()
    } else {
        args.heuristic.clone()
    };
    let cfg = BenchConfig {
        epsilon: args.epsilon,
        store: args.store.kind(),
        learn: LearnConfig::default(),
        time_limit: args.time_limit.map(seconds).transpose()?,
    };
    let (model, name): (Box<dyn Model>, String) = match (&args.model, args.family) {
        (Some(path), _) => {
            let name = path.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned());
            (Box::new(read_model(path)?), name)
        }
        (None, Some(BenchFamily::Airplane)) => {
            let cfg = AirplaneConfig {
                size: args.size,
                return_trip: args.return_trip,
                tau: args.tau,
            };
            let name = format!("airplane-{}{}", args.size, if args.return_trip { "-return" } else { "" });
            (Box::new(AirplaneModel::new(&cfg)?), name)
        }
        (None, Some(BenchFamily::Fig2)) => (Box::new(build_fig2()), "fig2".into()),
        (None, Some(BenchFamily::Fig3)) => (Box::new(build_fig3(args.epsilon)?), "fig3".into()),
        (None, Some(BenchFamily::Random)) => {
            let m = build_random(&RandomMdpConfig {
                num_states: args.states,
                max_actions: 3,
                max_branching: 3,
                sink_fraction: 0.1,
                seed: args.model_seed,
            })?;
            (Box::new(m), format!("random-{}-{}", args.states, args.model_seed))
        }
        (None, None) => bail!("either --model or --family is required"),
    };
    let rows = run_bench(
        model.as_ref(),
        &name,
        &heuristics,
        &args.horizons,
        args.repetitions,
        args.seed,
        &cfg,
    );
    let timing = !args.no_timing;
    let csv = rows_to_csv(&rows, timing);
    match &args.csv {
        Some(p) => fs::write(p, &csv).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{csv}"),
    }
    print!("{}", summary_table(&rows, timing));
    Ok(EXIT_OK)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Learn(a) => cmd_learn(a),
        Command::LearnBounded(a) => cmd_learn_bounded(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Reach(a) => cmd_reach(a),
        Command::Stability(a) => cmd_stability(a),
        Command::Extrapolate(a) => cmd_extrapolate(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CORE_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
