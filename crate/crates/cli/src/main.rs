use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ofdmarl_core::agent::Variant;
use ofdmarl_core::harness::{
    aggregate_bands, checkpoint_name, parse_agent, parse_eval_log, run_benchmark, run_training,
    write_bands_csv, write_benchmark_csv, AgentSpec, EnvSplit, RunConfig, RunManifest,
    TrainOptions,
};
use ofdmarl_core::selftest::{self, Check, SelftestOptions};
use ofdmarl_core::Error;

const TRAIN_MANIFEST: &str = "manifest.json";
const BENCH_MANIFEST: &str = "bench_manifest.json";

#[derive(Parser)]
#[command(name = "ofdmarl", version, about = "OFDMA downlink scheduling workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a DQN scheduler; writes manifest, logs and checkpoints.
    Train(TrainArgs),
    /// Evaluate agents on the evaluation environments.
    Eval(EvalArgs),
    /// Benchmark agents on the test environments; writes benchmark.csv.
    Bench(BenchArgs),
    /// Finite-difference check of the composed network's gradients.
    Gradcheck(GradcheckArgs),
    /// Run the invariant suite.
    Selftest(SelftestArgs),
    /// Learning-curve bands over several training runs; writes bands.csv.
    Bands(BandsArgs),
    /// Print a run configuration as TOML.
    Config(ConfigArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration (paper or smoke). Default: paper.
    #[arg(long)]
    preset: Option<String>,
    /// Training variant: enn, nps, rps or sps.
    #[arg(long)]
    variant: Option<Variant>,
    /// Master seed.
    #[arg(long, env = "OFDMARL_SEED", default_value_t = 0)]
    seed: u64,
    /// Repeat the run recorded in a manifest. Config, preset, variant and
    /// seed come from the manifest.
    #[arg(long, conflicts_with_all = ["config", "preset", "variant"])]
    manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Evaluation threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    run: RunArgs,
    /// No progress output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated agents: rrit, pfca, knapsack, random, dqn:<checkpoint>.
    #[arg(long, value_delimiter = ',', required = true)]
    agents: Vec<String>,
    /// Allocation steps per environment (default from the config).
    #[arg(long)]
    steps: Option<u64>,
    /// Number of evaluation environments (default from the config).
    #[arg(long)]
    seeds: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated agents: rrit, pfca, knapsack, random, dqn:<checkpoint>.
    #[arg(long, value_delimiter = ',', required_unless_present = "manifest")]
    agents: Vec<String>,
    /// Allocation steps per environment (default 65536 with the paper config).
    #[arg(long)]
    steps: Option<u64>,
    /// Number of test environments (default 300 with the paper config).
    #[arg(long)]
    test_seeds: Option<usize>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, env = "OFDMARL_SEED", default_value_t = 0)]
    seed: u64,
    /// Corrupt one analytic gradient; the check must then fail.
    #[arg(long)]
    fault: bool,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, env = "OFDMARL_SEED", default_value_t = 0)]
    seed: u64,
    /// Corrupt one analytic gradient; the gradient check must then fail.
    #[arg(long)]
    fault_gradient: bool,
}

#[derive(Args)]
struct BandsArgs {
    /// Training output directories, each holding an eval_log.csv.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long, default_value = "paper")]
    preset: String,
    #[arg(long)]
    variant: Option<Variant>,
}

enum Failure {
    /// A test or check did not pass.
    Test,
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Run(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Run(e.into())
    }
}

type CliResult = Result<(), Failure>;

struct Resolved {
    config: RunConfig,
    seed: u64,
    variant: Option<Variant>,
    agents: Vec<String>,
}

impl RunArgs {
    fn resolve(&self, command: &str) -> Result<Resolved, Error> {
        if let Some(path) = &self.manifest {
            let m = RunManifest::load(path)?;
            if m.command != command {
                return Err(Error::Config(format!(
                    "manifest {} records a '{}' run, not '{command}'",
                    path.display(),
                    m.command
                )));
            }
            m.config.validate()?;
            return Ok(Resolved {
                config: m.config,
                seed: m.master_seed,
                variant: m.variant,
                agents: m.agents,
            });
        }
        let mut config = match (&self.config, &self.preset) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(name)) => RunConfig::preset(name)?,
            (None, None) => RunConfig::paper(),
        };
        if let Some(v) = self.variant {
            config = config.with_variant(v);
        }
        config.validate()?;
        Ok(Resolved {
            config,
            seed: self.seed,
            variant: self.variant,
            agents: Vec::new(),
        })
    }
}

fn create_file(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", path.display())))
}

fn train(args: &TrainArgs) -> CliResult {
    let r = args.run.resolve("train")?;
    let sched = &r.config.schedule;
    let out = &args.run.out;
    fs::create_dir_all(out)?;

    let mut manifest = RunManifest::new("train", r.seed, r.variant, r.config.clone());
    manifest.artifacts = [TRAIN_MANIFEST, "training_log.csv", "eval_log.csv"]
        .map(String::from)
        .into_iter()
        .chain(
            (1..=sched.episodes)
                .filter(|e| e % sched.eval_every == 0)
                .map(checkpoint_name),
        )
        .collect();
    manifest.save(&out.join(TRAIN_MANIFEST))?;

    let split = EnvSplit::derive(r.seed, sched.eval_seeds, sched.test_seeds)?;
    let opts = TrainOptions {
        out_dir: Some(out.clone()),
        jobs: args.run.jobs,
        keep_records: false,
        progress: !args.quiet,
    };
    let outcome = run_training(&r.config, &split, r.seed, &opts)?;
    println!(
        "trained {} episodes ({} steps) into {}",
        sched.episodes,
        outcome.agent.steps(),
        out.display()
    );
    if let Some(last) = outcome.evals.last() {
        println!(
            "final eval mean reward {:.6} (episode {})",
            last.report.mean(),
            last.episode
        );
    }
    if let Some((episode, _)) = &outcome.best {
        println!("best eval point: episode {episode} ({})", checkpoint_name(*episode));
    }
    Ok(())
}

fn parse_agents(tokens: &[String], config: &RunConfig) -> Result<Vec<AgentSpec>, Error> {
    tokens.iter().map(|t| parse_agent(t.trim(), &config.cell)).collect()
}

fn print_reports(reports: &[ofdmarl_core::harness::EvalReport]) {
    for r in reports {
        let s = &r.summary;
        println!(
            "{}: mean {:.6} median {:.6} q1 {:.6} q3 {:.6} over {} environments",
            r.agent, s.mean, s.median, s.q1, s.q3, s.n
        );
    }
}

fn eval(args: &EvalArgs) -> CliResult {
    let r = args.run.resolve("train")?;
    let sched = &r.config.schedule;
    let agents = parse_agents(&args.agents, &r.config)?;
    let seeds = args.seeds.unwrap_or(sched.eval_seeds);
    let steps = args.steps.unwrap_or(sched.eval_steps());
    let split = EnvSplit::derive(r.seed, seeds, 0)?;
    fs::create_dir_all(&args.run.out)?;
    let reports = run_benchmark(&agents, &r.config.cell, &split.eval, steps, args.run.jobs)?;
    write_benchmark_csv(create_file(&args.run.out.join("eval.csv"))?, &reports)?;
    print_reports(&reports);
    Ok(())
}

fn bench(args: &BenchArgs) -> CliResult {
    let mut r = args.run.resolve("bench")?;
    if args.run.manifest.is_none() {
        r.agents = args.agents.iter().map(|a| a.trim().to_string()).collect();
        if let Some(steps) = args.steps {
            r.config.schedule.bench_steps = steps;
        }
        if let Some(n) = args.test_seeds {
            r.config.schedule.test_seeds = n;
        }
    }
    let agents = parse_agents(&r.agents, &r.config)?;
    let sched = &r.config.schedule;
    let out = &args.run.out;
    fs::create_dir_all(out)?;

    let mut manifest = RunManifest::new("bench", r.seed, r.variant, r.config.clone());
    manifest.agents = r.agents.clone();
    manifest.artifacts = vec![BENCH_MANIFEST.into(), "benchmark.csv".into()];
    manifest.save(&out.join(BENCH_MANIFEST))?;

    let split = EnvSplit::derive(r.seed, sched.eval_seeds, sched.test_seeds)?;
    let reports = run_benchmark(
        &agents,
        &r.config.cell,
        &split.test,
        sched.bench_steps,
        args.run.jobs,
    )?;
    write_benchmark_csv(create_file(&out.join("benchmark.csv"))?, &reports)?;
    print_reports(&reports);
    Ok(())
}

fn report(checks: &[Check]) -> CliResult {
    for c in checks {
        println!("{}", c.line());
    }
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(Failure::Test)
    }
}

fn bands(args: &BandsArgs) -> CliResult {
    let mut runs = Vec::with_capacity(args.runs.len());
    for dir in &args.runs {
        let path = dir.join("eval_log.csv");
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        runs.push(parse_eval_log(&text)?);
    }
    fs::create_dir_all(&args.out)?;
    let path = args.out.join("bands.csv");
    write_bands_csv(create_file(&path)?, &aggregate_bands(&runs))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn dump_config(args: &ConfigArgs) -> CliResult {
    let mut config = RunConfig::preset(&args.preset)?;
    if let Some(v) = args.variant {
        config = config.with_variant(v);
    }
    print!("{}", config.to_toml_string());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
        Command::Gradcheck(a) => selftest::gradient_check(a.instances, a.seed, a.fault)
            .map_err(Failure::from)
            .and_then(|c| report(&[c])),
        Command::Selftest(a) => selftest::run_selftest(SelftestOptions {
            seed: a.seed,
            fault_gradient: a.fault_gradient,
        })
        .map_err(Failure::from)
        .and_then(|c| report(&c)),
        Command::Bands(a) => bands(a),
        Command::Config(a) => dump_config(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Test) => ExitCode::from(1),
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Numeric(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
