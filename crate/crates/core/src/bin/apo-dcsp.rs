use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use apo_dcsp::csp::{brute_force, CspInstance, Verdict, DEFAULT_BRUTE_FORCE_CAP};
use apo_dcsp::generators::{Family, GeneratorConfig, SensorParams};
use apo_dcsp::harness::{
    preset, replay, run_suite, write_outputs, ExperimentConfig, Manifest, RunOptions, PRESETS,
};
use apo_dcsp::metrics::TRIAL_HEADER;
use apo_dcsp::Protocol;

#[derive(Parser)]
#[command(
    name = "apo-dcsp",
    version,
    about = "Distributed constraint satisfaction simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment suite and write CSVs plus a run manifest.
    Run(RunArgs),
    /// Re-execute one trial recorded in a manifest.
    Replay(ReplayArgs),
    /// Generate one instance in text form.
    Generate(GenerateArgs),
    /// Decide an instance file by exhaustive search.
    Solve(SolveArgs),
    /// List the built-in suites.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// Built-in suite name (see `presets`).
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    suite: Option<String>,
    /// Experiment configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the config's `out`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record per-message traces into traces.txt.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    cycle_limit: Option<u64>,
    /// Parallel trials; 0 uses every CPU.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    assert_invariants: bool,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Cell key as written in the manifest.
    #[arg(long)]
    cell: String,
    /// Trial index within the cell.
    #[arg(long)]
    index: usize,
    /// Replay only this protocol.
    #[arg(long)]
    protocol: Option<String>,
    /// Print per-message trace lines after the result rows.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct GenerateArgs {
    /// minton, random or sensor
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = 30)]
    n: usize,
    #[arg(long, default_value_t = 2.3)]
    density: f64,
    #[arg(long, default_value_t = 3)]
    k: u32,
    #[arg(long, default_value_t = 30)]
    targets: usize,
    #[arg(long, default_value_t = 25.0)]
    range: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the instance here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    /// Largest domain product searched.
    #[arg(long, default_value_t = DEFAULT_BRUTE_FORCE_CAP)]
    cap: u128,
}

fn run(args: RunArgs) -> Result<ExitCode, String> {
    let config = match (&args.suite, &args.config) {
        (Some(name), _) => preset(name).map_err(|e| e.to_string())?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            ExperimentConfig::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        (None, None) => return Err("either --suite or --config is required".into()),
    };
    let out_dir = args
        .out
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let opts = RunOptions {
        jobs: args.jobs,
        trace: args.trace,
        assert_invariants: args.assert_invariants,
        cycle_limit: args.cycle_limit,
    };
    eprintln!(
        "running {} trials over {} cells",
        config.total_trials(),
        config.cells.len()
    );
    let out = run_suite(&config, &opts).map_err(|e| e.to_string())?;
    write_outputs(&out_dir, &out).map_err(|e| e.to_string())?;
    for s in &out.summaries {
        let p = s.p_value.map_or(String::new(), |p| format!(" p={p:.4}"));
        println!(
            "{:<48} {} solved={:.1}% cycles={:.2} msgs={:.1} work={:.1}{p}",
            s.cell.key, s.protocol, s.solved_pct, s.cycles.mean, s.messages.mean, s.work.mean
        );
    }
    println!("wrote {}", out_dir.display());
    let violations = out.violation_count();
    if args.assert_invariants && violations > 0 {
        for r in &out.records {
            for v in &r.result.violations {
                eprintln!("{} {} #{}: {v}", r.cell.key, r.result.protocol, r.index);
            }
        }
        eprintln!("{violations} invariant violations");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn replay_cmd(args: ReplayArgs) -> Result<ExitCode, String> {
    let text = fs::read_to_string(&args.manifest)
        .map_err(|e| format!("{}: {e}", args.manifest.display()))?;
    let manifest = Manifest::parse(&text).map_err(|e| e.to_string())?;
    let protocol = match &args.protocol {
        Some(p) => Some(Protocol::parse(p).ok_or_else(|| format!("unknown protocol `{p}`"))?),
        None => None,
    };
    let records = replay(&manifest, &args.cell, args.index, protocol, args.trace)
        .map_err(|e| e.to_string())?;
    println!("{}", TRIAL_HEADER.join(","));
    for r in &records {
        println!("{}", r.csv_row().join(","));
    }
    let mut violations = 0;
    for r in &records {
        violations += r.result.violations.len();
        for v in &r.result.violations {
            eprintln!("{}: {v}", r.result.protocol);
        }
        if let Some(trace) = &r.result.trace {
            println!("# trace {}", r.result.protocol);
            for l in trace {
                println!("{l}");
            }
        }
        if let Some(c) = r.result.no_solution_cycle {
            println!("# {} broadcast no-solution at cycle {c}", r.result.protocol);
        }
    }
    if manifest.assert_invariants && violations > 0 {
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn generate(args: GenerateArgs) -> Result<ExitCode, String> {
    let family =
        Family::parse(&args.family).ok_or_else(|| format!("unknown family `{}`", args.family))?;
    let mut config = match family {
        Family::MintonColoring => GeneratorConfig::minton(args.n, args.density, args.k),
        Family::RandomColoring => GeneratorConfig::random(args.n, args.density),
        Family::SensorField => GeneratorConfig::sensor(SensorParams {
            targets: args.targets,
            range: args.range,
            ..SensorParams::default()
        }),
    };
    if family != Family::SensorField {
        config.k = args.k;
    }
    let instance = config.generate(args.seed).map_err(|e| e.to_string())?;
    match &args.out {
        Some(path) => fs::write(path, instance.to_text()).map_err(|e| e.to_string())?,
        None => print!("{}", instance.to_text()),
    }
    eprintln!("{}", config.manifest_line(&instance, args.seed));
    Ok(ExitCode::SUCCESS)
}

fn solve(args: SolveArgs) -> Result<ExitCode, String> {
    let text = fs::read_to_string(&args.instance)
        .map_err(|e| format!("{}: {e}", args.instance.display()))?;
    let instance = CspInstance::from_text(&text).map_err(|e| e.to_string())?;
    match brute_force(&instance, args.cap).map_err(|e| e.to_string())? {
        Verdict::Satisfiable(a) => {
            println!("satisfiable");
            for (x, v) in a {
                println!("{x} {v}");
            }
        }
        Verdict::Unsatisfiable => println!("unsatisfiable"),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Replay(a) => replay_cmd(a),
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Presets => {
            for (name, _) in PRESETS {
                println!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::FAILURE
    })
}
