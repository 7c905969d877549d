use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use orbitmatch_core::experiment::report::{self, Format};
use orbitmatch_core::experiment::{self, ExperimentConfig, ExperimentResult, Kind};
use orbitmatch_core::Error;

const THREADS_ENV: &str = "ORBITMATCH_THREADS";

#[derive(Parser)]
#[command(
    name = "orbitmatch",
    version,
    about = "Replicated shortest-distance and longest-common-substring experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        /// Overrides the config's master seed.
        #[arg(long, value_name = "U64")]
        seed: Option<u64>,
        /// Output directory (default: the config's `out`, else `out/<kind>`).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long, value_name = "N")]
        replicas: Option<usize>,
        /// Worker threads; falls back to ORBITMATCH_THREADS.
        #[arg(long, value_name = "N")]
        threads: Option<usize>,
    },
    /// Re-emit files from a finished run's results.csv and summary.json.
    Report {
        #[arg(long, value_name = "DIR")]
        input: PathBuf,
        /// csv, json or svg; repeatable (default: all three).
        #[arg(long, value_name = "FORMAT")]
        format: Vec<String>,
        /// Where to write (default: the input directory).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Print the supported experiment kinds, maps, observations and encoders.
    ListSystems,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("{THREADS_ENV}={v:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn run(
    config: PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
    replicas: Option<usize>,
    threads_flag: Option<usize>,
) -> Result<(), Failure> {
    if !config.is_file() {
        return Err(Failure::Usage(format!(
            "config file not found: {}",
            config.display()
        )));
    }
    let mut cfg =
        ExperimentConfig::load(&config).map_err(|e| Failure::Usage(format!("{}: {e}", config.display())))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = replicas {
        cfg.replicas = r;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let dir = out
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(cfg.kind.tag()));
    let result = experiment::run(&cfg, threads(threads_flag)?)?;
    let written = report::emit(&result, &dir, &[Format::Csv, Format::Json, Format::Svg])?;
    print_summary(&result);
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn print_summary(result: &ExperimentResult) {
    let s = &result.summary;
    let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"));
    println!(
        "{} k={} replicas={} seed={}: estimate {} theory {} rel_error {} ({:.2}s on {} threads)",
        s.kind.tag(),
        s.k,
        s.replicas,
        s.seed,
        fmt(s.estimate),
        fmt(s.theory),
        fmt(s.rel_error),
        result.runtime_secs,
        result.threads
    );
}

fn report_cmd(input: PathBuf, formats: Vec<String>, out: Option<PathBuf>) -> Result<(), Failure> {
    let formats: Vec<Format> = if formats.is_empty() {
        vec![Format::Csv, Format::Json, Format::Svg]
    } else {
        formats
            .iter()
            .map(|f| f.parse().map_err(|e: Error| Failure::Usage(e.to_string())))
            .collect::<Result<_, _>>()?
    };
    if !input.is_dir() {
        return Err(Failure::Usage(format!(
            "input directory not found: {}",
            input.display()
        )));
    }
    let (summary, rows) = report::load(&input)?;
    let dir = out.unwrap_or(input);
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
    for f in formats {
        let (name, text) = match f {
            Format::Csv => (report::CSV_FILE, report::csv(&rows)),
            Format::Json => (report::SUMMARY_FILE, report::json(&summary)),
            Format::Svg => (report::PLOT_FILE, report::svg(&summary)),
        };
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn list_systems() {
    println!("experiment kinds:");
    for k in Kind::ALL {
        println!("  {}", k.tag());
    }
    println!("maps (system.map.type):");
    println!("  m-times-mod1        {{ m }}              x -> m x mod 1");
    println!("  beta                {{ beta }}           x -> beta x mod 1, Parry measure");
    println!("  gauss                                  x -> {{1/x}}, Gauss measure");
    println!("  piecewise-doubling                     2^n (x - 2^-n) on [2^-n, 2^-n+1)");
    println!("  torus-expanding     {{ dim, factor }}    coordinatewise factor x mod 1");
    println!("  skew-product        {{ base, thresholds, fibers }}");
    println!("metrics (system.metric): torus-wrap, euclidean-box");
    println!("observations (system.observation.type):");
    println!("  identity, coordinate-projection {{ indices }}, affine {{ scale, offset }}");
    println!("sources (system.markov): stochastic matrix rows");
    println!("encoders (system.encoder.type):");
    println!("  identity, letter-repetition {{ weights }}, block-substitution {{ words, output_alphabet }}");
    println!("scrabble weights (system.weights): positive integers with gcd 1");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            replicas,
            threads,
        } => run(config, seed, out, replicas, threads),
        Command::Report { input, format, out } => report_cmd(input, format, out),
        Command::ListSystems => {
            list_systems();
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
