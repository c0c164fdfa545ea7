//! Command-line front end: `freegeo <experiment> [--config FILE] [options]`.
//!
//! Exit codes: 0 when every metric passes, 2 when any metric fails, 1 on an
//! execution error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use freegeo::lab::{run, RunConfig, Verdict};

#[derive(Parser)]
#[command(name = "freegeo", version, about = "Finite-n free information geometry experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the `seed` key.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the report, CSV series and ensemble files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Overrides one key, e.g. `--set n=16`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula on every sample of an ensemble file.
    Eval {
        #[arg(long)]
        formula: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Sample a Gibbs ensemble and save it.
    Sample(Common),
    /// Normalized entropy of a Gibbs ensemble.
    Entropy(Common),
    /// Empirical W2 between two ensemble files.
    W2 {
        #[arg(long)]
        a: Option<PathBuf>,
        #[arg(long)]
        b: Option<PathBuf>,
        #[arg(long)]
        method: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Finite-n counterexample measurements.
    Counterexample(Common),
    /// Transport-entropy inequality for a tilted Gibbs measure.
    Talagrand(Common),
    /// Entropy sandwich along Gaussian displacement interpolation.
    Geodesic(Common),
    /// One-dimensional quasi-moment fixed point.
    Moment(Common),
    /// Concentration of quantifier-free formulas along an n ladder.
    Qfconv(Common),
}

fn split_set(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("--set expects KEY=VALUE, got `{s}`"))
}

fn execute(experiment: &str, common: Common, mut extra: Vec<(String, String)>) -> Result<Verdict, String> {
    let file = match &common.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?),
        None => None,
    };
    let mut overrides = common.sets.iter().map(|s| split_set(s)).collect::<Result<Vec<_>, _>>()?;
    overrides.append(&mut extra);
    if let Some(seed) = common.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    let cfg = RunConfig::assemble(experiment, file.as_deref(), &overrides).map_err(|e| e.to_string())?;
    let out_dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut report = run(&cfg, &out_dir).map_err(|e| e.to_string())?;

    let rendered = match common.format {
        Format::Json => {
            if common.out.is_some() {
                report.write_artifacts(&out_dir).map_err(|e| e.to_string())?;
            }
            report.to_json().map_err(|e| e.to_string())?
        }
        Format::Csv => {
            if common.out.is_some() {
                report.write_artifacts(&out_dir).map_err(|e| e.to_string())?;
            }
            report.metrics_csv().map_err(|e| e.to_string())?
        }
    };
    if let Some(dir) = &common.out {
        let name = match common.format {
            Format::Json => format!("{experiment}_report.json"),
            Format::Csv => format!("{experiment}_metrics.csv"),
        };
        std::fs::write(dir.join(name), &rendered).map_err(|e| e.to_string())?;
    }
    println!("{rendered}");
    eprint!("{}", report.summary());
    Ok(report.verdict())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let path = |key: &str, p: Option<PathBuf>| p.map(|p| (key.to_string(), p.display().to_string()));
    let result = match cli.command {
        Command::Eval { formula, input, common } => {
            let extra = formula.map(|f| ("formula".to_string(), f)).into_iter().chain(path("input", input)).collect();
            execute("eval", common, extra)
        }
        Command::W2 { a, b, method, common } => {
            let extra = path("a", a)
                .into_iter()
                .chain(path("b", b))
                .chain(method.map(|m| ("method".to_string(), m)))
                .collect();
            execute("w2", common, extra)
        }
        Command::Sample(c) => execute("sample", c, Vec::new()),
        Command::Entropy(c) => execute("entropy", c, Vec::new()),
        Command::Counterexample(c) => execute("counterexample", c, Vec::new()),
        Command::Talagrand(c) => execute("talagrand", c, Vec::new()),
        Command::Geodesic(c) => execute("geodesic", c, Vec::new()),
        Command::Moment(c) => execute("moment", c, Vec::new()),
        Command::Qfconv(c) => execute("qfconv", c, Vec::new()),
    };
    match result {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
