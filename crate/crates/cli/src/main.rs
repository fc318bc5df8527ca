use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use conelab_cli::config::{Format, Overrides, RunConfig, OUT_DIR_ENV};
use conelab_cli::experiments::{run_experiment, RunError, EXPERIMENTS};
use conelab_cli::output::{write_outcome, write_summary, Summary, SummaryEntry};
use conelab_cli::suite::{run_all, status_line, write_suite};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "conelab", version, about = "Potential theory experiments on singular minimal cones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cone constants, lambda* and the head of the mode table.
    Info,
    /// Run one experiment and write its reports.
    Run {
        /// One of: spectrum, green, bhp, martin, fatou, criticality, hardy,
        /// hyperbolicity, uniformity, chains, sobolev, dirichlet-hypotheses.
        experiment: String,
    },
    /// Run the acceptance suite.
    All,
    /// List the experiments.
    List,
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Cone as "p,q", e.g. 3,3 for the Simons cone.
    #[arg(long, global = true)]
    cone: Option<String>,
    /// Override of the curvature constant a.
    #[arg(long, global = true)]
    a: Option<f64>,
    /// laplace or jacobi.
    #[arg(long, global = true)]
    op: Option<String>,
    /// Custom coefficient of |A|^2; overrides --op.
    #[arg(long = "c-a", global = true)]
    c_a: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Window lengths in log r, comma separated.
    #[arg(long = "T", global = true, value_delimiter = ',')]
    schedule: Option<Vec<f64>>,
    /// Number of pole directions for Martin kernels.
    #[arg(long, global = true)]
    dirs: Option<usize>,
    /// Depth of the pole sequence r_n = 2^-n.
    #[arg(long, global = true)]
    n: Option<u32>,
    /// Chain spacing in units of a.
    #[arg(long, global = true)]
    spacing: Option<f64>,
    #[arg(long, global = true)]
    levels: Option<usize>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    quadruples: Option<usize>,
    #[arg(long, global = true)]
    pairs: Option<usize>,
    #[arg(long = "hardy-samples", global = true)]
    hardy_samples: Option<usize>,
    /// Multiplier for every pinned tolerance.
    #[arg(long = "tolerance-scale", global = true)]
    tolerance_scale: Option<f64>,
    /// Output directory; also settable through CONELAB_OUT_DIR.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output formats, comma separated: json, csv.
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_format)]
    formats: Option<Vec<Format>>,
    /// JSON config with the same keys as these flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "json" => Ok(Format::Json),
        "csv" => Ok(Format::Csv),
        other => Err(format!("unknown format {other:?}")),
    }
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            cone: self.cone.clone(),
            a: self.a,
            op: self.op.clone(),
            c_a: self.c_a,
            lambda: self.lambda,
            seed: self.seed,
            schedule: self.schedule.clone(),
            dirs: self.dirs,
            n: self.n,
            spacing: self.spacing,
            levels: self.levels,
            trials: self.trials,
            quadruples: self.quadruples,
            pairs: self.pairs,
            hardy_samples: self.hardy_samples,
            tolerance_scale: self.tolerance_scale,
            out: self.out.clone(),
            formats: self.formats.clone(),
            json: self.json.then_some(true),
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn finish(summary: &Summary, json: bool, table: String) -> ExitCode {
    if json {
        print!("{}", summary.to_json());
    } else {
        print!("{table}");
    }
    if summary.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match cli.flags.config.as_deref().map(Overrides::from_file).transpose() {
        Ok(f) => f,
        Err(e) => return usage(e),
    };
    let env_out = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    let cfg = match RunConfig::resolve(file, env_out, cli.flags.overrides()) {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    match cli.command {
        Command::List => {
            for name in EXPERIMENTS {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Info => match conelab_cli::info(&cfg) {
            Ok(info) if cfg.json => {
                println!("{}", serde_json::to_string_pretty(&info).expect("info serializes"));
                ExitCode::SUCCESS
            }
            Ok(info) => {
                print!("{}", info.text());
                ExitCode::SUCCESS
            }
            Err(e) => usage(e),
        },
        Command::Run { experiment } => {
            let outcome = match run_experiment(&experiment, &cfg) {
                Ok(o) => o,
                Err(e @ (RunError::Unknown(_) | RunError::Config(_))) => return usage(e),
            };
            let dir = cfg.out.join(&experiment);
            let summary = Summary::new(&format!("run {experiment}"), cfg.seed, vec![SummaryEntry::from(&outcome)]);
            if let Err(e) = write_outcome(&outcome, &dir, &cfg).and_then(|_| write_summary(&summary, &dir)) {
                return usage(format!("cannot write to {}: {e}", dir.display()));
            }
            finish(&summary, cfg.json, summary.table())
        }
        Command::All => {
            let run = match run_all(&cfg) {
                Ok(r) => r,
                Err(e) => return usage(e),
            };
            if let Err(e) = write_suite(&run, &cfg, &run.dir) {
                return usage(format!("cannot write to {}: {e}", run.dir.display()));
            }
            let mut table = String::new();
            for r in &run.runs {
                let ok = r.outcome.passed() && r.within_limit();
                table.push_str(&status_line(r.criterion.id, r.criterion.title, ok, Some(r.elapsed), Some(r.criterion.limit)));
                table.push('\n');
                for a in r.outcome.assertions.iter().filter(|a| !a.passed) {
                    table.push_str(&format!("      failed: {} ({})\n", a.name, a.detail));
                }
            }
            let ok = run.runs.iter().filter(|r| r.outcome.passed()).count();
            table.push_str(&format!("{ok}/{} criteria passed; reports in {}\n", run.runs.len(), run.dir.display()));
            finish(&run.summary, cfg.json, table)
        }
    }
}
