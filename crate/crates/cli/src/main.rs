use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _};
use clap::{Args, Parser, Subcommand};

use walkerlab::report::{Format, Report};
use walkerlab::runner::{metric_of, run_checks, run_transport};
use walkerlab::spec::{load_spec, Problem, ProblemSpec};
use walkerlab::render_metric;

#[derive(Debug, Parser)]
#[command(name = "walkerlab", version)]
#[command(about = "Checks Walker metrics and Riemann pullback-extensions at seeded sample points")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the spec's check list and write a report
    Check(Common),
    /// Print the component expressions of the extension metric a spec describes
    Build(Common),
    /// Parallel transport along the spec's curve
    Transport(Common),
}

#[derive(Debug, Args)]
struct Common {
    spec: PathBuf,

    /// Number of sample points (overrides the spec).
    #[arg(long)]
    samples: Option<usize>,

    /// Sampling seed (overrides the spec).
    #[arg(long)]
    seed: Option<u64>,

    /// Residual tolerance (overrides the spec).
    #[arg(long)]
    tol: Option<f64>,

    /// Write output here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "report-text")]
    format: Format,
}

impl Common {
    fn load(&self) -> anyhow::Result<ProblemSpec> {
        let mut spec = load_spec(&self.spec)?;
        if let Some(n) = self.samples {
            if n == 0 {
                bail!("--samples must be positive");
            }
            spec.sampling.count = n;
        }
        if let Some(s) = self.seed {
            spec.sampling.seed = s;
        }
        if let Some(t) = self.tol {
            if !(t >= 0.0) {
                bail!("--tol must be a non-negative number");
            }
            spec.sampling.tolerance = t;
        }
        Ok(spec)
    }

    fn label(&self) -> String {
        self.spec.display().to_string()
    }

    fn emit(&self, text: &str) -> anyhow::Result<()> {
        match &self.output {
            Some(path) => write_file(path, text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn report_status(args: &Common, report: &Report) -> anyhow::Result<ExitCode> {
    args.emit(&report.render(args.format))?;
    Ok(if report.verdict { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Check(args) => {
            let spec = args.load()?;
            report_status(&args, &run_checks(&spec, &args.label()))
        }
        Command::Transport(args) => {
            let spec = args.load()?;
            if spec.transport.is_none() {
                bail!("{} has no transport section", args.label());
            }
            report_status(&args, &run_transport(&spec, &args.label()))
        }
        Command::Build(args) => {
            let spec = args.load()?;
            if matches!(spec.problem, Problem::Metric(_)) {
                bail!("build needs an extension spec");
            }
            let g = metric_of(&spec)?;
            args.emit(&render_metric(&g, args.format))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
