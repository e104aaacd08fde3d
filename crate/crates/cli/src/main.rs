//! `hjsep`: separability diagnostics for time-dependent Hamiltonians.
//!
//! Exit codes: 0 all enabled checks passed, 1 a check failed, 2 input or
//! validation error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hjsep::check::{run_check, run_transform, Overrides};
use hjsep::fixtures::emit_fixture;
use hjsep::problem::{ProblemSpec, TransformSpec};

#[derive(Parser)]
#[command(
    name = "hjsep",
    version,
    about = "Pointwise Hamilton-Jacobi separability diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every diagnostic on a problem file.
    Check {
        problem: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        /// Run only the dual-bundle integrability test.
        #[arg(long)]
        fast: bool,
    },
    /// Verify a change of coordinates and write the transformed problem.
    Transform {
        problem: PathBuf,
        transform: PathBuf,
        /// Defaults to `<problem>_transformed.json` next to the problem file.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Write a shipped example problem set.
    Example {
        name: String,
        #[arg(long, default_value = ".")]
        dir: PathBuf,
    },
}

#[derive(Args)]
struct RunFlags {
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Relative pass threshold.
    #[arg(long)]
    tol: Option<f64>,
    /// Relative singular-value threshold for rank decisions.
    #[arg(long)]
    rank_tol: Option<f64>,
    /// Write the JSON report to this path.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print the JSON report to stdout instead of the summary.
    #[arg(long)]
    json: bool,
}

impl RunFlags {
    fn overrides(&self, fast: bool) -> Overrides {
        Overrides {
            samples: self.samples,
            seed: self.seed,
            pass_tol: self.tol,
            rank_tol: self.rank_tol,
            fast,
        }
    }

    fn emit(&self, json: &str, summary: &str) -> Result<(), String> {
        if let Some(path) = &self.report {
            write(path, &format!("{json}\n"))?;
        }
        if self.json {
            println!("{json}");
        } else {
            print!("{summary}");
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_problem(path: &Path) -> Result<ProblemSpec, String> {
    ProblemSpec::from_json(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn default_output(problem: &Path) -> PathBuf {
    let stem = problem
        .file_stem()
        .map_or_else(|| "problem".into(), |s| s.to_string_lossy());
    problem.with_file_name(format!("{stem}_transformed.json"))
}

fn run(cli: Cli) -> Result<i32, String> {
    match cli.command {
        Command::Check { problem, run, fast } => {
            let spec = load_problem(&problem)?;
            let report = run_check(&spec, &run.overrides(fast)).map_err(|e| format!("{}: {e}", problem.display()))?;
            run.emit(&report.to_json(), &report.summary())?;
            Ok(report.exit_code())
        }
        Command::Transform {
            problem,
            transform,
            output,
            run,
        } => {
            let spec = load_problem(&problem)?;
            let tspec =
                TransformSpec::from_json(&read(&transform)?).map_err(|e| format!("{}: {e}", transform.display()))?;
            let (new_spec, report) = run_transform(&spec, &tspec, &run.overrides(false)).map_err(|e| e.to_string())?;
            let output = output.unwrap_or_else(|| default_output(&problem));
            write(&output, &format!("{}\n", new_spec.to_json()))?;
            run.emit(&report.to_json(), &report.summary())?;
            if !run.json {
                println!("wrote {}", output.display());
            }
            Ok(report.exit_code())
        }
        Command::Example { name, dir } => {
            for path in emit_fixture(&name, &dir).map_err(|e| e.to_string())? {
                println!("{}", path.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
