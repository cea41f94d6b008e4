use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mcf_core::analysis::{classify_shrinker, ClassifyOptions};
use mcf_core::geometry::{Gauge, Mesh};
use mcf_core::huisken::GaugeMap;
use mcf_lab::artifacts::write_json;
use mcf_lab::suite::Overrides;
use mcf_lab::{parse_scenario, report, run_scenario, run_suite, LabError, Result, SuiteOptions};

/// Mean curvature flow laboratory: run scenarios, batch suites and
/// acceptance reports.
#[derive(Parser)]
#[command(name = "mcf-lab", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Output root for runs, or for report files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the record interval in steps.
    #[arg(long, global = true)]
    record_every: Option<usize>,
    /// Override the step limit.
    #[arg(long, global = true)]
    max_steps: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run { scenario: PathBuf },
    /// Run every scenario file in a directory.
    Suite {
        dir: PathBuf,
        /// Run everything twice (second copy under `<out>/repeat`).
        #[arg(long)]
        repeat: bool,
    },
    /// Evaluate the acceptance criteria over run directories.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
    /// Classify a mesh against the model shrinkers.
    Classify {
        mesh: PathBuf,
        /// Treat the mesh as physical at this time (singular time 0, base
        /// point the origin) and rescale first; otherwise it is taken as
        /// already rescaled.
        #[arg(long, allow_hyphen_values = true)]
        time: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<u8> {
    let overrides = Overrides {
        seed: cli.global.seed,
        record_every: cli.global.record_every,
        max_steps: cli.global.max_steps,
    };
    match cli.command {
        Command::Run { scenario } => {
            let mut config = parse_scenario(&scenario)?;
            overrides.apply(&mut config);
            let dir = run_scenario(&config, cli.global.out.as_deref())?;
            println!("{}", dir.display());
            Ok(0)
        }
        Command::Suite { dir, repeat } => {
            let options = SuiteOptions {
                out: cli.global.out,
                overrides,
                repeat,
            };
            let mut failed = 0;
            for entry in run_suite(&dir, &options)? {
                match entry.result {
                    Ok(d) => println!("ok     {} -> {}", entry.name, d.display()),
                    Err(e) => {
                        failed += 1;
                        println!("failed {}: {e}", entry.name);
                    }
                }
            }
            Ok(if failed > 0 { 1 } else { 0 })
        }
        Command::Report { runs } => {
            let rep = report(&runs)?;
            let markdown = rep.to_markdown();
            if let Some(out) = &cli.global.out {
                std::fs::create_dir_all(out).map_err(|e| LabError::io(out, e))?;
                let md = out.join("report.md");
                std::fs::write(&md, &markdown).map_err(|e| LabError::io(&md, e))?;
                write_json(&out.join("report.json"), &rep)?;
            }
            print!("{markdown}");
            let failed = rep.failed();
            if failed > 0 {
                eprintln!("error: {}", LabError::Acceptance { failed, total: rep.criteria.len() });
                return Ok(1);
            }
            Ok(0)
        }
        Command::Classify { mesh, time } => {
            let result = classify(&mesh, time)?;
            let text = serde_json::to_string_pretty(&result).map_err(|e| LabError::invalid("json", e.to_string()))?;
            println!("{text}");
            Ok(0)
        }
    }
}

fn classify(path: &Path, time: Option<f64>) -> Result<mcf_core::analysis::ClassificationResult> {
    let run_err = |source| LabError::Run {
        name: path.display().to_string(),
        source,
    };
    let mesh = match time {
        Some(t) => {
            let physical = Mesh::read_obj(path, Gauge::Physical).map_err(|e| read_err(path, e))?;
            GaugeMap::default().rescale_surface(&physical, t).map_err(run_err)?
        }
        None => Mesh::read_obj(path, Gauge::Rescaled).map_err(|e| read_err(path, e))?,
    };
    classify_shrinker(&mesh, &ClassifyOptions::default()).map_err(run_err)
}

fn read_err(path: &Path, e: mcf_core::Error) -> LabError {
    match e {
        mcf_core::Error::Io { path, source } => LabError::Io { path, source },
        other => LabError::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: other.to_string(),
        },
    }
}
