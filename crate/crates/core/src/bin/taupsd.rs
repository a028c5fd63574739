use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use taupsd::harness::{convergence_study, corpus_manifest, run, Experiment, ExperimentConfig, RunReport, Status};
use taupsd::Error;

/// Run a tau-quantization experiment, or list the symbol corpus.
#[derive(Debug, Parser)]
#[command(name = "taupsd", version)]
struct Cli {
    /// Experiment name (e.g. hs-identity, factorize, cordes), or `corpus`.
    experiment: String,

    /// Experiment config (JSON). Without it the experiment runs on its defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Directory for report.json, rows.csv and dumps.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Comma-separated grid sizes N for a convergence study.
    #[arg(long, value_delimiter = ',')]
    levels: Vec<usize>,

    /// Print only failing and warning rows.
    #[arg(long)]
    quiet: bool,
}

fn exit_for(e: &Error) -> ExitCode {
    match e {
        Error::Config { .. } | Error::Lookup(_) => ExitCode::from(2),
        _ => ExitCode::from(3),
    }
}

fn print_report(report: &RunReport, quiet: bool) {
    for r in &report.rows {
        if quiet && !matches!(r.status, Status::Fail | Status::Warn) {
            continue;
        }
        print!(
            "{:<4} {}  measured={:e} target={:e} tolerance={:e}",
            r.status.as_str(),
            r.check,
            r.measured,
            r.target,
            r.tolerance
        );
        match &r.diagnostics {
            Some(d) => println!("  ({d})"),
            None => println!(),
        }
    }
    let s = &report.summary;
    println!(
        "{}: {} pass, {} warn, {} fail, {} info in {:.2} s",
        report.config.experiment, s.pass, s.warn, s.fail, s.info, report.elapsed_seconds
    );
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    if cli.experiment == "corpus" {
        return match corpus_manifest() {
            Ok(m) => {
                println!("{}", serde_json::to_string_pretty(&m).expect("manifest serializes"));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_for(&e)
            }
        };
    }

    let result = (|| {
        let experiment: Experiment = cli.experiment.parse()?;
        let mut cfg = match &cli.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::new(experiment),
        };
        if cfg.experiment != experiment {
            return Err(Error::Config {
                path: "experiment".into(),
                msg: format!(
                    "config is for `{}`, command line asks for `{experiment}`",
                    cfg.experiment
                ),
            });
        }
        if let Some(out) = &cli.out {
            cfg.output = Some(out.clone());
        }
        if cli.levels.is_empty() {
            run(&cfg)
        } else {
            convergence_study(&cfg, &cli.levels)
        }
    })();

    match result {
        Ok(report) => {
            print_report(&report, cli.quiet);
            if let Some(dir) = &report.config.output {
                println!("wrote {}", dir.display());
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}
