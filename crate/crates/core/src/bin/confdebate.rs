use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tracing_subscriber::EnvFilter;

use confdebate::calibration::CalibrationMethod;
use confdebate::confidence::ConfidenceMode;
use confdebate::harness::{
    cmd_calibrate, cmd_debate, cmd_report, load_agents_file, load_dataset, render_report, CalibrateOptions,
    DebateOptions, ReportFormat, RunConfigFile,
};

#[derive(Parser)]
#[command(version, about = "Confidence-aware multi-agent debate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Ln,
    Sv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Platt,
    Histogram,
    Temperature,
    Vanilla,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one calibrator per agent from initial-round answers on a validation set.
    Calibrate {
        #[arg(long)]
        agents: PathBuf,
        #[arg(long)]
        validation: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Run debates over a dataset and write one transcript per question.
    Debate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        resume: bool,
        /// Largest tolerated fraction of failed debates.
        #[arg(long)]
        failure_budget: Option<f64>,
    },
    /// Score a transcript directory against gold answers.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn run(cli: Cli) -> confdebate::Result<ExitCode> {
    match cli.command {
        Command::Calibrate { agents, validation, mode, method, out, seed, bins, workers } => {
            let mode = match mode {
                Mode::Ln => ConfidenceMode::LN,
                Mode::Sv => ConfidenceMode::SV,
            };
            let method = match method {
                Method::Platt => CalibrationMethod::Platt,
                Method::Histogram => CalibrationMethod::Histogram,
                Method::Temperature => CalibrationMethod::Temperature,
                Method::Vanilla => CalibrationMethod::Vanilla,
            };
            let mut opts = CalibrateOptions::new(load_agents_file(&agents)?, load_dataset(&validation)?, mode, method, out);
            opts.dataset_id = validation.display().to_string();
            opts.global_seed = seed;
            opts.bins = bins;
            opts.workers = workers;
            let summary = cmd_calibrate(&opts)?;
            print!("{}", summary.to_table());
            Ok(if summary.all_fitted() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Debate { config, dataset, out, workers, seed, resume, failure_budget } => {
            let mut file = RunConfigFile::load(&config)?;
            if let Some(s) = seed {
                file.global_seed = s;
            }
            let workers = workers.unwrap_or(file.workers);
            let budget = failure_budget.unwrap_or(file.failure_budget);
            let mut opts = DebateOptions::new(file.into_debate_config()?, load_dataset(&dataset)?, out);
            opts.workers = workers;
            opts.resume = resume;
            opts.failure_budget = budget;
            let manifest = cmd_debate(&opts)?;
            println!(
                "{} questions: {} completed ({} resumed), {} failed; digest {}",
                manifest.n_questions,
                manifest.completed,
                manifest.resumed,
                manifest.failed.len(),
                manifest.config_digest
            );
            Ok(if manifest.failure_rate() > budget { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
        Command::Report { input, dataset, format } => {
            let report = cmd_report(&input, &load_dataset(&dataset)?)?;
            let format = match format {
                Format::Json => ReportFormat::Json,
                Format::Text => ReportFormat::Text,
                Format::Csv => ReportFormat::Csv,
            };
            print!("{}", render_report(&report, format));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
