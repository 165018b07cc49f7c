use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use metahint::analyze::{run_analyze, AnalyzeOptions, ReportName};
use metahint::fixture::paper_fixture;
use metahint::simulate::{simulate, SimulationError, SimulationSpec};
use metahint::CliError;
use metahint_analytics::{AnalyticsConfig, PValueMethod};
use metahint_core::{write_log, QuotaPolicy};
use metahint_service::{ApiConfig, ServiceError};

#[derive(Parser)]
#[command(name = "metahint", version, about = "Hint service and analytics toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Auto,
    Exact,
    Asymptotic,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service until interrupted.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compute reports from an event log.
    Analyze {
        #[arg(long)]
        log: PathBuf,
        /// sequence-stats, engagement, performance or labels; repeatable. Default: all.
        #[arg(long = "report")]
        reports: Vec<ReportName>,
        /// CSV with question_id,assignment_id,mean_score of a previous cohort.
        #[arg(long)]
        difficulty: Option<PathBuf>,
        /// Label students by attempts on the reference assignment.
        #[arg(long)]
        competency: bool,
        /// Analytics settings (TOML).
        #[arg(long)]
        analytics_config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "auto")]
        p_method: Method,
        #[arg(long, default_value_t = QuotaPolicy::DEFAULT_MAX_HINTS)]
        max_hints: u32,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
    /// Generate a seeded synthetic event log.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the bundled cohort fixture log.
    FixturePaper {
        #[arg(long)]
        out: PathBuf,
        /// Also write the matching past-cohort scores CSV here.
        #[arg(long)]
        scores: Option<PathBuf>,
    },
}

fn load_analytics_config(path: Option<PathBuf>) -> Result<AnalyticsConfig, CliError> {
    let Some(path) = path else {
        return Ok(AnalyticsConfig::default());
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn serve(config: PathBuf) -> Result<(), CliError> {
    let config = ApiConfig::load(&config).map_err(|e| CliError::Config(e.to_string()))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
    runtime.block_on(metahint_service::serve(config)).map_err(|e| match e {
        ServiceError::Config(_) | ServiceError::Questions(_) | ServiceError::Provider(_) => CliError::Config(e.to_string()),
        ServiceError::Store(_) => CliError::Data(e.to_string()),
        ServiceError::Io { .. } => CliError::Io(e.to_string()),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Serve { config } => serve(config),
        Command::Analyze {
            log,
            reports,
            difficulty,
            competency,
            analytics_config,
            p_method,
            max_hints,
            out,
        } => {
            let opts = AnalyzeOptions {
                log,
                reports: if reports.is_empty() { ReportName::ALL.to_vec() } else { reports },
                out_dir: out,
                difficulty,
                competency,
                config: load_analytics_config(analytics_config)?,
                p_method: match p_method {
                    Method::Auto => PValueMethod::Auto,
                    Method::Exact => PValueMethod::Exact,
                    Method::Asymptotic => PValueMethod::Asymptotic,
                },
                quota: QuotaPolicy::new(max_hints).map_err(|e| CliError::Config(e.to_string()))?,
            };
            let result = run_analyze(&opts)?;
            for w in &result.warnings {
                tracing::warn!("{w}");
            }
            for f in &result.files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Simulate { spec, out } => {
            let spec = SimulationSpec::load(&spec).map_err(|e| CliError::Config(e.to_string()))?;
            let events = simulate(&spec).map_err(|e| match e {
                SimulationError::Invalid(_) | SimulationError::Read { .. } => CliError::Config(e.to_string()),
                SimulationError::Replay(_) => CliError::Data(e.to_string()),
            })?;
            write_log(&out, &events).map_err(|e| CliError::Io(e.to_string()))?;
            println!("{} events -> {}", events.len(), out.display());
            Ok(())
        }
        Command::FixturePaper { out, scores } => {
            let fixture = paper_fixture();
            write_log(&out, &fixture.events).map_err(|e| CliError::Io(e.to_string()))?;
            if let Some(path) = scores {
                let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io(e.to_string()))?;
                for row in &fixture.question_scores {
                    w.serialize(row).map_err(|e| CliError::Io(e.to_string()))?;
                }
                w.flush().map_err(|e| CliError::Io(e.to_string()))?;
            }
            println!("{} events -> {}", fixture.events.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
