use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use clay_analytics::study_data::{CSI_SUMMARIES, TLX_SUMMARIES, UX_SUMMARIES};
use clay_analytics::TestVariant;
use clay_core::taxonomy::STUDY_STYLES;
use clay_core::Taxonomy;
use clay_service::analyze::{analyze, collect_logs, report_from_csv, write_analysis};
use clay_service::config::ClockKind;
use clay_service::{simulate, CliError, FsStore, Overrides, Policy, ServiceConfig, StyleChoice};

#[derive(Parser)]
#[command(name = "clay", version, about = "Vagueness-balancing design workflow service")]
struct Cli {
    /// TOML config file; overridden by CLAY_* variables, then by flags.
    #[arg(long, global = true, env = "CLAY_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API.
    Serve {
        #[command(flatten)]
        overrides: Overrides,
        /// Assign one of the six study styles when a session omits its style.
        #[arg(long)]
        random_style: bool,
    },
    /// Run scripted sessions against the mock backend and write their logs.
    Simulate {
        #[arg(long, value_enum)]
        policy: Policy,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, conflicts_with = "random_style")]
        style: Option<String>,
        /// Draw each session's style from the six study styles.
        #[arg(long)]
        random_style: bool,
        /// Moodboard cycles (Clay policies).
        #[arg(long)]
        k: Option<usize>,
        /// Design cycles (Clay policies).
        #[arg(long)]
        k_design: Option<usize>,
        /// Free prompts (baseline policy).
        #[arg(long)]
        prompts: Option<usize>,
        /// Directory for the `.jsonl` logs; artifacts go to the data directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Compare interaction counts of Clay and Baseline session logs.
    Analyze {
        /// Log files or directories of `.jsonl` logs.
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        welch: bool,
    },
    /// Render comparison tables from summary or sample CSVs (bundled study tables by default).
    Report {
        #[arg(long)]
        csv: Vec<PathBuf>,
        #[arg(long)]
        welch: bool,
        /// Also write the machine-readable rows here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Check a taxonomy document (the bundled one when no path is given).
    ValidateTaxonomy { path: Option<PathBuf> },
    /// Re-hash stored artifacts and check session references.
    Audit {
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

fn variant(welch: bool) -> TestVariant {
    if welch {
        TestVariant::Welch
    } else {
        TestVariant::Pooled
    }
}

fn resolve(cli_config: &Option<PathBuf>, overrides: &Overrides) -> Result<ServiceConfig, CliError> {
    ServiceConfig::resolve(cli_config.as_deref(), |k| std::env::var(k).ok(), overrides)
}

async fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Serve { overrides, random_style } => {
            let cfg = resolve(&cli.config, &overrides)?;
            let shutdown = async {
                let _ = tokio::signal::ctrl_c().await;
            };
            clay_service::serve_with_shutdown(&cfg, random_style, shutdown).await
        }
        Command::Simulate { policy, count, seed, style, random_style, k, k_design, prompts, out, mut overrides } => {
            overrides.clock = overrides.clock.or(Some(ClockKind::Logical));
            let cfg = resolve(&cli.config, &overrides)?;
            let store = Arc::new(FsStore::open(&cfg.data_dir)?);
            let engine = cfg.build_engine(store)?;
            let mut params = policy.default_params();
            params.k = k.unwrap_or(params.k);
            params.k_design = k_design.unwrap_or(params.k_design);
            params.prompts = prompts.unwrap_or(params.prompts);
            let choice = match (style, random_style) {
                (Some(s), _) => StyleChoice::Fixed(s),
                (None, true) => StyleChoice::Random,
                (None, false) => StyleChoice::Fixed(STUDY_STYLES[0].to_string()),
            };
            let runs = simulate(&engine, policy, params, count, seed, &choice, &out).await?;
            for (path, s) in &runs {
                println!("{}\t{}\t{}\t{}", s.id.0, s.style_seed, s.interaction_count(), path.display());
            }
            Ok(())
        }
        Command::Analyze { logs, out, welch } => {
            let paths = collect_logs(&logs)?;
            let analysis = analyze(&paths, variant(welch))?;
            print!("{}", analysis.report.render());
            for p in write_analysis(&analysis, &out)? {
                eprintln!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Report { csv, welch, json } => {
            let inputs: Vec<(String, String)> = if csv.is_empty() {
                vec![
                    ("user experience".into(), UX_SUMMARIES.into()),
                    ("NASA-TLX".into(), TLX_SUMMARIES.into()),
                    ("CSI".into(), CSI_SUMMARIES.into()),
                ]
            } else {
                csv.iter()
                    .map(|p| {
                        std::fs::read_to_string(p)
                            .map(|t| (p.display().to_string(), t))
                            .map_err(|e| CliError::Io { path: p.display().to_string(), source: e })
                    })
                    .collect::<Result<_, _>>()?
            };
            let mut exports = Vec::new();
            for (name, text) in &inputs {
                let report = report_from_csv(text, variant(welch))?;
                println!("== {name}\n{}", report.render());
                exports.push(report.export());
            }
            if let Some(p) = json {
                let text = serde_json::to_string_pretty(&exports).expect("export serializes");
                std::fs::write(&p, text).map_err(|e| CliError::Io { path: p.display().to_string(), source: e })?;
            }
            Ok(())
        }
        Command::ValidateTaxonomy { path } => {
            let t = match &path {
                Some(p) => Taxonomy::load(p).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?,
                None => Taxonomy::bundled(),
            };
            println!("ok: {} styles, digest {}", t.styles().len(), t.digest());
            for s in t.styles() {
                println!("  {} ({} sub-styles)", s.name, s.sub_styles.len());
            }
            Ok(())
        }
        Command::Audit { data_dir } => {
            let overrides = Overrides { data_dir, ..Overrides::default() };
            let cfg = resolve(&cli.config, &overrides)?;
            let report = FsStore::open(&cfg.data_dir)?.audit()?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if report.is_clean() {
                Ok(())
            } else {
                Err(CliError::Validation("store audit found problems".into()))
            }
        }
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
