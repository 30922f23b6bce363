use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use microevent::runner::{parse_formats, run_pipeline, run_stage, run_synth, run_synth_sweep, ExperimentConfig, ReportFormat, RunContext};
use microevent::Result;

#[derive(Parser)]
#[command(name = "microevent", version, about = "Detect release micro-events in forum message streams")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON). `MICROEVENT__a__b=v` environment variables
    /// override keys.
    #[arg(long, global = true, default_value = "experiment.json")]
    config: PathBuf,
    /// Output directory; defaults to the config's `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed, replacing the config's `seed` and the synthetic seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated report formats: json, md, svg. JSON is always written.
    #[arg(long, global = true, default_value = "json,md")]
    format: String,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Read the message dump and release history, filter and split.
    Ingest,
    /// Bucket messages into labeled time steps.
    Timesteps,
    /// Fit text models and pool per-step features.
    Features,
    /// Select features, tune and fit every estimator.
    Train,
    /// Test metrics, permutation tests and effect sizes.
    Evaluate,
    /// Goodness-of-fit diagnostics of the logistic model.
    Diagnose,
    /// Assemble the report from the persisted artifacts.
    Report,
    /// All stages from ingest to report.
    Run,
    /// Write one synthetic corpus in place of ingest and timesteps.
    Synth {
        /// Fraction of event-related messages in positive steps.
        #[arg(long, default_value_t = 0.25)]
        fraction: f64,
        /// Posts per sample of the novelty/diversity comparison.
        #[arg(long, default_value_t = 500)]
        sample_size: usize,
        /// Repeats of the novelty/diversity comparison.
        #[arg(long, default_value_t = 30)]
        repeats: usize,
    },
    /// Detectability sweep over the configured fraction grid.
    Sweep,
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(s) = common.seed {
        config.seed = s;
        config.synth.synthetic.seed = s;
    }
    let out = common.out.clone().unwrap_or_else(|| {
        let o = Path::new(&config.output_dir);
        if o.is_relative() {
            common.config.parent().unwrap_or(Path::new(".")).join(o)
        } else {
            o.to_path_buf()
        }
    });
    Ok((config, out))
}

fn execute(cli: Cli) -> Result<()> {
    let formats: Vec<ReportFormat> = parse_formats(&cli.common.format)?;
    if let Some(n) = cli.common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| microevent::Error::Config(format!("--jobs: {e}")))?;
    }
    let (config, out) = load(&cli.common)?;
    match cli.command {
        Command::Run => {
            let report = run_pipeline(config, &out, &formats)?;
            println!("{}: report written to {}", report.dataset, out.display());
        }
        Command::Sweep => {
            let report = run_synth_sweep(config, &out, &formats)?;
            for t in &report.thresholds {
                match t.threshold {
                    Some(f) => println!("{}: threshold f = {f:.2}", t.estimator.abbreviation()),
                    None => println!("{}: no significant fraction", t.estimator.abbreviation()),
                }
            }
        }
        Command::Synth { fraction, sample_size, repeats } => {
            let mut ctx = RunContext::open(config, &out)?;
            let s = run_synth(&mut ctx, fraction, sample_size, repeats).map_err(|e| e.at_stage("synth"))?;
            println!("{} messages; novelty {:.3}, diversity {:.3}", s.n_messages, s.similarity.novelty, s.similarity.diversity_a);
        }
        stage => {
            let name = match stage {
                Command::Ingest => "ingest",
                Command::Timesteps => "timesteps",
                Command::Features => "features",
                Command::Train => "train",
                Command::Evaluate => "evaluate",
                Command::Diagnose => "diagnose",
                _ => "report",
            };
            let mut ctx = RunContext::open(config, &out)?;
            run_stage(&mut ctx, name, &formats)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
