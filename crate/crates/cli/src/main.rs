use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use trihealth_cli::stages;
use trihealth_cli::{CliError, PipelineConfig};

#[derive(Parser)]
#[command(
    name = "trihealth",
    about = "Chronic-disease screening pipeline over daily behavioral data",
    version
)]
struct Cli {
    /// Pipeline configuration file (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker thread count; 0 picks the core count. Never changes outputs.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Print what would run without writing anything.
    #[arg(long, global = true)]
    dry_run: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic cohort files.
    Generate,
    /// Apply the three cleaning rules.
    Clean,
    /// Build the 35-attribute feature matrix.
    Featurize,
    /// Fill missing cells (writes both MI and KNNI matrices).
    Impute,
    /// Fit the configured final model per disease.
    Train,
    /// Nested cross-validation comparison plus expert-rule baselines.
    Eval,
    /// Shapley attributions for the trained models.
    Explain,
    /// Run every stage in order, skipping up-to-date ones.
    RunAll,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.apply_seed(seed);
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let config = load_config(&cli)?;
    let out = config.out_dir.clone();

    if cli.dry_run && !matches!(cli.command, Command::RunAll) {
        println!("dry run: would run the stage against {}", out.display());
        return Ok(());
    }

    match cli.command {
        Command::Generate => stages::cmd_generate(&config, &out),
        Command::Clean => stages::cmd_clean(&config, &out),
        Command::Featurize => stages::cmd_featurize(&config, &out),
        Command::Impute => stages::cmd_impute(&config, &out),
        Command::Train => stages::cmd_train(&config, &out),
        Command::Eval => stages::cmd_eval(&config, &out),
        Command::Explain => stages::cmd_explain(&config, &out),
        Command::RunAll => stages::cmd_run_all(&config, &out, cli.dry_run),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version requests are not errors
            if err.use_stderr() {
                eprintln!("{err}");
                return ExitCode::from(1);
            }
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
