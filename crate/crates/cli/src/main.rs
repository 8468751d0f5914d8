mod config;
mod output;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::SystemTime;

use clap::{Parser, Subcommand};
use qbsde::generators::list_gallery;

use config::ExperimentConfig;
use run::Failure;

/// Monte Carlo experiments on multi-dimensional quadratic BSDEs.
#[derive(Parser)]
#[command(name = "qbsde", version)]
struct Cli {
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory (default: `$QBSDE_OUT_DIR/<config name>`, else `out/<config name>`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace the config's seed.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// List the generator gallery.
    Gallery {
        #[arg(long)]
        json: bool,
    },
}

fn load_config(path: &Path, seed_override: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed_override {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn output_dir(cli_out: Option<PathBuf>, cfg: &ExperimentConfig, config_path: &Path) -> PathBuf {
    if let Some(d) = cli_out.or_else(|| cfg.output_dir.clone()) {
        return d;
    }
    let stem = cfg
        .name
        .clone()
        .or_else(|| config_path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "run".into());
    match std::env::var_os("QBSDE_OUT_DIR") {
        Some(base) if !base.is_empty() => PathBuf::from(base).join(stem),
        _ => PathBuf::from("out").join(stem),
    }
}

fn run_command(path: &Path, out: Option<PathBuf>, seed_override: Option<u64>, quiet: bool) -> Result<(), Failure> {
    let cfg = load_config(path, seed_override)?;
    let dir = output_dir(out, &cfg, path);
    let started = SystemTime::now();
    if !quiet {
        eprintln!("running {} experiment (seed {})", cfg.experiment.kind(), cfg.seed);
    }
    let outcome = match std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run::run(&cfg))) {
        Ok(r) => r?,
        Err(_) => return Err(Failure::Runtime("panic during the experiment".into())),
    };
    let manifest = output::write_outputs(&dir, &cfg, &outcome, started)
        .map_err(|e| Failure::Runtime(format!("cli::write_outputs: {}: {e}", dir.display())))?;
    if !quiet {
        for (k, v) in &outcome.verdicts {
            println!("{k}: {v}");
        }
        println!("manifest: {}", manifest.display());
    }
    Ok(())
}

fn print_gallery(json: bool) {
    let entries = list_gallery();
    if json {
        println!("{}", serde_json::to_string_pretty(&entries).expect("gallery serializes"));
        return;
    }
    let w = entries.iter().map(|e| e.label.len()).max().unwrap_or(5).max(5);
    let c = entries.iter().map(|e| e.components.len()).max().unwrap_or(1).max(10);
    println!("{:<w$}  {:<c$}  description", "label", "components");
    for e in &entries {
        println!("{:<w$}  {:<c$}  {}", e.label, e.components, e.description);
        if !e.parameters.is_empty() {
            println!("{:<w$}  {:<c$}  parameters: {}", "", "", e.parameters);
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Gallery { json } => {
            print_gallery(json);
            ExitCode::SUCCESS
        }
        Command::Run { config, out, seed_override } => match run_command(&config, out, seed_override, cli.quiet) {
            Ok(()) => ExitCode::SUCCESS,
            Err(f) => {
                eprintln!("error: {f}");
                ExitCode::from(f.exit_code() as u8)
            }
        },
    }
}
