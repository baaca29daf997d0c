use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use scope_cli::commands::{self, infer::default_mask_path};
use scope_cli::config::{split_overrides, RunConfig, KEYS};
use scope_cli::{thread_pool, CliError, Result, EXIT_CODES};

#[derive(Parser, Debug)]
#[command(
    name = "scope",
    version,
    about = "Patch-graph vessel segmentation with topology-aware training",
    after_help = after_help()
)]
struct Cli {
    /// key = value configuration file; `--key=value` flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a seeded synthetic vessel dataset (img_NNNN.pgm, msk_NNNN.pgm, manifest.txt).
    Synth {
        /// Output directory; defaults to the `dataset` key.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train on the even-index pairs of `dataset`; writes checkpoint and loss log to `output`.
    Train,
    /// Predict one image (or a stored feature map) with a trained checkpoint.
    Infer {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Treat `--input` as a stored [H, W, 64] feature map.
        #[arg(long)]
        features: bool,
        /// Soft prediction (PGM, maxval 255).
        #[arg(long)]
        out: PathBuf,
        /// Thresholded mask; defaults to `<out stem>_mask.pgm`.
        #[arg(long)]
        mask_out: Option<PathBuf>,
    },
    /// Score predicted masks against ground truth and write a metrics CSV.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare every analytic gradient with central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Multiply analytic gradients by this factor (detector self-test).
        #[arg(long, default_value_t = 1.0, hide = true)]
        perturb: f64,
    },
    /// Train and score the loss/patch-size grid; writes `output/ablation.csv`.
    Ablate,
}

fn after_help() -> String {
    format!(
        "Config keys (set in --config or as --key=value):\n  {}\n\nSCOPE_THREADS caps the number of worker threads.\n\n{EXIT_CODES}",
        KEYS.join(", ")
    )
}

fn run(cli: Cli, overrides: Vec<(String, String)>) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    for (k, v) in &overrides {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    let pool = thread_pool()?;
    let started = Instant::now();

    match cli.command {
        Command::Synth { out } => {
            let dir = out.unwrap_or_else(|| cfg.dataset.clone());
            let entries = commands::synth(&cfg.synth, cfg.count, &dir)?;
            println!("wrote {} pairs to {}", entries.len(), dir.display());
        }
        Command::Train => {
            let (outcome, dir) = pool.install(|| commands::train(&cfg))?;
            print!("{}", commands::format_log(&outcome.epoch_loss));
            println!("checkpoint written to {}", dir.display());
        }
        Command::Infer {
            checkpoint,
            input,
            features,
            out,
            mask_out,
        } => {
            let mask_out = mask_out.unwrap_or_else(|| default_mask_path(&out));
            let pred = commands::infer_file(
                &checkpoint,
                &input,
                features,
                &out,
                &mask_out,
                cfg.patch_size,
                cfg.threshold,
            )?;
            println!(
                "{}x{} prediction, {} foreground pixels -> {}, {}",
                pred.mask.height(),
                pred.mask.width(),
                pred.mask.count(),
                out.display(),
                mask_out.display()
            );
        }
        Command::Eval { pred, gt, out } => {
            let report = pool.install(|| commands::eval_dirs(&pred, &gt))?;
            let csv = commands::format_eval_csv(&report);
            std::fs::write(&out, &csv).map_err(|e| CliError::io(&out, e))?;
            print!("{csv}");
            for (name, why) in &report.failures {
                eprintln!("{name}: {why}");
            }
            if !report.failures.is_empty() {
                return Err(CliError::PartialEval {
                    failed: report.failures.len(),
                    total: report.failures.len() + report.rows.len(),
                });
            }
        }
        Command::Gradcheck { seed, perturb } => {
            let rows = commands::gradcheck(seed, perturb);
            print!("{}", commands::format_report(&rows));
            let failed: Vec<&str> = rows
                .iter()
                .filter(|r| !r.passed())
                .map(|r| r.component.as_str())
                .collect();
            if !failed.is_empty() {
                return Err(CliError::GradCheck(failed.join(", ")));
            }
        }
        Command::Ablate => {
            let (_, csv) = pool.install(|| commands::ablate(&cfg))?;
            print!("{csv}");
        }
    }
    eprintln!("done in {:.1}s", started.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    let (args, overrides) = split_overrides(std::env::args().collect());
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli, overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
