use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use tide_core::gradcheck::{check_model, check_primitives, toy_config};
use tide_core::trainer::{load_checkpoint, save_checkpoint};
use tide_core::Rng;
use tide_data::{load_json, load_manifest, RunConfig, ToyKind};
use tide_eval::{auc_table, diversity_lines, relative_diversity, EncoderPatchExtractor, FeatureExtractor, KernelKind};

use crate::pipeline::{load_images, run_substitution, train_generator, write_samples, write_toyset, SubstitutionRunConfig};

#[derive(Debug, Parser)]
#[command(name = "tide", version, about = "Multiscale residual VAE for small medical-style image sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kernel {
    Pixel,
    Feature,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Blobs,
    Stripes,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one model on the images of a manifest.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep only entries with this label.
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
        label: Option<u8>,
        /// Training log path; defaults to `<out>.log`.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Sample images from a checkpoint.
    Generate {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spectral diversity of a real and a generated set.
    Diversity {
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        generated: PathBuf,
        #[arg(long, value_enum, default_value = "pixel")]
        kernel: Kernel,
        /// Model whose encoder provides the feature kernel.
        #[arg(long)]
        ckpt: Option<PathBuf>,
    },
    /// Train on synthetic images, test on real ones.
    Substitution {
        #[arg(long)]
        real_manifest: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Finite-difference check of all gradients.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Image size of the model-level check.
        #[arg(long, default_value_t = 32)]
        size: usize,
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
    },
    /// Write a procedural toy dataset and its manifest.
    Toyset {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        resolution: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 1 on runtime failure, 2 on usage errors.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            1
        }
    }
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Train { config, manifest, out: ckpt, label, log } => {
            let cfg: RunConfig = load_json(&config)?;
            cfg.validate()?;
            let mut data = load_manifest(&manifest, None, (cfg.model.height(), cfg.model.width()))?;
            if let Some(l) = label {
                data = data.with_label(l);
                if data.is_empty() {
                    bail!("manifest has no entries with label {l}");
                }
            } else if data.count(0) > 0 && data.count(1) > 0 {
                bail!("manifest mixes both labels; pass --label to pick the class to model");
            }
            let log_path = log.unwrap_or_else(|| with_suffix(&ckpt, ".log"));
            let mut log_file = std::fs::File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?;
            let (model, report) = train_generator(&data, &cfg, &mut log_file)?;
            save_checkpoint(&model, &ckpt)?;
            writeln!(
                out,
                "trained {} epochs ({:?}), best epoch {}, checkpoint {}",
                report.epochs.len(),
                report.stop_reason,
                report.best_epoch,
                ckpt.display()
            )?;
        }
        Command::Generate { ckpt, count, seed, out: dir } => {
            if count == 0 {
                bail!("--count must be at least 1");
            }
            let model = load_checkpoint::<f32>(&ckpt)?;
            let images = model.generate(&mut Rng::new(seed), count)?.unstack();
            let files = write_samples(&images, &dir)?;
            writeln!(out, "wrote {} images and {}", count, files.last().expect("grid").display())?;
        }
        Command::Diversity { real, generated, kernel, ckpt } => {
            let model = ckpt.as_ref().map(load_checkpoint::<f32>).transpose()?;
            let target = model.as_ref().map(|m| (m.config().height(), m.config().width()));
            let real_set = load_images(&real, target)?;
            let target = target.or(real_set.resolution());
            let gen_set = load_images(&generated, target)?;
            let (kind, extractor) = match kernel {
                Kernel::Pixel => (KernelKind::Pixel, None),
                Kernel::Feature => {
                    let Some(m) = model.as_ref() else { bail!("--kernel feature needs --ckpt") };
                    (KernelKind::Feature, Some(EncoderPatchExtractor::new(m)))
                }
            };
            let ex = extractor.as_ref().map(|e| e as &dyn FeatureExtractor);
            let d = relative_diversity(gen_set.images(), real_set.images(), kind, ex)?;
            write!(out, "{}", diversity_lines(&d))?;
        }
        Command::Substitution { real_manifest, config } => {
            let cfg: SubstitutionRunConfig = load_json(&config)?;
            let res = (cfg.generator.model.height(), cfg.generator.model.width());
            let real = load_manifest(&real_manifest, None, res)?;
            let outcome = run_substitution(&real, &cfg, &mut std::io::sink())?;
            let name = real_manifest.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            write!(out, "{}", auc_table(&outcome.result, &name))?;
        }
        Command::Gradcheck { seed, size, step, tolerance } => {
            let mut failed = 0;
            let mut checks = check_primitives(seed, step)?;
            checks.extend(check_model(toy_config(size), 2, seed, step, 8)?);
            for c in &checks {
                let ok = c.passed(tolerance);
                failed += usize::from(!ok);
                writeln!(out, "{} {:<40} max rel error {:.3e}", if ok { "ok  " } else { "FAIL" }, c.name, c.max_rel_error)?;
            }
            if failed > 0 {
                bail!("{failed} of {} gradient checks exceeded {tolerance:e}", checks.len());
            }
            writeln!(out, "all {} gradient checks passed", checks.len())?;
        }
        Command::Toyset { kind, n, resolution, seed, out: dir } => {
            let kind = match kind {
                Kind::Blobs => ToyKind::Blobs,
                Kind::Stripes => ToyKind::Stripes,
            };
            let m = write_toyset(kind, n, resolution, seed, &dir)?;
            writeln!(out, "wrote {} images and {}", 2 * n, m.display())?;
        }
    }
    Ok(())
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
