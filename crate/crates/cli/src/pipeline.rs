//! End-to-end steps shared by the subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tide_core::{train, Rng, TideVae, TrainReport};
use tide_data::{load_manifest, make_toy_dataset, read_ppm, resize_bilinear, write_ppm, LabeledDataset, Manifest, ManifestEntry, RunConfig, ToyKind};
use tide_eval::{substitution_experiment, SubstitutionConfig, SubstitutionResult};

/// Stream used to initialize weights, kept apart from the batch-order stream.
const INIT_STREAM: u64 = 0x1417;

pub const MANIFEST_NAME: &str = "manifest.txt";

/// Fits a fresh model to every image of `data`, writing one JSON record per
/// epoch to `log`.
pub fn train_generator(data: &LabeledDataset, cfg: &RunConfig, log: &mut dyn Write) -> Result<(TideVae<f32>, TrainReport)> {
    cfg.validate()?;
    let Some((h, w)) = data.resolution() else { bail!("no training images") };
    if (h, w) != (cfg.model.height(), cfg.model.width()) {
        bail!("images are {h}x{w} but the model expects {}x{}", cfg.model.height(), cfg.model.width());
    }
    let model = TideVae::<f32>::new(cfg.model.clone(), &mut Rng::with_stream(cfg.train.seed, INIT_STREAM))?;
    let mut log_err = None;
    let (model, report) = train(model, &data.stacked()?, &cfg.train, |r| {
        if log_err.is_none() {
            if let Err(e) = writeln!(log, "{}", r.log_line()) {
                log_err = Some(e);
            }
        }
    })?;
    if let Some(e) = log_err {
        return Err(e).context("writing training log");
    }
    Ok((model, report))
}

/// Writes the toy images as PPM files plus a manifest into `dir`.
pub fn write_toyset(kind: ToyKind, n: usize, resolution: usize, seed: u64, dir: &Path) -> Result<PathBuf> {
    let data = make_toy_dataset(kind, n, resolution, seed)?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut manifest = Manifest::default();
    for ((img, &label), path) in data.images().iter().zip(data.labels()).zip(data.paths()) {
        write_ppm(img, dir.join(path))?;
        manifest.entries.push(ManifestEntry { path: path.clone(), label, split: None });
    }
    let mpath = dir.join(MANIFEST_NAME);
    std::fs::write(&mpath, manifest.to_text()).with_context(|| format!("writing {}", mpath.display()))?;
    Ok(mpath)
}

/// Writes `sample-NNNN.ppm` for each image and a `grid.ppm` contact sheet.
pub fn write_samples(images: &[tide_core::Tensor<f32>], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::with_capacity(images.len() + 1);
    for (i, img) in images.iter().enumerate() {
        let p = dir.join(format!("sample-{i:04}.ppm"));
        write_ppm(img, &p)?;
        written.push(p);
    }
    let columns = (images.len() as f64).sqrt().ceil() as usize;
    let grid = tide_data::compose_grid(images, columns.max(1), 2)?;
    let p = dir.join("grid.ppm");
    write_ppm(&grid, &p)?;
    written.push(p);
    Ok(written)
}

/// Images from a directory of `.ppm` files (sorted by name) or a manifest.
/// With `target`, images are resized; otherwise they must already agree.
pub fn load_images(source: &Path, target: Option<(usize, usize)>) -> Result<LabeledDataset> {
    if source.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(source)
            .with_context(|| format!("listing {}", source.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("ppm")) && p.file_name() != Some("grid.ppm".as_ref()))
            .collect();
        files.sort();
        if files.is_empty() {
            bail!("no .ppm images in {}", source.display());
        }
        let mut images = Vec::with_capacity(files.len());
        for f in &files {
            let img = read_ppm(f)?;
            images.push(match target {
                Some(t) => resize_bilinear(&img, t)?,
                None => img,
            });
        }
        let n = images.len();
        let paths = files.iter().map(|p| p.display().to_string()).collect();
        Ok(LabeledDataset::new(images, vec![0; n], paths)?)
    } else {
        let target = match target {
            Some(t) => t,
            None => {
                let m = Manifest::read(source)?;
                let Some(first) = m.entries.first() else { bail!("manifest {} has no entries", source.display()) };
                let base = source.parent().unwrap_or(Path::new(""));
                let s = read_ppm(base.join(&first.path))?.shape().to_vec();
                (s[1], s[2])
            }
        };
        Ok(load_manifest(source, None, target)?)
    }
}

/// Settings for a full substitution run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubstitutionRunConfig {
    /// Model and training settings for both per-class generators.
    pub generator: RunConfig,
    pub protocol: SubstitutionConfig,
    /// Pretrained generators; each class without one is trained from the real set.
    pub normal_checkpoint: Option<PathBuf>,
    pub abnormal_checkpoint: Option<PathBuf>,
}

pub struct SubstitutionOutcome {
    pub result: SubstitutionResult,
    pub normal: TideVae<f32>,
    pub abnormal: TideVae<f32>,
}

/// Trains (or loads) one generator per class on the full real class subset,
/// then runs the fold protocol.
pub fn run_substitution(real: &LabeledDataset, cfg: &SubstitutionRunConfig, log: &mut dyn Write) -> Result<SubstitutionOutcome> {
    let mut generator = |label: u8, ckpt: &Option<PathBuf>| -> Result<TideVae<f32>> {
        match ckpt {
            Some(p) => Ok(tide_core::trainer::load_checkpoint(p)?),
            None => {
                writeln!(log, "# training generator for class {label}")?;
                let mut run = cfg.generator.clone();
                run.train.seed = run.train.seed.wrapping_add(label as u64);
                Ok(train_generator(&real.with_label(label), &run, log)?.0)
            }
        }
    };
    let normal = generator(0, &cfg.normal_checkpoint)?;
    let abnormal = generator(1, &cfg.abnormal_checkpoint)?;
    let result = substitution_experiment(real, &normal, &abnormal, &cfg.protocol)?;
    Ok(SubstitutionOutcome { result, normal, abnormal })
}
