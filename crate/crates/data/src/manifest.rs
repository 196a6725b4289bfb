//! Line-oriented dataset manifests.
//!
//! One record per line: `<path> <label> [<split>]`, separated by tabs or
//! spaces. Blank lines and lines starting with `#` are ignored. Relative paths
//! resolve against the manifest's base directory.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::dataset::{Label, LabeledDataset};
use crate::error::{io_err, DataError, Result};
use crate::ppm::read_ppm;
use crate::resize::resize_bilinear;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub label: Label,
    pub split: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(DataError::Manifest {
                    line: line_no,
                    detail: format!("expected `<path> <label> [<split>]`, got {} fields", fields.len()),
                });
            }
            let label = match fields[1] {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(DataError::Manifest {
                        line: line_no,
                        detail: format!("label {other:?} is not 0 or 1"),
                    })
                }
            };
            if !seen.insert(fields[0].to_string()) {
                return Err(DataError::Manifest { line: line_no, detail: format!("duplicate path {}", fields[0]) });
            }
            entries.push(ManifestEntry {
                path: fields[0].to_string(),
                label,
                split: fields.get(2).map(|s| s.to_string()),
            });
        }
        Ok(Self { entries })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&std::fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = match &e.split {
                Some(s) => writeln!(out, "{}\t{}\t{s}", e.path, e.label),
                None => writeln!(out, "{}\t{}", e.path, e.label),
            };
        }
        out
    }
}

/// Loads every manifest entry in file order, resized to `target` `(H, W)`.
pub fn load_manifest(
    manifest_path: impl AsRef<Path>,
    base_dir: Option<&Path>,
    target: (usize, usize),
) -> Result<LabeledDataset> {
    let manifest_path = manifest_path.as_ref();
    let manifest = Manifest::read(manifest_path)?;
    if manifest.entries.is_empty() {
        return Err(DataError::Invalid(format!("manifest {} has no entries", manifest_path.display())));
    }
    let base: PathBuf = match base_dir {
        Some(b) => b.to_path_buf(),
        None => manifest_path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let mut images = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        let p = base.join(&e.path);
        if !p.is_file() {
            return Err(DataError::MissingFile(p));
        }
        images.push(resize_bilinear(&read_ppm(&p)?, target)?);
    }
    LabeledDataset::new(
        images,
        manifest.entries.iter().map(|e| e.label).collect(),
        manifest.entries.iter().map(|e| e.path.clone()).collect(),
    )
}
