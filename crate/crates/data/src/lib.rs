//! File formats, datasets and procedural toy images for the TIDE engine.

pub mod config;
pub mod dataset;
pub mod error;
pub mod grid;
pub mod manifest;
pub mod ppm;
pub mod resize;
pub mod toy;

pub use config::{load_json, parse_json, RunConfig};
pub use dataset::{Label, LabeledDataset, ABNORMAL, NORMAL};
pub use error::{DataError, Result};
pub use grid::compose_grid;
pub use manifest::{load_manifest, Manifest, ManifestEntry};
pub use ppm::{decode_ppm, encode_ppm, read_ppm, write_ppm};
pub use resize::resize_bilinear;
pub use toy::{make_toy_dataset, toy_image, ToyKind};
