use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static geometry of a TIDE encoder/decoder pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TideConfig {
    /// `[height, width]`; both must be divisible by 8.
    pub image_size: [usize; 2],
    pub channels: usize,
    pub latent_dim: usize,
    pub stem_filters: usize,
    pub msb_filters: [usize; 4],
    pub pool_filters: [usize; 3],
    pub encoder_fc: usize,
}

impl Default for TideConfig {
    fn default() -> Self {
        Self {
            image_size: [96, 96],
            channels: 3,
            latent_dim: 6,
            stem_filters: 16,
            msb_filters: [32, 64, 128, 256],
            pool_filters: [64, 128, 256],
            encoder_fc: 256,
        }
    }
}

impl TideConfig {
    /// Default widths at a different square resolution.
    pub fn with_resolution(size: usize) -> Self {
        Self { image_size: [size, size], ..Self::default() }
    }

    pub fn height(&self) -> usize {
        self.image_size[0]
    }

    pub fn width(&self) -> usize {
        self.image_size[1]
    }

    /// Channels of the deepest feature volume.
    pub fn bottleneck_channels(&self) -> usize {
        self.msb_filters[3]
    }

    /// Spatial extent after the three stride-2 pooling convolutions.
    pub fn bottleneck_hw(&self) -> (usize, usize) {
        (self.height() / 8, self.width() / 8)
    }

    /// Width of the decoder's first fully connected layer (= flattened bottleneck).
    pub fn decoder_fc(&self) -> usize {
        let (h, w) = self.bottleneck_hw();
        self.bottleneck_channels() * h * w
    }

    pub fn validate(&self) -> Result<()> {
        let [h, w] = self.image_size;
        if h == 0 || w == 0 || h % 8 != 0 || w % 8 != 0 {
            return Err(Error::Config(format!(
                "image_size {h}x{w}: both extents must be positive multiples of 8"
            )));
        }
        if self.channels == 0 || self.latent_dim == 0 || self.stem_filters == 0 || self.encoder_fc == 0 {
            return Err(Error::Config("channel, latent and layer widths must be positive".into()));
        }
        if self.msb_filters.iter().chain(&self.pool_filters).any(|&f| f == 0) {
            return Err(Error::Config("filter counts must be positive".into()));
        }
        if self.msb_filters.windows(2).any(|p| p[1] != 2 * p[0]) {
            return Err(Error::Config(format!(
                "msb_filters {:?} must double at every stage",
                self.msb_filters
            )));
        }
        Ok(())
    }
}
