//! The TIDE architecture: multiscale residual blocks, a Gaussian latent
//! encoder and the mirrored decoder.

mod config;
mod msb;
mod params;
mod vae;

pub use config::TideConfig;
pub use msb::{msb_forward, ConvParams, MsbParams};
pub use params::{Bound, ParamEntry, ParamId, ParamStore};
pub use vae::{reparameterize, reparameterize_with, DecoderParams, EncoderParams, LatentStats, TideVae};

/// Builds a model, returning it with its parameter-shape manifest.
pub fn build_model<T: crate::Scalar>(
    config: TideConfig,
    rng: &mut crate::Rng,
) -> crate::Result<(TideVae<T>, Vec<ParamEntry>)> {
    let model = TideVae::new(config, rng)?;
    let manifest = model.count_parameters();
    Ok((model, manifest))
}
