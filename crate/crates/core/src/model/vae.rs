use crate::error::{shape_err, Error, Result};
use crate::graph::{Graph, Var};
use crate::model::config::TideConfig;
use crate::model::msb::{msb_forward, ConvParams, MsbParams};
use crate::model::params::{Bound, ParamEntry, ParamStore};
use crate::rng::{sample_standard_normal, Rng};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    pub stem: ConvParams,
    pub msb: [MsbParams; 4],
    pub pool: [ConvParams; 3],
    pub fc_hidden: ConvParams,
    pub fc_mu: ConvParams,
    pub fc_logvar: ConvParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecoderParams {
    pub fc_expand: ConvParams,
    /// Widths in decoding order, i.e. `msb_filters` reversed.
    pub msb: [MsbParams; 4],
    pub up: [ConvParams; 3],
    pub output: ConvParams,
}

/// Per-sample posterior mean and log-variance, both `[N, latent_dim]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentStats<T> {
    pub mu: Tensor<T>,
    pub logvar: Tensor<T>,
}

/// The multiscale residual VAE: configuration plus every trainable tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct TideVae<T> {
    config: TideConfig,
    params: ParamStore<T>,
    encoder: EncoderParams,
    decoder: DecoderParams,
}

impl<T: Scalar> TideVae<T> {
    /// Allocates all layers with He-uniform weights and zero biases.
    pub fn new(config: TideConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let c = &config;
        let [m1, m2, m3, m4] = c.msb_filters;
        let [p1, p2, p3] = c.pool_filters;
        let mut s = ParamStore::new();

        let stem = ConvParams::conv(&mut s, "encoder.stem", c.channels, c.stem_filters, 3, rng);
        let mut enc_msb = Vec::with_capacity(4);
        let mut pool = Vec::with_capacity(3);
        let ins = [c.stem_filters, p1, p2, p3];
        let outs = [m1, m2, m3, m4];
        for i in 0..4 {
            enc_msb.push(MsbParams::allocate(&mut s, &format!("encoder.msb{}", i + 1), ins[i], outs[i], rng));
            if i < 3 {
                let name = format!("encoder.pool{}", i + 1);
                pool.push(ConvParams::conv(&mut s, &name, outs[i], c.pool_filters[i], 3, rng));
            }
        }
        let fc_hidden = ConvParams::dense(&mut s, "encoder.fc_hidden", c.decoder_fc(), c.encoder_fc, rng);
        let fc_mu = ConvParams::dense(&mut s, "encoder.fc_mu", c.encoder_fc, c.latent_dim, rng);
        let fc_logvar = ConvParams::dense(&mut s, "encoder.fc_logvar", c.encoder_fc, c.latent_dim, rng);

        let fc_expand = ConvParams::dense(&mut s, "decoder.fc_expand", c.latent_dim, c.decoder_fc(), rng);
        let dec_specs = [(m4, m4), (m3, m3), (m2, m2), (m1, m1)];
        let mut dec_msb = Vec::with_capacity(4);
        let mut up = Vec::with_capacity(3);
        for (i, &(cin, f)) in dec_specs.iter().enumerate() {
            dec_msb.push(MsbParams::allocate(&mut s, &format!("decoder.msb{}", i + 1), cin, f, rng));
            if i < 3 {
                let name = format!("decoder.up{}", i + 1);
                up.push(ConvParams::conv_transpose(&mut s, &name, f, dec_specs[i + 1].0, 3, rng));
            }
        }
        let output = ConvParams::conv_transpose(&mut s, "decoder.output", m1, c.channels, 3, rng);

        let encoder = EncoderParams {
            stem,
            msb: enc_msb.try_into().expect("four blocks"),
            pool: pool.try_into().expect("three pools"),
            fc_hidden,
            fc_mu,
            fc_logvar,
        };
        let decoder = DecoderParams {
            fc_expand,
            msb: dec_msb.try_into().expect("four blocks"),
            up: up.try_into().expect("three ups"),
            output,
        };
        Ok(Self { config, params: s, encoder, decoder })
    }

    pub fn config(&self) -> &TideConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    pub fn encoder(&self) -> &EncoderParams {
        &self.encoder
    }

    pub fn decoder(&self) -> &DecoderParams {
        &self.decoder
    }

    /// Layer names, shapes and element counts in checkpoint order.
    pub fn count_parameters(&self) -> Vec<ParamEntry> {
        self.params.manifest()
    }

    /// Same architecture with parameters converted to another scalar type.
    pub fn cast<U: Scalar>(&self) -> TideVae<U> {
        TideVae {
            config: self.config.clone(),
            params: self.params.cast(),
            encoder: self.encoder.clone(),
            decoder: self.decoder.clone(),
        }
    }

    fn check_images(&self, shape: &[usize]) -> Result<()> {
        let c = &self.config;
        if shape.len() != 4 || shape[1] != c.channels || shape[2] != c.height() || shape[3] != c.width() {
            return shape_err(format!(
                "expected images [N, {}, {}, {}], got {shape:?}",
                c.channels,
                c.height(),
                c.width()
            ));
        }
        Ok(())
    }

    /// Encoder on the graph: returns `(mu, logvar)` nodes, each `[N, latent_dim]`.
    pub fn encode_graph(&self, g: &mut Graph<T>, p: &Bound, x: Var) -> Result<(Var, Var)> {
        self.check_images(g.value(x).shape())?;
        let e = &self.encoder;
        let mut h = e.stem.apply_conv(g, p, x, 1)?;
        for i in 0..4 {
            h = msb_forward(g, p, &e.msb[i], h)?;
            if i < 3 {
                h = e.pool[i].apply_conv(g, p, h, 2)?;
            }
        }
        let flat = g.flatten(h)?;
        let hidden = g.dense(flat, p.var(e.fc_hidden.weight), p.var(e.fc_hidden.bias))?;
        let hidden = g.relu(hidden);
        let mu = g.dense(hidden, p.var(e.fc_mu.weight), p.var(e.fc_mu.bias))?;
        let logvar = g.dense(hidden, p.var(e.fc_logvar.weight), p.var(e.fc_logvar.bias))?;
        Ok((mu, logvar))
    }

    /// Decoder on the graph: returns the output pre-activations `[N, C, H, W]`.
    ///
    /// Pixel log-probabilities are `log_sigmoid` of this node.
    pub fn decode_graph(&self, g: &mut Graph<T>, p: &Bound, z: Var) -> Result<Var> {
        let c = &self.config;
        let zs = g.value(z).shape();
        if zs.len() != 2 || zs[1] != c.latent_dim {
            return shape_err(format!("expected latent [N, {}], got {zs:?}", c.latent_dim));
        }
        let n = zs[0];
        let d = &self.decoder;
        let expanded = g.dense(z, p.var(d.fc_expand.weight), p.var(d.fc_expand.bias))?;
        let expanded = g.relu(expanded);
        let (bh, bw) = c.bottleneck_hw();
        let mut h = g.reshape(expanded, &[n, c.bottleneck_channels(), bh, bw])?;
        for i in 0..4 {
            h = msb_forward(g, p, &d.msb[i], h)?;
            if i < 3 {
                let up = &d.up[i];
                let y = g.conv_transpose2d(h, p.var(up.weight), p.var(up.bias), 2, 1, 1)?;
                h = g.relu(y);
            }
        }
        g.conv_transpose2d(h, p.var(d.output.weight), p.var(d.output.bias), 1, 1, 0)
    }

    pub fn encode(&self, x: &Tensor<T>) -> Result<LatentStats<T>> {
        let mut g = Graph::new();
        let p = self.params.bind(&mut g, false);
        let xv = g.input(x.clone());
        let (mu, logvar) = self.encode_graph(&mut g, &p, xv)?;
        Ok(LatentStats { mu: g.value(mu).clone(), logvar: g.value(logvar).clone() })
    }

    /// Returns `(pixel_log_probs, pre_activations)`.
    pub fn decode(&self, z: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
        let mut g = Graph::new();
        let p = self.params.bind(&mut g, false);
        let zv = g.input(z.clone());
        let pre = self.decode_graph(&mut g, &p, zv)?;
        let logp = g.log_sigmoid(pre);
        Ok((g.value(logp).clone(), g.value(pre).clone()))
    }

    /// Samples `n` images from the prior: `exp(decode(z))`, `z ~ N(0, I)`.
    pub fn generate(&self, rng: &mut Rng, n: usize) -> Result<Tensor<T>> {
        if n == 0 {
            return Err(Error::InvalidArgument("generate needs n >= 1".into()));
        }
        let z = sample_standard_normal(rng, &[n, self.config.latent_dim]);
        let (logp, _) = self.decode(&z)?;
        Ok(logp.map(|v| v.exp().max(T::zero()).min(T::one())))
    }
}

/// Draws `z = mu + exp(½·logvar) ⊙ ε` for value-level statistics.
pub fn reparameterize<T: Scalar>(stats: &LatentStats<T>, rng: &mut Rng) -> Result<Tensor<T>> {
    let eps = sample_standard_normal(rng, stats.mu.shape());
    reparameterize_with(stats, &eps)
}

pub fn reparameterize_with<T: Scalar>(stats: &LatentStats<T>, eps: &Tensor<T>) -> Result<Tensor<T>> {
    let mut g = Graph::new();
    let mu = g.input(stats.mu.clone());
    let lv = g.input(stats.logvar.clone());
    let z = g.reparameterize(mu, lv, eps.clone())?;
    Ok(g.value(z).clone())
}
