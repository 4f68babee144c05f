//! The amortized bandwidth-to-mixture network.
//!
//! Log-bandwidths are positionally encoded, passed through a small dense
//! network, and the raw outputs are read as a [`SymmetricParams`] vector.
//! Training backpropagates the fitting loss from [`crate::fit`] through the
//! network; the trained weights are frozen and stored in a versioned file.

mod encoding;
mod mlp;
mod train;
mod weights;

pub use encoding::{encode_input, PosEncConfig};
pub use mlp::{activation_pattern, backward, forward, DenseLayer, MlpParams, DEFAULT_LEAKY_SLOPE};
pub use train::{
    loss_and_weight_gradient, sample_bandwidths, train, train_with_progress, TrainConfig, TrainOutcome,
};
pub use weights::{load_weights, read_weights, save_weights, write_weights, FORMAT_VERSION, MAGIC};

use rand::Rng;

use crate::distributions::{AsgParams, SymmetricParams};
use crate::error::{Error, Result};

pub const HIDDEN_WIDTH: usize = 128;
pub const HIDDEN_LAYERS: usize = 3;

/// Frozen network plus the settings needed to interpret its input and
/// output.
#[derive(Debug, Clone, PartialEq)]
pub struct Amortizer {
    pub mlp: MlpParams,
    pub side: usize,
    pub pos_enc: PosEncConfig,
}

impl Amortizer {
    /// Layer widths: encoded input, three hidden layers, `3L + 2` outputs.
    pub fn layer_sizes(side: usize, pos_enc: &PosEncConfig) -> Vec<usize> {
        let mut sizes = vec![pos_enc.input_dim()];
        sizes.extend(std::iter::repeat_n(HIDDEN_WIDTH, HIDDEN_LAYERS));
        sizes.push(SymmetricParams::raw_len(side));
        sizes
    }

    pub fn init(side: usize, pos_enc: PosEncConfig, rng: &mut impl Rng) -> Self {
        let sizes = Self::layer_sizes(side, &pos_enc);
        Self {
            mlp: MlpParams::init(&sizes, DEFAULT_LEAKY_SLOPE, rng),
            side,
            pos_enc,
        }
    }

    pub fn zeros(side: usize, pos_enc: PosEncConfig) -> Self {
        let sizes = Self::layer_sizes(side, &pos_enc);
        Self {
            mlp: MlpParams::zeros(&sizes, DEFAULT_LEAKY_SLOPE),
            side,
            pos_enc,
        }
    }

    /// Checks that the network's ends match the encoding and side count.
    pub fn validate(&self) -> Result<()> {
        self.mlp.check_shapes()?;
        if self.mlp.input_dim() != self.pos_enc.input_dim() {
            return Err(Error::ShapeMismatch {
                expected: self.pos_enc.input_dim(),
                actual: self.mlp.input_dim(),
            });
        }
        if self.mlp.output_dim() != SymmetricParams::raw_len(self.side) {
            return Err(Error::ShapeMismatch {
                expected: SymmetricParams::raw_len(self.side),
                actual: self.mlp.output_dim(),
            });
        }
        if self.mlp.flatten().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("network weights must be finite".into()));
        }
        Ok(())
    }

    pub fn predict_raw(&self, p: &AsgParams) -> Result<Vec<f64>> {
        forward(&self.mlp, &encode_input(p, &self.pos_enc)?)
    }

    pub fn predict(&self, p: &AsgParams) -> Result<SymmetricParams> {
        SymmetricParams::from_raw(self.side, self.predict_raw(p)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn zero_network_gives_neutral_mixture() {
        let a = Amortizer::zeros(3, PosEncConfig::default());
        a.validate().unwrap();
        let q = a.predict(&AsgParams::bandwidths(20.0, 2.0).unwrap()).unwrap();
        let (a0, side) = q.weights();
        for w in &side {
            assert!((w - a0).abs() < 1e-15);
        }
        assert!((a0 - 1.0 / 7.0).abs() < 1e-15);
        for i in 0..3 {
            assert!((q.theta(i) - FRAC_PI_4).abs() < 1e-15);
            assert!((q.kappa_side(i) - 1.0).abs() < 1e-15);
        }
        assert!((q.kappa0() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn default_architecture() {
        let sizes = Amortizer::layer_sizes(14, &PosEncConfig::default());
        assert_eq!(sizes, vec![63, 128, 128, 128, 44]);
    }

    #[test]
    fn inference_leaves_weights_untouched() {
        let mut rng = crate::rng::stream(1, "test");
        let a = Amortizer::init(2, PosEncConfig::default(), &mut rng);
        let before = a.mlp.checksum();
        let p = AsgParams::bandwidths(300.0, 0.5).unwrap();
        let x = a.predict_raw(&p).unwrap();
        let y = a.predict_raw(&p).unwrap();
        assert_eq!(x, y);
        assert_eq!(a.mlp.checksum(), before);
    }
}
