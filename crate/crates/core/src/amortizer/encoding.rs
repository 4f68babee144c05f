use std::f64::consts::PI;

use crate::distributions::AsgParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PosEncConfig {
    pub num_bands: usize,
}

impl Default for PosEncConfig {
    fn default() -> Self {
        Self { num_bands: 10 }
    }
}

impl PosEncConfig {
    /// Features per log component: sin/cos per band plus the raw value.
    pub fn per_component(&self) -> usize {
        2 * self.num_bands + 1
    }

    pub fn input_dim(&self) -> usize {
        3 * self.per_component()
    }
}

/// Encodes `[log λ, log μ, log(μ/λ)]`: for each component x the values
/// `sin(2^k π x), cos(2^k π x)` for k = 0..num_bands, followed by x.
pub fn encode_input(p: &AsgParams, cfg: &PosEncConfig) -> Result<Vec<f64>> {
    if cfg.num_bands < 1 {
        return Err(Error::InvalidInput("positional encoding needs at least one band".into()));
    }
    if !(p.lambda > 0.0 && p.mu > 0.0) || !p.lambda.is_finite() || !p.mu.is_finite() {
        return Err(Error::InvalidInput(format!(
            "bandwidths must be positive to take logs (lambda={}, mu={})",
            p.lambda, p.mu
        )));
    }
    let (ll, lm) = (p.lambda.ln(), p.mu.ln());
    let logs = [ll, lm, lm - ll];
    let mut out = Vec::with_capacity(cfg.input_dim());
    for x in logs {
        let mut freq = PI;
        for _ in 0..cfg.num_bands {
            let (s, c) = (freq * x).sin_cos();
            out.push(s);
            out.push(c);
            freq *= 2.0;
        }
        out.push(x);
    }
    Ok(out)
}
