//! KL and JS divergences between distributions gridded on the same
//! hemisphere quadrature.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::geometry::{GridId, HemisphereGrid};

/// Floor applied to the approximating distribution inside logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

/// Per-cell probabilities aligned with a [`HemisphereGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedDist {
    probs: Vec<f64>,
    grid_id: GridId,
}

impl GriddedDist {
    /// Wraps probabilities that already sum to one on `grid`.
    pub fn new(probs: Vec<f64>, grid: &HemisphereGrid) -> Result<Self> {
        if probs.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                actual: probs.len(),
            });
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidInput("probabilities must be finite and >= 0".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self {
            probs,
            grid_id: grid.id(),
        })
    }

    /// Evaluates a density on the grid and normalizes by cell solid angle.
    pub fn from_density(grid: &HemisphereGrid, f: impl Fn(crate::geometry::UnitVec3) -> f64) -> Result<Self> {
        let values: Vec<f64> = grid.directions().iter().map(|&v| f(v)).collect();
        let probs = crate::distributions::normalize_on_grid(&values, grid)?;
        Ok(Self {
            probs,
            grid_id: grid.id(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn grid_id(&self) -> GridId {
        self.grid_id
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

fn check_same_grid(p: &GriddedDist, q: &GriddedDist) -> Result<()> {
    if p.grid_id != q.grid_id || p.probs.len() != q.probs.len() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Σ_{p_k > 0} p_k log(p_k / max(q_k, floor)).
pub(crate) fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(pk, _)| **pk > 0.0)
        .map(|(&pk, &qk)| pk * (pk.ln() - qk.max(PROB_FLOOR).ln()))
        .sum()
}

/// ½ KL(p‖m) + ½ KL(q‖m) with m = ½(p + q).
pub(crate) fn js_raw(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&pk, &qk) in p.iter().zip(q) {
        let m = 0.5 * (pk + qk);
        if pk > 0.0 {
            acc += 0.5 * pk * (pk / m).ln();
        }
        if qk > 0.0 {
            acc += 0.5 * qk * (qk / m).ln();
        }
    }
    acc
}

pub fn kl_divergence(p: &GriddedDist, q: &GriddedDist) -> Result<f64> {
    check_same_grid(p, q)?;
    Ok(kl_raw(&p.probs, &q.probs).max(0.0))
}

pub fn js_divergence(p: &GriddedDist, q: &GriddedDist) -> Result<f64> {
    check_same_grid(p, q)?;
    Ok(js_raw(&p.probs, &q.probs).clamp(0.0, LN_2))
}
