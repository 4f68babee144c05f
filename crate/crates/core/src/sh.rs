//! Complex spherical harmonics `Y_l^m`, m = 0..=l, packed as real and
//! imaginary parts per level.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::UnitVec3;

pub const MAX_LEVEL: usize = 16;

/// Ordered set of SH degrees making up an encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShLevelSet {
    levels: Vec<usize>,
}

impl Default for ShLevelSet {
    /// Degrees {1, 2, 4, 8, 16}: 72 components.
    fn default() -> Self {
        Self {
            levels: vec![1, 2, 4, 8, 16],
        }
    }
}

impl ShLevelSet {
    pub fn new(mut levels: Vec<usize>) -> Result<Self> {
        levels.sort_unstable();
        levels.dedup();
        if levels.is_empty() || levels.iter().any(|&l| l > MAX_LEVEL) {
            return Err(Error::InvalidInput(format!(
                "SH levels must be a non-empty subset of 0..={MAX_LEVEL}"
            )));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn max_level(&self) -> usize {
        *self.levels.last().expect("non-empty")
    }

    /// Σ_l 2(l + 1).
    pub fn dimension(&self) -> usize {
        self.levels.iter().map(|l| 2 * (l + 1)).sum()
    }

    /// Offset of level `self.levels()[index]` in a packed vector.
    pub fn offset(&self, index: usize) -> usize {
        self.levels[..index].iter().map(|l| 2 * (l + 1)).sum()
    }

    /// (level, m, is_imaginary) for every packed component.
    pub fn layout(&self) -> Vec<(usize, usize, bool)> {
        let mut out = Vec::with_capacity(self.dimension());
        for &l in &self.levels {
            for imag in [false, true] {
                for m in 0..=l {
                    out.push((l, m, imag));
                }
            }
        }
        out
    }
}

/// Packed encoding: per level ascending, real parts for m = 0..=l, then
/// imaginary parts for m = 0..=l.
#[derive(Debug, Clone, PartialEq)]
pub struct IdeVector {
    pub components: Vec<f64>,
}

impl IdeVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            components: vec![0.0; dim],
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn add_scaled(&mut self, other: &IdeVector, s: f64) {
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            *a += s * b;
        }
    }

    pub fn max_abs_diff(&self, other: &IdeVector) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Rotation-invariant power per level: |c_l0|² + 2 Σ_{m>0} |c_lm|²
    /// (negative orders mirror positive ones for real functions).
    pub fn level_power(&self, levels: &ShLevelSet) -> Vec<f64> {
        levels
            .levels()
            .iter()
            .enumerate()
            .map(|(idx, &l)| {
                let off = levels.offset(idx);
                (0..=l)
                    .map(|m| {
                        let re = self.components[off + m];
                        let im = self.components[off + l + 1 + m];
                        let w = if m == 0 { 1.0 } else { 2.0 };
                        w * (re * re + im * im)
                    })
                    .sum()
            })
            .collect()
    }
}

/// Table of normalized associated Legendre values divided by sin^m θ,
/// indexed `[l][m]`, Condon–Shortley phase included.
fn legendre_table(max_l: usize, z: f64) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = (0..=max_l).map(|l| vec![0.0; l + 1]).collect();
    q[0][0] = (1.0 / (4.0 * PI)).sqrt();
    for m in 1..=max_l {
        let mf = m as f64;
        q[m][m] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * q[m - 1][m - 1];
    }
    for m in 0..max_l {
        let mf = m as f64;
        q[m + 1][m] = (2.0 * mf + 3.0).sqrt() * z * q[m][m];
        for l in (m + 2)..=max_l {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            q[l][m] = a * (z * q[l - 1][m] - b * q[l - 2][m]);
        }
    }
    q
}

/// Y_l^m(v) for l ≤ max_l, m = 0..=l, as (re, im) pairs indexed `[l][m]`.
pub fn sh_table(max_l: usize, v: UnitVec3) -> Vec<Vec<(f64, f64)>> {
    let q = legendre_table(max_l, v.z());
    // (x + iy)^m carries both sin^m θ and e^{imφ} without a pole singularity.
    let mut powers = Vec::with_capacity(max_l + 1);
    let (mut re, mut im) = (1.0, 0.0);
    for _ in 0..=max_l {
        powers.push((re, im));
        let nr = re * v.x() - im * v.y();
        let ni = re * v.y() + im * v.x();
        re = nr;
        im = ni;
    }
    q.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(m, &val)| (val * powers[m].0, val * powers[m].1))
                .collect()
        })
        .collect()
}

/// Packs a table of SH values, scaling level `l` by `atten(l)`.
pub(crate) fn pack(levels: &ShLevelSet, table: &[Vec<(f64, f64)>], atten: impl Fn(usize) -> f64, out: &mut [f64]) {
    for (idx, &l) in levels.levels().iter().enumerate() {
        let off = levels.offset(idx);
        let a = atten(l);
        for m in 0..=l {
            let (re, im) = table[l][m];
            out[off + m] = a * re;
            out[off + l + 1 + m] = a * im;
        }
    }
}

/// The point-mass (κ → ∞) encoding.
pub fn sh_eval(levels: &ShLevelSet, v: UnitVec3) -> IdeVector {
    let table = sh_table(levels.max_level(), v);
    let mut out = IdeVector::zeros(levels.dimension());
    pack(levels, &table, |_| 1.0, &mut out.components);
    out
}
