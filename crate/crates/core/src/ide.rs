//! Integrated directional encoding: the expected spherical-harmonic vector
//! under a vMF lobe, and its anisotropic extension as a weighted sum over
//! the lobes of a rotated symmetric mixture.

use std::f64::consts::PI;

use rand::Rng;

use crate::amortizer::Amortizer;
use crate::distributions::{bandwidths_from_material, expand_symmetric, MaterialParams, VmfMixture};
use crate::error::{Error, Result};
use crate::geometry::{build_tangent_frame, frame_to_rotation, reflect, rodrigues_align, Frame, Rotation3, UnitVec3, Vec3};
use crate::sh::{pack, sh_table, IdeVector, ShLevelSet};

/// Per-degree attenuation of the harmonics under a vMF lobe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Attenuation {
    /// `exp(−l(l+1)/(2κ))`, the usual closed-form approximation.
    #[default]
    RefNerfExp,
    /// `i_l(κ)/i_0(κ)` from modified spherical Bessel functions.
    Exact,
}

impl Attenuation {
    /// Factors for degrees `0..=max_l`.
    pub fn factors(self, max_l: usize, kappa: f64) -> Vec<f64> {
        match self {
            Attenuation::RefNerfExp => (0..=max_l)
                .map(|l| (-((l * (l + 1)) as f64) / (2.0 * kappa)).exp())
                .collect(),
            Attenuation::Exact => exact_attenuation(max_l, kappa),
        }
    }
}

/// `c_l(κ) = i_l(κ)/i_0(κ)` for l = 0..=max_l.
///
/// The ratios `r_k = i_k/i_{k−1}` satisfy `1/r_k = (2k+1)/κ + r_{k+1}`;
/// running that continued fraction downward from a deep start is stable for
/// every κ (Miller's algorithm). Very large κ falls back to the exp form,
/// which agrees to O(κ⁻²) there.
pub fn exact_attenuation(max_l: usize, kappa: f64) -> Vec<f64> {
    if kappa > 1e5 {
        return Attenuation::RefNerfExp.factors(max_l, kappa);
    }
    let start = max_l + 40 + (10.0 * kappa.sqrt()).ceil() as usize;
    let mut ratios = vec![0.0; max_l + 1];
    let mut r_next = 0.0;
    for k in (1..=start).rev() {
        let r = 1.0 / ((2 * k + 1) as f64 / kappa + r_next);
        if k <= max_l {
            ratios[k] = r;
        }
        r_next = r;
    }
    let mut out = Vec::with_capacity(max_l + 1);
    let mut c = 1.0;
    out.push(c);
    for r in &ratios[1..] {
        c *= r;
        out.push(c);
    }
    out
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0) || kappa.is_nan() {
        return Err(Error::InvalidInput(format!("vMF concentration must be > 0, got {kappa}")));
    }
    Ok(())
}

/// Encoding of a single vMF lobe with the default attenuation.
pub fn ide_vmf(mean: UnitVec3, kappa: f64, levels: &ShLevelSet) -> Result<IdeVector> {
    ide_vmf_with(mean, kappa, levels, Attenuation::default())
}

pub fn ide_vmf_with(mean: UnitVec3, kappa: f64, levels: &ShLevelSet, atten: Attenuation) -> Result<IdeVector> {
    check_kappa(kappa)?;
    let mut out = IdeVector::zeros(levels.dimension());
    accumulate(&mut out, mean, kappa, 1.0, levels, atten);
    Ok(out)
}

fn accumulate(out: &mut IdeVector, mean: UnitVec3, kappa: f64, weight: f64, levels: &ShLevelSet, atten: Attenuation) {
    let max_l = levels.max_level();
    let table = sh_table(max_l, mean);
    let factors = atten.factors(max_l, kappa);
    let mut tmp = vec![0.0; levels.dimension()];
    pack(levels, &table, |l| factors[l], &mut tmp);
    for (o, t) in out.components.iter_mut().zip(&tmp) {
        *o += weight * t;
    }
}

/// Canonical-to-world rotation `R₂R₁`: R₁ maps the canonical axes onto the
/// frame, R₂ carries the frame normal onto the reflected direction.
pub fn reflection_rotation(frame: &Frame, omega_r: UnitVec3) -> Rotation3 {
    rodrigues_align(frame.n, omega_r).compose(&frame_to_rotation(frame))
}

/// Mixture with every lobe mean rotated into the reflection frame.
pub fn orient_mixture(mix: &VmfMixture, frame: &Frame, omega_r: UnitVec3) -> VmfMixture {
    mix.rotated(&reflection_rotation(frame, omega_r))
}

/// Anisotropic encoding `Σ α_i IDE_vMF(R₂R₁ z_i, κ_i)` of a canonical mixture.
pub fn ide_asg(mix: &VmfMixture, frame: &Frame, omega_r: UnitVec3, levels: &ShLevelSet) -> Result<IdeVector> {
    ide_asg_with(mix, frame, omega_r, levels, Attenuation::default())
}

pub fn ide_asg_with(
    mix: &VmfMixture,
    frame: &Frame,
    omega_r: UnitVec3,
    levels: &ShLevelSet,
    atten: Attenuation,
) -> Result<IdeVector> {
    let rot = reflection_rotation(frame, omega_r);
    let mut out = IdeVector::zeros(levels.dimension());
    for lobe in mix.lobes() {
        check_kappa(lobe.kappa)?;
        accumulate(&mut out, rot.rotate(lobe.mean), lobe.kappa, lobe.alpha, levels, atten);
    }
    Ok(out)
}

/// Full material pipeline: bandwidths, amortized mixture, tangent frame
/// around `n_pred`, mirror direction of `view`, anisotropic encoding.
pub fn material_to_ide(
    m: &MaterialParams,
    n_pred: UnitVec3,
    view: UnitVec3,
    amortizer: &Amortizer,
    levels: &ShLevelSet,
) -> Result<IdeVector> {
    let asg = bandwidths_from_material(m);
    let mix = expand_symmetric(&amortizer.predict(&asg)?)?;
    let frame = build_tangent_frame(n_pred, m.phi);
    let omega_r = reflect(view, n_pred);
    ide_asg(&mix, &frame, omega_r, levels)
}

/// Draws a direction from vMF(mean, κ) by inverting the CDF of the cosine
/// to the mean: `w = 1 + ln(u + (1 − u)e^{−2κ})/κ`.
pub fn sample_vmf(mean: UnitVec3, kappa: f64, rng: &mut impl Rng) -> UnitVec3 {
    let u: f64 = rng.gen();
    let w = (1.0 + (u + (1.0 - u) * (-2.0 * kappa).exp()).ln() / kappa).clamp(-1.0, 1.0);
    let psi: f64 = rng.gen_range(0.0..2.0 * PI);
    let s = (1.0 - w * w).max(0.0).sqrt();
    let frame = build_tangent_frame(mean, 0.0);
    let v = frame.to_world(Vec3::new(s * psi.cos(), s * psi.sin(), w));
    UnitVec3::new(v).unwrap_or(mean)
}

/// Picks a lobe by weight, then samples it.
pub fn sample_mixture(mix: &VmfMixture, rng: &mut impl Rng) -> UnitVec3 {
    let lobes = mix.lobes();
    let mut u: f64 = rng.gen();
    for lobe in lobes {
        if u < lobe.alpha {
            return sample_vmf(lobe.mean, lobe.kappa, rng);
        }
        u -= lobe.alpha;
    }
    let last = lobes[lobes.len() - 1];
    sample_vmf(last.mean, last.kappa, rng)
}

/// Sample mean and standard error of every packed SH component.
#[derive(Debug, Clone)]
pub struct MonteCarloEstimate {
    pub mean: IdeVector,
    pub std_err: Vec<f64>,
    pub samples: usize,
}

/// Estimates `E[SH(v)]` from `n` draws of `draw`.
pub fn monte_carlo_sh(levels: &ShLevelSet, n: usize, mut draw: impl FnMut() -> UnitVec3) -> MonteCarloEstimate {
    let dim = levels.dimension();
    let max_l = levels.max_level();
    let mut sum = vec![0.0; dim];
    let mut sum_sq = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    for _ in 0..n {
        let table = sh_table(max_l, draw());
        pack(levels, &table, |_| 1.0, &mut tmp);
        for ((s, q), &t) in sum.iter_mut().zip(sum_sq.iter_mut()).zip(&tmp) {
            *s += t;
            *q += t * t;
        }
    }
    let nf = n as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let std_err = sum_sq
        .iter()
        .zip(&mean)
        .map(|(q, m)| ((q / nf - m * m).max(0.0) * nf / (nf - 1.0) / nf).sqrt())
        .collect();
    MonteCarloEstimate {
        mean: IdeVector { components: mean },
        std_err,
        samples: n,
    }
}
