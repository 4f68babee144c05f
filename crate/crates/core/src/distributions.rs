//! ASG and vMF densities, the material-to-bandwidth map, and the symmetric
//! vMF mixture with its compact `3L + 2` parameter vector.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use crate::error::{Error, Result};
use crate::geometry::{Frame, HemisphereGrid, UnitVec3, Vec3};

/// Lower bandwidth bound of the fitting range; μ is clamped here when e → 1.
pub const MU_MIN: f64 = 1e-2;
/// Upper bandwidth bound of the fitting range.
pub const BANDWIDTH_MAX: f64 = 600.0;

/// Stored log-concentrations are clamped to this interval.
pub const LOG_KAPPA_MIN: f64 = -7.0;
pub const LOG_KAPPA_MAX: f64 = 10.0;

/// Anisotropic spherical Gaussian bandwidths and amplitude (canonical frame:
/// tangent x carries λ, bitangent y carries μ, lobe axis z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsgParams {
    pub lambda: f64,
    pub mu: f64,
    pub c: f64,
}

impl AsgParams {
    pub fn new(lambda: f64, mu: f64, c: f64) -> Result<Self> {
        if !(lambda.is_finite() && mu.is_finite() && c.is_finite()) || mu < 0.0 || c <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "ASG parameters must be finite with mu >= 0 and c > 0 (lambda={lambda}, mu={mu}, c={c})"
            )));
        }
        if lambda < mu {
            return Err(Error::InvalidInput(format!(
                "ASG convention requires lambda >= mu (lambda={lambda}, mu={mu})"
            )));
        }
        Ok(Self { lambda, mu, c })
    }

    /// Unit-amplitude bandwidth pair, as used for fitting.
    pub fn bandwidths(lambda: f64, mu: f64) -> Result<Self> {
        Self::new(lambda, mu, 1.0)
    }

    pub fn in_training_range(&self) -> bool {
        (MU_MIN..=BANDWIDTH_MAX).contains(&self.lambda) && (MU_MIN..=BANDWIDTH_MAX).contains(&self.mu)
    }
}

/// Reflectance controls: concentration κ ≥ 1, anisotropy e ∈ [0, 1] and
/// tangent angle φ reduced into [0, π).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub kappa: f64,
    pub e: f64,
    pub phi: f64,
}

impl MaterialParams {
    pub fn new(kappa: f64, e: f64, phi: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa >= 1.0) {
            return Err(Error::InvalidInput(format!("kappa must be >= 1, got {kappa}")));
        }
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::InvalidInput(format!("anisotropy e must lie in [0, 1], got {e}")));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidInput(format!("phi must be finite, got {phi}")));
        }
        let mut phi = phi.rem_euclid(PI);
        if phi >= PI {
            phi = 0.0;
        }
        Ok(Self { kappa, e, phi })
    }
}

/// λ = ½κ(1+e), μ = max(½κ(1−e), μ_min), c = 1.
pub fn bandwidths_from_material(m: &MaterialParams) -> AsgParams {
    let lambda = 0.5 * m.kappa * (1.0 + m.e);
    let mu = (0.5 * m.kappa * (1.0 - m.e)).max(MU_MIN);
    AsgParams {
        lambda: lambda.max(mu),
        mu,
        c: 1.0,
    }
}

/// Inverse map κ = λ + μ, e = (λ − μ)/(λ + μ).
pub fn material_from_bandwidths(p: &AsgParams) -> (f64, f64) {
    let kappa = p.lambda + p.mu;
    (kappa, (p.lambda - p.mu) / kappa)
}

/// `c · max(v·z, 0) · exp(−λ(v·x)² − μ(v·y)²)` in the canonical frame.
pub fn asg_eval(p: &AsgParams, v: UnitVec3) -> f64 {
    asg_eval_local(p, v.vec())
}

/// ASG with lobe axes taken from `frame` (x = t, y = b, z = n).
pub fn asg_eval_in_frame(p: &AsgParams, frame: &Frame, v: UnitVec3) -> f64 {
    asg_eval_local(p, frame.to_local(v.vec()))
}

fn asg_eval_local(p: &AsgParams, v: Vec3) -> f64 {
    let cos = v.z.max(0.0);
    if cos == 0.0 {
        return 0.0;
    }
    p.c * cos * (-p.lambda * v.x * v.x - p.mu * v.y * v.y).exp()
}

/// log sinh κ without overflow.
fn log_sinh(kappa: f64) -> f64 {
    if kappa < 1.0 {
        kappa.sinh().ln()
    } else {
        kappa + (-(-2.0 * kappa).exp()).ln_1p() - LN_2
    }
}

/// log N(κ) = log κ − log 4π − log sinh κ.
pub fn vmf_log_norm(kappa: f64) -> f64 {
    if kappa < 1.0 {
        // log(κ / sinh κ) stays accurate down to the uniform limit.
        -(4.0 * PI).ln() - (kappa.sinh() / kappa).ln()
    } else {
        kappa.ln() - (4.0 * PI).ln() - log_sinh(kappa)
    }
}

/// d log N / dκ = 1/κ − coth κ.
pub fn vmf_log_norm_deriv(kappa: f64) -> f64 {
    if kappa < 1e-4 {
        -kappa / 3.0 + kappa.powi(3) / 45.0
    } else {
        1.0 / kappa - 1.0 / kappa.tanh()
    }
}

/// log vMF density `log N(κ) + κ cos_angle`.
pub fn vmf_log_density(kappa: f64, cos_angle: f64) -> f64 {
    vmf_log_norm(kappa) + kappa * cos_angle
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VmfLobe {
    pub mean: UnitVec3,
    pub kappa: f64,
    pub alpha: f64,
}

impl VmfLobe {
    pub fn density(&self, v: UnitVec3) -> f64 {
        vmf_log_density(self.kappa, self.mean.dot(v)).exp()
    }
}

/// Weighted vMF lobes with weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct VmfMixture {
    lobes: Vec<VmfLobe>,
}

impl VmfMixture {
    pub fn new(lobes: Vec<VmfLobe>) -> Result<Self> {
        if lobes.is_empty() {
            return Err(Error::InvalidInput("mixture needs at least one lobe".into()));
        }
        if lobes.iter().any(|l| !(l.kappa > 0.0 && l.kappa.is_finite()) || !(l.alpha >= 0.0)) {
            return Err(Error::InvalidInput(
                "mixture lobes need kappa > 0 and alpha >= 0".into(),
            ));
        }
        let total: f64 = lobes.iter().map(|l| l.alpha).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "mixture weights must sum to 1, got {total}"
            )));
        }
        Ok(Self { lobes })
    }

    pub fn single(mean: UnitVec3, kappa: f64) -> Result<Self> {
        Self::new(vec![VmfLobe { mean, kappa, alpha: 1.0 }])
    }

    pub fn lobes(&self) -> &[VmfLobe] {
        &self.lobes
    }

    pub fn len(&self) -> usize {
        self.lobes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lobes.is_empty()
    }

    /// Applies `rot` to every lobe mean.
    pub fn rotated(&self, rot: &crate::geometry::Rotation3) -> Self {
        Self {
            lobes: self
                .lobes
                .iter()
                .map(|l| VmfLobe {
                    mean: rot.rotate(l.mean),
                    ..*l
                })
                .collect(),
        }
    }
}

/// Σ α_i vMF(v; z_i, κ_i).
pub fn mixture_eval(mix: &VmfMixture, v: UnitVec3) -> f64 {
    mix.lobes.iter().map(|l| l.alpha * l.density(v)).sum()
}

/// Compact symmetric mixture parameters in unconstrained form.
///
/// Layout of the raw vector (length `3L + 2`):
/// `[θ̃_1, log κ_1, ã_1, …, θ̃_L, log κ_L, ã_L, log κ_0, ã_0]`, where
/// θ = (π/2)·sigmoid(θ̃) and the weights are a softmax over
/// `(ã_0, ã_1, ã_1, …, ã_L, ã_L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricParams {
    side: usize,
    raw: Vec<f64>,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

const THETA_FLOOR: f64 = 1e-12;

pub(crate) fn theta_from_raw(raw: f64) -> f64 {
    (FRAC_PI_2 * sigmoid(raw)).clamp(THETA_FLOOR, FRAC_PI_2 - THETA_FLOOR)
}

/// dθ/dθ̃.
pub(crate) fn theta_raw_deriv(raw: f64) -> f64 {
    let s = sigmoid(raw);
    FRAC_PI_2 * s * (1.0 - s)
}

pub(crate) fn kappa_from_raw(raw: f64) -> f64 {
    raw.clamp(LOG_KAPPA_MIN, LOG_KAPPA_MAX).exp()
}

/// dκ/d log κ, zero where the clamp is active.
pub(crate) fn kappa_raw_deriv(raw: f64) -> f64 {
    if (LOG_KAPPA_MIN..=LOG_KAPPA_MAX).contains(&raw) {
        raw.exp()
    } else {
        0.0
    }
}

impl SymmetricParams {
    pub fn raw_len(side: usize) -> usize {
        3 * side + 2
    }

    pub fn from_raw(side: usize, raw: Vec<f64>) -> Result<Self> {
        if raw.len() != Self::raw_len(side) {
            return Err(Error::ShapeMismatch {
                expected: Self::raw_len(side),
                actual: raw.len(),
            });
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("raw mixture parameters must be finite".into()));
        }
        Ok(Self { side, raw })
    }

    /// Builds from constrained values: elevations in (0, π/2), positive
    /// concentrations and unnormalized log-weights.
    pub fn from_values(
        thetas: &[f64],
        kappas_side: &[f64],
        alphas_side: &[f64],
        kappa0: f64,
        alpha0: f64,
    ) -> Result<Self> {
        let side = thetas.len();
        if kappas_side.len() != side || alphas_side.len() != side {
            return Err(Error::ShapeMismatch {
                expected: side,
                actual: kappas_side.len().min(alphas_side.len()),
            });
        }
        let mut raw = Vec::with_capacity(Self::raw_len(side));
        for i in 0..side {
            let th = thetas[i];
            if !(th > 0.0 && th < FRAC_PI_2) {
                return Err(Error::InvalidInput(format!(
                    "side elevation {th} outside (0, pi/2)"
                )));
            }
            let k = kappas_side[i];
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::InvalidInput(format!("side concentration {k} must be positive")));
            }
            let s = th / FRAC_PI_2;
            raw.push((s / (1.0 - s)).ln());
            raw.push(k.ln());
            raw.push(alphas_side[i]);
        }
        if !(kappa0 > 0.0 && kappa0.is_finite()) {
            return Err(Error::InvalidInput(format!("center concentration {kappa0} must be positive")));
        }
        raw.push(kappa0.ln());
        raw.push(alpha0);
        Self::from_raw(side, raw)
    }

    /// Side-lobe count L; the mixture has `2L + 1` lobes.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn lobe_count(&self) -> usize {
        2 * self.side + 1
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn into_raw(self) -> Vec<f64> {
        self.raw
    }

    pub fn theta(&self, i: usize) -> f64 {
        theta_from_raw(self.raw[3 * i])
    }

    pub fn kappa_side(&self, i: usize) -> f64 {
        kappa_from_raw(self.raw[3 * i + 1])
    }

    pub fn kappa0(&self) -> f64 {
        kappa_from_raw(self.raw[3 * self.side])
    }

    /// Normalized weights `(α_0, [α_1, …, α_L])`; each side weight applies
    /// to both mirrored lobes.
    pub fn weights(&self) -> (f64, Vec<f64>) {
        let l = self.side;
        let a0 = self.raw[3 * l + 1];
        let logits: Vec<f64> = (0..l).map(|i| self.raw[3 * i + 2]).collect();
        let max = logits.iter().copied().fold(a0, f64::max);
        let e0 = (a0 - max).exp();
        let es: Vec<f64> = logits.iter().map(|a| (a - max).exp()).collect();
        let z = e0 + 2.0 * es.iter().sum::<f64>();
        (e0 / z, es.iter().map(|e| e / z).collect())
    }

    /// Mass on the 2L side lobes.
    pub fn side_mass(&self) -> f64 {
        2.0 * self.weights().1.iter().sum::<f64>()
    }
}

/// Mean of side lobe `+i` at elevation θ: `R_x(θ)·z = (0, −sin θ, cos θ)`.
pub(crate) fn side_mean(theta: f64, sign: f64) -> Vec3 {
    let (s, c) = theta.sin_cos();
    Vec3::new(0.0, -sign * s, c)
}

/// Lobes ordered `−L, …, 0, …, L`; lobe `±i` has mean `R_x(±θ_i)·z` so the
/// side lobes sweep along the y-axis.
pub fn expand_symmetric(q: &SymmetricParams) -> Result<VmfMixture> {
    let l = q.side();
    let (a0, side_w) = q.weights();
    let mut lobes = Vec::with_capacity(q.lobe_count());
    for i in (1..=l).rev() {
        let th = q.theta(i - 1);
        if !(th > 0.0 && th < FRAC_PI_2) {
            return Err(Error::InvalidInput(format!("side elevation {th} outside (0, pi/2)")));
        }
        lobes.push(VmfLobe {
            mean: UnitVec3::new(side_mean(th, -1.0))?,
            kappa: q.kappa_side(i - 1),
            alpha: side_w[i - 1],
        });
    }
    lobes.push(VmfLobe {
        mean: UnitVec3::Z,
        kappa: q.kappa0(),
        alpha: a0,
    });
    for i in 1..=l {
        lobes.push(VmfLobe {
            mean: UnitVec3::new(side_mean(q.theta(i - 1), 1.0))?,
            kappa: q.kappa_side(i - 1),
            alpha: side_w[i - 1],
        });
    }
    VmfMixture::new(lobes)
}

/// `p_k = values_k ω_k / Σ_j values_j ω_j`.
pub fn normalize_on_grid(values: &[f64], grid: &HemisphereGrid) -> Result<Vec<f64>> {
    if values.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            expected: grid.len(),
            actual: values.len(),
        });
    }
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidInput(
            "grid values must be finite and non-negative".into(),
        ));
    }
    let weighted: Vec<f64> = values
        .iter()
        .zip(grid.solid_angles())
        .map(|(v, w)| v * w)
        .collect();
    let total: f64 = weighted.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("all grid values are zero".into()));
    }
    Ok(weighted.into_iter().map(|w| w / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{integrate_sphere, Rotation3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bandwidth_examples() {
        let p = bandwidths_from_material(&MaterialParams::new(10.0, 0.0, 0.0).unwrap());
        assert_eq!((p.lambda, p.mu, p.c), (5.0, 5.0, 1.0));
        let p = bandwidths_from_material(&MaterialParams::new(600.0, 1.0, 0.0).unwrap());
        assert_eq!((p.lambda, p.mu), (600.0, MU_MIN));
        let p = bandwidths_from_material(&MaterialParams::new(100.0, 0.5, 0.0).unwrap());
        assert!((p.lambda - 75.0).abs() < 1e-12 && (p.mu - 25.0).abs() < 1e-12);
        let (k, e) = material_from_bandwidths(&p);
        assert!((k - 100.0).abs() < 1e-12 && (e - 0.5).abs() < 1e-12);
    }

    #[test]
    fn material_validation_and_phi_reduction() {
        assert!(MaterialParams::new(0.5, 0.0, 0.0).is_err());
        assert!(MaterialParams::new(2.0, 1.5, 0.0).is_err());
        let m = MaterialParams::new(2.0, 0.2, PI + 0.25).unwrap();
        assert!((m.phi - 0.25).abs() < 1e-12);
    }

    #[test]
    fn asg_examples() {
        let p = AsgParams::new(600.0, 133.0, 2.5).unwrap();
        assert_eq!(asg_eval(&p, UnitVec3::Z), 2.5);
        assert_eq!(asg_eval(&p, -UnitVec3::Z), 0.0);
        let a = 10f64.to_radians();
        let toward_x = asg_eval(&p, UnitVec3::from_spherical(a, 0.0));
        let toward_y = asg_eval(&p, UnitVec3::from_spherical(a, PI / 2.0));
        assert!(toward_x < toward_y);
        assert!(AsgParams::new(1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn vmf_log_density_examples() {
        let tiny = vmf_log_density(1e-9, 0.3).exp();
        assert!((tiny - 1.0 / (4.0 * PI)).abs() < 1e-9);
        let expected = (1.0 / (4.0 * PI * 1f64.sinh())).ln() + 1.0;
        assert!((vmf_log_density(1.0, 1.0) - expected).abs() < 1e-14);
        // Stable branch against the direct formula where both are finite.
        for k in [1.5f64, 5.0, 30.0, 200.0] {
            let direct = k.ln() - (4.0 * PI).ln() - k.sinh().ln();
            assert!((vmf_log_norm(k) - direct).abs() < 1e-12, "kappa {k}");
        }
        assert!(vmf_log_density(500.0, 1.0).is_finite());
        assert!(vmf_log_density(5e4, 1.0).is_finite());
    }

    #[test]
    fn log_norm_derivative_matches_finite_difference() {
        for k in [1e-3, 0.5, 2.0, 40.0, 900.0] {
            let h = 1e-6 * k;
            let fd = (vmf_log_norm(k + h) - vmf_log_norm(k - h)) / (2.0 * h);
            assert!((fd - vmf_log_norm_deriv(k)).abs() < 1e-7 * (1.0 + fd.abs()), "kappa {k}");
        }
    }

    #[test]
    fn expand_examples() {
        let q = SymmetricParams::from_values(&[], &[], &[], 3.0, 0.0).unwrap();
        let m = expand_symmetric(&q).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.lobes()[0].mean, UnitVec3::Z);
        assert!((m.lobes()[0].alpha - 1.0).abs() < 1e-15);

        let q = SymmetricParams::from_values(&[0.3], &[5.0], &[0.1], 3.0, 0.4).unwrap();
        let m = expand_symmetric(&q).unwrap();
        assert_eq!(m.len(), 3);
        let (s, c) = 0.3f64.sin_cos();
        let means: Vec<Vec3> = m.lobes().iter().map(|l| l.mean.vec()).collect();
        assert!(means[0].max_abs_diff(Vec3::new(0.0, s, c)) < 1e-12);
        assert!(means[1].max_abs_diff(Vec3::new(0.0, 0.0, 1.0)) < 1e-15);
        assert!(means[2].max_abs_diff(Vec3::new(0.0, -s, c)) < 1e-12);
        assert!((m.lobes()[0].alpha - m.lobes()[2].alpha).abs() < 1e-15);
        let total: f64 = m.lobes().iter().map(|l| l.alpha).sum();
        assert!((total - 1.0).abs() < 1e-12);

        assert!(SymmetricParams::from_values(&[0.0], &[1.0], &[0.0], 1.0, 0.0).is_err());
        assert!(SymmetricParams::from_values(&[1.6], &[1.0], &[0.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn raw_round_trip_of_values() {
        let q = SymmetricParams::from_values(&[0.2, 1.1], &[7.0, 300.0], &[0.5, -1.0], 42.0, 0.3).unwrap();
        assert!((q.theta(0) - 0.2).abs() < 1e-12 && (q.theta(1) - 1.1).abs() < 1e-12);
        assert!((q.kappa_side(1) - 300.0).abs() < 1e-9);
        assert!((q.kappa0() - 42.0).abs() < 1e-12);
        assert!(SymmetricParams::from_raw(2, vec![0.0; 7]).is_err());
    }

    #[test]
    fn zero_raw_gives_midpoint_parameters() {
        let q = SymmetricParams::from_raw(3, vec![0.0; 11]).unwrap();
        assert!((q.theta(0) - PI / 4.0).abs() < 1e-15);
        assert_eq!(q.kappa0(), 1.0);
        let (a0, side) = q.weights();
        assert!(side.iter().all(|&a| (a - a0).abs() < 1e-15));
    }

    #[test]
    fn mixture_examples() {
        let single = VmfMixture::single(UnitVec3::Z, 1.0).unwrap();
        assert!((mixture_eval(&single, UnitVec3::Z) - vmf_log_density(1.0, 1.0).exp()).abs() < 1e-15);

        let q = SymmetricParams::from_values(&[0.4, 0.9], &[20.0, 8.0], &[0.3, -0.2], 50.0, 0.1).unwrap();
        let m = expand_symmetric(&q).unwrap();
        let a = UnitVec3::from_xyz(0.0, 0.6, 0.8).unwrap();
        let b = UnitVec3::from_xyz(0.0, -0.6, 0.8).unwrap();
        assert!((mixture_eval(&m, a) - mixture_eval(&m, b)).abs() < 1e-12);
    }

    #[test]
    fn mixture_integrates_to_one() {
        let grid = HemisphereGrid::canonical(128, 256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..4 {
            let side = 3;
            let th: Vec<f64> = (0..side).map(|_| rng.gen_range(0.05..1.5)).collect();
            let ks: Vec<f64> = (0..side).map(|_| rng.gen_range(0.1..50.0)).collect();
            let al: Vec<f64> = (0..side).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let q = SymmetricParams::from_values(&th, &ks, &al, rng.gen_range(0.1..50.0), 0.0).unwrap();
            let m = expand_symmetric(&q).unwrap();
            let total = integrate_sphere(&grid, |v| mixture_eval(&m, v)).unwrap();
            assert!((total - 1.0).abs() < 2e-3, "total {total}");
        }
    }

    #[test]
    fn mixture_linear_in_weights() {
        let means = [
            UnitVec3::from_xyz(0.1, 0.2, 0.9).unwrap(),
            UnitVec3::from_xyz(-0.5, 0.1, 0.3).unwrap(),
        ];
        let kappas = [4.0, 17.0];
        let v = UnitVec3::from_xyz(0.2, 0.3, 0.7).unwrap();
        // Scale lobe 0's weight by 3 and renormalize.
        let (w0, w1) = (0.4 * 3.0, 0.6);
        let z = w0 + w1;
        let mix = VmfMixture::new(vec![
            VmfLobe { mean: means[0], kappa: kappas[0], alpha: w0 / z },
            VmfLobe { mean: means[1], kappa: kappas[1], alpha: w1 / z },
        ])
        .unwrap();
        let direct = (w0 * vmf_log_density(kappas[0], means[0].dot(v)).exp()
            + w1 * vmf_log_density(kappas[1], means[1].dot(v)).exp())
            / z;
        assert!((mixture_eval(&mix, v) - direct).abs() < 1e-12);
    }

    #[test]
    fn normalize_examples() {
        let g = HemisphereGrid::canonical(8, 16).unwrap();
        let p = normalize_on_grid(&vec![2.0; g.len()], &g).unwrap();
        let total = g.total_solid_angle();
        for (pk, w) in p.iter().zip(g.solid_angles()) {
            assert!((pk - w / total).abs() < 1e-15);
        }
        let mut one = vec![0.0; g.len()];
        one[17] = 3.0;
        let p = normalize_on_grid(&one, &g).unwrap();
        assert_eq!(p[17], 1.0);
        assert!(matches!(
            normalize_on_grid(&vec![0.0; g.len()], &g),
            Err(Error::Degenerate(_))
        ));
        assert!(normalize_on_grid(&[1.0], &g).is_err());
    }

    #[test]
    fn isotropic_asg_is_axially_symmetric() {
        let p = AsgParams::new(7.0, 7.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = UnitVec3::from_xyz(0.3, -0.4, 0.7).unwrap();
        let base = asg_eval(&p, v);
        for _ in 0..1000 {
            let r = Rotation3::from_axis_angle(UnitVec3::Z, rng.gen_range(0.0..2.0 * PI));
            assert!((asg_eval(&p, r.rotate(v)) - base).abs() < 1e-12);
        }
    }
}
