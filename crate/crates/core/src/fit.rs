//! Fitting symmetric vMF mixtures to ASG targets by minimizing
//! `KL(p‖q) + β·JS(p, q)` on a hemisphere grid.

use std::f64::consts::FRAC_PI_2;

use rand_distr::{Distribution, StandardNormal};

use crate::distributions::{
    asg_eval, kappa_raw_deriv, side_mean, theta_raw_deriv,
    vmf_log_norm, vmf_log_norm_deriv, AsgParams, SymmetricParams, BANDWIDTH_MAX, MU_MIN,
};
use crate::divergence::{js_raw, kl_raw, GriddedDist, PROB_FLOOR};
use crate::error::{Error, Result};
use crate::geometry::{HemisphereGrid, UnitVec3};
use crate::optim::Adam;
use crate::rng;

pub const DEFAULT_BETA_JS: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub beta_js: f64,
    pub max_iters: usize,
    pub step_size: f64,
    /// Minimum improvement of the best loss that resets the stall counter.
    pub tol: f64,
    /// Consecutive non-improving iterations before declaring convergence.
    pub patience: usize,
    /// Side-lobe count L (N = 2L + 1).
    pub side: usize,
    pub seed: u64,
    /// Std-dev of Gaussian noise added to the raw initial parameters.
    pub jitter: f64,
    /// Times the step may be halved on a stall before the fit is declared
    /// converged; each halving restarts the optimizer from the best point.
    pub step_halvings: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            beta_js: DEFAULT_BETA_JS,
            max_iters: 2000,
            step_size: 3e-2,
            tol: 1e-7,
            patience: 50,
            side: 14,
            seed: 0,
            jitter: 0.0,
            step_halvings: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_js >= 0.0) || self.max_iters < 1 || !(self.step_size > 0.0) {
            return Err(Error::InvalidInput(format!(
                "fit config needs beta_js >= 0, max_iters >= 1, step_size > 0 ({self:?})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: SymmetricParams,
    /// Best loss seen during the run.
    pub final_loss: f64,
    pub initial_loss: f64,
    pub iters_used: usize,
    pub converged: bool,
    /// Loss at every evaluated iterate.
    pub trace: Vec<f64>,
}

/// Normalized ASG target on the grid, `max(v·z, 0)` factor included.
pub fn asg_target(p: &AsgParams, grid: &HemisphereGrid) -> Result<GriddedDist> {
    GriddedDist::from_density(grid, |v| asg_eval(p, v))
}

struct Lobe {
    group: usize,
    sign: f64,
    my: f64,
    mz: f64,
    kappa: f64,
    log_norm: f64,
    alpha: f64,
}

fn lobes_of(q: &SymmetricParams) -> Vec<Lobe> {
    let l = q.side();
    let (a0, side_w) = q.weights();
    let mut lobes = Vec::with_capacity(q.lobe_count());
    let center = Lobe {
        group: l,
        sign: 0.0,
        my: 0.0,
        mz: 1.0,
        kappa: q.kappa0(),
        log_norm: vmf_log_norm(q.kappa0()),
        alpha: a0,
    };
    lobes.push(center);
    for i in 0..l {
        let k = q.kappa_side(i);
        for sign in [1.0, -1.0] {
            let m = side_mean(q.theta(i), sign);
            lobes.push(Lobe {
                group: i,
                sign,
                my: m.y,
                mz: m.z,
                kappa: k,
                log_norm: vmf_log_norm(k),
                alpha: side_w[i],
            });
        }
    }
    lobes
}

/// Loss and (optionally) its gradient with respect to the raw parameters,
/// evaluated on arbitrary cells with solid-angle weights.
pub(crate) fn mixture_loss(
    dirs: &[UnitVec3],
    weights: &[f64],
    target: &[f64],
    q: &SymmetricParams,
    beta_js: f64,
    want_grad: bool,
) -> Result<(f64, Option<Vec<f64>>)> {
    let n_cells = dirs.len();
    let lobes = lobes_of(q);
    let n_lobes = lobes.len();

    // h[j][k] = ω_k vMF_j(v_k)
    let mut h = vec![0.0; n_lobes * n_cells];
    let mut u = vec![0.0; n_cells];
    for (j, lobe) in lobes.iter().enumerate() {
        let row = &mut h[j * n_cells..(j + 1) * n_cells];
        for (k, (v, w)) in dirs.iter().zip(weights).enumerate() {
            let dot = lobe.my * v.y() + lobe.mz * v.z();
            let val = w * (lobe.log_norm + lobe.kappa * dot).exp();
            row[k] = val;
            u[k] += lobe.alpha * val;
        }
    }
    let total: f64 = u.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Degenerate(format!(
            "mixture mass on grid is {total}"
        )));
    }
    let probs: Vec<f64> = u.iter().map(|x| x / total).collect();
    let loss = kl_raw(target, &probs) + beta_js * js_raw(target, &probs);
    if !want_grad {
        return Ok((loss, None));
    }

    // dL/dq_k
    let g: Vec<f64> = target
        .iter()
        .zip(&probs)
        .map(|(&p, &qk)| {
            let kl = if p > 0.0 && qk >= PROB_FLOOR { -p / qk } else { 0.0 };
            let js = if qk > 0.0 { 0.5 * (2.0 * qk / (p + qk)).ln() } else { 0.0 };
            kl + beta_js * js
        })
        .collect();
    let mean_g: f64 = g.iter().zip(&probs).map(|(a, b)| a * b).sum();
    // dL/du_k
    let big_g: Vec<f64> = g.iter().map(|gk| (gk - mean_g) / total).collect();

    let side = q.side();
    let mut d_alpha = vec![0.0; n_lobes];
    let mut d_logk_group = vec![0.0; side + 1];
    let mut d_theta_group = vec![0.0; side];
    for (j, lobe) in lobes.iter().enumerate() {
        let row = &h[j * n_cells..(j + 1) * n_cells];
        let dlog_norm = vmf_log_norm_deriv(lobe.kappa);
        // dm/dθ for m = (0, −sign·sin θ, cos θ)
        let (dmy, dmz) = if lobe.sign != 0.0 {
            (-lobe.mz * lobe.sign, lobe.my * lobe.sign)
        } else {
            (0.0, 0.0)
        };
        let (mut sa, mut sk, mut st) = (0.0, 0.0, 0.0);
        for (k, v) in dirs.iter().enumerate() {
            let gh = big_g[k] * row[k];
            if gh == 0.0 {
                continue;
            }
            sa += gh;
            sk += gh * (dlog_norm + lobe.my * v.y() + lobe.mz * v.z());
            st += gh * (dmy * v.y() + dmz * v.z());
        }
        d_alpha[j] = sa;
        d_logk_group[lobe.group] += lobe.alpha * lobe.kappa * sk;
        if lobe.sign != 0.0 {
            d_theta_group[lobe.group] += lobe.alpha * lobe.kappa * st;
        }
    }

    // Softmax over lobes with shared logits per group.
    let weighted_mean: f64 = lobes.iter().zip(&d_alpha).map(|(l, d)| l.alpha * d).sum();
    let mut d_logit_group = vec![0.0; side + 1];
    for (lobe, d) in lobes.iter().zip(&d_alpha) {
        d_logit_group[lobe.group] += lobe.alpha * (d - weighted_mean);
    }

    let raw = q.raw();
    let mut grad = vec![0.0; raw.len()];
    for i in 0..side {
        grad[3 * i] = d_theta_group[i] * theta_raw_deriv(raw[3 * i]);
        grad[3 * i + 1] = d_logk_group[i] * kappa_chain(raw[3 * i + 1]);
        grad[3 * i + 2] = d_logit_group[i];
    }
    grad[3 * side] = d_logk_group[side] * kappa_chain(raw[3 * side]);
    grad[3 * side + 1] = d_logit_group[side];
    Ok((loss, Some(grad)))
}

// d log κ_clamped / d raw: 1 inside the clamp interval, 0 outside.
fn kappa_chain(raw: f64) -> f64 {
    if kappa_raw_deriv(raw) > 0.0 {
        1.0
    } else {
        0.0
    }
}

fn check_target(target: &GriddedDist, grid: &HemisphereGrid) -> Result<()> {
    if target.grid_id() != grid.id() || target.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `KL(target ‖ q̂) + β·JS(target, q̂)` with the mixture normalized on `grid`.
pub fn fit_loss(target: &GriddedDist, q: &SymmetricParams, grid: &HemisphereGrid, beta_js: f64) -> Result<f64> {
    check_target(target, grid)?;
    let (loss, _) = mixture_loss(grid.directions(), grid.solid_angles(), target.probs(), q, beta_js, false)?;
    Ok(loss)
}

/// Gradient of [`fit_loss`] with respect to the raw `3L + 2` vector
/// (pre-sigmoid θ, log κ, weight logits).
pub fn fit_loss_gradient(
    target: &GriddedDist,
    q: &SymmetricParams,
    grid: &HemisphereGrid,
    beta_js: f64,
) -> Result<Vec<f64>> {
    Ok(fit_loss_with_gradient(target, q, grid, beta_js)?.1)
}

pub fn fit_loss_with_gradient(
    target: &GriddedDist,
    q: &SymmetricParams,
    grid: &HemisphereGrid,
    beta_js: f64,
) -> Result<(f64, Vec<f64>)> {
    check_target(target, grid)?;
    let (loss, grad) = mixture_loss(grid.directions(), grid.solid_angles(), target.probs(), q, beta_js, true)?;
    Ok((loss, grad.expect("gradient requested")))
}

/// ASG target prepared on the cheapest grid that gives the same divergences.
///
/// ASG targets and symmetric mixtures are both even in x and y, so canonical
/// grids with `n_phi % 4 == 0` are reduced to one azimuthal quadrant.
#[derive(Debug, Clone)]
pub struct FitProblem {
    grid: HemisphereGrid,
    target: GriddedDist,
    beta_js: f64,
}

impl FitProblem {
    pub fn new(asg: &AsgParams, grid: &HemisphereGrid, beta_js: f64) -> Result<Self> {
        let canonical = grid.pole().vec().max_abs_diff(UnitVec3::Z.vec()) == 0.0;
        let grid = match grid.quadrant() {
            Ok(q) if canonical => q,
            _ => grid.clone(),
        };
        let target = asg_target(asg, &grid)?;
        Ok(Self { grid, target, beta_js })
    }

    pub fn grid(&self) -> &HemisphereGrid {
        &self.grid
    }

    pub fn loss(&self, q: &SymmetricParams) -> Result<f64> {
        fit_loss(&self.target, q, &self.grid, self.beta_js)
    }

    pub fn loss_and_gradient(&self, q: &SymmetricParams) -> Result<(f64, Vec<f64>)> {
        fit_loss_with_gradient(&self.target, q, &self.grid, self.beta_js)
    }
}

/// Deterministic starting point: κ₀ = κ_i = λ, side elevations spread
/// evenly below θ_max = arccos(1 − 2/max(μ, 1)), uniform weights.
pub fn initial_params(target: &AsgParams, side: usize) -> SymmetricParams {
    let mu_eff = target.mu.max(1.0);
    let theta_max = (1.0 - 2.0 / mu_eff).clamp(-1.0, 1.0).acos().min(FRAC_PI_2);
    let thetas: Vec<f64> = (1..=side)
        .map(|i| theta_max * i as f64 / (side + 1) as f64)
        .collect();
    let kappa = target.lambda.max(MU_MIN);
    let kappas = vec![kappa; side];
    let alphas = vec![0.0; side];
    SymmetricParams::from_values(&thetas, &kappas, &alphas, kappa, 0.0)
        .expect("initial parameters are in range by construction")
}

/// Direct per-target fit with Adam, returning the best parameters seen.
pub fn fit_mixture(target: &AsgParams, cfg: &FitConfig, grid: &HemisphereGrid) -> Result<FitResult> {
    cfg.validate()?;
    if !(target.lambda >= target.mu && target.mu >= MU_MIN * (1.0 - 1e-12) && target.lambda <= BANDWIDTH_MAX * (1.0 + 1e-12)) {
        return Err(Error::InvalidInput(format!(
            "fit target must satisfy {MU_MIN} <= mu <= lambda <= {BANDWIDTH_MAX} (lambda={}, mu={})",
            target.lambda, target.mu
        )));
    }
    let problem = FitProblem::new(target, grid, cfg.beta_js)?;
    let side = cfg.side;
    let mut raw = initial_params(target, side).into_raw();
    if cfg.jitter > 0.0 {
        let mut rng = rng::stream(cfg.seed, "fit-jitter");
        for r in raw.iter_mut() {
            let n: f64 = StandardNormal.sample(&mut rng);
            *r += cfg.jitter * n;
        }
    }

    let mut opt = Adam::new(raw.len());
    let mut best_raw = raw.clone();
    let mut best = f64::INFINITY;
    let mut initial = f64::NAN;
    let mut stall = 0;
    let mut converged = false;
    let mut step = cfg.step_size;
    let mut halvings = 0;
    let mut trace = Vec::with_capacity(cfg.max_iters);
    for it in 0..cfg.max_iters {
        let params = SymmetricParams::from_raw(side, raw.clone())?;
        let (loss, grad) = problem.loss_and_gradient(&params)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                step: it,
                detail: format!("lambda={}, mu={}", target.lambda, target.mu),
            });
        }
        if it == 0 {
            initial = loss;
        }
        trace.push(loss);
        if loss < best - cfg.tol {
            stall = 0;
        } else {
            stall += 1;
        }
        if loss < best {
            best = loss;
            best_raw.copy_from_slice(&raw);
        }
        if stall >= cfg.patience {
            if halvings == cfg.step_halvings {
                converged = true;
                break;
            }
            halvings += 1;
            step *= 0.5;
            stall = 0;
            raw.copy_from_slice(&best_raw);
            opt = Adam::new(raw.len());
            continue;
        }
        opt.step(&mut raw, &grad, step);
    }
    Ok(FitResult {
        params: SymmetricParams::from_raw(side, best_raw)?,
        final_loss: best.max(0.0),
        initial_loss: initial,
        iters_used: trace.len(),
        converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{expand_symmetric, mixture_eval};
    use crate::divergence::kl_divergence;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(rng: &mut ChaCha8Rng, side: usize) -> SymmetricParams {
        let raw: Vec<f64> = (0..SymmetricParams::raw_len(side))
            .enumerate()
            .map(|(i, _)| {
                if i % 3 == 1 || i == 3 * side {
                    rng.gen_range(0.5..3.5)
                } else {
                    rng.gen_range(-1.5..1.5)
                }
            })
            .collect();
        SymmetricParams::from_raw(side, raw).unwrap()
    }

    // Brute-force loss straight from the mixture density, independent of
    // the lobe bookkeeping used by the fitter.
    fn reference_loss(target: &GriddedDist, q: &SymmetricParams, grid: &HemisphereGrid, beta: f64) -> f64 {
        let mix = expand_symmetric(q).unwrap();
        let approx = GriddedDist::from_density(grid, |v| mixture_eval(&mix, v)).unwrap();
        kl_divergence(target, &approx).unwrap() + beta * crate::divergence::js_divergence(target, &approx).unwrap()
    }

    #[test]
    fn loss_matches_brute_force() {
        let grid = HemisphereGrid::canonical(24, 48).unwrap();
        let target = asg_target(&AsgParams::bandwidths(40.0, 3.0).unwrap(), &grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for side in [0, 1, 3] {
            let q = random_params(&mut rng, side);
            let a = fit_loss(&target, &q, &grid, 0.3).unwrap();
            let b = reference_loss(&target, &q, &grid, 0.3);
            assert!((a - b).abs() < 1e-12 * (1.0 + b), "{a} vs {b}");
        }
    }

    #[test]
    fn quadrant_loss_equals_full_grid_loss() {
        let grid = HemisphereGrid::canonical(32, 64).unwrap();
        let asg = AsgParams::bandwidths(270.0, 0.01).unwrap();
        let full_target = asg_target(&asg, &grid).unwrap();
        let problem = FitProblem::new(&asg, &grid, 0.3).unwrap();
        assert!(problem.grid().is_quadrant());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for side in [0, 2, 5] {
            let q = random_params(&mut rng, side);
            let full = fit_loss(&full_target, &q, &grid, 0.3).unwrap();
            let quad = problem.loss(&q).unwrap();
            assert!((full - quad).abs() < 1e-12 * (1.0 + full), "{full} vs {quad}");
        }
    }

    #[test]
    fn self_fit_is_near_zero_and_stationary() {
        let grid = HemisphereGrid::canonical(64, 128).unwrap();
        let target = GriddedDist::from_density(&grid, |v| crate::distributions::vmf_log_density(5.0, v.z()).exp()).unwrap();
        let q = SymmetricParams::from_values(&[], &[], &[], 5.0, 0.0).unwrap();
        let loss = fit_loss(&target, &q, &grid, 0.3).unwrap();
        assert!(loss <= 1e-4, "loss {loss}");
        let g = fit_loss_gradient(&target, &q, &grid, 0.3).unwrap();
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm < 1e-3, "gradient norm {norm}");
        assert_eq!(g.len(), 2);
    }

    #[test]
    fn zero_beta_is_pure_kl() {
        let grid = HemisphereGrid::canonical(16, 32).unwrap();
        let target = asg_target(&AsgParams::bandwidths(20.0, 4.0).unwrap(), &grid).unwrap();
        let q = SymmetricParams::from_values(&[0.3], &[15.0], &[0.2], 30.0, 0.0).unwrap();
        let mix = expand_symmetric(&q).unwrap();
        let approx = GriddedDist::from_density(&grid, |v| mixture_eval(&mix, v)).unwrap();
        let kl = kl_divergence(&target, &approx).unwrap();
        assert!((fit_loss(&target, &q, &grid, 0.0).unwrap() - kl).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let grid = HemisphereGrid::canonical(16, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..20 {
            let lambda = 10f64.powf(rng.gen_range(-1.0..2.5));
            let mu = lambda * rng.gen_range(0.01..1.0);
            let target = asg_target(&AsgParams::bandwidths(lambda, mu).unwrap(), &grid).unwrap();
            let side = trial % 4;
            let q = random_params(&mut rng, side);
            let g = fit_loss_gradient(&target, &q, &grid, 0.3).unwrap();
            let h = 1e-5;
            for i in 0..g.len() {
                let mut plus = q.raw().to_vec();
                let mut minus = q.raw().to_vec();
                plus[i] += h;
                minus[i] -= h;
                let fp = fit_loss(&target, &SymmetricParams::from_raw(side, plus).unwrap(), &grid, 0.3).unwrap();
                let fm = fit_loss(&target, &SymmetricParams::from_raw(side, minus).unwrap(), &grid, 0.3).unwrap();
                let fd = (fp - fm) / (2.0 * h);
                let scale = g[i].abs().max(fd.abs());
                if scale > 1e-8 {
                    assert!((g[i] - fd).abs() / scale < 1e-4, "trial {trial} comp {i}: {} vs {fd}", g[i]);
                }
            }
        }
    }

    #[test]
    fn fit_is_deterministic_and_never_worse_than_start() {
        let grid = HemisphereGrid::canonical(16, 32).unwrap();
        let target = AsgParams::bandwidths(50.0, 2.0).unwrap();
        let cfg = FitConfig {
            side: 2,
            max_iters: 150,
            seed: 9,
            jitter: 0.1,
            ..FitConfig::default()
        };
        let a = fit_mixture(&target, &cfg, &grid).unwrap();
        let b = fit_mixture(&target, &cfg, &grid).unwrap();
        assert_eq!(a, b);
        assert!(a.final_loss <= a.initial_loss);
        assert!(a.final_loss < 0.5 * a.initial_loss);
        // Best-seen loss equals the minimum of the trace.
        let min = a.trace.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(a.final_loss, min);
    }

    #[test]
    fn fit_rejects_out_of_range_targets() {
        let grid = HemisphereGrid::canonical(8, 16).unwrap();
        let cfg = FitConfig::default();
        assert!(fit_mixture(&AsgParams::bandwidths(700.0, 1.0).unwrap(), &cfg, &grid).is_err());
        assert!(fit_mixture(&AsgParams::bandwidths(1.0, 0.001).unwrap(), &cfg, &grid).is_err());
    }
}
