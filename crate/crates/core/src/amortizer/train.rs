use rand::Rng;
use rayon::prelude::*;

use super::{encode_input, Amortizer, MlpParams, PosEncConfig};
use crate::distributions::{AsgParams, SymmetricParams, BANDWIDTH_MAX, MU_MIN};
use crate::error::{Error, Result};
use crate::fit::{FitProblem, DEFAULT_BETA_JS};
use crate::geometry::HemisphereGrid;
use crate::optim::Adam;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub num_steps: usize,
    pub batch_size: usize,
    /// Learning rate at the first step; decays exponentially to `lr_final`.
    pub lr_initial: f64,
    pub lr_final: f64,
    pub seed: u64,
    pub side: usize,
    pub grid_theta: usize,
    pub grid_phi: usize,
    pub beta_js: f64,
    pub pos_enc: PosEncConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            num_steps: 20_000,
            batch_size: 32,
            lr_initial: 1e-3,
            lr_final: 1e-5,
            seed: 0,
            side: 14,
            grid_theta: 48,
            grid_phi: 96,
            beta_js: DEFAULT_BETA_JS,
            pos_enc: PosEncConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_steps < 1 || self.batch_size < 1 {
            return Err(Error::InvalidInput("num_steps and batch_size must be >= 1".into()));
        }
        if !(self.lr_initial > 0.0 && self.lr_final > 0.0) {
            return Err(Error::InvalidInput("learning rates must be positive".into()));
        }
        if self.pos_enc.num_bands < 1 {
            return Err(Error::InvalidInput("num_bands must be >= 1".into()));
        }
        if !(self.beta_js >= 0.0) {
            return Err(Error::InvalidInput("beta_js must be >= 0".into()));
        }
        Ok(())
    }

    pub fn learning_rate(&self, step: usize) -> f64 {
        if self.num_steps < 2 {
            return self.lr_initial;
        }
        let t = step as f64 / (self.num_steps - 1) as f64;
        self.lr_initial * (self.lr_final / self.lr_initial).powf(t)
    }

    pub fn grid(&self) -> Result<HemisphereGrid> {
        HemisphereGrid::canonical(self.grid_theta, self.grid_phi)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub amortizer: Amortizer,
    /// Mean batch loss at every step.
    pub loss_curve: Vec<f64>,
}

/// Log-uniform `(λ, μ)` on the training range, swapped so that λ ≥ μ.
pub fn sample_bandwidths(rng: &mut impl Rng) -> AsgParams {
    let (lo, hi) = (MU_MIN.ln(), BANDWIDTH_MAX.ln());
    let a = rng.gen_range(lo..=hi).exp();
    let b = rng.gen_range(lo..=hi).exp();
    let (lambda, mu) = if a >= b { (a, b) } else { (b, a) };
    AsgParams::bandwidths(lambda, mu).expect("sampled bandwidths are ordered and positive")
}

/// Fit loss of the network's prediction for `p` and its gradient with
/// respect to every weight.
pub fn loss_and_weight_gradient(
    net: &Amortizer,
    p: &AsgParams,
    grid: &HemisphereGrid,
    beta_js: f64,
) -> Result<(f64, MlpParams)> {
    let features = encode_input(p, &net.pos_enc)?;
    let raw = super::forward(&net.mlp, &features)?;
    let q = SymmetricParams::from_raw(net.side, raw)?;
    let (loss, upstream) = FitProblem::new(p, grid, beta_js)?.loss_and_gradient(&q)?;
    let grad = super::backward(&net.mlp, &features, &upstream)?;
    Ok((loss, grad))
}

pub fn train(cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with_progress(cfg, |_, _| {})
}

/// Trains from a seeded initialization, calling `progress(step, loss)` after
/// every step.
///
/// Per-sample gradients within a batch are computed in parallel, collected
/// in sample order and summed sequentially, so the result does not depend on
/// the thread count.
pub fn train_with_progress(cfg: &TrainConfig, mut progress: impl FnMut(usize, f64)) -> Result<TrainOutcome> {
    cfg.validate()?;
    let full = cfg.grid()?;
    let grid = full.quadrant().unwrap_or(full);
    let mut init_rng = rng::stream(cfg.seed, "amortizer-init");
    let mut net = Amortizer::init(cfg.side, cfg.pos_enc, &mut init_rng);
    let mut sample_rng = rng::stream(cfg.seed, "amortizer-samples");
    let mut flat = net.mlp.flatten();
    let mut opt = Adam::new(flat.len());
    let mut curve = Vec::with_capacity(cfg.num_steps);

    for step in 0..cfg.num_steps {
        let batch: Vec<AsgParams> = (0..cfg.batch_size).map(|_| sample_bandwidths(&mut sample_rng)).collect();
        let results: Vec<Result<(f64, Vec<f64>)>> = batch
            .par_iter()
            .map(|p| loss_and_weight_gradient(&net, p, &grid, cfg.beta_js).map(|(l, g)| (l, g.flatten())))
            .collect();

        let mut total_loss = 0.0;
        let mut grad = vec![0.0; flat.len()];
        for (p, r) in batch.iter().zip(results) {
            let (loss, g) = r?;
            if !loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    step,
                    detail: format!("lambda={}, mu={}", p.lambda, p.mu),
                });
            }
            total_loss += loss;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        let scale = 1.0 / cfg.batch_size as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        let mean = total_loss * scale;
        curve.push(mean);
        progress(step, mean);

        opt.step(&mut flat, &grad, cfg.learning_rate(step));
        net.mlp.assign_flat(&flat);
    }
    Ok(TrainOutcome {
        amortizer: net,
        loss_curve: curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::fit_loss;
    use crate::fit::asg_target;

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            num_steps: 30,
            batch_size: 4,
            side: 2,
            grid_theta: 12,
            grid_phi: 24,
            pos_enc: PosEncConfig { num_bands: 3 },
            ..TrainConfig::default()
        }
    }

    #[test]
    fn samples_are_ordered_and_in_range() {
        let mut rng = rng::stream(3, "test");
        for _ in 0..2000 {
            let p = sample_bandwidths(&mut rng);
            assert!(p.lambda >= p.mu);
            assert!(p.mu >= MU_MIN * (1.0 - 1e-12) && p.lambda <= BANDWIDTH_MAX * (1.0 + 1e-12));
        }
    }

    #[test]
    fn learning_rate_decays_between_endpoints() {
        let cfg = TrainConfig::default();
        assert!((cfg.learning_rate(0) - 1e-3).abs() < 1e-18);
        assert!((cfg.learning_rate(cfg.num_steps - 1) - 1e-5).abs() < 1e-15);
        assert!((cfg.learning_rate(cfg.num_steps / 2) - 1e-4).abs() < 1e-6);
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let cfg = tiny_config();
        let a = train(&cfg).unwrap();
        let b = train(&cfg).unwrap();
        assert_eq!(a.amortizer.mlp.checksum(), b.amortizer.mlp.checksum());
        assert_eq!(a.loss_curve, b.loss_curve);
        assert_eq!(a.loss_curve.len(), 30);
        let head: f64 = a.loss_curve[..5].iter().sum();
        let tail: f64 = a.loss_curve[25..].iter().sum();
        assert!(tail < head, "{head} -> {tail}");
    }

    #[test]
    fn rejects_empty_config() {
        let cfg = TrainConfig {
            batch_size: 0,
            ..tiny_config()
        };
        assert!(train(&cfg).is_err());
    }

    // Loss through the network vs. loss of the predicted parameters.
    #[test]
    fn network_loss_matches_fit_loss() {
        let cfg = tiny_config();
        let mut rng = rng::stream(9, "test");
        let net = Amortizer::init(cfg.side, cfg.pos_enc, &mut rng);
        let grid = cfg.grid().unwrap();
        let p = AsgParams::bandwidths(50.0, 4.0).unwrap();
        let (l, _) = loss_and_weight_gradient(&net, &p, &grid, 0.3).unwrap();
        let q = net.predict(&p).unwrap();
        let direct = fit_loss(&asg_target(&p, &grid).unwrap(), &q, &grid, 0.3).unwrap();
        assert!((l - direct).abs() < 1e-10 * direct.max(1.0));
    }

    #[test]
    fn end_to_end_gradient_matches_finite_differences() {
        let mut rng = rng::stream(5, "test");
        let net = Amortizer::init(2, PosEncConfig { num_bands: 2 }, &mut rng);
        let grid = HemisphereGrid::canonical(12, 24).unwrap().quadrant().unwrap();
        let p = AsgParams::bandwidths(30.0, 2.0).unwrap();
        let (_, g) = loss_and_weight_gradient(&net, &p, &grid, 0.3).unwrap();
        let g = g.flatten();
        let base = net.mlp.flatten();
        let loss_at = |flat: &[f64]| {
            let mut n = net.clone();
            n.mlp.assign_flat(flat);
            loss_and_weight_gradient(&n, &p, &grid, 0.3).unwrap().0
        };
        let h = 1e-5;
        let mut checked = 0;
        for _ in 0..40 {
            let i = rng.gen_range(0..base.len());
            let mut a = base.clone();
            let mut b = base.clone();
            a[i] += h;
            b[i] -= h;
            let fd = (loss_at(&a) - loss_at(&b)) / (2.0 * h);
            let scale = fd.abs().max(g[i].abs());
            // below ~1e-6 the difference quotient is dominated by rounding
            if scale > 1e-6 {
                checked += 1;
                assert!((fd - g[i]).abs() / scale < 1e-4, "weight {i}: fd {fd} vs {}", g[i]);
            }
        }
        assert!(checked > 10);
    }
}
