use std::path::{Path, PathBuf};

use aniso_lobe::amortizer::{read_weights, sample_bandwidths, train_with_progress, write_weights, Amortizer, PosEncConfig, TrainConfig};
use aniso_lobe::distributions::{AsgParams, BANDWIDTH_MAX, MU_MIN};
use aniso_lobe::fit::{fit_mixture, FitConfig, FitProblem};
use aniso_lobe::rng;
use rand::Rng;
use rayon::prelude::*;

use super::{evaluation_grid, fit_config, prepare};
use crate::cells;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Csv;

pub const WEIGHTS_FILE: &str = "amortizer.bin";

/// Trains from scratch; writes the weight file and `loss_curve.csv`.
pub fn train(mut cfg: RunConfig) -> Result<(), CliError> {
    let d = TrainConfig::default();
    let tc = TrainConfig {
        num_steps: cfg.get("num_steps", d.num_steps)?,
        batch_size: cfg.get("batch_size", d.batch_size)?,
        lr_initial: cfg.get("lr_initial", d.lr_initial)?,
        lr_final: cfg.get("lr_final", d.lr_final)?,
        seed: cfg.seed,
        side: cfg.get("side", d.side)?,
        grid_theta: cfg.get("train_grid_theta", d.grid_theta)?,
        grid_phi: cfg.get("train_grid_phi", d.grid_phi)?,
        beta_js: cfg.get("beta_js", d.beta_js)?,
        pos_enc: PosEncConfig {
            num_bands: cfg.get("num_bands", d.pos_enc.num_bands)?,
        },
    };
    let log_every: usize = cfg.get("log_every", 1000)?;
    tc.validate()?;
    let mut out = prepare(&cfg)?;

    let outcome = train_with_progress(&tc, |step, loss| {
        if log_every > 0 && (step % log_every == 0 || step + 1 == tc.num_steps) {
            eprintln!("step {step:>6}  lr {:.3e}  loss {loss:.6e}", tc.learning_rate(step));
        }
    })?;
    let mut curve = Csv::new(&["step", "learning_rate", "loss"]);
    for (step, loss) in outcome.loss_curve.iter().enumerate() {
        curve.row(&cells![step, tc.learning_rate(step), loss]);
    }
    out.csv("loss_curve.csv", &curve)?;
    let path = out.write(WEIGHTS_FILE, &write_weights(&outcome.amortizer))?;
    println!(
        "trained {} steps (batch {}), final batch loss {:.6e}, checksum {:016x}",
        tc.num_steps,
        tc.batch_size,
        outcome.loss_curve.last().copied().unwrap_or(f64::NAN),
        outcome.amortizer.mlp.checksum()
    );
    println!("wrote {}", path.display());
    Ok(())
}

pub fn load(path: &Path) -> Result<Amortizer, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    read_weights(&bytes).map_err(|source| CliError::Weights {
        path: path.to_path_buf(),
        source,
    })
}

/// Summary of an evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub pairs: usize,
    pub mean_amortized: f64,
    pub mean_direct: f64,
    pub ratio_of_means: f64,
    pub mean_of_ratios: f64,
    pub isotropic_side_mass: f64,
}

/// Compares amortized predictions with direct fits on held-out pairs and
/// writes `eval.csv` and `eval_summary.txt`. Fails the check when the mean
/// amortized loss exceeds `max_ratio` times the mean direct-fit loss. The
/// average side-lobe mass predicted for isotropic pairs is reported too.
pub fn eval(mut cfg: RunConfig, weights_flag: Option<PathBuf>) -> Result<(), CliError> {
    let from_config = cfg.path("weights");
    let weights = weights_flag
        .or(from_config)
        .ok_or_else(|| CliError::Usage("eval-amortizer needs a weight file (`weights` key or --weights)".into()))?;
    let num_pairs: usize = cfg.get("num_pairs", 200)?;
    let iso_pairs: usize = cfg.get("isotropic_pairs", 20)?;
    let max_ratio: f64 = cfg.get("max_ratio", 2.0)?;
    let mut fc = fit_config(&mut cfg, None, FitConfig::default())?;
    if num_pairs == 0 {
        return Err(CliError::Usage("num_pairs must be >= 1".into()));
    }
    let net = load(&weights)?;
    fc.side = net.side;
    let mut out = prepare(&cfg)?;
    let grid = evaluation_grid(&cfg)?;

    let mut r = rng::stream(cfg.seed, "eval-amortizer");
    let targets: Vec<AsgParams> = (0..num_pairs).map(|_| sample_bandwidths(&mut r)).collect();
    let rows: Vec<(f64, f64)> = targets
        .par_iter()
        .map(|p| {
            let amortized = FitProblem::new(p, &grid, fc.beta_js)?.loss(&net.predict(p)?)?;
            let direct = fit_mixture(p, &fc, &grid)?.final_loss;
            Ok((amortized, direct))
        })
        .collect::<Result<_, CliError>>()?;

    let mut table = Csv::new(&["lambda", "mu", "amortized_loss", "direct_fit_loss", "ratio"]);
    for (p, &(a, d)) in targets.iter().zip(&rows) {
        table.row(&cells![p.lambda, p.mu, a, d, a / d]);
    }
    out.csv("eval.csv", &table)?;

    let mut r = rng::stream(cfg.seed, "eval-amortizer-isotropic");
    let (lo, hi) = (MU_MIN.ln(), BANDWIDTH_MAX.ln());
    let mut iso_mass = 0.0;
    for _ in 0..iso_pairs {
        let b = r.gen_range(lo..hi).exp();
        iso_mass += net.predict(&AsgParams::bandwidths(b, b)?)?.side_mass();
    }
    let n = num_pairs as f64;
    let s = EvalSummary {
        pairs: num_pairs,
        mean_amortized: rows.iter().map(|r| r.0).sum::<f64>() / n,
        mean_direct: rows.iter().map(|r| r.1).sum::<f64>() / n,
        ratio_of_means: rows.iter().map(|r| r.0).sum::<f64>() / rows.iter().map(|r| r.1).sum::<f64>(),
        mean_of_ratios: rows.iter().map(|r| r.0 / r.1).sum::<f64>() / n,
        isotropic_side_mass: if iso_pairs > 0 { iso_mass / iso_pairs as f64 } else { 0.0 },
    };
    let ratio_ok = s.ratio_of_means <= max_ratio;
    let text = format!(
        "pairs = {}\nmean_amortized_loss = {}\nmean_direct_loss = {}\nratio_of_means = {}\nmean_of_ratios = {}\nisotropic_pairs = {iso_pairs}\nmean_isotropic_side_mass = {}\npassed = {}\n",
        s.pairs,
        s.mean_amortized,
        s.mean_direct,
        s.ratio_of_means,
        s.mean_of_ratios,
        s.isotropic_side_mass,
        ratio_ok
    );
    out.write("eval_summary.txt", text.as_bytes())?;
    print!("{text}");
    println!("wrote {}", out.dir.display());
    if !ratio_ok {
        return Err(CliError::Check(format!(
            "mean amortized loss is {:.3}x the mean direct-fit loss (limit {max_ratio})",
            s.ratio_of_means
        )));
    }
    Ok(())
}
