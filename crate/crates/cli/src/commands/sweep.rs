use std::time::Instant;

use aniso_lobe::distributions::AsgParams;
use aniso_lobe::fit::{fit_mixture, FitConfig};
use aniso_lobe::rng;
use rand::Rng;
use rayon::prelude::*;

use super::{evaluation_grid, fit_config, prepare};
use crate::cells;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Csv;

pub const DEFAULT_PAIRS: &str = "10:10, 270:0.01, 600:133, 66:0.01";

/// `λ:μ` pairs separated by commas.
fn parse_pairs(text: &str) -> Result<Vec<(f64, f64)>, CliError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let (l, m) = s.split_once(':').ok_or_else(|| CliError::Usage(format!("pair `{}` must be lambda:mu", s.trim())))?;
            let p = |v: &str| v.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("cannot parse `{}` in pair", v.trim())));
            Ok((p(l)?, p(m)?))
        })
        .collect()
}

/// Sweeps compare family capacity, so fits run to a tighter stop than the
/// per-target default: step halving on stalls, a smaller improvement
/// threshold and a larger budget. Seeds differ through initial jitter.
pub fn sweep_fit_defaults() -> FitConfig {
    FitConfig {
        max_iters: 20_000,
        tol: 1e-10,
        step_halvings: 10,
        jitter: 0.05,
        ..FitConfig::default()
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Fits every (N, pair, seed) combination and writes `sweep_n.csv` plus a
/// per-(pair, N) median table `sweep_summary.csv`.
pub fn run(mut cfg: RunConfig) -> Result<(), CliError> {
    let n_list: Vec<usize> = cfg.list("n_list", vec![1, 5, 13, 29])?;
    let pairs_text = cfg.text("pairs", DEFAULT_PAIRS);
    let seeds: usize = cfg.get("seeds", 5)?;
    let base = fit_config(&mut cfg, None, sweep_fit_defaults())?;
    let record_time: bool = cfg.get("record_wall_time", true)?;
    if n_list.is_empty() {
        return Err(CliError::Usage("n_list must name at least one component count".into()));
    }
    if let Some(n) = n_list.iter().find(|n| **n % 2 == 0) {
        return Err(CliError::Usage(format!("component counts are N = 2L + 1, so {n} is not allowed")));
    }
    if seeds == 0 {
        return Err(CliError::Usage("seeds must be >= 1".into()));
    }
    let pairs = parse_pairs(&pairs_text)?;
    if pairs.is_empty() {
        return Err(CliError::Usage("pairs must list at least one lambda:mu pair".into()));
    }
    let targets = pairs
        .iter()
        .map(|&(l, m)| AsgParams::bandwidths(l, m))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = prepare(&cfg)?;
    let grid = evaluation_grid(&cfg)?;

    let fit_seeds: Vec<u64> = (0..seeds)
        .map(|s| rng::substream(cfg.seed, "sweep-n", s as u64).gen())
        .collect();
    let mut jobs = Vec::new();
    for &n in &n_list {
        for (pi, _) in targets.iter().enumerate() {
            for &seed in &fit_seeds {
                jobs.push((n, pi, seed));
            }
        }
    }
    let results: Vec<(f64, u128)> = jobs
        .par_iter()
        .map(|&(n, pi, seed)| {
            let fc = FitConfig {
                side: (n - 1) / 2,
                seed,
                ..base.clone()
            };
            let t = Instant::now();
            let r = fit_mixture(&targets[pi], &fc, &grid)?;
            Ok((r.final_loss, t.elapsed().as_millis()))
        })
        .collect::<Result<_, CliError>>()?;

    let mut table = Csv::new(&["N", "lambda", "mu", "seed", "final_loss", "wall_time_ms"]);
    for (&(n, pi, seed), &(loss, ms)) in jobs.iter().zip(&results) {
        let ms = if record_time { ms } else { 0 };
        table.row(&cells![n, pairs[pi].0, pairs[pi].1, seed, loss, ms]);
    }
    out.csv("sweep_n.csv", &table)?;

    let mut summary = Csv::new(&["lambda", "mu", "N", "median_loss"]);
    for (pi, &(l, m)) in pairs.iter().enumerate() {
        let mut line = format!("lambda={l} mu={m}:");
        for &n in &n_list {
            let mut losses: Vec<f64> = jobs
                .iter()
                .zip(&results)
                .filter(|((jn, jp, _), _)| *jn == n && *jp == pi)
                .map(|(_, r)| r.0)
                .collect();
            let med = median(&mut losses);
            summary.row(&cells![l, m, n, med]);
            line += &format!("  N={n} {med:.3e}");
        }
        println!("{line}");
    }
    out.csv("sweep_summary.csv", &summary)?;
    println!("wrote {}", out.dir.display());
    Ok(())
}
