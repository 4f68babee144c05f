use aniso_lobe::distributions::{expand_symmetric, SymmetricParams, VmfMixture};
use aniso_lobe::geometry::{build_tangent_frame, reflect, Frame, UnitVec3, Vec3};
use aniso_lobe::ide::{ide_asg_with, ide_vmf_with, monte_carlo_sh, orient_mixture, sample_mixture, sample_vmf, Attenuation};
use aniso_lobe::rng;
use aniso_lobe::sh::{sh_eval, IdeVector, ShLevelSet};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::prepare;
use crate::cells;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Csv;

/// Concentration at which the encoding must reduce to plain harmonics.
const LIMIT_KAPPA: f64 = 1e12;
const LIMIT_TOLERANCE: f64 = 1e-9;

pub fn parse_attenuation(text: &str) -> Result<Attenuation, CliError> {
    match text {
        "exact" => Ok(Attenuation::Exact),
        "exp" => Ok(Attenuation::RefNerfExp),
        other => Err(CliError::Usage(format!("attenuation must be `exact` or `exp`, got `{other}`"))),
    }
}

fn random_unit(r: &mut ChaCha8Rng) -> UnitVec3 {
    let z: f64 = r.gen_range(-1.0..1.0);
    let phi: f64 = r.gen_range(0.0..std::f64::consts::TAU);
    UnitVec3::from_spherical(z.acos(), phi)
}

/// A fixed two-side-lobe mixture, placed with a random frame and view.
fn mixture_case(r: &mut ChaCha8Rng) -> (VmfMixture, Frame, UnitVec3) {
    let q = SymmetricParams::from_values(&[0.3, 0.7], &[20.0, 40.0], &[0.4, -0.2], 30.0, 0.0).expect("fixed mixture is valid");
    let mix = expand_symmetric(&q).expect("fixed mixture expands");
    let n = random_unit(r);
    let frame = build_tangent_frame(n, r.gen_range(0.0..std::f64::consts::PI));
    let mut view = random_unit(r);
    if view.dot(n) > 0.0 {
        view = UnitVec3::new(Vec3::new(-view.x(), -view.y(), -view.z())).expect("unit");
    }
    let omega_r = reflect(view, n);
    (mix, frame, omega_r)
}

struct CaseResult {
    name: String,
    kappa: f64,
    analytic: IdeVector,
    mean: Vec<f64>,
    std_err: Vec<f64>,
}

/// `|z|` of one component; a component with zero spread is compared
/// exactly (the imaginary m = 0 parts vanish identically).
fn z_score(analytic: f64, mean: f64, se: f64) -> f64 {
    let d = mean - analytic;
    if se > 0.0 {
        d / se
    } else if d.abs() <= 1e-12 {
        0.0
    } else {
        f64::INFINITY * d.signum()
    }
}

/// Compares the analytic encodings with Monte Carlo expectations of the
/// harmonics under samples of each lobe; writes per-component z-scores to
/// `ide_check.csv` and per-case pass rates to `ide_check_summary.csv`.
pub fn run(mut cfg: RunConfig) -> Result<(), CliError> {
    let kappas: Vec<f64> = cfg.list("kappas", vec![1.0, 10.0, 100.0])?;
    let samples: usize = cfg.get("samples", 1_000_000)?;
    let levels: Vec<usize> = cfg.list("levels", ShLevelSet::default().levels().to_vec())?;
    let atten_text = cfg.text("attenuation", "exact");
    let mixture: bool = cfg.get("mixture_check", true)?;
    let z_limit: f64 = cfg.get("z_limit", 3.0)?;
    let min_fraction: f64 = cfg.get("min_fraction", 0.99)?;
    let atten = parse_attenuation(&atten_text)?;
    let levels = ShLevelSet::new(levels)?;
    if samples < 2 {
        return Err(CliError::Usage("samples must be >= 2".into()));
    }
    if let Some(k) = kappas.iter().find(|k| !(**k > 0.0)) {
        return Err(CliError::Usage(format!("kappas must be > 0, got {k}")));
    }
    let mut out = prepare(&cfg)?;
    let seed = cfg.seed;

    let mut cases: Vec<(String, f64)> = kappas.iter().map(|&k| (format!("vmf_kappa_{k}"), k)).collect();
    if mixture {
        cases.push(("mixture".to_string(), f64::NAN));
    }
    let results: Vec<CaseResult> = cases
        .par_iter()
        .enumerate()
        .map(|(i, (name, kappa))| {
            let mut r = rng::substream(seed, "ide-check", i as u64);
            let (analytic, est) = if kappa.is_nan() {
                let (mix, frame, omega_r) = mixture_case(&mut r);
                let analytic = ide_asg_with(&mix, &frame, omega_r, &levels, atten)?;
                let world = orient_mixture(&mix, &frame, omega_r);
                let est = monte_carlo_sh(&levels, samples, || sample_mixture(&world, &mut r));
                (analytic, est)
            } else {
                let mean = random_unit(&mut r);
                let analytic = ide_vmf_with(mean, *kappa, &levels, atten)?;
                let est = monte_carlo_sh(&levels, samples, || sample_vmf(mean, *kappa, &mut r));
                (analytic, est)
            };
            Ok(CaseResult {
                name: name.clone(),
                kappa: *kappa,
                analytic,
                mean: est.mean.components,
                std_err: est.std_err,
            })
        })
        .collect::<Result<_, CliError>>()?;

    let layout = levels.layout();
    let dim = levels.dimension();
    let mut table = Csv::new(&[
        "case", "kappa", "component", "level", "m", "part", "dimension", "analytic", "mc_mean", "std_err", "z",
    ]);
    let mut summary = Csv::new(&["case", "kappa", "components", "within", "fraction", "passed"]);
    let mut failures = Vec::new();
    for c in &results {
        let mut within = 0;
        for (k, &(l, m, imag)) in layout.iter().enumerate() {
            let z = z_score(c.analytic.components[k], c.mean[k], c.std_err[k]);
            if z.abs() <= z_limit {
                within += 1;
            }
            let part = if imag { "im" } else { "re" };
            table.row(&cells![c.name, c.kappa, k, l, m, part, dim, c.analytic.components[k], c.mean[k], c.std_err[k], z]);
        }
        let fraction = within as f64 / dim as f64;
        let passed = fraction >= min_fraction;
        if !passed {
            failures.push(format!("{} ({within}/{dim} within {z_limit} standard errors)", c.name));
        }
        summary.row(&cells![c.name, c.kappa, dim, within, fraction, passed]);
        println!("{:<16} {within}/{dim} components within {z_limit} SE{}", c.name, if passed { "" } else { "  FAIL" });
    }

    let dir = random_unit(&mut rng::stream(seed, "ide-check-limit"));
    let limit = ide_vmf_with(dir, LIMIT_KAPPA, &levels, atten)?.max_abs_diff(&sh_eval(&levels, dir));
    let limit_ok = limit <= LIMIT_TOLERANCE;
    let (n_ok, frac) = if limit_ok { (dim, 1.0) } else { (0, 0.0) };
    summary.row(&cells!["sharp_limit", LIMIT_KAPPA, dim, n_ok, frac, limit_ok]);
    println!("sharp limit: max |IDE - SH| = {limit:.3e}");
    if !limit_ok {
        failures.push(format!("sharp limit differs from plain harmonics by {limit:.3e}"));
    }

    out.csv("ide_check.csv", &table)?;
    out.csv("ide_check_summary.csv", &summary)?;
    println!("encoding dimension {dim}; wrote {}", out.dir.display());
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failures.join("; ")))
    }
}
