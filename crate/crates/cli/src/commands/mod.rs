pub mod amortizer;
pub mod fit;
pub mod gradcheck;
pub mod ide_check;
pub mod render;
pub mod sweep;

use aniso_lobe::distributions::SymmetricParams;
use aniso_lobe::fit::FitConfig;
use aniso_lobe::geometry::HemisphereGrid;
use aniso_lobe::render::{encode_pfm, encode_ppm, Image};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::OutDir;

/// Validates the config, creates the output directory and stores the
/// resolved configuration in it.
pub fn prepare(cfg: &RunConfig) -> Result<OutDir, CliError> {
    cfg.finish()?;
    let mut out = OutDir::create(&cfg.output_dir)?;
    out.write("resolved_config.txt", cfg.resolved_text().as_bytes())?;
    Ok(out)
}

pub fn evaluation_grid(cfg: &RunConfig) -> Result<HemisphereGrid, CliError> {
    Ok(HemisphereGrid::canonical(cfg.grid_theta, cfg.grid_phi)?)
}

/// Direct-fit settings shared by `fit`, `sweep-n` and `eval-amortizer`.
/// `d` supplies the defaults; `side` is read only when a default is given
/// (sweeps set it per job).
pub fn fit_config(cfg: &mut RunConfig, side_default: Option<usize>, d: FitConfig) -> Result<FitConfig, CliError> {
    Ok(FitConfig {
        beta_js: cfg.get("beta_js", d.beta_js)?,
        max_iters: cfg.get("max_iters", d.max_iters)?,
        step_size: cfg.get("step_size", d.step_size)?,
        tol: cfg.get("tol", d.tol)?,
        patience: cfg.get("patience", d.patience)?,
        side: match side_default {
            Some(d) => cfg.get("side", d)?,
            None => 0,
        },
        seed: cfg.seed,
        jitter: cfg.get("jitter", d.jitter)?,
        step_halvings: cfg.get("step_halvings", d.step_halvings)?,
    })
}

/// Writes an image as a display PPM plus a float PFM sidecar.
pub fn write_image(out: &mut OutDir, stem: &str, img: &Image) -> Result<(), CliError> {
    out.write(&format!("{stem}.ppm"), &encode_ppm(img))?;
    out.write(&format!("{stem}.pfm"), &encode_pfm(img))?;
    Ok(())
}

/// Human-readable mixture parameters as `key = value` lines.
pub fn describe_mixture(q: &SymmetricParams) -> String {
    let (a0, side) = q.weights();
    let mut s = format!("side = {}\nlobes = {}\nkappa0 = {}\nalpha0 = {}\n", q.side(), q.lobe_count(), q.kappa0(), a0);
    for (i, a) in side.iter().enumerate() {
        s += &format!("lobe.{} = theta {}, kappa {}, alpha {}\n", i + 1, q.theta(i), q.kappa_side(i), a);
    }
    s += &format!("side_mass = {}\n", q.side_mass());
    let raw: Vec<String> = q.raw().iter().map(|v| v.to_string()).collect();
    s += &format!("raw = {}\n", raw.join(", "));
    s
}
