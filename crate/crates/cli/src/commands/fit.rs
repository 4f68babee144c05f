use aniso_lobe::distributions::{expand_symmetric, AsgParams};
use aniso_lobe::fit::{fit_mixture, FitConfig};
use aniso_lobe::render::{render_lobe_map, LobeSource};

use super::{describe_mixture, evaluation_grid, fit_config, prepare, write_image};
use crate::cells;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Csv;

/// Fits one target and writes `fit_params.txt`, `fit_trace.csv` and, unless
/// disabled, lat-long lobe maps of target and fit.
pub fn run(mut cfg: RunConfig) -> Result<(), CliError> {
    let lambda: f64 = cfg.get("lambda", 270.0)?;
    let mu: f64 = cfg.get("mu", 0.01)?;
    let fit_cfg = fit_config(&mut cfg, Some(14), FitConfig::default())?;
    let lobe_maps: bool = cfg.get("lobe_maps", true)?;
    let map_w: usize = cfg.get("lobe_map_width", 256)?;
    let map_h: usize = cfg.get("lobe_map_height", 128)?;
    let mut out = prepare(&cfg)?;

    let target = AsgParams::bandwidths(lambda, mu)?;
    let grid = evaluation_grid(&cfg)?;
    let res = fit_mixture(&target, &fit_cfg, &grid)?;

    let mut params = format!(
        "lambda = {lambda}\nmu = {mu}\nbeta_js = {}\nfinal_loss = {}\ninitial_loss = {}\niters_used = {}\nconverged = {}\n",
        fit_cfg.beta_js, res.final_loss, res.initial_loss, res.iters_used, res.converged
    );
    params += &describe_mixture(&res.params);
    out.write("fit_params.txt", params.as_bytes())?;

    let mut trace = Csv::new(&["iter", "loss"]);
    for (i, l) in res.trace.iter().enumerate() {
        trace.row(&cells![i, l]);
    }
    out.csv("fit_trace.csv", &trace)?;

    if lobe_maps {
        let target_map = render_lobe_map(LobeSource::Asg(&target), map_w, map_h)?;
        write_image(&mut out, "target_lobe", &target_map)?;
        let mix = expand_symmetric(&res.params)?;
        let fit_map = render_lobe_map(LobeSource::Mixture(&mix), map_w, map_h)?;
        write_image(&mut out, "fit_lobe", &fit_map)?;
    }
    println!(
        "fit lambda={lambda} mu={mu} N={}: loss {:.6e} -> {:.6e} in {} iterations{}",
        res.params.lobe_count(),
        res.initial_loss,
        res.final_loss,
        res.iters_used,
        if res.converged { " (converged)" } else { "" }
    );
    println!("wrote {}", out.dir.display());
    Ok(())
}
