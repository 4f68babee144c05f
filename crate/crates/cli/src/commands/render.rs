use std::path::PathBuf;

use aniso_lobe::distributions::MaterialParams;
use aniso_lobe::render::{highlight_stats, render_image};

use super::{prepare, write_image};
use crate::cells;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Csv;
use crate::scene::load_scene;

/// Changes applied to the scene's base material. `dphi` is added to the
/// base angle after any absolute `phi`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Edit {
    pub e: Option<f64>,
    pub kappa: Option<f64>,
    pub phi: Option<f64>,
    pub dphi: Option<f64>,
}

impl Edit {
    pub fn apply(&self, base: &MaterialParams) -> Result<MaterialParams, CliError> {
        let phi = self.phi.unwrap_or(base.phi) + self.dphi.unwrap_or(0.0);
        Ok(MaterialParams::new(self.kappa.unwrap_or(base.kappa), self.e.unwrap_or(base.e), phi)?)
    }
}

/// Edit tuples separated by `;`, each a list of `key=value` items
/// (`e`, `kappa`, `phi`, `dphi`) separated by spaces or commas.
pub fn parse_edits(text: &str) -> Result<Vec<Edit>, CliError> {
    let mut edits = Vec::new();
    for tuple in text.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        let mut edit = Edit::default();
        for item in tuple.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("edit item `{item}` must be key=value")))?;
            let v: f64 = v.parse().map_err(|_| CliError::Usage(format!("cannot parse `{v}` in edit `{tuple}`")))?;
            let slot = match k {
                "e" => &mut edit.e,
                "kappa" => &mut edit.kappa,
                "phi" => &mut edit.phi,
                "dphi" => &mut edit.dphi,
                _ => return Err(CliError::Usage(format!("unknown edit key `{k}` (expected e, kappa, phi or dphi)"))),
            };
            *slot = Some(v);
        }
        edits.push(edit);
    }
    Ok(edits)
}

pub fn image_stem(m: &MaterialParams) -> String {
    format!("render_e{:.3}_kappa{:.1}_phi{:.4}", m.e, m.kappa, m.phi)
}

/// Renders the scene's base material and every edit tuple; writes one
/// PPM/PFM pair per distinct material and `highlights.csv`.
pub fn run(mut cfg: RunConfig, scene_flag: Option<PathBuf>, flag_edit: Edit) -> Result<(), CliError> {
    let from_config = cfg.path("scene");
    let scene_path = scene_flag
        .or(from_config)
        .ok_or_else(|| CliError::Usage("render needs a scene file (`scene` key or --scene)".into()))?;
    let mut edits = parse_edits(&cfg.text("edits", ""))?;
    if flag_edit != Edit::default() {
        edits.push(flag_edit);
    }
    let scene = load_scene(&scene_path)?;
    let base = scene.surface.material;
    let mut materials = vec![base];
    for e in &edits {
        let m = e.apply(&base)?;
        if !materials.contains(&m) {
            materials.push(m);
        }
    }
    let mut out = prepare(&cfg)?;

    let mut table = Csv::new(&[
        "image", "e", "kappa", "phi", "peak", "area", "axis_ratio", "principal_angle", "centroid_x", "centroid_y",
    ]);
    for m in &materials {
        let img = render_image(&scene.with_material(*m))?;
        let stem = image_stem(m);
        write_image(&mut out, &stem, &img)?;
        match highlight_stats(&img) {
            Some(h) => {
                table.row(&cells![stem, m.e, m.kappa, m.phi, h.peak, h.area, h.axis_ratio, h.principal_angle, h.centroid.0, h.centroid.1]);
                println!(
                    "{stem}: area {} px, axis ratio {:.3}, axis angle {:.2} deg",
                    h.area,
                    h.axis_ratio,
                    h.principal_angle.to_degrees()
                );
            }
            None => {
                table.row(&cells![stem, m.e, m.kappa, m.phi, 0.0, 0, "nan", "nan", "nan", "nan"]);
                println!("{stem}: black image");
            }
        }
    }
    out.csv("highlights.csv", &table)?;
    println!("wrote {}", out.dir.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edit_tuples() {
        let e = parse_edits("e=0.9; e=0.9 kappa=100; e=0.9,kappa=100,dphi=1.5").unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!(e[1].kappa, Some(100.0));
        assert_eq!(e[2].dphi, Some(1.5));
        assert!(parse_edits("q=1").is_err());
        assert!(parse_edits("e").is_err());
        assert!(parse_edits("").unwrap().is_empty());
        let base = MaterialParams::new(400.0, 0.0, 0.2).unwrap();
        let m = e[2].apply(&base).unwrap();
        assert_eq!((m.e, m.kappa), (0.9, 100.0));
        assert!((m.phi - 1.7).abs() < 1e-12);
    }
}
