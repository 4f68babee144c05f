//! Scene files: the same `key = value` syntax with one section per object.
//!
//! ```text
//! background = 0, 0, 0
//! [camera]
//! position = 0, 4, 0
//! look_at = 0, 0, 0
//! up = 0, 0, 1
//! vfov = 30
//! width = 128
//! height = 128
//! [sphere]
//! center = 0, 0, 0
//! radius = 1
//! [material]
//! kappa = 400
//! e = 0
//! phi = 0
//! albedo = 0.05, 0.05, 0.05
//! tint = 1, 1, 1
//! [light]
//! position = 1, 4, 1
//! intensity = 1, 1, 1
//! ```
//!
//! `[light]` may repeat; `[plane]` (`point`, `normal`) replaces `[sphere]`;
//! an optional `[environment]` section names a lat-long PFM via `map`.

use std::path::Path;

use aniso_lobe::distributions::MaterialParams;
use aniso_lobe::geometry::{UnitVec3, Vec3};
use aniso_lobe::render::{decode_pfm, Camera, Geometry, PointLight, Scene, SurfaceMaterial};

use crate::config::{parse, parse_vec3, Section};
use crate::error::CliError;

pub fn load_scene(path: &Path) -> Result<Scene, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    parse_scene(&text, &path.display().to_string(), base)
}

struct Reader<'a> {
    s: &'a Section,
    origin: &'a str,
    used: Vec<&'static str>,
}

impl<'a> Reader<'a> {
    fn new(s: &'a Section, origin: &'a str) -> Self {
        Self { s, origin, used: Vec::new() }
    }

    fn raw(&mut self, key: &'static str) -> Option<(&'a str, usize)> {
        self.used.push(key);
        self.s.get(key).map(|e| (e.value.as_str(), e.line))
    }

    fn err(&self, line: usize, msg: String) -> CliError {
        CliError::Usage(format!("{}:{line}: {msg}", self.origin))
    }

    fn missing(&self, key: &str) -> CliError {
        self.err(self.s.line, format!("[{}] needs `{key}`", self.s.name))
    }

    fn vec3(&mut self, key: &'static str, default: Option<[f64; 3]>) -> Result<[f64; 3], CliError> {
        match self.raw(key) {
            Some((v, line)) => parse_vec3(v).map_err(|e| self.err(line, format!("{key}: {e}"))),
            None => default.ok_or_else(|| self.missing(key)),
        }
    }

    fn num<T: std::str::FromStr>(&mut self, key: &'static str, default: Option<T>) -> Result<T, CliError> {
        match self.raw(key) {
            Some((v, line)) => v.parse().map_err(|_| self.err(line, format!("cannot parse `{v}` for `{key}`"))),
            None => default.ok_or_else(|| self.missing(key)),
        }
    }

    fn done(self) -> Result<(), CliError> {
        match self.s.entries.iter().find(|e| !self.used.contains(&e.key.as_str())) {
            None => Ok(()),
            Some(e) => Err(self.err(e.line, format!("unknown key `{}` in [{}]", e.key, self.s.name))),
        }
    }
}

fn unit(v: [f64; 3], what: &str) -> Result<UnitVec3, CliError> {
    UnitVec3::new(Vec3::from_array(v)).map_err(|_| CliError::Usage(format!("{what} must be a non-zero vector")))
}

pub fn parse_scene(text: &str, origin: &str, base: &Path) -> Result<Scene, CliError> {
    let sections = parse(text, origin)?;
    let mut background = [0.0; 3];
    let mut camera = None;
    let mut geometry = None;
    let mut surface = None;
    let mut lights = Vec::new();
    let mut env = None;
    for s in &sections {
        let mut r = Reader::new(s, origin);
        let once = |taken: bool| -> Result<(), CliError> {
            if taken {
                Err(CliError::Usage(format!("{origin}:{}: only one [{}] section is allowed", s.line, s.name)))
            } else {
                Ok(())
            }
        };
        match s.name.as_str() {
            "" => background = r.vec3("background", Some([0.0; 3]))?,
            "camera" => {
                once(camera.is_some())?;
                camera = Some(Camera {
                    position: Vec3::from_array(r.vec3("position", None)?),
                    look_at: Vec3::from_array(r.vec3("look_at", Some([0.0; 3]))?),
                    up: Vec3::from_array(r.vec3("up", Some([0.0, 0.0, 1.0]))?),
                    vfov_deg: r.num("vfov", Some(30.0))?,
                    width: r.num("width", Some(128))?,
                    height: r.num("height", Some(128))?,
                });
            }
            "sphere" | "plane" => {
                once(geometry.is_some())?;
                geometry = Some(if s.name == "sphere" {
                    Geometry::Sphere {
                        center: Vec3::from_array(r.vec3("center", Some([0.0; 3]))?),
                        radius: r.num("radius", Some(1.0))?,
                    }
                } else {
                    Geometry::Plane {
                        point: Vec3::from_array(r.vec3("point", Some([0.0; 3]))?),
                        normal: unit(r.vec3("normal", Some([0.0, 0.0, 1.0]))?, "plane normal")?,
                    }
                });
            }
            "material" => {
                once(surface.is_some())?;
                let kappa = r.num("kappa", None)?;
                let e = r.num("e", Some(0.0))?;
                let phi = r.num("phi", Some(0.0))?;
                surface = Some(SurfaceMaterial {
                    material: MaterialParams::new(kappa, e, phi)?,
                    albedo: r.vec3("albedo", Some([0.0; 3]))?,
                    tint: r.vec3("tint", Some([1.0; 3]))?,
                });
            }
            "light" => lights.push(PointLight {
                position: Vec3::from_array(r.vec3("position", None)?),
                intensity: r.vec3("intensity", Some([1.0; 3]))?,
            }),
            "environment" => {
                once(env.is_some())?;
                let (map, _) = r.raw("map").ok_or_else(|| r.missing("map"))?;
                let path = base.join(map);
                let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
                env = Some(decode_pfm(&bytes)?);
            }
            other => {
                return Err(CliError::Usage(format!("{origin}:{}: unknown section [{other}]", s.line)));
            }
        }
        r.done()?;
    }
    let scene = Scene {
        geometry: geometry.unwrap_or(Geometry::Sphere {
            center: Vec3::new(0.0, 0.0, 0.0),
            radius: 1.0,
        }),
        surface: surface.ok_or_else(|| CliError::Usage(format!("{origin}: scene needs a [material] section")))?,
        lights,
        env,
        camera: camera.ok_or_else(|| CliError::Usage(format!("{origin}: scene needs a [camera] section")))?,
        background,
    };
    scene.validate()?;
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCENE: &str = "background = 0.1, 0.1, 0.1\n[camera]\nposition = 0, 4, 0\n[material]\nkappa = 100\ne = 0.5\n[light]\nposition = 1, 4, 1\n[light]\nposition = -1, 4, 1\nintensity = 2, 2, 2\n";

    #[test]
    fn parses_defaults_and_repeated_lights() {
        let s = parse_scene(SCENE, "t", Path::new("")).unwrap();
        assert_eq!(s.lights.len(), 2);
        assert_eq!(s.lights[1].intensity, [2.0; 3]);
        assert_eq!(s.camera.width, 128);
        assert_eq!(s.surface.material.e, 0.5);
        assert!(matches!(s.geometry, Geometry::Sphere { radius, .. } if radius == 1.0));
        assert_eq!(s.background, [0.1; 3]);
    }

    #[test]
    fn reports_bad_scenes() {
        assert!(parse_scene("[camera]\nposition = 0,4,0\n", "t", Path::new("")).is_err());
        let typo = SCENE.replace("e = 0.5", "ee = 0.5");
        assert!(parse_scene(&typo, "t", Path::new("")).is_err());
        let bad_kappa = SCENE.replace("kappa = 100", "kappa = 0.5");
        assert!(parse_scene(&bad_kappa, "t", Path::new("")).is_err());
        let two = format!("{SCENE}[camera]\nposition = 1,1,1\n");
        assert!(parse_scene(&two, "t", Path::new("")).is_err());
    }
}
