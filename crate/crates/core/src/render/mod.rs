//! Deterministic analytic renderer for material-editing demos.
//!
//! Surfaces are shaded with the raw ASG lobe about the mirror direction
//! (no Fresnel, masking or energy normalization) plus a Lambertian term:
//! `c = albedo·(n·l)/π + tint ⊙ ASG(l)`, summed over point lights and the
//! texels of an optional environment map. Point lights have no distance
//! falloff, so a light's intensity is the radiance scale it contributes.

mod analysis;
mod image;

pub use analysis::{axis_angle_difference, highlight_stats, HighlightStats};
pub use image::{decode_pfm, encode_pfm, encode_ppm, Image, LatLongImage, DISPLAY_GAMMA};

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::distributions::{asg_eval, asg_eval_in_frame, bandwidths_from_material, mixture_eval, AsgParams, MaterialParams, VmfMixture};
use crate::error::{Error, Result};
use crate::geometry::{build_tangent_frame, reflect, Frame, UnitVec3, Vec3};
use crate::ide::reflection_rotation;
use crate::losses::Rgb;

/// Largest environment map accepted (texel count of 32×64).
pub const MAX_ENV_TEXELS: usize = 32 * 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    Sphere { center: Vec3, radius: f64 },
    Plane { point: Vec3, normal: UnitVec3 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceMaterial {
    pub material: MaterialParams,
    pub albedo: Rgb,
    pub tint: Rgb,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointLight {
    pub position: Vec3,
    pub intensity: Rgb,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    pub vfov_deg: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub geometry: Geometry,
    pub surface: SurfaceMaterial,
    pub lights: Vec<PointLight>,
    pub env: Option<LatLongImage>,
    pub camera: Camera,
    pub background: Rgb,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if let Geometry::Sphere { radius, .. } = self.geometry {
            if !(radius > 0.0) {
                return bad(format!("sphere radius must be > 0, got {radius}"));
            }
        }
        let c = &self.camera;
        if c.width == 0 || c.height == 0 {
            return bad("image dimensions must be >= 1".into());
        }
        if !(c.vfov_deg > 0.0 && c.vfov_deg < 180.0) {
            return bad(format!("vertical field of view must be in (0, 180), got {}", c.vfov_deg));
        }
        let fwd = c.look_at - c.position;
        if fwd.norm() == 0.0 || fwd.cross(c.up).norm() < 1e-9 {
            return bad("camera look-at must differ from position and not be parallel to up".into());
        }
        let nonneg = |rgb: &Rgb| rgb.iter().all(|v| v.is_finite() && *v >= 0.0);
        if !self.lights.iter().all(|l| nonneg(&l.intensity)) {
            return bad("light intensities must be >= 0".into());
        }
        if !(nonneg(&self.surface.albedo) && nonneg(&self.surface.tint)) {
            return bad("albedo and tint must be >= 0".into());
        }
        if let Some(env) = &self.env {
            if env.width * env.height > MAX_ENV_TEXELS || !env.pixels.iter().all(nonneg) {
                return bad("environment maps must be at most 32x64 with non-negative texels".to_string());
            }
        }
        Ok(())
    }

    pub fn with_material(&self, material: MaterialParams) -> Scene {
        let mut s = self.clone();
        s.surface.material = material;
        s
    }
}

/// Lobe frame at a shading point: canonical axes carried by `R₂R₁` so the
/// lobe axis sits on the mirror direction.
fn lobe_frame(frame: &Frame, view: UnitVec3) -> Frame {
    let omega_r = reflect(view, frame.n);
    let rot = reflection_rotation(frame, omega_r);
    Frame {
        t: rot.rotate(UnitVec3::X),
        b: rot.rotate(UnitVec3::Y),
        n: omega_r,
    }
}

fn shade_with_lobe(
    surface: &SurfaceMaterial,
    asg: &AsgParams,
    normal: UnitVec3,
    lobe: &Frame,
    light_dir: UnitVec3,
    light_rgb: Rgb,
) -> Rgb {
    let cos = normal.dot(light_dir);
    if cos <= 0.0 {
        return [0.0; 3];
    }
    let spec = asg_eval_in_frame(asg, lobe, light_dir);
    let diff = cos / PI;
    let mut out = [0.0; 3];
    for c in 0..3 {
        out[c] = light_rgb[c] * (surface.albedo[c] * diff + surface.tint[c] * spec);
    }
    out
}

/// Radiance toward the camera from one light. `view` is the incoming ray
/// direction; `frame` comes from [`build_tangent_frame`].
pub fn shade_point(surface: &SurfaceMaterial, frame: &Frame, view: UnitVec3, light_dir: UnitVec3, light_rgb: Rgb) -> Rgb {
    let asg = bandwidths_from_material(&surface.material);
    shade_with_lobe(surface, &asg, frame.n, &lobe_frame(frame, view), light_dir, light_rgb)
}

struct Hit {
    point: Vec3,
    normal: UnitVec3,
}

fn intersect(geometry: &Geometry, origin: Vec3, dir: UnitVec3) -> Option<Hit> {
    let d = dir.vec();
    match *geometry {
        Geometry::Sphere { center, radius } => {
            let oc = origin - center;
            let b = oc.dot(d);
            let c = oc.dot(oc) - radius * radius;
            let disc = b * b - c;
            if disc < 0.0 {
                return None;
            }
            let sq = disc.sqrt();
            let t = if -b - sq > 1e-9 { -b - sq } else { -b + sq };
            if t <= 1e-9 {
                return None;
            }
            let point = origin + d * t;
            Some(Hit {
                point,
                normal: UnitVec3::new(point - center).ok()?,
            })
        }
        Geometry::Plane { point, normal } => {
            let denom = normal.vec().dot(d);
            if denom.abs() < 1e-12 {
                return None;
            }
            let t = (point - origin).dot(normal.vec()) / denom;
            if t <= 1e-9 {
                return None;
            }
            let n = if denom > 0.0 { -normal } else { normal };
            Some(Hit {
                point: origin + d * t,
                normal: n,
            })
        }
    }
}

fn camera_ray(cam: &Camera, row: usize, col: usize) -> UnitVec3 {
    let fwd = UnitVec3::new(cam.look_at - cam.position).expect("validated camera");
    let right = UnitVec3::new(fwd.cross(UnitVec3::new(cam.up).expect("validated camera"))).expect("validated camera");
    let up = right.cross(fwd);
    let half = (0.5 * cam.vfov_deg.to_radians()).tan();
    let aspect = cam.width as f64 / cam.height as f64;
    let x = (2.0 * (col as f64 + 0.5) / cam.width as f64 - 1.0) * half * aspect;
    let y = (1.0 - 2.0 * (row as f64 + 0.5) / cam.height as f64) * half;
    UnitVec3::new(fwd.vec() + right.vec() * x + up * y).expect("finite camera ray")
}

fn shade_pixel(scene: &Scene, asg: &AsgParams, row: usize, col: usize) -> Rgb {
    let cam = &scene.camera;
    let dir = camera_ray(cam, row, col);
    let Some(hit) = intersect(&scene.geometry, cam.position, dir) else {
        return scene.background;
    };
    let frame = build_tangent_frame(hit.normal, scene.surface.material.phi);
    let lobe = lobe_frame(&frame, dir);
    let mut out = [0.0; 3];
    let mut add = |c: Rgb| {
        for k in 0..3 {
            out[k] += c[k];
        }
    };
    for light in &scene.lights {
        let Ok(l) = UnitVec3::new(light.position - hit.point) else {
            continue;
        };
        add(shade_with_lobe(&scene.surface, asg, hit.normal, &lobe, l, light.intensity));
    }
    if let Some(env) = &scene.env {
        for row in 0..env.height {
            let w = env.texel_solid_angle(row);
            for col in 0..env.width {
                let radiance = env.get(row, col);
                let rgb = [radiance[0] * w, radiance[1] * w, radiance[2] * w];
                add(shade_with_lobe(&scene.surface, asg, hit.normal, &lobe, env.texel_direction(row, col), rgb));
            }
        }
    }
    out
}

/// Renders linear RGB, one primary ray per pixel; rows are shaded in
/// parallel and each pixel depends only on its own ray.
pub fn render_image(scene: &Scene) -> Result<Image> {
    scene.validate()?;
    let asg = bandwidths_from_material(&scene.surface.material);
    let cam = &scene.camera;
    let pixels: Vec<Rgb> = (0..cam.height)
        .into_par_iter()
        .flat_map_iter(|row| (0..cam.width).map(move |col| (row, col)).collect::<Vec<_>>())
        .map(|(row, col)| shade_pixel(scene, &asg, row, col))
        .collect();
    Image::from_pixels(cam.width, cam.height, pixels)
}

/// Distribution drawn by [`render_lobe_map`].
#[derive(Debug, Clone, Copy)]
pub enum LobeSource<'a> {
    Asg(&'a AsgParams),
    Mixture(&'a VmfMixture),
}

/// Equirectangular plot of a canonical-frame density, scaled to peak 1.
pub fn render_lobe_map(source: LobeSource<'_>, width: usize, height: usize) -> Result<LatLongImage> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput("lobe map dimensions must be >= 1".into()));
    }
    let grid = Image::new(width, height, [0.0; 3]);
    let values: Vec<f64> = (0..width * height)
        .map(|k| {
            let v = grid.texel_direction(k / width, k % width);
            match source {
                LobeSource::Asg(p) => asg_eval(p, v),
                LobeSource::Mixture(m) => mixture_eval(m, v),
            }
        })
        .collect();
    let peak = values.iter().copied().fold(0.0, f64::max);
    let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
    Image::from_pixels(width, height, values.iter().map(|v| [v * scale; 3]).collect())
}
