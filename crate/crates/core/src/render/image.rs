use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::UnitVec3;
use crate::losses::Rgb;

pub const DISPLAY_GAMMA: f64 = 2.2;

/// Linear-RGB float image, rows top to bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb>,
}

/// An [`Image`] read as an equirectangular map: row → polar angle from +z,
/// column → azimuth from +x.
pub type LatLongImage = Image;

impl Image {
    pub fn new(width: usize, height: usize, fill: Rgb) -> Self {
        Self {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "image of {width}x{height} needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn get(&self, row: usize, col: usize) -> Rgb {
        self.pixels[row * self.width + col]
    }

    pub fn luminance(&self) -> Vec<f64> {
        self.pixels
            .iter()
            .map(|p| 0.2126 * p[0] + 0.7152 * p[1] + 0.0722 * p[2])
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        self.pixels
            .iter()
            .zip(&other.pixels)
            .flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).abs()))
            .fold(0.0, f64::max)
    }

    pub fn max_channel(&self) -> f64 {
        self.pixels.iter().flat_map(|p| p.iter().copied()).fold(0.0, f64::max)
    }

    /// Direction through the center of lat-long texel `(row, col)`.
    pub fn texel_direction(&self, row: usize, col: usize) -> UnitVec3 {
        let theta = (row as f64 + 0.5) * PI / self.height as f64;
        let phi = (col as f64 + 0.5) * 2.0 * PI / self.width as f64;
        UnitVec3::from_spherical(theta, phi)
    }

    /// Exact solid angle of a texel in `row`.
    pub fn texel_solid_angle(&self, row: usize) -> f64 {
        let t0 = row as f64 * PI / self.height as f64;
        let t1 = (row + 1) as f64 * PI / self.height as f64;
        (t0.cos() - t1.cos()) * 2.0 * PI / self.width as f64
    }
}

/// Binary PPM (P6), 8 bits per channel after a gamma-2.2 encode of the
/// clamped linear values.
pub fn encode_ppm(img: &Image) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    for p in &img.pixels {
        for c in p {
            let v = c.clamp(0.0, 1.0).powf(1.0 / DISPLAY_GAMMA);
            out.push((v * 255.0).round() as u8);
        }
    }
    out
}

/// Color PFM: header `PF\n<w> <h>\n-1.0\n`, then little-endian `f32`
/// triples with rows stored bottom to top.
pub fn encode_pfm(img: &Image) -> Vec<u8> {
    let mut out = format!("PF\n{} {}\n-1.0\n", img.width, img.height).into_bytes();
    for row in (0..img.height).rev() {
        for col in 0..img.width {
            for c in img.get(row, col) {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
    }
    out
}

pub fn decode_pfm(bytes: &[u8]) -> Result<Image> {
    let bad = |msg: &str| Error::InvalidInput(format!("malformed PFM: {msg}"));
    let mut fields = Vec::new();
    let mut at = 0;
    // three whitespace-terminated header tokens lines: "PF", "w h", "scale"
    while fields.len() < 4 {
        while at < bytes.len() && bytes[at].is_ascii_whitespace() {
            at += 1;
        }
        let start = at;
        while at < bytes.len() && !bytes[at].is_ascii_whitespace() {
            at += 1;
        }
        if start == at {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..at]).map_err(|_| bad("header is not text"))?);
    }
    at += 1;
    if fields[0] != "PF" {
        return Err(bad("only color PFM is supported"));
    }
    let width: usize = fields[1].parse().map_err(|_| bad("width"))?;
    let height: usize = fields[2].parse().map_err(|_| bad("height"))?;
    let scale: f64 = fields[3].parse().map_err(|_| bad("scale"))?;
    let little = scale < 0.0;
    let need = width * height * 12;
    if bytes.len() < at + need {
        return Err(bad("truncated pixel data"));
    }
    let mut pixels = vec![[0.0; 3]; width * height];
    let mut k = at;
    for row in (0..height).rev() {
        for col in 0..width {
            for c in 0..3 {
                let b: [u8; 4] = bytes[k..k + 4].try_into().expect("4 bytes");
                let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
                pixels[row * width + col][c] = v as f64;
                k += 4;
            }
        }
    }
    Image::from_pixels(width, height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient() -> Image {
        let pixels = (0..6).map(|i| [i as f64 / 5.0, 0.25, 1.5]).collect();
        Image::from_pixels(3, 2, pixels).unwrap()
    }

    #[test]
    fn pfm_round_trip() {
        let img = gradient();
        let back = decode_pfm(&encode_pfm(&img)).unwrap();
        assert_eq!(back.width, 3);
        assert!(img.max_abs_diff(&back) < 1e-7);
        assert!(decode_pfm(&encode_pfm(&img)[..20]).is_err());
    }

    #[test]
    fn ppm_layout() {
        let bytes = encode_ppm(&gradient());
        let header = b"P6\n3 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 18);
        // clamp above 1, gamma for mid-grey
        assert_eq!(bytes[header.len() + 2], 255);
        assert_eq!(bytes[header.len() + 1], (0.25f64.powf(1.0 / 2.2) * 255.0).round() as u8);
    }

    #[test]
    fn texel_solid_angles_cover_the_sphere() {
        let img = Image::new(64, 32, [0.0; 3]);
        let total: f64 = (0..32).map(|r| img.texel_solid_angle(r) * 64.0).sum();
        assert!((total - 4.0 * PI).abs() < 1e-12);
        let d = img.texel_direction(0, 0);
        assert!(d.z() > 0.99);
    }
}
