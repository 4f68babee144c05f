use super::Image;

/// Shape of the bright region of an image: pixels at or above half the
/// peak luminance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighlightStats {
    pub peak: f64,
    /// Pixel count at or above half max.
    pub area: usize,
    /// Centroid as (column, row).
    pub centroid: (f64, f64),
    /// sqrt of the ratio of the second-moment eigenvalues (≥ 1).
    pub axis_ratio: f64,
    /// Major-axis angle in image coordinates (x right, y down), in [0, π).
    pub principal_angle: f64,
}

pub fn highlight_stats(img: &Image) -> Option<HighlightStats> {
    let lum = img.luminance();
    let peak = lum.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return None;
    }
    let half = 0.5 * peak;
    let mut pts = Vec::new();
    for (k, &v) in lum.iter().enumerate() {
        if v >= half {
            pts.push(((k % img.width) as f64, (k / img.width) as f64));
        }
    }
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in &pts {
        sxx += (x - cx) * (x - cx);
        syy += (y - cy) * (y - cy);
        sxy += (x - cx) * (y - cy);
    }
    // a single pixel still has the variance of a unit square
    let (sxx, syy, sxy) = (sxx / n + 1.0 / 12.0, syy / n + 1.0 / 12.0, sxy / n);
    let mean = 0.5 * (sxx + syy);
    let rad = (0.25 * (sxx - syy).powi(2) + sxy * sxy).sqrt();
    let (major, minor) = (mean + rad, mean - rad);
    let angle = (0.5 * (2.0 * sxy).atan2(sxx - syy)).rem_euclid(std::f64::consts::PI);
    Some(HighlightStats {
        peak,
        area: pts.len(),
        centroid: (cx, cy),
        axis_ratio: (major / minor).sqrt(),
        principal_angle: angle,
    })
}

/// Difference of two axis angles modulo π, folded into [0, π/2].
pub fn axis_angle_difference(a: f64, b: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let d = (a - b).rem_euclid(pi);
    d.min(pi - d)
}
