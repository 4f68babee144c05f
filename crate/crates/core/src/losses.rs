//! Volume-rendering quadrature and the training losses, as pure functions
//! with hand-derived gradients.
//!
//! Interval convention: `Δt_i = t_{i+1} − t_i`, and the last sample reuses
//! the previous interval (a lone sample gets unit length).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{UnitVec3, Vec3};

pub type Rgb = [f64; 3];

/// Proposal weights below this are floored when dividing.
pub const PROPOSAL_WEIGHT_FLOOR: f64 = 1e-6;

/// One ray's samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySamples {
    pub t: Vec<f64>,
    pub tau: Vec<f64>,
    pub colors: Vec<Rgb>,
    /// n̂: normalized negative density gradient.
    pub normals_geom: Vec<UnitVec3>,
    /// n̂′: predicted normals.
    pub normals_pred: Vec<UnitVec3>,
    pub view_dir: UnitVec3,
}

impl RaySamples {
    pub fn validate(&self) -> Result<()> {
        let n = self.t.len();
        for (name, len) in [
            ("tau", self.tau.len()),
            ("colors", self.colors.len()),
            ("normals_geom", self.normals_geom.len()),
            ("normals_pred", self.normals_pred.len()),
        ] {
            if len != n {
                return Err(Error::InvalidInput(format!("{name} has {len} entries, t has {n}")));
            }
        }
        check_ascending(&self.t)?;
        if self.tau.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::InvalidInput("densities must be >= 0".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn intervals(&self) -> Vec<f64> {
        intervals(&self.t)
    }

    /// Interval edges `t_0 … t_n` including the closing edge of the last
    /// sample.
    pub fn edges(&self) -> Vec<f64> {
        edges(&self.t)
    }
}

/// Proposal histogram over edges `t_hat` (one more entry than `w_hat`).
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalSamples {
    pub t_hat: Vec<f64>,
    pub w_hat: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub beta_pred: f64,
    pub beta_grad: f64,
    pub beta_orient: f64,
    pub beta_dist: f64,
    pub beta_prop: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            beta_pred: 3e-3,
            beta_grad: 3e-4,
            beta_orient: 1e-2,
            beta_dist: 3e-3,
            beta_prop: 3e-4,
        }
    }
}

/// Gradient with respect to one argument. Stopped arguments report zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgGrad<T> {
    pub grad: Vec<T>,
    pub stopped: bool,
}

impl<T: Clone + Default> ArgGrad<T> {
    fn live(grad: Vec<T>) -> Self {
        Self { grad, stopped: false }
    }

    fn stopped(len: usize) -> Self {
        Self {
            grad: vec![T::default(); len],
            stopped: true,
        }
    }
}

fn check_ascending(t: &[f64]) -> Result<()> {
    if t.iter().any(|x| !x.is_finite()) || t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("sample positions must be finite and strictly ascending".into()));
    }
    Ok(())
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::ShapeMismatch { expected, actual });
    }
    Ok(())
}

pub fn intervals(t: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut dt: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    if n >= 1 {
        dt.push(if n >= 2 { dt[n - 2] } else { 1.0 });
    }
    dt
}

pub fn edges(t: &[f64]) -> Vec<f64> {
    let mut e = t.to_vec();
    if let (Some(&last), Some(&d)) = (t.last(), intervals(t).last()) {
        e.push(last + d);
    }
    e
}

/// `w_i = exp(−Σ_{j<i} τ_j Δt_j)·(1 − exp(−τ_i Δt_i))`.
pub fn render_weights_from(t: &[f64], tau: &[f64]) -> Result<Vec<f64>> {
    check_len(t.len(), tau.len())?;
    check_ascending(t)?;
    let dt = intervals(t);
    let mut acc = 0.0f64;
    let mut w = Vec::with_capacity(t.len());
    for (x, d) in tau.iter().zip(&dt) {
        let xi = x * d;
        w.push((-acc).exp() * -(-xi).exp_m1());
        acc += xi;
    }
    Ok(w)
}

pub fn render_weights(s: &RaySamples) -> Result<Vec<f64>> {
    s.validate()?;
    render_weights_from(&s.t, &s.tau)
}

/// `exp(−Σ_{j≤k} τ_j Δt_j)` for every prefix k.
pub fn transmittance_after(t: &[f64], tau: &[f64]) -> Vec<f64> {
    let dt = intervals(t);
    let mut acc = 0.0f64;
    tau.iter()
        .zip(&dt)
        .map(|(x, d)| {
            acc += x * d;
            (-acc).exp()
        })
        .collect()
}

/// Pulls `upstream = dL/dw` back to `dL/dτ`.
pub fn render_weights_vjp(t: &[f64], tau: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
    let w = render_weights_from(t, tau)?;
    check_len(w.len(), upstream.len())?;
    let dt = intervals(t);
    let n = w.len();
    // dw_i/dx_k = −w_i for k < i, T_k e^{−x_k} for k = i
    let mut tail = 0.0;
    let mut g = vec![0.0; n];
    let mut acc = 0.0f64;
    let trans: Vec<f64> = tau
        .iter()
        .zip(&dt)
        .map(|(x, d)| {
            let t_i = (-acc).exp();
            acc += x * d;
            t_i
        })
        .collect();
    for k in (0..n).rev() {
        let x = tau[k] * dt[k];
        let gx = upstream[k] * trans[k] * (-x).exp() - tail;
        g[k] = gx * dt[k];
        tail += upstream[k] * w[k];
    }
    Ok(g)
}

/// `Σ w_i c_i`.
pub fn render_color(s: &RaySamples) -> Result<Rgb> {
    let w = render_weights(s)?;
    let mut c = [0.0; 3];
    for (wi, ci) in w.iter().zip(&s.colors) {
        for ch in 0..3 {
            c[ch] += wi * ci[ch];
        }
    }
    Ok(c)
}

/// Colors of many rays, evaluated in parallel.
pub fn render_colors(rays: &[RaySamples]) -> Result<Vec<Rgb>> {
    rays.par_iter().map(render_color).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColorGrad {
    pub d_tau: Vec<f64>,
    pub d_colors: Vec<Rgb>,
}

/// Pulls `upstream = dL/dC` back to densities and sample colors.
pub fn render_color_vjp(s: &RaySamples, upstream: Rgb) -> Result<ColorGrad> {
    let w = render_weights(s)?;
    let dw: Vec<f64> = s
        .colors
        .iter()
        .map(|c| c[0] * upstream[0] + c[1] * upstream[1] + c[2] * upstream[2])
        .collect();
    let d_tau = render_weights_vjp(&s.t, &s.tau, &dw)?;
    let d_colors = w.iter().map(|wi| [wi * upstream[0], wi * upstream[1], wi * upstream[2]]).collect();
    Ok(ColorGrad { d_tau, d_colors })
}

/// `Σ_rays ‖C − C_gt‖²`.
pub fn loss_rgb(pred: &[Rgb], gt: &[Rgb]) -> Result<f64> {
    check_len(pred.len(), gt.len())?;
    Ok(pred
        .iter()
        .zip(gt)
        .map(|(p, g)| (0..3).map(|c| (p[c] - g[c]).powi(2)).sum::<f64>())
        .sum())
}

pub fn loss_rgb_grad(pred: &[Rgb], gt: &[Rgb]) -> Result<Vec<Rgb>> {
    check_len(pred.len(), gt.len())?;
    Ok(pred
        .iter()
        .zip(gt)
        .map(|(p, g)| [2.0 * (p[0] - g[0]), 2.0 * (p[1] - g[1]), 2.0 * (p[2] - g[2])])
        .collect())
}

/// `Σ_i w_i (1 − a_i · b_i)`.
pub fn loss_cos(w: &[f64], n_a: &[UnitVec3], n_b: &[UnitVec3]) -> Result<f64> {
    let a: Vec<Vec3> = n_a.iter().map(|v| v.vec()).collect();
    let b: Vec<Vec3> = n_b.iter().map(|v| v.vec()).collect();
    loss_cos_vec(w, &a, &b)
}

/// [`loss_cos`] on unnormalized vectors, the domain its gradient lives on.
pub fn loss_cos_vec(w: &[f64], n_a: &[Vec3], n_b: &[Vec3]) -> Result<f64> {
    check_len(w.len(), n_a.len())?;
    check_len(w.len(), n_b.len())?;
    Ok(w.iter()
        .zip(n_a.iter().zip(n_b))
        .map(|(wi, (a, b))| wi * (1.0 - a.dot(*b)))
        .sum())
}

/// Gradient of [`loss_cos`]; normals are differentiated as free 3-vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct CosGrad {
    pub d_w: ArgGrad<f64>,
    pub d_a: ArgGrad<Vec3>,
    pub d_b: ArgGrad<Vec3>,
}

/// Which arguments of [`loss_cos`] are under stop-gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StopMask {
    pub w: bool,
    pub a: bool,
    pub b: bool,
}

pub fn loss_cos_grad(w: &[f64], n_a: &[UnitVec3], n_b: &[UnitVec3], stop: StopMask) -> Result<CosGrad> {
    check_len(w.len(), n_a.len())?;
    check_len(w.len(), n_b.len())?;
    let n = w.len();
    let d_w = if stop.w {
        ArgGrad::stopped(n)
    } else {
        ArgGrad::live(n_a.iter().zip(n_b).map(|(a, b)| 1.0 - a.dot(*b)).collect())
    };
    let d_a = if stop.a {
        ArgGrad::stopped(n)
    } else {
        ArgGrad::live(w.iter().zip(n_b).map(|(wi, b)| b.vec() * -wi).collect())
    };
    let d_b = if stop.b {
        ArgGrad::stopped(n)
    } else {
        ArgGrad::live(w.iter().zip(n_a).map(|(wi, a)| a.vec() * -wi).collect())
    };
    Ok(CosGrad { d_w, d_a, d_b })
}

/// Stop-gradient masks of the asymmetric normal loss, arguments ordered
/// `(w, n̂, n̂′)`.
pub const PRED_MASK: StopMask = StopMask { w: true, a: true, b: false };
pub const GRAD_MASK: StopMask = StopMask { w: false, a: false, b: true };

/// `L_pred = L_cos(sg(w), sg(n̂), n̂′)` and `L_grad = L_cos(w, n̂, sg(n̂′))`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalLosses {
    pub l_pred: f64,
    pub l_grad: f64,
    pub pred_grad: CosGrad,
    pub grad_grad: CosGrad,
}

pub fn loss_normals_asymmetric(s: &RaySamples, w: &[f64]) -> Result<NormalLosses> {
    s.validate()?;
    let (g, p) = (&s.normals_geom, &s.normals_pred);
    let value = loss_cos(w, g, p)?;
    Ok(NormalLosses {
        l_pred: value,
        l_grad: value,
        pred_grad: loss_cos_grad(w, g, p, PRED_MASK)?,
        grad_grad: loss_cos_grad(w, g, p, GRAD_MASK)?,
    })
}

/// `Σ_i w_i max(0, n̂′_i · d̂)²`.
pub fn loss_orient_terms(w: &[f64], normals_pred: &[UnitVec3], view_dir: UnitVec3) -> Result<f64> {
    let n: Vec<Vec3> = normals_pred.iter().map(|v| v.vec()).collect();
    loss_orient_vec(w, &n, view_dir)
}

/// [`loss_orient_terms`] on unnormalized normals.
pub fn loss_orient_vec(w: &[f64], normals_pred: &[Vec3], view_dir: UnitVec3) -> Result<f64> {
    check_len(w.len(), normals_pred.len())?;
    Ok(w.iter()
        .zip(normals_pred)
        .map(|(wi, n)| wi * n.dot(view_dir.vec()).max(0.0).powi(2))
        .sum())
}

pub fn loss_orient(s: &RaySamples) -> Result<f64> {
    let w = render_weights(s)?;
    loss_orient_terms(&w, &s.normals_pred, s.view_dir)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrientGrad {
    pub d_w: Vec<f64>,
    pub d_normals: Vec<Vec3>,
}

pub fn loss_orient_grad(w: &[f64], normals_pred: &[UnitVec3], view_dir: UnitVec3) -> Result<OrientGrad> {
    check_len(w.len(), normals_pred.len())?;
    let mut d_w = Vec::with_capacity(w.len());
    let mut d_normals = Vec::with_capacity(w.len());
    for (wi, n) in w.iter().zip(normals_pred) {
        let c = n.dot(view_dir).max(0.0);
        d_w.push(c * c);
        d_normals.push(view_dir.vec() * (2.0 * wi * c));
    }
    Ok(OrientGrad { d_w, d_normals })
}

fn check_histogram(edges: &[f64], w: &[f64]) -> Result<()> {
    check_len(w.len() + 1, edges.len())?;
    check_ascending(edges)
}

/// Distortion loss over a histogram with `edges` (`w.len() + 1` entries),
/// using sorted prefix sums in O(n).
pub fn loss_dist(edges: &[f64], w: &[f64]) -> Result<f64> {
    check_histogram(edges, w)?;
    let mut cross = 0.0;
    let (mut w_sum, mut wm_sum) = (0.0, 0.0);
    let mut own = 0.0;
    for (i, wi) in w.iter().enumerate() {
        let m = 0.5 * (edges[i] + edges[i + 1]);
        cross += wi * (m * w_sum - wm_sum);
        w_sum += wi;
        wm_sum += wi * m;
        own += wi * wi * (edges[i + 1] - edges[i]);
    }
    Ok(2.0 * cross + own / 3.0)
}

/// The defining double sum, O(n²).
pub fn loss_dist_quadratic(edges: &[f64], w: &[f64]) -> Result<f64> {
    check_histogram(edges, w)?;
    let mid: Vec<f64> = edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
    let mut total = 0.0;
    for i in 0..w.len() {
        for j in 0..w.len() {
            total += w[i] * w[j] * (mid[i] - mid[j]).abs();
        }
        total += w[i] * w[i] * (edges[i + 1] - edges[i]) / 3.0;
    }
    Ok(total)
}

/// `dL_dist/dw_k = 2 Σ_j w_j |m_k − m_j| + ⅔ w_k Δ_k`.
pub fn loss_dist_grad(edges: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    check_histogram(edges, w)?;
    let n = w.len();
    let mid: Vec<f64> = edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
    let (total_w, total_wm): (f64, f64) = w.iter().zip(&mid).fold((0.0, 0.0), |(a, b), (wi, m)| (a + wi, b + wi * m));
    let (mut below_w, mut below_wm) = (0.0, 0.0);
    let mut g = Vec::with_capacity(n);
    for k in 0..n {
        let m = mid[k];
        let above_w = total_w - below_w - w[k];
        let above_wm = total_wm - below_wm - w[k] * m;
        let spread = (m * below_w - below_wm) + (above_wm - m * above_w);
        g.push(2.0 * spread + 2.0 * w[k] * (edges[k + 1] - edges[k]) / 3.0);
        below_w += w[k];
        below_wm += w[k] * m;
    }
    Ok(g)
}

/// Resamples a weight histogram onto new bins by interval overlap: each
/// source bin spreads its mass uniformly over its extent (a box blur at the
/// source bin scale).
pub fn resample_histogram(edges: &[f64], w: &[f64], new_edges: &[f64]) -> Result<Vec<f64>> {
    check_histogram(edges, w)?;
    check_ascending(new_edges)?;
    let m = new_edges.len().saturating_sub(1);
    let mut out = vec![0.0; m];
    let mut i = 0;
    for (j, o) in out.iter_mut().enumerate() {
        let (lo, hi) = (new_edges[j], new_edges[j + 1]);
        while i < w.len() && edges[i + 1] <= lo {
            i += 1;
        }
        let mut k = i;
        while k < w.len() && edges[k] < hi {
            let overlap = hi.min(edges[k + 1]) - lo.max(edges[k]);
            if overlap > 0.0 {
                *o += w[k] * overlap / (edges[k + 1] - edges[k]);
            }
            k += 1;
        }
    }
    Ok(out)
}

/// `Σ_j (1/ŵ_j) max(0, sg(w^{t̂}_j) − ŵ_j)²` with ŵ floored for division.
pub fn loss_prop(nerf_edges: &[f64], nerf_w: &[f64], prop: &ProposalSamples) -> Result<f64> {
    check_histogram(&prop.t_hat, &prop.w_hat)?;
    let target = resample_histogram(nerf_edges, nerf_w, &prop.t_hat)?;
    Ok(target
        .iter()
        .zip(&prop.w_hat)
        .map(|(wt, wh)| (wt - wh).max(0.0).powi(2) / wh.max(PROPOSAL_WEIGHT_FLOOR))
        .sum())
}

/// Gradient of [`loss_prop`] with respect to ŵ; the NeRF weights are under
/// stop-gradient.
pub fn loss_prop_grad(nerf_edges: &[f64], nerf_w: &[f64], prop: &ProposalSamples) -> Result<(ArgGrad<f64>, ArgGrad<f64>)> {
    check_histogram(&prop.t_hat, &prop.w_hat)?;
    let target = resample_histogram(nerf_edges, nerf_w, &prop.t_hat)?;
    let d_hat = target
        .iter()
        .zip(&prop.w_hat)
        .map(|(wt, &wh)| {
            let r = (wt - wh).max(0.0);
            let denom = wh.max(PROPOSAL_WEIGHT_FLOOR);
            let floor_term = if wh > PROPOSAL_WEIGHT_FLOOR { r * r / (denom * denom) } else { 0.0 };
            -2.0 * r / denom - floor_term
        })
        .collect();
    Ok((ArgGrad::stopped(nerf_w.len()), ArgGrad::live(d_hat)))
}

/// Unweighted loss terms of one batch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossComponents {
    pub rgb: f64,
    pub pred: f64,
    pub grad: f64,
    pub orient: f64,
    pub dist: f64,
    pub prop: f64,
}

pub fn loss_total(c: &LossComponents, b: &LossWeights) -> f64 {
    c.rgb + b.beta_pred * c.pred + b.beta_grad * c.grad + b.beta_orient * c.orient + b.beta_dist * c.dist + b.beta_prop * c.prop
}
