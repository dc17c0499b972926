use serde::{Deserialize, Serialize};

use super::minplus::min_plus;
use super::passage::{cube_window, reach_bound};
use crate::env::{nearest_point, PointSource};
use crate::error::{param, Error, Result};
use crate::lattice::{jump_power, l1_f, l1_to_cube, RealBox};

/// Face-to-face passage over `r` slices with a free start in the cube of
/// half-width `r^M`, `M = (alpha + 2) / alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceToFaceParams {
    pub r: u32,
    pub alpha: f64,
}

impl FaceToFaceParams {
    pub fn new(r: u32, alpha: f64) -> Result<Self> {
        if r == 0 || !(alpha > 0.0) {
            return param("face-to-face needs R >= 1 and alpha > 0");
        }
        Ok(FaceToFaceParams { r, alpha })
    }

    pub fn m(&self) -> f64 {
        (self.alpha + 2.0) / self.alpha
    }

    pub fn half_width(&self) -> f64 {
        (self.r as f64).powf(self.m())
    }
}

/// `Phi_R` of `omega` shifted by `(k0, center)`, over slices
/// `k0+1 ..= k0+R`, among paths inside `window`. The first point costs its
/// l1 distance to the start cube to the power alpha, which is the exact
/// infimum over continuum starting points.
pub fn face_to_face_in<P: PointSource + ?Sized>(
    omega: &P,
    fp: &FaceToFaceParams,
    k0: u32,
    center: &[f64],
    window: &RealBox,
) -> Result<f64> {
    face_capped(omega, fp, k0, center, window, f64::INFINITY)
}

fn face_capped<P: PointSource + ?Sized>(
    omega: &P,
    fp: &FaceToFaceParams,
    k0: u32,
    center: &[f64],
    window: &RealBox,
    cap: f64,
) -> Result<f64> {
    let h = fp.half_width();
    let alpha = fp.alpha;
    let layers = min_plus(omega, k0, fp.r, window, alpha, cap, |q| jump_power(l1_to_cube(q, center, h), alpha))?;
    Ok(layers.argmin(fp.r as usize - 1).0)
}

/// `Phi_R` on a window certified from the cost of a greedy path started at
/// the cube centre.
pub fn face_to_face<P: PointSource + ?Sized>(
    omega: &P,
    fp: &FaceToFaceParams,
    k0: u32,
    center: &[f64],
    max_search: f64,
) -> Result<f64> {
    let h = fp.half_width();
    let mut from = center.to_vec();
    let mut cost = 0.0;
    for i in 1..=fp.r {
        let Some((_, next)) = nearest_point(omega, k0 + i, &from, max_search)? else {
            return Err(Error::Infeasible(format!("slice {}: no point within {max_search}", k0 + i)));
        };
        let step = if i == 1 { l1_to_cube(&next, center, h) } else { l1_f(&from, &next) };
        cost += jump_power(step, fp.alpha);
        from = next;
    }
    let window = cube_window(center, h + reach_bound(cost, fp.r, fp.alpha));
    face_capped(omega, fp, k0, center, &window, cost)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodnessCheck {
    pub good: bool,
    pub cond1: bool,
    pub cond2: bool,
    pub phi: f64,
    pub max_count: usize,
}

/// Whether the block at `(k, x)`, `x` in `2Z^d`, is epsilon-good:
/// (i) `Phi_R(omega - (k, R^M x)) >= (mu1 - eps) R`, the shift taken in the
/// physical coordinates of `omega`; (ii) every slice `k+1..=k+R` has at
/// most `4^{d+1} R^{dM}` points in `R^M x + [-2R^M, 2R^M)^d`.
pub fn is_epsilon_good<P: PointSource + ?Sized>(
    omega: &P,
    fp: &FaceToFaceParams,
    eps: f64,
    k: u32,
    x: &[i64],
    mu1_ref: f64,
    max_search: f64,
) -> Result<GoodnessCheck> {
    if x.iter().any(|v| v % 2 != 0) {
        return param("block sites must lie in 2Z^d");
    }
    let d = x.len() as i32;
    let h = fp.half_width();
    let center: Vec<f64> = x.iter().map(|&v| h * v as f64).collect();
    let count_box = RealBox::around(&center, 2.0 * h);
    let limit = 4f64.powi(d + 1) * (fp.r as f64).powf(d as f64 * fp.m());
    let mut max_count = 0;
    for l in k + 1..=k + fp.r {
        max_count = max_count.max(omega.points_in(l, &count_box)?.len());
    }
    let cond2 = max_count as f64 <= limit;
    let phi = face_to_face(omega, fp, k, &center, max_search)?;
    let cond1 = phi >= (mu1_ref - eps) * fp.r as f64;
    Ok(GoodnessCheck { good: cond1 && cond2, cond1, cond2, phi, max_count })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JParams {
    pub r: u32,
    pub eps: f64,
    pub mu1: f64,
    pub c2: f64,
    pub c5: f64,
    pub alpha: f64,
}

/// `J_v(gamma) = sum_{j<v} max(psi(j, gamma_j), C5 R (|gamma_j - gamma_{j+1}|_inf - 1)_+^alpha)`
/// with `psi(k, x) = c2 (mu1 - 2 eps)` on good blocks and 0 otherwise.
pub fn j_functional(gamma: &[Vec<i64>], good: impl Fn(usize, &[i64]) -> bool, jp: &JParams) -> Result<f64> {
    if gamma.is_empty() || gamma[0].iter().any(|&v| v != 0) {
        return param("gamma must start at the origin");
    }
    if gamma.iter().flatten().any(|v| v % 2 != 0) {
        return param("gamma must take values in 2Z^d");
    }
    let mut total = 0.0;
    for j in 0..gamma.len() - 1 {
        let psi = if good(j, &gamma[j]) { jp.c2 * (jp.mu1 - 2.0 * jp.eps) } else { 0.0 };
        let linf = gamma[j].iter().zip(&gamma[j + 1]).map(|(a, b)| a.abs_diff(*b)).max().unwrap_or(0);
        let excess = (linf.saturating_sub(1)) as f64;
        total += psi.max(jp.c5 * jp.r as f64 * excess.powf(jp.alpha));
    }
    Ok(total)
}
