//! Boxes in Z^d and R^d, flat indexing and l1 geometry helpers.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Closed integer box `lo ..= hi` in Z^d, stored row-major (last coordinate
/// fastest) when flattened.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl LatticeBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return param("box corners must have equal, positive dimension");
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return param(format!("box lower corner {lo:?} exceeds upper corner {hi:?}"));
        }
        Ok(LatticeBox { lo, hi })
    }

    /// The cube `[-r, r]^d`.
    pub fn centered(d: usize, r: i64) -> Self {
        LatticeBox { lo: vec![-r; d], hi: vec![r; d] }
    }

    pub fn origin(d: usize) -> Self {
        Self::centered(d, 0)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn extent(&self, i: usize) -> usize {
        (self.hi[i] - self.lo[i] + 1) as usize
    }

    pub fn len(&self) -> usize {
        (0..self.dim()).map(|i| self.extent(i)).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| a <= v && v <= b)
    }

    pub fn contains_box(&self, other: &LatticeBox) -> bool {
        self.contains(&other.lo) && self.contains(&other.hi)
    }

    /// Flat index of `x`; caller guarantees containment.
    #[inline]
    pub fn index_of(&self, x: &[i64]) -> usize {
        let mut idx = 0usize;
        for (i, (&v, &lo)) in x.iter().zip(&self.lo).enumerate() {
            idx = idx * self.extent(i) + (v - lo) as usize;
        }
        idx
    }

    pub fn try_index_of(&self, x: &[i64]) -> Option<usize> {
        self.contains(x).then(|| self.index_of(x))
    }

    #[inline]
    pub fn coords_of(&self, mut idx: usize, out: &mut [i64]) {
        for i in (0..self.dim()).rev() {
            let e = self.extent(i);
            out[i] = self.lo[i] + (idx % e) as i64;
            idx /= e;
        }
    }

    pub fn coords_vec(&self, idx: usize) -> Vec<i64> {
        let mut v = vec![0; self.dim()];
        self.coords_of(idx, &mut v);
        v
    }

    /// Minkowski sum with the cube `[-r, r]^d`.
    pub fn grow(&self, r: i64) -> Self {
        LatticeBox {
            lo: self.lo.iter().map(|v| v - r).collect(),
            hi: self.hi.iter().map(|v| v + r).collect(),
        }
    }

    /// Intersection; `None` when empty.
    pub fn intersect(&self, other: &LatticeBox) -> Option<Self> {
        let lo: Vec<i64> = self.lo.iter().zip(&other.lo).map(|(a, b)| *a.max(b)).collect();
        let hi: Vec<i64> = self.hi.iter().zip(&other.hi).map(|(a, b)| *a.min(b)).collect();
        lo.iter().zip(&hi).all(|(a, b)| a <= b).then_some(LatticeBox { lo, hi })
    }

    /// Largest `r` such that the l1 ball of radius `r` around `x` lies inside
    /// the box (`-1` if `x` is outside).
    pub fn inner_radius(&self, x: &[i64]) -> i64 {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (a, b))| (v - a).min(b - v))
            .min()
            .unwrap_or(0)
    }

    /// All sites in flat-index order.
    pub fn sites(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.len()).map(move |i| self.coords_vec(i))
    }
}

/// Half-open real box `[lo, hi)` in R^d. Infinite bounds are allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl RealBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return param("box corners must have equal, positive dimension");
        }
        if lo.iter().zip(&hi).any(|(a, b)| a.is_nan() || b.is_nan() || a >= b) {
            return param(format!("real box [{lo:?}, {hi:?}) has no volume"));
        }
        Ok(RealBox { lo, hi })
    }

    pub fn centered(d: usize, r: f64) -> Self {
        RealBox { lo: vec![-r; d], hi: vec![r; d] }
    }

    /// `center + [-r, r)^d`.
    pub fn around(center: &[f64], r: f64) -> Self {
        RealBox {
            lo: center.iter().map(|c| c - r).collect(),
            hi: center.iter().map(|c| c + r).collect(),
        }
    }

    pub fn unbounded(d: usize) -> Self {
        RealBox { lo: vec![f64::NEG_INFINITY; d], hi: vec![f64::INFINITY; d] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| a <= v && v < b)
    }

    pub fn contains_box(&self, other: &RealBox) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    pub fn is_finite(&self) -> bool {
        self.lo.iter().chain(&self.hi).all(|v| v.is_finite())
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    /// Unit cells `z + [0,1)^d` meeting the box.
    pub fn unit_cells(&self) -> LatticeBox {
        LatticeBox {
            lo: self.lo.iter().map(|v| v.floor() as i64).collect(),
            hi: self
                .hi
                .iter()
                .zip(&self.lo)
                .map(|(v, l)| (v.ceil() as i64 - 1).max(l.floor() as i64))
                .collect(),
        }
    }
}

/// l1 distance between integer sites.
#[inline]
pub fn l1_i(a: &[i64], b: &[i64]) -> u64 {
    a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).sum()
}

/// l1 distance between real points, summed in coordinate order.
#[inline]
pub fn l1_f(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += (x - y).abs();
    }
    s
}

/// `l^alpha`, skipping the power for `alpha = 1` (where it is exact anyway).
#[inline]
pub fn jump_power(l: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        l
    } else {
        l.powf(alpha)
    }
}

/// l1 distance from a point to the closed cube `center + [-h, h]^d`.
pub fn l1_to_cube(x: &[f64], center: &[f64], h: f64) -> f64 {
    let mut s = 0.0;
    for (v, c) in x.iter().zip(center) {
        s += ((v - c).abs() - h).max(0.0);
    }
    s
}

/// Offsets `y` with `|y|_1 = r` in lexicographic order.
pub fn l1_sphere(d: usize, r: u64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(d);
    sphere_rec(d, r as i64, &mut cur, &mut out);
    out
}

fn sphere_rec(d: usize, rem: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
    if cur.len() + 1 == d {
        // last coordinate takes the remaining budget with either sign
        if rem == 0 {
            cur.push(0);
            out.push(cur.clone());
            cur.pop();
        } else {
            for v in [-rem, rem] {
                cur.push(v);
                out.push(cur.clone());
                cur.pop();
            }
        }
        return;
    }
    for v in -rem..=rem {
        cur.push(v);
        sphere_rec(d, rem - v.abs(), cur, out);
        cur.pop();
    }
}

/// Offsets with `|y|_1 <= r` in lexicographic order, with their l1 norms.
pub fn l1_ball(d: usize, r: u64) -> Vec<(Vec<i64>, u64)> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(d);
    ball_rec(d, r as i64, &mut cur, 0, &mut out);
    out
}

fn ball_rec(d: usize, rem: i64, cur: &mut Vec<i64>, used: u64, out: &mut Vec<(Vec<i64>, u64)>) {
    if cur.len() == d {
        out.push((cur.clone(), used));
        return;
    }
    for v in -rem..=rem {
        cur.push(v);
        ball_rec(d, rem - v.abs(), cur, used + v.unsigned_abs(), out);
        cur.pop();
    }
}
