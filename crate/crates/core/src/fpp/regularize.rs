use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::env::{PointSet, PointSource};
use crate::error::{param, Result};
use crate::lattice::RealBox;

/// A point process with a point added at the lower corner `h z` of every
/// grid cell `h (z + [0,1)^d)` (inside `region`) that holds no point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regularized<P> {
    pub inner: P,
    /// Cell side `n^theta`.
    pub side: f64,
    /// Only cells contained in this region are regularised.
    pub region: RealBox,
}

/// Regularisation with cell side `n^theta` over `region`.
pub fn regularize<P: PointSource>(omega: P, n: u32, theta: f64, region: RealBox) -> Result<Regularized<P>> {
    let side = (n as f64).powf(theta);
    if !(side > 0.0 && side.is_finite()) || !region.is_finite() {
        return param("regularisation needs a positive cell side and a finite region");
    }
    Ok(Regularized { inner: omega, side, region })
}

/// `d^alpha n^{1 + alpha theta}`: every cell holds a point within l1 distance
/// `d n^theta` of any of its points, so the path staying in the origin's
/// cell costs at most this much.
pub fn uniform_bound(d: usize, alpha: f64, n: u32, theta: f64) -> f64 {
    (d as f64).powf(alpha) * (n as f64).powf(1.0 + alpha * theta)
}

impl<P: PointSource> Regularized<P> {
    /// Grid cells fully inside `region`, restricted to those whose corner lies in `query`.
    fn cells(&self, query: &RealBox) -> Option<(Vec<i64>, Vec<i64>)> {
        let h = self.side;
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for i in 0..self.region.dim() {
            let a = (self.region.lo[i] / h).ceil().max((query.lo[i] / h).ceil());
            let b = ((self.region.hi[i] / h).floor() - 1.0).min((query.hi[i] / h).ceil() - 1.0);
            if a > b {
                return None;
            }
            lo.push(a as i64);
            hi.push(b as i64);
        }
        Some((lo, hi))
    }
}

impl<P: PointSource> PointSource for Regularized<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn points_in(&self, k: u32, query: &RealBox) -> Result<PointSet> {
        let base = self.inner.points_in(k, query)?;
        let Some((lo, hi)) = self.cells(query) else {
            return Ok(base);
        };
        let h = self.side;
        let d = self.dim();
        let span = RealBox {
            lo: lo.iter().map(|&z| z as f64 * h).collect(),
            hi: hi.iter().map(|&z| (z + 1) as f64 * h).collect(),
        };
        let occupied: HashSet<Vec<i64>> = self
            .inner
            .points_in(k, &span)?
            .iter()
            .map(|p| p.iter().map(|v| (v / h).floor() as i64).collect())
            .collect();
        let mut corners = Vec::new();
        let mut z = lo.clone();
        loop {
            if !occupied.contains(&z) {
                let corner: Vec<f64> = z.iter().map(|&c| c as f64 * h).collect();
                if query.contains(&corner) {
                    corners.extend(corner);
                }
            }
            // odometer over the cell range
            let mut i = d;
            loop {
                if i == 0 {
                    return Ok(base.union(&PointSet::from_flat(d, corners)));
                }
                i -= 1;
                if z[i] < hi[i] {
                    z[i] += 1;
                    break;
                }
                z[i] = lo[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::SlicedPoints;
    use crate::fpp::passage_time;

    #[test]
    fn empty_process_gets_grid_corners() {
        let empty = SlicedPoints::new(1, vec![]);
        let reg = regularize(empty, 4, 0.5, RealBox::centered(1, 8.0)).unwrap();
        let pts = reg.points_in(1, &RealBox::centered(1, 8.0)).unwrap();
        assert_eq!(pts.flat(), &[-8.0, -6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0]);
        let t = passage_time(&reg, 4, 1.0, &RealBox::centered(1, 8.0)).unwrap();
        assert!(t.t_n <= uniform_bound(1, 1.0, 4, 0.5));
    }

    #[test]
    fn dense_process_unchanged() {
        let lists: Vec<Vec<Vec<f64>>> = vec![(0..16).map(|i| vec![-8.0 + i as f64 + 0.5]).collect(); 2];
        let dense = SlicedPoints::from_lists(1, &lists);
        let reg = regularize(dense.clone(), 4, 0.5, RealBox::centered(1, 8.0)).unwrap();
        let q = RealBox::centered(1, 8.0);
        assert_eq!(reg.points_in(2, &q).unwrap(), dense.points_in(2, &q).unwrap());
    }
}
