use serde::{Deserialize, Serialize};

use super::minplus::min_plus;
use crate::env::{nearest_point, PointSource};
use crate::error::{Error, Result};
use crate::lattice::{jump_power, l1_f, RealBox};
use crate::polymer::{PointPath, Provenance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassageResult {
    pub t_n: f64,
    pub minimizer: PointPath,
    pub n: u32,
    pub window: RealBox,
    /// The window contains every path of cost at most `t_n`, so `t_n` is the
    /// unrestricted passage time.
    pub exact: bool,
    /// Per-slice optima `T_m`, `m = 1..=n`, over the same window.
    pub prefix_times: Vec<f64>,
}

/// l1 distance from the start that a path of cost at most `cost` can reach in
/// `n` steps: `cost^{1/alpha}` for `alpha <= 1` and
/// `cost^{1/alpha} n^{1 - 1/alpha}` for `alpha > 1` (Hölder).
pub fn reach_bound(cost: f64, n: u32, alpha: f64) -> f64 {
    cost.powf(1.0 / alpha) * (n as f64).powf(1.0 - 1.0 / alpha).max(1.0)
}

/// Whether `window` contains the closed cube `center + [-r, r]^d`.
pub(crate) fn covers(window: &RealBox, center: &[f64], r: f64) -> bool {
    let pad = 1e-9 * (1.0 + r);
    (0..window.dim()).all(|i| window.lo[i] < center[i] - r - pad && window.hi[i] > center[i] + r + pad)
}

/// Half-open box strictly containing `center + [-r, r]^d`.
pub(crate) fn cube_window(center: &[f64], r: f64) -> RealBox {
    let w = r * (1.0 + 1e-6) + 1.0;
    RealBox::around(center, w)
}

/// Exact `T_n` among paths inside `window`, by min-plus recursion.
pub fn passage_time<P: PointSource + ?Sized>(omega: &P, n: u32, alpha: f64, window: &RealBox) -> Result<PassageResult> {
    passage_capped(omega, n, alpha, window, f64::INFINITY)
}

fn passage_capped<P: PointSource + ?Sized>(
    omega: &P,
    n: u32,
    alpha: f64,
    window: &RealBox,
    cap: f64,
) -> Result<PassageResult> {
    let d = omega.dim();
    let origin = vec![0.0; d];
    let layers = min_plus(omega, 0, n, window, alpha, cap, |q| 0.0 + jump_power(l1_f(q, &origin), alpha))?;
    let last = n as usize - 1;
    let (t_n, j) = layers.argmin(last);
    let mut sites = vec![origin.clone()];
    sites.extend(layers.trace(last, j));
    let minimizer = PointPath::from_sites(&sites, alpha, Provenance::Minimizer);
    let prefix_times = (0..n as usize).map(|i| layers.argmin(i).0).collect();
    let exact = covers(window, &origin, reach_bound(t_n, n, alpha));
    Ok(PassageResult { t_n, minimizer, n, window: window.clone(), exact, prefix_times })
}

/// Exact `T_n`. A first pass on a window around the greedy path gives a cost
/// bound `C`; if that window does not already contain every path of cost at
/// most `C`, a second pass runs on one that does, with `C` as the cap.
pub fn passage_time_auto<P: PointSource + ?Sized>(omega: &P, n: u32, alpha: f64, max_search: f64) -> Result<PassageResult> {
    let greedy = greedy_passage(omega, n, alpha, max_search)?;
    let origin = vec![0.0; omega.dim()];
    let extent = greedy.sites.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let first = passage_capped(omega, n, alpha, &cube_window(&origin, 2.0 * extent), greedy.jump_cost)?;
    if first.exact {
        return Ok(first);
    }
    let window = cube_window(&origin, reach_bound(first.t_n, n, alpha));
    passage_capped(omega, n, alpha, &window, first.t_n)
}

/// The path that always jumps to the nearest point of the next slice.
pub fn greedy_passage<P: PointSource + ?Sized>(omega: &P, n: u32, alpha: f64, max_search: f64) -> Result<PointPath> {
    let mut sites = vec![vec![0.0; omega.dim()]];
    for k in 1..=n {
        let from = sites.last().unwrap();
        let Some((_, next)) = nearest_point(omega, k, from, max_search)? else {
            return Err(Error::Infeasible(format!("slice {k}: no point within {max_search}")));
        };
        sites.push(next);
    }
    Ok(PointPath::from_sites(&sites, alpha, Provenance::Greedy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{PointSet, SlicedPoints};

    #[test]
    fn column_at_origin_costs_nothing() {
        let sp = SlicedPoints::from_lists(1, &vec![vec![vec![0.0], vec![3.0]]; 5]);
        let r = passage_time(&sp, 5, 1.0, &RealBox::centered(1, 10.0)).unwrap();
        assert_eq!(r.t_n, 0.0);
        assert!(r.minimizer.sites.iter().all(|&v| v == 0.0));
        assert!(r.exact);
    }

    #[test]
    fn forced_path() {
        let sp = SlicedPoints::from_lists(1, &[vec![vec![1.0]], vec![vec![-1.0]], vec![vec![2.0]]]);
        let r = passage_time(&sp, 3, 1.5, &RealBox::centered(1, 10.0)).unwrap();
        let want = 0.0 + 1f64.powf(1.5) + 2f64.powf(1.5) + 3f64.powf(1.5);
        assert_eq!(r.t_n, want);
        let g = greedy_passage(&sp, 3, 1.5, 100.0).unwrap();
        assert_eq!(g.jump_cost, r.t_n);
    }

    #[test]
    fn empty_slice_is_infeasible() {
        let sp = SlicedPoints::new(1, vec![PointSet::from_points(1, &[vec![0.0]]), PointSet::empty(1)]);
        assert!(matches!(passage_time(&sp, 2, 1.0, &RealBox::centered(1, 5.0)), Err(Error::Infeasible(_))));
    }

    #[test]
    fn narrow_window_is_flagged() {
        let sp = SlicedPoints::from_lists(1, &[vec![vec![3.0]], vec![vec![-3.0]]]);
        let r = passage_time(&sp, 2, 1.0, &RealBox::centered(1, 3.5)).unwrap();
        assert!(!r.exact);
        let r = passage_time_auto(&sp, 2, 1.0, 100.0).unwrap();
        assert!(r.exact && r.t_n == 9.0);
    }
}
