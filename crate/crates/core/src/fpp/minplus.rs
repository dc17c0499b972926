use crate::env::{PointSet, PointSource};
use crate::error::{Error, Result};
use crate::lattice::{jump_power, l1_f, RealBox};

/// Min-plus layers over slices `k0 + 1 ..= k0 + m`.
pub(crate) struct Layers {
    pub points: Vec<PointSet>,
    pub values: Vec<Vec<f64>>,
    pub back: Vec<Vec<u32>>,
}

impl Layers {
    /// Smallest value of layer `i` and its lowest index.
    pub fn argmin(&self, i: usize) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for (j, &v) in self.values[i].iter().enumerate() {
            if v < best.0 {
                best = (v, j);
            }
        }
        best
    }

    /// Points of the optimal chain ending at `(layer i, index j)`, first layer first.
    pub fn trace(&self, mut i: usize, mut j: usize) -> Vec<Vec<f64>> {
        let mut out = vec![self.points[i].point(j).to_vec()];
        while i > 0 {
            j = self.back[i][j] as usize;
            i -= 1;
            out.push(self.points[i].point(j).to_vec());
        }
        out.reverse();
        out
    }
}

/// `V_1(q) = first(q)`, `V_i(q) = min_{q'} V_{i-1}(q') + |q' - q|_1^alpha`,
/// ties broken towards the lexicographically smallest predecessor.
///
/// Values above `cap` are replaced by infinity. When some path of cost at
/// most `cap` exists this leaves every value `<= cap` unchanged.
pub(crate) fn min_plus<P: PointSource + ?Sized>(
    src: &P,
    k0: u32,
    m: u32,
    window: &RealBox,
    alpha: f64,
    cap: f64,
    first: impl Fn(&[f64]) -> f64,
) -> Result<Layers> {
    let limit = cap + 1e-12 * cap.abs();
    let clamp = |v: f64| if v > limit { f64::INFINITY } else { v };
    let mut layers = Layers { points: Vec::new(), values: Vec::new(), back: Vec::new() };
    for i in 0..m {
        let k = k0 + i + 1;
        let pts = src.points_in(k, window)?;
        if pts.is_empty() {
            return Err(Error::Infeasible(format!("slice {k} has no point in the window")));
        }
        if i == 0 {
            layers.values.push(pts.iter().map(|q| clamp(first(q))).collect());
            layers.back.push(Vec::new());
        } else {
            let (vals, back) = relax(&layers.points[i as usize - 1], &layers.values[i as usize - 1], &pts, alpha);
            layers.values.push(vals.into_iter().map(clamp).collect());
            layers.back.push(back);
        }
        layers.points.push(pts);
    }
    Ok(layers)
}

/// One min-plus step. Predecessors are scanned outwards in the first
/// coordinate; a scan stops once the smallest remaining value beyond the
/// current position plus `|dx_0|^alpha` exceeds the best value found, which
/// cannot discard a minimiser or a tie.
fn relax(prev: &PointSet, pv: &[f64], next: &PointSet, alpha: f64) -> (Vec<f64>, Vec<u32>) {
    if prev.d == 1 && alpha <= 1.0 && prev.len() * next.len() > CONCAVE_MIN_WORK {
        return relax_concave(prev, pv, next, alpha);
    }
    relax_scan(prev, pv, next, alpha)
}

/// Below this many predecessor/target pairs the plain scan is used.
const CONCAVE_MIN_WORK: usize = 4096;

fn relax_scan(prev: &PointSet, pv: &[f64], next: &PointSet, alpha: f64) -> (Vec<f64>, Vec<u32>) {
    let x0: Vec<f64> = prev.iter().map(|p| p[0]).collect();
    let mut below = pv.to_vec();
    for j in 1..below.len() {
        below[j] = below[j].min(below[j - 1]);
    }
    let mut above = pv.to_vec();
    for j in (0..above.len().saturating_sub(1)).rev() {
        above[j] = above[j].min(above[j + 1]);
    }
    let mut vals = Vec::with_capacity(next.len());
    let mut back = Vec::with_capacity(next.len());
    for q in next.iter() {
        let pos = x0.partition_point(|&v| v < q[0]);
        let mut best = f64::INFINITY;
        let mut bi = usize::MAX;
        let stop = |lb: f64, best: f64| lb > best + 1e-12 * best.abs();
        let consider = |j: usize, best: &mut f64, bi: &mut usize| {
            if pv[j] == f64::INFINITY {
                return;
            }
            let c = pv[j] + jump_power(l1_f(prev.point(j), q), alpha);
            if c < *best || (c == *best && j < *bi) {
                *best = c;
                *bi = j;
            }
        };
        for j in pos..x0.len() {
            if stop(above[j] + jump_power(x0[j] - q[0], alpha), best) {
                break;
            }
            consider(j, &mut best, &mut bi);
        }
        for j in (0..pos).rev() {
            if stop(below[j] + jump_power(q[0] - x0[j], alpha), best) {
                break;
            }
            consider(j, &mut best, &mut bi);
        }
        vals.push(best);
        back.push(if bi == usize::MAX { 0 } else { bi as u32 });
    }
    (vals, back)
}

/// Min-plus step for `d = 1` and concave cost `t^alpha`, `alpha <= 1`.
///
/// Among predecessors on one side of the targets, an older one (farther
/// away) that beats a newer one keeps beating it as the targets move on, so
/// the lower envelope is kept on a stack with binary-searched crossovers.
/// Each side costs `O(N log N)`; values can differ from the scan by rounding.
fn relax_concave(prev: &PointSet, pv: &[f64], next: &PointSet, alpha: f64) -> (Vec<f64>, Vec<u32>) {
    let xs: Vec<f64> = prev.iter().map(|p| p[0]).collect();
    let qs: Vec<f64> = next.iter().map(|p| p[0]).collect();
    let m = qs.len();
    let mut best = vec![(f64::INFINITY, usize::MAX); m];
    // predecessors at or left of the target, targets ascending
    sweep(&xs, pv, alpha, (0..m).map(|i| (i, qs[i])), &mut best, |x, q| x <= q, |x, q| q - x);
    // predecessors strictly right of the target, targets descending
    let rev: Vec<usize> = (0..xs.len()).rev().collect();
    let xr: Vec<f64> = rev.iter().map(|&j| xs[j]).collect();
    let pr: Vec<f64> = rev.iter().map(|&j| pv[j]).collect();
    let mut right = vec![(f64::INFINITY, usize::MAX); m];
    sweep(&xr, &pr, alpha, (0..m).rev().map(|i| (i, qs[i])), &mut right, |x, q| x > q, |x, q| x - q);
    for (b, r) in best.iter_mut().zip(right) {
        let r = (r.0, if r.1 == usize::MAX { r.1 } else { rev[r.1] });
        if r.0 < b.0 || (r.0 == b.0 && r.1 < b.1) {
            *b = r;
        }
    }
    let vals = best.iter().map(|b| b.0).collect();
    let back = best.iter().map(|b| if b.1 == usize::MAX { 0 } else { b.1 as u32 }).collect();
    (vals, back)
}

/// One side of [`relax_concave`]. `xs` is in the order candidates become
/// available, `targets` in sweep order; `avail(x, q)` says whether `x` is on
/// the swept side of `q` and `gap(x, q)` is their distance. Ties between
/// candidates go to the older one.
fn sweep(
    xs: &[f64],
    pv: &[f64],
    alpha: f64,
    targets: impl Iterator<Item = (usize, f64)>,
    out: &mut [(f64, usize)],
    avail: impl Fn(f64, f64) -> bool,
    gap: impl Fn(f64, f64) -> f64,
) {
    let targets: Vec<(usize, f64)> = targets.collect();
    let cost = |j: usize, q: f64| pv[j] + jump_power(gap(xs[j], q), alpha);
    // crossover decisions only need to be right up to rounding, so the
    // common square-root case avoids `powf`
    let sqrt = alpha == 0.5;
    let rough = |j: usize, q: f64| if sqrt { pv[j] + gap(xs[j], q).sqrt() } else { cost(j, q) };
    // first target position `>= from` at which older candidate `a` beats `b`
    let cross = |a: usize, b: usize, from: usize| -> usize {
        let (mut lo, mut hi) = (from, targets.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if rough(a, targets[mid].1) <= rough(b, targets[mid].1) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    };
    // (candidate, position from which the element below overtakes it)
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let mut next_j = 0;
    for (t, &(slot, q)) in targets.iter().enumerate() {
        while next_j < xs.len() && avail(xs[next_j], q) {
            let c = next_j;
            next_j += 1;
            if pv[c] == f64::INFINITY {
                continue;
            }
            loop {
                let Some(&(top, top_until)) = stack.last() else {
                    stack.push((c, usize::MAX));
                    break;
                };
                let until = cross(top, c, t);
                if until == t {
                    break;
                }
                if stack.len() >= 2 && until >= top_until {
                    stack.pop();
                    continue;
                }
                stack.push((c, until));
                break;
            }
        }
        while stack.len() >= 2 && stack.last().unwrap().1 <= t {
            stack.pop();
        }
        if let Some(&(j, _)) = stack.last() {
            out[slot] = (cost(j, q), j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(rng: &mut ChaCha8Rng, n: usize, span: f64) -> PointSet {
        let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(-span..span)]).collect();
        PointSet::from_points(1, &pts)
    }

    #[test]
    fn concave_envelope_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..200 {
            let alpha = [0.3, 0.5, 0.8, 1.0][trial % 4];
            let (np, nq) = (rng.gen_range(1..80), rng.gen_range(1..80));
            let prev = random_set(&mut rng, np, 50.0);
            let next = random_set(&mut rng, nq, 60.0);
            let mut pv: Vec<f64> = (0..prev.len()).map(|_| rng.gen_range(0.0..20.0)).collect();
            if trial % 3 == 0 {
                pv[0] = f64::INFINITY;
            }
            if pv.iter().all(|v| v.is_infinite()) {
                continue;
            }
            let (a, _) = relax_scan(&prev, &pv, &next, alpha);
            let (b, bb) = relax_concave(&prev, &pv, &next, alpha);
            for i in 0..a.len() {
                assert!((a[i] - b[i]).abs() <= 1e-12 * a[i].abs().max(1.0), "trial {trial}: {} vs {}", a[i], b[i]);
                let j = bb[i] as usize;
                let c = pv[j] + jump_power((prev.point(j)[0] - next.point(i)[0]).abs(), alpha);
                assert_eq!(c, b[i]);
            }
        }
    }
}
