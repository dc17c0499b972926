use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{l1_f, RealBox};

/// Points of one time slice, stored flat and sorted lexicographically.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub d: usize,
    coords: Vec<f64>,
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

impl PointSet {
    pub fn empty(d: usize) -> Self {
        PointSet { d, coords: Vec::new() }
    }

    /// Builds a sorted, de-duplicated set from a flat coordinate list.
    pub fn from_flat(d: usize, coords: Vec<f64>) -> Self {
        assert!(d > 0 && coords.len().is_multiple_of(d), "flat coordinate list does not match dimension");
        let mut pts: Vec<&[f64]> = coords.chunks(d).collect();
        pts.sort_by(|a, b| lex(a, b));
        pts.dedup_by(|a, b| lex(a, b) == Ordering::Equal);
        PointSet { d, coords: pts.concat() }
    }

    pub fn from_points(d: usize, pts: &[Vec<f64>]) -> Self {
        Self::from_flat(d, pts.iter().flatten().copied().collect())
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.d)
    }

    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn count_in(&self, region: &RealBox) -> usize {
        self.iter().filter(|p| region.contains(p)).count()
    }

    pub fn restricted(&self, region: &RealBox) -> PointSet {
        PointSet { d: self.d, coords: self.iter().filter(|p| region.contains(p)).flatten().copied().collect() }
    }

    /// Union with another set, keeping order and uniqueness.
    pub fn union(&self, other: &PointSet) -> PointSet {
        let mut all = self.coords.clone();
        all.extend_from_slice(&other.coords);
        PointSet::from_flat(self.d, all)
    }

    /// Translated copy `p - shift`.
    pub fn shifted(&self, shift: &[f64]) -> PointSet {
        let coords = self.iter().flat_map(|p| p.iter().zip(shift).map(|(a, b)| a - b)).collect();
        PointSet::from_flat(self.d, coords)
    }
}

/// A space-time point process that can be queried slice by slice.
pub trait PointSource: Sync {
    fn dim(&self) -> usize;

    /// Points of slice `k >= 1` inside `region` (half-open), sorted.
    fn points_in(&self, k: u32, region: &RealBox) -> Result<PointSet>;
}

impl<T: PointSource + ?Sized> PointSource for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn points_in(&self, k: u32, region: &RealBox) -> Result<PointSet> {
        (**self).points_in(k, region)
    }
}

/// An explicit, finite configuration: slice `k` (1-based) holds `slices[k-1]`.
/// Slices beyond the list are empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlicedPoints {
    pub d: usize,
    pub slices: Vec<PointSet>,
}

impl SlicedPoints {
    pub fn new(d: usize, slices: Vec<PointSet>) -> Self {
        SlicedPoints { d, slices }
    }

    /// From per-slice point lists.
    pub fn from_lists(d: usize, lists: &[Vec<Vec<f64>>]) -> Self {
        SlicedPoints { d, slices: lists.iter().map(|l| PointSet::from_points(d, l)).collect() }
    }

    /// Materialises slices `1..=n` of `source` inside `region`.
    pub fn materialize<P: PointSource + ?Sized>(source: &P, n: u32, region: &RealBox) -> Result<Self> {
        let slices = (1..=n).map(|k| source.points_in(k, region)).collect::<Result<Vec<_>>>()?;
        Ok(SlicedPoints { d: source.dim(), slices })
    }

    pub fn horizon(&self) -> u32 {
        self.slices.len() as u32
    }

    /// Adds one point to slice `k`.
    pub fn with_point(&self, k: u32, point: &[f64]) -> SlicedPoints {
        let mut out = self.clone();
        let idx = k as usize - 1;
        while out.slices.len() <= idx {
            out.slices.push(PointSet::empty(self.d));
        }
        out.slices[idx] = out.slices[idx].union(&PointSet::from_flat(self.d, point.to_vec()));
        out
    }
}

impl PointSource for SlicedPoints {
    fn dim(&self) -> usize {
        self.d
    }

    fn points_in(&self, k: u32, region: &RealBox) -> Result<PointSet> {
        if k == 0 {
            return Err(Error::Window("slice 0 holds only the origin".into()));
        }
        Ok(self
            .slices
            .get(k as usize - 1)
            .map(|s| s.restricted(region))
            .unwrap_or_else(|| PointSet::empty(self.d)))
    }
}

/// Nearest point (l1) of slice `k` to `from`, lexicographically smallest among
/// ties; searches boxes of doubling half-width up to `max_radius`.
/// Returns `None` if nothing lies within `max_radius`.
pub fn nearest_point<P: PointSource + ?Sized>(
    source: &P,
    k: u32,
    from: &[f64],
    max_radius: f64,
) -> Result<Option<(f64, Vec<f64>)>> {
    let mut r = 1.0f64;
    loop {
        let r_eff = r.min(max_radius);
        let pts = source.points_in(k, &RealBox::around(from, r_eff))?;
        let mut best: Option<(f64, usize)> = None;
        for (i, p) in pts.iter().enumerate() {
            let dist = l1_f(p, from);
            // points are visited in lexicographic order, so strict < keeps the smallest
            if best.is_none_or(|(b, _)| dist < b) {
                best = Some((dist, i));
            }
        }
        if let Some((dist, i)) = best {
            // everything outside the half-open box is at l1 distance >= r_eff
            if dist < r_eff {
                return Ok(Some((dist, pts.point(i).to_vec())));
            }
        }
        if r_eff >= max_radius {
            return Ok(best.map(|(dist, i)| (dist, pts.point(i).to_vec())).filter(|(dist, _)| *dist <= max_radius));
        }
        r *= 2.0;
    }
}

/// Writes slices as CSV rows `k, x_1, ..., x_d`.
pub fn write_points_csv<W: Write>(out: W, slices: &[(u32, &PointSet)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let d = slices.first().map_or(1, |(_, s)| s.d);
    let mut header = vec!["k".to_string()];
    header.extend((1..=d).map(|i| format!("x_{i}")));
    w.write_record(&header)?;
    for (k, set) in slices {
        for p in set.iter() {
            let mut rec = vec![k.to_string()];
            rec.extend(p.iter().map(|v| format!("{v:.16e}")));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_and_deduplicated() {
        let s = PointSet::from_points(1, &[vec![2.0], vec![-1.0], vec![2.0]]);
        assert_eq!(s.flat(), &[-1.0, 2.0]);
    }

    #[test]
    fn nearest_breaks_ties_low() {
        let sp = SlicedPoints::from_lists(1, &[vec![vec![-3.0], vec![3.0], vec![10.0]]]);
        let (d, p) = nearest_point(&sp, 1, &[0.0], 100.0).unwrap().unwrap();
        assert_eq!(d, 3.0);
        assert_eq!(p, vec![-3.0]);
        assert!(nearest_point(&sp, 1, &[0.0], 2.0).unwrap().is_none());
    }

    #[test]
    fn csv_export() {
        let s = PointSet::from_points(2, &[vec![0.5, 1.0]]);
        let mut buf = Vec::new();
        write_points_csv(&mut buf, &[(3, &s)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,x_1,x_2\n3,5.0000000000000000e-1,"));
    }
}
