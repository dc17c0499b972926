use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::poisson::PoissonField;
use super::TAG_BERNOULLI;
use crate::error::{param, Error, Result};
use crate::kernel::scaling_factor;
use crate::lattice::{LatticeBox, RealBox};
use crate::rng::Key;

/// Largest slice (in sites) materialised in one call.
const MAX_SLICE_SITES: usize = 1 << 30;

/// Explicit per-site values over a default, for hand-built configurations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<TableEntry>", into = "Vec<TableEntry>")]
pub struct SiteTable {
    values: HashMap<(u32, Vec<i64>), u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TableEntry {
    k: u32,
    x: Vec<i64>,
    value: u8,
}

impl From<Vec<TableEntry>> for SiteTable {
    fn from(entries: Vec<TableEntry>) -> Self {
        SiteTable { values: entries.into_iter().map(|e| ((e.k, e.x), e.value)).collect() }
    }
}

impl From<SiteTable> for Vec<TableEntry> {
    fn from(t: SiteTable) -> Self {
        let mut v: Vec<TableEntry> =
            t.values.into_iter().map(|((k, x), value)| TableEntry { k, x, value }).collect();
        v.sort_by(|a, b| (a.k, &a.x).cmp(&(b.k, &b.x)));
        v
    }
}

impl SiteTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, k: u32, x: &[i64], value: u8) {
        self.values.insert((k, x.to_vec()), value.min(1));
    }

    pub fn get(&self, k: u32, x: &[i64]) -> Option<u8> {
        self.values.get(&(k, x.to_vec())).copied()
    }
}

/// A {0,1}-valued space-time field, evaluated lazily at `(k, x)`, `k >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BernoulliField {
    /// Independent Bernoulli(p) values keyed by `(seed, k, x)`.
    Iid { seed: u64, p: f64, d: usize },
    Constant { value: u8, d: usize },
    /// `default` except where the table says otherwise.
    Table { d: usize, default: u8, table: SiteTable },
    /// `1 - inner`.
    Flip { inner: Box<BernoulliField> },
    /// Pointwise maximum.
    Superpose { eta: Box<BernoulliField>, zeta: Box<BernoulliField> },
    /// `1` iff the Poisson field has no point in `s_p (x + [0,1)^d)`.
    Coupled { poisson: PoissonField, p: f64 },
}

/// Independent Bernoulli(p) field; `p` must lie in (0,1).
pub fn make_bernoulli_field(seed: u64, p: f64, d: usize) -> Result<BernoulliField> {
    check_open_unit(p)?;
    if d == 0 {
        return param("dimension must be at least 1");
    }
    Ok(BernoulliField::Iid { seed, p, d })
}

/// `1 - field`.
pub fn flip_field(field: BernoulliField) -> BernoulliField {
    match field {
        BernoulliField::Flip { inner } => *inner,
        other => BernoulliField::Flip { inner: Box::new(other) },
    }
}

/// `max(eta, zeta)`.
pub fn superpose(eta: BernoulliField, zeta: BernoulliField) -> Result<BernoulliField> {
    if eta.dim() != zeta.dim() {
        return param(format!("dimension mismatch: {} vs {}", eta.dim(), zeta.dim()));
    }
    Ok(BernoulliField::Superpose { eta: Box::new(eta), zeta: Box::new(zeta) })
}

/// The Bernoulli(p) field obtained by testing vacancy of `s_p`-cells of `pf`.
pub fn couple_bernoulli_from_poisson(pf: PoissonField, p: f64) -> Result<BernoulliField> {
    check_open_unit(p)?;
    Ok(BernoulliField::Coupled { poisson: pf, p })
}

fn check_open_unit(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return param(format!("p must lie in (0,1), got {p}"));
    }
    Ok(())
}

impl BernoulliField {
    pub fn constant(value: u8, d: usize) -> Self {
        BernoulliField::Constant { value: value.min(1), d }
    }

    pub fn table(d: usize, default: u8, table: SiteTable) -> Self {
        BernoulliField::Table { d, default: default.min(1), table }
    }

    /// A table field on one slice range: `open[k-1]` lists the sites with value 0,
    /// every other site has value 1.
    pub fn open_only(d: usize, open: &[Vec<Vec<i64>>]) -> Self {
        let mut t = SiteTable::new();
        for (i, sites) in open.iter().enumerate() {
            for x in sites {
                t.set(i as u32 + 1, x, 0);
            }
        }
        Self::table(d, 1, t)
    }

    pub fn dim(&self) -> usize {
        match self {
            BernoulliField::Iid { d, .. }
            | BernoulliField::Constant { d, .. }
            | BernoulliField::Table { d, .. } => *d,
            BernoulliField::Flip { inner } => inner.dim(),
            BernoulliField::Superpose { eta, .. } => eta.dim(),
            BernoulliField::Coupled { poisson, .. } => poisson.dim(),
        }
    }

    /// Nominal probability of the value 1, when the field is random.
    pub fn success_prob(&self) -> Option<f64> {
        match self {
            BernoulliField::Iid { p, .. } | BernoulliField::Coupled { p, .. } => Some(*p),
            BernoulliField::Constant { .. } | BernoulliField::Table { .. } => None,
            BernoulliField::Flip { inner } => inner.success_prob().map(|p| 1.0 - p),
            BernoulliField::Superpose { eta, zeta } => {
                Some(1.0 - (1.0 - eta.success_prob()?) * (1.0 - zeta.success_prob()?))
            }
        }
    }

    /// Value at `(k, x)`.
    pub fn eval(&self, k: u32, x: &[i64]) -> Result<u8> {
        if x.len() != self.dim() {
            return param(format!("site {x:?} has wrong dimension for a {}-d field", self.dim()));
        }
        self.eval_unchecked(k, x)
    }

    fn eval_unchecked(&self, k: u32, x: &[i64]) -> Result<u8> {
        Ok(match self {
            BernoulliField::Iid { seed, p, .. } => iid_value(*seed, *p, k, x),
            BernoulliField::Constant { value, .. } => *value,
            BernoulliField::Table { default, table, .. } => table.get(k, x).unwrap_or(*default),
            BernoulliField::Flip { inner } => 1 - inner.eval_unchecked(k, x)?,
            BernoulliField::Superpose { eta, zeta } => {
                eta.eval_unchecked(k, x)?.max(zeta.eval_unchecked(k, x)?)
            }
            BernoulliField::Coupled { poisson, p } => {
                let s = scaling_factor(*p, x.len());
                let cell = LatticeBox { lo: x.to_vec(), hi: x.to_vec() };
                u8::from(coupled_vacant_sites(poisson, s, k, &cell)?.is_empty())
            }
        })
    }

    /// Values over `window` in flat-index order.
    pub fn slice(&self, k: u32, window: &LatticeBox) -> Result<Vec<u8>> {
        if window.dim() != self.dim() {
            return param("window dimension does not match the field");
        }
        if window.len() > MAX_SLICE_SITES {
            return Err(Error::TooLarge { size: window.len() as u128, limit: MAX_SLICE_SITES as u128 });
        }
        match self {
            BernoulliField::Constant { value, .. } => Ok(vec![*value; window.len()]),
            BernoulliField::Flip { inner } => {
                let mut v = inner.slice(k, window)?;
                v.iter_mut().for_each(|b| *b = 1 - *b);
                Ok(v)
            }
            BernoulliField::Superpose { eta, zeta } => {
                let mut v = eta.slice(k, window)?;
                let w = zeta.slice(k, window)?;
                v.iter_mut().zip(w).for_each(|(a, b)| *a = (*a).max(b));
                Ok(v)
            }
            BernoulliField::Coupled { poisson, p } => {
                let s = scaling_factor(*p, self.dim());
                let mut v = vec![1u8; window.len()];
                for idx in coupled_vacant_sites(poisson, s, k, window)? {
                    v[idx] = 0;
                }
                Ok(v)
            }
            _ => {
                let mut x = vec![0i64; window.dim()];
                (0..window.len())
                    .map(|idx| {
                        window.coords_of(idx, &mut x);
                        self.eval_unchecked(k, &x)
                    })
                    .collect()
            }
        }
    }

    /// Flat indices of the sites of `window` where the field is 0, ascending.
    pub fn open_sites(&self, k: u32, window: &LatticeBox) -> Result<Vec<usize>> {
        if let BernoulliField::Coupled { poisson, p } = self {
            if window.dim() != self.dim() {
                return param("window dimension does not match the field");
            }
            return coupled_vacant_sites(poisson, scaling_factor(*p, self.dim()), k, window);
        }
        Ok(self
            .slice(k, window)?
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| (v == 0).then_some(i))
            .collect())
    }
}

#[inline]
fn iid_value(seed: u64, p: f64, k: u32, x: &[i64]) -> u8 {
    u8::from(Key::new(seed, TAG_BERNOULLI).absorb(k as u64).absorb_all(x).uniform() < p)
}

/// Lattice cell of a physical point: `floor(xi / s)` per coordinate.
#[inline]
pub(crate) fn cell_of(xi: f64, s: f64) -> i64 {
    (xi / s).floor() as i64
}

/// Sorted flat indices of the sites `x` of `window` whose cell
/// `s (x + [0,1)^d)` holds a Poisson point on slice `k`.
fn coupled_vacant_sites(pf: &PoissonField, s: f64, k: u32, window: &LatticeBox) -> Result<Vec<usize>> {
    let d = window.dim();
    let phys = RealBox {
        lo: window.lo.iter().map(|&a| s * a as f64).collect(),
        hi: window.hi.iter().map(|&b| s * (b + 1) as f64).collect(),
    };
    pf.check_request(k, &phys)?;
    // widen by one unit so floating rounding at the cell faces cannot drop a point
    let search = RealBox {
        lo: phys.lo.iter().map(|v| v - 1.0).collect(),
        hi: phys.hi.iter().map(|v| v + 1.0).collect(),
    };
    let raw = pf.raw_points(k, &search);
    let mut cell = vec![0i64; d];
    let mut out: Vec<usize> = raw
        .chunks(d)
        .filter_map(|pt| {
            for (c, &v) in cell.iter_mut().zip(pt) {
                *c = cell_of(v, s);
            }
            window.try_index_of(&cell)
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iid_is_deterministic() {
        let f = make_bernoulli_field(7, 0.5, 1).unwrap();
        assert_eq!(f.eval(3, &[-2]).unwrap(), f.eval(3, &[-2]).unwrap());
        assert!(make_bernoulli_field(7, 1.0, 1).is_err());
        assert!(make_bernoulli_field(7, 0.0, 1).is_err());
    }

    #[test]
    fn slice_matches_pointwise() {
        let pf = PoissonField::centered(1, 2, 3, 50.0).unwrap();
        let fields = vec![
            make_bernoulli_field(5, 0.3, 2).unwrap(),
            couple_bernoulli_from_poisson(pf, 0.4).unwrap(),
        ];
        let w = LatticeBox::new(vec![-4, -3], vec![5, 2]).unwrap();
        for f in fields {
            let f2 = superpose(f.clone(), flip_field(f.clone())).unwrap();
            for g in [f, f2] {
                let s = g.slice(2, &w).unwrap();
                for (idx, site) in w.sites().enumerate() {
                    assert_eq!(s[idx], g.eval(2, &site).unwrap());
                }
            }
        }
    }

    #[test]
    fn flip_is_involution() {
        let f = make_bernoulli_field(9, 0.2, 1).unwrap();
        assert_eq!(flip_field(flip_field(f.clone())), f);
    }

    #[test]
    fn descriptor_round_trip() {
        let pf = PoissonField::centered(1, 1, 3, 10.0).unwrap();
        let mut t = SiteTable::new();
        t.set(1, &[0], 0);
        let f = superpose(
            couple_bernoulli_from_poisson(pf, 0.9).unwrap(),
            BernoulliField::table(1, 1, t),
        )
        .unwrap();
        let json = serde_json::to_string(&f).unwrap();
        let back: BernoulliField = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn coupled_outside_window_is_an_error() {
        let pf = PoissonField::centered(1, 1, 3, 10.0).unwrap();
        let f = couple_bernoulli_from_poisson(pf, 0.5).unwrap();
        assert!(matches!(f.eval(1, &[100]), Err(Error::Window(_))));
        assert!(matches!(f.eval(4, &[0]), Err(Error::Window(_))));
    }
}
