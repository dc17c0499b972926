use serde::{Deserialize, Serialize};

use super::points::{PointSet, PointSource};
use super::TAG_POISSON;
use crate::error::{param, Error, Result};
use crate::lattice::{LatticeBox, RealBox};
use crate::rng::Key;

/// Spatial part of a [`SpaceTimeWindow`]; the same box is used for every slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpatialBox {
    Lattice(LatticeBox),
    Real(RealBox),
}

impl SpatialBox {
    pub fn dim(&self) -> usize {
        match self {
            SpatialBox::Lattice(b) => b.dim(),
            SpatialBox::Real(b) => b.dim(),
        }
    }
}

/// Slices `1..=horizon` times a spatial box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeWindow {
    pub horizon: u32,
    pub spatial: SpatialBox,
}

impl SpaceTimeWindow {
    pub fn real(horizon: u32, region: RealBox) -> Result<Self> {
        let w = SpaceTimeWindow { horizon, spatial: SpatialBox::Real(region) };
        w.validate()?;
        Ok(w)
    }

    pub fn lattice(horizon: u32, region: LatticeBox) -> Result<Self> {
        let w = SpaceTimeWindow { horizon, spatial: SpatialBox::Lattice(region) };
        w.validate()?;
        Ok(w)
    }

    pub fn dim(&self) -> usize {
        self.spatial.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return param("window horizon must be at least 1");
        }
        match &self.spatial {
            SpatialBox::Lattice(b) => {
                LatticeBox::new(b.lo.clone(), b.hi.clone())?;
            }
            SpatialBox::Real(b) => {
                RealBox::new(b.lo.clone(), b.hi.clone())?;
            }
        }
        Ok(())
    }
}

/// Intensity-one Poisson process on {1..horizon} x R^d. Each unit cell
/// `{k} x (z + [0,1)^d)` carries a Poisson(1) number of uniform points drawn
/// from a stream keyed by `(seed, k, z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonField {
    pub seed: u64,
    pub window: SpaceTimeWindow,
}

/// Builds a Poisson field; the window must have a real box of positive volume.
pub fn make_poisson_field(seed: u64, window: SpaceTimeWindow) -> Result<PoissonField> {
    window.validate()?;
    if !matches!(window.spatial, SpatialBox::Real(_)) {
        return param("a Poisson field needs a real spatial box");
    }
    Ok(PoissonField { seed, window })
}

impl PoissonField {
    /// A field over `[-half_width, half_width)^d` for slices `1..=horizon`.
    pub fn centered(seed: u64, d: usize, horizon: u32, half_width: f64) -> Result<Self> {
        make_poisson_field(seed, SpaceTimeWindow::real(horizon, RealBox::centered(d, half_width))?)
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn region(&self) -> &RealBox {
        match &self.window.spatial {
            SpatialBox::Real(b) => b,
            SpatialBox::Lattice(_) => unreachable!("validated at construction"),
        }
    }

    /// Same seed, larger window; old points are unchanged.
    pub fn extended(&self, window: SpaceTimeWindow) -> Result<Self> {
        let next = make_poisson_field(self.seed, window)?;
        if next.window.horizon < self.window.horizon || !next.region().contains_box(self.region()) {
            return param("extended window must contain the current one");
        }
        Ok(next)
    }

    /// Points of the unit cell `{k} x (z + [0,1)^d)`, in generation order.
    pub fn cell_points(&self, k: u32, z: &[i64]) -> Vec<f64> {
        let d = z.len();
        let mut stream = Key::new(self.seed, TAG_POISSON).absorb(k as u64).absorb_all(z).stream();
        let count = stream.poisson(1.0) as usize;
        let mut out = Vec::with_capacity(count * d);
        for _ in 0..count {
            for &zi in z {
                out.push(zi as f64 + stream.next_f64());
            }
        }
        out
    }

    pub(crate) fn check_request(&self, k: u32, region: &RealBox) -> Result<()> {
        if k == 0 || k > self.window.horizon {
            return Err(Error::Window(format!("slice {k} outside 1..={}", self.window.horizon)));
        }
        if region.dim() != self.dim() || !region.is_finite() || !self.region().contains_box(region) {
            return Err(Error::Window(format!(
                "region [{:?}, {:?}) not covered by the Poisson window",
                region.lo, region.hi
            )));
        }
        Ok(())
    }

    /// Unsorted flat coordinates of all points in `region` (no window check).
    pub(crate) fn raw_points(&self, k: u32, region: &RealBox) -> Vec<f64> {
        let d = self.dim();
        let cells = region.unit_cells();
        let mut z = vec![0i64; d];
        let mut out = Vec::new();
        for idx in 0..cells.len() {
            cells.coords_of(idx, &mut z);
            let pts = self.cell_points(k, &z);
            for p in pts.chunks(d) {
                if region.contains(p) {
                    out.extend_from_slice(p);
                }
            }
        }
        out
    }
}

impl PointSource for PoissonField {
    fn dim(&self) -> usize {
        PoissonField::dim(self)
    }

    fn points_in(&self, k: u32, region: &RealBox) -> Result<PointSet> {
        self.check_request(k, region)?;
        Ok(PointSet::from_flat(self.dim(), self.raw_points(k, region)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extension_keeps_old_points() {
        let small = PoissonField::centered(3, 2, 4, 5.0).unwrap();
        let big = small
            .extended(SpaceTimeWindow::real(8, RealBox::centered(2, 20.0)).unwrap())
            .unwrap();
        for k in 1..=4 {
            let r = RealBox::centered(2, 5.0);
            assert_eq!(small.points_in(k, &r).unwrap(), big.points_in(k, &r).unwrap());
        }
    }

    #[test]
    fn requests_outside_window_fail() {
        let f = PoissonField::centered(3, 1, 4, 5.0).unwrap();
        assert!(matches!(f.points_in(5, &RealBox::centered(1, 1.0)), Err(Error::Window(_))));
        assert!(matches!(f.points_in(1, &RealBox::centered(1, 6.0)), Err(Error::Window(_))));
    }

    #[test]
    fn lattice_window_rejected() {
        let w = SpaceTimeWindow::lattice(3, LatticeBox::centered(1, 2)).unwrap();
        assert!(make_poisson_field(1, w).is_err());
    }
}
