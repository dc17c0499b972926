use serde::{Deserialize, Serialize};

use super::bernoulli::BernoulliField;
use super::points::{PointSet, PointSource};
use super::poisson::PoissonField;
use crate::error::{param, Error, Result};
use crate::kernel::scaling_factor;
use crate::lattice::{LatticeBox, RealBox};

/// Input of [`scaled_vacancy_process`].
#[derive(Clone, Copy, Debug)]
pub enum FieldRef<'a> {
    Bernoulli(&'a BernoulliField),
    Poisson(&'a PoissonField),
}

/// The points `s_p x` over vacant sites `x` (`field(k,x) = 0`) for `p < 1`,
/// or the raw Poisson points for `p = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScaledVacancyProcess {
    Lattice { field: BernoulliField, p: f64, s_p: f64 },
    Poisson { field: PoissonField },
}

pub fn scaled_vacancy_process(field: FieldRef<'_>, p: f64) -> Result<ScaledVacancyProcess> {
    match field {
        FieldRef::Bernoulli(f) => {
            if !(p > 0.0 && p < 1.0) {
                return param(format!("a Bernoulli field needs p in (0,1), got {p}"));
            }
            if let Some(q) = f.success_prob() {
                if (q - p).abs() > 1e-12 {
                    return param(format!("field has p = {q}, requested {p}"));
                }
            }
            Ok(ScaledVacancyProcess::Lattice { field: f.clone(), p, s_p: scaling_factor(p, f.dim()) })
        }
        FieldRef::Poisson(pf) => {
            if p != 1.0 {
                return param(format!("a Poisson field is the p = 1 process, requested {p}"));
            }
            Ok(ScaledVacancyProcess::Poisson { field: pf.clone() })
        }
    }
}

impl ScaledVacancyProcess {
    pub fn p(&self) -> f64 {
        match self {
            ScaledVacancyProcess::Lattice { p, .. } => *p,
            ScaledVacancyProcess::Poisson { .. } => 1.0,
        }
    }

    /// Lattice spacing; zero for the Poisson process.
    pub fn s_p(&self) -> f64 {
        match self {
            ScaledVacancyProcess::Lattice { s_p, .. } => *s_p,
            ScaledVacancyProcess::Poisson { .. } => 0.0,
        }
    }

    /// The lattice sites `x` with `s_p x` in `region`, or `None` if there are none.
    pub fn lattice_box(&self, region: &RealBox) -> Option<LatticeBox> {
        let s = self.s_p();
        if s == 0.0 {
            return None;
        }
        let mut lo = Vec::with_capacity(region.dim());
        let mut hi = Vec::with_capacity(region.dim());
        for (&a, &b) in region.lo.iter().zip(&region.hi) {
            let mut l = (a / s).ceil() as i64;
            while s * (l as f64) < a {
                l += 1;
            }
            while s * ((l - 1) as f64) >= a {
                l -= 1;
            }
            let mut h = (b / s).ceil() as i64 - 1;
            while s * (h as f64) >= b {
                h -= 1;
            }
            while s * ((h + 1) as f64) < b {
                h += 1;
            }
            if l > h {
                return None;
            }
            lo.push(l);
            hi.push(h);
        }
        Some(LatticeBox { lo, hi })
    }
}

impl PointSource for ScaledVacancyProcess {
    fn dim(&self) -> usize {
        match self {
            ScaledVacancyProcess::Lattice { field, .. } => field.dim(),
            ScaledVacancyProcess::Poisson { field } => field.dim(),
        }
    }

    fn points_in(&self, k: u32, region: &RealBox) -> Result<PointSet> {
        match self {
            ScaledVacancyProcess::Poisson { field } => field.points_in(k, region),
            ScaledVacancyProcess::Lattice { field, s_p, .. } => {
                if k == 0 {
                    return Err(Error::Window("slice 0 holds only the origin".into()));
                }
                if !region.is_finite() {
                    return Err(Error::Window("lattice vacancy queries need a finite region".into()));
                }
                let Some(sites) = self.lattice_box(region) else {
                    return Ok(PointSet::empty(self.dim()));
                };
                let d = sites.dim();
                let open = field.open_sites(k, &sites)?;
                let mut coords = Vec::with_capacity(open.len() * d);
                let mut x = vec![0i64; d];
                for idx in open {
                    sites.coords_of(idx, &mut x);
                    coords.extend(x.iter().map(|&v| s_p * v as f64));
                }
                Ok(PointSet::from_flat(d, coords))
            }
        }
    }
}
