use serde::{Deserialize, Serialize};

use crate::env::BernoulliField;
use crate::error::Result;
use crate::kernel::{log_jump_weight, ModelParams};
use crate::lattice::{jump_power, l1_f, l1_i};

/// How a path was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Minimizer,
    Greedy,
    Gibbs,
    Deformed,
    Raw,
}

/// Coordinates a path can live on.
pub trait Coordinate: Copy + PartialEq + std::fmt::Debug {
    fn l1(a: &[Self], b: &[Self]) -> f64;
}

impl Coordinate for i64 {
    fn l1(a: &[i64], b: &[i64]) -> f64 {
        l1_i(a, b) as f64
    }
}

impl Coordinate for f64 {
    fn l1(a: &[f64], b: &[f64]) -> f64 {
        l1_f(a, b)
    }
}

/// A path `x_0, ..., x_n`, stored flat, with its jump cost
/// `sum_k |x_{k-1} - x_k|_1^alpha`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRecord<T> {
    pub d: usize,
    pub sites: Vec<T>,
    pub alpha: f64,
    pub jump_cost: f64,
    pub hamiltonian: Option<u32>,
    pub log_prob: Option<f64>,
    pub provenance: Provenance,
}

pub type LatticePath = PathRecord<i64>;
pub type PointPath = PathRecord<f64>;

impl<T: Coordinate> PathRecord<T> {
    pub fn new(d: usize, sites: Vec<T>, alpha: f64, provenance: Provenance) -> Self {
        assert!(d > 0 && !sites.is_empty() && sites.len().is_multiple_of(d), "malformed path");
        let mut rec = PathRecord { d, sites, alpha, jump_cost: 0.0, hamiltonian: None, log_prob: None, provenance };
        rec.jump_cost = rec.jump_lengths().iter().fold(0.0, |acc, &l| acc + jump_power(l, alpha));
        rec
    }

    pub fn from_sites(sites: &[Vec<T>], alpha: f64, provenance: Provenance) -> Self {
        Self::new(sites[0].len(), sites.iter().flatten().copied().collect(), alpha, provenance)
    }

    /// Number of steps.
    pub fn n(&self) -> usize {
        self.sites.len() / self.d - 1
    }

    pub fn site(&self, j: usize) -> &[T] {
        &self.sites[j * self.d..(j + 1) * self.d]
    }

    /// `|x_{k-1} - x_k|_1` for `k = 1..=n`.
    pub fn jump_lengths(&self) -> Vec<f64> {
        (1..=self.n()).map(|k| T::l1(self.site(k - 1), self.site(k))).collect()
    }
}

impl LatticePath {
    pub fn jumps(&self) -> Vec<u64> {
        (1..=self.n()).map(|k| l1_i(self.site(k - 1), self.site(k))).collect()
    }

    /// Sets `log_prob = sum_k ln f(|x_{k-1} - x_k|_1)`.
    pub fn with_log_prob(mut self, params: &ModelParams) -> Self {
        self.log_prob = Some(self.jumps().iter().fold(0.0, |acc, &k| acc + log_jump_weight(params, k)));
        self
    }

    pub fn with_hamiltonian(mut self, field: &BernoulliField) -> Result<Self> {
        self.hamiltonian = Some(hamiltonian(&self, field)?);
        Ok(self)
    }

    pub fn max_abs_coord(&self) -> i64 {
        self.sites.iter().map(|v| v.abs()).max().unwrap_or(0)
    }
}

/// `H_n = sum_{j=1}^n field(j, x_j)`.
pub fn hamiltonian(path: &LatticePath, field: &BernoulliField) -> Result<u32> {
    let mut h = 0;
    for j in 1..=path.n() {
        h += field.eval(j as u32, path.site(j))? as u32;
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Beta;

    #[test]
    fn constant_fields() {
        let p = LatticePath::from_sites(&[vec![0], vec![2], vec![-1], vec![-1], vec![5], vec![0]], 1.0, Provenance::Raw);
        assert_eq!(p.n(), 5);
        assert_eq!(p.jump_cost, 2.0 + 3.0 + 0.0 + 6.0 + 5.0);
        assert_eq!(hamiltonian(&p, &BernoulliField::constant(0, 1)).unwrap(), 0);
        assert_eq!(hamiltonian(&p, &BernoulliField::constant(1, 1)).unwrap(), 5);
    }

    #[test]
    fn log_prob_sums_weights() {
        let params = ModelParams::new(1.0, 2f64.ln(), 1, 0.5, Beta::Finite(0.0)).unwrap();
        let p = LatticePath::from_sites(&[vec![0], vec![3]], 1.0, Provenance::Raw).with_log_prob(&params);
        let want = (1.0f64 / 3.0).ln() - 3.0 * 2f64.ln();
        assert!((p.log_prob.unwrap() - want).abs() < 1e-14);
    }
}
