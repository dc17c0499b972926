use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::passage::passage_time_auto;
use super::DEFAULT_MAX_SEARCH;
use crate::env::{
    couple_bernoulli_from_poisson, make_bernoulli_field, scaled_vacancy_process, FieldRef, PointSource,
    PoissonField, ScaledVacancyProcess,
};
use crate::error::{param, Error, Result};
use crate::kernel::ModelParams;
use crate::rng::{derive_seed, replica_seed};
use crate::stats::{Estimate, Frequency};

/// Replicas may fail for lack of points in a window at most this often.
pub const MAX_INFEASIBLE_RATE: f64 = 0.01;

/// Half-width of the spatial window of generated Poisson fields; they are
/// lazy, so only the cells actually queried are ever generated.
const POISSON_EXTENT: f64 = 1e7;

/// Which process `omega_p` a replica seed produces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessKind {
    pub d: usize,
    pub p: f64,
    /// Derive `omega_p` from the replica's Poisson field (shared across `p`)
    /// instead of an independent Bernoulli field.
    pub coupled: bool,
}

impl ProcessKind {
    pub fn poisson_field(&self, seed: u64, horizon: u32) -> Result<PoissonField> {
        PoissonField::centered(seed, self.d, horizon, POISSON_EXTENT)
    }

    pub fn build(&self, seed: u64, horizon: u32) -> Result<ScaledVacancyProcess> {
        if self.p == 1.0 {
            return scaled_vacancy_process(FieldRef::Poisson(&self.poisson_field(seed, horizon)?), 1.0);
        }
        let field = if self.coupled {
            couple_bernoulli_from_poisson(self.poisson_field(seed, horizon)?, self.p)?
        } else {
            make_bernoulli_field(derive_seed(seed, self.p.to_bits()), self.p, self.d)?
        };
        scaled_vacancy_process(FieldRef::Bernoulli(&field), self.p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeConstantEstimate {
    pub mu_hat: f64,
    pub n: u32,
    pub replicas: usize,
    pub stderr: f64,
    /// `(m, mean of T_m / m, stderr)` for `m` in `n/8, n/4, n/2, n`.
    pub subadditive: Vec<(u32, f64, f64)>,
    pub infeasible: usize,
    /// `T_n / n` per replica in replica order; `None` where infeasible.
    pub per_replica: Vec<Option<f64>>,
}

/// Passage times `T_m` for each `m` in `grid` (all `<= n`) of one sample.
pub fn sample_passage_times<P: PointSource + ?Sized>(omega: &P, n: u32, alpha: f64, grid: &[u32]) -> Result<Vec<f64>> {
    let r = passage_time_auto(omega, n, alpha, DEFAULT_MAX_SEARCH)?;
    debug_assert!(r.exact);
    Ok(grid.iter().map(|&m| r.prefix_times[m as usize - 1]).collect())
}

fn dyadic_grid(n: u32) -> Vec<u32> {
    let mut g: Vec<u32> = [n / 8, n / 4, n / 2, n].into_iter().filter(|&m| m >= 1).collect();
    g.dedup();
    g
}

/// Runs `sample(seed)` for every replica in parallel, keeping replica order.
fn run_replicas<T: Send>(
    replicas: usize,
    seed: u64,
    sample: impl Fn(u64) -> Result<T> + Sync,
) -> Result<(Vec<Option<T>>, usize)> {
    let raw: Vec<Result<T>> = (0..replicas as u64).into_par_iter().map(|r| sample(replica_seed(seed, r))).collect();
    let mut out = Vec::with_capacity(replicas);
    let mut infeasible = 0;
    for r in raw {
        match r {
            Ok(v) => out.push(Some(v)),
            Err(Error::Infeasible(_)) => {
                infeasible += 1;
                out.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    if infeasible as f64 > MAX_INFEASIBLE_RATE * replicas as f64 {
        return Err(Error::Infeasible(format!("{infeasible} of {replicas} replicas infeasible")));
    }
    Ok((out, infeasible))
}

/// `mu_hat` from replicas built by `make(seed)`.
pub fn estimate_with<P, F>(alpha: f64, n: u32, replicas: usize, seed: u64, make: F) -> Result<TimeConstantEstimate>
where
    P: PointSource,
    F: Fn(u64) -> Result<P> + Sync,
{
    if n == 0 || replicas < 2 {
        return param("time-constant estimation needs n >= 1 and at least 2 replicas");
    }
    let grid = dyadic_grid(n);
    let (samples, infeasible) = run_replicas(replicas, seed, |s| sample_passage_times(&make(s)?, n, alpha, &grid))?;
    let per_replica: Vec<Option<f64>> = samples.iter().map(|t| t.as_ref().map(|t| t[grid.len() - 1] / n as f64)).collect();
    let subadditive = grid
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let v: Vec<f64> = samples.iter().flatten().map(|t| t[i] / m as f64).collect();
            let e = Estimate::from_values(&v, false);
            (m, e.mean, e.stderr)
        })
        .collect();
    let fin: Vec<f64> = per_replica.iter().flatten().copied().collect();
    let e = Estimate::from_values(&fin, false);
    Ok(TimeConstantEstimate { mu_hat: e.mean, n, replicas, stderr: e.stderr, subadditive, infeasible, per_replica })
}

/// `mu_hat = mean T_n / n` over independent replicas of `omega_p`.
pub fn time_constant_estimate(
    params: &ModelParams,
    coupled: bool,
    n: u32,
    replicas: usize,
    seed: u64,
) -> Result<TimeConstantEstimate> {
    let kind = ProcessKind { d: params.d, p: params.p, coupled };
    estimate_with(params.alpha, n, replicas, seed, |s| kind.build(s, n))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub n: u32,
    /// `n^{1 - lambda}`.
    pub threshold: f64,
    pub freq: Frequency,
    pub infeasible: usize,
}

/// Frequency of `T_n - n mu1_ref < -n^{1-lambda}` for each `n` in `n_grid`.
/// One passage-time run per replica up to the largest `n` supplies every
/// smaller `T_n` as well.
pub fn concentration_tail(
    params: &ModelParams,
    n_grid: &[u32],
    replicas: usize,
    lambda: f64,
    mu1_ref: f64,
    seed: u64,
) -> Result<Vec<TailRow>> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return param(format!("lambda must lie in (0,1), got {lambda}"));
    }
    let Some(&n_max) = n_grid.iter().max() else {
        return param("empty n grid");
    };
    if n_grid.contains(&0) {
        return param("n grid entries must be positive");
    }
    let kind = ProcessKind { d: params.d, p: params.p, coupled: true };
    let (samples, infeasible) =
        run_replicas(replicas, seed, |s| sample_passage_times(&kind.build(s, n_max)?, n_max, params.alpha, n_grid))?;
    Ok(n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let threshold = (n as f64).powf(1.0 - lambda);
            let hits = samples.iter().flatten().filter(|t| t[i] - n as f64 * mu1_ref < -threshold).count();
            TailRow { n, threshold, freq: Frequency::new(hits, replicas - infeasible), infeasible }
        })
        .collect())
}
