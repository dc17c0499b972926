use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dp::{forward, forward_expanding, log_sum_exp, Engine, LogWeightSlice, TruncationPolicy};
use super::path::{LatticePath, Provenance};
use crate::env::BernoulliField;
use crate::error::{Error, Result};
use crate::kernel::ModelParams;

/// Storage strategy for the backward sampling pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMemory {
    /// Keep every forward slice.
    #[default]
    Full,
    /// Keep nothing; recompute slice `k - 1` for each backward step.
    Recompute,
}

/// Draws an index with probability proportional to `exp(logw[i])`, scanning in order.
fn draw(logw: &[f64], u: f64) -> Option<usize> {
    let m = log_sum_exp(logw);
    if m == f64::NEG_INFINITY {
        return None;
    }
    let mut acc = 0.0;
    let mut last = None;
    for (i, &v) in logw.iter().enumerate() {
        if v == f64::NEG_INFINITY {
            continue;
        }
        acc += (v - m).exp();
        last = Some(i);
        if acc > u {
            return Some(i);
        }
    }
    last
}

/// Exact draw from the Gibbs measure restricted to the truncated windows:
/// `x_n` with weight `exp(W_n(x))`, then `x_{k-1}` with weight
/// `exp(W_{k-1}(y) + ln f(|y - x_k|_1))`.
pub fn sample_polymer_path(
    params: &ModelParams,
    field: &BernoulliField,
    n: u32,
    trunc: &TruncationPolicy,
    sample_seed: u64,
    memory: SampleMemory,
) -> Result<LatticePath> {
    let keep = memory == SampleMemory::Full;
    let (slices, res) = forward_expanding(params, field, n, trunc, keep)?;
    let engine = Engine::new(params, n, res);
    let slice_at = |k: u32| -> Result<LogWeightSlice> {
        if keep {
            Ok(slices[k as usize].clone())
        } else {
            Ok(forward(&engine, field, k, false)?.pop().unwrap())
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
    let d = params.d;
    let last = if keep { slices[n as usize].clone() } else { slices[0].clone() };
    let mut sites = vec![vec![0i64; d]; n as usize + 1];
    let xi = draw(&last.values, rng.gen::<f64>()).ok_or_else(|| Error::Infeasible("zero partition function".into()))?;
    sites[n as usize] = last.window.coords_vec(xi);
    let mut y = vec![0i64; d];
    let mut idx = Vec::new();
    let mut logw = Vec::new();
    for k in (1..=n).rev() {
        let prev = slice_at(k - 1)?;
        let finite = prev.finite_indices();
        idx.clear();
        logw.clear();
        engine.visit_sources(&prev, &finite, &sites[k as usize], &mut y, |yi, r| {
            idx.push(yi);
            logw.push(prev.values[yi] + engine.lf[r as usize]);
        });
        let pick = draw(&logw, rng.gen::<f64>()).ok_or_else(|| Error::Infeasible("dead end in backward pass".into()))?;
        sites[k as usize - 1] = prev.window.coords_vec(idx[pick]);
    }
    LatticePath::from_sites(&sites, params.alpha, Provenance::Gibbs).with_log_prob(params).with_hamiltonian(field)
}
