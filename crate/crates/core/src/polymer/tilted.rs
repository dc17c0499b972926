use serde::{Deserialize, Serialize};

use super::dp::{check_inputs, forward_expanding, site_terms, Engine, LogWeightSlice, PartitionResult, Resolved, TruncationPolicy};
use crate::env::{open_distance_map, BernoulliField};
use crate::error::{param, Result};
use crate::kernel::ModelParams;

/// Per-slice distances to the nearest open site, over the engine windows.
fn distance_maps(engine: &Engine<'_>, field: &BernoulliField, n: u32, search_cap: u64) -> Result<Vec<Vec<f64>>> {
    let margin = engine.reach().clamp(1, 64);
    let mut maps = vec![vec![0.0]];
    for k in 1..=n {
        let m = open_distance_map(field, k, &engine.window(k), margin, search_cap)?;
        maps.push(m.into_iter().map(|v| v as f64).collect());
    }
    Ok(maps)
}

fn resolve(params: &ModelParams, field: &BernoulliField, n: u32, trunc: &TruncationPolicy) -> Result<Resolved> {
    check_inputs(params, field, n)?;
    if params.beta.is_neg_inf() {
        Ok(forward_expanding(params, field, n, trunc, false)?.1)
    } else {
        Resolved::new(params, n, trunc)
    }
}

/// `log P[exp(beta H_n + gamma D_n)]` over the truncated windows.
///
/// The leak bound is only certified for `gamma = 0`; otherwise it is
/// reported as infinite.
pub fn log_tilted_partition(
    params: &ModelParams,
    field: &BernoulliField,
    n: u32,
    gamma: f64,
    trunc: &TruncationPolicy,
    search_cap: u64,
) -> Result<PartitionResult> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return param(format!("gamma must be finite and non-negative, got {gamma}"));
    }
    let res = resolve(params, field, n, trunc)?;
    let engine = Engine::new(params, n, res.clone());
    let alpha = params.alpha;
    let dist = if gamma > 0.0 { Some(distance_maps(&engine, field, n, search_cap)?) } else { None };
    let pw: Vec<f64> = (0..=engine.reach()).map(|r| gamma * (r as f64).powf(alpha - 1.0)).collect();
    let mut cur = LogWeightSlice::origin(params.d);
    for k in 1..=n {
        let window = engine.window(k);
        let mut site = site_terms(field, params.beta, k, &window)?;
        cur = match &dist {
            None => engine.step(&cur, k, &site, |_, _, _| 0.0, true),
            Some(dist) => {
                let (dp, dn) = (&dist[k as usize - 1], &dist[k as usize]);
                for (s, &dx) in site.iter_mut().zip(dn) {
                    *s += gamma * dx.powf(alpha);
                }
                if alpha >= 1.0 {
                    engine.step(&cur, k, &site, |r, yi, xi| pw[r as usize] * (dp[yi] + dn[xi]), false)
                } else {
                    engine.step(&cur, k, &site, |_, _, _| 0.0, false)
                }
            }
        };
    }
    let log_z = cur.log_total();
    let leak_bound = if gamma > 0.0 || log_z == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        (cur.log_leak - log_z).exp()
    };
    Ok(PartitionResult { log_z, n, leak_bound, radius: res.radius, clip: res.clip, params: params.clone() })
}

/// Rounding of per-step `D_n` increments onto the budget grid. `Up` counts a
/// subset of `{D_n <= budget}` (lower bound on its mass), `Down` a superset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetRounding {
    Up,
    Down,
}

/// `log P[exp(beta H_n); D_n <= budget]` with `D_n` increments rounded to
/// multiples of `budget / levels`, over the truncation `res`.
#[allow(clippy::too_many_arguments)]
pub fn log_budgeted_partition(
    params: &ModelParams,
    field: &BernoulliField,
    n: u32,
    res: &Resolved,
    budget: f64,
    levels: usize,
    rounding: BudgetRounding,
    search_cap: u64,
) -> Result<f64> {
    check_inputs(params, field, n)?;
    if !(budget > 0.0) || levels == 0 {
        return param("budget and level count must be positive");
    }
    let engine = Engine::new(params, n, res.clone());
    let dist = distance_maps(&engine, field, n, search_cap)?;
    let alpha = params.alpha;
    let delta = budget / levels as f64;
    let nb = levels + 1;
    let pw: Vec<f64> = (0..=engine.reach()).map(|r| (r as f64).powf(alpha - 1.0)).collect();
    let to_level = |c: f64| -> usize {
        let q = c / delta;
        let l = match rounding {
            BudgetRounding::Up => q.ceil(),
            BudgetRounding::Down => q.floor(),
        };
        if l > levels as f64 {
            usize::MAX
        } else {
            l as usize
        }
    };
    let d = params.d;
    // State rows are stored as exp(log weight - row max) so the inner loop is a
    // multiply-add; entries below e^-745 of their row maximum underflow to zero.
    let mut row_max = vec![0.0f64];
    let mut lin = vec![0.0f64; nb];
    lin[0] = 1.0;
    let mut row_len = vec![1usize];
    let mut support = LogWeightSlice::origin(d);
    let mut x = vec![0i64; d];
    let mut y = vec![0i64; d];
    let mut acc = vec![0.0f64; nb];
    let mut log_rows = vec![f64::NEG_INFINITY; nb];
    log_rows[0] = 0.0;
    for k in 1..=n {
        let window = engine.window(k);
        let site = site_terms(field, params.beta, k, &window)?;
        let (dp, dn) = (&dist[k as usize - 1], &dist[k as usize]);
        let finite = support.finite_indices();
        let mut next = vec![f64::NEG_INFINITY; window.len() * nb];
        for xi in 0..window.len() {
            if site[xi] == f64::NEG_INFINITY {
                continue;
            }
            window.coords_of(xi, &mut x);
            let mut reference = f64::NEG_INFINITY;
            engine.visit_sources(&support, &finite, &x, &mut y, |yi, r| {
                reference = reference.max(row_max[yi] + engine.lf[r as usize]);
            });
            if reference == f64::NEG_INFINITY {
                continue;
            }
            acc.iter_mut().for_each(|v| *v = 0.0);
            let base = dn[xi].powf(alpha);
            engine.visit_sources(&support, &finite, &x, &mut y, |yi, r| {
                let mut c = base;
                if alpha >= 1.0 {
                    c += pw[r as usize] * (dp[yi] + dn[xi]);
                }
                let inc = to_level(c);
                if inc > levels {
                    return;
                }
                let w = (row_max[yi] + engine.lf[r as usize] - reference).exp();
                if w == 0.0 {
                    return;
                }
                let len = row_len[yi].min(nb - inc);
                let src = &lin[yi * nb..yi * nb + len];
                for (a, &v) in acc[inc..inc + len].iter_mut().zip(src) {
                    *a += w * v;
                }
            });
            for b in 0..nb {
                if acc[b] > 0.0 {
                    next[xi * nb + b] = reference + acc[b].ln() + site[xi];
                }
            }
        }
        row_max = Vec::with_capacity(window.len());
        row_len = Vec::with_capacity(window.len());
        lin = vec![0.0; next.len()];
        let mut values = Vec::with_capacity(window.len());
        for (xi, row) in next.chunks(nb).enumerate() {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let len = row.iter().rposition(|v| *v > f64::NEG_INFINITY).map_or(0, |i| i + 1);
            for b in 0..len {
                lin[xi * nb + b] = (row[b] - m).exp();
            }
            row_max.push(m);
            row_len.push(len);
            values.push(if len > 0 { 0.0 } else { f64::NEG_INFINITY });
        }
        support = LogWeightSlice { k, window, values, log_leak: f64::INFINITY };
        log_rows = next;
    }
    let state = log_rows;
    Ok(super::dp::log_sum_exp(&state))
}
