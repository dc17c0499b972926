//! Brute-force references for small instances. Nothing here calls into the
//! dynamic programs, so agreement with them is a meaningful check.

use crate::env::{BernoulliField, PointSource};
use crate::error::{param, Error, Result};
use crate::kernel::{Beta, ModelParams};
use crate::lattice::{LatticeBox, RealBox};

/// Largest number of paths (or point choices) any oracle enumerates.
pub const ORACLE_LIMIT: u128 = 10_000_000;

fn guard(size: u128) -> Result<()> {
    if size > ORACLE_LIMIT {
        return Err(Error::TooLarge { size, limit: ORACLE_LIMIT });
    }
    Ok(())
}

fn l1(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// `log sum_{x_1..x_n in window} prod_j f(|x_{j-1} - x_j|_1) exp(beta eta(j, x_j))`, `x_0 = 0`.
pub fn enumerate_log_partition(params: &ModelParams, field: &BernoulliField, n: u32, window: &LatticeBox) -> Result<f64> {
    enumerate(params, field, n, window, None)
}

/// As [`enumerate_log_partition`] with the extra factor `exp(gamma D_n)`;
/// open-site distances are found by scanning l1 shells up to `search_cap`.
pub fn enumerate_tilted_log_partition(
    params: &ModelParams,
    field: &BernoulliField,
    n: u32,
    gamma: f64,
    window: &LatticeBox,
    search_cap: u64,
) -> Result<f64> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return param("gamma must be finite and non-negative");
    }
    enumerate(params, field, n, window, Some((gamma, search_cap)))
}

fn shell_distance(field: &BernoulliField, k: u32, x: &[i64], cap: u64) -> Result<f64> {
    for r in 0..=cap as i64 {
        for off in LatticeBox::centered(x.len(), r).sites() {
            if off.iter().map(|v| v.abs()).sum::<i64>() != r {
                continue;
            }
            let y: Vec<i64> = x.iter().zip(&off).map(|(a, b)| a + b).collect();
            if field.eval(k, &y)? == 0 {
                return Ok(r as f64);
            }
        }
    }
    Err(Error::Saturated { k, site: x.to_vec(), cap })
}

fn enumerate(
    params: &ModelParams,
    field: &BernoulliField,
    n: u32,
    window: &LatticeBox,
    tilt: Option<(f64, u64)>,
) -> Result<f64> {
    let sites: Vec<Vec<i64>> = window.sites().collect();
    let w = sites.len() as u128;
    guard(w.checked_pow(n).unwrap_or(u128::MAX))?;
    let mut eta = Vec::with_capacity(n as usize);
    let mut dist = Vec::with_capacity(n as usize);
    for k in 1..=n {
        eta.push(sites.iter().map(|x| field.eval(k, x)).collect::<Result<Vec<u8>>>()?);
        if let Some((_, cap)) = tilt {
            dist.push(sites.iter().map(|x| shell_distance(field, k, x, cap)).collect::<Result<Vec<f64>>>()?);
        }
    }
    let alpha = params.alpha;
    let origin = vec![0i64; params.d];
    // online log-sum-exp over all index tuples
    let (mut m, mut s) = (f64::NEG_INFINITY, 0.0f64);
    let mut idx = vec![0usize; n as usize];
    'paths: loop {
        let mut lw = 0.0;
        let mut prev: &[i64] = &origin;
        let mut d_prev = 0.0;
        let mut alive = true;
        for (j, &i) in idx.iter().enumerate() {
            let e = eta[j][i];
            match params.beta {
                Beta::NegInf if e == 1 => {
                    alive = false;
                    break;
                }
                Beta::NegInf => {}
                Beta::Finite(b) => lw += b * e as f64,
            }
            let len = l1(prev, &sites[i]) as f64;
            lw += params.c1.ln() - params.c2 * len.powf(alpha);
            if let Some((gamma, _)) = tilt {
                let dj = dist[j][i];
                lw += gamma * dj.powf(alpha);
                if alpha >= 1.0 {
                    lw += gamma * len.powf(alpha - 1.0) * (d_prev + dj);
                }
                d_prev = dj;
            }
            prev = &sites[i];
        }
        if alive {
            if lw > m {
                s = s * (m - lw).exp() + 1.0;
                m = lw;
            } else {
                s += (lw - m).exp();
            }
        }
        for j in (0..idx.len()).rev() {
            idx[j] += 1;
            if idx[j] < sites.len() {
                continue 'paths;
            }
            idx[j] = 0;
        }
        break;
    }
    Ok(if m == f64::NEG_INFINITY { m } else { m + s.ln() })
}

/// `min sum_k |x_{k-1} - x_k|_1^alpha` over all choices of one point per
/// slice `1..=n` inside `window`, starting at the origin.
pub fn enumerate_passage_time<P: PointSource + ?Sized>(omega: &P, n: u32, alpha: f64, window: &RealBox) -> Result<f64> {
    let slices: Vec<Vec<Vec<f64>>> = (1..=n)
        .map(|k| omega.points_in(k, window).map(|s| s.iter().map(|p| p.to_vec()).collect()))
        .collect::<Result<_>>()?;
    let size = slices.iter().try_fold(1u128, |acc, s| acc.checked_mul(s.len() as u128)).unwrap_or(u128::MAX);
    guard(size)?;
    if size == 0 {
        return Err(Error::Infeasible("a slice has no point".into()));
    }
    let origin = vec![0.0; omega.dim()];
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; n as usize];
    'choices: loop {
        let mut cost = 0.0;
        let mut prev = &origin;
        for (j, &i) in idx.iter().enumerate() {
            let q = &slices[j][i];
            let mut dist = 0.0;
            for (a, b) in prev.iter().zip(q) {
                dist += (a - b).abs();
            }
            cost += f64::powf(dist, alpha);
            prev = q;
        }
        best = best.min(cost);
        for j in (0..idx.len()).rev() {
            idx[j] += 1;
            if idx[j] < slices[j].len() {
                continue 'choices;
            }
            idx[j] = 0;
        }
        break;
    }
    Ok(best)
}

/// Exact `#{(z_1..z_n) in (Z^d)^n : sum_j |z_j|_1^alpha <= delta n}` and the
/// bound `(sum_z exp(lambda delta - lambda |z|_1^alpha))^n` at `lambda = delta^{-1/2}`.
pub fn count_small_jump_paths(d: usize, alpha: f64, n: u32, delta: f64) -> Result<(u64, f64)> {
    if !(1..=2).contains(&d) || !(1..=3).contains(&n) || !(delta > 0.0 && delta <= 2.0) || !(alpha > 0.0) {
        return param("counting oracle supports d <= 2, 1 <= n <= 3, 0 < delta <= 2");
    }
    let budget = delta * n as f64;
    let reach = budget.powf(1.0 / alpha).floor() as i64;
    // multiplicity of each l1 length, tallied from the box sites
    let mut shells = vec![0u64; reach as usize * d + 1];
    for z in LatticeBox::centered(d, reach).sites() {
        shells[z.iter().map(|v| v.unsigned_abs()).sum::<u64>() as usize] += 1;
    }
    let ball: Vec<(f64, u64)> = shells
        .iter()
        .enumerate()
        .map(|(k, &m)| ((k as f64).powf(alpha), m))
        .filter(|&(c, m)| m > 0 && c <= budget)
        .collect();
    guard((ball.len() as u128).pow(n))?;
    fn count(ball: &[(f64, u64)], left: u32, budget: f64) -> u64 {
        if left == 0 {
            return 1;
        }
        ball.iter().filter(|&&(c, _)| c <= budget).map(|&(c, m)| m * count(ball, left - 1, budget - c)).sum()
    }
    let total = count(&ball, n, budget);
    let lambda = delta.powf(-0.5);
    // sum over shells; shell(1,k) = 2, shell(2,k) = 4k for k >= 1
    let mut z_sum = 1.0;
    let mut k = 1u64;
    loop {
        let shell = if d == 1 { 2.0 } else { 4.0 * k as f64 };
        let term = shell * (-lambda * (k as f64).powf(alpha)).exp();
        z_sum += term;
        if term < 1e-18 * z_sum && lambda * (k as f64).powf(alpha) > 60.0 {
            break;
        }
        k += 1;
    }
    Ok((total, ((lambda * delta).exp() * z_sum).powi(n as i32)))
}

/// `P(dist_1(0, omega_1 slice)^alpha >= r) = exp(-2^d r^{d/alpha} / d!)`.
pub fn poisson_vacancy_law(d: usize, alpha: f64, r: f64) -> f64 {
    let fact: f64 = (1..=d).map(|i| i as f64).product();
    (-(2f64.powi(d as i32)) * r.powf(d as f64 / alpha) / fact).exp()
}
