//! The jump law `f(k) = c1 exp(-c2 k^alpha)` of the underlying random walk,
//! where `k` is the l1 length of a jump in Z^d.
//!
//! The normalising constant `c1` is computed with a certified remainder: the
//! series `S = sum_k shell(d,k) exp(-c2 k^alpha)` is truncated at an adaptive
//! `K` whose tail is bounded by a geometric series (alpha >= 1) or by an
//! incomplete-gamma integral (alpha < 1).

use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{param, Error, Result};

/// Tolerance used for the normalisation embedded in [`ModelParams`].
pub const DEFAULT_NORMALIZATION_TOL: f64 = 1e-15;

const MAX_TRUNCATION: u64 = 200_000_000;

/// Inverse temperature on the extended half-line `[-inf, inf)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Beta {
    NegInf,
    Finite(f64),
}

impl Beta {
    pub fn is_neg_inf(self) -> bool {
        matches!(self, Beta::NegInf)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Beta::Finite(b) => Some(b),
            Beta::NegInf => None,
        }
    }

    /// `beta * eta` for `eta` in {0, 1}; the environment gates the product so
    /// `-inf * 0` never occurs.
    #[inline]
    pub fn times_indicator(self, eta: u8) -> f64 {
        if eta == 0 {
            0.0
        } else {
            match self {
                Beta::Finite(b) => b,
                Beta::NegInf => f64::NEG_INFINITY,
            }
        }
    }

    /// `max(beta, 0)`.
    pub fn positive_part(self) -> f64 {
        self.finite().map_or(0.0, |b| b.max(0.0))
    }

    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn negate(self) -> Result<Beta> {
        match self {
            Beta::Finite(b) => Ok(Beta::Finite(-b)),
            Beta::NegInf => param("cannot negate beta = -inf"),
        }
    }

    pub fn parse(s: &str) -> Result<Beta> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("-inf") {
            return Ok(Beta::NegInf);
        }
        let v: f64 = t.parse().map_err(|_| Error::Parameter(format!("cannot parse beta from {s:?}")))?;
        Beta::try_from(v)
    }
}

impl TryFrom<f64> for Beta {
    type Error = Error;

    fn try_from(v: f64) -> Result<Beta> {
        if v == f64::NEG_INFINITY {
            Ok(Beta::NegInf)
        } else if v.is_finite() {
            Ok(Beta::Finite(v))
        } else {
            param(format!("beta must lie in [-inf, inf), got {v}"))
        }
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beta::NegInf => write!(f, "-inf"),
            Beta::Finite(b) => write!(f, "{b}"),
        }
    }
}

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Beta::NegInf => s.serialize_str("-inf"),
            Beta::Finite(b) => s.serialize_f64(*b),
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Beta, D::Error> {
        struct V;
        impl<'de> de::Visitor<'de> for V {
            type Value = Beta;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a real number or the string \"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Beta, E> {
                Beta::try_from(v).map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Beta, E> {
                Ok(Beta::Finite(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Beta, E> {
                Ok(Beta::Finite(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Beta, E> {
                Beta::parse(v).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// Scalar model parameters. `c1` is derived from `(alpha, c2, d)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ModelParams {
    pub alpha: f64,
    pub c2: f64,
    pub d: usize,
    /// Success probability of the environment; `p = 1` denotes the Poisson limit.
    pub p: f64,
    pub beta: Beta,
    pub c1: f64,
    #[serde(skip)]
    truncation: u64,
    #[serde(skip)]
    log_remainder: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    alpha: f64,
    c2: f64,
    d: usize,
    #[serde(default = "half")]
    p: f64,
    #[serde(default = "zero_beta")]
    beta: Beta,
    #[allow(dead_code)]
    #[serde(default)]
    c1: Option<f64>,
}

fn half() -> f64 {
    0.5
}

fn zero_beta() -> Beta {
    Beta::Finite(0.0)
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.alpha, r.c2, r.d, r.p, r.beta)
    }
}

impl ModelParams {
    pub fn new(alpha: f64, c2: f64, d: usize, p: f64, beta: Beta) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return param(format!("p must lie in (0, 1], got {p}"));
        }
        let norm = Normalization::compute(alpha, c2, d, DEFAULT_NORMALIZATION_TOL)?;
        Ok(ModelParams {
            alpha,
            c2,
            d,
            p,
            beta,
            c1: 1.0 / norm.partial_sum,
            truncation: norm.truncation,
            log_remainder: norm.remainder.ln(),
        })
    }

    pub fn with_beta(&self, beta: Beta) -> Self {
        ModelParams { beta, ..self.clone() }
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return param(format!("p must lie in (0, 1], got {p}"));
        }
        Ok(ModelParams { p, ..self.clone() })
    }

    pub fn log_c1(&self) -> f64 {
        self.c1.ln()
    }

    /// Recorded (not enforced) regime flag for the zero-temperature continuity results.
    pub fn alpha_below_d(&self) -> bool {
        self.alpha < self.d as f64
    }

    /// `s_p = (log 1/p)^{1/d}`; zero at `p = 1`.
    pub fn scale(&self) -> f64 {
        scaling_factor(self.p, self.d)
    }

    /// `k^alpha` for a jump length.
    #[inline]
    pub fn jump_cost(&self, k: u64) -> f64 {
        (k as f64).powf(self.alpha)
    }
}

/// `s_p = (log(1/p))^{1/d}`.
pub fn scaling_factor(p: f64, d: usize) -> f64 {
    (-p.ln()).max(0.0).powf(1.0 / d as f64)
}

/// Number of sites `x` in Z^d with `|x|_1 = k`.
pub fn l1_shell_count(d: usize, k: u64) -> u128 {
    if k == 0 {
        return 1;
    }
    let mut total: u128 = 0;
    for i in 1..=d.min(k as usize) {
        total += (1u128 << i) * binom(d as u128, i as u128) * binom(k as u128 - 1, i as u128 - 1);
    }
    total
}

fn binom(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) / (j + 1);
    }
    acc
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|j| (j as f64).ln()).sum()
}

/// `ln shell(d,k) - c2 k^alpha`.
fn log_shell_term(alpha: f64, c2: f64, d: usize, k: u64) -> f64 {
    (l1_shell_count(d, k) as f64).ln() - c2 * (k as f64).powf(alpha)
}

/// Log of a certified upper bound on `sum_{k > K} shell(d,k) exp(-c2 k^alpha)`,
/// or `None` when the bounding argument does not yet apply at this `K`.
fn log_remainder_bound(alpha: f64, c2: f64, d: usize, k_trunc: u64) -> Option<f64> {
    if k_trunc == 0 {
        return None;
    }
    let m = (d - 1) as f64;
    // shell(d,k) <= 2^d C(k+d-1, d-1) <= A k^m for k >= 1
    let ln_a = d as f64 * 2f64.ln() + m * (d as f64).ln() - ln_factorial(d - 1);
    let kf = k_trunc as f64;
    if alpha >= 1.0 {
        // k^alpha >= K^{alpha-1} k for k >= K: geometric domination
        let a = c2 * kf.powf(alpha - 1.0);
        let rho = ((kf + 2.0) / (kf + 1.0)).powf(m) * (-a).exp();
        if rho >= 1.0 {
            return None;
        }
        Some(ln_a + m * (kf + 1.0).ln() - a * (kf + 1.0) - (-rho).ln_1p())
    } else {
        // t^m exp(-c2 t^alpha) is decreasing past t*; compare with the integral
        if m > 0.0 && kf < (m / (c2 * alpha)).powf(1.0 / alpha) {
            return None;
        }
        let a = (m + 1.0) / alpha;
        let x = c2 * kf.powf(alpha);
        if x <= a.max(2.0 * (a - 1.0)) {
            return None;
        }
        let ln_gamma_upper = if a >= 1.0 {
            (a - 1.0) * x.ln() - x - (1.0 - (a - 1.0) / x).ln()
        } else {
            (a - 1.0) * x.ln() - x
        };
        Some(ln_a - alpha.ln() - a * c2.ln() + ln_gamma_upper)
    }
}

#[derive(Clone, Debug)]
struct Normalization {
    partial_sum: f64,
    remainder: f64,
    truncation: u64,
}

impl Normalization {
    fn compute(alpha: f64, c2: f64, d: usize, tol: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return param(format!("alpha must be positive, got {alpha}"));
        }
        if !(c2 > 0.0 && c2.is_finite()) {
            return param(format!("c2 must be positive, got {c2}"));
        }
        if d == 0 {
            return param("dimension must be at least 1");
        }
        if !(tol > 0.0) {
            return param(format!("tolerance must be positive, got {tol}"));
        }
        let mut k_trunc: u64 = 1;
        loop {
            if let Some(lb) = log_remainder_bound(alpha, c2, d, k_trunc) {
                // sum is at least the k = 0 term, which is 1
                let partial = partial_sum(alpha, c2, d, k_trunc);
                if lb <= (tol * partial).ln() {
                    return Ok(Normalization { partial_sum: partial, remainder: lb.exp(), truncation: k_trunc });
                }
            }
            if k_trunc > MAX_TRUNCATION {
                return param(format!(
                    "jump law (alpha={alpha}, c2={c2}, d={d}) too heavy-tailed to normalise at tol {tol}"
                ));
            }
            k_trunc = (k_trunc * 2).max(k_trunc + 1);
        }
    }
}

/// `sum_{k=0}^{K} shell(d,k) exp(-c2 k^alpha)`, summed from the small end.
fn partial_sum(alpha: f64, c2: f64, d: usize, k_trunc: u64) -> f64 {
    (0..=k_trunc).rev().map(|k| log_shell_term(alpha, c2, d, k).exp()).sum()
}

/// `(c1, tail_bound)`: `c1 = 1/S_K` and `tail_bound >= S - S_K`, with
/// `tail_bound <= tol * S_K`.
pub fn normalizing_constant(alpha: f64, c2: f64, d: usize, tol: f64) -> Result<(f64, f64)> {
    let n = Normalization::compute(alpha, c2, d, tol)?;
    Ok((1.0 / n.partial_sum, n.remainder))
}

/// `ln f(k) = ln c1 - c2 k^alpha`.
#[inline]
pub fn log_jump_weight(params: &ModelParams, k: u64) -> f64 {
    params.c1.ln() - params.c2 * (k as f64).powf(params.alpha)
}

/// `ln f(0..=radius)`.
pub fn log_jump_table(params: &ModelParams, radius: u64) -> Vec<f64> {
    (0..=radius).map(|k| log_jump_weight(params, k)).collect()
}

/// Certified upper bound on `sum_{|x|_1 > L} f(|x|_1)`, non-increasing in `L`.
pub fn kernel_tail_mass(params: &ModelParams, l: u64) -> f64 {
    let k0 = params.truncation;
    if l >= k0 {
        let lb = log_remainder_bound(params.alpha, params.c2, params.d, l)
            .expect("remainder bound applies beyond the normalisation truncation");
        return params.c1 * lb.exp();
    }
    let mut acc = params.log_remainder.exp();
    for k in (l + 1..=k0).rev() {
        acc += log_shell_term(params.alpha, params.c2, params.d, k).exp();
    }
    params.c1 * acc
}

/// `kernel_tail_mass(params, r)` for every `r` in `0..=radius`, built by a
/// single backward accumulation.
pub fn tail_mass_table(params: &ModelParams, radius: u64) -> Vec<f64> {
    let mut table = vec![0.0; radius as usize + 1];
    let mut raw = kernel_tail_mass(params, radius) / params.c1;
    table[radius as usize] = params.c1 * raw;
    for r in (0..radius).rev() {
        raw += log_shell_term(params.alpha, params.c2, params.d, r + 1).exp();
        table[r as usize] = params.c1 * raw;
    }
    table
}

/// Smallest radius `L` with `horizon * kernel_tail_mass(L) <= target`.
pub fn radius_for_leak(params: &ModelParams, horizon: u32, target: f64) -> Result<u64> {
    if !(target > 0.0) {
        return param(format!("leak target must be positive, got {target}"));
    }
    let ok = |l: u64| horizon as f64 * kernel_tail_mass(params, l) <= target;
    let mut hi = 1u64;
    while !ok(hi) {
        hi *= 2;
        if hi > MAX_TRUNCATION {
            return param(format!("no jump radius reaches leak target {target}"));
        }
    }
    let mut lo = 0u64;
    if ok(0) {
        return Ok(0);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{l1_i, LatticeBox};

    fn brute_shell(d: usize, k: u64) -> u128 {
        LatticeBox::centered(d, k as i64).sites().filter(|x| l1_i(x, &vec![0; d]) == k).count() as u128
    }

    #[test]
    fn shell_counts_match_enumeration() {
        assert_eq!(l1_shell_count(1, 2), 2);
        assert_eq!(l1_shell_count(2, 1), 4);
        assert_eq!(l1_shell_count(2, 2), 8);
        assert_eq!(l1_shell_count(3, 2), 18);
        for d in 1..=4 {
            for k in 0..=12 {
                if d == 4 && k > 8 {
                    continue;
                }
                assert_eq!(l1_shell_count(d, k), brute_shell(d, k), "d={d} k={k}");
            }
        }
    }

    #[test]
    fn geometric_case_gives_one_third() {
        let (c1, tail) = normalizing_constant(1.0, 2f64.ln(), 1, 1e-14).unwrap();
        assert!((c1 - 1.0 / 3.0).abs() < 1e-13);
        assert!(tail <= 1e-14 / c1);
    }

    #[test]
    fn stretched_case_matches_long_direct_sum() {
        let (c1, _) = normalizing_constant(0.5, 1.0, 1, 1e-15).unwrap();
        let direct: f64 = 1.0 + 2.0 * (1..=1_000_000u64).rev().map(|k| (-(k as f64).sqrt()).exp()).sum::<f64>();
        assert!((c1 - 1.0 / direct).abs() < 1e-12);
    }

    #[test]
    fn weights_sum_to_one() {
        for &(alpha, c2, d) in &[(0.5, 1.0, 1), (1.0, 1.0, 2), (1.5, 0.7, 3), (0.8, 2.0, 2)] {
            let tol = 1e-13;
            let p = ModelParams::new(alpha, c2, d, 0.5, Beta::Finite(0.0)).unwrap();
            let (c1, _) = normalizing_constant(alpha, c2, d, tol).unwrap();
            let k = p.truncation.max(200);
            let s: f64 = (0..=k).rev().map(|k| l1_shell_count(d, k) as f64 * c1 * (-c2 * (k as f64).powf(alpha)).exp()).sum();
            assert!((s - 1.0).abs() <= 2.0 * tol + 1e-15, "{alpha} {c2} {d}: {s}");
        }
    }

    #[test]
    fn log_weights() {
        let p = ModelParams::new(1.0, 2f64.ln(), 1, 0.5, Beta::Finite(0.0)).unwrap();
        assert!((log_jump_weight(&p, 0) - p.c1.ln()).abs() < 1e-15);
        let expect = (1.0f64 / 3.0).ln() - 3.0 * 2f64.ln();
        assert!((log_jump_weight(&p, 3) - expect).abs() < 1e-12);
        let t = log_jump_table(&p, 20);
        assert!(t.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn tail_bound_is_valid_and_monotone() {
        let p = ModelParams::new(1.0, 2f64.ln(), 1, 0.5, Beta::Finite(0.0)).unwrap();
        assert!(kernel_tail_mass(&p, 0) >= 1.0 - p.c1 - 1e-15);
        for l in 1..=50u64 {
            // exact: 2 c1 sum_{k>l} 2^{-k} = 2 c1 2^{-l}
            let exact = 2.0 * p.c1 * 2f64.powi(-(l as i32));
            assert!(kernel_tail_mass(&p, l) >= exact * (1.0 - 1e-12), "l={l}");
        }
        assert!(kernel_tail_mass(&p, 1000) < 1e-200);
        let mut prev = f64::INFINITY;
        for l in 0..200 {
            let t = kernel_tail_mass(&p, l);
            assert!(t <= prev);
            prev = t;
        }
        let q = ModelParams::new(0.5, 1.0, 2, 0.5, Beta::Finite(0.0)).unwrap();
        let table = tail_mass_table(&q, 300);
        assert!(table.windows(2).all(|w| w[1] <= w[0]));
        for r in [0u64, 10, 100, 300] {
            let t = kernel_tail_mass(&q, r);
            assert!((table[r as usize] - t).abs() <= 1e-12 * t.max(1e-300));
        }
    }

    #[test]
    fn leak_radius_meets_target() {
        let p = ModelParams::new(1.0, 1.0, 1, 0.5, Beta::Finite(0.0)).unwrap();
        let l = radius_for_leak(&p, 10, 1e-9).unwrap();
        assert!(10.0 * kernel_tail_mass(&p, l) <= 1e-9);
        assert!(10.0 * kernel_tail_mass(&p, l - 1) > 1e-9);
    }

    #[test]
    fn beta_serde_uses_literal_neg_inf() {
        assert_eq!(serde_json::to_string(&Beta::NegInf).unwrap(), "\"-inf\"");
        let b: Beta = serde_json::from_str("\"-inf\"").unwrap();
        assert_eq!(b, Beta::NegInf);
        let b: Beta = serde_json::from_str("-2").unwrap();
        assert_eq!(b, Beta::Finite(-2.0));
        assert!(serde_json::from_str::<Beta>("\"inf\"").is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.5, 1.0, 1, 0.0, Beta::NegInf).is_err());
        assert!(ModelParams::new(-1.0, 1.0, 1, 0.5, Beta::NegInf).is_err());
        let p = ModelParams::new(1.5, 1.0, 1, 0.5, Beta::NegInf).unwrap();
        assert!(!p.alpha_below_d());
        let json = serde_json::to_string(&p).unwrap();
        let back: ModelParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert!((scaling_factor(0.5, 1) - 2f64.ln()).abs() < 1e-15);
        assert!(scaling_factor(0.999, 1) < scaling_factor(0.9, 1));
    }
}
