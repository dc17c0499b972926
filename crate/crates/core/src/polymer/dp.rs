use serde::{Deserialize, Serialize};

use crate::env::BernoulliField;
use crate::error::{param, Error, Result};
use crate::kernel::{log_jump_table, radius_for_leak, tail_mass_table, Beta, ModelParams};
use crate::lattice::{l1_ball, LatticeBox};

/// Largest l1 ball materialised as an offset list (d >= 2).
const MAX_BALL_OFFSETS: usize = 1 << 20;

/// Maximal jump length retained by the recursion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpRadius {
    /// Smallest `L` with `n * kernel_tail_mass(L) <= target`.
    LeakTarget(f64),
    Fixed(u64),
}

/// Spatial window of each slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowPolicy {
    /// Slice `k` covers `[-kL, kL]^d`, optionally intersected with `[-clip, clip]^d`.
    Grow { clip: Option<u64> },
    /// The same box for every slice `k >= 1`.
    Fixed(LatticeBox),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub radius: JumpRadius,
    pub window: WindowPolicy,
    /// At `beta = -inf` an infeasible window doubles the radius (and clip)
    /// until the radius would exceed this cap.
    pub expand_cap: u64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            radius: JumpRadius::LeakTarget(1e-9),
            window: WindowPolicy::Grow { clip: None },
            expand_cap: 1 << 12,
        }
    }
}

impl TruncationPolicy {
    /// Every path confined to `window` with jumps up to `radius`.
    pub fn fixed(radius: u64, window: LatticeBox) -> Self {
        TruncationPolicy { radius: JumpRadius::Fixed(radius), window: WindowPolicy::Fixed(window), expand_cap: radius }
    }

    pub fn with_radius(mut self, radius: u64) -> Self {
        self.radius = JumpRadius::Fixed(radius);
        self
    }

    pub fn with_clip(mut self, clip: u64) -> Self {
        self.window = WindowPolicy::Grow { clip: Some(clip) };
        self
    }

    /// Clip half-width `ceil(c * n^{1 + 1/alpha})`.
    pub fn clip_for(c: f64, n: u32, alpha: f64) -> u64 {
        (c * (n as f64).powf(1.0 + 1.0 / alpha)).ceil() as u64
    }
}

/// Truncation after the radius has been fixed (and possibly expanded).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub radius: u64,
    pub clip: Option<u64>,
    pub fixed: Option<LatticeBox>,
}

impl Resolved {
    pub fn new(params: &ModelParams, n: u32, policy: &TruncationPolicy) -> Result<Self> {
        let radius = match policy.radius {
            JumpRadius::Fixed(l) => l,
            JumpRadius::LeakTarget(t) => radius_for_leak(params, n, t)?,
        };
        let (clip, fixed) = match &policy.window {
            WindowPolicy::Grow { clip } => (*clip, None),
            WindowPolicy::Fixed(b) => {
                if b.dim() != params.d {
                    return param("window dimension does not match the model");
                }
                (None, Some(b.clone()))
            }
        };
        Ok(Resolved { radius, clip, fixed })
    }

    /// Window of slice `k`; slice 0 is the origin.
    pub fn window(&self, d: usize, k: u32) -> LatticeBox {
        if k == 0 {
            return LatticeBox::origin(d);
        }
        if let Some(b) = &self.fixed {
            return b.clone();
        }
        let grown = LatticeBox::centered(d, (self.radius as i64).saturating_mul(k as i64));
        match self.clip {
            Some(c) => grown.intersect(&LatticeBox::centered(d, c as i64)).expect("both boxes contain the origin"),
            None => grown,
        }
    }

    /// l1 diameter of the hull of the origin and the windows up to slice `n`.
    fn max_diameter(&self, d: usize, n: u32) -> u64 {
        let w = self.window(d, n);
        (0..d).map(|i| (w.hi[i].max(0) - w.lo[i].min(0)) as u64).sum()
    }
}

/// Log-weights over one slice, with the accumulated bound on lost mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogWeightSlice {
    pub k: u32,
    pub window: LatticeBox,
    pub values: Vec<f64>,
    /// Log of the absolute mass bound lost to truncation up to this slice.
    pub log_leak: f64,
}

impl LogWeightSlice {
    pub fn origin(d: usize) -> Self {
        LogWeightSlice { k: 0, window: LatticeBox::origin(d), values: vec![0.0], log_leak: f64::NEG_INFINITY }
    }

    /// `log sum_x exp(values[x])`.
    pub fn log_total(&self) -> f64 {
        log_sum_exp(&self.values)
    }

    pub fn finite_indices(&self) -> Vec<usize> {
        self.values.iter().enumerate().filter_map(|(i, v)| (*v > f64::NEG_INFINITY).then_some(i)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub log_z: f64,
    pub n: u32,
    /// Bound on the lost mass relative to the retained mass: the untruncated
    /// `Z` lies in `[Z_trunc, Z_trunc (1 + leak_bound)]`.
    pub leak_bound: f64,
    pub radius: u64,
    pub clip: Option<u64>,
    pub params: ModelParams,
}

impl PartitionResult {
    pub fn free_energy(&self) -> f64 {
        self.log_z / self.n as f64
    }

    /// Upper end of the certified interval for `log Z`.
    pub fn log_z_upper(&self) -> f64 {
        self.log_z + self.leak_bound.ln_1p()
    }
}

/// Two-pass log-sum-exp in slice order.
pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    let mut s = 0.0;
    for &v in values {
        s += (v - m).exp();
    }
    m + s.ln()
}

#[inline]
pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Transfer-matrix machinery for one model, horizon and truncation.
pub(crate) struct Engine<'a> {
    pub params: &'a ModelParams,
    pub n: u32,
    pub res: Resolved,
    /// `ln f(r)` for `r` up to the useful radius.
    pub lf: Vec<f64>,
    log_tail: Vec<f64>,
    offsets: Option<Vec<(Vec<i64>, u64)>>,
}

impl<'a> Engine<'a> {
    pub fn new(params: &'a ModelParams, n: u32, res: Resolved) -> Self {
        let d = params.d;
        let useful = res.radius.min(res.max_diameter(d, n));
        let lf = log_jump_table(params, useful);
        let log_tail = tail_mass_table(params, useful).iter().map(|t| t.ln()).collect();
        let offsets = (d >= 2)
            .then(|| {
                let count = (0..=useful).map(|r| crate::kernel::l1_shell_count(d, r)).sum::<u128>();
                (count <= MAX_BALL_OFFSETS as u128).then(|| l1_ball(d, useful))
            })
            .flatten();
        Engine { params, n, res, lf, log_tail, offsets }
    }

    pub fn d(&self) -> usize {
        self.params.d
    }

    /// Largest jump that can occur between windows.
    pub fn reach(&self) -> u64 {
        (self.lf.len() - 1) as u64
    }

    pub fn window(&self, k: u32) -> LatticeBox {
        self.res.window(self.d(), k)
    }

    /// Calls `f(y_index, |y - x|_1)` for every finite entry `y` of `prev`
    /// within jump range of `x`, in ascending flat index.
    #[inline]
    pub fn visit_sources(&self, prev: &LogWeightSlice, finite: &[usize], x: &[i64], y: &mut [i64], mut f: impl FnMut(usize, u64)) {
        let pw = &prev.window;
        let l = self.reach() as i64;
        let lo0 = pw.lo[0].max(x[0] - l);
        let hi0 = pw.hi[0].min(x[0] + l);
        if lo0 > hi0 {
            return;
        }
        if pw.dim() == 1 {
            let span = (hi0 - lo0 + 1) as usize;
            let base = pw.lo[0];
            if span <= 2 * finite.len() {
                for yv in lo0..=hi0 {
                    let yi = (yv - base) as usize;
                    if prev.values[yi] > f64::NEG_INFINITY {
                        f(yi, yv.abs_diff(x[0]));
                    }
                }
            } else {
                let a = finite.partition_point(|&i| (i as i64) < lo0 - base);
                let b = finite.partition_point(|&i| (i as i64) <= hi0 - base);
                for &yi in &finite[a..b] {
                    f(yi, (yi as i64 + base).abs_diff(x[0]));
                }
            }
            return;
        }
        if let Some(offsets) = self.offsets.as_ref().filter(|o| o.len() <= 2 * finite.len()) {
            for (off, r) in offsets {
                for i in 0..x.len() {
                    y[i] = x[i] + off[i];
                }
                if let Some(yi) = pw.try_index_of(y) {
                    if prev.values[yi] > f64::NEG_INFINITY {
                        f(yi, *r);
                    }
                }
            }
            return;
        }
        let stride0 = pw.len() / pw.extent(0);
        let first = (lo0 - pw.lo[0]) as usize * stride0;
        let last = (hi0 - pw.lo[0] + 1) as usize * stride0;
        let a = finite.partition_point(|&i| i < first);
        let b = finite.partition_point(|&i| i < last);
        for &yi in &finite[a..b] {
            pw.coords_of(yi, y);
            let r = crate::lattice::l1_i(x, y);
            if r <= l as u64 {
                f(yi, r);
            }
        }
    }

    /// One step of the recursion into slice `k`:
    /// `W_k(x) = log sum_y exp(W_{k-1}(y) + ln f(|y-x|) + edge(r, y, x)) + site[x]`,
    /// with `site[x] = -inf` marking excluded sites.
    pub fn step<E: Fn(u64, usize, usize) -> f64>(
        &self,
        prev: &LogWeightSlice,
        k: u32,
        site: &[f64],
        edge: E,
        track_leak: bool,
    ) -> LogWeightSlice {
        let window = self.window(k);
        let d = self.d();
        let finite = prev.finite_indices();
        let mut values = vec![f64::NEG_INFINITY; window.len()];
        let mut x = vec![0i64; d];
        let mut y = vec![0i64; d];
        let mut terms: Vec<f64> = Vec::new();
        for (xi, out) in values.iter_mut().enumerate() {
            if site[xi] == f64::NEG_INFINITY {
                continue;
            }
            window.coords_of(xi, &mut x);
            terms.clear();
            self.visit_sources(prev, &finite, &x, &mut y, |yi, r| {
                terms.push(prev.values[yi] + self.lf[r as usize] + edge(r, yi, xi));
            });
            let v = log_sum_exp(&terms);
            if v > f64::NEG_INFINITY {
                *out = v + site[xi];
            }
        }
        let log_leak = if track_leak {
            let mut lost = Vec::with_capacity(finite.len());
            for &yi in &finite {
                prev.window.coords_of(yi, &mut y);
                let rho = window.inner_radius(&y);
                let lt = if rho < 0 { 0.0 } else { self.log_tail[(rho as u64).min(self.reach()) as usize] };
                lost.push(prev.values[yi] + lt);
            }
            let cont = self.params.beta.positive_part() * (self.n - k + 1) as f64;
            log_add(prev.log_leak, log_sum_exp(&lost) + cont)
        } else {
            f64::INFINITY
        };
        LogWeightSlice { k, window, values, log_leak }
    }
}

/// `beta * eta` over `window`, with `-inf` at closed sites when `beta = -inf`.
pub(crate) fn site_terms(field: &BernoulliField, beta: Beta, k: u32, window: &LatticeBox) -> Result<Vec<f64>> {
    match beta {
        Beta::NegInf => {
            let mut v = vec![f64::NEG_INFINITY; window.len()];
            for i in field.open_sites(k, window)? {
                v[i] = 0.0;
            }
            Ok(v)
        }
        Beta::Finite(b) => Ok(field.slice(k, window)?.into_iter().map(|e| if e == 0 { 0.0 } else { b }).collect()),
    }
}

pub(crate) fn check_inputs(params: &ModelParams, field: &BernoulliField, n: u32) -> Result<()> {
    if n == 0 {
        return param("n must be at least 1");
    }
    if field.dim() != params.d {
        return param(format!("field dimension {} does not match d = {}", field.dim(), params.d));
    }
    Ok(())
}

/// Forward pass; keeps every slice when `keep`, else only the last one.
pub(crate) fn forward(engine: &Engine<'_>, field: &BernoulliField, upto: u32, keep: bool) -> Result<Vec<LogWeightSlice>> {
    let mut slices = vec![LogWeightSlice::origin(engine.d())];
    for k in 1..=upto {
        let window = engine.window(k);
        let site = site_terms(field, engine.params.beta, k, &window)?;
        let next = engine.step(slices.last().unwrap(), k, &site, |_, _, _| 0.0, true);
        if engine.params.beta.is_neg_inf() && next.values.iter().all(|v| *v == f64::NEG_INFINITY) {
            return Err(Error::Infeasible(format!(
                "slice {k}: no open site reachable with jump radius {}",
                engine.res.radius
            )));
        }
        if keep {
            slices.push(next);
        } else {
            slices[0] = next;
        }
    }
    Ok(slices)
}

/// Runs the forward pass, expanding the truncation at `beta = -inf` when a
/// slice has no reachable open site.
pub(crate) fn forward_expanding(
    params: &ModelParams,
    field: &BernoulliField,
    n: u32,
    policy: &TruncationPolicy,
    keep: bool,
) -> Result<(Vec<LogWeightSlice>, Resolved)> {
    check_inputs(params, field, n)?;
    let mut res = Resolved::new(params, n, policy)?;
    loop {
        let engine = Engine::new(params, n, res.clone());
        match forward(&engine, field, n, keep) {
            Ok(s) => return Ok((s, res)),
            Err(Error::Infeasible(msg)) if res.fixed.is_none() => {
                let next = (res.radius * 2).max(1);
                if next > policy.expand_cap {
                    return Err(Error::Infeasible(format!("{msg}; expansion cap {} reached", policy.expand_cap)));
                }
                res.radius = next;
                res.clip = res.clip.map(|c| c * 2);
            }
            Err(e) => return Err(e),
        }
    }
}

fn result_from(last: &LogWeightSlice, n: u32, res: &Resolved, params: &ModelParams) -> PartitionResult {
    let log_z = last.log_total();
    let leak_bound = if log_z == f64::NEG_INFINITY { f64::INFINITY } else { (last.log_leak - log_z).exp() };
    PartitionResult { log_z, n, leak_bound, radius: res.radius, clip: res.clip, params: params.clone() }
}

/// `log Z_n` for the inverse temperature `params.beta`.
pub fn log_partition(
    params: &ModelParams,
    field: &BernoulliField,
    n: u32,
    trunc: &TruncationPolicy,
) -> Result<PartitionResult> {
    let (slices, res) = forward_expanding(params, field, n, trunc, false)?;
    Ok(result_from(&slices[0], n, &res, params))
}

/// `log Z_n` with an already resolved truncation (no expansion).
pub fn log_partition_with(params: &ModelParams, field: &BernoulliField, n: u32, res: &Resolved) -> Result<PartitionResult> {
    check_inputs(params, field, n)?;
    let engine = Engine::new(params, n, res.clone());
    let slices = forward(&engine, field, n, false)?;
    Ok(result_from(&slices[0], n, res, params))
}

/// `|log Z(eta, beta) - beta n - log Z(1 - eta, -beta)|` under identical truncation.
pub fn flip_identity_check(
    params: &ModelParams,
    field: &BernoulliField,
    n: u32,
    trunc: &TruncationPolicy,
) -> Result<f64> {
    let Beta::Finite(beta) = params.beta else {
        return param("the flip identity needs a finite beta");
    };
    let res = Resolved::new(params, n, trunc)?;
    let a = log_partition_with(params, field, n, &res)?;
    let flipped = crate::env::flip_field(field.clone());
    let b = log_partition_with(&params.with_beta(Beta::Finite(-beta)), &flipped, n, &res)?;
    Ok((a.log_z - beta * n as f64 - b.log_z).abs())
}
