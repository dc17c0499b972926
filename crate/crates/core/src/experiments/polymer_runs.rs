use super::config::{bad, Coupling, SweepConfig};
use super::table::{CheckCount, Report, Table};
use super::{estimate, replicate, Progress};
use crate::env::{flip_field, make_bernoulli_field, superpose, BernoulliField};
use crate::error::Result;
use crate::kernel::Beta;
use crate::polymer::{log_budgeted_partition, log_partition, log_partition_with, BudgetRounding, Resolved};
use crate::rng::derive_seed;
use crate::stats::{Estimate, Frequency};

/// Allowed negative second difference of `beta -> log Z_n`.
pub const CONVEXITY_SLACK: f64 = 1e-6;
/// Allowed flip-identity residual.
pub const FLIP_TOLERANCE: f64 = 1e-8;
/// Largest gap between the rounded-up and rounded-down budget ratios before
/// the budget grid is reported as too coarse.
pub const BUDGET_GAP_WARNING: f64 = 0.01;

const ZETA_TAG: u64 = 0x7a65_7461;

/// Bernoulli fields for the sorted grid `ps` of one replica. Coupled fields
/// are stacked, `eta_{p_{i+1}} = eta_{p_i} v zeta_i` with `zeta_i` of
/// parameter `(p_{i+1} - p_i) / (1 - p_i)`, so they increase with `p`.
fn environments(cfg: &SweepConfig, seed: u64, ps: &[f64]) -> Result<Vec<BernoulliField>> {
    match cfg.coupling {
        Coupling::Independent => {
            ps.iter().map(|&p| make_bernoulli_field(derive_seed(seed, p.to_bits()), p, cfg.d)).collect()
        }
        Coupling::Coupled => {
            let mut out = vec![make_bernoulli_field(derive_seed(seed, 0), ps[0], cfg.d)?];
            for i in 1..ps.len() {
                let zp = (ps[i] - ps[i - 1]) / (1.0 - ps[i - 1]);
                let zeta = make_bernoulli_field(derive_seed(seed, ZETA_TAG + i as u64), zp, cfg.d)?;
                out.push(superpose(out[i - 1].clone(), zeta)?);
            }
            Ok(out)
        }
    }
}

/// Truncation shared by every run of one replica at horizon `n`: the
/// configured one, enlarged until the `beta = -inf` runs on all `fields`
/// are feasible. Sharing it keeps pathwise comparisons exact.
fn shared_truncation(cfg: &SweepConfig, p: f64, fields: &[&BernoulliField], n: u32, neg_inf: bool) -> Result<Resolved> {
    let policy = cfg.truncation.policy();
    let params = cfg.params(p, Beta::NegInf)?;
    let mut res = Resolved::new(&params, n, &policy)?;
    if neg_inf {
        for f in fields {
            let r = log_partition(&params, f, n, &policy)?;
            res.radius = res.radius.max(r.radius);
            res.clip = match (res.clip, r.clip) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            };
        }
    }
    Ok(res)
}

fn sorted_betas(betas: &[Beta]) -> Vec<Beta> {
    let mut b = betas.to_vec();
    b.sort_by(|x, y| x.as_f64().total_cmp(&y.as_f64()));
    b.dedup();
    b
}

struct FreeEnergySample {
    /// `[p][n][beta]`
    log_z: Vec<Vec<Vec<f64>>>,
    flip: Vec<Vec<Vec<Option<f64>>>>,
    leak: Vec<Vec<Vec<f64>>>,
}

/// `(1/n) log Z_n` over the `(p, beta, n)` grid with the flip-identity
/// residual, plus pathwise checks: monotonicity and convexity in `beta`,
/// monotonicity in `p` for `beta < 0` (coupled mode) and the flip identity.
pub fn free_energy_curve(cfg: &SweepConfig, progress: &Progress) -> Result<Report> {
    let ps = cfg.p_below_one()?;
    let betas = sorted_betas(&cfg.beta);
    let neg_inf = betas[0].is_neg_inf();
    let (samples, infeasible) = replicate(cfg, progress, "free-energy", |seed| {
        let fields = environments(cfg, seed, &ps)?;
        let all: Vec<&BernoulliField> = fields.iter().collect();
        let shared: Vec<Resolved> =
            cfg.n.iter().map(|&n| shared_truncation(cfg, ps[0], &all, n, neg_inf)).collect::<Result<_>>()?;
        let mut s = FreeEnergySample { log_z: Vec::new(), flip: Vec::new(), leak: Vec::new() };
        for (pi, &p) in ps.iter().enumerate() {
            let (mut zs, mut fs, mut ls) = (Vec::new(), Vec::new(), Vec::new());
            for (&n, res) in cfg.n.iter().zip(&shared) {
                let (mut z, mut f, mut l) = (Vec::new(), Vec::new(), Vec::new());
                for &beta in &betas {
                    let params = cfg.params(p, beta)?;
                    let r = log_partition_with(&params, &fields[pi], n, res)?;
                    f.push(match beta {
                        Beta::Finite(b) => {
                            let flipped = flip_field(fields[pi].clone());
                            let fp = cfg.params(1.0 - p, Beta::Finite(-b))?;
                            let rf = log_partition_with(&fp, &flipped, n, res)?;
                            Some((r.log_z - b * n as f64 - rf.log_z).abs())
                        }
                        Beta::NegInf => None,
                    });
                    z.push(r.log_z);
                    l.push(r.leak_bound);
                }
                zs.push(z);
                fs.push(f);
                ls.push(l);
            }
            s.log_z.push(zs);
            s.flip.push(fs);
            s.leak.push(ls);
        }
        Ok(s)
    })?;

    let mut report = Report::new("free-energy");
    let mut table = Table::new(
        "curve",
        &["p", "beta", "n", "replicas", "infeasible", "phi_mean", "phi_stderr", "flip_residual_max", "leak_max"],
    );
    for (pi, &p) in ps.iter().enumerate() {
        for (bi, &beta) in betas.iter().enumerate() {
            for (ni, &n) in cfg.n.iter().enumerate() {
                let e = estimate(&samples, |s| s.log_z[pi][ni][bi] / n as f64);
                let flip = samples.iter().flatten().filter_map(|s| s.flip[pi][ni][bi]).fold(f64::NAN, f64::max);
                let leak = samples.iter().flatten().map(|s| s.leak[pi][ni][bi]).fold(0.0, f64::max);
                table.push(vec![
                    p.into(),
                    beta.into(),
                    n.into(),
                    e.replicas.into(),
                    infeasible.into(),
                    e.mean.into(),
                    e.stderr.into(),
                    flip.into(),
                    leak.into(),
                ]);
            }
        }
    }
    report.tables.push(table);

    let mut mono = CheckCount::new("beta_monotone");
    let mut convex = CheckCount::new("beta_convex");
    let mut pmono = CheckCount::new("p_monotone");
    let mut flip = CheckCount::new("flip_identity");
    for s in samples.iter().flatten() {
        for pi in 0..ps.len() {
            for ni in 0..cfg.n.len() {
                let z = &s.log_z[pi][ni];
                for bi in 1..betas.len() {
                    mono.record(cfg.at_least(z[bi], z[bi - 1]), z[bi - 1] - z[bi]);
                }
                let finite: Vec<(f64, f64)> =
                    betas.iter().zip(z).filter_map(|(b, &v)| b.finite().map(|b| (b, v))).collect();
                for w in finite.windows(3) {
                    let (s1, s2) = ((w[1].1 - w[0].1) / (w[1].0 - w[0].0), (w[2].1 - w[1].1) / (w[2].0 - w[1].0));
                    let second = (s2 - s1) * (w[2].0 - w[0].0) / 2.0;
                    convex.record(cfg.at_least(second, -CONVEXITY_SLACK), -second);
                }
                for r in s.flip[pi][ni].iter().flatten() {
                    flip.record(cfg.at_least(FLIP_TOLERANCE, *r), *r);
                }
                if cfg.coupling == Coupling::Coupled && pi + 1 < ps.len() {
                    for (bi, beta) in betas.iter().enumerate() {
                        if beta.as_f64() < 0.0 {
                            let (lo, hi) = (s.log_z[pi][ni][bi], s.log_z[pi + 1][ni][bi]);
                            pmono.record(cfg.at_least(lo, hi), hi - lo);
                        }
                    }
                }
            }
        }
    }
    report.checks = vec![mono, convex, pmono, flip];
    Ok(report.finish())
}

/// For `q = p + offset` and `eta_check = eta v zeta` of parameter `q`: the
/// frequency of `(1/n)(log Z(eta, beta) - log Z(eta_check, -inf)) <= eps` at
/// the largest `n`, and the mean gap `phi(p, beta) - phi(q, -inf)`.
pub fn zero_temp_continuity(cfg: &SweepConfig, progress: &Progress) -> Result<Report> {
    let ps = cfg.p_below_one()?;
    let betas: Vec<Beta> = sorted_betas(&cfg.beta).into_iter().filter(|b| b.as_f64() <= 0.0).collect();
    if betas.is_empty() {
        return Err(bad("beta", "needs at least one value <= 0"));
    }
    let mut qs = Vec::new();
    for &p in &ps {
        let mut row = Vec::new();
        for &r in &cfg.q_offset {
            if p + r >= 1.0 {
                return Err(bad("q_offset", format!("p + offset must stay below 1 (p = {p}, offset = {r})")));
            }
            row.push(p + r);
        }
        qs.push(row);
    }
    let n = cfg.n_max();
    // [p][beta] and [p][q]
    let (samples, infeasible) = replicate(cfg, progress, "zero-temp", |seed| {
        let mut zb = Vec::new();
        let mut zq = Vec::new();
        for (pi, &p) in ps.iter().enumerate() {
            let eta = make_bernoulli_field(derive_seed(seed, pi as u64), p, cfg.d)?;
            let mut checks = Vec::new();
            for (qi, &q) in qs[pi].iter().enumerate() {
                let zeta = if q == p {
                    BernoulliField::constant(0, cfg.d)
                } else {
                    let tag = ZETA_TAG + (pi * qs[pi].len() + qi) as u64;
                    make_bernoulli_field(derive_seed(seed, tag), (q - p) / (1.0 - p), cfg.d)?
                };
                checks.push(superpose(eta.clone(), zeta)?);
            }
            let mut all: Vec<&BernoulliField> = checks.iter().collect();
            all.push(&eta);
            let res = shared_truncation(cfg, p, &all, n, true)?;
            let mut row = Vec::new();
            for &beta in &betas {
                row.push(log_partition_with(&cfg.params(p, beta)?, &eta, n, &res)?.log_z);
            }
            zb.push(row);
            let mut row = Vec::new();
            for (qi, &q) in qs[pi].iter().enumerate() {
                row.push(log_partition_with(&cfg.params(q, Beta::NegInf)?, &checks[qi], n, &res)?.log_z);
            }
            zq.push(row);
        }
        Ok((zb, zq))
    })?;

    let mut report = Report::new("zero-temp");
    if !cfg.params(ps[0], Beta::NegInf)?.alpha_below_d() {
        report.warnings.push(format!("alpha = {} is not below d = {}", cfg.alpha, cfg.d));
    }
    let mut table = Table::new(
        "events",
        &[
            "p", "q", "beta", "n", "eps", "replicas", "infeasible", "hits", "freq", "ci_low", "ci_high", "gap_mean",
            "gap_stderr",
        ],
    );
    let mut floor = CheckCount::new("zero_temperature_floor");
    for (pi, &p) in ps.iter().enumerate() {
        for (qi, &q) in qs[pi].iter().enumerate() {
            for (bi, &beta) in betas.iter().enumerate() {
                let gaps: Vec<f64> =
                    samples.iter().flatten().map(|(zb, zq)| (zb[pi][bi] - zq[pi][qi]) / n as f64).collect();
                for (zb, zq) in samples.iter().flatten() {
                    floor.record(cfg.at_least(zb[pi][bi], zq[pi][qi]), zq[pi][qi] - zb[pi][bi]);
                }
                let g = Estimate::from_values(&gaps, false);
                for &eps in &cfg.eps {
                    let f = Frequency::new(gaps.iter().filter(|&&v| v <= eps).count(), gaps.len());
                    table.push(vec![
                        p.into(),
                        q.into(),
                        beta.into(),
                        n.into(),
                        eps.into(),
                        gaps.len().into(),
                        infeasible.into(),
                        f.hits.into(),
                        f.freq.into(),
                        f.ci_low.into(),
                        f.ci_high.into(),
                        g.mean.into(),
                        g.stderr.into(),
                    ]);
                }
            }
        }
    }
    report.tables.push(table);
    report.checks.push(floor);
    Ok(report.finish())
}

/// `P[exp(beta H_n); D_n <= delta n] / Z_n` bracketed between the
/// rounded-up (lower) and rounded-down (upper) budget discretizations.
pub fn tilted_mass_check(cfg: &SweepConfig, progress: &Progress) -> Result<Report> {
    let ps = cfg.p_below_one()?;
    let betas = sorted_betas(&cfg.beta);
    let neg_inf = betas[0].is_neg_inf();
    // [p][n][beta][delta] -> (low, high)
    let (samples, infeasible) = replicate(cfg, progress, "tilted-mass", |seed| {
        let mut out = Vec::new();
        for (pi, &p) in ps.iter().enumerate() {
            let field = make_bernoulli_field(derive_seed(seed, pi as u64), p, cfg.d)?;
            let mut per_n = Vec::new();
            for &n in &cfg.n {
                let res = shared_truncation(cfg, p, &[&field], n, neg_inf)?;
                let mut per_b = Vec::new();
                for &beta in &betas {
                    let params = cfg.params(p, beta)?;
                    let log_z = log_partition_with(&params, &field, n, &res)?.log_z;
                    let mut per_d = Vec::new();
                    for &delta in &cfg.delta {
                        let budget = delta * n as f64;
                        let ratio = |rounding| -> Result<f64> {
                            let lb = log_budgeted_partition(
                                &params,
                                &field,
                                n,
                                &res,
                                budget,
                                cfg.budget_levels,
                                rounding,
                                cfg.search_cap,
                            )?;
                            Ok((lb - log_z).exp())
                        };
                        per_d.push((ratio(BudgetRounding::Up)?, ratio(BudgetRounding::Down)?));
                    }
                    per_b.push(per_d);
                }
                per_n.push(per_b);
            }
            out.push(per_n);
        }
        Ok(out)
    })?;

    let mut report = Report::new("tilted-mass");
    if !cfg.params(ps[0], Beta::NegInf)?.alpha_below_d() {
        report.warnings.push(format!("alpha = {} is not below d = {}", cfg.alpha, cfg.d));
    }
    let mut table = Table::new(
        "ratio",
        &[
            "p",
            "beta",
            "delta",
            "n",
            "levels",
            "replicas",
            "infeasible",
            "ratio_low_mean",
            "ratio_low_stderr",
            "ratio_high_mean",
            "ratio_high_stderr",
            "bracket_gap_max",
        ],
    );
    let mut bracket = CheckCount::new("ratio_bracket");
    for (pi, &p) in ps.iter().enumerate() {
        for (bi, &beta) in betas.iter().enumerate() {
            for (di, &delta) in cfg.delta.iter().enumerate() {
                for (ni, &n) in cfg.n.iter().enumerate() {
                    let lo = estimate(&samples, |s| s[pi][ni][bi][di].0);
                    let hi = estimate(&samples, |s| s[pi][ni][bi][di].1);
                    let mut gap = 0.0f64;
                    for s in samples.iter().flatten() {
                        let (l, h) = s[pi][ni][bi][di];
                        gap = gap.max(h - l);
                        bracket.record(cfg.at_least(h, l) && cfg.at_least(1.0, h), (l - h).max(h - 1.0));
                    }
                    if gap > BUDGET_GAP_WARNING {
                        report.warnings.push(format!(
                            "budget grid too coarse at p = {p}, beta = {beta}, delta = {delta}, n = {n}: \
                             bracket gap {gap:.3e}"
                        ));
                    }
                    table.push(vec![
                        p.into(),
                        beta.into(),
                        delta.into(),
                        n.into(),
                        cfg.budget_levels.into(),
                        lo.replicas.into(),
                        infeasible.into(),
                        lo.mean.into(),
                        lo.stderr.into(),
                        hi.mean.into(),
                        hi.stderr.into(),
                        gap.into(),
                    ]);
                }
            }
        }
    }
    report.tables.push(table);
    report.checks.push(bracket);
    Ok(report.finish())
}

/// `1 - (1-p)^{2R-1}`: probability that `2R - 1` consecutive sites contain
/// an open one.
pub fn block_open_probability(p: f64, r: u32) -> f64 {
    1.0 - (1.0 - p).powi(2 * r as i32 - 1)
}

/// Block argument: the smallest `R` in the grid whose open-block probability
/// reaches the percolation threshold, the bound `-c2 3^alpha R^alpha`, and
/// the check `phi_n(p, -inf) >= bound` on every replica.
pub fn block_lower_bound(cfg: &SweepConfig, progress: &Progress) -> Result<Report> {
    let ps = cfg.p_below_one()?;
    let mut rs = cfg.r.clone();
    rs.sort_unstable();
    rs.dedup();
    let mut chosen = Vec::new();
    for &p in &ps {
        let Some(&r) = rs.iter().find(|&&r| block_open_probability(p, r) >= cfg.percolation_threshold) else {
            return Err(bad("r", format!("no block size reaches the percolation threshold at p = {p}")));
        };
        chosen.push(r);
    }
    let n_max = cfg.n_max();
    // empirical open-block counts use disjoint blocks: x even, |x| <= BLOCKS
    const BLOCKS: i64 = 16;
    let (samples, infeasible) = replicate(cfg, progress, "block-bound", |seed| {
        let mut phis = Vec::new();
        let mut opens = Vec::new();
        for (pi, &p) in ps.iter().enumerate() {
            let field = make_bernoulli_field(derive_seed(seed, pi as u64), p, cfg.d)?;
            let mut open = Vec::new();
            for &r in &rs {
                let (mut hits, mut total) = (0usize, 0usize);
                for m in 1..=n_max {
                    for x in (-BLOCKS..=BLOCKS).step_by(2) {
                        let c = r as i64 * x;
                        let mut site = vec![0i64; cfg.d];
                        let mut any = false;
                        for y in c - r as i64 + 1..c + r as i64 {
                            site[0] = y;
                            if field.eval(m, &site)? == 0 {
                                any = true;
                                break;
                            }
                        }
                        hits += any as usize;
                        total += 1;
                    }
                }
                open.push((hits, total));
            }
            opens.push(open);
            let mut row = Vec::new();
            for &n in &cfg.n {
                let params = cfg.params(p, Beta::NegInf)?;
                row.push(log_partition(&params, &field, n, &cfg.truncation.policy())?.log_z / n as f64);
            }
            phis.push(row);
        }
        Ok((phis, opens))
    })?;

    let mut report = Report::new("block-bound");
    let mut blocks = Table::new("blocks", &["p", "r", "closed_form", "empirical", "ci_low", "ci_high", "selected"]);
    for (pi, &p) in ps.iter().enumerate() {
        for (ri, &r) in rs.iter().enumerate() {
            let hits = samples.iter().flatten().map(|s| s.1[pi][ri].0).sum();
            let total = samples.iter().flatten().map(|s| s.1[pi][ri].1).sum();
            let f = Frequency::new(hits, total);
            blocks.push(vec![
                p.into(),
                r.into(),
                block_open_probability(p, r).into(),
                f.freq.into(),
                f.ci_low.into(),
                f.ci_high.into(),
                (r == chosen[pi]).into(),
            ]);
        }
    }
    let mut bounds = Table::new(
        "bound",
        &[
            "p", "n", "r", "bound", "bound_with_c1", "replicas", "infeasible", "phi_mean", "phi_stderr", "phi_min",
        ],
    );
    let mut check = CheckCount::new("phi_above_block_bound");
    for (pi, &p) in ps.iter().enumerate() {
        let r = chosen[pi];
        let bound = -cfg.c2 * 3f64.powf(cfg.alpha) * (r as f64).powf(cfg.alpha);
        let log_c1 = cfg.params(p, Beta::NegInf)?.log_c1();
        for (ni, &n) in cfg.n.iter().enumerate() {
            let e = estimate(&samples, |s| s.0[pi][ni]);
            let min = samples.iter().flatten().map(|s| s.0[pi][ni]).fold(f64::INFINITY, f64::min);
            for s in samples.iter().flatten() {
                check.record(cfg.at_least(s.0[pi][ni], bound), bound - s.0[pi][ni]);
            }
            bounds.push(vec![
                p.into(),
                n.into(),
                r.into(),
                bound.into(),
                (log_c1 + bound).into(),
                e.replicas.into(),
                infeasible.into(),
                e.mean.into(),
                e.stderr.into(),
                min.into(),
            ]);
        }
    }
    report.tables.push(blocks);
    report.tables.push(bounds);
    report.checks.push(check);
    Ok(report.finish())
}
