use super::config::{Coupling, SweepConfig};
use super::table::{CheckCount, Report, Table};
use super::{estimate, replicate, Progress};
use crate::env::{couple_bernoulli_from_poisson, scaled_vacancy_process, FieldRef, PoissonField};
use crate::error::Result;
use crate::fpp::{
    comparison_residuals, concentration_tail, greedy_passage, passage_time_auto, regularize, time_constant_estimate,
    uniform_bound, ProcessKind,
};
use crate::kernel::{scaling_factor, Beta};
use crate::polymer::{log_partition_with, Resolved};
use crate::rng::{derive_seed, replica_seed};
use crate::stats::{fit_slope, Estimate};

const MU1_REFERENCE_TAG: u64 = 0x006d_7531;

fn poisson(cfg: &SweepConfig, seed: u64, n: u32) -> Result<PoissonField> {
    ProcessKind { d: cfg.d, p: 1.0, coupled: true }.poisson_field(seed, n)
}

fn coupled_only(cfg: &SweepConfig, report: &mut Report) {
    if cfg.coupling == Coupling::Independent {
        report.warnings.push("coupled sampling is required here and was used instead of independent".into());
    }
}

struct DensitySample {
    t1: f64,
    /// per p: (log Z_n(-inf), T_n(omega_p), lower-bound right-hand side)
    per_p: Vec<(f64, f64, f64)>,
}

/// Near `p = 1`: `phi_n(p, -inf)`, its rescaling `-s_p^alpha phi / c2`, the
/// passage-time constants `T_n(omega_p)/n` and `T_n(omega_1)/n` on coupled
/// samples, and the pathwise bound
/// `log Z_n(-inf) >= n log c1 - c2 s_p^{-alpha} T_n(omega_p)`.
///
/// The bound comes from the walk that follows the minimizer of
/// `T_n(omega_p)` on the lattice, so the truncation is widened to contain it.
pub fn high_density_sweep(cfg: &SweepConfig, progress: &Progress) -> Result<Report> {
    let ps = cfg.p_below_one()?;
    let mut report = Report::new("high-density");
    coupled_only(cfg, &mut report);
    let mut per_n = Vec::new();
    for &n in &cfg.n {
        per_n.push(replicate(cfg, progress, "high-density", |seed| {
            let pf = poisson(cfg, seed, n)?;
            let t1 = passage_time_auto(&pf, n, cfg.alpha, cfg.max_search)?.t_n;
            let mut per_p = Vec::new();
            for &p in &ps {
                let params = cfg.params(p, Beta::NegInf)?;
                let s_p = scaling_factor(p, cfg.d);
                let eta = couple_bernoulli_from_poisson(pf.clone(), p)?;
                let omega = scaled_vacancy_process(FieldRef::Bernoulli(&eta), p)?;
                let pr = passage_time_auto(&omega, n, cfg.alpha, cfg.max_search)?;
                let sites: Vec<i64> = pr.minimizer.sites.iter().map(|v| (v / s_p).round() as i64).collect();
                let mut longest = 0u64;
                for (a, b) in sites.chunks(cfg.d).zip(sites.chunks(cfg.d).skip(1)) {
                    longest = longest.max(a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).sum());
                }
                let extent = sites.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
                let mut res = Resolved::new(&params, n, &cfg.truncation.policy())?;
                res.radius = res.radius.max(longest);
                res.clip = res.clip.map(|c| c.max(extent));
                let log_z = log_partition_with(&params, &eta, n, &res)?.log_z;
                let rhs = n as f64 * params.log_c1() - cfg.c2 * s_p.powf(-cfg.alpha) * pr.t_n;
                per_p.push((log_z, pr.t_n, rhs));
            }
            Ok(DensitySample { t1, per_p })
        })?);
    }

    let mut table = Table::new(
        "sweep",
        &[
            "p",
            "n",
            "s_p",
            "replicas",
            "infeasible",
            "phi_mean",
            "phi_stderr",
            "rescaled_mean",
            "rescaled_stderr",
            "mu_p_mean",
            "mu_p_stderr",
            "mu1_mean",
            "mu1_stderr",
            "min_margin",
        ],
    );
    let mut check = CheckCount::new("lower_bound_identity");
    for (pi, &p) in ps.iter().enumerate() {
        let s_p = scaling_factor(p, cfg.d);
        for (ni, &n) in cfg.n.iter().enumerate() {
            let (samples, infeasible) = &per_n[ni];
            let nf = n as f64;
            let phi = estimate(samples, |s| s.per_p[pi].0 / nf);
            let rescaled = estimate(samples, |s| -s_p.powf(cfg.alpha) * s.per_p[pi].0 / nf / cfg.c2);
            let mu_p = estimate(samples, |s| s.per_p[pi].1 / nf);
            let mu1 = estimate(samples, |s| s.t1 / nf);
            let mut margin = f64::INFINITY;
            for s in samples.iter().flatten() {
                let (z, _, rhs) = s.per_p[pi];
                margin = margin.min(z - rhs);
                check.record(cfg.at_least(z, rhs), rhs - z);
            }
            table.push(vec![
                p.into(),
                n.into(),
                s_p.into(),
                phi.replicas.into(),
                (*infeasible).into(),
                phi.mean.into(),
                phi.stderr.into(),
                rescaled.mean.into(),
                rescaled.stderr.into(),
                mu_p.mean.into(),
                mu_p.stderr.into(),
                mu1.mean.into(),
                mu1.stderr.into(),
                margin.into(),
            ]);
        }
    }
    report.tables.push(table);
    report.checks.push(check);
    Ok(report.finish())
}

/// `mu_p` over the `p` grid against `mu_1` on coupled samples at the
/// largest `n`, with both comparison residuals checked on every sample.
pub fn mu_continuity(cfg: &SweepConfig, progress: &Progress) -> Result<Report> {
    let ps = cfg.p_below_one()?;
    let n = cfg.n_max();
    let mut report = Report::new("mu-continuity");
    coupled_only(cfg, &mut report);
    let (samples, infeasible) = replicate(cfg, progress, "mu-continuity", |seed| {
        let pf = poisson(cfg, seed, n)?;
        let t1 = passage_time_auto(&pf, n, cfg.alpha, cfg.max_search)?.t_n;
        let mut out = Vec::new();
        for &p in &ps {
            let eta = couple_bernoulli_from_poisson(pf.clone(), p)?;
            let omega = scaled_vacancy_process(FieldRef::Bernoulli(&eta), p)?;
            let tp = passage_time_auto(&omega, n, cfg.alpha, cfg.max_search)?.t_n;
            out.push(comparison_residuals(t1, tp, cfg.d, omega.s_p(), cfg.alpha, n));
        }
        Ok((t1, out))
    })?;

    let nf = n as f64;
    let mu1: Vec<f64> = samples.iter().flatten().map(|s| s.0 / nf).collect();
    let mu1_est = Estimate::from_values(&mu1, true);
    let mut table = Table::new(
        "mu",
        &[
            "p",
            "n",
            "s_p",
            "replicas",
            "infeasible",
            "mu_mean",
            "mu_stderr",
            "diff_mean",
            "diff_stderr",
            "factor",
            "slack_per_n",
            "res1_min",
            "res2_min",
        ],
    );
    let mut c1 = CheckCount::new("comparison_omega1_upper");
    let mut c2 = CheckCount::new("comparison_omegap_upper");
    for (pi, &p) in ps.iter().enumerate() {
        let mu: Vec<f64> = samples.iter().flatten().map(|s| s.1[pi].tp / nf).collect();
        let est = Estimate::from_values(&mu, true);
        let diff = est.paired_stderr(&mu1_est).unwrap_or(f64::NAN);
        let (mut r1, mut r2) = (f64::INFINITY, f64::INFINITY);
        let (mut factor, mut slack) = (f64::NAN, f64::NAN);
        for s in samples.iter().flatten() {
            let c = &s.1[pi];
            r1 = r1.min(c.res1);
            r2 = r2.min(c.res2);
            factor = c.factor;
            slack = c.slack / nf;
            c1.record(cfg.at_least(c.factor * c.tp + c.slack, c.t1), -c.res1);
            c2.record(cfg.at_least(c.factor * c.t1 + c.slack, c.tp), -c.res2);
        }
        table.push(vec![
            p.into(),
            n.into(),
            scaling_factor(p, cfg.d).into(),
            est.replicas.into(),
            infeasible.into(),
            est.mean.into(),
            est.stderr.into(),
            (est.mean - mu1_est.mean).into(),
            diff.into(),
            factor.into(),
            slack.into(),
            r1.into(),
            r2.into(),
        ]);
    }
    table.push(vec![
        1.0.into(),
        n.into(),
        0.0.into(),
        mu1_est.replicas.into(),
        infeasible.into(),
        mu1_est.mean.into(),
        mu1_est.stderr.into(),
        0.0.into(),
        0.0.into(),
        1.0.into(),
        0.0.into(),
        0.0.into(),
        0.0.into(),
    ]);
    report.tables.push(table);
    report.checks.push(c1);
    report.checks.push(c2);
    Ok(report.finish())
}

/// Lower-tail frequencies of `T_n(omega_1) - n mu1 < -n^{1-lambda}` over the
/// `n` grid, with `mu1` estimated at the largest `n` from separate replicas,
/// and the fitted slope of `log freq` against `log n`.
pub fn concentration_experiment(cfg: &SweepConfig, progress: &Progress) -> Result<Report> {
    let params = cfg.params(1.0, Beta::Finite(0.0))?;
    let n_max = cfg.n_max();
    let reference =
        time_constant_estimate(&params, true, n_max, cfg.replicas.max(2), derive_seed(cfg.seed, MU1_REFERENCE_TAG))?;
    let mut grid = cfg.n.clone();
    grid.sort_unstable();
    grid.dedup();
    let rows = concentration_tail(&params, &grid, cfg.replicas, cfg.lambda, reference.mu_hat, cfg.seed)?;
    progress.tick("concentration", cfg.replicas.saturating_sub(1), cfg.replicas);

    let mut report = Report::new("concentration");
    let mut table = Table::new(
        "tail",
        &["n", "threshold", "mu1_ref", "hits", "trials", "freq", "sigma", "ci_low", "ci_high", "infeasible"],
    );
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for r in &rows {
        if r.freq.freq > 0.0 {
            xs.push((r.n as f64).ln());
            ys.push(r.freq.freq.ln());
        }
        table.push(vec![
            r.n.into(),
            r.threshold.into(),
            reference.mu_hat.into(),
            r.freq.hits.into(),
            r.freq.trials.into(),
            r.freq.freq.into(),
            r.freq.sigma.into(),
            r.freq.ci_low.into(),
            r.freq.ci_high.into(),
            r.infeasible.into(),
        ]);
    }
    let mut summary = Table::new("summary", &["mu1_ref", "mu1_stderr", "mu1_replicas", "slope", "points"]);
    summary.push(vec![
        reference.mu_hat.into(),
        reference.stderr.into(),
        reference.replicas.into(),
        fit_slope(&xs, &ys).unwrap_or(f64::NAN).into(),
        xs.len().into(),
    ]);
    report.tables.push(table);
    report.tables.push(summary);
    Ok(report.finish())
}

/// One row per replica with `T_n`, the greedy cost and `T_n` of the
/// regularized process, checking `greedy >= T_n`, `T_n(regularized) <= T_n`
/// and the uniform bound `d^alpha n^{1 + alpha theta}`.
pub fn passage_time_table(cfg: &SweepConfig, progress: &Progress) -> Result<Report> {
    let mut report = Report::new("passage-time");
    let mut table = Table::new(
        "samples",
        &["seed", "p", "alpha", "d", "n", "t_n", "greedy_cost", "feasible", "exact", "t_regularized"],
    );
    let mut greedy_check = CheckCount::new("greedy_upper_bound");
    let mut reg_check = CheckCount::new("regularized_below");
    let mut uniform_check = CheckCount::new("regularized_uniform_bound");
    for &p in &cfg.p {
        let kind = ProcessKind { d: cfg.d, p, coupled: cfg.coupling == Coupling::Coupled };
        for &n in &cfg.n {
            let (samples, _) = replicate(cfg, progress, "passage-time", |seed| {
                let omega = kind.build(seed, n)?;
                let pr = passage_time_auto(&omega, n, cfg.alpha, cfg.max_search)?;
                let greedy = greedy_passage(&omega, n, cfg.alpha, cfg.max_search)?;
                let reg = regularize(&omega, n, cfg.theta, pr.window.clone())?;
                let tr = passage_time_auto(&reg, n, cfg.alpha, cfg.max_search)?.t_n;
                Ok((pr.t_n, greedy.jump_cost, pr.exact, tr))
            })?;
            let bound = uniform_bound(cfg.d, cfg.alpha, n, cfg.theta);
            for (r, s) in samples.iter().enumerate() {
                let seed = replica_seed(cfg.seed, r as u64);
                let row = match s {
                    Some((t, g, exact, tr)) => {
                        greedy_check.record(cfg.at_least(*g, *t), t - g);
                        reg_check.record(cfg.at_least(*t, *tr), tr - t);
                        uniform_check.record(cfg.at_least(bound, *tr), tr - bound);
                        [(*t).into(), (*g).into(), true.into(), (*exact).into(), (*tr).into()]
                    }
                    None => [f64::NAN.into(), f64::NAN.into(), false.into(), false.into(), f64::NAN.into()],
                };
                let mut cells = vec![seed.into(), p.into(), cfg.alpha.into(), cfg.d.into(), n.into()];
                cells.extend(row);
                table.push(cells);
            }
        }
    }
    report.tables.push(table);
    report.checks = vec![greedy_check, reg_check, uniform_check];
    Ok(report.finish())
}
