//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs with `cargo test --test acceptance`; it uses its own `main` so the
//! per-criterion lines are always printed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use jumppolymer::env::{make_bernoulli_field, nearest_point, superpose, PoissonField, SlicedPoints};
use jumppolymer::experiments::{self, Progress, Report, SweepConfig};
use jumppolymer::fpp::{elementary_inequality, greedy_passage, passage_time, passage_time_auto};
use jumppolymer::kernel::{Beta, ModelParams};
use jumppolymer::lattice::{LatticeBox, RealBox};
use jumppolymer::oracle::{count_small_jump_paths, enumerate_log_partition, enumerate_passage_time, poisson_vacancy_law};
use jumppolymer::polymer::{
    deformation_cost_check, flip_identity_check, log_partition, log_partition_with, LatticePath, Provenance, Resolved,
    TruncationPolicy,
};
use jumppolymer::Error;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const BETAS: [Beta; 4] = [Beta::NegInf, Beta::Finite(-2.0), Beta::Finite(0.0), Beta::Finite(1.0)];

/// `a >= b` up to a relative rounding allowance.
fn at_least(a: f64, b: f64, tol: f64) -> bool {
    a >= b - tol * a.abs().max(b.abs()).max(1.0)
}

fn run(name: &str, cfg: &SweepConfig) -> Result<Report, String> {
    experiments::run(name, cfg, &Progress::none()).map_err(|e| format!("{name}: {e}"))
}

fn no_violations(report: &Report) -> Result<String, String> {
    let counts: Vec<String> = report.checks.iter().map(|c| format!("{} {}/{}", c.name, c.violations, c.comparisons)).collect();
    if report.violations() == 0 {
        Ok(counts.join(", "))
    } else {
        Err(counts.join(", "))
    }
}

fn within(limit: Duration, start: Instant, detail: String) -> Outcome {
    let t = start.elapsed();
    if t < limit {
        Ok(format!("{detail}; {:.2} s", t.as_secs_f64()))
    } else {
        Err(format!("{detail}; runtime {:.2} s exceeds {:.0} s", t.as_secs_f64(), limit.as_secs_f64()))
    }
}

fn partition_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let n = rng.gen_range(1..=4);
        let radius = rng.gen_range(1..=5);
        let alpha = *[0.5, 1.0, 1.5].choose(&mut rng).unwrap();
        let c2 = *[0.5, 1.0, 2.0].choose(&mut rng).unwrap();
        let beta = BETAS[i % 4];
        let params = ModelParams::new(alpha, c2, 1, 0.5, beta).map_err(|e| e.to_string())?;
        let field = make_bernoulli_field(rng.gen(), 0.5, 1).map_err(|e| e.to_string())?;
        let window = LatticeBox::centered(1, radius);
        let trunc = TruncationPolicy::fixed(2 * radius as u64, window.clone());
        let dp = match log_partition(&params, &field, n, &trunc) {
            Ok(r) => r.log_z,
            Err(Error::Infeasible(_)) => f64::NEG_INFINITY,
            Err(e) => return Err(e.to_string()),
        };
        let brute = enumerate_log_partition(&params, &field, n, &window).map_err(|e| e.to_string())?;
        let err = if dp == brute { 0.0 } else { (dp - brute).abs() };
        if err.is_nan() || err > 1e-10 {
            return Err(format!("instance {i}: dp {dp} vs enumeration {brute}"));
        }
        worst = worst.max(err);
    }
    within(Duration::from_secs(10), start, format!("max |dlogZ| = {worst:.1e} over 50 instances"))
}

fn passage_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for i in 0..50 {
        let n = rng.gen_range(1..=5);
        let alpha = *[0.5, 1.0, 1.5].choose(&mut rng).unwrap();
        let sizes: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=6)).collect();
        let slices: Vec<Vec<Vec<f64>>> =
            sizes.iter().map(|&k| (0..k).map(|_| vec![rng.gen_range(-5.0..5.0)]).collect()).collect();
        let sp = SlicedPoints::from_lists(1, &slices);
        let window = RealBox::centered(1, 10.0);
        let dp = passage_time(&sp, n, alpha, &window).map_err(|e| e.to_string())?.t_n;
        let brute = enumerate_passage_time(&sp, n, alpha, &window).map_err(|e| e.to_string())?;
        if dp != brute {
            return Err(format!("instance {i}: dp {dp:e} vs enumeration {brute:e}"));
        }
    }
    within(Duration::from_secs(5), start, "50 of 50 instances identical".into())
}

fn flip_identity() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let field = make_bernoulli_field(seed, 0.5, 1).map_err(|e| e.to_string())?;
        for beta in [0.7, -0.7, 2.0, -2.0] {
            let params = ModelParams::new(1.0, 1.0, 1, 0.5, Beta::Finite(beta)).map_err(|e| e.to_string())?;
            let r = flip_identity_check(&params, &field, 20, &TruncationPolicy::default()).map_err(|e| e.to_string())?;
            worst = worst.max(r);
        }
    }
    if worst <= 1e-8 {
        Ok(format!("max residual {worst:.1e} over 100 seeds x 4 betas"))
    } else {
        Err(format!("max residual {worst:.3e} > 1e-8"))
    }
}

fn convexity() -> Outcome {
    let betas: Vec<f64> = (0..9).map(|i| -4.0 + 0.75 * i as f64).collect();
    let n = 32;
    let base = ModelParams::new(1.0, 1.0, 1, 0.5, Beta::Finite(0.0)).map_err(|e| e.to_string())?;
    let res = Resolved::new(&base, n, &TruncationPolicy::default()).map_err(|e| e.to_string())?;
    let (mut first, mut second) = (f64::INFINITY, f64::INFINITY);
    for seed in 0..20 {
        let field = make_bernoulli_field(1000 + seed, 0.5, 1).map_err(|e| e.to_string())?;
        let mut phi = Vec::new();
        for &b in &betas {
            let z = log_partition_with(&base.with_beta(Beta::Finite(b)), &field, n, &res).map_err(|e| e.to_string())?;
            phi.push(z.log_z / n as f64);
        }
        for w in phi.windows(2) {
            first = first.min(w[1] - w[0]);
        }
        for w in phi.windows(3) {
            second = second.min(w[2] - 2.0 * w[1] + w[0]);
        }
    }
    let detail = format!("min first difference {first:.3e}, min second difference {second:.3e}");
    if first >= -1e-9 && second >= -1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn floor_and_superposition() -> Outcome {
    let n = 16;
    let base = ModelParams::new(0.5, 1.0, 1, 0.5, Beta::Finite(0.0)).map_err(|e| e.to_string())?;
    let res = Resolved::new(&base, n, &TruncationPolicy::default().with_clip(64)).map_err(|e| e.to_string())?;
    let betas = [Beta::NegInf, Beta::Finite(-3.0), Beta::Finite(-1.0), Beta::Finite(-0.25), Beta::Finite(0.0)];
    let (mut comparisons, mut violations) = (0, 0);
    for seed in 0..200u64 {
        let eta = make_bernoulli_field(seed, 0.5, 1).map_err(|e| e.to_string())?;
        let zeta = make_bernoulli_field(seed + (1 << 32), 0.2, 1).map_err(|e| e.to_string())?;
        let check = superpose(eta.clone(), zeta).map_err(|e| e.to_string())?;
        let log_z = |field, beta| -> Result<f64, String> {
            log_partition_with(&base.with_beta(beta), field, n, &res).map(|r| r.log_z).map_err(|e| e.to_string())
        };
        let floor = log_z(&eta, Beta::NegInf)?;
        for &beta in &betas {
            let z = log_z(&eta, beta)?;
            comparisons += 1;
            violations += !at_least(z, floor, 1e-9) as usize;
            if beta.as_f64() < 0.0 {
                comparisons += 1;
                violations += !at_least(z, log_z(&check, beta)?, 1e-9) as usize;
            }
        }
    }
    let detail = format!("{violations} violations in {comparisons} comparisons over 200 coupled samples");
    if violations == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lower_bound_identity() -> Outcome {
    let cfg = SweepConfig { alpha: 0.5, p: vec![0.9, 0.99], n: vec![64], replicas: 200, ..SweepConfig::default() };
    no_violations(&run("high-density", &cfg)?)
}

fn comparison_inequalities() -> Outcome {
    let mut parts = Vec::new();
    let mut failed = false;
    for alpha in [0.5, 1.5] {
        let cfg = SweepConfig { alpha, p: vec![0.9, 0.99], n: vec![64], replicas: 1000, ..SweepConfig::default() };
        let report = run("mu-continuity", &cfg)?;
        failed |= report.violations() > 0;
        parts.push(format!("alpha {alpha}: {}", no_violations(&report).unwrap_or_else(|e| e)));
    }
    if failed {
        Err(parts.join("; "))
    } else {
        Ok(parts.join("; "))
    }
}

fn greedy_and_point_addition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let n = 16;
    let window = RealBox::centered(1, 12.0);
    let (mut greedy_bad, mut add_bad) = (0, 0);
    for i in 0..1000u64 {
        let alpha = [0.5, 1.0, 1.5][i as usize % 3];
        let pf = PoissonField::centered(10_000 + i, 1, n, 1e6).map_err(|e| e.to_string())?;
        let t = passage_time_auto(&pf, n, alpha, 1e6).map_err(|e| e.to_string())?.t_n;
        let g = greedy_passage(&pf, n, alpha, 1e6).map_err(|e| e.to_string())?.jump_cost;
        greedy_bad += !at_least(g, t, 1e-9) as usize;
        let sp = SlicedPoints::materialize(&pf, n, &window).map_err(|e| e.to_string())?;
        let before = passage_time(&sp, n, alpha, &window).map_err(|e| e.to_string())?.t_n;
        let k = rng.gen_range(1..=n);
        let after_sp = sp.with_point(k, &[rng.gen_range(-12.0..12.0)]);
        let after = passage_time(&after_sp, n, alpha, &window).map_err(|e| e.to_string())?.t_n;
        add_bad += !at_least(before, after, 1e-9) as usize;
    }
    let detail = format!("greedy violations {greedy_bad}/1000, point-addition violations {add_bad}/1000");
    if greedy_bad + add_bad == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn vacancy_law() -> Outcome {
    let samples = 10_000u64;
    let mut parts = Vec::new();
    let mut failed = false;
    for d in [1usize, 2] {
        let dists: Vec<f64> = (0..samples)
            .map(|s| {
                let pf = PoissonField::centered(50_000 + s, d, 1, 64.0)?;
                Ok(nearest_point(&pf, 1, &vec![0.0; d], 32.0)?.map_or(f64::INFINITY, |(dist, _)| dist))
            })
            .collect::<Result<_, Error>>()
            .map_err(|e| e.to_string())?;
        for r in [0.25, 1.0, 4.0] {
            let want = poisson_vacancy_law(d, 1.0, r);
            let got = dists.iter().filter(|&&x| x >= r).count() as f64 / samples as f64;
            let sigma = (want * (1.0 - want) / samples as f64).sqrt();
            let ok = (got - want).abs() <= 3.0 * sigma;
            failed |= !ok;
            parts.push(format!("d={d} r={r}: {got:.4} vs {want:.4}{}", if ok { "" } else { " (off)" }));
        }
    }
    if failed {
        Err(parts.join(", "))
    } else {
        Ok(parts.join(", "))
    }
}

fn small_jump_counting() -> Outcome {
    let mut cases = 0;
    for d in 1..=2 {
        for n in 1..=3 {
            for alpha in [0.5, 1.0, 1.5] {
                for delta in [0.5, 1.0, 2.0] {
                    let (count, bound) = count_small_jump_paths(d, alpha, n, delta).map_err(|e| e.to_string())?;
                    if count as f64 > bound {
                        return Err(format!("d={d} n={n} alpha={alpha} delta={delta}: {count} > {bound}"));
                    }
                    cases += 1;
                }
            }
        }
    }
    let a = count_small_jump_paths(1, 1.0, 1, 1.0).map_err(|e| e.to_string())?.0;
    let b = count_small_jump_paths(1, 1.0, 2, 0.5).map_err(|e| e.to_string())?.0;
    if a != 3 || b != 5 {
        return Err(format!("exact counts {a} and {b}, expected 3 and 5"));
    }
    Ok(format!("{cases} grid cases below the bound; exact counts 3 and 5 reproduced"))
}

fn random_path(rng: &mut ChaCha8Rng, d: usize, n: usize, alpha: f64) -> LatticePath {
    let mut sites = vec![vec![0i64; d]];
    for _ in 0..n {
        let last = sites.last().unwrap().clone();
        sites.push(last.iter().map(|v| v + rng.gen_range(-6..=6)).collect());
    }
    LatticePath::from_sites(&sites, alpha, Provenance::Raw)
}

fn deformation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let mut bad = 0;
    for (alpha, dims) in [(0.5, [1usize, 2]), (1.5, [2, 2])] {
        for i in 0..10_000 {
            let d = dims[i % 2];
            let n = rng.gen_range(1..=8);
            let path = random_path(&mut rng, d, n, alpha);
            let field = make_bernoulli_field(rng.gen(), rng.gen_range(0.05..0.95), d).map_err(|e| e.to_string())?;
            let (lhs, rhs) = deformation_cost_check(&path, &field, alpha, 1 << 12).map_err(|e| e.to_string())?;
            bad += !at_least(rhs, lhs, 1e-12) as usize;
        }
    }
    let mut elem_bad = 0;
    for i in 0..100_000 {
        let alpha = if i % 2 == 0 { rng.gen_range(0.05..=1.0) } else { rng.gen_range(1.0..3.0) };
        let draw = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.05) { 0.0 } else { 10f64.powf(rng.gen_range(-3.0..3.0)) };
        let (t, s) = (draw(&mut rng), draw(&mut rng));
        let (lhs, rhs) = elementary_inequality(t, s, alpha);
        elem_bad += !at_least(rhs, lhs, 1e-12) as usize;
    }
    let detail = format!("deformation violations {bad}/20000, elementary violations {elem_bad}/100000");
    if bad + elem_bad == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn row_for(report: &Report, p: f64) -> Result<(f64, f64, f64), String> {
    let t = report.table("mu").ok_or("missing mu table")?;
    let i = t.values("p").iter().position(|&v| v == p).ok_or(format!("missing p = {p}"))?;
    Ok((t.values("mu_mean")[i], t.values("mu_stderr")[i], t.values("diff_stderr")[i]))
}

fn mu_continuity_trend() -> Outcome {
    let start = Instant::now();
    let cfg = SweepConfig { alpha: 1.0, p: vec![0.9, 0.999], n: vec![256], replicas: 200, ..SweepConfig::default() };
    let report = run("mu-continuity", &cfg)?;
    let (m1, _, _) = row_for(&report, 1.0)?;
    let (m_lo, _, se_lo) = row_for(&report, 0.9)?;
    let (m_hi, _, se_hi) = row_for(&report, 0.999)?;
    let closer = (m_hi - m1).abs() < (m_lo - m1).abs();
    // order consistent: mu_0.9, mu_0.999, mu_1 monotone up to 3 paired stderr
    let up = m_hi - m_lo >= -3.0 * (se_lo + se_hi) && m1 - m_hi >= -3.0 * se_hi;
    let down = m_lo - m_hi >= -3.0 * (se_lo + se_hi) && m_hi - m1 >= -3.0 * se_hi;
    let detail = format!("mu_0.9 = {m_lo:.4}, mu_0.999 = {m_hi:.4}, mu_1 = {m1:.4}");
    if closer && (up || down) && start.elapsed() < Duration::from_secs(600) {
        within(Duration::from_secs(600), start, detail)
    } else {
        Err(format!("{detail}; closer {closer}, ordered {}", up || down))
    }
}

fn concentration_trend() -> Outcome {
    let cfg = SweepConfig { alpha: 1.0, n: vec![32, 256], lambda: 0.5, replicas: 1000, ..SweepConfig::default() };
    let report = run("concentration", &cfg)?;
    let t = report.table("tail").ok_or("missing tail table")?;
    let (freq, sigma) = (t.values("freq"), t.values("sigma"));
    let detail = format!("freq(32) = {:.4} (sigma {:.4}), freq(256) = {:.4} (sigma {:.4})", freq[0], sigma[0], freq[1], sigma[1]);
    if freq[1] <= freq[0] + 3.0 * sigma[0] {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn block_bound() -> Outcome {
    let cfg = SweepConfig { alpha: 0.5, c2: 1.0, p: vec![0.5], n: vec![64], replicas: 50, ..SweepConfig::default() };
    let report = run("block-bound", &cfg)?;
    let blocks = report.table("blocks").ok_or("missing blocks table")?;
    let col = blocks.column("selected").unwrap();
    let rcol = blocks.column("r").unwrap();
    let selected: Vec<f64> =
        blocks.rows.iter().filter(|r| r[col].as_f64() == Some(1.0)).filter_map(|r| r[rcol].as_f64()).collect();
    let checks = no_violations(&report);
    let phi_min = report.table("bound").map(|t| t.values("phi_min")).unwrap_or_default();
    let detail = format!("selected R = {selected:?}, phi_min = {phi_min:?}, {}", checks.clone().unwrap_or_else(|e| e));
    if selected == [2.0] && checks.is_ok() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism() -> Outcome {
    let mut cfg = SweepConfig { n: vec![8], replicas: 8, budget_levels: 64, ..SweepConfig::default() };
    cfg.truncation.clip = Some(32);
    let csvs = |threads: usize| -> Result<Vec<Vec<u8>>, String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        let mut out = Vec::new();
        for name in experiments::EXPERIMENTS {
            let report = pool.install(|| run(name, &cfg))?;
            for t in &report.tables {
                out.push(t.to_csv().map_err(|e| e.to_string())?);
            }
        }
        Ok(out)
    };
    let (a, b) = (csvs(1)?, csvs(8)?);
    if a == b {
        Ok(format!("{} CSVs from {} experiments byte-identical at 1 and 8 threads", a.len(), experiments::EXPERIMENTS.len()))
    } else {
        Err("CSV bytes differ between 1 and 8 threads".into())
    }
}

fn main() {
    let criteria: [Criterion; 15] = [
        ("oracle equivalence, partition function", partition_oracle),
        ("oracle equivalence, passage time", passage_oracle),
        ("flip identity", flip_identity),
        ("finite-n monotonicity and convexity in beta", convexity),
        ("zero-temperature floor and superposition monotonicity", floor_and_superposition),
        ("high-density lower-bound identity", lower_bound_identity),
        ("comparison inequalities", comparison_inequalities),
        ("greedy bound and point-addition monotonicity", greedy_and_point_addition),
        ("vacancy law", vacancy_law),
        ("small-jump path counting", small_jump_counting),
        ("deformation and elementary inequalities", deformation),
        ("mu-continuity trend", mu_continuity_trend),
        ("concentration trend", concentration_trend),
        ("block lower bound", block_bound),
        ("determinism across thread counts", determinism),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
