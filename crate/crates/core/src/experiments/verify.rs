use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::SweepConfig;
use super::table::{CheckCount, Report, Table};
use super::Progress;
use crate::env::{make_bernoulli_field, SlicedPoints};
use crate::error::Result;
use crate::fpp::passage_time;
use crate::kernel::{Beta, ModelParams};
use crate::lattice::{LatticeBox, RealBox};
use crate::oracle::{
    count_small_jump_paths, enumerate_log_partition, enumerate_passage_time, enumerate_tilted_log_partition,
};
use crate::polymer::{log_partition, log_tilted_partition, TruncationPolicy};

/// Tolerance for partition-function agreement with enumeration.
pub const PARTITION_TOLERANCE: f64 = 1e-10;

const BETAS: [Beta; 4] = [Beta::NegInf, Beta::Finite(-2.0), Beta::Finite(0.0), Beta::Finite(1.0)];

struct Row {
    name: &'static str,
    instances: usize,
    max_error: f64,
    tolerance: f64,
}

fn log_z_error(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

/// Random small instance: dimension, horizon, window radius.
fn random_partition_case(rng: &mut ChaCha8Rng, d: usize) -> Result<(ModelParams, u64, u32, i64)> {
    let (n, radius) = if d == 1 { (rng.gen_range(1..=4), rng.gen_range(1..=5)) } else { (rng.gen_range(1..=3), rng.gen_range(1..=2)) };
    let alpha = *[0.5, 1.0, 1.5].choose(rng).unwrap();
    let c2 = *[0.5, 1.0, 2.0].choose(rng).unwrap();
    let beta = *BETAS.choose(rng).unwrap();
    Ok((ModelParams::new(alpha, c2, d, 0.5, beta)?, rng.gen(), n, radius))
}

/// Runs the brute-force oracle suite on small random instances generated
/// from `cfg.seed`: partition functions (d = 1, 2), tilted partition
/// functions, passage times and the small-jump path count.
pub fn oracle_suite(cfg: &SweepConfig, _progress: &Progress) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = Report::new("verify");
    let mut rows = Vec::new();

    for (name, d, count) in [("partition_d1", 1, 50), ("partition_d2", 2, 10)] {
        let mut check = CheckCount::new(name);
        let mut worst = 0.0f64;
        for _ in 0..count {
            let (params, seed, n, radius) = random_partition_case(&mut rng, d)?;
            let field = make_bernoulli_field(seed, 0.5, d)?;
            let window = LatticeBox::centered(d, radius);
            let trunc = TruncationPolicy::fixed(2 * d as u64 * radius as u64, window.clone());
            let dp = match log_partition(&params, &field, n, &trunc) {
                Ok(r) => r.log_z,
                Err(crate::Error::Infeasible(_)) => f64::NEG_INFINITY,
                Err(e) => return Err(e),
            };
            let err = log_z_error(dp, enumerate_log_partition(&params, &field, n, &window)?);
            worst = worst.max(err);
            check.record(err <= PARTITION_TOLERANCE, err);
        }
        rows.push(Row { name, instances: count, max_error: worst, tolerance: PARTITION_TOLERANCE });
        report.checks.push(check);
    }

    let mut check = CheckCount::new("tilted_d1");
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (n, radius) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let alpha = *[0.5, 1.0, 1.5].choose(&mut rng).unwrap();
        let beta = *BETAS[..3].choose(&mut rng).unwrap();
        let gamma = *[0.0, 0.3, 1.0].choose(&mut rng).unwrap();
        let params = ModelParams::new(alpha, 1.0, 1, 0.5, beta)?;
        let field = make_bernoulli_field(rng.gen(), 0.5, 1)?;
        let window = LatticeBox::centered(1, radius);
        let trunc = TruncationPolicy::fixed(2 * radius as u64, window.clone());
        let dp = match log_tilted_partition(&params, &field, n, gamma, &trunc, cfg.search_cap) {
            Ok(r) => r.log_z,
            Err(crate::Error::Infeasible(_)) => f64::NEG_INFINITY,
            Err(e) => return Err(e),
        };
        let err = log_z_error(dp, enumerate_tilted_log_partition(&params, &field, n, gamma, &window, cfg.search_cap)?);
        worst = worst.max(err);
        check.record(err <= PARTITION_TOLERANCE, err);
    }
    rows.push(Row { name: "tilted_d1", instances: 20, max_error: worst, tolerance: PARTITION_TOLERANCE });
    report.checks.push(check);

    for (name, d, count, max_n, max_pts) in [("passage_d1", 1, 50, 5, 6), ("passage_d2", 2, 20, 3, 4)] {
        let mut check = CheckCount::new(name);
        let mut worst = 0.0f64;
        for _ in 0..count {
            let n = rng.gen_range(1..=max_n);
            let alpha = *[0.5, 1.0, 1.5].choose(&mut rng).unwrap();
            let slices: Vec<Vec<Vec<f64>>> = (0..n)
                .map(|_| {
                    let k = rng.gen_range(1..=max_pts);
                    (0..k).map(|_| (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect()
                })
                .collect();
            let sp = SlicedPoints::from_lists(d, &slices);
            let window = RealBox::centered(d, 10.0);
            let dp = passage_time(&sp, n, alpha, &window)?.t_n;
            let brute = enumerate_passage_time(&sp, n, alpha, &window)?;
            let err = (dp - brute).abs();
            worst = worst.max(err);
            check.record(dp == brute, err);
        }
        rows.push(Row { name, instances: count, max_error: worst, tolerance: 0.0 });
        report.checks.push(check);
    }

    let mut check = CheckCount::new("small_jump_count");
    let mut cases = 0;
    for d in 1..=2 {
        for n in 1..=3 {
            for alpha in [0.5, 1.0, 1.5] {
                for delta in [0.5, 1.0, 2.0] {
                    let (count, bound) = count_small_jump_paths(d, alpha, n, delta)?;
                    check.record(count as f64 <= bound, count as f64 - bound);
                    cases += 1;
                }
            }
        }
    }
    for (args, want) in [((1, 1.0, 1, 1.0), 3), ((1, 1.0, 2, 0.5), 5)] {
        let (count, _) = count_small_jump_paths(args.0, args.1, args.2, args.3)?;
        check.record(count == want, count as f64 - want as f64);
        cases += 1;
    }
    rows.push(Row { name: "small_jump_count", instances: cases, max_error: 0.0, tolerance: 0.0 });
    report.checks.push(check);

    let mut table = Table::new("oracle", &["check", "instances", "max_error", "tolerance"]);
    for r in rows {
        table.push(vec![r.name.into(), r.instances.into(), r.max_error.into(), r.tolerance.into()]);
    }
    report.tables.push(table);
    if cfg.inject_violation {
        let mut c = CheckCount::new("injected");
        c.record(false, 1.0);
        report.checks.push(c);
    }
    Ok(report.finish())
}
