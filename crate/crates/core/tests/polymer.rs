use std::collections::HashMap;

use jumppolymer::env::{make_bernoulli_field, superpose, BernoulliField};
use jumppolymer::kernel::{log_jump_weight, Beta, ModelParams};
use jumppolymer::lattice::LatticeBox;
use jumppolymer::oracle::{enumerate_log_partition, enumerate_tilted_log_partition};
use jumppolymer::polymer::{
    deform_path, hamiltonian, log_partition, log_partition_with, log_tilted_partition, sample_polymer_path, LatticePath,
    Provenance, Resolved, SampleMemory, TruncationPolicy,
};
use jumppolymer::Error;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn dp_or_neg_inf(r: jumppolymer::Result<f64>) -> f64 {
    match r {
        Ok(v) => v,
        Err(Error::Infeasible(_)) => f64::NEG_INFINITY,
        Err(e) => panic!("{e}"),
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol
}

#[test]
fn two_dimensional_partition_matches_enumeration() {
    for (i, beta) in [Beta::NegInf, Beta::Finite(-2.0), Beta::Finite(0.0), Beta::Finite(1.0)].into_iter().enumerate() {
        for (n, radius) in [(1, 2), (2, 2), (3, 1), (3, 2)] {
            let params = ModelParams::new([0.5, 1.0, 1.5, 1.0][i], 1.0, 2, 0.5, beta).unwrap();
            let field = make_bernoulli_field(40 + i as u64, 0.5, 2).unwrap();
            let window = LatticeBox::centered(2, radius);
            let trunc = TruncationPolicy::fixed(4 * radius as u64, window.clone());
            let dp = dp_or_neg_inf(log_partition(&params, &field, n, &trunc).map(|r| r.log_z));
            let brute = enumerate_log_partition(&params, &field, n, &window).unwrap();
            assert!(close(dp, brute, 1e-10), "beta {beta}, n {n}, R {radius}: {dp} vs {brute}");
        }
    }
}

#[test]
fn tilted_partition_matches_enumeration() {
    for (i, alpha) in [0.5, 1.0, 1.5].into_iter().enumerate() {
        for gamma in [0.0, 0.4, 1.5] {
            let params = ModelParams::new(alpha, 1.0, 1, 0.5, Beta::Finite(-1.0)).unwrap();
            let field = make_bernoulli_field(70 + i as u64, 0.5, 1).unwrap();
            let window = LatticeBox::centered(1, 3);
            let trunc = TruncationPolicy::fixed(6, window.clone());
            let dp = log_tilted_partition(&params, &field, 3, gamma, &trunc, 100).unwrap().log_z;
            let brute = enumerate_tilted_log_partition(&params, &field, 3, gamma, &window, 100).unwrap();
            assert!(close(dp, brute, 1e-10), "alpha {alpha}, gamma {gamma}: {dp} vs {brute}");
        }
    }
}

#[test]
fn tilted_reductions() {
    let params = ModelParams::new(0.5, 1.0, 1, 0.5, Beta::Finite(-0.5)).unwrap();
    let trunc = TruncationPolicy::default().with_clip(32);
    let field = make_bernoulli_field(3, 0.5, 1).unwrap();
    let a = log_partition(&params, &field, 8, &trunc).unwrap().log_z;
    let b = log_tilted_partition(&params, &field, 8, 0.0, &trunc, 100).unwrap().log_z;
    assert!((a - b).abs() <= 1e-12);
    let open = BernoulliField::constant(0, 1);
    let a = log_partition(&params, &open, 8, &trunc).unwrap().log_z;
    let b = log_tilted_partition(&params, &open, 8, 3.0, &trunc, 100).unwrap().log_z;
    assert!((a - b).abs() <= 1e-12);
}

#[test]
fn zero_temperature_jumps_follow_the_kernel() {
    // beta = 0: x_1 has law f, so |x_1| = k has probability shell(1, k) f(k)
    let params = ModelParams::new(1.0, 1.0, 1, 0.5, Beta::Finite(0.0)).unwrap();
    let field = make_bernoulli_field(5, 0.5, 1).unwrap();
    let trunc = TruncationPolicy::default();
    let samples = 10_000;
    let mut counts = [0usize; 7];
    for s in 0..samples {
        let path = sample_polymer_path(&params, &field, 1, &trunc, s, SampleMemory::Full).unwrap();
        counts[(path.site(1)[0].unsigned_abs() as usize).min(6)] += 1;
    }
    let mut probs: Vec<f64> = (0..6).map(|k| if k == 0 { 1.0 } else { 2.0 } * log_jump_weight(&params, k).exp()).collect();
    probs.push(1.0 - probs.iter().sum::<f64>());
    let chi2: f64 = counts
        .iter()
        .zip(&probs)
        .map(|(&c, &p)| {
            let e = p * samples as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let critical = ChiSquared::new(6.0).unwrap().inverse_cdf(0.99);
    assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
}

#[test]
fn gibbs_sampler_matches_exact_path_law() {
    let params = ModelParams::new(1.0, 0.7, 1, 0.5, Beta::Finite(-1.0)).unwrap();
    let field = make_bernoulli_field(12, 0.5, 1).unwrap();
    let window = LatticeBox::centered(1, 2);
    let trunc = TruncationPolicy::fixed(4, window);
    let mut exact = HashMap::new();
    for a in -2i64..=2 {
        for b in -2i64..=2 {
            let h = (field.eval(1, &[a]).unwrap() + field.eval(2, &[b]).unwrap()) as f64;
            let lw = log_jump_weight(&params, a.unsigned_abs()) + log_jump_weight(&params, (b - a).unsigned_abs()) - h;
            exact.insert((a, b), lw.exp());
        }
    }
    let total: f64 = exact.values().sum();
    let samples = 100_000;
    let mut seen: HashMap<(i64, i64), usize> = HashMap::new();
    for s in 0..samples {
        let path = sample_polymer_path(&params, &field, 2, &trunc, 1_000_000 + s, SampleMemory::Recompute).unwrap();
        *seen.entry((path.site(1)[0], path.site(2)[0])).or_default() += 1;
    }
    let tv: f64 = exact
        .iter()
        .map(|(k, w)| (w / total - *seen.get(k).unwrap_or(&0) as f64 / samples as f64).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv <= 0.02, "total variation {tv}");
}

#[test]
fn deformed_paths_avoid_occupied_sites() {
    for trial in 0..1000u64 {
        let d = 1 + (trial % 2) as usize;
        let field = make_bernoulli_field(trial, 0.3 + 0.4 * (trial % 3) as f64 / 2.0, d).unwrap();
        let mut sites = vec![vec![0i64; d]];
        for j in 1..=6i64 {
            sites.push((0..d as i64).map(|i| (trial as i64 * (j + i) * 7919) % 9 - 4).collect());
        }
        let path = LatticePath::from_sites(&sites, 1.0, Provenance::Raw);
        let deformed = deform_path(&path, &field, 1 << 12).unwrap();
        assert_eq!(hamiltonian(&deformed, &field).unwrap(), 0, "trial {trial}");
    }
}

fn chain(seed: u64) -> (BernoulliField, BernoulliField) {
    let eta = make_bernoulli_field(seed, 0.4, 1).unwrap();
    let zeta = make_bernoulli_field(seed ^ 0x5555, 0.3, 1).unwrap();
    (eta.clone(), superpose(eta, zeta).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn log_z_is_monotone_and_convex_in_beta(seed in any::<u64>(), alpha in 0.5f64..1.5, n in 2u32..12) {
        let base = ModelParams::new(alpha, 1.0, 1, 0.5, Beta::Finite(0.0)).unwrap();
        let res = Resolved::new(&base, n, &TruncationPolicy::default().with_clip(48)).unwrap();
        let field = make_bernoulli_field(seed, 0.5, 1).unwrap();
        let z: Vec<f64> = (0..9)
            .map(|i| log_partition_with(&base.with_beta(Beta::Finite(-4.0 + 0.75 * i as f64)), &field, n, &res).unwrap().log_z)
            .collect();
        for w in z.windows(2) {
            prop_assert!(w[1] - w[0] >= -1e-9 * w[0].abs().max(1.0));
        }
        for w in z.windows(3) {
            prop_assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-8 * w[1].abs().max(1.0));
        }
    }

    #[test]
    fn flip_identity_holds(seed in any::<u64>(), beta in -3.0f64..3.0, n in 1u32..12) {
        let params = ModelParams::new(1.0, 1.0, 1, 0.5, Beta::Finite(beta)).unwrap();
        let field = make_bernoulli_field(seed, 0.5, 1).unwrap();
        let r = jumppolymer::polymer::flip_identity_check(&params, &field, n, &TruncationPolicy::default()).unwrap();
        prop_assert!(r <= 1e-8, "residual {r}");
    }

    #[test]
    fn superposition_lowers_log_z(seed in any::<u64>(), beta in -4.0f64..-0.01, n in 1u32..10) {
        let base = ModelParams::new(0.5, 1.0, 1, 0.5, Beta::Finite(beta)).unwrap();
        let res = Resolved::new(&base, n, &TruncationPolicy::default().with_clip(48)).unwrap();
        let (eta, check) = chain(seed);
        let a = log_partition_with(&base, &eta, n, &res).unwrap().log_z;
        let b = log_partition_with(&base, &check, n, &res).unwrap().log_z;
        prop_assert!(b <= a + 1e-9 * a.abs().max(1.0), "{b} > {a}");
        let floor = log_partition_with(&base.with_beta(Beta::NegInf), &eta, n, &res).unwrap().log_z;
        prop_assert!(a >= floor - 1e-9 * a.abs().max(1.0));
    }
}
