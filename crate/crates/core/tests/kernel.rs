use jumppolymer::kernel::{kernel_tail_mass, l1_shell_count, log_jump_weight, normalizing_constant, Beta, ModelParams};
use proptest::prelude::*;

fn params(alpha: f64, c2: f64, d: usize) -> ModelParams {
    ModelParams::new(alpha, c2, d, 0.5, Beta::Finite(0.0)).unwrap()
}

/// Shell sizes by brute-force enumeration of the box `[-k, k]^d`.
fn enumerated_shell(d: usize, k: i64) -> u128 {
    let mut count = 0u128;
    let mut x = vec![-k; d];
    loop {
        if x.iter().map(|v| v.abs()).sum::<i64>() == k {
            count += 1;
        }
        let mut i = 0;
        loop {
            if i == d {
                return count;
            }
            if x[i] < k {
                x[i] += 1;
                break;
            }
            x[i] = -k;
            i += 1;
        }
    }
}

#[test]
fn shell_counts_match_box_enumeration() {
    for d in 1..=4 {
        for k in 0..=12 {
            assert_eq!(l1_shell_count(d, k as u64), enumerated_shell(d, k), "d = {d}, k = {k}");
        }
    }
}

#[test]
fn geometric_tail_bound_dominates_direct_sum() {
    // alpha = 1, c2 = ln 2, d = 1: f(k) = c1 2^{-k}, c1 = 1/3
    let p = params(1.0, 2f64.ln(), 1);
    assert!((p.c1 - 1.0 / 3.0).abs() < 1e-9);
    for l in 1..=50u64 {
        let exact: f64 = (l + 1..l + 200).map(|k| 2.0 * log_jump_weight(&p, k).exp()).sum();
        assert!(kernel_tail_mass(&p, l) >= exact * (1.0 - 1e-12), "L = {l}");
    }
    assert!(kernel_tail_mass(&p, 0) >= 1.0 - p.c1 - 1e-12);
    assert!(kernel_tail_mass(&p, 1000) < 1e-200);
}

proptest! {
    #[test]
    fn jump_law_is_normalised(alpha in 0.5f64..2.5, c2 in 0.5f64..3.0, d in 1usize..=3) {
        let tol = 1e-10;
        let (c1, remainder) = normalizing_constant(alpha, c2, d, tol).unwrap();
        prop_assert!(remainder <= tol / c1);
        let p = params(alpha, c2, d);
        // direct sum far beyond the effective support
        let mut total = 0.0;
        let mut k = 0u64;
        loop {
            let term = l1_shell_count(d, k) as f64 * log_jump_weight(&p, k).exp();
            total += term;
            if k > 10 && term < 1e-18 {
                break;
            }
            k += 1;
        }
        prop_assert!((total - 1.0).abs() <= 1e-12, "sum {total}");
        // a looser tolerance only drops mass from the partial sum
        prop_assert!(c1 >= p.c1 && c1 - p.c1 <= 2.0 * tol * c1);
    }

    #[test]
    fn weights_decrease_and_tail_is_monotone(alpha in 0.5f64..2.5, c2 in 0.5f64..3.0, d in 1usize..=3, k in 0u64..200) {
        let p = params(alpha, c2, d);
        prop_assert!(log_jump_weight(&p, k + 1) < log_jump_weight(&p, k));
        prop_assert!(kernel_tail_mass(&p, k + 1) <= kernel_tail_mass(&p, k));
        let exact: f64 = (k + 1..k + 2000).map(|j| l1_shell_count(d, j) as f64 * log_jump_weight(&p, j).exp()).sum();
        prop_assert!(kernel_tail_mass(&p, k) >= exact * (1.0 - 1e-12));
    }
}
