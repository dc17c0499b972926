use super::path::{LatticePath, Provenance};
use crate::env::{nearest_open_distance, BernoulliField};
use crate::error::Result;

/// `d_j = dist_1(x_j, {y : field(j, y) = 0})` for `j = 0..=n`, with `d_0 = 0`.
pub fn open_distances(path: &LatticePath, field: &BernoulliField, search_cap: u64) -> Result<Vec<u64>> {
    let mut out = vec![0u64];
    for j in 1..=path.n() {
        out.push(nearest_open_distance(field, j as u32, path.site(j), search_cap)?.0);
    }
    Ok(out)
}

/// Moves every closed site of the path to its nearest open site
/// (lexicographically smallest among ties). The result has `H_n = 0`.
pub fn deform_path(path: &LatticePath, field: &BernoulliField, search_cap: u64) -> Result<LatticePath> {
    let mut sites = path.sites.clone();
    let d = path.d;
    for j in 1..=path.n() {
        let x = path.site(j);
        if field.eval(j as u32, x)? == 1 {
            let (_, y) = nearest_open_distance(field, j as u32, x, search_cap)?;
            sites[j * d..(j + 1) * d].copy_from_slice(&y);
        }
    }
    LatticePath::new(d, sites, path.alpha, Provenance::Deformed).with_hamiltonian(field)
}

/// `D_n`: `sum_j d_j^alpha` for `alpha < 1`, and
/// `sum_j [d_j^alpha + |x_{j-1} - x_j|_1^{alpha-1} (d_{j-1} + d_j)]` otherwise.
pub fn auxiliary_hamiltonian(path: &LatticePath, field: &BernoulliField, alpha: f64, search_cap: u64) -> Result<f64> {
    let dist = open_distances(path, field, search_cap)?;
    let jumps = path.jumps();
    let mut total = 0.0;
    for j in 1..=path.n() {
        total += (dist[j] as f64).powf(alpha);
        if alpha >= 1.0 {
            total += (jumps[j - 1] as f64).powf(alpha - 1.0) * (dist[j - 1] + dist[j]) as f64;
        }
    }
    Ok(total)
}

/// `(lhs, rhs)` where `lhs` is the increase of the jump cost under
/// deformation and `rhs` the majorant: `sum_j (d_{j-1}^a + d_j^a)` for
/// `a < 1`, and `sum_j [a 2^a |dx_j|^{a-1} (d_{j-1} + d_j) + a 2^{2a} (d_{j-1}^a + d_j^a)]`
/// for `a >= 1`.
pub fn deformation_cost_check(
    path: &LatticePath,
    field: &BernoulliField,
    alpha: f64,
    search_cap: u64,
) -> Result<(f64, f64)> {
    let deformed = deform_path(path, field, search_cap)?;
    let dist = open_distances(path, field, search_cap)?;
    let before = path.jumps();
    let after = deformed.jumps();
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for j in 1..=path.n() {
        lhs += (after[j - 1] as f64).powf(alpha) - (before[j - 1] as f64).powf(alpha);
        let (a, b) = (dist[j - 1] as f64, dist[j] as f64);
        let pair = a.powf(alpha) + b.powf(alpha);
        rhs += if alpha < 1.0 {
            pair
        } else {
            alpha * 2f64.powf(alpha) * (before[j - 1] as f64).powf(alpha - 1.0) * (a + b)
                + alpha * 2f64.powf(2.0 * alpha) * pair
        };
    }
    Ok((lhs, rhs))
}
