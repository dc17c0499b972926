use serde::{Deserialize, Serialize};

use super::passage::passage_time_auto;
use crate::env::{BernoulliField, PoissonField, ScaledVacancyProcess};
use crate::error::{param, Result};

/// Pathwise comparison of `T_n(omega_1)` and `T_n(omega_p)` under the coupling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub t1: f64,
    pub tp: f64,
    /// Multiplicative factor `1 + delta_1`.
    pub factor: f64,
    /// Additive slack `delta_2 n`.
    pub slack: f64,
    /// `factor * tp + slack - t1`.
    pub res1: f64,
    /// `factor * t1 + slack - tp`.
    pub res2: f64,
}

/// `(1 + delta_1, delta_2 n)`: `(1, (2 d s_p)^alpha n)` for `alpha <= 1`, and
/// `((1 + 2 d s_p)^{alpha-1}, (1 + 2 d s_p)^{alpha-1} 2 d s_p n)` for `alpha > 1`.
///
/// Every point of one process has a partner of the other within l1 distance
/// `d s_p`, so each jump changes by at most `2 d s_p`.
pub fn comparison_slacks(d: usize, s_p: f64, alpha: f64, n: u32) -> (f64, f64) {
    let e = 2.0 * d as f64 * s_p;
    if alpha <= 1.0 {
        (1.0, e.powf(alpha) * n as f64)
    } else {
        let f = (1.0 + e).powf(alpha - 1.0);
        (f, f * e * n as f64)
    }
}

/// `(lhs, rhs)` of `(t + s)^alpha <= t^alpha + s^alpha` (`alpha <= 1`) or
/// `(t + s)^alpha <= (1 + s)^{alpha-1} (t^alpha + s)` (`alpha > 1`).
pub fn elementary_inequality(t: f64, s: f64, alpha: f64) -> (f64, f64) {
    let lhs = (t + s).powf(alpha);
    let rhs = if alpha <= 1.0 {
        t.powf(alpha) + s.powf(alpha)
    } else {
        (1.0 + s).powf(alpha - 1.0) * (t.powf(alpha) + s)
    };
    (lhs, rhs)
}

/// Both comparison residuals for `omega_p` built from `omega_1` by the coupling.
pub fn comparison_check(
    omega_1: &PoissonField,
    omega_p: &ScaledVacancyProcess,
    n: u32,
    alpha: f64,
    max_search: f64,
) -> Result<ComparisonResult> {
    let coupled = match omega_p {
        ScaledVacancyProcess::Lattice { field: BernoulliField::Coupled { poisson, .. }, .. } => poisson == omega_1,
        ScaledVacancyProcess::Poisson { field } => field == omega_1,
        _ => false,
    };
    if !coupled {
        return param("coupling mismatch: omega_p is not built from omega_1");
    }
    let t1 = passage_time_auto(omega_1, n, alpha, max_search)?.t_n;
    let tp = passage_time_auto(omega_p, n, alpha, max_search)?.t_n;
    Ok(comparison_residuals(t1, tp, omega_1.dim(), omega_p.s_p(), alpha, n))
}

/// Residuals for already computed passage times `t1 = T_n(omega_1)` and
/// `tp = T_n(omega_p)`.
pub fn comparison_residuals(t1: f64, tp: f64, d: usize, s_p: f64, alpha: f64, n: u32) -> ComparisonResult {
    let (factor, slack) = comparison_slacks(d, s_p, alpha, n);
    ComparisonResult { t1, tp, factor, slack, res1: factor * tp + slack - t1, res2: factor * t1 + slack - tp }
}
