//! Experiment drivers: each takes a [`SweepConfig`], fans replicas out over
//! the rayon pool and returns a [`Report`] of CSV tables plus counts of
//! pathwise checks. Replica `r` always uses `replica_seed(cfg.seed, r)` and
//! results are merged in replica order, so reports do not depend on the
//! number of threads.

mod config;
mod fpp_runs;
mod polymer_runs;
mod table;
mod verify;

use std::sync::mpsc::Sender;
use std::sync::Mutex;

use rayon::prelude::*;

pub use config::{Coupling, SweepConfig, TruncationConfig};
pub use fpp_runs::{concentration_experiment, high_density_sweep, mu_continuity, passage_time_table};
pub use polymer_runs::{block_lower_bound, free_energy_curve, tilted_mass_check, zero_temp_continuity};
pub use table::{format_float, Cell, CheckCount, Report, Table};
pub use verify::oracle_suite;

use crate::error::{Error, Result};
use crate::rng::replica_seed;
use crate::stats::Estimate;

/// One finished replica of an experiment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgressEvent {
    pub experiment: &'static str,
    pub replica: usize,
    pub total: usize,
}

/// Optional channel on which workers announce finished replicas.
#[derive(Debug, Default)]
pub struct Progress(Option<Mutex<Sender<ProgressEvent>>>);

impl Progress {
    pub fn none() -> Self {
        Progress(None)
    }

    pub fn channel(tx: Sender<ProgressEvent>) -> Self {
        Progress(Some(Mutex::new(tx)))
    }

    fn tick(&self, experiment: &'static str, replica: usize, total: usize) {
        if let Some(tx) = &self.0 {
            // a closed receiver only means nobody is listening any more
            let _ = tx.lock().expect("progress sender").send(ProgressEvent { experiment, replica, total });
        }
    }
}

/// Names accepted by [`run`].
pub const EXPERIMENTS: &[&str] = &[
    "free-energy",
    "zero-temp",
    "high-density",
    "mu-continuity",
    "concentration",
    "block-bound",
    "tilted-mass",
    "passage-time",
    "verify",
];

/// Runs the experiment called `name`.
pub fn run(name: &str, cfg: &SweepConfig, progress: &Progress) -> Result<Report> {
    cfg.validate()?;
    match name {
        "free-energy" => free_energy_curve(cfg, progress),
        "zero-temp" => zero_temp_continuity(cfg, progress),
        "high-density" => high_density_sweep(cfg, progress),
        "mu-continuity" => mu_continuity(cfg, progress),
        "concentration" => concentration_experiment(cfg, progress),
        "block-bound" => block_lower_bound(cfg, progress),
        "tilted-mass" => tilted_mass_check(cfg, progress),
        "passage-time" => passage_time_table(cfg, progress),
        "verify" => oracle_suite(cfg, progress),
        other => Err(Error::Config(format!("unknown experiment {other}"))),
    }
}

/// Runs `sample(r, seed_r)` for every replica in parallel. Replicas failing
/// with [`Error::Infeasible`] are returned as `None`; more than 1% of them
/// fails the whole run.
pub(crate) fn replicate<T: Send>(
    cfg: &SweepConfig,
    progress: &Progress,
    experiment: &'static str,
    sample: impl Fn(u64) -> Result<T> + Sync,
) -> Result<(Vec<Option<T>>, usize)> {
    let total = cfg.replicas;
    let raw: Vec<Result<T>> = (0..total)
        .into_par_iter()
        .map(|r| {
            let out = sample(replica_seed(cfg.seed, r as u64));
            progress.tick(experiment, r, total);
            out
        })
        .collect();
    let mut out = Vec::with_capacity(total);
    let mut infeasible = 0;
    for r in raw {
        match r {
            Ok(v) => out.push(Some(v)),
            Err(Error::Infeasible(_)) => {
                infeasible += 1;
                out.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    if infeasible as f64 > crate::fpp::MAX_INFEASIBLE_RATE * total as f64 {
        return Err(Error::Infeasible(format!("{experiment}: {infeasible} of {total} replicas infeasible")));
    }
    Ok((out, infeasible))
}

/// Mean and standard error of `f` over the feasible replicas.
pub(crate) fn estimate<T>(samples: &[Option<T>], f: impl Fn(&T) -> f64) -> Estimate {
    let v: Vec<f64> = samples.iter().flatten().map(f).collect();
    Estimate::from_values(&v, false)
}
