//! `gen-env`: environment descriptors and the underlying Poisson points.

use std::path::{Path, PathBuf};

use jumppolymer::env::{
    couple_bernoulli_from_poisson, make_bernoulli_field, write_points_csv, BernoulliField, PoissonField, SlicedPoints,
};
use jumppolymer::experiments::{Coupling, SweepConfig};
use jumppolymer::lattice::RealBox;
use jumppolymer::rng::derive_seed;
use jumppolymer::Result;
use serde::Serialize;

#[derive(Serialize)]
struct FieldEntry {
    p: f64,
    field: BernoulliField,
}

#[derive(Serialize)]
struct Descriptor {
    coupling: Coupling,
    poisson: Option<PoissonField>,
    fields: Vec<FieldEntry>,
}

/// Writes `gen-env_descriptor.json` and, in coupled mode, `gen-env_points.csv`
/// holding the Poisson points of slices `1..=max(n)` in `[-half_width, half_width)^d`.
pub fn generate(cfg: &SweepConfig, half_width: f64, dir: &Path) -> Result<Vec<PathBuf>> {
    let horizon = cfg.n_max();
    let ps: Vec<f64> = cfg.p.iter().copied().filter(|&p| p < 1.0).collect();
    let mut out = Vec::new();
    let descriptor = match cfg.coupling {
        Coupling::Coupled => {
            let pf = PoissonField::centered(cfg.seed, cfg.d, horizon, half_width)?;
            let fields = ps
                .iter()
                .map(|&p| Ok(FieldEntry { p, field: couple_bernoulli_from_poisson(pf.clone(), p)? }))
                .collect::<Result<Vec<_>>>()?;
            let points = SlicedPoints::materialize(&pf, horizon, &RealBox::centered(cfg.d, half_width))?;
            let slices: Vec<(u32, &_)> = points.slices.iter().enumerate().map(|(i, s)| (i as u32 + 1, s)).collect();
            let path = dir.join("gen-env_points.csv");
            let file = std::fs::File::create(&path)?;
            write_points_csv(std::io::BufWriter::new(file), &slices)?;
            out.push(path);
            Descriptor { coupling: cfg.coupling, poisson: Some(pf), fields }
        }
        Coupling::Independent => {
            let fields = ps
                .iter()
                .map(|&p| Ok(FieldEntry { p, field: make_bernoulli_field(derive_seed(cfg.seed, p.to_bits()), p, cfg.d)? }))
                .collect::<Result<Vec<_>>>()?;
            Descriptor { coupling: cfg.coupling, poisson: None, fields }
        }
    };
    let path = dir.join("gen-env_descriptor.json");
    let mut text = serde_json::to_string_pretty(&descriptor).map_err(|e| jumppolymer::Error::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(&path, text)?;
    out.insert(0, path);
    Ok(out)
}
