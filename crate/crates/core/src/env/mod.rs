//! Random environments.
//!
//! * [`BernoulliField`]: a lazily evaluated {0,1}-valued space-time field.
//! * [`PoissonField`]: an intensity-one Poisson point process on N x R^d.
//! * [`ScaledVacancyProcess`]: the point process of vacant sites scaled by `s_p`.
//!
//! Evaluation is a pure function of `(seed, coordinates)`; all types are
//! immutable and can be shared freely between threads.

mod bernoulli;
mod distance;
mod points;
mod poisson;
mod vacancy;

pub use bernoulli::{
    couple_bernoulli_from_poisson, flip_field, make_bernoulli_field, superpose, BernoulliField, SiteTable,
};
pub use distance::{nearest_open_distance, open_distance_map};
pub use points::{nearest_point, write_points_csv, PointSet, PointSource, SlicedPoints};
pub use poisson::{make_poisson_field, PoissonField, SpaceTimeWindow, SpatialBox};
pub use vacancy::{scaled_vacancy_process, FieldRef, ScaledVacancyProcess};

pub(crate) const TAG_BERNOULLI: u64 = 0xB3_52;
pub(crate) const TAG_POISSON: u64 = 0x9015;
