//! Discriminative sub-matrix mining for labelled multi-agent trajectories.
//!
//! A dataset is a set of attacks, each a `K`-agent trajectory matrix with a
//! binary label. [`mining::mine`] searches contiguous column windows whose
//! Hausdorff neighbourhoods are over-represented in one class, scoring them with
//! Fisher's exact test and controlling the family-wise error rate by
//! Westfall-Young label permutation.

pub mod distance;
pub mod io;
pub mod labeling;
pub mod mining;
pub mod model;
pub mod render;
pub mod stats;
pub mod synth;

pub use distance::{hausdorff, submatrix_distance, BaseDistance, DistanceMode};
pub use mining::{mine, mine_with_threads, Discovery, MinerConfig, MiningError, MiningResult};
pub use model::{Dataset, Label, Point2D, SubMatrixRef, TrajectoryMatrix};
pub use stats::{calibrate_delta, envelope_bound, fet_pvalue, min_attainable_p, ContingencyMargins};
