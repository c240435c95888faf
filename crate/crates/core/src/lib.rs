//! Importance-sampling minimax clustering.
//!
//! The crate implements ITISC, a clustering model that minimizes the
//! worst-case expected distortion over reweightings of the observed sample
//! whose KL divergence from the uniform distribution is penalized, together
//! with its logarithmic-distortion variant (Fuzzy-ITISC). Two solver routes
//! are provided: alternating (Picard) updates of memberships, weights and
//! centers, and direct quasi-Newton minimization of the reformulated
//! center-only objective.
//!
//! Comparison models (k-means with k-means++ seeding, fuzzy c-means and
//! agglomerative hierarchical clustering), the evaluation metrics, and the
//! synthetic Gaussian-mixture generators used to exercise them live alongside.
//!
//! ```
//! use itisc::{engine, synth, DistortionKind, Rng, Temperatures};
//!
//! let spec = synth::builtin_spec("c3-default").unwrap();
//! let (data, _) = synth::sample_mixture(&spec, &mut Rng::seed_from_u64(7)).unwrap();
//! let t = Temperatures::new(1.0, 0.5).unwrap();
//! let state = engine::reform_solve(
//!     &data,
//!     3,
//!     t,
//!     DistortionKind::LogSquaredEuclidean,
//!     &mut Rng::seed_from_u64(1),
//!     &engine::ReformOptions::default(),
//! )
//! .unwrap();
//! assert_eq!(state.centers.n_clusters(), 3);
//! ```

pub mod baselines;
pub mod distortion;
pub mod engine;
mod error;
pub mod io;
pub mod metrics;
pub mod optimizer;
mod rng;
pub mod synth;
mod types;

pub use error::{Error, Result};
pub use rng::Rng;
pub use types::{
    random_init, validate_membership, validate_weights, Centers, ClusterState, Dataset,
    Diagnostics, DistortionKind, ImportanceWeights, Membership, Temperatures, Violation,
    ViolationReport, ROW_SUM_TOLERANCE,
};
