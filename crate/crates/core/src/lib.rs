//! Weighted K-means over Bregman divergences with local-search steps that
//! guarantee continuous (C-local) or discrete (D-local) local optimality.
//!
//! ```
//! use lokmeans::{run_from_centers, Centers, Dataset, Divergence, EngineConfig, Variant};
//!
//! let data = Dataset::unweighted(vec![vec![-4.0], vec![-2.0], vec![0.0], vec![1.5], vec![2.5]]).unwrap();
//! let init = Centers::from_rows(&[vec![0.0], vec![2.5]]).unwrap();
//! let config = EngineConfig::new(2, Divergence::SquaredEuclidean).with_variant(Variant::CLo);
//! let report = run_from_centers(&data, &config, init).unwrap();
//! assert!((report.final_loss - 31.0 / 6.0).abs() < 1e-12);
//! ```

pub mod data_io;
pub mod divergence;
pub mod engine;
pub mod error;
pub mod harness;
pub mod localopt;
pub mod model;
pub mod verify;

pub use divergence::{Divergence, DivergenceKind, SpdMatrix};
pub use engine::{
    assign_step, init_centers, repair_empty_clusters, run, run_from_centers, seeded_rng, EngineConfig, Init,
    RunReport, Termination, Variant,
};
pub use error::{Error, Result};
pub use localopt::{c_lo_step, d_lo_step, delta_move, min_d_lo_step, pnx_run, MoveDelta};
pub use model::{
    assignment_loss, cluster_stats, clustering_loss, incremental_center_update, optimal_centers, Assignment,
    Centers, ClusterStats, Dataset,
};
pub use verify::{
    adjacent_assignments, brute_force_best, certify_c_local, certify_d_local, Certificate, CertificateKind,
    Tolerances,
};
