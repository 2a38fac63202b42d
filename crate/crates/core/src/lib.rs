//! Differentiable persistent homology.
//!
//! The crate computes persistence diagrams of lower-star and flag
//! filtrations, evaluates polynomial diagram losses and Wasserstein
//! distances, and routes diagram-level gradients back to the parameters
//! that control the filtration: vertex function values or point
//! coordinates. On top of that sit small reference experiments: point-cloud
//! shaping, level-set denoising, topologically regularized regression, and
//! gradient attacks on a classifier over directional persistence features.
//!
//! The pipeline is
//!
//! ```text
//! parameters → filtration → diagram → loss
//!     ↑  gradient routing through creators/destroyers  ↓
//!     ←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←←
//! ```
//!
//! Every step keeps the inverse map from diagram points to the simplices
//! that created and destroyed them, which makes the composition exactly
//! differentiable away from filtration-value ties; at ties the routed
//! vector is an element of the subgradient selected by the strict order.

pub mod backprop;
pub mod complex;
pub mod diagram;
pub mod error;
pub mod experiments;
pub mod filtration;
pub mod persistence;

mod assignment;
mod delaunay;

pub use complex::{clique_complex, freudenthal_grid, Simplex, SimplicialComplex};
pub use delaunay::delaunay_2d;
pub use diagram::{polynomial_loss, wasserstein, DiagramGradient, LossSpec};
pub use error::{Result, TopoError};
pub use filtration::{
    directional_filtrations, flag, lower_star, rips_filtration, weak_alpha_filtration,
    Direction, Filtration, PointCloud, ScalarField, TieBreak,
};
pub use persistence::{pd0_union_find, reduce, PersistenceDiagram, PersistencePair};

/// Keeps the README's library example compiling.
#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;

pub(crate) mod util {
    /// Map items, in parallel when the `parallel` feature is on.
    pub fn map_parallel<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
    where
        T: Send,
        U: Send,
        F: Fn(T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            items.into_par_iter().map(f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            items.into_iter().map(f).collect()
        }
    }
}
