//! Degree-Rips hierarchical clustering of finite metric spaces, the layer
//! and branch points of multi-parameter clusterings, and executable checks
//! of interleaving and retract statements for subsample approximations.
//!
//! The pipeline is:
//!
//! 1. [`metric`]: load a [`FiniteMetricSpace`] and pick a [`Subsample`].
//! 2. [`degree_rips`] and [`clustering_model`]: build the bifiltration as a
//!    [`StepClustering`] on its finite critical grid.
//! 3. [`gamma`] and [`layer_points`]: the poset of (cell, cluster) pairs,
//!    its layers, layer points, branch points and the retractions onto them.
//! 4. [`interleaving`] and [`stability`]: verify interleavings,
//!    approximations and the retract conditions for `L_0 X[c]` versus
//!    `L_k Y`.
//!
//! All parameters are exact fixed-point [`Scalar`]s, so every verdict is
//! reproducible bit for bit.

pub mod clustering_model;
pub mod degree_rips;
pub mod export;
pub mod gamma;
pub mod interleaving;
pub mod layer_points;
pub mod metric;
pub mod scalar;
pub mod stability;

pub use clustering_model::{clustering_leq, Axis, Cell, ModelError, SliceSpec, StepClustering, Variance};
pub use degree_rips::{Clustering, LesnickGraph};
pub use gamma::{build_gamma, ElementId, GammaPoset, Layer};
pub use metric::{FiniteMetricSpace, Metric, MetricError, PhaseChangeProfile, Subsample};
pub use scalar::Scalar;
