//! Supervised kernel dimension reduction for longitudinal data.
//!
//! The crate decomposes the Hilbert-Schmidt Independence Criterion over
//! clustered repeated-measure samples into between-subject (fixed) and
//! within-subject (random) components, fits supervised kernel PCA variants
//! driven by those components, and evaluates them with a two-step mixed
//! predictor under grouped cross-validation.
//!
//! Module map:
//! - [`kernels`]: kernel evaluation, Gram matrices, centering.
//! - [`hsic`]: empirical HSIC and the fixed/random/mixed decomposition.
//! - [`geneig`]: dense symmetric generalized eigensolver.
//! - [`dataset`]: longitudinal dataset container and CSV interchange.
//! - [`reduce`]: skPCA baseline and sklPCA fit/projection.
//! - [`mixed_model`]: two-step mixed predictor, pooled baseline, screening.
//! - [`sim`]: synthetic data generators (factorial and lattice designs).
//! - [`eval`]: fold plans, cross-validated correlation, experiment grid.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod geneig;
pub mod hsic;
pub mod kernels;
pub mod linalg;
pub mod mixed_model;
pub mod reduce;
pub mod sim;

pub use dataset::LongitudinalDataset;
pub use error::{Error, Result};
pub use hsic::GroupIndex;
pub use kernels::{GramMatrix, KernelSpec};
