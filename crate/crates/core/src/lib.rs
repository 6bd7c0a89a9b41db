//! Bregman monotone operator splitting.
//!
//! Quadratic Bregman metrics, D-resolvent / D-Cayley / D-forward operators,
//! Peaceman-Rachford, Douglas-Rachford and forward-backward drivers, the
//! contraction-factor formulas that bound them, and a 1-D total-variation
//! denoiser built on the same machinery.

pub mod error;
pub mod linalg;
pub mod metric;
pub mod operators;
pub mod rates;
pub mod splitting;
pub mod tvdenoise;
pub mod vector;

pub use error::{Error, Result};
pub use linalg::{BandedOperator, SpdFactorization, SymMatrix};
pub use metric::{Design, QuadraticMetric};
pub use operators::{ConvexOracle, ElasticNetOracle, QuadraticModel, QuadraticOracle};
pub use rates::{Method, RateModel, SigmaPair};
pub use splitting::{SolverConfig, SolverOutput, Trace, TraceRecord};
