//! Likelihood ratio, Wald, score and gradient tests for one-parameter
//! exponential families, their local power under Pitman alternatives, the
//! composite-hypothesis expansion, and a seeded Monte Carlo check.

pub mod cli;
pub mod error;
pub mod expansion;
pub mod expfam;
pub mod localpower;
pub mod montecarlo;
pub mod numeric;
pub mod roots;
pub mod specfun;
pub mod teststats;

pub use error::{Error, Result};
pub use expfam::{catalog_model, CatalogModel, CumulantSet, ExponentialFamily, Family, Interval};
pub use localpower::{CoefficientSource, CoefficientTable, PowerQuery, PowerValue};
pub use teststats::{compute_statistics, TestKind, TestResult};
