//! Exponential random graph models and AME probit models for binary
//! directed networks with nodal and dyadic covariates.

pub mod ame;
pub mod covariates;
pub mod ergm;
pub mod error;
pub mod glm;
pub mod gof;
pub mod io;
pub mod network;
pub mod numeric;
pub mod oracle;
pub mod stats;
pub mod verify;

pub use covariates::{CovariateSet, DyadicMatrix};
pub use error::{Error, Result};
pub use network::{density, DirectedNetwork, DyadIndex};
pub use stats::{change_stats, degree_distributions, esp_distribution, eval_stats, EspVariant, ModelSpec, StatVector, TermKind};

/// The book's chapters, compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/data.md")]
    struct Data;
    #[doc = include_str!("../../../book/src/ergm.md")]
    struct Ergm;
    #[doc = include_str!("../../../book/src/ame.md")]
    struct Ame;
    #[doc = include_str!("../../../book/src/gof.md")]
    struct Gof;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    struct Reproducibility;
}
