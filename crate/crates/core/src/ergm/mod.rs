//! ERGM simulation and estimation.

mod degeneracy;
mod exact;
mod hull;
mod loglik;
mod mcmle;
mod mple;
mod sampler;

pub use degeneracy::{degeneracy_at, degeneracy_check, Absorption, DegeneracyReport, TermBand};
pub use exact::{enumerate_exact, network_code, network_from_code, ExactResult, ExactSupport, MAX_EXACT_DYADS};
pub use hull::in_convex_hull;
pub use loglik::{log_likelihood, LogLik, LogLikMethod, PathConfig};
pub use mcmle::{fit_mcmle, ErgmFit, IterationTrace, McmleConfig, StartMethod};
pub use mple::{fit_mple, mple_design, MpleFit};
pub use sampler::{sample_networks, sample_stats, InitState, SampleRun, SamplerConfig};
