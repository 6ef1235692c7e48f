//! Goodness of fit, prediction curves and MCMC diagnostics.

mod ame;
mod bands;
mod curves;
mod ergm;
mod trace;

pub use ame::{
    ame_diagnostics, dyadic_dependence, gof_ame, gof_probit, sd_col_means, sd_row_means, triadic_dependence,
    AmeGofReport, AME_DIAGNOSTICS,
};
pub use bands::{share_inside, GofBin};
pub use curves::{curves, ergm_scores, CurveReport};
pub use ergm::{gof_ergm, gof_ergm_at, gof_esp_variants, GofReport, MIN_SIMULATIONS};
pub use trace::{chain_diagnostics, trace_diagnostics, TraceDiagnostics, MIN_TRACE_DRAWS};
