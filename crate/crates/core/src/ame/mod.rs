//! Additive and multiplicative effects (AME) probit model.
//!
//! `P(y_ij = 1) = Phi(theta'x_ij + a_i + b_j + u_i'v_j + eps_ij)` with
//! `(a_i, b_i) ~ N(0, Sigma1)` and `(eps_ij, eps_ji)` unit-variance normal
//! with correlation `rho`.

mod design;
mod dist;
mod gibbs;
mod posterior;

pub use design::{fit_glm, fit_probit, AmeSpec, DyadDesign, GlmTable};
pub use gibbs::{fit_ame, McmcConfig};
pub use posterior::{predict_ame, simulate_ame, simulate_posterior, AmeDraw, AmeParams, AmePosterior, ParamSummary};

pub(crate) use posterior::simulate_from_mu;
