//! Gibbs sampler with data augmentation for the AME probit model.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ame::design::{fit_probit, AmeSpec, DyadDesign};
use crate::ame::dist::{inverse_wishart, mvn_canonical, truncated_normal};
use crate::ame::posterior::{AmeDraw, AmePosterior};
use crate::covariates::CovariateSet;
use crate::error::{Error, Result};
use crate::network::DirectedNetwork;
use crate::numeric::{norm_cdf, norm_pdf, rng_stream, Rng};

const PRIOR_THETA_VAR: f64 = 100.0;
const RHO_LIMIT: f64 = 0.995;
const RHO_TUNE_WINDOW: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    #[serde(default = "one")]
    pub chains: usize,
    /// Orthogonal `d x d` matrix (row-major) applied to the starting `U`, `V`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_rotation: Option<Vec<f64>>,
    /// Check the state invariants after every Gibbs step.
    #[serde(default)]
    pub check_invariants: bool,
}

fn one() -> usize {
    1
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            n_iter: 10_000,
            burn_in: 5_000,
            thin: 5,
            seed: 1,
            chains: 1,
            init_rotation: None,
            check_invariants: false,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 || self.chains == 0 {
            return Err(Error::InvalidConfig("thin and chains must be positive".into()));
        }
        if self.burn_in >= self.n_iter {
            return Err(Error::InvalidConfig(format!(
                "burn_in ({}) must be smaller than n_iter ({})",
                self.burn_in, self.n_iter
            )));
        }
        if self.draws_per_chain() == 0 {
            return Err(Error::InvalidConfig("no draws retained; lower thin or raise n_iter".into()));
        }
        Ok(())
    }

    /// Retained iterations per chain, `(n_iter - burn_in) / thin`.
    pub fn draws_per_chain(&self) -> usize {
        self.n_iter.saturating_sub(self.burn_in) / self.thin.max(1)
    }
}

/// Fixed inputs shared by every chain.
struct Problem {
    n: usize,
    p: usize,
    d: usize,
    additive: bool,
    correlated: bool,
    /// Design rows, row-major, one per ordered dyad.
    x: Vec<f64>,
    /// `y[i * n + j]`.
    y: Vec<bool>,
    xtx: DMatrix<f64>,
    /// `sum_{i != j} x_ij x_ji'`.
    xcross: DMatrix<f64>,
    check: bool,
}

impl Problem {
    #[inline]
    fn row(&self, i: usize, j: usize) -> usize {
        i * (self.n - 1) + if j > i { j - 1 } else { j }
    }

    #[inline]
    fn xrow(&self, i: usize, j: usize) -> &[f64] {
        let r = self.row(i, j);
        &self.x[r * self.p..(r + 1) * self.p]
    }
}

/// Sampler state. `n x n` arrays are row-major with unused diagonals.
#[derive(Clone)]
struct State {
    theta: DVector<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    /// `n x d`.
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    sigma1: DMatrix<f64>,
    sigma3: DMatrix<f64>,
    rho: f64,
    z: Vec<f64>,
    xb: Vec<f64>,
    uv: Vec<f64>,
}

impl State {
    #[inline]
    fn mu(&self, n: usize, i: usize, j: usize) -> f64 {
        self.xb[i * n + j] + self.a[i] + self.b[j] + self.uv[i * n + j]
    }

    fn refresh_xb(&mut self, pr: &Problem) {
        for i in 0..pr.n {
            for j in 0..pr.n {
                if i != j {
                    self.xb[i * pr.n + j] = pr.xrow(i, j).iter().zip(self.theta.iter()).map(|(x, t)| x * t).sum();
                }
            }
        }
    }

    fn refresh_uv(&mut self, n: usize) {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    self.uv[i * n + j] = self.u.row(i).dot(&self.v.row(j));
                }
            }
        }
    }
}

fn non_finite(step: &'static str, iteration: usize) -> Error {
    Error::NonFiniteConditional { step, iteration }
}

fn draw_mvn(p: &DMatrix<f64>, l: &DVector<f64>, rng: &mut Rng, step: &'static str, it: usize) -> Result<DVector<f64>> {
    if p.iter().chain(l.iter()).any(|v| !v.is_finite()) {
        return Err(non_finite(step, it));
    }
    let x = mvn_canonical(p, l, rng).ok_or_else(|| non_finite(step, it))?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(non_finite(step, it))
    }
}

fn draw_iw(psi: &DMatrix<f64>, df: f64, rng: &mut Rng, step: &'static str, it: usize) -> Result<DMatrix<f64>> {
    if psi.iter().any(|v| !v.is_finite()) {
        return Err(non_finite(step, it));
    }
    inverse_wishart(psi, df, rng).ok_or_else(|| non_finite(step, it))
}

fn check_state(pr: &Problem, s: &State, step: &'static str, iteration: usize) -> Result<()> {
    let fail = |what: String| Err(Error::InvariantViolation { step, iteration, what });
    let n = pr.n;
    for i in 0..n {
        for j in 0..n {
            if i != j && (s.z[i * n + j] > 0.0) != pr.y[i * n + j] {
                return fail(format!("sign of Z[{i},{j}] disagrees with the tie"));
            }
        }
    }
    if s.rho.abs() >= 1.0 {
        return fail(format!("|rho| = {} >= 1", s.rho.abs()));
    }
    if (s.sigma1[(0, 1)] - s.sigma1[(1, 0)]).abs() > 1e-12 || s.sigma1.clone().cholesky().is_none() {
        return fail("Sigma1 is not symmetric positive definite".into());
    }
    Ok(())
}

/// Step 1: latent `Z` by dyad pair, alternating the two truncated
/// conditionals.
fn update_z(pr: &Problem, s: &mut State, rng: &mut Rng) {
    let n = pr.n;
    let rho = s.rho;
    let sd = (1.0 - rho * rho).sqrt();
    let passes = if pr.correlated { 2 } else { 1 };
    for i in 0..n {
        for j in i + 1..n {
            let (ij, ji) = (i * n + j, j * n + i);
            let m1 = s.mu(n, i, j);
            let m2 = s.mu(n, j, i);
            for _ in 0..passes {
                s.z[ij] = truncated_normal(m1 + rho * (s.z[ji] - m2), sd, pr.y[ij], rng);
                s.z[ji] = truncated_normal(m2 + rho * (s.z[ij] - m1), sd, pr.y[ji], rng);
            }
        }
    }
}

/// Step 2: regression coefficients. For a pair with errors of correlation
/// `rho` the precision is `(X'X - rho X'X~) / (1 - rho^2)`.
fn update_theta(pr: &Problem, s: &mut State, rng: &mut Rng, it: usize) -> Result<()> {
    let n = pr.n;
    let rho = s.rho;
    let c = 1.0 / (1.0 - rho * rho);
    let resid = |s: &State, i: usize, j: usize| s.z[i * n + j] - s.a[i] - s.b[j] - s.uv[i * n + j];
    let mut l = DVector::zeros(pr.p);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let w = resid(s, i, j) - rho * resid(s, j, i);
            for (lq, xq) in l.iter_mut().zip(pr.xrow(i, j)) {
                *lq += xq * w;
            }
        }
    }
    l *= c;
    let mut prec = (&pr.xtx - &pr.xcross * rho) * c;
    for q in 0..pr.p {
        prec[(q, q)] += 1.0 / PRIOR_THETA_VAR;
    }
    s.theta = draw_mvn(&prec, &l, rng, "theta", it)?;
    s.refresh_xb(pr);
    Ok(())
}

fn pair_precision(rho: f64) -> DMatrix<f64> {
    let c = 1.0 / (1.0 - rho * rho);
    DMatrix::from_row_slice(2, 2, &[c, -rho * c, -rho * c, c])
}

/// Steps 3 and 4: `(a_i, b_i)` node by node, then `Sigma1`.
fn update_additive(pr: &Problem, s: &mut State, rng: &mut Rng, it: usize) -> Result<()> {
    let n = pr.n;
    let omega = pair_precision(s.rho);
    let prior = s.sigma1.clone().cholesky().ok_or_else(|| non_finite("a,b", it))?.inverse();
    let prec = &omega * (n - 1) as f64 + prior;
    for i in 0..n {
        let mut r = DVector::zeros(2);
        for j in 0..n {
            if j == i {
                continue;
            }
            r[0] += s.z[i * n + j] - s.xb[i * n + j] - s.b[j] - s.uv[i * n + j];
            r[1] += s.z[j * n + i] - s.xb[j * n + i] - s.a[j] - s.uv[j * n + i];
        }
        let l = &omega * r;
        let ab = draw_mvn(&prec, &l, rng, "a,b", it)?;
        s.a[i] = ab[0];
        s.b[i] = ab[1];
    }
    let mut scatter = DMatrix::identity(2, 2);
    for i in 0..n {
        let w = DVector::from_vec(vec![s.a[i], s.b[i]]);
        scatter += &w * w.transpose();
    }
    s.sigma1 = draw_iw(&scatter, 4.0 + n as f64, rng, "Sigma1", it)?;
    Ok(())
}

/// Step 5: rows `(u_i, v_i)` node by node, then their covariance `Sigma3`.
fn update_multiplicative(pr: &Problem, s: &mut State, rng: &mut Rng, it: usize) -> Result<()> {
    let (n, d) = (pr.n, pr.d);
    let rho = s.rho;
    let c = 1.0 / (1.0 - rho * rho);
    let prior = s.sigma3.clone().cholesky().ok_or_else(|| non_finite("U,V", it))?.inverse();
    for i in 0..n {
        let mut prec = prior.clone();
        let mut l = DVector::zeros(2 * d);
        for j in 0..n {
            if j == i {
                continue;
            }
            let e1 = s.z[i * n + j] - s.xb[i * n + j] - s.a[i] - s.b[j];
            let e2 = s.z[j * n + i] - s.xb[j * n + i] - s.a[j] - s.b[i];
            let vj = s.v.row(j);
            let uj = s.u.row(j);
            for p in 0..d {
                l[p] += c * vj[p] * (e1 - rho * e2);
                l[d + p] += c * uj[p] * (e2 - rho * e1);
                for q in 0..d {
                    prec[(p, q)] += c * vj[p] * vj[q];
                    prec[(d + p, d + q)] += c * uj[p] * uj[q];
                    prec[(p, d + q)] -= c * rho * vj[p] * uj[q];
                    prec[(d + q, p)] -= c * rho * vj[p] * uj[q];
                }
            }
        }
        let w = draw_mvn(&prec, &l, rng, "U,V", it)?;
        for p in 0..d {
            s.u[(i, p)] = w[p];
            s.v[(i, p)] = w[d + p];
        }
    }
    let mut scatter = DMatrix::identity(2 * d, 2 * d);
    for i in 0..n {
        let w = DVector::from_iterator(2 * d, s.u.row(i).iter().chain(s.v.row(i).iter()).copied());
        scatter += &w * w.transpose();
    }
    s.sigma3 = draw_iw(&scatter, (2 * d + 2 + n) as f64, rng, "Sigma3", it)?;
    s.refresh_uv(n);
    Ok(())
}

fn reflect(mut r: f64) -> f64 {
    while r.abs() > RHO_LIMIT {
        r = if r > 0.0 { 2.0 * RHO_LIMIT - r } else { -2.0 * RHO_LIMIT - r };
    }
    r
}

/// Step 6: random-walk Metropolis on `rho`. Returns whether accepted.
fn update_rho(pr: &Problem, s: &mut State, width: f64, rng: &mut Rng, it: usize) -> Result<bool> {
    let n = pr.n;
    let (mut ss, mut cross) = (0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let e1 = s.z[i * n + j] - s.mu(n, i, j);
            let e2 = s.z[j * n + i] - s.mu(n, j, i);
            ss += e1 * e1 + e2 * e2;
            cross += e1 * e2;
        }
    }
    if !(ss.is_finite() && cross.is_finite()) {
        return Err(non_finite("rho", it));
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let ll = |r: f64| -0.5 * pairs * (1.0 - r * r).ln() - (ss - 2.0 * r * cross) / (2.0 * (1.0 - r * r));
    let proposal = reflect(s.rho + rng.random_range(-width..width));
    if rng.random::<f64>().ln() < ll(proposal) - ll(s.rho) {
        s.rho = proposal;
        Ok(true)
    } else {
        Ok(false)
    }
}

fn initial_state(
    pr: &Problem,
    spec: &AmeSpec,
    network: &DirectedNetwork,
    covariates: &CovariateSet,
    rotation: Option<&[f64]>,
) -> Result<State> {
    let (n, d) = (pr.n, pr.d);
    let theta = match fit_probit(&spec.regression_only(), network, covariates) {
        Ok(fit) => DVector::from_vec(fit.fit.coefficients),
        Err(e) => {
            log::warn!("probit start failed ({e}); starting from theta = 0");
            DVector::zeros(pr.p)
        }
    };
    let mut s = State {
        theta,
        a: vec![0.0; n],
        b: vec![0.0; n],
        u: DMatrix::zeros(n, d),
        v: DMatrix::zeros(n, d),
        sigma1: DMatrix::identity(2, 2),
        sigma3: DMatrix::identity(2 * d, 2 * d),
        rho: 0.0,
        z: vec![0.0; n * n],
        xb: vec![0.0; n * n],
        uv: vec![0.0; n * n],
    };
    s.refresh_xb(pr);
    // conditional mean of the latent variable given the tie
    let mut resid = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let m = s.xb[i * n + j];
            let z = if pr.y[i * n + j] {
                m + norm_pdf(m) / norm_cdf(m).max(1e-300)
            } else {
                m - norm_pdf(m) / (1.0 - norm_cdf(m)).max(1e-300)
            };
            // keep the start strictly inside its orthant
            s.z[i * n + j] = if pr.y[i * n + j] { z.max(1e-6) } else { z.min(-1e-6) };
            resid[(i, j)] = s.z[i * n + j] - m;
        }
    }
    if pr.additive {
        let off = (n - 1) as f64;
        let grand = resid.sum() / (n * (n - 1)) as f64;
        for i in 0..n {
            s.a[i] = resid.row(i).sum() / off;
            s.b[i] = resid.column(i).sum() / off - grand;
        }
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    resid[(i, j)] -= s.a[i] + s.b[j];
                }
            }
        }
    }
    if d > 0 {
        let svd = resid.svd(true, true);
        let (uu, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
        for (k, &c) in order.iter().take(d).enumerate() {
            let scale = svd.singular_values[c].sqrt();
            for i in 0..n {
                s.u[(i, k)] = uu[(i, c)] * scale;
                s.v[(i, k)] = vt[(c, i)] * scale;
            }
        }
        if let Some(r) = rotation {
            let rot = DMatrix::from_row_slice(d, d, r);
            s.u = &s.u * &rot;
            s.v = &s.v * &rot;
        }
        s.refresh_uv(n);
    }
    Ok(s)
}

struct ChainOutput {
    draws: Vec<AmeDraw>,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    u: Vec<DMatrix<f64>>,
    v: Vec<DMatrix<f64>>,
    rho_accepted: usize,
    rho_proposed: usize,
}

fn run_chain(pr: &Problem, start: &State, cfg: &McmcConfig, chain: usize) -> Result<ChainOutput> {
    let mut rng = rng_stream(cfg.seed, chain as u64);
    let mut s = start.clone();
    let mut out = ChainOutput {
        draws: Vec::with_capacity(cfg.draws_per_chain()),
        a: Vec::new(),
        b: Vec::new(),
        u: Vec::new(),
        v: Vec::new(),
        rho_accepted: 0,
        rho_proposed: 0,
    };
    let mut width = 0.15;
    let mut window = 0;
    let check = |s: &State, step, it| if pr.check { check_state(pr, s, step, it) } else { Ok(()) };
    for it in 1..=cfg.n_iter {
        update_z(pr, &mut s, &mut rng);
        check(&s, "Z", it)?;
        update_theta(pr, &mut s, &mut rng, it)?;
        check(&s, "theta", it)?;
        if pr.additive {
            update_additive(pr, &mut s, &mut rng, it)?;
            check(&s, "a,b,Sigma1", it)?;
        }
        if pr.d > 0 {
            update_multiplicative(pr, &mut s, &mut rng, it)?;
            check(&s, "U,V", it)?;
        }
        if pr.correlated {
            let accepted = update_rho(pr, &mut s, width, &mut rng, it)?;
            check(&s, "rho", it)?;
            if it <= cfg.burn_in {
                // proposal width is adapted during burn-in only
                window += accepted as usize;
                if it % RHO_TUNE_WINDOW == 0 {
                    let rate = window as f64 / RHO_TUNE_WINDOW as f64;
                    if rate < 0.2 {
                        width /= 2.0;
                    } else if rate > 0.5 {
                        width = (width * 2.0).min(1.0);
                    }
                    window = 0;
                }
            } else {
                out.rho_proposed += 1;
                out.rho_accepted += accepted as usize;
            }
        }
        if it > cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0 {
            out.draws.push(AmeDraw {
                chain,
                iteration: it,
                theta: s.theta.iter().copied().collect(),
                sigma_a2: s.sigma1[(0, 0)],
                sigma_b2: s.sigma1[(1, 1)],
                sigma_ab: s.sigma1[(0, 1)],
                rho: s.rho,
            });
            out.a.push(s.a.clone());
            out.b.push(s.b.clone());
            out.u.push(s.u.clone());
            out.v.push(s.v.clone());
        }
    }
    Ok(out)
}

/// Fits the AME probit model by Gibbs sampling. Chains run in parallel
/// with streams `(seed, chain)` and are merged in chain order.
pub fn fit_ame(
    spec: &AmeSpec,
    network: &DirectedNetwork,
    covariates: &CovariateSet,
    mcmc: &McmcConfig,
) -> Result<AmePosterior> {
    mcmc.validate()?;
    let n = network.n();
    let design = DyadDesign::new(spec, covariates, n)?;
    let d = spec.latent_dim;
    if d > 0 && n < 3 {
        return Err(Error::InvalidConfig("multiplicative effects need at least 3 nodes".into()));
    }
    if let Some(r) = &mcmc.init_rotation {
        check_orthogonal(r, d)?;
    }
    let p = design.p();
    let mut x = Vec::with_capacity(design.x.nrows() * p);
    for r in 0..design.x.nrows() {
        x.extend(design.x.row(r).iter());
    }
    let mut y = vec![false; n * n];
    for (i, j) in network.edges() {
        y[i * n + j] = true;
    }
    let mut xcross = DMatrix::zeros(p, p);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let (ri, rj) = (design.row(i, j), design.row(j, i));
                xcross += design.x.row(ri).transpose() * design.x.row(rj);
            }
        }
    }
    let problem = Problem {
        n,
        p,
        d,
        additive: spec.include_additive,
        correlated: spec.include_dyadic_correlation,
        x,
        y,
        xtx: design.x.transpose() * &design.x,
        xcross,
        check: mcmc.check_invariants,
    };
    let start = initial_state(&problem, spec, network, covariates, mcmc.init_rotation.as_deref())?;
    if mcmc.check_invariants {
        check_state(&problem, &start, "init", 0)?;
    }
    let chains: Vec<ChainOutput> =
        (0..mcmc.chains).into_par_iter().map(|c| run_chain(&problem, &start, mcmc, c)).collect::<Result<_>>()?;

    let mut post = AmePosterior::empty(spec.clone(), mcmc.clone(), design.labels, network.labels().to_vec());
    let (mut acc, mut prop) = (0, 0);
    for c in chains {
        post.chain_lengths.push(c.draws.len());
        post.draws.extend(c.draws);
        post.a_draws.extend(c.a);
        post.b_draws.extend(c.b);
        post.u_draws.extend(c.u);
        post.v_draws.extend(c.v);
        acc += c.rho_accepted;
        prop += c.rho_proposed;
    }
    post.rho_acceptance = (prop > 0).then(|| acc as f64 / prop as f64);
    post.finish();
    Ok(post)
}

fn check_orthogonal(r: &[f64], d: usize) -> Result<()> {
    if r.len() != d * d {
        return Err(Error::DimensionMismatch { what: "init_rotation".into(), expected: d * d, got: r.len() });
    }
    let m = DMatrix::from_row_slice(d, d, r);
    if (m.transpose() * &m - DMatrix::identity(d, d)).amax() > 1e-8 {
        return Err(Error::InvalidConfig("init_rotation is not orthogonal".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_stays_inside() {
        assert!((reflect(1.0) - 0.99).abs() < 1e-12);
        assert!((reflect(-1.1) + 0.89).abs() < 1e-12);
        assert_eq!(reflect(0.3), 0.3);
    }

    #[test]
    fn config_validation() {
        assert!(McmcConfig { burn_in: 10, n_iter: 10, ..McmcConfig::default() }.validate().is_err());
        assert!(McmcConfig { thin: 0, ..McmcConfig::default() }.validate().is_err());
        assert_eq!(McmcConfig::default().draws_per_chain(), 1000);
    }
}
