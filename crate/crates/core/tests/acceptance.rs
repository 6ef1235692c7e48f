//! Release acceptance suite. Each test prints one `PASS`/`FAIL` line and
//! fails if its criterion (including the wall-clock budget) is not met.
//!
//! Run with `cargo test -p netinfer --test acceptance -- --nocapture
//! --test-threads 1` to see the lines in order.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use netinfer::ame::{fit_ame, fit_probit, simulate_ame, AmeParams, AmeSpec, McmcConfig};
use netinfer::covariates::DyadicMatrix;
use netinfer::ergm::{
    enumerate_exact, fit_mcmle, fit_mple, mple_design, network_code, sample_networks, sample_stats, ExactSupport, InitState,
    McmleConfig, SamplerConfig,
};
use netinfer::gof::{curves, gof_ame, gof_ergm};
use netinfer::numeric::{derive_seed, rng_stream, Rng};
use netinfer::oracle::{brute_stats, glm_irls, pair_auc, OracleLink};
use netinfer::verify::{random_covariates, random_network, FULL_FORMULA};
use netinfer::{change_stats, eval_stats, CovariateSet, DyadIndex, ModelSpec};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn report(id: u32, name: &str, ok: bool, elapsed: Duration, budget: Duration, detail: String) {
    let in_time = elapsed <= budget;
    let verdict = if ok && in_time { "PASS" } else { "FAIL" };
    println!("criterion {id} {name}: {verdict} ({detail}; {:.1}s of {}s)", elapsed.as_secs_f64(), budget.as_secs());
    assert!(ok, "criterion {id} {name}: {detail}");
    assert!(in_time, "criterion {id} {name}: took {elapsed:?}, budget {budget:?}");
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn quiet(cfg: &mut McmleConfig) {
    cfg.log_lik = false;
    cfg.degeneracy = false;
}

#[test]
fn exact_mle_agreement() {
    let start = Instant::now();
    let specs = ["edges", "edges + mutual", "edges + mutual + edgecov(w)"].map(|f| ModelSpec::parse(f).unwrap());
    let mut rng = rng_stream(101, 0);
    let mut worst: f64 = 0.0;
    let mut fixtures = 0;
    while fixtures < 10 {
        let net = random_network(4, rng.random_range(0.3..0.7), &mut rng);
        let cov = random_covariates(4, &mut rng);
        // keep fixtures where every MLE exists
        let targets: Option<Vec<Vec<f64>>> = specs
            .iter()
            .map(|spec| {
                let s_obs = eval_stats(spec, &net, &cov).unwrap();
                ExactSupport::new(spec, &cov, 4).unwrap().mle(&s_obs).ok()
            })
            .collect();
        let Some(targets) = targets else { continue };
        for (spec, exact) in specs.iter().zip(&targets) {
            let mut cfg = McmleConfig::for_size(4, derive_seed(101, fixtures));
            cfg.sampler.n_samples = 20_000;
            quiet(&mut cfg);
            let fit = fit_mcmle(spec, &net, &cov, &cfg).unwrap();
            let err = fit.theta_hat.iter().zip(exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst = worst.max(err);
        }
        fixtures += 1;
    }
    report(1, "exact MLE agreement", worst <= 0.05, start.elapsed(), secs(60), format!("max |theta - exact| = {worst:.4}"));
}

#[test]
fn dyad_independent_equivalence() {
    let start = Instant::now();
    let mut rng = rng_stream(202, 0);
    let specs = ["edges", "edges + nodeocov(x)", "edges + nodeocov(x) + nodeicov(x) + edgecov(w) + absdiff(x)"];
    let (mut mc_gap, mut oracle_gap) = (0.0f64, 0.0f64);
    let mut ok = true;
    for (k, f) in specs.iter().enumerate() {
        let spec = ModelSpec::parse(f).unwrap();
        let net = random_network(15, 0.25, &mut rng);
        let cov = random_covariates(15, &mut rng);
        let mple = fit_mple(&spec, &net, &cov).unwrap();
        let mut cfg = McmleConfig::for_size(15, derive_seed(202, k as u64));
        quiet(&mut cfg);
        let fit = fit_mcmle(&spec, &net, &cov, &cfg).unwrap();
        for q in 0..spec.len() {
            let d = (fit.theta_hat[q] - mple.theta[q]).abs();
            mc_gap = mc_gap.max(d);
            ok &= d <= 2.0 * fit.mc_std_errors[q];
        }
        let (x, y) = mple_design(&spec, &net, &cov).unwrap();
        let rows: Vec<Vec<f64>> = (0..x.nrows()).map(|r| x.row(r).iter().copied().collect()).collect();
        let oracle = glm_irls(&rows, &y, OracleLink::Logit).unwrap();
        for q in 0..spec.len() {
            oracle_gap = oracle_gap.max((oracle.values[q] - mple.theta[q]).abs());
        }
    }
    ok &= oracle_gap <= 1e-6;
    report(
        2,
        "dyad-independent equivalence",
        ok,
        start.elapsed(),
        secs(10),
        format!("|mcmle - mple| = {mc_gap:.2e}, |irls - mple| = {oracle_gap:.2e}"),
    );
}

#[test]
fn sampler_correctness() {
    let start = Instant::now();
    let n = 3;
    let cov = CovariateSet::new(n);
    let spec = ModelSpec::parse("edges + mutual").unwrap();
    let theta = [-0.4, 0.9];
    // 200k retained draws, each five sweeps apart, so the counts are
    // close to independent multinomial
    let draws = 200_000;
    let cfg = SamplerConfig { burn_in: 1_000, interval: 30, n_samples: draws, seed: 303, init: InitState::Empty, chains: 1 };
    let run = sample_networks(&spec, &cov, &theta, &cfg, None).unwrap();
    let mut counts = vec![0u64; 64];
    for net in run.networks.as_ref().unwrap() {
        counts[network_code(net) as usize] += 1;
    }
    let probs = enumerate_exact(&spec, &cov, &theta, n, true).unwrap().probabilities.unwrap();
    let chi2: f64 = counts
        .iter()
        .zip(&probs)
        .map(|(&c, &p)| {
            let e = p * draws as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let p_value = 1.0 - ChiSquared::new(63.0).unwrap().cdf(chi2);

    let edges_cfg = SamplerConfig { seed: 304, ..cfg };
    let edges = sample_stats(&ModelSpec::parse("edges").unwrap(), &cov, &[0.0], &edges_cfg, None).unwrap();
    let mean_edges = edges.stats.iter().map(|s| s[0]).sum::<f64>() / draws as f64;
    let ok = p_value > 0.01 && (mean_edges - 3.0).abs() <= 0.05;
    report(
        3,
        "sampler correctness",
        ok,
        start.elapsed(),
        secs(30),
        format!("chi2 = {chi2:.1} on 63 df, p = {p_value:.3}; mean edges = {mean_edges:.4}"),
    );
}

#[test]
fn statistic_oracle_agreement() {
    let start = Instant::now();
    let spec = ModelSpec::parse(FULL_FORMULA).unwrap();
    let mut rng = rng_stream(404, 0);
    let (mut eval_err, mut change_err) = (0.0f64, 0.0f64);
    for case in 0..100 {
        let n = 3 + case % 6;
        let net = random_network(n, rng.random_range(0.05..0.8), &mut rng);
        let cov = random_covariates(n, &mut rng);
        let fast = eval_stats(&spec, &net, &cov).unwrap().0;
        let slow = brute_stats(&spec, &net, &cov).unwrap().values;
        eval_err = fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(eval_err, f64::max);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut with = net.clone();
                with.set_edge(i, j, true);
                let mut without = net.clone();
                without.set_edge(i, j, false);
                let hi = brute_stats(&spec, &with, &cov).unwrap().values;
                let lo = brute_stats(&spec, &without, &cov).unwrap().values;
                let delta = change_stats(&spec, &net, &cov, DyadIndex::new(i, j, n).unwrap()).unwrap().0;
                for q in 0..spec.len() {
                    change_err = change_err.max((delta[q] - (hi[q] - lo[q])).abs());
                }
            }
        }
    }
    let ok = eval_err <= 1e-12 && change_err <= 1e-12;
    report(
        4,
        "statistic oracle agreement",
        ok,
        start.elapsed(),
        secs(30),
        format!("max eval error {eval_err:.2e}, max change error {change_err:.2e}"),
    );
}

/// 95% Wald coverage of each coefficient, counting failed fits as misses.
fn coverage(hits: &[Vec<bool>]) -> Vec<f64> {
    let p = hits[0].len();
    (0..p).map(|q| hits.iter().filter(|h| h[q]).count() as f64 / hits.len() as f64).collect()
}

#[test]
fn ergm_parameter_recovery() {
    let start = Instant::now();
    let n = 50;
    let spec = ModelSpec::parse(&format!("edges + mutual + gwidegree({})", std::f64::consts::LN_2)).unwrap();
    let truth = [-2.0, 1.0, -0.5];
    let cov = CovariateSet::new(n);
    let reps = 50;
    let n2 = (n * n) as u64;
    let sim = SamplerConfig { burn_in: 50 * n2, interval: 10 * n2, n_samples: reps, seed: 505, init: InitState::Empty, chains: 1 };
    let nets = sample_networks(&spec, &cov, &truth, &sim, None).unwrap().networks.unwrap();
    let mut hits = Vec::new();
    let mut failures = 0;
    for (r, net) in nets.iter().enumerate() {
        let mut cfg = McmleConfig::for_size(n, derive_seed(506, r as u64));
        quiet(&mut cfg);
        match fit_mcmle(&spec, net, &cov, &cfg) {
            Ok(fit) => hits.push(
                (0..3)
                    .map(|q| {
                        let se = (fit.std_errors[q].powi(2) + fit.mc_std_errors[q].powi(2)).sqrt();
                        (fit.theta_hat[q] - truth[q]).abs() <= 1.96 * se
                    })
                    .collect(),
            ),
            Err(_) => {
                failures += 1;
                hits.push(vec![false; 3]);
            }
        }
    }
    let cov_q = coverage(&hits);
    let ok = cov_q.iter().all(|c| *c >= 0.9);
    report(
        5,
        "ERGM parameter recovery",
        ok,
        start.elapsed(),
        secs(15 * 60),
        format!("coverage edges/mutual/gwidegree = {:.2}/{:.2}/{:.2}, failed fits {failures}", cov_q[0], cov_q[1], cov_q[2]),
    );
}

fn ame_covariates(n: usize, rng: &mut Rng) -> CovariateSet {
    let mut cov = CovariateSet::new(n);
    cov.add_nodal("x1", (0..n).map(|_| normal(rng)).collect()).unwrap();
    cov.add_nodal("x2", (0..n).map(|_| normal(rng)).collect()).unwrap();
    let pos: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    cov.add_dyadic("w", DyadicMatrix::from_fn(n, |i, j| (pos[i] - pos[j]).abs())).unwrap();
    cov
}

fn ame_regression_spec() -> AmeSpec {
    AmeSpec {
        sender_covariates: vec!["x1".into()],
        receiver_covariates: vec!["x2".into()],
        dyadic_covariates: vec!["w".into()],
        ..AmeSpec::default()
    }
}

#[test]
fn ame_reduces_to_probit() {
    let start = Instant::now();
    let n = 40;
    let spec = AmeSpec { latent_dim: 0, include_additive: false, include_dyadic_correlation: false, ..ame_regression_spec() };
    let truth = [-0.8, 0.4, -0.3, -1.0];
    let mut worst: f64 = 0.0;
    for r in 0..5 {
        let mut rng = rng_stream(606, r);
        let cov = ame_covariates(n, &mut rng);
        let net = simulate_ame(&spec, &cov, n, &AmeParams { theta: truth.to_vec(), ..AmeParams::default() }, derive_seed(606, r)).unwrap();
        let mle = fit_probit(&spec, &net, &cov).unwrap();
        let mcmc = McmcConfig { n_iter: 4000, burn_in: 1000, thin: 3, seed: derive_seed(607, r), ..McmcConfig::default() };
        let post = fit_ame(&spec, &net, &cov, &mcmc).unwrap();
        for (q, label) in mle.labels.iter().enumerate() {
            let s = post.summary(label).unwrap();
            worst = worst.max((s.mean - mle.fit.coefficients[q]).abs() / s.sd);
        }
    }
    report(6, "AME reduction to probit", worst <= 2.0, start.elapsed(), secs(5 * 60), format!("max |mean - mle| / sd = {worst:.3}"));
}

fn random_matrix(n: usize, d: usize, sd: f64, rng: &mut Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| sd * normal(rng))
}

#[test]
fn ame_recovery() {
    let start = Instant::now();
    let n = 60;
    let spec = AmeSpec { latent_dim: 2, ..ame_regression_spec() };
    let truth = [-1.0, 0.5, -0.5, -1.0];
    let reps = 25;
    let (mut covered, mut total) = (0, 0);
    let mut per_coef = [0usize; 4];
    let mut rho_sum = 0.0;
    for r in 0..reps {
        let mut rng = rng_stream(707, r);
        let cov = ame_covariates(n, &mut rng);
        let params = AmeParams {
            theta: truth.to_vec(),
            a: (0..n).map(|_| 0.5 * normal(&mut rng)).collect(),
            b: (0..n).map(|_| 0.5 * normal(&mut rng)).collect(),
            u: Some(random_matrix(n, 2, 0.7, &mut rng)),
            v: Some(random_matrix(n, 2, 0.7, &mut rng)),
            rho: 0.4,
        };
        let net = simulate_ame(&spec, &cov, n, &params, derive_seed(707, r)).unwrap();
        let mcmc = McmcConfig { n_iter: 5000, burn_in: 1500, thin: 5, seed: derive_seed(708, r), ..McmcConfig::default() };
        let post = fit_ame(&spec, &net, &cov, &mcmc).unwrap();
        for (q, label) in post.coefficient_labels.iter().enumerate() {
            let s = post.summary(label).unwrap();
            let hit = s.q025 <= truth[q] && truth[q] <= s.q975;
            covered += hit as usize;
            per_coef[q] += hit as usize;
            total += 1;
        }
        rho_sum += post.summary("rho").unwrap().mean;
    }
    let share = covered as f64 / total as f64;
    let rho_mean = rho_sum / reps as f64;
    let ok = share >= 0.9 && (rho_mean - 0.4).abs() <= 0.15;
    report(
        7,
        "AME recovery",
        ok,
        start.elapsed(),
        secs(30 * 60),
        format!("coverage {share:.3} (per coefficient {per_coef:?} of {reps}), mean rho = {rho_mean:.3}"),
    );
}

#[test]
fn gof_self_consistency() {
    let start = Instant::now();
    let reps = 20;

    let n = 30;
    let spec = ModelSpec::parse("edges + mutual + gwidegree(0.693) + gwesp(otp, 0.693)").unwrap();
    let truth = [-2.2, 1.0, -0.5, 0.2];
    let cov = CovariateSet::new(n);
    let n2 = (n * n) as u64;
    let sim = SamplerConfig { burn_in: 50 * n2, interval: 10 * n2, n_samples: reps, seed: 808, init: InitState::Empty, chains: 1 };
    let nets = sample_networks(&spec, &cov, &truth, &sim, None).unwrap().networks.unwrap();
    let mut ergm_share = 0.0;
    let mut ergm_failed = 0;
    for (r, net) in nets.iter().enumerate() {
        let mut cfg = McmleConfig::for_size(n, derive_seed(809, r as u64));
        quiet(&mut cfg);
        match fit_mcmle(&spec, net, &cov, &cfg) {
            Ok(fit) => ergm_share += gof_ergm(&fit, &spec, net, &cov, 100, derive_seed(810, r as u64)).unwrap().share_inside(),
            Err(_) => ergm_failed += 1,
        }
    }
    let ergm_share = ergm_share / reps as f64;

    let n = 30;
    let ame_spec = AmeSpec { latent_dim: 1, ..ame_regression_spec() };
    let mut ame_share = 0.0;
    for r in 0..reps as u64 {
        let mut rng = rng_stream(811, r);
        let cov = ame_covariates(n, &mut rng);
        let params = AmeParams {
            theta: vec![-1.0, 0.5, -0.5, -1.0],
            a: (0..n).map(|_| 0.5 * normal(&mut rng)).collect(),
            b: (0..n).map(|_| 0.5 * normal(&mut rng)).collect(),
            u: Some(random_matrix(n, 1, 0.7, &mut rng)),
            v: Some(random_matrix(n, 1, 0.7, &mut rng)),
            rho: 0.4,
        };
        let net = simulate_ame(&ame_spec, &cov, n, &params, derive_seed(811, r)).unwrap();
        let mcmc = McmcConfig { n_iter: 3000, burn_in: 1000, thin: 4, seed: derive_seed(812, r), ..McmcConfig::default() };
        let post = fit_ame(&ame_spec, &net, &cov, &mcmc).unwrap();
        ame_share += gof_ame(&post, &net, &cov, 100, derive_seed(813, r)).unwrap().share_inside();
    }
    let ame_share = ame_share / reps as f64;
    let ok = ergm_share >= 0.95 && ame_share >= 0.95;
    report(
        8,
        "GOF self-consistency",
        ok,
        start.elapsed(),
        secs(10 * 60),
        format!("bins inside: ERGM {ergm_share:.3} ({ergm_failed} failed fits), AME {ame_share:.3}"),
    );
}

#[test]
fn auc_matches_pair_count() {
    let start = Instant::now();
    let mut rng = rng_stream(909, 0);
    let mut mismatches = 0;
    for case in 0..1000 {
        let m = rng.random_range(2..200);
        let mut labels: Vec<bool> = (0..m).map(|_| rng.random_bool(0.3)).collect();
        labels[0] = true;
        labels[1] = false;
        // every other fixture uses coarse scores so ties are common
        let scores: Vec<f64> = if case % 2 == 0 {
            (0..m).map(|_| rng.random_range(0..10) as f64).collect()
        } else {
            (0..m).map(|_| rng.random_range(-3.0..3.0)).collect()
        };
        let fast = curves(&labels, &scores).unwrap().auc_roc;
        let slow = pair_auc(&labels, &scores).unwrap().values[0];
        mismatches += (fast != slow) as usize;
    }
    report(9, "AUC oracle", mismatches == 0, start.elapsed(), secs(5), format!("{mismatches} of 1000 fixtures differ"));
}
