//! One function per subcommand. Each fills the defaults it used back into
//! the run configuration so the resolved copy reproduces the run.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{anyhow, bail, ensure, Context, Result};
use log::warn;
use netinfer::ame::{fit_ame as run_ame, fit_glm as run_glm, fit_probit, predict_ame, simulate_posterior, AmePosterior, AmeSpec, DyadDesign, GlmTable, McmcConfig};
use netinfer::ergm::{fit_mcmle, sample_networks, ErgmFit, InitState, McmleConfig, SamplerConfig};
use netinfer::glm::Link;
use netinfer::gof::{ame_diagnostics, curves, ergm_scores, gof_ame, gof_ergm, gof_probit, trace_diagnostics, CurveReport, GofBin, AME_DIAGNOSTICS};
use netinfer::io::write_edge_list;
use netinfer::verify::{run_verify, VerifyOptions};
use netinfer::{CovariateSet, DirectedNetwork, Error, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::config::{AmeSection, GlmSection, RunConfig};
use crate::data::{self, Data};
use crate::output::{num, OutDir};
use crate::Outcome;

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T> {
    let file = File::open(path).with_context(|| format!("opening {what} {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing {what} {}", path.display()))
}

fn write_coefficients(out: &OutDir, name: &str, labels: &[String], columns: &[(&str, Vec<f64>)]) -> Result<()> {
    let mut w = out.csv(name)?;
    let mut header = vec!["term"];
    header.extend(columns.iter().map(|c| c.0));
    w.write_record(&header)?;
    for (k, label) in labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend(columns.iter().map(|c| num(c.1[k])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn fit_ergm(cfg: &mut RunConfig, out: &OutDir) -> Result<Outcome> {
    let seed = cfg.seed();
    let section = cfg.ergm.as_mut().context("the config needs an [ergm] section with `formula`")?;
    let spec = ModelSpec::parse(&section.formula)?;
    let Data { network, covariates } = data::load(&cfg.data)?;

    let mut mc = McmleConfig::for_size(network.n(), seed);
    let s = &mut mc.sampler;
    s.n_samples = *section.n_samples.get_or_insert(s.n_samples);
    s.burn_in = *section.burn_in.get_or_insert(s.burn_in);
    s.interval = *section.interval.get_or_insert(s.interval);
    s.chains = *section.chains.get_or_insert(s.chains);
    mc.max_outer = *section.max_outer.get_or_insert(mc.max_outer);
    mc.tol = *section.tol.get_or_insert(mc.tol);
    mc.step_cap = *section.step_cap.get_or_insert(mc.step_cap);
    mc.log_lik = *section.log_lik.get_or_insert(mc.log_lik);
    mc.path.points = *section.path_points.get_or_insert(mc.path.points);
    mc.path.draws = *section.path_draws.get_or_insert(mc.path.draws);
    mc.degeneracy = *section.degeneracy.get_or_insert(mc.degeneracy);

    let (fit, outcome) = match fit_mcmle(&spec, &network, &covariates, &mc) {
        Ok(fit) => (fit, Outcome::Success),
        Err(Error::HullViolation { iteration, fit }) => {
            eprintln!("observed statistics outside the sample hull at iteration {iteration}; fit did not converge");
            (*fit, Outcome::NotConverged)
        }
        Err(Error::NotConverged { iterations, fit }) => {
            eprintln!("no convergence after {iterations} iterations");
            (*fit, Outcome::NotConverged)
        }
        Err(e) => return Err(e.into()),
    };

    write_coefficients(
        out,
        "coefficients.csv",
        &fit.terms,
        &[
            ("estimate", fit.theta_hat.clone()),
            ("std_error", fit.std_errors.clone()),
            ("mc_std_error", fit.mc_std_errors.clone()),
            ("z", fit.z_values()),
            ("p_value", fit.p_values()),
        ],
    )?;
    out.json("fit.json", &fit)?;
    match &fit.degeneracy_report {
        Some(report) => {
            if report.flagged() {
                warn!("the fitted model looks near-degenerate; see degeneracy.json");
            }
            out.json("degeneracy.json", report)?;
        }
        None => out.json("degeneracy.json", &serde_json::Value::Null)?,
    }
    Ok(outcome)
}

/// Dyad-level regression artifact: the fit plus the design that produced it.
#[derive(Debug, Serialize, Deserialize)]
struct GlmArtifact {
    spec: AmeSpec,
    #[serde(flatten)]
    table: GlmTable,
}

fn glm_spec(section: &GlmSection) -> AmeSpec {
    AmeSpec {
        sender_covariates: section.sender.clone(),
        receiver_covariates: section.receiver.clone(),
        dyadic_covariates: section.dyadic.clone(),
        intercept: section.intercept,
        ..AmeSpec::default()
    }
    .regression_only()
}

pub fn fit_glm(cfg: &mut RunConfig, link: Option<&str>, out: &OutDir) -> Result<Outcome> {
    let section = cfg.glm.get_or_insert_with(GlmSection::default);
    if let Some(l) = link {
        section.link = Some(l.to_string());
    }
    let link: Link = section.link.get_or_insert_with(|| "logit".into()).parse()?;
    let spec = glm_spec(section);
    let Data { network, covariates } = data::load(&cfg.data)?;
    spec.validate(network.n(), &covariates)?;
    let table = match run_glm(&spec, &network, &covariates, link) {
        Ok(t) => t,
        Err(Error::Separation { iterations }) => {
            eprintln!(
                "the responses are separated by the covariates: estimates diverge (no convergence in {iterations} iterations); \
                 no finite maximum-likelihood estimate exists"
            );
            return Ok(Outcome::NotConverged);
        }
        Err(e) => return Err(e.into()),
    };
    let f = &table.fit;
    let z: Vec<f64> = f.coefficients.iter().zip(&f.std_errors).map(|(b, s)| b / s).collect();
    let p: Vec<f64> = z.iter().map(|&z| netinfer::numeric::two_sided_p(z)).collect();
    write_coefficients(
        out,
        "coefficients.csv",
        &table.labels,
        &[("estimate", f.coefficients.clone()), ("std_error", f.std_errors.clone()), ("z", z), ("p_value", p)],
    )?;
    out.json("fit.json", &GlmArtifact { spec, table })?;
    Ok(Outcome::Success)
}

fn ame_spec(section: &AmeSection) -> AmeSpec {
    AmeSpec {
        sender_covariates: section.sender.clone(),
        receiver_covariates: section.receiver.clone(),
        dyadic_covariates: section.dyadic.clone(),
        latent_dim: section.latent_dim,
        include_additive: section.additive,
        include_dyadic_correlation: section.dyadic_correlation,
        intercept: section.intercept,
    }
}

pub fn fit_ame(cfg: &mut RunConfig, out: &OutDir) -> Result<Outcome> {
    let seed = cfg.seed();
    let section = cfg.ame.get_or_insert_with(AmeSection::default);
    let spec = ame_spec(section);
    let d = McmcConfig::default();
    let mcmc = McmcConfig {
        n_iter: *section.n_iter.get_or_insert(d.n_iter),
        burn_in: *section.burn_in.get_or_insert(d.burn_in),
        thin: *section.thin.get_or_insert(d.thin),
        chains: *section.chains.get_or_insert(d.chains),
        seed,
        ..d
    };
    let Data { network, covariates } = data::load(&cfg.data)?;
    let post = run_ame(&spec, &network, &covariates, &mcmc)?;

    let names = post.scalar_names();
    let mut w = out.csv("draws.csv")?;
    let mut header = vec!["chain".to_string(), "iteration".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for draw in &post.draws {
        let mut row = vec![draw.chain.to_string(), draw.iteration.to_string()];
        row.extend(post.scalar_values(draw).into_iter().map(num));
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = out.csv("summary.csv")?;
    w.write_record(["term", "mean", "sd", "q2.5", "q97.5"])?;
    for s in &post.summaries {
        w.write_record([s.term.clone(), num(s.mean), num(s.sd), num(s.q025), num(s.q975)])?;
    }
    w.flush()?;

    let mut w = out.csv("effects.csv")?;
    w.write_record(["node", "a", "b"])?;
    for (i, label) in post.node_labels.iter().enumerate() {
        let a = post.a_mean.get(i).copied().unwrap_or(0.0);
        let b = post.b_mean.get(i).copied().unwrap_or(0.0);
        w.write_record([label.clone(), num(a), num(b)])?;
    }
    w.flush()?;

    if spec.latent_dim > 0 {
        let n = post.n();
        let mut w = out.csv("uv.csv")?;
        let mut header = vec!["node".to_string()];
        header.extend(post.node_labels.iter().cloned());
        w.write_record(&header)?;
        for i in 0..n {
            let mut row = vec![post.node_labels[i].clone()];
            row.extend((0..n).map(|j| num(post.uv_mean[i * n + j])));
            w.write_record(&row)?;
        }
        w.flush()?;
    }

    match trace_diagnostics(&post) {
        Ok(diag) => {
            for t in diag.iter().filter(|t| t.trend_flag || t.split_rhat > 1.1) {
                warn!("{}: split R-hat {:.3}, trend flag {}", t.parameter, t.split_rhat, t.trend_flag);
            }
            out.json("trace.json", &diag)?;
        }
        Err(Error::TooFewDraws { got, need }) => {
            warn!("{got} retained draws, trace diagnostics need {need}");
            out.json("trace.json", &Vec::<()>::new())?;
        }
        Err(e) => return Err(e.into()),
    }
    out.json("posterior.json", &post)?;
    Ok(Outcome::Success)
}

fn draw_name(k: usize, total: usize) -> String {
    let width = total.to_string().len();
    format!("networks/draw_{:0width$}.csv", k + 1)
}

fn write_network(out: &OutDir, name: &str, net: &DirectedNetwork) -> Result<()> {
    let file = File::create(out.path(name)).with_context(|| format!("creating {name}"))?;
    write_edge_list(net, std::io::BufWriter::new(file))?;
    Ok(())
}

pub fn simulate(cfg: &mut RunConfig, out: &OutDir) -> Result<Outcome> {
    let seed = cfg.seed();
    let section = cfg.simulate.as_mut().context("the config needs a [simulate] section")?;
    let n_draws = *section.n_draws.get_or_insert(100);
    ensure!(n_draws > 0, "simulate.n_draws must be at least 1");
    std::fs::create_dir_all(out.path("networks"))?;
    match section.model.as_str() {
        "ergm" => {
            let formula = match (&section.formula, &cfg.ergm) {
                (Some(f), _) => f.clone(),
                (None, Some(e)) => e.formula.clone(),
                (None, None) => bail!("simulate needs `simulate.formula` or `[ergm].formula`"),
            };
            let spec = ModelSpec::parse(&formula)?;
            let theta = section.theta.clone().context("simulate needs `simulate.theta`")?;
            ensure!(theta.len() == spec.len(), "theta has {} values, the formula has {} terms", theta.len(), spec.len());
            let (observed, covariates) = if cfg.data.edges.is_some() {
                let d = data::load(&cfg.data)?;
                (Some(d.network), d.covariates)
            } else {
                let n = cfg.data.n_nodes.context("simulate needs `data.edges` or `data.n_nodes`")?;
                ensure!(n >= 2, "data.n_nodes must be at least 2");
                (None, CovariateSet::new(n))
            };
            let n = covariates.n();
            let mut sampler = SamplerConfig::for_size(n, seed);
            sampler.n_samples = n_draws;
            sampler.burn_in = *section.burn_in.get_or_insert(sampler.burn_in);
            sampler.interval = *section.interval.get_or_insert(sampler.interval);
            sampler.init = if observed.is_some() { InitState::Observed } else { InitState::Empty };
            let run = sample_networks(&spec, &covariates, &theta, &sampler, observed.as_ref())?;
            let nets = run.networks.as_ref().expect("networks requested");
            let mut w = out.csv("stats.csv")?;
            let mut header = vec!["draw".to_string()];
            header.extend(spec.labels());
            header.push("density".into());
            w.write_record(&header)?;
            for (k, net) in nets.iter().enumerate() {
                write_network(out, &draw_name(k, n_draws), net)?;
                let mut row = vec![(k + 1).to_string()];
                row.extend(run.stats[k].iter().map(|v| num(*v)));
                row.push(num(run.densities[k]));
                w.write_record(&row)?;
            }
            w.flush()?;
        }
        "ame" => {
            let path = section.posterior.clone().context("simulate needs `simulate.posterior`")?;
            let post: AmePosterior = read_json(&path, "posterior")?;
            let covariates = if cfg.data.edges.is_some() {
                data::load(&cfg.data)?.covariates
            } else {
                CovariateSet::new(post.n())
            };
            let nets = simulate_posterior(&post, &covariates, n_draws, seed)?;
            let mut w = out.csv("stats.csv")?;
            let mut header = vec!["draw".to_string(), "edges".to_string(), "density".to_string()];
            header.extend(AME_DIAGNOSTICS.iter().map(|s| s.to_string()));
            w.write_record(&header)?;
            for (k, net) in nets.iter().enumerate() {
                write_network(out, &draw_name(k, n_draws), net)?;
                let mut row = vec![(k + 1).to_string(), net.edge_count().to_string(), num(net.density())];
                row.extend(ame_diagnostics(net).into_iter().map(num));
                w.write_record(&row)?;
            }
            w.flush()?;
        }
        other => bail!("simulate.model must be `ergm` or `ame`, got `{other}`"),
    }
    Ok(Outcome::Success)
}

fn write_gof(out: &OutDir, name: &str, bins: &[GofBin]) -> Result<()> {
    let mut w = out.csv(name)?;
    w.write_record(["family", "bin", "observed", "q01", "q25", "q50", "q75", "q99", "min", "max"])?;
    for b in bins {
        let vals = [b.observed, b.q01, b.q25, b.q50, b.q75, b.q99, b.min, b.max];
        let mut row = vec![b.family.clone(), b.bin.clone()];
        row.extend(vals.into_iter().map(num));
        w.write_record(&row)?;
    }
    w.flush()?;
    for b in bins.iter().filter(|b| b.outside) {
        warn!("{} {}: observed {} outside the simulated range", b.family, b.bin, b.observed);
    }
    Ok(())
}

fn write_curves(out: &OutDir, suffix: &str, report: &CurveReport) -> Result<()> {
    let mut w = out.csv(&format!("roc{suffix}.csv"))?;
    w.write_record(["fpr", "tpr"])?;
    for (x, y) in &report.roc_points {
        w.write_record([num(*x), num(*y)])?;
    }
    w.flush()?;
    let mut w = out.csv(&format!("pr{suffix}.csv"))?;
    w.write_record(["recall", "precision"])?;
    for (x, y) in &report.pr_points {
        w.write_record([num(*x), num(*y)])?;
    }
    w.flush()?;
    out.json(&format!("curves{suffix}.json"), report)
}

fn responses(net: &DirectedNetwork) -> Vec<bool> {
    let n = net.n();
    (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| net.edge(i, j)).collect()
}

/// Fitted probabilities of a probit regression in dyad order.
fn probit_scores(table: &GlmTable, design: &DyadDesign) -> Vec<f64> {
    (0..design.x.nrows())
        .map(|r| {
            let eta: f64 = design.x.row(r).iter().zip(&table.fit.coefficients).map(|(x, b)| x * b).sum();
            Link::Probit.mean(eta)
        })
        .collect()
}

fn probit_check(out: &OutDir, suffix: &str, table: &GlmTable, design: &DyadDesign, network: &DirectedNetwork, n_sim: usize, seed: u64) -> Result<()> {
    let report = gof_probit(table, design, network, n_sim, seed)?;
    write_gof(out, &format!("gof{suffix}.csv"), &report.diagnostics)?;
    out.json(&format!("gof{suffix}.json"), &report)?;
    write_curves(out, suffix, &curves(&responses(network), &probit_scores(table, design))?)
}

pub fn gof(cfg: &mut RunConfig, out: &OutDir) -> Result<Outcome> {
    let seed = cfg.seed();
    let section = cfg.gof.as_mut().context("the config needs a [gof] section with `model` and `fit`")?;
    let n_sim = *section.n_sim.get_or_insert(netinfer::gof::MIN_SIMULATIONS);
    let fit_path = section.fit.clone();
    match section.model.as_str() {
        "ergm" => {
            let fit: ErgmFit = read_json(&fit_path, "ERGM fit")?;
            let formula = &cfg.ergm.as_ref().context("gof for an ERGM needs the [ergm] formula")?.formula;
            let spec = ModelSpec::parse(formula)?;
            ensure!(spec.labels() == fit.terms, "the [ergm] formula does not match the terms in {}", fit_path.display());
            let Data { network, covariates } = data::load(&cfg.data)?;
            let report = gof_ergm(&fit, &spec, &network, &covariates, n_sim, seed)?;
            write_gof(out, "gof.csv", &report.bins)?;
            out.json("gof.json", &report)?;
            let (labels, scores) = ergm_scores(&fit.theta_hat, &spec, &network, &covariates)?;
            write_curves(out, "", &curves(&labels, &scores)?)?;
        }
        "ame" => {
            let baseline = *section.baseline.get_or_insert(true);
            let post: AmePosterior = read_json(&fit_path, "posterior")?;
            let Data { network, covariates } = data::load(&cfg.data)?;
            ensure!(post.node_labels == network.labels(), "the posterior was fitted to a different node set");
            let report = gof_ame(&post, &network, &covariates, n_sim, seed)?;
            write_gof(out, "gof.csv", &report.diagnostics)?;
            out.json("gof.json", &report)?;
            let p = predict_ame(&post, &covariates)?;
            let n = network.n();
            let scores: Vec<f64> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| p[(i, j)]).collect();
            write_curves(out, "", &curves(&responses(&network), &scores)?)?;
            if baseline {
                let spec = post.spec.regression_only();
                let table = fit_probit(&spec, &network, &covariates)?;
                let design = DyadDesign::new(&spec, &covariates, n)?;
                probit_check(out, "_probit", &table, &design, &network, n_sim, seed)?;
            }
        }
        "probit" => {
            let art: GlmArtifact = read_json(&fit_path, "probit fit")?;
            if art.table.fit.link != Link::Probit {
                bail!("gof model `probit` needs a probit fit, {} holds a logit fit", fit_path.display());
            }
            let Data { network, covariates } = data::load(&cfg.data)?;
            let design = DyadDesign::new(&art.spec, &covariates, network.n())?;
            probit_check(out, "", &art.table, &design, &network, n_sim, seed)?;
        }
        other => return Err(anyhow!("gof.model must be `ergm`, `ame` or `probit`, got `{other}`")),
    }
    Ok(Outcome::Success)
}

pub fn verify(corrupt_statistic: Option<f64>, out: &OutDir) -> Result<Outcome> {
    let report = run_verify(VerifyOptions { corrupt_statistic })?;
    println!("{:<44} {:>6} {:>12} {:>10}  result", "check", "cases", "max error", "tolerance");
    for c in &report.checks {
        println!(
            "{:<44} {:>6} {:>12.3e} {:>10.1e}  {}",
            c.name,
            c.cases,
            c.max_error,
            c.tolerance,
            if c.passed { "PASS" } else { "FAIL" }
        );
    }
    out.json("verify.json", &report)?;
    if report.all_passed() {
        Ok(Outcome::Success)
    } else {
        bail!("{} of {} checks failed", report.checks.iter().filter(|c| !c.passed).count(), report.checks.len())
    }
}
