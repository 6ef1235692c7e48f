use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

fn netinfer(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_netinfer")).current_dir(dir).args(args).output().expect("run netinfer");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

/// Small fixture: ties depend on a sender covariate and a dyadic distance.
fn fixture(dir: &Path, n: usize) {
    let x: Vec<f64> = (0..n).map(|i| ((i * 7919) % 13) as f64 / 6.0 - 1.0).collect();
    let mut edges = String::from("src,dst\n");
    let mut nodal = String::from("node,x\n");
    let mut dist = String::from("src,dst,value\n");
    for i in 0..n {
        nodal.push_str(&format!("v{i},{}\n", x[i]));
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = (i as f64 - j as f64).abs() / n as f64;
            dist.push_str(&format!("v{i},v{j},{d}\n"));
            if (i * 31 + j * 11 + i * j) % 7 < 2 + (x[i] > 0.0) as usize {
                edges.push_str(&format!("v{i},v{j}\n"));
            }
        }
    }
    fs::write(dir.join("edges.csv"), edges).unwrap();
    fs::write(dir.join("nodal.csv"), nodal).unwrap();
    fs::write(dir.join("dist.csv"), dist).unwrap();
}

fn config(dir: &Path, body: &str) -> PathBuf {
    let head = "seed = 11\n[data]\nedges = \"edges.csv\"\nnodal = \"nodal.csv\"\n[data.dyadic]\ndist = \"dist.csv\"\n";
    let path = dir.join("run.toml");
    fs::write(&path, format!("{head}{body}")).unwrap();
    path
}

fn column(path: &Path, row_key: &str, col: &str) -> f64 {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    let c = headers.iter().position(|h| h == col).unwrap();
    for rec in r.records() {
        let rec = rec.unwrap();
        if &rec[0] == row_key {
            return rec[c].parse().unwrap();
        }
    }
    panic!("no row {row_key}");
}

#[test]
fn missing_covariate_file_exits_1() {
    let dir = TempDir::new().unwrap();
    fixture(dir.path(), 10);
    fs::remove_file(dir.path().join("dist.csv")).unwrap();
    config(dir.path(), "[ergm]\nformula = \"edges + edgecov(dist)\"\n");
    let (code, err) = netinfer(dir.path(), &["--config", "run.toml", "--out", "o", "fit-ergm"]);
    assert_eq!(code, 1, "{err}");
    assert!(err.contains("error"));
    assert!(dir.path().join("o/resolved_config.toml").exists());
}

#[test]
fn dyad_independent_ergm_matches_logit() {
    let dir = TempDir::new().unwrap();
    fixture(dir.path(), 12);
    config(dir.path(), "[ergm]\nformula = \"edges + nodeocov(x) + edgecov(dist)\"\n[glm]\nsender = [\"x\"]\ndyadic = [\"dist\"]\n");
    assert_eq!(netinfer(dir.path(), &["--config", "run.toml", "--out", "e", "fit-ergm"]).0, 0);
    assert_eq!(netinfer(dir.path(), &["--config", "run.toml", "--out", "g", "fit-glm"]).0, 0);
    let pairs = [("edges", "intercept"), ("nodeocov(x)", "sender.x"), ("edgecov(dist)", "dyad.dist")];
    for (e, g) in pairs {
        for col in ["estimate", "std_error"] {
            let a = column(&dir.path().join("e/coefficients.csv"), e, col);
            let b = column(&dir.path().join("g/coefficients.csv"), g, col);
            assert!((a - b).abs() < 1e-8, "{e} {col}: {a} vs {b}");
        }
    }
}

#[test]
fn intercept_only_at_half_density_is_zero() {
    let dir = TempDir::new().unwrap();
    let mut edges = String::from("src,dst\n");
    for i in 0..4 {
        for j in 0..4 {
            if i < j {
                edges.push_str(&format!("v{i},v{j}\n"));
            }
        }
    }
    fs::write(dir.path().join("edges.csv"), edges).unwrap();
    fs::write(dir.path().join("run.toml"), "seed = 1\n[data]\nedges = \"edges.csv\"\n").unwrap();
    for link in ["logit", "probit"] {
        let (code, err) = netinfer(dir.path(), &["--config", "run.toml", "--out", link, "fit-glm", "--link", link]);
        assert_eq!(code, 0, "{err}");
        let b = column(&dir.path().join(format!("{link}/coefficients.csv")), "intercept", "estimate");
        assert!(b.abs() < 1e-10, "{link}: {b}");
    }
}

#[test]
fn separated_regression_exits_2() {
    let dir = TempDir::new().unwrap();
    let n = 8;
    let mut edges = String::from("src,dst\n");
    let mut nodal = String::from("node,x\n");
    for i in 0..n {
        nodal.push_str(&format!("v{i},{}\n", if i < 4 { 1.0 } else { -1.0 }));
        for j in 0..n {
            if i != j && i < 4 {
                edges.push_str(&format!("v{i},v{j}\n"));
            }
        }
    }
    fs::write(dir.path().join("edges.csv"), edges).unwrap();
    fs::write(dir.path().join("nodal.csv"), nodal).unwrap();
    fs::write(dir.path().join("run.toml"), "seed = 1\n[data]\nedges = \"edges.csv\"\nnodal = \"nodal.csv\"\n[glm]\nsender = [\"x\"]\n").unwrap();
    let (code, err) = netinfer(dir.path(), &["--config", "run.toml", "--out", "o", "fit-glm"]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("separated"));
}

#[test]
fn ergm_without_convergence_exits_2_with_artifacts() {
    let dir = TempDir::new().unwrap();
    fixture(dir.path(), 10);
    config(dir.path(), "[ergm]\nformula = \"edges + mutual + gwesp(otp, 0.5)\"\nmax_outer = 1\ntol = 1e-12\nn_samples = 64\nlog_lik = false\n");
    let (code, err) = netinfer(dir.path(), &["--config", "run.toml", "--out", "o", "fit-ergm"]);
    assert_eq!(code, 2, "{err}");
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/fit.json")).unwrap()).unwrap();
    assert_eq!(fit["converged"], serde_json::Value::Bool(false));
    assert!(dir.path().join("o/coefficients.csv").exists());
    assert!(dir.path().join("o/degeneracy.json").exists());
}

#[test]
fn simulate_edges_only_mean_and_determinism() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("sim.toml"),
        "seed = 3\n[data]\nn_nodes = 3\n[simulate]\nmodel = \"ergm\"\nformula = \"edges\"\ntheta = [0.0]\nn_draws = 4000\n",
    )
    .unwrap();
    for out in ["a", "b"] {
        let (code, err) = netinfer(dir.path(), &["--config", "sim.toml", "--out", out, "simulate"]);
        assert_eq!(code, 0, "{err}");
    }
    let a = fs::read(dir.path().join("a/stats.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b/stats.csv")).unwrap());
    assert_eq!(fs::read(dir.path().join("a/networks/draw_0017.csv")).unwrap(), fs::read(dir.path().join("b/networks/draw_0017.csv")).unwrap());
    assert!(!a.contains(&b'\r'));
    let mut r = csv::Reader::from_reader(a.as_slice());
    let edges: Vec<f64> = r.records().map(|rec| rec.unwrap()[1].parse().unwrap()).collect();
    let mean = edges.iter().sum::<f64>() / edges.len() as f64;
    // Var(edges) = 6 / 4; draws are thinned by n^2 toggles, near independent.
    let se = (1.5 / edges.len() as f64).sqrt();
    assert!((mean - 3.0).abs() < 4.0 * se, "mean edges {mean}");
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    fixture(dir.path(), 10);
    config(dir.path(), "[ame]\nsender = [\"x\"]\nlatent_dim = 1\nn_iter = 300\nburn_in = 100\nthin = 2\n");
    fs::write(dir.path().join("run.toml"), fs::read_to_string(dir.path().join("run.toml")).unwrap().replace("seed = 11\n", "")).unwrap();
    let (code, err) = netinfer(dir.path(), &["--config", "run.toml", "--out", "a", "fit-ame"]);
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("seed:"));
    let resolved = fs::read_to_string(dir.path().join("a/resolved_config.toml")).unwrap();
    assert!(resolved.contains("seed = "));
    fs::write(dir.path().join("again.toml"), resolved.replace("/a\"", "/b\"")).unwrap();
    let (code, err) = netinfer(dir.path(), &["--config", "again.toml", "fit-ame"]);
    assert_eq!(code, 0, "{err}");
    for f in ["draws.csv", "summary.csv", "effects.csv", "uv.csv", "posterior.json", "trace.json"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn ame_without_effects_matches_probit() {
    let dir = TempDir::new().unwrap();
    fixture(dir.path(), 14);
    config(
        dir.path(),
        "[glm]\nsender = [\"x\"]\ndyadic = [\"dist\"]\n[ame]\nsender = [\"x\"]\ndyadic = [\"dist\"]\nadditive = false\ndyadic_correlation = false\nn_iter = 3000\nburn_in = 500\nthin = 2\n",
    );
    assert_eq!(netinfer(dir.path(), &["--config", "run.toml", "--out", "g", "fit-glm", "--link", "probit"]).0, 0);
    assert_eq!(netinfer(dir.path(), &["--config", "run.toml", "--out", "a", "fit-ame"]).0, 0);
    for (term, _) in [("intercept", 0), ("sender.x", 1), ("dyad.dist", 2)] {
        let mle = column(&dir.path().join("g/coefficients.csv"), term, "estimate");
        let mean = column(&dir.path().join("a/summary.csv"), term, "mean");
        let sd = column(&dir.path().join("a/summary.csv"), term, "sd");
        assert!((mle - mean).abs() < 2.0 * sd, "{term}: {mle} vs {mean} ({sd})");
    }
}

#[test]
fn gof_needs_its_fit_artifact() {
    let dir = TempDir::new().unwrap();
    fixture(dir.path(), 8);
    config(dir.path(), "[ergm]\nformula = \"edges\"\n[gof]\nmodel = \"ergm\"\nfit = \"nowhere/fit.json\"\n");
    let (code, err) = netinfer(dir.path(), &["--config", "run.toml", "--out", "o", "gof"]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn gof_after_fit_writes_reports() {
    let dir = TempDir::new().unwrap();
    fixture(dir.path(), 10);
    config(dir.path(), "[ergm]\nformula = \"edges + mutual\"\n[gof]\nmodel = \"ergm\"\nfit = \"f/fit.json\"\n");
    assert_eq!(netinfer(dir.path(), &["--config", "run.toml", "--out", "f", "fit-ergm"]).0, 0);
    let (code, err) = netinfer(dir.path(), &["--config", "run.toml", "--out", "o", "gof"]);
    assert_eq!(code, 0, "{err}");
    let gof = fs::read_to_string(dir.path().join("o/gof.csv")).unwrap();
    assert!(gof.starts_with("family,bin,observed,q01,q25,q50,q75,q99,min,max\n"));
    for f in ["gof.json", "roc.csv", "pr.csv", "curves.json"] {
        assert!(dir.path().join("o").join(f).exists(), "{f}");
    }
}

#[test]
fn verify_passes_and_catches_corruption() {
    let dir = TempDir::new().unwrap();
    let (code, err) = netinfer(dir.path(), &["--seed", "1", "--out", "v", "verify"]);
    assert_eq!(code, 0, "{err}");
    let (code, _) = netinfer(dir.path(), &["--seed", "1", "--out", "w", "verify", "--corrupt-statistic", "0.25"]);
    assert_eq!(code, 1);
}
