//! Run configuration: a TOML file with one section per command, plus flag
//! overrides. The resolved form, with every default and the seed filled in
//! and paths made absolute, is written next to each run's artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub data: DataSection,
    pub ergm: Option<ErgmSection>,
    pub glm: Option<GlmSection>,
    pub ame: Option<AmeSection>,
    pub simulate: Option<SimulateSection>,
    pub gof: Option<GofSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Edge list CSV `src,dst`.
    pub edges: Option<PathBuf>,
    /// Node list, one label per line.
    pub nodes: Option<PathBuf>,
    /// Nodal covariates CSV with a `node` column.
    pub nodal: Option<PathBuf>,
    /// Network size when simulating without data.
    pub n_nodes: Option<usize>,
    /// Dyadic covariates: name to file.
    #[serde(default)]
    pub dyadic: BTreeMap<String, PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErgmSection {
    pub formula: String,
    pub n_samples: Option<usize>,
    pub burn_in: Option<u64>,
    pub interval: Option<u64>,
    pub chains: Option<usize>,
    pub max_outer: Option<usize>,
    pub tol: Option<f64>,
    pub step_cap: Option<f64>,
    pub log_lik: Option<bool>,
    pub path_points: Option<usize>,
    pub path_draws: Option<usize>,
    pub degeneracy: Option<bool>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlmSection {
    pub link: Option<String>,
    #[serde(default)]
    pub sender: Vec<String>,
    #[serde(default)]
    pub receiver: Vec<String>,
    #[serde(default)]
    pub dyadic: Vec<String>,
    #[serde(default = "yes")]
    pub intercept: bool,
}

impl Default for GlmSection {
    fn default() -> Self {
        GlmSection { link: None, sender: vec![], receiver: vec![], dyadic: vec![], intercept: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmeSection {
    #[serde(default)]
    pub sender: Vec<String>,
    #[serde(default)]
    pub receiver: Vec<String>,
    #[serde(default)]
    pub dyadic: Vec<String>,
    #[serde(default)]
    pub latent_dim: usize,
    #[serde(default = "yes")]
    pub additive: bool,
    #[serde(default = "yes")]
    pub dyadic_correlation: bool,
    #[serde(default = "yes")]
    pub intercept: bool,
    pub n_iter: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub chains: Option<usize>,
}

impl Default for AmeSection {
    fn default() -> Self {
        AmeSection {
            sender: vec![],
            receiver: vec![],
            dyadic: vec![],
            latent_dim: 0,
            additive: true,
            dyadic_correlation: true,
            intercept: true,
            n_iter: None,
            burn_in: None,
            thin: None,
            chains: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// `ergm` or `ame`.
    pub model: String,
    /// ERGM formula; defaults to `[ergm].formula`.
    pub formula: Option<String>,
    pub theta: Option<Vec<f64>>,
    /// Posterior JSON written by `fit-ame`.
    pub posterior: Option<PathBuf>,
    pub n_draws: Option<usize>,
    pub burn_in: Option<u64>,
    pub interval: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GofSection {
    /// `ergm`, `ame` or `probit`.
    pub model: String,
    /// `fit.json` or `posterior.json` from the matching fit command.
    pub fit: PathBuf,
    pub n_sim: Option<usize>,
    /// For `ame`: also check the probit baseline.
    pub baseline: Option<bool>,
}

fn absolute(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
    if let Ok(c) = p.canonicalize() {
        *p = c;
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let base = if base.as_os_str().is_empty() { PathBuf::from(".") } else { base };
        cfg.resolve_paths(&base);
        Ok(cfg)
    }

    /// Makes every path absolute relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let d = &mut self.data;
        for p in [&mut d.edges, &mut d.nodes, &mut d.nodal].into_iter().flatten() {
            absolute(base, p);
        }
        for p in d.dyadic.values_mut() {
            absolute(base, p);
        }
        if let Some(out) = self.out.as_mut() {
            absolute(base, out);
        }
        if let Some(p) = self.simulate.as_mut().and_then(|s| s.posterior.as_mut()) {
            absolute(base, p);
        }
        if let Some(g) = self.gof.as_mut() {
            absolute(base, &mut g.fit);
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("seed is resolved before commands run")
    }

    pub fn to_toml(&self) -> Result<String> {
        if self.seed.is_some_and(|s| s > i64::MAX as u64) {
            bail!("seed must be at most {}", i64::MAX);
        }
        Ok(toml::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = r#"
seed = 7
[data]
edges = "e.csv"
[data.dyadic]
dist = "d.csv"
[ergm]
formula = "edges + mutual"
max_outer = 5
[ame]
latent_dim = 2
"#;
        let mut cfg: RunConfig = toml::from_str(text).unwrap();
        assert!(cfg.ame.as_ref().unwrap().additive);
        cfg.resolve_paths(Path::new("/base"));
        assert_eq!(cfg.data.edges.as_deref(), Some(Path::new("/base/e.csv")));
        let back: RunConfig = toml::from_str(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("[ergm]\nformula = \"edges\"\nfoo = 1\n").is_err());
    }
}
