use std::path::PathBuf;

use anyhow::{Context, Result};
use log::warn;
use netinfer::io::{load_covariate_files, load_network_files};
use netinfer::{CovariateSet, DirectedNetwork};

use crate::config::DataSection;

pub struct Data {
    pub network: DirectedNetwork,
    pub covariates: CovariateSet,
}

pub fn load(section: &DataSection) -> Result<Data> {
    let edges = section.edges.as_deref().context("the config needs `data.edges`")?;
    let loaded = load_network_files(edges, section.nodes.as_deref())
        .with_context(|| format!("loading network from {}", edges.display()))?;
    if loaded.duplicate_rows > 0 {
        warn!("{} duplicate edge rows ignored", loaded.duplicate_rows);
    }
    let dyadic: Vec<(String, PathBuf)> = section.dyadic.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    let covariates = load_covariate_files(&loaded.network, section.nodal.as_deref(), &dyadic).context("loading covariates")?;
    for name in covariates.dyadic_names() {
        let missing = covariates.missing_count(name);
        if missing > 0 {
            warn!("covariate `{name}` has {missing} missing dyads, set to 0");
        }
    }
    Ok(Data { network: loaded.network, covariates })
}
