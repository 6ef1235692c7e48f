//! File ingestion for networks and covariates.
//!
//! Formats:
//! - edge list: CSV with header `src,dst`, one tie per row;
//! - node list: one label per line, fixes the node universe and order;
//! - nodal covariates: CSV whose first column is `node`, one column per covariate;
//! - dyadic covariates: either a long CSV `src,dst,value` or a labeled square
//!   matrix (first row holds column labels, first column holds row labels).
//!
//! Numeric cells that parse to NaN or an infinity are rejected.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::covariates::{CovariateSet, DyadicMatrix};
use crate::error::{Error, Result};
use crate::network::DirectedNetwork;

/// A loaded network plus ingestion warnings.
#[derive(Debug, Clone)]
pub struct LoadedNetwork {
    pub network: DirectedNetwork,
    /// Edge rows that repeated an earlier row; repeats are ignored.
    pub duplicate_rows: usize,
}

fn csv_reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(false).from_reader(source)
}

pub(crate) fn parse_finite(token: &str, context: &str) -> Result<f64> {
    let v: f64 = token
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("`{token}` is not a number ({context})")))?;
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("{context}: `{token}`")));
    }
    Ok(v)
}

/// Reads a node list: one label per line, blank lines skipped.
pub fn read_node_list<R: Read>(source: R) -> Result<Vec<String>> {
    let mut labels = Vec::new();
    for line in BufReader::new(source).lines() {
        let line = line?;
        let label = line.trim();
        if !label.is_empty() {
            labels.push(label.to_string());
        }
    }
    Ok(labels)
}

/// Builds a network from an edge-list CSV and an optional node list.
///
/// Without a node list, nodes are ordered by first appearance in the edge
/// list. With one, every edge endpoint must be listed and unlisted labels
/// are an error; isolates are kept.
pub fn load_network<E: Read, N: Read>(edges: E, nodes: Option<N>) -> Result<LoadedNetwork> {
    let mut rdr = csv_reader(edges);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "src" || &headers[1] != "dst" {
        return Err(Error::Parse(format!(
            "edge list header must be `src,dst`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        if record[0] == record[1] {
            return Err(Error::SelfLoop(record[0].to_string()));
        }
        rows.push((record[0].to_string(), record[1].to_string()));
    }

    let fixed = nodes.map(read_node_list).transpose()?;
    let labels = match &fixed {
        Some(list) => list.clone(),
        None => {
            let mut seen = HashSet::new();
            let mut order = Vec::new();
            for (s, d) in &rows {
                for l in [s, d] {
                    if seen.insert(l.clone()) {
                        order.push(l.clone());
                    }
                }
            }
            order
        }
    };
    let mut network = DirectedNetwork::empty(labels)?;
    let index: HashMap<String, usize> =
        network.labels().iter().enumerate().map(|(k, l)| (l.clone(), k)).collect();

    let mut duplicate_rows = 0;
    for (s, d) in rows {
        let i = *index.get(&s).ok_or_else(|| Error::UnknownLabel(s.clone()))?;
        let j = *index.get(&d).ok_or_else(|| Error::UnknownLabel(d.clone()))?;
        if network.set_edge(i, j, true) {
            duplicate_rows += 1;
        }
    }
    if duplicate_rows > 0 {
        log::warn!("edge list contained {duplicate_rows} duplicate row(s); ignored");
    }
    Ok(LoadedNetwork { network, duplicate_rows })
}

pub fn load_network_files(edges: &Path, nodes: Option<&Path>) -> Result<LoadedNetwork> {
    let e = File::open(edges)?;
    let n = nodes.map(File::open).transpose()?;
    load_network(e, n)
}

/// Source for one dyadic covariate.
pub struct DyadicSource<R> {
    pub name: String,
    pub reader: R,
}

/// Reads covariates and aligns them to `network`'s node order.
///
/// Dyadic long-format tables may be sparse: absent dyads default to zero and
/// are counted in [`CovariateSet::missing_count`].
pub fn load_covariates<N: Read, D: Read>(
    network: &DirectedNetwork,
    nodal: Option<N>,
    dyadic: Vec<DyadicSource<D>>,
) -> Result<CovariateSet> {
    let n = network.n();
    let index: HashMap<&str, usize> =
        network.labels().iter().enumerate().map(|(k, l)| (l.as_str(), k)).collect();
    let lookup = |label: &str| -> Result<usize> {
        index.get(label).copied().ok_or_else(|| Error::UnknownLabel(label.to_string()))
    };
    let mut set = CovariateSet::new(n);

    if let Some(source) = nodal {
        let mut rdr = csv_reader(source);
        let headers = rdr.headers()?.clone();
        if headers.is_empty() || &headers[0] != "node" {
            return Err(Error::Parse("nodal covariate table must start with a `node` column".into()));
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut columns = vec![vec![None; n]; names.len()];
        for record in rdr.records() {
            let record = record?;
            let k = lookup(&record[0])?;
            for (c, name) in names.iter().enumerate() {
                let v = parse_finite(&record[c + 1], &format!("nodal covariate `{name}`"))?;
                columns[c][k] = Some(v);
            }
        }
        for (name, column) in names.into_iter().zip(columns) {
            let mut values = Vec::with_capacity(n);
            for (k, v) in column.into_iter().enumerate() {
                values.push(v.ok_or_else(|| Error::MissingNodeValue {
                    covariate: name.clone(),
                    node: network.label(k).to_string(),
                })?);
            }
            set.add_nodal(name, values)?;
        }
    }

    for DyadicSource { name, reader } in dyadic {
        let (matrix, missing) = read_dyadic(reader, &name, n, &lookup)?;
        if missing > 0 {
            log::warn!("dyadic covariate `{name}`: {missing} absent dyad(s) defaulted to 0");
        }
        set.add_dyadic_with_missing(name, matrix, missing)?;
    }
    Ok(set)
}

fn read_dyadic<R: Read>(
    source: R,
    name: &str,
    n: usize,
    lookup: &dyn Fn(&str) -> Result<usize>,
) -> Result<(DyadicMatrix, usize)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .has_headers(false)
        .flexible(false)
        .from_reader(source);
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| Error::Parse(format!("dyadic covariate `{name}` is empty")))??;
    let context = format!("dyadic covariate `{name}`");
    let mut matrix = DyadicMatrix::zeros(n);
    let mut filled = vec![false; n * n];

    let long = header.len() == 3 && &header[0] == "src" && &header[1] == "dst" && &header[2] == "value";
    if long {
        for record in records {
            let record = record?;
            let (i, j) = (lookup(&record[0])?, lookup(&record[1])?);
            if i == j {
                continue;
            }
            matrix.set(i, j, parse_finite(&record[2], &context)?);
            filled[i * n + j] = true;
        }
    } else {
        let cols: Vec<usize> = header.iter().skip(1).map(lookup).collect::<Result<_>>()?;
        if cols.len() != n {
            return Err(Error::DimensionMismatch { what: context, expected: n, got: cols.len() });
        }
        let mut rows_seen = 0;
        for record in records {
            let record = record?;
            let i = lookup(&record[0])?;
            rows_seen += 1;
            for (c, &j) in cols.iter().enumerate() {
                if i != j {
                    matrix.set(i, j, parse_finite(&record[c + 1], &context)?);
                    filled[i * n + j] = true;
                }
            }
        }
        if rows_seen != n {
            return Err(Error::DimensionMismatch { what: context, expected: n, got: rows_seen });
        }
    }
    let missing = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && !filled[i * n + j])
        .count();
    Ok((matrix, missing))
}

/// Loads covariates from files. Dyadic sources are `(name, path)` pairs.
pub fn load_covariate_files(
    network: &DirectedNetwork,
    nodal: Option<&Path>,
    dyadic: &[(String, std::path::PathBuf)],
) -> Result<CovariateSet> {
    let nodal = nodal.map(File::open).transpose()?;
    let dyadic = dyadic
        .iter()
        .map(|(name, path)| Ok(DyadicSource { name: name.clone(), reader: File::open(path)? }))
        .collect::<Result<Vec<_>>>()?;
    load_covariates(network, nodal, dyadic)
}

/// Writes the edge list as CSV with header `src,dst`, in row-major order.
pub fn write_edge_list<W: Write>(network: &DirectedNetwork, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["src", "dst"])?;
    for (i, j) in network.edges() {
        w.write_record([network.label(i), network.label(j)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn net(edges: &str, nodes: Option<&str>) -> Result<LoadedNetwork> {
        load_network(edges.as_bytes(), nodes.map(str::as_bytes))
    }

    #[test]
    fn reciprocal_pair() {
        let loaded = net("src,dst\nA,B\nB,A\n", None).unwrap();
        let g = loaded.network;
        assert_eq!(g.n(), 2);
        assert!(g.edge(0, 1) && g.edge(1, 0));
        assert_eq!(g.labels(), ["A", "B"]);
    }

    #[test]
    fn node_list_keeps_isolates() {
        let g = net("src,dst\nA,B\n", Some("A\nB\nC\n")).unwrap().network;
        assert_eq!(g.n(), 3);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.in_degree(2) + g.out_degree(2), 0);
    }

    #[test]
    fn node_list_fixes_order() {
        let g = net("src,dst\nA,B\n", Some("C\nB\nA\n")).unwrap().network;
        assert_eq!(g.labels(), ["C", "B", "A"]);
        assert!(g.edge(2, 1));
    }

    #[test]
    fn errors() {
        assert!(matches!(net("src,dst\nA,A\n", None), Err(Error::SelfLoop(_))));
        assert!(matches!(net("src,dst\nA,D\n", Some("A\nB\n")), Err(Error::UnknownLabel(_))));
        assert!(matches!(net("from,to\nA,B\n", None), Err(Error::Parse(_))));
    }

    #[test]
    fn duplicates_are_idempotent() {
        let loaded = net("src,dst\nA,B\nA,B\nB,C\n", None).unwrap();
        assert_eq!(loaded.duplicate_rows, 1);
        assert_eq!(loaded.network.edge_count(), 2);
    }

    fn abc() -> DirectedNetwork {
        net("src,dst\nA,B\n", Some("A\nB\nC\n")).unwrap().network
    }

    #[test]
    fn nodal_alignment() {
        let g = net("src,dst\nA,B\n", None).unwrap().network;
        let c = load_covariates(&g, Some("node,gdp\nB,2.0\nA,1.0\n".as_bytes()), Vec::<DyadicSource<&[u8]>>::new())
            .unwrap();
        assert_eq!(c.nodal("gdp").unwrap(), [1.0, 2.0]);
    }

    #[test]
    fn nodal_missing_node_is_an_error() {
        let r = load_covariates(&abc(), Some("node,gdp\nA,1\nB,2\n".as_bytes()), Vec::<DyadicSource<&[u8]>>::new());
        assert!(matches!(r, Err(Error::MissingNodeValue { .. })));
    }

    #[test]
    fn nodal_rejects_nan_and_unknown_labels() {
        let r = load_covariates(&abc(), Some("node,gdp\nA,1\nB,nan\nC,3\n".as_bytes()), Vec::<DyadicSource<&[u8]>>::new());
        assert!(matches!(r, Err(Error::NonFinite(_))));
        let r = load_covariates(&abc(), Some("node,gdp\nA,1\nZ,1\n".as_bytes()), Vec::<DyadicSource<&[u8]>>::new());
        assert!(matches!(r, Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn sparse_long_dyadic_defaults_to_zero() {
        let src = DyadicSource { name: "dist".into(), reader: "src,dst,value\nA,B,3.5\n".as_bytes() };
        let c = load_covariates(&abc(), None::<&[u8]>, vec![src]).unwrap();
        let m = c.dyadic("dist").unwrap();
        assert_eq!(m.get(0, 1), 3.5);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.get(2, 1), 0.0);
        assert_eq!(c.missing_count("dist"), 5);
    }

    #[test]
    fn labeled_matrix_dyadic() {
        let text = ",C,A,B\nA,0,0,1\nB,2,3,0\nC,0,4,5\n";
        let src = DyadicSource { name: "m".into(), reader: text.as_bytes() };
        let c = load_covariates(&abc(), None::<&[u8]>, vec![src]).unwrap();
        let m = c.dyadic("m").unwrap();
        assert_eq!(m.get(0, 1), 1.0); // A->B
        assert_eq!(m.get(1, 2), 2.0); // B->C
        assert_eq!(m.get(1, 0), 3.0); // B->A
        assert_eq!(m.get(2, 0), 4.0); // C->A
        assert_eq!(c.missing_count("m"), 0);
        let bad = DyadicSource { name: "m".into(), reader: ",A,B\nA,0,1\nB,1,0\n".as_bytes() };
        assert!(matches!(
            load_covariates(&abc(), None::<&[u8]>, vec![bad]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn edge_list_round_trips(n in 2usize..7, bits in proptest::collection::vec(any::<bool>(), 42)) {
            let mut g = DirectedNetwork::with_size(n).unwrap();
            for (d, b) in crate::network::dyads(n).zip(bits) {
                g.set_edge(d.i, d.j, b);
            }
            let mut buf = Vec::new();
            write_edge_list(&g, &mut buf).unwrap();
            let nodes = g.labels().join("\n");
            let back = load_network(buf.as_slice(), Some(nodes.as_bytes())).unwrap().network;
            prop_assert_eq!(back, g);
        }
    }
}
