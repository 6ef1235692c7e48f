use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default decay of the geometrically weighted terms, `log 2`.
pub const DEFAULT_DECAY: f64 = std::f64::consts::LN_2;

/// Directed edgewise shared-partner configurations.
///
/// For an edge `i -> j`, a node `h` is a partner when
/// - `Otp` (outgoing two-path): `i -> h -> j`;
/// - `Isp` (incoming shared partner): `h -> i` and `h -> j`;
/// - `Osp` (outgoing shared partner): `i -> h` and `j -> h`;
/// - `Itp` (incoming two-path): `j -> h -> i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EspVariant {
    Otp,
    Isp,
    Osp,
    Itp,
}

impl EspVariant {
    pub const ALL: [EspVariant; 4] = [EspVariant::Otp, EspVariant::Isp, EspVariant::Osp, EspVariant::Itp];

    pub fn name(self) -> &'static str {
        match self {
            EspVariant::Otp => "otp",
            EspVariant::Isp => "isp",
            EspVariant::Osp => "osp",
            EspVariant::Itp => "itp",
        }
    }
}

impl FromStr for EspVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "otp" => Ok(EspVariant::Otp),
            "isp" => Ok(EspVariant::Isp),
            "osp" => Ok(EspVariant::Osp),
            "itp" => Ok(EspVariant::Itp),
            other => Err(Error::InvalidTerm(format!("unknown shared-partner variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TermKind {
    Edges,
    Mutual,
    /// Sender covariate: `sum y_ij x_i`.
    NodeOutCov(String),
    /// Receiver covariate: `sum y_ij x_j`.
    NodeInCov(String),
    /// Dyadic covariate: `sum y_ij x_ij`.
    EdgeCov(String),
    /// `sum y_ij |x_i - x_j|` for a nodal covariate.
    AbsDiffCov(String),
    GwIdegree { decay: f64 },
    GwOdegree { decay: f64 },
    GwEsp { variant: EspVariant, decay: f64 },
    /// Number of nodes with in-degree exactly `k`.
    IdegreeCount(usize),
    /// Number of nodes with out-degree exactly `k`.
    OdegreeCount(usize),
}

impl TermKind {
    /// True when the term's change statistic never depends on other dyads.
    pub fn is_dyad_independent(&self) -> bool {
        matches!(
            self,
            TermKind::Edges
                | TermKind::NodeOutCov(_)
                | TermKind::NodeInCov(_)
                | TermKind::EdgeCov(_)
                | TermKind::AbsDiffCov(_)
        )
    }

    pub fn decay(&self) -> Option<f64> {
        match self {
            TermKind::GwIdegree { decay } | TermKind::GwOdegree { decay } | TermKind::GwEsp { decay, .. } => {
                Some(*decay)
            }
            _ => None,
        }
    }

    pub fn covariate(&self) -> Option<&str> {
        match self {
            TermKind::NodeOutCov(c) | TermKind::NodeInCov(c) | TermKind::EdgeCov(c) | TermKind::AbsDiffCov(c) => {
                Some(c)
            }
            _ => None,
        }
    }
}

fn fmt_decay(f: &mut fmt::Formatter<'_>, name: &str, prefix: &str, decay: f64) -> fmt::Result {
    if decay == DEFAULT_DECAY {
        if prefix.is_empty() {
            write!(f, "{name}")
        } else {
            write!(f, "{name}({prefix})")
        }
    } else if prefix.is_empty() {
        write!(f, "{name}({decay})")
    } else {
        write!(f, "{name}({prefix},{decay})")
    }
}

impl fmt::Display for TermKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermKind::Edges => write!(f, "edges"),
            TermKind::Mutual => write!(f, "mutual"),
            TermKind::NodeOutCov(c) => write!(f, "nodeocov({c})"),
            TermKind::NodeInCov(c) => write!(f, "nodeicov({c})"),
            TermKind::EdgeCov(c) => write!(f, "edgecov({c})"),
            TermKind::AbsDiffCov(c) => write!(f, "absdiff({c})"),
            TermKind::GwIdegree { decay } => fmt_decay(f, "gwidegree", "", *decay),
            TermKind::GwOdegree { decay } => fmt_decay(f, "gwodegree", "", *decay),
            TermKind::GwEsp { variant, decay } => fmt_decay(f, "gwesp", variant.name(), *decay),
            TermKind::IdegreeCount(k) => write!(f, "idegree({k})"),
            TermKind::OdegreeCount(k) => write!(f, "odegree({k})"),
        }
    }
}

fn parse_decay(arg: &str) -> Result<f64> {
    let d: f64 = arg
        .trim()
        .parse()
        .map_err(|_| Error::InvalidTerm(format!("decay `{arg}` is not a number")))?;
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::InvalidTerm(format!("decay must be positive and finite, got {d}")));
    }
    Ok(d)
}

impl FromStr for TermKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) => {
                if !s.ends_with(')') {
                    return Err(Error::InvalidTerm(format!("unbalanced parentheses in `{s}`")));
                }
                (&s[..open], Some(&s[open + 1..s.len() - 1]))
            }
            None => (s, None),
        };
        let args: Vec<&str> = args
            .map(|a| a.split(',').map(str::trim).filter(|t| !t.is_empty()).collect())
            .unwrap_or_default();
        let name = name.trim().to_ascii_lowercase();
        let one_name = |ctor: fn(String) -> TermKind| match args.as_slice() {
            [c] => Ok(ctor((*c).to_string())),
            _ => Err(Error::InvalidTerm(format!("`{name}` takes exactly one covariate name"))),
        };
        let decay_only = |args: &[&str]| match args {
            [] => Ok(DEFAULT_DECAY),
            [d] => parse_decay(d),
            _ => Err(Error::InvalidTerm(format!("`{name}` takes at most one decay argument"))),
        };
        let count = |args: &[&str]| match args {
            [k] => k.parse::<usize>().map_err(|_| Error::InvalidTerm(format!("degree `{k}` is not an integer"))),
            _ => Err(Error::InvalidTerm(format!("`{name}` takes exactly one degree"))),
        };
        let no_args = |kind: TermKind| {
            if args.is_empty() {
                Ok(kind)
            } else {
                Err(Error::InvalidTerm(format!("`{name}` takes no arguments")))
            }
        };
        match name.as_str() {
            "edges" => no_args(TermKind::Edges),
            "mutual" => no_args(TermKind::Mutual),
            "nodeocov" => one_name(TermKind::NodeOutCov),
            "nodeicov" => one_name(TermKind::NodeInCov),
            "edgecov" => one_name(TermKind::EdgeCov),
            "absdiff" => one_name(TermKind::AbsDiffCov),
            "gwidegree" => Ok(TermKind::GwIdegree { decay: decay_only(&args)? }),
            "gwodegree" => Ok(TermKind::GwOdegree { decay: decay_only(&args)? }),
            "gwesp" => match args.as_slice() {
                [v] => Ok(TermKind::GwEsp { variant: v.parse()?, decay: DEFAULT_DECAY }),
                [v, d] => Ok(TermKind::GwEsp { variant: v.parse()?, decay: parse_decay(d)? }),
                _ => Err(Error::InvalidTerm("`gwesp` takes (variant[, decay])".into())),
            },
            "idegree" => Ok(TermKind::IdegreeCount(count(&args)?)),
            "odegree" => Ok(TermKind::OdegreeCount(count(&args)?)),
            "" => Err(Error::InvalidTerm("empty term".into())),
            other => Err(Error::InvalidTerm(format!("unknown term `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatTerm {
    pub kind: TermKind,
    pub label: String,
}

impl StatTerm {
    pub fn new(kind: TermKind) -> Self {
        let label = kind.to_string();
        StatTerm { kind, label }
    }
}

/// An ordered list of statistic terms; the order fixes the coefficient order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    terms: Vec<StatTerm>,
}

impl ModelSpec {
    pub fn new(kinds: Vec<TermKind>) -> Result<Self> {
        Self::from_terms(kinds.into_iter().map(StatTerm::new).collect())
    }

    pub fn from_terms(terms: Vec<StatTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidTerm("a model needs at least one term".into()));
        }
        for (k, t) in terms.iter().enumerate() {
            if let Some(d) = t.kind.decay() {
                if !(d.is_finite() && d > 0.0) {
                    return Err(Error::InvalidTerm(format!("decay must be positive, got {d}")));
                }
            }
            if terms[..k].iter().any(|o| o.label == t.label) {
                return Err(Error::InvalidTerm(format!("duplicate term `{}`", t.label)));
            }
        }
        Ok(ModelSpec { terms })
    }

    /// Parses a `+`-separated term list, e.g. `edges + mutual + gwesp(otp,0.693)`.
    pub fn parse(formula: &str) -> Result<Self> {
        let kinds = formula
            .split('+')
            .map(str::parse)
            .collect::<Result<Vec<TermKind>>>()?;
        Self::new(kinds)
    }

    pub fn terms(&self) -> &[StatTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.label.clone()).collect()
    }

    pub fn position(&self, kind: &TermKind) -> Option<usize> {
        self.terms.iter().position(|t| &t.kind == kind)
    }

    /// True when every tie is independent of every other tie under the model.
    pub fn is_dyad_independent(&self) -> bool {
        self.terms.iter().all(|t| t.kind.is_dyad_independent())
    }

    /// Sub-model with only the terms satisfying `keep`.
    pub fn filter(&self, keep: impl Fn(&TermKind) -> bool) -> Option<ModelSpec> {
        let terms: Vec<StatTerm> = self.terms.iter().filter(|t| keep(&t.kind)).cloned().collect();
        if terms.is_empty() {
            None
        } else {
            Some(ModelSpec { terms })
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.terms.iter().map(|t| t.kind.to_string()).collect();
        write!(f, "{}", parts.join(" + "))
    }
}
