//! Model specifications (`fuzzy-itisc-r:t1=1,t2=0.1`, `kmeans`, `hc:ward`, ...),
//! fitting, and the per-model prediction rule.

use std::fmt;
use std::str::FromStr;

use itisc::baselines::{
    fcm_membership, fcm_solve, hierarchical_solve, kmeans_solve, nearest_center_labels, FcmOptions,
    KMeansOptions, Linkage,
};
use itisc::distortion::distortion_matrix;
use itisc::engine::{ao_solve, reform_solve, update_membership, AoOptions, ReformOptions};
use itisc::{Centers, Dataset, Diagnostics, DistortionKind, Membership, Rng, Temperatures};

use crate::error::{config, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Ao,
    Reform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    KMeans {
        n_init: usize,
    },
    Fcm {
        m: f64,
    },
    Hierarchical(Linkage),
    /// Mean over all four linkages.
    HierarchicalAll,
    Itisc {
        kind: DistortionKind,
        solver: Solver,
        t1: f64,
        t2: f64,
    },
}

fn parse_params(s: &str) -> CliResult<Vec<(&str, &str)>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| config(format!("expected key=value, got `{kv}`")))
        })
        .collect()
}

fn number(key: &str, v: &str) -> CliResult<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| config(format!("`{key}` must be a number, got `{v}`")))?;
    if !x.is_finite() {
        return Err(config(format!("`{key}` must be finite")));
    }
    Ok(x)
}

impl FromStr for ModelSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let name = name.trim();
        match name {
            "kmeans" | "km" => {
                let mut n_init = 10;
                for (k, v) in parse_params(rest)? {
                    match k {
                        "n_init" => {
                            n_init = v
                                .parse()
                                .ok()
                                .filter(|&n: &usize| n > 0)
                                .ok_or_else(|| config(format!("n_init must be a positive integer, got `{v}`")))?
                        }
                        _ => return Err(config(format!("unknown k-means parameter `{k}`"))),
                    }
                }
                Ok(ModelSpec::KMeans { n_init })
            }
            "fcm" => {
                let mut m = 2.0;
                for (k, v) in parse_params(rest)? {
                    match k {
                        "m" => m = number(k, v)?,
                        _ => return Err(config(format!("unknown FCM parameter `{k}`"))),
                    }
                }
                if m <= 1.0 {
                    return Err(config(format!("fuzzifier m must exceed 1, got {m}")));
                }
                Ok(ModelSpec::Fcm { m })
            }
            "hc" => {
                let linkage = rest.strip_prefix("linkage=").unwrap_or(rest).trim();
                match linkage {
                    "" => Ok(ModelSpec::Hierarchical(Linkage::Ward)),
                    "all" => Ok(ModelSpec::HierarchicalAll),
                    l => Ok(ModelSpec::Hierarchical(l.parse().map_err(|e: itisc::Error| config(e.to_string()))?)),
                }
            }
            "itisc-ao" | "itisc-r" | "fuzzy-itisc-ao" | "fuzzy-itisc-r" => {
                let kind = if name.starts_with("fuzzy") {
                    DistortionKind::LogSquaredEuclidean
                } else {
                    DistortionKind::SquaredEuclidean
                };
                let solver = if name.ends_with("-ao") { Solver::Ao } else { Solver::Reform };
                let (mut t1, mut t2) = (1.0, 1.0);
                for (k, v) in parse_params(rest)? {
                    match k {
                        "t1" => t1 = number(k, v)?,
                        "t2" => t2 = number(k, v)?,
                        _ => return Err(config(format!("unknown {name} parameter `{k}`"))),
                    }
                }
                Temperatures::new(t1, t2).map_err(|e| config(e.to_string()))?;
                Ok(ModelSpec::Itisc { kind, solver, t1, t2 })
            }
            other => Err(config(format!(
                "unknown algorithm `{other}` (expected kmeans, fcm, hc, itisc-ao, itisc-r, fuzzy-itisc-ao or fuzzy-itisc-r)"
            ))),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::KMeans { n_init } => write!(f, "kmeans:n_init={n_init}"),
            ModelSpec::Fcm { m } => write!(f, "fcm:m={m}"),
            ModelSpec::Hierarchical(l) => write!(f, "hc:{l}"),
            ModelSpec::HierarchicalAll => write!(f, "hc:all"),
            ModelSpec::Itisc {
                kind,
                solver,
                t1,
                t2,
            } => {
                let prefix = match kind {
                    DistortionKind::SquaredEuclidean => "itisc",
                    DistortionKind::LogSquaredEuclidean => "fuzzy-itisc",
                };
                let suffix = match solver {
                    Solver::Ao => "ao",
                    Solver::Reform => "r",
                };
                write!(f, "{prefix}-{suffix}:t1={t1},t2={t2}")
            }
        }
    }
}

/// How a fitted model attributes points to clusters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    Nearest,
    Fcm { m: f64 },
    Itisc { kind: DistortionKind, t1: f64 },
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Nearest => "nearest-center",
            Rule::Fcm { .. } | Rule::Itisc { .. } => "argmax-membership",
        }
    }

    /// Soft memberships of `data`, or `None` for hard models.
    pub fn membership(&self, data: &Dataset, centers: &Centers) -> CliResult<Option<Membership>> {
        match *self {
            Rule::Nearest => Ok(None),
            Rule::Fcm { m } => Ok(Some(fcm_membership(data, centers, m)?)),
            Rule::Itisc { kind, t1 } => {
                let dm = distortion_matrix(data, centers)?;
                Ok(Some(update_membership(&dm, t1, kind)))
            }
        }
    }

    pub fn labels(&self, data: &Dataset, centers: &Centers) -> CliResult<Vec<usize>> {
        Ok(match self.membership(data, centers)? {
            Some(u) => u.labels(),
            None => nearest_center_labels(data, centers),
        })
    }
}

/// One solver run on one dataset.
#[derive(Debug, Clone)]
pub struct Fit {
    pub spec: ModelSpec,
    pub seed: u64,
    pub centers: Centers,
    pub labels: Vec<usize>,
    pub membership: Option<Membership>,
    pub weights: Option<Vec<f64>>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostics: Diagnostics,
}

impl ModelSpec {
    /// Concrete models behind this spec (`hc:all` expands to four).
    pub fn expand(&self) -> Vec<ModelSpec> {
        match self {
            ModelSpec::HierarchicalAll => Linkage::ALL
                .into_iter()
                .map(ModelSpec::Hierarchical)
                .collect(),
            other => vec![*other],
        }
    }

    /// Whether different seeds can produce different fits.
    pub fn is_stochastic(&self) -> bool {
        !matches!(
            self,
            ModelSpec::Hierarchical(_) | ModelSpec::HierarchicalAll
        )
    }

    pub fn rule(&self) -> Rule {
        match *self {
            ModelSpec::KMeans { .. } | ModelSpec::Hierarchical(_) | ModelSpec::HierarchicalAll => {
                Rule::Nearest
            }
            ModelSpec::Fcm { m } => Rule::Fcm { m },
            ModelSpec::Itisc { kind, t1, .. } => Rule::Itisc { kind, t1 },
        }
    }

    /// Fits one concrete model. `hc:all` must be expanded first.
    pub fn fit(&self, data: &Dataset, clusters: usize, seed: u64) -> CliResult<Fit> {
        let mut rng = Rng::seed_from_u64(seed);
        let fit = match *self {
            ModelSpec::KMeans { n_init } => {
                let opts = KMeansOptions {
                    n_init,
                    ..Default::default()
                };
                let r = kmeans_solve(data, clusters, &mut rng, &opts)?;
                let objective = r.cost(data);
                let mut diagnostics = Diagnostics::default();
                if !r.empty_clusters.is_empty() {
                    diagnostics.note = Some(format!("empty clusters {:?}", r.empty_clusters));
                }
                Fit {
                    spec: *self,
                    seed,
                    centers: r.centers,
                    labels: r.labels,
                    membership: None,
                    weights: None,
                    objective,
                    iterations: r.iterations,
                    converged: r.converged,
                    diagnostics,
                }
            }
            ModelSpec::Hierarchical(linkage) => {
                let r = hierarchical_solve(data, clusters, linkage)?;
                let objective = r.cost(data);
                Fit {
                    spec: *self,
                    seed,
                    centers: r.centers,
                    labels: r.labels,
                    membership: None,
                    weights: None,
                    objective,
                    iterations: r.iterations,
                    converged: r.converged,
                    diagnostics: Diagnostics::default(),
                }
            }
            ModelSpec::HierarchicalAll => {
                return Err(config(
                    "hc:all is a family of models; fit each linkage separately",
                ))
            }
            ModelSpec::Fcm { m } => {
                let s = fcm_solve(data, clusters, m, &mut rng, &FcmOptions::default())?;
                Fit {
                    spec: *self,
                    seed,
                    labels: s.membership.labels(),
                    centers: s.centers,
                    membership: Some(s.membership),
                    weights: None,
                    objective: s.objective,
                    iterations: s.iterations,
                    converged: s.converged,
                    diagnostics: s.diagnostics,
                }
            }
            ModelSpec::Itisc {
                kind,
                solver,
                t1,
                t2,
            } => {
                let t = Temperatures::new(t1, t2)?;
                let s = match solver {
                    Solver::Ao => {
                        ao_solve(data, clusters, t, kind, &mut rng, &AoOptions::default())?
                    }
                    Solver::Reform => {
                        reform_solve(data, clusters, t, kind, &mut rng, &ReformOptions::default())?
                    }
                };
                Fit {
                    spec: *self,
                    seed,
                    labels: s.membership.labels(),
                    centers: s.centers,
                    membership: Some(s.membership),
                    weights: Some(s.weights.view().to_vec()),
                    objective: s.objective,
                    iterations: s.iterations,
                    converged: s.converged,
                    diagnostics: s.diagnostics,
                }
            }
        };
        if !fit.objective.is_finite() || fit.centers.view().iter().any(|v| !v.is_finite()) {
            return Err(CliError::Numerical(format!(
                "{self} (seed {seed}) produced non-finite results: {:?}",
                fit.diagnostics
            )));
        }
        Ok(fit)
    }
}
