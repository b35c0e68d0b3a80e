//! Run configuration: a flat TOML file with one `phi.N`, `domain.N` and
//! `grid.N` entry per axis.
//!
//! ```toml
//! dimension = 2
//! case = "sum"
//! phi.1 = "x^2/2"
//! phi.2 = "-y^2/2"
//! lambda = "auto"
//! epsilon = 2
//! tie = "0.5*(x*y)^2"
//! domain.1 = 7
//! domain.2 = 7
//! grid.1 = 201
//! grid.2 = 201
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use qes_core::generators::{regularize_lambdas, Case, GeneratingSet};
use qes_core::hamiltonian::GridSpec;
use qes_core::model::{build_model, DomainBox, ModelOptions, QesModel, TieFunction};
use qes_core::verify::{Thresholds, VerifySettings};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{origin}: line {line}, column {column}: {message}")]
    Syntax {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{origin}: {message}")]
    Invalid { origin: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dimension: usize,
    case: Case,
    phi: BTreeMap<String, String>,
    #[serde(default)]
    lambda: Option<RawLambda>,
    epsilon: f64,
    #[serde(default)]
    tie: Option<String>,
    #[serde(default)]
    allow_singular_tie: bool,
    domain: BTreeMap<String, f64>,
    grid: BTreeMap<String, usize>,
    #[serde(default)]
    refine: Option<BTreeMap<String, usize>>,
    k: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
    window: Option<f64>,
    out: Option<PathBuf>,
    #[serde(default)]
    threshold: RawThresholds,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawLambda {
    Word(String),
    Values(BTreeMap<String, f64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawThresholds {
    master_equation: Option<f64>,
    tie_orthogonality: Option<f64>,
    boundary_decay: Option<f64>,
    fd_residual: Option<f64>,
    fd_ratio_min: Option<f64>,
    fd_ratio_max: Option<f64>,
    orthogonality: Option<f64>,
    level: Option<f64>,
    overlap0: Option<f64>,
    overlap1: Option<f64>,
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: Case,
    pub phi: Vec<String>,
    /// `None` regularizes automatically.
    pub lambda: Option<Vec<f64>>,
    pub epsilon: f64,
    /// `None` means `f̃ = 0`.
    pub tie: Option<String>,
    pub allow_singular_tie: bool,
    pub domain: Vec<f64>,
    pub grid: Vec<usize>,
    pub refine: Option<Vec<usize>>,
    pub k: usize,
    pub tol: f64,
    pub seed: u64,
    pub window: f64,
    pub thresholds: Thresholds,
    pub out: Option<PathBuf>,
}

/// Command-line values that replace file keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grid: Option<Vec<usize>>,
    pub domain: Option<Vec<f64>>,
    pub k: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub allow_singular_tie: bool,
    pub out: Option<PathBuf>,
}

/// How the separation constants were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaSource {
    Given,
    Regularized,
}

fn line_column(source: &str, offset: usize) -> (usize, usize) {
    let before = &source[..offset.min(source.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn per_axis<T: Clone>(origin: &str, key: &str, map: BTreeMap<String, T>, n: usize) -> Result<Vec<T>, ConfigError> {
    let invalid = |message: String| ConfigError::Invalid {
        origin: origin.to_string(),
        message,
    };
    let mut out = vec![None; n];
    for (k, v) in map {
        let i: usize = k
            .parse()
            .ok()
            .filter(|i| (1..=n).contains(i))
            .ok_or_else(|| invalid(format!("`{key}.{k}` is not an axis in 1..={n}")))?;
        out[i - 1] = Some(v);
    }
    out.into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| invalid(format!("missing `{key}.{}`", i + 1))))
        .collect()
}

impl RunConfig {
    /// Parses configuration text; `origin` names it in error messages.
    pub fn parse(source: &str, origin: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(source).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_column(source, s.start));
            ConfigError::Syntax {
                origin: origin.to_string(),
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        let invalid = |message: String| ConfigError::Invalid {
            origin: origin.to_string(),
            message,
        };
        let n = raw.dimension;
        if n < 2 {
            return Err(invalid(format!("dimension must be at least 2, got {n}")));
        }
        let lambda = match raw.lambda {
            None => None,
            Some(RawLambda::Word(w)) if w == "auto" => None,
            Some(RawLambda::Word(w)) => return Err(invalid(format!("lambda must be \"auto\" or per-axis values, got {w:?}"))),
            Some(RawLambda::Values(map)) => Some(per_axis(origin, "lambda", map, n)?),
        };
        let tie = raw.tie.filter(|t| t.trim() != "none");
        let d = Thresholds::default();
        let t = raw.threshold;
        Ok(Self {
            case: raw.case,
            phi: per_axis(origin, "phi", raw.phi, n)?,
            lambda,
            epsilon: raw.epsilon,
            tie,
            allow_singular_tie: raw.allow_singular_tie,
            domain: per_axis(origin, "domain", raw.domain, n)?,
            grid: per_axis(origin, "grid", raw.grid, n)?,
            refine: raw.refine.map(|r| per_axis(origin, "refine", r, n)).transpose()?,
            k: raw.k.unwrap_or(8),
            tol: raw.tol.unwrap_or(1e-8),
            seed: raw.seed.unwrap_or(1),
            window: raw.window.unwrap_or(5e-2),
            thresholds: Thresholds {
                master_equation: t.master_equation.unwrap_or(d.master_equation),
                tie_orthogonality: t.tie_orthogonality.unwrap_or(d.tie_orthogonality),
                boundary_decay: t.boundary_decay.unwrap_or(d.boundary_decay),
                fd_residual: t.fd_residual.unwrap_or(d.fd_residual),
                fd_ratio_min: t.fd_ratio_min.unwrap_or(d.fd_ratio_min),
                fd_ratio_max: t.fd_ratio_max.unwrap_or(d.fd_ratio_max),
                orthogonality: t.orthogonality.unwrap_or(d.orthogonality),
                level: t.level.unwrap_or(d.level),
                overlap0: t.overlap0.unwrap_or(d.overlap0),
                overlap1: t.overlap1.unwrap_or(d.overlap1),
            },
            out: raw.out,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let source = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&source, &path.display().to_string())
    }

    pub fn dimension(&self) -> usize {
        self.phi.len()
    }

    /// Applies command-line overrides. A single grid or box value applies
    /// to every axis.
    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        let n = self.dimension();
        let broadcast = |what: &str, len: usize| -> Result<(), ConfigError> {
            if len == 1 || len == n {
                Ok(())
            } else {
                Err(ConfigError::Invalid {
                    origin: "command line".into(),
                    message: format!("--{what} needs 1 or {n} values, got {len}"),
                })
            }
        };
        if let Some(g) = &o.grid {
            broadcast("grid", g.len())?;
            self.grid = if g.len() == 1 { vec![g[0]; n] } else { g.clone() };
            // a refinement level tied to the old grid no longer applies
            self.refine = None;
        }
        if let Some(b) = &o.domain {
            broadcast("box", b.len())?;
            self.domain = if b.len() == 1 { vec![b[0]; n] } else { b.clone() };
        }
        if let Some(k) = o.k {
            self.k = k;
        }
        if let Some(tol) = o.tol {
            self.tol = tol;
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if o.allow_singular_tie {
            self.allow_singular_tie = true;
        }
        if o.out.is_some() {
            self.out = o.out.clone();
        }
        Ok(())
    }

    /// Builds the generating set, choosing λ when asked to.
    pub fn generating_set(&self) -> Result<(GeneratingSet, LambdaSource), qes_core::Error> {
        let sources: Vec<&str> = self.phi.iter().map(String::as_str).collect();
        match &self.lambda {
            Some(l) => Ok((GeneratingSet::parse(self.case, &sources, l.clone(), self.epsilon)?, LambdaSource::Given)),
            None => {
                let n = self.dimension();
                let set = GeneratingSet::parse(self.case, &sources, vec![0.0; n], self.epsilon)?;
                let lambda = regularize_lambdas(&set)?;
                Ok((set.with_lambdas(lambda)?, LambdaSource::Regularized))
            }
        }
    }

    pub fn build(&self) -> Result<(QesModel, LambdaSource), qes_core::Error> {
        let (set, source) = self.generating_set()?;
        let vars = set.variables();
        let tie = match &self.tie {
            Some(src) => TieFunction::parse(src, &vars)?,
            None => TieFunction::zero(vars),
        };
        let domain = DomainBox::symmetric(&self.domain)?;
        let options = ModelOptions {
            allow_singular_tie: self.allow_singular_tie,
            ..ModelOptions::default()
        };
        Ok((build_model(&set, tie, domain, options)?, source))
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec::new(self.domain.clone(), self.grid.clone())
    }

    pub fn verify_settings(&self) -> VerifySettings {
        let mut s = VerifySettings::new(self.grid_spec());
        s.refine = self.refine.clone().map(|r| GridSpec::new(self.domain.clone(), r));
        s.k = self.k;
        s.tol = self.tol;
        s.seed = self.seed;
        s.window = self.window;
        s.thresholds = self.thresholds.clone();
        s
    }
}
