//! Experiment configuration files.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::Deserializer;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::corpus::{self, CorpusEntry};
use crate::euclid::{Endo, Grid};
use crate::{tolerances, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Decompose,
    Decay,
    Bessel,
    Kernel,
    Factorize,
    TauScan,
    Quantize,
    Schatten,
    Cordes,
    Tcp2,
    Cv,
    Sobolev,
    HsIdentity,
    Scaling,
    DualSobolev,
}

impl Experiment {
    pub const ALL: [Experiment; 15] = [
        Experiment::Decompose,
        Experiment::Decay,
        Experiment::Bessel,
        Experiment::Kernel,
        Experiment::Factorize,
        Experiment::TauScan,
        Experiment::Quantize,
        Experiment::Schatten,
        Experiment::Cordes,
        Experiment::Tcp2,
        Experiment::Cv,
        Experiment::Sobolev,
        Experiment::HsIdentity,
        Experiment::Scaling,
        Experiment::DualSobolev,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Decompose => "decompose",
            Experiment::Decay => "decay",
            Experiment::Bessel => "bessel",
            Experiment::Kernel => "kernel",
            Experiment::Factorize => "factorize",
            Experiment::TauScan => "tau-scan",
            Experiment::Quantize => "quantize",
            Experiment::Schatten => "schatten",
            Experiment::Cordes => "cordes",
            Experiment::Tcp2 => "tcp2",
            Experiment::Cv => "cv",
            Experiment::Sobolev => "sobolev",
            Experiment::HsIdentity => "hs-identity",
            Experiment::Scaling => "scaling",
            Experiment::DualSobolev => "dual-sobolev",
        }
    }

    /// Whether the experiment forms `N^n x N^n` matrices.
    pub fn uses_matrices(self) -> bool {
        matches!(
            self,
            Experiment::Kernel
                | Experiment::Factorize
                | Experiment::TauScan
                | Experiment::Quantize
                | Experiment::Schatten
                | Experiment::Cordes
                | Experiment::Tcp2
                | Experiment::Cv
                | Experiment::Sobolev
                | Experiment::HsIdentity
        )
    }

    /// Keys accepted in `params`.
    pub fn param_keys(self) -> &'static [&'static str] {
        match self {
            Experiment::Decompose => &[
                "symbol",
                "m",
                "t_max",
                "nodes",
                "samples",
                "radius",
                "center",
                "band_symbol",
                "band_points",
                "band_half_width",
                "band_t",
                "band_m",
                "band_k",
            ],
            Experiment::Decay => &["symbol", "m", "k", "levels", "l1_levels", "l1_symbols"],
            Experiment::Bessel => &["r", "exclude_origin"],
            Experiment::Kernel => &["a", "b", "m", "levels", "dump"],
            Experiment::Factorize => &["s", "m", "pairs"],
            Experiment::TauScan => &["a", "b", "s", "m", "k_min", "k_max"],
            Experiment::Quantize => &["pairs", "dump"],
            Experiment::Schatten => &["rank_one_trials", "dft_sizes"],
            Experiment::Cordes => &["s", "t", "levels", "k_min", "k_max"],
            Experiment::Tcp2 => &["t", "s"],
            Experiment::Cv => &["baseline"],
            Experiment::Sobolev => &["s", "mu"],
            Experiment::HsIdentity => &["levels"],
            Experiment::Scaling => &["m_list", "k_max"],
            Experiment::DualSobolev => &["m_list", "r", "levels"],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::config("experiment", format!("unknown experiment `{s}`")))
    }
}

/// Grid parameters as written in configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    #[serde(rename = "N")]
    pub points: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points: usize, half_width: f64) -> Self {
        Self {
            dim,
            points,
            half_width,
        }
    }

    pub fn build(&self, path: &str) -> Result<Grid> {
        Grid::new(self.dim, self.points, self.half_width).map_err(|e| Error::config(path, e.to_string()))
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        Self::new(g.dim, g.points, g.half_width)
    }
}

/// A `tau`: a named preset, a scalar multiple of the identity, or a matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauSpec {
    Preset(String),
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl TauSpec {
    pub fn preset_value(name: &str) -> Option<f64> {
        match name {
            "kn" => Some(0.0),
            "weyl" => Some(0.5),
            "adjoint" => Some(1.0),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            TauSpec::Preset(name) => name.clone(),
            TauSpec::Scalar(s) => format!("{s}"),
            TauSpec::Matrix(rows) => format!("{rows:?}"),
        }
    }

    pub fn resolve(&self, dim: usize, path: &str) -> Result<Endo> {
        let err = |e: Error| Error::config(path, e.to_string());
        match self {
            TauSpec::Preset(name) => {
                let s = Self::preset_value(name)
                    .ok_or_else(|| Error::config(path, format!("unknown preset `{name}` (kn, weyl, adjoint)")))?;
                Endo::scalar(dim, s).map_err(err)
            }
            TauSpec::Scalar(s) => Endo::scalar(dim, *s).map_err(err),
            TauSpec::Matrix(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::config(path, format!("expected a {dim}x{dim} matrix")));
                }
                Endo::from_rows(rows).map_err(err)
            }
        }
    }
}

/// A Schatten exponent: a number `>= 1` or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PValue(pub f64);

impl Serialize for PValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for PValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(PValue(v)),
            Raw::Str(s) if s == "inf" => Ok(PValue(f64::INFINITY)),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got `{s}`"
            ))),
        }
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        One(String),
        Many(Vec<String>),
    }
    Ok(match Raw::deserialize(d)? {
        Raw::One(s) => vec![s],
        Raw::Many(v) => v,
    })
}

/// One experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Primary grid; each experiment has a default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// Further grids, e.g. an `n = 2` grid for a non-scalar `tau`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_grids: Vec<GridSpec>,
    /// Corpus references; each experiment has a default selection.
    #[serde(
        default,
        alias = "symbol",
        deserialize_with = "one_or_many",
        skip_serializing_if = "Vec::is_empty"
    )]
    pub symbols: Vec<String>,
    /// Defaults to `kn`, `weyl`, `adjoint`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tau: Vec<TauSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub p_list: Vec<PValue>,
    /// Experiment-specific parameters, see [`Experiment::param_keys`].
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
    /// Overrides of the defaults in [`crate::tolerances`].
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Largest `N^n` a matrix experiment may factor.
    #[serde(default = "default_cap")]
    pub matrix_cap: usize,
}

fn default_cap() -> usize {
    tolerances::MATRIX_CAP
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            grid: None,
            extra_grids: Vec::new(),
            symbols: Vec::new(),
            tau: Vec::new(),
            p_list: Vec::new(),
            params: Map::new(),
            tolerances: BTreeMap::new(),
            seed: 0,
            output: None,
            matrix_cap: tolerances::MATRIX_CAP,
        }
    }

    /// Parses and validates a config.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(
                if path == "." { "$".to_string() } else { path },
                e.into_inner().to_string(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("$", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Checks every field that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        let grids = self.grids(None)?;
        for (i, s) in self.symbols.iter().enumerate() {
            corpus::parse(s).map_err(|e| Error::config(format!("symbols[{i}]"), e.to_string()))?;
        }
        for (i, t) in self.tau.iter().enumerate() {
            let path = format!("tau[{i}]");
            match t {
                TauSpec::Matrix(rows) if !grids.is_empty() => {
                    let g = grids
                        .iter()
                        .find(|g| g.dim == rows.len())
                        .ok_or_else(|| Error::config(&path, format!("no grid of dimension {}", rows.len())))?;
                    t.resolve(g.dim, &path)?;
                }
                TauSpec::Matrix(rows) => {
                    t.resolve(rows.len(), &path)?;
                }
                _ => {
                    t.resolve(1, &path)?;
                }
            }
        }
        for (i, p) in self.p_list.iter().enumerate() {
            if !(p.0 >= 1.0) {
                return Err(Error::config(
                    format!("p_list[{i}]"),
                    format!("p must be >= 1, got {}", p.0),
                ));
            }
        }
        if matches!(self.experiment, Experiment::Schatten | Experiment::Tcp2) && self.p_list.is_empty() {
            return Err(Error::config(
                "p_list",
                format!("{} needs a nonempty p_list", self.experiment),
            ));
        }
        for (k, v) in &self.tolerances {
            if !tolerances::ALL.iter().any(|(name, _)| name == k) {
                return Err(Error::config(format!("tolerances.{k}"), "unknown tolerance"));
            }
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::config(
                    format!("tolerances.{k}"),
                    format!("must be finite and nonnegative, got {v}"),
                ));
            }
        }
        let keys = self.experiment.param_keys();
        for k in self.params.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(Error::config(
                    format!("params.{k}"),
                    format!("not a parameter of {} (accepted: {})", self.experiment, keys.join(", ")),
                ));
            }
        }
        if self.matrix_cap == 0 {
            return Err(Error::config("matrix_cap", "must be positive"));
        }
        Ok(())
    }

    /// The primary grid, or `default` when the config gives none.
    pub fn grid_or(&self, default: Option<GridSpec>) -> Result<Grid> {
        match (self.grid, default) {
            (Some(g), _) => g.build("grid"),
            (None, Some(d)) => d.build("grid"),
            (None, None) => Err(Error::config("grid", format!("{} needs a grid", self.experiment))),
        }
    }

    /// The primary grid followed by `extra_grids`.
    pub fn grids(&self, default: Option<GridSpec>) -> Result<Vec<Grid>> {
        let mut out = Vec::new();
        if self.grid.is_some() || default.is_some() {
            out.push(self.grid_or(default)?);
        }
        for (i, g) in self.extra_grids.iter().enumerate() {
            out.push(g.build(&format!("extra_grids[{i}]"))?);
        }
        Ok(out)
    }

    /// Resolved symbols, or `default` references when none are given.
    pub fn entries(&self, default: &[&str]) -> Result<Vec<CorpusEntry>> {
        if self.symbols.is_empty() {
            default.iter().map(|s| corpus::parse(s)).collect()
        } else {
            self.symbols
                .iter()
                .enumerate()
                .map(|(i, s)| corpus::parse(s).map_err(|e| Error::config(format!("symbols[{i}]"), e.to_string())))
                .collect()
        }
    }

    /// Labelled `tau`s of dimension `dim`; all of them when `dims_only` is false,
    /// otherwise those whose shape fits `dim` (matrices of other sizes skipped).
    pub fn taus(&self, dim: usize, dims_only: bool) -> Result<Vec<(String, Endo)>> {
        let specs: Vec<TauSpec> = if self.tau.is_empty() {
            ["kn", "weyl", "adjoint"]
                .iter()
                .map(|s| TauSpec::Preset(s.to_string()))
                .collect()
        } else {
            self.tau.clone()
        };
        let mut out = Vec::new();
        for (i, t) in specs.iter().enumerate() {
            if dims_only {
                if let TauSpec::Matrix(rows) = t {
                    if rows.len() != dim {
                        continue;
                    }
                }
            }
            out.push((t.label(), t.resolve(dim, &format!("tau[{i}]"))?));
        }
        Ok(out)
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.p_list.iter().map(|p| p.0).collect()
    }

    /// A tolerance by name, with overrides applied.
    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances.get(name).copied().unwrap_or_else(|| {
            tolerances::ALL
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| *v)
                .unwrap_or_else(|| panic!("no tolerance named `{name}`"))
        })
    }

    /// Typed access to `params`.
    pub fn params(&self) -> Params<'_> {
        Params(&self.params)
    }

    /// Guard against `N^n x N^n` matrices beyond `matrix_cap`.
    pub fn check_matrix_size(&self, g: &Grid) -> Result<()> {
        if g.len() > self.matrix_cap {
            return Err(Error::Resource(format!(
                "N^n = {} exceeds the matrix-dimension cap {}",
                g.len(),
                self.matrix_cap
            )));
        }
        Ok(())
    }
}

/// Typed view of `params`; type errors carry the field path.
pub struct Params<'a>(&'a Map<String, Value>);

impl Params<'_> {
    fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }

    fn bad(key: &str, want: &str) -> Error {
        Error::config(format!("params.{key}"), format!("expected {want}"))
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| Self::bad(key, "a number")),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|v| v as usize)
                .ok_or_else(|| Self::bad(key, "a nonnegative integer")),
        }
    }

    pub fn bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.as_bool().ok_or_else(|| Self::bad(key, "a boolean")),
        }
    }

    pub fn string(&self, key: &str, default: &str) -> Result<String> {
        match self.get(key) {
            None => Ok(default.to_string()),
            Some(v) => v.as_str().map(str::to_string).ok_or_else(|| Self::bad(key, "a string")),
        }
    }

    pub fn f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| Self::bad(key, "a list of numbers")))
                .collect(),
            Some(_) => Err(Self::bad(key, "a list of numbers")),
        }
    }

    pub fn usize_list(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| {
                    v.as_u64()
                        .map(|v| v as usize)
                        .ok_or_else(|| Self::bad(key, "a list of nonnegative integers"))
                })
                .collect(),
            Some(_) => Err(Self::bad(key, "a list of nonnegative integers")),
        }
    }

    /// Corpus references in `params.key`, resolved.
    pub fn entries(&self, key: &str, default: &[&str]) -> Result<Vec<CorpusEntry>> {
        let refs: Vec<String> = match self.get(key) {
            None => default.iter().map(|s| s.to_string()).collect(),
            Some(Value::String(s)) => vec![s.clone()],
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| {
                    v.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| Self::bad(key, "corpus references"))
                })
                .collect::<Result<_>>()?,
            Some(_) => return Err(Self::bad(key, "corpus references")),
        };
        refs.iter()
            .map(|r| corpus::parse(r).map_err(|e| Error::config(format!("params.{key}"), e.to_string())))
            .collect()
    }

    /// A single corpus reference.
    pub fn entry(&self, key: &str, default: &str) -> Result<CorpusEntry> {
        let r = self.string(key, default)?;
        corpus::parse(&r).map_err(|e| Error::config(format!("params.{key}"), e.to_string()))
    }

    /// Refinement levels, strictly increasing.
    pub fn levels(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        let levels = self.usize_list(key, default)?;
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(
                format!("params.{key}"),
                "levels must be strictly increasing",
            ));
        }
        Ok(levels)
    }
}
