//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cobound::LivsicOptions;
use crate::density::{DensityModel, DEFAULT_K_H, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::maps::{ExpandingMap, FiberRotation};
use crate::symbol::FieldSpec;
use crate::trig::{Coefficient, RealTerm, TrigPoly};
use crate::twisted::{OperatorKind, WeightStyle};

pub const DEFAULT_SEED: u64 = 20240917;
/// Accepted Sobolev orders; below −4 the weights are badly conditioned.
pub const S_MIN: f64 = -4.0;
pub const S_MAX: f64 = -0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Sobolev order, shared by the spectral and symbol experiments.
    #[serde(default = "default_s")]
    pub s: f64,
    pub map: MapSpec,
    pub tau: TauSpec,
    #[serde(default)]
    pub density: DensitySection,
    #[serde(default)]
    pub spectral: SpectralSection,
    #[serde(default)]
    pub symbol: SymbolSection,
    #[serde(default)]
    pub livsic: LivsicOptions,
    #[serde(default)]
    pub correlate: CorrelateSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_s() -> f64 {
    -1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKindSpec {
    Doubling,
    Linear,
    Perturbed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub kind: MapKindSpec,
    /// Integer matrix for `linear`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<i64>>>,
    /// Base multiplier for `perturbed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub perturbation: Vec<RealTerm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
}

impl MapSpec {
    pub fn build(&self) -> Result<ExpandingMap> {
        let map = match self.kind {
            MapKindSpec::Doubling => ExpandingMap::doubling(),
            MapKindSpec::Linear => {
                let m = self
                    .matrix
                    .clone()
                    .ok_or_else(|| Error::Config("map.matrix is required for kind = \"linear\"".into()))?;
                ExpandingMap::linear(m).map_err(as_config)?
            }
            MapKindSpec::Perturbed => {
                let base = self
                    .base
                    .ok_or_else(|| Error::Config("map.base is required for kind = \"perturbed\"".into()))?;
                let p = TrigPoly::from_real_terms(1, &check_terms(&self.perturbation, 1, "map.perturbation")?);
                ExpandingMap::perturbed(base, p).map_err(as_config)?
            }
        };
        Ok(match self.budget {
            Some(b) => map.with_budget(b as u128),
            None => map,
        })
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::InvalidInput(m) => Error::Config(m),
        e => e,
    }
}

fn check_terms(terms: &[RealTerm], dim: usize, what: &str) -> Result<Vec<RealTerm>> {
    if let Some(t) = terms.iter().find(|t| t.freq.len() != dim) {
        return Err(Error::Config(format!(
            "{what}: frequency {:?} should have {dim} entries",
            t.freq
        )));
    }
    Ok(terms.to_vec())
}

/// One component of `τ` per fiber axis, each a list of real Fourier terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauSpec {
    pub components: Vec<TauComponent>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauComponent {
    pub terms: Vec<RealTerm>,
}

impl TauSpec {
    pub fn build(&self, base_dim: usize) -> Result<FiberRotation> {
        if self.components.is_empty() {
            return Err(Error::Config("tau needs at least one component".into()));
        }
        let comps = self
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| check_terms(&c.terms, base_dim, &format!("tau.components[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        FiberRotation::from_real_terms(base_dim, &comps).map_err(as_config)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySection {
    pub k_h: usize,
    pub tol: f64,
}

impl Default for DensitySection {
    fn default() -> Self {
        DensitySection { k_h: DEFAULT_K_H, tol: DEFAULT_TOL }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralSection {
    /// Fourier cut-off; defaults to 64 on the circle and 16 on `T^2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Fiber frequencies; empty means the coordinate vectors.
    pub nu_range: Vec<Vec<i64>>,
    pub operator: OperatorKind,
    pub weight: WeightStyle,
    /// Radii at or above `1 − margin` count as non-contracting.
    pub margin: f64,
}

impl Default for SpectralSection {
    fn default() -> Self {
        SpectralSection {
            k: None,
            nu_range: Vec::new(),
            operator: OperatorKind::Transfer,
            weight: WeightStyle::StandardBracket,
            margin: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymbolSection {
    pub n_max: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_points: Option<usize>,
    /// Angular resolution of the direction grid (degrees).
    pub direction_resolution: f64,
    pub margin: f64,
}

impl Default for SymbolSection {
    fn default() -> Self {
        SymbolSection { n_max: 8, x_points: None, xi_points: None, direction_resolution: 30.0, margin: 1e-3 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationRoute {
    /// Powers of the twisted transfer matrices (any `n`).
    #[default]
    Transfer,
    /// Pointwise iteration and base quadrature (short `n` only).
    Direct,
}

/// Observable pair on `T^d × T^ℓ`; frequencies list the base axes first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub name: String,
    pub phi: Vec<Coefficient>,
    pub psi: Vec<Coefficient>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelateSection {
    pub n_max: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Inclusive fit window `[n_lo, n_hi]`.
    pub window: [usize; 2],
    pub route: CorrelationRoute,
    /// Base grid points per axis for the direct route.
    pub direct_grid: usize,
    /// Empty means the `ν`-pure pair `(e^{−2πiν·y}, e^{2πiν·y})` for the first `ν`.
    pub pairs: Vec<PairSpec>,
}

impl Default for CorrelateSection {
    fn default() -> Self {
        CorrelateSection {
            n_max: 40,
            k: None,
            window: [10, 40],
            route: CorrelationRoute::Transfer,
            direct_grid: 1 << 14,
            pairs: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub csv: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out"), csv: true }
    }
}

/// One `key = value` edit addressed by a dotted path.
#[derive(Clone, Debug, PartialEq)]
pub struct Override {
    pub key: String,
    pub value: toml::Value,
}

impl Override {
    pub fn new(key: impl Into<String>, value: impl Into<toml::Value>) -> Self {
        Override { key: key.into(), value: value.into() }
    }

    /// Parse `KEY=VALUE`; a value that is not valid TOML is taken as a string.
    pub fn parse(kv: &str) -> Result<Self> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected KEY=VALUE, got {kv:?}")))?;
        let raw = v.trim();
        let value = match format!("v = {raw}").parse::<toml::Table>() {
            Ok(mut t) => t.remove("v").expect("key just written"),
            Err(_) => toml::Value::String(raw.to_string()),
        };
        Ok(Override::new(k.trim(), value))
    }

    fn apply(&self, table: &mut toml::Table) -> Result<()> {
        let key = &self.key;
        let mut parts: Vec<&str> = key.split('.').collect();
        let last = parts
            .pop()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::Config(format!("empty key in {key:?}")))?;
        let mut cur = table;
        for p in parts {
            cur = cur
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("{p} in {key:?} is not a section")))?;
        }
        cur.insert(last.to_string(), self.value.clone());
        Ok(())
    }
}

/// Everything built from a config, ready to run.
pub struct System {
    pub map: ExpandingMap,
    pub tau: FiberRotation,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse `text`, apply dotted-key overrides (`spectral.k`, `seed`, …),
    /// then validate.
    pub fn from_toml_with(text: &str, overrides: &[Override]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        for o in overrides {
            o.apply(&mut table)?;
        }
        let text = toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_toml(&text)
    }

    /// This config with `overrides` applied.
    pub fn with_overrides(&self, overrides: &[Override]) -> Result<Self> {
        Self::from_toml_with(&self.to_toml(), overrides)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(S_MIN..=S_MAX).contains(&self.s) {
            return bad(format!("s = {} must lie in [{S_MIN}, {S_MAX}]", self.s));
        }
        let positive = [
            ("density.tol", self.density.tol),
            ("spectral.margin", self.spectral.margin),
            ("symbol.margin", self.symbol.margin),
            ("symbol.direction_resolution", self.symbol.direction_resolution),
            ("livsic.orbit_threshold", self.livsic.orbit_threshold),
            ("livsic.equation_tol", self.livsic.equation_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if self.spectral.k == Some(0) || self.correlate.k == Some(0) {
            return bad("Fourier cut-off k must be at least 1".into());
        }
        if self.symbol.n_max == 0 || self.correlate.n_max == 0 || self.livsic.p_max == 0 {
            return bad("n_max and p_max must be at least 1".into());
        }
        let [lo, hi] = self.correlate.window;
        if lo == 0 || lo > hi || hi > self.correlate.n_max {
            return bad(format!(
                "correlate.window [{lo}, {hi}] must satisfy 1 <= lo <= hi <= n_max = {}",
                self.correlate.n_max
            ));
        }
        let d = self.base_dim()?;
        let l = self.tau.components.len();
        if let Some(nu) = self.spectral.nu_range.iter().find(|nu| nu.len() != l) {
            return bad(format!("spectral.nu_range entry {nu:?} should have {l} entries"));
        }
        for p in &self.correlate.pairs {
            for c in p.phi.iter().chain(&p.psi) {
                if c.freq.len() != d + l {
                    return bad(format!(
                        "correlate pair {:?}: frequency {:?} should have {} entries",
                        p.name,
                        c.freq,
                        d + l
                    ));
                }
            }
        }
        Ok(())
    }

    fn base_dim(&self) -> Result<usize> {
        match self.map.kind {
            MapKindSpec::Doubling | MapKindSpec::Perturbed => Ok(1),
            MapKindSpec::Linear => self
                .map
                .matrix
                .as_ref()
                .map(|m| m.len())
                .ok_or_else(|| Error::Config("map.matrix is required for kind = \"linear\"".into())),
        }
    }

    pub fn build(&self) -> Result<System> {
        let map = self.map.build()?;
        let tau = self.tau.build(map.dim())?;
        Ok(System { map, tau })
    }

    pub fn nu_range(&self) -> Vec<Vec<i64>> {
        if !self.spectral.nu_range.is_empty() {
            return self.spectral.nu_range.clone();
        }
        let l = self.tau.components.len();
        (0..l)
            .map(|i| (0..l).map(|j| i64::from(i == j)).collect())
            .collect()
    }

    pub fn spectral_k(&self, dim: usize) -> usize {
        self.spectral.k.unwrap_or(if dim == 1 { 64 } else { 16 })
    }

    pub fn correlate_k(&self, dim: usize) -> usize {
        self.correlate.k.unwrap_or(if dim == 1 { 64 } else { 16 })
    }

    pub fn field_spec(&self, dim: usize) -> FieldSpec {
        let d = FieldSpec::default_for(dim);
        FieldSpec {
            x_points: self.symbol.x_points.unwrap_or(d.x_points),
            xi_points: self.symbol.xi_points.unwrap_or(d.xi_points),
        }
    }

    pub fn density(&self, map: &ExpandingMap) -> Result<DensityModel> {
        crate::density::invariant_density(map, self.density.k_h, self.density.tol)
    }
}
