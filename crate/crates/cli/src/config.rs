//! Scenario configuration. Every section rejects unknown keys.

use std::path::Path;

use anyhow::Context;
use opencomp_core::{Boundary, Grid, IntegratorConfig, ParamsConfig, Stencil};
use serde::{Deserialize, Serialize};

use crate::failure::{config_error, validation_error};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    ComponentDecay,
    EvolveComponent,
    EvolveState,
    #[serde(alias = "oracle-diff")]
    #[value(alias = "oracle-diff")]
    OracleCompare,
    SymmetryScan,
    RotationsTable,
    ResidualCheck,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::ComponentDecay => "component-decay",
            Kind::EvolveComponent => "evolve-component",
            Kind::EvolveState => "evolve-state",
            Kind::OracleCompare => "oracle-compare",
            Kind::SymmetryScan => "symmetry-scan",
            Kind::RotationsTable => "rotations-table",
            Kind::ResidualCheck => "residual-check",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioSection,
    #[serde(default = "default_params")]
    pub params: ParamsConfig,
    #[serde(default)]
    pub grid: GridSpec,
    /// Grid along `x_d`; defaults to `grid`.
    #[serde(default)]
    pub xd_grid: Option<GridSpec>,
    #[serde(default)]
    pub component: ComponentSpec,
    #[serde(default)]
    pub spectral: SpectralSpec,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub symmetry: SymmetrySpec,
    #[serde(default)]
    pub residual: ResidualSpec,
    #[serde(default)]
    pub rotations: RotationsSpec,
}

fn default_params() -> ParamsConfig {
    ParamsConfig {
        m: 1.0,
        hbar: 1.0,
        nu: 1.0,
        xi: 0.0,
        d0: 2.0,
        d2: 1.0,
        f: 0.0,
        strict_positivity: false,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    #[serde(default)]
    pub kind: Option<Kind>,
    /// Output times after `t = 0`, strictly increasing.
    #[serde(default)]
    pub schedule: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub length: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: 128, length: 28.0 }
    }
}

impl GridSpec {
    pub fn grid(&self) -> anyhow::Result<Grid> {
        Ok(Grid::new(self.n, self.length)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileShape {
    Gaussian,
    Constant,
}

/// Initial profile `amplitude * exp(-(y - center)^2 / (2 sigma^2) + i k0 y)`
/// of a single component with label `q = q_re + i q_im`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComponentSpec {
    pub q_re: f64,
    pub q_im: f64,
    pub profile: ProfileShape,
    pub amplitude: f64,
    pub center: f64,
    pub sigma: f64,
    pub k0: f64,
}

impl Default for ComponentSpec {
    fn default() -> Self {
        Self {
            q_re: 1.0,
            q_im: 0.0,
            profile: ProfileShape::Gaussian,
            amplitude: 1.0,
            center: 0.0,
            sigma: 1.0,
            k0: 0.0,
        }
    }
}

/// Gaussian spread of wave vectors: mode `q` carries
/// `exp(-q^2 / (2 dq^2))` times a Gaussian of width `sigma_d` in `x_d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralSpec {
    pub dq: f64,
    pub sigma_d: f64,
    pub k0: f64,
}

impl Default for SpectralSpec {
    fn default() -> Self {
        Self {
            dq: 0.5,
            sigma_d: 1.0,
            k0: 0.0,
        }
    }
}

/// Integrator settings; a missing `dt` resolves to the stability bound
/// (capped at 0.01).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub dt: Option<f64>,
    pub stencil: Stencil,
    pub boundary: Boundary,
    pub safety: f64,
    pub edge_tolerance: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let base = IntegratorConfig::spectral(1e-3);
        Self {
            dt: None,
            stencil: base.stencil,
            boundary: base.boundary,
            safety: base.safety,
            edge_tolerance: base.edge_tolerance,
        }
    }
}

impl IntegratorSection {
    pub fn with_bound(&self, bound: impl FnOnce(&IntegratorConfig) -> f64) -> IntegratorConfig {
        let mut cfg = IntegratorConfig {
            dt: 1.0,
            stencil: self.stencil,
            boundary: self.boundary,
            safety: self.safety,
            edge_tolerance: self.edge_tolerance,
        };
        cfg.dt = match self.dt {
            Some(dt) => dt,
            None => bound(&cfg).min(0.01),
        };
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymmetrySpec {
    /// `[a_plus, a_minus]` pairs.
    pub shifts: Vec<[f64; 2]>,
    pub t: f64,
    /// Width of the Gaussian test state in both coordinates.
    pub sigma: f64,
}

impl Default for SymmetrySpec {
    fn default() -> Self {
        Self {
            shifts: vec![[1.0, 1.0], [0.5, -0.5]],
            t: 0.5,
            sigma: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResidualSpec {
    /// Point counts of the successively refined grids (all of length `grid.length`).
    pub grids: Vec<usize>,
    pub h_t: f64,
    pub times: Vec<f64>,
    pub stencil: Stencil,
    pub formula: opencomp_core::CoefficientFormula,
}

impl Default for ResidualSpec {
    fn default() -> Self {
        Self {
            grids: vec![64, 128, 256],
            h_t: 1e-4,
            times: vec![0.3, 0.8, 1.5],
            stencil: Stencil::Order4,
            formula: opencomp_core::CoefficientFormula::Rederived,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RotationsSpec {
    /// Largest angular momentum, integer or half-integer.
    pub lmax: f64,
}

impl Default for RotationsSpec {
    fn default() -> Self {
        Self { lmax: 2.0 }
    }
}

impl Config {
    pub fn minimal(name: &str, kind: Kind) -> Self {
        toml::from_str::<Config>(&format!("[scenario]\nname = {name:?}\nkind = {:?}\n", kind.name()))
            .expect("minimal config parses")
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| config_error(e.to_string()))
    }

    pub fn xd_grid_spec(&self) -> GridSpec {
        self.xd_grid.unwrap_or(self.grid)
    }

    /// Checks the schedule and the scenario name.
    pub fn check(&self) -> anyhow::Result<()> {
        let name = &self.scenario.name;
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(validation_error(format!(
                "scenario name {name:?} must be non-empty and use only [A-Za-z0-9._-]"
            )));
        }
        let schedule = &self.scenario.schedule;
        if let Some(bad) = schedule.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(validation_error(format!("schedule time {bad} must be finite and positive")));
        }
        if schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(validation_error("schedule must be strictly increasing"));
        }
        Ok(())
    }

    /// `0` followed by the schedule.
    pub fn times(&self) -> Vec<f64> {
        std::iter::once(0.0).chain(self.scenario.schedule.iter().copied()).collect()
    }
}
