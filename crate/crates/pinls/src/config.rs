//! Run configuration: TOML sections with defaults, dotted-path overrides,
//! and construction of the operator / initial datum they describe.

use crate::evolution::EvolutionConfig;
use crate::grid::{make_grid, GridFunction, RadialGrid};
use crate::operator::{DomainState, OperatorError, PointInteractionOp};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("bad override '{0}' (expected key.path=value)")]
    BadOverride(String),
    #[error("unknown datum family '{0}'")]
    UnknownFamily(String),
    #[error("datum 'bound-state' requested but the operator has no bound state")]
    NoBoundState,
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorSection {
    pub dimension: usize,
    pub alpha: f64,
    /// gauge lambda; omit (0) for the operator's default choice
    pub gauge: f64,
}

impl Default for OperatorSection {
    fn default() -> Self {
        OperatorSection { dimension: 3, alpha: 1.0, gauge: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub radius: f64,
    pub size: usize,
    pub grading: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { radius: 40.0, size: 4096, grading: 2.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatumSection {
    /// gaussian | gaussian-difference | bound-state | green
    pub family: String,
    pub amplitude: f64,
    pub width: f64,
    /// attach the boundary-condition charge (gaussian family)
    pub charge: bool,
    /// spectral parameter of the green family
    pub mu: f64,
    /// escape hatch: force this charge verbatim (invariant-violation tests);
    /// NaN (the default) means "not set"
    pub raw_charge: f64,
    /// rescale so the D-norm of the datum equals this value; 0 disables
    pub normalize_dnorm: f64,
}

impl Default for DatumSection {
    fn default() -> Self {
        DatumSection {
            family: "gaussian".into(),
            amplitude: 1.0,
            width: 1.0,
            charge: true,
            mu: 2.0,
            raw_charge: f64::NAN,
            normalize_dnorm: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardSection {
    pub nodes: usize,
    pub iterations: usize,
}

impl Default for PicardSection {
    fn default() -> Self {
        PicardSection { nodes: 64, iterations: 5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecaySection {
    /// Lebesgue exponent of the fitted norm; 0 means the sup-norm surrogate
    pub sigma: f64,
    pub fit_start: f64,
    pub fit_stop: f64,
    pub fit_points: usize,
    /// longest Crank-Nicolson step used between samples
    pub max_substep: f64,
}

impl Default for DecaySection {
    fn default() -> Self {
        DecaySection { sigma: 0.0, fit_start: 1.0, fit_stop: 6.0, fit_points: 11, max_substep: 5e-3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InequalitiesSection {
    pub qs: Vec<f64>,
}

impl Default for InequalitiesSection {
    fn default() -> Self {
        InequalitiesSection { qs: vec![2.0, 2.5] }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub operator: OperatorSection,
    pub grid: GridSection,
    pub evolution: EvolutionConfig,
    pub datum: DatumSection,
    pub picard: PicardSection,
    pub decay: DecaySection,
    pub inequalities: InequalitiesSection,
}

impl RunConfig {
    /// Parse from TOML text, then apply `key.path=value` overrides.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
        let mut value: toml::Value = text.parse()?;
        for ov in overrides {
            apply_override(&mut value, ov)?;
        }
        Ok(value.try_into()?)
    }

    pub fn load(path: Option<&std::path::Path>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides)
    }

    pub fn build_grid(&self) -> Result<Arc<RadialGrid>, OperatorError> {
        Ok(Arc::new(make_grid(
            self.operator.dimension,
            self.grid.radius,
            self.grid.size,
            self.grid.grading,
        )?))
    }

    pub fn build_operator(&self) -> Result<PointInteractionOp, OperatorError> {
        let gauge = if self.operator.gauge > 0.0 { Some(self.operator.gauge) } else { None };
        PointInteractionOp::new(self.build_grid()?, self.operator.alpha, gauge)
    }

    /// Construct the initial datum on the given operator.
    pub fn build_datum(&self, op: &PointInteractionOp) -> Result<DomainState, ConfigError> {
        let d = &self.datum;
        let (lam0, _) = op.discrete_green(Complex64::new(op.gauge, 0.0))?;
        let mut state = match d.family.as_str() {
            "gaussian" => {
                let (a, w) = (d.amplitude, d.width);
                let phi = GridFunction::from_real_fn(&op.grid, |r| a * (-(r / w).powi(2)).exp());
                let q = if d.charge { lam0 * phi.values[0] } else { Complex64::new(0.0, 0.0) };
                DomainState { gauge: op.gauge, phi, q }
            }
            "gaussian-difference" => {
                // chargeless in-domain profile: vanishes at the origin
                let (a, w) = (d.amplitude, d.width);
                let phi = GridFunction::from_real_fn(&op.grid, |r| {
                    a * ((-(r / w).powi(2)).exp() - (-2.0 * (r / w).powi(2)).exp())
                });
                let q = if d.charge { lam0 * phi.values[0] } else { Complex64::new(0.0, 0.0) };
                DomainState { gauge: op.gauge, phi, q }
            }
            "bound-state" => op
                .bound_domain_state()
                .ok_or(ConfigError::NoBoundState)?
                .scaled(Complex64::new(d.amplitude, 0.0)),
            "green" => {
                // unit charge, regular part G^mu - G^lambda0 at the operator gauge
                let (_, gdmu) = op.discrete_green(Complex64::new(d.mu, 0.0))?;
                let phi = gdmu.axpy(Complex64::new(-1.0, 0.0), &op.gd0());
                DomainState { gauge: op.gauge, phi, q: Complex64::new(d.amplitude, 0.0) }
            }
            other => return Err(ConfigError::UnknownFamily(other.to_string())),
        };
        if !d.raw_charge.is_nan() {
            state.q = Complex64::new(d.raw_charge, 0.0);
        }
        if d.normalize_dnorm > 0.0 {
            let dn = crate::diagnostics::d_norm(op, &state);
            state = state.scaled(Complex64::new(d.normalize_dnorm / dn, 0.0));
        }
        Ok(state)
    }
}

/// Apply one `a.b.c=value` override into the parsed TOML tree; the value is
/// itself parsed as TOML (falling back to a string).
fn apply_override(root: &mut toml::Value, ov: &str) -> Result<(), ConfigError> {
    let (path, raw) = ov.split_once('=').ok_or_else(|| ConfigError::BadOverride(ov.into()))?;
    let parts: Vec<&str> = path.trim().split('.').collect();
    if parts.is_empty() || parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::BadOverride(ov.into()));
    }
    let parsed: toml::Value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(t) => t["v"].clone(),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let mut cur = root;
    for p in &parts[..parts.len() - 1] {
        if !cur.is_table() {
            return Err(ConfigError::BadOverride(ov.into()));
        }
        cur = cur
            .as_table_mut()
            .unwrap()
            .entry(p.to_string())
            .or_insert(toml::Value::Table(toml::Table::new()));
    }
    match cur.as_table_mut() {
        Some(t) => {
            t.insert(parts[parts.len() - 1].to_string(), parsed);
            Ok(())
        }
        None => Err(ConfigError::BadOverride(ov.into())),
    }
}
