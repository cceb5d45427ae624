//! JSON run-configuration: the system matrices, numerical tolerances and
//! per-command parameter sections. Parsing lives here; validation of the
//! physics is delegated to the core model.

use std::path::Path;

use serde::{Deserialize, Serialize};

use floquet_modes_core::model::{SystemSpec, Tolerances};
use floquet_modes_core::{DMat, DVec};

use crate::CliError;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub f: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "Q2")]
    pub q2: Vec<Vec<f64>>,
    #[serde(rename = "Q4", default, skip_serializing_if = "Option::is_none")]
    pub q4: Option<Vec<Vec<f64>>>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<f64>>,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub f_cos: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<TolerancesConfig>,
    /// stability classification margin
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propagate: Option<PropagateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavefunction: Option<WavefunctionConfig>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_steps: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub p1: ScanParam,
    pub p2: ScanParam,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_steps: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScanParam {
    /// matrix entry in the form `A[i][j]`, `Q2[i][j]` or `Q4[i][j]`
    pub target: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl ScanParam {
    pub fn value_at(&self, k: usize) -> f64 {
        if self.steps <= 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * k as f64 / (self.steps - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PropagateConfig {
    pub u0: Vec<f64>,
    pub p0: Vec<f64>,
    pub t_start: f64,
    pub t_stop: f64,
    pub t_steps: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WavefunctionConfig {
    pub state: StateConfig,
    #[serde(default)]
    pub driven: bool,
    pub times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum StateConfig {
    /// coherent label as `[re, im]` pairs, one per mode
    Coherent(Vec<[f64; 2]>),
    /// occupation numbers, one per mode
    Number(Vec<usize>),
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub steps: Vec<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    fn matrix(&self, name: &str, rows: &[Vec<f64>]) -> Result<DMat, CliError> {
        if rows.len() != self.f || rows.iter().any(|r| r.len() != self.f) {
            return Err(CliError::Usage(format!(
                "{name} must be a {f} x {f} matrix",
                f = self.f
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Ok(DMat::from_row_slice(self.f, self.f, &flat))
    }

    pub fn system(&self) -> Result<SystemSpec, CliError> {
        let a = self.matrix("A", &self.a)?;
        let q2 = self.matrix("Q2", &self.q2)?;
        let mut spec = SystemSpec::new(a, q2).map_err(CliError::Core)?;
        if let Some(q4) = &self.q4 {
            spec = spec
                .with_q4(self.matrix("Q4", q4)?)
                .map_err(CliError::Core)?;
        }
        let vector = |name: &str, v: &Vec<f64>| -> Result<DVec, CliError> {
            if v.len() != self.f {
                return Err(CliError::Usage(format!(
                    "{name} must have {} entries",
                    self.f
                )));
            }
            Ok(DVec::from_vec(v.clone()))
        };
        let g = self.g.as_ref().map(|v| vector("G", v)).transpose()?;
        let f_cos = self.f_cos.as_ref().map(|v| vector("F", v)).transpose()?;
        if g.is_some() || f_cos.is_some() {
            spec = spec.with_drive(g, f_cos).map_err(CliError::Core)?;
        }
        Ok(spec)
    }

    pub fn tolerances(&self) -> Result<Tolerances, CliError> {
        let mut tol = Tolerances::default();
        if let Some(t) = &self.tolerances {
            if let Some(v) = t.truncation_order {
                tol.truncation_order = v;
            }
            if let Some(v) = t.convergence_tol {
                tol.convergence_tol = v;
            }
            if let Some(v) = t.root_tol {
                tol.root_tol = v;
            }
            if let Some(v) = t.identity_tol {
                tol.identity_tol = v;
            }
            if let Some(v) = t.oracle_steps {
                tol.oracle_steps = v;
            }
        }
        tol.validate().map_err(CliError::Core)?;
        Ok(tol)
    }

    pub fn margin(&self) -> f64 {
        self.margin.unwrap_or(1e-6)
    }

    /// Canonical one-line echo for output headers.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serialization cannot fail")
    }
}

/// A parsed scan target: which matrix and which entry it sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetMatrix {
    A,
    Q2,
    Q4,
}

#[derive(Debug, Clone, Copy)]
pub struct ScanTarget {
    pub matrix: TargetMatrix,
    pub i: usize,
    pub j: usize,
}

pub fn parse_target(s: &str, f: usize) -> Result<ScanTarget, CliError> {
    let err = || {
        CliError::Usage(format!(
            "scan target '{s}' must look like A[i][j], Q2[i][j] or Q4[i][j]"
        ))
    };
    let open = s.find('[').ok_or_else(err)?;
    let matrix = match &s[..open] {
        "A" => TargetMatrix::A,
        "Q2" => TargetMatrix::Q2,
        "Q4" => TargetMatrix::Q4,
        _ => return Err(err()),
    };
    let rest = &s[open..];
    let parts: Vec<&str> = rest
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split("][")
        .collect();
    if parts.len() != 2 {
        return Err(err());
    }
    let i: usize = parts[0].parse().map_err(|_| err())?;
    let j: usize = parts[1].parse().map_err(|_| err())?;
    if i >= f || j >= f {
        return Err(CliError::Usage(format!(
            "scan target '{s}' indexes outside the {f} x {f} system"
        )));
    }
    Ok(ScanTarget { matrix, i, j })
}
