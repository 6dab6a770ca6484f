//! Trace-set files: boundary data per side, as closed-form polynomials or
//! CSV samples on the graded mesh.

use std::path::{Path, PathBuf};

use corner_pencil_core::tangential::{graded_mesh, AdmissibleSample};
use corner_pencil_core::{SideId, Sigma, Trace, ValidatedConfig, C64};
use serde::{Deserialize, Serialize};

use crate::config::{complex, Complex, SCHEMA_VERSION};
use crate::error::CliError;

/// Relative tolerance when matching CSV radii against the graded mesh.
const MESH_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceEntry {
    /// 1-based angle index.
    pub angle: usize,
    /// 1 or 2.
    pub sigma: u8,
    /// `poly:c0,c1,...` or `csv:<path>`, relative to the trace-set file.
    pub trace: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSetFile {
    pub schema_version: u32,
    /// Sides without an entry carry the zero trace.
    #[serde(default)]
    pub traces: Vec<TraceEntry>,
    /// `B^v_{jσ}(0)` in side order `(1,1), (1,2), (2,1), …`; read off the
    /// traces when absent.
    #[serde(default)]
    pub bv0: Option<Vec<Complex>>,
}

/// A loaded trace set, one trace per side.
#[derive(Clone, Debug)]
pub struct TraceSet {
    pub traces: Vec<Trace>,
    pub bv0: Option<Vec<C64>>,
}

impl TraceSet {
    pub fn into_admissible(self) -> AdmissibleSample {
        AdmissibleSample {
            traces: self.traces,
            bv0: self.bv0,
        }
    }
}

/// Parses `c0,c1,...` into the coefficients of `c0 + c1 r + ...`.
pub fn parse_poly(spec: &str) -> Result<Vec<C64>, CliError> {
    if spec.trim().is_empty() {
        return Ok(Vec::new());
    }
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map(|x| C64::new(x, 0.0))
                .map_err(|_| CliError::Format(format!("bad polynomial coefficient {s:?}")))
        })
        .collect()
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    r: f64,
    re: f64,
    im: f64,
}

/// Reads `r,re,im` rows and checks them against `r_i = ε 2^{−i/4}`.
pub fn read_csv_trace(path: &Path, side: SideId, epsilon: f64) -> Result<Trace, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        let row: CsvRow = row.map_err(|e| CliError::csv(path, e))?;
        rows.push(row);
    }
    rows.sort_by(|a, b| b.r.total_cmp(&a.r));
    let mesh = graded_mesh(epsilon, rows.len());
    for (row, r) in rows.iter().zip(&mesh) {
        if (row.r - r).abs() > MESH_TOL * r {
            return Err(CliError::Format(format!(
                "{}: radius {} is not on the graded mesh r_i = {epsilon} * 2^(-i/4) (expected {r})",
                path.display(),
                row.r
            )));
        }
    }
    Ok(Trace::sampled(
        side,
        epsilon,
        rows.iter().map(|row| C64::new(row.re, row.im)).collect(),
    ))
}

fn parse_trace(spec: &str, side: SideId, epsilon: f64, base: &Path) -> Result<Trace, CliError> {
    if let Some(p) = spec.strip_prefix("poly:") {
        Ok(Trace::polynomial(side, &parse_poly(p)?))
    } else if let Some(p) = spec.strip_prefix("csv:") {
        let path: PathBuf = base.join(p);
        read_csv_trace(&path, side, epsilon)
    } else {
        Err(CliError::Format(format!("trace {spec:?} must start with poly: or csv:")))
    }
}

impl TraceSetFile {
    pub fn resolve(&self, config: &ValidatedConfig, base: &Path) -> Result<TraceSet, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Format(format!(
                "unsupported trace-set schema_version {}",
                self.schema_version
            )));
        }
        let n = config.n_angles();
        let mut slots: Vec<Option<Trace>> = vec![None; 2 * n];
        for e in &self.traces {
            let sigma = Sigma::from_number(e.sigma)
                .ok_or_else(|| CliError::Format(format!("sigma must be 1 or 2, got {}", e.sigma)))?;
            if e.angle == 0 || e.angle > n {
                return Err(CliError::Format(format!("trace angle {} is not in 1..={n}", e.angle)));
            }
            let side = SideId::new(e.angle - 1, sigma);
            let slot = &mut slots[side.flat_index()];
            if slot.is_some() {
                return Err(CliError::Format(format!("two traces for side {side}")));
            }
            *slot = Some(parse_trace(&e.trace, side, config.epsilon, base)?);
        }
        let traces = SideId::all(n)
            .map(|s| slots[s.flat_index()].take().unwrap_or_else(|| Trace::zero(s)))
            .collect();
        let bv0 = match &self.bv0 {
            None => None,
            Some(v) if v.len() == 2 * n => Some(v.iter().copied().map(complex).collect()),
            Some(v) => {
                return Err(CliError::Format(format!("bv0 has {} entries, expected {}", v.len(), 2 * n)));
            }
        };
        Ok(TraceSet { traces, bv0 })
    }
}

pub fn load_trace_set(path: &Path, config: &ValidatedConfig) -> Result<TraceSet, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: TraceSetFile = serde_json::from_str(&text).map_err(|e| CliError::json(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    file.resolve(config, base)
}
