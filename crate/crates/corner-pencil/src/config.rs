//! The JSON configuration file.

use std::path::Path;

use corner_pencil_core::orbit::validate;
use corner_pencil_core::{NonlocalTerm, OrbitConfig, PrincipalPart, SideId, Sigma, ValidatedConfig, C64};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// `[re, im]`.
pub type Complex = [f64; 2];

pub fn complex(z: Complex) -> C64 {
    C64::new(z[0], z[1])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrincipalPartFile {
    pub a11: Complex,
    pub a12: Complex,
    pub a22: Complex,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermFile {
    /// 1-based angle index.
    pub target: usize,
    pub rotation: f64,
    pub homothety: f64,
    pub coeff: Complex,
    #[serde(default)]
    pub coeff_r_deriv: Complex,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideTermsFile {
    #[serde(default)]
    pub sigma1: Vec<TermFile>,
    #[serde(default)]
    pub sigma2: Vec<TermFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub n: usize,
    pub angles: Vec<f64>,
    /// Defaults to the Laplacian in every angle.
    #[serde(default)]
    pub principal_parts: Option<Vec<PrincipalPartFile>>,
    /// Non-identity terms; the identity term of each side is implicit.
    #[serde(default)]
    pub terms: Option<Vec<SideTermsFile>>,
    pub epsilon: f64,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| CliError::json(path, e))
    }

    /// Builds the core description, inserting the identity terms.
    pub fn to_orbit(&self) -> Result<OrbitConfig, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Format(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n != self.angles.len() {
            return Err(CliError::Format(format!(
                "n = {} but {} angles given",
                self.n,
                self.angles.len()
            )));
        }
        let parts = match &self.principal_parts {
            None => vec![PrincipalPart::laplacian(); self.n],
            Some(p) if p.len() == self.n => p
                .iter()
                .map(|p| PrincipalPart::new(complex(p.a11), complex(p.a12), complex(p.a22)))
                .collect(),
            Some(p) => {
                return Err(CliError::Format(format!("{} principal parts for {} angles", p.len(), self.n)));
            }
        };
        let mut cfg = OrbitConfig::local(self.angles.clone(), parts, self.epsilon);
        if let Some(terms) = &self.terms {
            if terms.len() != self.n {
                return Err(CliError::Format(format!("{} term blocks for {} angles", terms.len(), self.n)));
            }
            for (j, block) in terms.iter().enumerate() {
                for (sigma, list) in [(Sigma::One, &block.sigma1), (Sigma::Two, &block.sigma2)] {
                    let side = SideId::new(j, sigma);
                    for (s, t) in list.iter().enumerate() {
                        if t.target == 0 || t.target > self.n {
                            return Err(CliError::Format(format!(
                                "side {side}, term s={}: target {} is not in 1..={}",
                                s + 1,
                                t.target,
                                self.n
                            )));
                        }
                        let term = NonlocalTerm::new(t.target - 1, t.rotation, t.homothety, complex(t.coeff))
                            .with_r_deriv(complex(t.coeff_r_deriv));
                        cfg = cfg.with_term(side, term);
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn validated(&self) -> Result<ValidatedConfig, CliError> {
        Ok(validate(self.to_orbit()?)?)
    }
}

pub fn load_config(path: &Path) -> Result<ValidatedConfig, CliError> {
    ConfigFile::load(path)?.validated()
}
