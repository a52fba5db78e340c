//! The model configuration document.
//!
//! A TOML document whose sections transliterate the symbols of the model:
//!
//! ```toml
//! name = "example"
//!
//! [dimensions]
//! n = 2
//! P = 1
//!
//! [[amplification]]
//! i = 1
//! expr = "sin(u)+2"          # a_i(t, u)
//! a_lo = 1.0
//! a_hi = 3.0
//! A_expr = "0"               # A_i(t), optional
//!
//! [[selfsignal]]
//! i = 1
//! expr = "(4+exp(-t))*u"     # b_i(t, u)
//! beta_expr = "4+exp(-t)"    # declared slope lower bound beta_i(t)
//!
//! [[outer]]
//! i = 1
//! F_expr = "u1+u2"
//! zeta = 1.0
//! sigma = 1.0
//!
//! [[input]]
//! i = 1
//! expr = "cos(t)"
//!
//! [[coupling_c]]
//! i = 1
//! j = 2
//! l = 1
//! p = 1
//! c_expr = "cos(t)/3"
//! h_expr = "tanh(u1)"
//! gamma1 = 1.0
//! gamma2 = 0.0
//! tau_expr = "abs(sin(t))"
//! tau_tilde_expr = "0"
//!
//! [[coupling_d]]
//! i = 1
//! j = 1
//! l = 1
//! p = 1
//! d_expr = "0.5"
//! f_expr = "u1"
//! mu1 = 1.0
//! mu2 = 0.0
//! g_expr = "tanh(u)"
//! g_tilde_expr = "u"
//! xi = 1.0
//! xi_tilde = 1.0
//! kernel = { type = "exponential", rate = 1.0 }
//! kernel_tilde = { type = "atom", lag = 0.0 }
//!
//! [[initial]]
//! k = 1
//! phi = ["-exp(s)/2", "cos(s)/2"]
//! bound = 1.0
//! ```
//!
//! Indices are 1-based in the document.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config document: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("cannot serialize config document: {0}")]
    Serialize(#[from] toml::ser::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimensions: Dimensions,
    #[serde(default)]
    pub amplification: Vec<AmplificationEntry>,
    #[serde(default)]
    pub selfsignal: Vec<SelfSignalEntry>,
    #[serde(default)]
    pub outer: Vec<OuterEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub input: Vec<InputEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coupling_c: Vec<CouplingCEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coupling_d: Vec<CouplingDEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial: Vec<InitialEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dimensions {
    pub n: usize,
    #[serde(rename = "P")]
    pub p: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplificationEntry {
    pub i: usize,
    pub expr: String,
    pub a_lo: f64,
    pub a_hi: f64,
    #[serde(rename = "A_expr", default, skip_serializing_if = "Option::is_none")]
    pub big_a_expr: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfSignalEntry {
    pub i: usize,
    pub expr: String,
    pub beta_expr: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_star_expr: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuterEntry {
    pub i: usize,
    #[serde(rename = "F_expr")]
    pub f_expr: String,
    pub zeta: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputEntry {
    pub i: usize,
    pub expr: String,
}

fn zero_text() -> String {
    "0".to_string()
}

fn yes() -> bool {
    true
}

fn is_true(v: &bool) -> bool {
    *v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingCEntry {
    pub i: usize,
    pub j: usize,
    pub l: usize,
    pub p: usize,
    pub c_expr: String,
    pub h_expr: String,
    pub gamma1: f64,
    pub gamma2: f64,
    #[serde(default = "zero_text")]
    pub tau_expr: String,
    #[serde(default = "zero_text")]
    pub tau_tilde_expr: String,
    /// Declared claim that t - tau(t) grows without bound.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub tau_unbounded_growth: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingDEntry {
    pub i: usize,
    pub j: usize,
    pub l: usize,
    pub p: usize,
    pub d_expr: String,
    pub f_expr: String,
    pub mu1: f64,
    pub mu2: f64,
    pub g_expr: String,
    pub g_tilde_expr: String,
    pub xi: f64,
    pub xi_tilde: f64,
    pub kernel: KernelEntry,
    pub kernel_tilde: KernelEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelEntry {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Atom { lag: f64 },
    Density { expr: String, support: f64 },
    Mixture { components: Vec<MixtureComponent> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub kernel: KernelEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialEntry {
    pub k: usize,
    pub phi: Vec<String>,
    pub bound: f64,
}

impl ConfigDocument {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ConfigError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()?).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn module_doc_example_parses() {
        let text = include_str!("config.rs");
        let start = text.find("//! ```toml").unwrap();
        let end = text[start + 10..].find("//! ```").unwrap() + start + 10;
        let body: String = text[start..end]
            .lines()
            .skip(1)
            .map(|l| l.trim_start_matches("//!").strip_prefix(' ').unwrap_or(""))
            .collect::<Vec<_>>()
            .join("\n");
        let doc = ConfigDocument::from_toml(&body).unwrap();
        assert_eq!(doc.dimensions.n, 2);
        assert_eq!(doc.coupling_d[0].kernel, KernelEntry::Exponential { rate: 1.0 });
        assert!(doc.coupling_c[0].tau_unbounded_growth);
        let again = ConfigDocument::from_toml(&doc.to_toml().unwrap()).unwrap();
        assert_eq!(again, doc);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = ConfigDocument::from_toml("[dimensions]\nn = 1\nP = 1\nq = 3\n").unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
    }
}
