//! Run configuration: a TOML document with `[model]`, `[law]`,
//! `[contract]`, `[engine]`, `[output]` and optional `[proxy]` sections.

use std::path::Path;

use mixspread::{ApproxOptions, LawSpec, MgfKind, MixingLaw, ModelSpec, ProxyParams, SpreadContract};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelSection>,
    pub law: Option<LawSpec>,
    #[serde(default)]
    pub contract: ContractSection,
    #[serde(default)]
    pub engine: EngineSection,
    #[serde(default)]
    pub output: OutputSection,
    pub proxy: Option<ProxyParams>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub s1_0: f64,
    pub s2_0: f64,
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub delta: [f64; 2],
    #[serde(default)]
    pub beta: [f64; 2],
    pub a: [[f64; 2]; 2],
    #[serde(default)]
    pub elliptical: bool,
    /// Raw elliptical locations; skips the martingale drift.
    pub mu: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractSection {
    pub strike: Option<f64>,
    #[serde(default = "one")]
    pub maturity: f64,
}

impl Default for ContractSection {
    fn default() -> Self {
        Self { strike: None, maturity: 1.0 }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    #[serde(default)]
    pub mgf: MgfKind,
    /// Mgf for the model's own moments.
    #[serde(default = "exact")]
    pub target_mgf: MgfKind,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub antithetic: bool,
}

impl Default for EngineSection {
    fn default() -> Self {
        Self {
            mgf: MgfKind::default(),
            target_mgf: MgfKind::Exact,
            tol: default_tol(),
            n: default_n(),
            seed: default_seed(),
            antithetic: false,
        }
    }
}

fn exact() -> MgfKind {
    MgfKind::Exact
}
fn default_tol() -> f64 {
    ApproxOptions::default().tol
}
fn default_n() -> usize {
    mixspread::mc::DEFAULT_PATHS
}
fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Csv,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub format: Format,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mgf: Option<MgfKind>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub tol: Option<f64>,
    pub strike: Option<f64>,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, CliError> {
        toml::from_str(s).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.mgf {
            self.engine.mgf = v;
        }
        if let Some(v) = o.n {
            self.engine.n = v;
        }
        if let Some(v) = o.seed {
            self.engine.seed = v;
        }
        if let Some(v) = o.format {
            self.output.format = v;
        }
        if let Some(v) = o.tol {
            self.engine.tol = v;
        }
        if let Some(v) = o.strike {
            self.contract.strike = Some(v);
        }
    }

    pub fn law(&self) -> Result<MixingLaw, CliError> {
        let spec = self.law.as_ref().ok_or_else(|| missing("law"))?;
        spec.to_law().map_err(field_error("law"))
    }

    /// Model spec, validated field by field.
    pub fn model_spec(&self) -> Result<ModelSpec, CliError> {
        let m = self.model.as_ref().ok_or_else(|| missing("model"))?;
        let law = self.law()?;
        let mut spec = if m.elliptical {
            ModelSpec::elliptical(m.s1_0, m.s2_0, m.r, m.a, law)
        } else {
            ModelSpec::mixture(m.s1_0, m.s2_0, m.r, m.beta, m.a, law)
        };
        spec.delta = m.delta;
        if m.elliptical {
            spec.beta = m.beta;
        }
        spec.mu_override = m.mu;
        spec.validate().map_err(field_error("model"))?;
        Ok(spec)
    }

    pub fn contract(&self) -> Result<SpreadContract, CliError> {
        let strike = self
            .contract
            .strike
            .ok_or_else(|| CliError::Config("contract.strike: required (set it in [contract] or pass --strike)".into()))?;
        let c = SpreadContract { strike, maturity: self.contract.maturity };
        c.validate().map_err(field_error("contract"))?;
        Ok(c)
    }

    pub fn approx_options(&self) -> Result<ApproxOptions, CliError> {
        let tol = self.engine.tol;
        if !(tol.is_finite() && tol > 0.0) {
            return Err(CliError::Config(format!("engine.tol: must be positive, got {tol}")));
        }
        Ok(ApproxOptions {
            mgf_kind: self.engine.mgf,
            target_mgf: self.engine.target_mgf,
            tol,
            ..ApproxOptions::default()
        })
    }
}

fn missing(section: &str) -> CliError {
    CliError::Config(format!("missing section [{section}]"))
}

/// Prefixes invalid-input errors with the section they came from.
fn field_error(section: &'static str) -> impl Fn(mixspread::SpreadError) -> CliError {
    move |e| match e {
        mixspread::SpreadError::InvalidInput { field, reason } => {
            let field = if field.starts_with(section) { field } else { format!("{section}.{field}") };
            CliError::Config(format!("{field}: {reason}"))
        }
        other => CliError::Engine(other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[model]
s1_0 = 5.0
s2_0 = 1.0
beta = [0.1, 0.1]
a = [[0.15, 0.05], [0.05, 0.15]]

[law]
family = "exponential"
params = [1.0]

[contract]
strike = 2.0

[engine]
seed = 7
"#;

    #[test]
    fn flags_beat_file() {
        let mut c = RunConfig::from_toml_str(BASE).unwrap();
        assert_eq!(c.engine.seed, 7);
        c.apply(&Overrides { seed: Some(9), strike: Some(1.5), ..Overrides::default() });
        assert_eq!(c.engine.seed, 9);
        assert_eq!(c.contract().unwrap().strike, 1.5);
        assert_eq!(c.engine.n, 1_000_000);
    }

    #[test]
    fn field_errors_name_the_field() {
        let bad = BASE.replace("s1_0 = 5.0", "s1_0 = -5.0");
        let err = RunConfig::from_toml_str(&bad).unwrap().model_spec().unwrap_err();
        assert!(err.to_string().contains("model.s1_0"), "{err}");
        let err = RunConfig::from_toml_str(&BASE.replace("seed = 7", "sed = 7")).unwrap_err();
        assert!(err.to_string().contains("sed"), "{err}");
        let err = RunConfig::from_toml_str(&BASE.replace("params = [1.0]", "params = []"))
            .unwrap()
            .law()
            .unwrap_err();
        assert!(err.to_string().contains("law.params"), "{err}");
    }
}
