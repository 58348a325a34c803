//! Built-in reference parameter sets, loaded from a TOML document so more
//! can be added without recompiling.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpreadError};
use crate::laws::LawSpec;
use crate::model::ModelSpec;

const BUILTIN: &str = include_str!("../data/tables.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub s1: f64,
    pub s2: f64,
    pub strikes: Vec<f64>,
    /// Published approximation prices, one per strike.
    #[serde(default)]
    pub approx: Vec<f64>,
    /// Published Monte Carlo prices, one per strike.
    #[serde(default)]
    pub mc: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDef {
    pub id: u32,
    pub title: String,
    pub law: LawSpec,
    pub r: f64,
    pub beta: [f64; 2],
    pub a: [[f64; 2]; 2],
    #[serde(default = "one")]
    pub maturity: f64,
    #[serde(rename = "row")]
    pub rows: Vec<TableRow>,
}

fn one() -> f64 {
    1.0
}

impl TableDef {
    pub fn spec(&self, row: &TableRow) -> Result<ModelSpec> {
        Ok(ModelSpec::mixture(row.s1, row.s2, self.r, self.beta, self.a, self.law.to_law()?))
    }

    pub fn cell_count(&self) -> usize {
        self.rows.iter().map(|r| r.strikes.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSet {
    #[serde(rename = "table")]
    pub tables: Vec<TableDef>,
}

impl TableSet {
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN).expect("built-in tables parse")
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let set: TableSet = toml::from_str(s).map_err(|e| SpreadError::Config(e.to_string()))?;
        set.validate()?;
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SpreadError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn get(&self, id: u32) -> Option<&TableDef> {
        self.tables.iter().find(|t| t.id == id)
    }

    fn validate(&self) -> Result<()> {
        for t in &self.tables {
            t.law.to_law()?;
            for (i, row) in t.rows.iter().enumerate() {
                let n = row.strikes.len();
                let ok = |v: &Vec<f64>| v.is_empty() || v.len() == n;
                if !ok(&row.approx) || !ok(&row.mc) {
                    return Err(SpreadError::Config(format!(
                        "table {} row {}: reference columns must match the {n} strikes",
                        t.id,
                        i + 1
                    )));
                }
                t.spec(row)?.validate()?;
            }
        }
        Ok(())
    }
}
