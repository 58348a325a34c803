//! Rendering of reports as aligned text or CSV.

use std::io::Write;

use crate::config::Format;
use crate::error::CliError;

/// At least six significant digits; fixed notation in the usual price
/// range so that table values line up, scientific outside it.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(6) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

/// Ordered key-value pairs, rendered as two aligned columns or as a
/// two-column CSV.
#[derive(Debug, Default)]
pub struct KeyValues(Vec<(String, String)>);

impl KeyValues {
    pub fn text(&mut self, k: impl Into<String>, v: impl ToString) -> &mut Self {
        self.0.push((k.into(), v.to_string()));
        self
    }

    pub fn num(&mut self, k: impl Into<String>, v: f64) -> &mut Self {
        self.text(k, num(v))
    }

    pub fn write(&self, out: &mut impl Write, format: Format) -> Result<(), CliError> {
        match format {
            Format::Table => {
                let width = self.0.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                for (k, v) in &self.0 {
                    writeln!(out, "{k:<width$}  {v}")?;
                }
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(["key", "value"])?;
                for (k, v) in &self.0 {
                    w.write_record([k, v])?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }
}

/// A header and rows of preformatted cells.
#[derive(Debug)]
pub struct Grid {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Grid {
    pub fn write(&self, out: &mut impl Write, format: Format) -> Result<(), CliError> {
        match format {
            Format::Table => {
                let widths: Vec<usize> = (0..self.header.len())
                    .map(|j| {
                        self.rows
                            .iter()
                            .map(|r| r[j].len())
                            .chain([self.header[j].len()])
                            .max()
                            .unwrap_or(0)
                    })
                    .collect();
                let line = |cells: Vec<&str>| {
                    let s: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
                    s.join("  ").trim_end().to_string()
                };
                writeln!(out, "{}", line(self.header.clone()))?;
                for r in &self.rows {
                    writeln!(out, "{}", line(r.iter().map(String::as_str).collect()))?;
                }
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.header)?;
                for r in &self.rows {
                    w.write_record(r)?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }
}
