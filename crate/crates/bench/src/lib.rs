//! Benchmark fixtures shared by the criterion targets.

use mixspread::tables::TableSet;
use mixspread::ModelSpec;

/// Model of one reference table row, with its strikes.
pub fn table_row(id: u32, s1: f64) -> (ModelSpec, Vec<f64>) {
    let set = TableSet::builtin();
    let t = set.get(id).expect("table id");
    let row = t.rows.iter().find(|r| r.s1 == s1).expect("row");
    (t.spec(row).expect("valid table"), row.strikes.clone())
}
