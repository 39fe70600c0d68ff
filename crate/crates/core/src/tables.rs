//! Reference results for the checkerboard runs and tolerance verdicts.

use serde::{Deserialize, Serialize};

use crate::assembly::Method;
use crate::femspace::Family;
use crate::problems::BoundaryKind;
use crate::{Error, Result};

const REFERENCE_CSV: &str = include_str!("../data/reference_tables.csv");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub table: usize,
    pub method: String,
    pub space: String,
    pub bc: String,
    pub data: usize,
    pub eff_index: f64,
    pub k: usize,
    pub n: usize,
    pub eta: f64,
    pub error: f64,
}

/// Acceptance band for the effectivity indices of one table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Band {
    /// Every row inside `[lo, hi]`.
    Range { lo: f64, hi: f64 },
    /// Strictly decreasing from data set 1 to 4, with the last row `<= max_last`.
    Decreasing { max_last: f64 },
}

impl Band {
    /// Per-row verdicts for effectivity indices ordered by data set.
    pub fn verdicts(&self, eff: &[f64]) -> Vec<bool> {
        match *self {
            Band::Range { lo, hi } => eff.iter().map(|&e| (lo..=hi).contains(&e)).collect(),
            Band::Decreasing { max_last } => (0..eff.len())
                .map(|i| {
                    let dec = i == 0 || eff[i] < eff[i - 1];
                    let last_ok = i + 1 < eff.len() || eff[i] <= max_last;
                    dec && last_ok && eff[i].is_finite()
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TableSpec {
    pub id: usize,
    pub method: Method,
    pub family: Family,
    pub bc: BoundaryKind,
    pub band: Band,
}

pub const TABLE_IDS: [usize; 8] = [2, 3, 4, 5, 6, 7, 8, 9];

pub fn table_spec(id: usize) -> Result<TableSpec> {
    use BoundaryKind::*;
    use Family::*;
    use Method::*;
    let range = |lo, hi| Band::Range { lo, hi };
    let (method, family, bc, band) = match id {
        2 => (Aug1, Rt0P1, Dirichlet, range(0.95, 1.15)),
        3 => (Aug2, Rt0P1, Dirichlet, range(0.95, 1.05)),
        4 => (Aug2, Bdm1P2, Dirichlet, range(1.00, 1.20)),
        5 => (Ls, Rt0P1, Dirichlet, range(0.95, 1.20)),
        6 => (Aug1, Rt0P1, Mixed, range(0.95, 1.15)),
        7 => (Aug2, Rt0P1, Mixed, range(0.95, 1.15)),
        8 => (Ls, Rt0P1, Mixed, Band::Decreasing { max_last: 0.65 }),
        9 => (Aug2, Bdm1P2, Mixed, range(1.00, 1.20)),
        other => return Err(Error::Config(format!("unknown table {other} (expected one of {TABLE_IDS:?})"))),
    };
    Ok(TableSpec {
        id,
        method,
        family,
        bc,
        band,
    })
}

pub fn reference_rows() -> Vec<ReferenceRow> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(REFERENCE_CSV.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<ReferenceRow>, _>>()
        .expect("embedded reference table parses")
}

pub fn reference_table(id: usize) -> Vec<ReferenceRow> {
    let mut rows: Vec<_> = reference_rows().into_iter().filter(|r| r.table == id).collect();
    rows.sort_by_key(|r| r.data);
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_table_has_four_rows_matching_its_spec() {
        for id in TABLE_IDS {
            let spec = table_spec(id).unwrap();
            let rows = reference_table(id);
            assert_eq!(rows.iter().map(|r| r.data).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
            for r in &rows {
                assert_eq!(r.method, spec.method.label());
                assert_eq!(r.space, spec.family.label());
                assert_eq!(r.bc, spec.bc.label());
                // eff = eta / error to the printed precision
                assert!((r.eff_index - r.eta / r.error).abs() < 0.01, "{r:?}");
            }
        }
        assert!(table_spec(1).is_err());
    }

    #[test]
    fn reference_values_pass_their_own_bands() {
        for id in TABLE_IDS {
            let spec = table_spec(id).unwrap();
            let eff: Vec<f64> = reference_table(id).iter().map(|r| r.eff_index).collect();
            assert!(spec.band.verdicts(&eff).iter().all(|&v| v), "table {id}");
        }
    }

    #[test]
    fn decreasing_band() {
        let b = Band::Decreasing { max_last: 0.65 };
        assert_eq!(b.verdicts(&[1.0, 0.9, 0.8, 0.5]), vec![true; 4]);
        assert_eq!(b.verdicts(&[1.0, 0.9, 0.95, 0.7]), vec![true, true, false, false]);
    }
}
