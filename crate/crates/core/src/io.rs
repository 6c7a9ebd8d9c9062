//! CSV formats for fringes, outcome histograms and the 512 × 512 matrix.
//!
//! * fringes: `theta,expectation,stderr`
//! * histogram: `outcome_bits,count`, the bit string listing register
//!   position 0 first
//! * matrix: `row,col,count` over non-empty cells, with `row` the integer of
//!   register bits 0–8 and `col` the integer of bits 9–17
//!
//! Floating-point values are written in shortest round-trip form.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analysis::{FringePoint, FringeSeries};
use crate::error::{Error, Result};
use crate::pipeline::{MeasurementSetting, OutcomeDistribution, OutcomeHistogram};
use crate::state::QubitAddress;

/// Register bits per matrix axis.
pub const MATRIX_AXIS_BITS: usize = 9;

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

fn write_rows<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(csv_err)?;
    String::from_utf8(bytes).map_err(csv_err)
}

fn read_rows<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(csv_err))
        .collect()
}

pub fn fringes_to_csv(series: &FringeSeries) -> Result<String> {
    if series.points().is_empty() {
        return Ok("theta,expectation,stderr\n".into());
    }
    write_rows(series.points())
}

pub fn fringes_from_csv(text: &str, n_qubits: usize) -> Result<FringeSeries> {
    FringeSeries::new(n_qubits, read_rows::<FringePoint>(text)?)
}

#[derive(Serialize, Deserialize)]
struct HistogramRow {
    outcome_bits: String,
    count: u64,
}

fn to_bits(outcome: u64, n: usize) -> String {
    (0..n)
        .map(|k| if (outcome >> k) & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn from_bits(bits: &str, n: usize) -> Result<u64> {
    if bits.len() != n {
        return Err(Error::Parse(format!("outcome {bits:?} should have {n} bits")));
    }
    bits.chars().enumerate().try_fold(0u64, |acc, (k, ch)| match ch {
        '0' => Ok(acc),
        '1' => Ok(acc | 1 << k),
        _ => Err(Error::Parse(format!("outcome {bits:?} is not a bit string"))),
    })
}

pub fn histogram_to_csv(histogram: &OutcomeHistogram) -> Result<String> {
    if histogram.counts().is_empty() {
        return Ok("outcome_bits,count\n".into());
    }
    let n = histogram.n_qubits();
    write_rows(histogram.counts().iter().map(|(k, c)| HistogramRow {
        outcome_bits: to_bits(*k, n),
        count: *c,
    }))
}

pub fn histogram_from_csv(
    text: &str,
    register: Vec<QubitAddress>,
    setting: MeasurementSetting,
    duration_s: f64,
) -> Result<OutcomeHistogram> {
    let n = register.len();
    let mut counts = BTreeMap::new();
    for row in read_rows::<HistogramRow>(text)? {
        let k = from_bits(&row.outcome_bits, n)?;
        if counts.insert(k, row.count).is_some() {
            return Err(Error::Parse(format!("outcome {} listed twice", row.outcome_bits)));
        }
    }
    OutcomeHistogram::from_counts(register, setting, counts, duration_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub row: u32,
    pub col: u32,
    pub count: f64,
}

fn cell(outcome: u64, count: f64) -> MatrixCell {
    let mask = (1u64 << MATRIX_AXIS_BITS) - 1;
    MatrixCell {
        row: (outcome & mask) as u32,
        col: (outcome >> MATRIX_AXIS_BITS) as u32,
        count,
    }
}

fn check_matrix_width(n: usize) -> Result<()> {
    if n != 2 * MATRIX_AXIS_BITS {
        return Err(Error::Contract(format!(
            "the matrix layout needs {} qubits, register has {n}",
            2 * MATRIX_AXIS_BITS
        )));
    }
    Ok(())
}

pub fn histogram_matrix(histogram: &OutcomeHistogram) -> Result<Vec<MatrixCell>> {
    check_matrix_width(histogram.n_qubits())?;
    Ok(histogram.counts().iter().map(|(k, c)| cell(*k, *c as f64)).collect())
}

/// Probability cells of an exact distribution.
pub fn distribution_matrix(distribution: &OutcomeDistribution) -> Result<Vec<MatrixCell>> {
    check_matrix_width(distribution.n_qubits())?;
    Ok(distribution.nonzero().map(|(k, p)| cell(k, p)).collect())
}

pub fn matrix_to_csv(cells: &[MatrixCell]) -> Result<String> {
    if cells.is_empty() {
        return Ok("row,col,count\n".into());
    }
    write_rows(cells)
}

pub fn matrix_from_csv(text: &str) -> Result<Vec<MatrixCell>> {
    read_rows(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn fringe_csv_round_trip() {
        let points = vec![
            FringePoint {
                theta: 0.0,
                expectation: -1.0,
                stderr: 0.0,
            },
            FringePoint {
                theta: PI / 18.0,
                expectation: 0.123456789012345,
                stderr: 0.0265,
            },
            FringePoint {
                theta: PI,
                expectation: 1e-17,
                stderr: 1.0 / 3.0,
            },
        ];
        let s = FringeSeries::new(18, points).unwrap();
        let text = fringes_to_csv(&s).unwrap();
        assert!(text.starts_with("theta,expectation,stderr\n"));
        assert_eq!(fringes_from_csv(&text, 18).unwrap(), s);
    }

    #[test]
    fn histogram_csv_round_trip() {
        let reg = crate::state::hyper_register(1);
        let setting = MeasurementSetting::computational(&reg);
        let h = OutcomeHistogram::from_counts(
            reg.clone(),
            setting.clone(),
            BTreeMap::from([(0b001, 4), (0b110, 9)]),
            2.0,
        )
        .unwrap();
        let text = histogram_to_csv(&h).unwrap();
        assert!(text.contains("100,4"));
        assert!(text.contains("011,9"));
        assert_eq!(histogram_from_csv(&text, reg.clone(), setting.clone(), 2.0).unwrap(), h);
        assert!(histogram_from_csv("outcome_bits,count\n0102,1\n", reg, setting, 1.0).is_err());
    }

    #[test]
    fn matrix_layout() {
        let ones = (1u64 << 18) - 1;
        assert_eq!(
            cell(0, 0.5),
            MatrixCell {
                row: 0,
                col: 0,
                count: 0.5
            }
        );
        assert_eq!(
            cell(ones, 0.5),
            MatrixCell {
                row: 511,
                col: 511,
                count: 0.5
            }
        );
        assert_eq!(
            cell(1 << 9, 1.0),
            MatrixCell {
                row: 0,
                col: 1,
                count: 1.0
            }
        );
        let cells = vec![cell(0, 0.5), cell(ones, 0.5)];
        assert_eq!(matrix_from_csv(&matrix_to_csv(&cells).unwrap()).unwrap(), cells);
        assert_eq!(matrix_to_csv(&[]).unwrap(), "row,col,count\n");
    }
}
