//! Dense row-major matrix with labeled columns.
//!
//! The label set travels with the data so downstream errors can name the
//! offending column and so saved models can refuse prediction inputs with a
//! different schema.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DataMatrix {
    labels: Vec<String>,
    data: Vec<f64>, // row-major, rows * cols
    rows: usize,
    cols: usize,
}

impl DataMatrix {
    /// Build from equally long columns. Rejects non-finite entries and
    /// duplicate labels.
    pub fn from_columns(columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let rows = columns.first().map(|(_, v)| v.len()).unwrap_or(0);
        let cols = columns.len();
        let mut labels = Vec::with_capacity(cols);
        for (name, col) in &columns {
            if col.len() != rows {
                return Err(Error::Dimension(format!(
                    "column `{name}` has {} rows, expected {rows}",
                    col.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "column `{name}` has a non-finite value at row {i}"
                )));
            }
            if labels.contains(name) {
                return Err(Error::Data(format!("duplicate column label `{name}`")));
            }
            labels.push(name.clone());
        }
        let mut data = vec![0.0; rows * cols];
        for (j, (_, col)) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                data[i * cols + j] = v;
            }
        }
        Ok(DataMatrix {
            labels,
            data,
            rows,
            cols,
        })
    }

    /// All-zero matrix with the given labels.
    pub fn zeros(labels: Vec<String>, rows: usize) -> Self {
        let cols = labels.len();
        DataMatrix {
            labels,
            data: vec![0.0; rows * cols],
            rows,
            cols,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn column_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownColumn(label.to_string()))
    }

    /// Column means; the usual conditioning point for impulse responses.
    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, m) in means.iter_mut().enumerate() {
                *m += self.get(i, j);
            }
        }
        for m in &mut means {
            *m /= self.rows as f64;
        }
        means
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DataMatrix {
        DataMatrix::from_columns(vec![
            ("a".into(), vec![1.0, 2.0, 3.0]),
            ("b".into(), vec![4.0, 5.0, 6.0]),
        ])
        .unwrap()
    }

    #[test]
    fn round_trips_rows_and_columns() {
        let m = sample();
        assert_eq!(m.rows(), 3);
        assert_eq!(m.cols(), 2);
        assert_eq!(m.row(1), &[2.0, 5.0]);
        assert_eq!(m.column(1), vec![4.0, 5.0, 6.0]);
        assert_eq!(m.column_index("b").unwrap(), 1);
        assert!(m.column_index("c").is_err());
    }

    #[test]
    fn means_are_columnwise() {
        let m = sample();
        assert_eq!(m.column_means(), vec![2.0, 5.0]);
    }

    #[test]
    fn rejects_ragged_and_nonfinite() {
        assert!(DataMatrix::from_columns(vec![
            ("a".into(), vec![1.0]),
            ("b".into(), vec![1.0, 2.0]),
        ])
        .is_err());
        assert!(DataMatrix::from_columns(vec![("a".into(), vec![f64::NAN])]).is_err());
        assert!(DataMatrix::from_columns(vec![
            ("a".into(), vec![1.0]),
            ("a".into(), vec![1.0]),
        ])
        .is_err());
    }
}
