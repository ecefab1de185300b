//! Kernel matrices over the D encodable outcomes.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Entries may leave [0, 1] or the diagonal may leave 1 by this much before
/// a kernel is rejected; smaller excursions are clamped.
pub const KERNEL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    values: DMatrix<f64>,
    labels: Vec<String>,
}

impl KernelMatrix {
    /// Validates symmetry, unit diagonal and the [0, 1] range, then
    /// symmetrises and clamps round-off.
    pub fn new(values: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        let d = values.nrows();
        if values.ncols() != d {
            return Err(Error::Kernel(format!(
                "kernel must be square, got {}x{}",
                d,
                values.ncols()
            )));
        }
        if labels.len() != d {
            return Err(Error::Kernel(format!(
                "{} labels for a {d}x{d} kernel",
                labels.len()
            )));
        }
        for i in 0..d {
            if (values[(i, i)] - 1.0).abs() > KERNEL_TOL {
                return Err(Error::Kernel(format!(
                    "diagonal entry {i} is {} instead of 1",
                    values[(i, i)]
                )));
            }
            for j in 0..d {
                let v = values[(i, j)];
                if !v.is_finite() || v < -KERNEL_TOL || v > 1.0 + KERNEL_TOL {
                    return Err(Error::Kernel(format!(
                        "entry ({i}, {j}) = {v} outside [0, 1]"
                    )));
                }
                if (v - values[(j, i)]).abs() > KERNEL_TOL {
                    return Err(Error::Kernel(format!(
                        "entries ({i}, {j}) and ({j}, {i}) differ"
                    )));
                }
            }
        }
        let values = DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                1.0
            } else {
                (0.5 * (values[(i, j)] + values[(j, i)])).clamp(0.0, 1.0)
            }
        });
        Ok(KernelMatrix { values, labels })
    }

    pub fn with_index_labels(values: DMatrix<f64>) -> Result<Self> {
        let labels = (0..values.nrows()).map(|i| i.to_string()).collect();
        Self::new(values, labels)
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Rows and columns reordered so that new index `i` is old `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let d = self.dim();
        let mut seen = vec![false; d];
        if order.len() != d
            || order
                .iter()
                .any(|&o| o >= d || std::mem::replace(&mut seen[o], true))
        {
            return Err(Error::Kernel("reordering is not a permutation".into()));
        }
        let values = DMatrix::from_fn(d, d, |i, j| self.values[(order[i], order[j])]);
        let labels = order.iter().map(|&o| self.labels[o].clone()).collect();
        Ok(KernelMatrix { values, labels })
    }

    /// Header row of outcome labels followed by D rows of D floats.
    pub fn to_csv(&self) -> String {
        let mut out = self.labels.join(",");
        out.push('\n');
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| format!("{:.17e}", self.values[(i, j)]))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty kernel file".into()))?;
        let labels: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let d = labels.len();
        let mut data = Vec::with_capacity(d * d);
        let mut rows = 0;
        for line in lines {
            let row: Vec<f64> = line
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("bad kernel value `{v}`: {e}")))
                })
                .collect::<Result<_>>()?;
            if row.len() != d {
                return Err(Error::Parse(format!(
                    "kernel row {rows} has {} values, header has {d} labels",
                    row.len()
                )));
            }
            data.extend(row);
            rows += 1;
        }
        if rows != d {
            return Err(Error::Parse(format!(
                "kernel has {rows} rows but {d} labels"
            )));
        }
        Self::new(DMatrix::from_row_slice(d, d, &data), labels)
    }
}
