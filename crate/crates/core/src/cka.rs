//! Linear centered kernel alignment between representation matrices.

use std::io::Write;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::LayerDump;
use crate::preprocess::center_columns;

fn frobenius_sq(m: &ndarray::Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

/// `|Y^T X|_F^2 / (|X^T X|_F |Y^T Y|_F)` on column-centered inputs. Rows
/// are examples; `x` and `y` may differ in width.
pub fn linear_cka(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
    if x.nrows() != y.nrows() {
        return Err(Error::Shape(format!(
            "CKA needs the same examples: {} vs {} rows",
            x.nrows(),
            y.nrows()
        )));
    }
    let xc = center_columns(x)?;
    let yc = center_columns(y)?;
    let cross = frobenius_sq(&xc.t().dot(&yc));
    let self_x = frobenius_sq(&xc.t().dot(&xc)).sqrt();
    let self_y = frobenius_sq(&yc.t().dot(&yc)).sqrt();
    if self_x == 0.0 || self_y == 0.0 {
        return Err(Error::DegenerateInput(
            "a representation matrix is constant across examples".into(),
        ));
    }
    // The product is symmetric in its two factors, so order them canonically
    // to make swapping the arguments bit-exact.
    let (lo, hi) = if self_x <= self_y {
        (self_x, self_y)
    } else {
        (self_y, self_x)
    };
    Ok(cross / (lo * hi))
}

/// Per-layer CKA values and their mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CkaProfile {
    pub values: Vec<f64>,
    pub average: f64,
}

impl CkaProfile {
    pub fn from_values(values: Vec<f64>) -> Self {
        let average = if values.is_empty() {
            0.0
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        };
        CkaProfile { values, average }
    }

    /// `layer<TAB>cka` rows labelled `L0..`, then an `average` row.
    pub fn write_tsv<W: Write>(&self, writer: &mut W) -> std::io::Result<()> {
        writeln!(writer, "layer\tcka")?;
        for (layer, value) in self.values.iter().enumerate() {
            writeln!(writer, "L{layer}\t{value}")?;
        }
        writeln!(writer, "average\t{}", self.average)
    }
}

/// CKA of matching layers of two dumps over the same rows.
pub fn cka_profile(a: &LayerDump, b: &LayerDump) -> Result<CkaProfile> {
    if a.row_count() != b.row_count() || a.layer_count() != b.layer_count() {
        return Err(Error::Shape(format!(
            "dumps differ: {} rows x {} layers vs {} rows x {} layers",
            a.row_count(),
            a.layer_count(),
            b.row_count(),
            b.layer_count()
        )));
    }
    let values = (0..a.layer_count())
        .map(|l| linear_cka(a.layer_f64(l)?.view(), b.layer_f64(l)?.view()))
        .collect::<Result<Vec<_>>>()?;
    Ok(CkaProfile::from_values(values))
}

/// Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "correlation inputs of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::TooFewRows {
            required: 2,
            found: a.len(),
        });
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut cov, mut var_a, mut var_b) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((cov / (var_a.sqrt() * var_b.sqrt())).clamp(-1.0, 1.0))
}
