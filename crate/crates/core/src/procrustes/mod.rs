//! Orthogonal Procrustes: the orthogonal `W` minimising `|W X - Y|_F`.
//!
//! With `U S V^T = SVD(Y X^T)` the minimiser is `W = U V^T`. No determinant
//! correction is applied, so reflections are admissible.

mod svd;

use ndarray::{Array2, ArrayView2};

pub use svd::{svd_square, svd_square_with, Svd, DEFAULT_MAX_SWEEPS};

use crate::error::{Error, Result};
use crate::io::OrthogonalMap;

/// Singular values below this mark the solution as non-unique.
pub const RANK_DEFICIENCY_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct FitResult {
    pub map: OrthogonalMap,
    /// `|W X - Y|_F` for the fitted `W`.
    pub residual: f64,
    pub pair_count: usize,
    /// Singular values of `Y X^T`, descending.
    pub singular_values: Vec<f64>,
    /// Set when some singular value is below [`RANK_DEFICIENCY_THRESHOLD`];
    /// `W` is then one of several minimisers.
    pub rank_deficient: bool,
}

/// Fits `W` on paired columns: `x` and `y` are `d x n`, one example per
/// column.
pub fn fit_orthogonal(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<FitResult> {
    if x.dim() != y.dim() {
        return Err(Error::Shape(format!(
            "X is {:?} but Y is {:?}",
            x.dim(),
            y.dim()
        )));
    }
    let (d, n) = x.dim();
    if n == 0 {
        return Err(Error::TooFewRows {
            required: 1,
            found: 0,
        });
    }
    if d == 0 {
        return Err(Error::Shape("dimension must be positive".into()));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite entry in X or Y".into()));
    }
    let cross = y.dot(&x.t());
    let svd = svd_square(cross.view())?;
    let w = svd.u.dot(&svd.v.t());
    let residual = residual(w.view(), x, y);
    let singular_values = svd.singular_values.to_vec();
    let rank_deficient = singular_values
        .iter()
        .any(|&s| s < RANK_DEFICIENCY_THRESHOLD);
    let map = OrthogonalMap::new(w)?.with_residual(residual);
    Ok(FitResult {
        map,
        residual,
        pair_count: n,
        singular_values,
        rank_deficient,
    })
}

/// `|W X - Y|_F`.
pub fn residual(w: ArrayView2<f64>, x: ArrayView2<f64>, y: ArrayView2<f64>) -> f64 {
    let diff = w.dot(&x) - y;
    diff.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `W X` for `x` of shape `d x n`.
pub fn apply_map(map: &OrthogonalMap, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    if x.nrows() != map.dim() {
        return Err(Error::Shape(format!(
            "map is {0}x{0} but X has {1} rows",
            map.dim(),
            x.nrows()
        )));
    }
    Ok(map.matrix().dot(&x))
}

/// Maps row vectors: returns `R W^T` for `rows` of shape `n x d`.
pub fn apply_map_rows(map: &OrthogonalMap, rows: ArrayView2<f64>) -> Result<Array2<f64>> {
    if rows.ncols() != map.dim() {
        return Err(Error::Shape(format!(
            "map is {0}x{0} but rows have {1} columns",
            map.dim(),
            rows.ncols()
        )));
    }
    Ok(rows.dot(&map.matrix().t()))
}

/// Nearest orthogonal matrix in Frobenius norm (the polar factor).
pub fn nearest_orthogonal(m: ArrayView2<f64>) -> Result<Array2<f64>> {
    let svd = svd_square(m)?;
    Ok(svd.u.dot(&svd.v.t()))
}

/// `|M^T M - I|_F`.
pub fn orthogonality_deviation(m: ArrayView2<f64>) -> f64 {
    let gram = m.t().dot(&m);
    gram.indexed_iter()
        .map(|((i, j), v)| {
            let e = if i == j { v - 1.0 } else { *v };
            e * e
        })
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identity_is_optimal_for_equal_inputs() {
        let x = Array2::from_shape_fn((8, 32), |(i, j)| ((i * 31 + j * 17) % 13) as f64 - 6.0);
        let fit = fit_orthogonal(x.view(), x.view()).unwrap();
        let diff = fit.map.matrix() - &Array2::<f64>::eye(8);
        assert!(diff.iter().all(|v| v.abs() < 1e-8));
        assert!(fit.residual < 1e-8);
        assert_eq!(fit.pair_count, 32);
    }

    #[test]
    fn quarter_turn() {
        let x = array![[1.0, 0.0], [0.0, 1.0]];
        let y = array![[0.0, -1.0], [1.0, 0.0]];
        let fit = fit_orthogonal(x.view(), y.view()).unwrap();
        let expected = array![[0.0, -1.0], [1.0, 0.0]];
        let diff = fit.map.matrix() - &expected;
        assert!(diff.iter().all(|v| v.abs() < 1e-12), "{:?}", fit.map.matrix());
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn reflection_is_allowed() {
        let x = array![[1.0, 0.0, 2.0], [0.0, 1.0, 1.0]];
        let flip = array![[1.0, 0.0], [0.0, -1.0]];
        let y = flip.dot(&x);
        let fit = fit_orthogonal(x.view(), y.view()).unwrap();
        let diff = fit.map.matrix() - &flip;
        assert!(diff.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn rank_deficient_flag() {
        let x = array![[1.0], [0.0]];
        let y = array![[0.0], [1.0]];
        let fit = fit_orthogonal(x.view(), y.view()).unwrap();
        assert!(fit.rank_deficient);
        assert!(fit.residual < 1e-12);
        assert!(orthogonality_deviation(fit.map.matrix().view()) < 1e-10);
    }

    #[test]
    fn errors() {
        let a = Array2::<f64>::zeros((2, 3));
        let b = Array2::<f64>::zeros((2, 4));
        assert!(matches!(fit_orthogonal(a.view(), b.view()), Err(Error::Shape(_))));
        let empty = Array2::<f64>::zeros((2, 0));
        assert!(matches!(
            fit_orthogonal(empty.view(), empty.view()),
            Err(Error::TooFewRows { .. })
        ));
        let map = OrthogonalMap::identity(3);
        assert!(matches!(apply_map(&map, a.view()), Err(Error::Shape(_))));
    }

    #[test]
    fn identity_map_leaves_input() {
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        let out = apply_map(&OrthogonalMap::identity(2), x.view()).unwrap();
        assert_eq!(out, x);
    }
}
