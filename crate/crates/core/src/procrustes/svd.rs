//! One-sided Jacobi SVD for small dense square matrices.
//!
//! Only the `d x d` cross-covariance of the Procrustes problem is ever
//! factorised, so a square-matrix kernel is sufficient. The method
//! orthogonalises the columns of `M V` with plane rotations; on
//! convergence the column norms are the singular values.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_SWEEPS: usize = 100;

/// `M = U diag(singular_values) V^T`, singular values in descending order.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Array2<f64>,
    pub singular_values: Array1<f64>,
    pub v: Array2<f64>,
    pub sweeps: usize,
}

impl Svd {
    pub fn reconstruct(&self) -> Array2<f64> {
        let scaled = &self.u * &self.singular_values.view().insert_axis(Axis(0));
        scaled.dot(&self.v.t())
    }
}

pub fn svd_square(m: ArrayView2<f64>) -> Result<Svd> {
    svd_square_with(m, DEFAULT_MAX_SWEEPS)
}

pub fn svd_square_with(m: ArrayView2<f64>, max_sweeps: usize) -> Result<Svd> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(Error::Shape(format!(
            "svd_square needs a square matrix, got {rows}x{cols}"
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite entry in SVD input".into()));
    }
    let d = rows;
    // Row k of `work` is column k of M V; row k of `vt` is column k of V.
    let mut work = m.t().to_owned();
    let mut vt = Array2::<f64>::eye(d);
    let tol = f64::EPSILON * d.max(1) as f64;

    let mut sweeps = 0;
    let mut converged = d <= 1;
    while !converged {
        if sweeps == max_sweeps {
            return Err(Error::SvdNoConvergence { sweeps });
        }
        sweeps += 1;
        let mut rotated = false;
        for p in 0..d - 1 {
            for q in p + 1..d {
                let (alpha, beta, gamma) = {
                    let a = work.row(p);
                    let b = work.row(q);
                    (a.dot(&a), b.dot(&b), a.dot(&b))
                };
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                rotate_rows(&mut work, p, q, c, s);
                rotate_rows(&mut vt, p, q, c, s);
            }
        }
        converged = !rotated;
    }

    let norms: Vec<f64> = work.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));

    let sigma_max = order.first().map_or(0.0, |&i| norms[i]);
    let null_threshold = sigma_max * f64::EPSILON * d as f64;

    let mut u = Array2::<f64>::zeros((d, d));
    let mut v = Array2::<f64>::zeros((d, d));
    let mut singular_values = Array1::<f64>::zeros(d);
    let mut missing = Vec::new();
    for (slot, &src) in order.iter().enumerate() {
        singular_values[slot] = norms[src];
        v.column_mut(slot).assign(&vt.row(src));
        if norms[src] > null_threshold && norms[src] > 0.0 {
            let column = &work.row(src) / norms[src];
            u.column_mut(slot).assign(&column);
        } else {
            missing.push(slot);
        }
    }
    complete_basis(&mut u, &missing);

    Ok(Svd {
        u,
        singular_values,
        v,
        sweeps,
    })
}

fn rotate_rows(m: &mut Array2<f64>, p: usize, q: usize, c: f64, s: f64) {
    let (mut top, mut bottom) = m.multi_slice_mut((ndarray::s![p, ..], ndarray::s![q, ..]));
    ndarray::Zip::from(&mut top)
        .and(&mut bottom)
        .for_each(|a, b| {
            let (x, y) = (*a, *b);
            *a = c * x - s * y;
            *b = s * x + c * y;
        });
}

/// Fills the columns listed in `missing` with unit vectors orthogonal to all
/// other columns (classical Gram-Schmidt applied twice).
fn complete_basis(u: &mut Array2<f64>, missing: &[usize]) {
    let d = u.nrows();
    let mut filled: Vec<usize> = (0..d).filter(|c| !missing.contains(c)).collect();
    for &slot in missing {
        let mut best: Option<(f64, Array1<f64>)> = None;
        for k in 0..d {
            let mut candidate = Array1::<f64>::zeros(d);
            candidate[k] = 1.0;
            for _ in 0..2 {
                for &c in &filled {
                    let col = u.column(c);
                    let proj = col.dot(&candidate);
                    candidate.scaled_add(-proj, &col);
                }
            }
            let norm = candidate.dot(&candidate).sqrt();
            if best.as_ref().is_none_or(|(n, _)| norm > *n) {
                best = Some((norm, candidate));
            }
        }
        let (norm, vector) = best.expect("d > 0");
        u.column_mut(slot).assign(&(vector / norm));
        filled.push(slot);
    }
}
