#![allow(dead_code)]

use nalgebra::DMatrix;
use ndarray::Array2;
use repralign::io::{BilingualLexicon, EmbeddingTable, LexiconEntry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
}

pub fn to_nalgebra(m: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

pub fn from_nalgebra(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of R's diagonal folded into Q.
pub fn random_orthogonal(rng: &mut impl Rng, d: usize) -> Array2<f64> {
    let qr = to_nalgebra(&gaussian(rng, d, d)).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    from_nalgebra(&q)
}

pub fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn orthogonality_error(m: &Array2<f64>) -> f64 {
    frobenius(&(m.t().dot(m) - Array2::<f64>::eye(m.ncols())))
}

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn to_f32(m: &Array2<f64>) -> Array2<f32> {
    m.mapv(|v| v as f32)
}

pub fn unit_rows(m: &Array2<f64>) -> Array2<f64> {
    let mut out = m.clone();
    for mut row in out.rows_mut() {
        let norm = row.dot(&row).sqrt();
        row /= norm;
    }
    out
}

/// Source table of `n` unit-norm Gaussian rows (tokens `s0..`) and a target
/// table `source · Q + sigma · noise` (tokens `t0..`), with `Q` returned.
pub fn isomorphic_tables(
    seed: u64,
    n: usize,
    d: usize,
    sigma: f64,
) -> (EmbeddingTable, EmbeddingTable, Array2<f64>) {
    let mut rng = rng(seed);
    let src = unit_rows(&gaussian(&mut rng, n, d));
    let q = random_orthogonal(&mut rng, d);
    let tgt = src.dot(&q) + gaussian(&mut rng, n, d) * sigma;
    (
        EmbeddingTable::new(names("s", n), to_f32(&src)).unwrap(),
        EmbeddingTable::new(names("t", n), to_f32(&tgt)).unwrap(),
        q,
    )
}

/// Lexicon `s{i} -> t{i}` for every `i` in `range`.
pub fn diagonal_lexicon(range: std::ops::Range<usize>) -> BilingualLexicon {
    BilingualLexicon::from_entries(range.map(|i| LexiconEntry {
        source: format!("s{i}"),
        target: format!("t{i}"),
        weight: 1.0,
    }))
    .unwrap()
}
