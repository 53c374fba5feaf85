//! Vector preparation applied before fitting maps: iterative
//! normalization, column centering, sentence pooling and type averaging.

use std::collections::HashSet;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalizationConfig {
    pub iterations: usize,
    /// Stop early once the centroid norm drops below this value.
    pub convergence_epsilon: f64,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            iterations: 5,
            convergence_epsilon: 1e-9,
        }
    }
}

/// Centroid norm of the unit-length rows measured at each iteration, before
/// centering.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NormalizationTrace {
    pub centroid_norms: Vec<f64>,
}

/// Rows whose norm falls below this after centering count as zero.
const CENTERED_ZERO_NORM: f64 = 1e-12;

pub fn iterative_normalize(matrix: ArrayView2<f64>, config: &NormalizationConfig) -> Result<Array2<f64>> {
    iterative_normalize_traced(matrix, config).map(|(m, _)| m)
}

/// Alternates unit-length scaling and mean-centering of rows, then applies
/// a last unit-length pass so every output row has norm one.
pub fn iterative_normalize_traced(
    matrix: ArrayView2<f64>,
    config: &NormalizationConfig,
) -> Result<(Array2<f64>, NormalizationTrace)> {
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite entry".into()));
    }
    let mut out = matrix.to_owned();
    let mut trace = NormalizationTrace::default();
    let mut threshold = 0.0;
    for _ in 0..config.iterations {
        unit_rows(&mut out, threshold)?;
        threshold = CENTERED_ZERO_NORM;
        let centroid = out
            .mean_axis(Axis(0))
            .unwrap_or_else(|| Array1::zeros(out.ncols()));
        let norm = centroid.dot(&centroid).sqrt();
        trace.centroid_norms.push(norm);
        if norm < config.convergence_epsilon {
            break;
        }
        out -= &centroid.view().insert_axis(Axis(0));
    }
    unit_rows(&mut out, threshold)?;
    Ok((out, trace))
}

fn unit_rows(m: &mut Array2<f64>, zero_threshold: f64) -> Result<()> {
    for (i, mut row) in m.rows_mut().into_iter().enumerate() {
        let norm = row.dot(&row).sqrt();
        if !(norm > zero_threshold) {
            return Err(Error::ZeroNorm { row: i });
        }
        row /= norm;
    }
    Ok(())
}

/// Scales every row to unit L2 norm.
pub fn normalize_rows(matrix: ArrayView2<f64>) -> Result<Array2<f64>> {
    let mut out = matrix.to_owned();
    unit_rows(&mut out, 0.0)?;
    Ok(out)
}

/// Subtracts the column means.
pub fn center_columns(matrix: ArrayView2<f64>) -> Result<Array2<f64>> {
    if matrix.nrows() < 2 {
        return Err(Error::TooFewRows {
            required: 2,
            found: matrix.nrows(),
        });
    }
    let mean = matrix.mean_axis(Axis(0)).expect("n >= 2");
    Ok(&matrix - &mean.view().insert_axis(Axis(0)))
}

/// Which rows to leave out of a sentence mean.
#[derive(Clone, Debug, PartialEq)]
pub enum PoolingSpec {
    /// `true` marks a special token.
    Mask(Vec<bool>),
    /// Tokens whose string is in this set are excluded.
    SpecialTokens(HashSet<String>),
}

impl PoolingSpec {
    /// Resolves the pooling rule against the token strings of one sentence.
    pub fn mask_for(&self, tokens: &[String]) -> Vec<bool> {
        match self {
            PoolingSpec::Mask(mask) => mask.clone(),
            PoolingSpec::SpecialTokens(set) => tokens.iter().map(|t| set.contains(t)).collect(),
        }
    }
}

/// Arithmetic mean of the rows not flagged in `special`.
pub fn pool_sentence(tokens: ArrayView2<f64>, special: &[bool]) -> Result<Array1<f64>> {
    if special.len() != tokens.nrows() {
        return Err(Error::Shape(format!(
            "mask has {} entries for {} token vectors",
            special.len(),
            tokens.nrows()
        )));
    }
    let mut sum = Array1::<f64>::zeros(tokens.ncols());
    let mut count = 0usize;
    for (row, &skip) in tokens.rows().into_iter().zip(special) {
        if !skip {
            sum += &row;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::DegenerateInput(
            "every token of the sentence is masked".into(),
        ));
    }
    Ok(sum / count as f64)
}

/// How occurrences of one word type are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TypeAveraging {
    /// Mean of subwords per occurrence, then unweighted mean of occurrences.
    #[default]
    OccurrenceMean,
    /// Flat mean over every subword vector of every occurrence.
    FlatSubwordMean,
}

/// Collapses all occurrences of a word (each a `n_subwords x d` block) into
/// one vector.
pub fn type_average(occurrences: &[ArrayView2<f64>], mode: TypeAveraging) -> Result<Array1<f64>> {
    let first = occurrences
        .first()
        .ok_or_else(|| Error::DegenerateInput("no occurrences to average".into()))?;
    let dim = first.ncols();
    let mut sum = Array1::<f64>::zeros(dim);
    let mut weight = 0usize;
    for occ in occurrences {
        if occ.ncols() != dim {
            return Err(Error::Shape(format!(
                "occurrence of dimension {} among dimension {dim}",
                occ.ncols()
            )));
        }
        if occ.nrows() == 0 {
            return Err(Error::DegenerateInput("occurrence without subwords".into()));
        }
        match mode {
            TypeAveraging::OccurrenceMean => {
                sum += &occ.mean_axis(Axis(0)).expect("non-empty");
                weight += 1;
            }
            TypeAveraging::FlatSubwordMean => {
                sum += &occ.sum_axis(Axis(0));
                weight += occ.nrows();
            }
        }
    }
    Ok(sum / weight as f64)
}
