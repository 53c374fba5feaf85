//! Nearest-neighbour retrieval with cosine and CSLS criteria.
//!
//! Similarities are evaluated block by block: a block of query rows is
//! multiplied against a block of candidate rows with a dense `f64` product
//! and per-row (and, for CSLS neighbourhoods, per-column) top-k lists are
//! merged as the blocks stream past. Ties are broken by the lower
//! candidate index.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::BilingualLexicon;
use crate::preprocess::normalize_rows;

const CANDIDATE_BLOCK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Cosine,
    Csls,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrievalConfig {
    pub criterion: Criterion,
    /// Neighbourhood size for the CSLS penalties.
    pub csls_k: usize,
    pub top_k: usize,
    /// Query rows per block.
    pub batch_rows: usize,
    /// Leave out the pair `(i, i)` when computing CSLS neighbourhoods.
    pub exclude_self: bool,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            criterion: Criterion::Csls,
            csls_k: 10,
            top_k: 10,
            batch_rows: 1024,
            exclude_self: false,
        }
    }
}

impl RetrievalConfig {
    pub fn cosine() -> Self {
        RetrievalConfig {
            criterion: Criterion::Cosine,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.csls_k == 0 || self.top_k == 0 || self.batch_rows == 0 {
            return Err(Error::InvalidConfig(
                "csls_k, top_k and batch_rows must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Candidates for one query, best first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RankedList {
    pub indices: Vec<usize>,
    pub scores: Vec<f64>,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Sorted (best first) bounded list of `(score, index)`.
struct TopK {
    k: usize,
    items: Vec<(f64, usize)>,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    fn beats(a: (f64, usize), b: (f64, usize)) -> bool {
        a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
    }

    #[inline]
    fn push(&mut self, score: f64, index: usize) {
        let item = (score, index);
        if self.items.len() == self.k {
            if !Self::beats(item, self.items[self.k - 1]) {
                return;
            }
            self.items.pop();
        }
        let pos = self.items.partition_point(|&other| Self::beats(other, item));
        self.items.insert(pos, item);
    }

    fn into_list(self) -> RankedList {
        let (scores, indices) = self.items.into_iter().unzip();
        RankedList { indices, scores }
    }
}

/// The `k` largest values seen for each of `n` columns, kept in descending
/// order in one flat buffer.
#[derive(Clone)]
struct ColumnTopValues {
    k: usize,
    values: Vec<f64>,
}

impl ColumnTopValues {
    fn new(n: usize, k: usize) -> Self {
        ColumnTopValues {
            k,
            values: vec![f64::NEG_INFINITY; n * k],
        }
    }

    #[inline]
    fn push(&mut self, column: usize, value: f64) {
        let slot = &mut self.values[column * self.k..(column + 1) * self.k];
        if value <= slot[self.k - 1] {
            return;
        }
        let pos = slot.partition_point(|&v| v >= value);
        slot.copy_within(pos..self.k - 1, pos + 1);
        slot[pos] = value;
    }

    fn merge(mut self, other: &ColumnTopValues) -> Self {
        for column in 0..self.values.len() / self.k {
            for &v in &other.values[column * self.k..(column + 1) * self.k] {
                self.push(column, v);
            }
        }
        self
    }

    fn means(&self) -> Vec<f64> {
        self.values
            .chunks_exact(self.k)
            .map(|c| c.iter().sum::<f64>() / self.k as f64)
            .collect()
    }
}

/// Mean of a row's `k` best values.
fn row_top_mean(values: &[f64], k: usize) -> f64 {
    values.iter().sum::<f64>() / k as f64
}

fn query_blocks(m: usize, batch_rows: usize) -> Vec<(usize, usize)> {
    (0..m)
        .step_by(batch_rows)
        .map(|start| (start, (start + batch_rows).min(m)))
        .collect()
}

/// Calls `visit(row, candidate_offset, similarities)` for every query row
/// of the block `[qs, qe)` and every candidate block.
fn scan_block(
    queries: &Array2<f64>,
    candidates: &Array2<f64>,
    (qs, qe): (usize, usize),
    mut visit: impl FnMut(usize, usize, &[f64]),
) {
    let n = candidates.nrows();
    let width = CANDIDATE_BLOCK.min(n.max(1));
    let mut buffer = Array2::<f64>::zeros((qe - qs, width));
    let q = queries.slice(s![qs..qe, ..]);
    for cs in (0..n).step_by(width) {
        let ce = (cs + width).min(n);
        let mut out = buffer.slice_mut(s![.., ..ce - cs]);
        general_mat_mul(1.0, &q, &candidates.slice(s![cs..ce, ..]).t(), 0.0, &mut out);
        for (r, row) in out.rows().into_iter().enumerate() {
            let row = row.as_slice().expect("buffer rows are contiguous");
            visit(qs + r, cs, row);
        }
    }
}

fn check_dims(queries: &ArrayView2<f64>, candidates: &ArrayView2<f64>) -> Result<()> {
    if queries.ncols() != candidates.ncols() {
        return Err(Error::Shape(format!(
            "queries have dimension {}, candidates {}",
            queries.ncols(),
            candidates.ncols()
        )));
    }
    Ok(())
}

/// Ranks candidates by `score(query, candidate, cosine)`.
fn rank(
    queries: &Array2<f64>,
    candidates: &Array2<f64>,
    top_k: usize,
    batch_rows: usize,
    score: impl Fn(usize, usize, f64) -> f64 + Sync,
) -> Vec<RankedList> {
    let k = top_k.min(candidates.nrows());
    let blocks = query_blocks(queries.nrows(), batch_rows);
    let per_block: Vec<Vec<RankedList>> = blocks
        .par_iter()
        .map(|&(qs, qe)| {
            let mut tops: Vec<TopK> = (qs..qe).map(|_| TopK::new(k)).collect();
            if k > 0 {
                scan_block(queries, candidates, (qs, qe), |i, offset, sims| {
                    let top = &mut tops[i - qs];
                    for (c, &cos) in sims.iter().enumerate() {
                        let j = offset + c;
                        top.push(score(i, j, cos), j);
                    }
                });
            }
            tops.into_iter().map(TopK::into_list).collect()
        })
        .collect();
    per_block.into_iter().flatten().collect()
}

/// Indices of the `k` most cosine-similar candidates for every query.
pub fn cosine_topk(
    queries: ArrayView2<f64>,
    candidates: ArrayView2<f64>,
    k: usize,
    batch_rows: usize,
) -> Result<Vec<RankedList>> {
    check_dims(&queries, &candidates)?;
    if batch_rows == 0 {
        return Err(Error::InvalidConfig("batch_rows must be at least 1".into()));
    }
    let q = normalize_rows(queries)?;
    let c = normalize_rows(candidates)?;
    Ok(rank(&q, &c, k, batch_rows, |_, _, cos| cos))
}

/// Mean cosine of each query to its `k` nearest candidates (`r_T`) and of
/// each candidate to its `k` nearest queries (`r_S`), both computed from a
/// single pass over the similarity matrix. Inputs must be unit rows.
fn neighbourhood_means(
    queries: &Array2<f64>,
    candidates: &Array2<f64>,
    k: usize,
    batch_rows: usize,
    exclude_self: bool,
) -> (Vec<f64>, Vec<f64>) {
    let n = candidates.nrows();
    let blocks = query_blocks(queries.nrows(), batch_rows);
    let (mut row_parts, columns) = blocks
        .par_iter()
        .fold(
            || (Vec::new(), ColumnTopValues::new(n, k)),
            |(mut rows, mut columns), &(qs, qe)| {
                let mut row_tops: Vec<Vec<f64>> = vec![vec![f64::NEG_INFINITY; k]; qe - qs];
                scan_block(queries, candidates, (qs, qe), |i, offset, sims| {
                    let top = &mut row_tops[i - qs];
                    for (c, &cos) in sims.iter().enumerate() {
                        let j = offset + c;
                        if exclude_self && i == j {
                            continue;
                        }
                        if cos > top[k - 1] {
                            let pos = top.partition_point(|&v| v >= cos);
                            top.copy_within(pos..k - 1, pos + 1);
                            top[pos] = cos;
                        }
                        columns.push(j, cos);
                    }
                });
                let means: Vec<f64> = row_tops.iter().map(|t| row_top_mean(t, k)).collect();
                rows.push((qs, means));
                (rows, columns)
            },
        )
        .reduce(
            || (Vec::new(), ColumnTopValues::new(n, k)),
            |(mut rows_a, cols_a), (rows_b, cols_b)| {
                rows_a.extend(rows_b);
                (rows_a, cols_a.merge(&cols_b))
            },
        );
    row_parts.sort_by_key(|(start, _)| *start);
    let r_queries = row_parts.into_iter().flat_map(|(_, m)| m).collect();
    (r_queries, columns.means())
}

fn check_neighbourhood(k: usize, side: &'static str, size: usize, exclude_self: bool) -> Result<()> {
    let needed = if exclude_self { k + 1 } else { k };
    if size < needed {
        return Err(Error::NeighbourhoodTooLarge { k, side, size });
    }
    Ok(())
}

/// CSLS penalties for `queries` against `candidates`: `r_T` per query and
/// `r_S` per candidate. `r_S` is measured against `pool` when given (for
/// example the whole mapped source vocabulary), otherwise against the
/// queries themselves.
pub fn csls_penalties(
    queries: ArrayView2<f64>,
    pool: Option<ArrayView2<f64>>,
    candidates: ArrayView2<f64>,
    config: &RetrievalConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    config.validate()?;
    check_dims(&queries, &candidates)?;
    let q = normalize_rows(queries)?;
    let c = normalize_rows(candidates)?;
    let pool = pool.map(normalize_rows).transpose()?;
    penalties(&q, pool.as_ref(), &c, config)
}

fn penalties(
    q: &Array2<f64>,
    pool: Option<&Array2<f64>>,
    c: &Array2<f64>,
    config: &RetrievalConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = config.csls_k;
    check_neighbourhood(k, "candidate", c.nrows(), config.exclude_self)?;
    match pool {
        None => {
            check_neighbourhood(k, "query", q.nrows(), config.exclude_self)?;
            Ok(neighbourhood_means(q, c, k, config.batch_rows, config.exclude_self))
        }
        Some(p) => {
            if p.ncols() != c.ncols() {
                return Err(Error::Shape("pool dimension differs from candidates".into()));
            }
            check_neighbourhood(k, "query pool", p.nrows(), config.exclude_self)?;
            let (r_t, _) = neighbourhood_means(q, c, k, config.batch_rows, config.exclude_self);
            let (_, r_s) = neighbourhood_means(p, c, k, config.batch_rows, config.exclude_self);
            Ok((r_t, r_s))
        }
    }
}

/// Ranks candidates by `2 cos(x, y) - r_T(x) - r_S(y)`.
pub fn csls_topk(
    queries: ArrayView2<f64>,
    candidates: ArrayView2<f64>,
    config: &RetrievalConfig,
) -> Result<Vec<RankedList>> {
    csls_topk_with_pool(queries, None, candidates, config)
}

pub fn csls_topk_with_pool(
    queries: ArrayView2<f64>,
    pool: Option<ArrayView2<f64>>,
    candidates: ArrayView2<f64>,
    config: &RetrievalConfig,
) -> Result<Vec<RankedList>> {
    config.validate()?;
    check_dims(&queries, &candidates)?;
    let q = normalize_rows(queries)?;
    let c = normalize_rows(candidates)?;
    let pool = pool.map(normalize_rows).transpose()?;
    let (r_t, r_s) = penalties(&q, pool.as_ref(), &c, config)?;
    Ok(rank(&q, &c, config.top_k, config.batch_rows, |i, j, cos| {
        2.0 * cos - r_t[i] - r_s[j]
    }))
}

/// Dispatches on `config.criterion`.
pub fn retrieve(
    queries: ArrayView2<f64>,
    pool: Option<ArrayView2<f64>>,
    candidates: ArrayView2<f64>,
    config: &RetrievalConfig,
) -> Result<Vec<RankedList>> {
    config.validate()?;
    match config.criterion {
        Criterion::Cosine => cosine_topk(queries, candidates, config.top_k, config.batch_rows),
        Criterion::Csls => csls_topk_with_pool(queries, pool, candidates, config),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    pub precision_at: BTreeMap<usize, f64>,
    /// Distinct gold sources found among the queries.
    pub evaluated: usize,
    /// Distinct gold sources absent from the queries.
    pub skipped: usize,
}

/// A query scores a hit at `k` when any gold target of its token appears in
/// its first `k` candidates. Precision is averaged over distinct gold
/// sources present among `query_tokens`.
pub fn precision_at_k(
    lists: &[RankedList],
    gold: &BilingualLexicon,
    query_tokens: &[String],
    candidate_tokens: &[String],
    ks: &[usize],
) -> Result<PrecisionReport> {
    if lists.len() != query_tokens.len() {
        return Err(Error::Shape(format!(
            "{} ranked lists for {} query tokens",
            lists.len(),
            query_tokens.len()
        )));
    }
    let mut query_index = HashMap::with_capacity(query_tokens.len());
    for (i, token) in query_tokens.iter().enumerate() {
        query_index.entry(token.as_str()).or_insert(i);
    }
    let mut hits = vec![0usize; ks.len()];
    let mut report = PrecisionReport::default();
    for source in gold.sources() {
        let Some(&qi) = query_index.get(source.as_str()) else {
            report.skipped += 1;
            continue;
        };
        report.evaluated += 1;
        let targets = gold.targets_of(source);
        let first_hit = lists[qi]
            .indices
            .iter()
            .position(|&c| targets.contains(candidate_tokens[c].as_str()));
        if let Some(rank) = first_hit {
            for (h, &k) in hits.iter_mut().zip(ks) {
                if rank < k {
                    *h += 1;
                }
            }
        }
    }
    if report.evaluated == 0 {
        return Err(Error::EmptyIntersection);
    }
    for (&k, &h) in ks.iter().zip(&hits) {
        report
            .precision_at
            .insert(k, h as f64 / report.evaluated as f64);
    }
    Ok(report)
}

/// Writes `query_token<TAB>rank<TAB>candidate_token<TAB>score` rows with
/// 1-based ranks.
pub fn write_rankings<W: Write>(
    writer: &mut W,
    lists: &[RankedList],
    query_tokens: &[String],
    candidate_tokens: &[String],
) -> std::io::Result<()> {
    for (list, query) in lists.iter().zip(query_tokens) {
        for (rank, (&c, score)) in list.indices.iter().zip(&list.scores).enumerate() {
            writeln!(
                writer,
                "{query}\t{}\t{}\t{score}",
                rank + 1,
                candidate_tokens[c]
            )?;
        }
    }
    Ok(())
}
