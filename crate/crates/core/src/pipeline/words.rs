use ndarray::{Array2, Axis};

use super::{default_ks, AlignmentReport, EvalSummary, LayerReport, Level, Rankings};
use crate::error::{Error, Result};
use crate::io::{BilingualLexicon, EmbeddingTable, LayerDump, LexiconEntry, OrthogonalMap};
use crate::preprocess::{iterative_normalize, NormalizationConfig};
use crate::procrustes::{apply_map_rows, fit_orthogonal};
use crate::retrieval::{precision_at_k, retrieve, RetrievalConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct WordOptions {
    pub normalization: NormalizationConfig,
    pub retrieval: RetrievalConfig,
    /// Cut-offs reported as P@k.
    pub ks: Vec<usize>,
}

impl Default for WordOptions {
    fn default() -> Self {
        WordOptions {
            normalization: NormalizationConfig::default(),
            retrieval: RetrievalConfig::default(),
            ks: default_ks(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct WordAlignment {
    /// Maps normalized source vectors onto normalized target vectors.
    pub map: OrthogonalMap,
    pub report: AlignmentReport,
    pub rankings: Option<Rankings>,
}

/// Treats one layer of a dump as an embedding table keyed by item id.
pub fn table_from_dump(dump: &LayerDump, layer: usize) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable::new(dump.item_ids().to_vec(), dump.layer(layer)?.clone())?;
    table.metadata.insert("layer".into(), layer.to_string());
    Ok(table)
}

fn space_name(table: &EmbeddingTable, fallback: &str) -> String {
    table
        .metadata
        .get("language")
        .cloned()
        .unwrap_or_else(|| fallback.to_owned())
}

/// Entries whose tokens both have vectors, as row index pairs, plus the
/// number dropped.
fn resolve(
    lexicon: &BilingualLexicon,
    src: &EmbeddingTable,
    tgt: &EmbeddingTable,
) -> (Vec<(usize, usize)>, Vec<LexiconEntry>, usize) {
    let mut rows = Vec::new();
    let mut kept = Vec::new();
    for entry in lexicon.entries() {
        if let (Some(s), Some(t)) = (src.index_of(&entry.source), tgt.index_of(&entry.target)) {
            rows.push((s, t));
            kept.push(entry.clone());
        }
    }
    let dropped = lexicon.len() - rows.len();
    (rows, kept, dropped)
}

/// Fits a source-to-target map on the supervision lexicon and, when an
/// evaluation lexicon is given, scores translation retrieval from mapped
/// source words into the full target vocabulary.
pub fn align_words(
    src: &EmbeddingTable,
    tgt: &EmbeddingTable,
    supervision: &BilingualLexicon,
    eval: Option<&BilingualLexicon>,
    options: &WordOptions,
) -> Result<WordAlignment> {
    if src.dim() != tgt.dim() {
        return Err(Error::Shape(format!(
            "source dimension {} differs from target dimension {}",
            src.dim(),
            tgt.dim()
        )));
    }
    let d = src.dim();
    let src_norm = iterative_normalize(src.to_f64().view(), &options.normalization)?;
    let tgt_norm = iterative_normalize(tgt.to_f64().view(), &options.normalization)?;

    let (pairs, _, dropped) = resolve(supervision, src, tgt);
    let required = d.div_ceil(4).max(1);
    if pairs.len() < required {
        return Err(Error::Underdetermined {
            usable: pairs.len(),
            required,
        });
    }
    let src_rows: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let tgt_rows: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    let x = src_norm.select(Axis(0), &src_rows).reversed_axes();
    let y = tgt_norm.select(Axis(0), &tgt_rows).reversed_axes();
    let fit = fit_orthogonal(x.view(), y.view())?;
    let map = fit
        .map
        .clone()
        .with_spaces(space_name(src, "source"), space_name(tgt, "target"));

    let mut report = AlignmentReport::new(Level::Word);
    let mut layer = LayerReport::from_fit(None, &fit, dropped);
    let mut rankings = None;
    if let Some(eval) = eval {
        let overlap = eval
            .entries()
            .iter()
            .filter(|e| supervision.contains_pair(&e.source, &e.target))
            .count();
        if overlap > 0 {
            report.warnings.push(format!(
                "{overlap} evaluation pairs also appear in the supervision lexicon"
            ));
        }
        let (_, kept, eval_dropped) = resolve(eval, src, tgt);
        let gold = BilingualLexicon::from_entries(kept)?;
        if gold.is_empty() {
            return Err(Error::EmptyIntersection);
        }
        let queries: Vec<String> = gold.sources().to_vec();
        let query_rows: Vec<usize> = queries
            .iter()
            .map(|q| src.index_of(q).expect("resolved"))
            .collect();
        let mapped_all = apply_map_rows(&map, src_norm.view())?;
        let mapped_queries: Array2<f64> = mapped_all.select(Axis(0), &query_rows);
        let mut config = options.retrieval;
        config.top_k = config.top_k.max(options.ks.iter().copied().max().unwrap_or(1));
        let lists = retrieve(
            mapped_queries.view(),
            Some(mapped_all.view()),
            tgt_norm.view(),
            &config,
        )?;
        let precision = precision_at_k(&lists, &gold, &queries, tgt.tokens(), &options.ks)?;
        layer.eval = Some(EvalSummary {
            queries: precision.evaluated,
            skipped: precision.skipped,
            dropped_pairs: eval_dropped,
            precision_at: precision.precision_at,
        });
        rankings = Some(Rankings {
            queries,
            candidates: tgt.tokens().to_vec(),
            lists,
        });
    }
    if fit.rank_deficient {
        report
            .warnings
            .push("cross-covariance is rank deficient; the map is not unique".into());
    }
    report.layers.push(layer);
    Ok(WordAlignment {
        map,
        report,
        rankings,
    })
}
