use std::collections::{HashMap, HashSet};

use ndarray::{Array2, Axis};

use super::{
    default_ks, group_words, identity_gold, layer_selection, AlignmentReport, EvalSummary,
    LayerOutput, LayerReport, Level, Rankings,
};
use crate::error::{Error, Result};
use crate::io::{LayerDump, ParallelCorpus};
use crate::preprocess::{iterative_normalize, NormalizationConfig};
use crate::procrustes::{apply_map_rows, fit_orthogonal};
use crate::retrieval::{precision_at_k, retrieve, RetrievalConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct ContextualOptions {
    /// Single layer to align; every layer when unset.
    pub layer: Option<usize>,
    pub normalization: NormalizationConfig,
    pub retrieval: RetrievalConfig,
    pub ks: Vec<usize>,
    /// Trailing sentence pairs held out of the fit and used for retrieval.
    pub eval_sentences: usize,
    /// Also return the target dump mapped into the source space.
    pub export_mapped: bool,
}

impl Default for ContextualOptions {
    fn default() -> Self {
        ContextualOptions {
            layer: None,
            normalization: NormalizationConfig::default(),
            retrieval: RetrievalConfig::cosine(),
            ks: default_ks(),
            eval_sentences: 0,
            export_mapped: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ContextualAlignment {
    pub layers: Vec<LayerOutput>,
    pub report: AlignmentReport,
}

/// Aligned word-occurrence ids `(source id, target id)` for a range of
/// sentence pairs, deduplicated, in corpus order.
fn aligned_ids(corpus: &ParallelCorpus, sentences: std::ops::Range<usize>) -> Vec<(String, String)> {
    let alignments = corpus.alignments().unwrap_or(&[]);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for p in sentences {
        for &(i, j) in &alignments[p] {
            if seen.insert((p, i, j)) {
                out.push((format!("{p}:{i}"), format!("{p}:{j}")));
            }
        }
    }
    out
}

fn row_index(dump: &LayerDump) -> HashMap<&str, usize> {
    dump.item_ids()
        .iter()
        .enumerate()
        .map(|(r, id)| (id.as_str(), r))
        .collect()
}

/// Pairs whose ids exist in both dumps, as row indices, plus the number
/// dropped.
fn resolve(
    ids: &[(String, String)],
    src: &HashMap<&str, usize>,
    tgt: &HashMap<&str, usize>,
) -> (Vec<(usize, usize)>, usize) {
    let rows: Vec<(usize, usize)> = ids
        .iter()
        .filter_map(|(s, t)| Some((*src.get(s.as_str())?, *tgt.get(t.as_str())?)))
        .collect();
    let dropped = ids.len() - rows.len();
    (rows, dropped)
}

/// Learns, per layer, a map from the target model's contextual word vectors
/// to the source model's, using word-aligned parallel sentences as the
/// dictionary.
///
/// Dumps are token-level with ids `<pair index>:<word index>` (see
/// [`group_words`]); subwords are averaged and special tokens ignored.
/// Pharaoh pairs `i-j` link source word `i` to target word `j`.
pub fn align_contextual(
    src: &LayerDump,
    tgt: &LayerDump,
    corpus: &ParallelCorpus,
    options: &ContextualOptions,
) -> Result<ContextualAlignment> {
    let alignments = corpus.alignments().ok_or(Error::NoAlignedPairs)?;
    if src.layer_count() != tgt.layer_count() {
        return Err(Error::Shape(format!(
            "source dump has {} layers, target dump has {}",
            src.layer_count(),
            tgt.layer_count()
        )));
    }
    if src.dim() != tgt.dim() {
        return Err(Error::Shape(format!(
            "source dimension {} differs from target dimension {}",
            src.dim(),
            tgt.dim()
        )));
    }
    let layers = layer_selection(options.layer, src.layer_count())?;
    if options.eval_sentences >= corpus.len() && options.eval_sentences > 0 {
        return Err(Error::InvalidConfig(format!(
            "cannot hold out {} of {} sentence pairs",
            options.eval_sentences,
            corpus.len()
        )));
    }
    let split = corpus.len() - options.eval_sentences;

    let src_words = group_words(src)?;
    let tgt_words = group_words(tgt)?;
    let src_index = row_index(&src_words);
    let tgt_index = row_index(&tgt_words);
    let (train, dropped) = resolve(&aligned_ids(corpus, 0..split), &src_index, &tgt_index);
    if train.is_empty() {
        return Err(Error::NoAlignedPairs);
    }
    let held_out_ids = aligned_ids(corpus, split..corpus.len());
    let (held_out, eval_dropped) = resolve(&held_out_ids, &src_index, &tgt_index);

    let mut report = AlignmentReport::new(Level::ContextualWord);
    report.unaligned_sentences = alignments.iter().filter(|a| a.is_empty()).count();
    if report.unaligned_sentences > 0 {
        report.warnings.push(format!(
            "{} sentence pairs have no alignments and were skipped",
            report.unaligned_sentences
        ));
    }

    let mut outputs = Vec::with_capacity(layers.len());
    for layer in layers {
        let src_norm = iterative_normalize(src_words.layer_f64(layer)?.view(), &options.normalization)?;
        let tgt_norm = iterative_normalize(tgt_words.layer_f64(layer)?.view(), &options.normalization)?;
        let x_rows: Vec<usize> = train.iter().map(|p| p.1).collect();
        let y_rows: Vec<usize> = train.iter().map(|p| p.0).collect();
        let x = tgt_norm.select(Axis(0), &x_rows).reversed_axes();
        let y = src_norm.select(Axis(0), &y_rows).reversed_axes();
        let fit = fit_orthogonal(x.view(), y.view())?;
        let map = fit
            .map
            .clone()
            .with_spaces(format!("target:L{layer}"), format!("source:L{layer}"));
        let mut row = LayerReport::from_fit(Some(layer), &fit, dropped);

        let mut rankings = None;
        if options.eval_sentences > 0 {
            let (summary, ranked) = evaluate(
                &held_out,
                eval_dropped,
                &src_norm,
                &tgt_norm,
                &src_words,
                &tgt_words,
                &map,
                options,
            )?;
            row.eval = Some(summary);
            rankings = Some(ranked);
        }

        let mapped = if options.export_mapped {
            let raw = tgt.layer_f64(layer)?;
            let projected = apply_map_rows(&map, raw.view())?.mapv(|v| v as f32);
            Some(LayerDump::new(tgt.item_ids().to_vec(), vec![projected])?)
        } else {
            None
        };
        report.layers.push(row);
        outputs.push(LayerOutput {
            layer,
            map,
            rankings,
            mapped,
        });
    }
    Ok(ContextualAlignment {
        layers: outputs,
        report,
    })
}

/// Retrieval from mapped held-out target occurrences to held-out source
/// occurrences; an occurrence's gold answers are the words it is aligned to.
#[allow(clippy::too_many_arguments)]
fn evaluate(
    held_out: &[(usize, usize)],
    dropped: usize,
    src_norm: &Array2<f64>,
    tgt_norm: &Array2<f64>,
    src_words: &LayerDump,
    tgt_words: &LayerDump,
    map: &crate::io::OrthogonalMap,
    options: &ContextualOptions,
) -> Result<(EvalSummary, Rankings)> {
    if held_out.is_empty() {
        return Err(Error::NoAlignedPairs);
    }
    let mut query_rows = Vec::new();
    let mut candidate_rows = Vec::new();
    let mut seen_q = HashSet::new();
    let mut seen_c = HashSet::new();
    for &(s, t) in held_out {
        if seen_q.insert(t) {
            query_rows.push(t);
        }
        if seen_c.insert(s) {
            candidate_rows.push(s);
        }
    }
    let name = |dump: &LayerDump, rows: &[usize]| -> Vec<String> {
        rows.iter().map(|&r| dump.item_ids()[r].clone()).collect()
    };
    let queries = name(tgt_words, &query_rows);
    let candidates = name(src_words, &candidate_rows);
    let gold = identity_gold(
        held_out
            .iter()
            .map(|&(s, t)| (tgt_words.item_ids()[t].as_str(), src_words.item_ids()[s].as_str())),
    )?;
    let mapped = apply_map_rows(map, tgt_norm.select(Axis(0), &query_rows).view())?;
    let cand = src_norm.select(Axis(0), &candidate_rows);
    let mut config = options.retrieval;
    config.top_k = config.top_k.max(options.ks.iter().copied().max().unwrap_or(1));
    let lists = retrieve(mapped.view(), None, cand.view(), &config)?;
    let precision = precision_at_k(&lists, &gold, &queries, &candidates, &options.ks)?;
    Ok((
        EvalSummary {
            queries: precision.evaluated,
            skipped: precision.skipped,
            dropped_pairs: dropped,
            precision_at: precision.precision_at,
        },
        Rankings {
            queries,
            candidates,
            lists,
        },
    ))
}
