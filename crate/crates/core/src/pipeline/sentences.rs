use std::collections::{HashMap, HashSet};

use ndarray::Axis;

use super::{
    identity_gold, layer_selection, AlignmentReport, Correlation, EvalSummary, LayerOutput,
    LayerReport, Level, Rankings,
};
use crate::cka::{linear_cka, CkaProfile};
use crate::error::{Error, Result};
use crate::io::LayerDump;
use crate::preprocess::{iterative_normalize, NormalizationConfig};
use crate::procrustes::{apply_map_rows, fit_orthogonal};
use crate::retrieval::{precision_at_k, retrieve, RetrievalConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct SentenceOptions {
    /// Single layer to align; every layer when unset.
    pub layer: Option<usize>,
    pub normalization: NormalizationConfig,
    pub retrieval: RetrievalConfig,
    pub ks: Vec<usize>,
}

impl Default for SentenceOptions {
    fn default() -> Self {
        SentenceOptions {
            layer: None,
            normalization: NormalizationConfig::default(),
            retrieval: RetrievalConfig::cosine(),
            ks: vec![1],
        }
    }
}

#[derive(Clone, Debug)]
pub struct SentenceAlignment {
    pub layers: Vec<LayerOutput>,
    pub report: AlignmentReport,
}

fn rows_for(dump: &LayerDump, ids: &[String]) -> Result<Vec<usize>> {
    let index: HashMap<&str, usize> = dump
        .item_ids()
        .iter()
        .enumerate()
        .map(|(r, id)| (id.as_str(), r))
        .collect();
    ids.iter()
        .map(|id| {
            index
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::UnknownId(id.clone()))
        })
        .collect()
}

/// Fits a source-to-target map per layer on sentence-pooled dumps whose
/// rows are matched by id, and scores nearest-neighbour retrieval of the
/// evaluation sentences. When all layers are swept, the CKA profile over
/// the ids shared by both dumps is reported together with its correlation
/// with P@1.
pub fn align_sentences(
    src: &LayerDump,
    tgt: &LayerDump,
    train_ids: &[String],
    eval_ids: &[String],
    options: &SentenceOptions,
) -> Result<SentenceAlignment> {
    if src.layer_count() != tgt.layer_count() {
        return Err(Error::Shape(format!(
            "source dump has {} layers, target dump has {}",
            src.layer_count(),
            tgt.layer_count()
        )));
    }
    let train_set: HashSet<&str> = train_ids.iter().map(String::as_str).collect();
    let overlap = eval_ids
        .iter()
        .filter(|id| train_set.contains(id.as_str()))
        .collect::<HashSet<_>>()
        .len();
    if overlap > 0 {
        return Err(Error::OverlappingIds { count: overlap });
    }
    if train_ids.is_empty() {
        return Err(Error::NoAlignedPairs);
    }
    let layers = layer_selection(options.layer, src.layer_count())?;
    let train_src = rows_for(src, train_ids)?;
    let train_tgt = rows_for(tgt, train_ids)?;
    let eval_src = rows_for(src, eval_ids)?;
    let eval_tgt = rows_for(tgt, eval_ids)?;

    let mut report = AlignmentReport::new(Level::Sentence);
    let mut outputs = Vec::with_capacity(layers.len());
    for &layer in &layers {
        let src_norm = iterative_normalize(src.layer_f64(layer)?.view(), &options.normalization)?;
        let tgt_norm = iterative_normalize(tgt.layer_f64(layer)?.view(), &options.normalization)?;
        let x = src_norm.select(Axis(0), &train_src).reversed_axes();
        let y = tgt_norm.select(Axis(0), &train_tgt).reversed_axes();
        let fit = fit_orthogonal(x.view(), y.view())?;
        let map = fit
            .map
            .clone()
            .with_spaces(format!("source:L{layer}"), format!("target:L{layer}"));
        let mut row = LayerReport::from_fit(Some(layer), &fit, 0);
        let mut rankings = None;
        if !eval_ids.is_empty() {
            let queries = apply_map_rows(&map, src_norm.select(Axis(0), &eval_src).view())?;
            let candidates = tgt_norm.select(Axis(0), &eval_tgt);
            let mut config = options.retrieval;
            config.top_k = config.top_k.max(options.ks.iter().copied().max().unwrap_or(1));
            let lists = retrieve(queries.view(), None, candidates.view(), &config)?;
            let gold = identity_gold(eval_ids.iter().map(|id| (id.as_str(), id.as_str())))?;
            let precision = precision_at_k(&lists, &gold, eval_ids, eval_ids, &options.ks)?;
            row.eval = Some(EvalSummary {
                queries: precision.evaluated,
                skipped: precision.skipped,
                dropped_pairs: 0,
                precision_at: precision.precision_at,
            });
            rankings = Some(Rankings {
                queries: eval_ids.to_vec(),
                candidates: eval_ids.to_vec(),
                lists,
            });
        }
        report.layers.push(row);
        outputs.push(LayerOutput {
            layer,
            map,
            rankings,
            mapped: None,
        });
    }

    if options.layer.is_none() {
        let tgt_ids: HashSet<&String> = tgt.item_ids().iter().collect();
        let shared: Vec<String> = src
            .item_ids()
            .iter()
            .filter(|id| tgt_ids.contains(id))
            .cloned()
            .collect();
        let src_rows = rows_for(src, &shared)?;
        let tgt_rows = rows_for(tgt, &shared)?;
        let values = layers
            .iter()
            .map(|&l| {
                let a = src.layer_f64(l)?.select(Axis(0), &src_rows);
                let b = tgt.layer_f64(l)?.select(Axis(0), &tgt_rows);
                linear_cka(a.view(), b.view())
            })
            .collect::<Result<Vec<_>>>()?;
        let profile = CkaProfile::from_values(values);
        if !eval_ids.is_empty() {
            let k = options.ks.first().copied().unwrap_or(1);
            let precision: Vec<f64> = report
                .layers
                .iter()
                .map(|r| r.precision(k).unwrap_or(0.0))
                .collect();
            report.correlation = Some(Correlation::between(&precision, &profile.values));
        }
        report.cka = Some(profile);
    }
    Ok(SentenceAlignment {
        layers: outputs,
        report,
    })
}
