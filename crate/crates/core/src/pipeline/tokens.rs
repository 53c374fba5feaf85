//! Conversions between token-level dumps and word or sentence dumps.
//!
//! Token-level dumps name each row `<sentence>:<word>`, where `<word>` is
//! the 0-based index of the word the subword belongs to; all subwords of a
//! word share the id. Special tokens are named `<sentence>:*`.

use std::collections::HashMap;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::io::LayerDump;
use crate::preprocess::{pool_sentence, type_average, TypeAveraging};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TokenId {
    Word { sentence: String, word: usize },
    Special { sentence: String },
}

impl TokenId {
    pub fn sentence(&self) -> &str {
        match self {
            TokenId::Word { sentence, .. } | TokenId::Special { sentence } => sentence,
        }
    }
}

pub fn parse_token_id(id: &str) -> Result<TokenId> {
    let (sentence, word) = id
        .rsplit_once(':')
        .ok_or_else(|| Error::UnknownId(id.to_owned()))?;
    if sentence.is_empty() {
        return Err(Error::UnknownId(id.to_owned()));
    }
    let sentence = sentence.to_owned();
    if word == "*" {
        return Ok(TokenId::Special { sentence });
    }
    let word = word
        .parse()
        .map_err(|_| Error::UnknownId(id.to_owned()))?;
    Ok(TokenId::Word { sentence, word })
}

/// Row indices grouped by a key, groups in first-seen order.
struct Groups<K> {
    keys: Vec<K>,
    rows: Vec<Vec<usize>>,
}

impl<K: Clone + Eq + std::hash::Hash> Groups<K> {
    fn build(keys: impl IntoIterator<Item = (usize, K)>) -> Self {
        let mut position: HashMap<K, usize> = HashMap::new();
        let mut groups = Groups {
            keys: Vec::new(),
            rows: Vec::new(),
        };
        for (row, key) in keys {
            let slot = *position.entry(key.clone()).or_insert_with(|| {
                groups.keys.push(key);
                groups.rows.push(Vec::new());
                groups.rows.len() - 1
            });
            groups.rows[slot].push(row);
        }
        groups
    }
}

fn parsed_ids(dump: &LayerDump) -> Result<Vec<TokenId>> {
    dump.item_ids().iter().map(|id| parse_token_id(id)).collect()
}

/// Mean-pools every sentence over its non-special tokens. Output ids are the
/// sentence ids in first-seen order.
pub fn pool_sentences(dump: &LayerDump) -> Result<LayerDump> {
    let ids = parsed_ids(dump)?;
    let groups = Groups::build(
        ids.iter()
            .enumerate()
            .map(|(row, id)| (row, id.sentence().to_owned())),
    );
    let layers = dump
        .layers()
        .iter()
        .map(|layer| {
            let layer = layer.mapv(f64::from);
            let mut out = Array2::<f32>::zeros((groups.keys.len(), dump.dim()));
            for (g, rows) in groups.rows.iter().enumerate() {
                let block = layer.select(Axis(0), rows);
                let mask: Vec<bool> = rows
                    .iter()
                    .map(|&r| matches!(ids[r], TokenId::Special { .. }))
                    .collect();
                let pooled = pool_sentence(block.view(), &mask).map_err(|_| {
                    Error::DegenerateInput(format!(
                        "sentence {:?} has no non-special tokens",
                        groups.keys[g]
                    ))
                })?;
                out.row_mut(g).assign(&pooled.mapv(|v| v as f32));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    LayerDump::new(groups.keys, layers)
}

/// Averages the subwords of every word occurrence, dropping special
/// tokens. Output ids are `<sentence>:<word>`, unique.
pub fn group_words(dump: &LayerDump) -> Result<LayerDump> {
    let ids = parsed_ids(dump)?;
    let groups = Groups::build(ids.iter().enumerate().filter_map(|(row, id)| match id {
        TokenId::Word { sentence, word } => Some((row, (sentence.clone(), *word))),
        TokenId::Special { .. } => None,
    }));
    let layers = dump
        .layers()
        .iter()
        .map(|layer| {
            let layer = layer.mapv(f64::from);
            let mut out = Array2::<f32>::zeros((groups.keys.len(), dump.dim()));
            for (g, rows) in groups.rows.iter().enumerate() {
                let mean = layer.select(Axis(0), rows).mean_axis(Axis(0)).expect("non-empty");
                out.row_mut(g).assign(&mean.mapv(|v| v as f32));
            }
            out
        })
        .collect();
    let keys = groups
        .keys
        .into_iter()
        .map(|(s, w)| format!("{s}:{w}"))
        .collect();
    LayerDump::new(keys, layers)
}

/// Collapses every occurrence of each word type into one vector per layer.
/// Sentence ids must be indices into `corpus`, whose tokens give the word
/// strings. Output ids are word types in first-seen order.
pub fn type_average_dump(
    dump: &LayerDump,
    corpus: &[Vec<String>],
    mode: TypeAveraging,
) -> Result<LayerDump> {
    let ids = parsed_ids(dump)?;
    // occurrence (sentence, word) -> subword rows
    let occurrences = Groups::build(ids.iter().enumerate().filter_map(|(row, id)| match id {
        TokenId::Word { sentence, word } => Some((row, (sentence.clone(), *word))),
        TokenId::Special { .. } => None,
    }));
    let mut occurrence_types = Vec::with_capacity(occurrences.keys.len());
    for (sentence, word) in &occurrences.keys {
        let s: usize = sentence
            .parse()
            .map_err(|_| Error::UnknownId(format!("{sentence}:{word}")))?;
        let token = corpus
            .get(s)
            .and_then(|words| words.get(*word))
            .ok_or_else(|| Error::UnknownId(format!("{sentence}:{word}")))?;
        occurrence_types.push(token.clone());
    }
    let types = Groups::build(occurrence_types.into_iter().enumerate());
    let layers = dump
        .layers()
        .iter()
        .map(|layer| {
            let layer = layer.mapv(f64::from);
            let mut out = Array2::<f32>::zeros((types.keys.len(), dump.dim()));
            for (t, occ) in types.rows.iter().enumerate() {
                let blocks: Vec<Array2<f64>> = occ
                    .iter()
                    .map(|&o| layer.select(Axis(0), &occurrences.rows[o]))
                    .collect();
                let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
                out.row_mut(t)
                    .assign(&type_average(&views, mode)?.mapv(|v| v as f32));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    LayerDump::new(types.keys, layers)
}
