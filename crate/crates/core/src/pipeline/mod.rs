//! End-to-end alignment experiments at word, contextual-word and sentence
//! level, and the reports they produce.

mod contextual;
mod manifest;
mod sentences;
mod tokens;
mod words;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use contextual::{align_contextual, ContextualAlignment, ContextualOptions};
pub use manifest::{run_report, Manifest};
pub use sentences::{align_sentences, SentenceAlignment, SentenceOptions};
pub use tokens::{group_words, parse_token_id, pool_sentences, type_average_dump, TokenId};
pub use words::{align_words, table_from_dump, WordAlignment, WordOptions};

use crate::cka::CkaProfile;
use crate::error::{Error, Result};
use crate::io::{BilingualLexicon, LayerDump, LexiconEntry, OrthogonalMap};
use crate::procrustes::FitResult;
use crate::retrieval::{write_rankings, RankedList};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Word,
    ContextualWord,
    Sentence,
}

/// Retrieval metrics for one evaluation set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    /// Distinct queries scored.
    pub queries: usize,
    /// Gold sources without a query row.
    pub skipped: usize,
    /// Gold pairs removed because a token is missing from the embeddings.
    pub dropped_pairs: usize,
    pub precision_at: BTreeMap<usize, f64>,
}

/// One row of a report; `layer` is unset for plain word tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub layer: Option<usize>,
    pub pair_count: usize,
    pub dropped_pairs: usize,
    pub residual: f64,
    pub rank_deficient: bool,
    pub eval: Option<EvalSummary>,
}

impl LayerReport {
    fn from_fit(layer: Option<usize>, fit: &FitResult, dropped_pairs: usize) -> Self {
        LayerReport {
            layer,
            pair_count: fit.pair_count,
            dropped_pairs,
            residual: fit.residual,
            rank_deficient: fit.rank_deficient,
            eval: None,
        }
    }

    pub fn precision(&self, k: usize) -> Option<f64> {
        self.eval.as_ref()?.precision_at.get(&k).copied()
    }
}

/// Pearson correlation between per-layer retrieval accuracy and CKA. Left
/// undefined when either series is constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub pearson: Option<f64>,
    pub status: String,
}

impl Correlation {
    pub fn between(a: &[f64], b: &[f64]) -> Self {
        match crate::cka::pearson(a, b) {
            Ok(r) => Correlation {
                pearson: Some(r),
                status: "defined".into(),
            },
            Err(Error::ZeroVariance) => Correlation {
                pearson: None,
                status: "undefined: zero variance".into(),
            },
            Err(e) => Correlation {
                pearson: None,
                status: format!("undefined: {e}"),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub level: Level,
    pub seed: u64,
    pub layers: Vec<LayerReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cka: Option<CkaProfile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation: Option<Correlation>,
    /// Sentence pairs skipped because their alignment line was empty.
    #[serde(default)]
    pub unaligned_sentences: usize,
    pub warnings: Vec<String>,
}

impl AlignmentReport {
    pub fn new(level: Level) -> Self {
        AlignmentReport {
            level,
            seed: 0,
            layers: Vec::new(),
            cka: None,
            correlation: None,
            unaligned_sentences: 0,
            warnings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    /// One row per layer: `layer pairs dropped residual P@k.. [cka]`.
    pub fn write_tsv<W: Write>(&self, writer: &mut W) -> std::io::Result<()> {
        let ks: Vec<usize> = self
            .layers
            .iter()
            .filter_map(|l| l.eval.as_ref())
            .flat_map(|e| e.precision_at.keys().copied())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        write!(writer, "layer\tpairs\tdropped\tresidual")?;
        for k in &ks {
            write!(writer, "\tP@{k}")?;
        }
        if self.cka.is_some() {
            write!(writer, "\tcka")?;
        }
        writeln!(writer)?;
        for (row, layer) in self.layers.iter().enumerate() {
            let label = layer.layer.map_or_else(|| "-".to_string(), |l| format!("L{l}"));
            write!(
                writer,
                "{label}\t{}\t{}\t{}",
                layer.pair_count, layer.dropped_pairs, layer.residual
            )?;
            for k in &ks {
                match layer.precision(*k) {
                    Some(p) => write!(writer, "\t{p}")?,
                    None => write!(writer, "\t-")?,
                }
            }
            if let Some(cka) = &self.cka {
                match cka.values.get(row) {
                    Some(v) => write!(writer, "\t{v}")?,
                    None => write!(writer, "\t-")?,
                }
            }
            writeln!(writer)?;
        }
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json_path = dir.join("report.json");
        std::fs::write(&json_path, self.to_json()).map_err(|e| Error::io(&json_path, e))?;
        let tsv_path = dir.join("report.tsv");
        let mut tsv = Vec::new();
        self.write_tsv(&mut tsv).expect("writing to memory");
        std::fs::write(&tsv_path, tsv).map_err(|e| Error::io(&tsv_path, e))
    }
}

/// Ranked candidates for each query, with the strings needed to print them.
#[derive(Clone, Debug, PartialEq)]
pub struct Rankings {
    pub queries: Vec<String>,
    pub candidates: Vec<String>,
    pub lists: Vec<RankedList>,
}

impl Rankings {
    pub fn write_tsv<W: Write>(&self, writer: &mut W) -> std::io::Result<()> {
        write_rankings(writer, &self.lists, &self.queries, &self.candidates)
    }
}

/// Everything produced for one layer besides its report row.
#[derive(Clone, Debug)]
pub struct LayerOutput {
    pub layer: usize,
    pub map: OrthogonalMap,
    pub rankings: Option<Rankings>,
    /// Target rows mapped into the source space, when requested.
    pub mapped: Option<LayerDump>,
}

/// Layers to process: the requested one, or all of them.
fn layer_selection(layer: Option<usize>, layer_count: usize) -> Result<Vec<usize>> {
    match layer {
        Some(l) if l >= layer_count => Err(Error::LayerOutOfRange {
            layer: l,
            layer_count,
        }),
        Some(l) => Ok(vec![l]),
        None => Ok((0..layer_count).collect()),
    }
}

fn default_ks() -> Vec<usize> {
    vec![1, 5, 10]
}

/// A lexicon pairing each id with itself, used as gold for retrieval
/// between parallel items.
fn identity_gold<'a>(ids: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<BilingualLexicon> {
    let mut entries: Vec<LexiconEntry> = ids
        .into_iter()
        .map(|(s, t)| LexiconEntry {
            source: s.to_owned(),
            target: t.to_owned(),
            weight: 1.0,
        })
        .collect();
    let mut seen = std::collections::HashSet::new();
    entries.retain(|e| seen.insert((e.source.clone(), e.target.clone())));
    BilingualLexicon::from_entries(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlation_reports_undefined() {
        let c = Correlation::between(&[1.0, 1.0, 1.0], &[0.2, 0.5, 0.9]);
        assert_eq!(c.pearson, None);
        assert!(c.status.starts_with("undefined"));
        let c = Correlation::between(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.5]);
        assert!(c.pearson.unwrap() > 0.99);
    }

    #[test]
    fn tsv_layout() {
        let mut report = AlignmentReport::new(Level::Sentence);
        let mut precision_at = BTreeMap::new();
        precision_at.insert(1, 0.5);
        report.layers.push(LayerReport {
            layer: Some(0),
            pair_count: 4,
            dropped_pairs: 0,
            residual: 0.25,
            rank_deficient: false,
            eval: Some(EvalSummary {
                queries: 2,
                precision_at,
                ..Default::default()
            }),
        });
        report.cka = Some(CkaProfile::from_values(vec![0.75]));
        let mut out = Vec::new();
        report.write_tsv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "layer\tpairs\tdropped\tresidual\tP@1\tcka\nL0\t4\t0\t0.25\t0.5\t0.75\n"
        );
    }
}
