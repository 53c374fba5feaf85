//! Anchor points: identical strings shared by two languages.
//!
//! Language prefixing removes them, vocabulary union counts them and
//! dictionary-driven code-switching manufactures more of them.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{BilingualLexicon, TokenizedCorpus};

/// Ordered set of unique, non-empty tokens.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    members: HashSet<String>,
    pub language_tag: Option<String>,
}

impl Vocabulary {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        let mut members = HashSet::with_capacity(tokens.len());
        for (i, token) in tokens.iter().enumerate() {
            if token.is_empty() {
                return Err(Error::InvalidConfig(format!("empty token at position {i}")));
            }
            if !members.insert(token.clone()) {
                return Err(Error::DuplicateToken {
                    line: i + 1,
                    token: token.clone(),
                });
            }
        }
        Ok(Vocabulary {
            tokens,
            members,
            language_tag: None,
        })
    }

    /// Distinct token types of a corpus in first-seen order.
    pub fn from_corpus(corpus: &[Vec<String>]) -> Self {
        let mut vocab = Vocabulary::default();
        for token in corpus.iter().flatten() {
            vocab.insert(token);
        }
        vocab
    }

    fn insert(&mut self, token: &str) -> bool {
        if self.members.contains(token) {
            return false;
        }
        self.members.insert(token.to_owned());
        self.tokens.push(token.to_owned());
        true
    }

    /// One token per line; only the first whitespace-separated field is
    /// used, so `token count` vocabulary files load directly.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut tokens = Vec::new();
        for line in reader.lines() {
            let line = line.map_err(|e| Error::io("<vocabulary>", e))?;
            if let Some(token) = line.split_whitespace().next() {
                tokens.push(token.to_owned());
            }
        }
        Self::new(tokens)
    }

    pub fn write<W: Write>(&self, writer: &mut W) -> std::io::Result<()> {
        for token in &self.tokens {
            writeln!(writer, "{token}")?;
        }
        Ok(())
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.members.contains(token)
    }

    /// Number of tokens present in both vocabularies.
    pub fn overlap(&self, other: &Vocabulary) -> usize {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.tokens.iter().filter(|t| large.contains(t)).count()
    }
}

fn check_tag(tag: &str) -> Result<()> {
    if tag.is_empty() || tag.contains(':') || tag.chars().any(char::is_whitespace) {
        return Err(Error::MalformedTag(tag.to_owned()));
    }
    Ok(())
}

/// Rewrites every token `t` as `tag:t`.
pub fn prefix_vocab(vocab: &Vocabulary, tag: &str) -> Result<Vocabulary> {
    check_tag(tag)?;
    let marker = format!("{tag}:");
    if !vocab.is_empty() && vocab.tokens.iter().all(|t| t.starts_with(&marker)) {
        return Err(Error::AlreadyPrefixed(tag.to_owned()));
    }
    let mut out = Vocabulary::new(vocab.tokens.iter().map(|t| format!("{marker}{t}")).collect())?;
    out.language_tag = Some(tag.to_owned());
    Ok(out)
}

/// Applies the same prefix to every token of a corpus.
pub fn prefix_corpus(corpus: &[Vec<String>], tag: &str) -> Result<TokenizedCorpus> {
    check_tag(tag)?;
    Ok(corpus
        .iter()
        .map(|s| s.iter().map(|t| format!("{tag}:{t}")).collect())
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapStats {
    pub left: usize,
    pub right: usize,
    /// Anchor-point count, `|left ∩ right|`.
    pub shared: usize,
    pub union: usize,
    pub jaccard: f64,
}

/// Union in first-seen order (all of `a`, then the new tokens of `b`).
pub fn vocab_union(a: &Vocabulary, b: &Vocabulary) -> (Vocabulary, OverlapStats) {
    let mut union = a.clone();
    union.language_tag = None;
    let mut shared = 0;
    for token in &b.tokens {
        if !union.insert(token) {
            shared += 1;
        }
    }
    let stats = OverlapStats {
        left: a.len(),
        right: b.len(),
        shared,
        union: union.len(),
        jaccard: if union.is_empty() {
            0.0
        } else {
            shared as f64 / union.len() as f64
        },
    };
    (union, stats)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorStats {
    pub vocab_a: usize,
    pub vocab_b: usize,
    pub shared_types: usize,
    pub tokens_a: usize,
    pub tokens_b: usize,
    /// Running tokens of each corpus whose type is shared.
    pub shared_tokens_a: usize,
    pub shared_tokens_b: usize,
    pub shared_mass_a: f64,
    pub shared_mass_b: f64,
}

/// Shared types between two vocabularies (derived from the corpora when
/// absent) and the token mass they cover in each corpus.
pub fn anchor_stats(
    corpus_a: &[Vec<String>],
    corpus_b: &[Vec<String>],
    vocab_a: Option<&Vocabulary>,
    vocab_b: Option<&Vocabulary>,
) -> AnchorStats {
    let derived_a;
    let vocab_a = match vocab_a {
        Some(v) => v,
        None => {
            derived_a = Vocabulary::from_corpus(corpus_a);
            &derived_a
        }
    };
    let derived_b;
    let vocab_b = match vocab_b {
        Some(v) => v,
        None => {
            derived_b = Vocabulary::from_corpus(corpus_b);
            &derived_b
        }
    };
    let shared: HashSet<&str> = vocab_a
        .tokens
        .iter()
        .filter(|t| vocab_b.contains(t))
        .map(String::as_str)
        .collect();
    let mass = |corpus: &[Vec<String>]| {
        let total = corpus.iter().map(Vec::len).sum::<usize>();
        let hits = corpus
            .iter()
            .flatten()
            .filter(|t| shared.contains(t.as_str()))
            .count();
        let fraction = if total == 0 {
            0.0
        } else {
            hits as f64 / total as f64
        };
        (total, hits, fraction)
    };
    let (tokens_a, shared_tokens_a, shared_mass_a) = mass(corpus_a);
    let (tokens_b, shared_tokens_b, shared_mass_b) = mass(corpus_b);
    AnchorStats {
        vocab_a: vocab_a.len(),
        vocab_b: vocab_b.len(),
        shared_types: shared.len(),
        tokens_a,
        tokens_b,
        shared_tokens_a,
        shared_tokens_b,
        shared_mass_a,
        shared_mass_b,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// Translations drawn proportionally to their lexicon weight.
    #[default]
    Quality,
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodeSwitchConfig {
    pub replace_probability: f64,
    /// Upper bound on replaced tokens per batch, as a fraction of the batch.
    pub max_changed_fraction: f64,
    /// Batch length in tokens over the concatenated stream.
    pub batch_tokens: usize,
    pub seed: u64,
    pub weight_mode: WeightMode,
}

impl Default for CodeSwitchConfig {
    fn default() -> Self {
        CodeSwitchConfig {
            replace_probability: 0.3,
            max_changed_fraction: 0.15,
            batch_tokens: 256 * 96,
            seed: 0,
            weight_mode: WeightMode::Quality,
        }
    }
}

impl CodeSwitchConfig {
    fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.replace_probability) || !unit.contains(&self.max_changed_fraction) {
            return Err(Error::InvalidConfig(
                "replace_probability and max_changed_fraction must lie in [0, 1]".into(),
            ));
        }
        if self.batch_tokens == 0 {
            return Err(Error::InvalidConfig("batch_tokens must be positive".into()));
        }
        Ok(())
    }

    /// Replacement budget for a batch of `len` tokens.
    pub fn cap_for(&self, len: usize) -> usize {
        // The epsilon absorbs decimal-to-binary error, e.g. 0.15 * 100.
        ((self.max_changed_fraction * len as f64 + 1e-9).floor() as usize).min(len)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchStats {
    pub tokens: usize,
    pub replaced: usize,
}

impl BatchStats {
    pub fn fraction(&self) -> f64 {
        if self.tokens == 0 {
            0.0
        } else {
            self.replaced as f64 / self.tokens as f64
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CodeSwitchReport {
    pub tokens_seen: usize,
    pub tokens_in_lexicon: usize,
    pub tokens_replaced: usize,
    pub batches: Vec<BatchStats>,
}

impl CodeSwitchReport {
    pub fn batch_fractions(&self) -> Vec<f64> {
        self.batches.iter().map(BatchStats::fraction).collect()
    }

    /// Counts of per-batch replaced fractions in `bins` equal-width bins
    /// over `[0, 1]`.
    pub fn fraction_histogram(&self, bins: usize) -> Vec<usize> {
        let mut counts = vec![0; bins.max(1)];
        let last = counts.len() - 1;
        for fraction in self.batch_fractions() {
            let bin = ((fraction * counts.len() as f64) as usize).min(last);
            counts[bin] += 1;
        }
        counts
    }
}

struct Translations<'a> {
    targets: Vec<&'a str>,
    cumulative: Vec<f64>,
}

impl<'a> Translations<'a> {
    fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    fn pick(&self, u: f64, mode: WeightMode) -> Option<&'a str> {
        match mode {
            WeightMode::Uniform => {
                let i = ((u * self.targets.len() as f64) as usize).min(self.targets.len() - 1);
                Some(self.targets[i])
            }
            WeightMode::Quality => {
                let total = self.total();
                if !(total > 0.0) {
                    return None;
                }
                let x = u * total;
                let i = self.cumulative.partition_point(|&c| c <= x);
                let i = if i < self.targets.len() {
                    i
                } else {
                    // Rounding pushed x onto the total: take the last
                    // translation with positive weight.
                    self.cumulative
                        .windows(2)
                        .rposition(|w| w[1] > w[0])
                        .map_or(0, |p| p + 1)
                };
                Some(self.targets[i])
            }
        }
    }
}

fn translation_table(lexicon: &BilingualLexicon) -> Result<HashMap<&str, Translations<'_>>> {
    let mut table: HashMap<&str, Translations> = HashMap::new();
    for entry in lexicon.entries() {
        if entry.target.is_empty() || entry.target.chars().any(char::is_whitespace) {
            return Err(Error::MultiTokenTranslation {
                source_token: entry.source.clone(),
                target: entry.target.clone(),
            });
        }
        let slot = table.entry(entry.source.as_str()).or_insert(Translations {
            targets: Vec::new(),
            cumulative: Vec::new(),
        });
        let running = slot.total() + entry.weight;
        slot.targets.push(entry.target.as_str());
        slot.cumulative.push(running);
    }
    Ok(table)
}

/// Stats, batch index and (sentence, position, replacement) edits.
type BatchOutcome<'a> = (BatchStats, usize, Vec<(usize, usize, &'a str)>);

/// Replaces lexicon words by sampled translations.
///
/// The token stream (all sentences concatenated) is cut into consecutive
/// batches of `batch_tokens`. Each lexicon word is replaced with
/// probability `replace_probability`, scanning in order, until the batch
/// has used its budget of `floor(max_changed_fraction * batch_len)`
/// replacements. Random draws are keyed on `(seed, global token index)` so
/// results do not depend on how batches are scheduled.
pub fn code_switch(
    corpus: &[Vec<String>],
    lexicon: &BilingualLexicon,
    config: &CodeSwitchConfig,
) -> Result<(TokenizedCorpus, CodeSwitchReport)> {
    config.validate()?;
    let table = translation_table(lexicon)?;

    let mut offsets = Vec::with_capacity(corpus.len() + 1);
    offsets.push(0usize);
    for sentence in corpus {
        offsets.push(offsets.last().unwrap() + sentence.len());
    }
    let total = *offsets.last().unwrap();
    let batch_count = total.div_ceil(config.batch_tokens);
    let base_rng = ChaCha8Rng::seed_from_u64(config.seed);

    let batches: Vec<BatchOutcome> = (0..batch_count)
        .into_par_iter()
        .map(|b| {
            let start = b * config.batch_tokens;
            let end = (start + config.batch_tokens).min(total);
            let cap = config.cap_for(end - start);
            let mut replaced = Vec::new();
            let mut in_lexicon = 0usize;
            // Sentence holding global index `start`.
            let mut s = offsets.partition_point(|&o| o <= start) - 1;
            for g in start..end {
                while offsets[s + 1] <= g {
                    s += 1;
                }
                let t = g - offsets[s];
                let Some(translations) = table.get(corpus[s][t].as_str()) else {
                    continue;
                };
                in_lexicon += 1;
                let mut rng = base_rng.clone();
                rng.set_stream(g as u64);
                let decide: f64 = rng.random();
                let choose: f64 = rng.random();
                if decide >= config.replace_probability || replaced.len() >= cap {
                    continue;
                }
                let target = translations
                    .pick(choose, config.weight_mode)
                    .ok_or_else(|| Error::ZeroWeightSource(corpus[s][t].clone()))?;
                replaced.push((s, t, target));
            }
            let stats = BatchStats {
                tokens: end - start,
                replaced: replaced.len(),
            };
            Ok((stats, in_lexicon, replaced))
        })
        .collect::<Result<_>>()?;

    let mut output = corpus.to_vec();
    let mut report = CodeSwitchReport {
        tokens_seen: total,
        ..Default::default()
    };
    for (stats, in_lexicon, replaced) in batches {
        report.tokens_in_lexicon += in_lexicon;
        report.tokens_replaced += stats.replaced;
        report.batches.push(stats);
        for (s, t, target) in replaced {
            output[s][t] = target.to_owned();
        }
    }
    Ok((output, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::LexiconEntry;

    fn vocab(tokens: &[&str]) -> Vocabulary {
        Vocabulary::new(tokens.iter().map(|t| t.to_string()).collect()).unwrap()
    }

    fn lexicon(entries: &[(&str, &str, f64)]) -> BilingualLexicon {
        BilingualLexicon::from_entries(entries.iter().map(|(s, t, w)| LexiconEntry {
            source: s.to_string(),
            target: t.to_string(),
            weight: *w,
        }))
        .unwrap()
    }

    fn sentences(text: &str) -> TokenizedCorpus {
        text.lines()
            .map(|l| l.split_whitespace().map(str::to_owned).collect())
            .collect()
    }

    #[test]
    fn prefixing() {
        let v = vocab(&["the", "cat"]);
        let en = prefix_vocab(&v, "en").unwrap();
        assert_eq!(en.tokens(), ["en:the", "en:cat"]);
        assert_eq!(en.language_tag.as_deref(), Some("en"));
        let fr = prefix_vocab(&v, "fr").unwrap();
        assert_eq!(en.overlap(&fr), 0);
        assert!(matches!(prefix_vocab(&v, ""), Err(Error::MalformedTag(_))));
        assert!(matches!(prefix_vocab(&v, "e:n"), Err(Error::MalformedTag(_))));
    }

    #[test]
    fn double_prefix_is_refused() {
        let en = prefix_vocab(&vocab(&["the", "cat"]), "en").unwrap();
        assert!(matches!(
            prefix_vocab(&en, "en"),
            Err(Error::AlreadyPrefixed(_))
        ));
        // A partially prefixed vocabulary is legitimate input.
        let mixed = vocab(&["en:the", "cat"]);
        assert_eq!(prefix_vocab(&mixed, "en").unwrap().tokens()[0], "en:en:the");
    }

    #[test]
    fn union_and_overlap() {
        let (u, stats) = vocab_union(&vocab(&["a", "b"]), &vocab(&["b", "c"]));
        assert_eq!(u.tokens(), ["a", "b", "c"]);
        assert_eq!(stats.shared, 1);
        assert!((stats.jaccard - 1.0 / 3.0).abs() < 1e-15);
        let (_, stats) = vocab_union(&vocab(&["a"]), &vocab(&["z"]));
        assert_eq!(stats.shared, 0);
    }

    #[test]
    fn vocabulary_file_takes_first_field() {
        let v = Vocabulary::read("the 120\ncat 7\n\n".as_bytes()).unwrap();
        assert_eq!(v.tokens(), ["the", "cat"]);
        assert!(Vocabulary::read("a 1\na 2\n".as_bytes()).is_err());
    }

    #[test]
    fn anchor_mass() {
        let a = sentences("the cat sat\nthe dog");
        let stats = anchor_stats(&a, &a, None, None);
        assert_eq!(stats.shared_mass_a, 1.0);
        assert_eq!(stats.shared_mass_b, 1.0);
        let b = sentences("le chat");
        let stats = anchor_stats(&a, &b, None, None);
        assert_eq!(stats.shared_types, 0);
        assert_eq!(stats.shared_mass_a, 0.0);
    }

    #[test]
    fn anchor_planted_counts() {
        // Shared types: "paris", "dna". Corpus A uses them 3 of 8 tokens,
        // corpus B 2 of 5.
        let a = sentences("paris is big\ndna in paris\nthe end");
        let b = sentences("paris est grand\nadn dna");
        let stats = anchor_stats(&a, &b, None, None);
        assert_eq!(stats.shared_types, 2);
        assert_eq!((stats.tokens_a, stats.shared_tokens_a), (8, 3));
        assert_eq!((stats.tokens_b, stats.shared_tokens_b), (5, 2));
        assert!((stats.shared_mass_a - 3.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn empty_lexicon_and_zero_probability_change_nothing() {
        let corpus = sentences("le chat noir\nun chien");
        let (out, report) = code_switch(&corpus, &BilingualLexicon::new(), &Default::default()).unwrap();
        assert_eq!(out, corpus);
        assert_eq!(report.tokens_replaced, 0);
        let config = CodeSwitchConfig {
            replace_probability: 0.0,
            max_changed_fraction: 1.0,
            ..Default::default()
        };
        let lex = lexicon(&[("chat", "cat", 1.0)]);
        let (out, report) = code_switch(&corpus, &lex, &config).unwrap();
        assert_eq!(out, corpus);
        assert_eq!(report.tokens_in_lexicon, 1);
    }

    #[test]
    fn cap_stops_after_first_hits() {
        let corpus = vec![vec!["chat".to_string(); 100]];
        let config = CodeSwitchConfig {
            replace_probability: 1.0,
            max_changed_fraction: 0.15,
            batch_tokens: 100,
            ..Default::default()
        };
        let (out, report) = code_switch(&corpus, &lexicon(&[("chat", "cat", 1.0)]), &config).unwrap();
        assert_eq!(report.tokens_replaced, 15);
        assert!(out[0][..15].iter().all(|t| t == "cat"));
        assert!(out[0][15..].iter().all(|t| t == "chat"));
    }

    #[test]
    fn partial_final_batch_gets_proportional_cap() {
        let corpus = vec![vec!["chat".to_string(); 150]];
        let config = CodeSwitchConfig {
            replace_probability: 1.0,
            max_changed_fraction: 0.15,
            batch_tokens: 100,
            ..Default::default()
        };
        let (_, report) = code_switch(&corpus, &lexicon(&[("chat", "cat", 1.0)]), &config).unwrap();
        assert_eq!(
            report.batches,
            vec![
                BatchStats { tokens: 100, replaced: 15 },
                BatchStats { tokens: 50, replaced: 7 }
            ]
        );
    }

    #[test]
    fn batches_cross_sentence_boundaries() {
        let corpus = sentences("chat chat chat\nchat\n\nchat chat");
        let config = CodeSwitchConfig {
            replace_probability: 1.0,
            max_changed_fraction: 0.5,
            batch_tokens: 4,
            ..Default::default()
        };
        let (out, report) = code_switch(&corpus, &lexicon(&[("chat", "cat", 1.0)]), &config).unwrap();
        assert_eq!(report.tokens_seen, 6);
        assert_eq!(report.batches.len(), 2);
        assert_eq!(out, sentences("cat cat chat\nchat\n\ncat chat"));
    }

    #[test]
    fn zero_weight_source_is_an_error_when_selected() {
        let corpus = sentences("chat");
        let config = CodeSwitchConfig {
            replace_probability: 1.0,
            max_changed_fraction: 1.0,
            ..Default::default()
        };
        let lex = lexicon(&[("chat", "cat", 0.0)]);
        assert!(matches!(
            code_switch(&corpus, &lex, &config),
            Err(Error::ZeroWeightSource(_))
        ));
        let uniform = CodeSwitchConfig {
            weight_mode: WeightMode::Uniform,
            ..config
        };
        let (out, _) = code_switch(&corpus, &lex, &uniform).unwrap();
        assert_eq!(out, sentences("cat"));
    }

    #[test]
    fn multi_token_translation_is_rejected() {
        let lex = lexicon(&[("chat", "house cat", 1.0)]);
        assert!(matches!(
            code_switch(&sentences("chat"), &lex, &Default::default()),
            Err(Error::MultiTokenTranslation { .. })
        ));
    }

    #[test]
    fn invalid_config() {
        let bad = CodeSwitchConfig {
            replace_probability: 1.5,
            ..Default::default()
        };
        assert!(code_switch(&[], &BilingualLexicon::new(), &bad).is_err());
    }

    #[test]
    fn zero_weight_translation_is_never_drawn() {
        let t = Translations {
            targets: vec!["a", "b", "c"],
            cumulative: vec![1.0, 1.0, 2.0],
        };
        assert_eq!(t.pick(0.0, WeightMode::Quality), Some("a"));
        assert_eq!(t.pick(0.4999, WeightMode::Quality), Some("a"));
        assert_eq!(t.pick(0.5, WeightMode::Quality), Some("c"));
        assert_eq!(t.pick(0.9999999, WeightMode::Quality), Some("c"));
    }

    #[test]
    fn histogram() {
        let report = CodeSwitchReport {
            batches: vec![
                BatchStats { tokens: 10, replaced: 0 },
                BatchStats { tokens: 10, replaced: 1 },
                BatchStats { tokens: 10, replaced: 10 },
            ],
            ..Default::default()
        };
        assert_eq!(report.fraction_histogram(10), vec![1, 1, 0, 0, 0, 0, 0, 0, 0, 1]);
    }
}
