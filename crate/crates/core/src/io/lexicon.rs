use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use super::{create_buffered, open_buffered, LoadOptions};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LexiconEntry {
    pub source: String,
    pub target: String,
    pub weight: f64,
}

/// Weighted source to target translations, in file order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BilingualLexicon {
    entries: Vec<LexiconEntry>,
    by_source: HashMap<String, Vec<usize>>,
    sources: Vec<String>,
}

impl BilingualLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = LexiconEntry>) -> Result<Self> {
        let mut lexicon = Self::new();
        for (i, entry) in entries.into_iter().enumerate() {
            lexicon.push(entry, i + 1)?;
        }
        Ok(lexicon)
    }

    fn push(&mut self, entry: LexiconEntry, line: usize) -> Result<()> {
        if !entry.weight.is_finite() {
            return Err(Error::NonFinite {
                line,
                value: entry.weight.to_string(),
            });
        }
        if entry.weight < 0.0 {
            return Err(Error::NegativeWeight {
                line,
                weight: entry.weight,
            });
        }
        if !self.by_source.contains_key(&entry.source) {
            self.sources.push(entry.source.clone());
        }
        let slots = self.by_source.entry(entry.source.clone()).or_default();
        if slots
            .iter()
            .any(|&i| self.entries[i].target == entry.target)
        {
            return Err(Error::DuplicateEntry {
                line,
                source_token: entry.source,
                target_token: entry.target,
            });
        }
        slots.push(self.entries.len());
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct source tokens in first-seen order.
    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn contains_source(&self, source: &str) -> bool {
        self.by_source.contains_key(source)
    }

    pub fn translations(&self, source: &str) -> impl Iterator<Item = &LexiconEntry> {
        self.by_source
            .get(source)
            .into_iter()
            .flatten()
            .map(|&i| &self.entries[i])
    }

    pub fn targets_of(&self, source: &str) -> HashSet<&str> {
        self.translations(source).map(|e| e.target.as_str()).collect()
    }

    pub fn contains_pair(&self, source: &str, target: &str) -> bool {
        self.translations(source).any(|e| e.target == target)
    }

    pub fn load(path: impl AsRef<Path>, options: LoadOptions) -> Result<Self> {
        let path = path.as_ref();
        Self::read(open_buffered(path)?, options).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }

    /// Parses `src<TAB>tgt[<TAB>weight]` lines. Lines without any tab are
    /// split on whitespace, which covers space-separated MUSE dictionaries.
    pub fn read<R: BufRead>(reader: R, options: LoadOptions) -> Result<Self> {
        let mut lexicon = Self::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::io("<lexicon>", e))?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = if line.contains('\t') {
                line.split('\t').collect()
            } else {
                line.split_whitespace().collect()
            };
            if !(2..=3).contains(&fields.len()) {
                return Err(Error::BadArity {
                    line: line_no,
                    expected: "2 or 3".into(),
                    found: fields.len(),
                });
            }
            let weight = match fields.get(2) {
                Some(raw) => raw.parse::<f64>().map_err(|_| Error::BadValue {
                    line: line_no,
                    value: (*raw).to_owned(),
                })?,
                None => 1.0,
            };
            let (source, target) = if options.lowercase {
                (fields[0].to_lowercase(), fields[1].to_lowercase())
            } else {
                (fields[0].to_owned(), fields[1].to_owned())
            };
            let entry = LexiconEntry {
                source,
                target,
                weight,
            };
            match lexicon.push(entry, line_no) {
                Err(Error::DuplicateEntry { .. }) if options.lowercase => continue,
                other => other?,
            }
        }
        Ok(lexicon)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut writer = create_buffered(path)?;
        self.write(&mut writer)
            .and_then(|_| writer.flush())
            .map_err(|e| Error::io(path, e))
    }

    /// Canonical form: the weight column is omitted when it equals 1.
    pub fn write<W: Write>(&self, writer: &mut W) -> std::io::Result<()> {
        for entry in &self.entries {
            if entry.weight == 1.0 {
                writeln!(writer, "{}\t{}", entry.source, entry.target)?;
            } else {
                writeln!(writer, "{}\t{}\t{}", entry.source, entry.target, entry.weight)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<BilingualLexicon> {
        BilingualLexicon::read(text.as_bytes(), LoadOptions::default())
    }

    #[test]
    fn default_weight_is_one() {
        let lex = read("chat\tcat\n").unwrap();
        assert_eq!(lex.len(), 1);
        assert_eq!(lex.entries()[0].weight, 1.0);
    }

    #[test]
    fn source_with_two_targets() {
        let lex = read("chat\tcat\t0.9\nchat\tkitty\t0.1").unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.sources(), ["chat"]);
        let weights: Vec<f64> = lex.translations("chat").map(|e| e.weight).collect();
        assert_eq!(weights, vec![0.9, 0.1]);
    }

    #[test]
    fn errors() {
        assert!(matches!(read("chat\n"), Err(Error::BadArity { line: 1, .. })));
        assert!(matches!(
            read("a\tb\t1\t2\n"),
            Err(Error::BadArity { found: 4, .. })
        ));
        assert!(matches!(read("a\tb\tx\n"), Err(Error::BadValue { .. })));
        assert!(matches!(
            read("a\tb\t-0.5\n"),
            Err(Error::NegativeWeight { .. })
        ));
        assert!(matches!(read("a\tb\tNaN\n"), Err(Error::NonFinite { .. })));
        assert!(matches!(
            read("a\tb\na\tb\t0.5\n"),
            Err(Error::DuplicateEntry { line: 2, .. })
        ));
    }

    #[test]
    fn space_separated_muse_lines() {
        let lex = read("the le\nthe la\n").unwrap();
        assert!(lex.contains_pair("the", "la"));
    }

    #[test]
    fn lowercase_merges_duplicates() {
        let lex = BilingualLexicon::read(
            "The\tLe\nthe\tle\n".as_bytes(),
            LoadOptions { lowercase: true },
        )
        .unwrap();
        assert_eq!(lex.len(), 1);
        assert!(lex.contains_pair("the", "le"));
    }

    #[test]
    fn canonical_write() {
        let text = "chat\tcat\t0.9\nchat\tkitty\nhund\tdog\t0\n";
        let lex = read(text).unwrap();
        let mut out = Vec::new();
        lex.write(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }
}
