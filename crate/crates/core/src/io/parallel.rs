use std::io::{BufRead, Write};
use std::path::Path;

use super::{create_buffered, open_buffered, read_corpus};
use crate::error::{Error, Result};

/// Aligned token index pair `(source, target)`, both 0-based.
pub type Alignment = (usize, usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentencePair {
    pub source: Vec<String>,
    pub target: Vec<String>,
}

/// Sentence pairs with optional word alignments.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParallelCorpus {
    pub pairs: Vec<SentencePair>,
    alignments: Option<Vec<Vec<Alignment>>>,
}

const SEPARATOR: &str = " ||| ";

impl ParallelCorpus {
    pub fn new(pairs: Vec<SentencePair>) -> Self {
        ParallelCorpus {
            pairs,
            alignments: None,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn alignments(&self) -> Option<&[Vec<Alignment>]> {
        self.alignments.as_deref()
    }

    /// Reads the fast_align input format: `source tokens ||| target tokens`.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<parallel corpus>", e))?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            let (source, target) = split_pair(line).ok_or_else(|| Error::MalformedParallel {
                line: i + 1,
                reason: "missing \" ||| \" separator".into(),
            })?;
            pairs.push(SentencePair {
                source: source.split_whitespace().map(str::to_owned).collect(),
                target: target.split_whitespace().map(str::to_owned).collect(),
            });
        }
        Ok(Self::new(pairs))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::read(open_buffered(path)?)
    }

    /// Pairs up two line-aligned monolingual files.
    pub fn load_pair(source: impl AsRef<Path>, target: impl AsRef<Path>) -> Result<Self> {
        let src = read_corpus(open_buffered(source.as_ref())?)?;
        let tgt = read_corpus(open_buffered(target.as_ref())?)?;
        if src.len() != tgt.len() {
            return Err(Error::MalformedParallel {
                line: src.len().min(tgt.len()) + 1,
                reason: format!("{} source vs {} target lines", src.len(), tgt.len()),
            });
        }
        Ok(Self::new(
            src.into_iter()
                .zip(tgt)
                .map(|(source, target)| SentencePair { source, target })
                .collect(),
        ))
    }

    pub fn write<W: Write>(&self, writer: &mut W) -> std::io::Result<()> {
        for pair in &self.pairs {
            writeln!(writer, "{}{SEPARATOR}{}", pair.source.join(" "), pair.target.join(" "))?;
        }
        Ok(())
    }

    /// Attaches alignments after range-checking every index.
    pub fn with_alignments(mut self, alignments: Vec<Vec<Alignment>>) -> Result<Self> {
        if alignments.len() != self.pairs.len() {
            return Err(Error::AlignmentCount {
                expected: self.pairs.len(),
                found: alignments.len(),
            });
        }
        for (i, (pair, links)) in self.pairs.iter().zip(&alignments).enumerate() {
            check_range(i + 1, pair, links)?;
        }
        self.alignments = Some(alignments);
        Ok(self)
    }

    /// Parses Pharaoh `i-j` lines, one line per sentence pair. An empty line
    /// leaves that pair unaligned.
    pub fn with_alignments_from<R: BufRead>(self, reader: R) -> Result<Self> {
        let mut alignments = Vec::with_capacity(self.pairs.len());
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<alignments>", e))?;
            let links = parse_pharaoh_line(&line, i + 1)?;
            if let Some(pair) = self.pairs.get(i) {
                check_range(i + 1, pair, &links)?;
            }
            alignments.push(links);
        }
        self.with_alignments(alignments)
    }

    pub fn write_alignments<W: Write>(&self, writer: &mut W) -> std::io::Result<()> {
        for links in self.alignments.iter().flatten() {
            write_pharaoh_line(writer, links)?;
        }
        Ok(())
    }

    pub fn save_alignments(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut writer = create_buffered(path)?;
        self.write_alignments(&mut writer)
            .and_then(|_| writer.flush())
            .map_err(|e| Error::io(path, e))
    }
}

fn split_pair(line: &str) -> Option<(&str, &str)> {
    line.split_once(SEPARATOR)
        .or_else(|| line.split_once("|||"))
}

pub(crate) fn parse_pharaoh_line(line: &str, line_no: usize) -> Result<Vec<Alignment>> {
    line.split_whitespace()
        .map(|token| {
            let malformed = || Error::MalformedPair {
                line: line_no,
                token: token.to_owned(),
            };
            let (i, j) = token.split_once('-').ok_or_else(malformed)?;
            let i = i.parse::<usize>().map_err(|_| malformed())?;
            let j = j.parse::<usize>().map_err(|_| malformed())?;
            Ok((i, j))
        })
        .collect()
}

pub(crate) fn write_pharaoh_line<W: Write>(writer: &mut W, links: &[Alignment]) -> std::io::Result<()> {
    for (k, (i, j)) in links.iter().enumerate() {
        if k > 0 {
            writer.write_all(b" ")?;
        }
        write!(writer, "{i}-{j}")?;
    }
    writer.write_all(b"\n")
}

fn check_range(line: usize, pair: &SentencePair, links: &[Alignment]) -> Result<()> {
    for &(i, j) in links {
        if i >= pair.source.len() || j >= pair.target.len() {
            return Err(Error::IndexRange {
                line,
                source_index: i,
                target_index: j,
                source_len: pair.source.len(),
                target_len: pair.target.len(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(pairs: &[(&str, &str)]) -> ParallelCorpus {
        let text: String = pairs
            .iter()
            .map(|(s, t)| format!("{s} ||| {t}\n"))
            .collect();
        ParallelCorpus::read(text.as_bytes()).unwrap()
    }

    #[test]
    fn parses_pharaoh_pairs() {
        let c = corpus(&[("a b", "x y z")])
            .with_alignments_from("0-0 1-2\n".as_bytes())
            .unwrap();
        assert_eq!(c.alignments().unwrap()[0], vec![(0, 0), (1, 2)]);
    }

    #[test]
    fn rejects_out_of_range_index() {
        let err = corpus(&[("a b", "x y z")])
            .with_alignments_from("5-0\n".as_bytes())
            .unwrap_err();
        assert!(matches!(err, Error::IndexRange { source_index: 5, .. }));
        let err = corpus(&[("a b", "x")])
            .with_alignments_from("0-1\n".as_bytes())
            .unwrap_err();
        assert!(matches!(err, Error::IndexRange { target_index: 1, .. }));
    }

    #[test]
    fn rejects_malformed_pairs() {
        for bad in ["0_0", "a-1", "1-", "-1"] {
            let err = corpus(&[("a b", "x y")])
                .with_alignments_from(format!("{bad}\n").as_bytes())
                .unwrap_err();
            assert!(matches!(err, Error::MalformedPair { .. }), "{bad}");
        }
    }

    #[test]
    fn empty_line_is_unaligned_pair() {
        let c = corpus(&[("a", "x"), ("b", "y")])
            .with_alignments_from("\n0-0\n".as_bytes())
            .unwrap();
        assert!(c.alignments().unwrap()[0].is_empty());
        assert_eq!(c.alignments().unwrap()[1], vec![(0, 0)]);
    }

    #[test]
    fn alignment_line_count_must_match() {
        let err = corpus(&[("a", "x"), ("b", "y")])
            .with_alignments_from("0-0\n".as_bytes())
            .unwrap_err();
        assert!(matches!(err, Error::AlignmentCount { expected: 2, found: 1 }));
    }

    #[test]
    fn missing_separator() {
        assert!(matches!(
            ParallelCorpus::read("a b x y\n".as_bytes()),
            Err(Error::MalformedParallel { line: 1, .. })
        ));
    }

    #[test]
    fn canonical_alignment_text_round_trips() {
        let text = "0-0 1-2\n\n0-1\n";
        let c = corpus(&[("a b", "x y z"), ("c", "w"), ("d", "u v")])
            .with_alignments_from(text.as_bytes())
            .unwrap();
        let mut out = Vec::new();
        c.write_alignments(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }
}
