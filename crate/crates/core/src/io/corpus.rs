use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// One pre-tokenized sentence per entry.
pub type TokenizedCorpus = Vec<Vec<String>>;

/// Reads one sentence per line, tokens separated by spaces. Empty lines are
/// kept as empty sentences so output mirrors input line structure.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<TokenizedCorpus> {
    reader
        .lines()
        .map(|line| {
            let line = line.map_err(|e| Error::io("<corpus>", e))?;
            Ok(line.split_whitespace().map(str::to_owned).collect())
        })
        .collect()
}

pub fn write_corpus<W: Write>(writer: &mut W, corpus: &[Vec<String>]) -> std::io::Result<()> {
    for sentence in corpus {
        let mut first = true;
        for token in sentence {
            if !first {
                writer.write_all(b" ")?;
            }
            writer.write_all(token.as_bytes())?;
            first = false;
        }
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_empty_lines() {
        let corpus = read_corpus("a b\n\nc\n".as_bytes()).unwrap();
        assert_eq!(corpus.len(), 3);
        assert!(corpus[1].is_empty());
        let mut out = Vec::new();
        write_corpus(&mut out, &corpus).unwrap();
        assert_eq!(out, b"a b\n\nc\n");
    }
}
