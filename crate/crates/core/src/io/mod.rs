//! Reading and writing of every on-disk artifact.
//!
//! Matrices are stored as `f32` on disk and promoted to `f64` for
//! computation. All binary integers are little-endian.

mod corpus;
mod dump;
mod embedding;
mod lexicon;
mod map;
mod parallel;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

pub use corpus::{read_corpus, write_corpus, TokenizedCorpus};
pub use dump::{LayerDump, CLD_MAGIC};
pub use embedding::{EmbeddingTable, LoadOptions};
pub use lexicon::{BilingualLexicon, LexiconEntry};
pub use map::{OrthogonalMap, LOAD_ORTHOGONALITY_TOLERANCE, ORTHOGONALITY_TOLERANCE};
pub use parallel::{Alignment, ParallelCorpus, SentencePair};

use crate::error::{Error, Result};

pub(crate) fn open_buffered(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn create_buffered(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Loads a whitespace-delimited embedding text file.
pub fn load_embedding_text(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    EmbeddingTable::load_text(path, LoadOptions::default())
}

pub fn load_layer_dump(path: impl AsRef<Path>) -> Result<LayerDump> {
    LayerDump::load(path)
}

pub fn save_layer_dump(dump: &LayerDump, path: impl AsRef<Path>) -> Result<()> {
    dump.save(path)
}

pub fn load_lexicon(path: impl AsRef<Path>) -> Result<BilingualLexicon> {
    BilingualLexicon::load(path, LoadOptions::default())
}

/// Reads a Pharaoh alignment file and attaches it to `corpus`.
pub fn load_alignments(path: impl AsRef<Path>, corpus: ParallelCorpus) -> Result<ParallelCorpus> {
    let path = path.as_ref();
    let reader = open_buffered(path)?;
    corpus.with_alignments_from(reader)
}
