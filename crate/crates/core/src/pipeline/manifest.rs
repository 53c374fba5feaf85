//! JSON experiment manifests.
//!
//! ```json
//! {
//!   "level": "word",
//!   "source": "src.vec",
//!   "target": "tgt.vec",
//!   "supervision": "train.tsv",
//!   "eval": "test.tsv",
//!   "retrieval": { "csls_k": 10 },
//!   "output_dir": "run"
//! }
//! ```
//!
//! Relative paths are resolved against the manifest's directory.

use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    align_contextual, align_sentences, align_words, default_ks, table_from_dump,
    AlignmentReport, ContextualOptions, LayerOutput, Level, Rankings, SentenceOptions,
    WordOptions,
};
use crate::error::{Error, Result};
use crate::io::{
    create_buffered, load_alignments, open_buffered, BilingualLexicon, EmbeddingTable,
    LayerDump, LoadOptions, ParallelCorpus,
};
use crate::preprocess::NormalizationConfig;
use crate::retrieval::RetrievalConfig;

fn default_output_dir() -> PathBuf {
    PathBuf::from("run")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub level: Level,
    /// Embedding text file or `.cld` dump.
    pub source: PathBuf,
    pub target: PathBuf,
    /// Word level: lexicon. Sentence level: training ids, one per line.
    #[serde(default)]
    pub supervision: Option<PathBuf>,
    /// Word level: lexicon. Sentence level: evaluation ids.
    #[serde(default)]
    pub eval: Option<PathBuf>,
    /// Contextual level: parallel corpus in `src ||| tgt` form.
    #[serde(default)]
    pub corpus: Option<PathBuf>,
    /// Contextual level: Pharaoh alignments for `corpus`.
    #[serde(default)]
    pub alignments: Option<PathBuf>,
    /// Layer to align. Word level reads this layer of `.cld` inputs
    /// (default 0); the other levels sweep all layers when unset.
    #[serde(default)]
    pub layer: Option<usize>,
    #[serde(default)]
    pub eval_sentences: usize,
    #[serde(default)]
    pub export_mapped: bool,
    #[serde(default)]
    pub lowercase: bool,
    #[serde(default)]
    pub normalization: NormalizationConfig,
    /// Overrides applied on top of the level's default retrieval settings.
    #[serde(default)]
    pub retrieval: Option<serde_json::Map<String, Value>>,
    #[serde(default)]
    pub ks: Option<Vec<usize>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn manifest_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Manifest {
        path: path.to_owned(),
        message: message.into(),
    }
}

impl Manifest {
    /// Parses manifest text; `origin` only labels error messages.
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let manifest: Manifest = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| field_error(origin, "", e))?;
        de.end()
            .map_err(|e| manifest_error(origin, e.to_string()))?;
        manifest.retrieval_config(origin)?;
        Ok(manifest)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }

    fn retrieval_config(&self, origin: &Path) -> Result<RetrievalConfig> {
        let base = match self.level {
            Level::Word => RetrievalConfig::default(),
            Level::ContextualWord | Level::Sentence => RetrievalConfig::cosine(),
        };
        let Some(overrides) = &self.retrieval else {
            return Ok(base);
        };
        let mut value = serde_json::to_value(base).expect("config serialises");
        let object = value.as_object_mut().expect("config is an object");
        object.extend(overrides.clone());
        serde_path_to_error::deserialize(value).map_err(|e| field_error(origin, "retrieval.", e))
    }

    fn ks(&self) -> Vec<usize> {
        match (&self.ks, self.level) {
            (Some(ks), _) => ks.clone(),
            (None, Level::Sentence) => vec![1],
            (None, _) => default_ks(),
        }
    }

    /// Runs the experiment, writing every artifact under `output_dir`.
    /// `base` resolves relative paths.
    pub fn run(&self, base: &Path) -> Result<AlignmentReport> {
        let origin = base.join("manifest");
        let resolve = |p: &Path| base.join(p);
        let required = |field: &Option<PathBuf>, name: &str| -> Result<PathBuf> {
            field.as_deref().map(resolve).ok_or_else(|| {
                manifest_error(
                    &origin,
                    format!("field `{name}` is required for level {:?}", self.level),
                )
            })
        };
        let out_dir = resolve(&self.output_dir);
        std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
        let load = LoadOptions {
            lowercase: self.lowercase,
        };
        let retrieval = self.retrieval_config(&origin)?;

        let mut report = match self.level {
            Level::Word => {
                let src = self.load_table(&resolve(&self.source), load)?;
                let tgt = self.load_table(&resolve(&self.target), load)?;
                let supervision = BilingualLexicon::load(required(&self.supervision, "supervision")?, load)?;
                let eval = self
                    .eval
                    .as_deref()
                    .map(|p| BilingualLexicon::load(resolve(p), load))
                    .transpose()?;
                let options = WordOptions {
                    normalization: self.normalization,
                    retrieval,
                    ks: self.ks(),
                };
                let out = align_words(&src, &tgt, &supervision, eval.as_ref(), &options)?;
                out.map.save(out_dir.join("map.cld"))?;
                if let Some(rankings) = &out.rankings {
                    write_rankings(&out_dir.join("rankings.tsv"), rankings)?;
                }
                out.report
            }
            Level::ContextualWord => {
                let src = LayerDump::load(resolve(&self.source))?;
                let tgt = LayerDump::load(resolve(&self.target))?;
                let corpus = ParallelCorpus::load(required(&self.corpus, "corpus")?)?;
                let corpus = load_alignments(required(&self.alignments, "alignments")?, corpus)?;
                let options = ContextualOptions {
                    layer: self.layer,
                    normalization: self.normalization,
                    retrieval,
                    ks: self.ks(),
                    eval_sentences: self.eval_sentences,
                    export_mapped: self.export_mapped,
                };
                let out = align_contextual(&src, &tgt, &corpus, &options)?;
                write_layer_outputs(&out_dir, &out.layers)?;
                out.report
            }
            Level::Sentence => {
                let src = LayerDump::load(resolve(&self.source))?;
                let tgt = LayerDump::load(resolve(&self.target))?;
                let train = read_ids(&required(&self.supervision, "supervision")?)?;
                let eval = match &self.eval {
                    Some(p) => read_ids(&resolve(p))?,
                    None => Vec::new(),
                };
                let options = SentenceOptions {
                    layer: self.layer,
                    normalization: self.normalization,
                    retrieval,
                    ks: self.ks(),
                };
                let out = align_sentences(&src, &tgt, &train, &eval, &options)?;
                write_layer_outputs(&out_dir, &out.layers)?;
                if let Some(cka) = &out.report.cka {
                    let path = out_dir.join("cka.tsv");
                    let mut writer = create_buffered(&path)?;
                    cka.write_tsv(&mut writer)
                        .and_then(|_| std::io::Write::flush(&mut writer))
                        .map_err(|e| Error::io(&path, e))?;
                }
                out.report
            }
        };
        report.seed = self.seed;
        report.save(&out_dir)?;
        Ok(report)
    }

    fn load_table(&self, path: &Path, options: LoadOptions) -> Result<EmbeddingTable> {
        if path.extension().is_some_and(|e| e == "cld") {
            table_from_dump(&LayerDump::load(path)?, self.layer.unwrap_or(0))
        } else {
            EmbeddingTable::load_text(path, options)
        }
    }
}

fn field_error(origin: &Path, prefix: &str, e: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let field = e.path().to_string();
    let message = if field == "." {
        e.inner().to_string()
    } else {
        format!("field `{prefix}{field}`: {}", e.inner())
    };
    manifest_error(origin, message)
}

/// Non-empty lines of an id list.
fn read_ids(path: &Path) -> Result<Vec<String>> {
    let reader = open_buffered(path)?;
    let mut ids = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let id = line.trim_end_matches('\r');
        if !id.is_empty() {
            ids.push(id.to_owned());
        }
    }
    Ok(ids)
}

fn write_rankings(path: &Path, rankings: &Rankings) -> Result<()> {
    let mut writer = create_buffered(path)?;
    rankings
        .write_tsv(&mut writer)
        .and_then(|_| std::io::Write::flush(&mut writer))
        .map_err(|e| Error::io(path, e))
}

fn write_layer_outputs(dir: &Path, outputs: &[LayerOutput]) -> Result<()> {
    for output in outputs {
        let l = output.layer;
        output.map.save(dir.join(format!("map_L{l}.cld")))?;
        if let Some(rankings) = &output.rankings {
            write_rankings(&dir.join(format!("rankings_L{l}.tsv")), rankings)?;
        }
        if let Some(mapped) = &output.mapped {
            mapped.save(dir.join(format!("mapped_L{l}.cld")))?;
        }
    }
    Ok(())
}

/// Loads a manifest and runs it relative to its own directory.
pub fn run_report(path: impl AsRef<Path>) -> Result<AlignmentReport> {
    let path = path.as_ref();
    let manifest = Manifest::load(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    manifest.run(base).map_err(|e| match e {
        Error::Manifest { message, .. } => manifest_error(path, message),
        other => other,
    })
}
