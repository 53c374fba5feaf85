use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use repralign::anchors::{
    anchor_stats, code_switch, prefix_corpus, prefix_vocab, vocab_union, CodeSwitchConfig,
    Vocabulary, WeightMode,
};
use repralign::cka::cka_profile;
use repralign::io::{
    read_corpus, write_corpus, BilingualLexicon, EmbeddingTable, LayerDump, LoadOptions,
    OrthogonalMap, ParallelCorpus,
};
use repralign::pipeline::{
    group_words, pool_sentences, run_report, type_average_dump, Level, Manifest,
};
use repralign::preprocess::{NormalizationConfig, TypeAveraging};
use repralign::retrieval::Criterion;

#[derive(Parser)]
#[command(name = "repralign", version, about = "Align and compare representation spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a word-level map from a seed lexicon and score translation retrieval.
    AlignWords(AlignWords),
    /// Fit per-layer maps from word-aligned parallel sentences.
    AlignContext(AlignContext),
    /// Fit per-layer maps on sentence-pooled dumps and score sentence retrieval.
    AlignSentences(AlignSentences),
    /// Per-layer linear CKA between two dumps over the same items.
    CkaProfile(CkaProfileArgs),
    /// Replace dictionary words by sampled translations.
    Codeswitch(Codeswitch),
    /// Shared types and their token mass in two corpora.
    AnchorStats(AnchorStatsArgs),
    /// Run a JSON experiment manifest.
    Report {
        manifest: PathBuf,
    },
    /// Check that files parse in the given format.
    Validate(Validate),
    /// Turn a token-level dump into sentence, word or word-type rows.
    Pool(Pool),
    /// Prefix every token of a vocabulary or corpus with a language tag.
    Prefix(Prefix),
    /// Union of two vocabularies with overlap statistics.
    VocabUnion(VocabUnion),
}

#[derive(Args)]
struct Common {
    /// Run directory for reports, maps and rankings.
    #[arg(long, default_value = "run")]
    out: PathBuf,
    #[arg(long)]
    criterion: Option<CriterionArg>,
    #[arg(long)]
    csls_k: Option<usize>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    batch_rows: Option<usize>,
    /// Iterative normalization rounds.
    #[arg(long, default_value_t = 5)]
    iterations: usize,
    /// Cut-offs to report as P@k.
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
    /// Recorded in the report.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    Cosine,
    Csls,
}

#[derive(Args)]
struct AlignWords {
    /// Source embeddings (text) or `.cld` dump.
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    supervision: PathBuf,
    #[arg(long)]
    eval: Option<PathBuf>,
    /// Layer of `.cld` inputs to read.
    #[arg(long)]
    layer: Option<usize>,
    #[arg(long)]
    lowercase: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct AlignContext {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Parallel corpus, `source ||| target` per line.
    #[arg(long)]
    corpus: PathBuf,
    /// Pharaoh alignments, one line per sentence pair.
    #[arg(long)]
    alignments: PathBuf,
    /// Align a single layer instead of sweeping all of them.
    #[arg(long)]
    layer: Option<usize>,
    /// Hold out this many trailing sentence pairs for retrieval.
    #[arg(long, default_value_t = 0)]
    eval_sentences: usize,
    /// Write the target dump mapped into the source space.
    #[arg(long)]
    export_mapped: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct AlignSentences {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Training sentence ids, one per line.
    #[arg(long)]
    train: PathBuf,
    /// Evaluation sentence ids, one per line.
    #[arg(long)]
    eval: Option<PathBuf>,
    #[arg(long)]
    layer: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CkaProfileArgs {
    a: PathBuf,
    b: PathBuf,
    /// Write the TSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Codeswitch {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0.3)]
    p_replace: f64,
    /// Largest fraction of a batch that may be replaced.
    #[arg(long, default_value_t = 0.15)]
    cap: f64,
    #[arg(long, default_value_t = 256 * 96)]
    batch_tokens: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Weights::Quality)]
    weights: Weights,
    /// Write the replacement report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weights {
    Quality,
    Uniform,
}

#[derive(Args)]
struct AnchorStatsArgs {
    corpus_a: PathBuf,
    corpus_b: PathBuf,
    #[arg(long)]
    vocab_a: Option<PathBuf>,
    #[arg(long)]
    vocab_b: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Dump,
    Embedding,
    Lexicon,
    Corpus,
    Parallel,
    Map,
}

#[derive(Args)]
struct Validate {
    /// Format of the files; guessed from the extension when omitted
    /// (`.cld` dump, `.vec` embedding).
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    /// Pharaoh alignments to check against a parallel corpus.
    #[arg(long)]
    alignments: Option<PathBuf>,
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PoolMode {
    /// Mean over each sentence's non-special tokens.
    Sentence,
    /// Mean over each word's subwords.
    Words,
    /// Mean over every occurrence of each word type.
    Types,
}

#[derive(Args)]
struct Pool {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum)]
    mode: PoolMode,
    /// Tokenized corpus naming the words (types mode).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Average all subwords of a type at once instead of per occurrence.
    #[arg(long)]
    flat: bool,
}

#[derive(Args)]
struct Prefix {
    #[arg(long)]
    tag: String,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Treat the input as a corpus rather than a vocabulary list.
    #[arg(long)]
    corpus: bool,
}

#[derive(Args)]
struct VocabUnion {
    a: PathBuf,
    b: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::AlignWords(args) => {
            let mut manifest = base_manifest(Level::Word, args.source, args.target, &args.common);
            manifest.supervision = Some(args.supervision);
            manifest.eval = args.eval;
            manifest.layer = args.layer;
            manifest.lowercase = args.lowercase;
            run_manifest(&manifest)
        }
        Command::AlignContext(args) => {
            let mut manifest =
                base_manifest(Level::ContextualWord, args.source, args.target, &args.common);
            manifest.corpus = Some(args.corpus);
            manifest.alignments = Some(args.alignments);
            manifest.layer = args.layer;
            manifest.eval_sentences = args.eval_sentences;
            manifest.export_mapped = args.export_mapped;
            run_manifest(&manifest)
        }
        Command::AlignSentences(args) => {
            let mut manifest = base_manifest(Level::Sentence, args.source, args.target, &args.common);
            manifest.supervision = Some(args.train);
            manifest.eval = args.eval;
            manifest.layer = args.layer;
            run_manifest(&manifest)
        }
        Command::CkaProfile(args) => {
            let a = LayerDump::load(&args.a)?;
            let b = reorder_like(&a, LayerDump::load(&args.b)?)?;
            let profile = cka_profile(&a, &b)?;
            with_output(args.out.as_deref(), |mut w| profile.write_tsv(&mut w))
        }
        Command::Codeswitch(args) => {
            let corpus = read_corpus(open(&args.input)?)?;
            let lexicon = BilingualLexicon::load(&args.lexicon, LoadOptions::default())?;
            let config = CodeSwitchConfig {
                replace_probability: args.p_replace,
                max_changed_fraction: args.cap,
                batch_tokens: args.batch_tokens,
                seed: args.seed,
                weight_mode: match args.weights {
                    Weights::Quality => WeightMode::Quality,
                    Weights::Uniform => WeightMode::Uniform,
                },
            };
            let (switched, report) = code_switch(&corpus, &lexicon, &config)?;
            with_output(Some(&args.output), |mut w| write_corpus(&mut w, &switched))?;
            eprintln!(
                "replaced {} of {} tokens ({} in lexicon) over {} batches",
                report.tokens_replaced,
                report.tokens_seen,
                report.tokens_in_lexicon,
                report.batches.len()
            );
            if let Some(path) = args.report {
                write_json(&path, &report)?;
            }
            Ok(())
        }
        Command::AnchorStats(args) => {
            let a = read_corpus(open(&args.corpus_a)?)?;
            let b = read_corpus(open(&args.corpus_b)?)?;
            let vocab_a = args.vocab_a.map(|p| read_vocab(&p)).transpose()?;
            let vocab_b = args.vocab_b.map(|p| read_vocab(&p)).transpose()?;
            let stats = anchor_stats(&a, &b, vocab_a.as_ref(), vocab_b.as_ref());
            println!("{}", serde_json::to_string_pretty(&stats)?);
            Ok(())
        }
        Command::Report { manifest } => {
            let report = run_report(&manifest)?;
            summarise(&report);
            Ok(())
        }
        Command::Validate(args) => validate(args),
        Command::Pool(args) => {
            let dump = LayerDump::load(&args.input)?;
            let pooled = match args.mode {
                PoolMode::Sentence => pool_sentences(&dump)?,
                PoolMode::Words => group_words(&dump)?,
                PoolMode::Types => {
                    let Some(corpus) = args.corpus else {
                        bail!("--corpus is required with --mode types");
                    };
                    let corpus = read_corpus(open(&corpus)?)?;
                    let mode = if args.flat {
                        TypeAveraging::FlatSubwordMean
                    } else {
                        TypeAveraging::OccurrenceMean
                    };
                    type_average_dump(&dump, &corpus, mode)?
                }
            };
            pooled.save(&args.output)?;
            Ok(())
        }
        Command::Prefix(args) => {
            if args.corpus {
                let corpus = read_corpus(open(&args.input)?)?;
                let prefixed = prefix_corpus(&corpus, &args.tag)?;
                with_output(Some(&args.output), |mut w| write_corpus(&mut w, &prefixed))
            } else {
                let vocab = read_vocab(&args.input)?;
                let prefixed = prefix_vocab(&vocab, &args.tag)?;
                with_output(Some(&args.output), |mut w| prefixed.write(&mut w))
            }
        }
        Command::VocabUnion(args) => {
            let (union, stats) = vocab_union(&read_vocab(&args.a)?, &read_vocab(&args.b)?);
            with_output(Some(&args.output), |mut w| union.write(&mut w))?;
            println!("{}", serde_json::to_string_pretty(&stats)?);
            Ok(())
        }
    }
}

fn base_manifest(level: Level, source: PathBuf, target: PathBuf, common: &Common) -> Manifest {
    let mut retrieval = serde_json::Map::new();
    if let Some(c) = common.criterion {
        let c = match c {
            CriterionArg::Cosine => Criterion::Cosine,
            CriterionArg::Csls => Criterion::Csls,
        };
        retrieval.insert("criterion".into(), serde_json::to_value(c).expect("enum"));
    }
    for (key, value) in [
        ("csls_k", common.csls_k),
        ("top_k", common.top_k),
        ("batch_rows", common.batch_rows),
    ] {
        if let Some(v) = value {
            retrieval.insert(key.into(), v.into());
        }
    }
    Manifest {
        level,
        source,
        target,
        supervision: None,
        eval: None,
        corpus: None,
        alignments: None,
        layer: None,
        eval_sentences: 0,
        export_mapped: false,
        lowercase: false,
        normalization: NormalizationConfig {
            iterations: common.iterations,
            ..Default::default()
        },
        retrieval: (!retrieval.is_empty()).then_some(retrieval),
        ks: common.ks.clone(),
        seed: common.seed,
        output_dir: common.out.clone(),
    }
}

fn run_manifest(manifest: &Manifest) -> Result<()> {
    let report = manifest.run(Path::new("."))?;
    summarise(&report);
    Ok(())
}

fn summarise(report: &repralign::pipeline::AlignmentReport) {
    let mut out = Vec::new();
    report.write_tsv(&mut out).expect("in-memory write");
    print!("{}", String::from_utf8_lossy(&out));
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn read_vocab(path: &Path) -> Result<Vocabulary> {
    Vocabulary::read(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn with_output(
    path: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<()> {
    match path {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            let mut writer = BufWriter::new(file);
            write(&mut writer).and_then(|_| writer.flush())?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Puts `b`'s rows in `a`'s id order.
fn reorder_like(a: &LayerDump, b: LayerDump) -> Result<LayerDump> {
    if a.item_ids() == b.item_ids() {
        return Ok(b);
    }
    let index: std::collections::HashMap<&str, usize> = b
        .item_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let rows = a
        .item_ids()
        .iter()
        .map(|id| {
            index
                .get(id.as_str())
                .copied()
                .with_context(|| format!("item {id:?} missing from the second dump"))
        })
        .collect::<Result<Vec<_>>>()?;
    let layers = b
        .layers()
        .iter()
        .map(|l| l.select(ndarray::Axis(0), &rows))
        .collect();
    Ok(LayerDump::new(a.item_ids().to_vec(), layers)?)
}

fn validate(args: Validate) -> Result<()> {
    let mut failed = 0;
    for path in &args.files {
        let kind = match args.kind {
            Some(kind) => kind,
            None => match path.extension().and_then(|e| e.to_str()) {
                Some("cld") => Kind::Dump,
                Some("vec") => Kind::Embedding,
                _ => bail!("cannot guess the format of {}; pass --kind", path.display()),
            },
        };
        match describe(path, kind, args.alignments.as_deref()) {
            Ok(summary) => println!("ok\t{}\t{summary}", path.display()),
            Err(e) => {
                failed += 1;
                println!("invalid\t{}\t{e:#}", path.display());
            }
        }
    }
    if failed > 0 {
        bail!("{failed} of {} files failed validation", args.files.len());
    }
    Ok(())
}

fn describe(path: &Path, kind: Kind, alignments: Option<&Path>) -> Result<String> {
    Ok(match kind {
        Kind::Dump => {
            let dump = LayerDump::load(path)?;
            format!(
                "{} layers x {} rows x {} dims",
                dump.layer_count(),
                dump.row_count(),
                dump.dim()
            )
        }
        Kind::Embedding => {
            let table = EmbeddingTable::load_text(path, LoadOptions::default())?;
            format!("{} tokens x {} dims", table.len(), table.dim())
        }
        Kind::Lexicon => {
            let lexicon = BilingualLexicon::load(path, LoadOptions::default())?;
            format!("{} entries, {} sources", lexicon.len(), lexicon.sources().len())
        }
        Kind::Corpus => {
            let corpus = read_corpus(open(path)?)?;
            let tokens: usize = corpus.iter().map(Vec::len).sum();
            format!("{} sentences, {tokens} tokens", corpus.len())
        }
        Kind::Parallel => {
            let mut corpus = ParallelCorpus::load(path)?;
            if let Some(a) = alignments {
                corpus = repralign::io::load_alignments(a, corpus)?;
            }
            format!("{} sentence pairs", corpus.len())
        }
        Kind::Map => {
            let map = OrthogonalMap::load(path)?;
            format!("{0} x {0} orthogonal map", map.dim())
        }
    })
}
