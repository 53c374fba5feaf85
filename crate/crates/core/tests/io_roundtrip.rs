mod common;

use std::collections::HashSet;

use common::*;
use ndarray::Array2;
use proptest::prelude::*;
use repralign::io::{
    load_alignments, BilingualLexicon, EmbeddingTable, LayerDump, LexiconEntry, LoadOptions,
    OrthogonalMap, ParallelCorpus, SentencePair,
};
use repralign::Error;

fn finite_f32() -> impl Strategy<Value = f32> {
    any::<u32>().prop_map(f32::from_bits).prop_filter("finite", |v| v.is_finite())
}

fn unique_tokens(raw: Vec<String>) -> Vec<String> {
    raw.into_iter()
        .enumerate()
        .map(|(i, t)| format!("{t}{i}"))
        .collect()
}

fn token() -> impl Strategy<Value = String> {
    "[a-zA-Zàéß0-9_'#.-]{1,6}"
}

fn same_bits(a: &Array2<f32>, b: &Array2<f32>) -> bool {
    a.dim() == b.dim() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn embedding_text_round_trips(
        (rows, dim, values) in (1usize..12, 1usize..9).prop_flat_map(|(r, d)| {
            (Just(r), Just(d), proptest::collection::vec(finite_f32(), r * d))
        }),
        raw in proptest::collection::vec(token(), 12),
    ) {
        let tokens = unique_tokens(raw[..rows].to_vec());
        let matrix = Array2::from_shape_vec((rows, dim), values).unwrap();
        let table = EmbeddingTable::new(tokens, matrix).unwrap();
        let mut text = Vec::new();
        table.write_text(&mut text).unwrap();
        let back = EmbeddingTable::read_text(&text[..], LoadOptions::default()).unwrap();
        prop_assert_eq!(back.tokens(), table.tokens());
        prop_assert!(same_bits(back.matrix(), table.matrix()));
        let mut again = Vec::new();
        back.write_text(&mut again).unwrap();
        prop_assert_eq!(again, text);
    }

    #[test]
    fn layer_dump_round_trips(
        (layers, rows, dim, values) in (1usize..4, 1usize..8, 1usize..6).prop_flat_map(|(l, r, d)| {
            (Just(l), Just(r), Just(d), proptest::collection::vec(finite_f32(), l * r * d))
        }),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.cld");
        let mats: Vec<Array2<f32>> = values
            .chunks(rows * dim)
            .map(|c| Array2::from_shape_vec((rows, dim), c.to_vec()).unwrap())
            .collect();
        let dump = LayerDump::new(names("id ", rows), mats).unwrap();
        dump.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        prop_assert_eq!(bytes.len(), 16 + 4 * layers * rows * dim);
        let back = LayerDump::load(&path).unwrap();
        prop_assert_eq!(back.item_ids(), dump.item_ids());
        for (a, b) in back.layers().iter().zip(dump.layers()) {
            prop_assert!(same_bits(a, b));
        }
        let second = dir.path().join("y.cld");
        back.save(&second).unwrap();
        prop_assert_eq!(std::fs::read(&second).unwrap(), bytes);
        prop_assert_eq!(
            std::fs::read(second.with_extension("ids")).unwrap(),
            std::fs::read(path.with_extension("ids")).unwrap()
        );
    }

    #[test]
    fn lexicon_round_trips(
        pairs in proptest::collection::vec((token(), token(), prop_oneof![Just(1.0), 0.0..5.0f64]), 1..30),
    ) {
        let mut seen = HashSet::new();
        let entries: Vec<LexiconEntry> = pairs
            .into_iter()
            .filter(|(s, t, _)| seen.insert((s.clone(), t.clone())))
            .map(|(source, target, weight)| LexiconEntry { source, target, weight })
            .collect();
        let lexicon = BilingualLexicon::from_entries(entries).unwrap();
        let mut text = Vec::new();
        lexicon.write(&mut text).unwrap();
        let back = BilingualLexicon::read(&text[..], LoadOptions::default()).unwrap();
        prop_assert_eq!(back.entries(), lexicon.entries());
        let mut again = Vec::new();
        back.write(&mut again).unwrap();
        prop_assert_eq!(again, text);
    }

    #[test]
    fn pharaoh_alignments_round_trip(
        sentences in proptest::collection::vec((1usize..8, 1usize..8, 0usize..10, any::<u64>()), 1..10),
    ) {
        let mut pairs = Vec::new();
        let mut alignments = Vec::new();
        for (n_src, n_tgt, links, seed) in sentences {
            pairs.push(SentencePair { source: names("s", n_src), target: names("t", n_tgt) });
            let mut state = seed;
            let mut next = |m: usize| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 33) as usize % m
            };
            alignments.push((0..links).map(|_| (next(n_src), next(n_tgt))).collect::<Vec<_>>());
        }
        let corpus = ParallelCorpus::new(pairs).with_alignments(alignments).unwrap();
        let mut text = Vec::new();
        corpus.write_alignments(&mut text).unwrap();
        let back = ParallelCorpus::new(corpus.pairs.clone()).with_alignments_from(&text[..]).unwrap();
        prop_assert_eq!(back.alignments(), corpus.alignments());
        let mut again = Vec::new();
        back.write_alignments(&mut again).unwrap();
        prop_assert_eq!(again, text);
    }
}

#[test]
fn corrupted_embedding_files_are_rejected() {
    let read = |text: &str| EmbeddingTable::read_text(text.as_bytes(), LoadOptions::default());
    assert!(matches!(read("two 3\na 1 0 0\n"), Err(Error::MalformedHeader { line: 1, .. })));
    assert!(matches!(read(""), Err(Error::MalformedHeader { .. })));
    assert!(matches!(read("1 3\na 1 0\n"), Err(Error::BadArity { line: 2, .. })));
    assert!(matches!(read("2 1\na 1\na 2\n"), Err(Error::DuplicateToken { line: 3, .. })));
    assert!(matches!(read("1 1\na inf\n"), Err(Error::NonFinite { line: 2, .. })));
    assert!(matches!(read("1 1\na x\n"), Err(Error::BadValue { line: 2, .. })));
    assert!(matches!(read("3 1\na 1\nb 2\n"), Err(Error::Shape(_))));
    let table = read("2 3\na 1 0 0\nb 0 1 0").unwrap();
    assert_eq!(table.tokens(), ["a", "b"]);
    assert_eq!(table.matrix(), &ndarray::array![[1.0f32, 0.0, 0.0], [0.0, 1.0, 0.0]]);
}

#[test]
fn corrupted_dumps_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.cld");
    let dump = LayerDump::new(names("r", 3), vec![Array2::zeros((3, 4)), Array2::ones((3, 4))]).unwrap();
    dump.save(&path).unwrap();
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 112);
    let good = std::fs::read(&path).unwrap();

    let mut bad = good.clone();
    bad[..4].copy_from_slice(b"XXXX");
    std::fs::write(&path, &bad).unwrap();
    assert!(matches!(LayerDump::load(&path), Err(Error::BadMagic { found }) if &found == b"XXXX"));

    std::fs::write(&path, &good[..good.len() - 1]).unwrap();
    assert!(matches!(
        LayerDump::load(&path),
        Err(Error::Truncated { expected: 112, found: 111 })
    ));

    std::fs::write(&path, &good).unwrap();
    std::fs::write(path.with_extension("ids"), "r0\nr1\n").unwrap();
    assert!(matches!(
        LayerDump::load(&path),
        Err(Error::IdCountMismatch { expected: 3, found: 2 })
    ));
}

#[test]
fn corrupted_lexicons_and_alignments_are_rejected() {
    let read = |text: &str| BilingualLexicon::read(text.as_bytes(), LoadOptions::default());
    assert!(matches!(read("chat\n"), Err(Error::BadArity { line: 1, .. })));
    assert!(matches!(read("a\tb\tc\td\n"), Err(Error::BadArity { .. })));
    assert!(matches!(read("a\tb\tx\n"), Err(Error::BadValue { .. })));
    assert!(matches!(read("a\tb\t-1\n"), Err(Error::NegativeWeight { .. })));
    assert!(matches!(read("a\tb\na\tb\n"), Err(Error::DuplicateEntry { line: 2, .. })));

    let corpus = ParallelCorpus::read("a b ||| x y z\n".as_bytes()).unwrap();
    let ok = corpus.clone().with_alignments_from("0-0 1-2\n".as_bytes()).unwrap();
    assert_eq!(ok.alignments().unwrap()[0], vec![(0, 0), (1, 2)]);
    assert!(matches!(
        corpus.clone().with_alignments_from("5-0\n".as_bytes()),
        Err(Error::IndexRange { source_index: 5, .. })
    ));
    assert!(matches!(
        corpus.clone().with_alignments_from("0:0\n".as_bytes()),
        Err(Error::MalformedPair { .. })
    ));
    assert!(matches!(
        corpus.with_alignments_from("0-0\n0-0\n".as_bytes()),
        Err(Error::AlignmentCount { expected: 1, found: 2 })
    ));
}

#[test]
fn empty_alignment_lines_leave_pairs_unaligned() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.align");
    std::fs::write(&path, "0-0\n\n1-1\n").unwrap();
    let corpus = ParallelCorpus::read("a b ||| x y\nc ||| z\nd e ||| u v\n".as_bytes()).unwrap();
    let corpus = load_alignments(&path, corpus).unwrap();
    assert_eq!(corpus.alignments().unwrap()[1], vec![]);
}

#[test]
fn orthogonal_maps_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("map.cld");
    let q = random_orthogonal(&mut rng(1), 16);
    let map = OrthogonalMap::new(q).unwrap().with_spaces("en", "fr").with_residual(0.5);
    map.save(&path).unwrap();
    let back = OrthogonalMap::load(&path).unwrap();
    assert_eq!(back.source_space, "en");
    assert_eq!(back.target_space, "fr");
    assert_eq!(back.fit_residual, 0.5);
    assert!(orthogonality_error(back.matrix()) <= 1e-12);
    assert!(frobenius(&(back.matrix() - map.matrix())) <= 1e-5);

    let skewed = LayerDump::new(names("r", 2), vec![ndarray::array![[1.0f32, 0.1], [0.0, 1.0]]]).unwrap();
    skewed.save(&path).unwrap();
    assert!(matches!(OrthogonalMap::load(&path), Err(Error::NotOrthogonal { .. })));
}
