mod common;

use common::*;
use ndarray::{Array2, Axis};
use proptest::prelude::*;
use repralign::io::{BilingualLexicon, LexiconEntry};
use repralign::retrieval::{
    cosine_topk, csls_penalties, csls_topk, precision_at_k, RankedList, RetrievalConfig,
};
use repralign::Error;

fn unit(m: &Array2<f64>) -> Array2<f64> {
    let norms = m.map_axis(Axis(1), |r| r.dot(&r).sqrt());
    m / &norms.insert_axis(Axis(1))
}

fn cosines(q: &Array2<f64>, c: &Array2<f64>) -> Vec<Vec<f64>> {
    let (q, c) = (unit(q), unit(c));
    (0..q.nrows())
        .map(|i| {
            (0..c.nrows())
                .map(|j| (0..q.ncols()).map(|t| q[[i, t]] * c[[j, t]]).sum())
                .collect()
        })
        .collect()
}

fn top_mean(mut values: Vec<f64>, k: usize) -> f64 {
    values.sort_by(|a, b| b.total_cmp(a));
    values[..k].iter().sum::<f64>() / k as f64
}

/// Full CSLS score matrix by the direct formula.
fn csls_oracle(q: &Array2<f64>, c: &Array2<f64>, k: usize) -> Vec<Vec<f64>> {
    let cos = cosines(q, c);
    let r_t: Vec<f64> = cos.iter().map(|row| top_mean(row.clone(), k)).collect();
    let r_s: Vec<f64> = (0..c.nrows())
        .map(|j| top_mean(cos.iter().map(|row| row[j]).collect(), k))
        .collect();
    cos.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, v)| 2.0 * v - r_t[i] - r_s[j])
                .collect()
        })
        .collect()
}

/// Best `k` of each row by exhaustive sort, ties to the lower index.
fn sort_oracle(scores: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    scores
        .iter()
        .map(|row| {
            let mut order: Vec<usize> = (0..row.len()).collect();
            order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
            order.truncate(k);
            order
        })
        .collect()
}

fn assert_matches_oracle(lists: &[RankedList], scores: &[Vec<f64>], k: usize) {
    let expected = sort_oracle(scores, k);
    for (i, (list, order)) in lists.iter().zip(&expected).enumerate() {
        assert_eq!(&list.indices, order, "query {i}");
        for (&j, s) in list.indices.iter().zip(&list.scores) {
            assert!((s - scores[i][j]).abs() <= 1e-10);
        }
    }
}

#[test]
fn cosine_matches_exhaustive_sort() {
    let mut rng = rng(20);
    let q = gaussian(&mut rng, 20, 8);
    let c = gaussian(&mut rng, 50, 8);
    let lists = cosine_topk(q.view(), c.view(), 5, 3).unwrap();
    assert_matches_oracle(&lists, &cosines(&q, &c), 5);
    // k beyond the candidate count returns every candidate
    let lists = cosine_topk(q.view(), c.view(), 80, 1024).unwrap();
    assert!(lists.iter().all(|l| l.len() == 50));
}

#[test]
fn cosine_ties_break_by_index() {
    let c = Array2::from_shape_fn((4, 3), |(i, j)| if j == 0 { 0.0 } else { (i + j) as f64 });
    let q = ndarray::array![[1.0, 0.0, 0.0]];
    let lists = cosine_topk(q.view(), c.view(), 4, 1).unwrap();
    assert_eq!(lists[0].indices, vec![0, 1, 2, 3]);
    assert!(lists[0].scores.iter().all(|&s| s == 0.0));
}

#[test]
fn csls_matches_direct_formula() {
    let mut rng = rng(30);
    for (m, n) in [(30, 30), (30, 50), (50, 30)] {
        let q = gaussian(&mut rng, m, 8);
        let c = gaussian(&mut rng, n, 8);
        let oracle = csls_oracle(&q, &c, 10);
        for batch_rows in [1, 7, 1024] {
            let config = RetrievalConfig {
                top_k: n,
                batch_rows,
                ..Default::default()
            };
            let lists = csls_topk(q.view(), c.view(), &config).unwrap();
            assert_matches_oracle(&lists, &oracle, n);
        }
    }
}

#[test]
fn csls_blocking_is_mechanical() {
    let mut rng = rng(31);
    let q = gaussian(&mut rng, 37, 8);
    let c = gaussian(&mut rng, 50, 8);
    let run = |batch_rows| {
        let config = RetrievalConfig {
            batch_rows,
            ..Default::default()
        };
        csls_topk(q.view(), c.view(), &config).unwrap()
    };
    let unblocked = run(37);
    for batch_rows in [1, 7, 1024] {
        assert_eq!(run(batch_rows), unblocked);
    }
}

#[test]
fn single_pair_collapses_to_zero() {
    let q = ndarray::array![[0.3, 0.4]];
    let c = ndarray::array![[1.0, 0.0]];
    let config = RetrievalConfig {
        csls_k: 1,
        ..Default::default()
    };
    let lists = csls_topk(q.view(), c.view(), &config).unwrap();
    assert_eq!(lists[0].indices, vec![0]);
    assert!(lists[0].scores[0].abs() < 1e-15);
}

#[test]
fn self_retrieval_survives_hubness_correction() {
    let x = gaussian(&mut rng(32), 200, 16);
    let lists = csls_topk(x.view(), x.view(), &RetrievalConfig::default()).unwrap();
    for (i, list) in lists.iter().enumerate() {
        assert_eq!(list.indices[0], i);
    }
    let lists = cosine_topk(x.view(), x.view(), 1, 64).unwrap();
    assert!(lists.iter().enumerate().all(|(i, l)| l.indices == [i]));
}

#[test]
fn symmetric_neighbourhoods_make_csls_rank_like_cosine() {
    // Regular 24-gon of candidates and a rotated 24-gon of queries: every
    // point sees the same neighbourhood, so all penalties coincide.
    let n = 24;
    let polygon = |offset: f64| {
        Array2::from_shape_fn((n, 2), |(i, j)| {
            let a = std::f64::consts::TAU * i as f64 / n as f64 + offset;
            if j == 0 { a.cos() } else { a.sin() }
        })
    };
    let c = polygon(0.0);
    let q = polygon(0.1);
    let config = RetrievalConfig {
        csls_k: 3,
        top_k: n,
        ..Default::default()
    };
    let (r_t, r_s) = csls_penalties(q.view(), None, c.view(), &config).unwrap();
    assert!(r_t.iter().all(|v| (v - r_t[0]).abs() < 1e-12));
    assert!(r_s.iter().all(|v| (v - r_s[0]).abs() < 1e-12));
    let csls = csls_topk(q.view(), c.view(), &config).unwrap();
    let cos = cosine_topk(q.view(), c.view(), n, 1024).unwrap();
    for (a, b) in csls.iter().zip(&cos) {
        assert_eq!(a.indices, b.indices);
    }
}

#[test]
fn neighbourhood_larger_than_side_is_rejected() {
    let mut rng = rng(33);
    let q = gaussian(&mut rng, 5, 4);
    let c = gaussian(&mut rng, 20, 4);
    assert!(matches!(
        csls_topk(q.view(), c.view(), &RetrievalConfig::default()),
        Err(Error::NeighbourhoodTooLarge { k: 10, .. })
    ));
    let zero = Array2::<f64>::zeros((10, 4));
    assert!(matches!(
        cosine_topk(zero.view(), c.view(), 1, 4),
        Err(Error::ZeroNorm { row: 0 })
    ));
}

fn lexicon(pairs: &[(&str, &str)]) -> BilingualLexicon {
    BilingualLexicon::from_entries(pairs.iter().map(|(s, t)| LexiconEntry {
        source: s.to_string(),
        target: t.to_string(),
        weight: 1.0,
    }))
    .unwrap()
}

fn ranked(indices: &[usize]) -> RankedList {
    RankedList {
        indices: indices.to_vec(),
        scores: (0..indices.len()).map(|r| -(r as f64)).collect(),
    }
}

#[test]
fn precision_on_hand_fixture() {
    let candidates: Vec<String> = names("t", 6);
    let queries: Vec<String> = names("s", 5);
    let lists = vec![
        ranked(&[0, 1, 2, 3, 4]), // s0 -> t0 at rank 1
        ranked(&[0, 1, 2, 3, 4]), // s1 -> t1 at rank 2
        ranked(&[5, 4, 2, 1, 0]), // s2 -> {t9, t2}: t2 at rank 3
        ranked(&[0, 1, 2, 4, 5]), // s3 -> t3 missing
        ranked(&[4, 0, 1, 2, 3]), // s4 -> t4 at rank 1
    ];
    let gold = lexicon(&[
        ("s0", "t0"),
        ("s1", "t1"),
        ("s2", "t9"),
        ("s2", "t2"),
        ("s3", "t3"),
        ("s4", "t4"),
        ("s7", "t7"),
    ]);
    let report = precision_at_k(&lists, &gold, &queries, &candidates, &[1, 2, 5]).unwrap();
    assert_eq!(report.evaluated, 5);
    assert_eq!(report.skipped, 1);
    assert_eq!(report.precision_at[&1], 2.0 / 5.0);
    assert_eq!(report.precision_at[&2], 3.0 / 5.0);
    assert_eq!(report.precision_at[&5], 4.0 / 5.0);

    let unrelated = lexicon(&[("zz", "t0")]);
    assert!(matches!(
        precision_at_k(&lists, &unrelated, &queries, &candidates, &[1]),
        Err(Error::EmptyIntersection)
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rankings_survive_a_shared_rotation(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let q = gaussian(&mut rng, 15, 6);
        let c = gaussian(&mut rng, 25, 6);
        let w = random_orthogonal(&mut rng, 6);
        let config = RetrievalConfig { csls_k: 4, top_k: 5, ..Default::default() };
        let before = csls_topk(q.view(), c.view(), &config).unwrap();
        let after = csls_topk(q.dot(&w).view(), c.dot(&w).view(), &config).unwrap();
        for (a, b) in before.iter().zip(&after) {
            prop_assert_eq!(&a.indices, &b.indices);
            for (x, y) in a.scores.iter().zip(&b.scores) {
                prop_assert!((x - y).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn scores_are_non_increasing(seed in any::<u64>(), k in 1usize..30, batch_rows in 1usize..20) {
        let mut rng = rng(seed);
        let q = gaussian(&mut rng, 12, 5);
        let c = gaussian(&mut rng, 20, 5);
        let config = RetrievalConfig { csls_k: 3, top_k: k, batch_rows, ..Default::default() };
        for list in csls_topk(q.view(), c.view(), &config).unwrap() {
            prop_assert_eq!(list.len(), k.min(20));
            prop_assert!(list.scores.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
