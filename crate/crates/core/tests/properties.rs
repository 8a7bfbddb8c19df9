mod common;

use std::collections::BTreeSet;

use common::{random_matrix, rng, set_from};
use metaemb::embedding_io::{load_embedding_set, save_embedding_set};
use metaemb::ensemble::{conc, svd_meta, train_1ton, train_1ton_plus};
use metaemb::eval::{
    eval_analogy, eval_similarity, AnalogyCategory, AnalogyDataset, AnalogyQuestion,
    SimilarityDataset,
};
use metaemb::linalg::{normalize_rows, truncated_svd};
use metaemb::oov::{extend_all, fill_oov};
use metaemb::{
    align, DenseMatrix, EmbeddingSet, OovFillStrategy, ProjectionMap, SetWeights, TrainConfig,
    VectorFileFormat,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const POOL: [&str; 12] = [
    "apple", "bank", "cat", "dog", "egg", "fig", "gold", "hat", "ice", "jam", "kite", "lamp",
];

/// `count` sets over random subsets of a shared pool; every pool word is
/// known to at least one set and every set knows at least two shared words.
fn random_sets(seed: u64, count: usize) -> Vec<EmbeddingSet> {
    let mut r = rng(seed);
    let shared: Vec<&str> = POOL[..2].to_vec();
    let mut vocabs: Vec<Vec<&str>> = vec![shared.clone(); count];
    for w in &POOL[2..] {
        let owner = r.random_range(0..count);
        for (s, vocab) in vocabs.iter_mut().enumerate() {
            if s == owner || r.random_bool(0.5) {
                vocab.push(w);
            }
        }
    }
    vocabs
        .into_iter()
        .enumerate()
        .map(|(s, mut vocab)| {
            vocab.shuffle(&mut r);
            let dim = r.random_range(1..6);
            let m = random_matrix(&mut r, vocab.len(), dim, 2.0);
            set_from(&format!("set{s}"), &vocab, m)
        })
        .collect()
}

fn nn_ranking(m: &DenseMatrix, query: usize) -> Vec<usize> {
    let q = m.row(query).to_vec();
    let mut idx: Vec<usize> = (0..m.rows()).filter(|&i| i != query).collect();
    let score = |i: usize| m.row(i).iter().zip(&q).map(|(a, b)| a * b).sum::<f64>();
    idx.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
    idx
}

fn quick_config(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 5,
        batch_size: 4,
        seed,
        ..TrainConfig::mutual_learning()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn save_load_round_trip(
        seed in any::<u64>(),
        rows in 1usize..20,
        dim in 1usize..8,
        header in any::<bool>(),
        scale in prop::sample::select(vec![1e-30, 1e-3, 1.0, 1e4, 1e30]),
    ) {
        let mut r = rng(seed);
        let words: Vec<String> = (0..rows).map(|i| format!("tok{}_{i}", r.random_range(0..1000))).collect();
        let refs: Vec<&str> = words.iter().map(String::as_str).collect();
        let mut m = random_matrix(&mut r, rows, dim, scale);
        m.set(0, 0, 0.0);
        let set = set_from("x", &refs, m);
        let format = if header { VectorFileFormat::WithHeader } else { VectorFileFormat::Plain };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        save_embedding_set(&set, &path, format).unwrap();
        let back = load_embedding_set(&path, format, "x").unwrap();
        prop_assert_eq!(back.words(), set.words());
        for (a, b) in back.matrix().as_slice().iter().zip(set.matrix().as_slice()) {
            prop_assert!((a - b).abs() <= 5e-9 * b.abs(), "{} vs {}", a, b);
        }
    }

    #[test]
    fn alignment_partitions_union(seed in any::<u64>(), count in 2usize..5) {
        let sets = random_sets(seed, count);
        let al = align(&sets).unwrap();
        let union: BTreeSet<&String> = al.union().iter().collect();
        for s in &sets {
            let known: BTreeSet<&String> = s.words().iter().collect();
            let oov = al.oov_words(s.name()).unwrap();
            let oov: BTreeSet<&String> = oov.iter().collect();
            prop_assert!(known.is_disjoint(&oov));
            prop_assert_eq!(known.union(&oov).copied().collect::<BTreeSet<_>>(), union.clone());
        }
    }

    #[test]
    fn alignment_ignores_set_order(seed in any::<u64>(), count in 2usize..5) {
        let sets = random_sets(seed, count);
        let mut reversed = sets.clone();
        reversed.reverse();
        let (a, b) = (align(&sets).unwrap(), align(&reversed).unwrap());
        prop_assert_eq!(a.intersection(), b.intersection());
        prop_assert_eq!(a.union(), b.union());
    }

    #[test]
    fn conc_dim_is_sum_of_dims(seed in any::<u64>(), count in 2usize..5) {
        let sets = random_sets(seed, count);
        let al = align(&sets).unwrap();
        let meta = conc(&sets, &SetWeights::uniform(), &al, &["set0"]).unwrap();
        prop_assert_eq!(meta.dim(), sets.iter().map(EmbeddingSet::dim).sum::<usize>());
        prop_assert_eq!(meta.words(), al.intersection());
    }

    #[test]
    fn conc_rankings_ignore_common_weight_scale(
        seed in any::<u64>(),
        w0 in 0.5f64..8.0,
        w1 in 0.5f64..8.0,
        exponent in -4i32..6,
    ) {
        let sets = random_sets(seed, 2);
        let al = align(&sets).unwrap();
        let c = 2f64.powi(exponent);
        let base = SetWeights::uniform().with("set0", w0).unwrap().with("set1", w1).unwrap();
        let scaled = SetWeights::uniform().with("set0", c * w0).unwrap().with("set1", c * w1).unwrap();
        let a = conc(&sets, &base, &al, &[] as &[&str]).unwrap();
        let b = conc(&sets, &scaled, &al, &[] as &[&str]).unwrap();
        for q in 0..a.len() {
            prop_assert_eq!(nn_ranking(a.embeddings.matrix(), q), nn_ranking(b.embeddings.matrix(), q));
        }
    }

    #[test]
    fn singular_values_ignore_row_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_matrix(&mut r, 30, 8, 1.0);
        let mut order: Vec<usize> = (0..30).collect();
        order.shuffle(&mut r);
        let a = truncated_svd(&m, 4).unwrap();
        let b = truncated_svd(&m.select_rows(&order), 4).unwrap();
        for (x, y) in a.singular_values.iter().zip(&b.singular_values) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn full_rank_svd_reconstructs(seed in any::<u64>(), rows in 2usize..25, cols in 2usize..25) {
        let mut r = rng(seed);
        let m = random_matrix(&mut r, rows, cols, 1.0);
        let svd = truncated_svd(&m, rows.min(cols)).unwrap();
        let err = svd.reconstruct().sub(&m).unwrap().frobenius_norm() / m.frobenius_norm();
        prop_assert!(err < 1e-6);
    }

    #[test]
    fn svd_meta_rows_have_unit_norm(seed in any::<u64>()) {
        let sets = random_sets(seed, 3);
        let al = align(&sets).unwrap();
        let c = conc(&sets, &SetWeights::uniform(), &al, &[] as &[&str]).unwrap();
        let d = c.dim().min(c.len());
        let svd = svd_meta(&c, d).unwrap();
        prop_assert_eq!(svd.dim(), d);
        let renormalized = normalize_rows(svd.embeddings.matrix());
        for (a, b) in renormalized.as_slice().iter().zip(svd.embeddings.matrix().as_slice()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn extension_keeps_known_rows_and_covers_union(
        seed in any::<u64>(),
        count in 2usize..4,
        strategy in prop::sample::select(vec![OovFillStrategy::Rnd, OovFillStrategy::Avg, OovFillStrategy::Ml]),
    ) {
        let sets = random_sets(seed, count);
        let al = align(&sets).unwrap();
        let extended = extend_all(&sets, &quick_config(seed), strategy).unwrap();
        for (orig, ext) in sets.iter().zip(&extended) {
            prop_assert_eq!(ext.words(), al.union());
            prop_assert_eq!(ext.name(), orig.name());
            for (w, v) in orig.iter() {
                prop_assert_eq!(ext.get(w).unwrap(), v);
            }
        }
    }

    #[test]
    fn ml_fill_is_within_projected_hull(seed in any::<u64>(), count in 3usize..5) {
        let sets = random_sets(seed, count);
        let al = align(&sets).unwrap();
        let mut r: ChaCha8Rng = rng(seed ^ 0xabc);
        let target = &sets[0];
        let others = &sets[1..];
        let maps: Vec<ProjectionMap> = others
            .iter()
            .map(|o| ProjectionMap {
                source_set: o.name().into(),
                target_set: target.name().into(),
                m: random_matrix(&mut r, target.dim(), o.dim(), 1.0),
                train_loss: 0.0,
            })
            .collect();
        let filled = fill_oov(target, others, &maps, &al, OovFillStrategy::Ml, seed).unwrap();
        for w in al.oov_words(target.name()).unwrap() {
            let projected: Vec<Vec<f64>> = others
                .iter()
                .zip(&maps)
                .filter_map(|(o, m)| o.get(&w).map(|x| m.apply(x).unwrap()))
                .collect();
            prop_assert!(!projected.is_empty());
            for (k, &v) in filled.get(&w).unwrap().iter().enumerate() {
                let lo = projected.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
                let hi = projected.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn similarity_ignores_vector_scale(seed in any::<u64>(), exps in prop::collection::vec(-8i32..8, 12)) {
        let mut r = rng(seed);
        let base = set_from("x", &POOL, random_matrix(&mut r, POOL.len(), 4, 1.0));
        let mut scaled = base.matrix().clone();
        for (i, e) in exps.iter().enumerate() {
            scaled.row_mut(i).iter_mut().for_each(|v| *v *= 2f64.powi(*e));
        }
        let scaled = base.with_matrix(scaled).unwrap();
        let pairs = (0..20)
            .map(|_| {
                let a = POOL[r.random_range(0..POOL.len())];
                let b = if r.random_bool(0.2) { "zebra" } else { POOL[r.random_range(0..POOL.len())] };
                (a.to_string(), b.to_string(), r.random_range(0.0..10.0))
            })
            .collect();
        let ds = SimilarityDataset { name: "s".into(), pairs };
        match (eval_similarity(&base, &ds), eval_similarity(&scaled, &ds)) {
            (Ok(a), Ok(b)) => {
                prop_assert!((a.score - b.score).abs() < 1e-9);
                prop_assert_eq!(a.total(), ds.pairs.len());
            }
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "inconsistent: {:?}", other),
        }
    }

    #[test]
    fn analogy_counts_cover_dataset(seed in any::<u64>(), n in 1usize..30) {
        let mut r = rng(seed);
        let emb = set_from("x", &POOL[..8], random_matrix(&mut r, 8, 3, 1.0));
        let pick = |r: &mut ChaCha8Rng| POOL[r.random_range(0..POOL.len())].to_string();
        let questions = (0..n)
            .map(|i| AnalogyQuestion {
                a: pick(&mut r),
                b: pick(&mut r),
                c: pick(&mut r),
                d: pick(&mut r),
                category: if i % 3 == 0 { AnalogyCategory::Syntactic } else { AnalogyCategory::Semantic },
            })
            .collect();
        let ds = AnalogyDataset { name: "a".into(), questions };
        let rep = eval_analogy(&emb, &ds);
        prop_assert_eq!(rep.total.total(), n);
        prop_assert_eq!(rep.semantic.total(), ds.count(AnalogyCategory::Semantic));
        prop_assert_eq!(rep.syntactic.total(), ds.count(AnalogyCategory::Syntactic));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn training_is_deterministic(seed in any::<u64>()) {
        let sets = random_sets(seed, 3);
        let al = align(&sets).unwrap();
        let cfg = TrainConfig { epochs: 4, batch_size: 3, seed, ..TrainConfig::one_to_n() };
        let a = train_1ton(&sets, &al, &SetWeights::uniform(), 3, &cfg).unwrap();
        let b = train_1ton(&sets, &al, &SetWeights::uniform(), 3, &cfg).unwrap();
        prop_assert_eq!(a.meta.embeddings.matrix().as_slice(), b.meta.embeddings.matrix().as_slice());
        let a = train_1ton_plus(&sets, &al, &SetWeights::uniform(), 3, &cfg).unwrap();
        let b = train_1ton_plus(&sets, &al, &SetWeights::uniform(), 3, &cfg).unwrap();
        prop_assert_eq!(a.meta.embeddings.matrix().as_slice(), b.meta.embeddings.matrix().as_slice());
        for (x, y) in a.extended.iter().zip(&b.extended) {
            prop_assert_eq!(x.matrix().as_slice(), y.matrix().as_slice());
        }
    }

    #[test]
    fn one_to_n_plus_never_moves_known_rows(seed in any::<u64>()) {
        let sets = random_sets(seed, 3);
        let al = align(&sets).unwrap();
        let cfg = TrainConfig { epochs: 6, batch_size: 5, seed, ..TrainConfig::one_to_n_plus() };
        let out = train_1ton_plus(&sets, &al, &SetWeights::uniform(), 4, &cfg).unwrap();
        for (orig, ext) in sets.iter().zip(&out.extended) {
            for (w, v) in orig.iter() {
                prop_assert_eq!(ext.get(w).unwrap(), v);
            }
        }
    }
}

#[test]
fn avg_filled_analogy_falls_back_to_first_word() {
    // d1..d5 are unknown to `t`, so AVG gives them one shared vector
    let t = set_from(
        "t",
        &["base", "m", "n"],
        DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 2.0]]).unwrap(),
    );
    let other = set_from(
        "o",
        &["base", "d1", "d2", "d3", "d4", "d5"],
        DenseMatrix::identity(6),
    );
    let al = align(&[t.clone(), other.clone()]).unwrap();
    let filled = fill_oov(&t, &[other], &[], &al, OovFillStrategy::Avg, 0).unwrap();
    let solver = metaemb::eval::AnalogySolver::new(&filled);
    assert_eq!(solver.answer("d4", "d3", "d2").unwrap(), Some("d1"));
    assert_eq!(solver.answer("d1", "d2", "d3").unwrap(), Some("d4"));
    assert_eq!(solver.answer("d5", "d1", "d4").unwrap(), Some("d2"));

    let q = |a: &str, b: &str, c: &str, d: &str| AnalogyQuestion {
        a: a.into(),
        b: b.into(),
        c: c.into(),
        d: d.into(),
        category: AnalogyCategory::Semantic,
    };
    let ds = AnalogyDataset {
        name: "g".into(),
        questions: vec![
            q("d4", "d3", "d2", "d1"),
            q("d1", "d2", "d3", "d5"),
            q("d5", "d1", "d4", "d3"),
        ],
    };
    let rep = eval_analogy(&filled, &ds);
    assert_eq!(rep.total.evaluated_count, 3);
    assert!((rep.total.score - 100.0 / 3.0).abs() < 1e-9);
}
