//! Vocabulary intersection, union and per-set coverage.

use std::collections::{BTreeSet, HashMap};

use crate::embedding_io::EmbeddingSet;
use crate::error::{Error, Result};

/// Coverage of the union vocabulary by `c` embedding sets.
///
/// `intersection` and `union` are sorted lexicographically (byte order).
#[derive(Clone, Debug)]
pub struct VocabAlignment {
    sets: Vec<String>,
    intersection: Vec<String>,
    union: Vec<String>,
    union_index: HashMap<String, usize>,
    /// `rows[s][u]`: row of union word `u` in set `s`, if present.
    rows: Vec<Vec<Option<usize>>>,
}

impl VocabAlignment {
    /// Trivial alignment of one set with itself.
    pub fn single(set: &EmbeddingSet) -> Result<Self> {
        align_any(std::slice::from_ref(set))
    }

    pub fn sets(&self) -> &[String] {
        &self.sets
    }

    pub fn num_sets(&self) -> usize {
        self.sets.len()
    }

    pub fn intersection(&self) -> &[String] {
        &self.intersection
    }

    pub fn union(&self) -> &[String] {
        &self.union
    }

    pub fn set_position(&self, name: &str) -> Result<usize> {
        self.sets
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::UnknownSet(name.to_owned()))
    }

    pub fn union_position(&self, word: &str) -> Option<usize> {
        self.union_index.get(word).copied()
    }

    /// Row of `word` in set number `set`, if that set knows it.
    pub fn row(&self, set: usize, word: &str) -> Option<usize> {
        self.union_position(word).and_then(|u| self.rows[set][u])
    }

    /// Rows of every union word in set number `set`, aligned with
    /// [`union`](Self::union).
    pub fn union_rows(&self, set: usize) -> &[Option<usize>] {
        &self.rows[set]
    }

    pub fn is_present(&self, set: usize, union_pos: usize) -> bool {
        self.rows[set][union_pos].is_some()
    }

    /// Presence mask of one set over the union.
    pub fn presence(&self, set: usize) -> Vec<bool> {
        self.rows[set].iter().map(Option::is_some).collect()
    }

    /// Union words absent from the named set, in union order.
    pub fn oov_words(&self, set_name: &str) -> Result<Vec<String>> {
        let s = self.set_position(set_name)?;
        Ok(self
            .union
            .iter()
            .zip(&self.rows[s])
            .filter(|(_, row)| row.is_none())
            .map(|(w, _)| w.clone())
            .collect())
    }
}

/// Aligns the vocabularies of two or more embedding sets.
pub fn align(sets: &[EmbeddingSet]) -> Result<VocabAlignment> {
    if sets.len() < 2 {
        return Err(Error::TooFewSets {
            required: 2,
            found: sets.len(),
        });
    }
    align_any(sets)
}

fn align_any(sets: &[EmbeddingSet]) -> Result<VocabAlignment> {
    if sets.is_empty() {
        return Err(Error::TooFewSets {
            required: 1,
            found: 0,
        });
    }
    let mut names = BTreeSet::new();
    for s in sets {
        if !names.insert(s.name()) {
            return Err(Error::InvalidConfig(format!(
                "embedding set name `{}` used twice",
                s.name()
            )));
        }
    }

    let union: Vec<String> = sets
        .iter()
        .flat_map(|s| s.words().iter())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .cloned()
        .collect();
    let union_index: HashMap<String, usize> = union
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i))
        .collect();
    let rows: Vec<Vec<Option<usize>>> = sets
        .iter()
        .map(|s| union.iter().map(|w| s.index_of(w)).collect())
        .collect();
    let intersection = union
        .iter()
        .enumerate()
        .filter(|&(u, _)| rows.iter().all(|r| r[u].is_some()))
        .map(|(_, w)| w.clone())
        .collect();

    Ok(VocabAlignment {
        sets: sets.iter().map(|s| s.name().to_owned()).collect(),
        intersection,
        union,
        union_index,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use proptest::prelude::*;

    fn set(name: &str, words: &[&str]) -> EmbeddingSet {
        let words: Vec<String> = words.iter().map(|w| w.to_string()).collect();
        let m = DenseMatrix::from_vec(words.len(), 1, (0..words.len()).map(|i| i as f64).collect())
            .unwrap();
        EmbeddingSet::new(name, words, m).unwrap()
    }

    #[test]
    fn two_tiny_sets() {
        let a = align(&[set("s1", &["a", "b"]), set("s2", &["b", "c"])]).unwrap();
        assert_eq!(a.intersection(), &["b"]);
        assert_eq!(a.union(), &["a", "b", "c"]);
        assert_eq!(a.oov_words("s1").unwrap(), vec!["c"]);
        assert_eq!(a.oov_words("s2").unwrap(), vec!["a"]);
        assert_eq!(a.presence(0), vec![true, true, false]);
        assert_eq!(a.row(1, "c"), Some(1));
    }

    #[test]
    fn identical_sets() {
        let a = align(&[set("x", &["q", "p"]), set("y", &["p", "q"])]).unwrap();
        assert_eq!(a.intersection(), a.union());
        assert_eq!(a.union(), &["p", "q"]);
        assert!(a.oov_words("x").unwrap().is_empty());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            align(&[set("x", &["a"])]),
            Err(Error::TooFewSets { found: 1, .. })
        ));
        let a = align(&[set("x", &["a"]), set("y", &["a"])]).unwrap();
        assert!(matches!(a.oov_words("z"), Err(Error::UnknownSet(_))));
        assert!(align(&[set("x", &["a"]), set("x", &["b"])]).is_err());
    }

    fn vocab_strategy() -> impl Strategy<Value = Vec<Vec<String>>> {
        let word = (0u8..30).prop_map(|i| format!("w{i}"));
        prop::collection::vec(prop::collection::btree_set(word, 1..20), 2..6)
            .prop_map(|sets| sets.into_iter().map(|s| s.into_iter().collect()).collect())
    }

    proptest! {
        #[test]
        fn matches_nested_loop_oracle(vocabs in vocab_strategy()) {
            let sets: Vec<EmbeddingSet> = vocabs
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let refs: Vec<&str> = v.iter().map(String::as_str).collect();
                    set(&format!("s{i}"), &refs)
                })
                .collect();
            let a = align(&sets).unwrap();

            let mut union: Vec<String> = Vec::new();
            for v in &vocabs {
                for w in v {
                    if !union.contains(w) {
                        union.push(w.clone());
                    }
                }
            }
            union.sort();
            let mut inter = Vec::new();
            for w in &union {
                if vocabs.iter().all(|v| v.iter().any(|x| x == w)) {
                    inter.push(w.clone());
                }
            }
            prop_assert_eq!(a.union(), union.as_slice());
            prop_assert_eq!(a.intersection(), inter.as_slice());

            for (i, v) in vocabs.iter().enumerate() {
                let oov = a.oov_words(&format!("s{i}")).unwrap();
                let diff: Vec<String> = union.iter().filter(|w| !v.contains(w)).cloned().collect();
                prop_assert_eq!(&oov, &diff);
                prop_assert!(oov.iter().all(|w| !v.contains(w)));
                prop_assert_eq!(oov.len() + v.len(), union.len());
            }
            let min = vocabs.iter().map(Vec::len).min().unwrap();
            let max = vocabs.iter().map(Vec::len).max().unwrap();
            prop_assert!(a.intersection().len() <= min && a.union().len() >= max);

            let mut reversed = sets.clone();
            reversed.reverse();
            let b = align(&reversed).unwrap();
            prop_assert_eq!(b.union(), a.union());
            prop_assert_eq!(b.intersection(), a.intersection());
        }
    }
}
