use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClassifyError;
use crate::corpus::{Corpus, Genre, TextClass};

/// Fold index of every document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    k: usize,
    folds: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.folds.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.folds.iter().map(|(id, &f)| (id.as_str(), f))
    }

    /// The same assignment with one document dropped.
    pub fn without(&self, id: &str) -> FoldAssignment {
        let mut folds = self.folds.clone();
        folds.remove(id);
        FoldAssignment { k: self.k, folds }
    }
}

/// Genre-by-class stratified fold assignment.
///
/// Each (genre, class) cell is shuffled with a seeded generator and dealt
/// round-robin over the folds. The dealer position carries over from one cell
/// to the next, so fold totals stay balanced as well.
pub fn stratified_kfold(corpus: &Corpus, k: usize, seed: u64) -> Result<FoldAssignment, ClassifyError> {
    if k < 2 {
        return Err(ClassifyError::TooFewFolds(k));
    }
    if corpus.is_empty() {
        return Err(ClassifyError::EmptyCell);
    }
    let mut cells: BTreeMap<(TextClass, Genre), Vec<&str>> = BTreeMap::new();
    for doc in &corpus.documents {
        cells
            .entry((doc.class, doc.genre))
            .or_default()
            .push(doc.id.as_str());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = BTreeMap::new();
    let mut dealer = 0usize;
    for ids in cells.values_mut() {
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        for id in ids.iter() {
            folds.insert(id.to_string(), dealer);
            dealer = (dealer + 1) % k;
        }
    }
    Ok(FoldAssignment { k, folds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn corpus(cells: &[(Genre, TextClass, usize)]) -> Corpus {
        let mut docs = Vec::new();
        for &(g, c, n) in cells {
            for i in 0..n {
                docs.push(Document {
                    id: format!("{g}-{c}-{i}"),
                    genre: g,
                    class: c,
                    sentences: Vec::new(),
                });
            }
        }
        Corpus::new(docs).unwrap()
    }

    #[test]
    fn single_cell() {
        let c = corpus(&[(Genre::News, TextClass::Original, 10)]);
        let a = stratified_kfold(&c, 5, 1).unwrap();
        let mut sizes = [0; 5];
        for (_, f) in a.iter() {
            sizes[f] += 1;
        }
        assert_eq!(sizes, [2; 5]);
    }

    #[test]
    fn seed_changes_membership_not_sizes() {
        let c = corpus(&[
            (Genre::News, TextClass::Original, 7),
            (Genre::Science, TextClass::Original, 4),
            (Genre::News, TextClass::Translated, 7),
            (Genre::Science, TextClass::Translated, 4),
        ]);
        let a = stratified_kfold(&c, 3, 1).unwrap();
        let b = stratified_kfold(&c, 3, 2).unwrap();
        assert_ne!(a, b);
        assert_eq!(a, stratified_kfold(&c, 3, 1).unwrap());
        for asg in [&a, &b] {
            let mut cell_sizes: BTreeMap<(Genre, TextClass), Vec<usize>> = BTreeMap::new();
            for d in &c.documents {
                cell_sizes.entry((d.genre, d.class)).or_insert_with(|| vec![0; 3])
                    [asg.fold_of(&d.id).unwrap()] += 1;
            }
            for sizes in cell_sizes.values() {
                let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
                assert!(hi - lo <= 1);
            }
        }
    }

    #[test]
    fn errors() {
        let c = corpus(&[(Genre::News, TextClass::Original, 4)]);
        assert!(matches!(stratified_kfold(&c, 1, 0), Err(ClassifyError::TooFewFolds(1))));
        assert!(matches!(
            stratified_kfold(&Corpus::default(), 5, 0),
            Err(ClassifyError::EmptyCell)
        ));
    }
}
