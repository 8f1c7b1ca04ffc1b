//! Tokenization, vocabulary construction and TF-IDF vectorization.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::ReviewError;

static STOPWORD_LIST: &str = include_str!("../../data/stopwords.txt");

/// Corpora at least this large drop terms seen in fewer than `MIN_DF` documents.
pub const PRUNE_MIN_CORPUS: usize = 10;
pub const MIN_DF: usize = 2;

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORD_LIST
            .lines()
            .map(str::trim)
            .filter(|w| !w.is_empty())
            .collect()
    })
}

/// Lowercases, splits on every non-alphanumeric character, and drops
/// one-character tokens and stopwords.
pub fn tokenize(text: &str) -> Vec<String> {
    let stop = stopwords();
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2 && !stop.contains(t))
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermStats {
    pub index: u32,
    pub document_frequency: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: BTreeMap<String, TermStats>,
    document_count: u32,
}

impl Vocabulary {
    pub fn build<T: AsRef<[String]>>(corpus: &[T]) -> Result<Vocabulary, ReviewError> {
        if corpus.iter().all(|doc| doc.as_ref().is_empty()) {
            return Err(ReviewError::EmptyCorpus);
        }
        let mut df: BTreeMap<&str, u32> = BTreeMap::new();
        for doc in corpus {
            let distinct: BTreeSet<&str> = doc.as_ref().iter().map(String::as_str).collect();
            for term in distinct {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let prune = corpus.len() >= PRUNE_MIN_CORPUS;
        let terms = df
            .into_iter()
            .filter(|&(_, n)| !prune || n as usize >= MIN_DF)
            .enumerate()
            .map(|(i, (term, n))| {
                (
                    term.to_owned(),
                    TermStats {
                        index: i as u32,
                        document_frequency: n,
                    },
                )
            })
            .collect();
        Ok(Vocabulary {
            terms,
            document_count: corpus.len() as u32,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn document_count(&self) -> u32 {
        self.document_count
    }

    pub fn get(&self, term: &str) -> Option<TermStats> {
        self.terms.get(term).copied()
    }

    /// Terms in index order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, TermStats)> {
        self.terms.iter().map(|(t, s)| (t.as_str(), *s))
    }

    /// Smoothed inverse document frequency: ln((1 + N) / (1 + df)) + 1.
    pub fn idf(&self, stats: TermStats) -> f64 {
        ((1.0 + self.document_count as f64) / (1.0 + stats.document_frequency as f64)).ln() + 1.0
    }

    pub fn vectorize(&self, tokens: &[String]) -> SparseVector {
        let mut counts: BTreeMap<u32, (u32, TermStats)> = BTreeMap::new();
        for tok in tokens {
            if let Some(stats) = self.get(tok) {
                counts.entry(stats.index).or_insert((0, stats)).0 += 1;
            }
        }
        let mut entries: Vec<(u32, f64)> = counts
            .into_iter()
            .map(|(idx, (tf, stats))| (idx, tf as f64 * self.idf(stats)))
            .collect();
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut entries {
                *w /= norm;
            }
        }
        SparseVector { entries }
    }
}

pub fn build_vocabulary<T: AsRef<[String]>>(corpus: &[T]) -> Result<Vocabulary, ReviewError> {
    Vocabulary::build(corpus)
}

pub fn tfidf_vector(tokens: &[String], vocab: &Vocabulary) -> SparseVector {
    vocab.vectorize(tokens)
}

/// Sparse real vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Sorts by index and sums repeated indices.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> SparseVector {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(pairs.len());
        for (i, w) in pairs {
            match entries.last_mut() {
                Some((j, acc)) if *j == i => *acc += w,
                _ => entries.push((i, w)),
            }
        }
        SparseVector { entries }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, w)| dense.get(i as usize).map_or(0.0, |d| d * w))
            .sum()
    }
}
