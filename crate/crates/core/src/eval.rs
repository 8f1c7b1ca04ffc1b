//! Ranking metrics: precision at k, reciprocal rank, and NDCG.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Grades at or above this are relevant for binary metrics.
pub const RELEVANT_GRADE: u8 = 3;

/// One judgment line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qrel {
    pub request_id: String,
    pub venue_id: String,
    pub grade: u8,
}

/// Graded judgments keyed by (query, venue). Unjudged pairs grade 0.
#[derive(Debug, Clone, Default)]
pub struct QrelSet {
    grades: HashMap<String, HashMap<String, u8>>,
}

impl QrelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query_id: impl Into<String>, venue_id: impl Into<String>, grade: u8) {
        self.grades
            .entry(query_id.into())
            .or_default()
            .insert(venue_id.into(), grade);
    }

    pub fn grade(&self, query_id: &str, venue_id: &str) -> u8 {
        self.grades
            .get(query_id)
            .and_then(|q| q.get(venue_id))
            .copied()
            .unwrap_or(0)
    }

    pub fn is_relevant(&self, query_id: &str, venue_id: &str) -> bool {
        self.grade(query_id, venue_id) >= RELEVANT_GRADE
    }

    pub fn query_grades(&self, query_id: &str) -> impl Iterator<Item = u8> + '_ {
        self.grades
            .get(query_id)
            .into_iter()
            .flat_map(|q| q.values().copied())
    }

    pub fn contains_query(&self, query_id: &str) -> bool {
        self.grades.contains_key(query_id)
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.grades.keys().map(String::as_str)
    }
}

impl FromIterator<Qrel> for QrelSet {
    fn from_iter<I: IntoIterator<Item = Qrel>>(iter: I) -> Self {
        let mut set = QrelSet::new();
        for q in iter {
            set.insert(q.request_id, q.venue_id, q.grade);
        }
        set
    }
}

/// Relevant items among the first `k` positions divided by `k`; short
/// rankings are not given credit for the missing positions.
pub fn precision_at_k<S: AsRef<str>>(
    ranking: &[S],
    qrels: &QrelSet,
    query_id: &str,
    k: usize,
) -> f64 {
    assert!(k >= 1, "precision cutoff must be positive");
    let hits = ranking
        .iter()
        .take(k)
        .filter(|v| qrels.is_relevant(query_id, v.as_ref()))
        .count();
    hits as f64 / k as f64
}

pub fn reciprocal_rank<S: AsRef<str>>(ranking: &[S], qrels: &QrelSet, query_id: &str) -> f64 {
    ranking
        .iter()
        .position(|v| qrels.is_relevant(query_id, v.as_ref()))
        .map_or(0.0, |p| 1.0 / (p + 1) as f64)
}

/// Mean reciprocal rank over `(query_id, ranking)` pairs.
pub fn mrr<Q, S>(rankings: &[(Q, Vec<S>)], qrels: &QrelSet) -> f64
where
    Q: AsRef<str>,
    S: AsRef<str>,
{
    assert!(!rankings.is_empty(), "mrr needs at least one query");
    rankings
        .iter()
        .map(|(q, r)| reciprocal_rank(r, qrels, q.as_ref()))
        .sum::<f64>()
        / rankings.len() as f64
}

pub fn gain(grade: u8) -> f64 {
    (1u64 << grade) as f64 - 1.0
}

/// 1 / log2(position + 1) for 1-based positions.
pub fn discount(position: usize) -> f64 {
    1.0 / ((position + 1) as f64).log2()
}

pub fn dcg_at_k(grades: impl IntoIterator<Item = u8>, k: usize) -> f64 {
    grades
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, g)| gain(g) * discount(i + 1))
        .sum()
}

/// Best achievable DCG@k over the given grades.
pub fn ideal_dcg_at_k(grades: impl IntoIterator<Item = u8>, k: usize) -> f64 {
    let mut sorted: Vec<u8> = grades.into_iter().collect();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    dcg_at_k(sorted, k)
}

/// NDCG@k of grades listed in ranked order, normalized by the ideal ordering
/// of those same grades. Zero when every grade is zero.
pub fn ndcg_of_grades(grades: &[u8], k: usize) -> f64 {
    let ideal = ideal_dcg_at_k(grades.iter().copied(), k);
    if ideal == 0.0 {
        0.0
    } else {
        dcg_at_k(grades.iter().copied(), k) / ideal
    }
}

/// NDCG@k of a ranking against the query's judgments; the ideal ordering is
/// taken over every judged venue of the query.
pub fn ndcg_at_k<S: AsRef<str>>(ranking: &[S], qrels: &QrelSet, query_id: &str, k: usize) -> f64 {
    assert!(k >= 1, "ndcg cutoff must be positive");
    let ideal = ideal_dcg_at_k(qrels.query_grades(query_id), k);
    if ideal == 0.0 {
        return 0.0;
    }
    let dcg = dcg_at_k(ranking.iter().map(|v| qrels.grade(query_id, v.as_ref())), k);
    dcg / ideal
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub request_id: String,
    pub p5: f64,
    pub rr: f64,
    pub ndcg5: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub queries: usize,
    pub p5: f64,
    pub mrr: f64,
    pub ndcg5: f64,
}

/// Per-query P@5, reciprocal rank and NDCG@5, plus their macro-means.
pub fn evaluate_rankings<S: AsRef<str>>(
    rankings: &[(String, Vec<S>)],
    qrels: &QrelSet,
) -> (Vec<QueryMetrics>, MetricSummary) {
    let per_query: Vec<QueryMetrics> = rankings
        .iter()
        .map(|(q, r)| QueryMetrics {
            request_id: q.clone(),
            p5: precision_at_k(r, qrels, q, 5),
            rr: reciprocal_rank(r, qrels, q),
            ndcg5: ndcg_at_k(r, qrels, q, 5),
        })
        .collect();
    let n = per_query.len().max(1) as f64;
    let summary = MetricSummary {
        queries: per_query.len(),
        p5: per_query.iter().map(|m| m.p5).sum::<f64>() / n,
        mrr: per_query.iter().map(|m| m.rr).sum::<f64>() / n,
        ndcg5: per_query.iter().map(|m| m.ndcg5).sum::<f64>() / n,
    };
    (per_query, summary)
}
