use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::FEATURE_COUNT;
use super::lambda::{compare_ranked, query_lambdas, ranked_order, NDCG_CUTOFF};
use super::tree::{fit_regression_tree, RegressionTree, TreeConfig};
use super::{QueryGroup, RankError, RankingInstance};
use crate::eval::ndcg_of_grades;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaMartConfig {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    pub min_instances_per_leaf: usize,
    /// Recorded with the model; boosting itself draws no randomness.
    pub seed: u64,
}

impl Default for LambdaMartConfig {
    fn default() -> Self {
        LambdaMartConfig {
            n_trees: 100,
            learning_rate: 0.1,
            max_leaves: 8,
            min_instances_per_leaf: 5,
            seed: 42,
        }
    }
}

impl LambdaMartConfig {
    pub fn tree_config(&self) -> TreeConfig {
        TreeConfig {
            max_leaves: self.max_leaves,
            min_instances_per_leaf: self.min_instances_per_leaf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaMartModel {
    pub trees: Vec<RegressionTree>,
    pub learning_rate: f64,
    pub config: LambdaMartConfig,
    /// Mean training NDCG@5 before any tree and after each round.
    pub training_ndcg: Vec<f64>,
}

impl LambdaMartModel {
    pub fn empty(config: LambdaMartConfig) -> Self {
        LambdaMartModel {
            trees: Vec::new(),
            learning_rate: config.learning_rate,
            config,
            training_ndcg: Vec::new(),
        }
    }

    pub fn predict(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        self.trees
            .iter()
            .map(|t| self.learning_rate * t.predict(x))
            .sum()
    }
}

/// Lambdas and hessians of one query's instances under `current_scores`.
/// A query with fewer than two instances gets zeros.
pub fn lambda_gradients(
    query_instances: &[RankingInstance],
    current_scores: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), RankError> {
    let labels = query_instances
        .iter()
        .map(|i| {
            i.label.ok_or_else(|| RankError::MissingLabel {
                query_id: i.query_id.clone(),
                venue_id: i.venue_id.clone(),
            })
        })
        .collect::<Result<Vec<u8>, _>>()?;
    let ids: Vec<&str> = query_instances
        .iter()
        .map(|i| i.venue_id.as_str())
        .collect();
    Ok(query_lambdas(&labels, current_scores, &ids, NDCG_CUTOFF))
}

struct PreparedQuery<'a> {
    labels: Vec<u8>,
    ids: Vec<&'a str>,
    /// Offset of the query's first row in the pooled arrays.
    offset: usize,
}

fn mean_ndcg(queries: &[PreparedQuery], scores: &[f64]) -> f64 {
    let (sum, n) = queries
        .iter()
        .filter(|q| q.labels.iter().any(|&l| l > 0))
        .map(|q| {
            let s = &scores[q.offset..q.offset + q.labels.len()];
            let ranked: Vec<u8> = ranked_order(s, &q.ids)
                .into_iter()
                .map(|i| q.labels[i])
                .collect();
            ndcg_of_grades(&ranked, NDCG_CUTOFF)
        })
        .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Boosts `config.n_trees` regression trees on pooled per-query lambdas,
/// stopping early only when a round yields no gradient at all.
pub fn train_lambdamart(
    train: &[QueryGroup],
    config: &LambdaMartConfig,
) -> Result<LambdaMartModel, RankError> {
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(RankError::InvalidConfig(format!(
            "learning_rate must be positive, got {}",
            config.learning_rate
        )));
    }
    if config.max_leaves < 1 {
        return Err(RankError::InvalidConfig(
            "max_leaves must be at least 1".into(),
        ));
    }

    let mut rows: Vec<[f64; FEATURE_COUNT]> = Vec::new();
    let mut queries = Vec::with_capacity(train.len());
    for group in train {
        let labels = group.labels()?;
        queries.push(PreparedQuery {
            labels,
            ids: group.venue_ids(),
            offset: rows.len(),
        });
        rows.extend(group.instances.iter().map(|i| i.features.values));
    }
    let trainable = queries
        .iter()
        .any(|q| q.labels.len() >= 2 && q.labels.iter().any(|&l| l != q.labels[0]));
    if !trainable {
        return Err(RankError::UntrainableDataset);
    }

    let mut model = LambdaMartModel::empty(*config);
    let mut scores = vec![0.0; rows.len()];
    model.training_ndcg.push(mean_ndcg(&queries, &scores));
    let tree_config = config.tree_config();

    for _ in 0..config.n_trees {
        let per_query: Vec<(Vec<f64>, Vec<f64>)> = queries
            .par_iter()
            .map(|q| {
                let s = &scores[q.offset..q.offset + q.labels.len()];
                query_lambdas(&q.labels, s, &q.ids, NDCG_CUTOFF)
            })
            .collect();
        let mut lambdas = Vec::with_capacity(rows.len());
        let mut hessians = Vec::with_capacity(rows.len());
        for (l, h) in per_query {
            lambdas.extend(l);
            hessians.extend(h);
        }
        if lambdas.iter().all(|&l| l == 0.0) {
            break;
        }

        let tree = fit_regression_tree(&rows, &lambdas, &hessians, &tree_config);
        for (score, row) in scores.iter_mut().zip(&rows) {
            *score += config.learning_rate * tree.predict(row);
        }
        model.trees.push(tree);
        model.training_ndcg.push(mean_ndcg(&queries, &scores));
    }
    Ok(model)
}

/// Candidates by descending model score, ties by ascending venue id.
pub fn rank_candidates(
    model: &LambdaMartModel,
    instances: &[RankingInstance],
) -> Vec<(String, f64)> {
    let mut scored: Vec<(String, f64)> = instances
        .iter()
        .map(|i| (i.venue_id.clone(), model.predict(&i.features.values)))
        .collect();
    scored.sort_by(|a, b| compare_ranked(a.1, &a.0, b.1, &b.0));
    scored
}
