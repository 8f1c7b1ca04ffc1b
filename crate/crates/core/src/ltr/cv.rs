use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lambdamart::{rank_candidates, train_lambdamart, LambdaMartConfig};
use super::{QueryGroup, RankError};
use crate::eval::{evaluate_rankings, QrelSet, RELEVANT_GRADE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub held_out: Vec<String>,
    pub p5: f64,
    pub mrr: f64,
    pub ndcg5: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldReport>,
    pub mean_p5: f64,
    pub mean_mrr: f64,
    pub mean_ndcg5: f64,
    /// Expected P@5 of a uniformly random candidate order, averaged over queries.
    pub random_p5: f64,
}

/// Fold index of every query id: ids are sorted, shuffled with the seed, and
/// dealt round-robin.
pub fn assign_folds(query_ids: &[&str], k: usize, seed: u64) -> Vec<(String, usize)> {
    let mut ids: Vec<&str> = query_ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    ids.into_iter()
        .enumerate()
        .map(|(pos, id)| (id.to_owned(), pos % k))
        .collect()
}

/// Expected precision at 5 of a random permutation of the query's candidates.
pub fn random_ranking_p5(labels: &[u8]) -> f64 {
    let n = labels.len();
    if n == 0 {
        return 0.0;
    }
    let relevant = labels.iter().filter(|&&l| l >= RELEVANT_GRADE).count();
    relevant as f64 / n as f64 * n.min(5) as f64 / 5.0
}

pub fn cross_validate(
    queries: &[QueryGroup],
    k: usize,
    seed: u64,
    config: &LambdaMartConfig,
) -> Result<CvReport, RankError> {
    if k < 2 {
        return Err(RankError::InvalidConfig(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    let ids: Vec<&str> = queries.iter().map(|q| q.query_id.as_str()).collect();
    if ids.len() < k {
        return Err(RankError::InsufficientQueries {
            needed: k,
            got: ids.len(),
        });
    }
    let assignment: std::collections::HashMap<String, usize> =
        assign_folds(&ids, k, seed).into_iter().collect();

    let mut qrels = QrelSet::new();
    let mut random_p5 = 0.0;
    for q in queries {
        let labels = q.labels()?;
        for (inst, &l) in q.instances.iter().zip(&labels) {
            qrels.insert(q.query_id.clone(), inst.venue_id.clone(), l);
        }
        random_p5 += random_ranking_p5(&labels);
    }
    random_p5 /= queries.len() as f64;

    let folds = (0..k)
        .into_par_iter()
        .map(|fold| -> Result<FoldReport, RankError> {
            let (held, train): (Vec<&QueryGroup>, Vec<&QueryGroup>) = queries
                .iter()
                .partition(|q| assignment[&q.query_id] == fold);
            let train: Vec<QueryGroup> = train.into_iter().cloned().collect();
            let model = train_lambdamart(&train, config)?;
            let rankings: Vec<(String, Vec<String>)> = held
                .iter()
                .map(|q| {
                    let ranked = rank_candidates(&model, &q.instances);
                    (
                        q.query_id.clone(),
                        ranked.into_iter().map(|(v, _)| v).collect(),
                    )
                })
                .collect();
            let (_, summary) = evaluate_rankings(&rankings, &qrels);
            Ok(FoldReport {
                fold,
                held_out: held.iter().map(|q| q.query_id.clone()).collect(),
                p5: summary.p5,
                mrr: summary.mrr,
                ndcg5: summary.ndcg5,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mean = |f: fn(&FoldReport) -> f64| folds.iter().map(f).sum::<f64>() / folds.len() as f64;
    Ok(CvReport {
        k,
        seed,
        mean_p5: mean(|f| f.p5),
        mean_mrr: mean(|f| f.mrr),
        mean_ndcg5: mean(|f| f.ndcg5),
        random_p5,
        folds,
    })
}
