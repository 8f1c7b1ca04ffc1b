//! Pairwise lambda gradients weighted by the NDCG@k change of swapping a pair.

use std::cmp::Ordering;

use crate::eval::{discount, gain, ideal_dcg_at_k};

/// Cutoff of the NDCG objective the ranker optimizes.
pub const NDCG_CUTOFF: usize = 5;

/// Ranking order: descending score, ascending id on ties.
pub fn ranked_order<S: AsRef<str>>(scores: &[f64], ids: &[S]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| compare_ranked(scores[a], ids[a].as_ref(), scores[b], ids[b].as_ref()));
    order
}

pub fn compare_ranked(score_a: f64, id_a: &str, score_b: f64, id_b: &str) -> Ordering {
    score_b.total_cmp(&score_a).then_with(|| id_a.cmp(id_b))
}

fn truncated_discount(position: usize, cutoff: usize) -> f64 {
    if position <= cutoff {
        discount(position)
    } else {
        0.0
    }
}

/// Lambdas and second-order weights for one query.
///
/// For every pair with `labels[i] > labels[j]` the pair contributes
/// `|ΔNDCG| · ρ` to `λ_i` and subtracts it from `λ_j`, where
/// `ρ = 1 / (1 + exp(s_i − s_j))`; both hessians receive `|ΔNDCG| · ρ(1 − ρ)`.
/// Positions come from the current scores with ties broken by id.
pub fn query_lambdas<S: AsRef<str>>(
    labels: &[u8],
    scores: &[f64],
    ids: &[S],
    cutoff: usize,
) -> (Vec<f64>, Vec<f64>) {
    let n = labels.len();
    let mut lambdas = vec![0.0; n];
    let mut hessians = vec![0.0; n];
    let ideal = ideal_dcg_at_k(labels.iter().copied(), cutoff);
    if n < 2 || ideal == 0.0 {
        return (lambdas, hessians);
    }

    let mut position = vec![0usize; n];
    for (rank, &i) in ranked_order(scores, ids).iter().enumerate() {
        position[i] = rank + 1;
    }

    for i in 0..n {
        for j in 0..n {
            if labels[i] <= labels[j] {
                continue;
            }
            let delta = ((gain(labels[i]) - gain(labels[j]))
                * (truncated_discount(position[i], cutoff)
                    - truncated_discount(position[j], cutoff)))
            .abs()
                / ideal;
            if delta == 0.0 {
                continue;
            }
            let rho = 1.0 / (1.0 + (scores[i] - scores[j]).exp());
            let lambda = delta * rho;
            let weight = delta * rho * (1.0 - rho);
            lambdas[i] += lambda;
            lambdas[j] -= lambda;
            hessians[i] += weight;
            hessians[j] += weight;
        }
    }
    (lambdas, hessians)
}
