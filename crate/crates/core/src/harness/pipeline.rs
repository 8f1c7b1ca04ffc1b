//! End-to-end stages: featurize, train, rank, evaluate, cross-validate.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::config::PipelineConfig;
use super::ingest::DatasetBundle;
use super::persist::TrainedModels;
use crate::eval::{evaluate_rankings, MetricSummary, QrelSet, QueryMetrics};
use crate::ltr::{
    cross_validate, group_queries, rank_candidates, train_lambdamart, CvReport, FeatureVector,
    QueryGroup, RankError, RankingInstance, UserModel,
};
use crate::model::Source;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error("request {request_id:?}: user {user_id:?} has no history")]
    UnknownUser { request_id: String, user_id: String },
    #[error("request {0:?}: candidate missing from catalog")]
    UnknownCandidate(String),
    #[error("run file line {line}: {message}")]
    RunFormat { line: usize, message: String },
}

/// Trains both review classifiers and builds profiles for every user.
pub fn build_user_models(
    bundle: &DatasetBundle,
    config: &PipelineConfig,
) -> BTreeMap<String, UserModel> {
    bundle
        .histories
        .par_iter()
        .map(|h| {
            (
                h.user_id.clone(),
                UserModel::build(h, &bundle.catalog, &config.svm),
            )
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Reattaches persisted classifiers and rebuilds profiles from the bundle.
pub fn restore_user_models(
    bundle: &DatasetBundle,
    models: &TrainedModels,
) -> BTreeMap<String, UserModel> {
    bundle
        .histories
        .iter()
        .map(|h| {
            let get = |s| models.review_model(&h.user_id, s).cloned();
            let m = UserModel::with_review_models(
                h,
                &bundle.catalog,
                get(Source::Yelp),
                get(Source::Tripadvisor),
            );
            (h.user_id.clone(), m)
        })
        .collect()
}

/// One query group per request, in request-id order. Labels come from
/// `qrels` when given (unjudged candidates are grade 0). A user without a
/// usable profile gets all-missing features.
pub fn featurize(
    bundle: &DatasetBundle,
    users: &BTreeMap<String, UserModel>,
    config: &PipelineConfig,
    qrels: Option<&QrelSet>,
) -> Result<Vec<QueryGroup>, PipelineError> {
    let mut instances = Vec::new();
    for req in &bundle.requests {
        let user = users
            .get(&req.user_id)
            .ok_or_else(|| PipelineError::UnknownUser {
                request_id: req.request_id.clone(),
                user_id: req.user_id.clone(),
            })?;
        for vid in &req.candidates {
            let venue = bundle
                .catalog
                .get(vid)
                .ok_or_else(|| PipelineError::UnknownCandidate(req.request_id.clone()))?;
            let features = user
                .features(&req.context, venue, config.hemisphere)
                .unwrap_or_else(|_| FeatureVector::all_missing());
            instances.push(RankingInstance {
                query_id: req.request_id.clone(),
                venue_id: vid.clone(),
                features,
                label: qrels.map(|q| q.grade(&req.request_id, vid)),
            });
        }
    }
    Ok(group_queries(instances))
}

/// Judged queries of users whose profiles could be built.
fn training_queries(
    bundle: &DatasetBundle,
    users: &BTreeMap<String, UserModel>,
    config: &PipelineConfig,
) -> Result<Vec<QueryGroup>, PipelineError> {
    let qrels = bundle.qrel_set();
    let usable: std::collections::HashSet<&str> = bundle
        .requests
        .iter()
        .filter(|r| qrels.contains_query(&r.request_id))
        .filter(|r| users.get(&r.user_id).is_some_and(|u| u.profiles.is_ok()))
        .map(|r| r.request_id.as_str())
        .collect();
    Ok(featurize(bundle, users, config, Some(&qrels))?
        .into_iter()
        .filter(|q| usable.contains(q.query_id.as_str()))
        .collect())
}

pub fn train(
    bundle: &DatasetBundle,
    config: &PipelineConfig,
) -> Result<TrainedModels, PipelineError> {
    let users = build_user_models(bundle, config);
    let queries = training_queries(bundle, &users, config)?;
    let ranker = train_lambdamart(&queries, &config.ltr)?;
    let mut review = BTreeMap::new();
    for (uid, u) in users {
        for m in [u.yelp, u.tripadvisor].into_iter().flatten() {
            review.insert((uid.clone(), m.source), m);
        }
    }
    Ok(TrainedModels { ranker, review })
}

pub fn run_cv(bundle: &DatasetBundle, config: &PipelineConfig) -> Result<CvReport, PipelineError> {
    let users = build_user_models(bundle, config);
    let queries = training_queries(bundle, &users, config)?;
    Ok(cross_validate(
        &queries,
        config.cv_folds,
        config.seed,
        &config.ltr,
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunLine {
    pub request_id: String,
    pub rank: usize,
    pub venue_id: String,
    pub score: f64,
    pub run_tag: String,
}

pub fn rank(
    bundle: &DatasetBundle,
    models: &TrainedModels,
    config: &PipelineConfig,
) -> Result<Vec<RunLine>, PipelineError> {
    let users = restore_user_models(bundle, models);
    let queries = featurize(bundle, &users, config, None)?;
    let mut out = Vec::new();
    for q in &queries {
        for (i, (venue_id, score)) in rank_candidates(&models.ranker, &q.instances)
            .into_iter()
            .enumerate()
        {
            out.push(RunLine {
                request_id: q.query_id.clone(),
                rank: i + 1,
                venue_id,
                score,
                run_tag: config.run_tag.clone(),
            });
        }
    }
    Ok(out)
}

/// Tab-separated run file; scores use the shortest round-tripping decimal.
pub fn format_run(lines: &[RunLine]) -> String {
    let mut out = String::new();
    for l in lines {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            l.request_id, l.rank, l.venue_id, l.score, l.run_tag
        )
        .expect("writing to a String");
    }
    out
}

pub fn parse_run(text: &str) -> Result<Vec<RunLine>, PipelineError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let err = |message: &str| PipelineError::RunFormat {
            line,
            message: message.to_owned(),
        };
        let fields: Vec<&str> = raw.split('\t').collect();
        let [request_id, rank, venue_id, score, run_tag] = fields[..] else {
            return Err(err("expected 5 tab-separated fields"));
        };
        out.push(RunLine {
            request_id: request_id.to_owned(),
            rank: rank.parse().map_err(|_| err("rank is not an integer"))?,
            venue_id: venue_id.to_owned(),
            score: score.parse().map_err(|_| err("score is not a number"))?,
            run_tag: run_tag.to_owned(),
        });
    }
    Ok(out)
}

/// Metrics of a run against judgments. Rankings follow the rank column;
/// queries appear in first-seen order.
pub fn evaluate_run(lines: &[RunLine], qrels: &QrelSet) -> (Vec<QueryMetrics>, MetricSummary) {
    let mut order: Vec<String> = Vec::new();
    let mut by_query: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
    for l in lines {
        let entry = by_query.entry(l.request_id.clone()).or_insert_with(|| {
            order.push(l.request_id.clone());
            Vec::new()
        });
        entry.push((l.rank, l.venue_id.clone()));
    }
    let rankings: Vec<(String, Vec<String>)> = order
        .into_iter()
        .map(|q| {
            let mut r = by_query.remove(&q).unwrap_or_default();
            r.sort();
            (q, r.into_iter().map(|(_, v)| v).collect())
        })
        .collect();
    evaluate_rankings(&rankings, qrels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth::{generate_synthetic, SynthConfig};

    fn small() -> (DatasetBundle, PipelineConfig) {
        let mut config = PipelineConfig {
            synth: SynthConfig {
                n_users: 12,
                n_venues: 80,
                n_candidates_per_request: 10,
                history_size: 20,
                ..SynthConfig::default()
            },
            ..PipelineConfig::default()
        };
        config.ltr.n_trees = 10;
        config.cv_folds = 3;
        let (bundle, _) = generate_synthetic(&config.synth).unwrap();
        (bundle, config)
    }

    #[test]
    fn run_file_round_trips() {
        let lines = vec![RunLine {
            request_id: "r1".into(),
            rank: 1,
            venue_id: "v9".into(),
            score: -0.1 + 0.3,
            run_tag: "t".into(),
        }];
        assert_eq!(parse_run(&format_run(&lines)).unwrap(), lines);
        assert!(matches!(
            parse_run("a\tb"),
            Err(PipelineError::RunFormat { line: 1, .. })
        ));
    }

    #[test]
    fn train_then_rank_covers_every_candidate() {
        let (bundle, config) = small();
        let models = train(&bundle, &config).unwrap();
        let run = rank(&bundle, &models, &config).unwrap();
        assert_eq!(run.len(), 12 * 10);
        assert!(run
            .windows(2)
            .all(|w| w[0].request_id != w[1].request_id || w[0].score >= w[1].score));
    }

    #[test]
    fn oracle_run_scores_perfectly() {
        let (bundle, _) = small();
        let qrels = bundle.qrel_set();
        let mut lines = Vec::new();
        for req in &bundle.requests {
            let mut c = req.candidates.clone();
            c.sort_by_key(|v| std::cmp::Reverse(qrels.grade(&req.request_id, v)));
            if qrels.grade(&req.request_id, &c[0]) < 3 {
                continue;
            }
            for (i, v) in c.into_iter().enumerate() {
                lines.push(RunLine {
                    request_id: req.request_id.clone(),
                    rank: i + 1,
                    venue_id: v,
                    score: 0.0,
                    run_tag: "oracle".into(),
                });
            }
        }
        let (_, summary) = evaluate_run(&lines, &qrels);
        assert_eq!(summary.mrr, 1.0);
        assert_eq!(summary.ndcg5, 1.0);
    }

    #[test]
    fn cv_is_deterministic() {
        let (bundle, config) = small();
        let a = run_cv(&bundle, &config).unwrap();
        let b = run_cv(&bundle, &config).unwrap();
        assert_eq!(a, b);
    }
}
