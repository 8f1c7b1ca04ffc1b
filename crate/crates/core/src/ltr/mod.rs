//! Learning to rank: feature assembly, LambdaMART training, ranking, and
//! query-level cross-validation.

pub mod cv;
pub mod features;
pub mod lambda;
pub mod lambdamart;
pub mod tree;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cv::{cross_validate, CvReport, FoldReport};
pub use features::{assemble_features, Feature, FeatureVector, UserModel, FEATURE_COUNT};
pub use lambda::{query_lambdas, NDCG_CUTOFF};
pub use lambdamart::{
    lambda_gradients, rank_candidates, train_lambdamart, LambdaMartConfig, LambdaMartModel,
};
pub use tree::{fit_regression_tree, Node, RegressionTree, TreeConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankError {
    #[error("no training query has two distinct relevance labels")]
    UntrainableDataset,
    #[error("need at least {needed} queries for {needed}-fold cross-validation, got {got}")]
    InsufficientQueries { needed: usize, got: usize },
    #[error("instance {venue_id:?} of query {query_id:?} has no relevance label")]
    MissingLabel { query_id: String, venue_id: String },
    #[error("invalid ranker configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingInstance {
    /// The suggestion request this candidate belongs to.
    pub query_id: String,
    pub venue_id: String,
    pub features: FeatureVector,
    /// Graded relevance 0..=4; required for training queries.
    pub label: Option<u8>,
}

/// All candidates of one query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryGroup {
    pub query_id: String,
    pub instances: Vec<RankingInstance>,
}

impl QueryGroup {
    pub fn labels(&self) -> Result<Vec<u8>, RankError> {
        self.instances
            .iter()
            .map(|i| {
                i.label.ok_or_else(|| RankError::MissingLabel {
                    query_id: i.query_id.clone(),
                    venue_id: i.venue_id.clone(),
                })
            })
            .collect()
    }

    pub fn venue_ids(&self) -> Vec<&str> {
        self.instances.iter().map(|i| i.venue_id.as_str()).collect()
    }
}

/// Groups instances by query id; groups come out sorted by id and keep the
/// input order of their instances.
pub fn group_queries(instances: impl IntoIterator<Item = RankingInstance>) -> Vec<QueryGroup> {
    let mut groups: BTreeMap<String, Vec<RankingInstance>> = BTreeMap::new();
    for inst in instances {
        groups.entry(inst.query_id.clone()).or_default().push(inst);
    }
    groups
        .into_iter()
        .map(|(query_id, instances)| QueryGroup {
            query_id,
            instances,
        })
        .collect()
}
