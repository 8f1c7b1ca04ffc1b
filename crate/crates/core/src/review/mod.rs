//! Review-based scoring: a per-user linear classifier over TF-IDF vectors of
//! the user's venue reviews. The classifier's decision value on a candidate's
//! reviews is the score.

pub mod svm;
pub mod text;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Catalog, Polarity, Source, UserHistory, VenueRecord};

pub use svm::{train_linear_svm, Label, LabeledDocument, SvmConfig, SvmModel, TrainingMeta};
pub use text::{build_vocabulary, tfidf_vector, tokenize, SparseVector, Vocabulary};

/// Reviews with at least this many stars on positive venues are positive samples.
pub const POSITIVE_MIN_STARS: u8 = 4;
/// Reviews with at most this many stars on negative venues are negative samples.
pub const NEGATIVE_MAX_STARS: u8 = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReviewError {
    #[error("corpus contains no tokens")]
    EmptyCorpus,
    #[error("no positive training documents")]
    TrainingUnderflow,
    #[error("training objective became non-finite at epoch {epoch}")]
    TrainingDiverged { epoch: usize },
    #[error("{0} has no review classifier")]
    NotAReviewSource(Source),
    #[error("invalid svm configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub documents: Vec<LabeledDocument>,
    pub vocabulary: Vocabulary,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl TrainingSet {
    pub fn negative_free(&self) -> bool {
        self.n_neg == 0
    }
}

pub fn assemble_training_set(
    user: &UserHistory,
    catalog: &Catalog,
    source: Source,
) -> Result<TrainingSet, ReviewError> {
    if !source.has_reviews() {
        return Err(ReviewError::NotAReviewSource(source));
    }
    let collect = |polarity: Polarity, keep: fn(u8) -> bool| -> Vec<Vec<String>> {
        user.with_polarity(polarity)
            .filter_map(|r| catalog.get(&r.venue_id))
            .flat_map(|v| v.reviews_from(source))
            .filter(|r| keep(r.stars.get()))
            .map(|r| tokenize(&r.text))
            .collect()
    };
    let positives = collect(Polarity::Positive, |s| s >= POSITIVE_MIN_STARS);
    let negatives = collect(Polarity::Negative, |s| s <= NEGATIVE_MAX_STARS);
    if positives.is_empty() {
        return Err(ReviewError::TrainingUnderflow);
    }

    let corpus: Vec<&[String]> = positives
        .iter()
        .chain(&negatives)
        .map(Vec::as_slice)
        .collect();
    let vocabulary = Vocabulary::build(&corpus)?;
    let documents = positives
        .iter()
        .map(|t| (t, Label::Positive))
        .chain(negatives.iter().map(|t| (t, Label::Negative)))
        .map(|(tokens, label)| LabeledDocument {
            vector: vocabulary.vectorize(tokens),
            label,
        })
        .collect();
    Ok(TrainingSet {
        documents,
        vocabulary,
        n_pos: positives.len(),
        n_neg: negatives.len(),
    })
}

/// A trained classifier together with the vocabulary its inputs are built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewModel {
    pub user_id: String,
    pub source: Source,
    pub vocabulary: Vocabulary,
    pub svm: SvmModel,
}

impl ReviewModel {
    pub fn train(
        user: &UserHistory,
        catalog: &Catalog,
        source: Source,
        config: &SvmConfig,
    ) -> Result<ReviewModel, ReviewError> {
        let set = assemble_training_set(user, catalog, source)?;
        let svm = train_linear_svm(&set.documents, set.vocabulary.len(), config)?;
        Ok(ReviewModel {
            user_id: user.user_id.clone(),
            source,
            vocabulary: set.vocabulary,
            svm,
        })
    }

    pub fn score(&self, venue: &VenueRecord) -> Option<f64> {
        decision_score(&self.svm, &self.vocabulary, venue, self.source)
    }
}

/// Decision value of the classifier on all of `venue`'s reviews from `source`
/// concatenated into one document. `None` when the venue has no such review.
pub fn decision_score(
    model: &SvmModel,
    vocab: &Vocabulary,
    venue: &VenueRecord,
    source: Source,
) -> Option<f64> {
    let texts: Vec<&str> = venue
        .reviews_from(source)
        .map(|r| r.text.as_str())
        .collect();
    if texts.is_empty() {
        return None;
    }
    let tokens = tokenize(&texts.join(" "));
    Some(model.decision(&vocab.vectorize(&tokens)))
}
