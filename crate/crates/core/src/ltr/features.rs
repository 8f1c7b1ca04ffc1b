use serde::{Deserialize, Serialize};

use crate::context::{self, Hemisphere};
use crate::frequency::{ProfileError, ProfileSet};
use crate::model::{Catalog, ContextSignals, Source, SuggestionRequest, UserHistory, VenueRecord};
use crate::review::{ReviewModel, SvmConfig};

pub const FEATURE_COUNT: usize = 7;

/// Position of each component score in a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    CategoryFoursquare = 0,
    CategoryYelp = 1,
    Tag = 2,
    ReviewYelp = 3,
    ReviewTripadvisor = 4,
    Season = 5,
    Travel = 6,
}

impl Feature {
    pub const ALL: [Feature; FEATURE_COUNT] = [
        Feature::CategoryFoursquare,
        Feature::CategoryYelp,
        Feature::Tag,
        Feature::ReviewYelp,
        Feature::ReviewTripadvisor,
        Feature::Season,
        Feature::Travel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::CategoryFoursquare => "s_cat_f",
            Feature::CategoryYelp => "s_cat_y",
            Feature::Tag => "s_tag",
            Feature::ReviewYelp => "s_rev_y",
            Feature::ReviewTripadvisor => "s_rev_t",
            Feature::Season => "s_cxt_season",
            Feature::Travel => "s_cxt_travel",
        }
    }
}

/// The seven component scores of a (user, venue) pair. A masked slot holds 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: [f64; FEATURE_COUNT],
    pub missing: [bool; FEATURE_COUNT],
}

impl FeatureVector {
    pub fn from_slots(slots: [Option<f64>; FEATURE_COUNT]) -> Self {
        let mut values = [0.0; FEATURE_COUNT];
        let mut missing = [false; FEATURE_COUNT];
        for (i, slot) in slots.into_iter().enumerate() {
            match slot {
                Some(v) if v.is_finite() => values[i] = v,
                _ => missing[i] = true,
            }
        }
        FeatureVector { values, missing }
    }

    pub fn all_missing() -> Self {
        Self::from_slots([None; FEATURE_COUNT])
    }

    pub fn get(&self, feature: Feature) -> f64 {
        self.values[feature as usize]
    }

    pub fn is_missing(&self, feature: Feature) -> bool {
        self.missing[feature as usize]
    }
}

/// Everything needed to score candidates for one user: frequency profiles and
/// one review classifier per review source.
#[derive(Debug, Clone)]
pub struct UserModel {
    pub user_id: String,
    pub profiles: Result<ProfileSet, ProfileError>,
    pub yelp: Option<ReviewModel>,
    pub tripadvisor: Option<ReviewModel>,
}

impl UserModel {
    /// A source whose training set is unusable leaves its classifier unset.
    pub fn build(history: &UserHistory, catalog: &Catalog, svm: &SvmConfig) -> UserModel {
        let train = |source| ReviewModel::train(history, catalog, source, svm).ok();
        UserModel {
            user_id: history.user_id.clone(),
            profiles: ProfileSet::build(history, catalog),
            yelp: train(Source::Yelp),
            tripadvisor: train(Source::Tripadvisor),
        }
    }

    /// Rebuilds profiles and attaches previously trained classifiers.
    pub fn with_review_models(
        history: &UserHistory,
        catalog: &Catalog,
        yelp: Option<ReviewModel>,
        tripadvisor: Option<ReviewModel>,
    ) -> UserModel {
        UserModel {
            user_id: history.user_id.clone(),
            profiles: ProfileSet::build(history, catalog),
            yelp,
            tripadvisor,
        }
    }

    pub fn features(
        &self,
        context: &ContextSignals,
        venue: &VenueRecord,
        hemisphere: Hemisphere,
    ) -> Result<FeatureVector, ProfileError> {
        let profiles = self.profiles.as_ref().map_err(Clone::clone)?;
        let freq = profiles.score(venue);
        let review = |m: &Option<ReviewModel>| m.as_ref().and_then(|m| m.score(venue));
        let season = context::season_distribution(venue, hemisphere)
            .map(|d| context::season_score(context.season, &d));
        let travel =
            context::traveler_distribution(venue).map(|d| context::travel_score(context, &d));
        Ok(FeatureVector::from_slots([
            freq.cat_foursquare,
            freq.cat_yelp,
            freq.tag,
            review(&self.yelp),
            review(&self.tripadvisor),
            season,
            travel,
        ]))
    }
}

/// Builds the user's models from scratch and featurizes one candidate.
pub fn assemble_features(
    user: &UserHistory,
    request: &SuggestionRequest,
    venue: &VenueRecord,
    catalog: &Catalog,
    svm: &SvmConfig,
    hemisphere: Hemisphere,
) -> Result<FeatureVector, ProfileError> {
    UserModel::build(user, catalog, svm).features(&request.context, venue, hemisphere)
}
