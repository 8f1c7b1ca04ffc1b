//! Positive/negative frequency profiles over venue categories and taste tags.
//!
//! A profile stores, for each distinct item seen in a user's positively (resp.
//! negatively) rated venues, the number of occurrences. Both sides share one
//! denominator: the total number of item slots over every polar venue in the
//! history. Frequencies are therefore commensurable and sum to one.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{normalize_item, Catalog, Polarity, Source, UserHistory, VenueRecord};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProfileError {
    #[error("user {0:?} has no positively rated venue")]
    ProfileUnderflow(String),
    #[error("user {user:?} has no {kind} items on any rated venue")]
    EmptyProfile { user: String, kind: ItemKind },
    #[error("{0} does not publish categories")]
    NoCategories(Source),
}

/// Which venue items a profile is built over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ItemKind {
    Category(Source),
    /// Foursquare taste tags.
    Tag,
}

impl ItemKind {
    pub fn category(source: Source) -> Result<ItemKind, ProfileError> {
        if source.has_categories() {
            Ok(ItemKind::Category(source))
        } else {
            Err(ProfileError::NoCategories(source))
        }
    }

    /// Distinct normalized items of `venue` for this kind.
    pub fn items(self, venue: &VenueRecord) -> BTreeSet<String> {
        let raw = match self {
            ItemKind::Category(source) => venue.categories(source),
            ItemKind::Tag => venue.taste_tags.as_slice(),
        };
        raw.iter()
            .map(|s| normalize_item(s))
            .filter(|s| !s.is_empty())
            .collect()
    }
}

impl std::fmt::Display for ItemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ItemKind::Category(s) => write!(f, "{s} category"),
            ItemKind::Tag => f.write_str("taste tag"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyProfile {
    positive: BTreeMap<String, u64>,
    negative: BTreeMap<String, u64>,
    denominator: u64,
}

impl FrequencyProfile {
    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    /// cf⁺ of an item; 0 when absent.
    pub fn positive_frequency(&self, item: &str) -> f64 {
        self.positive.get(item).copied().unwrap_or(0) as f64 / self.denominator as f64
    }

    /// cf⁻ of an item; 0 when absent.
    pub fn negative_frequency(&self, item: &str) -> f64 {
        self.negative.get(item).copied().unwrap_or(0) as f64 / self.denominator as f64
    }

    pub fn positive(&self) -> impl Iterator<Item = (&str, f64)> {
        let d = self.denominator as f64;
        self.positive
            .iter()
            .map(move |(k, &c)| (k.as_str(), c as f64 / d))
    }

    pub fn negative(&self) -> impl Iterator<Item = (&str, f64)> {
        let d = self.denominator as f64;
        self.negative
            .iter()
            .map(move |(k, &c)| (k.as_str(), c as f64 / d))
    }

    pub fn positive_counts(&self) -> &BTreeMap<String, u64> {
        &self.positive
    }

    pub fn negative_counts(&self) -> &BTreeMap<String, u64> {
        &self.negative
    }

    /// Σ (cf⁺ − cf⁻) over the distinct normalized candidate items.
    ///
    /// The net count is summed in integers and divided once, so the result
    /// does not depend on item order.
    pub fn similarity<S: AsRef<str>>(&self, venue_items: &[S]) -> f64 {
        let distinct: BTreeSet<String> = venue_items
            .iter()
            .map(|s| normalize_item(s.as_ref()))
            .collect();
        self.similarity_normalized(&distinct)
    }

    fn similarity_normalized(&self, items: &BTreeSet<String>) -> f64 {
        let net: i64 = items
            .iter()
            .map(|item| {
                self.positive.get(item).copied().unwrap_or(0) as i64
                    - self.negative.get(item).copied().unwrap_or(0) as i64
            })
            .sum();
        net as f64 / self.denominator as f64
    }
}

pub fn build_profile(
    history: &UserHistory,
    catalog: &Catalog,
    kind: ItemKind,
) -> Result<FrequencyProfile, ProfileError> {
    if history.with_polarity(Polarity::Positive).next().is_none() {
        return Err(ProfileError::ProfileUnderflow(history.user_id.clone()));
    }

    let mut positive = BTreeMap::new();
    let mut negative = BTreeMap::new();
    let mut denominator = 0u64;
    for (polarity, side) in [
        (Polarity::Positive, &mut positive),
        (Polarity::Negative, &mut negative),
    ] {
        for rated in history.with_polarity(polarity) {
            // Unresolvable ids are caught by dataset validation.
            let Some(venue) = catalog.get(&rated.venue_id) else {
                continue;
            };
            for item in kind.items(venue) {
                *side.entry(item).or_insert(0u64) += 1;
                denominator += 1;
            }
        }
    }

    if denominator == 0 {
        return Err(ProfileError::EmptyProfile {
            user: history.user_id.clone(),
            kind,
        });
    }
    Ok(FrequencyProfile {
        positive,
        negative,
        denominator,
    })
}

pub fn similarity_score<S: AsRef<str>>(profile: &FrequencyProfile, venue_items: &[S]) -> f64 {
    profile.similarity(venue_items)
}

/// The three frequency-based scores of one (user, venue) pair. `None` marks a
/// score that could not be computed and defaults to 0 downstream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyScores {
    pub cat_foursquare: Option<f64>,
    pub cat_yelp: Option<f64>,
    pub tag: Option<f64>,
}

/// The three profiles of one user, built once and reused across candidates.
#[derive(Debug, Clone)]
pub struct ProfileSet {
    pub cat_foursquare: Option<FrequencyProfile>,
    pub cat_yelp: Option<FrequencyProfile>,
    pub tag: Option<FrequencyProfile>,
}

impl ProfileSet {
    pub const KINDS: [ItemKind; 3] = [
        ItemKind::Category(Source::Foursquare),
        ItemKind::Category(Source::Yelp),
        ItemKind::Tag,
    ];

    /// Fails only when the user has no positive venue; an empty kind just
    /// leaves that slot unset.
    pub fn build(history: &UserHistory, catalog: &Catalog) -> Result<ProfileSet, ProfileError> {
        let mut built = Vec::with_capacity(3);
        for kind in Self::KINDS {
            match build_profile(history, catalog, kind) {
                Ok(p) => built.push(Some(p)),
                Err(ProfileError::EmptyProfile { .. }) => built.push(None),
                Err(e) => return Err(e),
            }
        }
        let tag = built.pop().flatten();
        let cat_yelp = built.pop().flatten();
        let cat_foursquare = built.pop().flatten();
        Ok(ProfileSet {
            cat_foursquare,
            cat_yelp,
            tag,
        })
    }

    pub fn score(&self, venue: &VenueRecord) -> FrequencyScores {
        let slot = |profile: &Option<FrequencyProfile>, kind: ItemKind| {
            let items = kind.items(venue);
            match profile {
                Some(p) if !items.is_empty() => Some(p.similarity_normalized(&items)),
                _ => None,
            }
        };
        FrequencyScores {
            cat_foursquare: slot(&self.cat_foursquare, Self::KINDS[0]),
            cat_yelp: slot(&self.cat_yelp, Self::KINDS[1]),
            tag: slot(&self.tag, Self::KINDS[2]),
        }
    }
}

/// Foursquare-category, Yelp-category, and taste-tag similarity of `venue` to
/// the user's history. A slot is `None` when its profile cannot be built or
/// the venue carries no items of that kind.
pub fn score_triple(
    history: &UserHistory,
    catalog: &Catalog,
    venue: &VenueRecord,
) -> Result<FrequencyScores, ProfileError> {
    Ok(ProfileSet::build(history, catalog)?.score(venue))
}
