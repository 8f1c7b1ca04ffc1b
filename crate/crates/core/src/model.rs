//! Shared domain vocabulary: venues, reviews, rated histories, request context,
//! and dataset validation.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Location-based social network a piece of venue data comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Foursquare,
    Yelp,
    Tripadvisor,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::Foursquare, Source::Yelp, Source::Tripadvisor];

    /// Sources that publish venue categories.
    pub fn has_categories(self) -> bool {
        matches!(self, Source::Foursquare | Source::Yelp)
    }

    /// Sources whose reviews feed a per-user classifier.
    pub fn has_reviews(self) -> bool {
        matches!(self, Source::Yelp | Source::Tripadvisor)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Foursquare => "foursquare",
            Source::Yelp => "yelp",
            Source::Tripadvisor => "tripadvisor",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    Spring,
    Summer,
    Fall,
    Winter,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Spring, Season::Summer, Season::Fall, Season::Winter];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripType {
    Business,
    Leisure,
}

impl TripType {
    pub const ALL: [TripType; 2] = [TripType::Business, TripType::Leisure];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupType {
    Family,
    Couples,
    Friends,
    Solo,
}

impl GroupType {
    pub const ALL: [GroupType; 4] = [
        GroupType::Family,
        GroupType::Couples,
        GroupType::Friends,
        GroupType::Solo,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// A traveler bucket on one of the two disjoint context axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TravelerType {
    Trip(TripType),
    Group(GroupType),
}

/// Star rating of a review, always within 1..=5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Stars(u8);

impl Stars {
    pub fn new(value: u8) -> Result<Self, InvalidStars> {
        if (1..=5).contains(&value) {
            Ok(Stars(value))
        } else {
            Err(InvalidStars(value))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("stars must be within 1..=5, got {0}")]
pub struct InvalidStars(pub u8);

impl TryFrom<u8> for Stars {
    type Error = InvalidStars;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Stars::new(value)
    }
}

impl From<Stars> for u8 {
    fn from(stars: Stars) -> u8 {
        stars.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub venue_id: String,
    pub source: Source,
    pub stars: Stars,
    pub text: String,
    pub timestamp: DateTime<Utc>,
}

/// Check-in counts per traveler bucket, split into the trip and group axes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TravelerCheckins {
    #[serde(default)]
    pub trip: BTreeMap<TripType, u64>,
    #[serde(default)]
    pub group: BTreeMap<GroupType, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VenueRecord {
    pub venue_id: String,
    #[serde(default)]
    pub categories_by_source: BTreeMap<Source, Vec<String>>,
    #[serde(default)]
    pub taste_tags: Vec<String>,
    /// Attached from the review corpus at load time.
    #[serde(skip)]
    pub reviews: Vec<Review>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub season_checkins: Option<BTreeMap<Season, u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traveler_checkins: Option<TravelerCheckins>,
}

impl VenueRecord {
    pub fn new(venue_id: impl Into<String>) -> Self {
        VenueRecord {
            venue_id: venue_id.into(),
            categories_by_source: BTreeMap::new(),
            taste_tags: Vec::new(),
            reviews: Vec::new(),
            season_checkins: None,
            traveler_checkins: None,
        }
    }

    pub fn categories(&self, source: Source) -> &[String] {
        self.categories_by_source
            .get(&source)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn reviews_from(&self, source: Source) -> impl Iterator<Item = &Review> {
        self.reviews.iter().filter(move |r| r.source == source)
    }
}

/// Canonical form used whenever category or tag strings are compared:
/// NFC-normalized, trimmed, lowercased.
pub fn normalize_item(item: &str) -> String {
    item.nfc().collect::<String>().trim().to_lowercase()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("rating must be within 0..=4, got {0}")]
pub struct InvalidRating(pub u8);

impl Polarity {
    pub fn of(rating: u8) -> Result<Polarity, InvalidRating> {
        match rating {
            3 | 4 => Ok(Polarity::Positive),
            0 | 1 => Ok(Polarity::Negative),
            2 => Ok(Polarity::Neutral),
            other => Err(InvalidRating(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatedVenue {
    pub venue_id: String,
    pub rating: u8,
}

impl RatedVenue {
    pub fn new(venue_id: impl Into<String>, rating: u8) -> Self {
        RatedVenue {
            venue_id: venue_id.into(),
            rating,
        }
    }

    pub fn polarity(&self) -> Result<Polarity, InvalidRating> {
        Polarity::of(self.rating)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserHistory {
    pub user_id: String,
    #[serde(rename = "ratings")]
    pub rated: Vec<RatedVenue>,
}

impl UserHistory {
    /// Rated venues with the given polarity. Out-of-range ratings are skipped;
    /// validation reports them separately.
    pub fn with_polarity(&self, polarity: Polarity) -> impl Iterator<Item = &RatedVenue> {
        self.rated
            .iter()
            .filter(move |r| r.polarity().ok() == Some(polarity))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContextSignals {
    pub season: Season,
    pub trip_type: TripType,
    pub group_type: GroupType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestionRequest {
    pub request_id: String,
    pub user_id: String,
    pub context: ContextSignals,
    pub candidates: Vec<String>,
}

/// Venue lookup by id.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    venues: BTreeMap<String, VenueRecord>,
}

impl Catalog {
    /// Builds a catalog; later records with a repeated id replace earlier ones.
    pub fn new(venues: impl IntoIterator<Item = VenueRecord>) -> Self {
        Catalog {
            venues: venues
                .into_iter()
                .map(|v| (v.venue_id.clone(), v))
                .collect(),
        }
    }

    pub fn get(&self, venue_id: &str) -> Option<&VenueRecord> {
        self.venues.get(venue_id)
    }

    pub fn len(&self) -> usize {
        self.venues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.venues.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &VenueRecord> {
        self.venues.values()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationKind {
    EmptyVenueId,
    DuplicateVenueId,
    DuplicateCategory,
    NegativeCount,
    ReviewSourceInvalid,
    ReviewStarsOutOfRange,
    ReviewVenueMismatch,
    DuplicateUserId,
    DuplicateRatedVenue,
    DanglingRatedVenue,
    RatingOutOfRange,
    DuplicateRequestId,
    UnknownUser,
    EmptyCandidates,
    DuplicateCandidate,
    DanglingCandidate,
    DanglingReview,
    GradeOutOfRange,
    DanglingQrel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub id: String,
    pub detail: String,
}

/// Every invariant violation found in a dataset. Empty means usable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    pub(crate) fn push(
        &mut self,
        kind: ViolationKind,
        id: impl Into<String>,
        detail: impl Into<String>,
    ) {
        self.violations.push(Violation {
            kind,
            id: id.into(),
            detail: detail.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{:?} {}: {}", v.kind, v.id, v.detail)?;
        }
        Ok(())
    }
}

pub fn validate_dataset(
    venues: &[VenueRecord],
    histories: &[UserHistory],
    requests: &[SuggestionRequest],
) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut venue_ids: HashMap<&str, usize> = HashMap::new();
    for venue in venues {
        *venue_ids.entry(venue.venue_id.as_str()).or_default() += 1;
    }
    let mut reported_dup = HashSet::new();
    for venue in venues {
        let id = venue.venue_id.as_str();
        if id.trim().is_empty() {
            report.push(ViolationKind::EmptyVenueId, id, "venue_id is empty");
        }
        if venue_ids[id] > 1 && reported_dup.insert(id) {
            report.push(
                ViolationKind::DuplicateVenueId,
                id,
                format!("appears {} times", venue_ids[id]),
            );
        }
        for (source, cats) in &venue.categories_by_source {
            let mut seen = BTreeSet::new();
            for cat in cats {
                if !seen.insert(normalize_item(cat)) {
                    report.push(
                        ViolationKind::DuplicateCategory,
                        id,
                        format!("{source} category {cat:?} repeated"),
                    );
                }
            }
        }
        for review in &venue.reviews {
            if !review.source.has_reviews() {
                report.push(
                    ViolationKind::ReviewSourceInvalid,
                    id,
                    format!("review from {}", review.source),
                );
            }
            if !(1..=5).contains(&review.stars.get()) {
                report.push(
                    ViolationKind::ReviewStarsOutOfRange,
                    id,
                    format!("stars {}", review.stars.get()),
                );
            }
            if review.venue_id != venue.venue_id {
                report.push(
                    ViolationKind::ReviewVenueMismatch,
                    id,
                    format!("review names venue {:?}", review.venue_id),
                );
            }
        }
    }

    let mut user_ids = HashSet::new();
    for history in histories {
        let uid = history.user_id.as_str();
        if !user_ids.insert(uid) {
            report.push(ViolationKind::DuplicateUserId, uid, "user appears twice");
        }
        let mut rated = HashSet::new();
        for r in &history.rated {
            if !rated.insert(r.venue_id.as_str()) {
                report.push(
                    ViolationKind::DuplicateRatedVenue,
                    uid,
                    format!("venue {:?} rated twice", r.venue_id),
                );
            }
            if !venue_ids.contains_key(r.venue_id.as_str()) {
                report.push(
                    ViolationKind::DanglingRatedVenue,
                    r.venue_id.as_str(),
                    format!("rated by user {uid:?}"),
                );
            }
            if r.polarity().is_err() {
                report.push(
                    ViolationKind::RatingOutOfRange,
                    uid,
                    format!("venue {:?} rating {}", r.venue_id, r.rating),
                );
            }
        }
    }

    let mut request_ids = HashSet::new();
    for request in requests {
        let rid = request.request_id.as_str();
        if !request_ids.insert(rid) {
            report.push(
                ViolationKind::DuplicateRequestId,
                rid,
                "request appears twice",
            );
        }
        if !user_ids.contains(request.user_id.as_str()) {
            report.push(
                ViolationKind::UnknownUser,
                request.user_id.as_str(),
                format!("named by request {rid:?}"),
            );
        }
        if request.candidates.is_empty() {
            report.push(ViolationKind::EmptyCandidates, rid, "no candidates");
        }
        let mut seen = HashSet::new();
        for cand in &request.candidates {
            if !seen.insert(cand.as_str()) {
                report.push(
                    ViolationKind::DuplicateCandidate,
                    cand.as_str(),
                    format!("repeated in request {rid:?}"),
                );
            }
            if !venue_ids.contains_key(cand.as_str()) {
                report.push(
                    ViolationKind::DanglingCandidate,
                    cand.as_str(),
                    format!("named by request {rid:?}"),
                );
            }
        }
    }

    report
}
