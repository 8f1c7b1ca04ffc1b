//! Contextual appropriateness of a venue: how strongly its check-ins
//! concentrate on the requested season, trip type and group type.
//!
//! Each score compares the count in the user's bucket against the mean count
//! of the remaining buckets on the same axis.

use chrono::{DateTime, Datelike, Utc};
use serde::{Deserialize, Serialize};

use crate::model::{ContextSignals, GroupType, Season, TripType, VenueRecord};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hemisphere {
    #[default]
    North,
    South,
}

/// Meteorological seasons: Mar–May spring, Jun–Aug summer, Sep–Nov fall,
/// Dec–Feb winter in the northern hemisphere; shifted by two seasons in the
/// southern one.
pub fn infer_season(timestamp: &DateTime<Utc>, hemisphere: Hemisphere) -> Season {
    let north = match timestamp.month() {
        3..=5 => Season::Spring,
        6..=8 => Season::Summer,
        9..=11 => Season::Fall,
        _ => Season::Winter,
    };
    match hemisphere {
        Hemisphere::North => north,
        Hemisphere::South => Season::ALL[(north.index() + 2) % 4],
    }
}

/// Check-in counts per season, indexed by `Season::index`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeasonDistribution(pub [f64; 4]);

impl SeasonDistribution {
    pub fn get(&self, season: Season) -> f64 {
        self.0[season.index()]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TravelerDistribution {
    pub trip: [f64; 2],
    pub group: [f64; 4],
}

/// Explicit season check-ins when present, otherwise counts of review dates
/// per season. `None` when the venue has neither.
pub fn season_distribution(
    venue: &VenueRecord,
    hemisphere: Hemisphere,
) -> Option<SeasonDistribution> {
    if let Some(counts) = &venue.season_checkins {
        let mut d = [0.0; 4];
        for (season, &n) in counts {
            d[season.index()] = n as f64;
        }
        return Some(SeasonDistribution(d));
    }
    if venue.reviews.is_empty() {
        return None;
    }
    let mut d = [0.0; 4];
    for review in &venue.reviews {
        d[infer_season(&review.timestamp, hemisphere).index()] += 1.0;
    }
    Some(SeasonDistribution(d))
}

pub fn traveler_distribution(venue: &VenueRecord) -> Option<TravelerDistribution> {
    let t = venue.traveler_checkins.as_ref()?;
    let mut trip = [0.0; 2];
    for (k, &n) in &t.trip {
        trip[k.index()] = n as f64;
    }
    let mut group = [0.0; 4];
    for (k, &n) in &t.group {
        group[k.index()] = n as f64;
    }
    Some(TravelerDistribution { trip, group })
}

/// Count in bucket `own` minus the mean count over all other buckets.
fn bucket_contrast(counts: &[f64], own: usize) -> f64 {
    let others = counts
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != own)
        .map(|(_, &c)| c);
    let (sum, n) = others.fold((0.0, 0usize), |(s, n), c| (s + c, n + 1));
    counts[own] - sum / n as f64
}

pub fn season_score(user_season: Season, dist: &SeasonDistribution) -> f64 {
    bucket_contrast(&dist.0, user_season.index())
}

/// Mean of the trip-axis and group-axis contrasts.
pub fn travel_score(context: &ContextSignals, dist: &TravelerDistribution) -> f64 {
    let trip = trip_score(context.trip_type, dist);
    let group = group_score(context.group_type, dist);
    (trip + group) / 2.0
}

pub fn trip_score(trip: TripType, dist: &TravelerDistribution) -> f64 {
    bucket_contrast(&dist.trip, trip.index())
}

pub fn group_score(group: GroupType, dist: &TravelerDistribution) -> f64 {
    bucket_contrast(&dist.group, group.index())
}
