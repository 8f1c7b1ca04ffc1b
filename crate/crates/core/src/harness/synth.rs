//! Seeded synthetic datasets with a known preference function.
//!
//! Every user likes some categories, dislikes others, and has a preferred
//! season and traveler profile that their request is issued in. Every venue has two
//! categories plus a peak season, trip type and group type that shape its
//! check-ins and review dates. A request's relevance grade is
//! `clamp(2·affinity + context_match, 0, 4)` where affinity sums the user's
//! ±1 stance on the venue's categories and context_match counts how many of
//! the three request signals equal the venue's peaks. History ratings are
//! `affinity + 2`. With probability `noise_level` any label is replaced by a
//! uniform draw from 0..=4.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ingest::{DatasetBundle, IngestError};
use crate::eval::Qrel;
use crate::model::{
    ContextSignals, GroupType, RatedVenue, Review, Season, Source, Stars, SuggestionRequest,
    TravelerCheckins, TripType, UserHistory, VenueRecord,
};

/// History venues with at least this affinity are rated positively when the
/// label is noise-free.
pub const POSITIVE_AFFINITY: i32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_venues: usize,
    pub n_candidates_per_request: usize,
    pub history_size: usize,
    pub category_vocab_size: usize,
    pub tag_vocab_size: usize,
    pub review_term_vocab_size: usize,
    pub noise_level: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_users: 100,
            n_venues: 500,
            n_candidates_per_request: 30,
            history_size: 60,
            category_vocab_size: 8,
            tag_vocab_size: 24,
            review_term_vocab_size: 260,
            noise_level: 0.1,
            seed: 42,
        }
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Invalid(#[from] IngestError),
}

impl SynthConfig {
    pub fn check(&self) -> Result<(), SynthError> {
        let fail = |m: String| Err(SynthError::Infeasible(m));
        for (name, v) in [
            ("n_users", self.n_users),
            ("n_venues", self.n_venues),
            ("n_candidates_per_request", self.n_candidates_per_request),
            ("history_size", self.history_size),
            ("category_vocab_size", self.category_vocab_size),
            ("tag_vocab_size", self.tag_vocab_size),
            ("review_term_vocab_size", self.review_term_vocab_size),
        ] {
            if v < 1 {
                return fail(format!("{name} must be at least 1"));
            }
        }
        if !(0.0..=1.0).contains(&self.noise_level) {
            return fail(format!("noise_level {} outside [0, 1]", self.noise_level));
        }
        if self.n_candidates_per_request + self.history_size > self.n_venues {
            return fail(format!(
                "{} candidates plus {} history venues exceed {} venues",
                self.n_candidates_per_request, self.history_size, self.n_venues
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VenueTruth {
    pub categories: Vec<usize>,
    pub peak_season: Season,
    pub peak_trip: TripType,
    pub peak_group: GroupType,
}

/// The hidden preference function a synthetic bundle was drawn from.
#[derive(Debug, Clone)]
pub struct SyntheticTruth {
    /// Per user, stance on each category: +1 liked, −1 disliked, 0 neutral.
    pub stances: BTreeMap<String, Vec<i8>>,
    /// Per user, the season and traveler profile their request is issued in.
    pub preferred: BTreeMap<String, ContextSignals>,
    pub venues: BTreeMap<String, VenueTruth>,
}

impl SyntheticTruth {
    pub fn affinity(&self, user_id: &str, venue_id: &str) -> i32 {
        let stance = &self.stances[user_id];
        self.venues[venue_id]
            .categories
            .iter()
            .map(|&c| stance[c] as i32)
            .sum()
    }

    pub fn context_match(&self, venue_id: &str, context: &ContextSignals) -> i32 {
        let v = &self.venues[venue_id];
        (v.peak_season == context.season) as i32
            + (v.peak_trip == context.trip_type) as i32
            + (v.peak_group == context.group_type) as i32
    }

    /// Noise-free relevance grade.
    pub fn grade(&self, user_id: &str, venue_id: &str, context: &ContextSignals) -> u8 {
        let u = 2 * self.affinity(user_id, venue_id) + self.context_match(venue_id, context);
        u.clamp(0, 4) as u8
    }

    /// Noise-free history rating.
    pub fn rating(&self, user_id: &str, venue_id: &str) -> u8 {
        (self.affinity(user_id, venue_id) + 2).clamp(0, 4) as u8
    }
}

const STOP_FILLER: [&str; 6] = ["the", "and", "was", "with", "very", "it"];

struct Vocab {
    categories: Vec<String>,
    /// Tags owned by each category.
    tags_by_category: Vec<Vec<String>>,
    all_tags: Vec<String>,
    /// Review terms owned by each category.
    terms_by_category: Vec<Vec<String>>,
    generic_terms: Vec<String>,
}

impl Vocab {
    fn new(cfg: &SynthConfig) -> Vocab {
        let nc = cfg.category_vocab_size;
        let categories: Vec<String> = (0..nc).map(|i| format!("category {i:02}")).collect();
        let all_tags: Vec<String> = (0..cfg.tag_vocab_size)
            .map(|i| format!("tag{i:03}"))
            .collect();
        let tags_by_category = (0..nc)
            .map(|c| {
                all_tags
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i % nc == c)
                    .map(|(_, t)| t.clone())
                    .collect()
            })
            .collect();
        let terms: Vec<String> = (0..cfg.review_term_vocab_size)
            .map(|i| format!("w{i:04}"))
            .collect();
        // one extra share of the term vocabulary is category-neutral
        let shares = nc + 1;
        let terms_by_category = (0..nc)
            .map(|c| {
                terms
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i % shares == c)
                    .map(|(_, t)| t.clone())
                    .collect()
            })
            .collect();
        let generic_terms = terms
            .iter()
            .enumerate()
            .filter(|(i, _)| i % shares == nc)
            .map(|(_, t)| t.clone())
            .collect();
        Vocab {
            categories,
            tags_by_category,
            all_tags,
            terms_by_category,
            generic_terms,
        }
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> Option<&'a T> {
    xs.choose(rng)
}

fn noisy(rng: &mut ChaCha8Rng, clean: u8, noise: f64) -> u8 {
    if rng.gen_bool(noise) {
        rng.gen_range(0..=4)
    } else {
        clean
    }
}

fn title_case(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn month_in(season: Season, rng: &mut ChaCha8Rng) -> u32 {
    let months: [u32; 3] = match season {
        Season::Spring => [3, 4, 5],
        Season::Summer => [6, 7, 8],
        Season::Fall => [9, 10, 11],
        Season::Winter => [12, 1, 2],
    };
    months[rng.gen_range(0..3)]
}

fn review_text(rng: &mut ChaCha8Rng, vocab: &Vocab, categories: &[usize]) -> String {
    let len = rng.gen_range(8..=14);
    let mut words = Vec::with_capacity(len);
    for _ in 0..len {
        let roll: f64 = rng.gen();
        let word = if roll < 0.6 {
            let c = categories[rng.gen_range(0..categories.len())];
            pick(rng, &vocab.terms_by_category[c])
                .or_else(|| pick(rng, &vocab.generic_terms))
                .map(String::as_str)
        } else if roll < 0.9 {
            pick(rng, &vocab.generic_terms).map(String::as_str)
        } else {
            pick(rng, &STOP_FILLER).copied()
        };
        if let Some(w) = word {
            words.push(w);
        }
    }
    words.join(" ")
}

fn sample_stars(rng: &mut ChaCha8Rng) -> Stars {
    const WEIGHTS: [f64; 5] = [0.10, 0.15, 0.20, 0.30, 0.25];
    let mut roll: f64 = rng.gen();
    for (i, w) in WEIGHTS.iter().enumerate() {
        if roll < *w {
            return Stars::new(i as u8 + 1).expect("1..=5");
        }
        roll -= w;
    }
    Stars::new(5).expect("1..=5")
}

fn make_venue(rng: &mut ChaCha8Rng, vocab: &Vocab, index: usize) -> (VenueRecord, VenueTruth) {
    let nc = vocab.categories.len();
    let mut categories: Vec<usize> = (0..nc)
        .collect::<Vec<_>>()
        .choose_multiple(rng, nc.min(2))
        .copied()
        .collect();
    categories.sort_unstable();
    let truth = VenueTruth {
        categories: categories.clone(),
        peak_season: Season::ALL[rng.gen_range(0..4)],
        peak_trip: TripType::ALL[rng.gen_range(0..2)],
        peak_group: GroupType::ALL[rng.gen_range(0..4)],
    };

    let id = format!("v{index:04}");
    let mut venue = VenueRecord::new(id.clone());
    let names: Vec<String> = categories
        .iter()
        .map(|&c| vocab.categories[c].clone())
        .collect();
    let on_yelp = rng.gen_bool(0.9);
    venue
        .categories_by_source
        .insert(Source::Foursquare, names.clone());
    if on_yelp {
        venue
            .categories_by_source
            .insert(Source::Yelp, names.iter().map(|n| title_case(n)).collect());
    }

    let mut tags = BTreeSet::new();
    for &c in &categories {
        let owned = &vocab.tags_by_category[c];
        for t in owned.choose_multiple(rng, owned.len().min(2)) {
            tags.insert(t.clone());
        }
    }
    if let Some(t) = pick(rng, &vocab.all_tags) {
        tags.insert(t.clone());
    }
    venue.taste_tags = tags.into_iter().collect();

    if rng.gen_bool(0.7) {
        venue.season_checkins = Some(
            Season::ALL
                .iter()
                .map(|&s| {
                    let n = if s == truth.peak_season {
                        rng.gen_range(20..=40)
                    } else {
                        rng.gen_range(0..=10)
                    };
                    (s, n)
                })
                .collect(),
        );
    }
    if rng.gen_bool(0.85) {
        venue.traveler_checkins = Some(TravelerCheckins {
            trip: TripType::ALL
                .iter()
                .map(|&t| {
                    (
                        t,
                        if t == truth.peak_trip {
                            rng.gen_range(20..=40)
                        } else {
                            rng.gen_range(0..=10)
                        },
                    )
                })
                .collect(),
            group: GroupType::ALL
                .iter()
                .map(|&g| {
                    (
                        g,
                        if g == truth.peak_group {
                            rng.gen_range(15..=30)
                        } else {
                            rng.gen_range(0..=8)
                        },
                    )
                })
                .collect(),
        });
    }

    let mut sources = Vec::new();
    if on_yelp {
        sources.push((Source::Yelp, rng.gen_range(3..=6)));
    }
    if rng.gen_bool(0.9) {
        sources.push((Source::Tripadvisor, rng.gen_range(2..=5)));
    }
    for (source, count) in sources {
        for _ in 0..count {
            let season = if rng.gen_bool(0.75) {
                truth.peak_season
            } else {
                Season::ALL[rng.gen_range(0..4)]
            };
            let timestamp = Utc
                .with_ymd_and_hms(
                    rng.gen_range(2013..=2015),
                    month_in(season, rng),
                    rng.gen_range(1..=28),
                    rng.gen_range(0..24),
                    rng.gen_range(0..60),
                    0,
                )
                .single()
                .expect("valid calendar date");
            venue.reviews.push(Review {
                venue_id: id.clone(),
                source,
                stars: sample_stars(rng),
                text: review_text(rng, vocab, &categories),
                timestamp,
            });
        }
    }
    (venue, truth)
}

pub fn generate_synthetic(
    config: &SynthConfig,
) -> Result<(DatasetBundle, SyntheticTruth), SynthError> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vocab = Vocab::new(config);
    let nc = config.category_vocab_size;

    let mut venues = Vec::with_capacity(config.n_venues);
    let mut truth = SyntheticTruth {
        stances: BTreeMap::new(),
        preferred: BTreeMap::new(),
        venues: BTreeMap::new(),
    };
    for i in 0..config.n_venues {
        let (v, t) = make_venue(&mut rng, &vocab, i);
        truth.venues.insert(v.venue_id.clone(), t);
        venues.push(v);
    }
    let venue_ids: Vec<String> = venues.iter().map(|v| v.venue_id.clone()).collect();

    let n_liked = (nc / 4).max(1);
    let n_disliked = (nc / 4).min(nc - n_liked);
    let mut histories = Vec::with_capacity(config.n_users);
    let mut requests = Vec::with_capacity(config.n_users);
    let mut qrels = Vec::new();
    for u in 0..config.n_users {
        let user_id = format!("u{u:03}");
        let mut order: Vec<usize> = (0..nc).collect();
        order.shuffle(&mut rng);
        let mut stance = vec![0i8; nc];
        for &c in &order[..n_liked] {
            stance[c] = 1;
        }
        for &c in &order[n_liked..n_liked + n_disliked] {
            stance[c] = -1;
        }
        truth.stances.insert(user_id.clone(), stance);

        let mut shuffled = venue_ids.clone();
        shuffled.shuffle(&mut rng);
        let (history_ids, rest) = shuffled.split_at(config.history_size);
        let mut history_ids = history_ids.to_vec();
        // every user needs a positive example to build a profile from
        if !history_ids
            .iter()
            .any(|v| truth.affinity(&user_id, v) >= POSITIVE_AFFINITY)
        {
            if let Some(v) = rest
                .iter()
                .find(|v| truth.affinity(&user_id, v) >= POSITIVE_AFFINITY)
            {
                history_ids[0] = v.clone();
            }
        }
        let history_set: BTreeSet<&String> = history_ids.iter().collect();
        let candidate_pool: Vec<&String> = shuffled
            .iter()
            .filter(|v| !history_set.contains(v))
            .collect();

        let rated = history_ids
            .iter()
            .map(|v| {
                let clean = truth.rating(&user_id, v);
                RatedVenue::new(v.clone(), noisy(&mut rng, clean, config.noise_level))
            })
            .collect();
        histories.push(UserHistory {
            user_id: user_id.clone(),
            rated,
        });

        let context = ContextSignals {
            season: Season::ALL[rng.gen_range(0..4)],
            trip_type: TripType::ALL[rng.gen_range(0..2)],
            group_type: GroupType::ALL[rng.gen_range(0..4)],
        };
        truth.preferred.insert(user_id.clone(), context);
        let request_id = format!("r{u:03}");
        let candidates: Vec<String> = candidate_pool
            .into_iter()
            .take(config.n_candidates_per_request)
            .cloned()
            .collect();
        for v in &candidates {
            let clean = truth.grade(&user_id, v, &context);
            qrels.push(Qrel {
                request_id: request_id.clone(),
                venue_id: v.clone(),
                grade: noisy(&mut rng, clean, config.noise_level),
            });
        }
        requests.push(SuggestionRequest {
            request_id,
            user_id,
            context,
            candidates,
        });
    }

    let reviews: Vec<Review> = venues
        .iter_mut()
        .flat_map(|v| std::mem::take(&mut v.reviews))
        .collect();
    let bundle = DatasetBundle::assemble(venues, reviews, histories, requests, qrels)?;
    Ok((bundle, truth))
}
