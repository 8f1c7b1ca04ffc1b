//! JSONL corpora: reading, writing, and cross-checking a dataset bundle.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::eval::{Qrel, QrelSet};
use crate::model::{
    validate_dataset, Catalog, Review, SuggestionRequest, UserHistory, ValidationReport,
    VenueRecord, ViolationKind,
};

pub const VENUES_FILE: &str = "venues.jsonl";
pub const REVIEWS_FILE: &str = "reviews.jsonl";
pub const PROFILES_FILE: &str = "profiles.jsonl";
pub const REQUESTS_FILE: &str = "requests.jsonl";
pub const QRELS_FILE: &str = "qrels.jsonl";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("dataset failed validation:\n{0}")]
    Validation(ValidationReport),
}

#[derive(Debug, Clone)]
pub struct BundlePaths {
    pub venues: PathBuf,
    pub reviews: PathBuf,
    pub profiles: PathBuf,
    pub requests: PathBuf,
    /// Judgments are optional when only ranking is needed.
    pub qrels: Option<PathBuf>,
}

impl BundlePaths {
    /// Standard file names inside `dir`; qrels are included when present.
    pub fn in_dir(dir: &Path) -> BundlePaths {
        let qrels = dir.join(QRELS_FILE);
        BundlePaths {
            venues: dir.join(VENUES_FILE),
            reviews: dir.join(REVIEWS_FILE),
            profiles: dir.join(PROFILES_FILE),
            requests: dir.join(REQUESTS_FILE),
            qrels: qrels.exists().then_some(qrels),
        }
    }
}

/// A loaded dataset whose references all resolve.
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub catalog: Catalog,
    pub histories: Vec<UserHistory>,
    pub requests: Vec<SuggestionRequest>,
    pub qrels: Vec<Qrel>,
}

impl DatasetBundle {
    /// Attaches reviews to their venues and validates everything.
    pub fn assemble(
        mut venues: Vec<VenueRecord>,
        reviews: Vec<Review>,
        histories: Vec<UserHistory>,
        requests: Vec<SuggestionRequest>,
        qrels: Vec<Qrel>,
    ) -> Result<DatasetBundle, IngestError> {
        let index: HashMap<String, usize> = venues
            .iter()
            .enumerate()
            .map(|(i, v)| (v.venue_id.clone(), i))
            .collect();
        let mut report = ValidationReport::default();
        for review in reviews {
            match index.get(&review.venue_id) {
                Some(&i) => venues[i].reviews.push(review),
                None => report.push(
                    ViolationKind::DanglingReview,
                    review.venue_id.clone(),
                    "review names an unknown venue",
                ),
            }
        }
        report
            .violations
            .extend(validate_dataset(&venues, &histories, &requests).violations);
        report
            .violations
            .extend(validate_qrels(&qrels, &venues, &requests).violations);
        if !report.is_empty() {
            return Err(IngestError::Validation(report));
        }
        Ok(DatasetBundle {
            catalog: Catalog::new(venues),
            histories,
            requests,
            qrels,
        })
    }

    pub fn qrel_set(&self) -> QrelSet {
        self.qrels.iter().cloned().collect()
    }

    pub fn history(&self, user_id: &str) -> Option<&UserHistory> {
        self.histories.iter().find(|h| h.user_id == user_id)
    }

    /// Reviews of every venue, in venue-id then attachment order.
    pub fn reviews(&self) -> impl Iterator<Item = &Review> {
        self.catalog.iter().flat_map(|v| v.reviews.iter())
    }
}

pub fn validate_qrels(
    qrels: &[Qrel],
    venues: &[VenueRecord],
    requests: &[SuggestionRequest],
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let venue_ids: std::collections::HashSet<&str> =
        venues.iter().map(|v| v.venue_id.as_str()).collect();
    let request_ids: std::collections::HashSet<&str> =
        requests.iter().map(|r| r.request_id.as_str()).collect();
    for q in qrels {
        if q.grade > 4 {
            report.push(
                ViolationKind::GradeOutOfRange,
                q.request_id.clone(),
                format!("venue {:?} grade {}", q.venue_id, q.grade),
            );
        }
        if !request_ids.contains(q.request_id.as_str()) {
            report.push(
                ViolationKind::DanglingQrel,
                q.request_id.clone(),
                "unknown request",
            );
        }
        if !venue_ids.contains(q.venue_id.as_str()) {
            report.push(
                ViolationKind::DanglingQrel,
                q.venue_id.clone(),
                "unknown venue",
            );
        }
    }
    report
}

/// Parses one JSON record per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| IngestError::Io {
            path: path.to_owned(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| IngestError::Parse {
            path: path.to_owned(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a T>,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for record in records {
        serde_json::to_writer(&mut w, record)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn load_bundle(paths: &BundlePaths) -> Result<DatasetBundle, IngestError> {
    let venues = read_jsonl(&paths.venues)?;
    let reviews = read_jsonl(&paths.reviews)?;
    let histories = read_jsonl(&paths.profiles)?;
    let requests = read_jsonl(&paths.requests)?;
    let qrels = match &paths.qrels {
        Some(p) => read_jsonl(p)?,
        None => Vec::new(),
    };
    DatasetBundle::assemble(venues, reviews, histories, requests, qrels)
}

/// Writes the bundle's five corpora under their standard names in `dir`.
pub fn write_bundle(bundle: &DatasetBundle, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    write_jsonl(&dir.join(VENUES_FILE), bundle.catalog.iter())?;
    write_jsonl(&dir.join(REVIEWS_FILE), bundle.reviews())?;
    write_jsonl(&dir.join(PROFILES_FILE), &bundle.histories)?;
    write_jsonl(&dir.join(REQUESTS_FILE), &bundle.requests)?;
    write_jsonl(&dir.join(QRELS_FILE), &bundle.qrels)
}
