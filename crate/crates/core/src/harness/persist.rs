//! Model files: a one-line header naming format, version, kind, payload
//! length and SHA-256, followed by the JSON payload.
//!
//! ```text
//! venuerank-model 1 ranker 3f2a…c9 48213
//! {"trees":[…],…}
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ltr::LambdaMartModel;
use crate::model::Source;
use crate::review::ReviewModel;

pub const MAGIC: &str = "venuerank-model";
pub const FORMAT_VERSION: u32 = 1;

pub const RANKER_FILE: &str = "ranker.model";
pub const REVIEW_DIR: &str = "review";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: not a model file")]
    BadHeader { path: PathBuf },
    #[error("{path}: format version {found}, expected {FORMAT_VERSION}")]
    VersionMismatch { path: PathBuf, found: u32 },
    #[error("{path}: holds a {found} model, expected {expected}")]
    KindMismatch {
        path: PathBuf,
        found: String,
        expected: String,
    },
    #[error("{path}: checksum mismatch (file corrupt or truncated)")]
    ChecksumMismatch { path: PathBuf },
    #[error("{path}: {message}")]
    Decode { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PersistError + '_ {
    move |source| PersistError::Io {
        path: path.to_owned(),
        source,
    }
}

pub fn encode_model<T: Serialize>(kind: &str, model: &T) -> Vec<u8> {
    let payload = serde_json::to_vec(model).expect("model types serialize infallibly");
    let digest = hex::encode(Sha256::digest(&payload));
    let mut out = format!(
        "{MAGIC} {FORMAT_VERSION} {kind} {digest} {}\n",
        payload.len()
    )
    .into_bytes();
    out.extend_from_slice(&payload);
    out
}

pub fn decode_model<T: DeserializeOwned>(
    path: &Path,
    kind: &str,
    bytes: &[u8],
) -> Result<T, PersistError> {
    let bad_header = || PersistError::BadHeader {
        path: path.to_owned(),
    };
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(bad_header)?;
    let header = std::str::from_utf8(&bytes[..newline]).map_err(|_| bad_header())?;
    let payload = &bytes[newline + 1..];
    let fields: Vec<&str> = header.split(' ').collect();
    let [magic, version, found_kind, digest, len] = fields[..] else {
        return Err(bad_header());
    };
    if magic != MAGIC {
        return Err(bad_header());
    }
    let version: u32 = version.parse().map_err(|_| bad_header())?;
    if version != FORMAT_VERSION {
        return Err(PersistError::VersionMismatch {
            path: path.to_owned(),
            found: version,
        });
    }
    if found_kind != kind {
        return Err(PersistError::KindMismatch {
            path: path.to_owned(),
            found: found_kind.to_owned(),
            expected: kind.to_owned(),
        });
    }
    let len: usize = len.parse().map_err(|_| bad_header())?;
    if payload.len() != len || hex::encode(Sha256::digest(payload)) != digest {
        return Err(PersistError::ChecksumMismatch {
            path: path.to_owned(),
        });
    }
    serde_json::from_slice(payload).map_err(|e| PersistError::Decode {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

pub fn save_model<T: Serialize>(path: &Path, kind: &str, model: &T) -> Result<(), PersistError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, encode_model(kind, model)).map_err(io_err(path))
}

pub fn load_model<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T, PersistError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_model(path, kind, &bytes)
}

/// Ranker plus every per-user review classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModels {
    pub ranker: LambdaMartModel,
    pub review: BTreeMap<(String, Source), ReviewModel>,
}

impl TrainedModels {
    pub fn review_model(&self, user_id: &str, source: Source) -> Option<&ReviewModel> {
        self.review.get(&(user_id.to_owned(), source))
    }
}

/// File-name-safe rendering of a user id: ASCII alphanumerics, `-` and `_`
/// are kept, every other byte becomes `%XX`.
pub fn escape_file_stem(id: &str) -> String {
    let mut out = String::with_capacity(id.len());
    for b in id.bytes() {
        if b.is_ascii_alphanumeric() || b == b'-' || b == b'_' {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

pub fn review_model_path(dir: &Path, user_id: &str, source: Source) -> PathBuf {
    dir.join(REVIEW_DIR)
        .join(format!("{}.{source}.model", escape_file_stem(user_id)))
}

pub fn save_models(dir: &Path, models: &TrainedModels) -> Result<(), PersistError> {
    save_model(&dir.join(RANKER_FILE), "ranker", &models.ranker)?;
    let review_dir = dir.join(REVIEW_DIR);
    if review_dir.exists() {
        fs::remove_dir_all(&review_dir).map_err(io_err(&review_dir))?;
    }
    fs::create_dir_all(&review_dir).map_err(io_err(&review_dir))?;
    for ((user, source), model) in &models.review {
        save_model(&review_model_path(dir, user, *source), "svm", model)?;
    }
    Ok(())
}

pub fn load_models(dir: &Path) -> Result<TrainedModels, PersistError> {
    let ranker = load_model(&dir.join(RANKER_FILE), "ranker")?;
    let review_dir = dir.join(REVIEW_DIR);
    let mut review = BTreeMap::new();
    if review_dir.exists() {
        let mut paths: Vec<PathBuf> = fs::read_dir(&review_dir)
            .map_err(io_err(&review_dir))?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(io_err(&review_dir))?;
        paths.sort();
        for path in paths {
            if path.extension().is_some_and(|e| e == "model") {
                let model: ReviewModel = load_model(&path, "svm")?;
                review.insert((model.user_id.clone(), model.source), model);
            }
        }
    }
    Ok(TrainedModels { ranker, review })
}
