//! Versioned, checksummed snapshots of profile and classifier state.
//!
//! A snapshot file is a JSON envelope:
//!
//! ```text
//! {"format":"rmprofile-snapshot","version":1,"checksum":"<sha256 hex>","payload":{...}}
//! ```
//!
//! The checksum covers the exact payload bytes as written. Floats are written
//! in shortest round-trip form, so a reload restores every bit.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use crate::classifier::ClassifierModel;
use crate::error::{Error, Result};
use crate::updater::ProfileState;

pub const SNAPSHOT_FORMAT: &str = "rmprofile-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "kebab-case")]
pub enum SnapshotBody {
    Profile(Box<ProfileState>),
    Classifier(ClassifierModel),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub body: SnapshotBody,
    /// Free-form provenance, e.g. the command line or seed that produced it.
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl Snapshot {
    pub fn profile(state: ProfileState) -> Self {
        Snapshot {
            body: SnapshotBody::Profile(Box::new(state)),
            meta: BTreeMap::new(),
        }
    }

    pub fn classifier(model: ClassifierModel) -> Self {
        Snapshot {
            body: SnapshotBody::Classifier(model),
            meta: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.meta.insert(key.into(), value.into());
        self
    }

    pub fn into_profile(self) -> Result<ProfileState> {
        match self.body {
            SnapshotBody::Profile(p) => Ok(*p),
            SnapshotBody::Classifier(_) => {
                Err(Error::InvalidInput("snapshot holds a classifier, not a profile".into()))
            }
        }
    }

    pub fn into_classifier(self) -> Result<ClassifierModel> {
        match self.body {
            SnapshotBody::Classifier(c) => Ok(c),
            SnapshotBody::Profile(_) => Err(Error::InvalidInput("snapshot holds a profile, not a classifier".into())),
        }
    }
}

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    format: &'a str,
    version: u32,
    checksum: String,
    payload: &'a RawValue,
}

#[derive(Deserialize)]
struct EnvelopeIn<'a> {
    format: String,
    version: u32,
    checksum: String,
    #[serde(borrow)]
    payload: &'a RawValue,
}

/// Header fields only, so the version can be checked before the payload.
#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

fn digest(bytes: &str) -> String {
    hex::encode(Sha256::digest(bytes.as_bytes()))
}

/// Serialises a snapshot to its envelope text.
pub fn encode(snapshot: &Snapshot) -> Result<String> {
    let payload =
        serde_json::to_string(snapshot).map_err(|e| Error::InvalidState(format!("serialising snapshot: {e}")))?;
    let raw = RawValue::from_string(payload).map_err(|e| Error::InvalidState(e.to_string()))?;
    let env = EnvelopeOut {
        format: SNAPSHOT_FORMAT,
        version: SNAPSHOT_VERSION,
        checksum: digest(raw.get()),
        payload: &raw,
    };
    serde_json::to_string(&env).map_err(|e| Error::InvalidState(e.to_string()))
}

/// Parses envelope text, checking format, version and checksum in that order.
pub fn decode(text: &str) -> Result<Snapshot> {
    let header: Header =
        serde_json::from_str(text).map_err(|e| Error::CorruptState(format!("unreadable envelope: {e}")))?;
    if header.format != SNAPSHOT_FORMAT {
        return Err(Error::CorruptState(format!("unknown format {:?}", header.format)));
    }
    if header.version != SNAPSHOT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: header.version,
            expected: SNAPSHOT_VERSION,
        });
    }
    let env: EnvelopeIn<'_> =
        serde_json::from_str(text).map_err(|e| Error::CorruptState(format!("unreadable envelope: {e}")))?;
    debug_assert_eq!(env.format, header.format);
    debug_assert_eq!(env.version, header.version);
    if digest(env.payload.get()) != env.checksum {
        return Err(Error::CorruptState("checksum mismatch".into()));
    }
    let snap: Snapshot =
        serde_json::from_str(env.payload.get()).map_err(|e| Error::CorruptState(format!("bad payload: {e}")))?;
    check(&snap)?;
    Ok(snap)
}

/// Structural checks that a checksum cannot catch (e.g. hand-edited files
/// with a recomputed digest).
fn check(snap: &Snapshot) -> Result<()> {
    match &snap.body {
        SnapshotBody::Profile(p) => p.check_consistent().map_err(|e| Error::CorruptState(e.to_string())),
        SnapshotBody::Classifier(c) => {
            if c.weights.iter().chain([&c.bias]).all(|v| v.is_finite()) {
                Ok(())
            } else {
                Err(Error::CorruptState("non-finite classifier parameter".into()))
            }
        }
    }
}

/// Writes atomically: the envelope goes to a sibling temp file which is then
/// renamed over `path`.
pub fn snapshot_save(snapshot: &Snapshot, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = encode(snapshot)?;
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(text.as_bytes()).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn snapshot_load(path: impl AsRef<Path>) -> Result<Snapshot> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode(&text)
}
