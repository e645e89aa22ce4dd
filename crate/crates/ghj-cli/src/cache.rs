//! Best-effort on-disk cache for decomposed connection systems.
//!
//! One JSON file per (diagram, artifact version). Entries embed the payload
//! as a string together with its SHA-256 checksum; anything that fails to
//! read, parse, or verify is treated as a miss and recomputed. Writes go to
//! a temporary file in the same directory and are renamed into place, so
//! concurrent invocations never observe partial entries.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ghj_core::ConnectionSystem;

const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    #[serde(rename = "schemaVersion")]
    schema_version: u32,
    /// Canonical diagram name plus the version of this binary.
    key: String,
    /// Hex SHA-256 of `payload`.
    checksum: String,
    /// The serialized connection system.
    payload: String,
}

pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    /// Resolve the cache directory: `GHJ_CACHE_DIR` if set, else the user
    /// cache home (`XDG_CACHE_HOME` or `~/.cache`) under `ghj`. With no
    /// resolvable directory the cache is disabled.
    pub fn from_env() -> Cache {
        let dir = std::env::var_os("GHJ_CACHE_DIR")
            .map(PathBuf::from)
            .or_else(|| {
                std::env::var_os("XDG_CACHE_HOME")
                    .filter(|v| !v.is_empty())
                    .map(|v| PathBuf::from(v).join("ghj"))
            })
            .or_else(|| {
                std::env::var_os("HOME")
                    .filter(|v| !v.is_empty())
                    .map(|v| PathBuf::from(v).join(".cache").join("ghj"))
            });
        Cache { dir }
    }

    fn key(name: &str) -> String {
        format!("{name}#{}", env!("CARGO_PKG_VERSION"))
    }

    fn path(&self, name: &str) -> Option<PathBuf> {
        let file = format!(
            "{}-v{}.json",
            name.to_ascii_lowercase(),
            env!("CARGO_PKG_VERSION")
        );
        self.dir.as_ref().map(|d| d.join(file))
    }

    /// Return the cached system for `name`, or None on any miss, version
    /// mismatch, or checksum failure.
    pub fn load(&self, name: &str) -> Option<ConnectionSystem> {
        let text = std::fs::read_to_string(self.path(name)?).ok()?;
        let entry: CacheEntry = serde_json::from_str(&text).ok()?;
        if entry.schema_version != SCHEMA_VERSION || entry.key != Self::key(name) {
            return None;
        }
        if hex_sha256(&entry.payload) != entry.checksum {
            return None;
        }
        serde_json::from_str(&entry.payload).ok()
    }

    /// Store the system under `name`. Failures are silently ignored: the
    /// cache is an optimization, never a requirement.
    pub fn store(&self, name: &str, sys: &ConnectionSystem) {
        let Some(path) = self.path(name) else { return };
        let Some(dir) = path.parent() else { return };
        if std::fs::create_dir_all(dir).is_err() {
            return;
        }
        let Ok(payload) = serde_json::to_string(sys) else {
            return;
        };
        let entry = CacheEntry {
            schema_version: SCHEMA_VERSION,
            key: Self::key(name),
            checksum: hex_sha256(&payload),
            payload,
        };
        let Ok(body) = serde_json::to_string(&entry) else {
            return;
        };
        let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
        if std::fs::write(&tmp, body).is_ok() && std::fs::rename(&tmp, &path).is_err() {
            let _ = std::fs::remove_file(&tmp);
        }
    }
}

fn hex_sha256(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
