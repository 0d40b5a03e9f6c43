//! Reproducibility metadata written next to every output.

use std::fs;
use std::io::{self, Read};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// SHA-256 (hex) of the input bytes the run consumed: the config file for
    /// `simulate`, the log (then snapshot and exclusion list, if given) for
    /// `analyze` and `fit`.
    pub config_digest: String,
    /// `None` when the run drew no random numbers.
    pub master_seed: Option<u64>,
    /// Wall-clock seconds since the epoch at which the run finished.
    pub timestamp: i64,
    pub tool_version: String,
    /// `None` when the run did not simulate.
    pub n_cap_used: Option<u64>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config_digest: String, master_seed: Option<u64>, n_cap_used: Option<u64>) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs() as i64);
        RunManifest {
            subcommand: subcommand.to_owned(),
            config_digest,
            master_seed,
            timestamp,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            n_cap_used,
        }
    }

    pub fn write_to_dir(&self, dir: &Path) -> io::Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(dir.join(MANIFEST_FILE), json + "\n")
    }

    pub fn read_from_dir(dir: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Whether `bytes` are the input this manifest describes.
    pub fn verifies(&self, bytes: &[u8]) -> bool {
        sha256_hex(bytes) == self.config_digest
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Passes reads through while feeding every byte handed out to a hasher, so
/// several inputs can share one digest.
pub struct HashingReader<'h, R> {
    inner: R,
    hasher: &'h mut Sha256,
}

impl<'h, R: Read> HashingReader<'h, R> {
    pub fn new(inner: R, hasher: &'h mut Sha256) -> Self {
        HashingReader { inner, hasher }
    }

    /// Hashes whatever the consumer left unread.
    pub fn drain(mut self) -> io::Result<()> {
        let mut buf = [0u8; 8192];
        loop {
            match self.read(&mut buf)? {
                0 => return Ok(()),
                _ => continue,
            }
        }
    }
}

impl<R: Read> Read for HashingReader<'_, R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }
}

pub fn finish_digest(hasher: Sha256) -> String {
    hex::encode(hasher.finalize())
}
