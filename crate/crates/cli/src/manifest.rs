//! Run manifests: who ran what, with which parameters, and digests of every
//! primary output. Timing lives here and never in the primary outputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::emit::{json_string, sha256_file, write_text};
use crate::error::CliResult;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OutputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
    pub params: Value,
    pub outputs: Vec<OutputDigest>,
    pub rng: String,
    pub threads: usize,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    /// Digests `outputs` as they are on disk now.
    pub fn new(
        command_line: Vec<String>,
        seed: Option<u64>,
        params: Value,
        outputs: &[PathBuf],
        threads: usize,
        wall_clock_seconds: f64,
    ) -> CliResult<Self> {
        let outputs = outputs
            .iter()
            .map(|p| {
                Ok(OutputDigest {
                    path: p.clone(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(RunManifest {
            command_line,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            params,
            outputs,
            rng: gmplab::sample::RNG_NAME.to_string(),
            threads,
            wall_clock_seconds,
        })
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_text(path, &json_string(self)?)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| crate::error::CliError::Validation(e.to_string()))
    }

    /// Every referenced output exists and still matches its digest.
    pub fn verify(&self) -> bool {
        self.outputs
            .iter()
            .all(|o| sha256_file(&o.path).is_ok_and(|d| d == o.sha256))
    }
}

/// `<out>.manifest.json` next to `out`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
