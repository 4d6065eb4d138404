//! On-disk results store: a manifest plus one newline-delimited JSON file
//! per grid point.
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/records/<point-key>.jsonl
//! ```
//!
//! Point files are written to a temporary name and renamed into place, so a
//! file under its final name is always complete.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{DEFAULT_PLATEAU_THRESHOLD, NEGLIGIBLE_SKR};
use crate::sweep::{SweepRecord, SweepSpec};

pub const FORMAT_VERSION: u32 = 1;
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

const MANIFEST: &str = "manifest.json";
const RECORDS: &str = "records";
const TMP_SUFFIX: &str = ".tmp";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0} already contains a store; pass --resume to continue it")]
    AlreadyExists(PathBuf),
    #[error("{0} does not contain a store (missing manifest.json)")]
    Missing(PathBuf),
    #[error("manifest in {path} does not match the requested sweep (stored hash {stored}, requested {requested})")]
    ManifestMismatch {
        path: PathBuf,
        stored: String,
        requested: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Model constants that affect how stored numbers are interpreted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ModelConstants {
    pub negligible_skr: f64,
    pub plateau_threshold: f64,
}

impl Default for ModelConstants {
    fn default() -> Self {
        Self {
            negligible_skr: NEGLIGIBLE_SKR,
            plateau_threshold: DEFAULT_PLATEAU_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Manifest {
    pub format_version: u32,
    pub engine_version: String,
    pub spec: SweepSpec,
    pub constants: ModelConstants,
    /// SHA-256 over every other manifest field.
    pub spec_hash: String,
}

impl Manifest {
    pub fn new(spec: SweepSpec) -> Self {
        let mut m = Manifest {
            format_version: FORMAT_VERSION,
            engine_version: ENGINE_VERSION.to_string(),
            spec,
            constants: ModelConstants::default(),
            spec_hash: String::new(),
        };
        m.spec_hash = m.compute_hash();
        m
    }

    pub fn compute_hash(&self) -> String {
        let body = serde_json::json!({
            "format_version": self.format_version,
            "engine_version": self.engine_version,
            "spec": self.spec,
            "constants": self.constants,
        });
        hex::encode(Sha256::digest(body.to_string().as_bytes()))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(TMP_SUFFIX);
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(io_err(path))
}

#[derive(Debug)]
pub struct ResultsStore {
    root: PathBuf,
    manifest: Manifest,
    write_lock: Mutex<()>,
}

impl ResultsStore {
    /// Creates a new store. Fails if `dir` already holds one.
    pub fn create(dir: &Path, spec: SweepSpec) -> Result<Self, StoreError> {
        if dir.join(MANIFEST).exists() {
            return Err(StoreError::AlreadyExists(dir.to_path_buf()));
        }
        let records = dir.join(RECORDS);
        fs::create_dir_all(&records).map_err(io_err(&records))?;
        let manifest = Manifest::new(spec);
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        bytes.push(b'\n');
        write_atomic(&dir.join(MANIFEST), &bytes)?;
        Ok(Self {
            root: dir.to_path_buf(),
            manifest,
            write_lock: Mutex::new(()),
        })
    }

    /// Opens an existing store for `spec`, or creates it if absent. The
    /// stored manifest must match exactly. Leftover temporary files from an
    /// interrupted run are removed and existing point files are checked.
    pub fn resume(dir: &Path, spec: SweepSpec) -> Result<Self, StoreError> {
        if !dir.join(MANIFEST).exists() {
            return Self::create(dir, spec);
        }
        let store = Self::open(dir)?;
        let requested = Manifest::new(spec);
        if store.manifest.spec_hash != requested.spec_hash || store.manifest != requested {
            return Err(StoreError::ManifestMismatch {
                path: dir.join(MANIFEST),
                stored: store.manifest.spec_hash.clone(),
                requested: requested.spec_hash,
            });
        }
        let records = dir.join(RECORDS);
        fs::create_dir_all(&records).map_err(io_err(&records))?;
        for entry in fs::read_dir(&records).map_err(io_err(&records))? {
            let path = entry.map_err(io_err(&records))?.path();
            if path.to_string_lossy().ends_with(TMP_SUFFIX) {
                fs::remove_file(&path).map_err(io_err(&path))?;
            }
        }
        for key in store.point_keys()? {
            store.read_point(&key)?;
        }
        Ok(store)
    }

    /// Opens an existing store read-only.
    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Err(StoreError::Missing(dir.to_path_buf()));
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
            path: path.clone(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if manifest.compute_hash() != manifest.spec_hash {
            return Err(StoreError::Corrupt {
                path,
                line: 0,
                message: "spec_hash does not match manifest contents".into(),
            });
        }
        Ok(Self {
            root: dir.to_path_buf(),
            manifest,
            write_lock: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    fn point_path(&self, key: &str) -> PathBuf {
        self.root.join(RECORDS).join(format!("{key}.jsonl"))
    }

    pub fn has_point(&self, key: &str) -> bool {
        self.point_path(key).is_file()
    }

    pub fn write_point(&self, key: &str, records: &[SweepRecord]) -> Result<(), StoreError> {
        let mut bytes = Vec::new();
        for r in records {
            serde_json::to_writer(&mut bytes, r).expect("records serialize");
            bytes.push(b'\n');
        }
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        write_atomic(&self.point_path(key), &bytes)
    }

    pub fn read_point(&self, key: &str) -> Result<Vec<SweepRecord>, StoreError> {
        let path = self.point_path(key);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        text.lines()
            .enumerate()
            .map(|(i, line)| {
                serde_json::from_str(line).map_err(|e| StoreError::Corrupt {
                    path: path.clone(),
                    line: i + 1,
                    message: e.to_string(),
                })
            })
            .collect()
    }

    /// Keys of the points present on disk, in grid order.
    pub fn point_keys(&self) -> Result<Vec<String>, StoreError> {
        Ok(self
            .manifest
            .spec
            .grid
            .points()
            .iter()
            .map(|p| p.key())
            .filter(|k| self.has_point(k))
            .collect())
    }

    /// All records, in grid order.
    pub fn records(&self) -> Result<Vec<SweepRecord>, StoreError> {
        let mut out = Vec::new();
        for key in self.point_keys()? {
            out.extend(self.read_point(&key)?);
        }
        Ok(out)
    }

    /// Store identifier used by the HTTP facade: the directory name.
    pub fn id(&self) -> String {
        self.root
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "store".into())
    }
}
