//! Shared on-disk codec: a directory holding a JSON manifest plus raw
//! little-endian float blobs, each referenced by relative filename and
//! SHA-256 digest.
//!
//! ```text
//! bundle/
//!   manifest.json   {"magic": "topomap-bundle", "kind": ..., "format_version": "1.0", "blobs": {...}, ...}
//!   c.f32           rows × cols, row-major, little-endian
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MAGIC: &str = "topomap-bundle";
pub const FORMAT_MAJOR: u32 = 1;
pub const FORMAT_VERSION: &str = "1.0";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DType {
    #[serde(rename = "f32le")]
    F32,
    #[serde(rename = "f64le")]
    F64,
}

impl DType {
    fn width(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlobRef {
    pub file: String,
    pub dtype: DType,
    pub rows: usize,
    pub cols: usize,
    pub sha256: String,
}

/// Fields shared by every manifest. Kind-specific content is flattened
/// alongside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub magic: String,
    pub kind: String,
    pub format_version: String,
    #[serde(flatten)]
    pub body: T,
    pub blobs: BTreeMap<String, BlobRef>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects blobs and writes a bundle in one go.
#[derive(Debug)]
pub struct BundleWriter {
    dir: PathBuf,
    kind: &'static str,
    blobs: BTreeMap<String, BlobRef>,
    pending: Vec<(String, Vec<u8>)>,
}

impl BundleWriter {
    pub fn new(dir: impl AsRef<Path>, kind: &'static str) -> Self {
        Self {
            dir: dir.as_ref().to_path_buf(),
            kind,
            blobs: BTreeMap::new(),
            pending: Vec::new(),
        }
    }

    pub fn add_f32(&mut self, name: &str, rows: usize, cols: usize, data: impl IntoIterator<Item = f32>) {
        let bytes: Vec<u8> = data.into_iter().flat_map(f32::to_le_bytes).collect();
        self.add_bytes(name, DType::F32, rows, cols, bytes);
    }

    pub fn add_f64(&mut self, name: &str, rows: usize, cols: usize, data: impl IntoIterator<Item = f64>) {
        let bytes: Vec<u8> = data.into_iter().flat_map(f64::to_le_bytes).collect();
        self.add_bytes(name, DType::F64, rows, cols, bytes);
    }

    fn add_bytes(&mut self, name: &str, dtype: DType, rows: usize, cols: usize, bytes: Vec<u8>) {
        debug_assert_eq!(bytes.len(), rows * cols * dtype.width());
        let ext = match dtype {
            DType::F32 => "f32",
            DType::F64 => "f64",
        };
        let file = format!("{name}.{ext}");
        self.blobs.insert(
            name.to_owned(),
            BlobRef {
                file: file.clone(),
                dtype,
                rows,
                cols,
                sha256: sha256_hex(&bytes),
            },
        );
        self.pending.push((file, bytes));
    }

    pub fn finish<T: Serialize>(self, body: T) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        for (file, bytes) in &self.pending {
            let path = self.dir.join(file);
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        }
        let env = Envelope {
            magic: MAGIC.to_owned(),
            kind: self.kind.to_owned(),
            format_version: FORMAT_VERSION.to_owned(),
            body,
            blobs: self.blobs,
        };
        let mut text = serde_json::to_string_pretty(&env)
            .map_err(|e| Error::format(&self.dir, e.to_string()))?;
        text.push('\n');
        let path = self.dir.join(MANIFEST_FILE);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

/// A parsed manifest with verified access to its blobs.
#[derive(Debug)]
pub struct Bundle<T> {
    dir: PathBuf,
    pub body: T,
    blobs: BTreeMap<String, BlobRef>,
}

fn check_version(found: &str) -> Result<()> {
    let major = found.split('.').next().and_then(|m| m.parse::<u32>().ok());
    if major != Some(FORMAT_MAJOR) {
        return Err(Error::UnsupportedVersion {
            found: found.to_owned(),
            supported: FORMAT_MAJOR,
        });
    }
    Ok(())
}

impl<T: DeserializeOwned> Bundle<T> {
    pub fn open(dir: impl AsRef<Path>, kind: &str) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        // check the envelope before the kind-specific body
        let raw: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
        let magic = raw.get("magic").and_then(|m| m.as_str()).unwrap_or_default();
        if magic != MAGIC {
            return Err(Error::BadMagic {
                path,
                found: magic.to_owned(),
            });
        }
        let version = raw
            .get("format_version")
            .and_then(|v| v.as_str())
            .unwrap_or_default();
        check_version(version)?;
        let found_kind = raw.get("kind").and_then(|k| k.as_str()).unwrap_or_default();
        if found_kind != kind {
            return Err(Error::format(
                &path,
                format!("expected a {kind} bundle, found {found_kind:?}"),
            ));
        }
        let env: Envelope<T> =
            serde_json::from_value(raw).map_err(|e| Error::format(&path, e.to_string()))?;
        Ok(Self {
            dir,
            body: env.body,
            blobs: env.blobs,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn read_verified(&self, name: &str, dtype: DType, rows: usize, cols: usize) -> Result<Vec<u8>> {
        let blob = self
            .blobs
            .get(name)
            .ok_or_else(|| Error::format(&self.dir, format!("missing blob {name:?}")))?;
        if blob.dtype != dtype {
            return Err(Error::format(&self.dir, format!("blob {name:?} has dtype {:?}", blob.dtype)));
        }
        if (blob.rows, blob.cols) != (rows, cols) {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: blob.rows * blob.cols,
            });
        }
        if blob.file.contains(['/', '\\']) || blob.file.starts_with('.') {
            return Err(Error::format(&self.dir, format!("blob path {:?} escapes the bundle", blob.file)));
        }
        let path = self.dir.join(&blob.file);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let actual = sha256_hex(&bytes);
        if actual != blob.sha256 {
            return Err(Error::Checksum {
                file: blob.file.clone(),
                expected: blob.sha256.clone(),
                actual,
            });
        }
        if bytes.len() != rows * cols * dtype.width() {
            return Err(Error::format(&path, "blob length does not match its shape"));
        }
        Ok(bytes)
    }

    pub fn read_f32(&self, name: &str, rows: usize, cols: usize) -> Result<Vec<f32>> {
        let bytes = self.read_verified(name, DType::F32, rows, cols)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect())
    }

    pub fn read_f64(&self, name: &str, rows: usize, cols: usize) -> Result<Vec<f64>> {
        let bytes = self.read_verified(name, DType::F64, rows, cols)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
            .collect())
    }
}

/// Byte-for-byte snapshot of every file in a bundle directory, sorted by
/// name. Used to compare saves.
pub fn snapshot(dir: impl AsRef<Path>) -> Result<Vec<(String, Vec<u8>)>> {
    let dir = dir.as_ref();
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        out.push((entry.file_name().to_string_lossy().into_owned(), bytes));
    }
    out.sort();
    Ok(out)
}
