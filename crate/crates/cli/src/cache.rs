//! On-disk cache of assembled Gram matrices.
//!
//! One JSON file per `(F tag, degree, quadrature fingerprint)`. Entries are
//! stored with shortest round-trip formatting, so a reload is bit-exact; the
//! SVD is recomputed by the caller. A SHA-256 checksum over the payload
//! detects edits, and writes go through a temporary file and a rename.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use fock_core::approx::GramMatrix;
use fock_core::QuadratureSpec;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const CACHE_VERSION: u32 = 1;
pub const CACHE_DIR_ENV: &str = "FOCKLAB_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GramKey {
    pub f_tag: String,
    pub degree: usize,
    pub quadrature_fingerprint: String,
}

impl GramKey {
    pub fn new(f_tag: &str, degree: usize, q: &QuadratureSpec) -> Self {
        GramKey {
            f_tag: f_tag.to_string(),
            degree,
            quadrature_fingerprint: quadrature_fingerprint(q),
        }
    }

    fn file_name(&self) -> String {
        let text = serde_json::to_string(self).expect("key serializes");
        format!("gram-{}.json", &hex::encode(Sha256::digest(text.as_bytes()))[..32])
    }
}

pub fn quadrature_fingerprint(q: &QuadratureSpec) -> String {
    let v = toml::Value::try_from(q).expect("quadrature is representable in TOML");
    hex::encode(Sha256::digest(toml::to_string(&v).expect("TOML serializes").as_bytes()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Payload {
    version: u32,
    key: GramKey,
    config_fingerprint: String,
    /// Row-major `[re, im]` pairs.
    entries: Vec<[f64; 2]>,
}

impl Payload {
    fn checksum(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("payload serializes")))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheFile {
    checksum: String,
    payload: Payload,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Lookup {
    Hit(GramMatrix),
    Miss,
    /// A file exists but failed an integrity check.
    Rejected(String),
}

#[derive(Debug, Clone)]
pub struct GramCache {
    dir: PathBuf,
}

impl GramCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        GramCache { dir: dir.into() }
    }

    /// `$FOCKLAB_CACHE_DIR` if set, otherwise `<out>/cache`.
    pub fn from_env(out_dir: &Path) -> Self {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(d) if !d.is_empty() => Self::new(PathBuf::from(d)),
            _ => Self::new(out_dir.join("cache")),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &GramKey) -> PathBuf {
        self.dir.join(key.file_name())
    }

    pub fn load(&self, key: &GramKey) -> Lookup {
        let path = self.path_for(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(_) => return Lookup::Miss,
        };
        let reject = |why: &str| Lookup::Rejected(format!("{}: {why}; recomputed", path.display()));
        let file: CacheFile = match serde_json::from_slice(&bytes) {
            Ok(f) => f,
            Err(e) => return reject(&format!("unreadable cache file ({e})")),
        };
        if file.payload.version != CACHE_VERSION {
            return reject(&format!("cache version {} (expected {CACHE_VERSION})", file.payload.version));
        }
        if file.payload.checksum() != file.checksum {
            return reject("checksum mismatch");
        }
        if &file.payload.key != key {
            return reject("key mismatch");
        }
        let n = key.degree + 1;
        if file.payload.entries.len() != n * n {
            return reject("wrong number of entries");
        }
        let entries = DMatrix::from_row_iterator(n, n, file.payload.entries.iter().map(|[re, im]| Complex64::new(*re, *im)));
        Lookup::Hit(GramMatrix {
            label: key.f_tag.clone(),
            degree: key.degree,
            entries,
        })
    }

    pub fn store(&self, key: &GramKey, gram: &GramMatrix, config_fingerprint: &str) -> std::io::Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let n = gram.degree + 1;
        let entries = (0..n)
            .flat_map(|j| (0..n).map(move |k| (j, k)))
            .map(|(j, k)| {
                let v = gram.entries[(j, k)];
                [v.re, v.im]
            })
            .collect();
        let payload = Payload {
            version: CACHE_VERSION,
            key: key.clone(),
            config_fingerprint: config_fingerprint.to_string(),
            entries,
        };
        let file = CacheFile {
            checksum: payload.checksum(),
            payload,
        };
        let path = self.path_for(key);
        let tmp = self.dir.join(format!(".{}.tmp{}", key.file_name(), std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            serde_json::to_writer(&mut f, &file)?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(path)
    }
}
