use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::HarnessError;

pub const MANIFEST: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Index of a bundle's files. Holds nothing time- or host-dependent, so
/// identical runs produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub name: String,
    pub kind: String,
    pub seed: u64,
    pub files: Vec<ManifestEntry>,
}

/// In-memory artifact set, keyed by bundle-relative path.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bundle {
    pub name: String,
    pub kind: String,
    pub seed: u64,
    pub files: BTreeMap<String, Vec<u8>>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

impl Bundle {
    pub fn new(name: impl Into<String>, kind: impl Into<String>, seed: u64) -> Self {
        Self { name: name.into(), kind: kind.into(), seed, files: BTreeMap::new() }
    }

    pub fn add(&mut self, path: impl Into<String>, data: impl Into<Vec<u8>>) {
        let path = path.into();
        debug_assert!(path != MANIFEST && !path.starts_with('/') && !path.contains(".."));
        self.files.insert(path, data.into());
    }

    pub fn add_json(&mut self, path: impl Into<String>, value: &impl Serialize) {
        let mut text = serde_json::to_string_pretty(value).expect("value serializes");
        text.push('\n');
        self.add(path, text);
    }

    pub fn get(&self, path: &str) -> Option<&[u8]> {
        self.files.get(path).map(Vec::as_slice)
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            version: MANIFEST_VERSION,
            name: self.name.clone(),
            kind: self.kind.clone(),
            seed: self.seed,
            files: self
                .files
                .iter()
                .map(|(p, d)| ManifestEntry { path: p.clone(), sha256: sha256_hex(d), bytes: d.len() as u64 })
                .collect(),
        }
    }

    /// Writes every file and the manifest under `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        for (p, d) in &self.files {
            let path = dir.join(p);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
            }
            std::fs::write(&path, d).map_err(|e| HarnessError::io(&path, e))?;
        }
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let mut text = serde_json::to_string_pretty(&self.manifest()).expect("manifest serializes");
        text.push('\n');
        let path = dir.join(MANIFEST);
        std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))
    }

    /// Loads a bundle listed by its manifest. Missing files are an error.
    pub fn read(dir: &Path) -> Result<Self, HarnessError> {
        let manifest = read_manifest(dir)?;
        let mut b = Bundle::new(manifest.name, manifest.kind, manifest.seed);
        for e in manifest.files {
            let path = dir.join(&e.path);
            let data = std::fs::read(&path)
                .map_err(|err| HarnessError::IncompleteBundle(format!("{}: {err}", path.display())))?;
            b.files.insert(e.path, data);
        }
        Ok(b)
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, HarnessError> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| HarnessError::IncompleteBundle(format!("{}: {e}", path.display())))?;
    let m: Manifest = serde_json::from_str(&text)
        .map_err(|e| HarnessError::IncompleteBundle(format!("{}: {e}", path.display())))?;
    if m.version != MANIFEST_VERSION {
        return Err(HarnessError::IncompleteBundle(format!("unsupported manifest version {}", m.version)));
    }
    Ok(m)
}

/// Outcome of re-hashing a bundle.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checked: usize,
    pub missing: Vec<String>,
    pub mismatched: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.missing.is_empty() && self.mismatched.is_empty()
    }
}

/// Re-checks the size and hash of every file the manifest lists.
pub fn verify(dir: &Path) -> Result<VerifyReport, HarnessError> {
    let m = read_manifest(dir)?;
    let mut r = VerifyReport::default();
    for e in &m.files {
        r.checked += 1;
        match std::fs::read(dir.join(&e.path)) {
            Ok(d) if d.len() as u64 == e.bytes && sha256_hex(&d) == e.sha256 => {}
            Ok(_) => r.mismatched.push(e.path.clone()),
            Err(_) => r.missing.push(e.path.clone()),
        }
    }
    Ok(r)
}

/// `<out>/<name>/<label>`.
pub fn bundle_dir(out: &Path, name: &str, label: &str) -> PathBuf {
    out.join(name).join(label)
}

/// Default run label: the current UTC time.
pub fn timestamp_label() -> String {
    chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string()
}
