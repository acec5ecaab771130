//! On-disk dataset format.
//!
//! A dataset is a directory holding `manifest.json` and headerless,
//! row-major, little-endian `f32` matrices for the positive and negative
//! activations. Labels (one byte per row, 0 or 1) and metadata (a JSON array
//! with one string-to-string object per row) are optional.

use std::fs;
use std::path::{Path, PathBuf};

use probelab_core::data::RowMeta;
use probelab_core::{ContrastPairSet, Matrix};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;
pub const DTYPE: &str = "f32le";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub n: usize,
    pub d: usize,
    pub dtype: String,
    pub pos_file: String,
    pub neg_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta_file: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("unsupported dataset version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("unsupported dtype {0:?} (expected {DTYPE:?})")]
    Dtype(String),
    #[error("manifest declares an empty matrix (n = {n}, d = {d})")]
    Empty { n: usize, d: usize },
    #[error("{path}: size mismatch, expected {expected} bytes from the manifest, found {found}")]
    Size {
        path: PathBuf,
        expected: u64,
        found: u64,
    },
    #[error("{path}: non-finite value at row {row}, column {col}")]
    NonFinite {
        path: PathBuf,
        row: usize,
        col: usize,
    },
    #[error("{path}: label at row {row} is {value}, expected 0 or 1")]
    Label {
        path: PathBuf,
        row: usize,
        value: u8,
    },
    #[error("{path}: {found} metadata rows for {expected} pairs")]
    MetaRows {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("{what} at row {row}, column {col} does not fit in f32")]
    NotRepresentable {
        what: &'static str,
        row: usize,
        col: usize,
    },
    #[error(transparent)]
    Invalid(#[from] probelab_core::Error),
}

type Result<T> = std::result::Result<T, DatasetError>;

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_matrix(path: &Path, n: usize, d: usize) -> Result<Matrix> {
    let bytes = read(path)?;
    let expected = (n * d * 4) as u64;
    if bytes.len() as u64 != expected {
        return Err(DatasetError::Size {
            path: path.to_path_buf(),
            expected,
            found: bytes.len() as u64,
        });
    }
    let mut data = Vec::with_capacity(n * d);
    for (idx, chunk) in bytes.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        if !v.is_finite() {
            return Err(DatasetError::NonFinite {
                path: path.to_path_buf(),
                row: idx / d,
                col: idx % d,
            });
        }
        data.push(f64::from(v));
    }
    Ok(Matrix::from_vec(n, d, data)?)
}

fn encode_matrix(m: &Matrix, what: &'static str) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(m.as_slice().len() * 4);
    for (idx, &v) in m.as_slice().iter().enumerate() {
        let f = v as f32;
        if !f.is_finite() {
            return Err(DatasetError::NotRepresentable {
                what,
                row: idx / m.cols(),
                col: idx % m.cols(),
            });
        }
        out.extend_from_slice(&f.to_le_bytes());
    }
    Ok(out)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let bytes = read(&path)?;
    let manifest: Manifest =
        serde_json::from_slice(&bytes).map_err(|source| DatasetError::Json { path, source })?;
    if manifest.version != FORMAT_VERSION {
        return Err(DatasetError::Version(manifest.version));
    }
    if manifest.dtype != DTYPE {
        return Err(DatasetError::Dtype(manifest.dtype));
    }
    if manifest.n == 0 || manifest.d == 0 {
        return Err(DatasetError::Empty {
            n: manifest.n,
            d: manifest.d,
        });
    }
    Ok(manifest)
}

pub fn load_dataset(dir: impl AsRef<Path>) -> Result<ContrastPairSet> {
    let dir = dir.as_ref();
    let m = read_manifest(dir)?;
    let pos = read_matrix(&dir.join(&m.pos_file), m.n, m.d)?;
    let neg = read_matrix(&dir.join(&m.neg_file), m.n, m.d)?;

    let labels = match &m.labels_file {
        Some(name) => {
            let path = dir.join(name);
            let bytes = read(&path)?;
            if bytes.len() != m.n {
                return Err(DatasetError::Size {
                    path,
                    expected: m.n as u64,
                    found: bytes.len() as u64,
                });
            }
            if let Some(row) = bytes.iter().position(|&b| b > 1) {
                return Err(DatasetError::Label {
                    path,
                    row,
                    value: bytes[row],
                });
            }
            Some(bytes)
        }
        None => None,
    };

    let meta = match &m.meta_file {
        Some(name) => {
            let path = dir.join(name);
            let bytes = read(&path)?;
            let rows: Vec<RowMeta> =
                serde_json::from_slice(&bytes).map_err(|source| DatasetError::Json {
                    path: path.clone(),
                    source,
                })?;
            if rows.len() != m.n {
                return Err(DatasetError::MetaRows {
                    path,
                    expected: m.n,
                    found: rows.len(),
                });
            }
            Some(rows)
        }
        None => None,
    };

    Ok(ContrastPairSet::new(pos, neg, labels, meta)?)
}

/// Writes `set` into `dir` (created if needed). Activations are stored as
/// `f32`, so only sets whose values are exactly representable round-trip
/// bit for bit.
pub fn save_dataset(set: &ContrastPairSet, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| DatasetError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let pos = encode_matrix(set.pos(), "positive activation")?;
    let neg = encode_matrix(set.neg(), "negative activation")?;
    let manifest = Manifest {
        version: FORMAT_VERSION,
        n: set.n(),
        d: set.d(),
        dtype: DTYPE.to_string(),
        pos_file: "pos.bin".into(),
        neg_file: "neg.bin".into(),
        labels_file: set.labels().map(|_| "labels.bin".into()),
        meta_file: set.meta().map(|_| "meta.json".into()),
    };
    write(&dir.join(&manifest.pos_file), &pos)?;
    write(&dir.join(&manifest.neg_file), &neg)?;
    if let (Some(labels), Some(name)) = (set.labels(), &manifest.labels_file) {
        write(&dir.join(name), labels)?;
    }
    if let (Some(meta), Some(name)) = (set.meta(), &manifest.meta_file) {
        let path = dir.join(name);
        let json = serde_json::to_vec(meta).map_err(|source| DatasetError::Json {
            path: path.clone(),
            source,
        })?;
        write(&path, &json)?;
    }
    let path = dir.join(MANIFEST_FILE);
    let mut json = serde_json::to_vec_pretty(&manifest).map_err(|source| DatasetError::Json {
        path: path.clone(),
        source,
    })?;
    json.push(b'\n');
    write(&path, &json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pos_bin_layout() {
        let set = ContrastPairSet::new(
            Matrix::from_rows(&[[1.0, 2.0]]).unwrap(),
            Matrix::from_rows(&[[0.0, 0.0]]).unwrap(),
            None,
            None,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&set, dir.path()).unwrap();
        let bytes = fs::read(dir.path().join("pos.bin")).unwrap();
        let mut expected = 1.0f32.to_le_bytes().to_vec();
        expected.extend_from_slice(&2.0f32.to_le_bytes());
        assert_eq!(bytes, expected);
        assert!(!dir.path().join("labels.bin").exists());
    }

    #[test]
    fn overflowing_values_are_refused() {
        let set = ContrastPairSet::new(
            Matrix::from_rows(&[[1e300]]).unwrap(),
            Matrix::from_rows(&[[0.0]]).unwrap(),
            None,
            None,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            save_dataset(&set, dir.path()),
            Err(DatasetError::NotRepresentable { row: 0, col: 0, .. })
        ));
    }
}
