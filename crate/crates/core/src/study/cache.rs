//! On-disk cache of corrector solves.
//!
//! Entries are keyed by the SHA-256 of the cell mesh fingerprint (which pins
//! the cell geometry and `h`), the material and `δ`. Values are stored as raw
//! little-endian `f64` so a cached run reproduces an uncached one bit for bit.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::cell::{homogenized_tensor, solve_cell, CellSolution, CorrectorSet, Normalization};
use crate::error::{Error, Result};
use crate::fem::field::FemField;
use crate::fem::mesh::TriMesh;
use crate::geometry::MaterialTensor;

pub const CACHE_ENV: &str = "PERFHOM_CACHE";

const MAGIC: &[u8; 8] = b"PHCHI001";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrectorCache {
    pub dir: PathBuf,
}

impl CorrectorCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(CorrectorCache { dir })
    }

    /// The cache named by `PERFHOM_CACHE`, if set and nonempty.
    pub fn from_env() -> Result<Option<Self>> {
        match std::env::var_os(CACHE_ENV) {
            Some(v) if !v.is_empty() => Ok(Some(Self::new(PathBuf::from(v))?)),
            _ => Ok(None),
        }
    }

    pub fn key(mesh: &TriMesh, material: &MaterialTensor, delta: f64) -> String {
        let mut hasher = Sha256::new();
        hasher.update(mesh.fingerprint().as_bytes());
        hasher.update(serde_json::to_string(material).unwrap_or_default().as_bytes());
        hasher.update(delta.to_le_bytes());
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.chi"))
    }

    fn load(&self, path: &Path, mesh: &Arc<TriMesh>, delta: f64) -> Option<CorrectorSet> {
        let bytes = fs::read(path).ok()?;
        let n = mesh.n_vertices();
        if bytes.len() != MAGIC.len() + 8 * (1 + 2 * n) || &bytes[..8] != MAGIC {
            log::warn!("ignoring malformed cache entry {}", path.display());
            return None;
        }
        let words: Vec<f64> = bytes[8..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        if words[0].to_bits() != delta.to_bits() {
            return None;
        }
        let chi = [0, 1].map(|j| FemField::new(mesh.clone(), words[1 + j * n..1 + (j + 1) * n].to_vec()));
        let [a, b] = chi;
        Some(CorrectorSet {
            mesh: mesh.clone(),
            chi: [a.ok()?, b.ok()?],
            delta,
            normalization: if delta > 0.0 {
                Normalization::MeanZeroOnY
            } else {
                Normalization::MeanZeroOnMatrix
            },
        })
    }

    fn store(&self, path: &Path, set: &CorrectorSet) -> Result<()> {
        let mut bytes = Vec::with_capacity(8 + 8 * (1 + 2 * set.mesh.n_vertices()));
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&set.delta.to_le_bytes());
        for c in &set.chi {
            for v in &c.values {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        // write then rename so concurrent readers never see a partial file
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }
}

/// `solve_cell` through an optional cache.
pub fn cached_cell(
    cache: Option<&CorrectorCache>,
    mesh: &Arc<TriMesh>,
    material: &MaterialTensor,
    delta: f64,
) -> Result<CellSolution> {
    let Some(cache) = cache else {
        return solve_cell(mesh, material, delta);
    };
    let path = cache.path(&CorrectorCache::key(mesh, material, delta));
    if let Some(correctors) = cache.load(&path, mesh, delta) {
        log::debug!("corrector cache hit {}", path.display());
        let tensor = homogenized_tensor(&correctors, material)?;
        return Ok(CellSolution { correctors, tensor });
    }
    let sol = solve_cell(mesh, material, delta)?;
    cache.store(&path, &sol.correctors)?;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::cell_mesh;
    use crate::geometry::CellGeometry;

    #[test]
    fn cached_solve_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CorrectorCache::new(dir.path()).unwrap();
        let cell = CellGeometry::centered_disk(0.25, 0.2).unwrap();
        let mat = MaterialTensor::identity();
        let mesh = cell_mesh(&cell, &mat, 1.0 / 16.0).unwrap();
        let first = cached_cell(Some(&cache), &mesh, &mat, 0.0).unwrap();
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        let second = cached_cell(Some(&cache), &mesh, &mat, 0.0).unwrap();
        for j in 0..2 {
            assert_eq!(first.correctors.chi[j].values, second.correctors.chi[j].values);
        }
        assert_eq!(first.tensor.a_hat, second.tensor.a_hat);
        // a different delta is a different entry
        cached_cell(Some(&cache), &mesh, &mat, 0.5).unwrap();
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);
    }

    #[test]
    fn malformed_entries_are_recomputed() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CorrectorCache::new(dir.path()).unwrap();
        let cell = CellGeometry::centered_disk(0.25, 0.2).unwrap();
        let mat = MaterialTensor::identity();
        let mesh = cell_mesh(&cell, &mat, 1.0 / 16.0).unwrap();
        let key = CorrectorCache::key(&mesh, &mat, 1.0);
        fs::write(cache.path(&key), b"junk").unwrap();
        let sol = cached_cell(Some(&cache), &mesh, &mat, 1.0).unwrap();
        assert!((sol.tensor.a_hat[0][0] - 1.0).abs() < 1e-10);
        assert!(fs::read(cache.path(&key)).unwrap().len() > 8);
    }
}
