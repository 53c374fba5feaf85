use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::LayerDump;
use crate::error::{Error, Result};
use crate::procrustes::{nearest_orthogonal, orthogonality_deviation};

/// Maximum `|M^T M - I|_F` of a map held in memory.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-6;

/// Maximum deviation accepted for a map read back from `f32` storage before
/// it is projected onto the orthogonal group. `f32` rounding alone gives
/// roughly `5e-8 * sqrt(d)`.
pub const LOAD_ORTHOGONALITY_TOLERANCE: f64 = 1e-5;

/// A `d x d` orthogonal matrix with provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalMap {
    matrix: Array2<f64>,
    pub source_space: String,
    pub target_space: String,
    pub fit_residual: f64,
}

#[derive(Serialize, Deserialize)]
struct MapMetadata {
    source_space: String,
    target_space: String,
    fit_residual: f64,
}

impl OrthogonalMap {
    pub fn new(matrix: Array2<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::Shape(format!(
                "orthogonal map must be square, got {:?}",
                matrix.dim()
            )));
        }
        let deviation = orthogonality_deviation(matrix.view());
        if !(deviation <= ORTHOGONALITY_TOLERANCE) {
            return Err(Error::NotOrthogonal { deviation });
        }
        Ok(OrthogonalMap {
            matrix,
            source_space: String::new(),
            target_space: String::new(),
            fit_residual: 0.0,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self::new(Array2::eye(d)).expect("identity is orthogonal")
    }

    pub fn with_spaces(mut self, source: impl Into<String>, target: impl Into<String>) -> Self {
        self.source_space = source.into();
        self.target_space = target.into();
        self
    }

    pub fn with_residual(mut self, residual: f64) -> Self {
        self.fit_residual = residual;
        self
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    /// Maps in the opposite direction (`W^T`).
    pub fn inverse(&self) -> Self {
        OrthogonalMap {
            matrix: self.matrix.t().to_owned(),
            source_space: self.target_space.clone(),
            target_space: self.source_space.clone(),
            fit_residual: self.fit_residual,
        }
    }

    pub fn metadata_path(path: &Path) -> PathBuf {
        path.with_extension("json")
    }

    /// Stores the matrix as a one-layer `d x d` dump plus a JSON sidecar for
    /// provenance.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let d = self.dim();
        let ids = (0..d).map(|i| i.to_string()).collect();
        let dump = LayerDump::new(ids, vec![self.matrix.mapv(|v| v as f32)])?;
        dump.save(path)?;
        let meta = MapMetadata {
            source_space: self.source_space.clone(),
            target_space: self.target_space.clone(),
            fit_residual: self.fit_residual,
        };
        let meta_path = Self::metadata_path(path);
        let json = serde_json::to_string_pretty(&meta).expect("metadata serialises");
        fs::write(&meta_path, json + "\n").map_err(|e| Error::io(&meta_path, e))
    }

    /// Loads a map and re-projects it onto the orthogonal group to undo
    /// `f32` storage rounding.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let dump = LayerDump::load(path)?;
        if dump.layer_count() != 1 || dump.row_count() != dump.dim() {
            return Err(Error::Shape(format!(
                "a map file holds one square layer, found {} layers of {}x{}",
                dump.layer_count(),
                dump.row_count(),
                dump.dim()
            )));
        }
        let raw = dump.layer_f64(0)?;
        let deviation = orthogonality_deviation(raw.view());
        if !(deviation <= LOAD_ORTHOGONALITY_TOLERANCE) {
            return Err(Error::NotOrthogonal { deviation });
        }
        let mut map = Self::new(nearest_orthogonal(raw.view())?)?;
        let meta_path = Self::metadata_path(path);
        if meta_path.exists() {
            let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
            let meta: MapMetadata = serde_json::from_str(&text).map_err(|e| Error::Manifest {
                path: meta_path.clone(),
                message: e.to_string(),
            })?;
            map.source_space = meta.source_space;
            map.target_space = meta.target_space;
            map.fit_residual = meta.fit_residual;
        }
        Ok(map)
    }
}
