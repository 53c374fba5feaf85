use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};

pub const CLD_MAGIC: [u8; 4] = *b"CLD1";
const HEADER_LEN: u64 = 16;

/// Per-layer representations of a fixed list of items.
///
/// Layer 0 is the embedding layer, layers `1..` are transformer layers.
/// On disk the payload is a `CLD1` container; item ids live in a sidecar
/// text file with the `.ids` extension, one id per line.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerDump {
    item_ids: Vec<String>,
    layers: Vec<Array2<f32>>,
}

impl LayerDump {
    pub fn new(item_ids: Vec<String>, layers: Vec<Array2<f32>>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::Shape("a layer dump needs at least one layer".into()))?;
        let shape = first.dim();
        if let Some((i, bad)) = layers.iter().enumerate().find(|(_, l)| l.dim() != shape) {
            return Err(Error::Shape(format!(
                "layer {i} has shape {:?}, layer 0 has {:?}",
                bad.dim(),
                shape
            )));
        }
        if item_ids.len() != shape.0 {
            return Err(Error::IdCountMismatch {
                expected: shape.0,
                found: item_ids.len(),
            });
        }
        if let Some(id) = item_ids.iter().find(|id| id.contains(['\n', '\r'])) {
            return Err(Error::InvalidConfig(format!(
                "item id {id:?} contains a line break"
            )));
        }
        Ok(LayerDump { item_ids, layers })
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn row_count(&self) -> usize {
        self.item_ids.len()
    }

    pub fn dim(&self) -> usize {
        self.layers[0].ncols()
    }

    pub fn layers(&self) -> &[Array2<f32>] {
        &self.layers
    }

    pub fn layer(&self, layer: usize) -> Result<&Array2<f32>> {
        self.layers.get(layer).ok_or(Error::LayerOutOfRange {
            layer,
            layer_count: self.layers.len(),
        })
    }

    pub fn layer_f64(&self, layer: usize) -> Result<Array2<f64>> {
        self.layer(layer).map(|m| m.mapv(f64::from))
    }

    pub fn into_parts(self) -> (Vec<String>, Vec<Array2<f32>>) {
        (self.item_ids, self.layers)
    }

    /// Path of the id sidecar belonging to a dump file.
    pub fn ids_path(path: &Path) -> PathBuf {
        path.with_extension("ids")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let (layer_count, rows, dim, layers) = decode_payload(&bytes)?;
        let ids_path = Self::ids_path(path);
        let ids = fs::read_to_string(&ids_path).map_err(|e| Error::io(&ids_path, e))?;
        let item_ids: Vec<String> = ids.lines().map(str::to_owned).collect();
        if item_ids.len() != rows {
            return Err(Error::IdCountMismatch {
                expected: rows,
                found: item_ids.len(),
            });
        }
        debug_assert_eq!(layers.len(), layer_count);
        let _ = dim;
        Ok(LayerDump { item_ids, layers })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.encode_payload()).map_err(|e| Error::io(path, e))?;
        let ids_path = Self::ids_path(path);
        let mut ids = Vec::new();
        for id in &self.item_ids {
            ids.extend_from_slice(id.as_bytes());
            ids.push(b'\n');
        }
        fs::write(&ids_path, ids).map_err(|e| Error::io(&ids_path, e))
    }

    /// The binary `CLD1` container (without the id sidecar).
    pub fn encode_payload(&self) -> Vec<u8> {
        let (rows, dim) = self.layers[0].dim();
        let mut out = Vec::with_capacity(16 + 4 * self.layers.len() * rows * dim);
        out.extend_from_slice(&CLD_MAGIC);
        for field in [self.layers.len(), rows, dim] {
            out.extend_from_slice(&(field as u32).to_le_bytes());
        }
        for layer in &self.layers {
            // Iteration order of `iter` is logical row-major order.
            for value in layer.iter() {
                out.extend_from_slice(&value.to_le_bytes());
            }
        }
        out
    }

    /// Decodes a payload and pairs it with `item_ids`.
    pub fn decode(bytes: &[u8], item_ids: Vec<String>) -> Result<Self> {
        let (_, rows, _, layers) = decode_payload(bytes)?;
        if item_ids.len() != rows {
            return Err(Error::IdCountMismatch {
                expected: rows,
                found: item_ids.len(),
            });
        }
        Self::new(item_ids, layers)
    }
}

fn decode_payload(bytes: &[u8]) -> Result<(usize, usize, usize, Vec<Array2<f32>>)> {
    if bytes.len() < 4 {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            found: bytes.len() as u64,
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("length checked");
    if magic != CLD_MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    if (bytes.len() as u64) < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            found: bytes.len() as u64,
        });
    }
    let field = |i: usize| {
        let start = 4 + 4 * i;
        u32::from_le_bytes(bytes[start..start + 4].try_into().expect("length checked")) as usize
    };
    let (layer_count, rows, dim) = (field(0), field(1), field(2));
    let expected = HEADER_LEN + 4 * layer_count as u64 * rows as u64 * dim as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len() as u64,
        });
    }
    if layer_count == 0 {
        return Err(Error::Shape("layer_count must be positive".into()));
    }
    let per_layer = rows * dim;
    let mut values = bytes[HEADER_LEN as usize..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")));
    let layers = (0..layer_count)
        .map(|_| {
            let data: Vec<f32> = values.by_ref().take(per_layer).collect();
            Array2::from_shape_vec((rows, dim), data).expect("size checked above")
        })
        .collect();
    Ok((layer_count, rows, dim, layers))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LayerDump {
        let layers = (0..2)
            .map(|l| Array2::from_shape_fn((3, 4), |(i, j)| (l * 100 + i * 10 + j) as f32 * 0.5))
            .collect();
        LayerDump::new(vec!["a".into(), "b".into(), "c".into()], layers).unwrap()
    }

    #[test]
    fn payload_size_follows_header_arithmetic() {
        let bytes = sample().encode_payload();
        assert_eq!(bytes.len(), 16 + 4 * 2 * 3 * 4);
        assert_eq!(bytes.len(), 112);
        assert_eq!(&bytes[..4], b"CLD1");
        let dump = LayerDump::decode(&bytes, vec!["a".into(), "b".into(), "c".into()]).unwrap();
        assert_eq!(
            (dump.layer_count(), dump.row_count(), dump.dim()),
            (2, 3, 4)
        );
        assert_eq!(dump, sample());
    }

    #[test]
    fn rejects_bad_magic() {
        let mut bytes = sample().encode_payload();
        bytes[..4].copy_from_slice(b"XXXX");
        let err = LayerDump::decode(&bytes, vec![]).unwrap_err();
        assert!(matches!(err, Error::BadMagic { found } if &found == b"XXXX"));
    }

    #[test]
    fn rejects_truncated_and_padded_payloads() {
        let bytes = sample().encode_payload();
        let ids = || vec!["a".into(), "b".into(), "c".into()];
        let err = LayerDump::decode(&bytes[..bytes.len() - 1], ids()).unwrap_err();
        assert!(matches!(
            err,
            Error::Truncated {
                expected: 112,
                found: 111
            }
        ));
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(matches!(
            LayerDump::decode(&longer, ids()),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(
            LayerDump::decode(&bytes[..10], ids()),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn rejects_id_count_mismatch() {
        let bytes = sample().encode_payload();
        assert!(matches!(
            LayerDump::decode(&bytes, vec!["a".into()]),
            Err(Error::IdCountMismatch {
                expected: 3,
                found: 1
            })
        ));
    }

    #[test]
    fn rejects_ragged_layers() {
        let layers = vec![Array2::zeros((2, 3)), Array2::zeros((2, 4))];
        assert!(matches!(
            LayerDump::new(vec!["a".into(), "b".into()], layers),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn file_round_trip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dump.cld");
        let dump = sample();
        dump.save(&path).unwrap();
        assert_eq!(
            std::fs::read_to_string(dir.path().join("dump.ids")).unwrap(),
            "a\nb\nc\n"
        );
        assert_eq!(LayerDump::load(&path).unwrap(), dump);

        std::fs::write(dir.path().join("dump.ids"), "a\nb\n").unwrap();
        assert!(matches!(
            LayerDump::load(&path),
            Err(Error::IdCountMismatch { .. })
        ));
    }
}
