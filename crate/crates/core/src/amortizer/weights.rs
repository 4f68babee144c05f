//! Weight file layout (all integers `u32`, all floats `f64`, little-endian):
//!
//! ```text
//! magic        8 bytes  "ASG2VMF\0"
//! version      u32      FORMAT_VERSION
//! side         u32      L
//! num_bands    u32
//! leaky_slope  f64
//! num_layers   u32
//! shapes       num_layers × (n_in u32, n_out u32)
//! payload      per layer: weights (n_out × n_in, row-major), then biases
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Amortizer, DenseLayer, MlpParams, PosEncConfig};
use crate::distributions::SymmetricParams;
use crate::error::{Result, WeightsError};

pub const MAGIC: &[u8; 8] = b"ASG2VMF\0";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_weights(net: &Amortizer) -> Vec<u8> {
    let mlp = &net.mlp;
    let mut out = Vec::with_capacity(40 + 8 * mlp.layers.len() + 8 * mlp.num_params());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(net.side as u32).to_le_bytes());
    out.extend_from_slice(&(net.pos_enc.num_bands as u32).to_le_bytes());
    out.extend_from_slice(&mlp.leaky_slope.to_le_bytes());
    out.extend_from_slice(&(mlp.layers.len() as u32).to_le_bytes());
    for l in &mlp.layers {
        out.extend_from_slice(&(l.n_in as u32).to_le_bytes());
        out.extend_from_slice(&(l.n_out as u32).to_le_bytes());
    }
    for v in mlp.flatten() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> std::result::Result<&[u8], WeightsError> {
        if self.at + n > self.bytes.len() {
            return Err(WeightsError::Truncated {
                needed: self.at + n,
                found: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, WeightsError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> std::result::Result<f64, WeightsError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn read_weights(bytes: &[u8]) -> std::result::Result<Amortizer, WeightsError> {
    let mut r = Reader { bytes, at: 0 };
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(WeightsError::BadMagic);
    }
    r.take(MAGIC.len())?;
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(WeightsError::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let side = r.u32()? as usize;
    let num_bands = r.u32()? as usize;
    let leaky_slope = r.f64()?;
    let num_layers = r.u32()? as usize;
    if num_layers == 0 || num_layers > 64 {
        return Err(WeightsError::Shape(format!("implausible layer count {num_layers}")));
    }
    let mut shapes = Vec::with_capacity(num_layers);
    for _ in 0..num_layers {
        shapes.push((r.u32()? as usize, r.u32()? as usize));
    }

    let pos_enc = PosEncConfig { num_bands };
    if num_bands == 0 || shapes[0].0 != pos_enc.input_dim() {
        return Err(WeightsError::Shape(format!(
            "input width {} does not match {num_bands} encoding bands",
            shapes[0].0
        )));
    }
    if shapes[num_layers - 1].1 != SymmetricParams::raw_len(side) {
        return Err(WeightsError::Shape(format!(
            "output width {} does not match side-lobe count {side}",
            shapes[num_layers - 1].1
        )));
    }
    if let Some(w) = shapes.windows(2).find(|w| w[0].1 != w[1].0) {
        return Err(WeightsError::Shape(format!(
            "layer output {} feeds layer input {}",
            w[0].1, w[1].0
        )));
    }

    let mut layers = Vec::with_capacity(num_layers);
    for &(n_in, n_out) in &shapes {
        let mut layer = DenseLayer::zeros(n_in, n_out);
        for w in layer.weights.iter_mut() {
            *w = r.f64()?;
        }
        for b in layer.biases.iter_mut() {
            *b = r.f64()?;
        }
        layers.push(layer);
    }
    if r.at != bytes.len() {
        return Err(WeightsError::TrailingBytes(bytes.len() - r.at));
    }
    Ok(Amortizer {
        mlp: MlpParams { layers, leaky_slope },
        side,
        pos_enc,
    })
}

/// Writes via a temporary sibling file and rename, so readers never see a
/// partial file.
pub fn save_weights(net: &Amortizer, path: &Path) -> Result<()> {
    let bytes = write_weights(net);
    let tmp = path.with_extension("tmp-weights");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_weights(path: &Path) -> Result<Amortizer> {
    let bytes = fs::read(path)?;
    Ok(read_weights(&bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Amortizer {
        let mut rng = crate::rng::stream(7, "test");
        Amortizer::init(2, PosEncConfig { num_bands: 3 }, &mut rng)
    }

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        let a = sample();
        save_weights(&a, &path).unwrap();
        let b = load_weights(&path).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mlp.checksum(), b.mlp.checksum());
    }

    #[test]
    fn truncation_is_reported() {
        let bytes = write_weights(&sample());
        for cut in [4, 12, 30, bytes.len() - 1] {
            let err = read_weights(&bytes[..cut]).unwrap_err();
            if cut < MAGIC.len() {
                assert!(matches!(err, WeightsError::BadMagic));
            } else {
                assert!(matches!(err, WeightsError::Truncated { .. }), "cut {cut}: {err:?}");
            }
        }
    }

    #[test]
    fn bad_magic_version_and_shapes_are_distinct() {
        let bytes = write_weights(&sample());
        let mut m = bytes.clone();
        m[0] = b'X';
        assert!(matches!(read_weights(&m), Err(WeightsError::BadMagic)));

        let mut v = bytes.clone();
        v[8..12].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(read_weights(&v), Err(WeightsError::Version { found: 7, .. })));

        let mut s = bytes.clone();
        s[12..16].copy_from_slice(&5u32.to_le_bytes());
        assert!(matches!(read_weights(&s), Err(WeightsError::Shape(_))));

        let mut t = bytes;
        t.push(0);
        assert!(matches!(read_weights(&t), Err(WeightsError::TrailingBytes(1))));
    }
}
