//! Binary `.qf` model file.
//!
//! Layout, all integers `u32` and all reals `f64`, little-endian:
//!
//! ```text
//! magic "QFMODEL\0" | version u8
//! config:  len, UTF-8 key = value text
//! labels:  count, class ids (MLP output order)
//! eigen:   height, width, k, mean[d], eigenvalues[k], basis[k * d] (component by component)
//! mlp:     layer count L, sizes[L], then per layer weights (row-major) and biases
//! trailer: SHA-256 of everything above
//! ```

use std::path::Path;

use sha2::{Digest, Sha256};

use super::config::PipelineConfig;
use super::TrainedModels;
use crate::classifier::MlpModel;
use crate::eigenspace::EigenModel;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"QFMODEL\0";
pub const FORMAT_VERSION: u8 = 1;
const CHECKSUM_LEN: usize = 32;

pub fn save_model(models: &TrainedModels, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_model(models)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModels> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}

pub fn encode_model(models: &TrainedModels) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.0.push(FORMAT_VERSION);

    let config = models.config.to_text();
    w.u32(config.len());
    w.0.extend_from_slice(config.as_bytes());

    w.u32(models.class_ids.len());
    for &id in &models.class_ids {
        w.0.extend_from_slice(&id.to_le_bytes());
    }

    let eigen = &models.eigen;
    let (h, wd) = eigen.dims();
    w.u32(h);
    w.u32(wd);
    w.u32(eigen.k());
    w.reals(eigen.mean());
    w.reals(eigen.eigenvalues());
    w.reals(eigen.basis());

    let mlp = &models.mlp;
    w.u32(mlp.layer_sizes().len());
    for &s in mlp.layer_sizes() {
        w.u32(s);
    }
    for layer in mlp.layers() {
        w.reals(&layer.weights);
        w.reals(&layer.biases);
    }

    let digest = Sha256::digest(&w.0);
    w.0.extend_from_slice(&digest);
    w.0
}

pub fn decode_model(bytes: &[u8]) -> Result<TrainedModels> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::ModelFormat("missing QFMODEL magic".into()));
    }
    match bytes.get(MAGIC.len()) {
        Some(&FORMAT_VERSION) => {}
        Some(&found) => {
            return Err(Error::ModelVersion {
                found,
                expected: FORMAT_VERSION,
            })
        }
        None => return Err(Error::ModelCorrupt("file ends after magic".into())),
    }
    let header = MAGIC.len() + 1;
    if bytes.len() < header + CHECKSUM_LEN {
        return Err(Error::ModelCorrupt("file too short".into()));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != trailer {
        return Err(Error::ModelCorrupt("checksum mismatch".into()));
    }

    let mut r = Reader {
        bytes: body,
        pos: header,
    };
    let config_len = r.u32()?;
    let config_text = std::str::from_utf8(r.take(config_len)?)
        .map_err(|_| Error::ModelCorrupt("config block is not UTF-8".into()))?;
    let config = PipelineConfig::parse(config_text)?;

    let label_count = r.u32()?;
    let class_ids = (0..label_count)
        .map(|_| r.u32().map(|v| v as u32))
        .collect::<Result<Vec<_>>>()?;

    let height = r.u32()?;
    let width = r.u32()?;
    let k = r.u32()?;
    let d = height
        .checked_mul(width)
        .ok_or_else(|| Error::ModelCorrupt("eigen dimensions overflow".into()))?;
    let mean = r.reals(d)?;
    let eigenvalues = r.reals(k)?;
    let basis_len = k
        .checked_mul(d)
        .ok_or_else(|| Error::ModelCorrupt("basis size overflow".into()))?;
    let basis = r.reals(basis_len)?;
    let eigen = EigenModel::from_parts(height, width, mean, basis, eigenvalues)?;

    let layer_count = r.u32()?;
    let sizes = (0..layer_count).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let mut params = Vec::new();
    for pair in sizes.windows(2) {
        let n = pair[0]
            .checked_mul(pair[1])
            .ok_or_else(|| Error::ModelCorrupt("layer size overflow".into()))?;
        let weights = r.reals(n)?;
        let biases = r.reals(pair[1])?;
        params.push((weights, biases));
    }
    let mlp = MlpModel::from_parameters(&sizes, params)?;

    if r.pos != body.len() {
        return Err(Error::ModelCorrupt(format!(
            "{} unexpected trailing bytes",
            body.len() - r.pos
        )));
    }
    TrainedModels::new(config, eigen, mlp, class_ids)
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("model dimension fits in u32");
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn reals(&mut self, values: &[f64]) {
        for v in values {
            self.0.extend_from_slice(&v.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::ModelCorrupt("unexpected end of data".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn reals(&mut self, n: usize) -> Result<Vec<f64>> {
        let len = n
            .checked_mul(8)
            .ok_or_else(|| Error::ModelCorrupt("block size overflow".into()))?;
        Ok(self
            .take(len)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect())
    }
}
