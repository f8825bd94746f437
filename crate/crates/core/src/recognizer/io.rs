//! Model file layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "SIGNDICT"
//! version    u32      MODEL_FORMAT_VERSION
//! header_len u32
//! header     JSON: model_config, landmark_subset, num_classes,
//!            catalog_fingerprint, history
//! count      u64      number of parameters
//! params     count x f64
//! checksum   32 bytes SHA-256 of everything above
//! ```

use std::path::Path;

use sha2::{Digest, Sha256};

use super::model::{ModelHeader, TrainedModel};
use super::RecognizerError;

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"SIGNDICT";

pub fn model_to_bytes(model: &TrainedModel) -> Vec<u8> {
    let header = serde_json::to_vec(&model.header).expect("header is plain data");
    let mut out = Vec::with_capacity(header.len() + model.params.len() * 8 + 64);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(model.params.len() as u64).to_le_bytes());
    for p in &model.params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], RecognizerError> {
        if self.buf.len() - self.pos < n {
            return Err(RecognizerError::Corrupt(format!("truncated while reading {what}")));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, RecognizerError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<TrainedModel, RecognizerError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(MAGIC.len(), "magic")? != MAGIC {
        return Err(RecognizerError::Corrupt("not a model file".into()));
    }
    let version = r.u32("version")?;
    if version != MODEL_FORMAT_VERSION {
        return Err(RecognizerError::Version {
            found: version,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let header_len = r.u32("header length")? as usize;
    let header: ModelHeader = serde_json::from_slice(r.take(header_len, "header")?)
        .map_err(|e| RecognizerError::Corrupt(format!("header: {e}")))?;
    let count = u64::from_le_bytes(r.take(8, "parameter count")?.try_into().expect("8 bytes"));
    let count = usize::try_from(count).map_err(|_| RecognizerError::Corrupt("parameter count overflow".into()))?;
    let raw = r.take(count.checked_mul(8).ok_or_else(|| RecognizerError::Corrupt("parameter count overflow".into()))?, "parameters")?;
    let body_end = r.pos;
    let checksum = r.take(32, "checksum")?;
    if r.pos != bytes.len() {
        return Err(RecognizerError::Corrupt("trailing bytes after checksum".into()));
    }
    if Sha256::digest(&bytes[..body_end]).as_slice() != checksum {
        return Err(RecognizerError::Corrupt("checksum mismatch".into()));
    }
    let params = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    TrainedModel::from_parts(header, params)
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<(), RecognizerError> {
    std::fs::write(path, model_to_bytes(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel, RecognizerError> {
    model_from_bytes(&std::fs::read(path)?)
}
