//! Model files.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | content                           |
//! |-------|-----------------------------------|
//! | 8     | magic `DFHPMODL`                  |
//! | 4     | format version                    |
//! | 8     | payload length `n`                |
//! | n     | bincode-encoded `DetectorModel`   |
//! | 32    | SHA-256 of everything before it   |

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pipeline::DetectorModel;

pub const MODEL_MAGIC: &[u8; 8] = b"DFHPMODL";
pub const MODEL_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8;
const DIGEST_LEN: usize = 32;

pub fn encode_model(model: &DetectorModel) -> Result<Vec<u8>> {
    let payload = bincode::serialize(model).map_err(|e| Error::Validation(format!("cannot encode model: {e}")))?;
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + DIGEST_LEN);
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

pub fn decode_model(bytes: &[u8]) -> Result<DetectorModel> {
    if bytes.len() < HEADER_LEN + DIGEST_LEN {
        return Err(Error::Integrity(format!("file truncated ({} bytes)", bytes.len())));
    }
    if &bytes[..8] != MODEL_MAGIC {
        return Err(Error::Integrity("not a model file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != MODEL_VERSION {
        return Err(Error::Integrity(format!(
            "unsupported format version {version} (expected {MODEL_VERSION})"
        )));
    }
    let len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    let expected = (HEADER_LEN + DIGEST_LEN) as u64 + len;
    if bytes.len() as u64 != expected {
        return Err(Error::Integrity(format!(
            "file truncated or padded: {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let body_end = bytes.len() - DIGEST_LEN;
    if Sha256::digest(&bytes[..body_end]).as_slice() != &bytes[body_end..] {
        return Err(Error::Integrity("checksum mismatch".into()));
    }
    let model: DetectorModel = bincode::deserialize(&bytes[HEADER_LEN..body_end])
        .map_err(|e| Error::Integrity(format!("cannot decode model: {e}")))?;
    model
        .validate()
        .map_err(|e| Error::Integrity(format!("inconsistent model: {e}")))?;
    Ok(model)
}

pub fn save_model(model: &DetectorModel, path: &Path) -> Result<()> {
    let bytes = encode_model(model)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<DetectorModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}
