//! Binary model checkpoint.
//!
//! ```text
//! offset  size  field
//! 0       8     magic "SFLSTMCK"
//! 8       4     format version, u32 little-endian
//! 12      8     header length N, u64 little-endian
//! 20      N     UTF-8 JSON header
//! 20+N    ...   tensor payload, f64 little-endian, row-major, header order
//! ```
//!
//! The JSON header holds `config`, `scaler` (`min`, `max`) and `tensors`, a
//! list of `{name, shape}` entries. Loading checks the magic, version,
//! tensor names and shapes against the config, the payload length, and
//! that every value is finite.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::LstmParams;
use super::{ForecastError, LstmConfig, LstmModel, Result, Scaler};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SFLSTMCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    config: LstmConfig,
    scaler: Scaler,
    tensors: Vec<TensorEntry>,
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

fn corrupt(msg: impl Into<String>) -> ForecastError {
    ForecastError::Checkpoint(msg.into())
}

pub fn write_checkpoint(model: &LstmModel) -> Vec<u8> {
    let header = Header {
        config: model.config.clone(),
        scaler: model.scaler,
        tensors: model
            .params
            .names()
            .into_iter()
            .zip(model.params.shapes())
            .map(|(name, shape)| TensorEntry { name, shape })
            .collect(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(20 + json.len() + 8 * model.params.parameter_count());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for slice in model.params.slices() {
        for v in slice {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<LstmModel> {
    if bytes.len() < 20 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(corrupt("missing magic bytes"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(corrupt(format!("unsupported version {version}, expected {CHECKPOINT_VERSION}")));
    }
    let header_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let header_end = usize::try_from(header_len)
        .ok()
        .and_then(|n| n.checked_add(20))
        .filter(|&end| end <= bytes.len())
        .ok_or_else(|| corrupt("header length exceeds file size"))?;
    let header: Header =
        serde_json::from_slice(&bytes[20..header_end]).map_err(|e| corrupt(format!("bad header: {e}")))?;
    header.config.validate()?;

    let mut params = LstmParams::zeros(&header.config);
    let expected: Vec<TensorEntry> = params
        .names()
        .into_iter()
        .zip(params.shapes())
        .map(|(name, shape)| TensorEntry { name, shape })
        .collect();
    if header.tensors != expected {
        return Err(corrupt("tensor names or shapes do not match the config"));
    }
    let payload = &bytes[header_end..];
    let count = params.parameter_count();
    if payload.len() != 8 * count {
        return Err(corrupt(format!("payload has {} bytes, expected {}", payload.len(), 8 * count)));
    }
    let mut values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    for slice in params.slices_mut() {
        for v in slice.iter_mut() {
            *v = values.next().expect("length checked");
        }
    }
    let scaler = Scaler::new(header.scaler.min, header.scaler.max).map_err(|_| corrupt("invalid scaler bounds"))?;
    LstmModel::new(header.config, scaler, params).map_err(|e| corrupt(e.to_string()))
}

pub fn save_checkpoint(model: &LstmModel, path: &Path) -> Result<()> {
    fs::write(path, write_checkpoint(model))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<LstmModel> {
    read_checkpoint(&fs::read(path)?)
}
