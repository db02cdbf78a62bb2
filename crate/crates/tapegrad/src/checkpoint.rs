use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::nn::{ArchDesc, Model, Param};

/// Per-input-channel statistics estimated once on the training set and frozen.
/// Channels whose variance was zero are marked `passthrough` and left
/// untouched when standardizing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub passthrough: Vec<bool>,
}

impl ChannelStats {
    /// Identity statistics (standardization becomes a no-op).
    pub fn identity(channels: usize) -> Self {
        ChannelStats { mean: vec![0.0; channels], var: vec![1.0; channels], passthrough: vec![false; channels] }
    }

    pub fn channels(&self) -> usize {
        self.mean.len()
    }

    /// Affine coefficients realizing x -> (x - mean)/sqrt(var).
    pub fn affine(&self) -> (Vec<f64>, Vec<f64>) {
        let mut scale = Vec::with_capacity(self.mean.len());
        let mut offset = Vec::with_capacity(self.mean.len());
        for c in 0..self.mean.len() {
            if self.passthrough[c] {
                scale.push(1.0);
                offset.push(0.0);
            } else {
                let s = 1.0 / self.var[c].sqrt();
                scale.push(s);
                offset.push(-self.mean[c] * s);
            }
        }
        (scale, offset)
    }
}

/// A trained network: parameters, architecture, frozen channel statistics and
/// free-form run metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkCheckpoint {
    pub model: Model,
    pub stats: ChannelStats,
    pub meta: serde_json::Value,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported checkpoint format {0:?}")]
    VersionMismatch(String),
    #[error("parameter blob checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("checkpoint does not match architecture: {0}")]
    ArchMismatch(String),
}

const FORMAT: &str = "ipnc-ckpt/1";

#[derive(Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    arch: ArchDesc,
    channel_stats: ChannelStats,
    meta: serde_json::Value,
    params: Vec<ParamEntry>,
    params_len: usize,
    params_crc32: u32,
}

/// CRC-32 (IEEE 802.3, reflected, polynomial 0xEDB88320).
pub(crate) fn crc32(bytes: &[u8]) -> u32 {
    let mut table = [0u32; 256];
    for (i, e) in table.iter_mut().enumerate() {
        let mut c = i as u32;
        for _ in 0..8 {
            c = if c & 1 != 0 { 0xEDB8_8320 ^ (c >> 1) } else { c >> 1 };
        }
        *e = c;
    }
    let mut crc = 0xFFFF_FFFFu32;
    for &b in bytes {
        crc = table[((crc ^ b as u32) & 0xFF) as usize] ^ (crc >> 8);
    }
    !crc
}

/// Write `manifest.json` + `params.bin` (little-endian f64) into `dir`.
pub fn save_checkpoint(ckpt: &NetworkCheckpoint, dir: &Path) -> Result<(), CheckpointError> {
    fs::create_dir_all(dir)?;
    let mut blob = Vec::with_capacity(ckpt.model.param_count() * 8);
    for p in &ckpt.model.params {
        for v in &p.data {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    let manifest = Manifest {
        format: FORMAT.to_string(),
        arch: ckpt.model.arch.clone(),
        channel_stats: ckpt.stats.clone(),
        meta: ckpt.meta.clone(),
        params: ckpt.model.params.iter().map(|p| ParamEntry { name: p.name.clone(), shape: p.shape.clone() }).collect(),
        params_len: ckpt.model.param_count(),
        params_crc32: crc32(&blob),
    };
    let mut f = fs::File::create(dir.join("params.bin"))?;
    f.write_all(&blob)?;
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

/// Load a checkpoint directory, verifying format tag, checksum and that the
/// stored parameters match the architecture descriptor.
pub fn load_checkpoint(dir: &Path) -> Result<NetworkCheckpoint, CheckpointError> {
    let raw: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    let format = raw.get("format").and_then(|v| v.as_str()).unwrap_or("");
    if format != FORMAT {
        return Err(CheckpointError::VersionMismatch(format.to_string()));
    }
    let manifest: Manifest = serde_json::from_value(raw).map_err(|e| {
        // An unrecognized architecture or activation tag is a format revision
        // this build does not understand.
        if e.to_string().contains("unknown variant") {
            CheckpointError::VersionMismatch(format!("{FORMAT} with unrecognized tag: {e}"))
        } else {
            CheckpointError::Json(e)
        }
    })?;
    let mut blob = Vec::new();
    fs::File::open(dir.join("params.bin"))?.read_to_end(&mut blob)?;
    if blob.len() != manifest.params_len * 8 {
        return Err(CheckpointError::ChecksumMismatch {
            stored: manifest.params_crc32,
            computed: crc32(&blob),
        });
    }
    let computed = crc32(&blob);
    if computed != manifest.params_crc32 {
        return Err(CheckpointError::ChecksumMismatch { stored: manifest.params_crc32, computed });
    }

    let specs = manifest.arch.param_specs();
    if specs.len() != manifest.params.len() {
        return Err(CheckpointError::ArchMismatch(format!(
            "expected {} tensors, manifest lists {}",
            specs.len(),
            manifest.params.len()
        )));
    }
    let mut params = Vec::with_capacity(specs.len());
    let mut off = 0usize;
    for ((name, shape), entry) in specs.into_iter().zip(&manifest.params) {
        if entry.name != name || entry.shape != shape {
            return Err(CheckpointError::ArchMismatch(format!(
                "tensor {} {:?} does not match architecture slot {} {:?}",
                entry.name, entry.shape, name, shape
            )));
        }
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for i in 0..n {
            let mut b = [0u8; 8];
            b.copy_from_slice(&blob[(off + i) * 8..(off + i + 1) * 8]);
            data.push(f64::from_le_bytes(b));
        }
        off += n;
        params.push(Param { name, shape, data });
    }
    if off != manifest.params_len {
        return Err(CheckpointError::ArchMismatch(format!(
            "blob holds {} values, architecture needs {off}",
            manifest.params_len
        )));
    }
    Ok(NetworkCheckpoint {
        model: Model { arch: manifest.arch, params },
        stats: manifest.channel_stats,
        meta: manifest.meta,
    })
}
