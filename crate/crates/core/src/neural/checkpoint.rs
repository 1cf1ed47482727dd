//! Checkpoints: a little-endian f32 blob holding the UODF network
//! parameters followed by the mask network parameters, plus a JSON sidecar
//! (`<blob>.json`) describing the shapes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::mlp::{Activation, Mlp};
use super::model::{Architecture, MlpModel};
use crate::geometry::Direction;

pub const CHECKPOINT_FORMAT: &str = "uodf-mlp";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad checkpoint metadata in {path}: {message}")]
    Metadata { path: String, message: String },
    #[error("checkpoint blob has {found} parameters, metadata expects {expected}")]
    SizeMismatch { found: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format: String,
    pub version: u32,
    pub direction: Direction,
    pub architecture: Architecture,
    pub uodf_sizes: Vec<usize>,
    pub mask_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub uodf_output_activation: Activation,
    pub mask_output_activation: Activation,
    pub parameter_count: usize,
    pub seed: u64,
    pub epoch: usize,
}

pub fn sidecar_path(blob: &Path) -> PathBuf {
    let mut s = blob.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn save_checkpoint(model: &MlpModel, path: &Path) -> Result<(), CheckpointError> {
    let meta = CheckpointMeta {
        format: CHECKPOINT_FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        direction: model.direction,
        architecture: model.arch,
        uodf_sizes: model.uodf.sizes().to_vec(),
        mask_sizes: model.mask.sizes().to_vec(),
        hidden_activation: model.uodf.hidden(),
        uodf_output_activation: model.uodf.output_activation(),
        mask_output_activation: model.mask.output_activation(),
        parameter_count: model.parameter_count(),
        seed: model.seed,
        epoch: model.epoch,
    };
    let blob: Vec<u8> = model
        .uodf
        .params()
        .iter()
        .chain(model.mask.params())
        .flat_map(|&p| (p as f32).to_le_bytes())
        .collect();
    fs::write(path, blob).map_err(io_err(path))?;
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    fs::write(&side, json).map_err(io_err(&side))
}

pub fn load_checkpoint(path: &Path) -> Result<MlpModel, CheckpointError> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(io_err(&side))?;
    let meta_err = |message: String| CheckpointError::Metadata {
        path: side.display().to_string(),
        message,
    };
    let meta: CheckpointMeta = serde_json::from_str(&text).map_err(|e| meta_err(e.to_string()))?;
    if meta.format != CHECKPOINT_FORMAT || meta.version != CHECKPOINT_VERSION {
        return Err(meta_err(format!("unsupported format {} v{}", meta.format, meta.version)));
    }
    let blob = fs::read(path).map_err(io_err(path))?;
    if blob.len() % 4 != 0 {
        return Err(CheckpointError::SizeMismatch {
            found: blob.len() / 4,
            expected: meta.parameter_count,
        });
    }
    let params: Vec<f64> = blob
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    if params.len() != meta.parameter_count {
        return Err(CheckpointError::SizeMismatch {
            found: params.len(),
            expected: meta.parameter_count,
        });
    }
    let n_uodf = super::mlp::parameter_count(&meta.uodf_sizes);
    let (a, b) = params.split_at(n_uodf.min(params.len()));
    let uodf = Mlp::from_params(&meta.uodf_sizes, meta.hidden_activation, meta.uodf_output_activation, a.to_vec())
        .ok_or_else(|| meta_err("UODF network sizes do not match the blob".into()))?;
    let mask = Mlp::from_params(&meta.mask_sizes, meta.hidden_activation, meta.mask_output_activation, b.to_vec())
        .ok_or_else(|| meta_err("mask network sizes do not match the blob".into()))?;
    Ok(MlpModel {
        direction: meta.direction,
        arch: meta.architecture,
        uodf,
        mask,
        seed: meta.seed,
        epoch: meta.epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_rounds_to_f32() {
        let arch = Architecture {
            width: 8,
            uodf_layers: 3,
            mask_width: 4,
            mask_layers: 2,
            ..Default::default()
        };
        let model = MlpModel::new(Direction::Ud, arch, 11);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        save_checkpoint(&model, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back.direction, Direction::Ud);
        assert_eq!(back.arch, arch);
        for (a, b) in model.uodf.params().iter().zip(back.uodf.params()) {
            assert_eq!(*a as f32 as f64, *b);
        }
        save_checkpoint(&back, &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), back);
    }
}
