//! Weight checkpoint file.
//!
//! Layout: a little-endian `u32` header length, a UTF-8 JSON header
//! `{config, seed, epoch}`, then raw little-endian `f32` tensor data in fixed
//! order: pointwise weights, pointwise biases, temporal weights, temporal
//! biases, gamma, beta, dense weights, dense biases. Tensor shapes are implied
//! by the config in the header.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{ModelConfig, ModelParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub seed: u64,
    pub epoch: usize,
    pub params: ModelParams,
}

/// Serialise params as f32 under a JSON header. Byte output is a pure
/// function of its inputs.
pub fn save_checkpoint(
    path: &Path,
    config: &ModelConfig,
    params: &ModelParams,
    seed: u64,
    epoch: usize,
) -> Result<()> {
    let header = serde_json::json!({ "config": config, "seed": seed, "epoch": epoch });
    let header_bytes = serde_json::to_vec(&header)
        .map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    w.write_all(&header_bytes)?;
    for tensor in tensor_slices(params) {
        for &v in tensor {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut r = BufReader::new(File::open(path)?);
    let mut len_buf = [0u8; 4];
    r.read_exact(&mut len_buf)
        .map_err(|_| Error::Truncated("checkpoint header length".into()))?;
    let header_len = u32::from_le_bytes(len_buf) as usize;
    let mut header_bytes = vec![0u8; header_len];
    r.read_exact(&mut header_bytes)
        .map_err(|_| Error::Truncated("checkpoint header".into()))?;
    let header: serde_json::Value = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;
    let config: ModelConfig = serde_json::from_value(
        header
            .get("config")
            .cloned()
            .ok_or_else(|| Error::Format("checkpoint header lacks config".into()))?,
    )
    .map_err(|e| Error::Format(format!("checkpoint config: {e}")))?;
    config.validate()?;
    let seed = header.get("seed").and_then(|v| v.as_u64()).unwrap_or(0);
    let epoch = header.get("epoch").and_then(|v| v.as_u64()).unwrap_or(0) as usize;

    let mut params = ModelParams::zeros(&config);
    {
        let mut read_tensor = |dst: &mut [f64], name: &str| -> Result<()> {
            let mut buf = vec![0u8; dst.len() * 4];
            r.read_exact(&mut buf)
                .map_err(|_| Error::Truncated(format!("checkpoint tensor {name}")))?;
            for (slot, chunk) in dst.iter_mut().zip(buf.chunks_exact(4)) {
                *slot = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
            }
            Ok(())
        };
        read_tensor(params.pointwise_w.as_slice_mut().unwrap(), "pointwise_w")?;
        read_tensor(params.pointwise_b.as_slice_mut().unwrap(), "pointwise_b")?;
        read_tensor(params.temporal_w.as_slice_mut().unwrap(), "temporal_w")?;
        read_tensor(params.temporal_b.as_slice_mut().unwrap(), "temporal_b")?;
        read_tensor(params.bn_gamma.as_slice_mut().unwrap(), "bn_gamma")?;
        read_tensor(params.bn_beta.as_slice_mut().unwrap(), "bn_beta")?;
        read_tensor(params.dense_w.as_slice_mut().unwrap(), "dense_w")?;
        read_tensor(params.dense_b.as_slice_mut().unwrap(), "dense_b")?;
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("checkpoint has trailing bytes".into()));
    }
    Ok(Checkpoint {
        config,
        seed,
        epoch,
        params,
    })
}

fn tensor_slices(p: &ModelParams) -> [&[f64]; 8] {
    [
        flat2(&p.pointwise_w),
        flat1(&p.pointwise_b),
        flat2(&p.temporal_w),
        flat1(&p.temporal_b),
        flat1(&p.bn_gamma),
        flat1(&p.bn_beta),
        flat2(&p.dense_w),
        flat1(&p.dense_b),
    ]
}

fn flat2(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("standard layout")
}

fn flat1(a: &Array1<f64>) -> &[f64] {
    a.as_slice().expect("standard layout")
}
