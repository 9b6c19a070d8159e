//! Minimal NumPy `.npy` reader and the public-dataset adapter.
//!
//! The published arrays (signals `S x 30 x 384`, per-sample subject index,
//! per-sample state) convert to `.npy` with one `scipy.io.loadmat` +
//! `numpy.save` line; this adapter maps them into a [`DatasetBundle`] without
//! tying the core to any third-party file layout. Supports v1/v2 headers,
//! C-order, little-endian numeric dtypes.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use ndarray::Array2;

use super::{BundleKind, DatasetBundle, EegSample, Label, CHANNELS, WINDOW_LEN};
use crate::error::{Error, Result};

/// Dense array decoded from `.npy`: flat f64 data plus shape.
#[derive(Debug, Clone)]
pub struct NpyArray {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

pub fn read_npy(path: &Path) -> Result<NpyArray> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    parse_npy(&bytes)
}

fn parse_npy(bytes: &[u8]) -> Result<NpyArray> {
    if bytes.len() < 10 || &bytes[0..6] != b"\x93NUMPY" {
        return Err(Error::BadMagic);
    }
    let major = bytes[6];
    let (header_len, header_start) = match major {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10usize),
        2 | 3 => {
            if bytes.len() < 12 {
                return Err(Error::Truncated("npy header length".into()));
            }
            (
                u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize,
                12usize,
            )
        }
        v => return Err(Error::Format(format!("npy version {v} unsupported"))),
    };
    if bytes.len() < header_start + header_len {
        return Err(Error::Truncated("npy header".into()));
    }
    let header = std::str::from_utf8(&bytes[header_start..header_start + header_len])
        .map_err(|_| Error::Format("npy header not utf-8".into()))?;

    let descr = extract_quoted(header, "descr")?;
    let fortran = header.replace(' ', "").contains("'fortran_order':True");
    if fortran {
        return Err(Error::Format("fortran-order npy unsupported".into()));
    }
    let shape = extract_shape(header)?;
    let count: usize = shape.iter().product();

    let payload = &bytes[header_start + header_len..];
    let (width, reader): (usize, fn(&[u8]) -> f64) = match descr.as_str() {
        "<f8" => (8, |b| f64::from_le_bytes(b.try_into().unwrap())),
        "<f4" => (4, |b| f32::from_le_bytes(b.try_into().unwrap()) as f64),
        "<i8" => (8, |b| i64::from_le_bytes(b.try_into().unwrap()) as f64),
        "<i4" => (4, |b| i32::from_le_bytes(b.try_into().unwrap()) as f64),
        "<i2" => (2, |b| i16::from_le_bytes(b.try_into().unwrap()) as f64),
        "<u8" => (8, |b| u64::from_le_bytes(b.try_into().unwrap()) as f64),
        "<u4" => (4, |b| u32::from_le_bytes(b.try_into().unwrap()) as f64),
        "<u2" => (2, |b| u16::from_le_bytes(b.try_into().unwrap()) as f64),
        "|u1" => (1, |b| b[0] as f64),
        "|i1" => (1, |b| b[0] as i8 as f64),
        other => return Err(Error::Format(format!("npy dtype '{other}' unsupported"))),
    };
    if payload.len() < count * width {
        return Err(Error::Truncated(format!(
            "npy payload {} bytes, need {}",
            payload.len(),
            count * width
        )));
    }
    let data = payload[..count * width]
        .chunks_exact(width)
        .map(reader)
        .collect();
    Ok(NpyArray { shape, data })
}

fn extract_quoted(header: &str, key: &str) -> Result<String> {
    let pat = format!("'{key}':");
    let start = header
        .find(&pat)
        .ok_or_else(|| Error::Format(format!("npy header lacks {key}")))?;
    let rest = &header[start + pat.len()..];
    let open = rest
        .find('\'')
        .ok_or_else(|| Error::Format(format!("npy header {key} not quoted")))?;
    let rest = &rest[open + 1..];
    let close = rest
        .find('\'')
        .ok_or_else(|| Error::Format(format!("npy header {key} unterminated")))?;
    Ok(rest[..close].to_string())
}

fn extract_shape(header: &str) -> Result<Vec<usize>> {
    let start = header
        .find("'shape':")
        .ok_or_else(|| Error::Format("npy header lacks shape".into()))?;
    let rest = &header[start..];
    let open = rest
        .find('(')
        .ok_or_else(|| Error::Format("npy shape not a tuple".into()))?;
    let close = rest
        .find(')')
        .ok_or_else(|| Error::Format("npy shape unterminated".into()))?;
    let inner = &rest[open + 1..close];
    let mut shape = Vec::new();
    for part in inner.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        shape.push(
            part.parse::<usize>()
                .map_err(|_| Error::Format(format!("npy shape entry '{part}'")))?,
        );
    }
    Ok(shape)
}

/// Map published arrays into a bundle: `signals` is `S x 30 x 384`
/// (microvolts), `subjects` and `labels` are per-sample vectors
/// (state 0 = alert, 1 = drowsy).
pub fn import_arrays(
    signals: &NpyArray,
    subjects: &NpyArray,
    labels: &NpyArray,
    kind: BundleKind,
) -> Result<DatasetBundle> {
    if signals.shape.len() != 3 || signals.shape[1] != CHANNELS || signals.shape[2] != WINDOW_LEN {
        return Err(Error::Shape(format!(
            "signals shape {:?}, expected (S, {CHANNELS}, {WINDOW_LEN})",
            signals.shape
        )));
    }
    let count = signals.shape[0];
    if element_count(subjects) != count || element_count(labels) != count {
        return Err(Error::Shape(format!(
            "{count} signals but {} subject ids and {} labels",
            element_count(subjects),
            element_count(labels)
        )));
    }
    let mut samples = Vec::with_capacity(count);
    let stride = CHANNELS * WINDOW_LEN;
    for idx in 0..count {
        let subject = subjects.data[idx];
        if subject < 0.0 || subject > f64::from(u16::MAX) || subject.fract() != 0.0 {
            return Err(Error::Format(format!(
                "sample {idx}: subject index {subject} not a small integer"
            )));
        }
        let label_raw = labels.data[idx];
        let label = match label_raw {
            v if v == 0.0 => Label::Alert,
            v if v == 1.0 => Label::Drowsy,
            other => {
                return Err(Error::Format(format!(
                    "sample {idx}: state {other} not in {{0,1}}"
                )))
            }
        };
        let mut signal = Array2::zeros((CHANNELS, WINDOW_LEN));
        let flat = &signals.data[idx * stride..(idx + 1) * stride];
        for (slot, &v) in signal
            .as_slice_mut()
            .expect("standard layout")
            .iter_mut()
            .zip(flat)
        {
            *slot = v as f32;
        }
        samples.push(EegSample {
            subject_id: subject as u16,
            signal,
            label,
            local_rt: None,
        });
    }
    let bundle = DatasetBundle::new(kind, samples);
    bundle.validate()?;
    Ok(bundle)
}

fn element_count(a: &NpyArray) -> usize {
    a.shape.iter().product()
}
