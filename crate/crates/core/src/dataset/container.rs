//! `EEGB v1` binary container.
//!
//! Layout:
//!
//! ```text
//! bytes 0-3   magic "EEGB"
//! byte  4     version (1)
//! u32 LE      header length
//! ...         UTF-8 JSON header {sample_count, channels, length, rate_hz,
//!             kind, channel_names[30], subjects:[{id, alert, drowsy}]}
//! per sample  u16 LE subject_id, u8 label, 30*384 little-endian f32
//!             microvolt values, samples in header order
//! ```
//!
//! Signals are stored as the exact `f32` bits held in memory, so a
//! round-trip is lossless.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{BundleKind, DatasetBundle, EegSample, Label, CHANNELS, RATE_HZ, WINDOW_LEN};
use crate::error::{Error, Result};

const MAGIC: [u8; 4] = *b"EEGB";
const VERSION: u8 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    sample_count: usize,
    channels: usize,
    length: usize,
    rate_hz: usize,
    kind: String,
    channel_names: Vec<String>,
    subjects: Vec<SubjectEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SubjectEntry {
    id: u16,
    alert: usize,
    drowsy: usize,
}

pub fn export_container(bundle: &DatasetBundle, path: &Path) -> Result<()> {
    bundle.validate()?;
    let header = Header {
        sample_count: bundle.samples.len(),
        channels: CHANNELS,
        length: WINDOW_LEN,
        rate_hz: RATE_HZ,
        kind: bundle.kind.name().to_string(),
        channel_names: bundle.channel_names.clone(),
        subjects: bundle
            .per_subject_counts()
            .into_iter()
            .map(|(id, (alert, drowsy))| SubjectEntry { id, alert, drowsy })
            .collect(),
    };
    let header_bytes =
        serde_json::to_vec(&header).map_err(|e| Error::Format(format!("header: {e}")))?;

    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&[VERSION])?;
    w.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    w.write_all(&header_bytes)?;
    for sample in &bundle.samples {
        w.write_all(&sample.subject_id.to_le_bytes())?;
        w.write_all(&[sample.label.as_u8()])?;
        let mut buf = Vec::with_capacity(CHANNELS * WINDOW_LEN * 4);
        for &v in sample.signal.as_slice().expect("standard layout") {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn import_container(path: &Path) -> Result<DatasetBundle> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Truncated("magic".into()))?;
    if magic != MAGIC {
        return Err(Error::BadMagic);
    }
    let mut version = [0u8; 1];
    r.read_exact(&mut version)
        .map_err(|_| Error::Truncated("version".into()))?;
    if version[0] != VERSION {
        return Err(Error::Format(format!(
            "unsupported container version {}",
            version[0]
        )));
    }
    let mut len_buf = [0u8; 4];
    r.read_exact(&mut len_buf)
        .map_err(|_| Error::Truncated("header length".into()))?;
    let header_len = u32::from_le_bytes(len_buf) as usize;
    let mut header_bytes = vec![0u8; header_len];
    r.read_exact(&mut header_bytes)
        .map_err(|_| Error::Truncated("header".into()))?;
    let header: Header =
        serde_json::from_slice(&header_bytes).map_err(|e| Error::Format(format!("header: {e}")))?;

    if header.channels != CHANNELS || header.length != WINDOW_LEN {
        return Err(Error::Shape(format!(
            "container geometry {}x{}, expected {CHANNELS}x{WINDOW_LEN}",
            header.channels, header.length
        )));
    }
    if header.rate_hz != RATE_HZ {
        return Err(Error::Format(format!(
            "container rate {} Hz, expected {RATE_HZ}",
            header.rate_hz
        )));
    }
    if header.channel_names.len() != CHANNELS {
        return Err(Error::Shape(format!(
            "{} channel names in header",
            header.channel_names.len()
        )));
    }
    let kind = BundleKind::parse(&header.kind)?;

    let mut samples = Vec::with_capacity(header.sample_count);
    let mut sig_buf = vec![0u8; CHANNELS * WINDOW_LEN * 4];
    for idx in 0..header.sample_count {
        let mut id_buf = [0u8; 2];
        r.read_exact(&mut id_buf)
            .map_err(|_| Error::Truncated(format!("sample {idx} subject id")))?;
        let mut label_buf = [0u8; 1];
        r.read_exact(&mut label_buf)
            .map_err(|_| Error::Truncated(format!("sample {idx} label")))?;
        r.read_exact(&mut sig_buf)
            .map_err(|_| Error::Truncated(format!("sample {idx} signal")))?;
        let mut signal = Array2::zeros((CHANNELS, WINDOW_LEN));
        for (slot, chunk) in signal
            .as_slice_mut()
            .expect("standard layout")
            .iter_mut()
            .zip(sig_buf.chunks_exact(4))
        {
            *slot = f32::from_le_bytes(chunk.try_into().unwrap());
        }
        samples.push(EegSample {
            subject_id: u16::from_le_bytes(id_buf),
            signal,
            label: Label::from_u8(label_buf[0])?,
            local_rt: None,
        });
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("container has trailing bytes".into()));
    }
    Ok(DatasetBundle {
        kind,
        channel_names: header.channel_names,
        samples,
    })
}

/// Metadata CSV: one `subject,label,index` row per sample.
pub fn export_metadata_csv(bundle: &DatasetBundle, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "subject,label,index")?;
    for (idx, s) in bundle.samples.iter().enumerate() {
        writeln!(w, "{},{},{}", s.subject_id, s.label.as_u8(), idx)?;
    }
    w.flush()?;
    Ok(())
}
