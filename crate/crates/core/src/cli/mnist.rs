//! IDX-format image and label files.

use std::path::Path;

use crate::error::{Error, Result};
use crate::learning::Dataset;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format(format!("{what}: truncated header")))
}

/// Parses an image file: `(count, rows·cols, pixels scaled to [0, 1])`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let magic = be_u32(bytes, 0, "images")?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Format(format!("images: bad magic number {magic:#010x}, expected {IMAGES_MAGIC:#010x}")));
    }
    let count = be_u32(bytes, 4, "images")? as usize;
    let rows = be_u32(bytes, 8, "images")? as usize;
    let cols = be_u32(bytes, 12, "images")? as usize;
    let dim = rows * cols;
    let body = &bytes[16..];
    if body.len() != count * dim {
        return Err(Error::Format(format!(
            "images: header promises {count} x {rows}x{cols} = {} bytes, file has {}",
            count * dim,
            body.len()
        )));
    }
    Ok((count, dim, body.iter().map(|&p| f64::from(p) / 255.0).collect()))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let magic = be_u32(bytes, 0, "labels")?;
    if magic != LABELS_MAGIC {
        return Err(Error::Format(format!("labels: bad magic number {magic:#010x}, expected {LABELS_MAGIC:#010x}")));
    }
    let count = be_u32(bytes, 4, "labels")? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(Error::Format(format!("labels: header promises {count} labels, file has {}", body.len())));
    }
    if let Some(&bad) = body.iter().find(|&&l| l > 9) {
        return Err(Error::Format(format!("labels: value {bad} outside 0-9")));
    }
    Ok(body.iter().map(|&l| usize::from(l)).collect())
}

/// Loads a matching pair of image and label files.
pub fn ingest_mnist(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let (count, dim, features) = parse_idx_images(&std::fs::read(images_path)?)?;
    let labels = parse_idx_labels(&std::fs::read(labels_path)?)?;
    if labels.len() != count {
        return Err(Error::Format(format!("{count} images but {} labels", labels.len())));
    }
    Dataset::new(features, labels, dim, 10)
}

/// Encodes images (values in `[0, 1]`) and labels as IDX byte streams.
pub fn encode_idx(images: &[f64], labels: &[usize], rows: usize, cols: usize) -> (Vec<u8>, Vec<u8>) {
    let n = labels.len() as u32;
    let mut img = Vec::with_capacity(16 + images.len());
    img.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    img.extend_from_slice(&n.to_be_bytes());
    img.extend_from_slice(&(rows as u32).to_be_bytes());
    img.extend_from_slice(&(cols as u32).to_be_bytes());
    img.extend(images.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    let mut lab = Vec::with_capacity(8 + labels.len());
    lab.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    lab.extend_from_slice(&n.to_be_bytes());
    lab.extend(labels.iter().map(|&l| l as u8));
    (img, lab)
}
