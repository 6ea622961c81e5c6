//! IDX (ubyte) image and label files as used by MNIST.
//!
//! Layout: big-endian `u32` magic (`0x00000803` images, `0x00000801`
//! labels), big-endian `u32` dimension sizes, then raw `u8` payload.

use std::path::Path;

use super::{DatasetSchema, FeatureKind, Provenance, TabularDataset};
use crate::{Error, Result};

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    /// `count * rows * cols` bytes, image-major.
    pub pixels: Vec<u8>,
}

fn read_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format(format!("truncated IDX header: missing {what}")))
}

fn payload(bytes: &[u8], header: usize, len: usize) -> Result<&[u8]> {
    let available = bytes.len() - header;
    if available < len {
        return Err(Error::Format(format!(
            "truncated IDX payload: header declares {len} bytes, {available} present"
        )));
    }
    if available > len {
        return Err(Error::Format(format!(
            "IDX file has {} trailing bytes",
            available - len
        )));
    }
    Ok(&bytes[header..])
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let magic = read_u32(bytes, 0, "magic")?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "bad IDX image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}"
        )));
    }
    let count = read_u32(bytes, 4, "image count")? as usize;
    let rows = read_u32(bytes, 8, "row count")? as usize;
    let cols = read_u32(bytes, 12, "column count")? as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::Format(format!("degenerate image size {rows}x{cols}")));
    }
    let len = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| Error::Format("IDX dimensions overflow".into()))?;
    let pixels = payload(bytes, 16, len)?.to_vec();
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels,
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = read_u32(bytes, 0, "magic")?;
    if magic != LABEL_MAGIC {
        return Err(Error::Format(format!(
            "bad IDX label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}"
        )));
    }
    let count = read_u32(bytes, 4, "label count")? as usize;
    Ok(payload(bytes, 8, count)?.to_vec())
}

/// Uniform unit-cost schema for `dim` pixels and digit classes `0..=9`.
pub fn mnist_schema(dim: usize) -> DatasetSchema {
    DatasetSchema::uniform(
        "px",
        dim,
        1.0,
        FeatureKind::Real,
        (0..10).map(|c| c.to_string()).collect(),
    )
    .expect("static schema is valid")
}

/// Images become rows of `pixel / 255`; every pixel costs 1.
pub fn load_mnist(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<(TabularDataset, DatasetSchema)> {
    let ip = images_path.as_ref();
    let lp = labels_path.as_ref();
    let images = parse_idx_images(&std::fs::read(ip).map_err(|e| Error::io(ip, e))?)?;
    let labels = parse_idx_labels(&std::fs::read(lp).map_err(|e| Error::io(lp, e))?)?;
    mnist_dataset(&images, &labels)
}

pub(crate) fn mnist_dataset(images: &IdxImages, labels: &[u8]) -> Result<(TabularDataset, DatasetSchema)> {
    if images.count != labels.len() {
        return Err(Error::Format(format!(
            "{} images but {} labels",
            images.count,
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 9) {
        return Err(Error::Format(format!("label {bad} is not a digit")));
    }
    if images.count == 0 {
        return Err(Error::Data("no data rows".into()));
    }
    let dim = images.rows * images.cols;
    let values = images.pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    let ds = TabularDataset::new(
        dim,
        values,
        labels.iter().map(|&l| l as usize).collect(),
        Provenance::Scaled,
    )?;
    Ok((ds, mnist_schema(dim)))
}
