//! Synthetic datasets and IDX-format ingestion.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use super::mat::Mat;
use crate::rng::Xoshiro256StarStar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Two Gaussian clusters, linearly separable at zero noise.
    Blobs,
    /// Two interleaved Archimedean spirals; needs a nonlinear boundary.
    Spirals,
}

impl FromStr for SyntheticKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "blobs" => Ok(SyntheticKind::Blobs),
            "spirals" => Ok(SyntheticKind::Spirals),
            other => Err(format!("unknown dataset `{other}` (blobs | spirals)")),
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntheticKind::Blobs => write!(f, "blobs"),
            SyntheticKind::Spirals => write!(f, "spirals"),
        }
    }
}

/// Deterministic two-class 2-D dataset; same seed, same bytes.
pub fn make_synthetic(
    kind: SyntheticKind,
    n_per_class: usize,
    noise: f64,
    seed: u64,
) -> (Mat, Vec<u8>) {
    assert!(n_per_class >= 1, "n_per_class must be >= 1");
    assert!(noise >= 0.0, "noise must be >= 0");
    let mut rng = Xoshiro256StarStar::seed_from(seed);
    let total = 2 * n_per_class;
    let mut features = Vec::with_capacity(total * 2);
    let mut labels = Vec::with_capacity(total);
    match kind {
        SyntheticKind::Blobs => {
            let centers = [(-1.5, -1.5), (1.5, 1.5)];
            for i in 0..total {
                let class = (i % 2) as u8;
                let (cx, cy) = centers[class as usize];
                features.push(cx + noise * rng.next_normal());
                features.push(cy + noise * rng.next_normal());
                labels.push(class);
            }
        }
        SyntheticKind::Spirals => {
            let turns = 3.0 * std::f64::consts::PI;
            let start = 0.5 * std::f64::consts::PI;
            for i in 0..total {
                let class = (i % 2) as u8;
                let k = (i / 2) as f64 / n_per_class.max(2) as f64;
                let theta = start + k * turns;
                let radius = 2.0 * theta / (start + turns);
                let sign = if class == 0 { 1.0 } else { -1.0 };
                features.push(sign * radius * theta.cos() + noise * rng.next_normal());
                features.push(sign * radius * theta.sin() + noise * rng.next_normal());
                labels.push(class);
            }
        }
    }
    (Mat::from_vec(total, 2, features), labels)
}

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum IdxError {
    #[error("bad IDX magic: expected {expected:#010x}, got {actual:#010x}")]
    BadMagic { expected: u32, actual: u32 },
    #[error("truncated IDX file: needed {needed} bytes, got {got}")]
    Truncated { needed: usize, got: usize },
    #[error("image/label count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn read_be_u32(bytes: &[u8], offset: usize) -> Result<u32, IdxError> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(IdxError::Truncated {
            needed: end,
            got: bytes.len(),
        });
    }
    Ok(u32::from_be_bytes(bytes[offset..end].try_into().unwrap()))
}

/// Load an IDX image file (magic 0x00000803, big-endian dims
/// count x rows x cols, u8 pixels) as a count x (rows*cols) matrix with
/// pixels scaled to [0, 1].
pub fn load_idx_images(path: impl AsRef<Path>) -> Result<Mat, IdxError> {
    let bytes = fs::read(path)?;
    let magic = read_be_u32(&bytes, 0)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(IdxError::BadMagic {
            expected: IDX_IMAGES_MAGIC,
            actual: magic,
        });
    }
    let count = read_be_u32(&bytes, 4)? as usize;
    let rows = read_be_u32(&bytes, 8)? as usize;
    let cols = read_be_u32(&bytes, 12)? as usize;
    let needed = 16 + count * rows * cols;
    if bytes.len() < needed {
        return Err(IdxError::Truncated {
            needed,
            got: bytes.len(),
        });
    }
    let data = bytes[16..needed]
        .iter()
        .map(|&p| p as f64 / 255.0)
        .collect();
    Ok(Mat::from_vec(count, rows * cols, data))
}

/// Load an IDX label file (magic 0x00000801, big-endian count, u8 labels).
pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>, IdxError> {
    let bytes = fs::read(path)?;
    let magic = read_be_u32(&bytes, 0)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(IdxError::BadMagic {
            expected: IDX_LABELS_MAGIC,
            actual: magic,
        });
    }
    let count = read_be_u32(&bytes, 4)? as usize;
    let needed = 8 + count;
    if bytes.len() < needed {
        return Err(IdxError::Truncated {
            needed,
            got: bytes.len(),
        });
    }
    Ok(bytes[8..needed].to_vec())
}

/// Load a matching image/label pair, validating the counts agree.
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<(Mat, Vec<u8>), IdxError> {
    let images = load_idx_images(images_path)?;
    let labels = load_idx_labels(labels_path)?;
    if images.rows() != labels.len() {
        return Err(IdxError::CountMismatch {
            images: images.rows(),
            labels: labels.len(),
        });
    }
    Ok((images, labels))
}
