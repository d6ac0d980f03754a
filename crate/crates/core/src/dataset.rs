//! MNIST ingestion and the 784 -> 62 input reduction.
//!
//! Images are average-pooled over non-overlapping 2x2 blocks (28x28 ->
//! 14x14 = 196 values, floor of the mean), the 62 pooled positions with the
//! highest population variance over the training set are kept, and each
//! kept value is rescaled from [0, 255] to a 7-bit magnitude with
//! round-half-up.

use std::fs;
use std::path::Path;

use crate::datapath::INPUT_FEATURES;
use crate::error::{Error, Result};
use crate::fixedpoint::SignMag8;

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_LEN: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const POOLED_SIDE: usize = IMAGE_SIDE / 2;
pub const POOLED_LEN: usize = POOLED_SIDE * POOLED_SIDE;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Clone, PartialEq, Eq)]
pub struct RawImage(pub [u8; IMAGE_LEN]);

impl std::fmt::Debug for RawImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RawImage({} lit pixels)", self.0.iter().filter(|&&p| p > 0).count())
    }
}

pub type Pooled = [u8; POOLED_LEN];

/// The 62 non-negative inputs of one image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureVector(pub [SignMag8; INPUT_FEATURES]);

impl FeatureVector {
    pub fn zeros() -> Self {
        FeatureVector([SignMag8::ZERO; INPUT_FEATURES])
    }

    pub fn as_slice(&self) -> &[SignMag8] {
        &self.0
    }

    /// Inputs as reals in [0, 1] (magnitude / 127), the training-time view.
    pub fn to_unit_f64(&self) -> Vec<f64> {
        self.0.iter().map(|x| x.mag() as f64 / 127.0).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub features: FeatureVector,
    pub label: u8,
}

fn read_header(bytes: &[u8], words: usize) -> Result<Vec<u32>> {
    let need = 4 * words;
    if bytes.len() < need {
        return Err(Error::Truncated {
            expected: need,
            found: bytes.len(),
        });
    }
    Ok(bytes[..need]
        .chunks_exact(4)
        .map(|w| u32::from_be_bytes([w[0], w[1], w[2], w[3]]))
        .collect())
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<RawImage>> {
    let header = read_header(bytes, 4)?;
    if header[0] != IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "image file magic {:#010x}, expected {IMAGES_MAGIC:#010x}",
            header[0]
        )));
    }
    let (count, rows, cols) = (header[1] as usize, header[2] as usize, header[3] as usize);
    if rows != IMAGE_SIDE || cols != IMAGE_SIDE {
        return Err(Error::Format(format!("image dimensions {rows}x{cols}, expected 28x28")));
    }
    let payload = &bytes[16..];
    let expected = count * IMAGE_LEN;
    if payload.len() < expected {
        return Err(Error::Truncated {
            expected: 16 + expected,
            found: bytes.len(),
        });
    }
    Ok(payload[..expected]
        .chunks_exact(IMAGE_LEN)
        .map(|px| RawImage(px.try_into().expect("chunk is IMAGE_LEN bytes")))
        .collect())
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let header = read_header(bytes, 2)?;
    if header[0] != LABELS_MAGIC {
        return Err(Error::Format(format!(
            "label file magic {:#010x}, expected {LABELS_MAGIC:#010x}",
            header[0]
        )));
    }
    let count = header[1] as usize;
    let payload = &bytes[8..];
    if payload.len() < count {
        return Err(Error::Truncated {
            expected: 8 + count,
            found: bytes.len(),
        });
    }
    let labels = payload[..count].to_vec();
    if let Some(pos) = labels.iter().position(|&l| l > 9) {
        return Err(Error::Format(format!("label {} at index {pos} is not a digit", labels[pos])));
    }
    Ok(labels)
}

pub fn pool2x2(img: &RawImage) -> Pooled {
    let mut out = [0u8; POOLED_LEN];
    for r in 0..POOLED_SIDE {
        for c in 0..POOLED_SIDE {
            let at = |dr: usize, dc: usize| img.0[(2 * r + dr) * IMAGE_SIDE + 2 * c + dc] as u32;
            out[r * POOLED_SIDE + c] = ((at(0, 0) + at(0, 1) + at(1, 0) + at(1, 1)) / 4) as u8;
        }
    }
    out
}

/// Indices (ascending) of the `count` highest-variance pooled positions.
/// Variances are compared exactly as `n * sum(v^2) - sum(v)^2`, which is
/// `n^2` times the population variance; ties go to the lower index.
pub fn select_features(pooled: &[Pooled], count: usize) -> Result<Vec<u16>> {
    if pooled.is_empty() {
        return Err(Error::contract("feature selection needs a non-empty training set"));
    }
    if count > POOLED_LEN {
        return Err(Error::contract(format!("cannot select {count} of {POOLED_LEN} positions")));
    }
    let n = pooled.len() as u128;
    let mut sum = [0u128; POOLED_LEN];
    let mut sum_sq = [0u128; POOLED_LEN];
    for p in pooled {
        for (i, &v) in p.iter().enumerate() {
            sum[i] += v as u128;
            sum_sq[i] += (v as u128) * (v as u128);
        }
    }
    let scaled_var: Vec<u128> = (0..POOLED_LEN).map(|i| n * sum_sq[i] - sum[i] * sum[i]).collect();
    let mut order: Vec<usize> = (0..POOLED_LEN).collect();
    order.sort_by(|&a, &b| scaled_var[b].cmp(&scaled_var[a]).then(a.cmp(&b)));
    let mut chosen: Vec<u16> = order[..count].iter().map(|&i| i as u16).collect();
    chosen.sort_unstable();
    Ok(chosen)
}

/// round_half_up(v * 127 / 255)
#[inline]
pub fn quantize_pixel(v: u8) -> u8 {
    ((v as u32 * 127 * 2 + 255) / (2 * 255)) as u8
}

pub fn quantize_input(pooled: &Pooled, indices: &[u16]) -> Result<FeatureVector> {
    if indices.len() != INPUT_FEATURES {
        return Err(Error::contract(format!(
            "{} feature indices, expected {INPUT_FEATURES}",
            indices.len()
        )));
    }
    let mut out = FeatureVector::zeros();
    for (slot, &idx) in out.0.iter_mut().zip(indices) {
        let v = *pooled
            .get(idx as usize)
            .ok_or_else(|| Error::contract(format!("feature index {idx} out of range")))?;
        *slot = SignMag8::positive(quantize_pixel(v));
    }
    Ok(out)
}

/// Pools, then quantises the selected positions of every image.
pub fn build_examples(images: &[RawImage], labels: &[u8], indices: &[u16]) -> Result<Vec<Example>> {
    if images.len() != labels.len() {
        return Err(Error::Format(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    images
        .iter()
        .zip(labels)
        .map(|(img, &label)| {
            Ok(Example {
                features: quantize_input(&pool2x2(img), indices)?,
                label,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn file_names(self) -> (&'static str, &'static str) {
        match self {
            Split::Train => ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
            Split::Test => ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
        }
    }
}

/// Raw images and labels of one split, from the standard uncompressed IDX
/// file names inside `dir`.
pub fn load_mnist(dir: &Path, split: Split) -> Result<(Vec<RawImage>, Vec<u8>)> {
    let (img_name, lbl_name) = split.file_names();
    let read = |name: &str| {
        let path = dir.join(name);
        fs::read(&path).map_err(|e| Error::io(path, e))
    };
    let images = parse_idx_images(&read(img_name)?)?;
    let labels = parse_idx_labels(&read(lbl_name)?)?;
    if images.len() != labels.len() {
        return Err(Error::Format(format!(
            "{img_name} holds {} images but {lbl_name} holds {} labels",
            images.len(),
            labels.len()
        )));
    }
    Ok((images, labels))
}
