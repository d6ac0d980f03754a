//! Binary model file (little-endian, CRC32-terminated).
//!
//! ```text
//! offset  size  field
//!      0     4  magic "AMLP"
//!      4     2  version (1)
//!      6     2  n_in (62)
//!      8     2  n_hidden (30)
//!     10     2  n_out (10)
//!     12     1  hidden act_shift
//!     13     1  hidden bias_shift
//!     14     1  output bias_shift
//!     15     1  reserved (0)
//!     16   124  feature indices, 62 x u16
//!    140  1860  hidden weights, 30 x 62 sign-magnitude bytes, row-major
//!   2000    30  hidden biases
//!   2030   300  output weights, 10 x 30
//!   2330    10  output biases
//!   2340     4  CRC32 (IEEE) of bytes 0..2340
//! ```
//!
//! Loading checks magic, version, length and checksum in that order, then
//! the structural contents. A `0x80` byte loads as +0.

use std::fs;
use std::path::Path;

use crate::datapath::{NetworkModel, HIDDEN_NEURONS, INPUT_FEATURES, OUTPUT_NEURONS};
use crate::error::{Error, LoadError, Result};
use crate::fixedpoint::SignMag8;
use crate::mac_neuron::NeuronParams;

pub const MAGIC: [u8; 4] = *b"AMLP";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 16;
const BODY_LEN: usize = HEADER_LEN
    + 2 * INPUT_FEATURES
    + HIDDEN_NEURONS * INPUT_FEATURES
    + HIDDEN_NEURONS
    + OUTPUT_NEURONS * HIDDEN_NEURONS
    + OUTPUT_NEURONS;
/// Size of a version-1 model file.
pub const FILE_LEN: usize = BODY_LEN + 4;

pub fn to_bytes(model: &NetworkModel) -> Result<Vec<u8>> {
    model.validate()?;
    let mut out = Vec::with_capacity(FILE_LEN);
    out.extend_from_slice(&MAGIC);
    for v in [
        FORMAT_VERSION,
        INPUT_FEATURES as u16,
        HIDDEN_NEURONS as u16,
        OUTPUT_NEURONS as u16,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&[
        model.hidden_act_shift(),
        model.hidden_bias_shift(),
        model.output_bias_shift(),
        0,
    ]);
    for idx in &model.feature_indices {
        out.extend_from_slice(&idx.to_le_bytes());
    }
    for layer in [&model.hidden, &model.output] {
        for n in layer {
            out.extend(n.weights.iter().map(|w| w.to_byte()));
        }
        out.extend(layer.iter().map(|n| n.bias.to_byte()));
    }
    debug_assert_eq!(out.len(), BODY_LEN);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

pub fn from_bytes(bytes: &[u8]) -> Result<NetworkModel> {
    let truncated = |found| LoadError::Truncated {
        expected: FILE_LEN,
        found,
    };
    if bytes.len() < 4 {
        return Err(truncated(bytes.len()).into());
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(LoadError::BadMagic(magic).into());
    }
    if bytes.len() < 6 {
        return Err(truncated(bytes.len()).into());
    }
    let version = u16_at(bytes, 4);
    if version != FORMAT_VERSION {
        return Err(LoadError::UnsupportedVersion(version).into());
    }
    if bytes.len() < FILE_LEN {
        return Err(truncated(bytes.len()).into());
    }
    if bytes.len() > FILE_LEN {
        return Err(LoadError::Malformed(format!("{} trailing bytes", bytes.len() - FILE_LEN)).into());
    }
    let stored = u32::from_le_bytes(bytes[BODY_LEN..].try_into().expect("4 bytes"));
    let computed = crc32fast::hash(&bytes[..BODY_LEN]);
    if stored != computed {
        return Err(LoadError::ChecksumMismatch { stored, computed }.into());
    }

    let dims = (u16_at(bytes, 6), u16_at(bytes, 8), u16_at(bytes, 10));
    if dims != (INPUT_FEATURES as u16, HIDDEN_NEURONS as u16, OUTPUT_NEURONS as u16) {
        return Err(LoadError::Malformed(format!("topology {dims:?}, expected (62, 30, 10)")).into());
    }
    let (act_shift, hidden_bias_shift, output_bias_shift) = (bytes[12], bytes[13], bytes[14]);
    if bytes[15] != 0 {
        return Err(LoadError::Malformed(format!("reserved byte is {:#04x}", bytes[15])).into());
    }

    let mut at = HEADER_LEN;
    let feature_indices: Vec<u16> = (0..INPUT_FEATURES).map(|k| u16_at(bytes, at + 2 * k)).collect();
    at += 2 * INPUT_FEATURES;
    let mut take = |n: usize| {
        let s: Vec<SignMag8> = bytes[at..at + n].iter().map(|&b| SignMag8::from_byte(b)).collect();
        at += n;
        s
    };
    let hidden_w = take(HIDDEN_NEURONS * INPUT_FEATURES);
    let hidden_b = take(HIDDEN_NEURONS);
    let output_w = take(OUTPUT_NEURONS * HIDDEN_NEURONS);
    let output_b = take(OUTPUT_NEURONS);

    let layer = |w: &[SignMag8], b: &[SignMag8], fan_in: usize, bias_shift, act_shift| -> Vec<NeuronParams> {
        w.chunks_exact(fan_in)
            .zip(b)
            .map(|(row, &bias)| NeuronParams {
                weights: row.to_vec(),
                bias,
                bias_shift,
                act_shift,
            })
            .collect()
    };
    let model = NetworkModel {
        feature_indices,
        hidden: layer(&hidden_w, &hidden_b, INPUT_FEATURES, hidden_bias_shift, act_shift),
        output: layer(&output_w, &output_b, HIDDEN_NEURONS, output_bias_shift, 0),
    };
    model.validate().map_err(|e| match e {
        Error::Contract(msg) => Error::Load(LoadError::Malformed(msg)),
        other => other,
    })?;
    Ok(model)
}

pub fn export_model(model: &NetworkModel, path: &Path) -> Result<()> {
    let bytes = to_bytes(model)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn import_model(path: &Path) -> Result<NetworkModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
