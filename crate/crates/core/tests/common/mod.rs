//! Independent oracles and shared fixtures for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use approx_mlp::datapath::NetworkModel;
use approx_mlp::fixedpoint::{SignMag8, ACC_MAG_MAX};
use approx_mlp::mac_neuron::NeuronParams;
use approx_mlp::pipeline::{train_and_quantize, PreparedData, TrainedModels};
use approx_mlp::trainer::TrainConfig;
use approx_mlp::Execution;
use rand::Rng;

/// Approximate product computed at value level: the carry chain is an exact
/// adder of per-column values, so the result is sum(2^c * v_c) where v_c is
/// the column's partial-product count, or its OR when the column is
/// approximated.
pub fn oracle_multiply(a: u32, b: u32, mask: u8) -> u32 {
    let mut value = 0;
    for c in 0..14u32 {
        let mut count = 0;
        for i in 0..7u32 {
            for j in 0..7u32 {
                if i + j == c && (a >> i) & 1 == 1 && (b >> j) & 1 == 1 {
                    count += 1;
                }
            }
        }
        let approximated = c < 10 && mask >> (c / 2) & 1 == 1;
        let v = if approximated { (count > 0) as u32 } else { count };
        value += v << c;
    }
    value
}

/// `oracle_multiply` for every mask and operand pair, indexed `[mask][(a << 7) | b]`.
pub fn oracle_products() -> &'static Vec<Vec<u32>> {
    static TABLE: OnceLock<Vec<Vec<u32>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..32u8)
            .map(|mask| (0..1u32 << 14).map(|idx| oracle_multiply(idx >> 7, idx & 127, mask)).collect())
            .collect()
    })
}

const BOUND: i64 = ACC_MAG_MAX as i64;

fn clamp_acc(v: i64) -> i64 {
    v.clamp(-BOUND, BOUND)
}

/// Plain-integer neuron: saturating sum of signed products, shifted bias.
pub fn oracle_neuron_raw(inputs: &[i64], params: &NeuronParams, mask: u8) -> i64 {
    let mut acc = 0i64;
    for (x, w) in inputs.iter().zip(&params.weights) {
        let w = w.decode() as i64;
        let idx = ((x.unsigned_abs() as usize) << 7) | w.unsigned_abs() as usize;
        let mag = oracle_products()[mask as usize][idx] as i64;
        let sign = if (*x < 0) != (w < 0) { -1 } else { 1 };
        acc = clamp_acc(acc + sign * mag);
    }
    clamp_acc(acc + params.bias.decode() as i64 * (1i64 << params.bias_shift))
}

pub fn oracle_activation(raw: i64, act_shift: u8) -> i64 {
    if raw <= 0 {
        0
    } else {
        (raw >> act_shift).min(127)
    }
}

/// Whole network without any scheduling: 30 hidden neurons, then 10
/// outputs, argmax with lowest-index tie-break.
pub fn oracle_classify(model: &NetworkModel, features: &[SignMag8], mask: u8) -> u8 {
    let x: Vec<i64> = features.iter().map(|f| f.decode() as i64).collect();
    let hidden: Vec<i64> = model
        .hidden
        .iter()
        .map(|n| oracle_activation(oracle_neuron_raw(&x, n, mask), n.act_shift))
        .collect();
    let outputs: Vec<i64> = model.output.iter().map(|n| oracle_neuron_raw(&hidden, n, mask)).collect();
    let mut best = 0;
    for k in 1..outputs.len() {
        if outputs[k] > outputs[best] {
            best = k;
        }
    }
    best as u8
}

pub fn random_signmag(rng: &mut impl Rng) -> SignMag8 {
    SignMag8::encode(rng.random_range(-127..=127)).unwrap()
}

/// Random well-formed model with plausible shifts.
pub fn random_model(rng: &mut impl Rng) -> NetworkModel {
    let mut indices: Vec<u16> = (0..196).collect();
    for i in 0..62 {
        let j = rng.random_range(i..196);
        indices.swap(i, j);
    }
    let mut feature_indices = indices[..62].to_vec();
    feature_indices.sort_unstable();
    let (hb, ha, ob) = (rng.random_range(0..=13), rng.random_range(6..=12), rng.random_range(0..=13));
    let mut layer = |n: usize, fan_in: usize, bias_shift: u8, act_shift: u8| -> Vec<NeuronParams> {
        (0..n)
            .map(|_| NeuronParams {
                weights: (0..fan_in).map(|_| random_signmag(rng)).collect(),
                bias: random_signmag(rng),
                bias_shift,
                act_shift,
            })
            .collect()
    };
    let hidden = layer(30, 62, hb, ha);
    let output = layer(10, 30, ob, 0);
    NetworkModel {
        feature_indices,
        hidden,
        output,
    }
}

pub fn mnist_dir() -> PathBuf {
    let dir = std::env::var_os("MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"));
    assert!(
        dir.join("t10k-images-idx3-ubyte").is_file(),
        "MNIST IDX files not found in {} (set MNIST_DIR or run scripts/fetch_mnist.sh)",
        dir.display()
    );
    dir
}

pub fn prepared() -> &'static PreparedData {
    static DATA: OnceLock<PreparedData> = OnceLock::new();
    DATA.get_or_init(|| PreparedData::load(&mnist_dir(), Execution::default()).expect("load MNIST"))
}

/// Float and quantised models trained with the default configuration.
pub fn trained() -> &'static TrainedModels {
    static MODELS: OnceLock<TrainedModels> = OnceLock::new();
    MODELS.get_or_init(|| train_and_quantize(prepared(), &TrainConfig::default()).expect("training"))
}
