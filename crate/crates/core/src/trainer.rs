//! Offline float training of the 62-30-10 network and post-training
//! quantisation into the accelerator's sign-magnitude format.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::approx_mult::MultConfig;
use crate::datapath::{NetworkModel, HIDDEN_NEURONS, INPUT_FEATURES, OUTPUT_NEURONS};
use crate::dataset::FeatureVector;
use crate::error::{Error, Result};
use crate::fixedpoint::{SignMag8, MAG7_MAX};
use crate::mac_neuron::{neuron_forward_raw, NeuronParams, MAX_ACT_SHIFT, MAX_BIAS_SHIFT};

/// Scale of the hardware inputs: a magnitude m stands for m / 127.
const INPUT_SCALE: f64 = 1.0 / 127.0;
/// Fraction of calibration pre-activations allowed to clip at 127.
const CLIP_FRACTION: f64 = 0.01;

/// Float network. Weight matrices are row-major, one row per neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatMlp {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 42,
            epochs: 20,
            batch_size: 32,
            learning_rate: 0.05,
            momentum: 0.9,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let ok = self.epochs > 0
            && self.batch_size > 0
            && self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && (0.0..1.0).contains(&self.momentum);
        if ok {
            Ok(())
        } else {
            Err(Error::contract(format!("invalid training configuration {self:?}")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: FloatMlp,
    pub train_accuracy: f64,
    pub final_epoch_loss: f64,
}

impl FloatMlp {
    pub fn zeros() -> Self {
        FloatMlp {
            w1: vec![0.0; HIDDEN_NEURONS * INPUT_FEATURES],
            b1: vec![0.0; HIDDEN_NEURONS],
            w2: vec![0.0; OUTPUT_NEURONS * HIDDEN_NEURONS],
            b2: vec![0.0; OUTPUT_NEURONS],
        }
    }

    /// Uniform weights in +-sqrt(6 / fan_in), zero biases.
    pub fn init(rng: &mut impl Rng) -> Self {
        let mut m = Self::zeros();
        let l1 = (6.0 / INPUT_FEATURES as f64).sqrt();
        let l2 = (6.0 / HIDDEN_NEURONS as f64).sqrt();
        m.w1.iter_mut().for_each(|w| *w = rng.random_range(-l1..l1));
        m.w2.iter_mut().for_each(|w| *w = rng.random_range(-l2..l2));
        m
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2)
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(&mut self.b1)
            .chain(&mut self.w2)
            .chain(&mut self.b2)
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }

    fn forward(&self, x: &[f64], z1: &mut [f64; HIDDEN_NEURONS], h: &mut [f64; HIDDEN_NEURONS]) -> [f64; OUTPUT_NEURONS] {
        for j in 0..HIDDEN_NEURONS {
            let row = &self.w1[j * INPUT_FEATURES..(j + 1) * INPUT_FEATURES];
            z1[j] = self.b1[j] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
            h[j] = z1[j].max(0.0);
        }
        let mut z2 = [0.0; OUTPUT_NEURONS];
        for (k, z) in z2.iter_mut().enumerate() {
            let row = &self.w2[k * HIDDEN_NEURONS..(k + 1) * HIDDEN_NEURONS];
            *z = self.b2[k] + row.iter().zip(h.iter()).map(|(w, h)| w * h).sum::<f64>();
        }
        z2
    }

    pub fn logits(&self, x: &[f64]) -> [f64; OUTPUT_NEURONS] {
        self.forward(x, &mut [0.0; HIDDEN_NEURONS], &mut [0.0; HIDDEN_NEURONS])
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        let z = self.logits(x);
        let mut best = 0;
        for k in 1..OUTPUT_NEURONS {
            if z[k] > z[best] {
                best = k;
            }
        }
        best as u8
    }

    pub fn accuracy(&self, inputs: &[Vec<f64>], labels: &[u8]) -> f64 {
        let correct = inputs
            .iter()
            .zip(labels)
            .filter(|(x, &y)| self.predict(x) == y)
            .count();
        correct as f64 / inputs.len().max(1) as f64
    }

    /// Mean softmax cross-entropy over the given samples.
    pub fn loss(&self, inputs: &[&[f64]], labels: &[u8]) -> f64 {
        let total: f64 = inputs
            .iter()
            .zip(labels)
            .map(|(x, &y)| {
                let z = self.logits(x);
                log_sum_exp(&z) - z[y as usize]
            })
            .sum();
        total / inputs.len() as f64
    }

    /// Mean cross-entropy and its gradient, laid out like the model.
    pub fn loss_and_grad(&self, inputs: &[&[f64]], labels: &[u8]) -> (f64, FloatMlp) {
        let mut grad = FloatMlp::zeros();
        let mut loss = 0.0;
        let n = inputs.len() as f64;
        let mut z1 = [0.0; HIDDEN_NEURONS];
        let mut h = [0.0; HIDDEN_NEURONS];
        for (x, &y) in inputs.iter().zip(labels) {
            let z2 = self.forward(x, &mut z1, &mut h);
            let lse = log_sum_exp(&z2);
            loss += lse - z2[y as usize];

            let d2: [f64; OUTPUT_NEURONS] =
                std::array::from_fn(|k| ((z2[k] - lse).exp() - (k == y as usize) as u8 as f64) / n);
            let mut dh = [0.0; HIDDEN_NEURONS];
            for (k, &d) in d2.iter().enumerate() {
                grad.b2[k] += d;
                let row = k * HIDDEN_NEURONS;
                for j in 0..HIDDEN_NEURONS {
                    grad.w2[row + j] += d * h[j];
                    dh[j] += d * self.w2[row + j];
                }
            }
            for j in 0..HIDDEN_NEURONS {
                if z1[j] <= 0.0 {
                    continue;
                }
                grad.b1[j] += dh[j];
                let row = &mut grad.w1[j * INPUT_FEATURES..(j + 1) * INPUT_FEATURES];
                for (g, xi) in row.iter_mut().zip(x.iter()) {
                    *g += dh[j] * xi;
                }
            }
        }
        (loss / n, grad)
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Mini-batch SGD with momentum on softmax cross-entropy. Deterministic for
/// a given seed and dataset: the init and every epoch's shuffle come from
/// one ChaCha8 stream, and gradients are summed in sample order.
pub fn train_float(inputs: &[Vec<f64>], labels: &[u8], tc: &TrainConfig) -> Result<TrainOutcome> {
    tc.validate()?;
    if inputs.is_empty() || inputs.len() != labels.len() {
        return Err(Error::contract(format!(
            "training set has {} inputs and {} labels",
            inputs.len(),
            labels.len()
        )));
    }
    if let Some(x) = inputs.iter().find(|x| x.len() != INPUT_FEATURES) {
        return Err(Error::contract(format!("training input of length {}", x.len())));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut model = FloatMlp::init(&mut rng);
    let mut velocity = FloatMlp::zeros();
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut epoch_loss = f64::NAN;

    for epoch in 0..tc.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(tc.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| inputs[i].as_slice()).collect();
            let ys: Vec<u8> = batch.iter().map(|&i| labels[i]).collect();
            let (loss, grad) = model.loss_and_grad(&xs, &ys);
            if !loss.is_finite() {
                return Err(Error::Training(format!("non-finite loss in epoch {epoch}")));
            }
            loss_sum += loss * batch.len() as f64;
            for ((p, v), g) in model.params_mut().zip(velocity.params_mut()).zip(grad.params()) {
                *v = tc.momentum * *v - tc.learning_rate * g;
                *p += *v;
            }
        }
        epoch_loss = loss_sum / inputs.len() as f64;
        if !model.is_finite() {
            return Err(Error::Training(format!("parameters diverged in epoch {epoch}")));
        }
    }

    let train_accuracy = model.accuracy(inputs, labels);
    Ok(TrainOutcome {
        model,
        train_accuracy,
        final_epoch_loss: epoch_loss,
    })
}

#[inline]
fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

/// Sign-magnitude encoding of `v / scale`, magnitude rounded half-up and
/// clamped to 127.
fn quantize_value(v: f64, scale: f64) -> SignMag8 {
    let mag = round_half_up(v.abs() / scale).min(MAG7_MAX as f64) as u8;
    SignMag8::positive(mag).with_sign(v < 0.0)
}

fn layer_scale(weights: &[f64], layer: &'static str) -> Result<f64> {
    let max = weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    if max == 0.0 || !max.is_finite() {
        return Err(Error::DegenerateScale(layer));
    }
    Ok(max / MAG7_MAX as f64)
}

/// Picks the layer-wide left shift and 8-bit biases approximating `targets`
/// (biases in accumulator units). Minimises the summed absolute error;
/// ties go to the smaller shift.
pub fn choose_bias_encoding(targets: &[f64]) -> (u8, Vec<SignMag8>) {
    let mut best: Option<(f64, u8, Vec<SignMag8>)> = None;
    for shift in 0..=MAX_BIAS_SHIFT {
        let unit = (1u32 << shift) as f64;
        let coded: Vec<SignMag8> = targets.iter().map(|&t| quantize_value(t, unit)).collect();
        let err: f64 = targets
            .iter()
            .zip(&coded)
            .map(|(&t, q)| (t - q.decode() as f64 * unit).abs())
            .sum();
        if best.as_ref().is_none_or(|(e, _, _)| err < *e) {
            best = Some((err, shift, coded));
        }
    }
    let (_, shift, coded) = best.expect("at least one shift evaluated");
    (shift, coded)
}

/// Smallest right shift leaving at most 1% of the magnitudes above 127.
pub fn calibrate_act_shift(magnitudes: &[u32]) -> u8 {
    let allowed = (magnitudes.len() as f64 * CLIP_FRACTION).floor() as usize;
    (0..=MAX_ACT_SHIFT)
        .find(|&s| magnitudes.iter().filter(|&&m| (m >> s) > MAG7_MAX as u32).count() <= allowed)
        .unwrap_or(MAX_ACT_SHIFT)
}

/// Post-training quantisation.
///
/// Weights use a symmetric per-layer scale `max|w| / 127`. Biases are
/// expressed in accumulator units (`b / (s_w * s_in)`) and encoded as an
/// 8-bit value times a per-layer power of two. The hidden activation shift
/// is calibrated on exact-mode pre-activations of `calibration`; the output
/// layer feeds the comparator unshifted.
pub fn quantize_model(m: &FloatMlp, feature_indices: &[u16], calibration: &[FeatureVector]) -> Result<NetworkModel> {
    if calibration.is_empty() {
        return Err(Error::contract("quantisation needs a non-empty calibration set"));
    }
    let s1 = layer_scale(&m.w1, "hidden")?;
    let s2 = layer_scale(&m.w2, "output")?;

    let (hidden_bias_shift, hidden_biases) =
        choose_bias_encoding(&m.b1.iter().map(|b| b / (s1 * INPUT_SCALE)).collect::<Vec<_>>());
    let mut hidden: Vec<NeuronParams> = (0..HIDDEN_NEURONS)
        .map(|j| NeuronParams {
            weights: m.w1[j * INPUT_FEATURES..(j + 1) * INPUT_FEATURES]
                .iter()
                .map(|&w| quantize_value(w, s1))
                .collect(),
            bias: hidden_biases[j],
            bias_shift: hidden_bias_shift,
            act_shift: 0,
        })
        .collect();

    let mut magnitudes = Vec::with_capacity(calibration.len() * HIDDEN_NEURONS);
    for fv in calibration {
        for n in &hidden {
            magnitudes.push(neuron_forward_raw(fv.as_slice(), n, MultConfig::EXACT)?.mag());
        }
    }
    let act_shift = calibrate_act_shift(&magnitudes);
    hidden.iter_mut().for_each(|n| n.act_shift = act_shift);

    let hidden_scale = s1 * INPUT_SCALE * (1u32 << act_shift) as f64;
    let (output_bias_shift, output_biases) =
        choose_bias_encoding(&m.b2.iter().map(|b| b / (s2 * hidden_scale)).collect::<Vec<_>>());
    let output = (0..OUTPUT_NEURONS)
        .map(|k| NeuronParams {
            weights: m.w2[k * HIDDEN_NEURONS..(k + 1) * HIDDEN_NEURONS]
                .iter()
                .map(|&w| quantize_value(w, s2))
                .collect(),
            bias: output_biases[k],
            bias_shift: output_bias_shift,
            act_shift: 0,
        })
        .collect();

    let model = NetworkModel {
        feature_indices: feature_indices.to_vec(),
        hidden,
        output,
    };
    model.validate()?;
    Ok(model)
}

/// Float network computing what the quantised model computes, with each
/// layer's weight scale normalised so that a magnitude of 127 maps to 1.0.
/// Equal to the originally trained network up to a positive per-layer
/// rescaling, which leaves every prediction unchanged.
pub fn dequantize(model: &NetworkModel) -> FloatMlp {
    let s1 = 1.0 / MAG7_MAX as f64;
    let s2 = 1.0 / MAG7_MAX as f64;
    let hidden_scale = s1 * INPUT_SCALE * (1u32 << model.hidden_act_shift()) as f64;
    let mut m = FloatMlp::zeros();
    for (j, n) in model.hidden.iter().enumerate() {
        for (i, w) in n.weights.iter().enumerate() {
            m.w1[j * INPUT_FEATURES + i] = w.decode() as f64 * s1;
        }
        m.b1[j] = n.bias.decode() as f64 * (1u32 << n.bias_shift) as f64 * s1 * INPUT_SCALE;
    }
    for (k, n) in model.output.iter().enumerate() {
        for (j, w) in n.weights.iter().enumerate() {
            m.w2[k * HIDDEN_NEURONS + j] = w.decode() as f64 * s2;
        }
        m.b2[k] = n.bias.decode() as f64 * (1u32 << n.bias_shift) as f64 * s2 * hidden_scale;
    }
    m
}
