//! Multicycle datapath and its five-state controller.
//!
//! Ten physical neurons are time-shared over four passes per image. States
//! S0, S1 and S2 evaluate hidden neurons 0-9, 10-19 and 20-29 and latch the
//! activations into register banks 0, 1 and 2. S3 runs the ten output
//! neurons over the concatenated banks, picks the largest pre-activation,
//! and bumps the classified-image counter. The controller then loops back
//! to S0 while images remain, or parks in S4.
//!
//! Cycle model: one operand per cycle plus one writeback/transition cycle
//! per state, i.e. 3 x (62 + 1) + (30 + 1) = 220 cycles per image.

use crate::approx_mult::MultConfig;
use crate::dataset::{Example, POOLED_LEN};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fixedpoint::{SignMag8, SignedAcc};
use crate::mac_neuron::{neuron_forward, neuron_forward_raw, NeuronParams};

pub const INPUT_FEATURES: usize = 62;
pub const HIDDEN_NEURONS: usize = 30;
pub const OUTPUT_NEURONS: usize = 10;
pub const PHYSICAL_NEURONS: usize = 10;
pub const HIDDEN_BANKS: usize = HIDDEN_NEURONS / PHYSICAL_NEURONS;
pub const CYCLES_PER_IMAGE: u64 = 220;

/// Multiplications per image: 30 x 62 hidden plus 10 x 30 output.
pub const MULTIPLIES_PER_IMAGE: u64 = (HIDDEN_NEURONS * INPUT_FEATURES + OUTPUT_NEURONS * HIDDEN_NEURONS) as u64;

/// Quantised 62-30-10 network as held in the accelerator's memories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkModel {
    /// Positions in the 14x14 pooled grid feeding the 62 inputs.
    pub feature_indices: Vec<u16>,
    pub hidden: Vec<NeuronParams>,
    pub output: Vec<NeuronParams>,
}

impl NetworkModel {
    pub fn validate(&self) -> Result<()> {
        if self.feature_indices.len() != INPUT_FEATURES {
            return Err(Error::contract(format!(
                "model has {} feature indices, expected {INPUT_FEATURES}",
                self.feature_indices.len()
            )));
        }
        let mut seen = [false; POOLED_LEN];
        for &idx in &self.feature_indices {
            let idx = idx as usize;
            if idx >= POOLED_LEN || std::mem::replace(&mut seen[idx], true) {
                return Err(Error::contract(format!(
                    "feature index {idx} is out of range or repeated"
                )));
            }
        }
        check_layer("hidden", &self.hidden, HIDDEN_NEURONS, INPUT_FEATURES)?;
        check_layer("output", &self.output, OUTPUT_NEURONS, HIDDEN_NEURONS)
    }

    pub fn hidden_bias_shift(&self) -> u8 {
        self.hidden.first().map_or(0, |n| n.bias_shift)
    }

    pub fn hidden_act_shift(&self) -> u8 {
        self.hidden.first().map_or(0, |n| n.act_shift)
    }

    pub fn output_bias_shift(&self) -> u8 {
        self.output.first().map_or(0, |n| n.bias_shift)
    }
}

fn check_layer(name: &str, layer: &[NeuronParams], neurons: usize, fan_in: usize) -> Result<()> {
    if layer.len() != neurons {
        return Err(Error::contract(format!(
            "{name} layer has {} neurons, expected {neurons}",
            layer.len()
        )));
    }
    for n in layer {
        n.validate(fan_in)?;
        if n.bias_shift != layer[0].bias_shift || n.act_shift != layer[0].act_shift {
            return Err(Error::contract(format!("{name} layer shifts are not uniform")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FsmState {
    /// Hidden neurons 0-9 into bank 0.
    S0,
    /// Hidden neurons 10-19 into bank 1.
    S1,
    /// Hidden neurons 20-29 into bank 2.
    S2,
    /// Output layer, argmax, image counter.
    S3,
    /// All images classified.
    S4,
}

impl FsmState {
    /// Cycles spent in one visit of this state.
    pub fn cycles(self) -> u64 {
        match self {
            FsmState::S0 | FsmState::S1 | FsmState::S2 => INPUT_FEATURES as u64 + 1,
            FsmState::S3 => HIDDEN_NEURONS as u64 + 1,
            FsmState::S4 => 0,
        }
    }
}

pub fn fsm_next(state: FsmState, images_remaining: bool) -> Result<FsmState> {
    Ok(match state {
        FsmState::S0 => FsmState::S1,
        FsmState::S1 => FsmState::S2,
        FsmState::S2 => FsmState::S3,
        FsmState::S3 if images_remaining => FsmState::S0,
        FsmState::S3 => FsmState::S4,
        FsmState::S4 => return Err(Error::contract("controller stepped past the terminal state")),
    })
}

/// Index of the largest signed value; the lowest index wins ties.
pub fn argmax(outputs: &[SignedAcc]) -> Result<u8> {
    if outputs.len() != OUTPUT_NEURONS {
        return Err(Error::contract(format!(
            "argmax over {} values, expected {OUTPUT_NEURONS}",
            outputs.len()
        )));
    }
    let mut best = 0;
    for (i, v) in outputs.iter().enumerate().skip(1) {
        if v.decode() > outputs[best].decode() {
            best = i;
        }
    }
    Ok(best as u8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction {
    pub label: u8,
    pub cycles: u64,
}

/// Architectural state of the datapath and controller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatapathState {
    pub state: FsmState,
    pub hidden_regs: [[SignMag8; PHYSICAL_NEURONS]; HIDDEN_BANKS],
    pub output_raw: [SignedAcc; OUTPUT_NEURONS],
    pub image_counter: usize,
    pub cycle_counter: u64,
}

impl DatapathState {
    fn at_image(image_counter: usize) -> Self {
        DatapathState {
            state: FsmState::S0,
            hidden_regs: [[SignMag8::ZERO; PHYSICAL_NEURONS]; HIDDEN_BANKS],
            output_raw: [SignedAcc::ZERO; OUTPUT_NEURONS],
            image_counter,
            cycle_counter: 0,
        }
    }
}

/// One accelerator instance: a model, a fixed error-control word shared by
/// all ten physical neurons, and the running state.
pub struct Accelerator<'m> {
    model: &'m NetworkModel,
    cfg: MultConfig,
    dataset_len: usize,
    regs: DatapathState,
    trace: Vec<FsmState>,
}

impl<'m> Accelerator<'m> {
    /// Controller positioned at S0 for image `start` of a `dataset_len`-image run.
    pub fn new(model: &'m NetworkModel, cfg: MultConfig, start: usize, dataset_len: usize) -> Result<Self> {
        model.validate()?;
        if start >= dataset_len {
            return Err(Error::contract(format!(
                "start image {start} beyond dataset of {dataset_len}"
            )));
        }
        Ok(Accelerator {
            model,
            cfg,
            dataset_len,
            regs: DatapathState::at_image(start),
            trace: Vec::new(),
        })
    }

    pub fn state(&self) -> &DatapathState {
        &self.regs
    }

    /// States visited so far, in order (including S4 once reached).
    pub fn trace(&self) -> &[FsmState] {
        &self.trace
    }

    fn into_trace(self) -> Vec<FsmState> {
        self.trace
    }

    /// Runs S0..S3 for one image and takes the S3 transition.
    pub fn classify(&mut self, features: &[SignMag8]) -> Result<Prediction> {
        if features.len() != INPUT_FEATURES {
            return Err(Error::contract(format!(
                "image has {} features, expected {INPUT_FEATURES}",
                features.len()
            )));
        }
        if self.regs.state != FsmState::S0 {
            return Err(Error::contract(format!(
                "classify entered in state {:?}",
                self.regs.state
            )));
        }
        let start_cycles = self.regs.cycle_counter;
        let mut label = None;
        loop {
            let state = self.regs.state;
            self.trace.push(state);
            self.regs.cycle_counter += state.cycles();
            match state {
                FsmState::S0 | FsmState::S1 | FsmState::S2 => self.hidden_pass(state as usize, features)?,
                FsmState::S3 => {
                    label = Some(self.output_pass()?);
                    self.regs.image_counter += 1;
                }
                FsmState::S4 => unreachable!("S4 is never re-entered"),
            }
            let remaining = self.regs.image_counter < self.dataset_len;
            self.regs.state = fsm_next(state, remaining)?;
            if state == FsmState::S3 {
                if self.regs.state == FsmState::S4 {
                    self.trace.push(FsmState::S4);
                }
                break;
            }
        }
        Ok(Prediction {
            label: label.expect("S3 always yields a label"),
            cycles: self.regs.cycle_counter - start_cycles,
        })
    }

    fn hidden_pass(&mut self, bank: usize, features: &[SignMag8]) -> Result<()> {
        for slot in 0..PHYSICAL_NEURONS {
            let params = &self.model.hidden[bank * PHYSICAL_NEURONS + slot];
            self.regs.hidden_regs[bank][slot] = neuron_forward(features, params, self.cfg)?;
        }
        Ok(())
    }

    fn output_pass(&mut self) -> Result<u8> {
        let hidden = self.regs.hidden_regs.as_flattened();
        for (slot, params) in self.model.output.iter().enumerate() {
            self.regs.output_raw[slot] = neuron_forward_raw(hidden, params, self.cfg)?;
        }
        argmax(&self.regs.output_raw)
    }
}

/// Classifies a single image as a one-image run.
pub fn classify_image(model: &NetworkModel, features: &[SignMag8], cfg: MultConfig) -> Result<Prediction> {
    Accelerator::new(model, cfg, 0, 1)?.classify(features)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub total_cycles: u64,
    pub predictions: Vec<Prediction>,
    /// Controller trace for the whole run: (S0 S1 S2 S3)^N S4.
    pub fsm_trace: Vec<FsmState>,
}

const RUN_CHUNK: usize = 250;

/// Classifies every example. Under a parallel policy the dataset is split
/// into contiguous chunks, each driven by its own controller resumed at the
/// chunk's image counter; the traces are concatenated in order.
pub fn run_dataset(model: &NetworkModel, examples: &[Example], cfg: MultConfig, exec: Execution) -> Result<RunResult> {
    if examples.is_empty() {
        return Err(Error::contract("run_dataset on an empty dataset"));
    }
    model.validate()?;
    let n = examples.len();
    let chunks = n.div_ceil(RUN_CHUNK);
    let parts = exec.map_range(0..chunks, |chunk| -> Result<(Vec<Prediction>, Vec<FsmState>)> {
        let start = chunk * RUN_CHUNK;
        let end = (start + RUN_CHUNK).min(n);
        let mut acc = Accelerator::new(model, cfg, start, n)?;
        let preds = examples[start..end]
            .iter()
            .map(|ex| acc.classify(ex.features.as_slice()))
            .collect::<Result<Vec<_>>>()?;
        Ok((preds, acc.into_trace()))
    });

    let mut predictions = Vec::with_capacity(n);
    let mut fsm_trace = Vec::with_capacity(4 * n + 1);
    for part in parts {
        let (preds, trace) = part?;
        predictions.extend(preds);
        fsm_trace.extend(trace);
    }
    let correct = predictions
        .iter()
        .zip(examples)
        .filter(|(p, ex)| p.label == ex.label)
        .count();
    let total_cycles = predictions.iter().map(|p| p.cycles).sum();
    Ok(RunResult {
        accuracy: correct as f64 / n as f64,
        correct,
        total: n,
        total_cycles,
        predictions,
        fsm_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureVector;

    fn sm(v: i32) -> SignMag8 {
        SignMag8::encode(v).unwrap()
    }

    pub(crate) fn bias_model(output_biases: [i32; 10]) -> NetworkModel {
        let neuron = |fan_in, bias| NeuronParams {
            weights: vec![SignMag8::ZERO; fan_in],
            bias: sm(bias),
            bias_shift: 0,
            act_shift: 0,
        };
        NetworkModel {
            feature_indices: (0..62).collect(),
            hidden: (0..30).map(|_| neuron(62, 0)).collect(),
            output: output_biases.iter().map(|&b| neuron(30, b)).collect(),
        }
    }

    #[test]
    fn fsm_transitions() {
        assert_eq!(fsm_next(FsmState::S0, true).unwrap(), FsmState::S1);
        assert_eq!(fsm_next(FsmState::S0, false).unwrap(), FsmState::S1);
        assert_eq!(fsm_next(FsmState::S1, false).unwrap(), FsmState::S2);
        assert_eq!(fsm_next(FsmState::S2, false).unwrap(), FsmState::S3);
        assert_eq!(fsm_next(FsmState::S3, true).unwrap(), FsmState::S0);
        assert_eq!(fsm_next(FsmState::S3, false).unwrap(), FsmState::S4);
        assert!(matches!(fsm_next(FsmState::S4, true), Err(Error::Contract(_))));
    }

    #[test]
    fn argmax_examples() {
        let mut v = [SignedAcc::ZERO; 10];
        v[7] = SignedAcc::from_i64(5);
        assert_eq!(argmax(&v).unwrap(), 7);
        assert_eq!(argmax(&[SignedAcc::from_i64(4); 10]).unwrap(), 0);
        let mut neg = [SignedAcc::from_i64(-9); 10];
        neg[0] = SignedAcc::from_i64(-3);
        neg[1] = SignedAcc::from_i64(-1);
        neg[2] = SignedAcc::from_i64(-2);
        assert_eq!(argmax(&neg).unwrap(), 1);
        assert!(argmax(&v[..9]).is_err());
    }

    #[test]
    fn bias_only_propagation() {
        let mut biases = [1; 10];
        biases[3] = 50;
        let model = bias_model(biases);
        let p = classify_image(&model, &[SignMag8::ZERO; 62], MultConfig::EXACT).unwrap();
        assert_eq!(p, Prediction { label: 3, cycles: CYCLES_PER_IMAGE });
    }

    #[test]
    fn cycle_model_adds_up() {
        let per_image: u64 = [FsmState::S0, FsmState::S1, FsmState::S2, FsmState::S3]
            .iter()
            .map(|s| s.cycles())
            .sum();
        assert_eq!(per_image, CYCLES_PER_IMAGE);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        let mut model = bias_model([0; 10]);
        assert!(classify_image(&model, &[SignMag8::ZERO; 61], MultConfig::EXACT).is_err());
        model.feature_indices[5] = 0;
        assert!(matches!(
            classify_image(&model, &[SignMag8::ZERO; 62], MultConfig::EXACT),
            Err(Error::Contract(_))
        ));
        let mut model = bias_model([0; 10]);
        model.output.pop();
        assert!(model.validate().is_err());
        assert!(run_dataset(&bias_model([0; 10]), &[], MultConfig::EXACT, Execution::Sequential).is_err());
    }

    #[test]
    fn run_dataset_counts() {
        let mut biases = [0; 10];
        biases[4] = 9;
        let model = bias_model(biases);
        let examples: Vec<Example> = (0..600)
            .map(|i| Example {
                features: FeatureVector::zeros(),
                label: if i % 3 == 0 { 4 } else { 1 },
            })
            .collect();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let r = run_dataset(&model, &examples, MultConfig::EXACT, exec).unwrap();
            assert_eq!(r.correct, 200);
            assert_eq!(r.total_cycles, 220 * 600);
            assert_eq!(r.fsm_trace.len(), 4 * 600 + 1);
            assert_eq!(*r.fsm_trace.last().unwrap(), FsmState::S4);
        }
        let one = run_dataset(&model, &examples[..1], MultConfig::EXACT, Execution::Sequential).unwrap();
        assert_eq!(one.accuracy, 1.0);
    }
}
