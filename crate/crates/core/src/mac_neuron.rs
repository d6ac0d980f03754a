//! MAC unit and neuron: multiply-accumulate, shifted bias, ReLU, saturation.

use crate::approx_mult::{product_table, MultConfig};
use crate::error::{Error, Result};
use crate::fixedpoint::{rescale_clamp, SignMag8, SignedAcc};

pub const MAX_BIAS_SHIFT: u8 = 13;
pub const MAX_ACT_SHIFT: u8 = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeuronParams {
    pub weights: Vec<SignMag8>,
    pub bias: SignMag8,
    /// Left shift aligning the 8-bit bias with the accumulator scale.
    pub bias_shift: u8,
    /// Right shift applied before clamping the activation to 7 bits.
    pub act_shift: u8,
}

impl NeuronParams {
    pub fn validate(&self, fan_in: usize) -> Result<()> {
        if self.weights.len() != fan_in {
            return Err(Error::contract(format!(
                "neuron has {} weights, layer fan-in is {fan_in}",
                self.weights.len()
            )));
        }
        if self.bias_shift > MAX_BIAS_SHIFT || self.act_shift > MAX_ACT_SHIFT {
            return Err(Error::contract(format!(
                "shift out of range (bias_shift {}, act_shift {})",
                self.bias_shift, self.act_shift
            )));
        }
        Ok(())
    }
}

/// Folds the signed products into the accumulator in input-index order.
pub fn mac_reduce(inputs: &[SignMag8], weights: &[SignMag8], cfg: MultConfig) -> Result<SignedAcc> {
    if inputs.len() != weights.len() {
        return Err(Error::contract(format!(
            "mac_reduce: {} inputs vs {} weights",
            inputs.len(),
            weights.len()
        )));
    }
    if inputs.is_empty() {
        return Err(Error::contract("mac_reduce: empty operand lists"));
    }
    let table = product_table(cfg);
    Ok(inputs
        .iter()
        .zip(weights)
        .fold(SignedAcc::ZERO, |acc, (&x, &w)| {
            acc.add_product(table.multiply_signed(x, w))
        }))
}

pub fn apply_bias(acc: SignedAcc, bias: SignMag8, bias_shift: u8) -> SignedAcc {
    debug_assert!(bias_shift <= MAX_BIAS_SHIFT);
    acc.add_signed_mag(bias.is_negative(), (bias.mag() as u32) << bias_shift)
}

/// ReLU gated on the sign bit, then shift-and-clamp to 7 bits.
pub fn activate(acc: SignedAcc, act_shift: u8) -> SignMag8 {
    if acc.is_negative() {
        SignMag8::ZERO
    } else {
        SignMag8::positive(rescale_clamp(acc.mag(), act_shift as u32))
    }
}

/// Pre-activation neuron output (MAC plus bias), as fed to the comparator.
pub fn neuron_forward_raw(inputs: &[SignMag8], params: &NeuronParams, cfg: MultConfig) -> Result<SignedAcc> {
    let acc = mac_reduce(inputs, &params.weights, cfg)?;
    Ok(apply_bias(acc, params.bias, params.bias_shift))
}

pub fn neuron_forward(inputs: &[SignMag8], params: &NeuronParams, cfg: MultConfig) -> Result<SignMag8> {
    Ok(activate(neuron_forward_raw(inputs, params, cfg)?, params.act_shift))
}
