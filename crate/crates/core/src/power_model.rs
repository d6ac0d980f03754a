//! Static gate-count proxy for per-configuration power.
//!
//! Unit weights: one unit per partial-product AND gate and per OR gate,
//! five per full-adder equivalent, two for an exact column's carry
//! handling. A column with `n` partial products costs `5(n-1) + 2` when
//! exact and `n - 1` (an OR tree) when approximated.
//!
//! The MAC, neuron and network levels add fixed overheads whose sizes are
//! set so that, at the most approximate configuration, the savings shrink
//! from level to level in the same proportions as the measured hardware
//! (MAC 44.36%, neuron 24.78%, network 13.33%). Costs do not depend on
//! operand values.

use crate::approx_mult::{approx_columns, column_population, MultConfig};
use crate::datapath::MULTIPLIES_PER_IMAGE;

const PARTIAL_PRODUCT_GATES: u64 = 49;
const FULL_ADDER_UNITS: u64 = 5;
const EXACT_CARRY_UNITS: u64 = 2;
const OR_UNITS: u64 = 1;

/// 21-bit accumulator adder (105) plus sign/compare logic (50).
pub const MAC_OVERHEAD: u64 = 155;
/// Bias adder, ReLU and saturation around each MAC.
pub const NEURON_OVERHEAD: u64 = 324;
/// Control, registers and memories shared by the whole network, per image.
pub const NETWORK_OVERHEAD: u64 = network_overhead();

/// Reference saving ratios (in basis points) the overheads are fitted to.
const NEURON_SAVING_BP: u64 = 2478;
const NETWORK_SAVING_BP: u64 = 1333;

const fn network_overhead() -> u64 {
    // round(2160 * neuron_cost(0) * (24.78 / 13.33 - 1)), in integers
    let base = MULTIPLIES_PER_IMAGE * (EXACT_MULTIPLIER_COST + MAC_OVERHEAD + NEURON_OVERHEAD);
    let num = base * (NEURON_SAVING_BP - NETWORK_SAVING_BP);
    (2 * num + NETWORK_SAVING_BP) / (2 * NETWORK_SAVING_BP)
}

const EXACT_MULTIPLIER_COST: u64 = 255;

pub fn multiplier_cost(cfg: MultConfig) -> u64 {
    let plan = approx_columns(cfg);
    let columns: u64 = (0..13)
        .map(|c| {
            let n = column_population(c) as u64;
            if plan.contains(c) {
                OR_UNITS * (n - 1)
            } else {
                FULL_ADDER_UNITS * (n - 1) + EXACT_CARRY_UNITS
            }
        })
        .sum();
    PARTIAL_PRODUCT_GATES + columns
}

pub fn mac_cost(cfg: MultConfig) -> u64 {
    multiplier_cost(cfg) + MAC_OVERHEAD
}

pub fn neuron_cost(cfg: MultConfig) -> u64 {
    mac_cost(cfg) + NEURON_OVERHEAD
}

pub fn network_cost_per_image(cfg: MultConfig) -> u64 {
    MULTIPLIES_PER_IMAGE * neuron_cost(cfg) + NETWORK_OVERHEAD
}

/// Fractional saving relative to the exact configuration at each level.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Savings {
    pub multiplier: f64,
    pub mac: f64,
    pub neuron: f64,
    pub network: f64,
}

fn saving(cost: impl Fn(MultConfig) -> u64, cfg: MultConfig) -> f64 {
    let base = cost(MultConfig::EXACT);
    (base - cost(cfg)) as f64 / base as f64
}

pub fn savings_pct(cfg: MultConfig) -> Savings {
    Savings {
        multiplier: saving(multiplier_cost, cfg),
        mac: saving(mac_cost, cfg),
        neuron: saving(neuron_cost, cfg),
        network: saving(network_cost_per_image, cfg),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub config: MultConfig,
    pub mult_cost: u64,
    pub mac_cost: u64,
    pub neuron_cost: u64,
    pub network_cost_per_image: u64,
    pub saving_vs_exact: Savings,
}

pub fn cost_report(cfg: MultConfig) -> CostReport {
    CostReport {
        config: cfg,
        mult_cost: multiplier_cost(cfg),
        mac_cost: mac_cost(cfg),
        neuron_cost: neuron_cost(cfg),
        network_cost_per_image: network_cost_per_image(cfg),
        saving_vs_exact: savings_pct(cfg),
    }
}
