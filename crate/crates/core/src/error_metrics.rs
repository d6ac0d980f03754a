//! Exhaustive error characterisation of the multiplier configurations.
//!
//! For each configuration all 128 x 128 operand pairs are evaluated. With
//! ED = |exact - approx|:
//!
//! * ER   = fraction of pairs with ED > 0
//! * MRED = mean of ED / exact over pairs with a non-zero exact product
//! * NMED = mean ED over all pairs, divided by the largest exact product 16129
//!
//! Pairs with a zero exact product always have ED = 0, so excluding them
//! from the MRED mean never hides error.

use crate::approx_mult::{multiply_mag, MultConfig, OPERAND_PAIRS};
use crate::exec::Execution;
use crate::fixedpoint::PRODUCT_MAG_MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub config: MultConfig,
    pub er: f64,
    pub mred: f64,
    pub nmed: f64,
    pub max_ed: u32,
    /// Sum of ED over all 16,384 pairs; `mean_ed` is this over the pair count.
    pub total_ed: u64,
    /// Number of pairs with ED > 0.
    pub error_count: u32,
}

impl ErrorReport {
    pub fn mean_ed(&self) -> f64 {
        self.total_ed as f64 / OPERAND_PAIRS as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRange {
    pub min: f64,
    pub max: f64,
    pub avg: f64,
}

impl MetricRange {
    fn over(values: impl Iterator<Item = f64>) -> Self {
        let (mut min, mut max, mut sum, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
        for v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
            n += 1;
        }
        MetricRange {
            min,
            max,
            avg: sum / n as f64,
        }
    }
}

/// Min/max/average of each metric over the approximate configurations
/// (mask 0 is excluded, so averages divide by 31).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsSummary {
    pub er: MetricRange,
    pub mred: MetricRange,
    pub nmed: MetricRange,
    pub configs_counted: usize,
}

pub fn evaluate_config(cfg: MultConfig) -> ErrorReport {
    let mut error_count = 0u32;
    let mut total_ed = 0u64;
    let mut max_ed = 0u32;
    let mut red_sum = 0.0f64;
    let mut nonzero = 0u32;
    for a in 0..=127u8 {
        for b in 0..=127u8 {
            let exact = a as u32 * b as u32;
            let approx = multiply_mag(a, b, cfg) as u32;
            let ed = exact.abs_diff(approx);
            if ed > 0 {
                error_count += 1;
            }
            total_ed += ed as u64;
            max_ed = max_ed.max(ed);
            if exact != 0 {
                red_sum += ed as f64 / exact as f64;
                nonzero += 1;
            }
        }
    }
    let pairs = OPERAND_PAIRS as f64;
    ErrorReport {
        config: cfg,
        er: error_count as f64 / pairs,
        mred: red_sum / nonzero as f64,
        nmed: total_ed as f64 / pairs / PRODUCT_MAG_MAX as f64,
        max_ed,
        total_ed,
        error_count,
    }
}

pub fn summarize(reports: &[ErrorReport]) -> MetricsSummary {
    let approx = || reports.iter().filter(|r| !r.config.is_exact());
    MetricsSummary {
        er: MetricRange::over(approx().map(|r| r.er)),
        mred: MetricRange::over(approx().map(|r| r.mred)),
        nmed: MetricRange::over(approx().map(|r| r.nmed)),
        configs_counted: approx().count(),
    }
}

/// Evaluates all 32 configurations; reports come back in mask order.
pub fn summarize_all(exec: Execution) -> (MetricsSummary, Vec<ErrorReport>) {
    let configs: Vec<MultConfig> = MultConfig::all().collect();
    let reports = exec.map(&configs, |&c| evaluate_config(c));
    (summarize(&reports), reports)
}
