//! The 32-configuration accuracy / error / cost sweep and its CSV output.

use std::io::Write;

use crate::approx_mult::MultConfig;
use crate::datapath::{run_dataset, NetworkModel};
use crate::dataset::Example;
use crate::error::{Error, Result};
use crate::error_metrics::{evaluate_config, ErrorReport, MetricsSummary};
use crate::exec::Execution;
use crate::power_model::{cost_report, CostReport};

pub const SWEEP_HEADER: &str =
    "config,mask,accuracy,er_pct,mred_pct,nmed_pct,mult_cost,mac_cost,network_cost,network_saving_pct";
pub const METRICS_HEADER: &str = "config,er,mred,nmed,max_ed,mean_ed";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub config: MultConfig,
    pub accuracy: f64,
    pub errors: ErrorReport,
    pub costs: CostReport,
    pub total_cycles: u64,
}

impl SweepRow {
    pub fn network_saving(&self) -> f64 {
        self.costs.saving_vs_exact.network
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSummary {
    pub exact_accuracy: f64,
    pub min_accuracy: f64,
    pub max_accuracy: f64,
    pub avg_accuracy: f64,
    pub worst_config: MultConfig,
    pub max_network_saving: f64,
    /// Average network saving over the 31 approximate configurations.
    pub avg_network_saving: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

/// Runs the test set through every configuration. Configurations are
/// evaluated one after another with the per-image work spread by `exec`;
/// rows come back in mask order.
pub fn run_sweep(model: &NetworkModel, testset: &[Example], exec: Execution) -> Result<SweepReport> {
    let mut rows = Vec::with_capacity(32);
    for cfg in MultConfig::all() {
        let run = run_dataset(model, testset, cfg, exec)?;
        if run.total_cycles != run.predictions.iter().map(|p| p.cycles).sum::<u64>() {
            return Err(Error::contract("cycle counter is not additive"));
        }
        rows.push(SweepRow {
            config: cfg,
            accuracy: run.accuracy,
            errors: evaluate_config(cfg),
            costs: cost_report(cfg),
            total_cycles: run.total_cycles,
        });
    }
    check_rows(&rows)?;
    let summary = summarize(&rows);
    Ok(SweepReport { rows, summary })
}

fn check_rows(rows: &[SweepRow]) -> Result<()> {
    let exact = &rows[0];
    if exact.errors.er != 0.0 || exact.network_saving() != 0.0 {
        return Err(Error::contract("exact configuration reports error or saving"));
    }
    if let Some(r) = rows[1..].iter().find(|r| r.network_saving() <= 0.0) {
        return Err(Error::contract(format!(
            "configuration {} reports no network saving",
            r.config
        )));
    }
    Ok(())
}

pub fn summarize(rows: &[SweepRow]) -> SweepSummary {
    let worst = rows
        .iter()
        .min_by(|a, b| a.accuracy.total_cmp(&b.accuracy))
        .expect("non-empty sweep");
    let approx: Vec<&SweepRow> = rows.iter().filter(|r| !r.config.is_exact()).collect();
    SweepSummary {
        exact_accuracy: rows[0].accuracy,
        min_accuracy: worst.accuracy,
        max_accuracy: rows.iter().map(|r| r.accuracy).fold(f64::MIN, f64::max),
        avg_accuracy: rows.iter().map(|r| r.accuracy).sum::<f64>() / rows.len() as f64,
        worst_config: worst.config,
        max_network_saving: rows.iter().map(|r| r.network_saving()).fold(0.0, f64::max),
        avg_network_saving: approx.iter().map(|r| r.network_saving()).sum::<f64>() / approx.len() as f64,
    }
}

fn pct(v: f64) -> String {
    format!("{:.4}", v * 100.0)
}

/// Writes the sweep CSV. `timestamp` adds a leading comment line; omit it
/// for byte-reproducible output.
pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow], timestamp: Option<u64>) -> std::io::Result<()> {
    if let Some(ts) = timestamp {
        writeln!(w, "# generated at unix time {ts}")?;
    }
    writeln!(w, "# costs are a static gate-count proxy in arbitrary units; data-dependent switching is not modelled")?;
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{:05b},{},{},{},{},{},{},{},{}",
            r.config.mask(),
            r.config.mask(),
            pct(r.accuracy),
            pct(r.errors.er),
            pct(r.errors.mred),
            pct(r.errors.nmed),
            r.costs.mult_cost,
            r.costs.mac_cost,
            r.costs.network_cost_per_image,
            pct(r.network_saving()),
        )?;
    }
    Ok(())
}

/// Writes the 32-row error table followed by a commented summary block.
pub fn write_metrics_csv<W: Write>(mut w: W, reports: &[ErrorReport], summary: &MetricsSummary) -> std::io::Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{:.4}",
            r.config.mask(),
            pct(r.er),
            pct(r.mred),
            pct(r.nmed),
            r.max_ed,
            r.mean_ed()
        )?;
    }
    writeln!(
        w,
        "# summary over the {} approximate configurations (mask 0 excluded; averages divide by {})",
        summary.configs_counted, summary.configs_counted
    )?;
    writeln!(w, "# metric,min_pct,max_pct,avg_pct")?;
    for (name, m) in [("er", summary.er), ("mred", summary.mred), ("nmed", summary.nmed)] {
        writeln!(w, "# {name},{},{},{}", pct(m.min), pct(m.max), pct(m.avg))?;
    }
    Ok(())
}
