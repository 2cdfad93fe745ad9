//! Plot data for the noise-versus-rate comparison of memories.

use std::fmt::Write as _;

use memsync_core::bench::{DerivedMetrics, MemoryRecord};
use serde::{Deserialize, Serialize};

/// Emission probability per source; memories with lower `μ1` add less noise
/// than the sources produce photons.
pub const REFERENCE_MU1: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub quantity: String,
    pub label: String,
    pub unit: String,
    pub scale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceLine {
    pub axis: String,
    pub value: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub label: String,
    pub mu1: f64,
    pub r6_per_min: f64,
    pub f_prime_e: f64,
    pub transmission_upper_limit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub x_axis: Axis,
    pub y_axis: Axis,
    pub reference_lines: Vec<ReferenceLine>,
    pub points: Vec<PlotPoint>,
}

/// Points in the order of `order` (indices into `records`/`derived`).
pub fn plot_data(records: &[MemoryRecord], derived: &[DerivedMetrics], order: &[usize]) -> PlotData {
    PlotData {
        x_axis: Axis {
            quantity: "mu1".into(),
            label: "noise photons per retrieval divided by efficiency".into(),
            unit: "".into(),
            scale: "log".into(),
        },
        y_axis: Axis {
            quantity: "r6_per_min".into(),
            label: "six-photon rate".into(),
            unit: "min^-1".into(),
            scale: "log".into(),
        },
        reference_lines: vec![ReferenceLine {
            axis: "x".into(),
            value: REFERENCE_MU1,
            label: "q = 1e-3".into(),
        }],
        points: order
            .iter()
            .map(|&i| PlotPoint {
                label: records[i].label.clone(),
                mu1: derived[i].mu1,
                r6_per_min: derived[i].r6_per_min,
                f_prime_e: derived[i].f_prime_e,
                transmission_upper_limit: derived[i].transmission_upper_limit,
            })
            .collect(),
    }
}

/// Whitespace-aligned table with a header line; NG rows are starred.
pub fn plot_table(data: &PlotData) -> String {
    let width = data.points.iter().map(|p| p.label.len() + 1).max().unwrap_or(5).max(5);
    let mut s = format!("{:<width$}  {:>10}  {:>10}  {:>10}\n", "label", "mu1", "r6/min", "f'_e");
    for p in &data.points {
        let label = if p.transmission_upper_limit {
            format!("{}*", p.label)
        } else {
            p.label.clone()
        };
        let _ = writeln!(
            s,
            "{label:<width$}  {:>10.3e}  {:>10.3e}  {:>10.4}",
            p.mu1, p.r6_per_min, p.f_prime_e
        );
    }
    s
}
