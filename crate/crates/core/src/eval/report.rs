use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classifier::MetricKind;
use crate::error::{Error, Result};

pub const REPORT_VERSION: u32 = 1;

/// Scores of one model on one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub task: String,
    pub metric: MetricKind,
    pub in_language: f64,
    pub in_language_std: f64,
    /// Present for transfer tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_std: Option<f64>,
    /// `in_language - cross`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop: Option<f64>,
}

/// Unweighted means over a row's tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub in_language: f64,
    /// Present when every task of the row is a transfer task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub dim: usize,
    pub cells: Vec<ReportCell>,
    pub sigma: Summary,
}

impl ReportRow {
    pub fn new(model: impl Into<String>, dim: usize, cells: Vec<ReportCell>) -> Self {
        let n = cells.len().max(1) as f64;
        let in_language = cells.iter().map(|c| c.in_language).sum::<f64>() / n;
        let cross = cells
            .iter()
            .map(|c| c.cross)
            .collect::<Option<Vec<f64>>>()
            .filter(|v| !v.is_empty())
            .map(|v| v.iter().sum::<f64>() / n);
        let drop = cross.map(|c| in_language - c);
        Self {
            model: model.into(),
            dim,
            cells,
            sigma: Summary {
                in_language,
                cross,
                drop,
            },
        }
    }

    /// The headline score: mean cross-language score for transfer rows,
    /// mean in-language score otherwise.
    pub fn headline(&self) -> f64 {
        self.sigma.cross.unwrap_or(self.sigma.in_language)
    }
}

/// Results of one or more models over a common list of tasks.
///
/// JSON layout (version 1):
///
/// ```text
/// { "version": 1,
///   "tasks": [task names...],
///   "rows": [ { "model", "dim",
///               "cells": [ { "task", "metric", "in_language", "in_language_std",
///                            "cross"?, "cross_std"?, "drop"? } ],
///               "sigma": { "in_language", "cross"?, "drop"? } } ] }
/// ```
///
/// Scores are fractions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: u32,
    pub tasks: Vec<String>,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
}

impl EvalReport {
    pub fn new(tasks: Vec<String>, rows: Vec<ReportRow>) -> Self {
        Self {
            version: REPORT_VERSION,
            tasks,
            rows,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text)?;
        if report.version != REPORT_VERSION {
            return Err(Error::UnsupportedVersion {
                kind: "report",
                found: report.version,
                expected: REPORT_VERSION,
            });
        }
        Ok(report)
    }

    pub fn emit(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            ReportFormat::Markdown => self.markdown(),
        }
    }

    /// One row per model, one column per task, then Σ. Scores are percentages;
    /// transfer cells show the cross-language score with the drop from the
    /// in-language score in parentheses.
    fn markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("| Model | Dim |");
        for task in &self.tasks {
            let _ = write!(out, " {task} |");
        }
        out.push_str(" Σ |\n|---|---:|");
        for _ in 0..=self.tasks.len() {
            out.push_str("---:|");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "| {} | {} |", row.model.replace('|', "\\|"), row.dim);
            for cell in &row.cells {
                let _ = write!(
                    out,
                    " {} |",
                    render_score(cell.in_language, cell.cross, cell.drop)
                );
            }
            let s = &row.sigma;
            let _ = writeln!(out, " {} |", render_score(s.in_language, s.cross, s.drop));
        }
        out
    }
}

fn render_score(in_language: f64, cross: Option<f64>, drop: Option<f64>) -> String {
    match (cross, drop) {
        (Some(c), Some(d)) => format!("{:.1} ({:.1})", 100.0 * c, 100.0 * d),
        _ => format!("{:.1}", 100.0 * in_language),
    }
}
