use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::data::Question;
use crate::scalar::mean_std;

/// Mean and spread of one metric over repeated runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
}

impl RunSummary {
    pub fn from_runs(values: &[f64]) -> Option<Self> {
        let (mean, std) = mean_std(values)?;
        Some(Self { mean, std, runs: values.len() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    pub model: String,
    pub cells: BTreeMap<Question, RunSummary>,
}

/// Metric x model rows against question columns.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QuestionTable {
    pub rows: Vec<MetricRow>,
}

/// A reference cell the achieved value drifted away from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub metric: String,
    pub model: String,
    pub question: Question,
    pub achieved: f64,
    pub reference: RunSummary,
}

impl QuestionTable {
    pub fn set(&mut self, metric: &str, model: &str, question: Question, summary: RunSummary) {
        let idx = match self.rows.iter().position(|r| r.metric == metric && r.model == model) {
            Some(i) => i,
            None => {
                self.rows.push(MetricRow { metric: metric.into(), model: model.into(), cells: BTreeMap::new() });
                self.rows.len() - 1
            }
        };
        self.rows[idx].cells.insert(question, summary);
    }

    pub fn get(&self, metric: &str, model: &str, question: Question) -> Option<RunSummary> {
        self.rows
            .iter()
            .find(|r| r.metric == metric && r.model == model)
            .and_then(|r| r.cells.get(&question).copied())
    }

    /// Plain-text table with `mean ± std` cells, one column per question.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<8} {:<20}", "Metric", "Model");
        for q in Question::ALL {
            let _ = write!(out, " {:>17}", q.to_string());
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{:<8} {:<20}", row.metric, row.model);
            for q in Question::ALL {
                let cell = match row.cells.get(&q) {
                    Some(s) => format!("{:.3} ± {:.3}", s.mean, s.std),
                    None => "-".to_string(),
                };
                let _ = write!(out, " {cell:>17}");
            }
            out.push('\n');
        }
        out
    }

    /// Cells whose achieved mean lies more than two reference deviations away.
    pub fn divergences(&self, reference: &QuestionTable) -> Vec<Divergence> {
        let mut found = Vec::new();
        for row in &reference.rows {
            for (&q, r) in &row.cells {
                if let Some(a) = self.get(&row.metric, &row.model, q) {
                    if (a.mean - r.mean).abs() > 2.0 * r.std {
                        found.push(Divergence {
                            metric: row.metric.clone(),
                            model: row.model.clone(),
                            question: q,
                            achieved: a.mean,
                            reference: *r,
                        });
                    }
                }
            }
        }
        found
    }
}
