use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::env::WeightVector;

/// One backtest step: the decision taken at `step` and the drifted value it
/// produced at `date` (the next bar).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub date: NaiveDate,
    pub value: f64,
    pub action: WeightVector,
    pub reward: f64,
}

/// Portfolio values over an episode, starting from `initial_value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial_value: f64,
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn new(initial_value: f64) -> Self {
        Trajectory { initial_value, points: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `[V_0, V_1^f, ..., V_T^f]`.
    pub fn values(&self) -> Vec<f64> {
        std::iter::once(self.initial_value).chain(self.points.iter().map(|p| p.value)).collect()
    }

    pub fn final_value(&self) -> f64 {
        self.points.last().map_or(self.initial_value, |p| p.value)
    }

    pub fn total_reward(&self) -> f64 {
        self.points.iter().map(|p| p.reward).sum()
    }

    /// Mean weight on component `i` over the episode.
    pub fn mean_weight(&self, i: usize) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        self.points.iter().map(|p| p.action.as_slice()[i]).sum::<f64>() / self.points.len() as f64
    }

    /// Delimited text: `step,date,value,reward,w0,...,wn`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let width = self.points.first().map_or(0, |p| p.action.len());
        let weights: Vec<String> = (0..width).map(|i| format!("w{i}")).collect();
        writeln!(out, "step,date,value,reward{}{}", if width > 0 { "," } else { "" }, weights.join(","))?;
        for p in &self.points {
            let w: Vec<String> = p.action.as_slice().iter().map(|v| v.to_string()).collect();
            writeln!(out, "{},{},{},{},{}", p.step, p.date, p.value, p.reward, w.join(","))?;
        }
        out.flush()
    }
}
