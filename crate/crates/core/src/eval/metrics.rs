use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Rows are true classes, columns predictions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn from_predictions(truth: &[usize], pred: &[usize], n_classes: usize) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(invalid("truth and prediction counts differ"));
        }
        let mut m = Self::new(n_classes);
        for (t, p) in truth.iter().zip(pred) {
            if *t >= n_classes || *p >= n_classes {
                return Err(invalid(format!("class index out of range for {n_classes} classes")));
            }
            m.counts[*t][*p] += 1;
        }
        Ok(m)
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn accuracy(&self) -> f64 {
        let correct: usize = (0..self.n_classes()).map(|c| self.counts[c][c]).sum();
        correct as f64 / self.total().max(1) as f64
    }

    /// Per-class precision; a class never predicted scores 0.
    pub fn precision(&self, c: usize) -> f64 {
        let predicted: usize = self.counts.iter().map(|row| row[c]).sum();
        if predicted == 0 {
            0.0
        } else {
            self.counts[c][c] as f64 / predicted as f64
        }
    }

    /// Per-class recall; a class with no examples scores 0.
    pub fn recall(&self, c: usize) -> f64 {
        let actual: usize = self.counts[c].iter().sum();
        if actual == 0 {
            0.0
        } else {
            self.counts[c][c] as f64 / actual as f64
        }
    }

    pub fn macro_precision(&self) -> f64 {
        (0..self.n_classes()).map(|c| self.precision(c)).sum::<f64>() / self.n_classes() as f64
    }

    pub fn macro_recall(&self) -> f64 {
        (0..self.n_classes()).map(|c| self.recall(c)).sum::<f64>() / self.n_classes() as f64
    }
}
