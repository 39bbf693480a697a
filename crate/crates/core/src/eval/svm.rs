//! One-vs-rest linear SVM trained by Pegasos-style subgradient descent on
//! the L2-regularised hinge loss.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            epochs: 60,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSvm {
    /// Per class: weights followed by the bias.
    pub weights: Vec<Vec<f64>>,
}

impl LinearSvm {
    /// `class_names` is only used for error messages.
    pub fn fit(
        x: &[Vec<f64>],
        y: &[usize],
        class_names: &[&str],
        config: &SvmConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let n_classes = class_names.len();
        if x.len() != y.len() || x.is_empty() {
            return Err(invalid("features and labels must be nonempty and equal in count"));
        }
        if n_classes < 2 {
            return Err(invalid("at least two classes are required"));
        }
        if !(config.lambda > 0.0) || config.epochs == 0 {
            return Err(invalid("svm needs lambda > 0 and epochs >= 1"));
        }
        let d = x[0].len();
        if x.iter().any(|r| r.len() != d) {
            return Err(invalid("feature rows differ in length"));
        }
        for (c, name) in class_names.iter().enumerate() {
            if !y.contains(&c) {
                return Err(invalid(format!("class {name} is absent from the training data")));
            }
        }
        if let Some(bad) = y.iter().find(|c| **c >= n_classes) {
            return Err(invalid(format!("label {bad} out of range")));
        }
        let mut order: Vec<usize> = (0..x.len()).collect();
        let weights = (0..n_classes)
            .map(|c| {
                let mut w = vec![0.0; d + 1];
                let mut t = 0usize;
                for _ in 0..config.epochs {
                    order.shuffle(rng);
                    for &i in &order {
                        t += 1;
                        let eta = 1.0 / (config.lambda * (t as f64 + 10.0));
                        let target = if y[i] == c { 1.0 } else { -1.0 };
                        let margin = target * score(&w, &x[i]);
                        for wj in w[..d].iter_mut() {
                            *wj *= 1.0 - eta * config.lambda;
                        }
                        if margin < 1.0 {
                            for (wj, xj) in w[..d].iter_mut().zip(&x[i]) {
                                *wj += eta * target * xj;
                            }
                            w[d] += eta * target;
                        }
                    }
                }
                w
            })
            .collect();
        Ok(Self { weights })
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.weights.iter().map(|w| score(w, x)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let s = self.scores(x);
        let mut best = 0;
        for (c, v) in s.iter().enumerate() {
            if *v > s[best] {
                best = c;
            }
        }
        best
    }
}

fn score(w: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    w[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[d]
}
