use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

pub trait Optimizer {
    /// Applies one update from the populated grads, then zeroes them.
    fn step(&mut self, params: &mut [Tensor]) -> Result<()>;
}

fn check_grads(params: &[Tensor]) -> Result<()> {
    for (i, p) in params.iter().enumerate() {
        match &p.grad {
            None => return Err(Error::MissingGradient(format!("#{i}"))),
            Some(g) if g.len() != p.len() => {
                return Err(invalid(format!(
                    "gradient length {} for tensor of {}",
                    g.len(),
                    p.len()
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Global L2 norm over every populated gradient.
pub fn grad_norm(params: &[Tensor]) -> f64 {
    params
        .iter()
        .filter_map(|p| p.grad.as_ref())
        .flat_map(|g| g.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

fn clip_factor(params: &[Tensor], clip_norm: Option<f64>) -> f64 {
    match clip_norm {
        Some(max) => {
            let norm = grad_norm(params);
            if norm > max {
                max / norm
            } else {
                1.0
            }
        }
        None => 1.0,
    }
}

/// `p ← p − lr·g`, after optional global-norm clipping. Grads are zeroed.
pub fn sgd_step(params: &mut [Tensor], lr: f64, clip_norm: Option<f64>) -> Result<()> {
    if !(lr > 0.0) {
        return Err(invalid(format!("learning rate must be positive, got {lr}")));
    }
    if let Some(c) = clip_norm {
        if !(c > 0.0) {
            return Err(invalid(format!("clip norm must be positive, got {c}")));
        }
    }
    check_grads(params)?;
    let factor = clip_factor(params, clip_norm);
    for p in params.iter_mut() {
        let g = p.grad.take().expect("checked");
        for (v, gv) in p.data_mut().iter_mut().zip(&g) {
            *v -= lr * factor * gv;
        }
        let mut g = g;
        g.fill(0.0);
        p.grad = Some(g);
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Sgd {
    pub lr: f64,
    pub clip_norm: Option<f64>,
}

impl Optimizer for Sgd {
    fn step(&mut self, params: &mut [Tensor]) -> Result<()> {
        sgd_step(params, self.lr, self.clip_norm)
    }
}

#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub clip_norm: Option<f64>,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64, clip_norm: Option<f64>) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }
}

impl Optimizer for Adam {
    fn step(&mut self, params: &mut [Tensor]) -> Result<()> {
        check_grads(params)?;
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() {
            return Err(invalid("parameter list changed between Adam steps"));
        }
        let factor = clip_factor(params, self.clip_norm);
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let mut g = p.grad.take().expect("checked");
            for (((x, gv), mi), vi) in p.data_mut().iter_mut().zip(&g).zip(m.iter_mut()).zip(v.iter_mut()) {
                let gv = gv * factor;
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * gv;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * gv * gv;
                *x -= self.lr * (*mi / bc1) / ((*vi / bc2).sqrt() + self.eps);
            }
            g.fill(0.0);
            p.grad = Some(g);
        }
        Ok(())
    }
}

pub fn build(kind: OptimizerKind, lr: f64, clip_norm: Option<f64>) -> Box<dyn Optimizer + Send> {
    match kind {
        OptimizerKind::Sgd => Box::new(Sgd { lr, clip_norm }),
        OptimizerKind::Adam => Box::new(Adam::new(lr, clip_norm)),
    }
}
