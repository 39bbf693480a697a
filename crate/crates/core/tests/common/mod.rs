#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sembed_core::params::{Bound, ParamStore};
use sembed_core::{Result, Tape, Tensor, Var};

pub mod oracles;

/// Lists the named check functions in `CHECKS` and, under the test harness,
/// wraps each in a `#[test]`.
#[allow(unused_macros)]
macro_rules! checks {
    ($($name:ident),* $(,)?) => {
        #[allow(dead_code)]
        pub const CHECKS: &[(&str, fn())] = &[$((stringify!($name), $name as fn())),*];

        #[cfg(test)]
        mod run {
            $(
                #[test]
                fn $name() {
                    super::$name()
                }
            )*
        }
    };
}

pub const H: f64 = 1e-5;
pub const TOL: f64 = 1e-4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// Relative error with a floor so that gradients near zero compare absolutely.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

/// Reduces any output to a scalar through fixed random weights, so every
/// output element gets a distinct upstream gradient.
pub fn weighted_sum(tape: &mut Tape, out: Var, seed: u64) -> Result<Var> {
    let shape = tape.value(out).shape().to_vec();
    let w = uniform(&mut rng(seed ^ 0x5eed), &shape);
    let w = tape.constant(w);
    let p = tape.mul(out, w)?;
    Ok(tape.sum(p))
}

/// Largest elementwise relative error between tape gradients of `f` with
/// respect to `inputs` and central differences.
pub fn leaf_gradient_error<F>(inputs: &[Tensor], f: F) -> f64
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let eval = |xs: &[Tensor]| {
        let mut tape = Tape::new();
        let vars: Vec<Var> = xs.iter().map(|x| tape.leaf(x.clone().with_grad())).collect();
        let loss = f(&mut tape, &vars).unwrap();
        (tape, vars, loss)
    };
    let (mut tape, vars, loss) = eval(inputs);
    tape.backward(loss).unwrap();
    let mut worst: f64 = 0.0;
    for (k, x) in inputs.iter().enumerate() {
        let g = tape.grad(vars[k]).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; x.len()]);
        for i in 0..x.len() {
            let mut plus = inputs.to_vec();
            plus[k].data_mut()[i] += H;
            let mut minus = inputs.to_vec();
            minus[k].data_mut()[i] -= H;
            let (tp, _, lp) = eval(&plus);
            let (tm, _, lm) = eval(&minus);
            let numeric = (tp.value(lp).item() - tm.value(lm).item()) / (2.0 * H);
            worst = worst.max(rel_err(g[i], numeric));
        }
    }
    worst
}

/// Same check over the parameters of a store, probing at most `per_tensor`
/// random coordinates of each tensor.
pub fn store_gradient_error<F>(store: &mut ParamStore, per_tensor: usize, seed: u64, f: F) -> f64
where
    F: Fn(&mut Tape, &Bound) -> Result<Var>,
{
    let loss_of = |s: &ParamStore| {
        let mut tape = Tape::new();
        let bound = s.bind_frozen(&mut tape);
        let loss = f(&mut tape, &bound).unwrap();
        tape.value(loss).item()
    };
    let mut tape = Tape::new();
    let bound = store.bind(&mut tape);
    let loss = f(&mut tape, &bound).unwrap();
    tape.backward(loss).unwrap();
    store.zero_grads();
    store.accumulate(&tape, &bound, 1.0);
    let grads: Vec<Vec<f64>> = store.tensors().iter().map(|t| t.grad.clone().unwrap()).collect();
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for (k, g) in grads.iter().enumerate() {
        for _ in 0..per_tensor.min(g.len()) {
            let i = r.gen_range(0..g.len());
            let orig = store.tensors()[k].data()[i];
            store.tensors_mut()[k].data_mut()[i] = orig + H;
            let lp = loss_of(store);
            store.tensors_mut()[k].data_mut()[i] = orig - H;
            let lm = loss_of(store);
            store.tensors_mut()[k].data_mut()[i] = orig;
            worst = worst.max(rel_err(g[i], (lp - lm) / (2.0 * H)));
        }
    }
    worst
}
