use num_complex::Complex64;
use sembed_core::Tensor;

pub fn naive_matmul(a: &Tensor, b: &Tensor) -> Vec<f64> {
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            out[i * n + j] = (0..k).map(|p| a.at(i, p) * b.at(p, j)).sum();
        }
    }
    out
}

/// Explicit zero-padded sum `y[o,t] = Σ_i Σ_j w[o,i,j] · x[i, t − d·(k−1−j)]`.
pub fn naive_conv(x: &Tensor, w: &Tensor, d: usize) -> Vec<f64> {
    let (c_in, t_len) = (x.rows(), x.cols());
    let (c_out, k) = (w.shape()[0], w.shape()[2]);
    let mut padded = vec![vec![0.0; d * (k - 1) + t_len]; c_in];
    for (i, row) in padded.iter_mut().enumerate() {
        for t in 0..t_len {
            row[d * (k - 1) + t] = x.at(i, t);
        }
    }
    let mut y = vec![0.0; c_out * t_len];
    for o in 0..c_out {
        for t in 0..t_len {
            let mut s = 0.0;
            for (i, row) in padded.iter().enumerate() {
                for j in 0..k {
                    s += w.data()[(o * c_in + i) * k + j] * row[t + j * d];
                }
            }
            y[o * t_len + t] = s;
        }
    }
    y
}

pub fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

pub fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, v)| v * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64))
                .sum()
        })
        .collect()
}

/// Full-matrix Levenshtein distance, unit costs.
pub fn dp_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}
