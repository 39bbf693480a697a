//! Numeric kernels shared by forward and backward passes.

/// Compiles a kernel body once per instruction set and picks the widest
/// one the CPU supports at run time. No fused multiply-add is enabled, so
/// every variant rounds identically.
macro_rules! dispatch {
    ($vis:vis fn $name:ident => $generic:ident ($($arg:ident : $ty:ty),* $(,)?) $(-> $ret:ty)?) => {
        $vis fn $name($($arg: $ty),*) $(-> $ret)? {
            #[cfg(target_arch = "x86_64")]
            {
                #[target_feature(enable = "avx512f")]
                unsafe fn wide($($arg: $ty),*) $(-> $ret)? {
                    $generic($($arg),*)
                }
                #[target_feature(enable = "avx2")]
                unsafe fn mid($($arg: $ty),*) $(-> $ret)? {
                    $generic($($arg),*)
                }
                if std::is_x86_feature_detected!("avx512f") {
                    // SAFETY: the feature was detected on this CPU.
                    return unsafe { wide($($arg),*) };
                }
                if std::is_x86_feature_detected!("avx2") {
                    // SAFETY: as above.
                    return unsafe { mid($($arg),*) };
                }
            }
            $generic($($arg),*)
        }
    };
}

dispatch!(pub(crate) fn matmul_acc => matmul_acc_generic(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize));
dispatch!(pub(crate) fn conv1d_causal_forward => conv1d_causal_forward_generic(
    x: &[f64], w: &[f64], c_in: usize, c_out: usize, k: usize, t: usize, dilation: usize,
) -> Vec<f64>);
dispatch!(pub(crate) fn conv1d_causal_backward => conv1d_causal_backward_generic(
    g: &[f64], x: &[f64], w: &[f64], c_in: usize, c_out: usize, k: usize, t: usize, dilation: usize,
    dx: Option<&mut [f64]>, dw: Option<&mut [f64]>,
));

const MR: usize = 4;
const NR: usize = 8;

/// `out[m×n] += a[m×k] · b[k×n]`
///
/// Blocks of `MR×NR` outputs are accumulated in registers across the whole
/// `k` loop; leftover rows and columns take the plain row-axpy path.
#[inline(always)]
fn matmul_acc_generic(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    let full_rows = m - m % MR;
    let full_cols = n - n % NR;
    for i in (0..full_rows).step_by(MR) {
        for j in (0..full_cols).step_by(NR) {
            let mut acc = [[0.0f64; NR]; MR];
            let rows: [&[f64]; MR] = std::array::from_fn(|r| &a[(i + r) * k..(i + r + 1) * k]);
            for p in 0..k {
                let b_blk: &[f64; NR] = b[p * n + j..p * n + j + NR].try_into().expect("NR wide");
                let av: [f64; MR] = std::array::from_fn(|r| rows[r][p]);
                for r in 0..MR {
                    for c in 0..NR {
                        acc[r][c] += av[r] * b_blk[c];
                    }
                }
            }
            for (r, acc_row) in acc.iter().enumerate() {
                let o = &mut out[(i + r) * n + j..(i + r) * n + j + NR];
                for (ov, v) in o.iter_mut().zip(acc_row) {
                    *ov += v;
                }
            }
        }
        if full_cols < n {
            for r in i..i + MR {
                axpy_row(a, b, out, r, k, n, full_cols);
            }
        }
    }
    for r in full_rows..m {
        axpy_row(a, b, out, r, k, n, 0);
    }
}

/// Row `r` of the product, columns `from..n`.
#[inline(always)]
fn axpy_row(a: &[f64], b: &[f64], out: &mut [f64], r: usize, k: usize, n: usize, from: usize) {
    let o_row = &mut out[r * n + from..(r + 1) * n];
    for (p, &av) in a[r * k..(r + 1) * k].iter().enumerate() {
        if av == 0.0 {
            continue;
        }
        for (o, &bv) in o_row.iter_mut().zip(&b[p * n + from..(p + 1) * n]) {
            *o += av * bv;
        }
    }
}

fn transpose(x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut t = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            t[j * rows + i] = x[i * cols + j];
        }
    }
    t
}

/// `out[m×k] += g[m×n] · b[k×n]ᵀ`
pub(crate) fn matmul_bt_acc(g: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    if m >= MR {
        matmul_acc(g, &transpose(b, k, n), out, m, n, k);
        return;
    }
    for i in 0..m {
        let g_row = &g[i * n..(i + 1) * n];
        for p in 0..k {
            out[i * k + p] += dot(g_row, &b[p * n..(p + 1) * n]);
        }
    }
}

/// Four independent partial sums so the loop vectorises.
fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (xc, yc) = (x.chunks_exact(4), y.chunks_exact(4));
    let tail: f64 = xc.remainder().iter().zip(yc.remainder()).map(|(a, b)| a * b).sum();
    for (a, b) in xc.zip(yc) {
        for l in 0..4 {
            acc[l] += a[l] * b[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `out[k×n] += a[m×k]ᵀ · g[m×n]`
pub(crate) fn matmul_at_acc(a: &[f64], g: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    if k >= MR && m > 1 {
        matmul_acc(&transpose(a, m, k), g, out, k, m, n);
        return;
    }
    for i in 0..m {
        let g_row = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let o_row = &mut out[p * n..(p + 1) * n];
            for (o, &gv) in o_row.iter_mut().zip(g_row) {
                *o += av * gv;
            }
        }
    }
}

/// Causal dilated convolution over `x[c_in×t]` with `w[c_out×c_in×k]`.
///
/// Tap `i` reads `x[t − dilation·(k−1−i)]`, so the last tap sits on the
/// current frame and the sequence is implicitly left-padded with
/// `dilation·(k−1)` zeros.
#[inline(always)]
fn conv1d_causal_forward_generic(
    x: &[f64],
    w: &[f64],
    c_in: usize,
    c_out: usize,
    k: usize,
    t: usize,
    dilation: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; c_out * t];
    for co in 0..c_out {
        let o_row = &mut out[co * t..(co + 1) * t];
        for ci in 0..c_in {
            let x_row = &x[ci * t..(ci + 1) * t];
            for i in 0..k {
                let wv = w[(co * c_in + ci) * k + i];
                if wv == 0.0 {
                    continue;
                }
                let shift = dilation * (k - 1 - i);
                if shift >= t {
                    continue;
                }
                for (o, &xv) in o_row[shift..].iter_mut().zip(&x_row[..t - shift]) {
                    *o += wv * xv;
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn conv1d_causal_backward_generic(
    g: &[f64],
    x: &[f64],
    w: &[f64],
    c_in: usize,
    c_out: usize,
    k: usize,
    t: usize,
    dilation: usize,
    dx: Option<&mut [f64]>,
    dw: Option<&mut [f64]>,
) {
    if let Some(dx) = dx {
        for co in 0..c_out {
            let g_row = &g[co * t..(co + 1) * t];
            for ci in 0..c_in {
                let dx_row = &mut dx[ci * t..(ci + 1) * t];
                for i in 0..k {
                    let wv = w[(co * c_in + ci) * k + i];
                    let shift = dilation * (k - 1 - i);
                    if shift >= t || wv == 0.0 {
                        continue;
                    }
                    for (d, &gv) in dx_row[..t - shift].iter_mut().zip(&g_row[shift..]) {
                        *d += wv * gv;
                    }
                }
            }
        }
    }
    if let Some(dw) = dw {
        for co in 0..c_out {
            let g_row = &g[co * t..(co + 1) * t];
            for ci in 0..c_in {
                let x_row = &x[ci * t..(ci + 1) * t];
                for i in 0..k {
                    let shift = dilation * (k - 1 - i);
                    if shift >= t {
                        continue;
                    }
                    let s: f64 = g_row[shift..]
                        .iter()
                        .zip(&x_row[..t - shift])
                        .map(|(a, b)| a * b)
                        .sum();
                    dw[(co * c_in + ci) * k + i] += s;
                }
            }
        }
    }
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}
