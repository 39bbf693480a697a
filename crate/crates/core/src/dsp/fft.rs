//! In-place iterative radix-2 FFT.

use num_complex::Complex64;

use crate::error::{invalid, Result};

pub fn fft(buf: &mut [Complex64]) -> Result<()> {
    let n = buf.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(invalid(format!("FFT length {n} is not a power of two")));
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = if bits == 0 {
            0
        } else {
            i.reverse_bits() >> (usize::BITS - bits)
        };
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * std::f64::consts::PI / len as f64;
        let half = len / 2;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                // Twiddles computed directly rather than by recurrence.
                let w = Complex64::from_polar(1.0, ang * k as f64);
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
    Ok(())
}

/// `|X[k]|²` for `k = 0..=n/2` of a real frame zero-padded to `n`.
pub fn power_spectrum(frame: &[f64], n: usize) -> Result<Vec<f64>> {
    if frame.len() > n {
        return Err(invalid(format!(
            "frame of {} samples exceeds FFT size {n}",
            frame.len()
        )));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (b, s) in buf.iter_mut().zip(frame) {
        b.re = *s;
    }
    fft(&mut buf)?;
    Ok(buf[..=n / 2].iter().map(|c| c.norm_sqr()).collect())
}
