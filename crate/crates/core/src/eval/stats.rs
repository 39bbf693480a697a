use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than 2 values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Half-width of the two-sided 95% Student-t interval for the mean.
pub fn t_ci95_halfwidth(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(invalid("a t interval needs at least two values"));
    }
    let df = (xs.len() - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| invalid(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(t * sample_std(xs) / (xs.len() as f64).sqrt())
}

/// Percentile bootstrap: half the width of the central 95% of `statistic`
/// over `resamples` resamples (with replacement) of `0..n`.
pub fn bootstrap_ci95_halfwidth<F>(n: usize, resamples: usize, rng: &mut ChaCha8Rng, mut statistic: F) -> Result<f64>
where
    F: FnMut(&[usize]) -> f64,
{
    if n == 0 || resamples < 2 {
        return Err(invalid("bootstrap needs data and at least two resamples"));
    }
    let mut idx = vec![0usize; n];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for v in idx.iter_mut() {
                *v = rng.gen_range(0..n);
            }
            statistic(&idx)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let lo = quantile_sorted(&stats, 0.025);
    let hi = quantile_sorted(&stats, 0.975);
    Ok((hi - lo) / 2.0)
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Average ranks, 1-based, ties sharing their mean rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|a, b| xs[*a].total_cmp(&xs[*b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[order[k]] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("correlation needs two equal-length series of >= 2 values"));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation; 0 when either series is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson(&ranks(x), &ranks(y))
}

/// Least-squares slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("slope needs two equal-length series of >= 2 values"));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("slope of a constant regressor"));
    }
    Ok(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / sxx)
}

/// Per-dimension `(mean, std)` of row vectors; std is floored at 1e-8.
pub fn column_moments(rows: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = rows.first().ok_or_else(|| invalid("no rows"))?;
    let d = first.len();
    let n = rows.len() as f64;
    let mut m = vec![0.0; d];
    for r in rows {
        if r.len() != d {
            return Err(invalid("rows differ in length"));
        }
        for (a, v) in m.iter_mut().zip(r) {
            *a += v / n;
        }
    }
    let mut s = vec![0.0; d];
    for r in rows {
        for ((a, v), mu) in s.iter_mut().zip(r).zip(&m) {
            *a += (v - mu).powi(2) / n;
        }
    }
    Ok((m, s.into_iter().map(|v| v.sqrt().max(1e-8)).collect()))
}

pub fn standardize(rows: &[Vec<f64>], mean: &[f64], std: &[f64]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| r.iter().zip(mean).zip(std).map(|((v, m), s)| (v - m) / s).collect())
        .collect()
}
