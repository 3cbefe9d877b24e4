//! Small statistics helpers for Monte Carlo summaries.

use rand::Rng;

use crate::rng::substream;

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn std_error(x: &[f64]) -> f64 {
    (variance(x) / x.len() as f64).sqrt()
}

pub fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(x: &[f64]) -> f64 {
    quantile(x, 0.5)
}

/// Linear-interpolated quantile of unsorted data.
pub fn quantile(x: &[f64], q: f64) -> f64 {
    quantile_sorted(&sorted(x), q)
}

pub fn quantile_sorted(s: &[f64], q: f64) -> f64 {
    if s.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    s[lo] * (1.0 - w) + s[hi] * w
}

/// Bootstrap standard error of `stat` over `resamples` resamples.
pub fn bootstrap_se<F>(x: &[f64], resamples: usize, seed: u64, stat: F) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let mut rng = substream(seed, 0xB007);
    let n = x.len();
    let mut buf = vec![0.0; n];
    let reps: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = x[rng.random_range(0..n)];
            }
            stat(&buf)
        })
        .collect();
    variance(&reps).sqrt()
}

/// Paired bootstrap of `stat(b) - stat(a)`, resampling trial indices jointly.
/// Returns `(point estimate, standard error)`.
pub fn paired_bootstrap_diff<F>(a: &[f64], b: &[f64], resamples: usize, seed: u64, stat: F) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let point = stat(b) - stat(a);
    let mut rng = substream(seed, 0xB00B);
    let n = a.len();
    let mut ra = vec![0.0; n];
    let mut rb = vec![0.0; n];
    let reps: Vec<f64> = (0..resamples)
        .map(|_| {
            for k in 0..n {
                let j = rng.random_range(0..n);
                ra[k] = a[j];
                rb[k] = b[j];
            }
            stat(&rb) - stat(&ra)
        })
        .collect();
    (point, variance(&reps).sqrt())
}

/// Ordinary least squares fit `y = slope * x + intercept`, returning `(slope, intercept, r²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}
