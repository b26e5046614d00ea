//! Small statistics toolbox: batch means, jackknife, quantiles, Wilson intervals.

use crate::{Error, Result};

/// Default number of batches used for error bars on Markov-chain time series.
pub const DEFAULT_BATCHES: usize = 16;

/// 97.5% quantile of the standard normal distribution.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Mean and standard error of a correlated series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (n - 1 denominator).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Plain standard error of the mean, assuming independent samples.
pub fn standard_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

/// Split `len` samples into `batches` contiguous, nearly equal batches and
/// return their `[start, end)` ranges. Leading samples are dropped so that all
/// batches have the same length.
fn batch_ranges(len: usize, batches: usize) -> Vec<(usize, usize)> {
    let size = len / batches;
    let skip = len - size * batches;
    (0..batches)
        .map(|b| (skip + b * size, skip + (b + 1) * size))
        .collect()
}

/// Batch-means estimate of the mean of a correlated series.
pub fn batch_means(xs: &[f64], batches: usize) -> Result<Estimate> {
    if batches < 2 {
        return Err(Error::param("batch means need at least 2 batches"));
    }
    if xs.len() < batches {
        return Err(Error::param(format!(
            "{} samples cannot fill {} batches",
            xs.len(),
            batches
        )));
    }
    let means: Vec<f64> = batch_ranges(xs.len(), batches)
        .into_iter()
        .map(|(a, b)| mean(&xs[a..b]))
        .collect();
    Ok(Estimate {
        mean: mean(&means),
        stderr: standard_error(&means),
    })
}

/// Jackknife over contiguous batches for a statistic of the whole series.
///
/// `stat` receives the series with one batch removed. The returned mean is the
/// statistic of the full series; the error is the usual jackknife error.
pub fn batch_jackknife<F>(xs: &[f64], batches: usize, stat: F) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64,
{
    if batches < 2 || xs.len() < batches {
        return Err(Error::param("jackknife needs at least 2 non-empty batches"));
    }
    let ranges = batch_ranges(xs.len(), batches);
    let start = ranges[0].0;
    let full = stat(&xs[start..]);
    let mut buf = Vec::with_capacity(xs.len());
    let leave_out: Vec<f64> = ranges
        .iter()
        .map(|&(a, b)| {
            buf.clear();
            buf.extend_from_slice(&xs[start..a]);
            buf.extend_from_slice(&xs[b..]);
            stat(&buf)
        })
        .collect();
    let k = batches as f64;
    let lm = mean(&leave_out);
    let var = leave_out.iter().map(|v| (v - lm) * (v - lm)).sum::<f64>() * (k - 1.0) / k;
    Ok(Estimate {
        mean: full,
        stderr: var.sqrt(),
    })
}

/// [`batch_jackknife`] for a statistic of two aligned series.
pub fn batch_jackknife_pair<F>(xs: &[f64], ys: &[f64], batches: usize, stat: F) -> Result<Estimate>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if batches < 2 || xs.len() < batches {
        return Err(Error::param("jackknife needs at least 2 non-empty batches"));
    }
    let ranges = batch_ranges(xs.len(), batches);
    let start = ranges[0].0;
    let full = stat(&xs[start..], &ys[start..]);
    let (mut bx, mut by) = (Vec::with_capacity(xs.len()), Vec::with_capacity(ys.len()));
    let leave_out: Vec<f64> = ranges
        .iter()
        .map(|&(a, b)| {
            bx.clear();
            by.clear();
            bx.extend_from_slice(&xs[start..a]);
            bx.extend_from_slice(&xs[b..]);
            by.extend_from_slice(&ys[start..a]);
            by.extend_from_slice(&ys[b..]);
            stat(&bx, &by)
        })
        .collect();
    let k = batches as f64;
    let lm = mean(&leave_out);
    let var = leave_out.iter().map(|v| (v - lm) * (v - lm)).sum::<f64>() * (k - 1.0) / k;
    Ok(Estimate {
        mean: full,
        stderr: var.sqrt(),
    })
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(xs), mean(ys));
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Population variance `<x^2> - <x>^2`, computed with a centred two-pass sum.
pub fn fluctuation(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Linear-interpolated quantile (type 7, as in R and numpy's default).
/// Non-finite values sort to the top.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    quantile_sorted(&v, q)
}

pub fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi || v[lo] == v[hi] {
        return v[lo];
    }
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Wilson score interval for a binomial proportion at the 95% level.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}
