//! Interval estimates and the log-linear fit used by the experiments.

use rand::Rng;

use crate::rng::stream;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes in `n` trials. `(0, 1)` when
/// `n = 0`.
pub fn wilson(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // The bounds are exact at the extremes; rounding would leave 1e-18.
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Standard error of a proportion estimate.
pub fn proportion_se(k: u64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    let p = k as f64 / n as f64;
    (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares of `y` on `x`; `None` with fewer than two
/// distinct abscissae.
pub fn ols(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some(LineFit { slope, intercept: my - slope * mx, r2 })
}

/// Walks counted in a tail histogram must reach this many before a survival
/// point enters the fit.
pub const MIN_SURVIVORS: u64 = 10;

/// Survival counts `#(T >= t)` for `t = 0, 1, ..` from `hist[t] = #(T = t)`.
pub fn survivors(hist: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64; hist.len()];
    let mut acc = 0u64;
    for t in (0..hist.len()).rev() {
        acc += hist[t];
        out[t] = acc;
    }
    out
}

/// Fit of `ln P(T >= t)` against `t` over the points with at least
/// `MIN_SURVIVORS` walks remaining.
pub fn log_survival_fit(hist: &[u64]) -> Option<LineFit> {
    let surv = survivors(hist);
    let total = *surv.first()? as f64;
    let (x, y): (Vec<f64>, Vec<f64>) = surv
        .iter()
        .enumerate()
        .take_while(|(_, &c)| c >= MIN_SURVIVORS)
        .map(|(t, &c)| (t as f64, (c as f64 / total).ln()))
        .unzip();
    ols(&x, &y)
}

/// Percentile bootstrap of the log-survival slope, resampling replicates.
/// `None` when fewer than two replicates or no resample can be fitted.
pub fn bootstrap_slope(per_replicate: &[Vec<u64>], resamples: usize, seed: u64) -> Option<(f64, f64)> {
    let m = per_replicate.len();
    if m < 2 {
        return None;
    }
    let mut rng = stream(seed, 0);
    let mut slopes = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut pooled: Vec<u64> = Vec::new();
        for _ in 0..m {
            let h = &per_replicate[rng.random_range(0..m)];
            if h.len() > pooled.len() {
                pooled.resize(h.len(), 0);
            }
            for (a, b) in pooled.iter_mut().zip(h) {
                *a += b;
            }
        }
        if let Some(f) = log_survival_fit(&pooled) {
            slopes.push(f.slope);
        }
    }
    if slopes.is_empty() {
        return None;
    }
    slopes.sort_by(f64::total_cmp);
    let q = |p: f64| slopes[((p * (slopes.len() - 1) as f64).round() as usize).min(slopes.len() - 1)];
    Some((q(0.025), q(0.975)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // Hand computation: 0 of 10 gives [0, z^2 / (n + z^2)].
        let (lo, hi) = wilson(0, 10);
        assert_eq!(lo, 0.0);
        assert!((hi - Z95 * Z95 / (10.0 + Z95 * Z95)).abs() < 1e-12);
        let (lo, hi) = wilson(50, 100);
        assert!((lo + hi - 1.0).abs() < 1e-12);
        assert!((hi - 0.596_168_47).abs() < 1e-8);
        assert_eq!(wilson(0, 0), (0.0, 1.0));
    }

    #[test]
    fn exact_line_is_recovered() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|t| 2.0 - 0.5 * t).collect();
        let f = ols(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12 && (f.intercept - 2.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!(ols(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn geometric_tail_gives_its_log_ratio() {
        // #(T >= t) = 2^(20 - t) for t <= 12.
        let mut hist: Vec<u64> = (0..12).map(|t| 1u64 << (19 - t)).collect();
        hist.push(1 << 8);
        assert_eq!(survivors(&hist)[5], 1 << 15);
        let f = log_survival_fit(&hist).unwrap();
        assert!((f.slope - 0.5f64.ln()).abs() < 1e-12, "{f:?}");
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let reps = vec![hist.clone(), hist.clone(), hist];
        let (lo, hi) = bootstrap_slope(&reps, 50, 1).unwrap();
        assert!(lo <= f.slope + 1e-12 && f.slope <= hi + 1e-12);
    }
}
