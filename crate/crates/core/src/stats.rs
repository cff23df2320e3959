//! Sample summaries with jackknife errors, the Gamma(3/2, 1) distribution
//! function and the Kolmogorov-Smirnov distance.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("no samples")]
    Empty,
    #[error("samples are not sorted at index {0}")]
    Unsorted(usize),
    #[error("the distribution function is defined for x >= 0, got {0}")]
    Negative(f64),
    #[error("sample {0} is not finite")]
    NotFinite(usize),
}

const SWITCH: f64 = 2.5;
const MAX_ITER: usize = 500;

/// P(3/2, x) = (2/√π)∫₀ˣ e^{−t}√t dt.
pub fn gamma32_cdf(x: f64) -> Result<f64, StatsError> {
    if x.is_nan() || x < 0.0 {
        return Err(StatsError::Negative(x));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let v = if x < SWITCH {
        lower_series(x)
    } else {
        1.0 - upper_fraction(x)
    };
    Ok(v.clamp(0.0, 1.0))
}

/// Series x^a e^{−x} Σ xⁿ/Γ(a+n+1), a = 3/2.
fn lower_series(x: f64) -> f64 {
    let a = 1.5;
    let mut term = 1.0 / a;
    let mut sum = term;
    for n in 1..MAX_ITER {
        term *= x / (a + n as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    // Γ(3/2) = √π/2
    sum * (a * x.ln() - x).exp() / (PI.sqrt() / 2.0)
}

/// Q(3/2, x) by Lentz's continued fraction.
fn upper_fraction(x: f64) -> f64 {
    let a = 1.5;
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (a * x.ln() - x).exp() * h / (PI.sqrt() / 2.0)
}

/// (2/√π)e^{−x}√x.
pub fn gamma32_density(x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        2.0 / PI.sqrt() * (-x).exp() * x.sqrt()
    }
}

/// sup |F_n − F| over sorted samples.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN counts as unsorted
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    if let Some(i) = samples.windows(2).position(|w| !(w[0] <= w[1])) {
        return Err(StatsError::Unsorted(i + 1));
    }
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < samples.len() {
        // ties jump together
        let mut j = i;
        while j + 1 < samples.len() && samples[j + 1] == samples[i] {
            j += 1;
        }
        let f = cdf(samples[i]);
        d = d.max(f - i as f64 / n).max((j + 1) as f64 / n - f);
        i = j + 1;
    }
    Ok(d)
}

/// Sorts a copy and measures its distance to Gamma(3/2, 1).
pub fn ks_gamma32(samples: &[f64]) -> Result<f64, StatsError> {
    let mut s = samples.to_vec();
    if let Some(i) = s.iter().position(|v| !v.is_finite()) {
        return Err(StatsError::NotFinite(i));
    }
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if let Some(&v) = s.first().filter(|v| **v < 0.0) {
        return Err(StatsError::Negative(v));
    }
    ks_statistic(&s, |x| gamma32_cdf(x).unwrap_or(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSummary {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    /// E[y²] of the scaled samples.
    pub m2: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub se_mean: f64,
    pub se_m2: f64,
    pub se_variance: f64,
}

#[derive(Clone, Copy, Default)]
struct PowerSums {
    n: f64,
    s: [f64; 4],
}

impl PowerSums {
    fn without(&self, y: f64) -> PowerSums {
        let mut out = *self;
        out.n -= 1.0;
        let mut p = 1.0;
        for k in 0..4 {
            p *= y;
            out.s[k] -= p;
        }
        out
    }

    fn raw(&self, k: usize) -> f64 {
        self.s[k - 1] / self.n
    }

    fn mean(&self) -> f64 {
        self.raw(1)
    }

    fn central2(&self) -> f64 {
        (self.raw(2) - self.mean().powi(2)).max(0.0)
    }

    fn central3(&self) -> f64 {
        let m = self.mean();
        self.raw(3) - 3.0 * m * self.raw(2) + 2.0 * m.powi(3)
    }

    fn central4(&self) -> f64 {
        let m = self.mean();
        self.raw(4) - 4.0 * m * self.raw(3) + 6.0 * m * m * self.raw(2) - 3.0 * m.powi(4)
    }
}

/// Jackknife standard error of a statistic of the power sums.
fn jackknife(ys: &[f64], full: &PowerSums, stat: impl Fn(&PowerSums) -> f64) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
    let loo: Vec<f64> = ys.iter().map(|&y| stat(&full.without(y))).collect();
    let bar = loo.iter().sum::<f64>() / n;
    let ss: f64 = loo.iter().map(|v| (v - bar).powi(2)).sum();
    ((n - 1.0) / n * ss).sqrt()
}

/// Moments of samples/scale with jackknife errors.
pub fn moment_summary(samples: &[f64], scale: f64) -> Result<SampleSummary, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(StatsError::NotFinite(i));
    }
    // center before powering to keep the sums well conditioned
    let raw: Vec<f64> = samples.iter().map(|v| v / scale).collect();
    let shift = raw.iter().sum::<f64>() / raw.len() as f64;
    let ys: Vec<f64> = raw.iter().map(|y| y - shift).collect();
    let mut sums = PowerSums {
        n: ys.len() as f64,
        ..Default::default()
    };
    for &y in &ys {
        let mut p = 1.0;
        for k in 0..4 {
            p *= y;
            sums.s[k] += p;
        }
    }
    let mean = |s: &PowerSums| s.mean() + shift;
    let m2 = |s: &PowerSums| s.raw(2) + 2.0 * shift * s.mean() + shift * shift;
    let var = |s: &PowerSums| s.central2();
    let c2 = sums.central2();
    let (skewness, kurtosis) = if c2 > 0.0 {
        (sums.central3() / c2.powf(1.5), sums.central4() / (c2 * c2))
    } else {
        (0.0, 0.0)
    };
    Ok(SampleSummary {
        count: ys.len(),
        mean: mean(&sums),
        variance: c2,
        m2: m2(&sums),
        skewness,
        kurtosis,
        se_mean: jackknife(&ys, &sums, mean),
        se_m2: jackknife(&ys, &sums, m2),
        se_variance: jackknife(&ys, &sums, var),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_endpoints() {
        assert_eq!(gamma32_cdf(0.0).unwrap(), 0.0);
        assert!(gamma32_cdf(60.0).unwrap() >= 1.0 - 1e-12);
        assert!(gamma32_cdf(-1.0).is_err());
    }

    #[test]
    fn both_branches_agree_at_switch() {
        for x in [1.5, 2.0, 2.5, 3.0, 4.0] {
            let a = lower_series(x);
            let b = 1.0 - upper_fraction(x);
            assert!((a - b).abs() < 1e-14, "{x}: {a} {b}");
        }
    }

    #[test]
    fn ks_edge_cases() {
        let d = ks_statistic(&[0.5], |x| x).unwrap();
        assert_eq!(d, 0.5);
        assert!(ks_statistic(&[0.3; 10], |x| x).unwrap() >= 0.5);
        assert_eq!(
            ks_statistic(&[2.0, 1.0], |x| x),
            Err(StatsError::Unsorted(1))
        );
    }

    #[test]
    fn constant_samples() {
        let s = moment_summary(&[4.0; 7], 2.0).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.se_mean, 0.0);
    }

    #[test]
    fn jackknife_of_mean_is_classical() {
        let xs: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64).collect();
        let s = moment_summary(&xs, 1.0).unwrap();
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((s.se_mean - sd / n.sqrt()).abs() < 1e-12);
    }
}
