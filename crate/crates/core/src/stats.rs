//! Small-sample statistics shared by the diagnostics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with denominator `n - 1`.
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return f64::NAN;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn std_error(x: &[f64]) -> f64 {
    (variance(x) / x.len() as f64).sqrt()
}

/// Sample covariance of paired observations, denominator `n - 1`.
pub fn covariance(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return f64::NAN;
    }
    let (mx, my) = (mean(x), mean(y));
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() - 1) as f64
}

/// Lag-`k` autocorrelation `sum (x_n - m)(x_{n+k} - m) / sum (x_n - m)²`.
/// Zero for a constant series.
pub fn autocorrelation(x: &[f64], k: usize) -> f64 {
    let m = mean(x);
    let denom: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    if denom == 0.0 || k >= x.len() {
        return 0.0;
    }
    let num: f64 = x.windows(k + 1).map(|w| (w[0] - m) * (w[k] - m)).sum();
    num / denom
}

/// One-sample Kolmogorov-Smirnov distance of `samples` against `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

/// KS distance against `Normal(mean, variance)`. A zero variance compares
/// against the point mass at `mean`.
pub fn ks_normal(samples: &[f64], mean: f64, variance: f64) -> f64 {
    if variance <= 0.0 {
        let n = samples.len() as f64;
        let below = samples.iter().filter(|&&x| x < mean).count() as f64;
        let above = samples.iter().filter(|&&x| x > mean).count() as f64;
        return (below / n).max(above / n);
    }
    let n = Normal::new(mean, variance.sqrt()).expect("positive variance");
    ks_distance(samples, |x| n.cdf(x))
}

/// Asymptotic one-sample KS critical value at level 5 %.
pub fn ks_threshold_95(n: usize) -> f64 {
    1.36 / (n as f64).sqrt()
}

pub fn standard_normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

/// Least-squares line with a 95 % confidence interval for the slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub slope_ci95: (f64, f64),
}

/// Ordinary least squares; `None` with fewer than two distinct abscissae.
pub fn ols(x: &[f64], y: &[f64]) -> Option<LineFit> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (slope_se, half) = if n > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        let se = (rss / (n - 2) as f64 / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, (n - 2) as f64).unwrap().inverse_cdf(0.975);
        (se, t * se)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Some(LineFit { slope, intercept, slope_se, slope_ci95: (slope - half, slope + half) })
}

/// Eigenvalues of a symmetric matrix given row-major, ascending.
pub fn symmetric_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mat = nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j]);
    let mut ev: Vec<f64> = mat.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn moments() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&x), 2.5);
        assert_abs_diff_eq!(variance(&x), 5.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(covariance(&x, &x), variance(&x), epsilon = 1e-15);
        assert_eq!(autocorrelation(&[2.0; 10], 1), 0.0);
        assert_abs_diff_eq!(autocorrelation(&[1.0, -1.0, 1.0, -1.0], 1), -0.75, epsilon = 1e-15);
    }

    #[test]
    fn ks_against_exact_uniform_grid() {
        // Midpoints of n equal cells: distance 1/(2n) from the uniform CDF.
        let n = 100;
        let s: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        assert_abs_diff_eq!(ks_distance(&s, |x| x.clamp(0.0, 1.0)), 0.5 / n as f64, epsilon = 1e-12);
        assert_eq!(ks_normal(&[0.0, 0.0], 0.0, 0.0), 0.0);
        assert_abs_diff_eq!(ks_threshold_95(2000), 0.030411, epsilon = 1e-6);
    }

    #[test]
    fn line_fit() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let f = ols(&x, &[3.0, 5.0, 7.0, 9.0]).unwrap();
        assert_abs_diff_eq!(f.slope, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.slope_se, 0.0, epsilon = 1e-12);
        assert!(ols(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn eigen() {
        let ev = symmetric_eigenvalues(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert_abs_diff_eq!(ev[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(standard_normal_quantile(0.975), 1.959964, epsilon = 1e-6);
    }
}
