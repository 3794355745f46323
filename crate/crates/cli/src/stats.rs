//! Sample means, standard errors and goodness-of-fit statistics.

/// A Monte Carlo estimate and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, se: 0.0 }
    }

    /// Difference of two independent estimates.
    pub fn minus(self, other: Estimate) -> Estimate {
        Estimate { value: self.value - other.value, se: self.se.hypot(other.se) }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample mean with standard error `sd / sqrt(N)`.
pub fn mean_se(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    let var = if xs.len() > 1 { ss / (n - 1.0) } else { 0.0 };
    Estimate { value: m, se: (var / n).sqrt() }
}

/// `sum(num) / sum(den)` with the delta-method standard error.
pub fn ratio_se(num: &[f64], den: &[f64]) -> Estimate {
    let r = num.iter().sum::<f64>() / den.iter().sum::<f64>();
    let resid: Vec<f64> = num.iter().zip(den).map(|(a, b)| a - r * b).collect();
    Estimate { value: r, se: mean_se(&resid).se / mean(den) }
}

/// Kolmogorov distance between the sample and `Exp(rate)`.
pub fn ks_exponential(xs: &[f64], rate: f64) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = 1.0 - (-rate * x).exp();
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// Upper 1% point of the limiting law of `sqrt(N) D`.
pub const KOLMOGOROV_1PCT: f64 = 1.6276;

pub fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_error() {
        let e = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.value, 2.5);
        assert!((e.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ratio_of_proportional_samples_is_exact() {
        let den = [1.0, 2.0, 5.0];
        let num: Vec<f64> = den.iter().map(|d| 0.5 * d).collect();
        let e = ratio_se(&num, &den);
        assert!((e.value - 0.5).abs() < 1e-15);
        assert!(e.se < 1e-15);
    }

    #[test]
    fn ks_of_quantiles() {
        // Midpoint quantiles sit at distance 1/(2N).
        let n = 50;
        let xs: Vec<f64> = (0..n).map(|i| -(1.0 - (i as f64 + 0.5) / n as f64).ln()).collect();
        assert!((ks_exponential(&xs, 1.0) - 0.5 / n as f64).abs() < 1e-12);
    }
}
