//! Small statistics toolkit: proportions, sample summaries, regression and
//! goodness-of-fit.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

/// Two-sided normal quantile for 95% coverage.
pub fn z95() -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.975)
}

/// Binomial proportion with a 95% Wilson score interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: usize,
    pub trials: usize,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Proportion {
    /// Binomial standard error at the point estimate.
    pub fn std_err(&self) -> f64 {
        (self.estimate * (1.0 - self.estimate) / self.trials as f64).sqrt()
    }
}

pub fn wilson_interval(successes: usize, trials: usize) -> Proportion {
    assert!(trials > 0 && successes <= trials);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z = z95();
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Proportion {
        successes,
        trials,
        estimate: p,
        lo: (centre - half).max(0.0),
        hi: (centre + half).min(1.0),
    }
}

/// Summary of a sample of hitting times.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub std_dev: f64,
    /// 95% Student-t interval for the mean; degenerate (`lo = hi = mean`)
    /// below two samples.
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl Summary {
    pub fn of(sample: &[f64]) -> Option<Summary> {
        if sample.is_empty() {
            return None;
        }
        let n = sample.len();
        let mean = sample.iter().sum::<f64>() / n as f64;
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        let (std_dev, half) = if n >= 2 {
            let var = sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let sd = var.sqrt();
            (sd, t_quantile(0.975, n - 1) * sd / (n as f64).sqrt())
        } else {
            (0.0, 0.0)
        };
        Some(Summary {
            count: n,
            mean,
            median,
            std_dev,
            ci_lo: mean - half,
            ci_hi: mean + half,
        })
    }

    /// One-sided upper confidence bound on the mean at level `conf`.
    pub fn upper_bound(&self, conf: f64) -> f64 {
        if self.count < 2 {
            return self.mean;
        }
        self.mean + t_quantile(conf, self.count - 1) * self.std_dev / (self.count as f64).sqrt()
    }

    pub fn degenerate(&self) -> bool {
        self.count < 2
    }
}

pub fn t_quantile(p: f64, dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(p)
}

/// Ordinary least squares fit `y = intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_err: f64,
    pub r_squared: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope_std_err = if n > 2 {
        (sse / (n - 2) as f64 / sxx).sqrt()
    } else {
        f64::NAN
    };
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Some(LinearFit {
        slope,
        intercept,
        slope_std_err,
        r_squared,
    })
}

/// Least-squares constant `c` in `y ≈ c·g` (regression through the origin).
pub fn fit_constant(g: &[f64], y: &[f64]) -> Option<f64> {
    let gg: f64 = g.iter().map(|v| v * v).sum();
    if g.len() != y.len() || gg == 0.0 {
        return None;
    }
    Some(g.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / gg)
}

/// Pearson chi-square goodness-of-fit result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Number of cells after pooling sparse tails.
    pub cells: usize,
}

/// Chi-square test of observed counts against cell probabilities. Adjacent
/// cells are pooled left to right until each expected count is at least 5;
/// a sparse remainder joins the last pooled cell.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> ChiSquareTest {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let n = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        o_acc += o as f64;
        e_acc += p * n;
        if e_acc >= 5.0 {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len().saturating_sub(1).max(1);
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("dof > 0").cdf(statistic);
    ChiSquareTest {
        statistic,
        dof,
        p_value,
        cells: cells.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_estimate() {
        let p = wilson_interval(30, 100);
        assert!(p.lo < 0.3 && 0.3 < p.hi);
        assert!((p.lo - 0.2189).abs() < 1e-3 && (p.hi - 0.3958).abs() < 1e-3);
        let all = wilson_interval(10, 10);
        assert_eq!(all.hi, 1.0);
        assert!(all.lo > 0.6);
    }

    #[test]
    fn summary_values() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.median, 2.5);
        // t_{0.975,3} = 3.182446
        let half = 3.182446 * (5.0f64 / 3.0).sqrt() / 2.0;
        assert!((s.ci_hi - 2.5 - half).abs() < 1e-5);
        let one = Summary::of(&[7.0]).unwrap();
        assert!(one.degenerate());
        assert_eq!((one.ci_lo, one.ci_hi), (7.0, 7.0));
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn ols_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let fit = ols(&x, &y).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept + 1.0).abs() < 1e-12);
        assert!(fit.slope_std_err < 1e-9);
        assert!(ols(&[1.0, 1.0], &[2.0, 3.0]).is_none());
        assert_eq!(fit_constant(&[1.0, 2.0], &[2.5, 5.0]), Some(2.5));
    }

    #[test]
    fn chi_square_pools_tails() {
        let probs = [0.5, 0.49, 0.01];
        let t = chi_square_gof(&[50, 49, 1], &probs);
        assert_eq!(t.cells, 2);
        assert!(t.statistic < 1e-9);
        assert!(t.p_value > 0.99);
        let bad = chi_square_gof(&[90, 10, 0], &probs);
        assert!(bad.p_value < 1e-6);
    }
}
