//! Student-t distribution, Welch's unequal-variance t-test, and the
//! one-way ANOVA F statistic used for univariate feature ranking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BETA_CF_TOLERANCE: f64 = 1e-10;
const BETA_CF_MAX_ITER: usize = 10_000;

/// Natural log of the gamma function (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularised incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // the continued fraction converges fastest for x < (a + 1) / (a + b + 2)
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < BETA_CF_TOLERANCE {
            break;
        }
    }
    h
}

/// `P(T <= t)` for Student's t with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let tail = 0.5 * regularized_incomplete_beta(df / (df + t * t), 0.5 * df, 0.5);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// `P(|T| >= |t|)`.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    regularized_incomplete_beta(df / (df + t * t), 0.5 * df, 0.5).clamp(0.0, 1.0)
}

/// Mean, unbiased variance, and size of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSummary {
    pub mean: f64,
    pub variance: f64,
    pub n: usize,
}

impl SampleSummary {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = if n == 0 { 0.0 } else { xs.iter().sum::<f64>() / n as f64 };
        let variance = if n < 2 {
            0.0
        } else {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        };
        SampleSummary { mean, variance, n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

/// Two-tailed Welch t-test on summary statistics.
pub fn welch_from_summaries(a: &SampleSummary, b: &SampleSummary) -> Result<WelchResult> {
    if a.n < 2 || b.n < 2 {
        return Err(Error::InsufficientData(format!(
            "Welch test needs at least 2 observations per group, got {} and {}",
            a.n, b.n
        )));
    }
    let (na, nb) = (a.n as f64, b.n as f64);
    let (sa, sb) = (a.variance / na, b.variance / nb);
    let se2 = sa + sb;
    let diff = a.mean - b.mean;
    if se2 == 0.0 {
        let df = na + nb - 2.0;
        return Ok(if diff == 0.0 {
            WelchResult { t: 0.0, df, p: 1.0 }
        } else {
            WelchResult {
                t: diff.signum() * f64::INFINITY,
                df,
                p: 0.0,
            }
        });
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    Ok(WelchResult {
        t,
        df,
        p: student_t_two_tailed(t, df),
    })
}

pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    welch_from_summaries(&SampleSummary::of(a), &SampleSummary::of(b))
}

/// One-way ANOVA F statistic of `values` grouped by `groups`.
/// Zero within-group variance gives `inf` when the group means differ and 0 otherwise.
pub fn anova_f(values: &[f64], groups: &[u8]) -> f64 {
    let n = values.len();
    let mut sums = std::collections::BTreeMap::<u8, (f64, usize)>::new();
    for (&v, &g) in values.iter().zip(groups) {
        let e = sums.entry(g).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    let k = sums.len();
    if k < 2 || n <= k {
        return 0.0;
    }
    let grand = values.iter().sum::<f64>() / n as f64;
    let between: f64 = sums
        .values()
        .map(|&(s, c)| c as f64 * (s / c as f64 - grand).powi(2))
        .sum();
    let within: f64 = values
        .iter()
        .zip(groups)
        .map(|(&v, g)| {
            let (s, c) = sums[g];
            (v - s / c as f64).powi(2)
        })
        .sum();
    let between = between / (k - 1) as f64;
    let within = within / (n - k) as f64;
    if within <= 0.0 {
        return if between > 1e-300 { f64::INFINITY } else { 0.0 };
    }
    between / within
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ln_gamma_known_values() {
        assert_abs_diff_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(5.0), 24f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(ln_gamma(100.5), statrs::function::gamma::ln_gamma(100.5), epsilon = 1e-9);
    }

    #[test]
    fn t_cdf_closed_forms() {
        // df = 1 is Cauchy: F(t) = 1/2 + atan(t)/pi
        for t in [-3.0, -0.5, 0.0, 0.7, 4.0] {
            assert_abs_diff_eq!(student_t_cdf(t, 1.0), 0.5 + f64::atan(t) / std::f64::consts::PI, epsilon = 1e-9);
        }
        // df = 2: F(t) = 1/2 + t / (2 sqrt(2 + t^2))
        for t in [-2.0, 0.3, 5.0] {
            assert_abs_diff_eq!(student_t_cdf(t, 2.0), 0.5 + t / (2.0 * (2.0 + t * t).sqrt()), epsilon = 1e-9);
        }
        assert_eq!(student_t_two_tailed(0.0, 7.0), 1.0);
        assert_eq!(student_t_two_tailed(f64::INFINITY, 7.0), 0.0);
    }

    #[test]
    fn identical_samples() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let r = welch_t_test(&xs, &xs).unwrap();
        assert_eq!(r.t, 0.0);
        assert_abs_diff_eq!(r.p, 1.0, epsilon = 1e-12);
        let c = [2.0, 2.0, 2.0];
        let r = welch_t_test(&c, &c).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));
    }

    #[test]
    fn welch_textbook() {
        // scipy.stats.ttest_ind(a, b, equal_var=False)
        let a = [27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1, 21.9, 22.6, 23.1, 19.6, 19.0, 21.7, 21.4];
        let b = [27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2, 21.9, 22.1, 22.9, 20.5, 24.4];
        let r = welch_t_test(&a, &b).unwrap();
        assert_abs_diff_eq!(r.t, -2.455356398, epsilon = 1e-8);
        assert_abs_diff_eq!(r.df, 24.988529290, epsilon = 1e-8);
        assert_abs_diff_eq!(r.p, 0.021378001, epsilon = 1e-8);
    }

    #[test]
    fn too_few_observations() {
        assert!(matches!(welch_t_test(&[1.0], &[1.0, 2.0]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn anova_f_basic() {
        let y = [0, 0, 0, 1, 1, 1];
        assert_eq!(anova_f(&[1.0, 1.0, 1.0, 2.0, 2.0, 2.0], &y), f64::INFINITY);
        assert_eq!(anova_f(&[3.0; 6], &y), 0.0);
        // sklearn.feature_selection.f_classif
        let f = anova_f(&[1.0, 2.0, 3.0, 2.0, 4.0, 6.0], &y);
        assert_abs_diff_eq!(f, 2.4, epsilon = 1e-12);
    }
}
