//! Small statistical tests used by the analysis reports.

use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, StudentsT};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("zero variance")]
    ZeroVariance,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub df: f64,
    /// Two-sided.
    pub p_value: f64,
}

fn two_sided_t(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

/// True when every value equals the first up to rounding, so that any
/// computed spread would be floating-point noise.
fn is_constant(xs: &[f64]) -> bool {
    let first = xs[0];
    let tol = 1e-12 * first.abs().max(1.0);
    xs.iter().all(|x| (x - first).abs() <= tol)
}

/// Pearson correlation with a two-sided p-value from the t distribution
/// with n - 2 degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<(f64, TestResult), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFew { needed: 3, got: x.len() });
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if is_constant(x) || is_constant(y) {
        return Err(StatsError::ZeroVariance);
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = x.len() as f64 - 2.0;
    let t = if r.abs() >= 1.0 {
        f64::INFINITY.copysign(r)
    } else {
        r * (df / (1.0 - r * r)).sqrt()
    };
    let p = if t.is_infinite() { 0.0 } else { two_sided_t(t, df) };
    Ok((
        r,
        TestResult {
            statistic: t,
            df,
            p_value: p,
        },
    ))
}

pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(StatsError::TooFew { needed: 2, got: a.len() });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let sd = sample_sd(&diffs);
    if sd == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let n = diffs.len() as f64;
    let t = mean(&diffs) / (sd / n.sqrt());
    Ok(TestResult {
        statistic: t,
        df: n - 1.0,
        p_value: two_sided_t(t, n - 1.0),
    })
}

/// Welch's unequal-variance t-test.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(StatsError::TooFew { needed: 2, got: s.len() });
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sample_sd(a).powi(2) / na, sample_sd(b).powi(2) / nb);
    if va + vb == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let t = (mean(a) - mean(b)) / (va + vb).sqrt();
    let df = (va + vb).powi(2) / (va.powi(2) / (na - 1.0) + vb.powi(2) / (nb - 1.0));
    Ok(TestResult {
        statistic: t,
        df,
        p_value: two_sided_t(t, df),
    })
}

/// `P(X >= successes)` for `X ~ Binomial(trials, p)`.
pub fn binomial_upper_tail(successes: u64, trials: u64, p: f64) -> Result<f64, StatsError> {
    if successes > trials {
        return Err(StatsError::InvalidParameter(format!(
            "{successes} successes out of {trials} trials"
        )));
    }
    let dist = Binomial::new(p, trials).map_err(|e| StatsError::InvalidParameter(e.to_string()))?;
    if successes == 0 {
        return Ok(1.0);
    }
    Ok(dist.sf(successes - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn perfectly_linear_pairs() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let (r, t) = pearson(&x, &y).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert_eq!(t.p_value, 0.0);
    }

    #[test]
    fn constant_series_is_an_error() {
        assert_eq!(
            pearson(&[0.3, 0.3, 0.3], &[1.0, 2.0, 3.0]),
            Err(StatsError::ZeroVariance)
        );
        // Equal up to rounding counts as constant too.
        let third = 1.0 / 3.0;
        let noisy = [third, (1.0 - third) / 2.0 + third / 2.0 - third / 2.0 + 1e-17, third];
        assert_eq!(pearson(&noisy, &[1.0, 2.0, 3.0]), Err(StatsError::ZeroVariance));
    }

    // Reference values from scipy.stats (pearsonr, ttest_rel, ttest_ind with
    // equal_var=False, binom.sf).
    #[test]
    fn matches_reference_values() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = [2.0, 1.0, 4.0, 3.0, 6.0, 5.0];
        let (r, t) = pearson(&x, &y).unwrap();
        assert!((r - 0.828_571_428_571_428_6).abs() < 1e-12);
        assert!((t.p_value - 0.041_562_682_215_743_57).abs() < 1e-9, "{}", t.p_value);

        let paired = paired_t_test(&[5.0, 6.0, 7.0, 9.0], &[4.0, 6.5, 5.0, 6.0]).unwrap();
        assert!((paired.statistic - 1.841_880_388_213_627).abs() < 1e-9);
        assert!((paired.p_value - 0.162_733_109_824_293_6).abs() < 1e-9, "{}", paired.p_value);

        let welch = welch_t_test(&[1.0, 2.0, 3.0, 4.0], &[2.0, 4.0, 6.0, 8.0, 10.0]).unwrap();
        assert!((welch.statistic - (-2.251_436_323_159_369_5)).abs() < 1e-9, "{}", welch.statistic);
        assert!((welch.p_value - 0.069_133_593_192_389_36).abs() < 1e-9, "{}", welch.p_value);
    }

    #[test]
    fn binomial_tail() {
        let p = binomial_upper_tail(10, 17, 1.0 / 3.0).unwrap();
        assert!((p - 0.027_284_486_236_864_983).abs() < 1e-12, "{p}");
        assert_eq!(binomial_upper_tail(0, 5, 0.5).unwrap(), 1.0);
        assert!(binomial_upper_tail(6, 5, 0.5).is_err());
    }
}
