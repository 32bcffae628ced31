//! Small statistics helpers shared by the stability and alignment reports.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

/// Two-sided Welch t-test result.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n - 1 denominator).
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Welch's unequal-variance t-test, two-sided.
///
/// Degenerate inputs follow the reporting conventions used by the table
/// generators: two zero-variance samples with equal means give `p = 1`,
/// with different means `p = 0`.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "welch t-test needs at least 2 observations per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (variance(a), variance(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);

    if va == 0.0 && vb == 0.0 {
        return Ok(if ma == mb {
            TTest {
                t: 0.0,
                df: na + nb - 2.0,
                p_value: 1.0,
            }
        } else {
            TTest {
                t: if ma > mb {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                },
                df: na + nb - 2.0,
                p_value: 0.0,
            }
        });
    }

    let se2 = va / na + vb / nb;
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::InvalidArgument(format!("t-distribution: {e}")))?;
    let p_value = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(TTest {
        t,
        df,
        p_value: p_value.clamp(0.0, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_samples_give_p_one() {
        let a = [0.3, 0.3, 0.3];
        let t = welch_t_test(&a, &a).unwrap();
        assert_eq!(t.t, 0.0);
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn maximal_separation() {
        let a = [0.0, 0.0, 0.0];
        let b = [1.0, 1.0, 1.0];
        let t = welch_t_test(&a, &b).unwrap();
        assert!(t.t.is_infinite() && t.t < 0.0);
        assert!(t.p_value < 0.001);
    }

    // Expected values frozen from an independent statistics package run on
    // the same two deterministic 45-point samples.
    #[test]
    fn matches_reference_welch_computation() {
        let a: Vec<f64> = (0..45)
            .map(|i| 0.2 + 0.01 * i as f64 - 0.003 * (i % 7) as f64)
            .collect();
        let b: Vec<f64> = (0..45)
            .map(|i| 0.3 + 0.008 * i as f64 + 0.002 * (i % 5) as f64)
            .collect();
        let t = welch_t_test(&a, &b).unwrap();
        assert_abs_diff_eq!(t.t, -2.7335378148417364, epsilon = 1e-10);
        assert_abs_diff_eq!(t.df, 84.08728095950153, epsilon = 1e-8);
        assert_abs_diff_eq!(t.p_value, 0.007637621681474751, epsilon = 1e-9);
    }

    // Quadrature oracle: integrate the t density directly instead of going
    // through the incomplete-beta CDF.
    #[test]
    fn p_value_matches_density_quadrature() {
        let a = [0.11, 0.34, 0.29, 0.40, 0.22, 0.18];
        let b = [0.25, 0.45, 0.31, 0.52, 0.38, 0.41];
        let res = welch_t_test(&a, &b).unwrap();

        let df = res.df;
        let log_norm = statrs::function::gamma::ln_gamma((df + 1.0) / 2.0)
            - statrs::function::gamma::ln_gamma(df / 2.0)
            - 0.5 * (df * std::f64::consts::PI).ln();
        let pdf = |x: f64| (log_norm - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp();

        // Simpson's rule over [|t|, 60] for one tail.
        let (lo, hi, n) = (res.t.abs(), 60.0, 200_000);
        let h = (hi - lo) / n as f64;
        let mut acc = pdf(lo) + pdf(hi);
        for i in 1..n {
            let x = lo + i as f64 * h;
            acc += pdf(x) * if i % 2 == 0 { 2.0 } else { 4.0 };
        }
        let tail = acc * h / 3.0;
        assert_abs_diff_eq!(res.p_value, 2.0 * tail, epsilon = 1e-8);
    }
}
