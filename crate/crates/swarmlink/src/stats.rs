//! Small statistics helpers for run comparisons: sample moments and the
//! paired one-sided t-test used to rank methods on shared seeds.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

/// Sample mean and (n-1)-normalized standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Result of a paired one-sided t-test.
#[derive(Clone, Copy, Debug)]
pub struct PairedT {
    pub t: f64,
    pub df: f64,
    /// P(observing a difference this negative or more) under the null of
    /// equal means; small values support `mean(a) < mean(b)`.
    pub p_less: f64,
    pub mean_diff: f64,
}

/// Paired one-sided t-test of H1: `mean(a) < mean(b)` on matched samples.
///
/// Degenerate all-equal-difference samples get p of 0, 1, or 0.5 by the
/// sign of the common difference.
pub fn paired_t_less(a: &[f64], b: &[f64]) -> Result<PairedT> {
    if a.len() != b.len() {
        return Err(Error::Config(format!(
            "paired test needs matched samples, got {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Config("paired test needs at least two pairs".into()));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::Config("paired test needs finite samples".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (mean_diff, sd) = mean_std(&diffs);
    let n = diffs.len() as f64;
    let df = n - 1.0;
    if sd == 0.0 {
        let p_less = match mean_diff.partial_cmp(&0.0).unwrap() {
            std::cmp::Ordering::Less => 0.0,
            std::cmp::Ordering::Equal => 0.5,
            std::cmp::Ordering::Greater => 1.0,
        };
        return Ok(PairedT {
            t: if mean_diff == 0.0 {
                0.0
            } else {
                f64::INFINITY.copysign(mean_diff)
            },
            df,
            p_less,
            mean_diff,
        });
    }
    let t = mean_diff / (sd / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    Ok(PairedT {
        t,
        df,
        p_less: dist.cdf(t),
        mean_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mean_std_basics() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_relative_eq!(m, 5.0);
        assert_relative_eq!(s, (32.0f64 / 7.0).sqrt());
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
        assert!(mean_std(&[]).0.is_nan());
    }

    #[test]
    fn known_paired_t_value() {
        // Oracle: d = a - b = [-1, 0, -1, -1, -2], mean -1, sd sqrt(0.5),
        // t = -1 / (sqrt(0.5) / sqrt(5)) = -sqrt(10) = -3.16228,
        // one-sided p = 0.0170547 (Student t, 4 df).
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0, 2.0, 4.0, 5.0, 7.0];
        let r = paired_t_less(&a, &b).unwrap();
        assert_relative_eq!(r.mean_diff, -1.0);
        assert_relative_eq!(r.t, -(10.0f64).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(r.p_less, 0.0170547, epsilon = 1e-6);
    }

    #[test]
    fn direction_and_symmetry() {
        let a = [1.0, 2.0, 3.0, 2.0];
        let b = [4.0, 5.0, 5.0, 6.0];
        let less = paired_t_less(&a, &b).unwrap();
        let greater = paired_t_less(&b, &a).unwrap();
        assert!(less.p_less < 0.05);
        assert_relative_eq!(less.p_less + greater.p_less, 1.0, epsilon = 1e-12);
        assert_relative_eq!(less.t, -greater.t);
    }

    #[test]
    fn degenerate_and_invalid_inputs() {
        let r = paired_t_less(&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(r.p_less, 0.0);
        let r = paired_t_less(&[2.0, 3.0], &[2.0, 3.0]).unwrap();
        assert_eq!(r.p_less, 0.5);
        let r = paired_t_less(&[5.0, 6.0, 7.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.p_less, 1.0);
        assert!(paired_t_less(&[1.0], &[2.0]).is_err());
        assert!(paired_t_less(&[1.0, 2.0], &[2.0]).is_err());
        assert!(paired_t_less(&[1.0, f64::NAN], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn noisy_ordered_samples_reach_confidence() {
        // Deterministic pseudo-noise around a true gap of 1.0.
        let mut a = Vec::new();
        let mut b = Vec::new();
        for k in 0..40 {
            let noise = ((k * 2654435761u64 % 1000) as f64 / 1000.0 - 0.5) * 0.8;
            a.push(10.0 + noise);
            b.push(11.0 - noise);
        }
        let r = paired_t_less(&a, &b).unwrap();
        assert!(r.p_less < 0.001, "p = {}", r.p_less);
    }
}
