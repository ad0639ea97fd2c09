//! Formal power-series utilities over complex coefficients.
//!
//! The one operation everything else needs is exponentiation of a truncated
//! series, used for the a_n generating function
//!
//!   sum a_n z^n = exp( sum_{n>=1} (1-(q1 q2)^n) / ((1-q1^n)(1-q2^n)) z^n/n )
//!
//! and for the structure coefficients r_l of the deformed-Virasoro
//! commutator expansion. Both are exp of an explicitly known series.

use num_complex::Complex64;

/// Coefficients of exp(a) for a truncated power series a = sum a_k z^k,
/// returned to the same truncation order.
///
/// Uses the derivative recurrence: with b = exp(a), b' = a' b, so
///
///   n b_n = sum_{k=1}^{n} k a_k b_{n-k},        b_0 = exp(a_0).
///
/// Cost O(N^2); exact up to roundoff, no iteration.
pub fn series_exp(a: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() {
        return Vec::new();
    }
    let n_max = a.len() - 1;
    let mut b = vec![Complex64::new(0.0, 0.0); n_max + 1];
    b[0] = a[0].exp();
    for n in 1..=n_max {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 1..=n {
            acc += (k as f64) * a[k] * b[n - k];
        }
        b[n] = acc / (n as f64);
    }
    b
}

/// Coefficients of the product of two truncated series, to the shorter
/// truncation order.
pub fn series_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n_max = a.len().min(b.len());
    let mut c = vec![Complex64::new(0.0, 0.0); n_max];
    for n in 0..n_max {
        for k in 0..=n {
            c[n] += a[k] * b[n - k];
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn exp_of_zero_is_one() {
        let a = vec![c(0.0); 6];
        let b = series_exp(&a);
        assert_eq!(b[0], c(1.0));
        for k in 1..=5 {
            assert_eq!(b[k], c(0.0));
        }
    }

    #[test]
    fn exp_of_z_gives_inverse_factorials() {
        // exp(z): coefficients 1/n!.
        let mut a = vec![c(0.0); 9];
        a[1] = c(1.0);
        let b = series_exp(&a);
        let mut fact = 1.0;
        for n in 0..=8 {
            if n > 0 {
                fact *= n as f64;
            }
            assert!((b[n] - c(1.0 / fact)).norm() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn exp_of_log_series_inverts() {
        // a_k = 1/k gives exp(-log(1-z)) = 1/(1-z): all coefficients 1.
        let mut a = vec![c(0.0); 13];
        for k in 1..=12 {
            a[k] = c(1.0 / k as f64);
        }
        for (n, bn) in series_exp(&a).iter().enumerate() {
            assert!((bn - c(1.0)).norm() < 1e-12, "n={n}");
        }
        // a_k = (-1)^(k+1)/k gives exp(log(1+z)) = 1 + z.
        let mut a = vec![c(0.0); 10];
        for k in 1..=9 {
            a[k] = c(if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64);
        }
        let b = series_exp(&a);
        assert!((b[0] - c(1.0)).norm() < 1e-14);
        assert!((b[1] - c(1.0)).norm() < 1e-14);
        for n in 2..=9 {
            assert!(b[n].norm() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn exp_is_multiplicative() {
        // exp(a) * exp(b) = exp(a + b) for two arbitrary series.
        let a: Vec<Complex64> = (0..8)
            .map(|k| Complex64::new(0.3 / (k as f64 + 1.0), 0.1 * k as f64))
            .collect();
        let b: Vec<Complex64> = (0..8)
            .map(|k| Complex64::new(-0.2 * k as f64, 0.05 / (k as f64 + 2.0)))
            .collect();
        let sum: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let lhs = series_mul(&series_exp(&a), &series_exp(&b));
        let rhs = series_exp(&sum);
        for n in 0..8 {
            assert!((lhs[n] - rhs[n]).norm() < 1e-12 * (1.0 + rhs[n].norm()), "n={n}");
        }
    }
}
