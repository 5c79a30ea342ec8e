//! Schweizer-Sklar T-norm family and its De Morgan dual T-conorm.
//!
//! For `p > 0` every term `a^(-p)` is at least 1, so the `max{0, .}` clamp of
//! the binary form never activates and the operator is associative:
//!
//! ```text
//! T(a_1, ..., a_n; p) = (1 + sum_i (a_i^(-p) - 1))^(-1/p)
//! ```
//!
//! The sum is accumulated with `expm1` / `ln_1p` which keeps the small-`p`
//! end (where the family approaches the product) accurate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower end of the operator parameter gene.
pub const P_MIN: f64 = 1e-3;
/// Upper end of the operator parameter gene.
pub const P_MAX: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    pub tnorm_p: f64,
    pub tconorm_p: f64,
    /// Bypass the parameterized family and use `min` / `max`.
    pub fixed_min: bool,
}

impl OperatorParams {
    pub fn new(tnorm_p: f64, tconorm_p: f64) -> Result<Self> {
        for (name, v) in [("tnorm_p", tnorm_p), ("tconorm_p", tconorm_p)] {
            if !(P_MIN..=P_MAX).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "{name}={v} outside [{P_MIN}, {P_MAX}]"
                )));
            }
        }
        Ok(OperatorParams {
            tnorm_p,
            tconorm_p,
            fixed_min: false,
        })
    }

    pub fn fixed_min() -> Self {
        OperatorParams {
            tnorm_p: P_MAX,
            tconorm_p: P_MAX,
            fixed_min: true,
        }
    }

    pub fn tnorm(&self, a: f64, b: f64) -> f64 {
        tnorm(a, b, self)
    }

    pub fn tconorm(&self, a: f64, b: f64) -> f64 {
        tconorm(a, b, self)
    }

    /// Conjunction of any number of degrees.
    pub fn tnorm_many(&self, values: &[f64]) -> f64 {
        if self.fixed_min {
            values.iter().copied().fold(1.0, f64::min)
        } else {
            schweizer_sklar(values, self.tnorm_p)
        }
    }

    /// Disjunction of any number of degrees.
    pub fn tconorm_many(&self, values: &[f64]) -> f64 {
        if self.fixed_min {
            values.iter().copied().fold(0.0, f64::max)
        } else {
            let mut dual = [0.0; 8];
            if values.len() <= dual.len() {
                for (d, v) in dual.iter_mut().zip(values) {
                    *d = 1.0 - v;
                }
                1.0 - schweizer_sklar(&dual[..values.len()], self.tconorm_p)
            } else {
                let dual: Vec<f64> = values.iter().map(|v| 1.0 - v).collect();
                1.0 - schweizer_sklar(&dual, self.tconorm_p)
            }
        }
    }

    pub fn clamp(&mut self) {
        self.tnorm_p = self.tnorm_p.clamp(P_MIN, P_MAX);
        self.tconorm_p = self.tconorm_p.clamp(P_MIN, P_MAX);
    }
}

/// Schweizer-Sklar T-norm, or `min` when `params.fixed_min`.
///
/// A zero argument yields 0 (the limit of the closed form).
pub fn tnorm(a: f64, b: f64, params: &OperatorParams) -> f64 {
    if params.fixed_min {
        a.min(b)
    } else {
        schweizer_sklar(&[a, b], params.tnorm_p)
    }
}

/// `1 - T(1 - a, 1 - b)` with the conorm's own parameter, or `max` when fixed.
pub fn tconorm(a: f64, b: f64, params: &OperatorParams) -> f64 {
    if params.fixed_min {
        a.max(b)
    } else {
        1.0 - schweizer_sklar(&[1.0 - a, 1.0 - b], params.tconorm_p)
    }
}

/// `ln S` where `S = 1 + sum (a_i^(-p) - 1)`, or `None` when some `a_i` is 0.
#[inline]
fn log_sum(values: &[f64], p: f64) -> Option<f64> {
    let mut acc = 0.0;
    for &v in values {
        if v <= 0.0 {
            return None;
        }
        acc += (-p * v.ln()).exp_m1();
    }
    if acc.is_finite() {
        return Some(acc.ln_1p());
    }
    // Overflow of some a^(-p): log-sum-exp with the largest exponent factored out.
    let lmax = values
        .iter()
        .map(|v| -p * v.ln())
        .fold(f64::NEG_INFINITY, f64::max);
    let n = values.len() as f64;
    let inner: f64 = values
        .iter()
        .map(|v| (-p * v.ln() - lmax).exp())
        .sum::<f64>()
        - (n - 1.0) * (-lmax).exp();
    Some(lmax + inner.ln())
}

/// n-ary Schweizer-Sklar T-norm for `p > 0`.
#[inline]
pub fn schweizer_sklar(values: &[f64], p: f64) -> f64 {
    match values {
        [] => 1.0,
        [a] => *a,
        _ => match log_sum(values, p) {
            Some(ls) => (-ls / p).exp(),
            None => 0.0,
        },
    }
}

/// T-norm value plus `dT/da_i` (written to `grad`) and `dT/dp`.
///
/// With a zero argument the value is 0 and all partials are reported as 0.
pub(crate) fn schweizer_sklar_grad(values: &[f64], p: f64, grad: &mut [f64]) -> (f64, f64) {
    match values {
        [] => (1.0, 0.0),
        [a] => {
            grad[0] = 1.0;
            (*a, 0.0)
        }
        _ => {
            let Some(ls) = log_sum(values, p) else {
                grad[..values.len()].fill(0.0);
                return (0.0, 0.0);
            };
            let t = (-ls / p).exp();
            let mut weighted = 0.0;
            for (g, &v) in grad.iter_mut().zip(values) {
                let l = -p * v.ln();
                let share = (l - ls).exp();
                *g = t * share / v;
                weighted += share * l;
            }
            (t, t * (ls - weighted) / (p * p))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: f64) -> OperatorParams {
        OperatorParams::new(p, p).unwrap()
    }

    #[test]
    fn identity_elements() {
        for &b in &[0.0, 0.1, 0.37, 0.5, 0.99, 1.0] {
            assert!((tnorm(1.0, b, &params(2.0)) - b).abs() < 1e-12);
            assert!((tconorm(0.0, b, &params(2.0)) - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_parameter_values() {
        // (2 + 2 - 1)^-1
        assert!((tnorm(0.5, 0.5, &params(1.0)) - 1.0 / 3.0).abs() < 1e-15);
        assert!((tconorm(0.5, 0.5, &params(1.0)) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn limits_of_the_family() {
        assert!((tnorm(0.3, 0.7, &params(1e-3)) - 0.21).abs() <= 1e-2);
        assert!((tnorm(0.3, 0.7, &params(100.0_f64.min(P_MAX))) - 0.3).abs() <= 1e-2);
        assert!((tconorm(0.3, 0.7, &params(P_MAX)) - 0.7).abs() <= 1e-2);
        // beyond the gene range the closed form still behaves
        let wide = OperatorParams {
            tnorm_p: 100.0,
            tconorm_p: 100.0,
            fixed_min: false,
        };
        assert!((wide.tnorm(0.3, 0.7) - 0.3).abs() <= 1e-2);
        assert!((wide.tconorm(0.3, 0.7) - 0.7).abs() <= 1e-2);
    }

    #[test]
    fn zero_argument_is_absorbing() {
        assert_eq!(tnorm(0.0, 0.8, &params(3.0)), 0.0);
        assert_eq!(tconorm(1.0, 0.2, &params(3.0)), 1.0);
    }

    #[test]
    fn overflow_path_matches_min_limit() {
        // a^(-50) overflows for a ~ 1e-7; the log-sum-exp branch takes over.
        let t = schweizer_sklar(&[1e-7, 0.5], 50.0);
        assert!(t.is_finite() && t > 0.0 && (t - 1e-7).abs() < 1e-9);
    }

    #[test]
    fn fixed_min_uses_min_and_max() {
        let p = OperatorParams::fixed_min();
        assert_eq!(p.tnorm(0.3, 0.7), 0.3);
        assert_eq!(p.tconorm(0.3, 0.7), 0.7);
        assert_eq!(p.tnorm_many(&[0.9, 0.2, 0.4]), 0.2);
        assert_eq!(p.tconorm_many(&[0.9, 0.2, 0.4]), 0.9);
    }

    #[test]
    fn n_ary_equals_binary_fold() {
        let xs = [0.9, 0.35, 0.6, 0.12];
        for &p in &[1e-3, 0.5, 1.0, 7.0, 50.0] {
            let op = params(p);
            let fold = xs[1..].iter().fold(xs[0], |acc, &v| op.tnorm(acc, v));
            assert!((op.tnorm_many(&xs) - fold).abs() < 1e-12, "p={p}");
            let fold = xs[1..].iter().fold(xs[0], |acc, &v| op.tconorm(acc, v));
            assert!((op.tconorm_many(&xs) - fold).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn gradient_matches_differences() {
        let xs = [0.8, 0.3, 0.55];
        for &p in &[0.01, 0.7, 3.0, 20.0] {
            let mut g = [0.0; 3];
            let (_, dp) = schweizer_sklar_grad(&xs, p, &mut g);
            let h = 1e-7;
            for i in 0..3 {
                let mut a = xs;
                a[i] += h;
                let mut b = xs;
                b[i] -= h;
                let fd = (schweizer_sklar(&a, p) - schweizer_sklar(&b, p)) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-6 * (1.0 + fd.abs()), "p={p} i={i}");
            }
            let fd = (schweizer_sklar(&xs, p + h) - schweizer_sklar(&xs, p - h)) / (2.0 * h);
            assert!((fd - dp).abs() < 1e-6 * (1.0 + fd.abs()), "p={p}: {fd} vs {dp}");
        }
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(OperatorParams::new(0.0, 1.0).is_err());
        assert!(OperatorParams::new(1.0, 51.0).is_err());
    }
}
