use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound for every width/slope parameter (bell `p`, `q` and Gaussian `sigma`).
pub const PARAM_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MfShape {
    Bell,
    Gaussian,
}

/// A parameterized fuzzy set on a variable's universe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum MembershipFunction {
    /// Generalized bell `1 / (1 + |(x - r) / p|^(2q))`.
    Bell { p: f64, q: f64, r: f64 },
    /// `exp(-(x - mu)^2 / (2 sigma^2))`.
    Gaussian { mu: f64, sigma: f64 },
}

impl MembershipFunction {
    pub fn bell(p: f64, q: f64, r: f64) -> Result<Self> {
        if !(p.is_finite() && q.is_finite() && r.is_finite()) || p <= 0.0 || q <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "bell parameters must be finite with p, q > 0 (p={p}, q={q}, r={r})"
            )));
        }
        Ok(MembershipFunction::Bell { p, q, r })
    }

    pub fn gaussian(mu: f64, sigma: f64) -> Result<Self> {
        if !(mu.is_finite() && sigma.is_finite()) || sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gaussian parameters must be finite with sigma > 0 (mu={mu}, sigma={sigma})"
            )));
        }
        Ok(MembershipFunction::Gaussian { mu, sigma })
    }

    pub fn shape(&self) -> MfShape {
        match self {
            MembershipFunction::Bell { .. } => MfShape::Bell,
            MembershipFunction::Gaussian { .. } => MfShape::Gaussian,
        }
    }

    pub fn center(&self) -> f64 {
        match *self {
            MembershipFunction::Bell { r, .. } => r,
            MembershipFunction::Gaussian { mu, .. } => mu,
        }
    }

    /// Membership degree of `x`, always in `[0, 1]`.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            MembershipFunction::Bell { p, q, r } => {
                let u = ((x - r) / p).abs();
                1.0 / (1.0 + u.powf(2.0 * q))
            }
            MembershipFunction::Gaussian { mu, sigma } => {
                let d = (x - mu) / sigma;
                (-0.5 * d * d).exp()
            }
        }
    }

    /// Degree together with its partial derivatives with respect to
    /// [`params`](Self::params), written into `grad`.
    ///
    /// At `x == r` the bell's `|.|^(2q)` term and its `ln` factor are taken
    /// at their limit, so every derivative is 0 there.
    #[inline]
    pub(crate) fn eval_with_grad(&self, x: f64, grad: &mut [f64; 3]) -> f64 {
        match *self {
            MembershipFunction::Bell { p, q, r } => {
                let d = x - r;
                if d == 0.0 {
                    *grad = [0.0; 3];
                    return 1.0;
                }
                let u = d.abs() / p;
                let z = u.powf(2.0 * q);
                let mu = 1.0 / (1.0 + z);
                let mu2z = mu * mu * z;
                grad[0] = mu2z * 2.0 * q / p;
                grad[1] = -mu2z * 2.0 * u.ln();
                grad[2] = mu2z * 2.0 * q / d;
                mu
            }
            MembershipFunction::Gaussian { mu, sigma } => {
                let d = x - mu;
                let s2 = sigma * sigma;
                let deg = (-0.5 * d * d / s2).exp();
                grad[0] = deg * d / s2;
                grad[1] = deg * d * d / (s2 * sigma);
                grad[2] = 0.0;
                deg
            }
        }
    }

    /// Number of tunable parameters (3 for bell, 2 for Gaussian).
    pub fn n_params(&self) -> usize {
        match self {
            MembershipFunction::Bell { .. } => 3,
            MembershipFunction::Gaussian { .. } => 2,
        }
    }

    /// Tunable parameters in canonical order: bell `[p, q, r]`, Gaussian `[mu, sigma]`.
    pub fn params(&self) -> Vec<f64> {
        match *self {
            MembershipFunction::Bell { p, q, r } => vec![p, q, r],
            MembershipFunction::Gaussian { mu, sigma } => vec![mu, sigma],
        }
    }

    /// Overwrite parameters from a slice in [`params`](Self::params) order, then
    /// project back onto the feasible set (floors, center inside `universe`).
    pub fn set_params(&mut self, values: &[f64], universe: Universe) {
        match self {
            MembershipFunction::Bell { p, q, r } => {
                *p = values[0];
                *q = values[1];
                *r = values[2];
            }
            MembershipFunction::Gaussian { mu, sigma } => {
                *mu = values[0];
                *sigma = values[1];
            }
        }
        self.project(universe);
    }

    pub fn project(&mut self, universe: Universe) {
        match self {
            MembershipFunction::Bell { p, q, r } => {
                *p = p.max(PARAM_FLOOR);
                *q = q.max(PARAM_FLOOR);
                *r = universe.clamp(*r);
            }
            MembershipFunction::Gaussian { mu, sigma } => {
                *sigma = sigma.max(PARAM_FLOOR);
                *mu = universe.clamp(*mu);
            }
        }
    }
}

/// Closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Universe {
    pub lo: f64,
    pub hi: f64,
}

impl Universe {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::InvalidParameter(format!(
                "universe requires finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Universe { lo, hi })
    }

    pub fn unit() -> Self {
        Universe { lo: 0.0, hi: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_examples() {
        let mf = MembershipFunction::bell(1.0, 1.0, 0.0).unwrap();
        assert_eq!(mf.eval(0.0), 1.0);
        assert_eq!(mf.eval(1.0), 0.5);
    }

    #[test]
    fn gaussian_example() {
        let mf = MembershipFunction::gaussian(0.0, 1.0).unwrap();
        // exp(-2) evaluated independently
        assert!((mf.eval(2.0) - 0.135_335_283_236_612_7).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_positive_widths() {
        assert!(MembershipFunction::bell(0.0, 1.0, 0.0).is_err());
        assert!(MembershipFunction::bell(1.0, -1.0, 0.0).is_err());
        assert!(MembershipFunction::gaussian(0.0, 0.0).is_err());
        assert!(Universe::new(1.0, 1.0).is_err());
    }

    #[test]
    fn projection_enforces_floors_and_universe() {
        let mut mf = MembershipFunction::Bell {
            p: -1.0,
            q: 0.0,
            r: 3.0,
        };
        mf.project(Universe::unit());
        assert_eq!(
            mf,
            MembershipFunction::Bell {
                p: PARAM_FLOOR,
                q: PARAM_FLOOR,
                r: 1.0
            }
        );
    }

    #[test]
    fn analytic_partials_match_differences() {
        let mfs = [
            MembershipFunction::bell(0.3, 1.7, 0.4).unwrap(),
            MembershipFunction::gaussian(0.6, 0.2).unwrap(),
        ];
        let u = Universe::new(-10.0, 10.0).unwrap();
        for mf in mfs {
            for &x in &[0.05, 0.33, 0.71, 0.98] {
                let mut g = [0.0; 3];
                mf.eval_with_grad(x, &mut g);
                let base = mf.params();
                for i in 0..base.len() {
                    let h = 1e-6;
                    let (mut plus, mut minus) = (mf, mf);
                    let mut v = base.clone();
                    v[i] += h;
                    plus.set_params(&v, u);
                    v[i] -= 2.0 * h;
                    minus.set_params(&v, u);
                    let fd = (plus.eval(x) - minus.eval(x)) / (2.0 * h);
                    let analytic = g[i];
                    assert!((fd - analytic).abs() < 1e-7, "{mf:?} x={x} i={i}: {fd} vs {analytic}");
                }
            }
        }
    }
}
