//! Dimensional constants and exponent bookkeeping.
//!
//! The Sobolev quotient `∫|∇f|² / (∫|f|^p)^{2/p}` is finite and attained for
//! `1 <= p < 2n/(n-2)` (any `p >= 1` in the plane), and under dilation by `r`
//! it scales like `r^α` with `α = n - 2 - 2n/p < 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Volume `ω_n = π^{n/2} / Γ(n/2 + 1)` of the unit ball in `ℝⁿ`.
pub fn unit_ball_volume(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument(
            "unit ball volume needs n >= 1".into(),
        ));
    }
    let half = n as f64 / 2.0;
    Ok(PI.powf(half) / gamma(half + 1.0))
}

/// Upper end `2n/(n-2)` of the admissible range, or `∞` when `n <= 2`.
pub fn critical_exponent(n: usize) -> f64 {
    if n <= 2 {
        f64::INFINITY
    } else {
        2.0 * n as f64 / (n as f64 - 2.0)
    }
}

/// `p >= 1`, and `p < 2n/(n-2)` when `n >= 3`.
pub fn admissible(n: usize, p: f64) -> bool {
    n >= 2 && p >= 1.0 && (n == 2 || p < critical_exponent(n))
}

pub(crate) fn check_admissible(n: usize, p: f64) -> Result<()> {
    if admissible(n, p) {
        Ok(())
    } else {
        Err(Error::Inadmissible {
            n,
            p,
            critical: critical_exponent(n),
        })
    }
}

/// Scaling exponent `α_{n,p} = n - 2 - 2n/p` of the Sobolev constant.
pub fn alpha(n: usize, p: f64) -> Result<f64> {
    check_admissible(n, p)?;
    let n = n as f64;
    Ok(n - 2.0 - 2.0 * n / p)
}

/// Dimension and exponents of a single reverse Hölder comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub n: usize,
    pub p: f64,
    pub q: f64,
}

impl Exponents {
    pub fn new(n: usize, p: f64, q: f64) -> Result<Self> {
        check_admissible(n, p)?;
        if !(q >= p) {
            return Err(Error::InvalidArgument(format!(
                "comparison exponent q = {q} must satisfy q >= p = {p}"
            )));
        }
        Ok(Exponents { n, p, q })
    }

    pub fn alpha(&self) -> f64 {
        let n = self.n as f64;
        n - 2.0 - 2.0 * n / self.p
    }

    /// Power of `C_p(Ω)` in the sharp constant: `(n/α)(1/p - 1/q)`.
    pub fn constant_exponent(&self) -> f64 {
        self.n as f64 / self.alpha() * (1.0 / self.p - 1.0 / self.q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn ball_volumes() {
        assert!(rel(unit_ball_volume(1).unwrap(), 2.0) < 1e-13);
        assert!(rel(unit_ball_volume(2).unwrap(), PI) < 1e-13);
        assert!(rel(unit_ball_volume(3).unwrap(), 4.0 * PI / 3.0) < 1e-13);
        assert!(rel(unit_ball_volume(4).unwrap(), PI * PI / 2.0) < 1e-13);
        assert!(unit_ball_volume(0).is_err());
    }

    #[test]
    fn ball_volume_recursion() {
        for n in 3..=12 {
            let lhs = unit_ball_volume(n).unwrap();
            let rhs = unit_ball_volume(n - 2).unwrap() * 2.0 * PI / n as f64;
            assert!(rel(lhs, rhs) < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn alpha_values() {
        assert_eq!(alpha(2, 1.0).unwrap(), -4.0);
        assert_eq!(alpha(2, 2.0).unwrap(), -2.0);
        assert_eq!(alpha(3, 2.0).unwrap(), -2.0);
        assert!(alpha(3, 6.0).is_err());
    }

    #[test]
    fn admissibility() {
        assert!(admissible(3, 5.0));
        assert!(!admissible(3, 6.0));
        assert!(admissible(2, 17.0));
        assert!(!admissible(4, 0.5));
        assert!(!admissible(4, 4.0));
        assert!(admissible(4, 3.99));
    }

    #[test]
    fn alpha_negative_on_admissible_range() {
        for n in 2..=6 {
            let top = critical_exponent(n).min(40.0);
            for k in 0..2000 {
                let p = 1.0 + (top - 1.0) * k as f64 / 2000.0;
                if admissible(n, p) {
                    assert!(alpha(n, p).unwrap() < 0.0, "n = {n}, p = {p}");
                }
            }
        }
    }

    #[test]
    fn chiti_exponent_for_p2() {
        for n in 2..=5 {
            for q in [2.0, 3.0, 4.0, 7.5] {
                let e = Exponents::new(n, 2.0, q).unwrap();
                let chiti = -(n as f64) / 2.0 * (0.5 - 1.0 / q);
                assert!((e.constant_exponent() - chiti).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_q_below_p() {
        assert!(Exponents::new(2, 2.0, 1.5).is_err());
        assert!(Exponents::new(2, 2.0, 2.0).is_ok());
    }
}
