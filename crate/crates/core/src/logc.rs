//! Complex numbers stored as `(ln |z|, arg z)` so partition functions that
//! decay exponentially with system size never underflow.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Mul};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Sums whose magnitude falls below this fraction of the larger operand are
/// treated as exact cancellation.
pub const CANCELLATION_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogComplex {
    /// `ln |z|`; `-inf` marks zero.
    pub log_magnitude: f64,
    /// `arg z` in `[-π, π)`.
    pub phase: f64,
}

fn wrap(phase: f64) -> f64 {
    let mut p = phase.rem_euclid(TAU);
    if p >= PI {
        p -= TAU;
    }
    p
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex { log_magnitude: f64::NEG_INFINITY, phase: 0.0 };
    pub const ONE: LogComplex = LogComplex { log_magnitude: 0.0, phase: 0.0 };

    pub fn new(log_magnitude: f64, phase: f64) -> Self {
        if log_magnitude == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        Self { log_magnitude, phase: wrap(phase) }
    }

    pub fn from_complex(z: C64) -> Self {
        if z.norm() == 0.0 {
            return Self::ZERO;
        }
        Self::new(z.norm().ln(), z.arg())
    }

    /// `z · e^{log_scale}`.
    pub fn from_scaled(z: C64, log_scale: f64) -> Self {
        let mut out = Self::from_complex(z);
        if !out.is_zero() {
            out.log_magnitude += log_scale;
        }
        out
    }

    pub fn from_real(x: f64) -> Self {
        Self::from_complex(C64::new(x, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.log_magnitude == f64::NEG_INFINITY
    }

    /// Plain complex value; under/overflows for extreme magnitudes.
    pub fn to_complex(&self) -> C64 {
        if self.is_zero() {
            return C64::new(0.0, 0.0);
        }
        C64::from_polar(self.log_magnitude.exp(), self.phase)
    }

    /// Complex value divided by `e^{log_scale}`.
    pub fn to_complex_scaled(&self, log_scale: f64) -> C64 {
        if self.is_zero() {
            return C64::new(0.0, 0.0);
        }
        C64::from_polar((self.log_magnitude - log_scale).exp(), self.phase)
    }

    pub fn magnitude(&self) -> f64 {
        self.log_magnitude.exp()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.log_magnitude, -self.phase)
    }

    pub fn re(&self) -> f64 {
        self.to_complex().re
    }

    pub fn im(&self) -> f64 {
        self.to_complex().im
    }

    /// Ratio `self / other` as a plain complex number.
    pub fn ratio(&self, other: &LogComplex) -> C64 {
        if self.is_zero() {
            return C64::new(0.0, 0.0);
        }
        C64::from_polar((self.log_magnitude - other.log_magnitude).exp(), self.phase - other.phase)
    }

    /// `|self - other| / max(|self|, |other|)`, `0` when both vanish.
    pub fn relative_deviation(&self, other: &LogComplex) -> f64 {
        let pivot = self.log_magnitude.max(other.log_magnitude);
        if pivot == f64::NEG_INFINITY {
            return 0.0;
        }
        (self.to_complex_scaled(pivot) - other.to_complex_scaled(pivot)).norm()
    }

    /// `|self - other| / e^{log_scale}`.
    pub fn deviation_scaled(&self, other: &LogComplex, log_scale: f64) -> f64 {
        (self.to_complex_scaled(log_scale) - other.to_complex_scaled(log_scale)).norm()
    }

    /// Sum of many terms with a single pivot.
    pub fn sum<'a>(terms: impl IntoIterator<Item = &'a LogComplex> + Clone) -> LogComplex {
        let pivot = terms.clone().into_iter().map(|t| t.log_magnitude).fold(f64::NEG_INFINITY, f64::max);
        if pivot == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let total: C64 = terms.into_iter().map(|t| t.to_complex_scaled(pivot)).sum();
        if total.norm() < CANCELLATION_FLOOR {
            return Self::ZERO;
        }
        Self::from_scaled(total, pivot)
    }
}

impl Add for LogComplex {
    type Output = LogComplex;

    fn add(self, rhs: LogComplex) -> LogComplex {
        LogComplex::sum([&self, &rhs])
    }
}

impl Mul for LogComplex {
    type Output = LogComplex;

    fn mul(self, rhs: LogComplex) -> LogComplex {
        if self.is_zero() || rhs.is_zero() {
            return LogComplex::ZERO;
        }
        LogComplex::new(self.log_magnitude + rhs.log_magnitude, self.phase + rhs.phase)
    }
}

impl fmt::Display for LogComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exp({:.12}) * e^(i {:.12})", self.log_magnitude, self.phase)
    }
}

/// `ln(e^a + e^b)` for real arguments.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_marker() {
        assert!(LogComplex::from_complex(C64::new(0.0, 0.0)).is_zero());
        let a = LogComplex::from_real(2.0);
        let b = LogComplex::from_real(-2.0);
        assert!((a + b).is_zero());
        assert!((a * LogComplex::ZERO).is_zero());
        assert_eq!(a + LogComplex::ZERO, a);
    }

    #[test]
    fn huge_dynamic_range() {
        let tiny = LogComplex::new(-800.0, 0.3);
        let tiny2 = LogComplex::new(-800.0 + 2f64.ln(), 0.3);
        let s = tiny + tiny;
        assert!((s.log_magnitude - tiny2.log_magnitude).abs() < 1e-12);
        assert!((s.phase - 0.3).abs() < 1e-12);
    }

    #[test]
    fn log_add_exp_basic() {
        assert!((log_add_exp(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 1.5), 1.5);
    }

    proptest! {
        #[test]
        fn ops_match_plain_complex(
            ar in -5.0f64..5.0, ai in -5.0f64..5.0, br in -5.0f64..5.0, bi in -5.0f64..5.0,
            shift in -600.0f64..600.0,
        ) {
            let (a, b) = (C64::new(ar, ai), C64::new(br, bi));
            let la = LogComplex::from_scaled(a, shift);
            let lb = LogComplex::from_scaled(b, shift);
            let sum = (la + lb).to_complex_scaled(shift);
            let tol = 1e-12 * (a.norm() + b.norm());
            prop_assert!((sum - (a + b)).norm() <= tol.max(CANCELLATION_FLOOR * (a.norm().max(b.norm())) * 2.0));
            let prod = (la * lb).to_complex_scaled(2.0 * shift);
            prop_assert!((prod - a * b).norm() <= 1e-12 * (a.norm() * b.norm()).max(1e-300));
            prop_assert!(la.phase >= -PI && la.phase < PI);
        }
    }
}
