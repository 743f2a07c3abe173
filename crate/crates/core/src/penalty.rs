//! Smooth surrogate for the L0 cardinality penalty.
//!
//! `phi(x) = x^2 / (x^2 + eps^2)` is 0 at the origin and tends to 1 away from
//! it, approaching the 0/1 indicator as `eps -> 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SicError};

/// Smoothing parameter; always finite and strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Epsilon(f64);

impl Epsilon {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(SicError::InvalidEpsilon(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Epsilon {
    type Error = SicError;

    fn try_from(v: f64) -> Result<Self> {
        Epsilon::new(v)
    }
}

impl From<Epsilon> for f64 {
    fn from(e: Epsilon) -> f64 {
        e.0
    }
}

#[inline]
pub fn phi(x: f64, eps: Epsilon) -> f64 {
    let x2 = x * x;
    x2 / (x2 + eps.0 * eps.0)
}

/// First and second derivatives of [`phi`] with respect to `x`.
#[inline]
pub fn phi_derivatives(x: f64, eps: Epsilon) -> (f64, f64) {
    let x2 = x * x;
    let e2 = eps.0 * eps.0;
    let d = x2 + e2;
    let d2 = d * d;
    let first = 2.0 * x * e2 / d2;
    let second = 2.0 * e2 * (e2 - 3.0 * x2) / (d2 * d);
    (first, second)
}

/// Sum of [`phi`] over a coefficient tail (intercept already excluded).
pub fn smooth_l0(tail: &[f64], eps: Epsilon) -> f64 {
    tail.iter().map(|&x| phi(x, eps)).sum()
}
