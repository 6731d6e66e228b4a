//! The five candidate activations and their scalar definitions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Negative slope used by LeakyReLU when a model file does not set one.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.1;

/// A candidate activation function.
///
/// Variant order is the fixed cost-matrix column order, so the derived `Ord`
/// is also the tie-break order used by the searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Relu,
    Silu,
    Hardswish,
    Relu6,
    LeakyRelu,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 5] = [
        ActivationKind::Relu,
        ActivationKind::Silu,
        ActivationKind::Hardswish,
        ActivationKind::Relu6,
        ActivationKind::LeakyRelu,
    ];

    /// Column index in the fixed order `[relu, silu, hardswish, relu6, leakyrelu]`.
    pub fn column(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::Silu => "silu",
            ActivationKind::Hardswish => "hardswish",
            ActivationKind::Relu6 => "relu6",
            ActivationKind::LeakyRelu => "leakyrelu",
        }
    }

    /// Evaluates the activation at `x`. `slope` is only read by LeakyReLU.
    pub fn eval<T: Scalar>(self, x: T, slope: LeakySlope<T>) -> Result<T> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(self.eval_unchecked(x, slope))
    }

    /// Same as [`eval`](Self::eval) without the finiteness check; used on hot paths
    /// that validate their outputs afterwards.
    #[inline]
    pub fn eval_unchecked<T: Scalar>(self, x: T, slope: LeakySlope<T>) -> T {
        let zero = T::zero();
        match self {
            ActivationKind::Relu => x.max(zero),
            ActivationKind::Relu6 => x.max(zero).min(T::of(6.0)),
            ActivationKind::LeakyRelu => {
                if x >= zero {
                    x
                } else {
                    slope.0 * x
                }
            }
            ActivationKind::Silu => x / (T::one() + (-x).exp()),
            ActivationKind::Hardswish => {
                let three = T::of(3.0);
                let six = T::of(6.0);
                x * (x + three).max(zero).min(six) / six
            }
        }
    }
}

/// Evaluates `kind` at `x` with the default LeakyReLU slope.
pub fn eval_activation<T: Scalar>(kind: ActivationKind, x: T) -> Result<T> {
    kind.eval(x, LeakySlope::default())
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        ActivationKind::ALL
            .into_iter()
            .find(|k| k.name() == lower)
            .or(match lower.as_str() {
                "hswish" => Some(ActivationKind::Hardswish),
                "leaky_relu" | "leaky-relu" => Some(ActivationKind::LeakyRelu),
                _ => None,
            })
            .ok_or_else(|| Error::Parse(format!("unknown activation `{s}`")))
    }
}

/// LeakyReLU negative slope, finite and strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakySlope<T>(T);

impl<T: Scalar> LeakySlope<T> {
    pub fn new(slope: T) -> Result<Self> {
        if slope.is_finite() && slope > T::zero() && slope < T::one() {
            Ok(Self(slope))
        } else {
            Err(Error::InvalidModel(format!(
                "leaky slope must lie in (0, 1), got {slope}"
            )))
        }
    }

    pub fn get(self) -> T {
        self.0
    }
}

impl<T: Scalar> Default for LeakySlope<T> {
    fn default() -> Self {
        Self(T::of(DEFAULT_LEAKY_SLOPE))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_points() {
        assert_eq!(eval_activation(ActivationKind::Relu, -2.0f64).unwrap(), 0.0);
        assert_eq!(eval_activation(ActivationKind::Relu6, 7.0f64).unwrap(), 6.0);
        assert_eq!(eval_activation(ActivationKind::Hardswish, 3.0f64).unwrap(), 3.0);
        assert_eq!(eval_activation(ActivationKind::Silu, 0.0f64).unwrap(), 0.0);
        assert_eq!(eval_activation(ActivationKind::LeakyRelu, -2.0f64).unwrap(), -0.2);
        assert_eq!(eval_activation(ActivationKind::Hardswish, -3.0f32).unwrap(), 0.0);
    }

    #[test]
    fn rejects_non_finite_input() {
        for kind in ActivationKind::ALL {
            assert!(eval_activation(kind, f64::NAN).is_err());
            assert!(eval_activation(kind, f64::INFINITY).is_err());
        }
    }

    #[test]
    fn slope_bounds() {
        assert!(LeakySlope::new(0.0f64).is_err());
        assert!(LeakySlope::new(1.0f64).is_err());
        assert!(LeakySlope::new(f64::NAN).is_err());
        assert_eq!(LeakySlope::new(0.01f64).unwrap().get(), 0.01);
    }

    #[test]
    fn names_round_trip() {
        for kind in ActivationKind::ALL {
            assert_eq!(kind.name().parse::<ActivationKind>().unwrap(), kind);
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.name()));
        }
        assert_eq!(ActivationKind::LeakyRelu.column(), 4);
        assert!("gelu".parse::<ActivationKind>().is_err());
    }

    #[test]
    fn hardswish_tracks_silu_on_dense_grid() {
        let mut worst = 0.0f64;
        for i in 0..=12_000 {
            let x = -6.0 + i as f64 * 1e-3;
            let h = eval_activation(ActivationKind::Hardswish, x).unwrap();
            let s = eval_activation(ActivationKind::Silu, x).unwrap();
            worst = worst.max((h - s).abs());
        }
        assert!(worst < 0.4, "max gap {worst}");
    }

    #[test]
    fn continuous_at_breakpoints() {
        let h = 1e-9;
        for kind in ActivationKind::ALL {
            for x0 in [-3.0f64, 0.0, 3.0, 6.0] {
                let l = eval_activation(kind, x0 - h).unwrap();
                let r = eval_activation(kind, x0 + h).unwrap();
                assert!((l - r).abs() < 1e-6, "{kind} jumps at {x0}");
            }
        }
    }

    proptest! {
        #[test]
        fn piecewise_linear_kinds_are_monotone(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for kind in [ActivationKind::Relu, ActivationKind::Relu6, ActivationKind::LeakyRelu] {
                prop_assert!(eval_activation(kind, lo).unwrap() <= eval_activation(kind, hi).unwrap());
            }
        }
    }
}
