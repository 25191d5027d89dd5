//! Parametrizations of the jump rates.
//!
//! Raw rates `(lambda0, lambda1)` can be written as `(s, t)` with
//! `s t = lambda0`, `(1-s) t = lambda1`, or in a growth-rate weighted chart
//! `(u, v)` with `u v = lambda0 / w0`, `(1-u) v = lambda1 / w1`. The y invasion
//! rate lives in the chart weighted by `(alpha0, alpha1)`, the x invasion rate
//! in the one weighted by `(beta0, beta1)`.

use serde::{Deserialize, Serialize};

use crate::env::EnvPair;
use crate::error::{Error, Result};

/// Switching intensities: `lambda0` leaves mode 0, `lambda1` leaves mode 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpRates {
    lambda0: f64,
    lambda1: f64,
}

impl JumpRates {
    pub fn new(lambda0: f64, lambda1: f64) -> Result<Self> {
        if !(lambda0.is_finite() && lambda0 > 0.0 && lambda1.is_finite() && lambda1 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "jump rates must be finite and > 0, got ({lambda0}, {lambda1})"
            )));
        }
        Ok(JumpRates { lambda0, lambda1 })
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    /// Rate of leaving mode `i`.
    pub fn leave(&self, i: usize) -> f64 {
        if i == 0 {
            self.lambda0
        } else {
            self.lambda1
        }
    }

    /// Stationary probability of mode 0 for the two-state chain.
    pub fn stationary0(&self) -> f64 {
        self.lambda1 / (self.lambda0 + self.lambda1)
    }

    pub fn to_st(&self) -> STCoords {
        let t = self.lambda0 + self.lambda1;
        STCoords {
            s: self.lambda0 / t,
            t,
        }
    }
}

/// `(s, t)` with `s t = lambda0` and `(1-s) t = lambda1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct STCoords {
    pub s: f64,
    pub t: f64,
}

impl STCoords {
    pub fn to_rates(&self) -> Result<JumpRates> {
        JumpRates::new(self.s * self.t, (1.0 - self.s) * self.t)
    }
}

/// Weight pair of a `(u, v)` chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartWeights {
    pub w0: f64,
    pub w1: f64,
}

impl ChartWeights {
    pub fn new(w0: f64, w1: f64) -> Result<Self> {
        if !(w0.is_finite() && w0 > 0.0 && w1.is_finite() && w1 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "chart weights must be finite and > 0, got ({w0}, {w1})"
            )));
        }
        Ok(ChartWeights { w0, w1 })
    }

    /// `(alpha0, alpha1)`: the chart of the y invasion rate (and of all plots).
    pub fn alpha(pair: &EnvPair) -> Self {
        ChartWeights {
            w0: pair.env0().alpha(),
            w1: pair.env1().alpha(),
        }
    }

    /// `(beta0, beta1)`: the native chart of the x invasion rate.
    pub fn beta(pair: &EnvPair) -> Self {
        ChartWeights {
            w0: pair.env0().beta(),
            w1: pair.env1().beta(),
        }
    }

    pub(crate) fn check(&self, expected: &ChartWeights) -> Result<()> {
        if self == expected {
            Ok(())
        } else {
            Err(Error::ChartMismatch {
                expected0: expected.w0,
                expected1: expected.w1,
                got0: self.w0,
                got1: self.w1,
            })
        }
    }
}

/// `(u, v)` with `u v = lambda0 / w0` and `(1-u) v = lambda1 / w1`.
///
/// `u` in {0, 1} is representable (limits and thresholds) but has no rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UVCoords {
    pub u: f64,
    pub v: f64,
    pub weights: ChartWeights,
}

impl UVCoords {
    pub fn new(u: f64, v: f64, weights: ChartWeights) -> Result<Self> {
        if !((0.0..=1.0).contains(&u) && v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need u in [0, 1] and finite v >= 0, got ({u}, {v})"
            )));
        }
        Ok(UVCoords { u, v, weights })
    }

    pub fn to_rates(&self) -> Result<JumpRates> {
        uv_to_rates(self)
    }

    /// Same rates expressed in another chart.
    pub fn rechart(&self, weights: ChartWeights) -> Result<UVCoords> {
        Ok(rates_to_uv(&self.to_rates()?, weights))
    }
}

pub fn rates_to_uv(rates: &JumpRates, weights: ChartWeights) -> UVCoords {
    let p = rates.lambda0 / weights.w0;
    let q = rates.lambda1 / weights.w1;
    let v = p + q;
    UVCoords { u: p / v, v, weights }
}

pub fn uv_to_rates(coords: &UVCoords) -> Result<JumpRates> {
    let UVCoords { u, v, weights } = *coords;
    if !(u > 0.0 && u < 1.0 && v > 0.0 && v.is_finite()) {
        return Err(Error::ChartBoundary { u, v });
    }
    JumpRates::new(u * v * weights.w0, (1.0 - u) * v * weights.w1)
}

/// Triangular change of variables `(s, t) -> (u, v)` into the chart weighted
/// by `(alpha0, alpha1)`; `u` depends on `s` only.
pub fn xi(s: f64, t: f64, alpha0: f64, alpha1: f64) -> (f64, f64) {
    let mean = (1.0 - s) * alpha0 + s * alpha1;
    (s * alpha1 / mean, t * mean / (alpha0 * alpha1))
}

/// Inverse of the `u` component of [`xi`]: `s = u w0 / (u w0 + (1-u) w1)`.
pub fn s_of_u(u: f64, w0: f64, w1: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    u * w0 / (u * w0 + (1.0 - u) * w1)
}

/// Maps a `u` value between charts. The map depends only on the ratio
/// `lambda0 / lambda1`, so vertical lines of one chart are vertical lines of
/// the other.
pub fn convert_u(u: f64, from: ChartWeights, to: ChartWeights) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return u;
    }
    // lambda0 ∝ u w0, lambda1 ∝ (1-u) w1
    let p = u * from.w0 / to.w0;
    let q = (1.0 - u) * from.w1 / to.w1;
    p / (p + q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(w0: f64, w1: f64) -> ChartWeights {
        ChartWeights::new(w0, w1).unwrap()
    }

    #[test]
    fn symmetric_rates() {
        let c = rates_to_uv(&JumpRates::new(3.0, 2.0).unwrap(), w(3.0, 2.0));
        assert!((c.u - 0.5).abs() < 1e-15 && (c.v - 2.0).abs() < 1e-15);
        let r = uv_to_rates(&UVCoords::new(0.5, 2.0, w(1.7, 1.7)).unwrap()).unwrap();
        assert!((r.lambda0() - 1.7).abs() < 1e-15 && (r.lambda1() - 1.7).abs() < 1e-15);
    }

    #[test]
    fn rejects_zero_rate() {
        assert!(JumpRates::new(2.0, 0.0).is_err());
        assert!(JumpRates::new(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn derived_example_roundtrip() {
        // oracle: the inverse map reproduces the rates
        let c = rates_to_uv(&JumpRates::new(3.0, 5.0).unwrap(), w(3.0, 2.0));
        assert!((c.u - 1.0 / 3.5).abs() < 1e-15);
        assert!((c.v - 3.5).abs() < 1e-15);
        let r = uv_to_rates(&c).unwrap();
        assert!((r.lambda0() - 3.0).abs() <= 1e-14 * 3.0);
        assert!((r.lambda1() - 5.0).abs() <= 1e-14 * 5.0);
    }

    #[test]
    fn boundary_is_rejected() {
        for (u, v) in [(0.0, 1.0), (1.0, 1.0), (0.5, 0.0)] {
            let c = UVCoords::new(u, v, w(1.0, 1.0)).unwrap();
            assert!(matches!(uv_to_rates(&c), Err(Error::ChartBoundary { .. })));
        }
    }

    #[test]
    fn xi_examples() {
        for t in [0.1, 1.0, 100.0] {
            assert_eq!(xi(0.0, t, 3.0, 2.0).0, 0.0);
            assert_eq!(xi(1.0, t, 3.0, 2.0).0, 1.0);
            let (u, v) = xi(0.3, t, 2.0, 2.0);
            assert!((u - 0.3).abs() < 1e-15 && (v - t / 2.0).abs() < 1e-15);
        }
        let (u, v) = xi(0.5, 1.0, 3.0, 2.0);
        assert!((u - 0.4).abs() < 1e-15);
        assert!((v - 2.5 / 6.0).abs() < 1e-15);
        let c = rates_to_uv(&JumpRates::new(0.5, 0.5).unwrap(), w(3.0, 2.0));
        assert!((c.u - u).abs() < 1e-14 && (c.v - v).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn chart_roundtrip(l0 in 1e-4f64..1e4, l1 in 1e-4f64..1e4, w0 in 0.1f64..10.0, w1 in 0.1f64..10.0) {
            // 1 - u cancels when one rate dominates, so the error is measured
            // against the larger rate
            let scale = l0.max(l1) * (w0 / w1).max(w1 / w0);
            let rates = JumpRates::new(l0, l1).unwrap();
            let back = uv_to_rates(&rates_to_uv(&rates, w(w0, w1))).unwrap();
            prop_assert!((back.lambda0() - l0).abs() <= 1e-14 * scale);
            prop_assert!((back.lambda1() - l1).abs() <= 1e-14 * scale);
        }

        #[test]
        fn xi_agrees_with_rates_chart(s in 0.001f64..0.999, t in 1e-3f64..1e3, a0 in 0.1f64..10.0, a1 in 0.1f64..10.0) {
            let (u, v) = xi(s, t, a0, a1);
            let (u2, _) = xi(s, 2.0 * t + 1.0, a0, a1);
            prop_assert_eq!(u, u2);
            let c = rates_to_uv(&JumpRates::new(s * t, (1.0 - s) * t).unwrap(), w(a0, a1));
            prop_assert!((c.u - u).abs() <= 1e-14);
            prop_assert!((c.v - v).abs() <= 1e-14 * v);
            prop_assert!((s_of_u(u, a0, a1) - s).abs() <= 1e-13);
        }

        #[test]
        fn convert_u_matches_rechart(u in 0.001f64..0.999, v in 1e-3f64..1e3,
                                     a0 in 0.1f64..10.0, a1 in 0.1f64..10.0,
                                     b0 in 0.1f64..10.0, b1 in 0.1f64..10.0) {
            let from = w(a0, a1);
            let to = w(b0, b1);
            let c = UVCoords::new(u, v, from).unwrap().rechart(to).unwrap();
            prop_assert!((convert_u(u, from, to) - c.u).abs() <= 1e-14);
        }
    }
}
