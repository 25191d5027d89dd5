//! Expectations against the Beta law `Beta(u v, (1-u) v)`.
//!
//! The stationary law of the resident's reciprocal `1/X` is the pushforward of
//! a Beta variable by `y -> a0 + (a1 - a0) y`, so every invasion rate reduces
//! to the moments `E[U]` and `E[1 / (a0 + (a1 - a0) U)]`. The first is `u`;
//! the second is a Gauss hypergeometric value computed here by its positive
//! power series. [`QuadRule`] gives an independent Gauss-Jacobi route.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape parameters `(u v, (1-u) v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub shape1: f64,
    pub shape2: f64,
}

impl BetaParams {
    pub fn new(shape1: f64, shape2: f64) -> Result<Self> {
        if !(shape1.is_finite() && shape1 > 0.0 && shape2.is_finite() && shape2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Beta shapes must be finite and > 0, got ({shape1}, {shape2})"
            )));
        }
        Ok(BetaParams { shape1, shape2 })
    }

    pub fn from_uv(u: f64, v: f64) -> Result<Self> {
        if !(u > 0.0 && u < 1.0 && v > 0.0 && v.is_finite()) {
            return Err(Error::ChartBoundary { u, v });
        }
        BetaParams::new(u * v, (1.0 - u) * v)
    }

    pub fn total(&self) -> f64 {
        self.shape1 + self.shape2
    }

    pub fn mean(&self) -> f64 {
        self.shape1 / self.total()
    }

    /// `E[U^k]`.
    pub fn raw_moment(&self, k: u32) -> f64 {
        let v = self.total();
        (0..k).fold(1.0, |m, j| m * (self.shape1 + j as f64) / (v + j as f64))
    }
}

const SERIES_MAX_TERMS: usize = 20_000_000;

/// `E[1 / (a0 + (a1 - a0) U)]` for `U ~ Beta(shape1, shape2)` and `a0, a1 > 0`.
///
/// With `M = max(a0, a1)`, `m = min(a0, a1)` and `r = 1 - m/M`, write the
/// denominator as `M (1 - r V)` where `V` is `U` or `1 - U`, whichever puts
/// the smaller coefficient at `V = 1`. Then
/// `E[1/(M (1 - r V))] = (1/M) sum_n r^n E[V^n]`, a series of positive terms
/// whose ratios increase towards `r`, so the tail after term `t_n` is at most
/// `t_n r / (1 - r)`.
pub fn reciprocal_mean(a0: f64, a1: f64, beta: &BetaParams) -> Result<f64> {
    if a0 == a1 {
        return Ok(1.0 / a0);
    }
    let (low, high, shape_v) = if a1 > a0 {
        (a0, a1, beta.shape2)
    } else {
        (a1, a0, beta.shape1)
    };
    let r = (high - low) / high;
    let tail = r / (1.0 - r);
    let v = beta.total();
    let mut sum = 1.0;
    let mut term = 1.0;
    for n in 0..SERIES_MAX_TERMS {
        let n = n as f64;
        term *= r * (shape_v + n) / (v + n);
        sum += term;
        if term * tail <= 1e-17 * sum {
            return Ok(sum / high);
        }
    }
    Err(Error::InternalContract(format!(
        "reciprocal series did not converge (coefficient ratio {})",
        high / low
    )))
}

/// Gauss-Jacobi rule for the normalized `Beta(shape1, shape2)` density on `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    /// Golub-Welsch: eigen-decomposition of the Jacobi matrix of the monic
    /// Jacobi polynomials with exponents `(shape2 - 1, shape1 - 1)` on
    /// `[-1, 1]`, mapped to `(0, 1)`. Exact for polynomials of degree
    /// `< 2 order`.
    pub fn gauss_jacobi(beta: &BetaParams, order: usize) -> Result<QuadRule> {
        if order == 0 {
            return Err(Error::InvalidParameter("quadrature order must be >= 1".into()));
        }
        let (p, q) = (beta.shape1, beta.shape2);
        let v = p + q;
        let mut jac = DMatrix::<f64>::zeros(order, order);
        for n in 0..order {
            let nf = n as f64;
            jac[(n, n)] = if n == 0 {
                (p - q) / v
            } else {
                (p - q) * (v - 2.0) / ((2.0 * nf + v - 2.0) * (2.0 * nf + v))
            };
            if n + 1 < order {
                let k = nf + 1.0;
                let b2 = if n == 0 {
                    4.0 * p * q / (v * v * (v + 1.0))
                } else {
                    let s = 2.0 * k + v - 2.0;
                    4.0 * k * (k + q - 1.0) * (k + p - 1.0) * (k + v - 2.0)
                        / (s * s * (s + 1.0) * (s - 1.0))
                };
                let b = b2.sqrt();
                jac[(n, n + 1)] = b;
                jac[(n + 1, n)] = b;
            }
        }
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|i| {
                let t = eig.eigenvalues[i];
                let w0 = eig.eigenvectors[(0, i)];
                (0.5 * (t + 1.0), w0 * w0)
            })
            .collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Ok(QuadRule {
            order,
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        })
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&y, &w)| w * f(y))
            .sum()
    }
}
