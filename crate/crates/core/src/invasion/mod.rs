//! Closed-form invasion rates.
//!
//! While species y is rare, species x follows the switched logistic
//! `X' = alpha_I X (1 - a_I X)`. With `W = (1/X - a0) / (a1 - a0)` the flow is
//! linear in each mode and the stationary law of `(W, I)` is explicit:
//! `W` has density proportional to
//! `w^(uv - 1) (1 - w)^((1-u)v - 1) ((1-w)/alpha0 + w/alpha1)` in the chart
//! weighted by `(alpha0, alpha1)`. Integrating `beta_i (1 - c_i x)` against it gives
//!
//! ```text
//! Lambda_y(u, v) = E[phi(U)] / (|a1 - a0| ((1-u)/alpha0 + u/alpha1)),   U ~ Beta(uv, (1-u)v)
//! phi(y) = z P(1/z),   z = a0 + (a1 - a0) y
//! P(x) = (beta1/alpha1 (1 - c1 x)(1 - a0 x) - beta0/alpha0 (1 - c0 x)(1 - a1 x)) sign(a1 - a0)
//! ```
//!
//! `phi(y) = P0 z + P1 + P2 / z` is not a polynomial in `y`: its curvature
//! is that of `P2 / z`, so the sign of the leading coefficient `P2` of `P`
//! decides whether `phi` is concave or convex and whether `Lambda_y` grows or
//! shrinks with `v`.
//!
//! The x invasion rate is the y invasion rate of the species-swapped pair,
//! taken in the chart weighted by `(beta0, beta1)`.

mod beta;

pub use beta::{reciprocal_mean, BetaParams, QuadRule};

use serde::{Deserialize, Serialize};

use crate::coords::{rates_to_uv, s_of_u, ChartWeights, JumpRates, UVCoords};
use crate::env::{EnvPair, Environment};
use crate::error::{Error, Result};

/// Absolute tolerance for comparisons against zero in sign logic.
pub const SIGN_TOL: f64 = 1e-12;

/// Sign with a dead band: `0` when `|x| <= SIGN_TOL`.
pub fn sign_of(x: f64) -> i8 {
    if x > SIGN_TOL {
        1
    } else if x < -SIGN_TOL {
        -1
    } else {
        0
    }
}

/// `c2 x^2 + c1 x + c0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadratic {
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl Quadratic {
    pub fn eval(&self, x: f64) -> f64 {
        (self.c2 * x + self.c1) * x + self.c0
    }

    pub fn discriminant(&self) -> f64 {
        self.c1 * self.c1 - 4.0 * self.c2 * self.c0
    }

    /// Real roots in increasing order (one root if the polynomial is linear).
    pub fn real_roots(&self) -> Vec<f64> {
        let Quadratic { c2, c1, c0 } = *self;
        let scale = c2.abs().max(c1.abs()).max(c0.abs());
        if scale == 0.0 {
            return vec![];
        }
        if c2.abs() <= 1e-14 * scale {
            return if c1 == 0.0 { vec![] } else { vec![-c0 / c1] };
        }
        let disc = self.discriminant();
        if disc < 0.0 {
            return vec![];
        }
        let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
        let mut roots = if q == 0.0 {
            vec![0.0, 0.0]
        } else {
            vec![q / c2, c0 / q]
        };
        roots.sort_by(f64::total_cmp);
        roots
    }
}

fn require_distinct_a(pair: &EnvPair) -> Result<()> {
    if pair.a0_ne_a1() {
        Ok(())
    } else {
        Err(Error::DegenerateLogistic("a0 = a1"))
    }
}

/// Expanded coefficients of `P`, including the factor `sign(a1 - a0)`.
pub fn poly_p(pair: &EnvPair) -> Result<Quadratic> {
    require_distinct_a(pair)?;
    let (e0, e1) = (pair.env0(), pair.env1());
    let k0 = e0.beta() / e0.alpha();
    let k1 = e1.beta() / e1.alpha();
    let sign = (e1.a() - e0.a()).signum();
    Ok(Quadratic {
        c2: sign * (k1 * e1.c() * e0.a() - k0 * e0.c() * e1.a()),
        c1: sign * (k0 * (e0.c() + e1.a()) - k1 * (e1.c() + e0.a())),
        c0: sign * (k1 - k0),
    })
}

/// Degree-2 coefficient of `P`; its sign sets the shape of the critical curve.
pub fn coefficient_a(pair: &EnvPair) -> Result<f64> {
    poly_p(pair).map(|p| p.c2)
}

/// `phi(y) = z P(1/z)` with `z = a0 + (a1 - a0) y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phi {
    pub p: Quadratic,
    pub a0: f64,
    pub a1: f64,
}

impl Phi {
    pub fn new(pair: &EnvPair) -> Result<Phi> {
        Ok(Phi {
            p: poly_p(pair)?,
            a0: pair.env0().a(),
            a1: pair.env1().a(),
        })
    }

    pub fn eval(&self, y: f64) -> f64 {
        let z = self.a0 + (self.a1 - self.a0) * y;
        self.p.c0 * z + self.p.c1 + self.p.c2 / z
    }

    /// `E[phi(U)]` from the exact mean of `z` and the series for `E[1/z]`.
    pub fn expectation(&self, beta: &BetaParams) -> Result<f64> {
        let mean_z = self.a0 + (self.a1 - self.a0) * beta.mean();
        let mean_inv = reciprocal_mean(self.a0, self.a1, beta)?;
        Ok(self.p.c0 * mean_z + self.p.c1 + self.p.c2 * mean_inv)
    }
}

pub fn phi(pair: &EnvPair, y: f64) -> Result<f64> {
    Ok(Phi::new(pair)?.eval(y))
}

/// `E[phi(U)]` with `U ~ Beta(uv, (1-u)v)`.
pub fn expected_phi(pair: &EnvPair, u: f64, v: f64) -> Result<f64> {
    Phi::new(pair)?.expectation(&BetaParams::from_uv(u, v)?)
}

/// Same expectation by Gauss-Jacobi quadrature of the given order.
pub fn expected_phi_quadrature(pair: &EnvPair, u: f64, v: f64, order: usize) -> Result<f64> {
    if order < 2 {
        return Err(Error::InvalidParameter("quadrature order must be >= 2".into()));
    }
    let phi = Phi::new(pair)?;
    let rule = QuadRule::gauss_jacobi(&BetaParams::from_uv(u, v)?, order)?;
    Ok(rule.integrate(|y| phi.eval(y)))
}

/// `(1-u)/w0 + u/w1`: inverse of the mean growth rate along the chart.
fn chart_denominator(u: f64, w0: f64, w1: f64) -> f64 {
    (1.0 - u) / w0 + u / w1
}

/// Invasion rate of species y at `(u, v)` of the `(alpha0, alpha1)` chart.
pub fn lambda_y(pair: &EnvPair, u: f64, v: f64) -> Result<f64> {
    let e = expected_phi(pair, u, v)?;
    Ok(e / lambda_y_scale(pair, u))
}

/// Positive factor with `lambda_y = expected_phi / scale`.
pub fn lambda_y_scale(pair: &EnvPair, u: f64) -> f64 {
    let (e0, e1) = (pair.env0(), pair.env1());
    (e1.a() - e0.a()).abs() * chart_denominator(u, e0.alpha(), e1.alpha())
}

/// [`lambda_y`] with a chart guard: `coords` must be in the `(alpha0, alpha1)` chart.
pub fn lambda_y_at(pair: &EnvPair, coords: &UVCoords) -> Result<f64> {
    coords.weights.check(&ChartWeights::alpha(pair))?;
    lambda_y(pair, coords.u, coords.v)
}

pub fn lambda_y_rates(pair: &EnvPair, rates: &JumpRates) -> Result<f64> {
    let c = rates_to_uv(rates, ChartWeights::alpha(pair));
    lambda_y(pair, c.u, c.v)
}

fn require_distinct_d(pair: &EnvPair) -> Result<()> {
    if pair.env0().d() != pair.env1().d() {
        Ok(())
    } else {
        Err(Error::DegenerateLogistic("d0 = d1"))
    }
}

/// Invasion rate of species x for raw jump rates.
pub fn lambda_x(pair: &EnvPair, rates: &JumpRates) -> Result<f64> {
    let c = rates_to_uv(rates, ChartWeights::beta(pair));
    lambda_x_uv(pair, c.u, c.v)
}

/// Invasion rate of species x at `(u, v)` of its native `(beta0, beta1)` chart.
pub fn lambda_x_uv(pair: &EnvPair, u: f64, v: f64) -> Result<f64> {
    require_distinct_d(pair)?;
    lambda_y(&pair.swapped(), u, v)
}

/// [`lambda_x_uv`] with a chart guard: `coords` must be in the `(beta0, beta1)` chart.
pub fn lambda_x_at(pair: &EnvPair, coords: &UVCoords) -> Result<f64> {
    coords.weights.check(&ChartWeights::beta(pair))?;
    lambda_x_uv(pair, coords.u, coords.v)
}

pub fn swap_species(env: &Environment) -> Environment {
    env.swap_species()
}

/// `lim_{v -> inf} Lambda_y(u, v) = beta_s (1 - c_s / a_s)` for the mixed
/// environment at `s = u alpha0 / (u alpha0 + (1-u) alpha1)`.
pub fn limit_v_inf(pair: &EnvPair, u: f64) -> f64 {
    let s = s_of_u(u, pair.env0().alpha(), pair.env1().alpha());
    let m = pair.mix(s);
    m.beta() * (1.0 - m.c() / m.a())
}

/// Coefficients `(g0, g1)` of `g(u) = (g1 - g0) u + g0`, with
/// `g_i = beta_i / alpha_i (1 - c_i / a_i)`.
fn slow_switching_line(pair: &EnvPair) -> (f64, f64) {
    let g = |e: &Environment| e.beta() / e.alpha() * (1.0 - e.c() / e.a());
    (g(pair.env0()), g(pair.env1()))
}

/// `lim_{v -> 0} Lambda_y(u, v) = g(u) / ((1-u)/alpha0 + u/alpha1)`.
pub fn limit_v_zero(pair: &EnvPair, u: f64) -> f64 {
    let (g0, g1) = slow_switching_line(pair);
    ((g1 - g0) * u + g0) / chart_denominator(u, pair.env0().alpha(), pair.env1().alpha())
}

/// Closed subinterval `[lo, hi]` of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, u: f64) -> bool {
        self.lo <= u && u <= self.hi
    }
}

/// Thresholds in `u` for the y invasion rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdAnalysis {
    /// `R = beta0 alpha1 / (alpha0 beta1)`.
    pub r: f64,
    /// `T(u) = A u^2 + B u + C` (fields `c2, c1, c0`), with
    /// `c_s - a_s = T(u) / (R (1-u) + u)`.
    pub t_poly: Quadratic,
    pub discriminant: f64,
    /// `{u in [0,1] : T(u) < 0}`, where the fast-switching limit is positive.
    pub t_negative: Vec<Interval>,
    /// Boundary points of `t_negative` inside `(0, 1)`.
    pub alpha: Vec<f64>,
    /// `(-B - sqrt(B^2 - 4AC)) / (2A)` when it is defined.
    pub alpha_formula: Option<f64>,
    /// Zero of the slow-switching limit, when it changes sign on `[0, 1]`.
    pub alpha_bar: Option<f64>,
    /// Degree-2 coefficient of `P`; `None` when `a0 = a1`.
    pub coeff_a: Option<f64>,
}

impl ThresholdAnalysis {
    /// The unique boundary point, if there is exactly one.
    pub fn single_alpha(&self) -> Option<f64> {
        match self.alpha.as_slice() {
            &[a] => Some(a),
            _ => None,
        }
    }

    /// Complement of `t_negative` in `[0, 1]`.
    pub fn t_nonnegative(&self) -> Vec<Interval> {
        let mut out = Vec::new();
        let mut cursor = 0.0;
        for iv in &self.t_negative {
            if iv.lo > cursor {
                out.push(Interval { lo: cursor, hi: iv.lo });
            }
            cursor = iv.hi;
        }
        if cursor < 1.0 {
            out.push(Interval { lo: cursor, hi: 1.0 });
        }
        out
    }
}

pub fn threshold_analysis(pair: &EnvPair) -> ThresholdAnalysis {
    let (e0, e1) = (pair.env0(), pair.env1());
    let r = e0.beta() * e1.alpha() / (e0.alpha() * e1.beta());
    let (a0, a1, c0, c1) = (e0.a(), e1.a(), e0.c(), e1.c());
    let t_poly = Quadratic {
        c2: (a1 - a0) * (r - 1.0),
        c1: (2.0 * a0 - c0 - a1) * r + (c1 - a0),
        c0: (c0 - a0) * r,
    };
    let discriminant = t_poly.discriminant();

    let mut cuts = vec![0.0];
    cuts.extend(t_poly.real_roots().into_iter().filter(|&x| x > 0.0 && x < 1.0));
    cuts.push(1.0);
    let mut t_negative: Vec<Interval> = Vec::new();
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        if t_poly.eval(0.5 * (w[0] + w[1])) < 0.0 {
            match t_negative.last_mut() {
                Some(last) if last.hi == w[0] => last.hi = w[1],
                _ => t_negative.push(Interval { lo: w[0], hi: w[1] }),
            }
        }
    }
    let alpha = t_negative
        .iter()
        .flat_map(|iv| [iv.lo, iv.hi])
        .filter(|&x| x > 0.0 && x < 1.0)
        .collect();

    let alpha_formula = (t_poly.c2 != 0.0 && discriminant >= 0.0)
        .then(|| (-t_poly.c1 - discriminant.sqrt()) / (2.0 * t_poly.c2));

    let (g0, g1) = slow_switching_line(pair);
    let alpha_bar = (sign_of(g0) * sign_of(g1) < 0).then(|| g0 / (g0 - g1));

    ThresholdAnalysis {
        r,
        t_poly,
        discriminant,
        t_negative,
        alpha,
        alpha_formula,
        alpha_bar,
        coeff_a: coefficient_a(pair).ok(),
    }
}
