//! Single competition environments and pairs of them.
//!
//! An [`Environment`] holds the six positive parameters of
//!
//! ```text
//! x' = alpha x (1 - a x - b y)
//! y' = beta  y (1 - c x - d y)
//! ```
//!
//! and an [`EnvPair`] is the ordered couple the switching process alternates
//! between.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One Lotka-Volterra competition environment `(a, b, c, d, alpha, beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEnvironment")]
pub struct Environment {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    alpha: f64,
    beta: f64,
}

#[derive(Deserialize)]
struct RawEnvironment {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawEnvironment> for Environment {
    type Error = Error;

    fn try_from(r: RawEnvironment) -> Result<Self> {
        Environment::new(r.a, r.b, r.c, r.d, r.alpha, r.beta)
    }
}

impl Environment {
    /// Builds an environment; every parameter must be finite and strictly positive.
    pub fn new(a: f64, b: f64, c: f64, d: f64, alpha: f64, beta: f64) -> Result<Self> {
        for (name, value) in [
            ("a", a),
            ("b", b),
            ("c", c),
            ("d", d),
            ("alpha", alpha),
            ("beta", beta),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "environment field {name} must be finite and > 0, got {value}"
                )));
            }
        }
        Ok(Environment {
            a,
            b,
            c,
            d,
            alpha,
            beta,
        })
    }

    /// Builds an environment from a slice in field order `a, b, c, d, alpha, beta`.
    pub fn from_slice(values: &[f64]) -> Result<Self> {
        match values {
            &[a, b, c, d, alpha, beta] => Environment::new(a, b, c, d, alpha, beta),
            _ => Err(Error::InvalidParameter(format!(
                "an environment needs 6 values (a,b,c,d,alpha,beta), got {}",
                values.len()
            ))),
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Parameters in field order `a, b, c, d, alpha, beta`.
    pub fn to_array(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.alpha, self.beta]
    }

    pub fn classify(&self) -> EnvType {
        classify(self)
    }

    /// Evaluates the competition vector field at `(x, y)`.
    pub fn vector_field(&self, x: f64, y: f64) -> (f64, f64) {
        vector_field(self, x, y)
    }

    /// Relabels the species: the returned environment drives `y` the way
    /// `self` drives `x` and vice versa.
    ///
    /// `(a, b, c, d, alpha, beta) -> (d, c, b, a, beta, alpha)`.
    pub fn swap_species(&self) -> Environment {
        Environment {
            a: self.d,
            b: self.c,
            c: self.b,
            d: self.a,
            alpha: self.beta,
            beta: self.alpha,
        }
    }
}

/// Competitive configuration of an environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnvType {
    /// `a < c`, `b < d`: favorable to species x.
    Type1,
    /// `a > c`, `b > d`: favorable to species y.
    Type2,
    /// `a > c`, `b < d`: both species persist.
    Type3,
    /// `a < c`, `b > d`: bistable, the winner depends on the start.
    Type4,
    /// `a == c` or `b == d`.
    Degenerate,
}

impl EnvType {
    pub fn name(&self) -> &'static str {
        match self {
            EnvType::Type1 => "Type1",
            EnvType::Type2 => "Type2",
            EnvType::Type3 => "Type3",
            EnvType::Type4 => "Type4",
            EnvType::Degenerate => "Degenerate",
        }
    }

    /// Image of the type under [`Environment::swap_species`].
    pub fn swapped(&self) -> EnvType {
        match self {
            EnvType::Type1 => EnvType::Type2,
            EnvType::Type2 => EnvType::Type1,
            other => *other,
        }
    }
}

impl std::fmt::Display for EnvType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Exact comparison of the stored coefficients.
pub fn classify(env: &Environment) -> EnvType {
    use std::cmp::Ordering::*;
    match (env.a.partial_cmp(&env.c), env.b.partial_cmp(&env.d)) {
        (Some(Less), Some(Less)) => EnvType::Type1,
        (Some(Greater), Some(Greater)) => EnvType::Type2,
        (Some(Greater), Some(Less)) => EnvType::Type3,
        (Some(Less), Some(Greater)) => EnvType::Type4,
        _ => EnvType::Degenerate,
    }
}

pub fn vector_field(env: &Environment, x: f64, y: f64) -> (f64, f64) {
    (
        env.alpha * x * (1.0 - env.a * x - env.b * y),
        env.beta * y * (1.0 - env.c * x - env.d * y),
    )
}

/// Ordered couple of environments `(env0, env1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawPair")]
pub struct EnvPair {
    env0: Environment,
    env1: Environment,
    #[serde(skip)]
    a0_ne_a1: bool,
}

#[derive(Deserialize)]
struct RawPair {
    env0: Environment,
    env1: Environment,
}

impl From<RawPair> for EnvPair {
    fn from(r: RawPair) -> Self {
        EnvPair::new(r.env0, r.env1)
    }
}

impl EnvPair {
    pub fn new(env0: Environment, env1: Environment) -> Self {
        EnvPair {
            env0,
            env1,
            a0_ne_a1: env0.a != env1.a,
        }
    }

    pub fn env0(&self) -> &Environment {
        &self.env0
    }
    pub fn env1(&self) -> &Environment {
        &self.env1
    }

    /// Environment `i` in {0, 1}.
    pub fn env(&self, i: usize) -> &Environment {
        if i == 0 {
            &self.env0
        } else {
            &self.env1
        }
    }

    /// Whether the closed form for the y invasion rate is available.
    pub fn a0_ne_a1(&self) -> bool {
        self.a0_ne_a1
    }

    /// Convex mixture `eps_s`, whose vector field is `(1-s) F_0 + s F_1`.
    pub fn mix(&self, s: f64) -> Environment {
        mix(self, s)
    }

    /// Both environments with species relabeled.
    pub fn swapped(&self) -> EnvPair {
        EnvPair::new(self.env0.swap_species(), self.env1.swap_species())
    }

    /// Same pair with a different `d1` (used by the rho family of environments).
    pub fn with_d1(&self, d1: f64) -> Result<EnvPair> {
        let e = self.env1;
        Ok(EnvPair::new(
            self.env0,
            Environment::new(e.a, e.b, e.c, d1, e.alpha, e.beta)?,
        ))
    }
}

/// Mixed environment `eps_s` for `s` in `[0, 1]`.
///
/// `alpha_s`, `beta_s` are the convex combinations of the growth rates and the
/// competition coefficients are growth-rate weighted averages, so the mixed
/// vector field equals `(1-s) F_0 + s F_1`. The endpoints return the stored
/// environments unchanged.
pub fn mix(pair: &EnvPair, s: f64) -> Environment {
    debug_assert!((0.0..=1.0).contains(&s), "mixing weight {s} outside [0, 1]");
    if s == 0.0 {
        return pair.env0;
    }
    if s == 1.0 {
        return pair.env1;
    }
    let (e0, e1) = (&pair.env0, &pair.env1);
    let w0 = 1.0 - s;
    let alpha = s * e1.alpha + w0 * e0.alpha;
    let beta = s * e1.beta + w0 * e0.beta;
    let wa = |v1: f64, v0: f64| (s * e1.alpha * v1 + w0 * e0.alpha * v0) / alpha;
    let wb = |v1: f64, v0: f64| (s * e1.beta * v1 + w0 * e0.beta * v0) / beta;
    Environment {
        a: wa(e1.a, e0.a),
        b: wa(e1.b, e0.b),
        c: wb(e1.c, e0.c),
        d: wb(e1.d, e0.d),
        alpha,
        beta,
    }
}
