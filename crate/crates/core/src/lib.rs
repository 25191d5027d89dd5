//! Randomly switched two-species Lotka-Volterra competition.
//!
//! The process alternates between two competition environments at
//! exponential times. Whether each species persists is decided by the signs
//! of two invasion rates, which this crate computes in closed form
//! ([`invasion`]), turns into critical curves in the jump-rate plane
//! ([`curves`]) and regime maps ([`regimes`]), and cross-checks against a
//! Monte Carlo simulator of the full process ([`sim`]).

pub mod coords;
pub mod curves;
pub mod env;
pub mod error;
pub mod invasion;
pub mod regimes;
pub mod sim;

pub use coords::{rates_to_uv, uv_to_rates, xi, ChartWeights, JumpRates, STCoords, UVCoords};
pub use env::{classify, mix, vector_field, EnvPair, EnvType, Environment};
pub use error::{Error, Result};
pub use regimes::{catalog, classify_regime, CatalogEntry, GridSpec, RegimeLabel, RegimeMap};
pub use sim::{ErgodicStats, SimConfig, Trajectory};

/// Which species an invasion rate or critical curve refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    X,
    Y,
}

impl Species {
    pub fn name(&self) -> &'static str {
        match self {
            Species::X => "x",
            Species::Y => "y",
        }
    }
}

impl std::str::FromStr for Species {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Species::X),
            "y" | "Y" => Ok(Species::Y),
            other => Err(Error::InvalidParameter(format!("unknown species {other:?}"))),
        }
    }
}

/// Decimal text of `x` with 17 significant digits, the form used by every
/// CSV export.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}
