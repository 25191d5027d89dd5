//! Regime classification from the signs of the two invasion rates, regime
//! maps over the `(u, v)` plane and the reference environment catalog.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coords::{ChartWeights, JumpRates, UVCoords};
use crate::env::{EnvPair, EnvType, Environment};
use crate::error::{Error, Result};
use crate::invasion::{lambda_x, lambda_y};
use crate::sim::{estimate_lambda, min_t_max, RegimeVotes, SimConfig};
use crate::{format_real, Species};

/// Default absolute sign band of map classification.
pub const DEFAULT_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeLabel {
    Persistence,
    ExtinctionY,
    ExtinctionX,
    RandomExtinction,
    Boundary,
}

impl RegimeLabel {
    pub const ALL: [RegimeLabel; 4] = [
        RegimeLabel::Persistence,
        RegimeLabel::ExtinctionY,
        RegimeLabel::ExtinctionX,
        RegimeLabel::RandomExtinction,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RegimeLabel::Persistence => "persistence",
            RegimeLabel::ExtinctionY => "extinction_y",
            RegimeLabel::ExtinctionX => "extinction_x",
            RegimeLabel::RandomExtinction => "random_extinction",
            RegimeLabel::Boundary => "boundary",
        }
    }
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegimeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RegimeLabel::ALL
            .into_iter()
            .chain([RegimeLabel::Boundary])
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown regime label {s:?}")))
    }
}

/// Regime of the sign pair `(lx, ly)`; either rate within `band` of zero
/// gives [`RegimeLabel::Boundary`].
pub fn classify_regime(lx: f64, ly: f64, band: f64) -> RegimeLabel {
    classify_regime_banded(lx, ly, band, band)
}

/// [`classify_regime`] with a separate band for each rate.
pub fn classify_regime_banded(lx: f64, ly: f64, band_x: f64, band_y: f64) -> RegimeLabel {
    if lx.abs() <= band_x || ly.abs() <= band_y {
        return RegimeLabel::Boundary;
    }
    match (lx > 0.0, ly > 0.0) {
        (true, true) => RegimeLabel::Persistence,
        (true, false) => RegimeLabel::ExtinctionY,
        (false, true) => RegimeLabel::ExtinctionX,
        (false, false) => RegimeLabel::RandomExtinction,
    }
}

/// Interior `u` grid and log-spaced `v` grid of a regime map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nu: usize,
    pub nv: usize,
    pub v_min: f64,
    pub v_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            nu: 200,
            nv: 200,
            v_min: 1e-2,
            v_max: 1e3,
        }
    }
}

impl GridSpec {
    pub fn new(nu: usize, nv: usize, v_min: f64, v_max: f64) -> Result<Self> {
        if nu == 0 || nv < 2 || !(v_min > 0.0 && v_min < v_max && v_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid needs nu >= 1, nv >= 2 and 0 < v_min < v_max, got {nu}x{nv} on [{v_min}, {v_max}]"
            )));
        }
        Ok(GridSpec { nu, nv, v_min, v_max })
    }

    /// `k / (nu + 1)` for `k = 1..=nu`.
    pub fn u_grid(&self) -> Vec<f64> {
        crate::curves::interior_grid(self.nu)
    }

    pub fn v_grid(&self) -> Vec<f64> {
        let (l0, l1) = (self.v_min.log10(), self.v_max.log10());
        let n = self.nv - 1;
        (0..=n)
            .map(|j| match j {
                0 => self.v_min,
                j if j == n => self.v_max,
                j => 10f64.powf(l0 + (l1 - l0) * j as f64 / n as f64),
            })
            .collect()
    }
}

/// Settings of the Monte Carlo fallback used when a closed form is missing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McFallback {
    /// Lower bound on the simulated time; raised per cell to the mixing requirement.
    pub t_max: f64,
    pub seed: u64,
}

impl Default for McFallback {
    fn default() -> Self {
        McFallback { t_max: 1e4, seed: 1 }
    }
}

/// Labels and rates on a grid of the plotting chart `(alpha0, alpha1)`.
/// Matrices are indexed `[i][j]` with `i` along `u_grid` and `j` along `v_grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeMap {
    pub u_grid: Vec<f64>,
    pub v_grid: Vec<f64>,
    pub labels: Vec<Vec<RegimeLabel>>,
    pub lambda_x: Vec<Vec<f64>>,
    pub lambda_y: Vec<Vec<f64>>,
    pub band: f64,
    pub chart_weights: ChartWeights,
    /// True when some rate came from simulation.
    pub monte_carlo: bool,
}

impl RegimeMap {
    /// Labels present in the map, `Boundary` excluded.
    pub fn regimes(&self) -> BTreeSet<RegimeLabel> {
        self.labels
            .iter()
            .flatten()
            .copied()
            .filter(|l| *l != RegimeLabel::Boundary)
            .collect()
    }

    /// CSV `u,v,label`, one row per cell, `u` outer.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,v,label\n");
        for (i, u) in self.u_grid.iter().enumerate() {
            for (j, v) in self.v_grid.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", format_real(*u), format_real(*v), self.labels[i][j]));
            }
        }
        out
    }
}

struct CellRates {
    lx: f64,
    ly: f64,
    band_x: f64,
    band_y: f64,
}

fn mc_rate(pair: &EnvPair, rates: &JumpRates, species: Species, mc: &McFallback, cell: u64) -> Result<(f64, f64)> {
    let t_max = mc.t_max.max(min_t_max(rates));
    let cfg = SimConfig::new(pair, t_max, mc.seed ^ cell);
    let stats = estimate_lambda(pair, rates, species, &cfg)?;
    Ok((stats.estimate, 3.0 * stats.std_error))
}

fn cell_rates(pair: &EnvPair, u: f64, v: f64, band: f64, mc: Option<&McFallback>, cell: u64) -> Result<CellRates> {
    let rates = UVCoords::new(u, v, ChartWeights::alpha(pair))?.to_rates()?;
    let closed_y = pair.a0_ne_a1();
    let closed_x = pair.env0().d() != pair.env1().d();
    let missing = || Error::DegenerateLogistic(if closed_y { "d0 = d1" } else { "a0 = a1" });
    let (ly, band_y) = if closed_y {
        (lambda_y(pair, u, v)?, band)
    } else {
        mc_rate(pair, &rates, Species::Y, mc.ok_or_else(missing)?, cell)?
    };
    let (lx, band_x) = if closed_x {
        (lambda_x(pair, &rates)?, band)
    } else {
        mc_rate(pair, &rates, Species::X, mc.ok_or_else(missing)?, cell)?
    };
    Ok(CellRates { lx, ly, band_x, band_y })
}

/// Evaluates both invasion rates at every cell and classifies. A degenerate
/// pair (`a0 = a1` or `d0 = d1`) needs `mc`; its simulated rates are
/// classified with a band of three standard errors.
pub fn regime_map(
    pair: &EnvPair,
    u_grid: &[f64],
    v_grid: &[f64],
    band: f64,
    mc: Option<&McFallback>,
) -> Result<RegimeMap> {
    if !(band >= 0.0) {
        return Err(Error::InvalidParameter(format!("band must be >= 0, got {band}")));
    }
    let nv = v_grid.len();
    let cells = (0..u_grid.len() * nv)
        .into_par_iter()
        .map(|k| cell_rates(pair, u_grid[k / nv], v_grid[k % nv], band, mc, k as u64))
        .collect::<Result<Vec<_>>>()?;
    let rows = |f: &dyn Fn(&CellRates) -> f64| -> Vec<Vec<f64>> {
        cells.chunks(nv.max(1)).map(|r| r.iter().map(f).collect()).collect()
    };
    let labels = cells
        .chunks(nv.max(1))
        .map(|r| {
            r.iter()
                .map(|c| classify_regime_banded(c.lx, c.ly, c.band_x, c.band_y))
                .collect()
        })
        .collect();
    Ok(RegimeMap {
        u_grid: u_grid.to_vec(),
        v_grid: v_grid.to_vec(),
        labels,
        lambda_x: rows(&|c| c.lx),
        lambda_y: rows(&|c| c.ly),
        band,
        chart_weights: ChartWeights::alpha(pair),
        monte_carlo: !(pair.a0_ne_a1() && pair.env0().d() != pair.env1().d()),
    })
}

pub fn regime_map_on(pair: &EnvPair, grid: &GridSpec, band: f64, mc: Option<&McFallback>) -> Result<RegimeMap> {
    regime_map(pair, &grid.u_grid(), &grid.v_grid(), band, mc)
}

/// A named pair of the reference catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub pair: EnvPair,
}

impl CatalogEntry {
    /// Types advertised by the name, e.g. `(Type1, Type3)` for "Type 1-3".
    pub fn advertised_types(&self) -> Option<(EnvType, EnvType)> {
        let digits = self.name.strip_prefix("Type ")?;
        let (l, r) = digits.split_once('-')?;
        let ty = |s: &str| match s {
            "1" => Some(EnvType::Type1),
            "2" => Some(EnvType::Type2),
            "3" => Some(EnvType::Type3),
            "4" => Some(EnvType::Type4),
            _ => None,
        };
        Some((ty(l)?, ty(r)?))
    }

    /// File stem used for the shipped JSON copies, e.g. `paper-1-3`.
    pub fn file_stem(&self) -> String {
        format!("paper-{}", self.name.trim_start_matches("Type ").replace(' ', ""))
    }
}

const CATALOG: [(&str, [f64; 6], [f64; 6]); 7] = [
    ("Type 1-1", [1.0, 1.0, 2.0, 2.0, 1.0, 5.0], [3.0, 3.0, 4.0, 3.5, 5.0, 1.0]),
    ("Type 1-2", [1.0, 5.0, 2.0, 8.0, 3.0, 3.0], [2.0, 11.0, 1.0, 9.0, 2.0, 1.8]),
    ("Type 1-3", [1.0, 1.0, 3.5, 2.0, 1.0, 5.0], [5.0, 3.0, 4.0, 5.5, 5.0, 1.0]),
    ("Type 1-4", [1.0, 1.0, 2.0, 3.5, 1.0, 5.0], [3.0, 4.0, 4.0, 3.0, 5.0, 1.0]),
    ("Type 3-3", [6.0, 1.0, 4.0, 2.0, 1.0, 5.0], [3.0, 3.0, 2.0, 5.5, 5.0, 1.0]),
    ("Type 3-4", [6.0, 1.0, 4.0, 8.0, 1.0, 5.0], [3.0, 10.0, 4.0, 7.0, 5.0, 1.0]),
    ("Type 4-4", [2.0, 2.0, 1.0, 1.0, 5.0, 1.0], [7.0, 3.5, 4.0, 3.0, 1.0, 5.0]),
];

/// The seven reference pairs, one per combination of environment types.
pub fn catalog() -> Vec<CatalogEntry> {
    CATALOG
        .iter()
        .map(|(name, e0, e1)| CatalogEntry {
            name: name.to_string(),
            pair: EnvPair::new(
                Environment::from_slice(e0).expect("catalog entries are valid"),
                Environment::from_slice(e1).expect("catalog entries are valid"),
            ),
        })
        .collect()
}

pub fn catalog_entry(name: &str) -> Option<CatalogEntry> {
    let wanted = name.trim().to_ascii_lowercase();
    catalog()
        .into_iter()
        .find(|e| e.name.to_ascii_lowercase() == wanted || e.file_stem() == wanted)
}

/// Representative cell of one regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub label: RegimeLabel,
    pub u: f64,
    pub v: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda_x: f64,
    pub lambda_y: f64,
}

impl Witness {
    pub fn rates(&self) -> Result<JumpRates> {
        JumpRates::new(self.lambda0, self.lambda1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSet {
    pub witnesses: Vec<Witness>,
    /// All four regimes were found.
    pub success: bool,
}

impl WitnessSet {
    pub fn labels(&self) -> BTreeSet<RegimeLabel> {
        self.witnesses.iter().map(|w| w.label).collect()
    }
}

/// One witness per regime found in `map`: the cell maximizing
/// `min(|lambda_x|, |lambda_y|)` within the regime.
pub fn witnesses(map: &RegimeMap) -> Result<WitnessSet> {
    let mut best: Vec<Option<(f64, usize, usize)>> = vec![None; RegimeLabel::ALL.len()];
    for (i, row) in map.labels.iter().enumerate() {
        for (j, label) in row.iter().enumerate() {
            let Some(slot) = RegimeLabel::ALL.iter().position(|l| l == label) else {
                continue;
            };
            let score = map.lambda_x[i][j].abs().min(map.lambda_y[i][j].abs());
            if best[slot].is_none_or(|b| score > b.0) {
                best[slot] = Some((score, i, j));
            }
        }
    }
    let mut out = Vec::new();
    for (slot, b) in best.iter().enumerate() {
        if let Some((_, i, j)) = *b {
            let (u, v) = (map.u_grid[i], map.v_grid[j]);
            let rates = UVCoords::new(u, v, map.chart_weights)?.to_rates()?;
            out.push(Witness {
                label: RegimeLabel::ALL[slot],
                u,
                v,
                lambda0: rates.lambda0(),
                lambda1: rates.lambda1(),
                lambda_x: map.lambda_x[i][j],
                lambda_y: map.lambda_y[i][j],
            });
        }
    }
    let success = out.len() == RegimeLabel::ALL.len();
    Ok(WitnessSet { witnesses: out, success })
}

/// Scans the regime map of `grid` and returns one witness per regime found.
pub fn four_regime_search(pair: &EnvPair, grid: &GridSpec) -> Result<WitnessSet> {
    witnesses(&regime_map_on(pair, grid, DEFAULT_BAND, None)?)
}

/// Whether simulated votes confirm an analytic label: a single outcome needs
/// at least 90% of the votes, random extinction needs both extinctions in at
/// least 10% of the replicas each.
pub fn votes_confirm(votes: &RegimeVotes, label: RegimeLabel) -> bool {
    use crate::sim::Vote;
    if votes.inconclusive {
        return false;
    }
    match label {
        RegimeLabel::Persistence => votes.fraction(Vote::Persistence) >= 0.9,
        RegimeLabel::ExtinctionX => votes.fraction(Vote::ExtinctionX) >= 0.9,
        RegimeLabel::ExtinctionY => votes.fraction(Vote::ExtinctionY) >= 0.9,
        RegimeLabel::RandomExtinction => {
            votes.fraction(Vote::ExtinctionX) >= 0.1 && votes.fraction(Vote::ExtinctionY) >= 0.1
        }
        RegimeLabel::Boundary => false,
    }
}

/// Empirical label of a vote: random extinction when both extinctions reach
/// 10%, otherwise the most frequent outcome.
pub fn majority_label(votes: &RegimeVotes) -> RegimeLabel {
    use crate::sim::Vote;
    if votes.fraction(Vote::ExtinctionX) >= 0.1 && votes.fraction(Vote::ExtinctionY) >= 0.1 {
        return RegimeLabel::RandomExtinction;
    }
    let counts = [
        (votes.persistence, RegimeLabel::Persistence),
        (votes.extinction_x, RegimeLabel::ExtinctionX),
        (votes.extinction_y, RegimeLabel::ExtinctionY),
    ];
    counts.iter().max_by_key(|c| c.0).map(|c| c.1).unwrap_or(RegimeLabel::Boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::classify;

    fn rho_pair(rho: f64) -> EnvPair {
        let e = &catalog()[1].pair;
        e.with_d1(rho).unwrap()
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_regime(1.0, 1.0, 0.0), RegimeLabel::Persistence);
        assert_eq!(classify_regime(-0.5, -0.5, 0.0), RegimeLabel::RandomExtinction);
        assert_eq!(classify_regime(1e-13, 1.0, 1e-12), RegimeLabel::Boundary);
        assert_eq!(classify_regime(1.0, -1.0, 0.0), RegimeLabel::ExtinctionY);
        assert_eq!(classify_regime(-1.0, 1.0, 0.0), RegimeLabel::ExtinctionX);
        assert_eq!(classify_regime(0.0, 1.0, 0.0), RegimeLabel::Boundary);
    }

    #[test]
    fn labels_roundtrip_through_names() {
        for l in RegimeLabel::ALL.into_iter().chain([RegimeLabel::Boundary]) {
            assert_eq!(l.name().parse::<RegimeLabel>().unwrap(), l);
            let json = serde_json::to_string(&l).unwrap();
            assert_eq!(json, format!("\"{}\"", l.name()));
        }
    }

    #[test]
    fn catalog_is_literal() {
        let c = catalog();
        assert_eq!(c.len(), 7);
        assert_eq!(c[0].name, "Type 1-1");
        assert_eq!(c[0].pair.env0().to_array(), [1.0, 1.0, 2.0, 2.0, 1.0, 5.0]);
        assert_eq!(c[0].pair.env1().to_array(), [3.0, 3.0, 4.0, 3.5, 5.0, 1.0]);
        assert_eq!(c[5].name, "Type 3-4");
        assert_eq!(c[5].pair.env0().to_array(), [6.0, 1.0, 4.0, 8.0, 1.0, 5.0]);
        assert_eq!(c[5].pair.env1().to_array(), [3.0, 10.0, 4.0, 7.0, 5.0, 1.0]);
        assert_eq!(c[6].pair.env1().to_array(), [7.0, 3.5, 4.0, 3.0, 1.0, 5.0]);
        assert_eq!(c[2].file_stem(), "paper-1-3");
        assert_eq!(catalog_entry("paper-4-4").unwrap().name, "Type 4-4");
        assert_eq!(catalog_entry("type 3-3").unwrap().name, "Type 3-3");
    }

    #[test]
    fn catalog_types_are_consistent() {
        let mut mismatched = Vec::new();
        for e in catalog() {
            let (t0, t1) = e.advertised_types().unwrap();
            let got = (classify(e.pair.env0()), classify(e.pair.env1()));
            if got != (t0, t1) {
                mismatched.push((e.name.clone(), got));
            }
        }
        // the last row carries its published label, but both of its
        // environments satisfy a > c and b > d
        assert_eq!(mismatched, vec![("Type 4-4".to_string(), (EnvType::Type2, EnvType::Type2))]);
    }

    #[test]
    fn grid_spec() {
        let g = GridSpec::default();
        let v = g.v_grid();
        assert_eq!(v.len(), 200);
        assert_eq!((v[0], v[199]), (1e-2, 1e3));
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        let u = g.u_grid();
        assert!(u[0] > 0.0 && u[199] < 1.0);
        assert!(GridSpec::new(10, 1, 1.0, 2.0).is_err());
    }

    #[test]
    fn rho_sweep_on_coarse_grid() {
        let grid = GridSpec::new(100, 100, 1e-2, 1e3).unwrap();
        let m10 = regime_map_on(&rho_pair(10.0), &grid, DEFAULT_BAND, None).unwrap();
        assert_eq!(
            m10.regimes(),
            [RegimeLabel::Persistence, RegimeLabel::ExtinctionX, RegimeLabel::ExtinctionY].into()
        );
        let m9 = regime_map_on(&rho_pair(9.0), &grid, DEFAULT_BAND, None).unwrap();
        assert_eq!(m9.regimes().len(), 4);
        let w = witnesses(&m9).unwrap();
        assert!(w.success);
        assert!(!witnesses(&m10).unwrap().success);
    }

    #[test]
    fn witness_is_best_conditioned_cell() {
        let grid = GridSpec::new(40, 40, 1e-2, 1e3).unwrap();
        let m = regime_map_on(&rho_pair(9.0), &grid, DEFAULT_BAND, None).unwrap();
        let ws = witnesses(&m).unwrap();
        for w in &ws.witnesses {
            let score = w.lambda_x.abs().min(w.lambda_y.abs());
            for (i, row) in m.labels.iter().enumerate() {
                for (j, l) in row.iter().enumerate() {
                    if *l == w.label {
                        assert!(m.lambda_x[i][j].abs().min(m.lambda_y[i][j].abs()) <= score);
                    }
                }
            }
            let r = w.rates().unwrap();
            let c = crate::coords::rates_to_uv(&r, m.chart_weights);
            assert!((c.u - w.u).abs() < 1e-12 && (c.v - w.v).abs() < 1e-12 * w.v);
        }
    }

    #[test]
    fn single_environment_map_uses_simulation() {
        let e = catalog()[1].pair.env0().clone();
        let pair = EnvPair::new(e, e);
        assert!(regime_map(&pair, &[0.5], &[1.0], DEFAULT_BAND, None).is_err());
        let mc = McFallback { t_max: 500.0, seed: 3 };
        let m = regime_map(&pair, &[0.25, 0.5, 0.75], &[0.5, 5.0], DEFAULT_BAND, Some(&mc)).unwrap();
        assert!(m.monte_carlo);
        assert!(m.labels.iter().flatten().all(|l| *l == RegimeLabel::ExtinctionY), "{:?}", m.labels);
        let g = GridSpec::new(3, 2, 0.5, 5.0).unwrap();
        let w = witnesses(&regime_map_on(&pair, &g, DEFAULT_BAND, Some(&mc)).unwrap()).unwrap();
        assert!(!w.success);
        assert_eq!(w.labels().len(), 1);
    }

    #[test]
    fn csv_layout() {
        let m = regime_map(&rho_pair(9.0), &[0.5], &[1.0, 10.0], DEFAULT_BAND, None).unwrap();
        let csv = m.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "u,v,label");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("5.0000000000000000e-1,1.0000000000000000e0,"));
    }

    #[test]
    fn vote_rules() {
        let votes = |p, x, y| RegimeVotes {
            replicas: 50,
            persistence: p,
            extinction_x: x,
            extinction_y: y,
            low_at_end: 0,
            inconclusive: false,
            threshold: 1e-9,
        };
        assert!(votes_confirm(&votes(45, 5, 0), RegimeLabel::Persistence));
        assert!(!votes_confirm(&votes(44, 6, 0), RegimeLabel::Persistence));
        assert!(votes_confirm(&votes(0, 5, 45), RegimeLabel::RandomExtinction));
        assert!(!votes_confirm(&votes(0, 4, 46), RegimeLabel::RandomExtinction));
        assert_eq!(majority_label(&votes(0, 4, 46)), RegimeLabel::ExtinctionY);
        assert_eq!(majority_label(&votes(0, 25, 25)), RegimeLabel::RandomExtinction);
    }
}
