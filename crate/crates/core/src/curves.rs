//! Critical curves `u -> v_y(u)` and `u -> v_x(u)`.
//!
//! For fixed `u`, `v -> Lambda(u, v)` is monotone: the resident's reciprocal
//! `1/X` has a Beta law whose convex order shrinks as `v` grows, and the only
//! nonlinear part of `phi` is `P2 / z`. So `Lambda` increases with `v` when
//! the coefficient `a = P2` is negative, decreases when it is positive, and
//! is flat when it vanishes. The critical value is the unique sign change in
//! `v`, searched on `[V_MIN, V_MAX]`.
//!
//! When the rate keeps one sign on the whole window the curve sits at `0` or
//! at infinity. Which one follows the orientation of the sign change: for an
//! increasing rate the region above the curve is positive, so "positive
//! everywhere" means `v_y = 0`; for a decreasing rate the region below the
//! curve is positive and "positive everywhere" means `v_y = inf`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coords::{convert_u, ChartWeights};
use crate::env::EnvPair;
use crate::error::{Error, Result};
use crate::invasion::{
    coefficient_a, lambda_x_uv, lambda_y, limit_v_inf, limit_v_zero, sign_of, threshold_analysis,
    SIGN_TOL,
};
use crate::Species;

pub const V_MIN: f64 = 1e-6;
pub const V_MAX: f64 = 1e6;

/// Relative width at which the bisection in `v` stops.
const V_REL_TOL: f64 = 1e-10;

/// Critical value of `v` with its two limit encodings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "v", rename_all = "lowercase")]
pub enum ExtendedV {
    Zero,
    Finite(f64),
    #[serde(rename = "inf")]
    Infinite,
}

impl ExtendedV {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ExtendedV::Zero => "zero",
            ExtendedV::Finite(_) => "finite",
            ExtendedV::Infinite => "inf",
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtendedV::Finite(v) => Some(v),
            _ => None,
        }
    }

    fn scaled(self, factor: f64) -> ExtendedV {
        match self {
            ExtendedV::Finite(v) => ExtendedV::Finite(v * factor),
            other => other,
        }
    }
}

/// Monotonicity of `v -> Lambda(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
    Flat,
}

impl Direction {
    pub fn from_coefficient(a: f64) -> Direction {
        match sign_of(a) {
            -1 => Direction::Increasing,
            1 => Direction::Decreasing,
            _ => Direction::Flat,
        }
    }

    /// Encoding of a rate that keeps sign `sign` (+1 or -1) over the whole window.
    fn constant_sign(self, sign: i8) -> ExtendedV {
        match (self, sign > 0) {
            (Direction::Decreasing, true) => ExtendedV::Infinite,
            (Direction::Decreasing, false) => ExtendedV::Zero,
            (_, true) => ExtendedV::Zero,
            (_, false) => ExtendedV::Infinite,
        }
    }
}

/// Native chart of a species' invasion rate.
pub fn native_chart(pair: &EnvPair, species: Species) -> ChartWeights {
    match species {
        Species::Y => ChartWeights::alpha(pair),
        Species::X => ChartWeights::beta(pair),
    }
}

/// The pair whose y invasion rate is the requested species' invasion rate.
pub fn native_pair(pair: &EnvPair, species: Species) -> EnvPair {
    match species {
        Species::Y => *pair,
        Species::X => pair.swapped(),
    }
}

/// Invasion rate at `(u, v)` of the species' native chart.
pub fn invasion_native(pair: &EnvPair, species: Species, u: f64, v: f64) -> Result<f64> {
    match species {
        Species::Y => lambda_y(pair, u, v),
        Species::X => lambda_x_uv(pair, u, v),
    }
}

pub fn direction(pair: &EnvPair, species: Species) -> Result<Direction> {
    Ok(Direction::from_coefficient(coefficient_a(&native_pair(pair, species))?))
}

/// Critical `v` at `u` of the species' native chart.
pub fn critical_v(pair: &EnvPair, species: Species, u: f64) -> Result<ExtendedV> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidParameter(format!("u must lie in (0, 1), got {u}")));
    }
    let dir = direction(pair, species)?;
    let rate = |log_v: f64| invasion_native(pair, species, u, log_v.exp());

    // decade scan of the window, then bisection inside the bracketing decade
    let (lo_exp, hi_exp) = (V_MIN.log10().round() as i32, V_MAX.log10().round() as i32);
    let ln10 = std::f64::consts::LN_10;
    let mut samples = Vec::with_capacity((hi_exp - lo_exp + 1) as usize);
    for k in lo_exp..=hi_exp {
        let log_v = k as f64 * ln10;
        samples.push((log_v, sign_of(rate(log_v)?)));
    }
    let has_pos = samples.iter().any(|s| s.1 > 0);
    let has_neg = samples.iter().any(|s| s.1 < 0);
    if !has_neg {
        return Ok(dir.constant_sign(1));
    }
    if !has_pos {
        return Ok(dir.constant_sign(-1));
    }

    let (below, above) = match dir {
        Direction::Increasing => (-1, 1),
        Direction::Decreasing => (1, -1),
        Direction::Flat => {
            return Err(Error::InternalContract(format!(
                "rate with vanishing curvature coefficient changes sign in v at u = {u}"
            )))
        }
    };
    let signs: Vec<i8> = samples.iter().map(|s| s.1).filter(|&s| s != 0).collect();
    if signs.windows(2).any(|w| w[0] == above && w[1] == below) {
        return Err(Error::InternalContract(format!(
            "non-monotone sign pattern in v at u = {u}: {signs:?}"
        )));
    }
    let last_below = samples.iter().rposition(|s| s.1 == below).unwrap();
    let first_above = samples.iter().position(|s| s.1 == above).unwrap();
    let (mut lo, mut hi) = (samples[last_below].0, samples[first_above].0);
    while hi - lo > V_REL_TOL {
        let mid = 0.5 * (lo + hi);
        match sign_of(rate(mid)?) {
            s if s == below => lo = mid,
            s if s == above => hi = mid,
            _ => {
                lo = mid;
                hi = mid;
            }
        }
    }
    Ok(ExtendedV::Finite((0.5 * (lo + hi)).exp()))
}

/// Sampled critical curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalCurve {
    pub species: Species,
    pub u_grid: Vec<f64>,
    pub values: Vec<ExtendedV>,
    pub chart_weights: ChartWeights,
    /// Monotonicity of the invasion rate in `v`; fixes the meaning of `Zero`
    /// and `Infinite`.
    pub direction: Direction,
}

/// Uniform interior grid `k / (n + 1)`, `k = 1..=n`.
pub fn interior_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 / (n + 1) as f64).collect()
}

/// Critical curve on the uniform interior grid of the `(alpha0, alpha1)` chart,
/// the common plotting plane of both species. The x curve is solved in its own
/// chart and carried over through the jump rates.
pub fn curve_grid(pair: &EnvPair, species: Species, n: usize) -> Result<CriticalCurve> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2 grid points, got {n}")));
    }
    let plot = ChartWeights::alpha(pair);
    let native = native_chart(pair, species);
    let u_grid = interior_grid(n);
    let values = u_grid
        .par_iter()
        .map(|&u| {
            let un = convert_u(u, plot, native);
            // v_plot = lambda0/alpha0 + lambda1/alpha1 with lambda0 = un v w0, lambda1 = (1-un) v w1
            let factor = un * native.w0 / plot.w0 + (1.0 - un) * native.w1 / plot.w1;
            critical_v(pair, species, un).map(|cv| cv.scaled(factor))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CriticalCurve {
        species,
        u_grid,
        values,
        chart_weights: plot,
        direction: direction(pair, species)?,
    })
}

/// Critical curve on the uniform interior grid of the species' own chart.
pub fn curve_grid_native(pair: &EnvPair, species: Species, n: usize) -> Result<CriticalCurve> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2 grid points, got {n}")));
    }
    let u_grid = interior_grid(n);
    let values = u_grid
        .par_iter()
        .map(|&u| critical_v(pair, species, u))
        .collect::<Result<Vec<_>>>()?;
    Ok(CriticalCurve {
        species,
        u_grid,
        values,
        chart_weights: native_chart(pair, species),
        direction: direction(pair, species)?,
    })
}

/// Monotonicity of a finite stretch of a curve along `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Increasing,
    Decreasing,
    /// Single grid point, compatible with any trend.
    Single,
    /// Not predicted (e.g. both ends tend to infinity).
    Unspecified,
    NonMonotone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "trend", rename_all = "lowercase")]
pub enum Segment {
    Infinite,
    Finite(Trend),
    Zero,
}

impl Segment {
    /// Pattern equality where `Single` and `Unspecified` match any trend.
    pub fn matches(&self, other: &Segment) -> bool {
        match (self, other) {
            (Segment::Finite(a), Segment::Finite(b)) => {
                let loose = |t: &Trend| matches!(t, Trend::Single | Trend::Unspecified);
                a == b || loose(a) || loose(b)
            }
            (a, b) => a == b,
        }
    }
}

pub fn patterns_match(a: &[Segment], b: &[Segment]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.matches(y))
}

impl CriticalCurve {
    /// CSV `u,v_kind,v_value`; `v_value` is empty unless the kind is finite.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,v_kind,v_value\n");
        for (u, v) in self.u_grid.iter().zip(&self.values) {
            let value = v.finite().map(crate::format_real).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", crate::format_real(*u), v.kind_name(), value));
        }
        out
    }

    /// Runs of equal kind along the grid, finite runs tagged by their trend
    /// (strict comparison of consecutive values).
    pub fn pattern(&self) -> Vec<Segment> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.values.len() {
            match self.values[i] {
                ExtendedV::Zero | ExtendedV::Infinite => {
                    let seg = if self.values[i] == ExtendedV::Zero {
                        Segment::Zero
                    } else {
                        Segment::Infinite
                    };
                    if out.last() != Some(&seg) {
                        out.push(seg);
                    }
                    i += 1;
                }
                ExtendedV::Finite(_) => {
                    let start = i;
                    while i < self.values.len() && self.values[i].finite().is_some() {
                        i += 1;
                    }
                    let run: Vec<f64> = self.values[start..i].iter().filter_map(|v| v.finite()).collect();
                    let trend = if run.len() == 1 {
                        Trend::Single
                    } else if run.windows(2).all(|w| w[1] < w[0]) {
                        Trend::Decreasing
                    } else if run.windows(2).all(|w| w[1] > w[0]) {
                        Trend::Increasing
                    } else {
                        Trend::NonMonotone
                    };
                    out.push(Segment::Finite(trend));
                }
            }
        }
        out
    }

    /// `(u_first, u_last)` of each finite run.
    pub fn finite_spans(&self) -> Vec<(f64, f64)> {
        let mut spans = Vec::new();
        let mut start: Option<usize> = None;
        for (i, v) in self.values.iter().enumerate() {
            match (v.finite().is_some(), start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    spans.push((self.u_grid[s], self.u_grid[i - 1]));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            spans.push((self.u_grid[s], *self.u_grid.last().unwrap()));
        }
        spans
    }
}

/// Predicted piece of the curve between consecutive thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedSegment {
    pub lo: f64,
    pub hi: f64,
    pub segment: Segment,
}

/// Shape of the critical curve predicted from the thresholds alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSummary {
    pub species: Species,
    pub coeff_a: f64,
    pub direction: Direction,
    /// Zeros of the fast-switching limit inside `(0, 1)`.
    pub alpha: Vec<f64>,
    /// Zero of the slow-switching limit.
    pub alpha_bar: Option<f64>,
    /// Pieces in the species' native chart.
    pub segments: Vec<PredictedSegment>,
}

#[derive(Clone, Copy, PartialEq)]
enum EndBehaviour {
    ToInfinity,
    ToZero,
    Unknown,
}

/// Prediction of the curve from the signs of the two `v`-limits, which are
/// constant between the thresholds `alpha` (zeros of the fast-switching
/// limit) and `alpha_bar` (zero of the slow-switching limit). A finite piece
/// runs to infinity at an `alpha` end and to zero at the `alpha_bar` end.
pub fn shape_summary(pair: &EnvPair, species: Species) -> Result<ShapeSummary> {
    let np = native_pair(pair, species);
    let coeff_a = coefficient_a(&np)?;
    let dir = Direction::from_coefficient(coeff_a);
    let ta = threshold_analysis(&np);

    let mut cuts: Vec<(f64, EndBehaviour)> = vec![(0.0, EndBehaviour::Unknown)];
    cuts.extend(ta.alpha.iter().map(|&a| (a, EndBehaviour::ToInfinity)));
    if let Some(ab) = ta.alpha_bar {
        cuts.push((ab, EndBehaviour::ToZero));
    }
    cuts.push((1.0, EndBehaviour::Unknown));
    cuts.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut segments: Vec<PredictedSegment> = Vec::new();
    for w in cuts.windows(2) {
        let ((lo, lo_end), (hi, hi_end)) = (w[0], w[1]);
        if hi - lo <= SIGN_TOL {
            continue;
        }
        let segment = predict_segment(&np, dir, 0.5 * (lo + hi), lo_end, hi_end);
        match segments.last_mut() {
            Some(last) if last.segment == segment && segment != Segment::Finite(Trend::Unspecified) => {
                last.hi = hi
            }
            _ => segments.push(PredictedSegment { lo, hi, segment }),
        }
    }
    Ok(ShapeSummary {
        species,
        coeff_a,
        direction: dir,
        alpha: ta.alpha,
        alpha_bar: ta.alpha_bar,
        segments,
    })
}

fn predict_segment(np: &EnvPair, dir: Direction, mid: f64, lo_end: EndBehaviour, hi_end: EndBehaviour) -> Segment {
    let slow = sign_of(limit_v_zero(np, mid));
    let fast = sign_of(limit_v_inf(np, mid));
    if slow == fast || slow == 0 || fast == 0 || dir == Direction::Flat {
        let s = if slow != 0 { slow } else { fast };
        return match dir.constant_sign(if s >= 0 { 1 } else { -1 }) {
            ExtendedV::Zero => Segment::Zero,
            _ => Segment::Infinite,
        };
    }
    use EndBehaviour::*;
    let decreasing = (lo_end == ToInfinity || hi_end == ToZero) && lo_end != ToZero && hi_end != ToInfinity;
    let increasing = (lo_end == ToZero || hi_end == ToInfinity) && lo_end != ToInfinity && hi_end != ToZero;
    Segment::Finite(match (decreasing, increasing) {
        (true, false) => Trend::Decreasing,
        (false, true) => Trend::Increasing,
        _ => Trend::Unspecified,
    })
}

impl ShapeSummary {
    pub fn pattern(&self) -> Vec<Segment> {
        self.segments.iter().map(|s| s.segment).collect()
    }

    /// Predicted pattern restricted to the pieces that contain grid points.
    pub fn pattern_on_grid(&self, u_grid: &[f64]) -> Vec<Segment> {
        let mut out: Vec<Segment> = Vec::new();
        for s in &self.segments {
            if u_grid.iter().any(|&u| u > s.lo && u < s.hi) {
                match (out.last(), s.segment) {
                    (Some(last), seg) if *last == seg && !matches!(seg, Segment::Finite(_)) => {}
                    _ => out.push(s.segment),
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Environment;
    use rand::SeedableRng;

    fn env(v: [f64; 6]) -> Environment {
        Environment::from_slice(&v).unwrap()
    }

    fn rho_pair(rho: f64) -> EnvPair {
        EnvPair::new(
            env([1.0, 5.0, 2.0, 8.0, 3.0, 3.0]),
            env([2.0, 11.0, 1.0, rho, 2.0, 1.8]),
        )
    }

    fn wide_pair() -> EnvPair {
        EnvPair::new(
            env([6.0, 1.0, 4.0, 2.0, 1.0, 5.0]),
            env([3.0, 3.0, 2.0, 5.5, 5.0, 1.0]),
        )
    }

    #[test]
    fn rho_pair_critical_values() {
        let p = rho_pair(9.0);
        let t = threshold_analysis(&p);
        let (alpha, alpha_bar) = (t.single_alpha().unwrap(), t.alpha_bar.unwrap());
        for u in [0.1, 0.3, 0.5] {
            assert!(limit_v_zero(&p, u) < 0.0 && limit_v_inf(&p, u) < 0.0);
            assert_eq!(critical_v(&p, Species::Y, u).unwrap(), ExtendedV::Infinite);
        }
        for u in [0.7, 0.8, 0.95] {
            assert!(limit_v_zero(&p, u) > 0.0 && limit_v_inf(&p, u) > 0.0);
            assert_eq!(critical_v(&p, Species::Y, u).unwrap(), ExtendedV::Zero);
        }
        for k in 1..10 {
            let u = alpha + (alpha_bar - alpha) * k as f64 / 10.0;
            let v = critical_v(&p, Species::Y, u).unwrap().finite().unwrap();
            assert!(lambda_y(&p, u, v * (1.0 - 1e-6)).unwrap() < 0.0);
            assert!(lambda_y(&p, u, v * (1.0 + 1e-6)).unwrap() > 0.0);
        }
    }

    #[test]
    fn rho_pair_curve_grid() {
        let p = rho_pair(9.0);
        let t = threshold_analysis(&p);
        let (alpha, alpha_bar) = (t.single_alpha().unwrap(), t.alpha_bar.unwrap());
        let c = curve_grid(&p, Species::Y, 200).unwrap();
        let step = 1.0 / 201.0;
        let spans = c.finite_spans();
        assert_eq!(spans.len(), 1);
        assert!(spans[0].0 > alpha && spans[0].0 - alpha <= step);
        assert!(spans[0].1 < alpha_bar && alpha_bar - spans[0].1 <= step);
        assert_eq!(
            c.pattern(),
            vec![Segment::Infinite, Segment::Finite(Trend::Decreasing), Segment::Zero]
        );
        let s = shape_summary(&p, Species::Y).unwrap();
        assert!(s.coeff_a < 0.0);
        assert!((s.alpha[0] - 0.5132).abs() < 1e-3);
        assert!((s.alpha_bar.unwrap() - 0.6897).abs() < 1e-4);
        assert!(patterns_match(&s.pattern(), &c.pattern()));
    }

    #[test]
    fn rho_pair_curve_tends_to_limits() {
        let p = rho_pair(9.0);
        let c = curve_grid(&p, Species::Y, 8000).unwrap();
        let finite: Vec<f64> = c.values.iter().filter_map(|v| v.finite()).collect();
        assert!(*finite.first().unwrap() > 1e3, "{}", finite[0]);
        assert!(*finite.last().unwrap() < 1e-3, "{}", finite.last().unwrap());
    }

    #[test]
    fn swapped_pair_predicts_x_curve() {
        let p = rho_pair(10.0);
        let a = shape_summary(&p, Species::X).unwrap();
        let b = shape_summary(&p.swapped(), Species::Y).unwrap();
        assert_eq!(a.segments, b.segments);
        let c = curve_grid_native(&p, Species::X, 300).unwrap();
        assert!(patterns_match(&a.pattern_on_grid(&c.u_grid), &c.pattern()));
    }

    #[test]
    fn x_curve_chart_conversion() {
        let p = rho_pair(9.0);
        let plot = curve_grid(&p, Species::X, 50).unwrap();
        assert_eq!(plot.chart_weights, ChartWeights::alpha(&p));
        for (u, v) in plot.u_grid.iter().zip(&plot.values) {
            if let Some(v) = v.finite() {
                let rates = crate::coords::UVCoords::new(*u, v, plot.chart_weights)
                    .unwrap()
                    .to_rates()
                    .unwrap();
                assert!(crate::invasion::lambda_x(&p, &rates).unwrap().abs() < 1e-8);
            }
        }
    }

    #[test]
    fn wide_pair_curve_blows_up_at_both_ends() {
        let p = wide_pair();
        let s = shape_summary(&p, Species::Y).unwrap();
        assert!(s.coeff_a > 0.0);
        assert_eq!(s.alpha_bar, None);
        let c = curve_grid_native(&p, Species::Y, 400).unwrap();
        assert!(patterns_match(&s.pattern_on_grid(&c.u_grid), &c.pattern()), "{:?} vs {:?}", s.pattern(), c.pattern());
        let finite: Vec<f64> = c.values.iter().filter_map(|v| v.finite()).collect();
        let min = finite.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(finite[0] > 10.0 * min && *finite.last().unwrap() > 10.0 * min);
    }

    #[test]
    fn positive_coefficient_gives_increasing_branch() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut seen = 0;
        while seen < 5 {
            let p = crate::invasion::tests::random_type12_pair(&mut rng);
            let s = shape_summary(&p, Species::Y).unwrap();
            if s.coeff_a <= 1e-6 {
                continue;
            }
            seen += 1;
            assert!(s.alpha_bar.unwrap() < s.alpha[0]);
            let c = curve_grid_native(&p, Species::Y, 300).unwrap();
            assert!(patterns_match(&s.pattern_on_grid(&c.u_grid), &c.pattern()), "{:?} vs {:?}", s.pattern(), c.pattern());
            let finite: Vec<f64> = c.values.iter().filter_map(|v| v.finite()).collect();
            assert!(finite.windows(2).all(|w| w[0] < w[1]), "{p:?}");
        }
    }

    #[test]
    fn zero_coefficient_degenerates() {
        let p = EnvPair::new(env([1.0, 1.0, 2.0, 2.0, 1.0, 1.0]), env([2.0, 2.0, 1.0, 1.0, 1.0, 4.0]));
        let s = shape_summary(&p, Species::Y).unwrap();
        assert_eq!(s.direction, Direction::Flat);
        assert!((s.alpha[0] - s.alpha_bar.unwrap()).abs() < 1e-9);
        assert_eq!(s.pattern(), vec![Segment::Infinite, Segment::Zero]);
        let c = curve_grid(&p, Species::Y, 100).unwrap();
        assert_eq!(c.pattern(), vec![Segment::Infinite, Segment::Zero]);
    }

    #[test]
    fn serde_encoding() {
        let s = serde_json::to_string(&[ExtendedV::Zero, ExtendedV::Finite(2.5), ExtendedV::Infinite]).unwrap();
        assert_eq!(s, r#"[{"kind":"zero"},{"kind":"finite","v":2.5},{"kind":"inf"}]"#);
    }
}
