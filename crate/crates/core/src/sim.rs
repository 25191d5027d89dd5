//! Monte Carlo simulation of the switching process.
//!
//! Event-driven scheme: the mode holds for an exponential time of rate
//! `lambda_i`, and the deterministic flow of environment `i` is integrated
//! across the holding interval with classical RK4 substeps no longer than
//! `dt_max`. The simulator shares nothing with the closed forms in
//! [`crate::invasion`] and serves as their independent check.

use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coords::JumpRates;
use crate::curves::native_pair;
use crate::env::EnvPair;
use crate::error::{Error, Result};
use crate::Species;

/// Default extinction threshold for [`detect_regime`].
pub const EXTINCTION_THRESHOLD: f64 = 1e-9;

/// Level under which a surviving species makes a replica suspicious.
pub const LOW_DENSITY: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t_max: f64,
    /// RK4 step cap.
    pub dt_max: f64,
    pub seed: u64,
    pub x0: f64,
    pub y0: f64,
    pub i0: usize,
    pub burn_in: f64,
    /// Number of batches for the batch-means standard error.
    pub batches: usize,
    /// Recording interval of trajectories.
    pub sample_dt: f64,
}

/// `0.01 / max(alpha_i, beta_i)`: stiffness scales with the growth rates.
pub fn default_dt_max(pair: &EnvPair) -> f64 {
    let (e0, e1) = (pair.env0(), pair.env1());
    0.01 / e0.alpha().max(e1.alpha()).max(e0.beta()).max(e1.beta())
}

impl SimConfig {
    /// Defaults: `dt_max` from [`default_dt_max`], burn-in 10% of `t_max`,
    /// start `(0.5, 0.5)` in mode 0, 50 batches, 10^4 recorded samples.
    pub fn new(pair: &EnvPair, t_max: f64, seed: u64) -> SimConfig {
        SimConfig {
            t_max,
            dt_max: default_dt_max(pair),
            seed,
            x0: 0.5,
            y0: 0.5,
            i0: 0,
            burn_in: 0.1 * t_max,
            batches: 50,
            sample_dt: t_max / 1e4,
        }
    }

    pub fn with_burn_in(mut self, burn_in: f64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_start(mut self, x0: f64, y0: f64, i0: usize) -> Self {
        self.x0 = x0;
        self.y0 = y0;
        self.i0 = i0;
        self
    }

    pub fn with_dt_max(mut self, dt_max: f64) -> Self {
        self.dt_max = dt_max;
        self
    }

    pub fn with_batches(mut self, batches: usize) -> Self {
        self.batches = batches;
        self
    }

    pub fn with_sample_dt(mut self, sample_dt: f64) -> Self {
        self.sample_dt = sample_dt;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return bad(format!("t_max must be finite and > 0, got {}", self.t_max));
        }
        if !(self.dt_max > 0.0 && self.dt_max <= self.t_max) {
            return bad(format!("need 0 < dt_max <= t_max, got {}", self.dt_max));
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.t_max) {
            return bad(format!("need 0 <= burn_in < t_max, got {}", self.burn_in));
        }
        if !(self.x0 > 0.0 && self.y0 > 0.0 && self.x0.is_finite() && self.y0.is_finite()) {
            return bad(format!("start must be interior, got ({}, {})", self.x0, self.y0));
        }
        if self.i0 > 1 {
            return bad(format!("initial mode must be 0 or 1, got {}", self.i0));
        }
        if self.batches < 20 {
            return bad(format!("need at least 20 batches, got {}", self.batches));
        }
        if !(self.sample_dt > 0.0) {
            return bad(format!("sample_dt must be > 0, got {}", self.sample_dt));
        }
        Ok(())
    }
}

/// One classical Runge-Kutta step.
pub fn rk4_step<const N: usize>(f: impl Fn(&[f64; N]) -> [f64; N], y: &[f64; N], h: f64) -> [f64; N] {
    let add = |a: &[f64; N], b: &[f64; N], s: f64| -> [f64; N] { std::array::from_fn(|i| a[i] + s * b[i]) };
    let k1 = f(y);
    let k2 = f(&add(y, &k1, 0.5 * h));
    let k3 = f(&add(y, &k2, 0.5 * h));
    let k4 = f(&add(y, &k3, h));
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Mode chain with exponential holding times, driving a flow forward.
struct Switching {
    rates: [f64; 2],
    mode: usize,
    t: f64,
    next_switch: f64,
    dt_max: f64,
    rng: ChaCha8Rng,
    switches: Option<Vec<f64>>,
}

impl Switching {
    fn new(rates: &JumpRates, i0: usize, dt_max: f64, rng: ChaCha8Rng, log_switches: bool) -> Self {
        let mut s = Switching {
            rates: [rates.lambda0(), rates.lambda1()],
            mode: i0,
            t: 0.0,
            next_switch: 0.0,
            dt_max,
            rng,
            switches: log_switches.then(Vec::new),
        };
        s.next_switch = s.holding_time();
        s
    }

    fn holding_time(&mut self) -> f64 {
        let e: f64 = self.rng.sample(Exp1);
        e / self.rates[self.mode]
    }

    /// Integrates up to `t_target`, switching modes on the way. `on_step` sees
    /// the state after every substep and may stop the run.
    fn advance<const N: usize>(
        &mut self,
        state: &mut [f64; N],
        t_target: f64,
        field: &impl Fn(usize, &[f64; N]) -> [f64; N],
        on_step: &mut impl FnMut(f64, usize, &[f64; N]) -> ControlFlow<Error>,
    ) -> ControlFlow<Error> {
        while self.t < t_target {
            let end = self.next_switch.min(t_target);
            let span = end - self.t;
            let steps = (span / self.dt_max).ceil().max(1.0);
            let h = span / steps;
            let mode = self.mode;
            for k in 1..=steps as usize {
                *state = rk4_step(|y| field(mode, y), state, h);
                on_step(self.t + k as f64 * h, mode, state)?;
            }
            self.t = end;
            if end == self.next_switch {
                self.mode = 1 - self.mode;
                if let Some(log) = self.switches.as_mut() {
                    log.push(end);
                }
                let hold = self.holding_time();
                self.next_switch = end + hold;
            }
        }
        ControlFlow::Continue(())
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSegment {
    pub start: f64,
    pub end: f64,
    pub mode: usize,
}

/// Recorded path: states at the sample times and the realized mode segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<(f64, f64)>,
    pub modes: Vec<usize>,
    pub segments: Vec<ModeSegment>,
}

impl Trajectory {
    /// CSV `t,x,y,i` keeping every `stride`-th sample and the last one.
    pub fn to_csv(&self, stride: usize) -> String {
        let stride = stride.max(1);
        let last = self.times.len().saturating_sub(1);
        let mut out = String::from("t,x,y,i\n");
        for k in (0..self.times.len()).filter(|k| k % stride == 0 || *k == last) {
            let (x, y) = self.states[k];
            out.push_str(&format!(
                "{},{},{},{}\n",
                crate::format_real(self.times[k]),
                crate::format_real(x),
                crate::format_real(y),
                self.modes[k]
            ));
        }
        out
    }

    fn from_switches(i0: usize, t_max: f64, switches: &[f64]) -> Vec<ModeSegment> {
        let mut segments = Vec::with_capacity(switches.len() + 1);
        let (mut start, mut mode) = (0.0, i0);
        for &s in switches.iter().filter(|&&s| s < t_max) {
            segments.push(ModeSegment { start, end: s, mode });
            start = s;
            mode = 1 - mode;
        }
        segments.push(ModeSegment { start, end: t_max, mode });
        segments
    }
}

fn state_bound(coeffs: impl IntoIterator<Item = f64>) -> f64 {
    10.0 * coeffs.into_iter().map(|c| 1.0 / c).fold(0.0, f64::max)
}

fn blow_up_guard<const N: usize>(bound: f64, t: f64, s: &[f64; N], dims: usize) -> ControlFlow<Error> {
    let ok = s[..dims].iter().all(|&v| v >= 0.0 && v <= bound);
    if ok {
        ControlFlow::Continue(())
    } else {
        ControlFlow::Break(Error::IntegratorBlowUp {
            t,
            x: s[0],
            y: if dims > 1 { s[1] } else { 0.0 },
        })
    }
}

fn lv_field(pair: &EnvPair) -> impl Fn(usize, &[f64; 2]) -> [f64; 2] + '_ {
    move |i, s| {
        let (dx, dy) = pair.env(i).vector_field(s[0], s[1]);
        [dx, dy]
    }
}

fn record<const N: usize>(
    mut sw: Switching,
    mut state: [f64; N],
    cfg: &SimConfig,
    field: &impl Fn(usize, &[f64; N]) -> [f64; N],
    bound: f64,
    project: impl Fn(&[f64; N]) -> (f64, f64),
    dims: usize,
) -> Result<Trajectory> {
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![project(&state)],
        modes: vec![cfg.i0],
        segments: Vec::new(),
    };
    let mut guard = |t: f64, _: usize, s: &[f64; N]| blow_up_guard(bound, t, s, dims);
    let mut k = 1u64;
    loop {
        let t = (k as f64 * cfg.sample_dt).min(cfg.t_max);
        if let ControlFlow::Break(e) = sw.advance(&mut state, t, field, &mut guard) {
            return Err(e);
        }
        traj.times.push(t);
        traj.states.push(project(&state));
        traj.modes.push(sw.mode);
        if t >= cfg.t_max {
            break;
        }
        k += 1;
    }
    traj.segments = Trajectory::from_switches(cfg.i0, cfg.t_max, sw.switches.as_deref().unwrap_or(&[]));
    Ok(traj)
}

/// Full process `(X, Y, I)`.
pub fn simulate_pdmp(pair: &EnvPair, rates: &JumpRates, cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let sw = Switching::new(rates, cfg.i0, cfg.dt_max, rng_for(cfg.seed), true);
    let (e0, e1) = (pair.env0(), pair.env1());
    let bound = state_bound([e0.a(), e1.a(), e0.d(), e1.d()]);
    record(sw, [cfg.x0, cfg.y0], cfg, &lv_field(pair), bound, |s| (s[0], s[1]), 2)
}

/// `(growth_i, crowding_i)` of the logistic on the given boundary axis.
fn axis_coefficients(pair: &EnvPair, axis: Species) -> ([f64; 2], [f64; 2]) {
    let (e0, e1) = (pair.env0(), pair.env1());
    match axis {
        Species::X => ([e0.alpha(), e1.alpha()], [e0.a(), e1.a()]),
        Species::Y => ([e0.beta(), e1.beta()], [e0.d(), e1.d()]),
    }
}

/// One-dimensional switched logistic on the `x` axis (`alpha_i`, `a_i`) or
/// the `y` axis (`beta_i`, `d_i`).
pub fn simulate_switched_logistic(
    pair: &EnvPair,
    rates: &JumpRates,
    axis: Species,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let (growth, crowd) = axis_coefficients(pair, axis);
    let field = move |i: usize, s: &[f64; 1]| [growth[i] * s[0] * (1.0 - crowd[i] * s[0])];
    let sw = Switching::new(rates, cfg.i0, cfg.dt_max, rng_for(cfg.seed), true);
    let bound = state_bound(crowd);
    match axis {
        Species::X => record(sw, [cfg.x0], cfg, &field, bound, |s| (s[0], 0.0), 1),
        Species::Y => record(sw, [cfg.y0], cfg, &field, bound, |s| (0.0, s[0]), 1),
    }
}

/// Time average with its batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgodicStats {
    pub estimate: f64,
    pub std_error: f64,
    pub batches: usize,
    pub total_time: f64,
}

impl ErgodicStats {
    fn from_batches(means: &[f64], batch_len: f64) -> ErgodicStats {
        let n = means.len() as f64;
        let mean = means.iter().sum::<f64>() / n;
        let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0);
        ErgodicStats {
            estimate: mean,
            std_error: (var / n).sqrt(),
            batches: means.len(),
            total_time: batch_len * n,
        }
    }
}

/// Smallest `t_max` for which the estimator accepts the rates.
pub fn min_t_max(rates: &JumpRates) -> f64 {
    100.0 * (1.0 / rates.lambda0() + 1.0 / rates.lambda1())
}

/// Ergodic estimate of an invasion rate: time average of
/// `beta_I (1 - c_I X_t)` along the switched logistic of the resident x
/// (species y), or of `alpha_I (1 - b_I Y_t)` along that of y (species x).
pub fn estimate_lambda(pair: &EnvPair, rates: &JumpRates, species: Species, cfg: &SimConfig) -> Result<ErgodicStats> {
    cfg.validate()?;
    let required = min_t_max(rates);
    if cfg.t_max < required {
        return Err(Error::InsufficientMixing {
            t_max: cfg.t_max,
            required,
        });
    }
    let np = native_pair(pair, species);
    let (e0, e1) = (np.env0(), np.env1());
    let growth = [e0.alpha(), e1.alpha()];
    let crowd = [e0.a(), e1.a()];
    let gain = [e0.beta(), e1.beta()];
    let cost = [e0.c(), e1.c()];
    // state: resident density and the running integral of the observable
    let field = move |i: usize, s: &[f64; 2]| {
        [growth[i] * s[0] * (1.0 - crowd[i] * s[0]), gain[i] * (1.0 - cost[i] * s[0])]
    };
    let start = match species {
        Species::Y => cfg.x0,
        Species::X => cfg.y0,
    };
    let bound = state_bound(crowd);
    let mut guard = |t: f64, _: usize, s: &[f64; 2]| blow_up_guard(bound, t, s, 1);
    let mut sw = Switching::new(rates, cfg.i0, cfg.dt_max, rng_for(cfg.seed), false);
    let mut state = [start, 0.0];
    if let ControlFlow::Break(e) = sw.advance(&mut state, cfg.burn_in, &field, &mut guard) {
        return Err(e);
    }
    let batch_len = (cfg.t_max - cfg.burn_in) / cfg.batches as f64;
    let mut means = Vec::with_capacity(cfg.batches);
    for b in 1..=cfg.batches {
        state[1] = 0.0;
        let t = if b == cfg.batches {
            cfg.t_max
        } else {
            cfg.burn_in + b as f64 * batch_len
        };
        if let ControlFlow::Break(e) = sw.advance(&mut state, t, &field, &mut guard) {
            return Err(e);
        }
        means.push(state[1] / batch_len);
    }
    Ok(ErgodicStats::from_batches(&means, batch_len))
}

/// Outcome of one replica of [`detect_regime`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vote {
    Persistence,
    ExtinctionX,
    ExtinctionY,
}

/// Aggregated replica votes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeVotes {
    pub replicas: usize,
    pub persistence: usize,
    pub extinction_x: usize,
    pub extinction_y: usize,
    /// Replicas that reached `t_max` with a species below [`LOW_DENSITY`].
    pub low_at_end: usize,
    /// Every replica reached `t_max` with a species low but above the threshold.
    pub inconclusive: bool,
    pub threshold: f64,
}

impl RegimeVotes {
    pub fn fraction(&self, vote: Vote) -> f64 {
        let n = match vote {
            Vote::Persistence => self.persistence,
            Vote::ExtinctionX => self.extinction_x,
            Vote::ExtinctionY => self.extinction_y,
        };
        n as f64 / self.replicas as f64
    }
}

/// Interior starting point of replica `r`: densities spread log-uniformly over
/// two decades below the single-species carrying capacities, so that both
/// boundary basins are sampled when they coexist. The mode starts from the
/// stationary law of the chain.
fn replica_start(pair: &EnvPair, rates: &JumpRates, rng: &mut ChaCha8Rng) -> (f64, f64, usize) {
    let (e0, e1) = (pair.env0(), pair.env1());
    let kx = 1.0 / e0.a().max(e1.a());
    let ky = 1.0 / e0.d().max(e1.d());
    let x0 = kx * 10f64.powf(-2.0 * rng.random::<f64>());
    let y0 = ky * 10f64.powf(-2.0 * rng.random::<f64>());
    let i0 = usize::from(rng.random::<f64>() >= rates.stationary0());
    (x0, y0, i0)
}

fn run_replica(pair: &EnvPair, rates: &JumpRates, cfg: &SimConfig, seed: u64, threshold: f64) -> Result<(Vote, bool)> {
    let mut rng = rng_for(seed);
    let (x0, y0, i0) = replica_start(pair, rates, &mut rng);
    let (e0, e1) = (pair.env0(), pair.env1());
    let bound = state_bound([e0.a(), e1.a(), e0.d(), e1.d()]);
    let mut vote = Vote::Persistence;
    let mut on_step = |t: f64, _: usize, s: &[f64; 2]| {
        if s[0] < threshold {
            vote = Vote::ExtinctionX;
            return ControlFlow::Break(None);
        }
        if s[1] < threshold {
            vote = Vote::ExtinctionY;
            return ControlFlow::Break(None);
        }
        match blow_up_guard(bound, t, s, 2) {
            ControlFlow::Break(e) => ControlFlow::Break(Some(e)),
            ControlFlow::Continue(()) => ControlFlow::Continue(()),
        }
    };
    let mut sw = Switching::new(rates, i0, cfg.dt_max, rng, false);
    let mut state = [x0, y0];
    let mut wrapped = |t: f64, i: usize, s: &[f64; 2]| match on_step(t, i, s) {
        ControlFlow::Break(Some(e)) => ControlFlow::Break(e),
        ControlFlow::Break(None) => ControlFlow::Break(Error::InternalContract(String::new())),
        ControlFlow::Continue(()) => ControlFlow::Continue(()),
    };
    if let ControlFlow::Break(e) = sw.advance(&mut state, cfg.t_max, &lv_field(pair), &mut wrapped) {
        if !matches!(e, Error::InternalContract(_)) {
            return Err(e);
        }
    }
    let low = vote == Vote::Persistence && state[0].min(state[1]) < LOW_DENSITY;
    Ok((vote, low))
}

/// Empirical regime: `replicas` independent runs of the full process from
/// spread interior starts. Replica `r` uses seed `cfg.seed ^ r`. A replica
/// votes for the extinction of the first species whose density falls below
/// `threshold`, and for persistence if neither does by `cfg.t_max`.
pub fn detect_regime(
    pair: &EnvPair,
    rates: &JumpRates,
    cfg: &SimConfig,
    replicas: usize,
    threshold: f64,
) -> Result<RegimeVotes> {
    cfg.validate()?;
    if replicas < 20 {
        return Err(Error::InvalidParameter(format!("need at least 20 replicas, got {replicas}")));
    }
    if !(threshold > 0.0 && threshold < LOW_DENSITY) {
        return Err(Error::InvalidParameter(format!(
            "extinction threshold must lie in (0, {LOW_DENSITY}), got {threshold}"
        )));
    }
    let outcomes = (0..replicas as u64)
        .into_par_iter()
        .map(|r| run_replica(pair, rates, cfg, cfg.seed ^ r, threshold))
        .collect::<Result<Vec<_>>>()?;
    let count = |v: Vote| outcomes.iter().filter(|o| o.0 == v).count();
    let low_at_end = outcomes.iter().filter(|o| o.1).count();
    Ok(RegimeVotes {
        replicas,
        persistence: count(Vote::Persistence),
        extinction_x: count(Vote::ExtinctionX),
        extinction_y: count(Vote::ExtinctionY),
        low_at_end,
        inconclusive: low_at_end == replicas,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Environment;

    fn env(v: [f64; 6]) -> Environment {
        Environment::from_slice(&v).unwrap()
    }

    fn rho_pair(rho: f64) -> EnvPair {
        EnvPair::new(
            env([1.0, 5.0, 2.0, 8.0, 3.0, 3.0]),
            env([2.0, 11.0, 1.0, rho, 2.0, 1.8]),
        )
    }

    #[test]
    fn rk4_matches_exact_logistic() {
        let (alpha, a, x0) = (3.0, 2.0, 0.05);
        let pair = EnvPair::new(env([a, 1.0, 1.0, 1.0, alpha, 1.0]), env([a, 1.0, 1.0, 1.0, alpha, 1.0]));
        let h = default_dt_max(&pair);
        let exact = |t: f64| x0 / (a * x0 + (1.0 - a * x0) * (-alpha * t).exp());
        let mut x = [x0];
        let mut worst: f64 = 0.0;
        let steps = (10.0 / h).round() as usize;
        for k in 1..=steps {
            x = rk4_step(|s| [alpha * s[0] * (1.0 - a * s[0])], &x, h);
            worst = worst.max((x[0] - exact(k as f64 * h)).abs());
        }
        assert!(worst <= 1e-8, "{worst}");
    }

    #[test]
    fn single_environment_attractor() {
        let e = env([1.0, 5.0, 2.0, 8.0, 3.0, 3.0]);
        let pair = EnvPair::new(e, e);
        let rates = JumpRates::new(1.0, 1.0).unwrap();
        let cfg = SimConfig::new(&pair, 1e3 / 3.0, 1).with_start(0.3, 0.4, 0).with_sample_dt(1.0);
        let traj = simulate_pdmp(&pair, &rates, &cfg).unwrap();
        let (x, y) = *traj.states.last().unwrap();
        assert!((x - 1.0).abs() < 1e-6 && y < 1e-6, "({x}, {y})");
    }

    #[test]
    fn holding_times_are_exponential() {
        let pair = rho_pair(9.0);
        let rates = JumpRates::new(2.0, 0.5).unwrap();
        let cfg = SimConfig::new(&pair, 4000.0, 9).with_sample_dt(10.0).with_dt_max(0.05);
        let traj = simulate_switched_logistic(&pair, &rates, Species::X, &cfg).unwrap();
        let full = &traj.segments[..traj.segments.len() - 1];
        let mode0: Vec<f64> = full.iter().filter(|s| s.mode == 0).map(|s| s.end - s.start).collect();
        assert!(mode0.len() >= 1000);
        let n = mode0.len() as f64;
        let mean = mode0.iter().sum::<f64>() / n;
        let sd = (mode0.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((mean - 0.5).abs() <= 3.0 * sd / n.sqrt(), "{mean}");
        // segments partition [0, t_max]
        assert_eq!(traj.segments[0].start, 0.0);
        assert_eq!(traj.segments.last().unwrap().end, cfg.t_max);
        assert!(traj.segments.windows(2).all(|w| w[0].end == w[1].start && w[0].mode != w[1].mode));
    }

    #[test]
    fn determinism() {
        let pair = rho_pair(9.0);
        let rates = JumpRates::new(1.5, 2.5).unwrap();
        let cfg = SimConfig::new(&pair, 200.0, 77);
        let a = simulate_pdmp(&pair, &rates, &cfg).unwrap();
        let b = simulate_pdmp(&pair, &rates, &cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_switched_logistic(&pair, &rates, Species::Y, &cfg).unwrap();
        let d = simulate_switched_logistic(&pair, &rates, Species::Y, &cfg).unwrap();
        assert_eq!(c, d);
        let cfg2 = cfg.with_seed(78);
        assert_ne!(simulate_pdmp(&pair, &rates, &cfg2).unwrap(), a);
        let cfg = SimConfig::new(&pair, 2000.0, 5);
        assert_eq!(
            estimate_lambda(&pair, &rates, Species::Y, &cfg).unwrap(),
            estimate_lambda(&pair, &rates, Species::Y, &cfg).unwrap()
        );
    }

    #[test]
    fn switched_logistic_support() {
        let pair = rho_pair(9.0);
        let rates = JumpRates::new(1.0, 1.0).unwrap();
        let cfg = SimConfig::new(&pair, 2000.0, 3).with_sample_dt(0.05);
        let traj = simulate_switched_logistic(&pair, &rates, Species::X, &cfg).unwrap();
        for (t, (x, _)) in traj.times.iter().zip(&traj.states) {
            if *t >= cfg.burn_in {
                assert!((0.5 - 1e-9..=1.0 + 1e-9).contains(x), "x({t}) = {x}");
            }
        }
        let same = EnvPair::new(*pair.env0(), *pair.env0());
        let traj = simulate_switched_logistic(&same, &rates, Species::X, &cfg).unwrap();
        assert!((traj.states.last().unwrap().0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_estimate() {
        let e = env([1.0, 5.0, 2.0, 8.0, 3.0, 3.0]);
        let pair = EnvPair::new(e, e);
        let rates = JumpRates::new(1.0, 2.0).unwrap();
        let cfg = SimConfig::new(&pair, 1000.0, 4);
        let s = estimate_lambda(&pair, &rates, Species::Y, &cfg).unwrap();
        let exact = 3.0 * (1.0 - 2.0);
        // the resident sits at its fixed point, so the SE collapses to rounding
        assert!((s.estimate - exact).abs() <= (3.0 * s.std_error).max(1e-9), "{s:?}");
        let sx = estimate_lambda(&pair, &rates, Species::X, &cfg).unwrap();
        assert!((sx.estimate - 3.0 * (1.0 - 5.0 / 8.0)).abs() <= 1e-9);
    }

    #[test]
    fn estimate_matches_closed_form() {
        let pair = rho_pair(9.0);
        let weights = crate::coords::ChartWeights::alpha(&pair);
        let rates = crate::coords::UVCoords::new(0.5, 5.0, weights).unwrap().to_rates().unwrap();
        let cfg = SimConfig::new(&pair, 1e4, 12).with_burn_in(1e3);
        let s = estimate_lambda(&pair, &rates, Species::Y, &cfg).unwrap();
        let exact = crate::invasion::lambda_y(&pair, 0.5, 5.0).unwrap();
        assert!((s.estimate - exact).abs() <= 3.0 * s.std_error, "{s:?} vs {exact}");
        let s = estimate_lambda(&pair, &rates, Species::X, &cfg).unwrap();
        let exact = crate::invasion::lambda_x(&pair, &rates).unwrap();
        assert!((s.estimate - exact).abs() <= 3.0 * s.std_error, "{s:?} vs {exact}");
    }

    #[test]
    fn trajectory_csv() {
        let pair = rho_pair(9.0);
        let rates = JumpRates::new(1.0, 1.0).unwrap();
        let cfg = SimConfig::new(&pair, 10.0, 2).with_sample_dt(1.0);
        let traj = simulate_pdmp(&pair, &rates, &cfg).unwrap();
        let csv = traj.to_csv(3);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,x,y,i");
        // samples 0, 3, 6, 9 and the final one at t = 10
        assert_eq!(lines.len(), 6);
        assert!(lines[5].starts_with("1.0000000000000000e1,"));
    }

    #[test]
    fn standard_error_scales_with_time() {
        let pair = rho_pair(9.0);
        let rates = JumpRates::new(3.0, 2.0).unwrap();
        let base = SimConfig::new(&pair, 4000.0, 21);
        let mut ratios = Vec::new();
        for seed in 0..6 {
            let short = estimate_lambda(&pair, &rates, Species::Y, &base.with_seed(seed)).unwrap();
            let long = SimConfig { t_max: 8000.0, burn_in: 800.0, ..base.with_seed(seed + 100) };
            let long = estimate_lambda(&pair, &rates, Species::Y, &long).unwrap();
            ratios.push(long.std_error / short.std_error);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let target = std::f64::consts::FRAC_1_SQRT_2;
        assert!((mean - target).abs() <= 0.3 * target, "{ratios:?}");
    }

    #[test]
    fn estimate_requires_mixing() {
        let pair = rho_pair(9.0);
        let rates = JumpRates::new(0.01, 0.01).unwrap();
        let cfg = SimConfig::new(&pair, 1000.0, 1);
        assert!(matches!(
            estimate_lambda(&pair, &rates, Species::Y, &cfg),
            Err(Error::InsufficientMixing { .. })
        ));
    }

    #[test]
    fn blow_up_is_reported() {
        let pair = rho_pair(9.0);
        let rates = JumpRates::new(1e-3, 1e-3).unwrap();
        let cfg = SimConfig::new(&pair, 100.0, 1).with_dt_max(100.0).with_sample_dt(100.0).with_start(0.9, 0.1, 0);
        assert!(matches!(
            simulate_switched_logistic(&pair, &rates, Species::X, &cfg),
            Err(Error::IntegratorBlowUp { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let pair = rho_pair(9.0);
        let cfg = SimConfig::new(&pair, 100.0, 1);
        assert!(cfg.validate().is_ok());
        assert!(cfg.with_burn_in(100.0).validate().is_err());
        assert!(cfg.with_batches(10).validate().is_err());
        assert!(cfg.with_dt_max(0.0).validate().is_err());
        assert!(cfg.with_start(0.0, 1.0, 0).validate().is_err());
    }

    #[test]
    fn single_type1_environment_votes_extinction_y() {
        let e = env([1.0, 5.0, 2.0, 8.0, 3.0, 3.0]);
        let pair = EnvPair::new(e, e);
        let rates = JumpRates::new(1.0, 1.0).unwrap();
        let cfg = SimConfig::new(&pair, 200.0, 10);
        let votes = detect_regime(&pair, &rates, &cfg, 20, EXTINCTION_THRESHOLD).unwrap();
        assert_eq!(votes.extinction_y, 20, "{votes:?}");
        assert!(!votes.inconclusive);
    }
}
