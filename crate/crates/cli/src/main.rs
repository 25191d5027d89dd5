//! `lvswitch` command-line tool.

mod svg;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use lvswitch::curves::{curve_grid, CriticalCurve};
use lvswitch::invasion::{lambda_x, lambda_y};
use lvswitch::regimes::{
    catalog_entry, regime_map, votes_confirm, witnesses, McFallback, DEFAULT_BAND,
};
use lvswitch::sim::{
    detect_regime, estimate_lambda, simulate_pdmp, simulate_switched_logistic, EXTINCTION_THRESHOLD,
};
use lvswitch::{
    catalog, rates_to_uv, ChartWeights, EnvPair, Environment, GridSpec, JumpRates, SimConfig, Species, UVCoords,
};

#[derive(Parser)]
#[command(name = "lvswitch", version, about = "Randomly switched Lotka-Volterra competition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Competitive type of one environment or of both members of a pair.
    Classify {
        /// Single environment `a,b,c,d,alpha,beta`.
        #[arg(long, value_name = "LIST", conflicts_with_all = ["pair", "env0", "env1"])]
        env: Option<String>,
        #[command(flatten)]
        pair: OptionalPair,
        #[command(flatten)]
        out: Output,
    },
    /// Both invasion rates and the regime at one jump-rate point.
    Rates {
        #[command(flatten)]
        pair: PairSource,
        #[command(flatten)]
        point: Point,
        /// Fall back to Monte Carlo estimates for a degenerate pair.
        #[arg(long)]
        mc: bool,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Critical curve of one species on a uniform u grid.
    Curve {
        #[command(flatten)]
        pair: PairSource,
        #[arg(long, default_value = "y")]
        species: SpeciesArg,
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[command(flatten)]
        range: VRange,
        #[command(flatten)]
        out: Output,
    },
    /// Regime map over the (u, v) plane.
    Map {
        #[command(flatten)]
        pair: PairSource,
        /// Grid points along each axis.
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[command(flatten)]
        range: VRange,
        /// Absolute sign band around zero.
        #[arg(long, default_value_t = DEFAULT_BAND)]
        band: f64,
        #[arg(long)]
        mc: bool,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: Output,
    },
    /// One trajectory of the full process or of a boundary logistic.
    Simulate {
        #[command(flatten)]
        pair: PairSource,
        #[command(flatten)]
        point: Point,
        #[command(flatten)]
        sim: SimArgs,
        /// Simulate the switched logistic on this axis instead.
        #[arg(long)]
        logistic: Option<SpeciesArg>,
        #[arg(long, default_value_t = 0.5)]
        x0: f64,
        #[arg(long, default_value_t = 0.5)]
        y0: f64,
        #[arg(long, default_value_t = 0)]
        i0: usize,
        /// Keep every k-th recorded sample.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Ergodic Monte Carlo estimate of one invasion rate.
    Estimate {
        #[command(flatten)]
        pair: PairSource,
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value = "y")]
        species: SpeciesArg,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        burn_in: Option<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// Searches the regime map for all four regimes and optionally confirms
    /// each witness by simulation.
    Verify {
        #[command(flatten)]
        pair: PairSource,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[command(flatten)]
        range: VRange,
        /// Replicas per witness; 0 skips the simulation.
        #[arg(long, default_value_t = 0)]
        replicas: usize,
        #[arg(long, default_value_t = EXTINCTION_THRESHOLD)]
        threshold: f64,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Lists the reference pairs, or writes them as JSON files into a directory.
    Catalog {
        /// Directory receiving one `paper-*.json` file per entry.
        #[arg(long, value_name = "DIR")]
        dir: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Regenerates one of the reference figures.
    Figure {
        #[arg(value_parser = ["1", "2", "3a", "3b", "3c", "3d"])]
        id: String,
        /// d1 of the second environment for figure 1.
        #[arg(long, default_value_t = 9.0)]
        rho: f64,
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[command(flatten)]
        range: VRange,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args)]
#[group(required = true, multiple = true)]
struct PairSource {
    /// JSON pair file, or the name of a catalog pair such as paper-1-2.json.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["env0", "env1"])]
    pair: Option<PathBuf>,
    #[arg(long, value_name = "LIST", requires = "env1")]
    env0: Option<String>,
    #[arg(long, value_name = "LIST", requires = "env0")]
    env1: Option<String>,
}

#[derive(Args)]
struct OptionalPair {
    #[arg(long, value_name = "FILE", conflicts_with_all = ["env0", "env1"])]
    pair: Option<PathBuf>,
    #[arg(long, value_name = "LIST", requires = "env1")]
    env0: Option<String>,
    #[arg(long, value_name = "LIST", requires = "env0")]
    env1: Option<String>,
}

/// A jump-rate point: `(u, v)` in the `(alpha0, alpha1)` chart or raw rates.
#[derive(Args)]
struct Point {
    #[arg(long, requires = "v", conflicts_with_all = ["lambda0", "lambda1"])]
    u: Option<f64>,
    #[arg(long, requires = "u")]
    v: Option<f64>,
    #[arg(long, requires = "lambda1")]
    lambda0: Option<f64>,
    #[arg(long, requires = "lambda0")]
    lambda1: Option<f64>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct VRange {
    #[arg(long, default_value_t = 1e-2)]
    v_min: f64,
    #[arg(long, default_value_t = 1e3)]
    v_max: f64,
}

#[derive(Args)]
struct Output {
    #[arg(long)]
    format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpeciesArg {
    X,
    Y,
}

impl From<SpeciesArg> for Species {
    fn from(s: SpeciesArg) -> Species {
        match s {
            SpeciesArg::X => Species::X,
            SpeciesArg::Y => Species::Y,
        }
    }
}

enum Failure {
    /// Exit status 2.
    Usage(String),
    /// Exit status 1.
    Domain(lvswitch::Error),
    /// Rejected parameter values, exit status 2.
    BadInput(lvswitch::Error),
    Io(String),
}

impl From<lvswitch::Error> for Failure {
    fn from(e: lvswitch::Error) -> Self {
        match e {
            lvswitch::Error::InvalidParameter(_) | lvswitch::Error::ChartBoundary { .. } => Failure::BadInput(e),
            e => Failure::Domain(e),
        }
    }
}

type Run<T = ()> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn parse_env(list: &str) -> Run<Environment> {
    let values: Vec<f64> = list
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| usage(format!("cannot parse environment {list:?}: {e}")))?;
    Ok(Environment::from_slice(&values)?)
}

fn read_pair(path: &Path) -> Run<EnvPair> {
    if !path.exists() {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        if path.parent().is_none_or(|p| p.as_os_str().is_empty()) {
            if let Some(entry) = catalog_entry(stem) {
                return Ok(entry.pair);
            }
        }
    }
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("invalid pair file {}: {e}", path.display())))
}

fn resolve_pair(pair: &Option<PathBuf>, env0: &Option<String>, env1: &Option<String>) -> Run<Option<EnvPair>> {
    match (pair, env0, env1) {
        (Some(p), None, None) => read_pair(p).map(Some),
        (None, Some(a), Some(b)) => Ok(Some(EnvPair::new(parse_env(a)?, parse_env(b)?))),
        (None, None, None) => Ok(None),
        _ => Err(usage("give either --pair or both --env0 and --env1")),
    }
}

impl PairSource {
    fn get(&self) -> Run<EnvPair> {
        resolve_pair(&self.pair, &self.env0, &self.env1)?.ok_or_else(|| usage("a pair is required"))
    }
}

impl Point {
    fn rates(&self, pair: &EnvPair) -> Run<JumpRates> {
        match (self.u, self.v, self.lambda0, self.lambda1) {
            (Some(u), Some(v), None, None) => Ok(UVCoords::new(u, v, ChartWeights::alpha(pair))?.to_rates()?),
            (None, None, Some(l0), Some(l1)) => Ok(JumpRates::new(l0, l1)?),
            _ => Err(usage("give either --u and --v or --lambda0 and --lambda1")),
        }
    }
}

impl Output {
    fn format(&self, default: Format, allowed: &[Format]) -> Run<Format> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(usage("format not supported by this command"))
        }
    }

    /// Writes through a temporary file renamed into place.
    fn emit(&self, content: &str) -> Run {
        let Some(path) = &self.out else {
            print!("{content}");
            return Ok(());
        };
        write_atomic(path, content)
    }
}

fn write_atomic(path: &Path, content: &str) -> Run {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(content.as_bytes()).map_err(io)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(fs::Permissions::from_mode(0o644)).map_err(io)?;
    }
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types always serialize");
    s.push('\n');
    s
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types always serialize")
}

fn sim_config(pair: &EnvPair, sim: &SimArgs, default_t_max: f64) -> SimConfig {
    SimConfig::new(pair, sim.t_max.unwrap_or(default_t_max), sim.seed)
}

fn check_range(range: &VRange) -> Run {
    if range.v_min > 0.0 && range.v_min < range.v_max && range.v_max.is_finite() {
        Ok(())
    } else {
        Err(usage("need 0 < --v-min < --v-max"))
    }
}

fn classify_cmd(env: &Option<String>, pair: &OptionalPair, out: &Output) -> Run {
    let format = out.format(Format::Text, &[Format::Text, Format::Json])?;
    let types: Vec<(String, String)> = match (env, resolve_pair(&pair.pair, &pair.env0, &pair.env1)?) {
        (Some(e), None) => vec![("env".into(), parse_env(e)?.classify().to_string())],
        (None, Some(p)) => vec![
            ("env0".into(), p.env0().classify().to_string()),
            ("env1".into(), p.env1().classify().to_string()),
        ],
        _ => return Err(usage("give --env, --pair or --env0/--env1")),
    };
    let text = match format {
        Format::Json => pretty(&Value::Object(types.into_iter().map(|(k, t)| (k, Value::String(t))).collect())),
        _ if types.len() == 1 => format!("{}\n", types[0].1),
        _ => types.iter().map(|(k, t)| format!("{k}: {t}\n")).collect(),
    };
    out.emit(&text)
}

fn rates_cmd(pair: &EnvPair, point: &Point, mc: bool, sim: &SimArgs, out: &Output) -> Run {
    let format = out.format(Format::Json, &[Format::Json, Format::Csv])?;
    let rates = point.rates(pair)?;
    let uv = rates_to_uv(&rates, ChartWeights::alpha(pair));
    let mut band = (DEFAULT_BAND, DEFAULT_BAND);
    let mut eval = |species: Species| -> Run<f64> {
        let closed = match species {
            Species::Y => lambda_y(pair, uv.u, uv.v),
            Species::X => lambda_x(pair, &rates),
        };
        match closed {
            Err(lvswitch::Error::DegenerateLogistic(_)) if mc => {
                let t_max = sim.t_max.unwrap_or(1e4).max(lvswitch::sim::min_t_max(&rates));
                let stats = estimate_lambda(pair, &rates, species, &SimConfig::new(pair, t_max, sim.seed))?;
                let b = 3.0 * stats.std_error;
                match species {
                    Species::X => band.0 = b,
                    Species::Y => band.1 = b,
                }
                Ok(stats.estimate)
            }
            other => Ok(other?),
        }
    };
    let (lx, ly) = (eval(Species::X)?, eval(Species::Y)?);
    let label = lvswitch::regimes::classify_regime_banded(lx, ly, band.0, band.1);
    let text = match format {
        Format::Csv => format!(
            "u,v,lambda0,lambda1,lambda_x,lambda_y,label\n{}\n",
            [uv.u, uv.v, rates.lambda0(), rates.lambda1(), lx, ly]
                .map(lvswitch::format_real)
                .join(",")
                + ","
                + label.name()
        ),
        _ => pretty(&json!({
            "u": uv.u, "v": uv.v,
            "lambda0": rates.lambda0(), "lambda1": rates.lambda1(),
            "lambda_x": lx, "lambda_y": ly,
            "label": label,
        })),
    };
    out.emit(&text)
}

fn curves_csv(u: &[f64], columns: &[(&str, &CriticalCurve)]) -> String {
    let mut s = String::from("u");
    for (name, _) in columns {
        s.push_str(&format!(",{name}_kind,{name}_value"));
    }
    s.push('\n');
    for (k, u) in u.iter().enumerate() {
        s.push_str(&lvswitch::format_real(*u));
        for (_, c) in columns {
            let v = c.values[k];
            s.push_str(&format!(",{},{}", v.kind_name(), v.finite().map(lvswitch::format_real).unwrap_or_default()));
        }
        s.push('\n');
    }
    s
}

fn curve_cmd(pair: &EnvPair, species: Species, n: usize, range: &VRange, out: &Output) -> Run {
    let format = out.format(Format::Csv, &[Format::Csv, Format::Json, Format::Svg])?;
    if n < 2 {
        return Err(usage("--n must be at least 2"));
    }
    check_range(range)?;
    let c = curve_grid(pair, species, n)?;
    let text = match format {
        Format::Csv => c.to_csv(),
        Format::Json => pretty(&c),
        _ => {
            let mut plot = svg::Plot::new(&format!("critical curve v_{}", species.name()), range.v_min, range.v_max);
            let color = if species == Species::Y { svg::BLUE } else { svg::RED };
            plot.curve(&c.u_grid, &c.values, color, &format!("v_{}", species.name()));
            plot.finish()
        }
    };
    out.emit(&text)
}

fn map_cmd(pair: &EnvPair, n: usize, range: &VRange, band: f64, mc: Option<McFallback>, out: &Output) -> Run {
    let format = out.format(Format::Csv, &[Format::Csv, Format::Json, Format::Svg])?;
    check_range(range)?;
    let grid = GridSpec::new(n, n, range.v_min, range.v_max).map_err(|e| usage(e.to_string()))?;
    let map = regime_map(pair, &grid.u_grid(), &grid.v_grid(), band, mc.as_ref())?;
    let text = match format {
        Format::Csv => map.to_csv(),
        Format::Json => pretty(&map),
        _ => {
            let mut plot = svg::Plot::new("regime map", range.v_min, range.v_max);
            plot.regimes(&map);
            plot.finish()
        }
    };
    out.emit(&text)
}

fn figure_pair(id: &str, rho: f64) -> Run<(String, EnvPair)> {
    let named = |name: &str| catalog_entry(name).expect("figure pairs are in the catalog");
    Ok(match id {
        "1" => {
            let base = named("Type 1-2").pair;
            (format!("Type 1-2, rho = {rho}"), base.with_d1(rho)?)
        }
        "2" => ("Type 3-3".into(), named("Type 3-3").pair),
        "3a" => ("Type 1-3".into(), named("Type 1-3").pair),
        "3b" => ("Type 1-4".into(), named("Type 1-4").pair),
        "3c" => ("Type 3-4".into(), named("Type 3-4").pair),
        "3d" => ("Type 4-4".into(), named("Type 4-4").pair),
        other => return Err(usage(format!("unknown figure {other}"))),
    })
}

fn figure_cmd(id: &str, rho: f64, n: usize, range: &VRange, out: &Output) -> Run {
    let format = out.format(Format::Svg, &[Format::Csv, Format::Json, Format::Svg])?;
    if n < 2 {
        return Err(usage("--n must be at least 2"));
    }
    check_range(range)?;
    let (title, pair) = figure_pair(id, rho)?;
    let vy = curve_grid(&pair, Species::Y, n)?;
    let vx = curve_grid(&pair, Species::X, n)?;
    let text = match format {
        Format::Csv => curves_csv(&vy.u_grid, &[("vy", &vy), ("vx", &vx)]),
        Format::Json => pretty(&json!({ "title": title, "pair": pair, "v_y": vy, "v_x": vx })),
        _ => {
            let grid = GridSpec::new(120, 120, range.v_min, range.v_max).map_err(|e| usage(e.to_string()))?;
            let map = regime_map(&pair, &grid.u_grid(), &grid.v_grid(), DEFAULT_BAND, None)?;
            let mut plot = svg::Plot::new(&title, range.v_min, range.v_max);
            plot.regimes(&map);
            plot.curve(&vy.u_grid, &vy.values, svg::BLUE, "v_y");
            plot.curve(&vx.u_grid, &vx.values, svg::RED, "v_x");
            plot.finish()
        }
    };
    out.emit(&text)
}

fn run(cli: Cli) -> Run {
    match cli.command {
        Command::Classify { env, pair, out } => classify_cmd(&env, &pair, &out),
        Command::Rates { pair, point, mc, sim, out } => rates_cmd(&pair.get()?, &point, mc, &sim, &out),
        Command::Curve { pair, species, n, range, out } => curve_cmd(&pair.get()?, species.into(), n, &range, &out),
        Command::Map { pair, n, range, band, mc, sim, out } => {
            let fallback = mc.then(|| McFallback {
                t_max: sim.t_max.unwrap_or(McFallback::default().t_max),
                seed: sim.seed,
            });
            map_cmd(&pair.get()?, n, &range, band, fallback, &out)
        }
        Command::Simulate { pair, point, sim, logistic, x0, y0, i0, stride, out } => {
            let format = out.format(Format::Csv, &[Format::Csv, Format::Json])?;
            let pair = pair.get()?;
            let rates = point.rates(&pair)?;
            let cfg = sim_config(&pair, &sim, 100.0).with_start(x0, y0, i0);
            let cfg = cfg.with_sample_dt(cfg.t_max / 1e4);
            let traj = match logistic {
                Some(axis) => simulate_switched_logistic(&pair, &rates, axis.into(), &cfg)?,
                None => simulate_pdmp(&pair, &rates, &cfg)?,
            };
            let text = match format {
                Format::Json => pretty(&traj),
                _ => traj.to_csv(stride),
            };
            out.emit(&text)
        }
        Command::Estimate { pair, point, species, sim, burn_in, out } => {
            let format = out.format(Format::Json, &[Format::Json, Format::Csv])?;
            let pair = pair.get()?;
            let rates = point.rates(&pair)?;
            let mut cfg = sim_config(&pair, &sim, 1e4);
            if let Some(b) = burn_in {
                cfg = cfg.with_burn_in(b);
            }
            let stats = estimate_lambda(&pair, &rates, species.into(), &cfg)?;
            let text = match format {
                Format::Csv => format!(
                    "estimate,std_error,batches,total_time\n{},{},{},{}\n",
                    lvswitch::format_real(stats.estimate),
                    lvswitch::format_real(stats.std_error),
                    stats.batches,
                    lvswitch::format_real(stats.total_time)
                ),
                _ => pretty(&stats),
            };
            out.emit(&text)
        }
        Command::Verify { pair, n, range, replicas, threshold, sim, out } => {
            out.format(Format::Json, &[Format::Json])?;
            check_range(&range)?;
            let pair = pair.get()?;
            let grid = GridSpec::new(n, n, range.v_min, range.v_max).map_err(|e| usage(e.to_string()))?;
            let map = regime_map(&pair, &grid.u_grid(), &grid.v_grid(), DEFAULT_BAND, None)?;
            let set = witnesses(&map)?;
            let mut report = to_value(&set);
            if replicas > 0 {
                let cfg = sim_config(&pair, &sim, 5e3);
                let mut all = true;
                for (k, w) in set.witnesses.iter().enumerate() {
                    let votes = detect_regime(&pair, &w.rates()?, &cfg.with_seed(sim.seed + k as u64), replicas, threshold)?;
                    let ok = votes_confirm(&votes, w.label);
                    all &= ok;
                    report["witnesses"][k]["votes"] = to_value(&votes);
                    report["witnesses"][k]["confirmed"] = Value::Bool(ok);
                }
                report["confirmed"] = Value::Bool(all);
            }
            out.emit(&pretty(&report))
        }
        Command::Catalog { dir, out } => {
            out.format(Format::Json, &[Format::Json])?;
            let entries = catalog();
            if let Some(dir) = dir {
                fs::create_dir_all(&dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
                for e in &entries {
                    write_atomic(&dir.join(format!("{}.json", e.file_stem())), &pretty(&e.pair))?;
                }
            }
            out.emit(&pretty(&entries))
        }
        Command::Figure { id, rho, n, range, out } => figure_cmd(&id, rho, n, &range, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("LVSWITCH_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error[usage]: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::BadInput(e)) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error[io]: {msg}");
            ExitCode::from(1)
        }
    }
}
