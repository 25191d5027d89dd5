//! Minimal SVG output: a `(u, v)` frame with a log-scaled v axis, regime
//! cells and critical-curve polylines.

use std::fmt::Write;

use lvswitch::curves::ExtendedV;
use lvswitch::{RegimeLabel, RegimeMap};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

pub const BLUE: &str = "#1f4fd1";
pub const RED: &str = "#d11f1f";

fn label_fill(label: RegimeLabel) -> &'static str {
    match label {
        RegimeLabel::Persistence => "#c7e9c0",
        RegimeLabel::ExtinctionX => "#fdd0a2",
        RegimeLabel::ExtinctionY => "#c6dbef",
        RegimeLabel::RandomExtinction => "#f4b6c2",
        RegimeLabel::Boundary => "#ffffff",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub struct Plot {
    title: String,
    v_min: f64,
    v_max: f64,
    layers: String,
    legend: Vec<(String, String, bool)>,
}

impl Plot {
    pub fn new(title: &str, v_min: f64, v_max: f64) -> Plot {
        Plot {
            title: title.to_string(),
            v_min,
            v_max,
            layers: String::new(),
            legend: Vec::new(),
        }
    }

    fn px(&self, u: f64) -> f64 {
        LEFT + u * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        let (l0, l1) = (self.v_min.log10(), self.v_max.log10());
        let t = (v.log10() - l0) / (l1 - l0);
        HEIGHT - BOTTOM - t * (HEIGHT - TOP - BOTTOM)
    }

    /// Shades every map cell by its regime.
    pub fn regimes(&mut self, map: &RegimeMap) {
        let (nu, nv) = (map.u_grid.len(), map.v_grid.len());
        if nu == 0 || nv == 0 {
            return;
        }
        let edge = |g: &[f64], k: usize, log: bool| -> f64 {
            let n = g.len();
            let f = |x: f64| if log { x.ln() } else { x };
            let inv = |x: f64| if log { x.exp() } else { x };
            if n == 1 {
                return inv(f(g[0]) + if k == 0 { -0.5 } else { 0.5 });
            }
            if k == 0 {
                inv(f(g[0]) - 0.5 * (f(g[1]) - f(g[0])))
            } else if k == n {
                inv(f(g[n - 1]) + 0.5 * (f(g[n - 1]) - f(g[n - 2])))
            } else {
                inv(0.5 * (f(g[k - 1]) + f(g[k])))
            }
        };
        self.layers.push_str("<g shape-rendering=\"crispEdges\">\n");
        for i in 0..nu {
            let (u0, u1) = (edge(&map.u_grid, i, false).max(0.0), edge(&map.u_grid, i + 1, false).min(1.0));
            for j in 0..nv {
                let v0 = edge(&map.v_grid, j, true).max(self.v_min);
                let v1 = edge(&map.v_grid, j + 1, true).min(self.v_max);
                if !(u1 > u0 && v1 > v0) {
                    continue;
                }
                let (x, y) = (self.px(u0), self.py(v1));
                let _ = writeln!(
                    self.layers,
                    "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                    self.px(u1) - x,
                    self.py(v0) - y,
                    label_fill(map.labels[i][j])
                );
            }
        }
        self.layers.push_str("</g>\n");
        for label in map.regimes() {
            self.legend.push((label.name().replace('_', " "), label_fill(label).into(), true));
        }
    }

    /// Draws the finite part of a critical curve, broken wherever the value
    /// is zero, infinite or outside the v range.
    pub fn curve(&mut self, u: &[f64], values: &[ExtendedV], color: &str, name: &str) {
        let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for (u, v) in u.iter().zip(values) {
            match v.finite().filter(|v| (self.v_min..=self.v_max).contains(v)) {
                Some(v) => runs.last_mut().unwrap().push((self.px(*u), self.py(v))),
                None if !runs.last().unwrap().is_empty() => runs.push(Vec::new()),
                None => {}
            }
        }
        for run in runs.iter().filter(|r| !r.is_empty()) {
            let points: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                self.layers,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>",
                points.join(" ")
            );
        }
        self.legend.push((name.to_string(), color.to_string(), false));
    }

    pub fn finish(self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
        );
        let _ = writeln!(s, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
        s.push_str(&self.layers);
        let (x0, x1) = (self.px(0.0), self.px(1.0));
        let (y0, y1) = (self.py(self.v_min), self.py(self.v_max));
        let _ = writeln!(
            s,
            "<rect x=\"{x0}\" y=\"{y1}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
            x1 - x0,
            y0 - y1
        );
        for k in 0..=10 {
            let u = k as f64 / 10.0;
            let x = self.px(u);
            let _ = writeln!(s, "<line x1=\"{x:.2}\" y1=\"{y0}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/>", y0 + 5.0);
            let _ = writeln!(s, "<text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\">{u:.1}</text>", y0 + 18.0);
        }
        let (d0, d1) = (self.v_min.log10().ceil() as i32, self.v_max.log10().floor() as i32);
        for d in d0..=d1 {
            let y = self.py(10f64.powi(d));
            let _ = writeln!(s, "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{x0}\" y2=\"{y:.2}\" stroke=\"black\"/>", x0 - 5.0);
            let _ = writeln!(
                s,
                "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">1e{d}</text>",
                x0 - 8.0,
                y + 4.0
            );
        }
        let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">u</text>", 0.5 * (x0 + x1), HEIGHT - 10.0);
        let _ = writeln!(
            s,
            "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">v</text>",
            0.5 * (y0 + y1),
            0.5 * (y0 + y1)
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
            0.5 * (x0 + x1),
            escape(&self.title)
        );
        for (k, (name, color, filled)) in self.legend.iter().enumerate() {
            let y = y1 + 10.0 + 20.0 * k as f64;
            let lx = x1 + 15.0;
            if *filled {
                let _ = writeln!(s, "<rect x=\"{lx}\" y=\"{y}\" width=\"14\" height=\"12\" fill=\"{color}\" stroke=\"#888\"/>");
            } else {
                let _ = writeln!(
                    s,
                    "<line x1=\"{lx}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"2\"/>",
                    y + 6.0,
                    lx + 14.0,
                    y + 6.0
                );
            }
            let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">{}</text>", lx + 20.0, y + 10.0, escape(name));
        }
        s.push_str("</svg>\n");
        s
    }
}
