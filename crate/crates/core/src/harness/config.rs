//! Experiment configuration read from `key = value` files with `[section]`
//! headers.

use std::path::{Path, PathBuf};

use ini::Ini;

use crate::error::{Error, Result};
use crate::field::{Boundary, GridSpec};
use crate::geometry::{default_delta, Curve, Point};
use crate::solver::{default_dt, StepParams};

/// Markers used for circles built from the config.
pub const DEFAULT_MARKERS: usize = 256;

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("domain", &["nx_ratio", "lx", "ly", "bc"]),
    ("interface", &["kind", "cx", "cy", "r0", "delta", "file"]),
    ("sweep", &["eps", "t_end", "save_every"]),
    ("solver", &["dt_rule", "cg_tol", "stabilization"]),
    ("output", &["dir"]),
];

#[derive(Debug, Clone, PartialEq)]
pub enum InterfaceSpec {
    Circle { center: Point, r0: f64 },
    /// Marker file in the curve text format.
    CurveFile(PathBuf),
}

/// How the time step follows from `h` and `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    /// `0.1 min(h^2, eps^2)`.
    Default,
    /// `k min(h^2, eps^2)`.
    Factor(f64),
    /// A fixed step.
    Fixed(f64),
}

impl DtRule {
    pub fn dt(&self, h: f64, eps: f64) -> f64 {
        match *self {
            DtRule::Default => default_dt(h, eps),
            DtRule::Factor(k) => k * (h * h).min(eps * eps),
            DtRule::Fixed(dt) => dt,
        }
    }

    fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "default" {
            return Ok(DtRule::Default);
        }
        if let Some(rest) = s.strip_prefix("fixed:") {
            return positive("solver.dt_rule", rest).map(DtRule::Fixed);
        }
        if let Some(rest) = s.strip_prefix("factor:") {
            return positive("solver.dt_rule", rest).map(DtRule::Factor);
        }
        Err(Error::Config(format!(
            "solver.dt_rule must be `default`, `factor:<k>` or `fixed:<dt>`, got `{s}`"
        )))
    }
}

impl std::fmt::Display for DtRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DtRule::Default => write!(f, "default"),
            DtRule::Factor(k) => write!(f, "factor:{k:?}"),
            DtRule::Fixed(dt) => write!(f, "fixed:{dt:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Cells per `eps`: `h = eps / nx_ratio`.
    pub nx_ratio: f64,
    pub lx: f64,
    pub ly: f64,
    pub bc: Boundary,
    pub interface: InterfaceSpec,
    /// Band half-width; chosen from the curve when absent.
    pub delta: Option<f64>,
    pub eps: Vec<f64>,
    pub t_end: f64,
    /// Physical time between saved frames.
    pub save_every: f64,
    pub dt_rule: DtRule,
    pub cg_tol: f64,
    pub stabilization: f64,
    pub output_dir: PathBuf,
    pub markers: usize,
}

fn positive(key: &str, s: &str) -> Result<f64> {
    let v = number(key, s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("{key} must be positive, got {v}")))
    }
}

fn number(key: &str, s: &str) -> Result<f64> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Config(format!("{key}: `{}` is not a finite number", s.trim()))),
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        // relative curve files are resolved against the config location
        if let InterfaceSpec::CurveFile(f) = &cfg.interface {
            if f.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.interface = InterfaceSpec::CurveFile(dir.join(f));
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for (section, props) in ini.iter() {
            let Some(name) = section else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(Error::Config(format!("key `{k}` outside any section")));
                }
                continue;
            };
            let Some((_, keys)) = KNOWN_KEYS.iter().find(|(s, _)| *s == name) else {
                return Err(Error::Config(format!("unknown section [{name}]")));
            };
            for (k, _) in props.iter() {
                if !keys.contains(&k) {
                    return Err(Error::Config(format!("unknown key `{k}` in [{name}]")));
                }
            }
        }
        let get = |section: &str, key: &str| ini.get_from(Some(section), key);
        let num_or = |section: &str, key: &str, default: f64| -> Result<f64> {
            get(section, key).map_or(Ok(default), |s| positive(&format!("{section}.{key}"), s))
        };
        let require = |section: &str, key: &str| {
            get(section, key).ok_or_else(|| Error::Config(format!("missing {section}.{key}")))
        };

        let nx_ratio = num_or("domain", "nx_ratio", 4.0)?;
        let lx = num_or("domain", "lx", 1.0)?;
        let ly = num_or("domain", "ly", lx)?;
        let bc = match get("domain", "bc").unwrap_or("dirichlet_box").trim() {
            "dirichlet_box" => Boundary::DirichletBox,
            "periodic" => Boundary::Periodic,
            other => return Err(Error::Config(format!("domain.bc must be dirichlet_box or periodic, got `{other}`"))),
        };

        let interface = match require("interface", "kind")?.trim() {
            "circle" => InterfaceSpec::Circle {
                center: [
                    get("interface", "cx").map_or(Ok(lx / 2.0), |s| number("interface.cx", s))?,
                    get("interface", "cy").map_or(Ok(ly / 2.0), |s| number("interface.cy", s))?,
                ],
                r0: positive("interface.r0", require("interface", "r0")?)?,
            },
            "curve" => InterfaceSpec::CurveFile(PathBuf::from(require("interface", "file")?.trim())),
            other => return Err(Error::Config(format!("interface.kind must be circle or curve, got `{other}`"))),
        };
        let delta = match get("interface", "delta").map(str::trim) {
            None | Some("auto") => None,
            Some(s) => Some(positive("interface.delta", s)?),
        };

        let eps = require("sweep", "eps")?
            .split(',')
            .map(|s| positive("sweep.eps", s))
            .collect::<Result<Vec<_>>>()?;
        let t_end = positive("sweep.t_end", require("sweep", "t_end")?)?;
        let save_every = num_or("sweep", "save_every", t_end / 10.0)?;

        let dt_rule = get("solver", "dt_rule").map_or(Ok(DtRule::Default), DtRule::parse)?;
        let cg_tol = num_or("solver", "cg_tol", 1e-10)?;
        let stabilization = num_or("solver", "stabilization", 1.0)?;
        let output_dir = PathBuf::from(get("output", "dir").unwrap_or("out").trim());

        let cfg = Self {
            nx_ratio,
            lx,
            ly,
            bc,
            interface,
            delta,
            eps,
            t_end,
            save_every,
            dt_rule,
            cg_tol,
            stabilization,
            output_dir,
            markers: DEFAULT_MARKERS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the static invariants. Geometry-dependent checks that need
    /// the curve file run in [`check_geometry`](Self::check_geometry).
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.nx_ratio < 4.0 {
            return bad(format!("domain.nx_ratio must be at least 4 (h <= eps / 4), got {}", self.nx_ratio));
        }
        if self.eps.is_empty() {
            return bad("sweep.eps is empty".into());
        }
        if let Some(e) = self.eps.iter().find(|&&e| e > 1.0) {
            return bad(format!("eps must lie in (0, 1], got {e}"));
        }
        if self.save_every > self.t_end {
            return bad(format!("sweep.save_every {} exceeds t_end {}", self.save_every, self.t_end));
        }
        if self.cg_tol > 1e-10 {
            return bad(format!("solver.cg_tol must not exceed 1e-10, got {}", self.cg_tol));
        }
        if self.stabilization < 1.0 {
            return bad(format!("solver.stabilization must be at least max f'' = 1, got {}", self.stabilization));
        }
        if let InterfaceSpec::Circle { r0, .. } = self.interface {
            if self.t_end >= r0 * r0 / 2.0 {
                return bad(format!("t_end {} is past the extinction time {} of the circle", self.t_end, r0 * r0 / 2.0));
            }
        }
        for &eps in &self.eps {
            let g = self.grid_for(eps)?;
            let n_ok = g.nx >= 8 && g.ny >= 8;
            if !n_ok {
                return bad(format!("eps = {eps} gives a {}x{} grid, below 8 cells", g.nx, g.ny));
            }
        }
        Ok(())
    }

    /// Grid with `h = eps / nx_ratio` (rounded to whole cells).
    pub fn grid_for(&self, eps: f64) -> Result<GridSpec> {
        let nx = (self.lx * self.nx_ratio / eps).round().max(1.0) as usize;
        let ny = (self.ly * self.nx_ratio / eps).round().max(1.0) as usize;
        let g = GridSpec::new(nx, ny, self.lx, self.ly, self.bc).map_err(|e| Error::Config(e.to_string()))?;
        if !g.has_square_cells() {
            return Err(Error::Config(format!(
                "lx / ly = {} does not give square cells at eps = {eps}",
                self.lx / self.ly
            )));
        }
        Ok(g)
    }

    pub fn initial_curve(&self) -> Result<Curve> {
        match &self.interface {
            InterfaceSpec::Circle { center, r0 } => Curve::circle(*center, *r0, self.markers),
            InterfaceSpec::CurveFile(path) => Curve::read(path)?.resample(self.markers),
        }
    }

    pub fn delta_for(&self, curve: &Curve) -> f64 {
        self.delta.unwrap_or_else(|| default_delta(curve, self.lx, self.ly))
    }

    /// Band and resolution checks that need the curve: `delta` must fit
    /// inside the domain and span at least one cell for every `eps`.
    /// Returns the `eps` values with `delta < 5 eps`, where the cut-off
    /// truncates the profile tails.
    pub fn check_geometry(&self, curve: &Curve) -> Result<Vec<f64>> {
        let delta = self.delta_for(curve);
        let clearance = curve.clearance(self.lx, self.ly);
        if 3.0 * delta >= clearance {
            return Err(Error::Config(format!(
                "delta = {delta} needs a wall clearance above {}, the curve has {clearance}",
                3.0 * delta
            )));
        }
        let mut thin = Vec::new();
        for &eps in &self.eps {
            let h = self.grid_for(eps)?.spacing().map_err(|e| Error::Config(e.to_string()))?;
            if delta < h {
                return Err(Error::Config(format!("delta = {delta} is thinner than one cell at eps = {eps}")));
            }
            if delta < 5.0 * eps {
                thin.push(eps);
            }
        }
        Ok(thin)
    }

    pub fn step_params(&self, grid: &GridSpec, eps: f64) -> Result<StepParams> {
        let mut p = StepParams::for_grid(grid, eps)?;
        p.dt = self.dt_rule.dt(grid.spacing()?, eps);
        p.cg_tol = self.cg_tol;
        p.stabilization = self.stabilization;
        Ok(p)
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_text(&self) -> String {
        let bc = match self.bc {
            Boundary::DirichletBox => "dirichlet_box",
            Boundary::Periodic => "periodic",
        };
        let interface = match &self.interface {
            InterfaceSpec::Circle { center, r0 } => {
                format!("kind = circle\ncx = {:?}\ncy = {:?}\nr0 = {r0:?}\n", center[0], center[1])
            }
            InterfaceSpec::CurveFile(p) => format!("kind = curve\nfile = {}\n", p.display()),
        };
        let delta = self.delta.map_or("auto".to_string(), |d| format!("{d:?}"));
        let eps: Vec<String> = self.eps.iter().map(|e| format!("{e:?}")).collect();
        format!(
            "[domain]\nnx_ratio = {:?}\nlx = {:?}\nly = {:?}\nbc = {bc}\n\n[interface]\n{interface}delta = {delta}\n\n\
             [sweep]\neps = {}\nt_end = {:?}\nsave_every = {:?}\n\n[solver]\ndt_rule = {}\ncg_tol = {:?}\nstabilization = {:?}\n\n\
             [output]\ndir = {}\n",
            self.nx_ratio,
            self.lx,
            self.ly,
            eps.join(", "),
            self.t_end,
            self.save_every,
            self.dt_rule,
            self.cg_tol,
            self.stabilization,
            self.output_dir.display()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHRINKING: &str = "\
[domain]
nx_ratio = 4
lx = 1
ly = 1
bc = dirichlet_box

[interface]
kind = circle
cx = 0.5
cy = 0.5
r0 = 0.4
delta = 0.03

[sweep]
eps = 0.08, 0.04, 0.02
t_end = 0.05
save_every = 0.005

[solver]
dt_rule = default
cg_tol = 1e-10
stabilization = 1

[output]
dir = out/shrinking
";

    #[test]
    fn parses_all_keys() {
        let c = ExperimentConfig::parse(SHRINKING).unwrap();
        assert_eq!(c.eps, vec![0.08, 0.04, 0.02]);
        assert_eq!(c.interface, InterfaceSpec::Circle { center: [0.5, 0.5], r0: 0.4 });
        assert_eq!(c.delta, Some(0.03));
        assert_eq!(c.bc, Boundary::DirichletBox);
        assert_eq!(c.dt_rule, DtRule::Default);
        assert_eq!(c.output_dir, PathBuf::from("out/shrinking"));
        assert_eq!(c.grid_for(0.02).unwrap().nx, 200);
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            SHRINKING.replace("nx_ratio = 4", "nx_ratio = 3"),
            SHRINKING.replace("bc = dirichlet_box", "bc = neumann"),
            SHRINKING.replace("kind = circle", "kind = square"),
            SHRINKING.replace("t_end = 0.05", "t_end = 0.09"),
            SHRINKING.replace("[output]", "[extra]"),
            SHRINKING.replace("cg_tol = 1e-10", "cg_tol = 1e-6"),
            SHRINKING.replace("cg_tol = 1e-10", "tolerance = 1e-12"),
            SHRINKING.replace("eps = 0.08, 0.04, 0.02", "eps = 0.08, x"),
            SHRINKING.replace("dt_rule = default", "dt_rule = cfl"),
            SHRINKING.replace("r0 = 0.4\n", ""),
        ];
        for text in cases {
            let err = ExperimentConfig::parse(&text).unwrap_err();
            assert!(err.is_config(), "{err}");
        }
    }

    #[test]
    fn geometry_checks() {
        let c = ExperimentConfig::parse(SHRINKING).unwrap();
        let curve = c.initial_curve().unwrap();
        assert_eq!(c.check_geometry(&curve).unwrap(), vec![0.08, 0.04, 0.02]);
        let wide = ExperimentConfig::parse(&SHRINKING.replace("delta = 0.03", "delta = 0.05")).unwrap();
        assert!(wide.check_geometry(&curve).unwrap_err().is_config());
        let coarse = ExperimentConfig::parse(&SHRINKING.replace("delta = 0.03", "delta = 0.005")).unwrap();
        assert!(coarse.check_geometry(&curve).unwrap_err().is_config());
    }

    #[test]
    fn dt_rules() {
        assert_eq!(DtRule::parse("factor:0.05").unwrap().dt(0.1, 0.2), 0.05 * (0.1 * 0.1));
        assert_eq!(DtRule::parse("fixed:0.001").unwrap().dt(0.1, 0.2), 0.001);
        assert_eq!(DtRule::Default.dt(0.1, 0.2), default_dt(0.1, 0.2));
    }
}
