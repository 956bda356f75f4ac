//! Sweeps over `eps`: diffuse run, sharp tracker on the same clock, and the
//! approximation rebuilt from the tracked curve at every save time.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{ExperimentConfig, InterfaceSpec};
use super::norms::{frame_errors, ErrorReport, FrameErrors};
use super::rates::{fit_rate, RateFit};
use crate::approx::ApproxSolution;
use crate::error::{Error, Result};
use crate::field::{discrete_divergence, GridSpec};
use crate::geometry::{Curve, TubularGeometry};
use crate::profile::{quartic_profile, ProfileTable};
use crate::sharp::{evolve_curve, exact_circle_radius, extract_zero_levelset, SharpState};
use crate::snapshot::{dump_field, write_checkpoint, RunManifest};
use crate::solver::{dissipation, energy_identity_residual, total_energy, EnergySample, NsacSolver, NsacState};

/// What a per-`eps` job computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Diffuse solver only.
    Diffuse,
    /// Diffuse solver, sharp tracker and error norms.
    Compare,
}

/// Energy bookkeeping after one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub step: usize,
    pub t: f64,
    pub e_eps: f64,
    pub e_tot: f64,
    pub dissipation: f64,
}

/// Mean radii of the final interfaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusComparison {
    /// Zero level set of the diffuse run.
    pub diffuse: f64,
    /// Tracked sharp curve.
    pub sharp: f64,
    /// Exact radius for circles, otherwise the tracked one.
    pub reference: f64,
    pub error: f64,
}

/// Everything recorded for one `eps`.
#[derive(Debug, Clone)]
pub struct EpsOutcome {
    pub eps: f64,
    pub grid: GridSpec,
    pub delta: f64,
    pub dt: f64,
    pub steps: usize,
    pub frames: Vec<FrameErrors>,
    pub report: Option<ErrorReport>,
    pub energy: Vec<EnergyRecord>,
    pub energy_residual: f64,
    /// Largest relative rise of `E_tot` over one step (negative if it always fell).
    pub max_energy_rise: f64,
    pub max_divergence: f64,
    pub max_velocity: f64,
    pub radius: Option<RadiusComparison>,
    pub final_state: NsacState,
    pub final_curve: Option<Curve>,
}

/// Save times `0, s, 2s, ..., T` (the last interval may be shorter).
pub fn save_times(t_end: f64, save_every: f64) -> Vec<f64> {
    let mut times = vec![0.0];
    let mut k = 1;
    loop {
        let t = k as f64 * save_every;
        if t >= t_end * (1.0 - 1e-12) {
            times.push(t_end);
            return times;
        }
        times.push(t);
        k += 1;
    }
}

/// Directory name used for one `eps`.
pub fn eps_dir(eps: f64) -> String {
    format!("eps_{eps:?}")
}

fn mean_radius(curve: &Curve) -> f64 {
    curve.mean_radius(curve.centroid())
}

fn energy_record(step: usize, state: &NsacState, solver: &NsacSolver) -> Result<EnergyRecord> {
    let pot = &solver.params().potential;
    let (e_eps, e_tot) = total_energy(state, pot);
    Ok(EnergyRecord { step, t: state.t, e_eps, e_tot, dissipation: dissipation(state, pot)? })
}

/// Runs one `eps` of the sweep. Writes frame snapshots and per-run CSVs
/// under `out` when given.
pub fn run_eps(cfg: &ExperimentConfig, eps: f64, mode: RunMode, profile: &ProfileTable, out: Option<&Path>) -> Result<EpsOutcome> {
    let curve = cfg.initial_curve()?;
    let thin = cfg.check_geometry(&curve)?;
    if thin.contains(&eps) {
        log::info!("eps = {eps}: band half-width below 5 eps, profile tails are cut");
    }
    let grid = cfg.grid_for(eps)?;
    let delta = cfg.delta_for(&curve);
    let geom = TubularGeometry::new(curve.clone(), grid, Some(delta))?;
    let approx = ApproxSolution::build(geom, eps, profile, None, None)?;
    let params = cfg.step_params(&grid, eps)?;
    let pot = params.potential;
    let mut state = NsacState::at_rest(approx.c_a.clone(), eps);
    state.v = approx.v_a.clone();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let times = save_times(cfg.t_end, cfg.save_every);
    let mut sharp = SharpState::new(curve);
    let mut frames = Vec::new();
    let compare = mode == RunMode::Compare;
    if compare {
        frames.push(frame_errors(0.0, &state.c, &state.v, &approx, &pot)?);
    }
    let save_frame = |k: usize, state: &NsacState| -> Result<()> {
        if let Some(dir) = out {
            dump_field(&state.c, dir.join(format!("c_{k:04}.pfld")))?;
        }
        Ok(())
    };
    save_frame(0, &state)?;

    let mut solver = NsacSolver::new(grid, params)?;
    let mut energy = vec![energy_record(0, &state, &solver)?];
    let (mut max_div, mut max_vel) = (discrete_divergence(&state.v).max_abs(), state.v.max_abs());
    let mut max_rise = f64::NEG_INFINITY;
    let mut step = 0;
    for (k, w) in times.windows(2).enumerate() {
        let span = w[1] - w[0];
        let m = (span / params.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let dt = span / m as f64;
        if dt != solver.params().dt {
            solver = NsacSolver::new(grid, crate::solver::StepParams { dt, ..params })?;
        }
        for _ in 0..m {
            let (next, info) = solver.step(&state).map_err(|e| match e {
                Error::Abort(msg) => Error::Abort(format!("eps = {eps}, step {}: {msg}", step + 1)),
                other => other,
            })?;
            step += 1;
            max_div = max_div.max(info.max_divergence);
            max_vel = max_vel.max(info.max_velocity);
            let rec = energy_record(step, &next, &solver)?;
            let prev = energy.last().map_or(rec.e_tot, |r| r.e_tot);
            max_rise = max_rise.max((rec.e_tot - prev) / prev.abs().max(f64::MIN_POSITIVE));
            energy.push(rec);
            state = next;
        }
        // remove the rounding drift of the accumulated clock
        state.t = w[1];
        energy.last_mut().expect("at least one record").t = w[1];
        save_frame(k + 1, &state)?;
        if compare {
            sharp = evolve_curve(&sharp, span)?;
            let geom = TubularGeometry::new(sharp.curve.clone(), grid, Some(delta))?;
            let approx = ApproxSolution::build(geom, eps, profile, None, None)?;
            frames.push(frame_errors(w[1], &state.c, &state.v, &approx, &pot)?);
        }
        log::debug!("eps = {eps}: t = {:.5}, {step} steps", w[1]);
    }

    let samples: Vec<EnergySample> =
        energy.iter().map(|r| EnergySample { t: r.t, e_tot: r.e_tot, dissipation: r.dissipation }).collect();
    let energy_residual = energy_identity_residual(&samples);
    let report = if compare { Some(ErrorReport::from_frames(eps, &frames, energy_residual)?) } else { None };
    let radius = if compare {
        let diffuse = mean_radius(&extract_zero_levelset(&state.c, cfg.markers)?);
        let sharp_r = mean_radius(&sharp.curve);
        let reference = match cfg.interface {
            InterfaceSpec::Circle { r0, .. } => exact_circle_radius(r0, cfg.t_end)?,
            InterfaceSpec::CurveFile(_) => sharp_r,
        };
        Some(RadiusComparison { diffuse, sharp: sharp_r, reference, error: (diffuse - reference).abs() })
    } else {
        None
    };
    let outcome = EpsOutcome {
        eps,
        grid,
        delta,
        dt: params.dt,
        steps: step,
        frames,
        report,
        energy,
        energy_residual,
        max_energy_rise: max_rise,
        max_divergence: max_div,
        max_velocity: max_vel,
        radius,
        final_state: state,
        final_curve: compare.then_some(sharp.curve),
    };
    if let Some(dir) = out {
        write_eps_files(&outcome, dir)?;
    }
    Ok(outcome)
}

fn write_text(path: PathBuf, text: &str) -> Result<()> {
    std::fs::write(&path, text).map_err(|e| Error::io(path, e))
}

fn write_eps_files(o: &EpsOutcome, dir: &Path) -> Result<()> {
    let mut s = String::from("step,t,e_eps,e_tot,dissipation\n");
    for r in &o.energy {
        let _ = writeln!(s, "{},{:?},{:?},{:?},{:?}", r.step, r.t, r.e_eps, r.e_tot, r.dissipation);
    }
    write_text(dir.join("energy.csv"), &s)?;
    if !o.frames.is_empty() {
        let mut s = String::from("t,v_l2,v_h1,c_l2,c_h1_tau,c_grad,mu_l2,c_l4\n");
        for f in &o.frames {
            let _ = writeln!(
                s,
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                f.t, f.v_l2, f.v_h1, f.c_l2, f.c_h1_tau, f.c_grad, f.mu_l2, f.c_l4
            );
        }
        write_text(dir.join("frames.csv"), &s)?;
    }
    if let Some(curve) = &o.final_curve {
        curve.write(dir.join("sharp_final.curve"))?;
    }
    let st = &o.final_state;
    let manifest = RunManifest { t: st.t, eps: st.eps, dt: o.dt, step: o.steps as u64 };
    write_checkpoint(dir.join("checkpoint"), &manifest, &st.c, &st.p, &st.v)
}

/// One row of the sweep: the outcome or the reason it aborted.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub eps: f64,
    pub outcome: std::result::Result<EpsOutcome, String>,
}

#[derive(Debug, Clone)]
pub struct NamedRate {
    pub quantity: String,
    pub fit: RateFit,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub mode: RunMode,
    pub rows: Vec<SweepRow>,
    pub rates: Vec<NamedRate>,
}

fn csv_safe(s: &str) -> String {
    s.replace([',', '\n', '\r'], ";")
}

impl SweepReport {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.outcome.is_ok())
    }

    pub fn ok_rows(&self) -> impl Iterator<Item = &EpsOutcome> {
        self.rows.iter().filter_map(|r| r.outcome.as_ref().ok())
    }

    pub fn rate(&self, quantity: &str) -> Option<RateFit> {
        self.rates.iter().find(|r| r.quantity == quantity).map(|r| r.fit)
    }

    pub fn errors_csv(&self) -> String {
        let mut s = String::from("eps,nx,h,dt,steps,");
        if self.mode == RunMode::Compare {
            s += &ErrorReport::COLUMNS.join(",");
            s += ",radius_diffuse,radius_sharp,radius_reference,radius_error,";
        } else {
            s += "energy_residual,";
        }
        s += "max_energy_rise,max_div,max_velocity,status\n";
        for row in &self.rows {
            match &row.outcome {
                Ok(o) => {
                    let _ = write!(s, "{:?},{},{:?},{:?},{},", o.eps, o.grid.nx, o.grid.hx(), o.dt, o.steps);
                    if let (Some(r), Some(rad)) = (&o.report, &o.radius) {
                        for v in r.values() {
                            let _ = write!(s, "{v:?},");
                        }
                        let _ = write!(s, "{:?},{:?},{:?},{:?},", rad.diffuse, rad.sharp, rad.reference, rad.error);
                    } else {
                        let _ = write!(s, "{:?},", o.energy_residual);
                    }
                    let _ = writeln!(s, "{:?},{:?},{:?},ok", o.max_energy_rise, o.max_divergence, o.max_velocity);
                }
                Err(msg) => {
                    let blanks = if self.mode == RunMode::Compare { ErrorReport::COLUMNS.len() + 4 } else { 1 };
                    let _ = writeln!(s, "{:?},,,,,{},,,aborted: {}", row.eps, ",".repeat(blanks), csv_safe(msg));
                }
            }
        }
        s
    }

    pub fn rates_csv(&self) -> String {
        let mut s = String::from("quantity,slope,intercept,r_squared,note\n");
        for r in &self.rates {
            let note = if r.quantity == "radius_error" { "diffuse zero level set vs exact radius" } else { "leading-order comparison" };
            let _ = writeln!(s, "{},{:?},{:?},{:?},{note}", r.quantity, r.fit.slope, r.fit.intercept, r.fit.r_squared);
        }
        s
    }
}

fn fit_rates(rows: &[SweepRow]) -> Vec<NamedRate> {
    let ok: Vec<&EpsOutcome> = rows.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    if ok.len() < 3 {
        return Vec::new();
    }
    let mut series: Vec<(String, Vec<(f64, f64)>)> = ErrorReport::COLUMNS
        .iter()
        .enumerate()
        .map(|(k, name)| (name.to_string(), ok.iter().filter_map(|o| o.report.map(|r| (o.eps, r.values()[k]))).collect()))
        .collect();
    series.push(("radius_error".into(), ok.iter().filter_map(|o| o.radius.map(|r| (o.eps, r.error))).collect()));
    series
        .into_iter()
        .filter_map(|(quantity, pts)| fit_rate(&pts).ok().map(|fit| NamedRate { quantity, fit }))
        .collect()
}

/// Runs every `eps` of the config (in parallel) and writes
/// `errors.csv`, `rates.csv`, a canonical `config.ini` and one directory
/// per `eps` under `cfg.output_dir`. Configuration problems fail the whole
/// sweep; a numerical failure only marks its row as aborted.
pub fn run_experiment(cfg: &ExperimentConfig, mode: RunMode) -> Result<SweepReport> {
    cfg.validate()?;
    let curve = cfg.initial_curve().map_err(|e| Error::Config(e.to_string()))?;
    cfg.check_geometry(&curve)?;
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_text(out.join("config.ini"), &cfg.to_text())?;
    let profile = quartic_profile();
    let rows: Vec<SweepRow> = cfg
        .eps
        .par_iter()
        .map(|&eps| {
            let dir = out.join(eps_dir(eps));
            let outcome = run_eps(cfg, eps, mode, &profile, Some(&dir)).map_err(|e| {
                log::error!("eps = {eps} aborted: {e}");
                e.to_string()
            });
            SweepRow { eps, outcome }
        })
        .collect();
    let rates = if mode == RunMode::Compare { fit_rates(&rows) } else { Vec::new() };
    let report = SweepReport { mode, rows, rates };
    write_text(out.join("errors.csv"), &report.errors_csv())?;
    if mode == RunMode::Compare {
        write_text(out.join("rates.csv"), &report.rates_csv())?;
    }
    Ok(report)
}

/// Tracker-only result.
#[derive(Debug, Clone)]
pub struct SharpReport {
    pub times: Vec<f64>,
    pub curves: Vec<Curve>,
}

impl SharpReport {
    pub fn to_csv(&self, exact_r0: Option<f64>) -> String {
        let mut s = String::from("t,area,perimeter,mean_radius,exact_radius\n");
        for (t, c) in self.times.iter().zip(&self.curves) {
            let exact = exact_r0.and_then(|r0| exact_circle_radius(r0, *t).ok()).map_or(String::new(), |r| format!("{r:?}"));
            let _ = writeln!(s, "{t:?},{:?},{:?},{:?},{exact}", c.area(), c.perimeter(), mean_radius(c));
        }
        s
    }
}

/// Evolves the configured curve by curvature to `t_end`, writing
/// `sharp.csv` and one curve file per save time under `cfg.output_dir`.
pub fn run_sharp(cfg: &ExperimentConfig) -> Result<SharpReport> {
    cfg.validate()?;
    let curve = cfg.initial_curve().map_err(|e| Error::Config(e.to_string()))?;
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let times = save_times(cfg.t_end, cfg.save_every);
    let mut state = SharpState::new(curve);
    let mut curves = vec![state.curve.clone()];
    for w in times.windows(2) {
        state = evolve_curve(&state, w[1] - w[0])?;
        curves.push(state.curve.clone());
    }
    for (k, c) in curves.iter().enumerate() {
        c.write(out.join(format!("curve_{k:04}.curve")))?;
    }
    let report = SharpReport { times, curves };
    let r0 = match cfg.interface {
        InterfaceSpec::Circle { r0, .. } => Some(r0),
        InterfaceSpec::CurveFile(_) => None,
    };
    write_text(out.join("sharp.csv"), &report.to_csv(r0))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(dir: &Path, eps: &str) -> ExperimentConfig {
        ExperimentConfig::parse(&format!(
            "[domain]\nnx_ratio = 4\n[interface]\nkind = circle\nr0 = 0.3\ndelta = 0.05\n\
             [sweep]\neps = {eps}\nt_end = 0.004\nsave_every = 0.002\n[solver]\ndt_rule = factor:0.4\n\
             [output]\ndir = {}\n",
            dir.display()
        ))
        .unwrap()
    }

    #[test]
    fn save_time_grid() {
        assert_eq!(save_times(0.05, 0.025), vec![0.0, 0.025, 0.05]);
        let t = save_times(0.05, 0.02);
        assert_eq!(t.len(), 4);
        assert_eq!(*t.last().unwrap(), 0.05);
        assert_eq!(save_times(0.1, 0.1), vec![0.0, 0.1]);
    }

    #[test]
    fn single_eps_sweep_has_no_rate_fit() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small_config(tmp.path(), "0.1");
        let r = run_experiment(&cfg, RunMode::Compare).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r.rates.is_empty());
        let o = r.ok_rows().next().unwrap();
        assert_eq!(o.frames.len(), 3);
        assert!(o.max_divergence < 1e-10);
        assert!(o.max_energy_rise <= 0.0);
        let errors = std::fs::read_to_string(tmp.path().join("errors.csv")).unwrap();
        assert_eq!(errors.lines().count(), 2);
        assert!(errors.lines().nth(1).unwrap().ends_with(",ok"));
        for f in ["energy.csv", "frames.csv", "c_0000.pfld", "c_0002.pfld", "sharp_final.curve", "checkpoint/manifest"] {
            assert!(tmp.path().join("eps_0.1").join(f).exists(), "{f}");
        }
    }

    #[test]
    fn reruns_are_bitwise_identical() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        for d in [&a, &b] {
            run_experiment(&small_config(d.path(), "0.1, 0.08"), RunMode::Compare).unwrap();
        }
        for f in ["errors.csv", "eps_0.1/frames.csv", "eps_0.08/energy.csv", "eps_0.1/c_0002.pfld"] {
            let x = std::fs::read(a.path().join(f)).unwrap();
            let y = std::fs::read(b.path().join(f)).unwrap();
            assert!(x == y, "{f} differs");
        }
    }

    #[test]
    fn geometry_errors_fail_the_whole_sweep() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = small_config(tmp.path(), "0.1");
        cfg.delta = Some(0.2);
        assert!(run_experiment(&cfg, RunMode::Compare).unwrap_err().is_config());
    }

    #[test]
    fn tracker_only_run() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small_config(tmp.path(), "0.1");
        let r = run_sharp(&cfg).unwrap();
        assert_eq!(r.curves.len(), 3);
        let exact = exact_circle_radius(0.3, 0.004).unwrap();
        assert!((r.curves[2].equivalent_radius() - exact).abs() < 1e-3 * exact);
        assert!(tmp.path().join("sharp.csv").exists());
    }
}
