//! Error norms between a diffuse run and the approximate solution.

use crate::approx::ApproxSolution;
use crate::error::{Error, Result};
use crate::field::{gradient_energy, velocity_gradient_energy, ScalarField, StaggeredVectorField};
use crate::geometry::tangential_gradient;
use crate::profile::Potential;
use crate::solver::chemical_potential;

/// Saved diffuse fields at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub c: ScalarField,
    pub v: StaggeredVectorField,
}

/// Spatial norms of `run - approx` at one save time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameErrors {
    pub t: f64,
    /// `|v - v_A|_{L^2}`
    pub v_l2: f64,
    /// `|grad(v - v_A)|_{L^2}`
    pub v_h1: f64,
    /// `|c - c_A|_{L^2}`
    pub c_l2: f64,
    /// `|grad_tau(c - c_A)|_{L^2}` on the band
    pub c_h1_tau: f64,
    /// `eps |grad(c - c_A)|_{L^2}`
    pub c_grad: f64,
    /// `|mu - mu_A|_{L^2}`
    pub mu_l2: f64,
    /// `|c - c_A|_{L^4}`
    pub c_l4: f64,
}

/// Norms of `(c, v) - (c_A, v_A)` with the solver's own stencils.
pub fn frame_errors(t: f64, c: &ScalarField, v: &StaggeredVectorField, approx: &ApproxSolution, pot: &dyn Potential) -> Result<FrameErrors> {
    let g = approx.geom.grid();
    g.ensure_same(c.grid(), "run concentration")?;
    g.ensure_same(v.grid(), "run velocity")?;
    let eps = approx.eps;
    let dc = c.zip_map(&approx.c_a, |a, b| a - b)?;
    let dv = v.sub(&approx.v_a)?;
    let [tx, ty] = tangential_gradient(&dc, &approx.geom)?;
    let mu = chemical_potential(c, eps, pot)?;
    let mu_a = chemical_potential(&approx.c_a, eps, pot)?;
    let dmu = mu.zip_map(&mu_a, |a, b| a - b)?;
    Ok(FrameErrors {
        t,
        v_l2: dv.l2_norm(),
        v_h1: velocity_gradient_energy(&dv)?.max(0.0).sqrt(),
        c_l2: dc.l2_norm(),
        c_h1_tau: (tx.dot(&tx) + ty.dot(&ty)).sqrt(),
        // both fields carry the same wall value, so the difference has zero ghosts
        c_grad: eps * gradient_energy(&dc, 0.0).sqrt(),
        mu_l2: dmu.l2_norm(),
        c_l4: dc.lp_norm(4.0),
    })
}

/// Norms over the whole run for one `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorReport {
    pub eps: f64,
    pub err_v_linf_l2: f64,
    pub err_v_l2_h1: f64,
    pub err_c_linf_l2: f64,
    pub err_c_l2_h1tau: f64,
    pub err_c_grad_linf_l2: f64,
    pub err_mu_l2: f64,
    pub err_c_l4: f64,
    pub energy_residual: f64,
}

impl ErrorReport {
    pub const COLUMNS: [&'static str; 8] = [
        "err_v_LinfL2",
        "err_v_L2H1",
        "err_c_LinfL2",
        "err_c_L2H1tau",
        "err_c_grad_LinfL2",
        "err_mu_L2",
        "err_c_L4",
        "energy_residual",
    ];

    /// Values in [`COLUMNS`](Self::COLUMNS) order.
    pub fn values(&self) -> [f64; 8] {
        [
            self.err_v_linf_l2,
            self.err_v_l2_h1,
            self.err_c_linf_l2,
            self.err_c_l2_h1tau,
            self.err_c_grad_linf_l2,
            self.err_mu_l2,
            self.err_c_l4,
            self.energy_residual,
        ]
    }

    /// Maximum over frames for `L^inf` in time, trapezoid rule for `L^2`
    /// (and `L^4`) in time.
    pub fn from_frames(eps: f64, frames: &[FrameErrors], energy_residual: f64) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::InvalidArgument("no frames to reduce".into()));
        }
        if frames.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::InvalidArgument("frame times must increase".into()));
        }
        let max = |f: fn(&FrameErrors) -> f64| frames.iter().map(f).fold(0.0, f64::max);
        let trapz = |f: &dyn Fn(&FrameErrors) -> f64| {
            frames.windows(2).map(|w| 0.5 * (w[1].t - w[0].t) * (f(&w[0]) + f(&w[1]))).sum::<f64>()
        };
        let report = Self {
            eps,
            err_v_linf_l2: max(|f| f.v_l2),
            err_v_l2_h1: trapz(&|f| f.v_h1 * f.v_h1).sqrt(),
            err_c_linf_l2: max(|f| f.c_l2),
            err_c_l2_h1tau: trapz(&|f| f.c_h1_tau * f.c_h1_tau).sqrt(),
            err_c_grad_linf_l2: max(|f| f.c_grad),
            err_mu_l2: trapz(&|f| f.mu_l2 * f.mu_l2).sqrt(),
            err_c_l4: trapz(&|f| f.c_l4.powi(4)).powf(0.25),
            energy_residual,
        };
        if report.values().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::NonFinite("error report"));
        }
        Ok(report)
    }
}

/// Frame errors for a run and approximations built at matching times.
pub fn error_norms(run: &[Frame], approx: &[(f64, ApproxSolution)], pot: &dyn Potential) -> Result<Vec<FrameErrors>> {
    if run.len() != approx.len() {
        return Err(Error::InvalidArgument(format!(
            "{} run frames against {} approximations",
            run.len(),
            approx.len()
        )));
    }
    run.iter()
        .zip(approx)
        .map(|(f, (t, a))| {
            if (f.t - t).abs() > 1e-12 * t.abs().max(1.0) {
                return Err(Error::InvalidArgument(format!("run frame at t = {} paired with approximation at t = {t}", f.t)));
            }
            frame_errors(f.t, &f.c, &f.v, a, pot)
        })
        .collect()
}
