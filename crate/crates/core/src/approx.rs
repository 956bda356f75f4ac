//! Leading-order approximate solution: the optimal profile laid along the
//! normals of a curve, glued to the pure phases by the cut-off, and a
//! projected velocity.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{ScalarField, StaggeredVectorField};
use crate::geometry::{cutoff_zeta, tubular_coords, Point, TubularGeometry};
use crate::profile::ProfileTable;
use crate::solver::project_divergence_free;

/// Normal shift `h(s)` of the inner layer, as a function of the normalized
/// arclength coordinate.
pub type ShiftFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Bulk velocity field sampled by [`build_v_a`].
pub type BulkVelocity<'a> = &'a (dyn Fn(Point) -> Point + Sync);

/// Glued approximate fields and the geometry they were built on.
#[derive(Clone)]
pub struct ApproxSolution {
    pub c_a: ScalarField,
    pub v_a: StaggeredVectorField,
    pub geom: TubularGeometry,
    pub eps: f64,
    pub h_shift: Option<ShiftFn>,
}

impl std::fmt::Debug for ApproxSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ApproxSolution")
            .field("eps", &self.eps)
            .field("delta", &self.geom.delta())
            .field("grid", self.geom.grid())
            .finish_non_exhaustive()
    }
}

impl ApproxSolution {
    pub fn build(
        geom: TubularGeometry,
        eps: f64,
        profile: &ProfileTable,
        h_shift: Option<ShiftFn>,
        bulk: Option<BulkVelocity<'_>>,
    ) -> Result<Self> {
        let c_a = build_c_a(&geom, eps, profile, h_shift.as_ref())?;
        let v_a = build_v_a(&geom, bulk)?;
        Ok(Self { c_a, v_a, geom, eps, h_shift })
    }
}

/// `rho = d / eps - h(s)` at a point of the band.
pub fn stretched_variable(x: Point, geom: &TubularGeometry, eps: f64, h_shift: Option<&ShiftFn>) -> Result<f64> {
    let (r, s) = tubular_coords(x, geom)?;
    Ok(r / eps - h_shift.map_or(0.0, |h| h(s)))
}

/// `c_A = zeta(d) theta0(rho) + (1 - zeta(d)) sign(d)` at cell centers.
/// Exactly `+-1` wherever `|d| >= 2 delta`.
pub fn build_c_a(geom: &TubularGeometry, eps: f64, profile: &ProfileTable, h_shift: Option<&ShiftFn>) -> Result<ScalarField> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let g = *geom.grid();
    let delta = geom.delta();
    let h = g.spacing()?;
    if delta < h {
        return Err(Error::InvalidArgument(format!(
            "band half-width {delta} is thinner than one cell (h = {h})"
        )));
    }
    if delta < 5.0 * eps {
        log::debug!("band half-width is {:.2} eps; the cut-off truncates the profile tails", delta / eps);
    }
    let d = geom.d_gamma();
    let s = geom.s_coord();
    let values = (0..g.cell_count())
        .map(|k| {
            let dist = d.values()[k];
            let side = if dist >= 0.0 { 1.0 } else { -1.0 };
            if dist.abs() >= 2.0 * delta {
                return side;
            }
            let shift = h_shift.map_or(0.0, |f| f(s.values()[k]));
            let (zeta, _) = cutoff_zeta(dist, delta);
            zeta * profile.theta0(dist / eps - shift) + (1.0 - zeta) * side
        })
        .collect();
    ScalarField::new(g, values)
}

/// Samples `bulk` on the faces (zero if absent) and projects the result
/// onto discretely divergence-free fields.
pub fn build_v_a(geom: &TubularGeometry, bulk: Option<BulkVelocity<'_>>) -> Result<StaggeredVectorField> {
    let g = *geom.grid();
    match bulk {
        None => Ok(StaggeredVectorField::zeros(g)),
        Some(f) => project_divergence_free(&StaggeredVectorField::from_fn(g, |x, y| f([x, y]))),
    }
}

/// Fits the exponential decay rate of `|f - sign(d)|` along normal rays
/// through every marker, over `rho` in `[2, min(8, delta / eps)]` on both
/// sides of the curve, and returns the mean rate.
pub fn estimate_decay_rate(f: &ScalarField, geom: &TubularGeometry, eps: f64) -> Result<f64> {
    geom.grid().ensure_same(f.grid(), "decay-rate field")?;
    let h = geom.grid().spacing()?;
    let rho_max = 8.0_f64.min(geom.delta() / eps);
    let d_rho = h / eps;
    let count = if rho_max > 2.0 { ((rho_max - 2.0) / d_rho).floor() as usize + 1 } else { 0 };
    if count < 6 {
        return Err(Error::DecayFit(format!(
            "only {count} samples per ray on rho in [2, {rho_max:.2}] (step {d_rho:.3})"
        )));
    }
    let curve = geom.curve();
    let normals = curve.normals();
    let mut rates = Vec::new();
    for (p, n) in curve.markers().iter().zip(&normals) {
        for side in [1.0, -1.0] {
            let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for k in 0..count {
                let rho = 2.0 + k as f64 * d_rho;
                let x = p[0] + side * eps * rho * n[0];
                let y = p[1] + side * eps * rho * n[1];
                let gap = (f.interpolate(x, y) - side).abs();
                if !(gap > 0.0) || !gap.is_finite() {
                    continue;
                }
                let ly = gap.ln();
                sx += rho;
                sy += ly;
                sxx += rho * rho;
                sxy += rho * ly;
                m += 1.0;
            }
            if m < 6.0 {
                continue;
            }
            let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
            rates.push(-slope);
        }
    }
    if rates.is_empty() {
        return Err(Error::DecayFit("no tail to fit".into()));
    }
    Ok(rates.iter().sum::<f64>() / rates.len() as f64)
}
