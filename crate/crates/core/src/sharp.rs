//! Marker front tracking for the sharp-interface law `V = H + n . v`,
//! plus zero-contour extraction from diffuse fields.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{curvature, Curve, Point};

/// Bulk velocity evaluated at marker positions.
pub type VelocitySampler = Arc<dyn Fn(Point) -> Point + Send + Sync>;

/// Tracked interface at one instant.
#[derive(Clone)]
pub struct SharpState {
    pub t: f64,
    pub curve: Curve,
    pub velocity: Option<VelocitySampler>,
}

impl std::fmt::Debug for SharpState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SharpState")
            .field("t", &self.t)
            .field("curve", &self.curve)
            .field("velocity", &self.velocity.as_ref().map(|_| "<sampler>"))
            .finish()
    }
}

impl SharpState {
    pub fn new(curve: Curve) -> Self {
        Self { t: 0.0, curve, velocity: None }
    }

    pub fn with_velocity(mut self, sampler: VelocitySampler) -> Self {
        self.velocity = Some(sampler);
        self
    }
}

/// Explicit substeps never exceed this multiple of the squared marker spacing.
pub const SUBSTEP_FACTOR: f64 = 0.2;

/// Advances the curve by `dt`. Markers move along the interior normal with
/// speed `H + n . v`, then are redistributed uniformly in arclength. The
/// interval is split into substeps satisfying `dt_sub <= 0.2 ds_min^2`.
pub fn evolve_curve(state: &SharpState, dt: f64) -> Result<SharpState> {
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be non-negative, got {dt}")));
    }
    let n = state.curve.len();
    let mut curve = state.curve.clone();
    let mut remaining = dt;
    while remaining > 0.0 {
        let limit = SUBSTEP_FACTOR * curve.min_spacing().powi(2);
        let pieces = (remaining / limit).ceil().max(1.0);
        let sub = remaining / pieces;
        let h = curvature(&curve)?;
        let normals = curve.normals();
        if let Some(k) = (0..n).find(|&k| h[k].abs() * sub > 0.5) {
            return Err(Error::Abort(format!("curvature blow-up: H = {} at marker {k}", h[k])));
        }
        let moved: Vec<Point> = curve
            .markers()
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let nk = normals[k];
                let adv = state.velocity.as_ref().map_or(0.0, |v| {
                    let w = v(p);
                    w[0] * nk[0] + w[1] * nk[1]
                });
                let speed = h[k] + adv;
                [p[0] + sub * speed * nk[0], p[1] + sub * speed * nk[1]]
            })
            .collect();
        curve = Curve::unchecked(moved)?.resample(n)?;
        remaining -= sub;
        if remaining < 1e-15 * dt {
            remaining = 0.0;
        }
    }
    if let Some((a, b)) = curve.find_self_intersection() {
        return Err(Error::Abort(format!("curve self-intersects (segments {a}, {b})")));
    }
    if curve.area() <= 0.0 || curve.equivalent_radius() < 4.0 * curve.mean_spacing() {
        return Err(Error::Abort("curve collapsed below four marker spacings".into()));
    }
    Ok(SharpState { t: state.t + dt, curve, velocity: state.velocity.clone() })
}

/// Radius `sqrt(R0^2 - 2 t)` of a circle shrinking by curvature.
pub fn exact_circle_radius(r0: f64, t: f64) -> Result<f64> {
    let s = r0 * r0 - 2.0 * t;
    if !(s > 1e-12 * r0 * r0) || t < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "t = {t} lies outside [0, {}) for R0 = {r0}",
            r0 * r0 / 2.0
        )));
    }
    Ok(s.sqrt())
}

/// Edge identifier in the marching-squares lattice of cell centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    /// Between nodes `(i, j)` and `(i + 1, j)`.
    H(usize, usize),
    /// Between nodes `(i, j)` and `(i, j + 1)`.
    V(usize, usize),
}

/// Zero contour of `c` (marching squares through cell centers with linear
/// interpolation), oriented counterclockwise around the positive phase and
/// resampled to `markers` points. Fails unless exactly one closed contour
/// exists.
pub fn extract_zero_levelset(c: &ScalarField, markers: usize) -> Result<Curve> {
    let g = *c.grid();
    if g.nx < 2 || g.ny < 2 {
        return Err(Error::Contour("grid too small".into()));
    }
    let inside = |i: usize, j: usize| c.at(i, j) > 0.0;
    let point = |e: Edge| -> Point {
        let (a, b, pa, pb) = match e {
            Edge::H(i, j) => (c.at(i, j), c.at(i + 1, j), g.cell_center(i, j), g.cell_center(i + 1, j)),
            Edge::V(i, j) => (c.at(i, j), c.at(i, j + 1), g.cell_center(i, j), g.cell_center(i, j + 1)),
        };
        let t = a / (a - b);
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    };
    let mut links: HashMap<Edge, Vec<Edge>> = HashMap::new();
    let mut link = |a: Edge, b: Edge| {
        links.entry(a).or_default().push(b);
        links.entry(b).or_default().push(a);
    };
    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            let case = (inside(i, j) as u8)
                | (inside(i + 1, j) as u8) << 1
                | (inside(i + 1, j + 1) as u8) << 2
                | (inside(i, j + 1) as u8) << 3;
            let (bottom, right, top, left) = (Edge::H(i, j), Edge::V(i + 1, j), Edge::H(i, j + 1), Edge::V(i, j));
            match case {
                0 | 15 => {}
                1 | 14 => link(left, bottom),
                2 | 13 => link(bottom, right),
                3 | 12 => link(left, right),
                4 | 11 => link(right, top),
                6 | 9 => link(bottom, top),
                7 | 8 => link(left, top),
                5 | 10 => {
                    let center = 0.25 * (c.at(i, j) + c.at(i + 1, j) + c.at(i + 1, j + 1) + c.at(i, j + 1));
                    // corners 0 and 2 share a phase; the center decides
                    // whether they connect through the cell
                    let diagonal_connected = (center > 0.0) == (case == 5);
                    if diagonal_connected {
                        link(left, top);
                        link(bottom, right);
                    } else {
                        link(left, bottom);
                        link(right, top);
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    if links.is_empty() {
        return Err(Error::Contour("no zero contour".into()));
    }
    if let Some((e, _)) = links.iter().find(|(_, v)| v.len() != 2) {
        return Err(Error::Contour(format!("open contour at edge {e:?}")));
    }
    let start = *links.keys().min_by_key(|e| match e {
        Edge::H(i, j) => (0, *j, *i),
        Edge::V(i, j) => (1, *j, *i),
    }).unwrap();
    let mut chain = vec![start];
    let mut prev = start;
    let mut cur = links[&start][0];
    while cur != start {
        chain.push(cur);
        let next = links[&cur].iter().copied().find(|&e| e != prev).unwrap_or(prev);
        prev = cur;
        cur = next;
        if chain.len() > links.len() {
            return Err(Error::Contour("contour chaining failed".into()));
        }
    }
    if chain.len() != links.len() {
        return Err(Error::Contour(format!(
            "found more than one closed contour ({} of {} crossings on the first)",
            chain.len(),
            links.len()
        )));
    }
    let mut pts: Vec<Point> = Vec::with_capacity(chain.len());
    for e in chain {
        let p = point(e);
        if pts.last().is_none_or(|q: &Point| q != &p) {
            pts.push(p);
        }
    }
    while pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    if pts.len() < 3 {
        return Err(Error::Contour("contour is degenerate".into()));
    }
    if pts.len() < crate::geometry::MIN_MARKERS {
        // densify short contours before the spline resampling
        let m = pts.len();
        let mut dense = Vec::with_capacity(4 * m);
        for k in 0..m {
            let (a, b) = (pts[k], pts[(k + 1) % m]);
            for s in 0..4 {
                let t = s as f64 / 4.0;
                dense.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        pts = dense;
    }
    let raw = Curve::new(pts).map_err(|e| Error::Contour(e.to_string()))?;
    raw.resample(markers)
}
