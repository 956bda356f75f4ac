//! Closed marker curves and the tubular-neighborhood calculus around them.
//!
//! Curves are stored counterclockwise so that the enclosed region is the
//! `+` phase. Normals point into that region, which makes them the
//! gradient of the signed distance `d` (positive inside).

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Boundary, GridSpec, ScalarField};

/// Minimum marker count of a [`Curve`].
pub const MIN_MARKERS: usize = 16;

pub type Point = [f64; 2];

#[inline]
fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// Closed polygonal curve, counterclockwise, parameterized over the circle.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    markers: Vec<Point>,
}

impl Curve {
    /// Validates marker count, finiteness and simplicity, and reorients to
    /// counterclockwise if needed.
    pub fn new(markers: Vec<Point>) -> Result<Self> {
        let curve = Self::unchecked(markers)?;
        if let Some((a, b)) = curve.find_self_intersection() {
            return Err(Error::InvalidCurve(format!("segments {a} and {b} intersect")));
        }
        Ok(curve)
    }

    /// Like [`Curve::new`] without the quadratic simplicity test.
    pub(crate) fn unchecked(mut markers: Vec<Point>) -> Result<Self> {
        if markers.len() < MIN_MARKERS {
            return Err(Error::InvalidCurve(format!(
                "need at least {MIN_MARKERS} markers, got {}",
                markers.len()
            )));
        }
        if markers.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::NonFinite("curve markers"));
        }
        let n = markers.len();
        for k in 0..n {
            if norm(sub(markers[(k + 1) % n], markers[k])) == 0.0 {
                return Err(Error::InvalidCurve(format!("markers {k} and {} coincide", (k + 1) % n)));
            }
        }
        if signed_area(&markers) < 0.0 {
            markers.reverse();
        }
        Ok(Self { markers })
    }

    pub fn circle(center: Point, radius: f64, n: usize) -> Result<Self> {
        Self::ellipse(center, radius, radius, n)
    }

    /// Ellipse with semi-axes `a` (along x) and `b`, sampled at uniform
    /// parameter angle and resampled to uniform arclength.
    pub fn ellipse(center: Point, a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidCurve(format!("semi-axes must be positive, got {a}, {b}")));
        }
        let m = n;
        let pts = (0..m)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                [center[0] + a * th.cos(), center[1] + b * th.sin()]
            })
            .collect();
        let raw = Self::new(pts)?;
        if a == b {
            Ok(raw)
        } else {
            raw.resample(n)
        }
    }

    pub fn markers(&self) -> &[Point] {
        &self.markers
    }

    pub fn len(&self) -> usize {
        self.markers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.markers)
    }

    pub fn perimeter(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        let n = self.markers.len();
        (0..n).map(|k| norm(sub(self.markers[(k + 1) % n], self.markers[k]))).collect()
    }

    pub fn centroid(&self) -> Point {
        let n = self.markers.len();
        let (mut cx, mut cy, mut a) = (0.0, 0.0, 0.0);
        for k in 0..n {
            let p = self.markers[k];
            let q = self.markers[(k + 1) % n];
            let w = cross(p, q);
            a += w;
            cx += (p[0] + q[0]) * w;
            cy += (p[1] + q[1]) * w;
        }
        [cx / (3.0 * a), cy / (3.0 * a)]
    }

    /// Mean marker distance from `center`.
    pub fn mean_radius(&self, center: Point) -> f64 {
        self.markers.iter().map(|&p| norm(sub(p, center))).sum::<f64>() / self.len() as f64
    }

    /// Radius of the circle with the same enclosed area.
    pub fn equivalent_radius(&self) -> f64 {
        (self.area() / std::f64::consts::PI).sqrt()
    }

    pub fn mean_spacing(&self) -> f64 {
        self.perimeter() / self.len() as f64
    }

    pub fn min_spacing(&self) -> f64 {
        self.segment_lengths().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Smallest distance from any marker to the edges of `[0, lx] x [0, ly]`.
    /// Negative if a marker lies outside.
    pub fn clearance(&self, lx: f64, ly: f64) -> f64 {
        self.markers
            .iter()
            .map(|p| p[0].min(lx - p[0]).min(p[1]).min(ly - p[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// First pair of non-adjacent segments that intersect, if any.
    pub fn find_self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.markers.len();
        let seg = |k: usize| (self.markers[k], self.markers[(k + 1) % n]);
        // bounding boxes prune most pairs
        let boxes: Vec<[f64; 4]> = (0..n)
            .map(|k| {
                let (a, b) = seg(k);
                [a[0].min(b[0]), a[0].max(b[0]), a[1].min(b[1]), a[1].max(b[1])]
            })
            .collect();
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (bi, bj) = (boxes[i], boxes[j]);
                if bi[1] < bj[0] || bj[1] < bi[0] || bi[3] < bj[2] || bj[3] < bi[2] {
                    continue;
                }
                let (a, b) = seg(i);
                let (c, d) = seg(j);
                if segments_intersect(a, b, c, d) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Resamples to `n` markers equally spaced in arclength along a
    /// Catmull-Rom spline through the current markers.
    pub fn resample(&self, n: usize) -> Result<Self> {
        let m = self.markers.len();
        let p = &self.markers;
        let sub_steps = 16;
        let mut dense = Vec::with_capacity(m * sub_steps);
        for k in 0..m {
            let p0 = p[(k + m - 1) % m];
            let p1 = p[k];
            let p2 = p[(k + 1) % m];
            let p3 = p[(k + 2) % m];
            // non-uniform (chord-length) Catmull-Rom tangents
            let d0 = norm(sub(p1, p0));
            let d1 = norm(sub(p2, p1));
            let d2 = norm(sub(p3, p2));
            let tangent = |a: Point, b: Point, c: Point, da: f64, db: f64| -> Point {
                // derivative at b w.r.t. chord parameter, scaled to segment length d1
                let mut t = [0.0; 2];
                for q in 0..2 {
                    let v = (b[q] - a[q]) / da * db / (da + db) + (c[q] - b[q]) / db * da / (da + db);
                    t[q] = v * d1;
                }
                t
            };
            let m1 = tangent(p0, p1, p2, d0, d1);
            let m2 = tangent(p1, p2, p3, d1, d2);
            for s in 0..sub_steps {
                let t = s as f64 / sub_steps as f64;
                let (t2, t3) = (t * t, t * t * t);
                let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
                let h10 = t3 - 2.0 * t2 + t;
                let h01 = -2.0 * t3 + 3.0 * t2;
                let h11 = t3 - t2;
                dense.push([
                    h00 * p1[0] + h10 * m1[0] + h01 * p2[0] + h11 * m2[0],
                    h00 * p1[1] + h10 * m1[1] + h01 * p2[1] + h11 * m2[1],
                ]);
            }
        }
        let nd = dense.len();
        let mut cum = Vec::with_capacity(nd + 1);
        cum.push(0.0);
        for k in 0..nd {
            let l = norm(sub(dense[(k + 1) % nd], dense[k]));
            cum.push(cum[k] + l);
        }
        let total = cum[nd];
        let mut out = Vec::with_capacity(n);
        let mut seg = 0;
        for k in 0..n {
            let target = total * k as f64 / n as f64;
            while cum[seg + 1] < target {
                seg += 1;
            }
            let len = cum[seg + 1] - cum[seg];
            let t = if len > 0.0 { (target - cum[seg]) / len } else { 0.0 };
            let a = dense[seg];
            let b = dense[(seg + 1) % nd];
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
        Self::unchecked(out)
    }

    /// Interior (left) unit normals at the markers.
    pub fn normals(&self) -> Vec<Point> {
        let n = self.markers.len();
        let seg_normal = |k: usize| {
            let d = sub(self.markers[(k + 1) % n], self.markers[k]);
            let l = norm(d);
            [-d[1] / l, d[0] / l]
        };
        (0..n)
            .map(|k| {
                let a = seg_normal((k + n - 1) % n);
                let b = seg_normal(k);
                let s = [a[0] + b[0], a[1] + b[1]];
                let l = norm(s);
                if l > 0.0 {
                    [s[0] / l, s[1] / l]
                } else {
                    b
                }
            })
            .collect()
    }

    /// Closest point on the polyline together with tubular data.
    pub fn project(&self, x: Point) -> Projection {
        CurveFrame::new(self).project(x)
    }

    /// Winding-parity inside test.
    pub fn contains(&self, x: Point) -> bool {
        let n = self.markers.len();
        let mut inside = false;
        for k in 0..n {
            let a = self.markers[k];
            let b = self.markers[(k + 1) % n];
            if (a[1] > x[1]) != (b[1] > x[1]) {
                let xc = a[0] + (x[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if x[0] < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = format!("PCRV1 {}\n", self.len());
        for p in &self.markers {
            text.push_str(&format!("{:?} {:?}\n", p[0], p[1]));
        }
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let n: usize = header
            .strip_prefix("PCRV1 ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Format(format!("bad curve header {header:?}")))?;
        let mut pts = Vec::with_capacity(n);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let mut it = line.split_whitespace().map(str::parse::<f64>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => pts.push([x, y]),
                _ => return Err(Error::Format(format!("bad curve line {line:?}"))),
            }
        }
        if pts.len() != n {
            return Err(Error::Format(format!("header announces {n} markers, found {}", pts.len())));
        }
        Self::new(pts)
    }
}

fn signed_area(p: &[Point]) -> f64 {
    let n = p.len();
    0.5 * (0..n).map(|k| cross(p[k], p[(k + 1) % n])).sum::<f64>()
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = cross(sub(b, a), sub(c, a));
    let o2 = cross(sub(b, a), sub(d, a));
    let o3 = cross(sub(d, c), sub(a, c));
    let o4 = cross(sub(d, c), sub(b, c));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let on = |p: Point, q: Point, r: Point, o: f64| {
        o == 0.0
            && r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

/// Signed curvature at each marker from the circle through it and its two
/// neighbors. Positive on a counterclockwise convex curve, exact on circles.
pub fn curvature(curve: &Curve) -> Result<Vec<f64>> {
    let p = curve.markers();
    let n = p.len();
    (0..n)
        .map(|k| {
            let a = p[(k + n - 1) % n];
            let b = p[k];
            let c = p[(k + 1) % n];
            let (ab, bc, ac) = (norm(sub(b, a)), norm(sub(c, b)), norm(sub(c, a)));
            let denom = ab * bc * ac;
            if !(denom > 0.0) {
                return Err(Error::InvalidCurve(format!("degenerate spacing at marker {k}")));
            }
            Ok(2.0 * cross(sub(b, a), sub(c, b)) / denom)
        })
        .collect()
}

/// Closest-point data for a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Signed distance, positive inside.
    pub r: f64,
    /// Arclength coordinate of the foot point, normalized to `[0, 1)`.
    pub s: f64,
    /// Foot point on the polyline.
    pub foot: Point,
    /// Interior normal interpolated at the foot point.
    pub normal: Point,
    /// Curvature interpolated at the foot point.
    pub curvature: f64,
}

/// Precomputed per-curve data used by repeated projections.
#[derive(Debug, Clone)]
pub(crate) struct CurveFrame<'a> {
    curve: &'a Curve,
    cum: Vec<f64>,
    total: f64,
    normals: Vec<Point>,
    kappa: Vec<f64>,
}

impl<'a> CurveFrame<'a> {
    pub fn new(curve: &'a Curve) -> Self {
        let lens = curve.segment_lengths();
        let mut cum = Vec::with_capacity(lens.len() + 1);
        cum.push(0.0);
        for l in &lens {
            cum.push(cum.last().unwrap() + l);
        }
        let total = *cum.last().unwrap();
        let kappa = curvature(curve).unwrap_or_else(|_| vec![0.0; curve.len()]);
        Self { curve, cum, total, normals: curve.normals(), kappa }
    }

    pub fn project(&self, x: Point) -> Projection {
        let p = self.curve.markers();
        let n = p.len();
        let (mut best, mut best_k, mut best_t) = (f64::INFINITY, 0, 0.0);
        for k in 0..n {
            let a = p[k];
            let d = sub(p[(k + 1) % n], a);
            let l2 = d[0] * d[0] + d[1] * d[1];
            let t = (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0);
            let q = [a[0] + t * d[0] - x[0], a[1] + t * d[1] - x[1]];
            let dist2 = q[0] * q[0] + q[1] * q[1];
            if dist2 < best {
                best = dist2;
                best_k = k;
                best_t = t;
            }
        }
        let k = best_k;
        let a = p[k];
        let b = p[(k + 1) % n];
        let foot = [a[0] + best_t * (b[0] - a[0]), a[1] + best_t * (b[1] - a[1])];
        let dist = best.sqrt();
        let r = if self.curve.contains(x) { dist } else { -dist };
        let (na, nb) = (self.normals[k], self.normals[(k + 1) % n]);
        let nm = [(1.0 - best_t) * na[0] + best_t * nb[0], (1.0 - best_t) * na[1] + best_t * nb[1]];
        let l = norm(nm);
        let s = (self.cum[k] + best_t * (self.cum[k + 1] - self.cum[k])) / self.total;
        Projection {
            r,
            s: if s >= 1.0 { 0.0 } else { s },
            foot,
            normal: [nm[0] / l, nm[1] / l],
            curvature: (1.0 - best_t) * self.kappa[k] + best_t * self.kappa[(k + 1) % n],
        }
    }
}

/// Signed distance to the curve at every cell center, positive inside.
pub fn signed_distance(curve: &Curve, grid: &GridSpec) -> Result<ScalarField> {
    if curve.clearance(grid.lx, grid.ly) <= 0.0 {
        return Err(Error::InvalidCurve("curve touches or leaves the domain".into()));
    }
    let frame = CurveFrame::new(curve);
    let g = *grid;
    let values: Vec<f64> = (0..g.cell_count())
        .into_par_iter()
        .map(|k| frame.project(g.cell_center(k % g.nx, k / g.nx)).r)
        .collect();
    ScalarField::new(g, values)
}

/// Smoothstep cut-off: 1 on `|r| <= delta`, 0 beyond `2 delta`.
/// Returns `(zeta, dzeta/dr)`.
pub fn cutoff_zeta(r: f64, delta: f64) -> (f64, f64) {
    let t = ((r.abs() - delta) / delta).clamp(0.0, 1.0);
    let q = t * t * (3.0 - 2.0 * t);
    let dq = if t > 0.0 && t < 1.0 { 6.0 * t * (1.0 - t) / delta } else { 0.0 };
    (1.0 - q, -dq * r.signum())
}

/// Default band half-width for a curve in a box: the largest value keeping
/// a `3 delta` wall clearance, capped at a tenth of the shorter side.
pub fn default_delta(curve: &Curve, lx: f64, ly: f64) -> f64 {
    (0.1 * lx.min(ly)).min(0.99 * curve.clearance(lx, ly) / 3.0)
}

/// Tubular neighborhood of a curve sampled on a grid.
#[derive(Debug, Clone)]
pub struct TubularGeometry {
    curve: Curve,
    grid: GridSpec,
    delta: f64,
    d_gamma: ScalarField,
    normal_ext: [ScalarField; 2],
    s_coord: ScalarField,
    curvature_ext: ScalarField,
}

impl TubularGeometry {
    /// Builds the band data. `delta = None` picks [`default_delta`].
    pub fn new(curve: Curve, grid: GridSpec, delta: Option<f64>) -> Result<Self> {
        let clearance = curve.clearance(grid.lx, grid.ly);
        if clearance <= 0.0 {
            return Err(Error::InvalidCurve("curve touches or leaves the domain".into()));
        }
        let delta = delta.unwrap_or_else(|| default_delta(&curve, grid.lx, grid.ly));
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("band half-width must be positive, got {delta}")));
        }
        if clearance <= 3.0 * delta {
            return Err(Error::InvalidCurve(format!(
                "wall clearance {clearance} does not exceed 3 delta = {}",
                3.0 * delta
            )));
        }
        let frame = CurveFrame::new(&curve);
        let g = grid;
        let proj: Vec<Projection> = (0..g.cell_count())
            .into_par_iter()
            .map(|k| frame.project(g.cell_center(k % g.nx, k / g.nx)))
            .collect();
        let field = |f: &dyn Fn(&Projection) -> f64| {
            ScalarField::new(g, proj.iter().map(f).collect())
        };
        let d_gamma = field(&|p| p.r)?;
        let nx = field(&|p| p.normal[0])?;
        let ny = field(&|p| p.normal[1])?;
        let s_coord = field(&|p| p.s)?;
        let curvature_ext = field(&|p| p.curvature)?;
        Ok(Self { curve, grid, delta, d_gamma, normal_ext: [nx, ny], s_coord, curvature_ext })
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn d_gamma(&self) -> &ScalarField {
        &self.d_gamma
    }

    pub fn normal_ext(&self) -> &[ScalarField; 2] {
        &self.normal_ext
    }

    pub fn s_coord(&self) -> &ScalarField {
        &self.s_coord
    }

    /// Curvature of the foot point, extended along normals.
    pub fn curvature_ext(&self) -> &ScalarField {
        &self.curvature_ext
    }

    /// True where `|d| < 2 delta`.
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        self.d_gamma.at(i, j).abs() < 2.0 * self.delta
    }
}

/// Tubular coordinates `(r, s)` of a point within `3 delta` of the curve.
pub fn tubular_coords(x: Point, geom: &TubularGeometry) -> Result<(f64, f64)> {
    let p = geom.curve.project(x);
    let limit = 3.0 * geom.delta;
    if p.r.abs() >= limit {
        return Err(Error::OutsideBand { distance: p.r.abs(), limit });
    }
    Ok((p.r, p.s))
}

/// Arclength point and interior normal at normalized coordinate `s`.
pub fn curve_point(curve: &Curve, s: f64) -> (Point, Point) {
    let frame = CurveFrame::new(curve);
    let p = curve.markers();
    let n = p.len();
    let target = s.rem_euclid(1.0) * frame.total;
    let k = match frame.cum.binary_search_by(|c| c.partial_cmp(&target).unwrap()) {
        Ok(k) => k.min(n - 1),
        Err(k) => k.saturating_sub(1).min(n - 1),
    };
    let len = frame.cum[k + 1] - frame.cum[k];
    let t = ((target - frame.cum[k]) / len).clamp(0.0, 1.0);
    let a = p[k];
    let b = p[(k + 1) % n];
    let (na, nb) = (frame.normals[k], frame.normals[(k + 1) % n]);
    let nm = [(1.0 - t) * na[0] + t * nb[0], (1.0 - t) * na[1] + t * nb[1]];
    let l = norm(nm);
    ([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], [nm[0] / l, nm[1] / l])
}

/// Central-difference gradient at cell centers. One-sided at box walls,
/// wrapped when periodic.
pub fn central_gradient(f: &ScalarField) -> [ScalarField; 2] {
    let g = *f.grid();
    let mut gx = ScalarField::zeros(g);
    let mut gy = ScalarField::zeros(g);
    let diff = |n: usize, k: usize, get: &dyn Fn(usize) -> f64, h: f64| -> f64 {
        match g.bc {
            Boundary::Periodic => (get((k + 1) % n) - get((k + n - 1) % n)) / (2.0 * h),
            Boundary::DirichletBox => {
                if n == 1 {
                    0.0
                } else if k == 0 {
                    (get(1) - get(0)) / h
                } else if k == n - 1 {
                    (get(n - 1) - get(n - 2)) / h
                } else {
                    (get(k + 1) - get(k - 1)) / (2.0 * h)
                }
            }
        }
    };
    for j in 0..g.ny {
        for i in 0..g.nx {
            gx.set(i, j, diff(g.nx, i, &|ii| f.at(ii, j), g.hx()));
            gy.set(i, j, diff(g.ny, j, &|jj| f.at(i, jj), g.hy()));
        }
    }
    [gx, gy]
}

/// `(I - n n^T) grad f` on the band `|d| < 2 delta`, zero elsewhere.
pub fn tangential_gradient(f: &ScalarField, geom: &TubularGeometry) -> Result<[ScalarField; 2]> {
    geom.grid.ensure_same(f.grid(), "tangential gradient")?;
    let [mut gx, mut gy] = central_gradient(f);
    let [nx, ny] = &geom.normal_ext;
    let g = geom.grid;
    for j in 0..g.ny {
        for i in 0..g.nx {
            if !geom.in_band(i, j) {
                gx.set(i, j, 0.0);
                gy.set(i, j, 0.0);
                continue;
            }
            let (a, b) = (gx.at(i, j), gy.at(i, j));
            let (n0, n1) = (nx.at(i, j), ny.at(i, j));
            let dn = a * n0 + b * n1;
            gx.set(i, j, a - dn * n0);
            gy.set(i, j, b - dn * n1);
        }
    }
    Ok([gx, gy])
}
