//! Linearized Allen-Cahn operator and a smallest-eigenvalue probe.
//!
//! Forms act on cell values with homogeneous Dirichlet data and the plain
//! Euclidean inner product, so their eigenvalues are those of
//! `-lap_h + eps^-2 f''(c_A)`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::approx::build_c_a;
use crate::error::{Error, Result};
use crate::field::{Boundary, GridSpec, ScalarField};
use crate::geometry::{Curve, Point, TubularGeometry};
use crate::linalg::dot;
use crate::profile::{Potential, ProfileTable, Quartic};

/// Which operator a [`QuadraticForm`] encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    LEps,
    LEpsMinusTangential,
    Custom,
}

type Apply = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Matrix-free symmetric operator with a known lower spectral bound.
pub struct QuadraticForm {
    dim: usize,
    kind: FormKind,
    apply: Apply,
    diagonal: Vec<f64>,
    lower_bound: f64,
}

impl std::fmt::Debug for QuadraticForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QuadraticForm")
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .field("lower_bound", &self.lower_bound)
            .finish_non_exhaustive()
    }
}

impl QuadraticForm {
    /// Wraps a symmetric operator. `lower_bound` must not exceed its
    /// smallest eigenvalue.
    pub fn new(
        dim: usize,
        kind: FormKind,
        apply: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        diagonal: Vec<f64>,
        lower_bound: f64,
    ) -> Result<Self> {
        if diagonal.len() != dim || dim == 0 {
            return Err(Error::InvalidArgument(format!(
                "diagonal has {} entries for dimension {dim}",
                diagonal.len()
            )));
        }
        Ok(Self { dim, kind, apply: Box::new(apply), diagonal, lower_bound })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        (self.apply)(x, out)
    }

    /// Dense matrix, built column by column.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        m
    }

    /// Adds a non-negative (or any) diagonal term.
    pub fn plus_diagonal(self, extra: Vec<f64>) -> Result<Self> {
        if extra.len() != self.dim {
            return Err(Error::InvalidArgument("diagonal length mismatch".into()));
        }
        let min_extra = extra.iter().copied().fold(f64::INFINITY, f64::min);
        let diagonal = self.diagonal.iter().zip(&extra).map(|(a, b)| a + b).collect();
        let inner = self.apply;
        Ok(Self {
            dim: self.dim,
            kind: FormKind::Custom,
            apply: Box::new(move |x, out| {
                inner(x, out);
                for ((o, xi), e) in out.iter_mut().zip(x).zip(&extra) {
                    *o += e * xi;
                }
            }),
            diagonal,
            lower_bound: self.lower_bound + min_extra.min(0.0),
        })
    }
}

/// Boundary treatment of the probe forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProbeBoundary {
    #[default]
    Dirichlet,
    Neumann,
}

impl ProbeBoundary {
    fn ghost_sign(self) -> f64 {
        match self {
            Self::Dirichlet => -1.0,
            Self::Neumann => 1.0,
        }
    }
}

/// `-lap_0 x` on cells; ghosts are `g * x` at the wall.
fn stiffness(nx: usize, ny: usize, inv_h2: f64, g: f64, x: &[f64], out: &mut [f64]) {
    for j in 0..ny {
        let row = j * nx;
        for i in 0..nx {
            let c = x[row + i];
            let l = if i > 0 { x[row + i - 1] } else { g * c };
            let r = if i + 1 < nx { x[row + i + 1] } else { g * c };
            let d = if j > 0 { x[row - nx + i] } else { g * c };
            let u = if j + 1 < ny { x[row + nx + i] } else { g * c };
            out[row + i] = (4.0 * c - l - r - d - u) * inv_h2;
        }
    }
}

fn potential_of(c_a: &ScalarField, eps: f64, pot: &dyn Potential) -> Vec<f64> {
    c_a.values().iter().map(|&c| pot.d2(c) / (eps * eps)).collect()
}

/// `L_eps = -lap_h + eps^-2 f''(c_A)`.
pub fn assemble_l_eps(c_a: &ScalarField, eps: f64, pot: &dyn Potential, bc: ProbeBoundary) -> Result<QuadraticForm> {
    let gs = bc.ghost_sign();
    let g = *c_a.grid();
    let h = g.spacing()?;
    let inv_h2 = 1.0 / (h * h);
    let v = potential_of(c_a, eps, pot);
    let (nx, ny) = (g.nx, g.ny);
    let lower = v.iter().copied().fold(f64::INFINITY, f64::min);
    let diagonal: Vec<f64> = (0..g.cell_count())
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            let walls = (i == 0) as usize + (i + 1 == nx) as usize + (j == 0) as usize + (j + 1 == ny) as usize;
            (4.0 - gs * walls as f64) * inv_h2 + v[k]
        })
        .collect();
    QuadraticForm::new(
        g.cell_count(),
        FormKind::LEps,
        move |x, out| {
            stiffness(nx, ny, inv_h2, gs, x, out);
            for ((o, xi), vi) in out.iter_mut().zip(x).zip(&v) {
                *o += vi * xi;
            }
        },
        diagonal,
        lower,
    )
}

/// Central-difference gradient of cell values and its transpose.
struct CentralGradient {
    nx: usize,
    ny: usize,
    inv_2h: f64,
    ghost: f64,
}

impl CentralGradient {
    fn at(&self, x: &[f64], i: usize, j: usize) -> (f64, f64) {
        let (nx, ny) = (self.nx, self.ny);
        let k = j * nx + i;
        let g = self.ghost;
        let xl = if i > 0 { x[k - 1] } else { g * x[k] };
        let xr = if i + 1 < nx { x[k + 1] } else { g * x[k] };
        let xd = if j > 0 { x[k - nx] } else { g * x[k] };
        let xu = if j + 1 < ny { x[k + nx] } else { g * x[k] };
        ((xr - xl) * self.inv_2h, (xu - xd) * self.inv_2h)
    }

    /// Accumulates `G^T (a, b)` for the cell `(i, j)` into `out`.
    fn scatter(&self, a: f64, b: f64, i: usize, j: usize, out: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        let k = j * nx + i;
        let (a, b) = (a * self.inv_2h, b * self.inv_2h);
        let g = self.ghost;
        if i + 1 < nx { out[k + 1] += a } else { out[k] += g * a }
        if i > 0 { out[k - 1] -= a } else { out[k] -= g * a }
        if j + 1 < ny { out[k + nx] += b } else { out[k] += g * b }
        if j > 0 { out[k - nx] -= b } else { out[k] -= g * b }
    }
}

/// `L_eps - T` where `T = G^T M P G` is the tangential stiffness on the
/// band `|d| < 2 delta` (`M` the band mask, `P = I - n n^T`).
pub fn assemble_l_eps_minus_tangential(
    c_a: &ScalarField,
    eps: f64,
    geom: &TubularGeometry,
    pot: &dyn Potential,
    bc: ProbeBoundary,
) -> Result<QuadraticForm> {
    let g = *c_a.grid();
    geom.grid().ensure_same(&g, "tangential form")?;
    let base = assemble_l_eps(c_a, eps, pot, bc)?;
    let h = g.spacing()?;
    let (nx, ny) = (g.nx, g.ny);
    let band: Vec<Option<[f64; 3]>> = (0..g.cell_count())
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            geom.in_band(i, j).then(|| {
                let (a, b) = (geom.normal_ext()[0].values()[k], geom.normal_ext()[1].values()[k]);
                [1.0 - a * a, -a * b, 1.0 - b * b]
            })
        })
        .collect();
    let grad = CentralGradient { nx, ny, inv_2h: 0.5 / h, ghost: bc.ghost_sign() };
    let lower = base.lower_bound;
    // the diagonal only serves as a preconditioner hint
    let diagonal = base.diagonal.clone();
    let base_apply = base.apply;
    QuadraticForm::new(
        g.cell_count(),
        FormKind::LEpsMinusTangential,
        move |x, out| {
            base_apply(x, out);
            for j in 0..ny {
                for i in 0..nx {
                    if let Some([pxx, pxy, pyy]) = band[j * nx + i] {
                        let (gx, gy) = grad.at(x, i, j);
                        let (tx, ty) = (pxx * gx + pxy * gy, pxy * gx + pyy * gy);
                        grad.scatter(-tx, -ty, i, j, out);
                    }
                }
            }
        },
        diagonal,
        lower,
    )
}

/// Approximate `(A - shift I)^-1 r` by a few Jacobi-preconditioned CG steps.
fn inexact_inverse(form: &QuadraticForm, shift: f64, r: &[f64], rel_tol: f64, max_iter: usize) -> Vec<f64> {
    let n = r.len();
    let inv_d: Vec<f64> = form.diagonal.iter().map(|d| 1.0 / (d - shift).max(1e-300)).collect();
    let mut x = vec![0.0; n];
    let mut res = r.to_vec();
    let mut z: Vec<f64> = res.iter().zip(&inv_d).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&res, &z);
    let target = rel_tol * dot(r, r).sqrt();
    for _ in 0..max_iter {
        form.apply(&p, &mut q);
        for (qi, pi) in q.iter_mut().zip(&p) {
            *qi -= shift * pi;
        }
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            break;
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            res[i] -= alpha * q[i];
        }
        if dot(&res, &res).sqrt() <= target {
            break;
        }
        for i in 0..n {
            z[i] = res[i] * inv_d[i];
        }
        let rz_new = dot(&res, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}

/// Orthonormalizes `vs` in place, dropping nearly dependent vectors.
fn orthonormalize(vs: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for mut v in vs {
        let original = dot(&v, &v).sqrt();
        if !(original > 0.0) {
            continue;
        }
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nrm = dot(&v, &v).sqrt();
        if nrm > 1e-10 * original {
            v.iter_mut().for_each(|x| *x /= nrm);
            basis.push(v);
        }
    }
    basis
}

pub const MAX_OUTER_ITERATIONS: usize = 500;

/// Smallest eigenvalue and a unit eigenvector.
///
/// Preconditioned inverse iteration with a shift below the form's lower
/// bound: each outer step solves `(A - sigma I) w = r` approximately for
/// the residual `r` and takes the Rayleigh-Ritz minimizer over
/// `span{x, w, x_prev}`. Stops once the Ritz value changes by at most `tol`.
pub fn min_eigenvalue(form: &QuadraticForm, tol: f64) -> Result<(f64, Vec<f64>)> {
    let n = form.dim;
    let shift = form.lower_bound - 1.0_f64.max(1e-3 * form.lower_bound.abs());
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut ax = vec![0.0; n];
    form.apply(&x, &mut ax);
    let mut lambda = dot(&x, &ax);
    let mut prev: Option<Vec<f64>> = None;
    for iter in 1..=MAX_OUTER_ITERATIONS {
        let r: Vec<f64> = ax.iter().zip(&x).map(|(a, b)| a - lambda * b).collect();
        if dot(&r, &r).sqrt() <= 1e-14 * lambda.abs().max(1.0) {
            return Ok((lambda, x));
        }
        let w = inexact_inverse(form, shift, &r, 1e-6, 400);
        let mut vs = vec![x.clone(), w];
        if let Some(p) = prev.take() {
            vs.push(p);
        }
        let basis = orthonormalize(vs);
        let m = basis.len();
        let images: Vec<Vec<f64>> = basis
            .iter()
            .map(|b| {
                let mut out = vec![0.0; n];
                form.apply(b, &mut out);
                out
            })
            .collect();
        let mut small = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                small[(i, j)] = 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i]));
            }
        }
        let eig = SymmetricEigen::new(small);
        let k = (0..m)
            .min_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap())
            .unwrap();
        let new_lambda = eig.eigenvalues[k];
        let coef = eig.eigenvectors.column(k);
        let mut nx = vec![0.0; n];
        let mut nax = vec![0.0; n];
        for q in 0..m {
            for i in 0..n {
                nx[i] += coef[q] * basis[q][i];
                nax[i] += coef[q] * images[q][i];
            }
        }
        let nrm = dot(&nx, &nx).sqrt();
        nx.iter_mut().for_each(|v| *v /= nrm);
        nax.iter_mut().for_each(|v| *v /= nrm);
        if !new_lambda.is_finite() {
            return Err(Error::NonFinite("eigenvalue iteration"));
        }
        let change = (new_lambda - lambda).abs();
        prev = Some(std::mem::replace(&mut x, nx));
        ax = nax;
        lambda = new_lambda;
        if iter >= 3 && change <= tol {
            if x.iter().sum::<f64>() < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            return Ok((lambda, x));
        }
    }
    Err(Error::NoConvergence { solver: "min_eigenvalue", iterations: MAX_OUTER_ITERATIONS, residual: f64::NAN })
}

/// One row of the spectral report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralRow {
    pub eps: f64,
    pub lambda_min_l: f64,
    pub lambda_min_l_minus_t: f64,
    /// `min eps^-2 f''(c_A)`, the naive bound.
    pub potential_min: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub c_budget: f64,
    pub rows: Vec<SpectralRow>,
}

impl SpectralReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,lambda_min_L,lambda_min_L_minus_T,pass\n");
        for r in &self.rows {
            let _ = writeln!(s, "{:?},{:?},{:?},{}", r.eps, r.lambda_min_l, r.lambda_min_l_minus_t, r.pass);
        }
        s
    }
}

/// Circle set-up for the probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeGeometry {
    pub center: Point,
    pub radius: f64,
    /// Side of the square domain.
    pub side: f64,
    /// Cells per interface width: `h = eps / nx_ratio`.
    pub nx_ratio: f64,
    pub delta: Option<f64>,
    pub markers: usize,
    pub boundary: ProbeBoundary,
}

impl Default for ProbeGeometry {
    fn default() -> Self {
        Self { center: [0.5, 0.5], radius: 0.25, side: 1.0, nx_ratio: 4.0, delta: None, markers: 256, boundary: ProbeBoundary::Dirichlet }
    }
}

/// Field used for one probe row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeField {
    /// `c_A` glued on the circle.
    Approx,
    /// The constant field `0`, a contrast case with no uniform bound.
    Zero,
}

/// Computes both smallest eigenvalues for each `eps` and compares them
/// with `-c_budget`.
pub fn verify_spectral_bound(
    setup: &ProbeGeometry,
    profile: &ProfileTable,
    eps_list: &[f64],
    c_budget: f64,
    field: ProbeField,
    tol: f64,
) -> Result<SpectralReport> {
    let pot = Quartic::default();
    let rows = eps_list
        .par_iter()
        .map(|&eps| -> Result<SpectralRow> {
            let n = (setup.side * setup.nx_ratio / eps).round() as usize;
            let grid = GridSpec::square(n, setup.side, Boundary::DirichletBox)?;
            let curve = Curve::circle(setup.center, setup.radius, setup.markers)?;
            let geom = TubularGeometry::new(curve, grid, setup.delta)?;
            let c = match field {
                ProbeField::Approx => build_c_a(&geom, eps, profile, None)?,
                ProbeField::Zero => ScalarField::zeros(grid),
            };
            let l = assemble_l_eps(&c, eps, &pot, setup.boundary)?;
            let potential_min = l.lower_bound();
            let (lambda_l, _) = min_eigenvalue(&l, tol)?;
            let lt = assemble_l_eps_minus_tangential(&c, eps, &geom, &pot, setup.boundary)?;
            let (lambda_lt, _) = min_eigenvalue(&lt, tol)?;
            Ok(SpectralRow {
                eps,
                lambda_min_l: lambda_l,
                lambda_min_l_minus_t: lambda_lt,
                potential_min,
                pass: lambda_l >= -c_budget && lambda_lt >= -c_budget,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralReport { c_budget, rows })
}

/// `-d^2/drho^2 + f''(theta0(rho))` on `n` interior points of `[-L, L]`
/// with Dirichlet ends.
pub fn profile_linearization_1d(profile: &ProfileTable, half_width: f64, n: usize, pot: &dyn Potential) -> Result<(QuadraticForm, Vec<f64>)> {
    let h = 2.0 * half_width / (n + 1) as f64;
    let rho: Vec<f64> = (1..=n).map(|k| -half_width + k as f64 * h).collect();
    let v: Vec<f64> = rho.iter().map(|&r| pot.d2(profile.theta0(r))).collect();
    let inv_h2 = 1.0 / (h * h);
    let lower = v.iter().copied().fold(f64::INFINITY, f64::min);
    let diagonal = v.iter().map(|vi| 2.0 * inv_h2 + vi).collect();
    let form = QuadraticForm::new(
        n,
        FormKind::Custom,
        move |x, out| {
            for k in 0..n {
                let l = if k > 0 { x[k - 1] } else { 0.0 };
                let r = if k + 1 < n { x[k + 1] } else { 0.0 };
                out[k] = (2.0 * x[k] - l - r) * inv_h2 + v[k] * x[k];
            }
        },
        diagonal,
        lower,
    )?;
    Ok((form, rho))
}
