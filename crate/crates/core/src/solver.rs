//! Time stepping for the coupled Navier-Stokes / Allen-Cahn system
//!
//! ```text
//! v_t + (v.grad) v - lap v + grad p = -eps div(grad c (x) grad c),   div v = 0
//! c_t + v.grad c = lap c - f'(c) / eps^2
//! ```
//!
//! on a MAC grid: stabilized semi-implicit Allen-Cahn, implicit viscosity
//! with explicit advection and forcing, and an exact pressure projection.

use crate::error::{Error, Result};
use crate::field::{
    discrete_divergence, discrete_gradient, discrete_laplacian, gradient_energy, velocity_gradient_energy,
    Boundary, FaceComponent, GridSpec, ScalarField, StaggeredVectorField,
};
use crate::linalg::{pcg, CgOptions, PoissonMethod, PoissonSolver};
use crate::profile::{Potential, Quartic};

/// Order-parameter value imposed on box walls.
pub const WALL_VALUE: f64 = -1.0;

/// Largest `|c|` tolerated before a run is aborted.
pub const OVERSHOOT_LIMIT: f64 = 1.1;

/// Solution state at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct NsacState {
    pub t: f64,
    pub v: StaggeredVectorField,
    pub p: ScalarField,
    pub c: ScalarField,
    pub eps: f64,
}

impl NsacState {
    /// State at rest with the given order parameter.
    pub fn at_rest(c: ScalarField, eps: f64) -> Self {
        let g = *c.grid();
        Self {
            t: 0.0,
            v: StaggeredVectorField::zeros(g),
            p: ScalarField::zeros(g),
            c,
            eps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub dt: f64,
    /// Stabilization constant `S` of the Allen-Cahn splitting.
    pub stabilization: f64,
    pub cg_tol: f64,
    pub cg_maxit: usize,
    pub potential: Quartic,
    pub poisson: PoissonMethod,
    /// Reject steps that raise the total energy.
    pub energy_guard: bool,
}

impl StepParams {
    /// Default parameters with `dt = 0.1 min(h^2, eps^2)`.
    pub fn for_grid(grid: &GridSpec, eps: f64) -> Result<Self> {
        let h = grid.spacing()?;
        Ok(Self {
            dt: default_dt(h, eps),
            stabilization: 1.0,
            cg_tol: 1e-10,
            cg_maxit: 10_000,
            potential: Quartic::default(),
            poisson: PoissonMethod::Transform,
            energy_guard: true,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.cg_tol > 0.0 && self.cg_tol <= 1e-10) {
            return Err(Error::InvalidArgument(format!("cg_tol must lie in (0, 1e-10], got {}", self.cg_tol)));
        }
        let needed = (0..=200)
            .map(|k| self.potential.d2(-1.0 + k as f64 / 100.0))
            .fold(f64::NEG_INFINITY, f64::max);
        if self.stabilization < needed {
            return Err(Error::InvalidArgument(format!(
                "stabilization {} is below max f'' = {needed} on [-1, 1]",
                self.stabilization
            )));
        }
        Ok(())
    }

    fn cg(&self) -> CgOptions {
        CgOptions {
            rel_tol: self.cg_tol,
            abs_tol: 1e-300,
            max_iter: self.cg_maxit,
        }
    }
}

/// `0.1 min(h^2, eps^2)`.
pub fn default_dt(h: f64, eps: f64) -> f64 {
    0.1 * (h * h).min(eps * eps)
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub max_divergence: f64,
    pub max_velocity: f64,
    pub cg_iterations: usize,
}

/// `mu = -eps lap c + f'(c) / eps`, with wall ghosts at [`WALL_VALUE`].
pub fn chemical_potential(c: &ScalarField, eps: f64, pot: &dyn Potential) -> Result<ScalarField> {
    let lap = discrete_laplacian(c, WALL_VALUE)?;
    lap.zip_map(c, |l, c| -eps * l + pot.d1(c) / eps)
}

/// Conservative discretization of `-eps div(grad c (x) grad c)` on faces.
/// Normal stresses sit at cell centers, shear stress at cell corners; wall
/// faces of a box carry no force.
pub fn capillary_force(c: &ScalarField, eps: f64) -> Result<StaggeredVectorField> {
    let g = *c.grid();
    let h = g.spacing()?;
    let (nx, ny) = (g.nx, g.ny);
    let src = g.padded(c.values(), 2, WALL_VALUE);
    let wp = nx + 4;
    // `s(i, j)` for i, j >= -2
    let s = |i: usize, j: usize| src[(j * wp) + i];
    let inv2h = 0.5 / h;
    // normal stresses at cells -1..=n, stored with offset 1
    let w1 = nx + 2;
    let mut txx = vec![0.0; w1 * (ny + 2)];
    let mut tyy = vec![0.0; w1 * (ny + 2)];
    for j in 0..ny + 2 {
        for i in 0..nx + 2 {
            // cell (i - 1, j - 1) sits at padded (i + 1, j + 1)
            let dx = (s(i + 2, j + 1) - s(i, j + 1)) * inv2h;
            let dy = (s(i + 1, j + 2) - s(i + 1, j)) * inv2h;
            txx[j * w1 + i] = dx * dx;
            tyy[j * w1 + i] = dy * dy;
        }
    }
    // shear stress at corners (i h, j h), i in 0..=nx, j in 0..=ny
    let wc = nx + 1;
    let mut txy = vec![0.0; wc * (ny + 1)];
    for j in 0..=ny {
        for i in 0..=nx {
            // cells (i, j), (i - 1, j), (i, j - 1), (i - 1, j - 1)
            let (c00, c10, c01, c11) = (s(i + 1, j + 1), s(i + 2, j + 1), s(i + 1, j + 2), s(i + 2, j + 2));
            let cx = 0.5 * ((c11 - c01) + (c10 - c00)) / h;
            let cy = 0.5 * ((c11 - c10) + (c01 - c00)) / h;
            txy[j * wc + i] = cx * cy;
        }
    }
    let tc = |i: usize, j: usize| (txx[(j + 1) * w1 + i + 1], tyy[(j + 1) * w1 + i + 1]);
    let mut out = StaggeredVectorField::zeros(g);
    let periodic = g.bc == Boundary::Periodic;
    let u_start = if periodic { 0 } else { 1 };
    for j in 0..ny {
        for i in u_start..nx {
            // txx at cells i and i - 1 (offset index i - 1 + 1 = i)
            let dxx = tc(i, j).0 - txx[(j + 1) * w1 + i];
            let div = dxx / h + (txy[(j + 1) * wc + i] - txy[j * wc + i]) / h;
            out.u_mut()[j * (nx + 1) + i] = -eps * div;
        }
    }
    let v_start = if periodic { 0 } else { 1 };
    for j in v_start..ny {
        for i in 0..nx {
            let dyy = tc(i, j).1 - tyy[j * w1 + i + 1];
            let div = (txy[j * wc + i + 1] - txy[j * wc + i]) / h + dyy / h;
            out.v_mut()[j * nx + i] = -eps * div;
        }
    }
    out.enforce_boundary();
    Ok(out)
}

/// `(E_eps, E_tot)` with `E_eps = int eps |grad c|^2 / 2 + f(c) / eps` and
/// `E_tot = int |v|^2 / 4 + E_eps`.
pub fn total_energy(state: &NsacState, pot: &dyn Potential) -> (f64, f64) {
    let c = &state.c;
    let eps = state.eps;
    let bulk: f64 = c.values().iter().map(|&x| pot.value(x)).sum::<f64>() * c.grid().cell_area() / eps;
    let e_eps = 0.5 * eps * gradient_energy(c, WALL_VALUE) + bulk;
    let kinetic = 0.25 * state.v.dot(&state.v);
    (e_eps, kinetic + e_eps)
}

/// Instantaneous dissipation `int |grad v|^2 / 2 + mu^2 / eps`.
pub fn dissipation(state: &NsacState, pot: &dyn Potential) -> Result<f64> {
    let mu = chemical_potential(&state.c, state.eps, pot)?;
    let grad_v = velocity_gradient_energy(&state.v)?;
    Ok(0.5 * grad_v + mu.dot(&mu) / state.eps)
}

/// Energy bookkeeping for one instant of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub t: f64,
    pub e_tot: f64,
    pub dissipation: f64,
}

impl EnergySample {
    pub fn of(state: &NsacState, pot: &dyn Potential) -> Result<Self> {
        Ok(Self {
            t: state.t,
            e_tot: total_energy(state, pot).1,
            dissipation: dissipation(state, pot)?,
        })
    }
}

/// Relative residual of `E_tot(T) + int_0^T D dt - E_tot(0)` with the time
/// integral taken by the trapezoid rule over the samples.
pub fn energy_identity_residual(samples: &[EnergySample]) -> f64 {
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return 0.0;
    };
    let integral: f64 = samples
        .windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].dissipation + w[1].dissipation))
        .sum();
    let defect = last.e_tot + integral - first.e_tot;
    if defect == 0.0 {
        return 0.0;
    }
    let scale = first.e_tot.abs().max(integral.abs());
    defect.abs() / scale
}

/// `(a - lap_0) x` on an `nf x ns` array stored with the first axis
/// fastest. Outside the array, neighbors wrap when `periodic` and are
/// otherwise read as `ghost_f * x` or `ghost_s * x` along each axis.
#[allow(clippy::too_many_arguments)]
fn helmholtz(nf: usize, ns: usize, periodic: bool, ghost: [f64; 2], a: f64, inv_h2: f64, x: &[f64], out: &mut [f64]) {
    let [gf, gs] = ghost;
    for j in 0..ns {
        let row = j * nf;
        for i in 0..nf {
            let c = x[row + i];
            let l = if i > 0 {
                x[row + i - 1]
            } else if periodic {
                x[row + nf - 1]
            } else {
                gf * c
            };
            let r = if i + 1 < nf {
                x[row + i + 1]
            } else if periodic {
                x[row]
            } else {
                gf * c
            };
            let d = if j > 0 {
                x[row - nf + i]
            } else if periodic {
                x[(ns - 1) * nf + i]
            } else {
                gs * c
            };
            let u = if j + 1 < ns {
                x[row + nf + i]
            } else if periodic {
                x[i]
            } else {
                gs * c
            };
            out[row + i] = a * c - (l + r + d + u - 4.0 * c) * inv_h2;
        }
    }
}

/// Second-order upwind `v . grad c` at cell centers, using cell-averaged
/// velocity and ghost cells for the stencil tails.
pub fn advect_scalar(c: &ScalarField, v: &StaggeredVectorField) -> Result<ScalarField> {
    let g = *c.grid();
    let h = g.spacing()?;
    let (uc, vc) = v.cell_centered();
    let w = WALL_VALUE;
    let mut out = ScalarField::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (ii, jj) = (i as isize, j as isize);
            let (a, b) = (uc.at(i, j), vc.at(i, j));
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let s = |di: isize, dj: isize| c.sample(ii + di, jj + dj, w);
            let c0 = s(0, 0);
            let dx = if a > 0.0 {
                (3.0 * c0 - 4.0 * s(-1, 0) + s(-2, 0)) / (2.0 * h)
            } else {
                (-3.0 * c0 + 4.0 * s(1, 0) - s(2, 0)) / (2.0 * h)
            };
            let dy = if b > 0.0 {
                (3.0 * c0 - 4.0 * s(0, -1) + s(0, -2)) / (2.0 * h)
            } else {
                (-3.0 * c0 + 4.0 * s(0, 1) - s(0, 2)) / (2.0 * h)
            };
            out.set(i, j, a * dx + b * dy);
        }
    }
    Ok(out)
}

/// Centered `(v . grad) v` on the unknown faces.
fn convective_term(w: &StaggeredVectorField) -> StaggeredVectorField {
    let g = *w.grid();
    let inv2h = 0.5 / g.hx();
    let (nx, ny) = (g.nx, g.ny);
    let cu = FaceComponent::u(g);
    let cv = FaceComponent::v(g);
    let pu = cu.padded(w.u());
    let pv = cv.padded(w.v());
    // padded node (n, t) lives at (t + 1) * width + n + 1
    let (wu, wv) = (nx + 3, ny + 3);
    let wrap = |k: isize, n: usize| k.rem_euclid(n as isize) as usize;
    let mut out = StaggeredVectorField::zeros(g);
    // v averaged to u-face (i, j): cells i-1, i and nodes j, j+1
    for j in 0..ny {
        for i in cu.unknown_nodes() {
            let (im, ic) = (wrap(i as isize - 1, nx), wrap(i as isize, nx));
            let vbar = 0.25 * (w.v_at(im, j) + w.v_at(ic, j) + w.v_at(im, j + 1) + w.v_at(ic, j + 1));
            let k = (j + 1) * wu + i + 1;
            let dudx = (pu[k + 1] - pu[k - 1]) * inv2h;
            let dudy = (pu[k + wu] - pu[k - wu]) * inv2h;
            out.u_mut()[cu.index(i, j)] = pu[k] * dudx + vbar * dudy;
        }
    }
    for j in cv.unknown_nodes() {
        for i in 0..nx {
            let (jm, jc) = (wrap(j as isize - 1, ny), wrap(j as isize, ny));
            let ubar = 0.25 * (w.u_at(i, jm) + w.u_at(i + 1, jm) + w.u_at(i, jc) + w.u_at(i + 1, jc));
            // normal axis is y, tangential is x
            let k = (i + 1) * wv + j + 1;
            let dvdy = (pv[k + 1] - pv[k - 1]) * inv2h;
            let dvdx = (pv[k + wv] - pv[k - wv]) * inv2h;
            out.v_mut()[cv.index(j, i)] = ubar * dvdx + pv[k] * dvdy;
        }
    }
    out.enforce_boundary();
    out
}

/// Discrete Helmholtz projection onto divergence-free face fields with a
/// one-off pressure solver.
pub fn project_divergence_free(w: &StaggeredVectorField) -> Result<StaggeredVectorField> {
    let solver = PoissonSolver::new(*w.grid(), PoissonMethod::Transform, CgOptions::default())?;
    let mut w = w.clone();
    w.enforce_boundary();
    let phi = solver.solve(&discrete_divergence(&w))?;
    w.axpy(-1.0, &discrete_gradient(&phi));
    w.enforce_boundary();
    Ok(w)
}

/// Owns the pressure solver for one grid and advances states.
#[derive(Debug)]
pub struct NsacSolver {
    grid: GridSpec,
    h: f64,
    params: StepParams,
    poisson: PoissonSolver,
}

impl NsacSolver {
    pub fn new(grid: GridSpec, params: StepParams) -> Result<Self> {
        let h = grid.solver_spacing()?;
        params.validate()?;
        let poisson = PoissonSolver::new(grid, params.poisson, params.cg())?;
        Ok(Self { grid, h, params, poisson })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &StepParams {
        &self.params
    }

    /// Discrete Helmholtz projection: returns the divergence-free part of
    /// `w` and the potential `phi` with `w = P w + G phi`.
    pub fn project(&self, w: &StaggeredVectorField) -> Result<(StaggeredVectorField, ScalarField)> {
        self.grid.ensure_same(w.grid(), "projection")?;
        let mut w = w.clone();
        w.enforce_boundary();
        let phi = self.poisson.solve(&discrete_divergence(&w))?;
        let grad = discrete_gradient(&phi);
        w.axpy(-1.0, &grad);
        w.enforce_boundary();
        Ok((w, phi))
    }

    /// One stabilized semi-implicit Allen-Cahn step with advecting velocity `v`.
    pub fn ac_step(&self, c: &ScalarField, v: &StaggeredVectorField, eps: f64) -> Result<(ScalarField, usize)> {
        let g = self.grid;
        g.ensure_same(c.grid(), "ac_step")?;
        let p = &self.params;
        let inv_h2 = 1.0 / (self.h * self.h);
        let a = 1.0 / p.dt + p.stabilization / (eps * eps);
        let adv = advect_scalar(c, v)?;
        let mut rhs: Vec<f64> = c
            .values()
            .iter()
            .zip(adv.values())
            .map(|(&c, &adv)| a * c - adv - p.potential.d1(c) / (eps * eps))
            .collect();
        if g.bc == Boundary::DirichletBox {
            let lift = 2.0 * WALL_VALUE * inv_h2;
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let walls = (i == 0) as usize + (i + 1 == g.nx) as usize + (j == 0) as usize + (j + 1 == g.ny) as usize;
                    if walls > 0 {
                        rhs[g.index(i, j)] += walls as f64 * lift;
                    }
                }
            }
        }
        let mut x = c.values().to_vec();
        let report = pcg(
            |x, out| helmholtz(g.nx, g.ny, g.bc == Boundary::Periodic, [-1.0, -1.0], a, inv_h2, x, out),
            None,
            &rhs,
            &mut x,
            p.cg(),
        )?;
        Ok((ScalarField::new(g, x)?, report.iterations))
    }

    /// Implicit viscous step with explicit advection and `force`, followed
    /// by the pressure projection. Returns the new velocity and pressure.
    pub fn ns_projection_step(
        &self,
        v: &StaggeredVectorField,
        force: &StaggeredVectorField,
    ) -> Result<(StaggeredVectorField, ScalarField, usize)> {
        let g = self.grid;
        g.ensure_same(v.grid(), "ns_projection_step")?;
        let p = &self.params;
        let dt = p.dt;
        let inv_h2 = 1.0 / (self.h * self.h);
        let a = 1.0 / dt;
        let conv = convective_term(v);
        let mut star = StaggeredVectorField::zeros(g);
        let mut iterations = 0;
        for comp in [FaceComponent::u(g), FaceComponent::v(g)] {
            let (src, cv) = if comp.is_u { (v.u(), conv.u()) } else { (v.v(), conv.v()) };
            let n = comp.unknown_count();
            let full_rhs: Vec<f64> = (0..src.len()).map(|k| a * src[k] - cv[k]).collect();
            let mut b = vec![0.0; n];
            comp.pack(&full_rhs, &mut b);
            let mut x = vec![0.0; n];
            comp.pack(src, &mut x);
            let (nf, ns) = (comp.unknown_nodes().len(), comp.tangential_cells());
            let periodic = g.bc == Boundary::Periodic;
            // wall nodes along the normal axis are zero, tangential ghosts are odd
            let report = pcg(
                |x, out| helmholtz(nf, ns, periodic, [0.0, -1.0], a, inv_h2, x, out),
                None,
                &b,
                &mut x,
                p.cg(),
            )?;
            iterations += report.iterations;
            let dst = if comp.is_u { star.u_mut() } else { star.v_mut() };
            comp.unpack(&x, dst);
        }
        // the force enters after the viscous solve so that gradient forces
        // are removed exactly by the projection
        star.axpy(dt, force);
        let (next, phi) = self.project(&star)?;
        let pressure = phi.map(|x| x / dt);
        Ok((next, pressure, iterations))
    }

    /// Capillary force, momentum step, then Allen-Cahn with the new velocity.
    pub fn step(&self, state: &NsacState) -> Result<(NsacState, StepInfo)> {
        let force = capillary_force(&state.c, state.eps)?;
        let (v, p, it_ns) = self.ns_projection_step(&state.v, &force)?;
        let (c, it_ac) = self.ac_step(&state.c, &v, state.eps)?;
        if !c.is_finite() || !v.is_finite() {
            return Err(Error::Abort(format!("non-finite state at t = {}", state.t + self.params.dt)));
        }
        let peak = c.max_abs();
        if peak > OVERSHOOT_LIMIT {
            return Err(Error::Abort(format!(
                "|c| reached {peak} at t = {}, beyond {OVERSHOOT_LIMIT}",
                state.t + self.params.dt
            )));
        }
        let next = NsacState { t: state.t + self.params.dt, v, p, c, eps: state.eps };
        if self.params.energy_guard {
            let pot = &self.params.potential;
            let before = total_energy(state, pot).1;
            let after = total_energy(&next, pot).1;
            if after > before + 1e-10 * before.abs() + 1e-14 {
                return Err(Error::Abort(format!(
                    "total energy rose from {before} to {after} at t = {}",
                    next.t
                )));
            }
        }
        let info = StepInfo {
            max_divergence: discrete_divergence(&next.v).max_abs(),
            max_velocity: next.v.max_abs(),
            cg_iterations: it_ns + it_ac,
        };
        Ok((next, info))
    }
}
