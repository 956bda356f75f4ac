//! Matrix-free conjugate gradients and the pressure Poisson solver.

use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{discrete_divergence, discrete_gradient, Boundary, GridSpec, ScalarField};

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative residual target `|r| <= rel_tol * |b|`.
    pub rel_tol: f64,
    /// Absolute floor, useful when `b` is tiny.
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_iter: 5000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned CG for a symmetric positive definite operator.
///
/// `x` holds the initial guess on entry. If it already satisfies the
/// tolerance it is returned untouched, which keeps exact fixed points exact.
pub fn pcg(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    inv_diag: Option<&[f64]>,
    b: &[f64],
    x: &mut [f64],
    opts: CgOptions,
) -> Result<CgReport> {
    let n = b.len();
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let target = (opts.rel_tol * dot(b, b).sqrt()).max(opts.abs_tol);
    let mut rnorm = dot(&r, &r).sqrt();
    if rnorm <= target {
        return Ok(CgReport { iterations: 0, residual: rnorm });
    }
    let precondition = |r: &[f64], z: &mut [f64]| match inv_diag {
        Some(d) => z.iter_mut().zip(r.iter().zip(d)).for_each(|(z, (r, d))| *z = r * d),
        None => z.copy_from_slice(r),
    };
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=opts.max_iter {
        apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::NoConvergence { solver: "cg", iterations: it, residual: rnorm });
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        rnorm = dot(&r, &r).sqrt();
        if !rnorm.is_finite() {
            return Err(Error::NonFinite("cg residual"));
        }
        if rnorm <= target {
            return Ok(CgReport { iterations: it, residual: rnorm });
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence { solver: "cg", iterations: opts.max_iter, residual: rnorm })
}

/// Method used to invert the pressure operator `D G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonMethod {
    /// Exact diagonalization: cosine transform on a box, Fourier when periodic.
    Transform,
    /// Jacobi-preconditioned CG on the singular system, restricted to mean-zero data.
    ConjugateGradient,
}

enum Plan {
    Cosine {
        x: Arc<dyn TransformType2And3<f64>>,
        y: Arc<dyn TransformType2And3<f64>>,
    },
    Fourier {
        fx: Arc<dyn Fft<f64>>,
        fy: Arc<dyn Fft<f64>>,
        ix: Arc<dyn Fft<f64>>,
        iy: Arc<dyn Fft<f64>>,
    },
    None,
}

/// Solver for `D G phi = rhs` with the mean of `phi` fixed to zero.
pub struct PoissonSolver {
    grid: GridSpec,
    method: PoissonMethod,
    plan: Plan,
    eig: Vec<f64>,
    cg: CgOptions,
}

impl std::fmt::Debug for PoissonSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonSolver")
            .field("grid", &self.grid)
            .field("method", &self.method)
            .finish()
    }
}

impl PoissonSolver {
    pub fn new(grid: GridSpec, method: PoissonMethod, cg: CgOptions) -> Result<Self> {
        grid.spacing()?;
        let (nx, ny) = (grid.nx, grid.ny);
        let (hx, hy) = (grid.hx(), grid.hy());
        let mut eig = vec![0.0; nx * ny];
        let plan = match method {
            PoissonMethod::ConjugateGradient => Plan::None,
            PoissonMethod::Transform => match grid.bc {
                Boundary::DirichletBox => {
                    let mut planner = DctPlanner::new();
                    Plan::Cosine { x: planner.plan_dct2(nx), y: planner.plan_dct2(ny) }
                }
                Boundary::Periodic => {
                    let mut planner = FftPlanner::new();
                    Plan::Fourier {
                        fx: planner.plan_fft_forward(nx),
                        fy: planner.plan_fft_forward(ny),
                        ix: planner.plan_fft_inverse(nx),
                        iy: planner.plan_fft_inverse(ny),
                    }
                }
            },
        };
        let scale = match grid.bc {
            Boundary::DirichletBox => 0.5,
            Boundary::Periodic => 1.0,
        };
        for l in 0..ny {
            let sy = (std::f64::consts::PI * l as f64 * scale / ny as f64).sin();
            for k in 0..nx {
                let sx = (std::f64::consts::PI * k as f64 * scale / nx as f64).sin();
                eig[l * nx + k] = -4.0 * (sx * sx / (hx * hx) + sy * sy / (hy * hy));
            }
        }
        Ok(Self { grid, method, plan, eig, cg })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Solves `D G phi = rhs`. A non-zero mean in `rhs` (incompatible data)
    /// is removed first and logged.
    pub fn solve(&self, rhs: &ScalarField) -> Result<ScalarField> {
        self.grid.ensure_same(rhs.grid(), "poisson rhs")?;
        let mut b = rhs.values().to_vec();
        let mean = b.iter().sum::<f64>() / b.len() as f64;
        let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if mean.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            log::warn!("poisson rhs has mean {mean:e}; subtracting it");
        }
        b.iter_mut().for_each(|v| *v -= mean);
        let mut phi = match (&self.plan, self.method) {
            (Plan::Cosine { x, y }, _) => self.solve_cosine(&b, x.as_ref(), y.as_ref()),
            (Plan::Fourier { fx, fy, ix, iy }, _) => {
                self.solve_fourier(&b, fx.as_ref(), fy.as_ref(), ix.as_ref(), iy.as_ref())
            }
            (Plan::None, _) => self.solve_cg(&b)?,
        };
        let m = phi.iter().sum::<f64>() / phi.len() as f64;
        phi.iter_mut().for_each(|v| *v -= m);
        ScalarField::new(self.grid, phi)
    }

    fn solve_cosine(&self, b: &[f64], tx: &dyn TransformType2And3<f64>, ty: &dyn TransformType2And3<f64>) -> Vec<f64> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut a = b.to_vec();
        for row in a.chunks_exact_mut(nx) {
            tx.process_dct2(row);
        }
        let mut col = vec![0.0; ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = a[j * nx + i];
            }
            ty.process_dct2(&mut col);
            for j in 0..ny {
                a[j * nx + i] = col[j];
            }
        }
        for (v, &e) in a.iter_mut().zip(&self.eig) {
            *v = if e == 0.0 { 0.0 } else { *v / e };
        }
        for i in 0..nx {
            for j in 0..ny {
                col[j] = a[j * nx + i];
            }
            ty.process_dct3(&mut col);
            for j in 0..ny {
                a[j * nx + i] = col[j];
            }
        }
        for row in a.chunks_exact_mut(nx) {
            tx.process_dct3(row);
        }
        // DCT-III(DCT-II(x)) = (n/2) x per axis
        let norm = 4.0 / (nx * ny) as f64;
        a.iter_mut().for_each(|v| *v *= norm);
        a
    }

    fn solve_fourier(
        &self,
        b: &[f64],
        fx: &dyn Fft<f64>,
        fy: &dyn Fft<f64>,
        ix: &dyn Fft<f64>,
        iy: &dyn Fft<f64>,
    ) -> Vec<f64> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut a: Vec<Complex<f64>> = b.iter().map(|&v| Complex::new(v, 0.0)).collect();
        for row in a.chunks_exact_mut(nx) {
            fx.process(row);
        }
        let mut col = vec![Complex::new(0.0, 0.0); ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = a[j * nx + i];
            }
            fy.process(&mut col);
            for (j, x) in col.iter_mut().enumerate() {
                let e = self.eig[j * nx + i];
                *x = if e == 0.0 { Complex::new(0.0, 0.0) } else { *x / e };
            }
            iy.process(&mut col);
            for j in 0..ny {
                a[j * nx + i] = col[j];
            }
        }
        for row in a.chunks_exact_mut(nx) {
            ix.process(row);
        }
        let norm = 1.0 / (nx * ny) as f64;
        a.iter().map(|c| c.re * norm).collect()
    }

    fn solve_cg(&self, b: &[f64]) -> Result<Vec<f64>> {
        // solve -D G phi = -b, which is positive semi-definite; mean-zero data
        // keeps CG inside the range
        let g = self.grid;
        let neg_b: Vec<f64> = b.iter().map(|v| -v).collect();
        let inv_diag = vec![1.0 / (4.0 / (g.hx() * g.hx())); b.len()];
        let mut x = vec![0.0; b.len()];
        let apply = |x: &[f64], out: &mut [f64]| {
            let f = ScalarField::new(g, x.to_vec()).expect("finite cg iterate");
            let lap = discrete_divergence(&discrete_gradient(&f));
            for (o, v) in out.iter_mut().zip(lap.values()) {
                *o = -v;
            }
        };
        pcg(apply, Some(&inv_diag), &neg_b, &mut x, self.cg)?;
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_field(g: GridSpec, seed: u64) -> ScalarField {
        use rand::RngExt;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ScalarField::from_fn(g, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn cg_solves_small_spd_system() {
        let a = [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
        let b = [1.0, 2.0, 3.0];
        let mut x = [0.0; 3];
        let rep = pcg(
            |x, y| {
                for i in 0..3 {
                    y[i] = (0..3).map(|j| a[i][j] * x[j]).sum();
                }
            },
            None,
            &b,
            &mut x,
            CgOptions { rel_tol: 1e-14, ..Default::default() },
        )
        .unwrap();
        assert!(rep.iterations <= 3);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i][j] * x[j]).sum::<f64>() - b[i];
            assert!(r.abs() < 1e-12);
        }
    }

    #[test]
    fn cg_keeps_exact_initial_guess() {
        let mut x = [2.0, -1.0];
        let b = [2.0, -1.0];
        let rep = pcg(|x, y| y.copy_from_slice(x), None, &b, &mut x, CgOptions::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert_eq!(x, [2.0, -1.0]);
    }

    #[test]
    fn transform_and_cg_solvers_agree() {
        for bc in [Boundary::DirichletBox, Boundary::Periodic] {
            let g = GridSpec::new(16, 12, 1.0, 0.75, bc).unwrap();
            let rhs = random_field(g, 7);
            let cg = CgOptions { rel_tol: 1e-13, ..Default::default() };
            let a = PoissonSolver::new(g, PoissonMethod::Transform, cg).unwrap().solve(&rhs).unwrap();
            let b = PoissonSolver::new(g, PoissonMethod::ConjugateGradient, cg)
                .unwrap()
                .solve(&rhs)
                .unwrap();
            let diff = a.zip_map(&b, |x, y| x - y).unwrap().max_abs();
            assert!(diff < 1e-9 * a.max_abs(), "{bc:?}: {diff}");
            // residual check against the operator itself
            let mean = rhs.mean();
            let lap = discrete_divergence(&discrete_gradient(&a));
            let res = lap.zip_map(&rhs, |l, r| l - (r - mean)).unwrap().max_abs();
            assert!(res < 1e-9 * rhs.max_abs(), "{bc:?}: residual {res}");
        }
    }
}
