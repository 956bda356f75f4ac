//! Uniform 2D grids, cell-centered scalar fields, MAC-staggered vector fields
//! and the second-order discrete calculus that acts on them.
//!
//! Storage is row-major with `y` as the outer index, so the value of cell
//! `(i, j)` lives at `j * nx + i`. Velocity components live on cell faces:
//! `u` on the `(nx + 1) x ny` vertical faces and `v` on the `nx x (ny + 1)`
//! horizontal faces. Under periodic boundaries the last face in each
//! direction duplicates the first one.

use crate::error::{Error, Result};

/// Smallest cell count per direction accepted by the solvers.
pub const MIN_SOLVER_CELLS: usize = 8;

/// Boundary treatment shared by every field on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// Walls on all four sides: no-slip velocity, Dirichlet data for scalars.
    DirichletBox,
    /// Doubly periodic box.
    Periodic,
}

impl Boundary {
    pub fn code(self) -> u8 {
        match self {
            Boundary::DirichletBox => 0,
            Boundary::Periodic => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Boundary::DirichletBox),
            1 => Some(Boundary::Periodic),
            _ => None,
        }
    }
}

/// Cell counts, physical extents and boundary mode of a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub bc: Boundary,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64, bc: Boundary) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidGrid(format!("empty grid {nx}x{ny}")));
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidGrid(format!("extents must be positive, got {lx} x {ly}")));
        }
        Ok(Self { nx, ny, lx, ly, bc })
    }

    /// Square `n x n` grid on `[0, l]^2`.
    pub fn square(n: usize, l: f64, bc: Boundary) -> Result<Self> {
        Self::new(n, n, l, l, bc)
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn has_square_cells(&self) -> bool {
        (self.hx() - self.hy()).abs() <= 1e-12 * self.hx().max(self.hy())
    }

    /// Mesh size of a square-cell grid.
    pub fn spacing(&self) -> Result<f64> {
        if !self.has_square_cells() {
            return Err(Error::InvalidGrid(format!(
                "non-square cells: hx = {}, hy = {}",
                self.hx(),
                self.hy()
            )));
        }
        Ok(self.hx())
    }

    /// Mesh size, additionally requiring the minimum solver resolution.
    pub fn solver_spacing(&self) -> Result<f64> {
        if self.nx < MIN_SOLVER_CELLS || self.ny < MIN_SOLVER_CELLS {
            return Err(Error::InvalidGrid(format!(
                "solver grids need at least {MIN_SOLVER_CELLS} cells per direction, got {}x{}",
                self.nx, self.ny
            )));
        }
        self.spacing()
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [(i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy()]
    }

    /// Number of distinct vertical faces per row (periodic grids share the
    /// first and last one).
    pub fn unique_u_faces(&self) -> usize {
        match self.bc {
            Boundary::Periodic => self.nx,
            Boundary::DirichletBox => self.nx + 1,
        }
    }

    pub fn unique_v_faces(&self) -> usize {
        match self.bc {
            Boundary::Periodic => self.ny,
            Boundary::DirichletBox => self.ny + 1,
        }
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{what}: {self:?} vs {other:?}")));
        }
        Ok(())
    }

    /// Ghost-aware cell lookup: indices outside the grid wrap under periodic
    /// boundaries and reflect oddly about the wall value `wall` otherwise,
    /// so the face average between a cell and its mirror equals `wall`.
    #[inline]
    pub(crate) fn sample(&self, values: &[f64], i: isize, j: isize, wall: f64) -> f64 {
        let (nx, ny) = (self.nx as isize, self.ny as isize);
        match self.bc {
            Boundary::Periodic => {
                let ii = i.rem_euclid(nx) as usize;
                let jj = j.rem_euclid(ny) as usize;
                values[jj * self.nx + ii]
            }
            Boundary::DirichletBox => {
                let (mut ii, mut flip_x) = (i, false);
                if ii < 0 {
                    ii = -ii - 1;
                    flip_x = true;
                } else if ii >= nx {
                    ii = 2 * nx - ii - 1;
                    flip_x = true;
                }
                let (mut jj, mut flip_y) = (j, false);
                if jj < 0 {
                    jj = -jj - 1;
                    flip_y = true;
                } else if jj >= ny {
                    jj = 2 * ny - jj - 1;
                    flip_y = true;
                }
                let ii = ii.clamp(0, nx - 1) as usize;
                let jj = jj.clamp(0, ny - 1) as usize;
                let mut value = values[jj * self.nx + ii];
                if flip_x {
                    value = 2.0 * wall - value;
                }
                if flip_y {
                    value = 2.0 * wall - value;
                }
                value
            }
        }
    }

    /// Copy of cell values with `pad` ghost rings filled as in
    /// [`sample`](Self::sample); row width is `nx + 2 pad`.
    pub(crate) fn padded(&self, values: &[f64], pad: usize, wall: f64) -> Vec<f64> {
        let p = pad as isize;
        let mut out = Vec::with_capacity((self.nx + 2 * pad) * (self.ny + 2 * pad));
        for j in -p..self.ny as isize + p {
            for i in -p..self.nx as isize + p {
                out.push(self.sample(values, i, j, wall));
            }
        }
        out
    }
}

/// Real samples at cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.cell_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scalar field"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.cell_count()],
        }
    }

    /// Samples `f(x, y)` at every cell center.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.cell_count());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let [x, y] = grid.cell_center(i, j);
                values.push(f(x, y));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.grid.index(i, j);
        self.values[k] = value;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid, "zip_map")?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Midpoint-rule integral over the domain.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// Discrete `L^2(Omega)` inner product.
    pub fn dot(&self, other: &ScalarField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_area()
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        (s * self.grid.cell_area()).powf(1.0 / p)
    }

    /// Value at `(i, j)` with ghost cells supplied by the boundary rule.
    #[inline]
    pub fn sample(&self, i: isize, j: isize, wall: f64) -> f64 {
        self.grid.sample(&self.values, i, j, wall)
    }

    /// Bilinear interpolation between cell centers at a physical point,
    /// clamped to the outermost centers.
    pub fn interpolate(&self, x: f64, y: f64) -> f64 {
        let g = &self.grid;
        let fx = (x / g.hx() - 0.5).clamp(0.0, (g.nx - 1) as f64);
        let fy = (y / g.hy() - 0.5).clamp(0.0, (g.ny - 1) as f64);
        let i0 = (fx.floor() as usize).min(g.nx.saturating_sub(2));
        let j0 = (fy.floor() as usize).min(g.ny.saturating_sub(2));
        let i1 = (i0 + 1).min(g.nx - 1);
        let j1 = (j0 + 1).min(g.ny - 1);
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let a = self.at(i0, j0) * (1.0 - tx) + self.at(i1, j0) * tx;
        let b = self.at(i0, j1) * (1.0 - tx) + self.at(i1, j1) * tx;
        a * (1.0 - ty) + b * ty
    }
}

/// Velocity components on a MAC grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredVectorField {
    grid: GridSpec,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl StaggeredVectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            u: vec![0.0; (grid.nx + 1) * grid.ny],
            v: vec![0.0; grid.nx * (grid.ny + 1)],
        }
    }

    pub fn from_parts(grid: GridSpec, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != (grid.nx + 1) * grid.ny || v.len() != grid.nx * (grid.ny + 1) {
            return Err(Error::InvalidGrid(format!(
                "face arrays have lengths {} and {}, expected {} and {}",
                u.len(),
                v.len(),
                (grid.nx + 1) * grid.ny,
                grid.nx * (grid.ny + 1)
            )));
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("staggered field"));
        }
        Ok(Self { grid, u, v })
    }

    /// Samples each component of `f(x, y)` at its own faces. Boundary faces
    /// are sampled as-is; call [`Self::enforce_boundary`] to impose the
    /// boundary mode.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> [f64; 2]) -> Self {
        let (hx, hy) = (grid.hx(), grid.hy());
        let mut out = Self::zeros(grid);
        for j in 0..grid.ny {
            for i in 0..=grid.nx {
                out.u[j * (grid.nx + 1) + i] = f(i as f64 * hx, (j as f64 + 0.5) * hy)[0];
            }
        }
        for j in 0..=grid.ny {
            for i in 0..grid.nx {
                out.v[j * grid.nx + i] = f((i as f64 + 0.5) * hx, j as f64 * hy)[1];
            }
        }
        out
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn u_mut(&mut self) -> &mut [f64] {
        &mut self.u
    }

    pub fn v_mut(&mut self) -> &mut [f64] {
        &mut self.v
    }

    #[inline]
    pub fn u_at(&self, i: usize, j: usize) -> f64 {
        self.u[j * (self.grid.nx + 1) + i]
    }

    #[inline]
    pub fn v_at(&self, i: usize, j: usize) -> f64 {
        self.v[j * self.grid.nx + i]
    }

    /// Zeroes wall-normal components on a box, or copies the first face
    /// onto its periodic duplicate.
    pub fn enforce_boundary(&mut self) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        match self.grid.bc {
            Boundary::DirichletBox => {
                for j in 0..ny {
                    self.u[j * (nx + 1)] = 0.0;
                    self.u[j * (nx + 1) + nx] = 0.0;
                }
                for i in 0..nx {
                    self.v[i] = 0.0;
                    self.v[ny * nx + i] = 0.0;
                }
            }
            Boundary::Periodic => {
                for j in 0..ny {
                    self.u[j * (nx + 1) + nx] = self.u[j * (nx + 1)];
                }
                for i in 0..nx {
                    self.v[ny * nx + i] = self.v[i];
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().chain(&self.v).fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Discrete `L^2` inner product over distinct faces.
    pub fn dot(&self, other: &StaggeredVectorField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let g = &self.grid;
        let mut s = 0.0;
        for j in 0..g.ny {
            for i in 0..g.unique_u_faces() {
                let k = j * (g.nx + 1) + i;
                s += self.u[k] * other.u[k];
            }
        }
        for j in 0..g.unique_v_faces() {
            for i in 0..g.nx {
                let k = j * g.nx + i;
                s += self.v[k] * other.v[k];
            }
        }
        s * g.cell_area()
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &StaggeredVectorField) {
        for (a, b) in self.u.iter_mut().zip(&other.u) {
            *a += alpha * b;
        }
        for (a, b) in self.v.iter_mut().zip(&other.v) {
            *a += alpha * b;
        }
    }

    pub fn sub(&self, other: &StaggeredVectorField) -> Result<StaggeredVectorField> {
        self.grid.ensure_same(&other.grid, "vector difference")?;
        let mut out = self.clone();
        out.axpy(-1.0, other);
        Ok(out)
    }

    /// Component values averaged to cell centers.
    pub fn cell_centered(&self) -> (ScalarField, ScalarField) {
        let g = self.grid;
        let mut uc = ScalarField::zeros(g);
        let mut vc = ScalarField::zeros(g);
        for j in 0..g.ny {
            for i in 0..g.nx {
                uc.set(i, j, 0.5 * (self.u_at(i, j) + self.u_at(i + 1, j)));
                vc.set(i, j, 0.5 * (self.v_at(i, j) + self.v_at(i, j + 1)));
            }
        }
        (uc, vc)
    }
}

/// Five-point Laplacian. Under `DirichletBox`, ghost cells carry the odd
/// reflection about `wall`, so the wall face sees exactly `wall`.
pub fn discrete_laplacian(f: &ScalarField, wall: f64) -> Result<ScalarField> {
    let g = *f.grid();
    let h = g.spacing()?;
    let inv_h2 = 1.0 / (h * h);
    let mut out = ScalarField::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (ii, jj) = (i as isize, j as isize);
            let c = f.at(i, j);
            let s = f.sample(ii - 1, jj, wall)
                + f.sample(ii + 1, jj, wall)
                + f.sample(ii, jj - 1, wall)
                + f.sample(ii, jj + 1, wall);
            out.set(i, j, (s - 4.0 * c) * inv_h2);
        }
    }
    Ok(out)
}

/// Cell-centered divergence of a face field.
pub fn discrete_divergence(w: &StaggeredVectorField) -> ScalarField {
    let g = *w.grid();
    let (hx, hy) = (g.hx(), g.hy());
    let mut out = ScalarField::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let d = (w.u_at(i + 1, j) - w.u_at(i, j)) / hx + (w.v_at(i, j + 1) - w.v_at(i, j)) / hy;
            out.set(i, j, d);
        }
    }
    out
}

/// Face-centered gradient. Wall faces of a box carry zero (homogeneous
/// Neumann), which makes this the negative adjoint of
/// [`discrete_divergence`] on fields with vanishing wall flux.
pub fn discrete_gradient(p: &ScalarField) -> StaggeredVectorField {
    let g = *p.grid();
    let (hx, hy) = (g.hx(), g.hy());
    let (nx, ny) = (g.nx, g.ny);
    let mut out = StaggeredVectorField::zeros(g);
    for j in 0..ny {
        for i in 1..nx {
            out.u[j * (nx + 1) + i] = (p.at(i, j) - p.at(i - 1, j)) / hx;
        }
        if g.bc == Boundary::Periodic {
            let wrap = (p.at(0, j) - p.at(nx - 1, j)) / hx;
            out.u[j * (nx + 1)] = wrap;
            out.u[j * (nx + 1) + nx] = wrap;
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            out.v[j * nx + i] = (p.at(i, j) - p.at(i, j - 1)) / hy;
        }
    }
    if g.bc == Boundary::Periodic {
        for i in 0..nx {
            let wrap = (p.at(i, 0) - p.at(i, ny - 1)) / hy;
            out.v[i] = wrap;
            out.v[ny * nx + i] = wrap;
        }
    }
    out
}

/// `int |grad f|^2` from face differences. Under `DirichletBox` the wall
/// faces use the ghost value implied by `wall`, matching
/// [`discrete_laplacian`] (discrete Green identity).
pub fn gradient_energy(f: &ScalarField, wall: f64) -> f64 {
    let g = *f.grid();
    let mut s = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = f.at(i, j);
            if i + 1 < g.nx {
                let d = f.at(i + 1, j) - c;
                s += d * d;
            }
            if j + 1 < g.ny {
                let d = f.at(i, j + 1) - c;
                s += d * d;
            }
        }
    }
    match g.bc {
        Boundary::Periodic => {
            for j in 0..g.ny {
                let d = f.at(0, j) - f.at(g.nx - 1, j);
                s += d * d;
            }
            for i in 0..g.nx {
                let d = f.at(i, 0) - f.at(i, g.ny - 1);
                s += d * d;
            }
        }
        Boundary::DirichletBox => {
            // half-cell gradient 2(c - wall)/h over half a cell area
            for j in 0..g.ny {
                for i in [0, g.nx - 1] {
                    let d = f.at(i, j) - wall;
                    s += 2.0 * d * d;
                }
                if g.nx == 1 {
                    let d = f.at(0, j) - wall;
                    s -= 2.0 * d * d;
                    s += 4.0 * d * d;
                    s -= 2.0 * d * d;
                }
            }
            for i in 0..g.nx {
                for j in [0, g.ny - 1] {
                    let d = f.at(i, j) - wall;
                    s += 2.0 * d * d;
                }
            }
        }
    }
    // squared differences over h^2, times the face area h^2
    s * g.cell_area() / (g.hx() * g.hy())
}

/// Index helper for one velocity component viewed as nodes along its
/// normal axis times cells along the tangential axis.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FaceComponent {
    pub grid: GridSpec,
    /// `true` for the `u` component (normal axis = x).
    pub is_u: bool,
}

impl FaceComponent {
    pub fn u(grid: GridSpec) -> Self {
        Self { grid, is_u: true }
    }

    pub fn v(grid: GridSpec) -> Self {
        Self { grid, is_u: false }
    }

    /// Nodes along the normal axis including both ends.
    pub fn normal_nodes(&self) -> usize {
        if self.is_u {
            self.grid.nx + 1
        } else {
            self.grid.ny + 1
        }
    }

    pub fn tangential_cells(&self) -> usize {
        if self.is_u {
            self.grid.ny
        } else {
            self.grid.nx
        }
    }

    #[inline]
    pub fn index(&self, n: usize, t: usize) -> usize {
        if self.is_u {
            t * (self.grid.nx + 1) + n
        } else {
            n * self.grid.nx + t
        }
    }

    /// Range of normal-axis nodes that are unknowns.
    pub fn unknown_nodes(&self) -> std::ops::Range<usize> {
        match self.grid.bc {
            Boundary::DirichletBox => 1..self.normal_nodes() - 1,
            Boundary::Periodic => 0..self.normal_nodes() - 1,
        }
    }

    pub fn unknown_count(&self) -> usize {
        self.unknown_nodes().len() * self.tangential_cells()
    }

    pub fn pack(&self, full: &[f64], packed: &mut [f64]) {
        let mut k = 0;
        for t in 0..self.tangential_cells() {
            for n in self.unknown_nodes() {
                packed[k] = full[self.index(n, t)];
                k += 1;
            }
        }
    }

    /// Writes unknowns back; fixed wall nodes become zero and periodic
    /// duplicates are synchronized.
    pub fn unpack(&self, packed: &[f64], full: &mut [f64]) {
        let nn = self.normal_nodes();
        let mut k = 0;
        for t in 0..self.tangential_cells() {
            for n in self.unknown_nodes() {
                full[self.index(n, t)] = packed[k];
                k += 1;
            }
            match self.grid.bc {
                Boundary::DirichletBox => {
                    full[self.index(0, t)] = 0.0;
                    full[self.index(nn - 1, t)] = 0.0;
                }
                Boundary::Periodic => {
                    full[self.index(nn - 1, t)] = full[self.index(0, t)];
                }
            }
        }
    }

    /// Node value with boundary handling: wall nodes are read as stored,
    /// periodic indices wrap, tangential ghosts reflect oddly (no-slip).
    #[inline]
    pub fn sample(&self, full: &[f64], n: isize, t: isize) -> f64 {
        let nn = self.normal_nodes() as isize;
        let nt = self.tangential_cells() as isize;
        match self.grid.bc {
            Boundary::Periodic => {
                let n = n.rem_euclid(nn - 1) as usize;
                let t = t.rem_euclid(nt) as usize;
                full[self.index(n, t)]
            }
            Boundary::DirichletBox => {
                let n = n.clamp(0, nn - 1) as usize;
                if t < 0 {
                    -full[self.index(n, (-t - 1) as usize)]
                } else if t >= nt {
                    -full[self.index(n, (2 * nt - t - 1) as usize)]
                } else {
                    full[self.index(n, t as usize)]
                }
            }
        }
    }

    /// Copy with one ghost layer on each side, laid out as `(t + 1) * (nn + 2)
    /// + n + 1`, filled as in [`sample`](Self::sample).
    pub fn padded(&self, full: &[f64]) -> Vec<f64> {
        let (nn, nt) = (self.normal_nodes() as isize, self.tangential_cells() as isize);
        let mut out = Vec::with_capacity(((nn + 2) * (nt + 2)) as usize);
        for t in -1..=nt {
            for n in -1..=nn {
                out.push(self.sample(full, n, t));
            }
        }
        out
    }
}

/// Componentwise velocity Laplacian with no-slip walls (zero on wall faces).
pub fn vector_laplacian(w: &StaggeredVectorField) -> Result<StaggeredVectorField> {
    let g = *w.grid();
    let h = g.spacing()?;
    let inv_h2 = 1.0 / (h * h);
    let mut out = StaggeredVectorField::zeros(g);
    for comp in [FaceComponent::u(g), FaceComponent::v(g)] {
        let (src, dst) = if comp.is_u {
            (&w.u, &mut out.u)
        } else {
            (&w.v, &mut out.v)
        };
        let p = comp.padded(src);
        let width = comp.normal_nodes() + 2;
        for t in 0..comp.tangential_cells() {
            for n in comp.unknown_nodes() {
                let k = (t + 1) * width + n + 1;
                dst[comp.index(n, t)] = (p[k - 1] + p[k + 1] + p[k - width] + p[k + width] - 4.0 * p[k]) * inv_h2;
            }
        }
    }
    out.enforce_boundary();
    Ok(out)
}

/// `int |grad w|^2`, computed as `-<w, lap w>` (equal to the sum of squared
/// face differences for fields that satisfy the boundary conditions).
pub fn velocity_gradient_energy(w: &StaggeredVectorField) -> Result<f64> {
    let lap = vector_laplacian(w)?;
    Ok(-w.dot(&lap))
}
