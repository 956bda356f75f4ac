//! The optimal 1D transition profile and its derived constants.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Double-well energy density with its first two derivatives.
pub trait Potential: Send + Sync {
    fn value(&self, c: f64) -> f64;
    fn d1(&self, c: f64) -> f64;
    fn d2(&self, c: f64) -> f64;
}

/// `scale * (1 - c^2)^2 / 8`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartic {
    pub scale: f64,
}

impl Default for Quartic {
    fn default() -> Self {
        Self { scale: 1.0 }
    }
}

impl Potential for Quartic {
    #[inline]
    fn value(&self, c: f64) -> f64 {
        let w = 1.0 - c * c;
        self.scale * 0.125 * w * w
    }

    #[inline]
    fn d1(&self, c: f64) -> f64 {
        self.scale * 0.5 * (c * c * c - c)
    }

    #[inline]
    fn d2(&self, c: f64) -> f64 {
        self.scale * 0.5 * (3.0 * c * c - 1.0)
    }
}

/// Checks the double-well conditions: critical wells at `+-1` with positive
/// curvature, and an even density that is positive strictly between them.
pub fn validate_potential(pot: &dyn Potential) -> Result<()> {
    for w in [-1.0, 1.0] {
        if pot.d1(w).abs() > 1e-12 {
            return Err(Error::InvalidPotential(format!("f'({w}) = {} is not zero", pot.d1(w))));
        }
        if !(pot.d2(w) > 0.0) {
            return Err(Error::InvalidPotential(format!("f''({w}) = {} is not positive", pot.d2(w))));
        }
    }
    for k in 1..200 {
        let c = k as f64 / 200.0;
        let (a, b) = (pot.value(c), pot.value(-c));
        if !(a > 0.0) || (a - b).abs() > 1e-14 * a.max(1.0) {
            return Err(Error::InvalidPotential(format!(
                "f must be even and positive on (-1, 1); f({c}) = {a}, f(-{c}) = {b}"
            )));
        }
    }
    Ok(())
}

/// Decay rate `min(sqrt f''(-1), sqrt f''(1))` of the profile tails.
pub fn decay_alpha(pot: &dyn Potential) -> Result<f64> {
    let (a, b) = (pot.d2(-1.0), pot.d2(1.0));
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidPotential(format!("f''(-1) = {a}, f''(1) = {b} must be positive")));
    }
    Ok(a.sqrt().min(b.sqrt()))
}

/// Closed-form profile of the unit quartic.
pub fn theta0_quartic(rho: f64) -> f64 {
    (0.5 * rho).tanh()
}

/// Sampled profile on a uniform grid over `[-L, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub rho: Vec<f64>,
    pub theta0: Vec<f64>,
    pub dtheta0: Vec<f64>,
    pub ddtheta0: Vec<f64>,
    pub eta: Vec<f64>,
    pub sigma: f64,
    pub alpha: f64,
    half_width: f64,
    step: f64,
}

pub const DEFAULT_HALF_WIDTH: f64 = 20.0;
pub const DEFAULT_SAMPLES: usize = 4001;

/// Integrates the first integral `theta' = sqrt(2 f(theta))` outward from
/// `theta(0) = 0` and mirrors it, so the table is odd by construction.
pub fn solve_profile(pot: &dyn Potential, half_width: f64, n: usize) -> Result<ProfileTable> {
    validate_potential(pot)?;
    if n < 5 || n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("sample count must be odd and >= 5, got {n}")));
    }
    if !(half_width > 0.0) {
        return Err(Error::InvalidArgument(format!("half-width must be positive, got {half_width}")));
    }
    let alpha = decay_alpha(pot)?;
    let m = (n - 1) / 2;
    let h = half_width / m as f64;
    let rhs = |c: f64| (2.0 * pot.value(c.min(1.0))).max(0.0).sqrt();

    let mut right = Vec::with_capacity(m + 1);
    right.push(0.0_f64);
    let sub = 16;
    let dh = h / sub as f64;
    let mut c = 0.0_f64;
    for _ in 0..m {
        for _ in 0..sub {
            let k1 = rhs(c);
            let k2 = rhs(c + 0.5 * dh * k1);
            let k3 = rhs(c + 0.5 * dh * k2);
            let k4 = rhs(c + dh * k3);
            c += dh / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if !(c < 1.0) {
            return Err(Error::InvalidPotential("profile reached the well at finite rho".into()));
        }
        right.push(c);
    }

    let mut rho = Vec::with_capacity(n);
    let mut theta0 = Vec::with_capacity(n);
    for k in 0..n {
        rho.push((k as f64 - m as f64) * h);
        theta0.push(if k >= m { right[k - m] } else { -right[m - k] });
    }
    let dtheta0: Vec<f64> = theta0.iter().map(|&t| rhs(t.abs())).collect();
    let ddtheta0: Vec<f64> = theta0.iter().map(|&t| pot.d1(t)).collect();

    let mut table = ProfileTable {
        rho,
        theta0,
        dtheta0,
        ddtheta0,
        eta: Vec::new(),
        sigma: 0.0,
        alpha,
        half_width,
        step: h,
    };
    table.sigma = surface_tension(&table)?;
    table.eta = eta_of(&table);
    Ok(table)
}

/// Quartic profile with the default table size.
pub fn quartic_profile() -> ProfileTable {
    solve_profile(&Quartic::default(), DEFAULT_HALF_WIDTH, DEFAULT_SAMPLES).expect("quartic profile")
}

/// `int theta0'^2` by composite Simpson plus exponential tail corrections.
pub fn surface_tension(tab: &ProfileTable) -> Result<f64> {
    let g: Vec<f64> = tab.dtheta0.iter().map(|d| d * d).collect();
    let n = g.len();
    let mut s = g[0] + g[n - 1];
    for (k, v) in g.iter().enumerate().take(n - 1).skip(1) {
        s += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    let body = s * tab.step / 3.0;
    let tail = (g[0] + g[n - 1]) / (2.0 * tab.alpha);
    let sigma = body + tail;
    let limit = 1e-10;
    if tail > limit * sigma {
        return Err(Error::ProfileTooShort { tail: tail / sigma, limit });
    }
    Ok(sigma)
}

/// `eta(rho) = -1 + (2 / sigma) int_{-inf}^rho theta0'^2`, by cumulative
/// trapezoid with the endpoint-derivative correction.
pub fn eta_of(tab: &ProfileTable) -> Vec<f64> {
    let h = tab.step;
    let g: Vec<f64> = tab.dtheta0.iter().map(|d| d * d).collect();
    let dg: Vec<f64> = tab.dtheta0.iter().zip(&tab.ddtheta0).map(|(a, b)| 2.0 * a * b).collect();
    let left_tail = g[0] / (2.0 * tab.alpha);
    let mut out = Vec::with_capacity(g.len());
    let mut acc = 0.0;
    out.push(-1.0 + 2.0 * left_tail / tab.sigma);
    for k in 1..g.len() {
        acc += 0.5 * h * (g[k - 1] + g[k]);
        let corrected = acc - h * h / 12.0 * (dg[k] - dg[0]);
        out.push(-1.0 + 2.0 * (left_tail + corrected) / tab.sigma);
    }
    out
}

impl ProfileTable {
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Locates `rho` in the table: segment index and local coordinate.
    fn locate(&self, rho: f64) -> (usize, f64) {
        let x = (rho + self.half_width) / self.step;
        let k = (x.floor() as usize).min(self.rho.len() - 2);
        (k, x - k as f64)
    }

    /// Profile value. Inside the table: cubic Hermite from values and
    /// slopes. Outside: the exponential tail matched to the end sample.
    pub fn theta0(&self, rho: f64) -> f64 {
        let l = self.half_width;
        if rho.abs() >= l {
            let end = *self.theta0.last().unwrap();
            let gap = (1.0 - end) * (-self.alpha * (rho.abs() - l)).exp();
            return rho.signum() * (1.0 - gap);
        }
        let (k, t) = self.locate(rho);
        let h = self.step;
        let (y0, y1) = (self.theta0[k], self.theta0[k + 1]);
        let (m0, m1) = (self.dtheta0[k] * h, self.dtheta0[k + 1] * h);
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1
    }

    /// Profile slope with the same interpolation rules.
    pub fn dtheta0(&self, rho: f64) -> f64 {
        let l = self.half_width;
        if rho.abs() >= l {
            let end = *self.dtheta0.last().unwrap();
            return end * (-self.alpha * (rho.abs() - l)).exp();
        }
        let (k, t) = self.locate(rho);
        let h = self.step;
        let (y0, y1) = (self.dtheta0[k], self.dtheta0[k + 1]);
        let (m0, m1) = (self.ddtheta0[k] * h, self.ddtheta0[k + 1] * h);
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1
    }

    pub fn max_slope(&self) -> f64 {
        self.dtheta0.iter().copied().fold(0.0, f64::max)
    }

    /// Sup of `|-theta'' + f'(theta)|` with `theta''` from a fourth-order
    /// difference of the tabulated values.
    pub fn ode_residual(&self, pot: &dyn Potential) -> f64 {
        let h2 = self.step * self.step;
        let t = &self.theta0;
        (2..t.len() - 2)
            .map(|k| {
                let d2 = (-t[k - 2] + 16.0 * t[k - 1] - 30.0 * t[k] + 16.0 * t[k + 1] - t[k + 2]) / (12.0 * h2);
                (-d2 + pot.d1(t[k])).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("rho,theta0,dtheta0,eta\n");
        for k in 0..self.rho.len() {
            let _ = writeln!(s, "{:?},{:?},{:?},{:?}", self.rho[k], self.theta0[k], self.dtheta0[k], self.eta[k]);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Skewed;

    impl Potential for Skewed {
        fn value(&self, c: f64) -> f64 {
            (1.0 - c * c).powi(2) * (0.5 - 0.1875 * c) * 0.5
        }
        fn d1(&self, _c: f64) -> f64 {
            0.0
        }
        fn d2(&self, c: f64) -> f64 {
            if c < 0.0 {
                4.0
            } else {
                1.0
            }
        }
    }

    #[test]
    fn closed_form_solves_the_ode() {
        let pot = Quartic::default();
        for rho in [-3.0, -1.0, 0.0, 1.0, 3.0] {
            let t = theta0_quartic(rho);
            let d2 = 0.5 * (t * t * t - t);
            assert!((-d2 + pot.d1(t)).abs() < 1e-14);
        }
        assert_eq!(theta0_quartic(0.0), 0.0);
        assert!((1.0 - theta0_quartic(20.0)) <= 5e-9);
    }

    #[test]
    fn quartic_table_matches_tanh() {
        let tab = quartic_profile();
        let err = tab.rho.iter().zip(&tab.theta0).map(|(&r, &t)| (t - theta0_quartic(r)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        assert!(tab.ode_residual(&Quartic::default()) < 1e-6);
        assert!((tab.sigma - 2.0 / 3.0).abs() < 1e-8, "{}", tab.sigma);
        for k in 0..tab.rho.len() {
            assert_eq!(tab.theta0[k], -tab.theta0[tab.rho.len() - 1 - k]);
        }
        assert!(tab.dtheta0.iter().all(|&d| d > 0.0));
    }

    #[test]
    fn scaled_potential() {
        let pot = Quartic { scale: 4.0 };
        let tab = solve_profile(&pot, 20.0, 4001).unwrap();
        assert!((tab.sigma - 4.0 / 3.0).abs() < 1e-6);
        assert_eq!(decay_alpha(&pot).unwrap(), 2.0);
    }

    #[test]
    fn alpha_is_the_smaller_root() {
        assert_eq!(decay_alpha(&Quartic::default()).unwrap(), 1.0);
        assert_eq!(decay_alpha(&Skewed).unwrap(), 1.0);
        assert!(validate_potential(&Skewed).is_err());
    }

    #[test]
    fn eta_endpoints_and_monotonicity() {
        let tab = quartic_profile();
        let m = (tab.rho.len() - 1) / 2;
        assert!(tab.eta[m].abs() < 1e-8, "{}", tab.eta[m]);
        assert!((tab.eta.last().unwrap() - 1.0).abs() < 1e-8);
        assert!(tab.eta.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn short_table_is_rejected() {
        let r = solve_profile(&Quartic::default(), 4.0, 401);
        assert!(matches!(r, Err(Error::ProfileTooShort { .. })));
    }

    #[test]
    fn evaluation_off_table() {
        let tab = quartic_profile();
        for rho in [-25.0, -0.37, 0.0, 1.234, 19.99, 22.0] {
            assert!((tab.theta0(rho) - theta0_quartic(rho)).abs() < 1e-9, "{rho}");
        }
        assert!((tab.dtheta0(0.5) - 0.5 * (1.0 - theta0_quartic(0.5).powi(2))).abs() < 1e-9);
    }
}
