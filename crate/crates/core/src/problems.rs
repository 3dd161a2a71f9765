//! The three benchmark obstacle problems.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{Domain, Point};

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Closed-form solution with derivatives up to second order.
pub trait ExactSolution: Send + Sync {
    fn value(&self, p: Point) -> f64;
    fn grad(&self, p: Point) -> [f64; 2];
    /// `[xx, xy, yy]`
    fn hessian(&self, p: Point) -> [f64; 3];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    /// Clamped: `u = du/dn = 0`.
    Homogeneous,
    /// Boundary values interpolated from the exact solution, with the
    /// normal-derivative data entering through the load functional.
    Interpolated,
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: &'static str,
    pub domain: Domain,
    pub load: ScalarFn,
    pub obstacle: ScalarFn,
    pub boundary: BoundaryMode,
    pub exact: Option<Arc<dyn ExactSolution>>,
    /// Total mass of the continuous contact multiplier, when known.
    pub multiplier_mass: Option<f64>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("boundary", &self.boundary)
            .field("exact", &self.exact.is_some())
            .field("multiplier_mass", &self.multiplier_mass)
            .finish()
    }
}

impl ProblemSpec {
    pub fn by_name(name: &str) -> Option<ProblemSpec> {
        match name {
            "example1" => Some(example1()),
            "example2" => Some(example2()),
            "example3" => Some(example3()),
            _ => None,
        }
    }

    /// Same problem with the obstacle replaced.
    pub fn with_obstacle<F: Fn(Point) -> f64 + Send + Sync + 'static>(mut self, psi: F) -> Self {
        self.obstacle = Arc::new(psi);
        self
    }
}

pub const PROBLEM_NAMES: [&str; 3] = ["example1", "example2", "example3"];

/// Penalty parameter used for degree `k`.
pub fn default_sigma(k: usize) -> f64 {
    if k >= 3 {
        18.0
    } else {
        6.0
    }
}

/// Radial solution of the first benchmark: `1 - r^2` on the contact disc
/// and a biharmonic radial profile outside it.
#[derive(Debug, Clone, Copy)]
pub struct RadialPlate {
    pub r0: f64,
    pub c: [f64; 4],
}

impl RadialPlate {
    pub const R0: f64 = 0.181_344_53;
    pub const C1: f64 = 0.525_040_63;
    pub const C2: f64 = -0.628_609_05;
    pub const C3: f64 = 0.017_266_401;
    pub const C4: f64 = 1.046_746_3;

    pub fn new() -> Self {
        RadialPlate {
            r0: Self::R0,
            c: [Self::C1, Self::C2, Self::C3, Self::C4],
        }
    }

    /// Outer profile `g(r)` and its first two derivatives.
    pub fn outer(&self, r: f64) -> Result<[f64; 3]> {
        if r <= 0.0 {
            return Err(Error::OutsideDomain(r, 0.0));
        }
        let [c1, c2, c3, c4] = self.c;
        let l = r.ln();
        Ok([
            c1 * r * r * l + c2 * r * r + c3 * l + c4,
            c1 * (2.0 * r * l + r) + 2.0 * c2 * r + c3 / r,
            c1 * (2.0 * l + 3.0) + 2.0 * c2 - c3 / (r * r),
        ])
    }

    pub fn inner(&self, r: f64) -> [f64; 3] {
        [1.0 - r * r, -2.0 * r, -2.0]
    }

    fn profile(&self, r: f64) -> [f64; 3] {
        if r <= self.r0 {
            self.inner(r)
        } else {
            self.outer(r).expect("outer branch only for r > r0 > 0")
        }
    }

    /// Contact multiplier mass `8 pi C1`.
    pub fn multiplier_mass(&self) -> f64 {
        8.0 * PI * self.c[0]
    }
}

impl Default for RadialPlate {
    fn default() -> Self {
        Self::new()
    }
}

impl ExactSolution for RadialPlate {
    fn value(&self, p: Point) -> f64 {
        self.profile(p[0].hypot(p[1]))[0]
    }

    fn grad(&self, p: Point) -> [f64; 2] {
        let r = p[0].hypot(p[1]);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let g = self.profile(r);
        [g[1] * p[0] / r, g[1] * p[1] / r]
    }

    fn hessian(&self, p: Point) -> [f64; 3] {
        let r = p[0].hypot(p[1]);
        if r <= self.r0 {
            return [-2.0, 0.0, -2.0];
        }
        let g = self.profile(r);
        let (ex, ey) = (p[0] / r, p[1] / r);
        let radial = g[2];
        let tangential = g[1] / r;
        [
            radial * ex * ex + tangential * (1.0 - ex * ex),
            (radial - tangential) * ex * ey,
            radial * ey * ey + tangential * (1.0 - ey * ey),
        ]
    }
}

/// Unit square, `f = 0`, `psi = 1 - |x|^2`, nonhomogeneous boundary data from
/// the known radial solution.
pub fn example1() -> ProblemSpec {
    let exact = RadialPlate::new();
    ProblemSpec {
        name: "example1",
        domain: Domain::Square,
        load: Arc::new(|_| 0.0),
        obstacle: Arc::new(|p: Point| 1.0 - p[0] * p[0] - p[1] * p[1]),
        boundary: BoundaryMode::Interpolated,
        multiplier_mass: Some(exact.multiplier_mass()),
        exact: Some(Arc::new(exact)),
    }
}

pub fn example2_obstacle(p: Point) -> f64 {
    1.0 - ((p[0] + 0.25).powi(2) / 0.04 + p[1] * p[1] / (0.35 * 0.35))
}

/// L-shaped clamped plate, `f = 0`, elliptic paraboloid obstacle.
pub fn example2() -> ProblemSpec {
    ProblemSpec {
        name: "example2",
        domain: Domain::LShape,
        load: Arc::new(|_| 0.0),
        obstacle: Arc::new(example2_obstacle),
        boundary: BoundaryMode::Homogeneous,
        exact: None,
        multiplier_mass: None,
    }
}

pub fn example3_obstacle(p: Point) -> f64 {
    let (x, y) = (p[0], p[1]);
    -((2.0 * PI * (x + 0.5) * (y + 0.5)).sin() * (4.0 * PI * (x - 0.5) * (y - 0.5)).sin()) - 0.35
}

/// Piecewise load of the third benchmark; undefined on the removed quadrant.
pub fn example3_load(p: Point) -> Result<f64> {
    let (x, y) = (p[0], p[1]);
    if x <= 0.0 && y > 0.0 {
        Ok(1e3 * (0.5 * ((x + 0.25).powi(2) + (y + 0.25).powi(2)).exp()))
    } else if x <= 0.0 {
        Ok(0.0)
    } else if y <= 0.0 {
        Ok(1e3 * (0.5 + ((x - 0.25).powi(2) + (y + 0.25).powi(2)).powf(1.5)))
    } else {
        Err(Error::OutsideDomain(x, y))
    }
}

/// L-shaped clamped plate with an oscillating obstacle and a piecewise load.
pub fn example3() -> ProblemSpec {
    ProblemSpec {
        name: "example3",
        domain: Domain::LShape,
        load: Arc::new(|p| example3_load(p).unwrap_or(f64::NAN)),
        obstacle: Arc::new(example3_obstacle),
        boundary: BoundaryMode::Homogeneous,
        exact: None,
        multiplier_mass: None,
    }
}
