//! Reference problems with closed-form solutions.
//!
//! Both problems are built from the compactly supported bump
//! `mu(xi, s, z) = 1{|z - xi| < s} sin(pi (z - xi - s) / (2 s))^3`, which is C^2.
//!
//! The 1D solution on (0, 1) with homogeneous Dirichlet ends and initial data
//! `u0 = m`, `v0 = -m'` (a right-moving pulse) is `F(x - t) - F(-x - t)`,
//! where `F` is the 2-periodic function equal to `m` on [0, 1) and zero on
//! [-1, 0). The second term is the mirror image that enters through `x = 0`
//! and cancels the pulse at both walls.

use std::f64::consts::PI;

use crate::Point;

// Points within rounding of the support ends count as outside, so the ends
// evaluate to exactly zero.
fn outside(xi: f64, s: f64, z: f64) -> bool {
    (z - xi).abs() >= s * (1.0 - 1e-12)
}

pub fn mu(xi: f64, s: f64, z: f64) -> f64 {
    if outside(xi, s, z) {
        return 0.0;
    }
    let th = PI * (z - xi - s) / (2.0 * s);
    th.sin().powi(3)
}

pub fn mu_prime(xi: f64, s: f64, z: f64) -> f64 {
    if outside(xi, s, z) {
        return 0.0;
    }
    let a = PI / (2.0 * s);
    let th = a * (z - xi - s);
    3.0 * a * th.sin().powi(2) * th.cos()
}

pub fn mu_second(xi: f64, s: f64, z: f64) -> f64 {
    if outside(xi, s, z) {
        return 0.0;
    }
    let a = PI / (2.0 * s);
    let th = a * (z - xi - s);
    let (sn, cs) = th.sin_cos();
    3.0 * a * a * sn * (2.0 * cs * cs - sn * sn)
}

/// Signed sum of bumps `sum_k sign_k mu(xi_k, s_k, .)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpProfile {
    pub terms: Vec<(f64, f64, f64)>,
}

impl BumpProfile {
    pub fn value(&self, z: f64) -> f64 {
        self.terms.iter().map(|&(c, xi, s)| c * mu(xi, s, z)).sum()
    }
    pub fn d1(&self, z: f64) -> f64 {
        self.terms.iter().map(|&(c, xi, s)| c * mu_prime(xi, s, z)).sum()
    }
    pub fn d2(&self, z: f64) -> f64 {
        self.terms.iter().map(|&(c, xi, s)| c * mu_second(xi, s, z)).sum()
    }
}

/// Right-moving pulse on (0, 1) reflected at homogeneous Dirichlet walls.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectedPulse {
    pub profile: BumpProfile,
}

fn wrap(z: f64) -> f64 {
    z - 2.0 * ((z + 1.0) / 2.0).floor()
}

impl ReflectedPulse {
    fn f(&self, z: f64) -> f64 {
        let w = wrap(z);
        if w >= 0.0 {
            self.profile.value(w)
        } else {
            0.0
        }
    }

    fn df(&self, z: f64) -> f64 {
        let w = wrap(z);
        if w >= 0.0 {
            self.profile.d1(w)
        } else {
            0.0
        }
    }

    pub fn u(&self, x: f64, t: f64) -> f64 {
        self.f(x - t) - self.f(-x - t)
    }

    pub fn u_x(&self, x: f64, t: f64) -> f64 {
        self.df(x - t) + self.df(-x - t)
    }

    pub fn u_t(&self, x: f64, t: f64) -> f64 {
        -self.df(x - t) + self.df(-x - t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemKind {
    /// Difference of two bumps travelling in (0, 1), no forcing.
    Pulse1d(ReflectedPulse),
    /// `u = w(x, t) m(y) + w(y, t) m(x)` on the unit square with `w` the 1D
    /// reflected pulse of the single bump `m`; forcing from the residual.
    Manufactured2d { pulse: ReflectedPulse, bump: BumpProfile },
}

/// Wave problem on the unit interval or square with homogeneous Dirichlet
/// boundary, constant speed and known exact solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub dim: usize,
    pub kappa: f64,
    pub final_time: f64,
    pub kind: ProblemKind,
}

impl ProblemSpec {
    /// Exact displacement.
    pub fn u(&self, x: Point, t: f64) -> f64 {
        match &self.kind {
            ProblemKind::Pulse1d(w) => w.u(x[0], t),
            ProblemKind::Manufactured2d { pulse, bump } => {
                pulse.u(x[0], t) * bump.value(x[1]) + pulse.u(x[1], t) * bump.value(x[0])
            }
        }
    }

    /// Exact velocity `du/dt`.
    pub fn p(&self, x: Point, t: f64) -> f64 {
        match &self.kind {
            ProblemKind::Pulse1d(w) => w.u_t(x[0], t),
            ProblemKind::Manufactured2d { pulse, bump } => {
                pulse.u_t(x[0], t) * bump.value(x[1]) + pulse.u_t(x[1], t) * bump.value(x[0])
            }
        }
    }

    pub fn grad_u(&self, x: Point, t: f64) -> Point {
        match &self.kind {
            ProblemKind::Pulse1d(w) => [w.u_x(x[0], t), 0.0],
            ProblemKind::Manufactured2d { pulse, bump } => [
                pulse.u_x(x[0], t) * bump.value(x[1]) + pulse.u(x[1], t) * bump.d1(x[0]),
                pulse.u(x[0], t) * bump.d1(x[1]) + pulse.u_x(x[1], t) * bump.value(x[0]),
            ],
        }
    }

    /// Right-hand side `f = u_tt - kappa^2 Laplace u`.
    pub fn forcing(&self, x: Point, t: f64) -> f64 {
        match &self.kind {
            ProblemKind::Pulse1d(_) => 0.0,
            // the pulse solves the 1D wave equation, so only the cross terms survive
            ProblemKind::Manufactured2d { pulse, bump } => {
                -(pulse.u(x[0], t) * bump.d2(x[1]) + pulse.u(x[1], t) * bump.d2(x[0]))
            }
        }
    }

    pub fn has_forcing(&self) -> bool {
        matches!(self.kind, ProblemKind::Manufactured2d { .. })
    }

    pub fn u0(&self, x: Point) -> f64 {
        self.u(x, 0.0)
    }

    pub fn v0(&self, x: Point) -> f64 {
        self.p(x, 0.0)
    }
}

/// Two opposite bumps at 0.55 and 0.45 with half-width 0.2, speed 1, T = 5.
pub fn problem_1d() -> ProblemSpec {
    ProblemSpec {
        dim: 1,
        kappa: 1.0,
        final_time: 5.0,
        kind: ProblemKind::Pulse1d(ReflectedPulse {
            profile: BumpProfile {
                terms: vec![(1.0, 0.55, 0.2), (-1.0, 0.45, 0.2)],
            },
        }),
    }
}

/// Manufactured solution on the unit square built from the bump at 0.5 with
/// half-width 0.2.
pub fn problem_2d() -> ProblemSpec {
    let bump = BumpProfile {
        terms: vec![(1.0, 0.5, 0.2)],
    };
    ProblemSpec {
        dim: 2,
        kappa: 1.0,
        final_time: 0.5,
        kind: ProblemKind::Manufactured2d {
            pulse: ReflectedPulse { profile: bump.clone() },
            bump,
        },
    }
}
