//! Time integrators for the semi-discrete system `q' = p`, `p' = -L_h q + f_h`.
//!
//! * [`leapfrog_step`]: explicit, stable iff `tau^2 ||L_h|| <= 4`.
//! * [`CrankNicolson`]: implicit trapezoidal rule, energy preserving.
//! * [`splitting`]: the overlapping domain-splitting step.
//!
//! Forcing enters every scheme through `fbar = (f_h(t_{n-1}) + f_h(t_n)) / 2`
//! with `f_h = I_h f`.

pub mod splitting;

use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::fem::{apply_lh, energy_norm, operator_norm_estimate, DiscreteOperators, State};
use crate::linalg::{cg_solve, CgConfig, SparseMatrix};
use crate::mesh::SimplicialMesh;
use crate::Point;

pub use splitting::{
    ds_step, predict_interface_values, prepare_subdomain_system, subdomain_cn_step, DsSetup, PredictionMode,
    SubdomainSystem,
};

pub type ForcingFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;

/// Nodal sampler of a forcing term with a small cache of recent time levels.
pub struct NodalForcing {
    nodes: Vec<Point>,
    mask: Vec<bool>,
    f: ForcingFn,
    cache: Mutex<Vec<(u64, Arc<Vec<f64>>)>>,
}

impl NodalForcing {
    pub fn new(mesh: &SimplicialMesh, f: ForcingFn) -> Self {
        NodalForcing {
            nodes: mesh.nodes().to_vec(),
            mask: mesh.boundary_flags().to_vec(),
            f,
            cache: Mutex::new(Vec::new()),
        }
    }

    /// `f_h(t)` at node `j` (zero on the boundary).
    #[inline]
    pub fn value_at(&self, j: usize, t: f64) -> f64 {
        if self.mask[j] {
            0.0
        } else {
            (self.f)(self.nodes[j], t)
        }
    }

    /// `I_h f(t)`, reusing one of the last few evaluated time levels.
    pub fn sample(&self, t: f64) -> Arc<Vec<f64>> {
        let key = t.to_bits();
        if let Some((_, v)) = self.cache.lock().unwrap().iter().find(|(k, _)| *k == key) {
            return Arc::clone(v);
        }
        let v: Arc<Vec<f64>> = Arc::new((0..self.nodes.len()).map(|j| self.value_at(j, t)).collect());
        let mut cache = self.cache.lock().unwrap();
        if cache.len() >= 3 {
            cache.remove(0);
        }
        cache.push((key, Arc::clone(&v)));
        v
    }
}

/// Step size, solver settings and forcing shared by all steppers.
pub struct StepContext {
    pub tau: f64,
    pub cg: CgConfig,
    pub forcing: Option<NodalForcing>,
}

impl StepContext {
    pub fn new(tau: f64) -> Self {
        StepContext {
            tau,
            cg: CgConfig::default(),
            forcing: None,
        }
    }

    pub fn with_forcing(mut self, mesh: &SimplicialMesh, f: ForcingFn) -> Self {
        self.forcing = Some(NodalForcing::new(mesh, f));
        self
    }

    pub fn with_cg(mut self, cg: CgConfig) -> Self {
        self.cg = cg;
        self
    }

    /// End time of the step that starts at `t_prev`.
    #[inline]
    pub fn next_time(&self, t_prev: f64) -> f64 {
        t_prev + self.tau
    }

    /// `fbar` for the step starting at `t_prev`, or `None` without forcing.
    pub fn fbar(&self, t_prev: f64) -> Option<Vec<f64>> {
        let f = self.forcing.as_ref()?;
        let a = f.sample(t_prev);
        let b = f.sample(self.next_time(t_prev));
        Some(a.iter().zip(b.iter()).map(|(x, y)| 0.5 * (x + y)).collect())
    }

    /// `fbar` at a single node, computed exactly as in [`StepContext::fbar`].
    #[inline]
    pub fn fbar_at(&self, j: usize, t_prev: f64) -> f64 {
        match &self.forcing {
            None => 0.0,
            Some(f) => 0.5 * (f.value_at(j, t_prev) + f.value_at(j, self.next_time(t_prev))),
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidInput(format!(
                "step size must be positive, got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

fn check_state(ops: &DiscreteOperators, state: &State) -> Result<()> {
    if state.q.len() != ops.n_nodes() || state.p.len() != ops.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: ops.n_nodes(),
            got: state.q.len().min(state.p.len()),
        });
    }
    Ok(())
}

/// Leapfrog update of one free node `j`. The half step `q + (tau/2) p` of the
/// neighbours is formed on the fly so that a local evaluation reproduces the
/// global sweep bit for bit.
#[inline]
pub(crate) fn leapfrog_node(ops: &DiscreteOperators, tau: f64, state: &State, fbar_j: f64, j: usize) -> (f64, f64) {
    let half = 0.5 * tau;
    let (cols, vals) = ops.stiffness.row(j);
    let mut kq = 0.0;
    for (&k, &v) in cols.iter().zip(vals) {
        let qh = if ops.dirichlet_mask[k] {
            0.0
        } else {
            state.q[k] + half * state.p[k]
        };
        kq += v * qh;
    }
    let lq = kq / ops.lumped_mass[j];
    let q_half = state.q[j] + half * state.p[j];
    let p_new = state.p[j] - tau * lq + tau * fbar_j;
    (q_half + half * p_new, p_new)
}

/// One explicit leapfrog step from `t_{n-1}` to `t_n`.
pub fn leapfrog_step(ops: &DiscreteOperators, ctx: &StepContext, state: &State) -> Result<State> {
    ctx.check()?;
    check_state(ops, state)?;
    let n = ops.n_nodes();
    let mut out = State::zeros(n, ctx.next_time(state.t));
    for j in 0..n {
        if ops.dirichlet_mask[j] {
            continue;
        }
        let (q, p) = leapfrog_node(ops, ctx.tau, state, ctx.fbar_at(j, state.t), j);
        out.q[j] = q;
        out.p[j] = p;
    }
    Ok(out)
}

/// `M + (tau^2/4) K` with identity rows and columns on masked nodes.
pub(crate) fn masked_cn_matrix(
    mass: &[f64],
    stiffness: &SparseMatrix,
    mask: &[bool],
    tau: f64,
) -> Result<SparseMatrix> {
    let c = 0.25 * tau * tau;
    let n = mass.len();
    let mut trip = Vec::with_capacity(stiffness.nnz());
    for i in 0..n {
        if mask[i] {
            trip.push((i, i, 1.0));
            continue;
        }
        let (cols, vals) = stiffness.row(i);
        let mut diag_seen = false;
        for (&j, &v) in cols.iter().zip(vals) {
            if mask[j] {
                continue;
            }
            if j == i {
                trip.push((i, i, mass[i] + c * v));
                diag_seen = true;
            } else {
                trip.push((i, j, c * v));
            }
        }
        if !diag_seen {
            trip.push((i, i, mass[i]));
        }
    }
    SparseMatrix::from_triplets(n, &trip)
}

/// Right-hand side of the increment form of the Crank–Nicolson step at free
/// node `i`: `tau M p - (tau^2/2) K q + (tau^2/2) M fbar`.
#[inline]
pub(crate) fn cn_increment_rhs(ops: &DiscreteOperators, tau: f64, q: &[f64], p: &[f64], fbar_i: f64, i: usize) -> f64 {
    let m = ops.lumped_mass[i];
    let kq = ops.stiffness.row_dot(i, q);
    tau * m * p[i] - 0.5 * tau * tau * kq + 0.5 * tau * tau * m * fbar_i
}

/// Global Crank–Nicolson stepper with its system matrix built once.
///
/// The step solves for the increment `d = q^n - q^{n-1}` from
/// `(M + tau^2/4 K) d = tau M p - tau^2/2 K q + tau^2/2 M fbar`, which is the
/// reformulated scheme shifted by `q^{n-1}`, and recovers
/// `p^n = (2/tau) d - p^{n-1}` from the first scheme equation.
pub struct CrankNicolson {
    pub tau: f64,
    pub matrix: SparseMatrix,
}

impl CrankNicolson {
    pub fn new(ops: &DiscreteOperators, tau: f64) -> Result<Self> {
        Ok(CrankNicolson {
            tau,
            matrix: masked_cn_matrix(&ops.lumped_mass, &ops.stiffness, &ops.dirichlet_mask, tau)?,
        })
    }

    pub fn step(&self, ops: &DiscreteOperators, ctx: &StepContext, state: &State) -> Result<State> {
        ctx.check()?;
        check_state(ops, state)?;
        if ctx.tau != self.tau {
            return Err(Error::InvalidInput(format!(
                "system built for tau {} used with {}",
                self.tau, ctx.tau
            )));
        }
        let tau = self.tau;
        let n = ops.n_nodes();
        let fbar = ctx.fbar(state.t);
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                if ops.dirichlet_mask[i] {
                    0.0
                } else {
                    let f = fbar.as_ref().map_or(0.0, |f| f[i]);
                    cn_increment_rhs(ops, tau, &state.q, &state.p, f, i)
                }
            })
            .collect();
        let d = cg_solve(&self.matrix, &rhs, ctx.cg)?;
        let mut out = State::zeros(n, ctx.next_time(state.t));
        for i in 0..n {
            if !ops.dirichlet_mask[i] {
                out.q[i] = state.q[i] + d[i];
                out.p[i] = 2.0 / tau * d[i] - state.p[i];
            }
        }
        Ok(out)
    }
}

/// One Crank–Nicolson step; builds the system matrix on every call.
pub fn cn_step(ops: &DiscreteOperators, ctx: &StepContext, state: &State) -> Result<State> {
    CrankNicolson::new(ops, ctx.tau)?.step(ops, ctx, state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Scheme {
    #[serde(rename = "LF")]
    Leapfrog,
    #[serde(rename = "CN")]
    CrankNicolson,
    #[serde(rename = "DS")]
    DomainSplitting,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Leapfrog => "LF",
            Scheme::CrankNicolson => "CN",
            Scheme::DomainSplitting => "DS",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LF" | "LEAPFROG" => Ok(Scheme::Leapfrog),
            "CN" | "CRANK-NICOLSON" | "CRANKNICOLSON" => Ok(Scheme::CrankNicolson),
            "DS" | "SPLITTING" | "DOMAIN-SPLITTING" => Ok(Scheme::DomainSplitting),
            _ => Err(Error::Config(format!("unknown scheme '{s}'"))),
        }
    }
}

/// The one-step maps written as `R_- x^n = R_+ x^{n-1} + tau (0, fbar)`:
///
/// ```text
/// CN: R_- = [I, -tau/2; tau/2 L, I],            R_+ = [I, tau/2; -tau/2 L, I]
/// LF: R_- = [I, -tau/2; tau/2 L, I - tau^2/4 L], R_+ = [I, tau/2; -tau/2 L, I - tau^2/4 L]
/// ```
///
/// Evaluated blockwise (Schur complement for CN, forward substitution for LF)
/// independently of [`cn_step`] and [`leapfrog_step`]; used to cross-check them.
pub fn apply_one_step_operator(
    ops: &DiscreteOperators,
    ctx: &StepContext,
    state: &State,
    which: Scheme,
) -> Result<State> {
    ctx.check()?;
    check_state(ops, state)?;
    let tau = ctx.tau;
    let n = ops.n_nodes();
    let fbar = ctx.fbar(state.t).unwrap_or_else(|| vec![0.0; n]);
    let lq = apply_lh(ops, &state.q)?;
    let mut q = state.q.clone();
    let mut p = state.p.clone();
    ops.zero_dirichlet(&mut q);
    ops.zero_dirichlet(&mut p);
    let a: Vec<f64> = (0..n).map(|i| q[i] + tau / 2.0 * p[i]).collect();
    let (q_new, p_new) = match which {
        Scheme::CrankNicolson => {
            let b: Vec<f64> = (0..n).map(|i| p[i] - tau / 2.0 * lq[i] + tau * fbar[i]).collect();
            // (I + tau^2/4 L) q = a + tau/2 b, multiplied by M
            let mut rhs: Vec<f64> = (0..n).map(|i| ops.lumped_mass[i] * (a[i] + tau / 2.0 * b[i])).collect();
            ops.zero_dirichlet(&mut rhs);
            let sys = masked_cn_matrix(&ops.lumped_mass, &ops.stiffness, &ops.dirichlet_mask, tau)?;
            let q_new = cg_solve(&sys, &rhs, ctx.cg)?;
            let lqn = apply_lh(ops, &q_new)?;
            let p_new: Vec<f64> = (0..n).map(|i| b[i] - tau / 2.0 * lqn[i]).collect();
            (q_new, p_new)
        }
        Scheme::Leapfrog => {
            let lp = apply_lh(ops, &p)?;
            let b: Vec<f64> = (0..n)
                .map(|i| p[i] - tau / 2.0 * lq[i] - tau * tau / 4.0 * lp[i] + tau * fbar[i])
                .collect();
            let la = apply_lh(ops, &a)?;
            let p_new: Vec<f64> = (0..n).map(|i| b[i] - tau / 2.0 * la[i]).collect();
            let q_new: Vec<f64> = (0..n).map(|i| a[i] + tau / 2.0 * p_new[i]).collect();
            (q_new, p_new)
        }
        Scheme::DomainSplitting => {
            return Err(Error::InvalidInput(
                "the splitting step has no global one-step operator form".into(),
            ))
        }
    };
    let mut out = State {
        q: q_new,
        p: p_new,
        t: ctx.next_time(state.t),
    };
    ops.zero_dirichlet(&mut out.q);
    ops.zero_dirichlet(&mut out.p);
    Ok(out)
}

/// Largest stable step sizes `(2 / sqrt(||L_h||), 2 ell / sqrt(||L_h||))` for
/// leapfrog and for the splitting scheme with `ell` overlap layers.
pub fn stability_bounds(ops: &DiscreteOperators, ell: usize) -> Result<(f64, f64)> {
    let norm = operator_norm_estimate(ops, 1e-4)?;
    let lf = 2.0 / norm.sqrt();
    Ok((lf, ell as f64 * lf))
}

/// Outcome of [`integrate`].
#[derive(Debug, Clone)]
pub struct Integration {
    pub state: State,
    pub steps: usize,
    /// Set when the blow-up detector stopped the run early.
    pub blew_up: bool,
    pub initial_energy: f64,
    pub final_energy: f64,
}

/// Runs `n_steps` of `scheme`. `observer` sees every new state together with
/// its step number. With `blowup_factor = Some(c)` the run stops as soon as
/// the energy norm exceeds `c` times its initial value or stops being finite.
#[allow(clippy::too_many_arguments)]
pub fn integrate<O>(
    scheme: Scheme,
    ops: &DiscreteOperators,
    ctx: &StepContext,
    ds: Option<&DsSetup>,
    state0: &State,
    n_steps: usize,
    blowup_factor: Option<f64>,
    mut observer: O,
) -> Result<Integration>
where
    O: FnMut(usize, &State),
{
    check_state(ops, state0)?;
    let cn = match scheme {
        Scheme::CrankNicolson => Some(CrankNicolson::new(ops, ctx.tau)?),
        _ => None,
    };
    if scheme == Scheme::DomainSplitting && ds.is_none() {
        return Err(Error::InvalidInput("the splitting scheme needs a decomposition".into()));
    }
    let e0 = energy_norm(ops, state0);
    let mut state = state0.clone();
    let mut blew_up = false;
    let mut steps = 0;
    for n in 1..=n_steps {
        state = match scheme {
            Scheme::Leapfrog => leapfrog_step(ops, ctx, &state)?,
            Scheme::CrankNicolson => cn.as_ref().unwrap().step(ops, ctx, &state)?,
            Scheme::DomainSplitting => ds_step(ops, ctx, ds.unwrap(), &state)?,
        };
        steps = n;
        observer(n, &state);
        if let Some(c) = blowup_factor {
            let e = energy_norm(ops, &state);
            if !e.is_finite() || e > c * e0 {
                blew_up = true;
                break;
            }
        }
    }
    let final_energy = energy_norm(ops, &state);
    Ok(Integration {
        state,
        steps,
        blew_up,
        initial_energy: e0,
        final_energy,
    })
}
