//! Overlapping domain-splitting step.
//!
//! Per step: predict `q` on every artificial interface with the leapfrog
//! formula, solve a Crank–Nicolson problem on each overlapping subdomain with
//! the prediction as Dirichlet data, then average the subdomain results over
//! the owners of the cells around each node.

use std::sync::Arc;

use rayon::prelude::*;

use super::{cn_increment_rhs, leapfrog_node, leapfrog_step, masked_cn_matrix, StepContext};
use crate::decomposition::{
    apply_averaging, build_averaging_plan, restrict_to_subdomain, AveragingPlan, Decomposition,
};
use crate::error::{Error, Result};
use crate::fem::{DiscreteOperators, State};
use crate::linalg::{cg_solve, SparseMatrix};
use crate::mesh::{NodeAdjacency, SimplicialMesh};

/// How interface values are predicted. Both give bitwise identical results;
/// `Local` only touches the one-ring of each interface node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PredictionMode {
    #[default]
    Local,
    Global,
}

/// Crank–Nicolson system of one overlapping subdomain.
#[derive(Debug, Clone)]
pub struct SubdomainSystem {
    pub id: usize,
    /// Local-to-global node map.
    pub nodes: Vec<usize>,
    /// Local operators; the mask covers mesh-boundary and interface nodes.
    pub ops: DiscreteOperators,
    /// Local indices of the artificial interface nodes, in the order of
    /// `Decomposition::artificial_interface_nodes`.
    pub interface_local: Vec<usize>,
    pub is_interface: Vec<bool>,
    pub tau: f64,
    pub matrix: SparseMatrix,
}

pub fn prepare_subdomain_system(
    mesh: &SimplicialMesh,
    kappa: f64,
    d: &Decomposition,
    i: usize,
    tau: f64,
) -> Result<SubdomainSystem> {
    if i >= d.n_sub {
        return Err(Error::InvalidInput(format!("subdomain {i} of {}", d.n_sub)));
    }
    let (mut ops, nodes) = DiscreteOperators::assemble_on_cells(mesh, &d.overlap_cells[i], kappa)?;
    if nodes != d.overlap_nodes[i] {
        return Err(Error::Consistency(format!(
            "node list of subdomain {i} disagrees with its cells"
        )));
    }
    let mut is_interface = vec![false; nodes.len()];
    let mut interface_local = Vec::with_capacity(d.artificial_interface_nodes[i].len());
    for &g in &d.artificial_interface_nodes[i] {
        let l = d
            .local_index(i, g)
            .ok_or_else(|| Error::Consistency(format!("interface node {g} not in subdomain {i}")))?;
        is_interface[l] = true;
        ops.dirichlet_mask[l] = true;
        interface_local.push(l);
    }
    if ops.dirichlet_mask.iter().all(|&m| m) {
        return Err(Error::EmptySubdomain { subdomain: i });
    }
    let matrix = masked_cn_matrix(&ops.lumped_mass, &ops.stiffness, &ops.dirichlet_mask, tau)?;
    Ok(SubdomainSystem {
        id: i,
        nodes,
        ops,
        interface_local,
        is_interface,
        tau,
        matrix,
    })
}

/// Leapfrog predictions of `q` at the artificial interface nodes of every
/// subdomain (one vector per subdomain, ordered like its interface list).
pub fn predict_interface_values(
    ops: &DiscreteOperators,
    ctx: &StepContext,
    d: &Decomposition,
    state: &State,
    mode: PredictionMode,
) -> Result<Vec<Vec<f64>>> {
    match mode {
        PredictionMode::Local => Ok(d
            .artificial_interface_nodes
            .iter()
            .map(|gamma| {
                gamma
                    .iter()
                    .map(|&g| leapfrog_node(ops, ctx.tau, state, ctx.fbar_at(g, state.t), g).0)
                    .collect()
            })
            .collect()),
        PredictionMode::Global => {
            let full = leapfrog_step(ops, ctx, state)?;
            Ok(d.artificial_interface_nodes
                .iter()
                .map(|gamma| gamma.iter().map(|&g| full.q[g]).collect())
                .collect())
        }
    }
}

/// Crank–Nicolson step on one subdomain with `q = qhat` on its artificial
/// interface and zero on the mesh boundary. `fbar` is the global nodal vector.
pub fn subdomain_cn_step(
    sys: &SubdomainSystem,
    ctx: &StepContext,
    local: &State,
    qhat: &[f64],
    fbar: Option<&[f64]>,
) -> Result<State> {
    let n = sys.nodes.len();
    if local.q.len() != n || local.p.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: local.q.len().min(local.p.len()),
        });
    }
    if qhat.len() != sys.interface_local.len() {
        return Err(Error::DimensionMismatch {
            expected: sys.interface_local.len(),
            got: qhat.len(),
        });
    }
    if ctx.tau != sys.tau {
        return Err(Error::InvalidInput(format!(
            "system built for tau {} used with {}",
            sys.tau, ctx.tau
        )));
    }
    let tau = sys.tau;
    let c = 0.25 * tau * tau;
    let ops = &sys.ops;

    // prescribed increments on the interface
    let mut d_gamma = vec![0.0; n];
    for (&l, &v) in sys.interface_local.iter().zip(qhat) {
        d_gamma[l] = v - local.q[l];
    }
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        if ops.dirichlet_mask[i] {
            rhs[i] = d_gamma[i];
            continue;
        }
        let f = fbar.map_or(0.0, |f| f[sys.nodes[i]]);
        let mut r = cn_increment_rhs(ops, tau, &local.q, &local.p, f, i);
        let (cols, vals) = ops.stiffness.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if sys.is_interface[j] {
                r -= c * v * d_gamma[j];
            }
        }
        rhs[i] = r;
    }
    let d = cg_solve(&sys.matrix, &rhs, ctx.cg)?;
    let mut out = State::zeros(n, ctx.next_time(local.t));
    for i in 0..n {
        if sys.is_interface[i] {
            out.q[i] = local.q[i] + d_gamma[i];
            out.p[i] = 2.0 / tau * d_gamma[i] - local.p[i];
        } else if !ops.dirichlet_mask[i] {
            out.q[i] = local.q[i] + d[i];
            out.p[i] = 2.0 / tau * d[i] - local.p[i];
        }
    }
    Ok(out)
}

/// Everything the splitting step needs that does not change between steps.
pub struct DsSetup {
    pub decomposition: Decomposition,
    pub plan: AveragingPlan,
    pub systems: Vec<SubdomainSystem>,
    pub mode: PredictionMode,
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl DsSetup {
    pub fn new(
        mesh: &SimplicialMesh,
        adjacency: &NodeAdjacency,
        kappa: f64,
        decomposition: Decomposition,
        tau: f64,
    ) -> Result<Self> {
        let plan = build_averaging_plan(mesh, adjacency, &decomposition)?;
        let systems = (0..decomposition.n_sub)
            .into_par_iter()
            .map(|i| prepare_subdomain_system(mesh, kappa, &decomposition, i, tau))
            .collect::<Result<Vec<_>>>()?;
        Ok(DsSetup {
            decomposition,
            plan,
            systems,
            mode: PredictionMode::Local,
            pool: None,
        })
    }

    /// Runs the subdomain solves on a dedicated pool of `threads` workers
    /// (`0` keeps the global pool).
    pub fn with_threads(mut self, threads: usize) -> Result<Self> {
        self.pool = if threads == 0 {
            None
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
            Some(Arc::new(pool))
        };
        Ok(self)
    }

    pub fn with_mode(mut self, mode: PredictionMode) -> Self {
        self.mode = mode;
        self
    }
}

/// One splitting step from `t_{n-1}` to `t_n`. Subdomain results are
/// collected in subdomain order, so the outcome does not depend on the
/// number of threads.
pub fn ds_step(ops: &DiscreteOperators, ctx: &StepContext, setup: &DsSetup, state: &State) -> Result<State> {
    ctx.check()?;
    super::check_state(ops, state)?;
    let d = &setup.decomposition;
    let qhat = predict_interface_values(ops, ctx, d, state, setup.mode)?;
    let fbar = ctx.fbar(state.t);
    let solve = || {
        setup
            .systems
            .par_iter()
            .zip(qhat.par_iter())
            .map(|(sys, qh)| {
                let local = restrict_to_subdomain(d, sys.id, state)?;
                subdomain_cn_step(sys, ctx, &local, qh, fbar.as_deref())
            })
            .collect::<Result<Vec<State>>>()
    };
    let locals = match &setup.pool {
        Some(pool) => pool.install(solve)?,
        None => solve()?,
    };
    let mut out = apply_averaging(&setup.plan, &locals)?;
    out.t = ctx.next_time(state.t);
    Ok(out)
}
