//! Mass-lumped P1 finite element operators.
//!
//! The lumped mass gives every vertex of a cell `K` the share `|K| / (dim + 1)`.
//! The stiffness matrix is the exact P1 Galerkin matrix of `kappa^2 grad u . grad v`.
//! Dirichlet conditions are applied by a per-node mask; masked rows are never
//! eliminated from the vectors.

use crate::error::{Error, Result};
use crate::linalg::{lanczos_max_eigenvalue, SparseMatrix};
use crate::mesh::SimplicialMesh;
use crate::quadrature::{interval_rule, triangle_rule};
use crate::Point;

/// Nodal state `(q, p)` approximating `(u, du/dt)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
}

impl State {
    pub fn zeros(n: usize, t: f64) -> Self {
        State {
            q: vec![0.0; n],
            p: vec![0.0; n],
            t,
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Componentwise `self - other`, keeping `self.t`.
    pub fn difference(&self, other: &State) -> State {
        State {
            q: self.q.iter().zip(&other.q).map(|(a, b)| a - b).collect(),
            p: self.p.iter().zip(&other.p).map(|(a, b)| a - b).collect(),
            t: self.t,
        }
    }
}

/// Lumped mass, stiffness and Dirichlet mask on a mesh or on a cell subset.
#[derive(Debug, Clone)]
pub struct DiscreteOperators {
    pub lumped_mass: Vec<f64>,
    pub stiffness: SparseMatrix,
    pub dirichlet_mask: Vec<bool>,
    pub kappa: f64,
}

impl DiscreteOperators {
    /// Global operators with the mesh boundary as Dirichlet set.
    pub fn assemble(mesh: &SimplicialMesh, kappa: f64) -> Result<Self> {
        Ok(DiscreteOperators {
            lumped_mass: assemble_lumped_mass(mesh)?,
            stiffness: assemble_stiffness(mesh, kappa)?,
            dirichlet_mask: mesh.boundary_flags().to_vec(),
            kappa,
        })
    }

    /// Operators assembled only over `cells`, numbered locally. Returns the
    /// operators and the ascending list of global node ids (local id = position).
    /// The mask marks mesh-boundary nodes; callers add further Dirichlet nodes.
    pub fn assemble_on_cells(mesh: &SimplicialMesh, cells: &[usize], kappa: f64) -> Result<(Self, Vec<usize>)> {
        let mut nodes: Vec<usize> = cells.iter().flat_map(|&k| mesh.cell(k).iter().copied()).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let mut local = vec![usize::MAX; mesh.n_nodes()];
        for (l, &g) in nodes.iter().enumerate() {
            local[g] = l;
        }
        let (mass, trip) = assemble_parts(mesh, cells.iter().copied(), kappa, |g| local[g], nodes.len())?;
        let ops = DiscreteOperators {
            lumped_mass: mass,
            stiffness: SparseMatrix::from_triplets(nodes.len(), &trip)?,
            dirichlet_mask: nodes.iter().map(|&g| mesh.is_boundary(g)).collect(),
            kappa,
        };
        Ok((ops, nodes))
    }

    pub fn n_nodes(&self) -> usize {
        self.lumped_mass.len()
    }

    /// Mass-lumped inner product.
    pub fn ml_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.lumped_mass.iter().zip(u).zip(v).map(|((m, a), b)| m * a * b).sum()
    }

    /// Energy bilinear form `a(u, v) = v^T K u`.
    pub fn energy_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        (0..self.n_nodes()).map(|i| v[i] * self.stiffness.row_dot(i, u)).sum()
    }

    pub fn zero_dirichlet(&self, v: &mut [f64]) {
        for (x, &m) in v.iter_mut().zip(&self.dirichlet_mask) {
            if m {
                *x = 0.0;
            }
        }
    }
}

fn cell_gradients(mesh: &SimplicialMesh, k: usize) -> Result<(f64, [Point; 3])> {
    let c = mesh.cell(k);
    let measure = mesh.cell_measure(k);
    if !(measure > 0.0) {
        return Err(Error::DegenerateCell { cell: k });
    }
    match mesh.dim() {
        1 => {
            let h = mesh.node(c[1])[0] - mesh.node(c[0])[0];
            Ok((measure, [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0, 0.0]]))
        }
        _ => {
            let [x0, x1, x2] = [mesh.node(c[0]), mesh.node(c[1]), mesh.node(c[2])];
            let two_a = 2.0 * measure;
            Ok((
                measure,
                [
                    [(x1[1] - x2[1]) / two_a, (x2[0] - x1[0]) / two_a],
                    [(x2[1] - x0[1]) / two_a, (x0[0] - x2[0]) / two_a],
                    [(x0[1] - x1[1]) / two_a, (x1[0] - x0[0]) / two_a],
                ],
            ))
        }
    }
}

type Triplets = Vec<(usize, usize, f64)>;

fn assemble_parts<I, F>(mesh: &SimplicialMesh, cells: I, kappa: f64, index: F, n: usize) -> Result<(Vec<f64>, Triplets)>
where
    I: Iterator<Item = usize>,
    F: Fn(usize) -> usize,
{
    let npc = mesh.nodes_per_cell();
    let k2 = kappa * kappa;
    let mut mass = vec![0.0; n];
    let mut trip = Vec::new();
    for k in cells {
        let (measure, grads) = cell_gradients(mesh, k)?;
        let c = mesh.cell(k);
        for a in 0..npc {
            let ia = index(c[a]);
            mass[ia] += measure / npc as f64;
            for b in 0..npc {
                let g = grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1];
                trip.push((ia, index(c[b]), k2 * measure * g));
            }
        }
    }
    Ok((mass, trip))
}

/// Vertex-quadrature mass diagonal.
pub fn assemble_lumped_mass(mesh: &SimplicialMesh) -> Result<Vec<f64>> {
    let npc = mesh.nodes_per_cell();
    let mut mass = vec![0.0; mesh.n_nodes()];
    for (k, c) in mesh.cells().enumerate() {
        let m = mesh.cell_measure(k);
        if !(m > 0.0) {
            return Err(Error::DegenerateCell { cell: k });
        }
        for &i in c {
            mass[i] += m / npc as f64;
        }
    }
    Ok(mass)
}

pub fn assemble_stiffness(mesh: &SimplicialMesh, kappa: f64) -> Result<SparseMatrix> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidInput(format!("kappa must be positive, got {kappa}")));
    }
    let (_, trip) = assemble_parts(mesh, 0..mesh.n_cells(), kappa, |g| g, mesh.n_nodes())?;
    SparseMatrix::from_triplets(mesh.n_nodes(), &trip)
}

/// `L_h q = M^{-1} K q` on the zero-trace space: `q` is masked before the
/// product and the result vanishes on Dirichlet nodes.
pub fn apply_lh(ops: &DiscreteOperators, q: &[f64]) -> Result<Vec<f64>> {
    if q.len() != ops.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: ops.n_nodes(),
            got: q.len(),
        });
    }
    let mut qm = q.to_vec();
    ops.zero_dirichlet(&mut qm);
    let mut y = ops.stiffness.spmv(&qm)?;
    for (i, yi) in y.iter_mut().enumerate() {
        *yi = if ops.dirichlet_mask[i] {
            0.0
        } else {
            *yi / ops.lumped_mass[i]
        };
    }
    Ok(y)
}

/// Largest eigenvalue of `L_h`, which equals its operator norm in the
/// lumped-mass inner product. Works on the symmetric form `M^{-1/2} K M^{-1/2}`
/// restricted to the free nodes.
pub fn operator_norm_estimate(ops: &DiscreteOperators, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let free: Vec<usize> = (0..ops.n_nodes()).filter(|&i| !ops.dirichlet_mask[i]).collect();
    let mut pos = vec![usize::MAX; ops.n_nodes()];
    for (l, &g) in free.iter().enumerate() {
        pos[g] = l;
    }
    let inv_sqrt_m: Vec<f64> = free.iter().map(|&g| 1.0 / ops.lumped_mass[g].sqrt()).collect();
    let apply = |x: &[f64], y: &mut [f64]| {
        for (l, &g) in free.iter().enumerate() {
            let (cols, vals) = ops.stiffness.row(g);
            let mut s = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                let lj = pos[j];
                if lj != usize::MAX {
                    s += v * x[lj] * inv_sqrt_m[lj];
                }
            }
            y[l] = s * inv_sqrt_m[l];
        }
    };
    lanczos_max_eigenvalue(free.len(), apply, tol, 10_000)
}

/// Nodal interpolant `I_h g`.
pub fn interpolate_nodal<G: Fn(Point) -> f64>(mesh: &SimplicialMesh, g: G) -> Vec<f64> {
    mesh.nodes().iter().map(|&x| g(x)).collect()
}

/// Discrete norms of a state: `(||q||_V, ||p||_H, ||(q, p)||_E)` with
/// `||q||_V^2 = q^T K q` and `||p||_H^2 = p^T M p`.
pub fn discrete_norms(ops: &DiscreteOperators, state: &State) -> (f64, f64, f64) {
    let v2 = ops.stiffness.quadratic_form(&state.q).max(0.0);
    let h2 = ops.ml_inner(&state.p, &state.p);
    (v2.sqrt(), h2.sqrt(), (v2 + h2).sqrt())
}

pub fn energy_norm(ops: &DiscreteOperators, state: &State) -> f64 {
    discrete_norms(ops, state).2
}

/// `(lambda^-2 z^T M z + z^T K z)^{1/2}` with the operators of a subdomain.
pub fn b_norm(ops: &DiscreteOperators, z: &[f64], lambda: f64) -> f64 {
    let m = ops.ml_inner(z, z);
    let a = ops.stiffness.quadratic_form(z).max(0.0);
    (m / (lambda * lambda) + a).sqrt()
}

/// Default quadrature degree for [`error_vs_exact`].
pub fn default_quad_order(dim: usize) -> usize {
    if dim == 1 {
        4
    } else {
        2
    }
}

/// `(int kappa^2 |grad q_h - grad u|^2 + int |p_h - p|^2)^{1/2}` at `state.t`,
/// with cellwise quadrature exact for polynomials of degree `quad_order`.
pub fn error_vs_exact<G, P>(
    mesh: &SimplicialMesh,
    ops: &DiscreteOperators,
    state: &State,
    exact_grad_u: G,
    exact_p: P,
    quad_order: usize,
) -> Result<f64>
where
    G: Fn(Point, f64) -> Point,
    P: Fn(Point, f64) -> f64,
{
    let (h1, l2) = error_parts(mesh, ops, state, exact_grad_u, exact_p, quad_order)?;
    Ok((h1 * h1 + l2 * l2).sqrt())
}

/// The two contributions of [`error_vs_exact`]: kappa-weighted gradient error
/// and L2 error of the velocity.
pub fn error_parts<G, P>(
    mesh: &SimplicialMesh,
    ops: &DiscreteOperators,
    state: &State,
    exact_grad_u: G,
    exact_p: P,
    quad_order: usize,
) -> Result<(f64, f64)>
where
    G: Fn(Point, f64) -> Point,
    P: Fn(Point, f64) -> f64,
{
    if quad_order < 1 {
        return Err(Error::InvalidInput("quadrature order must be at least 1".into()));
    }
    if state.len() != mesh.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_nodes(),
            got: state.len(),
        });
    }
    let k2 = ops.kappa * ops.kappa;
    let t = state.t;
    // (barycentric coordinates, weight relative to the cell measure)
    let rule: Vec<([f64; 3], f64)> = match mesh.dim() {
        1 => interval_rule(quad_order)
            .into_iter()
            .map(|(s, w)| ([1.0 - s, s, 0.0], w))
            .collect(),
        _ => triangle_rule(quad_order)
            .into_iter()
            .map(|(a, b, w)| ([1.0 - a - b, a, b], 2.0 * w))
            .collect(),
    };
    let mut h1 = 0.0;
    let mut l2 = 0.0;
    for k in 0..mesh.n_cells() {
        let c = mesh.cell(k);
        let (measure, grads) = cell_gradients(mesh, k)?;
        let mut gq = [0.0; 2];
        for (a, &i) in c.iter().enumerate() {
            gq[0] += state.q[i] * grads[a][0];
            gq[1] += state.q[i] * grads[a][1];
        }
        for (bary, w) in &rule {
            let mut x = [0.0; 2];
            let mut ph = 0.0;
            for (a, &i) in c.iter().enumerate() {
                let p = mesh.node(i);
                x[0] += bary[a] * p[0];
                x[1] += bary[a] * p[1];
                ph += bary[a] * state.p[i];
            }
            let gu = exact_grad_u(x, t);
            let dp = ph - exact_p(x, t);
            h1 += w * measure * k2 * ((gq[0] - gu[0]).powi(2) + (gq[1] - gu[1]).powi(2));
            l2 += w * measure * dp * dp;
        }
    }
    Ok((h1.sqrt(), l2.sqrt()))
}
