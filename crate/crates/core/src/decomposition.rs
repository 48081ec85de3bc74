//! Non-overlapping block partitions, overlapping subdomains grown by layers of
//! cells, and the nodal averaging that glues subdomain functions together.
//!
//! A layer is every cell sharing at least one vertex with the current region.
//! Subdomains are unions of whole cells, so each cell lies either completely
//! inside or completely outside of any subdomain.

use crate::error::{Error, Result};
use crate::fem::State;
use crate::mesh::{dist, NodeAdjacency, SimplicialMesh};

/// Assigns every cell to an axis-aligned block of the unit interval/square by
/// its barycenter. Block `(bx, by)` gets id `by * nx_sub + bx`; `ny_sub` is
/// ignored in 1D.
pub fn partition_blocks(mesh: &SimplicialMesh, nx_sub: usize, ny_sub: usize) -> Result<Vec<usize>> {
    let ny_sub = if mesh.dim() == 1 { 1 } else { ny_sub };
    if nx_sub == 0 || ny_sub == 0 {
        return Err(Error::InvalidInput("subdomain counts must be at least 1".into()));
    }
    let n_sub = nx_sub * ny_sub;
    if n_sub > mesh.n_cells() {
        return Err(Error::InvalidInput(format!(
            "{n_sub} subdomains for {} cells",
            mesh.n_cells()
        )));
    }
    let owner: Vec<usize> = (0..mesh.n_cells())
        .map(|k| {
            let b = mesh.barycenter(k);
            let bx = ((b[0] * nx_sub as f64).floor() as usize).min(nx_sub - 1);
            let by = ((b[1] * ny_sub as f64).floor() as usize).min(ny_sub - 1);
            by * nx_sub + bx
        })
        .collect();
    let mut count = vec![0usize; n_sub];
    for &o in &owner {
        count[o] += 1;
    }
    if let Some(empty) = count.iter().position(|&c| c == 0) {
        return Err(Error::EmptySubdomain { subdomain: empty });
    }
    Ok(owner)
}

/// Overlapping decomposition and its node classification.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub n_sub: usize,
    pub ell: usize,
    /// Owning subdomain of each cell (the non-overlapping partition).
    pub cell_owner: Vec<usize>,
    /// Cells of each overlapping subdomain, ascending.
    pub overlap_cells: Vec<Vec<usize>>,
    /// Vertices of each overlapping subdomain, ascending. The position in this
    /// list is the subdomain-local node index.
    pub overlap_nodes: Vec<Vec<usize>>,
    /// Nodes strictly inside each non-overlapping subdomain.
    pub interior_nodes: Vec<Vec<usize>>,
    /// Nodes on the part of the overlapping subdomain boundary inside the domain.
    pub artificial_interface_nodes: Vec<Vec<usize>>,
    /// Mesh boundary nodes belonging to each overlapping subdomain.
    pub physical_boundary_nodes: Vec<Vec<usize>>,
}

/// Extends each block of `cell_owner` by `ell` layers of cells and classifies
/// the nodes. `ell` may exceed what is needed to cover the domain.
pub fn grow_overlap(
    mesh: &SimplicialMesh,
    adjacency: &NodeAdjacency,
    cell_owner: &[usize],
    ell: usize,
) -> Result<Decomposition> {
    if cell_owner.len() != mesh.n_cells() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_cells(),
            got: cell_owner.len(),
        });
    }
    let n_sub = cell_owner.iter().max().map_or(0, |m| m + 1);
    let mut owned: Vec<Vec<usize>> = vec![Vec::new(); n_sub];
    for (k, &o) in cell_owner.iter().enumerate() {
        owned[o].push(k);
    }
    if let Some(empty) = owned.iter().position(|c| c.is_empty()) {
        return Err(Error::EmptySubdomain { subdomain: empty });
    }

    let mut d = Decomposition {
        n_sub,
        ell,
        cell_owner: cell_owner.to_vec(),
        overlap_cells: Vec::with_capacity(n_sub),
        overlap_nodes: Vec::with_capacity(n_sub),
        interior_nodes: Vec::with_capacity(n_sub),
        artificial_interface_nodes: Vec::with_capacity(n_sub),
        physical_boundary_nodes: Vec::with_capacity(n_sub),
    };
    let mut in_set = vec![false; mesh.n_cells()];
    let mut node_mark = vec![false; mesh.n_nodes()];
    for (i, own) in owned.iter().enumerate() {
        in_set.iter_mut().for_each(|b| *b = false);
        let mut cells = own.clone();
        for &k in own {
            in_set[k] = true;
        }
        let mut front = own.clone();
        for _ in 0..ell {
            let mut next = Vec::new();
            for &k in &front {
                for &o in &adjacency.cell_neighbors[k] {
                    if !in_set[o] {
                        in_set[o] = true;
                        next.push(o);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            cells.extend_from_slice(&next);
            front = next;
        }
        cells.sort_unstable();

        let mut nodes = Vec::new();
        for &k in &cells {
            for &j in mesh.cell(k) {
                if !node_mark[j] {
                    node_mark[j] = true;
                    nodes.push(j);
                }
            }
        }
        nodes.sort_unstable();
        for &j in &nodes {
            node_mark[j] = false;
        }

        let mut interface = Vec::new();
        let mut physical = Vec::new();
        let mut interior = Vec::new();
        for &j in &nodes {
            if mesh.is_boundary(j) {
                physical.push(j);
            } else {
                let incident = &adjacency.node_cells[j];
                if incident.iter().any(|&k| !in_set[k]) {
                    interface.push(j);
                }
                if incident.iter().all(|&k| cell_owner[k] == i) {
                    interior.push(j);
                }
            }
        }
        d.overlap_cells.push(cells);
        d.overlap_nodes.push(nodes);
        d.interior_nodes.push(interior);
        d.artificial_interface_nodes.push(interface);
        d.physical_boundary_nodes.push(physical);
    }
    Ok(d)
}

impl Decomposition {
    /// Convenience: block partition plus overlap growth.
    pub fn blocks(
        mesh: &SimplicialMesh,
        adjacency: &NodeAdjacency,
        nx_sub: usize,
        ny_sub: usize,
        ell: usize,
    ) -> Result<Self> {
        let owner = partition_blocks(mesh, nx_sub, ny_sub)?;
        grow_overlap(mesh, adjacency, &owner, ell)
    }

    /// Subdomain-local index of global node `g` in subdomain `i`.
    pub fn local_index(&self, i: usize, g: usize) -> Option<usize> {
        self.overlap_nodes[i].binary_search(&g).ok()
    }

    pub fn has_artificial_interfaces(&self) -> bool {
        self.artificial_interface_nodes.iter().any(|v| !v.is_empty())
    }

    /// Realized overlap width of subdomain `i`: the smallest distance between
    /// a node on the boundary of the non-overlapping subdomain and a node of the
    /// artificial interface. Infinite when there is no artificial interface.
    pub fn overlap_width(&self, mesh: &SimplicialMesh, adjacency: &NodeAdjacency, i: usize) -> f64 {
        let rim: Vec<usize> = self.overlap_nodes[i]
            .iter()
            .copied()
            .filter(|&j| {
                let inc = &adjacency.node_cells[j];
                inc.iter().any(|&k| self.cell_owner[k] == i) && inc.iter().any(|&k| self.cell_owner[k] != i)
            })
            .collect();
        let mut best = f64::INFINITY;
        for &a in &self.artificial_interface_nodes[i] {
            for &b in &rim {
                best = best.min(dist(mesh.node(a), mesh.node(b)));
            }
        }
        best
    }
}

/// Nodal averaging weights: node `j` takes the mean of the subdomains whose
/// closure contains it.
#[derive(Debug, Clone)]
pub struct AveragingPlan {
    offsets: Vec<usize>,
    /// (subdomain, subdomain-local node index)
    entries: Vec<(usize, usize)>,
    dirichlet: Vec<bool>,
    n_sub: usize,
}

pub fn build_averaging_plan(
    mesh: &SimplicialMesh,
    adjacency: &NodeAdjacency,
    d: &Decomposition,
) -> Result<AveragingPlan> {
    let mut offsets = Vec::with_capacity(mesh.n_nodes() + 1);
    offsets.push(0);
    let mut entries = Vec::new();
    let mut subs = Vec::new();
    for j in 0..mesh.n_nodes() {
        subs.clear();
        subs.extend(adjacency.node_cells[j].iter().map(|&k| d.cell_owner[k]));
        subs.sort_unstable();
        subs.dedup();
        if subs.is_empty() {
            return Err(Error::Consistency(format!("node {j} belongs to no subdomain")));
        }
        for &s in &subs {
            let l = d
                .local_index(s, j)
                .ok_or_else(|| Error::Consistency(format!("node {j} missing from subdomain {s}")))?;
            entries.push((s, l));
        }
        offsets.push(entries.len());
    }
    Ok(AveragingPlan {
        offsets,
        entries,
        dirichlet: mesh.boundary_flags().to_vec(),
        n_sub: d.n_sub,
    })
}

impl AveragingPlan {
    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Contributing (subdomain, local index) pairs of node `j`; each carries
    /// weight `1 / len`.
    pub fn contributors(&self, j: usize) -> &[(usize, usize)] {
        &self.entries[self.offsets[j]..self.offsets[j + 1]]
    }

    pub fn weight(&self, j: usize) -> f64 {
        1.0 / (self.offsets[j + 1] - self.offsets[j]) as f64
    }

    /// Mean of the contributions at node `j`, written as the first value plus
    /// the weighted deviations of the others so that equal inputs are
    /// reproduced exactly.
    fn mean_at(&self, j: usize, values: &[&[f64]]) -> f64 {
        let c = self.contributors(j);
        let first = values[c[0].0][c[0].1];
        if c.len() == 1 {
            return first;
        }
        let w = self.weight(j);
        let mut dev = 0.0;
        for &(s, l) in &c[1..] {
            dev += values[s][l] - first;
        }
        first + w * dev
    }

    /// Averages one nodal field given per subdomain (indexed locally).
    pub fn average_field(&self, fields: &[&[f64]]) -> Result<Vec<f64>> {
        if fields.len() != self.n_sub {
            return Err(Error::DimensionMismatch {
                expected: self.n_sub,
                got: fields.len(),
            });
        }
        for j in 0..self.n_nodes() {
            for &(s, l) in self.contributors(j) {
                if l >= fields[s].len() {
                    return Err(Error::Consistency(format!("subdomain {s} has no value for node {j}")));
                }
            }
        }
        Ok((0..self.n_nodes())
            .map(|j| {
                if self.dirichlet[j] {
                    0.0
                } else {
                    self.mean_at(j, fields)
                }
            })
            .collect())
    }
}

/// Builds the global state from subdomain states; Dirichlet nodes are zeroed.
pub fn apply_averaging(plan: &AveragingPlan, states: &[State]) -> Result<State> {
    let t = states.first().map_or(0.0, |s| s.t);
    let qs: Vec<&[f64]> = states.iter().map(|s| s.q.as_slice()).collect();
    let ps: Vec<&[f64]> = states.iter().map(|s| s.p.as_slice()).collect();
    Ok(State {
        q: plan.average_field(&qs)?,
        p: plan.average_field(&ps)?,
        t,
    })
}

pub fn restrict_to_subdomain(d: &Decomposition, i: usize, global: &State) -> Result<State> {
    if i >= d.n_sub {
        return Err(Error::InvalidInput(format!("subdomain {i} of {}", d.n_sub)));
    }
    let nodes = &d.overlap_nodes[i];
    Ok(State {
        q: nodes.iter().map(|&g| global.q[g]).collect(),
        p: nodes.iter().map(|&g| global.p[g]).collect(),
        t: global.t,
    })
}

/// Largest number of overlapping subdomains sharing a node.
pub fn local_overlap_count(d: &Decomposition, n_nodes: usize) -> usize {
    let mut count = vec![0usize; n_nodes];
    for nodes in &d.overlap_nodes {
        for &g in nodes {
            count[g] += 1;
        }
    }
    count.into_iter().max().unwrap_or(0)
}
