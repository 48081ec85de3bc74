//! Simplicial meshes of the unit interval and the unit square.
//!
//! Cells are stored as a flat index array with `dim + 1` vertices per cell.
//! Triangles are positively oriented. Meshes never change after construction.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::Point;

#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    dim: usize,
    nodes: Vec<Point>,
    cells: Vec<usize>,
    boundary: Vec<bool>,
    h_min: f64,
    h_max: f64,
}

impl SimplicialMesh {
    /// Builds a mesh from raw parts, checking index ranges, distinctness and
    /// (in 2D) orientation.
    pub fn new(dim: usize, nodes: Vec<Point>, cells: Vec<usize>, boundary: Vec<bool>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidInput(format!("unsupported dimension {dim}")));
        }
        let npc = dim + 1;
        if cells.is_empty() || !cells.len().is_multiple_of(npc) {
            return Err(Error::InvalidInput(format!(
                "cell array length {} is not a positive multiple of {npc}",
                cells.len()
            )));
        }
        if boundary.len() != nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: nodes.len(),
                got: boundary.len(),
            });
        }
        let mut mesh = SimplicialMesh {
            dim,
            nodes,
            cells,
            boundary,
            h_min: f64::INFINITY,
            h_max: 0.0,
        };
        for k in 0..mesh.n_cells() {
            let c = mesh.cell(k);
            for (a, &i) in c.iter().enumerate() {
                if i >= mesh.nodes.len() {
                    return Err(Error::InvalidInput(format!(
                        "cell {k} references node {i} out of range"
                    )));
                }
                if c[..a].contains(&i) {
                    return Err(Error::InvalidInput(format!("cell {k} repeats node {i}")));
                }
            }
            if mesh.signed_measure(k) <= 0.0 {
                return Err(Error::DegenerateCell { cell: k });
            }
            let d = mesh.cell_diameter(k);
            mesh.h_min = mesh.h_min.min(d);
            mesh.h_max = mesh.h_max.max(d);
        }
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, j: usize) -> Point {
        self.nodes[j]
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.dim + 1
    }

    pub fn cell(&self, k: usize) -> &[usize] {
        let npc = self.dim + 1;
        &self.cells[k * npc..(k + 1) * npc]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks_exact(self.dim + 1)
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, j: usize) -> bool {
        self.boundary[j]
    }

    /// Smallest cell diameter.
    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    /// Largest cell diameter.
    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    fn signed_measure(&self, k: usize) -> f64 {
        let c = self.cell(k);
        match self.dim {
            1 => self.nodes[c[1]][0] - self.nodes[c[0]][0],
            _ => {
                let [a, b, d] = [self.nodes[c[0]], self.nodes[c[1]], self.nodes[c[2]]];
                0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]))
            }
        }
    }

    /// Length or area of cell `k`.
    pub fn cell_measure(&self, k: usize) -> f64 {
        self.signed_measure(k).abs()
    }

    /// Longest edge of cell `k`.
    pub fn cell_diameter(&self, k: usize) -> f64 {
        let c = self.cell(k);
        let mut d: f64 = 0.0;
        for a in 0..c.len() {
            for b in a + 1..c.len() {
                d = d.max(dist(self.nodes[c[a]], self.nodes[c[b]]));
            }
        }
        d
    }

    pub fn barycenter(&self, k: usize) -> Point {
        let c = self.cell(k);
        let w = 1.0 / c.len() as f64;
        c.iter().fold([0.0, 0.0], |acc, &i| {
            [acc[0] + w * self.nodes[i][0], acc[1] + w * self.nodes[i][1]]
        })
    }

    /// Total measure of the meshed domain.
    pub fn domain_measure(&self) -> f64 {
        (0..self.n_cells()).map(|k| self.cell_measure(k)).sum()
    }

    /// Plain-text listing: node count and cell count, then one node per line
    /// (`x` or `x y`), then one cell per line of node indices.
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.n_nodes(), self.n_cells())?;
        for p in &self.nodes {
            match self.dim {
                1 => writeln!(out, "{:.17e}", p[0])?,
                _ => writeln!(out, "{:.17e} {:.17e}", p[0], p[1])?,
            }
        }
        for c in self.cells() {
            let line: Vec<String> = c.iter().map(|i| i.to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Mesh of (0, 1) with `n_cells` intervals. Interior nodes are shifted from
/// the uniform position `i / n` by an independent uniform offset of at most
/// `perturb_fraction / n`; the end points stay fixed.
pub fn build_interval_mesh(n_cells: usize, perturb_fraction: f64, seed: u64) -> Result<SimplicialMesh> {
    if n_cells == 0 {
        return Err(Error::InvalidInput("interval mesh needs at least one cell".into()));
    }
    if !(0.0..0.45).contains(&perturb_fraction) {
        return Err(Error::InvalidInput(format!(
            "perturb_fraction {perturb_fraction} outside [0, 0.45)"
        )));
    }
    let n = n_cells as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes: Vec<Point> = (0..=n_cells)
        .map(|i| {
            let mut x = i as f64 / n;
            if i > 0 && i < n_cells && perturb_fraction > 0.0 {
                x += rng.gen_range(-perturb_fraction..=perturb_fraction) / n;
            }
            [x, 0.0]
        })
        .collect();
    let cells: Vec<usize> = (0..n_cells).flat_map(|k| [k, k + 1]).collect();
    let boundary: Vec<bool> = (0..=n_cells).map(|i| i == 0 || i == n_cells).collect();
    SimplicialMesh::new(1, nodes, cells, boundary)
}

/// Structured triangulation of the unit square: `nx` by `ny` rectangles, each
/// split along the diagonal from its lower-left to its upper-right corner.
/// Node `(i, j)` has index `j * (nx + 1) + i`.
pub fn build_unit_square_mesh(nx: usize, ny: usize) -> Result<SimplicialMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidInput("unit square mesh needs nx, ny >= 1".into()));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut boundary = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([i as f64 / nx as f64, j as f64 / ny as f64]);
            boundary.push(i == 0 || j == 0 || i == nx || j == ny);
        }
    }
    let mut cells = Vec::with_capacity(6 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            cells.extend_from_slice(&[v00, v10, v11]);
            cells.extend_from_slice(&[v00, v11, v01]);
        }
    }
    SimplicialMesh::new(2, nodes, cells, boundary)
}

/// Node-to-cell and cell-to-cell (shared vertex) incidence.
#[derive(Debug, Clone)]
pub struct NodeAdjacency {
    /// Cells incident to each node, ascending.
    pub node_cells: Vec<Vec<usize>>,
    /// Cells sharing at least one vertex with each cell, ascending, self included.
    pub cell_neighbors: Vec<Vec<usize>>,
}

pub fn build_adjacency(mesh: &SimplicialMesh) -> NodeAdjacency {
    let mut node_cells = vec![Vec::new(); mesh.n_nodes()];
    for (k, c) in mesh.cells().enumerate() {
        for &i in c {
            node_cells[i].push(k);
        }
    }
    let cell_neighbors = mesh
        .cells()
        .map(|c| {
            let mut nb: Vec<usize> = c.iter().flat_map(|&i| node_cells[i].iter().copied()).collect();
            nb.sort_unstable();
            nb.dedup();
            nb
        })
        .collect();
    NodeAdjacency {
        node_cells,
        cell_neighbors,
    }
}
