//! Conforming P1/P2 discretization of the Robin form: stiffness `K`,
//! Robin boundary mass `B` and mass `M`, with Dirichlet degrees of freedom
//! eliminated. The Robin parameter enters only at solve time as `K − γB`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::linalg::sparse::dot;
use crate::linalg::{CsrMatrix, Pattern};
use crate::mesh::{BoundaryTag, NodeKind, TriMesh};
use crate::quad::{GAUSS3_UNIT, TRI6};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Order {
    P1,
    P2,
}

impl Order {
    pub fn from_degree(d: u32) -> Result<Self> {
        match d {
            1 => Ok(Order::P1),
            2 => Ok(Order::P2),
            _ => Err(Error::InvalidArgument(format!("element order must be 1 or 2, got {d}"))),
        }
    }

    pub fn degree(self) -> u32 {
        match self {
            Order::P1 => 1,
            Order::P2 => 2,
        }
    }
}

const CONSTRAINED: usize = usize::MAX;

/// Numbering of the global degrees of freedom (nodes, then edges for P2)
/// and their map to unconstrained indices.
#[derive(Debug, Clone)]
pub struct DofMap {
    order: Order,
    num_nodes: usize,
    edges: Vec<[usize; 2]>,
    cells: Vec<[usize; 6]>,
    free_index: Vec<usize>,
    num_free: usize,
    positions: Vec<Point>,
}

impl DofMap {
    pub fn new(mesh: &TriMesh, order: Order) -> Self {
        let n = mesh.num_nodes();
        let mut edges = Vec::new();
        let mut edge_id: HashMap<(usize, usize), usize> = HashMap::new();
        let mut cells = Vec::with_capacity(mesh.num_triangles());
        for t in mesh.triangles() {
            let mut c = [0; 6];
            c[..3].copy_from_slice(t);
            if order == Order::P2 {
                for k in 0..3 {
                    let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
                    let key = (a.min(b), a.max(b));
                    let id = *edge_id.entry(key).or_insert_with(|| {
                        edges.push([key.0, key.1]);
                        edges.len() - 1
                    });
                    c[3 + k] = n + id;
                }
            }
            cells.push(c);
        }
        let total = n + edges.len();
        let mut dirichlet = vec![false; total];
        for (v, k) in mesh.node_kinds().iter().enumerate() {
            dirichlet[v] = *k == NodeKind::Dirichlet;
        }
        if order == Order::P2 {
            for e in mesh.boundary_edges().iter().filter(|e| e.tag == BoundaryTag::Dirichlet) {
                let [a, b] = e.nodes;
                dirichlet[n + edge_id[&(a.min(b), a.max(b))]] = true;
            }
        }
        let mut free_index = vec![CONSTRAINED; total];
        let mut num_free = 0;
        for g in 0..total {
            if !dirichlet[g] {
                free_index[g] = num_free;
                num_free += 1;
            }
        }
        let nodes = mesh.nodes();
        let positions = nodes.iter().copied().chain(edges.iter().map(|&[a, b]| nodes[a].midpoint(nodes[b]))).collect();
        DofMap { order, num_nodes: n, edges, cells, free_index, num_free, positions }
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn num_global(&self) -> usize {
        self.free_index.len()
    }

    pub fn num_free(&self) -> usize {
        self.num_free
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Edge endpoints of the edge degrees of freedom (P2 only).
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Unconstrained index of a global degree of freedom.
    pub fn free(&self, global: usize) -> Option<usize> {
        let f = self.free_index[global];
        (f != CONSTRAINED).then_some(f)
    }

    /// Interpolation point of each global degree of freedom.
    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    fn local_count(&self) -> usize {
        match self.order {
            Order::P1 => 3,
            Order::P2 => 6,
        }
    }

    /// Global degrees of freedom of triangle `t` (vertices, then the edges
    /// opposite each vertex).
    pub fn cell(&self, t: usize) -> &[usize] {
        &self.cells[t][..self.local_count()]
    }

    /// Nodal interpolant of `f`, restricted to the unconstrained entries.
    pub fn interpolate<T: Real>(&self, f: impl Fn(Point) -> f64) -> Vec<T> {
        let mut x = vec![T::zero(); self.num_free];
        for (g, &p) in self.positions.iter().enumerate() {
            if let Some(i) = self.free(g) {
                x[i] = T::of(f(p));
            }
        }
        x
    }

    /// Value of the finite element function with global coefficients `g`
    /// at barycentric coordinates `l` of triangle `t`.
    pub fn evaluate(&self, g: &[f64], t: usize, l: [f64; 3]) -> f64 {
        let c = &self.cells[t];
        match self.order {
            Order::P1 => (0..3).map(|i| l[i] * g[c[i]]).sum(),
            Order::P2 => (0..3)
                .map(|i| l[i] * (2.0 * l[i] - 1.0) * g[c[i]] + 4.0 * l[(i + 1) % 3] * l[(i + 2) % 3] * g[c[3 + i]])
                .sum(),
        }
    }

    /// Global coefficient vector with zeros on constrained entries.
    pub fn expand<T: Real>(&self, x: &[T]) -> Vec<T> {
        self.free_index.iter().map(|&f| if f == CONSTRAINED { T::zero() } else { x[f] }).collect()
    }
}

/// The matrices of the Robin eigenproblem `(K − γB)x = E·Mx`.
#[derive(Debug, Clone)]
pub struct SpectralPencil<T> {
    pub k: CsrMatrix<T>,
    pub b: CsrMatrix<T>,
    pub m: CsrMatrix<T>,
    pub dofs: Arc<DofMap>,
}

struct ElementBlock {
    dofs: [usize; 6],
    n: usize,
    k: [[f64; 6]; 6],
    m: [[f64; 6]; 6],
}

fn gradients(p: &[Point; 3]) -> ([Point; 3], f64) {
    let area2 = (p[1] - p[0]).cross(p[2] - p[0]);
    let g = [0, 1, 2].map(|i| {
        let e = p[(i + 2) % 3] - p[(i + 1) % 3];
        Point::new(-e.y, e.x) * (1.0 / area2)
    });
    (g, 0.5 * area2)
}

fn element_p1(p: &[Point; 3]) -> ([[f64; 6]; 6], [[f64; 6]; 6]) {
    let (g, area) = gradients(p);
    let mut k = [[0.0; 6]; 6];
    let mut m = [[0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * g[i].dot(g[j]);
            m[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    (k, m)
}

fn p2_basis(l: [f64; 3], g: &[Point; 3]) -> ([f64; 6], [Point; 6]) {
    let mut phi = [0.0; 6];
    let mut grad = [Point::default(); 6];
    for i in 0..3 {
        phi[i] = l[i] * (2.0 * l[i] - 1.0);
        grad[i] = g[i] * (4.0 * l[i] - 1.0);
        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
        phi[3 + i] = 4.0 * l[a] * l[b];
        grad[3 + i] = (g[b] * l[a] + g[a] * l[b]) * 4.0;
    }
    (phi, grad)
}

fn element_p2(p: &[Point; 3]) -> ([[f64; 6]; 6], [[f64; 6]; 6]) {
    let (g, area) = gradients(p);
    let mut k = [[0.0; 6]; 6];
    let mut m = [[0.0; 6]; 6];
    for (l, w) in TRI6.iter() {
        let (phi, grad) = p2_basis(*l, &g);
        let wa = w * area;
        for i in 0..6 {
            for j in 0..6 {
                k[i][j] += wa * grad[i].dot(grad[j]);
                m[i][j] += wa * phi[i] * phi[j];
            }
        }
    }
    // symmetrize the rounding of the quadrature sums
    for i in 0..6 {
        for j in 0..i {
            let (a, b) = (0.5 * (k[i][j] + k[j][i]), 0.5 * (m[i][j] + m[j][i]));
            k[i][j] = a;
            k[j][i] = a;
            m[i][j] = b;
            m[j][i] = b;
        }
    }
    (k, m)
}

/// Boundary mass of one edge: 2×2 for P1, 3×3 (ends, midpoint) for P2.
fn edge_mass(len: f64, order: Order) -> [[f64; 3]; 3] {
    let mut b = [[0.0; 3]; 3];
    match order {
        Order::P1 => {
            b[0] = [len / 3.0, len / 6.0, 0.0];
            b[1] = [len / 6.0, len / 3.0, 0.0];
        }
        Order::P2 => {
            for &(t, w) in GAUSS3_UNIT.iter() {
                let phi = [(1.0 - t) * (1.0 - 2.0 * t), t * (2.0 * t - 1.0), 4.0 * t * (1.0 - t)];
                for i in 0..3 {
                    for j in 0..3 {
                        b[i][j] += w * len * phi[i] * phi[j];
                    }
                }
            }
            for i in 0..3 {
                for j in 0..i {
                    let s = 0.5 * (b[i][j] + b[j][i]);
                    b[i][j] = s;
                    b[j][i] = s;
                }
            }
        }
    }
    b
}

/// Assembles `K`, `B` and `M` on the unconstrained degrees of freedom.
pub fn assemble<T: Real>(mesh: &TriMesh, order: Order) -> Result<SpectralPencil<T>> {
    if mesh.num_triangles() == 0 {
        return Err(Error::InvalidMesh("empty mesh".into()));
    }
    let dofs = Arc::new(DofMap::new(mesh, order));
    let nl = dofs.local_count();
    let blocks: Vec<ElementBlock> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let p = mesh.triangle_points(t);
            if mesh.triangle_area(t) <= 0.0 {
                return Err(Error::InvalidMesh(format!("inverted element {t}")));
            }
            let (k, m) = match order {
                Order::P1 => element_p1(&p),
                Order::P2 => element_p2(&p),
            };
            let mut d = [0; 6];
            d[..nl].copy_from_slice(dofs.cell(t));
            Ok(ElementBlock { dofs: d, n: nl, k, m })
        })
        .collect::<Result<_>>()?;

    let free_cells: Vec<Vec<usize>> =
        (0..mesh.num_triangles()).map(|t| dofs.cell(t).iter().filter_map(|&g| dofs.free(g)).collect()).collect();
    let pattern = Arc::new(Pattern::from_elements(dofs.num_free(), free_cells.iter().map(|c| c.as_slice())));
    let mut k = CsrMatrix::<T>::zeros(pattern.clone());
    let mut m = CsrMatrix::<T>::zeros(pattern.clone());
    let mut b = CsrMatrix::<T>::zeros(pattern);
    for blk in &blocks {
        for i in 0..blk.n {
            let Some(fi) = dofs.free(blk.dofs[i]) else { continue };
            for j in 0..blk.n {
                let Some(fj) = dofs.free(blk.dofs[j]) else { continue };
                k.add(fi, fj, T::of(blk.k[i][j]));
                m.add(fi, fj, T::of(blk.m[i][j]));
            }
        }
    }
    let n = mesh.num_nodes();
    let edge_id: HashMap<(usize, usize), usize> =
        dofs.edges().iter().enumerate().map(|(i, &[a, c])| ((a, c), i)).collect();
    for e in mesh.boundary_edges().iter().filter(|e| e.tag == BoundaryTag::Robin) {
        let [a, c] = e.nodes;
        let len = mesh.nodes()[a].dist(mesh.nodes()[c]);
        let mut g = vec![a, c];
        if order == Order::P2 {
            g.push(n + edge_id[&(a.min(c), a.max(c))]);
        }
        let be = edge_mass(len, order);
        for i in 0..g.len() {
            let Some(fi) = dofs.free(g[i]) else { continue };
            for j in 0..g.len() {
                let Some(fj) = dofs.free(g[j]) else { continue };
                b.add(fi, fj, T::of(be[i][j]));
            }
        }
    }
    Ok(SpectralPencil { k, b, m, dofs })
}

impl<T: Real> SpectralPencil<T> {
    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    pub fn order(&self) -> Order {
        self.dofs.order()
    }

    /// `K − γB`.
    pub fn operator(&self, gamma: T) -> CsrMatrix<T> {
        self.k.lin_comb(T::one(), &self.b, -gamma)
    }

    /// `K − γB − λM`.
    pub fn shifted(&self, gamma: T, lambda: T) -> CsrMatrix<T> {
        let mut a = self.operator(gamma);
        for (v, &mv) in a.values_mut().iter_mut().zip(self.m.values()) {
            *v -= lambda * mv;
        }
        a
    }

    /// `(xᵀKx − γ xᵀBx) / xᵀMx`.
    pub fn rayleigh(&self, gamma: T, x: &[T]) -> Result<T> {
        let den = self.m.bilinear(x, x);
        if !(den > T::zero()) {
            return Err(Error::InvalidArgument("Rayleigh quotient of the zero vector".into()));
        }
        Ok((self.k.bilinear(x, x) - gamma * self.b.bilinear(x, x)) / den)
    }

    /// `xᵀMy`.
    pub fn m_inner(&self, x: &[T], y: &[T]) -> T {
        dot(x, &self.m.mul_vec(y))
    }

    /// Writes `K`, `B` and `M` as `<base>_K.mtx` etc. in MatrixMarket
    /// symmetric coordinate format.
    pub fn export_matrix_market(&self, base: impl AsRef<Path>) -> Result<()> {
        let base = base.as_ref();
        for (name, mat) in [("K", &self.k), ("B", &self.b), ("M", &self.m)] {
            let mut s = base.as_os_str().to_owned();
            s.push(format!("_{name}.mtx"));
            std::fs::write(s, matrix_market(mat))?;
        }
        Ok(())
    }
}

/// MatrixMarket text of a symmetric matrix (lower triangle stored).
pub fn matrix_market<T: Real>(a: &CsrMatrix<T>) -> String {
    let p = a.pattern();
    let mut entries = Vec::new();
    for i in 0..a.dim() {
        for (idx, &j) in p.row(i).iter().enumerate() {
            if j <= i {
                entries.push((i, j, a.values()[p.indptr()[i] + idx]));
            }
        }
    }
    let mut s = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
    writeln!(s, "{} {} {}", a.dim(), a.dim(), entries.len()).unwrap();
    for (i, j, v) in entries {
        writeln!(s, "{} {} {:e}", i + 1, j + 1, v.to_f64_lossy()).unwrap();
    }
    s
}
