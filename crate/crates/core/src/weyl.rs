//! Eigenvalue counts of the Robin Laplacian against the two boundary Weyl
//! laws, and the eigenvalues just above the corner cluster.
//!
//! Counts come from matrix inertia on meshes refined in a layer along the
//! boundary, where all eigenfunctions below `−γ²·c` for `c > 0` live. A
//! count is accepted once two successive uniform refinements agree.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eig::{count_below, solve_lowest};
use crate::error::{Error, Result};
use crate::fem::{assemble, Order};
use crate::fit::{linear_fit, power_fit};
use crate::geometry::CurvilinearPolygon;
use crate::mesh::{mesh_domain, refine_uniform, MeshOptions, SizeField, TriMesh};
use crate::sector::build_model_sum;

/// Meshes above this many nodes are solved one at a time.
const LARGE_MESH: usize = 20_000;
static LARGE_SOLVE: Mutex<()> = Mutex::new(());

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Threshold `Eγ²` with `E ∈ (−1, 0)`.
    Bulk,
    /// Threshold `−γ² + λγ`.
    Edge,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Bulk => "bulk",
            Regime::Edge => "edge",
        }
    }

    pub fn threshold(self, parameter: f64, gamma: f64) -> f64 {
        match self {
            Regime::Bulk => parameter * gamma * gamma,
            Regime::Edge => -gamma * gamma + parameter * gamma,
        }
    }

    /// Leading term of the counting function at the threshold.
    pub fn prediction(self, poly: &CurvilinearPolygon, parameter: f64, gamma: f64) -> f64 {
        match self {
            Regime::Bulk => gamma * poly.perimeter() * (parameter + 1.0).max(0.0).sqrt() / PI,
            Regime::Edge => gamma.sqrt() / PI * poly.curvature_integral(parameter),
        }
    }
}

/// Boundary-layer meshes for counting at Robin parameter `γ`: size
/// `coarse/γ` within `layer_width/γ` of the boundary, refined uniformly
/// until the layer size is at most `fine/γ` and two counts agree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylPolicy {
    pub coarse: f64,
    pub fine: f64,
    pub layer_width: f64,
    /// Interior size relative to `√area`.
    pub background: f64,
    pub order: Order,
    pub node_cap: usize,
}

impl Default for WeylPolicy {
    fn default() -> Self {
        WeylPolicy { coarse: 0.4, fine: 0.1, layer_width: 3.0, background: 0.1, order: Order::P2, node_cap: 200_000 }
    }
}

impl WeylPolicy {
    pub fn validate(&self) -> Result<()> {
        let ok = self.fine > 0.0
            && self.coarse >= self.fine
            && self.layer_width > 0.0
            && self.background > 0.0
            && self.node_cap > 0
            && [self.coarse, self.layer_width, self.background].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid Weyl mesh policy {self:?}")))
        }
    }

    /// Initial mesh for `gamma`.
    pub fn mesh(&self, poly: &CurvilinearPolygon, gamma: f64) -> Result<TriMesh> {
        self.validate()?;
        check_gamma(gamma)?;
        let h_b = self.coarse / gamma;
        let interior = (self.background * poly.area().sqrt()).max(h_b);
        let size = SizeField::uniform(interior).with_boundary_layer(poly, h_b, self.layer_width / gamma);
        mesh_domain(poly, &size, &MeshOptions { node_cap: self.node_cap, ..MeshOptions::default() })
    }

    /// Mesh with layer size at most `fine/γ`, for eigenvalue solves.
    pub fn fine_mesh(&self, poly: &CurvilinearPolygon, gamma: f64) -> Result<(TriMesh, f64)> {
        let (mut mesh, mut h) = (self.mesh(poly, gamma)?, self.coarse / gamma);
        while h > self.fine / gamma * (1.0 + 1e-12) {
            mesh = self.refine(&mesh)?;
            h *= 0.5;
        }
        Ok((mesh, h))
    }

    fn refine(&self, mesh: &TriMesh) -> Result<TriMesh> {
        let edges = (3 * mesh.num_triangles() + mesh.boundary_edges().len()) / 2;
        let nodes = mesh.num_nodes() + edges;
        if nodes > self.node_cap {
            return Err(Error::BudgetExceeded { nodes, cap: self.node_cap });
        }
        Ok(refine_uniform(mesh))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")))
    }
}

fn with_budget<R>(nodes: usize, f: impl FnOnce() -> Result<R>) -> Result<R> {
    if nodes > LARGE_MESH {
        let _guard = LARGE_SOLVE.lock().unwrap_or_else(|e| e.into_inner());
        f()
    } else {
        f()
    }
}

/// A count at one `γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub gamma: f64,
    pub threshold: f64,
    pub count: usize,
    pub prediction: f64,
    /// `count − prediction`.
    pub deviation: f64,
    /// Layer size of the final mesh.
    pub mesh_h: f64,
    pub mesh_nodes: usize,
    pub stabilized: bool,
    /// Counts on the successive meshes.
    pub history: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylReport {
    pub regime: Regime,
    /// `E` for the bulk regime, `λ` for the edge regime.
    pub parameter: f64,
    pub sweep: Vec<SweepPoint>,
    /// Slope of `log count` against `log γ`, when every count is positive.
    pub fitted_exponent: Option<f64>,
}

impl WeylReport {
    pub const CSV_HEADER: &'static str = "regime,gamma,threshold,count,prediction,deviation,mesh_nodes,stabilized";

    /// Rows under [`Self::CSV_HEADER`].
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(Self::CSV_HEADER);
        s.push('\n');
        for p in &self.sweep {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                self.regime.name(),
                p.gamma,
                p.threshold,
                p.count,
                p.prediction,
                p.deviation,
                p.mesh_nodes,
                p.stabilized
            );
        }
        s
    }

    pub fn all_stabilized(&self) -> bool {
        self.sweep.iter().all(|p| p.stabilized)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableCount {
    pub count: usize,
    pub mesh_h: f64,
    pub mesh_nodes: usize,
    pub stabilized: bool,
    pub history: Vec<usize>,
}

/// Count below `threshold` at `gamma`, refined until stable. Hitting the node
/// cap after at least two counts returns an unstabilized count.
pub fn stabilized_count(
    poly: &CurvilinearPolygon,
    gamma: f64,
    threshold: f64,
    policy: &WeylPolicy,
) -> Result<StableCount> {
    let mut mesh = policy.mesh(poly, gamma)?;
    let mut h = policy.coarse / gamma;
    let mut history = Vec::new();
    loop {
        let pencil = assemble::<f64>(&mesh, policy.order)?;
        let count = with_budget(mesh.num_nodes(), || count_below(&pencil, gamma, threshold))?;
        history.push(count);
        let n = history.len();
        let fine = h <= policy.fine / gamma * (1.0 + 1e-12);
        if fine && n >= 2 && history[n - 1] == history[n - 2] {
            return Ok(StableCount { count, mesh_h: h, mesh_nodes: mesh.num_nodes(), stabilized: true, history });
        }
        match policy.refine(&mesh) {
            Ok(m) => mesh = m,
            Err(Error::BudgetExceeded { .. }) if n >= 2 => {
                return Ok(StableCount { count, mesh_h: h, mesh_nodes: mesh.num_nodes(), stabilized: false, history })
            }
            Err(e) => return Err(e),
        }
        h *= 0.5;
    }
}

fn sweep(
    poly: &CurvilinearPolygon,
    regime: Regime,
    parameter: f64,
    gammas: &[f64],
    policy: &WeylPolicy,
) -> Result<WeylReport> {
    policy.validate()?;
    if gammas.is_empty() {
        return Err(Error::InvalidArgument("empty gamma sweep".into()));
    }
    gammas.iter().try_for_each(|&g| check_gamma(g))?;
    let sweep = gammas
        .par_iter()
        .map(|&gamma| {
            let threshold = regime.threshold(parameter, gamma);
            let prediction = regime.prediction(poly, parameter, gamma);
            let c = stabilized_count(poly, gamma, threshold, policy)?;
            Ok(SweepPoint {
                gamma,
                threshold,
                count: c.count,
                prediction,
                deviation: c.count as f64 - prediction,
                mesh_h: c.mesh_h,
                mesh_nodes: c.mesh_nodes,
                stabilized: c.stabilized,
                history: c.history,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fitted_exponent = if sweep.len() >= 2 && sweep.iter().all(|p| p.count > 0) {
        let g: Vec<f64> = sweep.iter().map(|p| p.gamma).collect();
        let c: Vec<f64> = sweep.iter().map(|p| p.count as f64).collect();
        power_fit(&g, &c).ok().map(|f| f.slope)
    } else {
        None
    };
    Ok(WeylReport { regime, parameter, sweep, fitted_exponent })
}

/// Counts below `Eγ²` against `γ|∂Ω|√(E+1)/π`.
pub fn weyl_bulk(poly: &CurvilinearPolygon, e: f64, gammas: &[f64], policy: &WeylPolicy) -> Result<WeylReport> {
    if !(e > -1.0 && e < 0.0) {
        return Err(Error::InvalidArgument(format!("bulk energy must lie in (-1, 0), got {e}")));
    }
    sweep(poly, Regime::Bulk, e, gammas, policy)
}

/// Counts below `−γ² + λγ` against `(√γ/π)·Σ∫√((κ+λ)₊)`.
pub fn weyl_edge(poly: &CurvilinearPolygon, lambda: f64, gammas: &[f64], policy: &WeylPolicy) -> Result<WeylReport> {
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("edge parameter must be finite, got {lambda}")));
    }
    sweep(poly, Regime::Edge, lambda, gammas, policy)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub gamma: f64,
    pub eigenvalue: f64,
    /// `eigenvalue / γ²`.
    pub ratio: f64,
    pub mesh_nodes: usize,
}

/// `E_{𝒩+j}` over a sweep, where `𝒩` counts the model eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub j: usize,
    pub model_count: usize,
    pub sweep: Vec<TailPoint>,
    /// Intercept of `E/γ²` fitted linearly in `1/γ`.
    pub limit_estimate: f64,
    /// `|E/γ² + 1|` decreases along the sweep.
    pub trending: bool,
}

/// Eigenvalue number `𝒩 + j` on the fine boundary-layer mesh of each `γ`.
pub fn tail_bracket(poly: &CurvilinearPolygon, j: usize, gammas: &[f64], policy: &WeylPolicy) -> Result<TailReport> {
    if j == 0 {
        return Err(Error::InvalidArgument("tail index j must be at least 1".into()));
    }
    if gammas.len() < 2 {
        return Err(Error::InvalidArgument("tail sweep needs two or more gamma values".into()));
    }
    gammas.iter().try_for_each(|&g| check_gamma(g))?;
    let model_count = build_model_sum(poly, 1e-6)?.n_total;
    let k = model_count + j;
    let sweep = gammas
        .par_iter()
        .map(|&gamma| {
            let (mesh, _) = policy.fine_mesh(poly, gamma)?;
            let pencil = assemble::<f64>(&mesh, policy.order)?;
            let sol = with_budget(mesh.num_nodes(), || solve_lowest(&pencil, gamma, k, 1e-10))?;
            let eigenvalue = sol.eigenvalues[k - 1];
            Ok(TailPoint { gamma, eigenvalue, ratio: eigenvalue / (gamma * gamma), mesh_nodes: mesh.num_nodes() })
        })
        .collect::<Result<Vec<_>>>()?;
    let inv: Vec<f64> = sweep.iter().map(|p| 1.0 / p.gamma).collect();
    let ratios: Vec<f64> = sweep.iter().map(|p| p.ratio).collect();
    let limit_estimate = linear_fit(&inv, &ratios)?.intercept;
    let mut order: Vec<&TailPoint> = sweep.iter().collect();
    order.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
    let trending = order.windows(2).all(|w| (w[1].ratio + 1.0).abs() <= (w[0].ratio + 1.0).abs());
    Ok(TailReport { j, model_count, sweep, limit_estimate, trending })
}
