//! Bound states of the Robin Laplacian on infinite sectors at unit Robin
//! parameter, computed on truncated sectors with a Dirichlet outer arc, and
//! the model sum over the convex corners of a polygon.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eig::{count_below, solve_lowest_with, SolverOptions};
use crate::error::{Error, Result};
use crate::fem::{assemble, DofMap, Order, SpectralPencil};
use crate::geometry::{CurvilinearPolygon, Point, SectorGeometry};
use crate::mesh::{mesh_sector_with, refine_uniform, BoundaryEdge, SizeField, TriMesh};

/// Bottom of the essential spectrum of every sector at unit Robin parameter.
pub const ESSENTIAL_THRESHOLD: f64 = -1.0;

/// Ground state of the sector of half-angle `alpha` at unit Robin
/// parameter, `−1/sin²α`, for `alpha < π/2`.
pub fn ground_state(alpha: f64) -> f64 {
    -1.0 / alpha.sin().powi(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorOptions {
    /// Target decay of the slowest kept eigenfunction at the outer arc.
    pub tau: f64,
    /// Safety margin in the decay rate.
    pub epsilon: f64,
    /// Mesh size at the tip.
    pub h_tip: f64,
    /// Increase of the mesh size per unit distance from the tip.
    pub growth: f64,
    pub h_max: f64,
    /// Uniform refinements of the base mesh.
    pub levels: u32,
    pub degree: u32,
    pub max_radius: f64,
    pub node_cap: usize,
}

impl Default for SectorOptions {
    fn default() -> Self {
        SectorOptions {
            tau: 1e-8,
            epsilon: 0.1,
            h_tip: 0.2,
            growth: 0.12,
            h_max: 6.0,
            levels: 1,
            degree: 2,
            max_radius: 200.0,
            node_cap: 400_000,
        }
    }
}

impl SectorOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tau > 0.0
            && self.tau < 1.0
            && self.epsilon >= 0.0
            && self.epsilon < 1.0
            && self.h_tip > 0.0
            && self.growth >= 0.0
            && self.h_max >= self.h_tip
            && self.max_radius > 0.0;
        if !ok {
            return Err(Error::InvalidArgument(format!("invalid sector options {self:?}")));
        }
        Order::from_degree(self.degree)?;
        Ok(())
    }

    /// Truncation radius at which an eigenfunction with eigenvalue `e` has
    /// decayed to `tau`, capped at `max_radius`.
    pub fn radius_for(&self, e: f64) -> f64 {
        let rate = (ESSENTIAL_THRESHOLD - e).max(0.0).sqrt();
        if rate == 0.0 {
            return self.max_radius;
        }
        ((1.0 / self.tau).ln() / ((1.0 - self.epsilon) * rate)).min(self.max_radius)
    }

    fn size_field(&self) -> SizeField {
        let (h0, g, hmax) = (self.h_tip, self.growth, self.h_max);
        SizeField::uniform(hmax).with_custom(move |p: Point| (h0 + g * p.norm()).min(hmax))
    }
}

/// Truncated-sector mesh, its degrees of freedom and the eigenvectors as
/// global coefficient vectors.
#[derive(Debug)]
pub struct SectorField {
    pub mesh: TriMesh,
    pub dofs: DofMap,
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SectorSpectrum {
    pub alpha: f64,
    pub truncation_radius: f64,
    /// Eigenvalues below the essential threshold, ascending.
    pub eigenvalues: Vec<f64>,
    /// M-orthonormal eigenvectors on the unconstrained degrees of freedom of
    /// the radius-R mesh.
    pub eigenvectors: Vec<Vec<f64>>,
    pub count: usize,
    /// `E_n(R) − E_n(2R)` per eigenvalue.
    pub truncation_error_estimate: Vec<f64>,
    /// Change of each eigenvalue under the last uniform refinement.
    pub fem_error_estimate: Vec<f64>,
    pub tol: f64,
    pub options: SectorOptions,
    pub mesh_nodes: usize,
    #[serde(skip)]
    field: OnceLock<Arc<SectorField>>,
}

impl Clone for SectorSpectrum {
    fn clone(&self) -> Self {
        SectorSpectrum {
            alpha: self.alpha,
            truncation_radius: self.truncation_radius,
            eigenvalues: self.eigenvalues.clone(),
            eigenvectors: self.eigenvectors.clone(),
            count: self.count,
            truncation_error_estimate: self.truncation_error_estimate.clone(),
            fem_error_estimate: self.fem_error_estimate.clone(),
            tol: self.tol,
            options: self.options.clone(),
            mesh_nodes: self.mesh_nodes,
            field: self.field.clone(),
        }
    }
}

impl SectorSpectrum {
    fn empty(alpha: f64, tol: f64, options: SectorOptions) -> Self {
        SectorSpectrum {
            alpha,
            truncation_radius: 0.0,
            eigenvalues: Vec::new(),
            eigenvectors: Vec::new(),
            count: 0,
            truncation_error_estimate: Vec::new(),
            fem_error_estimate: Vec::new(),
            tol,
            options,
            mesh_nodes: 0,
            field: OnceLock::new(),
        }
    }

    /// Combined truncation and discretization uncertainty of eigenvalue `i`.
    pub fn uncertainty(&self, i: usize) -> f64 {
        self.truncation_error_estimate[i].abs() + self.fem_error_estimate[i].abs()
    }

    /// Mesh and eigenvector field, rebuilt on first use after loading from
    /// a cache.
    pub fn field(&self) -> Result<Arc<SectorField>> {
        if let Some(f) = self.field.get() {
            return Ok(f.clone());
        }
        if self.eigenvalues.is_empty() {
            return Err(Error::InvalidArgument(format!("sector with half-angle {} has no bound states", self.alpha)));
        }
        let mesh = sector_mesh(self.alpha, self.truncation_radius, &self.options, self.options.levels)?;
        let dofs = DofMap::new(&mesh, Order::from_degree(self.options.degree)?);
        if self.eigenvectors.iter().any(|v| v.len() != dofs.num_free()) {
            return Err(Error::InvalidMesh("cached sector eigenvectors do not match the rebuilt mesh".into()));
        }
        let vectors = self.eigenvectors.iter().map(|v| dofs.expand(v)).collect();
        let f = Arc::new(SectorField { mesh, dofs, vectors });
        Ok(self.field.get_or_init(|| f).clone())
    }
}

fn sector_mesh(alpha: f64, radius: f64, opts: &SectorOptions, levels: u32) -> Result<TriMesh> {
    let sec = SectorGeometry::new(alpha, radius)?;
    let mut mesh = mesh_sector_with(&sec, &opts.size_field(), opts.node_cap)?;
    for _ in 0..levels {
        mesh = refine_uniform(&mesh);
        if mesh.num_nodes() > opts.node_cap {
            return Err(Error::BudgetExceeded { nodes: mesh.num_nodes(), cap: opts.node_cap });
        }
    }
    Ok(mesh)
}

struct Solve {
    mesh: TriMesh,
    pencil: SpectralPencil<f64>,
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

fn solve_sector(alpha: f64, radius: f64, tol: f64, opts: &SectorOptions, levels: u32) -> Result<Solve> {
    let mesh = sector_mesh(alpha, radius, opts, levels)?;
    let pencil = assemble::<f64>(&mesh, Order::from_degree(opts.degree)?)?;
    let cutoff = ESSENTIAL_THRESHOLD * (1.0 - 10.0 * tol);
    let count = count_below(&pencil, 1.0, cutoff)?;
    let (values, vectors) = if count == 0 {
        (Vec::new(), Vec::new())
    } else {
        let so = SolverOptions { prediction: Some(ground_state(alpha)), ..SolverOptions::default() };
        let r = solve_lowest_with(&pencil, 1.0, count, tol.min(1e-10), &so)?;
        (r.eigenvalues, r.eigenvectors)
    };
    Ok(Solve { mesh, pencil, values, vectors })
}

/// Bound states of the sector of half-angle `alpha` with default options.
pub fn sector_spectrum(alpha: f64, tol: f64) -> Result<SectorSpectrum> {
    sector_spectrum_with(alpha, tol, &SectorOptions::default())
}

pub fn sector_spectrum_with(alpha: f64, tol: f64, opts: &SectorOptions) -> Result<SectorSpectrum> {
    if !(alpha > 0.0) || !alpha.is_finite() || alpha >= std::f64::consts::PI {
        return Err(Error::InvalidArgument(format!("sector half-angle must lie in (0, pi), got {alpha}")));
    }
    if !(tol > 0.0 && tol < 0.1) {
        return Err(Error::InvalidArgument(format!("tolerance must lie in (0, 0.1), got {tol}")));
    }
    opts.validate()?;
    if alpha >= FRAC_PI_2 {
        return Ok(SectorSpectrum::empty(alpha, tol, opts.clone()));
    }

    // the radius must also cover the slowest decaying kept eigenfunction
    let mut radius = opts.radius_for(ground_state(alpha));
    let mut fine = solve_sector(alpha, radius, tol, opts, opts.levels)?;
    for _ in 0..3 {
        let Some(&shallow) = fine.values.last() else { break };
        let needed = opts.radius_for(shallow);
        if needed <= radius * (1.0 + 1e-9) {
            break;
        }
        radius = needed;
        fine = solve_sector(alpha, radius, tol, opts, opts.levels)?;
    }
    let count = fine.values.len();

    let doubled = solve_sector(alpha, 2.0 * radius, tol, opts, opts.levels)?;
    if doubled.values.len() != count {
        return Err(Error::UnstableCount { at_r: count, at_2r: doubled.values.len() });
    }
    let truncation_error_estimate = fine.values.iter().zip(&doubled.values).map(|(a, b)| a - b).collect();

    let fem_error_estimate = if opts.levels > 0 && count > 0 {
        let coarse = solve_sector(alpha, radius, tol, opts, opts.levels - 1)?;
        fine.values.iter().enumerate().map(|(i, e)| coarse.values.get(i).map_or(f64::INFINITY, |c| c - e)).collect()
    } else {
        vec![0.0; count]
    };

    let dofs = fine.pencil.dofs.clone();
    let field = SectorField {
        vectors: fine.vectors.iter().map(|v| dofs.expand(v)).collect(),
        dofs: (*dofs).clone(),
        mesh: fine.mesh,
    };
    let mesh_nodes = field.mesh.num_nodes();
    let spectrum = SectorSpectrum {
        alpha,
        truncation_radius: radius,
        eigenvalues: fine.values,
        eigenvectors: fine.vectors,
        count,
        truncation_error_estimate,
        fem_error_estimate,
        tol,
        options: opts.clone(),
        mesh_nodes,
        field: OnceLock::new(),
    };
    let _ = spectrum.field.set(Arc::new(field));
    Ok(spectrum)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// JSON file cache of sector spectra keyed by half-angle, tolerance and
/// options.
#[derive(Debug, Clone)]
pub struct SectorCache {
    dir: PathBuf,
}

impl SectorCache {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        std::fs::create_dir_all(dir.as_ref())?;
        Ok(SectorCache { dir: dir.as_ref().to_path_buf() })
    }

    fn path(&self, alpha: f64, tol: f64, opts: &SectorOptions) -> Result<PathBuf> {
        let key = serde_json::to_string(&(tol.to_bits(), opts))?;
        Ok(self.dir.join(format!("sector_{:016x}_{:016x}.json", alpha.to_bits(), fnv1a(key.as_bytes()))))
    }

    pub fn get_or_compute(&self, alpha: f64, tol: f64, opts: &SectorOptions) -> Result<SectorSpectrum> {
        let path = self.path(alpha, tol, opts)?;
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(s) = serde_json::from_str::<SectorSpectrum>(&text) {
                if s.alpha == alpha && s.tol == tol && &s.options == opts {
                    return Ok(s);
                }
            }
        }
        let s = sector_spectrum_with(alpha, tol, opts)?;
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec(&s)?)?;
        std::fs::rename(&tmp, &path)?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub alpha: f64,
    pub gamma: f64,
    /// Eigenvalues of the unit problem on the reference mesh.
    pub unit: Vec<f64>,
    /// Eigenvalues at `gamma` on the mesh scaled by `1/gamma`.
    pub scaled: Vec<f64>,
    /// `max |scaled − γ²·unit| / |γ²·unit|`.
    pub max_relative_deviation: f64,
}

/// Compares the problem at `gamma` on the `1/gamma`-scaled mesh with `γ²`
/// times the unit problem on the reference mesh.
pub fn scaling_check(alpha: f64, gamma: f64) -> Result<ScalingReport> {
    scaling_check_with(alpha, gamma, &SectorOptions { levels: 0, ..SectorOptions::default() })
}

pub fn scaling_check_with(alpha: f64, gamma: f64, opts: &SectorOptions) -> Result<ScalingReport> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    if !(alpha > 0.0 && alpha < FRAC_PI_2) {
        return Err(Error::InvalidArgument(format!("scaling check needs a half-angle in (0, pi/2), got {alpha}")));
    }
    opts.validate()?;
    let radius = opts.radius_for(ground_state(alpha));
    let mesh = sector_mesh(alpha, radius, opts, opts.levels)?;
    let order = Order::from_degree(opts.degree)?;
    let nodes = mesh.nodes().iter().map(|&p| p * (1.0 / gamma)).collect();
    let edges = mesh.boundary_edges().iter().map(|e| BoundaryEdge { curve: None, ..*e }).collect();
    let scaled_mesh = TriMesh::from_parts(nodes, mesh.triangles().to_vec(), edges, Vec::new())?;

    let unit_p = assemble::<f64>(&mesh, order)?;
    let scaled_p = assemble::<f64>(&scaled_mesh, order)?;
    let n = count_below(&unit_p, 1.0, ESSENTIAL_THRESHOLD)?.max(1);
    let so = SolverOptions { prediction: Some(ground_state(alpha)), ..SolverOptions::default() };
    let unit = solve_lowest_with(&unit_p, 1.0, n, 1e-12, &so)?.eigenvalues;
    let so = SolverOptions { prediction: Some(gamma * gamma * ground_state(alpha)), ..so };
    let scaled = solve_lowest_with(&scaled_p, gamma, n, 1e-12, &so)?.eigenvalues;
    let max_relative_deviation = unit
        .iter()
        .zip(&scaled)
        .map(|(u, s)| (s - gamma * gamma * u).abs() / (gamma * gamma * u).abs())
        .fold(0.0, f64::max);
    Ok(ScalingReport { alpha, gamma, unit, scaled, max_relative_deviation })
}

/// Group of equal model eigenvalues: `(n, v)` pairs with `E_n(T_v) = λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub lambda: f64,
    /// `(n, v)` with `n` counted from 1 and `v` an index into the polygon's
    /// vertex list.
    pub members: Vec<(usize, usize)>,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSum {
    pub per_vertex: BTreeMap<usize, Arc<SectorSpectrum>>,
    pub n_total: usize,
    pub clusters: Vec<Cluster>,
    /// Largest model eigenvalue; `None` without convex vertices.
    pub e_max: Option<f64>,
    pub cluster_tol: f64,
}

impl ModelSum {
    /// All model eigenvalues ascending, with multiplicity.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> =
            self.clusters.iter().flat_map(|c| std::iter::repeat_n(c.lambda, c.multiplicity)).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Model eigenvalue `E_n(T_v)` itself rather than its cluster mean.
    pub fn vertex_eigenvalue(&self, v: usize, n: usize) -> Option<f64> {
        self.per_vertex.get(&v).and_then(|s| s.eigenvalues.get(n.checked_sub(1)?).copied())
    }

    pub fn cluster_of(&self, v: usize, n: usize) -> Option<&Cluster> {
        self.clusters.iter().find(|c| c.members.contains(&(n, v)))
    }
}

#[derive(Debug, Clone, Default)]
pub struct ModelOptions {
    pub sector: SectorOptions,
    pub cache: Option<SectorCache>,
}

/// One model eigenvalue `E_n(T_v)` with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub value: f64,
    pub n: usize,
    pub vertex: usize,
    pub uncertainty: f64,
}

/// Groups model eigenvalues whose neighbours lie within ten times the
/// largest uncertainty. Returns the clusters and that tolerance.
pub fn form_clusters(entries: &[ModelEntry]) -> Result<(Vec<Cluster>, f64)> {
    let mut entries = entries.to_vec();
    entries.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.vertex.cmp(&b.vertex)).then(a.n.cmp(&b.n)));
    let uncertainty = entries.iter().map(|e| e.uncertainty.abs().max(1e-12 * e.value.abs())).fold(0.0, f64::max);
    let cluster_tol = 10.0 * uncertainty;

    let mut clusters: Vec<Cluster> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();
    let mut prev: Option<f64> = None;
    for e in &entries {
        let gap = prev.map_or(f64::INFINITY, |p| e.value - p);
        if gap > uncertainty && gap <= cluster_tol {
            return Err(Error::AmbiguousClusters(format!(
                "model eigenvalues {} and {} are {gap:.3e} apart, between the uncertainty {uncertainty:.3e} and \
                 the cluster tolerance {cluster_tol:.3e}; merged they form one cluster, split they form two",
                prev.unwrap_or(f64::NAN),
                e.value
            )));
        }
        if gap <= cluster_tol {
            let c = clusters.last_mut().expect("a previous entry exists");
            c.members.push((e.n, e.vertex));
            c.multiplicity += 1;
            *sums.last_mut().expect("a previous entry exists") += e.value;
        } else {
            clusters.push(Cluster { lambda: e.value, members: vec![(e.n, e.vertex)], multiplicity: 1 });
            sums.push(e.value);
        }
        prev = Some(e.value);
    }
    for (c, s) in clusters.iter_mut().zip(sums) {
        c.lambda = s / c.multiplicity as f64;
    }
    Ok((clusters, cluster_tol))
}

pub fn build_model_sum(poly: &CurvilinearPolygon, tol: f64) -> Result<ModelSum> {
    build_model_sum_with(poly, tol, &ModelOptions::default())
}

pub fn build_model_sum_with(poly: &CurvilinearPolygon, tol: f64, opts: &ModelOptions) -> Result<ModelSum> {
    let convex: Vec<usize> = (0..poly.vertices().len()).filter(|&i| poly.vertices()[i].is_convex).collect();
    let mut angles: Vec<f64> = Vec::new();
    let mut angle_of = Vec::with_capacity(convex.len());
    for &i in &convex {
        let a = poly.vertices()[i].half_angle;
        let k = match angles.iter().position(|b| (a - b).abs() <= 1e-12) {
            Some(k) => k,
            None => {
                angles.push(a);
                angles.len() - 1
            }
        };
        angle_of.push(k);
    }
    let spectra: Vec<Arc<SectorSpectrum>> = angles
        .par_iter()
        .map(|&a| {
            let s = match &opts.cache {
                Some(c) => c.get_or_compute(a, tol, &opts.sector)?,
                None => sector_spectrum_with(a, tol, &opts.sector)?,
            };
            Ok(Arc::new(s))
        })
        .collect::<Result<_>>()?;
    let per_vertex: BTreeMap<usize, Arc<SectorSpectrum>> =
        convex.iter().zip(&angle_of).map(|(&v, &k)| (v, spectra[k].clone())).collect();

    let mut entries: Vec<ModelEntry> = Vec::new();
    for (&v, s) in &per_vertex {
        for (i, &e) in s.eigenvalues.iter().enumerate() {
            entries.push(ModelEntry { value: e, n: i + 1, vertex: v, uncertainty: s.uncertainty(i) });
        }
    }
    let (clusters, cluster_tol) = form_clusters(&entries)?;
    let n_total = entries.len();
    let e_max = clusters.last().map(|c| c.lambda);
    Ok(ModelSum { per_vertex, n_total, clusters, e_max, cluster_tol })
}
