//! Corner quasi-modes: sector eigenfunctions transplanted to the corners of
//! a polygon through the tangent frame, cut off smoothly, and measured
//! against the discrete pencil. Families of quasi-modes sharing a model
//! eigenvalue yield Gramian certificates for the true spectrum.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eig::count_below;
use crate::error::{Error, Result};
use crate::fem::{DofMap, SpectralPencil};
use crate::geometry::{CurvilinearPolygon, Point};
use crate::linalg::dense::{cholesky, sym_eigen};
use crate::linalg::sparse::{axpy, dot};
use crate::linalg::{LdlFactor, Symbolic};
use crate::mesh::{mesh_domain, MeshOptions, PointLocator, SizeField, TriMesh};
use crate::sector::ModelSum;

/// Exponent of the curvilinear cutoff radius `γ^{−β}`.
pub const DEFAULT_BETA: f64 = 2.0 / 3.0;

/// Gramians closer than this to the identity count as orthonormal.
const ORTHONORMAL_TOL: f64 = 1e-10;
/// Smallest admissible `β_min/β_max`.
const GRAMIAN_RCOND: f64 = 1e-10;
/// Cell size at a corner, in units of `1/γ`.
const CORNER_CELL: f64 = 0.1;
/// Growth of the cell size away from a corner.
const CORNER_SLOPE: f64 = 0.1;
/// Background cell size.
const BACKGROUND_H: f64 = 0.1;

/// Angular slack when checking that a support stays in the tangent wedge.
const WEDGE_TOL: f64 = 1e-9;

/// C² quintic step: 1 on `[0, 1]`, 0 on `[2, ∞)`.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        let s = t - 1.0;
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub center: Point,
    pub inner_radius: f64,
}

impl Cutoff {
    pub fn value(&self, p: Point) -> f64 {
        smoothstep(p.dist(self.center) / self.inner_radius)
    }

    pub fn support_radius(&self) -> f64 {
        2.0 * self.inner_radius
    }
}

/// How the cutoff radius is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CutoffRule {
    /// Half of the smallest corner separation radius ρ_v, independent of γ.
    Rho,
    /// `γ^{−β}`.
    Power { beta: f64 },
}

impl CutoffRule {
    /// `Rho` for straight polygons, `Power` with exponent `beta` otherwise.
    pub fn for_polygon(poly: &CurvilinearPolygon, beta: f64) -> Self {
        if poly.is_straight() {
            CutoffRule::Rho
        } else {
            CutoffRule::Power { beta }
        }
    }

    pub fn inner_radius(&self, poly: &CurvilinearPolygon, gamma: f64) -> f64 {
        match *self {
            CutoffRule::Rho => {
                let rho = poly.vertices().iter().map(|v| v.rho).fold(f64::INFINITY, f64::min);
                if rho.is_finite() {
                    0.5 * rho
                } else {
                    0.25 * poly.perimeter() / std::f64::consts::PI
                }
            }
            CutoffRule::Power { beta } => gamma.powf(-beta),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuasiMode {
    /// Index into the polygon's vertex list.
    pub vertex: usize,
    /// Sector eigenvalue index, from 1.
    pub index: usize,
    pub gamma: f64,
    /// Coefficients on the unconstrained degrees of freedom.
    pub dof_vector: Vec<f64>,
    /// `γ²·E_n(T_v)`.
    pub lambda_target: f64,
    pub cutoff: Cutoff,
}

/// Size field fine enough to carry transplanted sector eigenfunctions:
/// `0.1/γ` at every convex corner, growing with slope 0.1.
pub fn resolved_size_field(poly: &CurvilinearPolygon, gamma: f64) -> SizeField {
    let corners: Vec<Point> = poly.convex_vertices().iter().map(|v| v.position).collect();
    let h0 = CORNER_CELL / gamma;
    SizeField::uniform(BACKGROUND_H)
        .with_custom(move |p| corners.iter().map(|&c| h0 + CORNER_SLOPE * p.dist(c)).fold(f64::INFINITY, f64::min))
}

/// Robin mesh of `poly` with [`resolved_size_field`].
pub fn resolved_mesh(poly: &CurvilinearPolygon, gamma: f64) -> Result<TriMesh> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    mesh_domain(poly, &resolved_size_field(poly, gamma), &MeshOptions::default())
}

fn check_supports(poly: &CurvilinearPolygon, model: &ModelSum, radius: f64, gamma: f64) -> Result<()> {
    let corners: Vec<Point> = model.per_vertex.keys().map(|&v| poly.vertices()[v].position).collect();
    for i in 0..corners.len() {
        for j in i + 1..corners.len() {
            let d = corners[i].dist(corners[j]);
            if 4.0 * radius > d * (1.0 + 1e-12) {
                return Err(Error::OverlappingSupports(format!(
                    "support radius {:.4} at gamma {gamma} overlaps corners {:.4} apart",
                    2.0 * radius,
                    d
                )));
            }
        }
    }
    Ok(())
}

/// Transplants `ψ_n` of the sector at vertex `v` onto the degrees of
/// freedom of `dofs`.
pub fn build_quasimode(
    poly: &CurvilinearPolygon,
    dofs: &DofMap,
    model: &ModelSum,
    v: usize,
    n: usize,
    gamma: f64,
    rule: CutoffRule,
) -> Result<QuasiMode> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    let spectrum = model
        .per_vertex
        .get(&v)
        .ok_or_else(|| Error::InvalidArgument(format!("vertex {v} carries no sector spectrum")))?;
    let e_n = *spectrum
        .eigenvalues
        .get(n.wrapping_sub(1))
        .ok_or_else(|| Error::InvalidArgument(format!("vertex {v} has no sector eigenvalue number {n}")))?;
    let radius = rule.inner_radius(poly, gamma);
    check_supports(poly, model, radius, gamma)?;

    let vertex = &poly.vertices()[v];
    let frame = poly.tangent_frame(vertex)?;
    let cutoff = Cutoff { center: vertex.position, inner_radius: radius };
    let field = spectrum.field()?;
    let psi = &field.vectors[n - 1];
    let locator = PointLocator::new(&field.mesh);
    let alpha = spectrum.alpha;
    let reach = spectrum.truncation_radius;
    let clamp = matches!(rule, CutoffRule::Power { .. });

    let mut x = vec![0.0; dofs.num_free()];
    for (g, &p) in dofs.positions().iter().enumerate() {
        let Some(i) = dofs.free(g) else { continue };
        let chi = cutoff.value(p);
        if chi == 0.0 {
            continue;
        }
        let mut y = frame.apply(p) * gamma;
        let (r, theta) = (y.norm(), y.angle());
        if r >= reach {
            continue;
        }
        if r > 0.0 && theta.abs() > alpha + WEDGE_TOL {
            if !clamp {
                return Err(Error::SupportOutsideWedge(format!(
                    "point ({:.6}, {:.6}) at angle {theta:.6} outside half-angle {alpha:.6} of vertex {v}",
                    p.x, p.y
                )));
            }
            y = Point::polar(r, theta.clamp(-alpha, alpha));
        }
        if let Some((t, l)) = locator.locate(y) {
            x[i] = gamma * chi * field.dofs.evaluate(psi, t, l);
        }
    }
    Ok(QuasiMode { vertex: v, index: n, gamma, dof_vector: x, lambda_target: gamma * gamma * e_n, cutoff })
}

/// Quasi-modes for every `(n, v)` of the model sum.
pub fn build_all(
    poly: &CurvilinearPolygon,
    dofs: &DofMap,
    model: &ModelSum,
    gamma: f64,
    rule: CutoffRule,
) -> Result<Vec<QuasiMode>> {
    let pairs: Vec<(usize, usize)> = model.clusters.iter().flat_map(|c| c.members.iter().copied()).collect();
    pairs.par_iter().map(|&(n, v)| build_quasimode(poly, dofs, model, v, n, gamma, rule)).collect()
}

/// Residuals `‖M⁻¹r‖_M / ‖x‖_M` of `r = (K − γB − λM)x`, with one mass
/// matrix factorization shared across calls.
pub struct ResidualMeter {
    pencil: Arc<SpectralPencil<f64>>,
    mass: LdlFactor<f64>,
}

impl ResidualMeter {
    pub fn new(pencil: Arc<SpectralPencil<f64>>) -> Result<Self> {
        let sym = Arc::new(Symbolic::analyze(pencil.m.pattern())?);
        let floor = 1e-14 * pencil.m.norm_inf();
        let mass = LdlFactor::factor(&sym, &pencil.m, floor)
            .map_err(|e| Error::Breakdown(format!("mass matrix factorization: {e:?}")))?;
        Ok(ResidualMeter { pencil, mass })
    }

    pub fn pencil(&self) -> &SpectralPencil<f64> {
        &self.pencil
    }

    pub fn measure(&self, x: &[f64], gamma: f64, lambda: f64) -> Result<f64> {
        let p = &self.pencil;
        if x.len() != p.dim() {
            return Err(Error::InvalidArgument(format!(
                "vector of length {} for a pencil of dimension {}",
                x.len(),
                p.dim()
            )));
        }
        let mx = p.m.mul_vec(x);
        let norm2 = dot(x, &mx);
        if !(norm2 > 0.0) {
            return Err(Error::InvalidArgument("zero vector has no residual".into()));
        }
        let mut r = p.k.mul_vec(x);
        axpy(-gamma, &p.b.mul_vec(x), &mut r);
        axpy(-lambda, &mx, &mut r);
        let z = self.mass.solve(&r);
        Ok((dot(&r, &z).max(0.0) / norm2).sqrt())
    }
}

/// Normalized residual of a quasi-mode at its target eigenvalue.
pub fn residual(qm: &QuasiMode, pencil: &SpectralPencil<f64>, gamma: f64) -> Result<f64> {
    ResidualMeter::new(Arc::new(pencil.clone()))?.measure(&qm.dof_vector, gamma, qm.lambda_target)
}

/// Interval around `lambda` holding at least `n` eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub lambda: f64,
    pub n: usize,
    pub eta: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub halfwidth: f64,
    /// Eigenvalues of the pencil in the interval, from inertia at both ends.
    pub verified_count: usize,
}

impl Certificate {
    pub fn interval(&self) -> (f64, f64) {
        (self.lambda - self.halfwidth, self.lambda + self.halfwidth)
    }

    pub fn claim(&self) -> String {
        let (a, b) = self.interval();
        format!(">= {} eigenvalues in ({a}, {b})", self.n)
    }
}

/// Certificate from vectors with a common target `lambda` and their
/// normalized residuals.
pub fn certify_vectors(
    vectors: &[Vec<f64>],
    residuals: &[f64],
    lambda: f64,
    pencil: &SpectralPencil<f64>,
    gamma: f64,
) -> Result<Certificate> {
    let n = vectors.len();
    if n == 0 || residuals.len() != n {
        return Err(Error::InvalidArgument("certificate needs one residual per vector".into()));
    }
    let mv: Vec<Vec<f64>> = vectors.iter().map(|x| pencil.m.mul_vec(x)).collect();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = dot(&vectors[i], &mv[j]);
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    let eig = sym_eigen(n, &g)?;
    let (beta_min, beta_max) = (eig.values[0], eig.values[n - 1]);
    if !(beta_min > GRAMIAN_RCOND * beta_max) {
        return Err(Error::SingularGramian { beta_min });
    }
    let eta = residuals.iter().copied().fold(0.0, f64::max);
    let orthonormal =
        (0..n).all(|i| (0..n).all(|j| (g[i * n + j] - if i == j { 1.0 } else { 0.0 }).abs() <= ORTHONORMAL_TOL));
    let nf = n as f64;
    let halfwidth = if orthonormal { nf.sqrt() * eta } else { nf.powf(1.5) * eta * (beta_max / beta_min).sqrt() };
    let lo = count_below(pencil, gamma, lambda - halfwidth)?;
    let hi = count_below(pencil, gamma, lambda + halfwidth)?;
    Ok(Certificate { lambda, n, eta, beta_min, beta_max, halfwidth, verified_count: hi.saturating_sub(lo) })
}

/// Certificate for quasi-modes of one model cluster. Their targets must
/// agree to `lambda_tol`; the mean target is the center.
pub fn certify(qms: &[QuasiMode], pencil: &SpectralPencil<f64>, gamma: f64) -> Result<Certificate> {
    certify_with_tol(qms, pencil, gamma, 1e-6)
}

pub fn certify_with_tol(
    qms: &[QuasiMode],
    pencil: &SpectralPencil<f64>,
    gamma: f64,
    lambda_tol: f64,
) -> Result<Certificate> {
    if qms.is_empty() {
        return Err(Error::InvalidArgument("no quasi-modes to certify".into()));
    }
    let lambda = qms.iter().map(|q| q.lambda_target).sum::<f64>() / qms.len() as f64;
    if let Some(q) = qms.iter().find(|q| (q.lambda_target - lambda).abs() > lambda_tol * lambda.abs().max(1.0)) {
        return Err(Error::InvalidArgument(format!("quasi-mode targets differ: {} vs mean {lambda}", q.lambda_target)));
    }
    let meter = ResidualMeter::new(Arc::new(pencil.clone()))?;
    let residuals = qms.iter().map(|q| meter.measure(&q.dof_vector, gamma, lambda)).collect::<Result<Vec<_>>>()?;
    let vectors: Vec<Vec<f64>> = qms.iter().map(|q| q.dof_vector.clone()).collect();
    certify_vectors(&vectors, &residuals, lambda, pencil, gamma)
}

/// M-orthonormal basis of the span of `x` via the Cholesky factor of the
/// Gramian.
fn m_orthonormal_basis(x: &[Vec<f64>], m: &crate::linalg::CsrMatrix<f64>) -> Result<Vec<Vec<f64>>> {
    let k = x.len();
    let mx: Vec<Vec<f64>> = x.iter().map(|v| m.mul_vec(v)).collect();
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let v = dot(&x[i], &mx[j]);
            g[i * k + j] = v;
            g[j * k + i] = v;
        }
    }
    let eig = sym_eigen(k, &g)?;
    if !(eig.values[0] > GRAMIAN_RCOND * eig.values[k - 1]) {
        return Err(Error::RankDeficient);
    }
    let l = cholesky(k, &g).map_err(|_| Error::RankDeficient)?;
    // Q = X L^{-T}, column by column
    let dim = x[0].len();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut col = x[j].clone();
        for (i, qi) in q.iter().enumerate() {
            axpy(-l[j * k + i], qi, &mut col);
        }
        let d = l[j * k + j];
        col.iter_mut().for_each(|c| *c /= d);
        debug_assert_eq!(col.len(), dim);
        q.push(col);
    }
    Ok(q)
}

/// `d(F, E) = sup_{x∈F} dist_M(x, E)/‖x‖_M`, the largest principal-angle
/// sine from `F` into `E`.
pub fn subspace_distance(span_f: &[Vec<f64>], span_e: &[Vec<f64>], m: &crate::linalg::CsrMatrix<f64>) -> Result<f64> {
    if span_f.is_empty() || span_e.is_empty() {
        return Err(Error::RankDeficient);
    }
    let qf = m_orthonormal_basis(span_f, m)?;
    let qe = m_orthonormal_basis(span_e, m)?;
    let mqf: Vec<Vec<f64>> = qf.iter().map(|v| m.mul_vec(v)).collect();
    // residuals of projecting each F basis vector onto E
    let res: Vec<Vec<f64>> = qf
        .iter()
        .zip(&mqf)
        .map(|(f, mf)| {
            let mut r = f.clone();
            for e in &qe {
                axpy(-dot(e, mf), e, &mut r);
            }
            r
        })
        .collect();
    let k = res.len();
    let mr: Vec<Vec<f64>> = res.iter().map(|v| m.mul_vec(v)).collect();
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let v = dot(&res[i], &mr[j]);
            g[i * k + j] = v;
            g[j * k + i] = v;
        }
    }
    let top = sym_eigen(k, &g)?.values[k - 1];
    Ok(top.max(0.0).sqrt().min(1.0))
}
