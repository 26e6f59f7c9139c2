//! Triangular meshes of curvilinear polygons and truncated sectors, graded
//! toward corners, with Robin/Dirichlet boundary tags.

mod boundary;
mod cdt;
mod io;
mod locate;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryArc, CurvilinearPolygon, Point, SectorGeometry};

pub use io::{export_mesh, import_mesh, read_triangle, write_triangle};
pub use locate::PointLocator;

use boundary::{discretize_arc, BoundaryDistance};
use cdt::{Cdt, RefineParams, Segment};

/// Default upper bound on the number of mesh nodes.
pub const DEFAULT_NODE_CAP: usize = 1_500_000;
/// Triangles with smaller area are rejected.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;
/// Longest edges may exceed the local size by this factor, which admits a
/// right triangle with legs of the local size.
const SIZE_FACTOR: f64 = 1.45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    Robin,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Interior,
    Robin,
    Dirichlet,
}

/// Position of a boundary edge on an exact boundary arc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRef {
    pub arc: usize,
    pub s0: f64,
    pub s1: f64,
}

/// Boundary edge oriented with the domain on its left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
    pub curve: Option<CurveRef>,
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    node_kinds: Vec<NodeKind>,
    curves: Vec<BoundaryArc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshQuality {
    pub min_angle_deg: f64,
    pub max_angle_deg: f64,
    pub min_edge: f64,
    pub max_edge: f64,
    pub min_area: f64,
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * (b - a).cross(c - a)
}

impl TriMesh {
    /// Builds a mesh after checking orientation and boundary consistency.
    /// Boundary edges are reoriented so the owning triangle lies on the left.
    pub fn from_parts(
        nodes: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        curves: Vec<BoundaryArc>,
    ) -> Result<Self> {
        let n = nodes.len();
        let mut edge_count: HashMap<(usize, usize), (usize, bool)> = HashMap::new();
        for (k, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= n) {
                return Err(Error::InvalidMesh(format!("triangle {k} references a missing node")));
            }
            let area = signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
            if !(area > 0.0) {
                return Err(Error::InvalidMesh(format!("triangle {k} has non-positive area {area:.3e}")));
            }
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                let e = edge_count.entry((a.min(b), a.max(b))).or_insert((0, a < b));
                e.0 += 1;
                e.1 = a < b;
            }
        }
        let mut edges = boundary_edges;
        let mut seen = HashMap::new();
        for e in edges.iter_mut() {
            let [a, b] = e.nodes;
            if a >= n || b >= n {
                return Err(Error::InvalidMesh("boundary edge references a missing node".into()));
            }
            let k = (a.min(b), a.max(b));
            match edge_count.get(&k) {
                Some(&(1, forward)) => {
                    // forward: owning triangle traverses min → max
                    let (p, q) = if forward { (k.0, k.1) } else { (k.1, k.0) };
                    if [p, q] != e.nodes {
                        e.nodes = [p, q];
                        if let Some(c) = e.curve.as_mut() {
                            std::mem::swap(&mut c.s0, &mut c.s1);
                        }
                    }
                }
                _ => return Err(Error::InvalidMesh(format!("boundary edge {a}-{b} is not on the mesh boundary"))),
            }
            if seen.insert(k, ()).is_some() {
                return Err(Error::InvalidMesh(format!("duplicate boundary edge {a}-{b}")));
            }
        }
        for (k, &(cnt, _)) in &edge_count {
            if cnt > 2 {
                return Err(Error::InvalidMesh(format!("edge {}-{} shared by {cnt} triangles", k.0, k.1)));
            }
            if cnt == 1 && !seen.contains_key(k) {
                return Err(Error::InvalidMesh(format!("untagged boundary edge {}-{}", k.0, k.1)));
            }
        }
        let mut node_kinds = vec![NodeKind::Interior; n];
        for e in &edges {
            for &v in &e.nodes {
                node_kinds[v] = match (node_kinds[v], e.tag) {
                    (_, BoundaryTag::Dirichlet) | (NodeKind::Dirichlet, _) => NodeKind::Dirichlet,
                    _ => NodeKind::Robin,
                };
            }
        }
        Ok(TriMesh { nodes, triangles, boundary_edges: edges, node_kinds, curves })
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn node_kinds(&self) -> &[NodeKind] {
        &self.node_kinds
    }

    /// Exact arcs referenced by [`CurveRef`]s.
    pub fn curves(&self) -> &[BoundaryArc] {
        &self.curves
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.nodes[v])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Total length of the boundary edges carrying `tag`.
    pub fn boundary_length(&self, tag: BoundaryTag) -> f64 {
        self.boundary_edges
            .iter()
            .filter(|e| e.tag == tag)
            .map(|e| self.nodes[e.nodes[0]].dist(self.nodes[e.nodes[1]]))
            .sum()
    }

    /// Longest edge length.
    pub fn h_max(&self) -> f64 {
        self.quality().max_edge
    }

    pub fn quality(&self) -> MeshQuality {
        let mut q = MeshQuality {
            min_angle_deg: 180.0,
            max_angle_deg: 0.0,
            min_edge: f64::INFINITY,
            max_edge: 0.0,
            min_area: f64::INFINITY,
        };
        for t in 0..self.triangles.len() {
            let p = self.triangle_points(t);
            for i in 0..3 {
                let a = p[i];
                let u = p[(i + 1) % 3] - a;
                let v = p[(i + 2) % 3] - a;
                let ang = u.cross(v).atan2(u.dot(v)).abs().to_degrees();
                q.min_angle_deg = q.min_angle_deg.min(ang);
                q.max_angle_deg = q.max_angle_deg.max(ang);
                let l = u.norm();
                q.min_edge = q.min_edge.min(l);
                q.max_edge = q.max_edge.max(l);
            }
            q.min_area = q.min_area.min(self.triangle_area(t));
        }
        q
    }
}

/// Corner grading: inside `corner_radius` of each graded corner the local
/// size shrinks geometrically with `ratio` down to `target_h · ratio^levels`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradingPolicy {
    pub corner_radius: f64,
    pub ratio: f64,
    pub levels: u32,
    pub target_h: f64,
}

impl GradingPolicy {
    pub fn new(corner_radius: f64, ratio: f64, levels: u32, target_h: f64) -> Result<Self> {
        let p = GradingPolicy { corner_radius, ratio, levels, target_h };
        p.validate()?;
        Ok(p)
    }

    /// Grading for eigenfunctions concentrated at scale `1/gamma`: radius
    /// `min ρ_v`, ratio 1/2 and enough levels that the corner cells resolve
    /// `1/gamma` with ten cells.
    pub fn for_polygon(poly: &CurvilinearPolygon, gamma: f64, target_h: f64) -> Result<Self> {
        let rho = poly.vertices().iter().map(|v| v.rho).fold(f64::INFINITY, f64::min);
        let corner_radius = if rho.is_finite() { rho } else { 0.5 * poly.perimeter() / PI };
        let levels = (gamma * target_h * 10.0).log2().ceil().max(0.0) as u32;
        GradingPolicy::new(corner_radius, 0.5, levels, target_h)
    }

    pub fn uniform(target_h: f64) -> Result<Self> {
        GradingPolicy::new(1.0, 0.5, 0, target_h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::InvalidArgument(format!("grading ratio must lie in (0, 1), got {}", self.ratio)));
        }
        if !(self.corner_radius > 0.0) {
            return Err(Error::InvalidArgument(format!("corner radius must be positive, got {}", self.corner_radius)));
        }
        if !(self.target_h > 0.0) || !self.target_h.is_finite() {
            return Err(Error::InvalidArgument(format!("target_h must be positive, got {}", self.target_h)));
        }
        Ok(())
    }

    /// Smallest cell size at a graded corner.
    pub fn min_size(&self) -> f64 {
        self.target_h * self.ratio.powi(self.levels as i32)
    }
}

struct Corner {
    at: Point,
    hmin: f64,
    slope: f64,
    radius: f64,
}

/// Local target edge length: the minimum of a background size, corner
/// grading, an optional boundary layer and an optional custom field.
pub struct SizeField {
    target_h: f64,
    corners: Vec<Corner>,
    layer: Option<(BoundaryDistance, f64, f64)>,
    custom: Option<Box<dyn Fn(Point) -> f64 + Send + Sync>>,
}

impl SizeField {
    pub fn uniform(target_h: f64) -> Self {
        SizeField { target_h, corners: Vec::new(), layer: None, custom: None }
    }

    /// Background size and grading toward the given corner points.
    pub fn graded(policy: &GradingPolicy, corners: &[Point]) -> Self {
        let q = policy.ratio;
        let mut f = SizeField::uniform(policy.target_h);
        if policy.levels > 0 {
            for &at in corners {
                f.corners.push(Corner {
                    at,
                    hmin: policy.min_size(),
                    slope: (1.0 - q) / q,
                    radius: policy.corner_radius,
                });
            }
        }
        f
    }

    /// Background size with grading toward every convex vertex.
    pub fn for_polygon(poly: &CurvilinearPolygon, policy: &GradingPolicy) -> Self {
        let corners: Vec<Point> = poly.convex_vertices().iter().map(|v| v.position).collect();
        SizeField::graded(policy, &corners)
    }

    /// Size `h_b` within `width` of the boundary of `poly`, growing linearly
    /// further inside.
    pub fn with_boundary_layer(mut self, poly: &CurvilinearPolygon, h_b: f64, width: f64) -> Self {
        let mut polyline = Vec::new();
        for arc in poly.arcs() {
            let n = if arc.is_straight() {
                1
            } else {
                (arc.length() / (0.25 * width.min(h_b * 4.0))).ceil().max(8.0) as usize
            };
            let pts = arc.polyline(n);
            polyline.extend(pts.windows(2).map(|w| (w[0], w[1])));
        }
        let cutoff = width + 2.0 * (self.target_h - h_b).max(0.0) + h_b;
        self.layer = Some((BoundaryDistance::new(&polyline, cutoff), h_b, width));
        self
    }

    pub fn with_custom(mut self, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.custom = Some(Box::new(f));
        self
    }

    pub fn target_h(&self) -> f64 {
        self.target_h
    }

    pub fn eval(&self, p: Point) -> f64 {
        let mut h = self.target_h;
        for c in &self.corners {
            let r = p.dist(c.at);
            let hc =
                if r < c.radius { c.hmin.max(c.slope * r) } else { c.hmin.max(c.slope * c.radius) + (r - c.radius) };
            h = h.min(hc);
        }
        if let Some((dist, h_b, width)) = &self.layer {
            let d = dist.distance(p);
            h = h.min(if d <= *width { *h_b } else { h_b + 0.5 * (d - width) });
        }
        if let Some(f) = &self.custom {
            h = h.min(f(p));
        }
        h
    }
}

#[derive(Debug, Clone)]
pub struct MeshOptions {
    pub node_cap: usize,
    /// Arcs tagged Dirichlet; all others are Robin.
    pub dirichlet_arcs: Vec<usize>,
}

impl Default for MeshOptions {
    fn default() -> Self {
        MeshOptions { node_cap: DEFAULT_NODE_CAP, dirichlet_arcs: Vec::new() }
    }
}

/// Meshes `poly` with all boundary edges tagged Robin and grading toward
/// every convex vertex.
pub fn mesh_polygon(poly: &CurvilinearPolygon, policy: &GradingPolicy) -> Result<TriMesh> {
    policy.validate()?;
    mesh_domain(poly, &SizeField::for_polygon(poly, policy), &MeshOptions::default())
}

/// Meshes the sector `{|arg x| < α, |x| < R}` graded toward the tip, with the
/// straight sides Robin and the arc `|x| = R` Dirichlet.
pub fn mesh_truncated_sector(sec: &SectorGeometry, policy: &GradingPolicy) -> Result<TriMesh> {
    policy.validate()?;
    if !(sec.radius > policy.corner_radius) && policy.levels > 0 {
        return Err(Error::InvalidArgument(format!(
            "sector radius {} must exceed the corner radius {}",
            sec.radius, policy.corner_radius
        )));
    }
    let size = SizeField::graded(policy, &[Point::new(0.0, 0.0)]);
    mesh_sector_with(sec, &size, DEFAULT_NODE_CAP)
}

/// Truncated sector mesh with an explicit size field.
pub fn mesh_sector_with(sec: &SectorGeometry, size: &SizeField, node_cap: usize) -> Result<TriMesh> {
    let poly = sec.to_polygon()?;
    mesh_domain(&poly, size, &MeshOptions { node_cap, dirichlet_arcs: vec![SectorGeometry::OUTER_ARC] })
}

fn arc_stations(arc: &BoundaryArc, closed: bool, size: &dyn Fn(Point) -> f64) -> Vec<f64> {
    let mut s = discretize_arc(arc, size);
    let min_pieces = if closed {
        3
    } else if arc.is_straight() {
        1
    } else {
        2
    };
    if s.len() - 1 < min_pieces {
        let l = arc.length();
        s = (0..=min_pieces).map(|k| l * k as f64 / min_pieces as f64).collect();
    }
    s
}

/// Meshes `poly` against a size field.
pub fn mesh_domain(poly: &CurvilinearPolygon, size: &SizeField, opts: &MeshOptions) -> Result<TriMesh> {
    let arcs = poly.arcs();
    let n_arcs = arcs.len();
    let h = |p: Point| size.eval(p);
    let (lo, hi) = poly.bounding_box();
    let mut cdt = Cdt::new(lo, hi);

    let mut starts = Vec::with_capacity(n_arcs);
    for arc in arcs {
        let v = cdt.insert(arc.start())?;
        cdt.mark_boundary(v);
        starts.push(v);
    }
    let mut pending: Vec<Segment> = Vec::new();
    for (i, arc) in arcs.iter().enumerate() {
        let closed = n_arcs == 1;
        let st = arc_stations(arc, closed, &h);
        let mut prev = starts[i];
        for k in 1..st.len() {
            let v = if k + 1 == st.len() {
                starts[(i + 1) % n_arcs]
            } else {
                let v = cdt.insert(arc.point(st[k]))?;
                cdt.mark_boundary(v);
                v
            };
            pending.push(Segment { from: prev, to: v, arc: i, s_from: st[k - 1], s_to: st[k] });
            prev = v;
        }
        if cdt.num_points() > opts.node_cap {
            return Err(Error::BudgetExceeded { nodes: cdt.num_points(), cap: opts.node_cap });
        }
    }

    // recover boundary edges missing from the Delaunay triangulation
    let mut guard = 0usize;
    while let Some(seg) = pending.pop() {
        guard += 1;
        if guard > 64 * (opts.node_cap + 1000) {
            return Err(Error::InvalidMesh("boundary recovery did not terminate".into()));
        }
        if cdt.has_edge(seg.from, seg.to) {
            cdt.add_segment(seg);
            continue;
        }
        let s = 0.5 * (seg.s_from + seg.s_to);
        let v = cdt.insert(arcs[seg.arc].point(s))?;
        if v == seg.from || v == seg.to {
            return Err(Error::Degenerate("boundary points too close to separate".into()));
        }
        cdt.mark_boundary(v);
        pending.push(Segment { from: seg.from, to: v, arc: seg.arc, s_from: seg.s_from, s_to: s });
        pending.push(Segment { from: v, to: seg.to, arc: seg.arc, s_from: s, s_to: seg.s_to });
    }
    cdt.label_inside()?;

    let min_input_angle = poly.vertices().iter().map(|v| 2.0 * v.half_angle).fold(PI, f64::min);
    let angle_target = (20.7f64.to_radians()).min(0.85 * min_input_angle);
    let quality_bound = 1.0 / (2.0 * angle_target.sin());
    let vertex_ids: Vec<usize> = starts.clone();
    let acute: Vec<(usize, f64)> = poly
        .vertices()
        .iter()
        .filter(|v| 2.0 * v.half_angle < PI / 3.0)
        .filter_map(|v| {
            let id = vertex_ids.iter().copied().find(|&id| cdt.point(id).dist(v.position) < 1e-9)?;
            Some((id, h(v.position)))
        })
        .collect();
    let params =
        RefineParams { size: &h, size_factor: SIZE_FACTOR, quality_bound, acute, node_cap: opts.node_cap, arcs };
    cdt.refine(&params)?;
    cdt.label_inside()?;
    extract(&cdt, poly, opts)
}

fn extract(cdt: &Cdt, poly: &CurvilinearPolygon, opts: &MeshOptions) -> Result<TriMesh> {
    let tris = cdt.inside_triangles();
    let mut map = vec![usize::MAX; cdt.points().len()];
    let mut nodes = Vec::new();
    let mut triangles = Vec::with_capacity(tris.len());
    for t in tris {
        let mut out = [0; 3];
        for i in 0..3 {
            let v = t[i];
            if map[v] == usize::MAX {
                map[v] = nodes.len();
                nodes.push(cdt.point(v));
            }
            out[i] = map[v];
        }
        let area = signed_area(nodes[out[0]], nodes[out[1]], nodes[out[2]]);
        if area < MIN_TRIANGLE_AREA {
            return Err(Error::InvalidMesh(format!("triangle area {area:.3e} below {MIN_TRIANGLE_AREA:.0e}")));
        }
        triangles.push(out);
    }
    let mut edges: Vec<BoundaryEdge> = cdt
        .segments()
        .map(|s| BoundaryEdge {
            nodes: [map[s.from], map[s.to]],
            tag: if opts.dirichlet_arcs.contains(&s.arc) { BoundaryTag::Dirichlet } else { BoundaryTag::Robin },
            curve: Some(CurveRef { arc: s.arc, s0: s.s_from, s1: s.s_to }),
        })
        .collect();
    if edges.iter().any(|e| e.nodes.contains(&usize::MAX)) {
        return Err(Error::InvalidMesh("boundary node without triangles".into()));
    }
    edges.sort_by(|a, b| {
        let ca = a.curve.unwrap();
        let cb = b.curve.unwrap();
        (ca.arc, ca.s0).partial_cmp(&(cb.arc, cb.s0)).unwrap()
    });
    for e in edges.iter_mut() {
        if poly.arcs()[e.curve.unwrap().arc].is_straight() {
            e.curve = None;
        }
    }
    TriMesh::from_parts(nodes, triangles, edges, poly.arcs().to_vec())
}

/// Splits every triangle into four through its edge midpoints. Midpoints of
/// curved boundary edges are moved onto the exact arc.
pub fn refine_uniform(mesh: &TriMesh) -> TriMesh {
    let mut nodes = mesh.nodes.clone();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut snapped: HashMap<(usize, usize), Point> = HashMap::new();
    for e in &mesh.boundary_edges {
        if let (Some(c), true) = (e.curve, !mesh.curves.is_empty()) {
            let [a, b] = e.nodes;
            snapped.insert((a.min(b), a.max(b)), mesh.curves[c.arc].point(0.5 * (c.s0 + c.s1)));
        }
    }
    let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<Point>| -> usize {
        let k = (a.min(b), a.max(b));
        *mid.entry(k).or_insert_with(|| {
            let p = snapped.get(&k).copied().unwrap_or_else(|| nodes[a].midpoint(nodes[b]));
            nodes.push(p);
            nodes.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let ab = midpoint(a, b, &mut nodes);
        let bc = midpoint(b, c, &mut nodes);
        let ca = midpoint(c, a, &mut nodes);
        triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
    }
    let mut edges = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let [a, b] = e.nodes;
        let m = mid[&(a.min(b), a.max(b))];
        let (c0, c1) = match e.curve {
            Some(c) => {
                let sm = 0.5 * (c.s0 + c.s1);
                (Some(CurveRef { s1: sm, ..c }), Some(CurveRef { s0: sm, ..c }))
            }
            None => (None, None),
        };
        edges.push(BoundaryEdge { nodes: [a, m], tag: e.tag, curve: c0 });
        edges.push(BoundaryEdge { nodes: [m, b], tag: e.tag, curve: c1 });
    }
    let mut node_kinds = vec![NodeKind::Interior; nodes.len()];
    node_kinds[..mesh.node_kinds.len()].copy_from_slice(&mesh.node_kinds);
    for e in &edges {
        for &v in &e.nodes {
            if node_kinds[v] != NodeKind::Dirichlet {
                node_kinds[v] = match e.tag {
                    BoundaryTag::Dirichlet => NodeKind::Dirichlet,
                    BoundaryTag::Robin => NodeKind::Robin,
                };
            }
        }
    }
    TriMesh { nodes, triangles, boundary_edges: edges, node_kinds, curves: mesh.curves.clone() }
}

/// Submesh of the triangles selected by `keep`. Boundary edges of `mesh`
/// keep their tags; edges exposed by the cut get `cut_tag`.
pub fn restrict(mesh: &TriMesh, keep: impl Fn(usize) -> bool, cut_tag: BoundaryTag) -> Result<TriMesh> {
    let kept: Vec<usize> = (0..mesh.num_triangles()).filter(|&t| keep(t)).collect();
    if kept.is_empty() {
        return Err(Error::InvalidMesh("restriction keeps no triangles".into()));
    }
    let mut new_id = vec![usize::MAX; mesh.num_nodes()];
    let mut nodes = Vec::new();
    let mut triangles = Vec::with_capacity(kept.len());
    let mut uses: HashMap<(usize, usize), usize> = HashMap::new();
    for &t in &kept {
        let tri = mesh.triangles[t];
        for &v in &tri {
            if new_id[v] == usize::MAX {
                new_id[v] = nodes.len();
                nodes.push(mesh.nodes[v]);
            }
        }
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            *uses.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
        triangles.push(tri.map(|v| new_id[v]));
    }
    let mut edges = Vec::new();
    let mut original = HashMap::new();
    for e in &mesh.boundary_edges {
        let [a, b] = e.nodes;
        original.insert((a.min(b), a.max(b)), *e);
    }
    let mut open: Vec<(usize, usize)> = uses.iter().filter(|(_, &c)| c == 1).map(|(k, _)| *k).collect();
    open.sort_unstable();
    for k in open {
        let e = match original.get(&k) {
            Some(e) => BoundaryEdge { nodes: e.nodes.map(|v| new_id[v]), ..*e },
            None => BoundaryEdge { nodes: [new_id[k.0], new_id[k.1]], tag: cut_tag, curve: None },
        };
        edges.push(e);
    }
    TriMesh::from_parts(nodes, triangles, edges, mesh.curves.clone())
}

/// Shared, immutable mesh handle.
pub type SharedMesh = Arc<TriMesh>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_polygon;

    fn square() -> CurvilinearPolygon {
        let p = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)].map(|(x, y)| Point::new(x, y));
        build_polygon((0..4).map(|i| BoundaryArc::segment(p[i], p[(i + 1) % 4]).unwrap()).collect()).unwrap()
    }

    #[test]
    fn uniform_square() {
        let m = mesh_polygon(&square(), &GradingPolicy::uniform(0.1).unwrap()).unwrap();
        let q = m.quality();
        assert!(q.min_angle_deg >= 20.0, "{q:?}");
        assert!((150..=320).contains(&m.num_triangles()), "{}", m.num_triangles());
        assert!((m.area() - 1.0).abs() < 1e-13);
        assert!(q.max_edge <= 0.145 + 1e-12);
    }

    #[test]
    fn two_triangle_refinement() {
        let nodes = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        let edges =
            (0..4).map(|i| BoundaryEdge { nodes: [i, (i + 1) % 4], tag: BoundaryTag::Robin, curve: None }).collect();
        let m = TriMesh::from_parts(nodes, vec![[0, 1, 2], [0, 2, 3]], edges, vec![]).unwrap();
        let r = refine_uniform(&m);
        assert_eq!(r.num_triangles(), 8);
        assert_eq!(r.num_nodes(), 9);
        assert_eq!(r.boundary_edges().len(), 8);
        let rr = refine_uniform(&r);
        assert_eq!(rr.num_triangles(), 32);
    }
}
