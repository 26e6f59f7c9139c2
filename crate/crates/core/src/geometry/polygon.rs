use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::arc::BoundaryArc;
use crate::geometry::point::{segments_intersect, Point};
use crate::quad;

/// One-sided tangent directions closer than this are a regular point.
pub const VERTEX_ANGLE_TOL: f64 = 1e-8;
/// Allowed gap between consecutive arc endpoints.
pub const CLOSURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub position: Point,
    /// Half of the interior opening angle.
    pub half_angle: f64,
    pub is_convex: bool,
    /// Half the distance to the nearest other vertex (infinite when alone).
    pub rho: f64,
    /// Arc ending at this vertex.
    pub arc_in: usize,
    /// Arc starting at this vertex.
    pub arc_out: usize,
    /// Unit tangent of the outgoing arc.
    pub tangent_out: Point,
}

/// Rigid motion `x ↦ R(−angle)(x − origin)` that takes a corner to the
/// origin with its bisector on the positive x axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidMap {
    pub origin: Point,
    pub angle: f64,
}

impl RigidMap {
    pub fn apply(&self, p: Point) -> Point {
        (p - self.origin).rotated(-self.angle)
    }

    pub fn apply_inverse(&self, q: Point) -> Point {
        q.rotated(self.angle) + self.origin
    }

    /// Row-major Jacobian.
    pub fn jacobian(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.angle.sin_cos();
        [[c, s], [-s, c]]
    }

    pub fn determinant(&self) -> f64 {
        let j = self.jacobian();
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    }
}

/// Bounded planar domain whose boundary is a single counterclockwise loop of
/// smooth arcs.
#[derive(Debug, Clone)]
pub struct CurvilinearPolygon {
    arcs: Vec<BoundaryArc>,
    vertices: Vec<Vertex>,
    perimeter: f64,
    area: f64,
}

/// Validates and orients a closed chain of arcs and locates its corners.
pub fn build_polygon(arcs: Vec<BoundaryArc>) -> Result<CurvilinearPolygon> {
    if arcs.is_empty() {
        return Err(Error::Degenerate("no arcs".into()));
    }
    let n = arcs.len();
    for i in 0..n {
        let gap = arcs[i].end().dist(arcs[(i + 1) % n].start());
        if !(gap <= CLOSURE_TOL) {
            return Err(Error::NotClosed { arc: i, gap });
        }
    }
    let signed_area: f64 = arcs.iter().map(|a| a.area_integral()).sum();
    if signed_area.abs() < 1e-14 {
        return Err(Error::Degenerate("enclosed area vanishes".into()));
    }
    let arcs: Vec<BoundaryArc> =
        if signed_area > 0.0 { arcs } else { arcs.iter().rev().map(|a| a.reversed()).collect() };
    check_simple(&arcs)?;

    let mut vertices = Vec::new();
    for i in 0..n {
        let next = (i + 1) % n;
        let t_in = arcs[i].tangent(arcs[i].length());
        let t_out = arcs[next].tangent(0.0);
        let turn = t_in.cross(t_out).atan2(t_in.dot(t_out));
        if turn.abs() <= VERTEX_ANGLE_TOL {
            continue;
        }
        let p = arcs[next].start();
        if PI - turn.abs() <= VERTEX_ANGLE_TOL {
            return Err(Error::Cusp { x: p.x, y: p.y });
        }
        let half_angle = 0.5 * (PI - turn);
        vertices.push(Vertex {
            position: p,
            half_angle,
            is_convex: half_angle < 0.5 * PI,
            rho: f64::INFINITY,
            arc_in: i,
            arc_out: next,
            tangent_out: t_out,
        });
    }
    let positions: Vec<Point> = vertices.iter().map(|v| v.position).collect();
    for (k, v) in vertices.iter_mut().enumerate() {
        let nearest = positions
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, q)| q.dist(v.position))
            .fold(f64::INFINITY, f64::min);
        v.rho = 0.5 * nearest;
    }
    let perimeter = arcs.iter().map(|a| a.length()).sum();
    Ok(CurvilinearPolygon { arcs, vertices, perimeter, area: signed_area.abs() })
}

fn check_simple(arcs: &[BoundaryArc]) -> Result<()> {
    let mut segs: Vec<(Point, Point)> = Vec::new();
    for a in arcs {
        let k = if a.is_straight() { 1 } else { 96 };
        let pl = a.polyline(k);
        for w in pl.windows(2) {
            segs.push((w[0], w[1]));
        }
    }
    let m = segs.len();
    for i in 0..m {
        for j in i + 2..m {
            if i == 0 && j == m - 1 {
                continue;
            }
            let (p1, p2) = segs[i];
            let (q1, q2) = segs[j];
            if segments_intersect(p1, p2, q1, q2) {
                return Err(Error::SelfIntersection { x: q1.x, y: q1.y });
            }
        }
    }
    Ok(())
}

impl CurvilinearPolygon {
    pub fn arcs(&self) -> &[BoundaryArc] {
        &self.arcs
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn convex_vertices(&self) -> Vec<&Vertex> {
        self.vertices.iter().filter(|v| v.is_convex).collect()
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// True when every arc is a straight segment.
    pub fn is_straight(&self) -> bool {
        self.arcs.iter().all(|a| a.is_straight())
    }

    pub fn has_reentrant_corners(&self) -> bool {
        self.vertices.iter().any(|v| !v.is_convex)
    }

    /// `Σ_k ∫ √((κ_k(s) + λ)₊) ds`.
    pub fn curvature_integral(&self, lambda: f64) -> f64 {
        let tol = 1e-8 / self.arcs.len() as f64;
        self.arcs
            .iter()
            .map(|a| quad::integrate(|s| (a.curvature(s) + lambda).max(0.0).sqrt(), 0.0, a.length(), tol))
            .sum()
    }

    /// Rigid map taking `v` to the origin and its corner onto the symmetric
    /// wedge `|arg x| < α_v`.
    pub fn tangent_frame(&self, v: &Vertex) -> Result<RigidMap> {
        let known = self.vertices.iter().any(|w| w.position.dist(v.position) <= CLOSURE_TOL);
        if !known {
            return Err(Error::NotAVertex { x: v.position.x, y: v.position.y });
        }
        Ok(RigidMap { origin: v.position, angle: v.tangent_out.angle() + v.half_angle })
    }

    pub fn vertex_at(&self, p: Point) -> Result<&Vertex> {
        self.vertices.iter().find(|w| w.position.dist(p) <= 1e-9).ok_or(Error::NotAVertex { x: p.x, y: p.y })
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for a in &self.arcs {
            for p in a.polyline(if a.is_straight() { 1 } else { 256 }) {
                lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
            }
        }
        (lo, hi)
    }

    /// Point-in-domain test against a fine polyline of the boundary.
    pub fn contains(&self, p: Point) -> bool {
        let mut winding = 0i32;
        for a in &self.arcs {
            let pl = a.polyline(if a.is_straight() { 1 } else { 512 });
            for w in pl.windows(2) {
                let (u, v) = (w[0], w[1]);
                if u.y <= p.y {
                    if v.y > p.y && (v - u).cross(p - u) > 0.0 {
                        winding += 1;
                    }
                } else if v.y <= p.y && (v - u).cross(p - u) < 0.0 {
                    winding -= 1;
                }
            }
        }
        winding != 0
    }
}

/// Wedge `{|arg x| < α}` cut at radius `radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorGeometry {
    pub half_angle: f64,
    pub radius: f64,
}

impl SectorGeometry {
    pub fn new(half_angle: f64, radius: f64) -> Result<Self> {
        if !(half_angle > 0.0 && half_angle < PI) {
            return Err(Error::InvalidArgument(format!("sector half-angle must lie in (0, pi), got {half_angle}")));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("sector radius must be positive, got {radius}")));
        }
        Ok(SectorGeometry { half_angle, radius })
    }

    /// Boundary as tip → lower side → outer arc → upper side; the outer arc
    /// is arc index 1.
    pub fn to_polygon(&self) -> Result<CurvilinearPolygon> {
        let (a, r) = (self.half_angle, self.radius);
        let tip = Point::new(0.0, 0.0);
        let lower = Point::polar(r, -a);
        let upper = Point::polar(r, a);
        let arcs = vec![
            BoundaryArc::segment(tip, lower)?,
            BoundaryArc::circular(tip, r, -a, a)?,
            BoundaryArc::segment(upper, tip)?,
        ];
        build_polygon(arcs)
    }

    pub const OUTER_ARC: usize = 1;
}
