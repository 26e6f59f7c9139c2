//! Curvilinear polygons: arc-length parametrized boundary arcs, corner
//! detection, tangent frames and boundary curvature integrals.

mod arc;
mod io;
mod point;
mod polygon;

pub use arc::{ArcSource, BoundaryArc};
pub use io::{format_polygon, load_polygon, parse_arcs, parse_polygon, parse_real};
pub use point::{orient, segments_intersect, Point};
pub use polygon::{build_polygon, CurvilinearPolygon, RigidMap, SectorGeometry, Vertex, CLOSURE_TOL, VERTEX_ANGLE_TOL};
