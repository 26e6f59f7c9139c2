use std::f64::consts::PI;

use robin_spectra::geometry::{build_polygon, BoundaryArc, CurvilinearPolygon, Point, SectorGeometry};
use robin_spectra::mesh::{
    export_mesh, import_mesh, mesh_polygon, mesh_truncated_sector, read_triangle, refine_uniform, BoundaryTag,
    GradingPolicy, NodeKind, TriMesh,
};
use robin_spectra::Error;

fn polygon(pts: &[(f64, f64)]) -> CurvilinearPolygon {
    let p: Vec<Point> = pts.iter().map(|&(x, y)| Point::new(x, y)).collect();
    build_polygon((0..p.len()).map(|i| BoundaryArc::segment(p[i], p[(i + 1) % p.len()]).unwrap()).collect()).unwrap()
}

fn square() -> CurvilinearPolygon {
    polygon(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
}

fn unit_circle_polyline(n: usize) -> CurvilinearPolygon {
    let pts: Vec<(f64, f64)> =
        (0..n).map(|k| (2.0 * PI * k as f64 / n as f64).sin_cos()).map(|(s, c)| (c, s)).collect();
    polygon(&pts)
}

fn disk() -> CurvilinearPolygon {
    build_polygon(vec![BoundaryArc::circular(Point::new(0.0, 0.0), 1.0, 0.0, 2.0 * PI).unwrap()]).unwrap()
}

fn check_invariants(m: &TriMesh) {
    for t in 0..m.num_triangles() {
        assert!(m.triangle_area(t) > 0.0);
    }
    let mut next = std::collections::HashMap::new();
    for e in m.boundary_edges() {
        assert!(next.insert(e.nodes[0], e.nodes[1]).is_none(), "boundary node with two outgoing edges");
    }
    for e in m.boundary_edges() {
        assert!(next.contains_key(&e.nodes[1]), "boundary is not a closed loop");
    }
}

fn boundary_nodes_on_edge_from(m: &TriMesh, corner: Point, dir: Point) -> Vec<f64> {
    let mut d: Vec<f64> = m
        .nodes()
        .iter()
        .zip(m.node_kinds())
        .filter(|(_, k)| **k != NodeKind::Interior)
        .map(|(p, _)| *p - corner)
        .filter(|v| v.cross(dir).abs() < 1e-12 && v.dot(dir) >= 0.0)
        .map(|v| v.dot(dir))
        .collect();
    d.sort_by(f64::total_cmp);
    d
}

#[test]
fn uniform_square_quality_and_size() {
    let m = mesh_polygon(&square(), &GradingPolicy::uniform(0.1).unwrap()).unwrap();
    check_invariants(&m);
    let q = m.quality();
    eprintln!("uniform square: {} triangles, {q:?}", m.num_triangles());
    assert!(q.min_angle_deg >= 20.0);
    assert!((150..=320).contains(&m.num_triangles()));
    assert!(m.boundary_edges().iter().all(|e| e.tag == BoundaryTag::Robin));
}

#[test]
fn graded_square_smallest_corner_edge() {
    let policy = GradingPolicy::new(0.5, 0.5, 4, 0.1).unwrap();
    let m = mesh_polygon(&square(), &policy).unwrap();
    check_invariants(&m);
    let q = m.quality();
    eprintln!("graded square: {} triangles, {q:?}", m.num_triangles());
    let hmin = 0.1 * 0.5f64.powi(4);
    for (corner, dir) in [((0.0, 0.0), (1.0, 0.0)), ((1.0, 1.0), (0.0, -1.0))] {
        let d = boundary_nodes_on_edge_from(&m, Point::new(corner.0, corner.1), Point::new(dir.0, dir.1));
        assert!((d[1] - hmin).abs() < 1e-12 * hmin.max(1.0), "first corner edge {}", d[1]);
    }
    assert!(q.min_angle_deg >= 15.0);
}

#[test]
fn graded_edges_form_geometric_sequence() {
    let policy = GradingPolicy::new(0.5, 0.5, 4, 0.1).unwrap();
    let m = mesh_polygon(&square(), &policy).unwrap();
    let d = boundary_nodes_on_edge_from(&m, Point::new(0.0, 0.0), Point::new(1.0, 0.0));
    let edges: Vec<f64> = d.windows(2).map(|w| w[1] - w[0]).collect();
    // after the first cell the lengths grow by 1/ratio until target_h
    for w in edges[1..].windows(2) {
        if w[1] >= 0.1 * 0.99 || w[0] >= 0.1 * 0.5 {
            break;
        }
        let r = w[1] / w[0];
        assert!((r - 2.0).abs() <= 0.05 * 2.0, "ratio {r} in {edges:?}");
    }
}

#[test]
fn circle_polyline_nodes_on_circle() {
    let m = mesh_polygon(&unit_circle_polyline(64), &GradingPolicy::uniform(0.15).unwrap()).unwrap();
    check_invariants(&m);
    for (p, k) in m.nodes().iter().zip(m.node_kinds()) {
        if *k != NodeKind::Interior && (p.norm() - 1.0).abs() > 1e-12 {
            // stations inside a polyline side are on the chord, not the circle
            let ang = p.angle().rem_euclid(2.0 * PI) / (2.0 * PI / 64.0);
            assert!((ang - ang.round()).abs() > 1e-9 || (p.norm() - 1.0).abs() <= 1e-12);
        }
    }
    let on_vertices = m
        .nodes()
        .iter()
        .filter(|p| {
            let ang = p.angle().rem_euclid(2.0 * PI) / (2.0 * PI / 64.0);
            (ang - ang.round()).abs() < 1e-9 && (p.norm() - 1.0).abs() < 1e-12
        })
        .count();
    assert_eq!(on_vertices, 64);
    assert!(m.quality().min_angle_deg >= 15.0);
}

#[test]
fn exact_disk_nodes_on_circle_and_refinement_snaps() {
    let m = mesh_polygon(&disk(), &GradingPolicy::uniform(0.1).unwrap()).unwrap();
    check_invariants(&m);
    for (p, k) in m.nodes().iter().zip(m.node_kinds()) {
        if *k != NodeKind::Interior {
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
    }
    let r = refine_uniform(&m);
    for (p, k) in r.nodes().iter().zip(r.node_kinds()) {
        if *k != NodeKind::Interior {
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
    }
    assert!(m.quality().min_angle_deg >= 15.0);
}

#[test]
fn sector_boundary_lengths() {
    let sec = SectorGeometry::new(PI / 4.0, 8.0).unwrap();
    let policy = GradingPolicy::new(1.0, 0.5, 3, 0.8).unwrap();
    let m = mesh_truncated_sector(&sec, &policy).unwrap();
    check_invariants(&m);
    assert!((m.boundary_length(BoundaryTag::Robin) - 16.0).abs() < 1e-12);
    let arc = m.boundary_length(BoundaryTag::Dirichlet);
    assert!((arc - 8.0 * PI / 2.0).abs() < 0.01 * 8.0 * PI / 2.0, "{arc}");
    for e in m.boundary_edges().iter().filter(|e| e.tag == BoundaryTag::Dirichlet) {
        for &v in &e.nodes {
            assert!((m.nodes()[v].norm() - 8.0).abs() < 1e-12);
        }
    }
    assert!(m.quality().min_angle_deg >= 15.0);
}

#[test]
fn sector_tip_cells_are_graded() {
    let sec = SectorGeometry::new(PI / 6.0, 10.0).unwrap();
    let policy = GradingPolicy::new(1.0, 0.5, 4, 1.0).unwrap();
    let m = mesh_truncated_sector(&sec, &policy).unwrap();
    check_invariants(&m);
    let near = (0..m.num_triangles())
        .filter(|&t| m.triangle_points(t).iter().any(|p| p.norm() < 1e-14))
        .map(|t| m.triangle_area(t).sqrt())
        .fold(0.0, f64::max);
    let far = (0..m.num_triangles())
        .filter(|&t| m.triangle_points(t).iter().all(|p| p.norm() > 5.0))
        .map(|t| m.triangle_area(t).sqrt())
        .fold(0.0, f64::max);
    let ratio = near / far;
    assert!(ratio < 2.0 * 0.5f64.powi(4), "tip/far size ratio {ratio}");
    assert!(m.quality().min_angle_deg >= 15.0);
}

#[test]
fn ungraded_sector_is_quasi_uniform() {
    let sec = SectorGeometry::new(PI / 3.0, 6.0).unwrap();
    let m = mesh_truncated_sector(&sec, &GradingPolicy::new(1.0, 0.5, 0, 0.5).unwrap()).unwrap();
    let q = m.quality();
    assert!(q.max_edge <= 1.45 * 0.5 + 1e-12);
    assert!(q.min_edge >= 0.5 * 0.2, "{q:?}");
    assert!(q.min_angle_deg >= 20.0);
}

#[test]
fn l_shape_and_thin_wedge_quality() {
    let l = polygon(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]);
    let m = mesh_polygon(&l, &GradingPolicy::new(0.5, 0.5, 3, 0.2).unwrap()).unwrap();
    check_invariants(&m);
    assert!((m.area() - 3.0).abs() < 1e-12);
    assert!(m.quality().min_angle_deg >= 15.0, "{:?}", m.quality());

    let a = 20f64.to_radians();
    let wedge = polygon(&[(0.0, 0.0), (3.0, 0.0), (3.0 * a.cos(), 3.0 * a.sin())]);
    let m = mesh_polygon(&wedge, &GradingPolicy::new(0.5, 0.5, 3, 0.2).unwrap()).unwrap();
    check_invariants(&m);
    // the 20° input angle limits the attainable minimum angle
    assert!(m.quality().min_angle_deg >= 0.85 * 20.0 - 1e-9, "{:?}", m.quality());
}

#[test]
fn refinement_counts_and_area() {
    let l = polygon(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]);
    let m = mesh_polygon(&l, &GradingPolicy::uniform(0.3).unwrap()).unwrap();
    let r = refine_uniform(&refine_uniform(&m));
    assert_eq!(r.num_triangles(), 16 * m.num_triangles());
    assert!((r.area() - m.area()).abs() < 1e-14 * m.area());
    assert!((r.area() - 3.0).abs() < 1e-12);
    check_invariants(&r);
}

#[test]
fn triangle_format_round_trip() {
    let m = mesh_polygon(&square(), &GradingPolicy::new(0.5, 0.5, 2, 0.2).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("square");
    export_mesh(&m, &base).unwrap();
    let back = import_mesh(&base).unwrap();
    assert_eq!(back.nodes(), m.nodes());
    assert_eq!(back.triangles(), m.triangles());
    assert_eq!(back.node_kinds(), m.node_kinds());
    let tags: Vec<_> = m.boundary_edges().iter().map(|e| (e.nodes, e.tag)).collect();
    let back_tags: Vec<_> = back.boundary_edges().iter().map(|e| (e.nodes, e.tag)).collect();
    assert_eq!(tags, back_tags);
}

const NODE: &str = "4 2 0 1\n1 0 0 1\n2 1 0 1\n3 1 1 1\n4 0 1 1\n";

#[test]
fn missing_node_is_rejected() {
    let ele = "2 3 0\n1 1 2 3\n2 1 3 5\n";
    assert!(matches!(read_triangle(NODE, ele, None), Err(Error::InvalidMesh(_))));
}

#[test]
fn unknown_marker_is_rejected() {
    let ele = "2 3 0\n1 1 2 3\n2 1 3 4\n";
    let poly = "0 2 0 1\n4 1\n1 1 2 1\n2 2 3 1\n3 3 4 3\n4 4 1 1\n0\n";
    let err = read_triangle(NODE, ele, Some(poly)).unwrap_err();
    assert!(matches!(err, Error::UnknownBoundaryTag(3)));
    assert!(err.to_string().contains("unknown boundary tag"));
}

#[test]
fn tiny_budget_is_reported() {
    use robin_spectra::mesh::{mesh_domain, MeshOptions, SizeField};
    let opts = MeshOptions { node_cap: 50, ..MeshOptions::default() };
    let err = mesh_domain(&square(), &SizeField::uniform(0.01), &opts).unwrap_err();
    assert!(matches!(err, Error::BudgetExceeded { .. }));
}
