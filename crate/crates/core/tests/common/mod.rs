#![allow(dead_code)]

use std::f64::consts::PI;

use robin_spectra::geometry::{build_polygon, BoundaryArc, CurvilinearPolygon, Point};

pub fn polygon(pts: &[(f64, f64)]) -> CurvilinearPolygon {
    let p: Vec<Point> = pts.iter().map(|&(x, y)| Point::new(x, y)).collect();
    let n = p.len();
    build_polygon((0..n).map(|i| BoundaryArc::segment(p[i], p[(i + 1) % n]).unwrap()).collect()).unwrap()
}

pub fn unit_square() -> CurvilinearPolygon {
    polygon(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
}

/// Regular polygon with unit circumradius.
pub fn regular(n: usize) -> CurvilinearPolygon {
    let pts: Vec<(f64, f64)> =
        (0..n).map(|k| (2.0 * PI * k as f64 / n as f64).sin_cos()).map(|(s, c)| (c, s)).collect();
    polygon(&pts)
}

/// L-shaped hexagon: five right angles and one reentrant corner.
pub fn l_shape() -> CurvilinearPolygon {
    polygon(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)])
}

pub fn unit_disk() -> CurvilinearPolygon {
    let o = Point::new(0.0, 0.0);
    build_polygon(vec![
        BoundaryArc::circular(o, 1.0, 0.0, PI).unwrap(),
        BoundaryArc::circular(o, 1.0, PI, 2.0 * PI).unwrap(),
    ])
    .unwrap()
}

/// Unit square whose top edge is replaced by a circular arc bulging out.
pub fn arc_square() -> CurvilinearPolygon {
    let (c, r) = (Point::new(0.5, 0.0), 0.5f64.hypot(1.0));
    let t0 = (1.0f64).atan2(0.5);
    build_polygon(vec![
        BoundaryArc::segment(Point::new(0.0, 0.0), Point::new(1.0, 0.0)).unwrap(),
        BoundaryArc::segment(Point::new(1.0, 0.0), Point::new(1.0, 1.0)).unwrap(),
        BoundaryArc::circular(c, r, t0, PI - t0).unwrap(),
        BoundaryArc::segment(Point::new(0.0, 1.0), Point::new(0.0, 0.0)).unwrap(),
    ])
    .unwrap()
}

/// Unit square whose top edge is replaced by a circular arc bulging in.
pub fn dented_square() -> CurvilinearPolygon {
    let (c, r) = (Point::new(0.5, 2.0), 0.5f64.hypot(1.0));
    let t0 = (-1.0f64).atan2(0.5);
    build_polygon(vec![
        BoundaryArc::segment(Point::new(0.0, 0.0), Point::new(1.0, 0.0)).unwrap(),
        BoundaryArc::segment(Point::new(1.0, 0.0), Point::new(1.0, 1.0)).unwrap(),
        BoundaryArc::circular(c, r, t0, -PI - t0).unwrap(),
        BoundaryArc::segment(Point::new(0.0, 1.0), Point::new(0.0, 0.0)).unwrap(),
    ])
    .unwrap()
}
