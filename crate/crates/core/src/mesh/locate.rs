use crate::geometry::Point;
use crate::mesh::TriMesh;

/// Finds the triangle containing a point using a uniform bucket grid over
/// triangle bounding boxes.
pub struct PointLocator<'a> {
    mesh: &'a TriMesh,
    lo: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in mesh.nodes() {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let nt = mesh.num_triangles().max(1);
        let area = ((hi.x - lo.x) * (hi.y - lo.y)).max(1e-300);
        let cell = (area / nt as f64).sqrt().max(1e-300);
        let nx = (((hi.x - lo.x) / cell).ceil() as usize).clamp(1, 4096);
        let ny = (((hi.y - lo.y) / cell).ceil() as usize).clamp(1, 4096);
        let cell = ((hi.x - lo.x) / nx as f64).max((hi.y - lo.y) / ny as f64).max(1e-300);
        let mut buckets = vec![Vec::new(); nx * ny];
        for t in 0..mesh.num_triangles() {
            let p = mesh.triangle_points(t);
            let (x0, x1) = (p[0].x.min(p[1].x).min(p[2].x), p[0].x.max(p[1].x).max(p[2].x));
            let (y0, y1) = (p[0].y.min(p[1].y).min(p[2].y), p[0].y.max(p[1].y).max(p[2].y));
            let i0 = (((x0 - lo.x) / cell) as usize).min(nx - 1);
            let i1 = (((x1 - lo.x) / cell) as usize).min(nx - 1);
            let j0 = (((y0 - lo.y) / cell) as usize).min(ny - 1);
            let j1 = (((y1 - lo.y) / cell) as usize).min(ny - 1);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t as u32);
                }
            }
        }
        PointLocator { mesh, lo, cell, nx, ny, buckets }
    }

    fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.mesh.triangle_points(t);
        let det = (b - a).cross(c - a);
        let l1 = (p - a).cross(c - a) / det;
        let l2 = (b - a).cross(p - a) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Containing triangle and barycentric coordinates, allowing a relative
    /// tolerance on the triangle edges.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let i = ((p.x - self.lo.x) / self.cell).floor();
        let j = ((p.y - self.lo.y) / self.cell).floor();
        let inside_grid = |v: f64, n: usize| v >= -1.0 && v <= n as f64;
        if !inside_grid(i, self.nx) || !inside_grid(j, self.ny) {
            return None;
        }
        let i = (i.max(0.0) as usize).min(self.nx - 1);
        let j = (j.max(0.0) as usize).min(self.ny - 1);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[j * self.nx + i] {
            let l = self.barycentric(t as usize, p);
            let worst = l[0].min(l[1]).min(l[2]);
            if best.is_none_or(|b| worst > b.2) {
                best = Some((t as usize, l, worst));
            }
        }
        best.filter(|b| b.2 >= -1e-10).map(|b| (b.0, b.1))
    }

    /// Interpolates nodal values (piecewise linear); zero outside the mesh.
    pub fn interpolate(&self, values: &[f64], p: Point) -> f64 {
        match self.locate(p) {
            Some((t, l)) => {
                let v = self.mesh.triangles()[t];
                l[0] * values[v[0]] + l[1] * values[v[1]] + l[2] * values[v[2]]
            }
            None => 0.0,
        }
    }
}
