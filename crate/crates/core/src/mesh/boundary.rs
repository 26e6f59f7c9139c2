use crate::geometry::{BoundaryArc, Point};

/// Arc-length stations along one arc, including both ends. Spacing follows
/// `size` marched inward from each end; the leftover middle stretch is cut
/// into equal pieces.
pub(crate) fn discretize_arc(arc: &BoundaryArc, size: &dyn Fn(Point) -> f64) -> Vec<f64> {
    let len = arc.length();
    let mut from_start = vec![0.0];
    let mut from_end = vec![len];
    let (mut a, mut b) = (0.0, len);
    loop {
        let ha = size(arc.point(a));
        let hb = size(arc.point(b));
        let gap = b - a;
        let h_mid = size(arc.point(0.5 * (a + b))).min(ha).min(hb);
        if gap <= ha + hb || gap <= 2.0 * h_mid {
            let pieces = (gap / h_mid.max(1e-300)).ceil().max(1.0) as usize;
            let pieces = if gap > 1.3 * h_mid { pieces.max(2) } else { pieces };
            for k in 1..pieces {
                from_start.push(a + gap * k as f64 / pieces as f64);
            }
            break;
        }
        if ha <= hb {
            a += ha;
            from_start.push(a);
        } else {
            b -= hb;
            from_end.push(b);
        }
    }
    from_start.extend(from_end.into_iter().rev());
    from_start
}

/// Distance to a polyline, bucketed on a uniform grid and only resolved up
/// to a cutoff.
pub(crate) struct BoundaryDistance {
    segs: Vec<(Point, Point)>,
    lo: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
    cutoff: f64,
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let l2 = d.dot(d);
    let t = if l2 > 0.0 { ((p - a).dot(d) / l2).clamp(0.0, 1.0) } else { 0.0 };
    p.dist(a + d * t)
}

impl BoundaryDistance {
    pub fn new(polyline: &[(Point, Point)], cutoff: f64) -> Self {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(a, b) in polyline {
            for p in [a, b] {
                lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
            }
        }
        lo = Point::new(lo.x - cutoff, lo.y - cutoff);
        hi = Point::new(hi.x + cutoff, hi.y + cutoff);
        let extent = (hi.x - lo.x).max(hi.y - lo.y);
        let cell = cutoff.max(extent / 256.0);
        let nx = ((hi.x - lo.x) / cell).ceil() as usize + 1;
        let ny = ((hi.y - lo.y) / cell).ceil() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (k, &(a, b)) in polyline.iter().enumerate() {
            let i0 = ((a.x.min(b.x) - cutoff - lo.x) / cell).floor().max(0.0) as usize;
            let i1 = (((a.x.max(b.x) + cutoff - lo.x) / cell).floor() as usize).min(nx - 1);
            let j0 = ((a.y.min(b.y) - cutoff - lo.y) / cell).floor().max(0.0) as usize;
            let j1 = (((a.y.max(b.y) + cutoff - lo.y) / cell).floor() as usize).min(ny - 1);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(k);
                }
            }
        }
        BoundaryDistance { segs: polyline.to_vec(), lo, cell, nx, ny, buckets, cutoff }
    }

    /// Distance to the polyline, or `cutoff` when it is at least that far.
    pub fn distance(&self, p: Point) -> f64 {
        let i = ((p.x - self.lo.x) / self.cell).floor();
        let j = ((p.y - self.lo.y) / self.cell).floor();
        if i < 0.0 || j < 0.0 || i as usize >= self.nx || j as usize >= self.ny {
            return self.cutoff;
        }
        self.buckets[j as usize * self.nx + i as usize]
            .iter()
            .map(|&k| point_segment_distance(p, self.segs[k].0, self.segs[k].1))
            .fold(self.cutoff, f64::min)
    }
}
