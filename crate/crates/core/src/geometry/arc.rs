use crate::error::{Error, Result};
use crate::geometry::point::Point;
use crate::quad;

/// Smooth boundary piece parametrized by arc length on `[0, length]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryArc {
    shape: Shape,
    length: f64,
    reversed: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Segment { a: Point, b: Point },
    Circle { center: Point, radius: f64, theta0: f64, theta1: f64 },
    Spline(CubicSpline),
}

/// The input a boundary arc was created from, for serialization.
#[derive(Debug, Clone, PartialEq)]
pub enum ArcSource {
    Segment { a: Point, b: Point },
    Circle { center: Point, radius: f64, theta0: f64, theta1: f64 },
    Spline { samples: Vec<Point> },
}

impl BoundaryArc {
    pub fn segment(a: Point, b: Point) -> Result<Self> {
        let length = a.dist(b);
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Degenerate(format!("zero-length segment at ({}, {})", a.x, a.y)));
        }
        Ok(BoundaryArc { shape: Shape::Segment { a, b }, length, reversed: false })
    }

    /// Circular arc from angle `theta0` to `theta1`; counterclockwise when
    /// `theta1 > theta0`.
    pub fn circular(center: Point, radius: f64, theta0: f64, theta1: f64) -> Result<Self> {
        let length = radius * (theta1 - theta0).abs();
        if !(radius > 0.0) || !(length > 0.0) || !length.is_finite() {
            return Err(Error::Degenerate(format!(
                "circular arc needs radius > 0 and theta0 != theta1 (r={radius}, {theta0}..{theta1})"
            )));
        }
        if (theta1 - theta0).abs() > 2.0 * std::f64::consts::PI + 1e-12 {
            return Err(Error::Degenerate("circular arc sweeps more than a full turn".into()));
        }
        Ok(BoundaryArc { shape: Shape::Circle { center, radius, theta0, theta1 }, length, reversed: false })
    }

    /// Cubic spline through the samples, reparametrized by arc length. A
    /// sample list whose first and last points coincide gives a periodic
    /// spline.
    pub fn spline(samples: &[Point]) -> Result<Self> {
        let spline = CubicSpline::new(samples)?;
        let length = spline.total_length();
        Ok(BoundaryArc { shape: Shape::Spline(spline), length, reversed: false })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn is_straight(&self) -> bool {
        matches!(self.shape, Shape::Segment { .. })
    }

    pub fn source(&self) -> ArcSource {
        let src = match &self.shape {
            Shape::Segment { a, b } => ArcSource::Segment { a: *a, b: *b },
            Shape::Circle { center, radius, theta0, theta1 } => {
                ArcSource::Circle { center: *center, radius: *radius, theta0: *theta0, theta1: *theta1 }
            }
            Shape::Spline(sp) => ArcSource::Spline { samples: sp.samples() },
        };
        if !self.reversed {
            return src;
        }
        match src {
            ArcSource::Segment { a, b } => ArcSource::Segment { a: b, b: a },
            ArcSource::Circle { center, radius, theta0, theta1 } => {
                ArcSource::Circle { center, radius, theta0: theta1, theta1: theta0 }
            }
            ArcSource::Spline { mut samples } => {
                samples.reverse();
                ArcSource::Spline { samples }
            }
        }
    }

    pub fn reversed(&self) -> Self {
        let mut r = self.clone();
        r.reversed = !r.reversed;
        r
    }

    fn raw(&self, s: f64) -> f64 {
        if self.reversed {
            self.length - s
        } else {
            s
        }
    }

    pub fn point(&self, s: f64) -> Point {
        let s = self.raw(s.clamp(0.0, self.length));
        match &self.shape {
            Shape::Segment { a, b } => a.lerp(*b, s / self.length),
            Shape::Circle { center, radius, theta0, theta1 } => {
                let dir = (theta1 - theta0).signum();
                *center + Point::polar(*radius, theta0 + dir * s / radius)
            }
            Shape::Spline(sp) => sp.point_at_length(s),
        }
    }

    /// Unit tangent in the direction of increasing arc length.
    pub fn tangent(&self, s: f64) -> Point {
        let raw = self.raw(s.clamp(0.0, self.length));
        let t = match &self.shape {
            Shape::Segment { a, b } => (*b - *a).normalized(),
            Shape::Circle { theta0, theta1, radius, .. } => {
                let dir = (theta1 - theta0).signum();
                let th = theta0 + dir * raw / radius;
                Point::new(-th.sin(), th.cos()) * dir
            }
            Shape::Spline(sp) => sp.unit_tangent_at_length(raw),
        };
        if self.reversed {
            -t
        } else {
            t
        }
    }

    /// Signed curvature; positive where the curve turns left.
    pub fn curvature(&self, s: f64) -> f64 {
        let raw = self.raw(s.clamp(0.0, self.length));
        let k = match &self.shape {
            Shape::Segment { .. } => 0.0,
            Shape::Circle { radius, theta0, theta1, .. } => (theta1 - theta0).signum() / radius,
            Shape::Spline(sp) => sp.curvature_at_length(raw),
        };
        if self.reversed {
            -k
        } else {
            k
        }
    }

    /// Second derivative with respect to arc length.
    pub fn second_derivative(&self, s: f64) -> Point {
        self.tangent(s).perp() * self.curvature(s)
    }

    pub fn start(&self) -> Point {
        self.point(0.0)
    }

    pub fn end(&self) -> Point {
        self.point(self.length)
    }

    /// Polyline through `n + 1` equally spaced arc-length samples.
    pub fn polyline(&self, n: usize) -> Vec<Point> {
        (0..=n).map(|i| self.point(self.length * i as f64 / n as f64)).collect()
    }

    /// ∫ x dy along the arc (signed area contribution).
    pub fn area_integral(&self) -> f64 {
        match &self.shape {
            Shape::Segment { .. } => {
                let (a, b) = (self.start(), self.end());
                0.5 * (a.x + b.x) * (b.y - a.y)
            }
            _ => quad::integrate(|s| self.point(s).x * self.tangent(s).y, 0.0, self.length, 1e-13),
        }
    }

    /// Maximum deviation between the arc and its chord between two arc
    /// length positions, estimated by sampling.
    pub fn sagitta(&self, s0: f64, s1: f64) -> f64 {
        if self.is_straight() {
            return 0.0;
        }
        let (a, b) = (self.point(s0), self.point(s1));
        let d = b - a;
        let len = d.norm();
        (1..8)
            .map(|i| {
                let p = self.point(s0 + (s1 - s0) * i as f64 / 8.0);
                if len > 0.0 {
                    (p - a).cross(d).abs() / len
                } else {
                    p.dist(a)
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Interpolating cubic spline in the chord-length parameter, with an arc
/// length table for reparametrization.
#[derive(Debug, Clone, PartialEq)]
struct CubicSpline {
    t: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    mx: Vec<f64>,
    my: Vec<f64>,
    // arc length at fine breakpoints `tb`
    tb: Vec<f64>,
    sb: Vec<f64>,
}

const SUBDIV: usize = 16;

impl CubicSpline {
    fn new(samples: &[Point]) -> Result<Self> {
        let closed = samples.len() > 3 && samples[0].dist(samples[samples.len() - 1]) < 1e-12;
        let pts: Vec<Point> = if closed { samples[..samples.len() - 1].to_vec() } else { samples.to_vec() };
        if pts.len() < 3 {
            return Err(Error::Degenerate("spline needs at least 3 distinct samples".into()));
        }
        let mut t = vec![0.0];
        let mut all = pts.clone();
        if closed {
            all.push(pts[0]);
        }
        for w in all.windows(2) {
            let h = w[0].dist(w[1]);
            if !(h > 0.0) {
                return Err(Error::Degenerate("repeated spline sample".into()));
            }
            t.push(t.last().unwrap() + h);
        }
        let x: Vec<f64> = all.iter().map(|p| p.x).collect();
        let y: Vec<f64> = all.iter().map(|p| p.y).collect();
        let mx = second_derivatives(&t, &x, closed);
        let my = second_derivatives(&t, &y, closed);
        let mut sp = CubicSpline { t, x, y, mx, my, tb: vec![], sb: vec![] };
        sp.build_length_table();
        Ok(sp)
    }

    fn samples(&self) -> Vec<Point> {
        self.x.iter().zip(&self.y).map(|(&x, &y)| Point::new(x, y)).collect()
    }

    fn interval(&self, t: f64) -> usize {
        let n = self.t.len() - 1;
        match self.t.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }

    fn eval(&self, t: f64) -> (Point, Point, Point) {
        let i = self.interval(t);
        let h = self.t[i + 1] - self.t[i];
        let a = (self.t[i + 1] - t) / h;
        let b = (t - self.t[i]) / h;
        let comp = |v: &[f64], m: &[f64]| {
            let p = a * v[i] + b * v[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
            let d = (v[i + 1] - v[i]) / h + (-(3.0 * a * a - 1.0) * m[i] + (3.0 * b * b - 1.0) * m[i + 1]) * h / 6.0;
            let dd = a * m[i] + b * m[i + 1];
            (p, d, dd)
        };
        let (px, dx, ddx) = comp(&self.x, &self.mx);
        let (py, dy, ddy) = comp(&self.y, &self.my);
        (Point::new(px, py), Point::new(dx, dy), Point::new(ddx, ddy))
    }

    fn speed(&self, t: f64) -> f64 {
        self.eval(t).1.norm()
    }

    fn build_length_table(&mut self) {
        let mut tb = vec![self.t[0]];
        let mut sb = vec![0.0];
        for i in 0..self.t.len() - 1 {
            for j in 1..=SUBDIV {
                let t0 = *tb.last().unwrap();
                let t1 = self.t[i] + (self.t[i + 1] - self.t[i]) * j as f64 / SUBDIV as f64;
                let ds = quad::integrate(|t| self.speed(t), t0, t1, 1e-15);
                tb.push(t1);
                sb.push(sb.last().unwrap() + ds);
            }
        }
        self.tb = tb;
        self.sb = sb;
    }

    fn total_length(&self) -> f64 {
        *self.sb.last().unwrap()
    }

    fn param_at_length(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.total_length());
        let j = match self.sb.binary_search_by(|v| v.partial_cmp(&s).unwrap()) {
            Ok(j) => return self.tb[j],
            Err(j) => j.saturating_sub(1).min(self.sb.len() - 2),
        };
        let (t0, t1, s0, s1) = (self.tb[j], self.tb[j + 1], self.sb[j], self.sb[j + 1]);
        let mut t = t0 + (t1 - t0) * (s - s0) / (s1 - s0);
        for _ in 0..20 {
            let f = s0 + quad::integrate(|u| self.speed(u), t0, t, 1e-16) - s;
            let step = f / self.speed(t);
            t = (t - step).clamp(t0, t1);
            if step.abs() < 1e-15 * (1.0 + t.abs()) {
                break;
            }
        }
        t
    }

    fn point_at_length(&self, s: f64) -> Point {
        self.eval(self.param_at_length(s)).0
    }

    fn unit_tangent_at_length(&self, s: f64) -> Point {
        self.eval(self.param_at_length(s)).1.normalized()
    }

    fn curvature_at_length(&self, s: f64) -> f64 {
        let (_, d, dd) = self.eval(self.param_at_length(s));
        d.cross(dd) / d.norm().powi(3)
    }
}

/// Spline second derivatives: natural end conditions, or periodic when
/// `periodic` (then `v` repeats its first value at the end).
fn second_derivatives(t: &[f64], v: &[f64], periodic: bool) -> Vec<f64> {
    let n = t.len() - 1;
    let h: Vec<f64> = (0..n).map(|i| t[i + 1] - t[i]).collect();
    let slope = |i: usize| (v[i + 1] - v[i]) / h[i];
    if !periodic {
        let mut m = vec![0.0; n + 1];
        if n < 2 {
            return m;
        }
        // tridiagonal system for interior unknowns 1..n-1
        let k = n - 1;
        let mut diag = vec![0.0; k];
        let mut lower = vec![0.0; k];
        let mut upper = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for r in 0..k {
            let i = r + 1;
            lower[r] = h[i - 1] / 6.0;
            diag[r] = (h[i - 1] + h[i]) / 3.0;
            upper[r] = h[i] / 6.0;
            rhs[r] = slope(i) - slope(i - 1);
        }
        for r in 1..k {
            let w = lower[r] / diag[r - 1];
            diag[r] -= w * upper[r - 1];
            rhs[r] -= w * rhs[r - 1];
        }
        let mut sol = vec![0.0; k];
        sol[k - 1] = rhs[k - 1] / diag[k - 1];
        for r in (0..k - 1).rev() {
            sol[r] = (rhs[r] - upper[r] * sol[r + 1]) / diag[r];
        }
        m[1..n].copy_from_slice(&sol);
        return m;
    }
    // periodic: unknowns m_0..m_{n-1}, m_n = m_0; dense solve
    let mut a = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let next = (i + 1) % n;
        a[i * n + prev] += h[prev] / 6.0;
        a[i * n + i] += (h[prev] + h[i]) / 3.0;
        a[i * n + next] += h[i] / 6.0;
        rhs[i] = slope(i) - slope(prev);
    }
    let mut m = gauss_solve(n, a, rhs);
    m.push(m[0]);
    m
}

fn gauss_solve(n: usize, mut a: Vec<f64>, mut b: Vec<f64>) -> Vec<f64> {
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i * n + c].abs().partial_cmp(&a[j * n + c].abs()).unwrap()).unwrap();
        if p != c {
            for j in 0..n {
                a.swap(c * n + j, p * n + j);
            }
            b.swap(c, p);
        }
        for r in c + 1..n {
            let f = a[r * n + c] / a[c * n + c];
            if f != 0.0 {
                for j in c..n {
                    a[r * n + j] -= f * a[c * n + j];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|j| a[r * n + j] * x[j]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn circle_quantities() {
        let c = BoundaryArc::circular(Point::new(0.0, 0.0), 2.0, 0.0, PI).unwrap();
        assert!((c.length() - 2.0 * PI).abs() < 1e-14);
        assert!((c.curvature(1.0) - 0.5).abs() < 1e-15);
        let cw = c.reversed();
        assert!((cw.curvature(1.0) + 0.5).abs() < 1e-15);
        assert!(cw.start().dist(Point::new(-2.0, 0.0)) < 1e-14);
    }

    #[test]
    fn spline_is_unit_speed_with_consistent_curvature() {
        let samples: Vec<Point> = (0..=40).map(|i| Point::polar(1.0, 2.0 * PI * i as f64 / 40.0)).collect();
        let sp = BoundaryArc::spline(&samples).unwrap();
        assert!((sp.length() - 2.0 * PI).abs() < 1e-4);
        let h = 1e-4;
        for i in 1..20 {
            let s = sp.length() * i as f64 / 20.0;
            assert!((sp.tangent(s).norm() - 1.0).abs() < 1e-10);
            let fd = (sp.point(s + h) - sp.point(s - h)) * (0.5 / h);
            assert!((fd - sp.tangent(s)).norm() < 1e-6);
            let fdd = (sp.point(s + h) + sp.point(s - h) - sp.point(s) * 2.0) * (1.0 / (h * h));
            let k_fd = sp.tangent(s).cross(fdd);
            assert!((k_fd - sp.curvature(s)).abs() < 1e-3, "{k_fd} vs {}", sp.curvature(s));
            // interpolation error ~ h²/12 with h = 2π/40
            assert!((sp.curvature(s) - 1.0).abs() < 5e-3, "kappa {}", sp.curvature(s));
        }
    }
}
