//! One-dimensional Robin model operators `−f″` on an interval, solved
//! through their secular equations, plus a finite difference cross-check and
//! the separable spectrum of the Robin square.
//!
//! Negative eigenvalues are written `E = −k²` with `k > 0`. Boundary
//! conditions use the outward normal: at the left end `−f′(0) = γ f(0)`.

use crate::error::{Error, Result};
use crate::linalg::dense::tridiagonal_eigenvalues;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Robin (γ) at 0, Dirichlet at l.
    RobinDirichlet,
    /// Robin (γ) at 0, Robin (β) at l.
    RobinRobin,
    /// Robin (γ) at 0, Neumann at l.
    RobinNeumann,
    /// Robin (γ) at both ends.
    RobinRobinSymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Secular1D<T> {
    pub kind: Kind,
    pub gamma: T,
    pub beta: T,
    pub l: T,
}

impl<T: Real> Secular1D<T> {
    pub fn robin_dirichlet(gamma: T, l: T) -> Self {
        Secular1D { kind: Kind::RobinDirichlet, gamma, beta: T::zero(), l }
    }

    pub fn robin_robin(gamma: T, beta: T, l: T) -> Self {
        Secular1D { kind: Kind::RobinRobin, gamma, beta, l }
    }

    pub fn robin_neumann(gamma: T, l: T) -> Self {
        Secular1D { kind: Kind::RobinNeumann, gamma, beta: T::zero(), l }
    }

    pub fn robin_symmetric(gamma: T, l: T) -> Self {
        Secular1D { kind: Kind::RobinRobinSymmetric, gamma, beta: gamma, l }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.l > T::zero()
            && self.gamma > T::zero()
            && self.beta >= T::zero()
            && self.l.is_finite()
            && self.gamma.is_finite()
            && self.beta.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "1D operator needs l > 0, gamma > 0, beta >= 0 (got l={}, gamma={}, beta={})",
                self.l, self.gamma, self.beta
            )))
        }
    }

    fn k_max(&self) -> T {
        self.gamma + self.beta + T::of(10.0) / self.l
    }

    /// All negative eigenvalues, ascending.
    pub fn negative_eigenvalues(&self) -> Vec<T> {
        if self.validate().is_err() {
            return Vec::new();
        }
        let (g, b, l) = (self.gamma, self.beta, self.l);
        let lo = T::of(1e-8);
        let hi = self.k_max();
        let mut ks: Vec<T> = match self.kind {
            Kind::RobinDirichlet if g * l <= T::one() => Vec::new(),
            Kind::RobinDirichlet => bracketed_root(|k| tanh_over_k(k, l) - g.recip(), lo, hi).into_iter().collect(),
            Kind::RobinNeumann => bracketed_root(|k| k * (k * l).tanh() - g, lo, hi).into_iter().collect(),
            Kind::RobinRobin => {
                if b == g {
                    symmetric_negative_k(g, l)
                } else {
                    scan_roots(|k| k * (k * l).tanh() + g * b * tanh_over_k(k, l) - (g + b), lo, hi)
                }
            }
            Kind::RobinRobinSymmetric => symmetric_negative_k(g, l),
        };
        ks.sort_by(|a, b| b.partial_cmp(a).unwrap());
        ks.into_iter().map(|k| -k * k).collect()
    }
}

/// tanh(kl)/k, continuous at k = 0.
fn tanh_over_k<T: Real>(k: T, l: T) -> T {
    let x = k * l;
    if x.abs() < T::of(1e-4) {
        l * (T::one() - x * x / T::of(3.0))
    } else {
        x.tanh() / k
    }
}

fn rel_tol<T: Real>() -> T {
    T::of(1e-13).max(T::of(4.0) * T::epsilon())
}

/// Root of a function with a sign change on [a, b], by secant steps
/// safeguarded with bisection; returns `None` without a sign change.
fn bracketed_root<T: Real, F: Fn(T) -> T>(f: F, mut a: T, mut b: T) -> Option<T> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == T::zero() {
        return Some(a);
    }
    if fb == T::zero() {
        return Some(b);
    }
    if (fa > T::zero()) == (fb > T::zero()) {
        return None;
    }
    let half = T::of(0.5);
    let mut x = half * (a + b);
    for _ in 0..200 {
        let fx = f(x);
        if fx == T::zero() {
            return Some(x);
        }
        if (fx > T::zero()) == (fa > T::zero()) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if (b - a).abs() <= rel_tol::<T>() * x.abs() {
            break;
        }
        let secant = b - fb * (b - a) / (fb - fa);
        let mid = half * (a + b);
        // Secant only while it stays well inside the bracket.
        let inside = secant > a && secant < b;
        let margin = (b - a) * T::of(0.01);
        x = if inside && secant - a > margin && b - secant > margin { secant } else { mid };
    }
    Some(half * (a + b))
}

/// All sign changes of `f` on [lo, hi]; local minima that dip below zero
/// between samples are also resolved.
fn scan_roots<T: Real, F: Fn(T) -> T>(f: F, lo: T, hi: T) -> Vec<T> {
    let n = 4000;
    let xs: Vec<T> = (0..=n).map(|i| lo + (hi - lo) * T::of(i as f64 / n as f64)).collect();
    let fs: Vec<T> = xs.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for i in 0..n {
        if (fs[i] > T::zero()) != (fs[i + 1] > T::zero()) {
            if let Some(r) = bracketed_root(&f, xs[i], xs[i + 1]) {
                roots.push(r);
            }
        }
    }
    for i in 1..n {
        if fs[i] > T::zero() && fs[i] <= fs[i - 1] && fs[i] <= fs[i + 1] {
            let (xm, fm) = golden_min(&f, xs[i - 1], xs[i + 1]);
            if fm < T::zero() {
                roots.extend(bracketed_root(&f, xs[i - 1], xm));
                roots.extend(bracketed_root(&f, xm, xs[i + 1]));
            }
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() <= T::of(1e-12) * b.abs());
    roots
}

fn golden_min<T: Real, F: Fn(T) -> T>(f: &F, mut a: T, mut b: T) -> (T, T) {
    let r = T::of(0.618_033_988_749_894_8);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc < T::zero() || fd < T::zero() || (b - a).abs() <= T::epsilon() * b.abs() {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Decay rates of the even and odd bound states of the symmetric Robin
/// interval of length l.
fn symmetric_negative_k<T: Real>(g: T, l: T) -> Vec<T> {
    let h = l * T::of(0.5);
    let hi = g + g + T::of(10.0) / l;
    let mut ks = Vec::new();
    ks.extend(bracketed_root(|k| k * (k * h).tanh() - g, T::of(1e-8), hi));
    ks.extend(bracketed_root(|k| tanh_over_k(k, h) - g.recip(), T::of(1e-8), hi));
    ks
}

/// The lowest `count` eigenvalues of `−f″` on (0, l) with Robin parameter γ
/// at both ends, including the nonnegative part of the spectrum.
pub fn symmetric_robin_spectrum<T: Real>(gamma: T, l: T, count: usize) -> Result<Vec<T>> {
    if !(gamma * l > T::of(2.0)) {
        return Err(Error::InvalidArgument(format!("symmetric Robin spectrum needs gamma*l > 2 (got {})", gamma * l)));
    }
    let mut out: Vec<T> = symmetric_negative_k(gamma, l).into_iter().map(|k| -k * k).collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Oscillatory modes: with c = l/2 and phase θ(k) = kc + atan(γ/k), even
    // modes sit at θ = mπ and odd modes at θ = (m + 1/2)π, m ≥ 1. θ is
    // increasing when γc > 1.
    let c = l * T::of(0.5);
    let pi = T::of(std::f64::consts::PI);
    let mut j = 2;
    while out.len() < count {
        let target = T::of(j as f64) * pi * T::of(0.5);
        let theta = |k: T| k * c + (gamma / k).atan() - target;
        let lo = (target - pi * T::of(0.5)) / c;
        let hi = target / c;
        let k = bracketed_root(theta, lo.max(T::of(1e-12)), hi)
            .ok_or_else(|| Error::NoConvergence(format!("oscillatory root {j} not bracketed")))?;
        out.push(k * k);
        j += 1;
    }
    out.truncate(count);
    Ok(out)
}

/// The `n` smallest eigenvalues of the Robin Laplacian on the square
/// (0, side)², from sums of one-dimensional eigenvalues.
pub fn square_oracle<T: Real>(gamma: T, side: T, n: usize) -> Result<Vec<T>> {
    let one_d = symmetric_robin_spectrum(gamma, side, n.max(2))?;
    let mut sums = Vec::with_capacity(one_d.len() * one_d.len());
    for &a in &one_d {
        for &b in &one_d {
            sums.push(a + b);
        }
    }
    sums.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sums.truncate(n);
    Ok(sums)
}

/// Lowest five eigenvalues of a second order finite difference model of the
/// operator on `grid_n` cells, with ghost-node boundary closures.
pub fn fd_oracle_1d<T: Real>(op: &Secular1D<T>, grid_n: usize) -> Result<Vec<T>> {
    op.validate()?;
    if grid_n < 100 {
        return Err(Error::InvalidArgument(format!("grid_n must be at least 100 (got {grid_n})")));
    }
    let h = op.l / T::of(grid_n as f64);
    let h2 = h * h;
    let two = T::of(2.0);
    let sqrt2 = two.sqrt();
    let right_dirichlet = op.kind == Kind::RobinDirichlet;
    // nodes 0..=grid_n, minus the last when it carries a Dirichlet value
    let m = if right_dirichlet { grid_n } else { grid_n + 1 };
    let mut diag = vec![two / h2; m];
    let mut off = vec![-T::one() / h2; m - 1];
    diag[0] = (two - two * h * op.gamma) / h2;
    off[0] = -sqrt2 / h2;
    if !right_dirichlet {
        let beta = match op.kind {
            Kind::RobinRobin => op.beta,
            Kind::RobinRobinSymmetric => op.gamma,
            _ => T::zero(),
        };
        diag[m - 1] = (two - two * h * beta) / h2;
        off[m - 2] = -sqrt2 / h2;
    }
    let mut ev = tridiagonal_eigenvalues(&diag, &off)?;
    ev.truncate(5);
    Ok(ev)
}
