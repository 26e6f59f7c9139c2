//! Dense symmetric kernels on row-major `n × n` buffers: Cholesky,
//! Householder tridiagonalization with implicit QL, Bunch–Kaufman inertia.

use crate::error::{Error, Result};
use crate::linalg::ldl::Inertia;
use crate::scalar::Real;

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<T: Real>(n: usize, a: &[T]) -> Result<Vec<T>> {
    let mut l = vec![T::zero(); n * n];
    for j in 0..n {
        let mut s = a[j * n + j];
        for k in 0..j {
            s -= l[j * n + k] * l[j * n + k];
        }
        if !(s > T::zero()) {
            return Err(Error::Breakdown(format!("matrix not positive definite at column {j}")));
        }
        let d = s.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Ok(l)
}

/// Solves L y = b in place.
pub fn forward_subst<T: Real>(n: usize, l: &[T], b: &mut [T]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves Lᵀ x = y in place.
pub fn backward_subst<T: Real>(n: usize, l: &[T], b: &mut [T]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Eigen-decomposition of a dense symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen<T> {
    /// Ascending eigenvalues.
    pub values: Vec<T>,
    /// Row-major `n × n`, column `j` is the eigenvector of `values[j]`.
    pub vectors: Vec<T>,
}

/// Eigenvalues and orthonormal eigenvectors of a symmetric matrix.
pub fn sym_eigen<T: Real>(n: usize, a: &[T]) -> Result<SymEigen<T>> {
    if n == 0 {
        return Ok(SymEigen { values: vec![], vectors: vec![] });
    }
    let mut v = a.to_vec();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(n, &mut v, &mut d, &mut e);
    // the reductions work on the transpose so that updates touch rows
    tql2(n, &mut d, &mut e, Some(&mut v))?;
    for i in 0..n {
        for j in 0..i {
            v.swap(i * n + j, j * n + i);
        }
    }
    Ok(SymEigen { values: d, vectors: v })
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (length n−1), ascending.
pub fn tridiagonal_eigenvalues<T: Real>(diag: &[T], off: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![T::zero(); n];
    for (ei, &o) in e.iter_mut().skip(1).zip(off) {
        *ei = o;
    }
    tql2(n, &mut d, &mut e, None)?;
    Ok(d)
}

/// Generalized problem A x = λ M x with M positive definite. Eigenvectors are
/// M-orthonormal.
pub fn generalized_eigen<T: Real>(n: usize, a: &[T], m: &[T]) -> Result<SymEigen<T>> {
    let l = cholesky(n, m)?;
    // C = L⁻¹ A L⁻ᵀ
    let mut c = a.to_vec();
    for j in 0..n {
        let mut col: Vec<T> = (0..n).map(|i| c[i * n + j]).collect();
        forward_subst(n, &l, &mut col);
        for i in 0..n {
            c[i * n + j] = col[i];
        }
    }
    for i in 0..n {
        forward_subst(n, &l, &mut c[i * n..(i + 1) * n]);
    }
    for i in 0..n {
        for j in 0..i {
            let s = (c[i * n + j] + c[j * n + i]) * T::of(0.5);
            c[i * n + j] = s;
            c[j * n + i] = s;
        }
    }
    let mut eig = sym_eigen(n, &c)?;
    for j in 0..n {
        let mut col: Vec<T> = (0..n).map(|i| eig.vectors[i * n + j]).collect();
        backward_subst(n, &l, &mut col);
        for i in 0..n {
            eig.vectors[i * n + j] = col[i];
        }
    }
    Ok(eig)
}

fn tred2<T: Real>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) {
    let idx = |i: usize, j: usize| j * n + i;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = T::zero();
                v[idx(j, i)] = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in j + 1..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = T::zero();
    }
    v[idx(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

/// Implicit QL on a tridiagonal matrix (`e[i]` couples rows i−1 and i).
/// Accumulates rotations into `v` when given; sorts ascending.
fn tql2<T: Real>(n: usize, d: &mut [T], e: &mut [T], mut v: Option<&mut [T]>) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 100 {
                    return Err(Error::NoConvergence(format!("tridiagonal QL stalled at index {l}")));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (T::of(2.0) * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        for k in 0..n {
                            let h = v[(i + 1) * n + k];
                            v[(i + 1) * n + k] = s * v[i * n + k] + c * h;
                            v[i * n + k] = c * v[i * n + k] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            if let Some(v) = v.as_deref_mut() {
                for j in 0..n {
                    v.swap(i * n + j, k * n + j);
                }
            }
        }
    }
    Ok(())
}

/// Inertia of a dense symmetric matrix by Bunch–Kaufman symmetric pivoting.
/// Pivots with magnitude ≤ `zero_tol` times the largest entry count as zero.
pub fn bunch_kaufman_inertia<T: Real>(n: usize, a: &[T], zero_tol: T) -> Inertia {
    let mut w = a.to_vec();
    let idx = |i: usize, j: usize| i * n + j;
    let alpha = (T::one() + T::of(17.0).sqrt()) / T::of(8.0);
    let scale = w.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let tiny = zero_tol * scale;
    let mut out = Inertia::default();
    let swap = |w: &mut Vec<T>, p: usize, q: usize| {
        if p == q {
            return;
        }
        for j in 0..n {
            w.swap(idx(p, j), idx(q, j));
        }
        for i in 0..n {
            w.swap(idx(i, p), idx(i, q));
        }
    };
    let mut k = 0;
    while k < n {
        let absakk = w[idx(k, k)].abs();
        let (mut imax, mut colmax) = (k, T::zero());
        for i in k + 1..n {
            if w[idx(i, k)].abs() > colmax {
                colmax = w[idx(i, k)].abs();
                imax = i;
            }
        }
        if absakk.max(colmax) <= tiny {
            out.zero += 1;
            k += 1;
            continue;
        }
        let two_by_two;
        if absakk >= alpha * colmax {
            two_by_two = false;
        } else {
            let mut rowmax = T::zero();
            for j in k..n {
                if j != imax {
                    rowmax = rowmax.max(w[idx(imax, j)].abs());
                }
            }
            if absakk * rowmax >= alpha * colmax * colmax {
                two_by_two = false;
            } else if w[idx(imax, imax)].abs() >= alpha * rowmax {
                swap(&mut w, k, imax);
                two_by_two = false;
            } else {
                swap(&mut w, k + 1, imax);
                two_by_two = true;
            }
        }
        if !two_by_two {
            let d = w[idx(k, k)];
            if d.abs() <= tiny {
                out.zero += 1;
            } else if d < T::zero() {
                out.negative += 1;
            } else {
                out.positive += 1;
            }
            if d != T::zero() {
                for i in k + 1..n {
                    let li = w[idx(i, k)] / d;
                    if li == T::zero() {
                        continue;
                    }
                    for j in k + 1..n {
                        let t = li * w[idx(k, j)];
                        w[idx(i, j)] -= t;
                    }
                }
            }
            k += 1;
        } else {
            let (a11, a21, a22) = (w[idx(k, k)], w[idx(k + 1, k)], w[idx(k + 1, k + 1)]);
            let det = a11 * a22 - a21 * a21;
            if det < T::zero() {
                out.negative += 1;
                out.positive += 1;
            } else if a11 + a22 < T::zero() {
                out.negative += 2;
            } else {
                out.positive += 2;
            }
            for i in k + 2..n {
                let (b1, b2) = (w[idx(i, k)], w[idx(i, k + 1)]);
                let c1 = (a22 * b1 - a21 * b2) / det;
                let c2 = (a11 * b2 - a21 * b1) / det;
                for j in k + 2..n {
                    let t = c1 * w[idx(k, j)] + c2 * w[idx(k + 1, j)];
                    w[idx(i, j)] -= t;
                }
            }
            k += 2;
        }
    }
    out
}
