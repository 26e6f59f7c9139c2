//! Sparse LDLᵀ factorization (up-looking, elimination-tree driven) with a
//! fill-reducing minimum degree ordering. Pivots are taken from the diagonal;
//! a pivot below the caller's floor aborts the factorization so the caller
//! can perturb the matrix and retry.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::sparse::{CsrMatrix, Pattern};
use crate::scalar::Real;

const NONE: usize = usize::MAX;

/// Ordering and elimination tree, reusable for every matrix on one pattern.
#[derive(Debug, Clone)]
pub struct Symbolic {
    n: usize,
    perm: Vec<usize>,
    pinv: Vec<usize>,
    lp: Vec<usize>,
    parent: Vec<usize>,
}

impl Symbolic {
    /// Approximate minimum degree ordering followed by elimination tree and
    /// column counts of L.
    pub fn analyze(pattern: &Pattern) -> Result<Self> {
        let n = pattern.dim();
        let perm = if n == 0 {
            Vec::new()
        } else {
            let (p, _, _) = amd::order(n, pattern.indptr(), pattern.indices(), &amd::Control::default())
                .map_err(|s| Error::Breakdown(format!("ordering failed: {s:?}")))?;
            p
        };
        Ok(Self::with_order(pattern, perm))
    }

    /// Elimination in the given order (`perm[k]` is the k-th pivot row).
    pub fn with_order(pattern: &Pattern, perm: Vec<usize>) -> Self {
        let n = pattern.dim();
        let mut pinv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            pinv[p] = k;
        }
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &j in pattern.row(perm[k]) {
                let mut i = pinv[j];
                if i < k {
                    while flag[i] != k {
                        if parent[i] == NONE {
                            parent[i] = k;
                        }
                        lnz[i] += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                }
            }
        }
        let mut lp = vec![0; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        Symbolic { n, perm, pinv, lp, parent }
    }

    pub fn natural(pattern: &Pattern) -> Self {
        Self::with_order(pattern, (0..pattern.dim()).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of strictly lower entries of L.
    pub fn factor_nnz(&self) -> usize {
        self.lp[self.n]
    }
}

/// Counts of negative, zero and positive eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

/// Pivot below the requested floor at elimination step `step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TinyPivot {
    pub step: usize,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct LdlFactor<T> {
    sym: Arc<Symbolic>,
    li: Vec<usize>,
    lx: Vec<T>,
    d: Vec<T>,
}

impl<T: Real> LdlFactor<T> {
    /// Factorizes P A Pᵀ = L D Lᵀ. `a` must be symmetric with the pattern the
    /// symbolic analysis was computed from.
    pub fn factor(sym: &Arc<Symbolic>, a: &CsrMatrix<T>, pivot_floor: T) -> Result<Self, TinyPivot> {
        let n = sym.n;
        assert_eq!(a.dim(), n, "matrix and symbolic analysis differ in size");
        let pat = a.pattern();
        let (ap, ai, ax) = (pat.indptr(), pat.indices(), a.values());
        let nnz = sym.factor_nnz();
        let mut li = vec![0usize; nnz];
        let mut lx = vec![T::zero(); nnz];
        let mut d = vec![T::zero(); n];
        let mut y = vec![T::zero(); n];
        let mut stack = vec![0usize; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            let kk = sym.perm[k];
            for p in ap[kk]..ap[kk + 1] {
                let mut i = sym.pinv[ai[p]];
                if i <= k {
                    y[i] += ax[p];
                    let mut len = 0;
                    while flag[i] != k {
                        stack[len] = i;
                        len += 1;
                        flag[i] = k;
                        i = sym.parent[i];
                    }
                    while len > 0 {
                        top -= 1;
                        len -= 1;
                        stack[top] = stack[len];
                    }
                }
            }
            let mut dk = y[k];
            y[k] = T::zero();
            for &i in &stack[top..n] {
                let yi = y[i];
                y[i] = T::zero();
                let start = sym.lp[i];
                let end = start + lnz[i];
                for p in start..end {
                    y[li[p]] -= lx[p] * yi;
                }
                let lki = yi / d[i];
                dk -= lki * yi;
                li[end] = k;
                lx[end] = lki;
                lnz[i] += 1;
            }
            if !(dk.abs() >= pivot_floor) {
                return Err(TinyPivot { step: k, value: dk.to_f64_lossy() });
            }
            d[k] = dk;
        }
        Ok(LdlFactor { sym: sym.clone(), li, lx, d })
    }

    /// Sylvester inertia read off the diagonal factor.
    pub fn inertia(&self) -> Inertia {
        let mut out = Inertia::default();
        for &v in &self.d {
            if v < T::zero() {
                out.negative += 1;
            } else if v > T::zero() {
                out.positive += 1;
            } else {
                out.zero += 1;
            }
        }
        out
    }

    pub fn min_abs_pivot(&self) -> T {
        self.d.iter().map(|v| v.abs()).fold(T::infinity(), T::min)
    }

    pub fn dim(&self) -> usize {
        self.sym.n
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.sym.n;
        let mut x: Vec<T> = (0..n).map(|k| b[self.sym.perm[k]]).collect();
        for j in 0..n {
            let xj = x[j];
            for p in self.sym.lp[j]..self.sym.lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for j in 0..n {
            x[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut s = x[j];
            for p in self.sym.lp[j]..self.sym.lp[j + 1] {
                s -= self.lx[p] * x[self.li[p]];
            }
            x[j] = s;
        }
        for k in 0..n {
            b[self.sym.perm[k]] = x[k];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
