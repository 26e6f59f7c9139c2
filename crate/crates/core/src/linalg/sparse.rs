//! Compressed sparse row storage with a pattern that can be shared between
//! matrices, so that linear combinations are entry-wise.

use std::sync::Arc;

use crate::scalar::Real;

/// Sparsity structure of a square matrix; column indices sorted within rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
}

impl Pattern {
    /// Builds a pattern from per-row column lists (duplicates removed).
    pub fn from_rows(mut rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        indptr.push(0);
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            debug_assert!(row.iter().all(|&j| j < n));
            indices.extend_from_slice(row);
            indptr.push(indices.len());
        }
        Pattern { n, indptr, indices }
    }

    /// Symmetric pattern of a finite element space: every pair of degrees of
    /// freedom sharing an element, plus the diagonal.
    pub fn from_elements<'a, I>(n: usize, elements: I) -> Self
    where
        I: IntoIterator<Item = &'a [usize]>,
    {
        let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for el in elements {
            for &a in el {
                for &b in el {
                    rows[a].push(b);
                }
            }
        }
        Self::from_rows(rows)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.indices[self.indptr[i]..self.indptr[i + 1]]
    }

    /// Position of entry (i, j) in the value array.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.indptr[i];
        self.row(i).binary_search(&j).ok().map(|p| lo + p)
    }
}

#[derive(Debug, Clone)]
pub struct CsrMatrix<T> {
    pattern: Arc<Pattern>,
    data: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    pub fn zeros(pattern: Arc<Pattern>) -> Self {
        let data = vec![T::zero(); pattern.nnz()];
        CsrMatrix { pattern, data }
    }

    /// Assembles from triplets; duplicate entries are summed in sorted order
    /// so the result does not depend on the input order beyond rounding of
    /// equal keys.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut t: Vec<(usize, usize, T)> = triplets.to_vec();
        t.sort_by_key(|a| (a.0, a.1));
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(i, j, _) in &t {
            rows[i].push(j);
        }
        let pattern = Arc::new(Pattern::from_rows(rows));
        let mut m = Self::zeros(pattern);
        for &(i, j, v) in &t {
            m.add(i, j, v);
        }
        m
    }

    pub fn from_dense(n: usize, a: &[T]) -> Self {
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if a[i * n + j] != T::zero() {
                    t.push((i, j, a[i * n + j]));
                }
            }
        }
        Self::from_triplets(n, &t)
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, T::one())).collect();
        Self::from_triplets(n, &t)
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn dim(&self) -> usize {
        self.pattern.n
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.pattern.find(i, j).map_or(T::zero(), |p| self.data[p])
    }

    /// Adds `v` to entry (i, j), which must be in the pattern.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let p = self.pattern.find(i, j).unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.data[p] += v;
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        let p = &*self.pattern;
        for i in 0..p.n {
            let mut s = T::zero();
            for k in p.indptr[i]..p.indptr[i + 1] {
                s += self.data[k] * x[p.indices[k]];
            }
            y[i] = s;
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.dim()];
        self.matvec(x, &mut y);
        y
    }

    /// xᵀ A y.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> T {
        let p = &*self.pattern;
        let mut total = T::zero();
        for i in 0..p.n {
            let mut s = T::zero();
            for k in p.indptr[i]..p.indptr[i + 1] {
                s += self.data[k] * y[p.indices[k]];
            }
            total += x[i] * s;
        }
        total
    }

    /// a·self + b·other; both matrices must share one pattern.
    pub fn lin_comb(&self, a: T, other: &Self, b: T) -> Self {
        assert!(
            Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern,
            "lin_comb requires a common pattern"
        );
        let data = self.data.iter().zip(&other.data).map(|(&x, &y)| a * x + b * y).collect();
        CsrMatrix { pattern: self.pattern.clone(), data }
    }

    pub fn scaled(&self, a: T) -> Self {
        CsrMatrix { pattern: self.pattern.clone(), data: self.data.iter().map(|&x| a * x).collect() }
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> T {
        let p = &*self.pattern;
        (0..p.n)
            .map(|i| self.data[p.indptr[i]..p.indptr[i + 1]].iter().map(|v| v.abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Largest |a_ij − a_ji| relative to the largest entry.
    pub fn asymmetry(&self) -> T {
        let p = &*self.pattern;
        let mut worst = T::zero();
        let mut scale = T::zero();
        for i in 0..p.n {
            for k in p.indptr[i]..p.indptr[i + 1] {
                let j = p.indices[k];
                scale = scale.max(self.data[k].abs());
                worst = worst.max((self.data[k] - self.get(j, i)).abs());
            }
        }
        if scale > T::zero() {
            worst / scale
        } else {
            T::zero()
        }
    }

    pub fn to_dense(&self) -> Vec<T> {
        let n = self.dim();
        let p = &*self.pattern;
        let mut a = vec![T::zero(); n * n];
        for i in 0..n {
            for k in p.indptr[i]..p.indptr[i + 1] {
                a[i * n + p.indices[k]] = self.data[k];
            }
        }
        a
    }

    /// Symmetric permutation P A Pᵀ with `perm[new] = old`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.dim();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let p = &*self.pattern;
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..n {
            for k in p.indptr[i]..p.indptr[i + 1] {
                t.push((inv[i], inv[p.indices[k]], self.data[k]));
            }
        }
        Self::from_triplets(n, &t)
    }

    pub fn cast<U: Real>(&self) -> CsrMatrix<U> {
        CsrMatrix { pattern: self.pattern.clone(), data: self.data.iter().map(|&v| U::of(v.to_f64_lossy())).collect() }
    }
}

pub fn dot<T: Real>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).map(|(&a, &b)| a * b).sum()
}

pub fn norm2<T: Real>(x: &[T]) -> T {
    dot(x, x).sqrt()
}

/// y ← y + a·x
pub fn axpy<T: Real>(a: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::<f64>::from_triplets(2, &[(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0)]);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn matvec_and_bilinear() {
        let a = CsrMatrix::<f64>::from_dense(2, &[2.0, -1.0, -1.0, 2.0]);
        assert_eq!(a.mul_vec(&[1.0, 1.0]), vec![1.0, 1.0]);
        assert_eq!(a.bilinear(&[1.0, 0.0], &[0.0, 1.0]), -1.0);
        assert_eq!(a.norm_inf(), 3.0);
        assert_eq!(a.asymmetry(), 0.0);
    }

    #[test]
    fn permutation_roundtrip() {
        let a = CsrMatrix::<f64>::from_dense(3, &[1.0, 2.0, 0.0, 2.0, 5.0, 3.0, 0.0, 3.0, 7.0]);
        let p = a.permuted(&[2, 0, 1]);
        assert_eq!(p.get(0, 0), 7.0);
        assert_eq!(p.get(0, 2), 3.0);
        let back = p.permuted(&[1, 2, 0]);
        assert_eq!(back.to_dense(), a.to_dense());
    }
}
