//! Lowest eigenpairs of the pencil `(K − γB, M)` and exact eigenvalue
//! counts from the inertia of `K − γB − λM`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::SpectralPencil;
use crate::linalg::dense::{generalized_eigen, sym_eigen};
use crate::linalg::sparse::{axpy, dot, norm2};
use crate::linalg::{CsrMatrix, LdlFactor, Symbolic};
use crate::scalar::Real;

/// Problems up to this dimension are solved by dense reduction.
pub const DENSE_LIMIT: usize = 500;
const STALL_BOUND: f64 = 1e-7;
const STALL_CYCLES: usize = 4;
/// Relative pivot magnitude treated as a zero pivot.
pub const PIVOT_TOL: f64 = 1e-12;
const MAX_COUNT_RETRIES: usize = 3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenResult<T> {
    pub gamma: T,
    /// Ascending.
    pub eigenvalues: Vec<T>,
    /// M-orthonormal, one vector per eigenvalue.
    pub eigenvectors: Vec<Vec<T>>,
    /// `‖(K − γB − E_i M)x_i‖ / ‖x_i‖_M`.
    pub residuals: Vec<T>,
    /// Shift used by the iterative path, `None` for the dense path.
    pub shift: Option<T>,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub dense_limit: usize,
    /// Expected lowest eigenvalue, used to place the first shift.
    pub prediction: Option<f64>,
    pub block_size: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { dense_limit: DENSE_LIMIT, prediction: None, block_size: 4, max_restarts: 400, seed: 0x5EED }
    }
}

/// The `n` smallest eigenpairs.
pub fn solve_lowest<T: Real>(pencil: &SpectralPencil<T>, gamma: T, n: usize, tol: T) -> Result<EigenResult<T>> {
    solve_lowest_with(pencil, gamma, n, tol, &SolverOptions::default())
}

pub fn solve_lowest_with<T: Real>(
    pencil: &SpectralPencil<T>,
    gamma: T,
    n: usize,
    tol: T,
    opts: &SolverOptions,
) -> Result<EigenResult<T>> {
    let dim = pencil.dim();
    if n == 0 || n > dim {
        return Err(Error::InvalidArgument(format!("requested {n} eigenpairs of a pencil of dimension {dim}")));
    }
    let a = pencil.operator(gamma);
    let (values, vectors, shift) = if dim <= opts.dense_limit {
        let (v, x) = dense_lowest(&a, &pencil.m, n)?;
        (v, x, None)
    } else {
        let (v, x, s) = lanczos_lowest(&a, &pencil.m, gamma, n, tol, opts)?;
        (v, x, Some(s))
    };
    let residuals = values.iter().zip(&vectors).map(|(&e, x)| residual(&a, &pencil.m, e, x)).collect();
    Ok(EigenResult { gamma, eigenvalues: values, eigenvectors: vectors, residuals, shift })
}

fn residual<T: Real>(a: &CsrMatrix<T>, m: &CsrMatrix<T>, e: T, x: &[T]) -> T {
    let mut r = a.mul_vec(x);
    let mx = m.mul_vec(x);
    axpy(-e, &mx, &mut r);
    norm2(&r) / dot(x, &mx).sqrt()
}

fn dense_lowest<T: Real>(a: &CsrMatrix<T>, m: &CsrMatrix<T>, n: usize) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    let dim = a.dim();
    let eig = generalized_eigen(dim, &a.to_dense(), &m.to_dense())?;
    let vectors = (0..n).map(|j| (0..dim).map(|i| eig.vectors[i * dim + j]).collect()).collect();
    Ok((eig.values[..n].to_vec(), vectors))
}

/// Factorization of `A − σM` at a shift below the whole spectrum, found by
/// moving the shift down until the inertia has no negative or zero part.
fn factor_below_spectrum<T: Real>(
    a: &CsrMatrix<T>,
    m: &CsrMatrix<T>,
    sym: &Arc<Symbolic>,
    mut sigma: T,
) -> Result<(T, LdlFactor<T>)> {
    for _ in 0..60 {
        let shifted = a.lin_comb(T::one(), m, -sigma);
        let floor = T::of(PIVOT_TOL) * shifted.norm_inf();
        if let Ok(f) = LdlFactor::factor(sym, &shifted, floor) {
            if f.inertia().negative == 0 {
                return Ok((sigma, f));
            }
        }
        sigma = sigma - T::of(0.5) * sigma.abs() - T::one();
    }
    Err(Error::Breakdown("no admissible shift below the spectrum".into()))
}

fn m_orthonormalize<T: Real>(m: &CsrMatrix<T>, basis: &[Vec<T>], x: &mut [T]) -> T {
    let before = dot(x, &m.mul_vec(x)).sqrt();
    for _ in 0..2 {
        let mx = m.mul_vec(x);
        let coeffs: Vec<T> = basis.iter().map(|v| dot(v, &mx)).collect();
        for (v, c) in basis.iter().zip(coeffs) {
            axpy(-c, v, x);
        }
    }
    let nrm = dot(x, &m.mul_vec(x)).sqrt();
    if nrm > T::zero() {
        x.iter_mut().for_each(|v| *v /= nrm);
    }
    if before > T::zero() {
        nrm / before
    } else {
        T::zero()
    }
}

fn combine<T: Real>(vs: &[Vec<T>], coeffs: impl Fn(usize) -> T) -> Vec<T> {
    let mut out = vec![T::zero(); vs[0].len()];
    for (i, v) in vs.iter().enumerate() {
        let c = coeffs(i);
        if c != T::zero() {
            axpy(c, v, &mut out);
        }
    }
    out
}

/// `(A − σM)⁻¹b` with one step of iterative refinement.
fn refined_solve<T: Real>(fac: &LdlFactor<T>, a: &CsrMatrix<T>, m: &CsrMatrix<T>, sigma: T, b: &[T]) -> Vec<T> {
    let mut x = fac.solve(b);
    let mut r = b.to_vec();
    axpy(-T::one(), &a.mul_vec(&x), &mut r);
    axpy(sigma, &m.mul_vec(&x), &mut r);
    let dx = fac.solve(&r);
    axpy(T::one(), &dx, &mut x);
    x
}

/// Removes the M-components along `locked` (M-orthonormal) from `x`.
fn deflate<T: Real>(m: &CsrMatrix<T>, locked: &[Vec<T>], x: &mut [T]) {
    if locked.is_empty() {
        return;
    }
    let mx = m.mul_vec(x);
    let coeffs: Vec<T> = locked.iter().map(|v| dot(v, &mx)).collect();
    for (v, c) in locked.iter().zip(coeffs) {
        axpy(-c, v, x);
    }
}

/// Factorization of `A − σM` whose inertia shows exactly `below`
/// eigenvalues under σ, or `None`.
fn factor_with_count<T: Real>(
    a: &CsrMatrix<T>,
    m: &CsrMatrix<T>,
    sym: &Arc<Symbolic>,
    sigma: T,
    below: usize,
) -> Option<LdlFactor<T>> {
    let shifted = a.lin_comb(T::one(), m, -sigma);
    let floor = T::of(PIVOT_TOL) * shifted.norm_inf();
    let f = LdlFactor::factor(sym, &shifted, floor).ok()?;
    (f.inertia().negative == below).then_some(f)
}

/// Thick-restart block Krylov iteration on `C = (A − σM)⁻¹M` with explicit
/// Rayleigh–Ritz projection in the M inner product. Converged pairs are
/// locked and deflated, and the shift then moves up to just below the next
/// wanted eigenvalue, checked by inertia.
fn lanczos_lowest<T: Real>(
    a: &CsrMatrix<T>,
    m: &CsrMatrix<T>,
    gamma: T,
    n: usize,
    tol: T,
    opts: &SolverOptions,
) -> Result<(Vec<T>, Vec<Vec<T>>, T)> {
    let dim = a.dim();
    let sym = Arc::new(Symbolic::analyze(a.pattern())?);
    let sigma0 = match opts.prediction {
        Some(p) if p < 0.0 => T::of(1.25 * p),
        Some(p) => T::of(p - 1.0 - 0.25 * p.abs()),
        None => -T::of(2.0) * gamma * gamma - T::of(1e-3),
    };
    let (mut sigma, mut fac) = factor_below_spectrum(a, m, &sym, sigma0)?;
    let first_sigma = sigma;

    let p = opts.block_size.clamp(1, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random_vec = |rng: &mut ChaCha8Rng| -> Vec<T> { (0..dim).map(|_| T::of(rng.gen::<f64>() - 0.5)).collect() };

    let mut locked_vals: Vec<T> = Vec::with_capacity(n);
    let mut locked: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut v: Vec<Vec<T>> = Vec::new();
    let mut w: Vec<Vec<T>> = Vec::new();
    let mut pending: Vec<Vec<T>> = (0..p).map(|_| random_vec(&mut rng)).collect();
    let mut stalled = 0;
    let mut prev_rn = T::infinity();
    for _cycle in 0..opts.max_restarts {
        let want = n - locked.len();
        let room = dim - locked.len();
        let max_basis = (2 * want + 4 * p).max(30).min(room);
        let keep = (want + (max_basis - want) / 2).min(max_basis.saturating_sub(p)).max(want.min(max_basis));
        while v.len() < max_basis {
            let block = std::mem::take(&mut pending);
            for mut x in block {
                if v.len() >= max_basis {
                    break;
                }
                deflate(m, &locked, &mut x);
                let mut kept = m_orthonormalize(m, &v, &mut x);
                let mut tries = 0;
                while kept < T::of(1e-8) && tries < 5 {
                    x = random_vec(&mut rng);
                    deflate(m, &locked, &mut x);
                    kept = m_orthonormalize(m, &v, &mut x);
                    tries += 1;
                }
                if kept < T::of(1e-8) {
                    break;
                }
                let mut cx = refined_solve(&fac, a, m, sigma, &m.mul_vec(&x));
                deflate(m, &locked, &mut cx);
                pending.push(cx.clone());
                v.push(x);
                w.push(cx);
            }
            if pending.is_empty() {
                pending.push(random_vec(&mut rng));
            }
        }
        let k = v.len();
        let mut h = vec![T::zero(); k * k];
        for j in 0..k {
            let mw = m.mul_vec(&w[j]);
            for i in 0..k {
                h[i * k + j] = dot(&v[i], &mw);
            }
        }
        for i in 0..k {
            for j in 0..i {
                let s = (h[i * k + j] + h[j * k + i]) * T::of(0.5);
                h[i * k + j] = s;
                h[j * k + i] = s;
            }
        }
        let eig = sym_eigen(k, &h)?;
        // largest θ first
        let order: Vec<usize> = (0..k).rev().collect();
        let theta: Vec<T> = order.iter().map(|&j| eig.values[j]).collect();
        let s_col = |c: usize| -> Vec<T> { (0..k).map(|i| eig.vectors[i * k + order[c]]).collect() };

        // rounding in the solves limits the residual to a multiple of ε‖C‖
        let floor = T::of(1e3) * T::epsilon() * theta[0].abs();
        let mut ritz = Vec::with_capacity(want);
        let mut prefix = 0;
        let mut last_rn = prev_rn;
        for c in 0..want.min(k) {
            let s = s_col(c);
            let y = combine(&v, |i| s[i]);
            let cy = combine(&w, |i| s[i]);
            let mut r = cy.clone();
            axpy(-theta[c], &y, &mut r);
            let rn = dot(&r, &m.mul_vec(&r)).sqrt();
            let mut ok = theta[c] > T::zero() && rn <= (tol * theta[c]).max(floor);
            if c == prefix && !ok {
                // deflation error stalls the residual above a tight tolerance
                if rn <= T::of(STALL_BOUND) * theta[c] && rn > T::of(0.9) * last_rn {
                    stalled += 1;
                } else {
                    stalled = 0;
                }
                last_rn = rn;
                ok = stalled >= STALL_CYCLES;
            }
            if ok && prefix == c {
                prefix += 1;
            }
            ritz.push((y, cy, ok));
        }
        prev_rn = last_rn;
        if prefix > 0 {
            stalled = 0;
            prev_rn = T::infinity();
        }
        if prefix == want {
            for (c, (y, _, _)) in ritz.into_iter().enumerate() {
                locked_vals.push(sigma + T::one() / theta[c]);
                locked.push(y);
            }
            return Ok((locked_vals, locked, first_sigma));
        }
        if k >= room {
            return Err(Error::NoConvergence("Krylov space exhausted without converged Ritz pairs".into()));
        }
        if prefix > 0 {
            for c in 0..prefix {
                locked_vals.push(sigma + T::one() / theta[c]);
                locked.push(ritz[c].0.clone());
            }
            let lo = *locked_vals.last().unwrap();
            let hi = sigma + T::one() / theta[prefix];
            let mut moved = false;
            for frac in [0.5, 0.25, 0.1] {
                let cand = lo + T::of(frac) * (hi - lo);
                if cand > sigma {
                    if let Some(f) = factor_with_count(a, m, &sym, cand, locked.len()) {
                        sigma = cand;
                        fac = f;
                        moved = true;
                        break;
                    }
                }
            }
            let _ = moved;
            // the operator changed: rebuild the basis from the open Ritz vectors
            pending = ritz.into_iter().skip(prefix).map(|(y, _, _)| y).collect();
            pending.truncate(max_basis.min(want + p));
            v.clear();
            w.clear();
            continue;
        }
        let mut nv = Vec::with_capacity(max_basis);
        let mut nw = Vec::with_capacity(max_basis);
        // continue the Krylov sequence from the unconverged Ritz directions
        pending = ritz.iter().filter(|r| !r.2).take(p).map(|r| r.1.clone()).collect();
        for (y, cy, _) in ritz {
            nv.push(y);
            nw.push(cy);
        }
        for c in want..keep.min(k) {
            let s = s_col(c);
            nv.push(combine(&v, |i| s[i]));
            nw.push(combine(&w, |i| s[i]));
        }
        v = nv;
        w = nw;
    }
    Err(Error::NoConvergence(format!("{} restarts without convergence", opts.max_restarts)))
}

/// Outcome of an inertia count, including any perturbation of a
/// degenerate threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub count: usize,
    pub threshold: f64,
    /// Threshold actually factorized; differs after a tiny-pivot retry.
    pub effective_threshold: f64,
    pub retries: usize,
    pub min_pivot: f64,
}

/// Reusable counter: one symbolic analysis for many thresholds.
pub struct InertiaCounter<'a, T> {
    pencil: &'a SpectralPencil<T>,
    sym: Arc<Symbolic>,
}

impl<'a, T: Real> InertiaCounter<'a, T> {
    pub fn new(pencil: &'a SpectralPencil<T>) -> Result<Self> {
        Ok(InertiaCounter { pencil, sym: Arc::new(Symbolic::analyze(pencil.k.pattern())?) })
    }

    /// Number of eigenvalues of the pencil strictly below `threshold`.
    pub fn count(&self, gamma: T, threshold: T) -> Result<CountReport> {
        if !threshold.is_finite() {
            return Err(Error::InvalidArgument("threshold must be finite".into()));
        }
        let op = self.pencil.operator(gamma);
        let mut lambda = threshold;
        for retry in 0..=MAX_COUNT_RETRIES {
            let a = op.lin_comb(T::one(), &self.pencil.m, -lambda);
            let floor = T::of(PIVOT_TOL) * a.norm_inf();
            match LdlFactor::factor(&self.sym, &a, floor) {
                Ok(f) => {
                    return Ok(CountReport {
                        count: f.inertia().negative,
                        threshold: threshold.to_f64_lossy(),
                        effective_threshold: lambda.to_f64_lossy(),
                        retries: retry,
                        min_pivot: f.min_abs_pivot().to_f64_lossy(),
                    })
                }
                Err(_) => lambda = lambda * (T::one() + T::of(1e-10)) + T::of(1e-10),
            }
        }
        Err(Error::Breakdown(format!(
            "tiny pivots persist after {MAX_COUNT_RETRIES} perturbed retries at threshold {}",
            threshold.to_f64_lossy()
        )))
    }
}

/// Number of eigenvalues of `(K − γB, M)` in `(−∞, threshold)`.
pub fn count_below<T: Real>(pencil: &SpectralPencil<T>, gamma: T, threshold: T) -> Result<usize> {
    Ok(InertiaCounter::new(pencil)?.count(gamma, threshold)?.count)
}

pub fn count_below_report<T: Real>(pencil: &SpectralPencil<T>, gamma: T, threshold: T) -> Result<CountReport> {
    InertiaCounter::new(pencil)?.count(gamma, threshold)
}
