//! Dense scalar matrices, banded complex operators and the dominant-singular-value routine.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::scalar::Field;

/// Row-major dense matrix over a field.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<E> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<E>,
}

impl<E: Clone> DenseMatrix<E> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn get(&self, i: usize, j: usize) -> &E {
        &self.data[i * self.cols + j]
    }

    pub fn to_complex<F: Field<E = E>>(&self, f: &F) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| f.to_c64(self.get(i, j)))
    }
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Largest singular value of a dense matrix.
pub fn dense_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Square matrix stored by diagonals: `diag[k][j]` is the entry at `(j + offset_k, j)`.
#[derive(Clone, Debug)]
pub struct Banded {
    pub dim: usize,
    pub diagonals: Vec<(i64, Vec<Complex64>)>,
}

impl Banded {
    pub fn zero(dim: usize) -> Self {
        Banded { dim, diagonals: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Banded { dim, diagonals: vec![(0, vec![Complex64::new(1.0, 0.0); dim])] }
    }

    pub fn bandwidth(&self) -> u64 {
        self.diagonals.iter().map(|(o, _)| o.unsigned_abs()).max().unwrap_or(0)
    }

    /// Adds `v` at `(j + offset, j)`; entries falling outside the square are dropped.
    pub fn add_entry(&mut self, offset: i64, j: usize, v: Complex64) {
        let i = j as i64 + offset;
        if i < 0 || i >= self.dim as i64 || j >= self.dim {
            return;
        }
        let dim = self.dim;
        let slot = match self.diagonals.iter().position(|(o, _)| *o == offset) {
            Some(p) => p,
            None => {
                self.diagonals.push((offset, vec![Complex64::new(0.0, 0.0); dim]));
                self.diagonals.len() - 1
            }
        };
        self.diagonals[slot].1[j] += v;
    }

    /// `self += c · other` (same dimension).
    pub fn add_scaled(&mut self, c: f64, other: &Banded) {
        assert_eq!(self.dim, other.dim);
        for (off, d) in &other.diagonals {
            let slot = match self.diagonals.iter().position(|(o, _)| o == off) {
                Some(p) => p,
                None => {
                    self.diagonals.push((*off, vec![Complex64::new(0.0, 0.0); self.dim]));
                    self.diagonals.len() - 1
                }
            };
            for (a, b) in self.diagonals[slot].1.iter_mut().zip(d) {
                *a += b * c;
            }
        }
    }

    pub fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for (off, d) in &self.diagonals {
            for (j, v) in d.iter().enumerate() {
                let i = j as i64 + off;
                if i >= 0 && (i as usize) < self.dim {
                    out[i as usize] += v * x[j];
                }
            }
        }
    }

    pub fn apply_adjoint(&self, x: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for (off, d) in &self.diagonals {
            for (j, v) in d.iter().enumerate() {
                let i = j as i64 + off;
                if i >= 0 && (i as usize) < self.dim {
                    out[j] += v.conj() * x[i as usize];
                }
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (off, d) in &self.diagonals {
            for (j, v) in d.iter().enumerate() {
                let i = j as i64 + off;
                if i >= 0 && (i as usize) < self.dim {
                    m[(i as usize, j)] += *v;
                }
            }
        }
        m
    }
}

/// A 2×2 block operator with banded blocks.
#[derive(Clone, Debug)]
pub struct BlockBanded {
    pub blocks: [[Banded; 2]; 2],
}

/// Linear operator with adjoint, as needed by [`top_singular`].
pub trait LinearOp {
    fn dims(&self) -> (usize, usize);
    fn apply(&self, x: &[Complex64], out: &mut [Complex64]);
    fn apply_adjoint(&self, x: &[Complex64], out: &mut [Complex64]);
}

impl LinearOp for Banded {
    fn dims(&self) -> (usize, usize) {
        (self.dim, self.dim)
    }
    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        Banded::apply(self, x, out)
    }
    fn apply_adjoint(&self, x: &[Complex64], out: &mut [Complex64]) {
        Banded::apply_adjoint(self, x, out)
    }
}

impl LinearOp for BlockBanded {
    fn dims(&self) -> (usize, usize) {
        let n = self.blocks[0][0].dim;
        (2 * n, 2 * n)
    }
    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        let n = self.blocks[0][0].dim;
        let mut tmp = vec![Complex64::new(0.0, 0.0); n];
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for i in 0..2 {
            for j in 0..2 {
                self.blocks[i][j].apply(&x[j * n..(j + 1) * n], &mut tmp);
                for k in 0..n {
                    out[i * n + k] += tmp[k];
                }
            }
        }
    }
    fn apply_adjoint(&self, x: &[Complex64], out: &mut [Complex64]) {
        let n = self.blocks[0][0].dim;
        let mut tmp = vec![Complex64::new(0.0, 0.0); n];
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for i in 0..2 {
            for j in 0..2 {
                self.blocks[i][j].apply_adjoint(&x[i * n..(i + 1) * n], &mut tmp);
                for k in 0..n {
                    out[j * n + k] += tmp[k];
                }
            }
        }
    }
}

impl LinearOp for DMatrix<Complex64> {
    fn dims(&self) -> (usize, usize) {
        (self.nrows(), self.ncols())
    }
    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        let y = self * DVector::from_column_slice(x);
        out.copy_from_slice(y.as_slice());
    }
    fn apply_adjoint(&self, x: &[Complex64], out: &mut [Complex64]) {
        let y = self.adjoint() * DVector::from_column_slice(x);
        out.copy_from_slice(y.as_slice());
    }
}

#[derive(Clone, Debug)]
pub struct SingularTriple {
    pub sigma: f64,
    /// Left singular vector (unit, or zero when `sigma = 0`).
    pub u: Vec<Complex64>,
    /// Right singular vector (unit).
    pub v: Vec<Complex64>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvdOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub krylov: usize,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions { tol: 1e-12, max_iter: 20_000, krylov: 80 }
    }
}

fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn norm(x: &[Complex64]) -> f64 {
    libm::sqrt(x.iter().map(|z| z.norm_sqr()).sum::<f64>())
}

/// Dominant singular triple by thick-restart Lanczos on `R*R` with full reorthogonalization,
/// started from the normalized all-ones vector. Each restart keeps the top quarter of the
/// Ritz vectors. Converged when the residual, or the gain of the Ritz value over one
/// restart cycle, is below `tol` relative to it.
pub fn top_singular<Op: LinearOp + ?Sized>(op: &Op, opts: SvdOptions) -> SingularTriple {
    let n = op.dims().1;
    top_singular_from(op, opts, &vec![Complex64::new(1.0, 0.0); n])
}

/// As [`top_singular`] from a given nonzero start vector.
pub fn top_singular_from<Op: LinearOp + ?Sized>(op: &Op, opts: SvdOptions, start: &[Complex64]) -> SingularTriple {
    let (m, n) = op.dims();
    let zero = Complex64::new(0.0, 0.0);
    if n == 0 || m == 0 {
        return SingularTriple { sigma: 0.0, u: vec![zero; m], v: vec![zero; n], converged: true, iterations: 0 };
    }
    assert_eq!(start.len(), n);
    let sn = norm(start);
    let start: Vec<Complex64> = if sn > 0.0 {
        start.iter().map(|z| z / sn).collect()
    } else {
        vec![Complex64::new(1.0 / libm::sqrt(n as f64), 0.0); n]
    };
    let mut tmp_m = vec![zero; m];
    let mut normal = |x: &[Complex64]| {
        let mut out = vec![zero; n];
        op.apply(x, &mut tmp_m);
        op.apply_adjoint(&tmp_m, &mut out);
        out
    };
    let kmax = opts.krylov.min(n).max(2);
    let keep = (kmax / 4).max(1);
    let mut vs: Vec<Vec<Complex64>> = vec![start];
    let mut ws: Vec<Vec<Complex64>> = vec![normal(&vs[0])];
    let mut iterations = 1;
    let mut best: (f64, Vec<Complex64>, bool) = (0.0, vs[0].clone(), false);
    let mut stalled = 0;
    loop {
        // expand with the Krylov direction of the newest vector
        let mut exhausted = false;
        while vs.len() < kmax && iterations < opts.max_iter {
            let mut w = ws[ws.len() - 1].clone();
            let scale = norm(&w).max(1e-300);
            for _ in 0..2 {
                for b in &vs {
                    let c = dot(b, &w);
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi -= c * bi;
                    }
                }
            }
            let wn = norm(&w);
            if wn <= 1e-14 * scale {
                exhausted = true;
                break;
            }
            w.iter_mut().for_each(|z| *z /= wn);
            ws.push(normal(&w));
            vs.push(w);
            iterations += 1;
        }
        let k = vs.len();
        let h = DMatrix::from_fn(k, k, |i, j| (dot(&vs[i], &ws[j]) + dot(&ws[i], &vs[j]).conj()) * 0.5);
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let combine = |basis: &[Vec<Complex64>], col: usize| {
            let mut out = vec![zero; n];
            for (j, b) in basis.iter().enumerate() {
                let c = eig.eigenvectors[(j, col)];
                for (oi, bi) in out.iter_mut().zip(b) {
                    *oi += bi * c;
                }
            }
            out
        };
        let lambda = eig.eigenvalues[order[0]].max(0.0);
        let v = combine(&vs, order[0]);
        let av = combine(&ws, order[0]);
        let r: Vec<Complex64> = av.iter().zip(&v).map(|(a, x)| a - x * lambda).collect();
        let resid = norm(&r);
        if lambda - best.0 <= 4.0 * f64::EPSILON * lambda {
            stalled += 1;
        } else {
            stalled = 0;
        }
        // a full restart cycle that moves the Ritz value by less than `tol` also counts
        let settled = best.0 > 0.0 && lambda - best.0 <= opts.tol * lambda;
        let converged = resid <= opts.tol * lambda.max(1e-300) || settled || lambda == 0.0 || k == n || exhausted;
        best = (lambda, v, converged);
        // a stalled Ritz value stops the iteration but is still reported as unconverged
        if converged || stalled >= 3 || iterations >= opts.max_iter {
            break;
        }
        let kept = keep.min(k - 1);
        let new_vs: Vec<Vec<Complex64>> = order[..kept].iter().map(|&c| combine(&vs, c)).collect();
        let new_ws: Vec<Vec<Complex64>> = order[..kept].iter().map(|&c| combine(&ws, c)).collect();
        vs = new_vs;
        ws = new_ws;
        let mut next = r;
        for _ in 0..2 {
            for b in &vs {
                let c = dot(b, &next);
                for (xi, bi) in next.iter_mut().zip(b) {
                    *xi -= c * bi;
                }
            }
        }
        let nn = norm(&next);
        if nn == 0.0 {
            best.2 = true;
            break;
        }
        next.iter_mut().for_each(|z| *z /= nn);
        ws.push(normal(&next));
        vs.push(next);
        iterations += 1;
    }
    let (lambda, v, converged) = best;
    let sigma = libm::sqrt(lambda);
    let mut u = vec![zero; m];
    op.apply(&v, &mut u);
    let un = norm(&u);
    if un > 0.0 {
        u.iter_mut().for_each(|z| *z /= un);
    }
    SingularTriple { sigma, u, v, converged, iterations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lanczos_matches_dense_svd() {
        let mut b = Banded::zero(40);
        for j in 0..40 {
            b.add_entry(0, j, Complex64::new(libm::sin(j as f64), 0.3));
            b.add_entry(1, j, Complex64::new(1.0 / (j + 1) as f64, 0.0));
            b.add_entry(-2, j, Complex64::new(0.0, libm::cos(j as f64 * 0.7)));
        }
        let t = top_singular(&b, SvdOptions::default());
        let d = dense_norm(&b.to_dense());
        assert!(t.converged);
        assert!((t.sigma - d).abs() < 1e-10 * d);
    }

    #[test]
    fn zero_operator() {
        let t = top_singular(&Banded::zero(5), SvdOptions::default());
        assert_eq!(t.sigma, 0.0);
    }

    #[test]
    fn hermitian_spectrum() {
        let m = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(2.0, 0.0),
        ]);
        let ev = hermitian_eigenvalues(&m);
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }
}
