//! Dense helpers shared by the physics modules.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::C64;

/// Eigenvalues of a Hermitian matrix, ascending.
pub(crate) fn eigvalsh(m: &DMatrix<C64>) -> Vec<f64> {
    let mut v: Vec<f64> = nalgebra::SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
pub(crate) fn eigh_real(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub(crate) fn fix_phase(mut v: DVector<C64>) -> DVector<C64> {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, z) in v.iter().enumerate() {
        let a = z.norm();
        // ties go to the lowest index
        if a > best_abs * (1.0 + 1e-12) {
            best = i;
            best_abs = a;
        }
    }
    if best_abs > 0.0 {
        let phase = v[best].conj() / best_abs;
        v *= phase;
        v[best] = C64::new(v[best].re, 0.0);
    }
    v
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub(crate) fn hermiticity_residual(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut r: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            r = r.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    r
}

/// Row-triplet sparse matrix used on the hot paths of the propagators.
#[derive(Debug, Clone)]
pub(crate) struct Sparse {
    pub(crate) entries: Vec<(usize, usize, C64)>,
}

impl Sparse {
    pub(crate) fn from_dense(m: &DMatrix<C64>) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let z = m[(i, j)];
                if z != C64::new(0.0, 0.0) {
                    entries.push((i, j, z));
                }
            }
        }
        Self { entries }
    }

    /// Column-major `out += A X` for a `d×d` matrix.
    pub(crate) fn left_mul_acc(&self, d: usize, x: &[C64], out: &mut [C64]) {
        for &(i, k, v) in &self.entries {
            let mut oi = i;
            let mut xk = k;
            for _ in 0..d {
                out[oi] += v * x[xk];
                oi += d;
                xk += d;
            }
        }
    }

    /// Column-major `out += X A†`.
    pub(crate) fn right_mul_adjoint_acc(&self, d: usize, x: &[C64], out: &mut [C64]) {
        // (X A†)_{ij} = Σ_k X_{ik} conj(A_{jk})
        for &(j, k, v) in &self.entries {
            let cv = v.conj();
            let o = &mut out[j * d..(j + 1) * d];
            let xs = &x[k * d..(k + 1) * d];
            for (oi, xi) in o.iter_mut().zip(xs) {
                *oi += *xi * cv;
            }
        }
    }

    /// Column-major `out += s · A X B†`.
    pub(crate) fn sandwich_acc(&self, b: &Sparse, s: f64, d: usize, x: &[C64], out: &mut [C64]) {
        for &(i, k, va) in &self.entries {
            for &(j, l, vb) in &b.entries {
                out[i + j * d] += va * vb.conj() * x[k + l * d] * s;
            }
        }
    }
}

#[cfg(test)]
pub(crate) fn trace(d: usize, x: &[C64]) -> C64 {
    (0..d).map(|i| x[i * (d + 1)]).sum()
}

/// `Tr(A X)` for column-major `X`.
pub(crate) fn trace_product(a: &Sparse, d: usize, x: &[C64]) -> C64 {
    // Tr(A X) = Σ_{ik} A_{ik} X_{ki}
    a.entries.iter().map(|&(i, k, v)| v * x[k + i * d]).sum()
}

pub(crate) fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
