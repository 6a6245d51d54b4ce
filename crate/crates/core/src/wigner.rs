//! Wigner distribution in the scaled quadratures of the rotating frame.
//!
//! `Q = i(a − a†)√(λ/2)` and `P = (a + a†)√(λ/2)` obey `[Q, P] = iλ`, so
//! `λ` plays the role of Planck's constant and
//! `W(Q, P) = (1/πλ) ∫dξ e^{−2iPξ/λ} ⟨Q+ξ|ρ|Q−ξ⟩`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::fock::DensityMatrix;
use crate::C64;

/// Edge value, relative to the bound `1/πλ`, above which the grid is
/// considered too small for the state.
pub const BOUNDARY_LIMIT: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub q_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// `values[(i, j)] = W(q_axis[i], p_axis[j])`
    pub values: DMatrix<f64>,
    pub lambda: f64,
}

fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 1..n {
        let h = 0.5 * (x[i] - x[i - 1]);
        w[i - 1] += h;
        w[i] += h;
    }
    w
}

impl WignerGrid {
    /// `∫∫ W dQ dP` by the trapezoid rule.
    pub fn integral(&self) -> f64 {
        let wq = trapezoid_weights(&self.q_axis);
        let wp = trapezoid_weights(&self.p_axis);
        let mut s = 0.0;
        for (i, a) in wq.iter().enumerate() {
            for (j, b) in wp.iter().enumerate() {
                s += a * b * self.values[(i, j)];
            }
        }
        s
    }

    /// `∫ W dP` at every `Q` of the grid.
    pub fn q_marginal(&self) -> Vec<f64> {
        let wp = trapezoid_weights(&self.p_axis);
        (0..self.q_axis.len())
            .map(|i| wp.iter().enumerate().map(|(j, b)| b * self.values[(i, j)]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest `|W|` on the grid boundary, relative to `1/πλ`.
    pub fn boundary_weight(&self) -> f64 {
        let (nq, np) = self.values.shape();
        let mut m: f64 = 0.0;
        for i in 0..nq {
            m = m.max(self.values[(i, 0)].abs()).max(self.values[(i, np - 1)].abs());
        }
        for j in 0..np {
            m = m.max(self.values[(0, j)].abs()).max(self.values[(nq - 1, j)].abs());
        }
        m * PI * self.lambda
    }

    /// `(Q, P, W)` rows, `Q` outermost.
    pub fn rows(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.values.len());
        for (i, &q) in self.q_axis.iter().enumerate() {
            for (j, &p) in self.p_axis.iter().enumerate() {
                out.push((q, p, self.values[(i, j)]));
            }
        }
        out
    }
}

/// Evenly spaced axis of `n` points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `W(Q, P)` at a single phase-space point.
pub fn wigner_at(rho: &DensityMatrix, lambda: f64, q: f64, p: f64) -> f64 {
    let d = rho.dim();
    let r = rho.matrix();
    let mut lag = vec![0.0; d];
    // α = (P − iQ)/√(2λ)
    let alpha = C64::new(p, -q) / (2.0 * lambda).sqrt();
    let y = 4.0 * alpha.norm_sqr();
    let two_alpha = alpha * 2.0;
    let mut acc = 0.0;
    for k in 0..d {
        // L_m^{(k)}(y) for m = 0 .. d−1−k
        let mmax = d - k;
        lag[0] = 1.0;
        if mmax > 1 {
            lag[1] = 1.0 + k as f64 - y;
        }
        for m in 1..mmax.saturating_sub(1) {
            let mf = m as f64;
            lag[m + 1] = ((2.0 * mf + 1.0 + k as f64 - y) * lag[m] - (mf + k as f64) * lag[m - 1]) / (mf + 1.0);
        }
        for m in 0..mmax {
            // √(m!/(m+k)!) (2α)^k
            let mut c = C64::new(1.0, 0.0);
            for t in 0..k {
                c = c * two_alpha / ((m + t + 1) as f64).sqrt();
            }
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let dyad = c * (sign * lag[m]);
            let rho_mn = r[(m, m + k)];
            if k == 0 {
                acc += rho_mn.re * dyad.re;
            } else {
                acc += 2.0 * (rho_mn * dyad).re;
            }
        }
    }
    // W(α) = (2/π) e^{−2|α|²} Σ …, and W(Q, P) = W(α)/(2λ)
    acc * (-0.5 * y).exp() / (PI * lambda)
}

/// Wigner function of `rho` on the tensor grid `q_axis × p_axis`.
///
/// Uses the closed-form Wigner function of every Fock dyad `|m⟩⟨n|`,
/// a generalised Laguerre polynomial times a Gaussian. Fails with
/// [`Error::GridTooSmall`] when the boundary weight exceeds
/// [`BOUNDARY_LIMIT`].
pub fn wigner_transform(rho: &DensityMatrix, lambda: f64, q_axis: &[f64], p_axis: &[f64]) -> Result<WignerGrid> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", format!("{lambda} must be positive")));
    }
    if q_axis.len() < 2 || p_axis.len() < 2 {
        return Err(invalid("grid", "each axis needs at least two points"));
    }
    let mut values = DMatrix::zeros(q_axis.len(), p_axis.len());
    for (i, &q) in q_axis.iter().enumerate() {
        for (j, &p) in p_axis.iter().enumerate() {
            values[(i, j)] = wigner_at(rho, lambda, q, p);
        }
    }
    let grid = WignerGrid {
        q_axis: q_axis.to_vec(),
        p_axis: p_axis.to_vec(),
        values,
        lambda,
    };
    let b = grid.boundary_weight();
    if b > BOUNDARY_LIMIT {
        return Err(Error::GridTooSmall(b));
    }
    Ok(grid)
}
