//! Zero-temperature Lindblad dynamics in the rotating frame.
//!
//! `L[ρ] = −i[H, ρ] − γ̃(nρ + ρn − 2aρa†)`, written internally as
//! `Kρ + ρK† + 2γ̃ aρa†` with `K = −iH − γ̃n`. Density matrices are
//! vectorised by stacking columns.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::fock::{build_ladder, DensityMatrix, DensityTolerance, FockSpace, StateVector};
use crate::linalg::{self, Sparse};
use crate::ode::{Dopri5, Tolerance};
use crate::rwa::{build_h_rwa, RwaSystem};
use crate::spectrum::{eigenstate, same_parity_gap, spectrum_vs_drive, LevelLabel};
use crate::C64;

/// Relative tolerance of master-equation propagation.
pub const DEFAULT_MASTER_TOL: f64 = 1e-9;

/// Generator of the dissipative dynamics.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    space: FockSpace,
    sys: RwaSystem,
    gamma_tilde: f64,
    k: Sparse,
    k_adj: Sparse,
    a: Sparse,
    a_dag: Sparse,
}

pub fn build_liouvillian(space: &FockSpace, sys: &RwaSystem, gamma_tilde: f64) -> Result<Liouvillian> {
    if !(gamma_tilde >= 0.0 && gamma_tilde.is_finite()) {
        return Err(invalid("gamma_tilde", format!("{gamma_tilde} must be non-negative")));
    }
    let h = build_h_rwa(space, sys);
    let n = space.number();
    let k = h.matrix() * C64::new(0.0, -1.0) - n.matrix() * C64::new(gamma_tilde, 0.0);
    let (a, a_dag) = build_ladder(space);
    Ok(Liouvillian {
        space: *space,
        sys: *sys,
        gamma_tilde,
        k: Sparse::from_dense(&k),
        k_adj: Sparse::from_dense(&k.adjoint()),
        a: Sparse::from_dense(a.matrix()),
        a_dag: Sparse::from_dense(a_dag.matrix()),
    })
}

impl Liouvillian {
    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn sys(&self) -> &RwaSystem {
        &self.sys
    }

    pub fn gamma_tilde(&self) -> f64 {
        self.gamma_tilde
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// `out += L[x]` for a column-major `d×d` matrix `x`.
    pub fn apply(&self, x: &[C64], out: &mut [C64]) {
        let d = self.dim();
        self.k.left_mul_acc(d, x, out);
        self.k.right_mul_adjoint_acc(d, x, out);
        if self.gamma_tilde > 0.0 {
            self.a.sandwich_acc(&self.a, 2.0 * self.gamma_tilde, d, x, out);
        }
    }

    /// `out += L†[x]`, the Heisenberg-picture generator.
    pub fn apply_adjoint(&self, x: &[C64], out: &mut [C64]) {
        let d = self.dim();
        self.k_adj.left_mul_acc(d, x, out);
        self.k_adj.right_mul_adjoint_acc(d, x, out);
        if self.gamma_tilde > 0.0 {
            self.a_dag.sandwich_acc(&self.a_dag, 2.0 * self.gamma_tilde, d, x, out);
        }
    }

    /// Dense `d² × d²` matrix acting on column-stacked density matrices.
    pub fn superoperator(&self) -> DMatrix<C64> {
        let n = self.dim() * self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![C64::new(0.0, 0.0); n];
        let mut col = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            e[j] = C64::new(1.0, 0.0);
            col.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            self.apply(&e, &mut col);
            m.set_column(j, &nalgebra::DVector::from_column_slice(&col));
            e[j] = C64::new(0.0, 0.0);
        }
        m
    }

    /// Largest entry of the row functional `Tr ∘ L`.
    pub fn trace_residual(&self) -> f64 {
        let d = self.dim();
        let m = self.superoperator();
        let mut worst: f64 = 0.0;
        for col in 0..d * d {
            let s: C64 = (0..d).map(|i| m[(i * (d + 1), col)]).sum();
            worst = worst.max(s.norm());
        }
        worst
    }

    pub(crate) fn ladder(&self) -> (&Sparse, &Sparse) {
        (&self.a, &self.a_dag)
    }

    /// Stepper for `ρ̇ = L[ρ]` from `x0` at `t0`.
    pub(crate) fn forward_stepper(&self, t0: f64, x0: Vec<C64>, rel_tol: f64) -> Result<Dopri5<impl FnMut(f64, &[C64], &mut [C64]) + '_>> {
        Dopri5::new(move |_, x: &[C64], dx: &mut [C64]| self.apply(x, dx), t0, x0, Tolerance::relative(rel_tol))
    }

    /// Stepper for `Ȧ = L†[A]`.
    pub(crate) fn adjoint_stepper(&self, t0: f64, x0: Vec<C64>, rel_tol: f64) -> Result<Dopri5<impl FnMut(f64, &[C64], &mut [C64]) + '_>> {
        Dopri5::new(
            move |_, x: &[C64], dx: &mut [C64]| self.apply_adjoint(x, dx),
            t0,
            x0,
            Tolerance::relative(rel_tol),
        )
    }
}

fn to_density(d: usize, x: &[C64]) -> DensityMatrix {
    DensityMatrix::new_unchecked(DMatrix::from_column_slice(d, d, x))
}

/// `ρ(t)` at every time of `t_grid` (ascending, starting at or after 0).
pub fn evolve_master(l: &Liouvillian, rho0: &DensityMatrix, t_grid: &[f64]) -> Result<Vec<DensityMatrix>> {
    evolve_master_with(l, rho0, t_grid, DEFAULT_MASTER_TOL)
}

pub fn evolve_master_with(l: &Liouvillian, rho0: &DensityMatrix, t_grid: &[f64], rel_tol: f64) -> Result<Vec<DensityMatrix>> {
    if rho0.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            got: rho0.dim(),
        });
    }
    rho0.check(&DensityTolerance::default())?;
    if t_grid.iter().any(|&t| t < 0.0) || t_grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(invalid("t_grid", "must be ascending and non-negative"));
    }
    let d = l.dim();
    let mut stepper = l.forward_stepper(0.0, rho0.as_slice().to_vec(), rel_tol)?;
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        stepper.advance_to(t)?;
        out.push(to_density(d, stepper.y()));
    }
    Ok(out)
}

/// Unique stationary state of `L`.
///
/// Solves `L[ρ] = 0` with one equation replaced by `Tr ρ = 1`. A
/// vanishing LU pivot signals a degenerate null space.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    if !(l.gamma_tilde > 0.0) {
        return Err(invalid("gamma_tilde", "steady state needs gamma_tilde > 0"));
    }
    let d = l.dim();
    let n = d * d;
    let mut m = l.superoperator();
    for j in 0..n {
        m[(0, j)] = C64::new(0.0, 0.0);
    }
    for i in 0..d {
        m[(0, i * (d + 1))] = C64::new(1.0, 0.0);
    }
    let mut rhs = nalgebra::DVector::zeros(n);
    rhs[0] = C64::new(1.0, 0.0);
    let lu = m.clone().lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let p = u[(i, i)].norm();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let ratio = lo / hi;
    if !(ratio > 1e-13) {
        return Err(Error::DegenerateSteadyState(ratio));
    }
    let mut x = lu.solve(&rhs).ok_or(Error::DegenerateSteadyState(0.0))?;
    // one step of iterative refinement
    let r = &rhs - &m * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    let rho = DMatrix::from_column_slice(d, d, x.as_slice());
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let tr = rho.trace();
    let rho = rho / tr;
    let mut res = vec![C64::new(0.0, 0.0); n];
    l.apply(rho.as_slice(), &mut res);
    let resid = linalg::vec_norm(&res);
    if resid > 1e-10 {
        return Err(Error::InvalidState(format!("steady-state residual {resid:.3e}")));
    }
    let out = DensityMatrix::new_unchecked(rho);
    out.check(&DensityTolerance::default())?;
    Ok(out)
}

/// `Γ_E = 2γ̃⟨φ_E|n|φ_E⟩`
pub fn state_decay_rate(phi: &StateVector, gamma_tilde: f64) -> f64 {
    2.0 * gamma_tilde * phi.mean_occupation()
}

/// Decay rates and same-parity gap of one labelled level along a drive
/// grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayGapSeries {
    pub f_grid: Vec<f64>,
    pub label: LevelLabel,
    pub gap: Vec<f64>,
    pub gamma_tildes: Vec<f64>,
    /// `rates[g][i]`: decay rate at `gamma_tildes[g]` and `f_grid[i]`.
    pub rates: Vec<Vec<f64>>,
    pub mean_occupation: Vec<f64>,
}

pub fn decay_vs_drive(space: &FockSpace, delta: f64, f_grid: &[f64], gamma_tildes: &[f64], label: LevelLabel) -> Result<DecayGapSeries> {
    let series = spectrum_vs_drive(space, delta, f_grid, label.rank + 2)?;
    let gap = same_parity_gap(&series, label)?;
    let mut occ = Vec::with_capacity(f_grid.len());
    for &f in f_grid {
        let (_, phi) = eigenstate(space, &RwaSystem::new(delta, f)?, label)?;
        occ.push(phi.mean_occupation());
    }
    let rates = gamma_tildes
        .iter()
        .map(|&g| occ.iter().map(|n| 2.0 * g * n).collect())
        .collect();
    Ok(DecayGapSeries {
        f_grid: f_grid.to_vec(),
        label,
        gap,
        gamma_tildes: gamma_tildes.to_vec(),
        rates,
        mean_occupation: occ,
    })
}

/// Least-squares line through `(x, y)`: slope, intercept and `R²`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::Parity;

    fn liouv(d: usize, delta: f64, f: f64, g: f64) -> Liouvillian {
        build_liouvillian(&FockSpace::new(d).unwrap(), &RwaSystem::new(delta, f).unwrap(), g).unwrap()
    }

    fn random_hermitian(d: usize, seed: u64) -> DMatrix<C64> {
        let mut x = seed;
        let mut rnd = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = DMatrix::from_fn(d, d, |_, _| C64::new(rnd(), rnd()));
        &a + a.adjoint()
    }

    #[test]
    fn trace_preserving() {
        let l = liouv(8, 0.7, 1.3, 0.4);
        assert!(l.trace_residual() < 1e-12);
        let rho = random_hermitian(8, 3);
        let mut out = vec![C64::new(0.0, 0.0); 64];
        l.apply(rho.as_slice(), &mut out);
        assert!(linalg::trace(8, &out).norm() < 1e-12);
    }

    #[test]
    fn superoperator_matches_kronecker_form() {
        // vec(AXB) = (Bᵀ ⊗ A) vec(X)
        let d = 5;
        let (g, delta, f) = (0.3, 0.4, 0.9);
        let l = liouv(d, delta, f, g);
        let s = FockSpace::new(d).unwrap();
        let h = build_h_rwa(&s, &RwaSystem::new(delta, f).unwrap()).into_matrix();
        let (a, ad) = build_ladder(&s);
        let (a, ad) = (a.into_matrix(), ad.into_matrix());
        let n = &ad * &a;
        let id = DMatrix::<C64>::identity(d, d);
        let i = C64::new(0.0, 1.0);
        let gc = C64::new(g, 0.0);
        let oracle = (id.kronecker(&h) - h.transpose().kronecker(&id)) * (-i)
            - (id.kronecker(&n) + n.transpose().kronecker(&id) - ad.transpose().kronecker(&a) * C64::new(2.0, 0.0)) * gc;
        assert!(linalg::max_abs(&(l.superoperator() - &oracle)) < 1e-14);
        // adjoint generator is the conjugate transpose
        let mut x = random_hermitian(d, 9);
        x[(0, 1)] += C64::new(0.3, 0.2);
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        l.apply_adjoint(x.as_slice(), &mut out);
        let want = oracle.adjoint() * nalgebra::DVector::from_column_slice(x.as_slice());
        for (a, b) in out.iter().zip(want.iter()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn single_quantum_decay() {
        let l = liouv(6, 0.3, 0.0, 0.25);
        let s = FockSpace::new(6).unwrap();
        let rho1 = DensityMatrix::fock(&s, 1).unwrap();
        let mut out = vec![C64::new(0.0, 0.0); 36];
        l.apply(rho1.as_slice(), &mut out);
        let dn: f64 = (0..6).map(|k| k as f64 * out[k * 7].re).sum();
        assert!((dn + 2.0 * 0.25).abs() < 1e-14);
        let ts: Vec<f64> = (0..=10).map(|i| i as f64 * 0.7).collect();
        let traj = evolve_master(&l, &rho1, &ts).unwrap();
        for (t, r) in ts.iter().zip(&traj) {
            assert!((r.mean_occupation() - (-0.5 * t).exp()).abs() < 1e-8);
            assert!((r.trace().re - 1.0).abs() < 1e-8);
            assert!(r.min_eigenvalue() > -1e-7);
        }
    }

    #[test]
    fn hamiltonian_flow_keeps_purity() {
        let l = liouv(12, 0.5, 0.8, 0.0);
        let s = FockSpace::new(12).unwrap();
        let rho = DensityMatrix::fock(&s, 2).unwrap();
        let traj = evolve_master(&l, &rho, &[1.0, 3.0]).unwrap();
        for r in &traj {
            assert!((r.purity() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn dissipation_mixes_parity() {
        let l = liouv(14, 0.5, 1.0, 0.2);
        let s = FockSpace::new(14).unwrap();
        let rho = DensityMatrix::fock(&s, 2).unwrap();
        let traj = evolve_master(&l, &rho, &[2.0]).unwrap();
        assert!(traj[0].parity_population(Parity::Odd) > 1e-3);
        let l0 = liouv(14, 0.5, 1.0, 0.0);
        let traj = evolve_master(&l0, &rho, &[2.0]).unwrap();
        assert!(traj[0].parity_population(Parity::Odd) < 1e-12);
    }

    #[test]
    fn undriven_steady_state_is_vacuum() {
        let l = liouv(10, 1.8, 0.0, 0.1);
        let st = steady_state(&l).unwrap();
        let vac = DensityMatrix::fock(l.space(), 0).unwrap();
        assert!(linalg::max_abs(&(st.matrix() - vac.matrix())) < 1e-10);
    }

    #[test]
    fn steady_state_matches_long_propagation() {
        let l = liouv(22, 1.8, 1.0, 0.1);
        let st = steady_state(&l).unwrap();
        assert!(st.mean_occupation() > 0.1);
        assert!(st.min_eigenvalue() >= -1e-8);
        let rho0 = DensityMatrix::fock(l.space(), 0).unwrap();
        let late = evolve_master(&l, &rho0, &[1200.0]).unwrap();
        assert!(late[0].trace_distance(&st) < 1e-6);
    }

    #[test]
    fn steady_state_needs_damping() {
        assert!(steady_state(&liouv(6, 0.0, 0.5, 0.0)).is_err());
    }

    #[test]
    fn decay_rate_of_fock_states() {
        let s = FockSpace::new(8).unwrap();
        for n in 0..5 {
            assert_eq!(state_decay_rate(&s.basis(n).unwrap(), 0.3), 2.0 * 0.3 * n as f64);
        }
    }

    #[test]
    fn decay_rate_grows_linearly_at_strong_drive() {
        let s = FockSpace::new(70).unwrap();
        let g = 0.5;
        let fs = [4.0, 5.0, 6.0];
        let series = decay_vs_drive(&s, 0.0, &fs, &[g], LevelLabel::new(Parity::Even, 0)).unwrap();
        let slope = (series.rates[0][2] - series.rates[0][0]) / (fs[2] - fs[0]);
        // Γ_E ∼ γ̃ f at large drive
        assert!((slope / (2.0 * g) - 1.0).abs() < 0.3, "slope {slope}");
    }

    #[test]
    fn linear_fit_exact_line() {
        let (m, c, r2) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((m - 2.0).abs() < 1e-15 && (c - 1.0).abs() < 1e-15 && (r2 - 1.0).abs() < 1e-15);
    }
}
