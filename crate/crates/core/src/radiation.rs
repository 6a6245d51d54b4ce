//! Emission spectra from two-time correlators of the oscillator.
//!
//! Correlators follow the quantum regression rule
//! `⟨a†(t₁)a(t₂)⟩ = Tr[a Λ_{t₂−t₁}(ρ(t₁) a†)]`, `Λ` being the Lindblad
//! propagator. Frequencies are offsets `x = Ω − ω_F/2` in units of `V`
//! and the bath density of states is set to one.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::fock::{DensityMatrix, DensityTolerance};
use crate::linalg::{self, Sparse};
use crate::open::{evolve_master_with, steady_state, Liouvillian, DEFAULT_MASTER_TOL};
use crate::C64;

/// Largest trace distance between `ρ(T_max)` and `ρ_st` accepted as
/// relaxed.
pub const RELAXATION_LIMIT: f64 = 1e-4;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `C(t₁, t₂) = ⟨a†(t₁)a(t₂)⟩` on the upper triangle `t₂ ≥ t₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorGrid {
    pub t_grid: Vec<f64>,
    pub values: DMatrix<C64>,
}

impl CorrelatorGrid {
    pub fn get(&self, i: usize, j: usize) -> Option<C64> {
        (j >= i && j < self.t_grid.len()).then(|| self.values[(i, j)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    TransientEnergy,
    SteadyPower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    pub omega_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: SpectrumKind,
}

impl SpectralDensity {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|S(x) − S(−x)|`, assuming a grid symmetric about zero.
    pub fn mirror_asymmetry(&self) -> f64 {
        let n = self.values.len();
        (0..n).fold(0.0, |m, i| m.max((self.values[i] - self.values[n - 1 - i]).abs()))
    }
}

/// Time step resolving both the damping and the fastest frequency of the
/// grid.
pub fn default_time_step(gamma_tilde: f64, x_max: f64) -> f64 {
    let mut dt = 0.05 / gamma_tilde;
    if x_max > 0.0 {
        dt = dt.min(0.2 / x_max);
    }
    dt
}

fn x_max(grid: &[f64]) -> f64 {
    grid.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn check_input(l: &Liouvillian, rho0: &DensityMatrix) -> Result<()> {
    if rho0.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            got: rho0.dim(),
        });
    }
    rho0.check(&DensityTolerance::default())
}

fn check_horizon(l: &Liouvillian, t: f64, name: &'static str) -> Result<()> {
    let g = l.gamma_tilde();
    if !(g > 0.0) {
        return Err(invalid("gamma_tilde", "spectra need gamma_tilde > 0"));
    }
    if !(t.is_finite() && t * g >= 10.0) {
        return Err(invalid(name, format!("{t} is shorter than 10/gamma_tilde")));
    }
    Ok(())
}

fn grid_steps(t_max: f64, dt: f64) -> usize {
    (t_max / dt).ceil().max(1.0) as usize
}

/// Column-major `X a†`.
fn times_a_dag(a: &Sparse, d: usize, x: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; d * d];
    a.right_mul_adjoint_acc(d, x, &mut out);
    out
}

/// `Tr(A X)` for two dense column-major matrices.
fn trace_dense(d: usize, a: &[C64], x: &[C64]) -> C64 {
    let mut s = ZERO;
    for i in 0..d {
        for k in 0..d {
            s += a[i + k * d] * x[k + i * d];
        }
    }
    s
}

/// `2 Re Σ_k e^{i x τ_k} s_k` on every point of `xs`.
fn fourier_sum(xs: &[f64], dt: f64, s: &[C64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let step = C64::new(0.0, x * dt).exp();
            let mut ph = C64::new(1.0, 0.0);
            let mut acc = ZERO;
            for (k, sk) in s.iter().enumerate() {
                // re-anchor the phase every so often to keep it unimodular
                if k % 256 == 0 {
                    ph = C64::new(0.0, x * dt * k as f64).exp();
                }
                acc += ph * sk;
                ph *= step;
            }
            2.0 * acc.re
        })
        .collect()
}

/// Two-time correlator on the upper triangle of `t_grid`.
pub fn two_time_correlator(l: &Liouvillian, rho0: &DensityMatrix, t_grid: &[f64]) -> Result<CorrelatorGrid> {
    check_input(l, rho0)?;
    let d = l.dim();
    let rhos = evolve_master_with(l, rho0, t_grid, DEFAULT_MASTER_TOL)?;
    let (a, _) = l.ladder();
    let n = t_grid.len();
    let mut values = DMatrix::zeros(n, n);
    for i in 0..n {
        let y = times_a_dag(a, d, rhos[i].as_slice());
        let mut stepper = l.forward_stepper(t_grid[i], y, DEFAULT_MASTER_TOL)?;
        for j in i..n {
            stepper.advance_to(t_grid[j])?;
            values[(i, j)] = linalg::trace_product(a, d, stepper.y());
        }
    }
    Ok(CorrelatorGrid {
        t_grid: t_grid.to_vec(),
        values,
    })
}

/// Per-lag weights `s_k` of the transient double integral.
///
/// The triangle `0 ≤ t′ ≤ t ≤ T` is covered by iterated trapezoid rules
/// on a uniform grid. For lag `k` the inner sum over `t′` is a running sum
/// of `ΔR_j = (ρ_j − ρ_st)a†` read backwards in `j`, so `ρ_j` is replayed
/// from checkpoints while `A_k = Λ†_{τ_k}(a)` moves forward.
struct TransientKernel {
    dt: f64,
    lags: Vec<C64>,
    unrelaxed: f64,
}

fn transient_kernel(l: &Liouvillian, rho0: &DensityMatrix, rho_st: &DensityMatrix, t_max: f64, n: usize) -> Result<TransientKernel> {
    let d = l.dim();
    let dd = d * d;
    let dt = t_max / n as f64;
    let tol = DEFAULT_MASTER_TOL;
    let (a, _) = l.ladder();
    let st = rho_st.as_slice();
    let delta_r = |rho: &[C64]| {
        let diff: Vec<C64> = rho.iter().zip(st).map(|(x, y)| x - y).collect();
        times_a_dag(a, d, &diff)
    };
    let block = (n as f64 + 1.0).sqrt().ceil() as usize;

    // forward pass: checkpoints and the full running sum
    let mut checkpoints: Vec<Vec<C64>> = Vec::new();
    let mut cum = vec![ZERO; dd];
    let dr0 = delta_r(rho0.as_slice());
    let mut fwd = l.forward_stepper(0.0, rho0.as_slice().to_vec(), tol)?;
    for j in 0..=n {
        if j > 0 {
            fwd.advance_to(j as f64 * dt)?;
        }
        if j % block == 0 {
            checkpoints.push(fwd.y().to_vec());
        }
        let c = if j == 0 { 0.5 } else { 1.0 };
        for (s, v) in cum.iter_mut().zip(delta_r(fwd.y())) {
            *s += c * v;
        }
    }
    let rho_end = DensityMatrix::new_unchecked(DMatrix::from_column_slice(d, d, fwd.y()));
    let unrelaxed = rho_end.trace_distance(rho_st);
    drop(fwd);

    // backward replay against the forward adjoint propagation
    let mut lags = vec![ZERO; n + 1];
    let mut adj = l.adjoint_stepper(0.0, Sparse::dense_vec(a, d), tol)?;
    let mut replay = l.forward_stepper(0.0, rho0.as_slice().to_vec(), tol)?;
    let dt2 = dt * dt;
    let mut seg: Vec<Vec<C64>> = Vec::with_capacity(block);
    for (c_idx, cp) in checkpoints.iter().enumerate().rev() {
        let j0 = c_idx * block;
        let j1 = (j0 + block - 1).min(n);
        seg.clear();
        replay.reset(j0 as f64 * dt, cp);
        for j in j0..=j1 {
            if j > j0 {
                replay.advance_to(j as f64 * dt)?;
            }
            seg.push(delta_r(replay.y()));
        }
        for j in (j0..=j1).rev() {
            let k = n - j;
            if k > 0 {
                adj.advance_to(k as f64 * dt)?;
            }
            let dr = &seg[j - j0];
            let c = if j == 0 { 0.5 } else { 1.0 };
            let w: Vec<C64> = if k == 0 {
                cum.iter()
                    .zip(dr)
                    .zip(&dr0)
                    .map(|((s, r), r0)| (s - 0.5 * r - 0.5 * r0) * (0.5 * dt2))
                    .collect()
            } else {
                cum.iter().zip(dr).map(|(s, r)| (s - 0.5 * c * r) * dt2).collect()
            };
            lags[k] = trace_dense(d, adj.y(), &w);
            for (s, r) in cum.iter_mut().zip(dr) {
                *s -= c * r;
            }
        }
    }
    debug_assert!(lags.len() == n + 1 && dd == cum.len());
    Ok(TransientKernel { dt, lags, unrelaxed })
}

impl Sparse {
    /// Dense column-major copy.
    fn dense_vec(m: &Sparse, d: usize) -> Vec<C64> {
        let mut out = vec![ZERO; d * d];
        for &(i, k, v) in &m.entries {
            out[i + k * d] += v;
        }
        out
    }
}

/// Transient spectral density radiated while `ρ₀` relaxes to `ρ_st`.
///
/// Returns `UnrelaxedHorizon` if `ρ(T_max)` is not yet stationary.
pub fn transient_spectrum(l: &Liouvillian, rho0: &DensityMatrix, t_max: f64, omega_grid: &[f64]) -> Result<SpectralDensity> {
    let dt = default_time_step(l.gamma_tilde(), x_max(omega_grid));
    transient_spectrum_with_step(l, rho0, t_max, omega_grid, dt)
}

pub fn transient_spectrum_with_step(l: &Liouvillian, rho0: &DensityMatrix, t_max: f64, omega_grid: &[f64], dt: f64) -> Result<SpectralDensity> {
    check_input(l, rho0)?;
    check_horizon(l, t_max, "t_max")?;
    if !(dt > 0.0) {
        return Err(invalid("dt", "must be positive"));
    }
    let rho_st = steady_state(l)?;
    let kernel = transient_kernel(l, rho0, &rho_st, t_max, grid_steps(t_max, dt))?;
    if kernel.unrelaxed > RELAXATION_LIMIT {
        return Err(Error::UnrelaxedHorizon(kernel.unrelaxed));
    }
    Ok(SpectralDensity {
        omega_grid: omega_grid.to_vec(),
        values: fourier_sum(omega_grid, kernel.dt, &kernel.lags),
        kind: SpectrumKind::TransientEnergy,
    })
}

/// Stationary power spectrum `2Re∫₀^{T} dτ e^{ixτ} Tr[a Λ_τ(ρ_st a†)]`.
pub fn steady_spectrum(l: &Liouvillian, omega_grid: &[f64], t_corr: f64) -> Result<SpectralDensity> {
    check_horizon(l, t_corr, "t_corr")?;
    let d = l.dim();
    let dt = default_time_step(l.gamma_tilde(), x_max(omega_grid));
    let n = grid_steps(t_corr, dt);
    let dt = t_corr / n as f64;
    let rho_st = steady_state(l)?;
    let (a, _) = l.ladder();
    let mut stepper = l.forward_stepper(0.0, times_a_dag(a, d, rho_st.as_slice()), DEFAULT_MASTER_TOL)?;
    let mut lags = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k > 0 {
            stepper.advance_to(k as f64 * dt)?;
        }
        let w = if k == 0 || k == n { 0.5 * dt } else { dt };
        lags.push(linalg::trace_product(a, d, stepper.y()) * w);
    }
    Ok(SpectralDensity {
        omega_grid: omega_grid.to_vec(),
        values: fourier_sum(omega_grid, dt, &lags),
        kind: SpectrumKind::SteadyPower,
    })
}

/// Both sides of the frequency sum rule for the transient spectrum.
///
/// `lhs` integrates the discrete transient spectrum over one full period
/// of its frequency axis, `[−π/dt, π/dt)`; `rhs` is `∫(⟨n⟩ − n_st)dt`
/// from an independent master-equation run.
pub fn sum_rule_check(l: &Liouvillian, rho0: &DensityMatrix, t_max: f64) -> Result<(f64, f64)> {
    check_input(l, rho0)?;
    check_horizon(l, t_max, "t_max")?;
    let dt = (0.05 / l.gamma_tilde()).min(0.05);
    let n = grid_steps(t_max, dt);
    let rho_st = steady_state(l)?;
    let kernel = transient_kernel(l, rho0, &rho_st, t_max, n)?;
    let dt = kernel.dt;
    let m = n + 1;
    let dx = 2.0 * core::f64::consts::PI / (m as f64 * dt);
    let xs: Vec<f64> = (0..m).map(|i| -core::f64::consts::PI / dt + i as f64 * dx).collect();
    let e = fourier_sum(&xs, dt, &kernel.lags);
    let lhs = e.iter().sum::<f64>() * dx / (2.0 * core::f64::consts::PI);

    let ts: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
    let n_st = rho_st.mean_occupation();
    let traj = evolve_master_with(l, rho0, &ts, DEFAULT_MASTER_TOL)?;
    let rhs = traj
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            w * (r.mean_occupation() - n_st)
        })
        .sum::<f64>()
        * dt;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{FockSpace, Parity};
    use crate::open::build_liouvillian;
    use crate::rwa::RwaSystem;
    use crate::spectrum::{eigenstate, LevelLabel};
    use nalgebra::DVector;

    fn liouv(d: usize, delta: f64, f: f64, g: f64) -> Liouvillian {
        build_liouvillian(&FockSpace::new(d).unwrap(), &RwaSystem::new(delta, f).unwrap(), g).unwrap()
    }

    fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    /// Infinite-horizon transient spectrum from resolvents of the dense
    /// superoperator.
    fn resolvent_oracle(l: &Liouvillian, rho0: &DensityMatrix, xs: &[f64]) -> Vec<f64> {
        let d = l.dim();
        let lm = l.superoperator();
        let st = steady_state(l).unwrap();
        let a = l.space().annihilation().into_matrix();
        // D = ∫(ρ − ρ_st)dt solves L D = ρ_st − ρ₀ with Tr D = 0
        let mut m = lm.clone();
        for j in 0..d * d {
            m[(0, j)] = ZERO;
        }
        for i in 0..d {
            m[(0, i * (d + 1))] = C64::new(1.0, 0.0);
        }
        let diff = st.matrix() - rho0.matrix();
        let mut rhs = DVector::from_column_slice(diff.as_slice());
        rhs[0] = ZERO;
        let dvec = m.lu().solve(&rhs).unwrap();
        let dm = DMatrix::from_column_slice(d, d, dvec.as_slice());
        let y = &dm * a.adjoint();
        let yv = DVector::from_column_slice(y.as_slice());
        xs.iter()
            .map(|&x| {
                let r = -(&lm + DMatrix::<C64>::identity(d * d, d * d) * C64::new(0.0, x));
                let z = r.lu().solve(&yv).unwrap();
                let zm = DMatrix::from_column_slice(d, d, z.as_slice());
                2.0 * (&a * zm).trace().re
            })
            .collect()
    }

    #[test]
    fn undriven_correlator_oracle() {
        let (delta, g) = (1.8, 0.1);
        let l = liouv(6, delta, 0.0, g);
        let rho1 = DensityMatrix::fock(l.space(), 1).unwrap();
        let ts = linspace(0.0, 6.0, 7);
        let c = two_time_correlator(&l, &rho1, &ts).unwrap();
        for i in 0..ts.len() {
            for j in i..ts.len() {
                let tau = ts[j] - ts[i];
                let want = (-2.0 * g * ts[i]).exp() * C64::new(-g * tau, (delta - 1.0) * tau).exp();
                assert!((c.get(i, j).unwrap() - want).norm() < 1e-8, "{i} {j}");
            }
        }
        assert!(c.get(2, 1).is_none());
    }

    #[test]
    fn correlator_diagonal_and_stationarity() {
        let l = liouv(16, 1.0, 0.7, 0.2);
        let rho0 = DensityMatrix::fock(l.space(), 2).unwrap();
        let ts = linspace(0.0, 4.0, 5);
        let c = two_time_correlator(&l, &rho0, &ts).unwrap();
        let traj = evolve_master_with(&l, &rho0, &ts, DEFAULT_MASTER_TOL).unwrap();
        for i in 0..ts.len() {
            let z = c.get(i, i).unwrap();
            assert!(z.im.abs() < 1e-10 && (z.re - traj[i].mean_occupation()).abs() < 1e-10);
        }
        let st = steady_state(&l).unwrap();
        let c = two_time_correlator(&l, &st, &ts).unwrap();
        for lag in 0..ts.len() {
            for i in 0..ts.len() - lag {
                assert!((c.get(i, i + lag).unwrap() - c.get(0, lag).unwrap()).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn transient_matches_resolvent() {
        let l = liouv(12, 1.2, 0.4, 0.3);
        let (_, phi) = eigenstate(l.space(), l.sys(), LevelLabel::new(Parity::Even, 1)).unwrap();
        let rho0 = DensityMatrix::from_pure(&phi);
        let xs = linspace(-2.0, 2.0, 21);
        let got = transient_spectrum_with_step(&l, &rho0, 60.0, &xs, 0.02).unwrap();
        let want = resolvent_oracle(&l, &rho0, &xs);
        let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (g, w) in got.values.iter().zip(&want) {
            assert!((g - w).abs() < 2e-3 * scale, "{g} {w}");
        }
    }

    #[test]
    fn stationary_start_radiates_nothing() {
        let l = liouv(12, 1.0, 0.5, 0.3);
        let st = steady_state(&l).unwrap();
        let xs = linspace(-2.0, 2.0, 9);
        let e = transient_spectrum(&l, &st, 40.0, &xs).unwrap();
        assert!(e.max_abs() < 1e-8);
        let (lhs, rhs) = sum_rule_check(&l, &st, 40.0).unwrap();
        assert!(lhs.abs() < 1e-8 && rhs.abs() < 1e-8);
    }

    #[test]
    fn undriven_sum_rule() {
        let l = liouv(6, 1.8, 0.0, 0.1);
        let rho1 = DensityMatrix::fock(l.space(), 1).unwrap();
        let (lhs, rhs) = sum_rule_check(&l, &rho1, 120.0).unwrap();
        assert!((rhs - 5.0).abs() < 0.02 * 5.0, "{rhs}");
        assert!((lhs - rhs).abs() < 0.02 * rhs, "{lhs} {rhs}");
    }

    #[test]
    fn short_horizon_rejected() {
        let l = liouv(8, 1.0, 0.5, 0.1);
        let rho = DensityMatrix::fock(l.space(), 0).unwrap();
        assert!(transient_spectrum(&l, &rho, 50.0, &[0.0]).is_err());
        let rho3 = DensityMatrix::fock(l.space(), 3).unwrap();
        let st = steady_state(&l).unwrap();
        let k = transient_kernel(&l, &rho3, &st, 20.0, 40).unwrap();
        assert!(k.unrelaxed > RELAXATION_LIMIT);
    }

    #[test]
    fn steady_spectrum_is_mirror_symmetric() {
        let l = liouv(20, 1.8, 1.0, 0.1);
        let xs = linspace(-3.0, 3.0, 61);
        let q = steady_spectrum(&l, &xs, 400.0).unwrap();
        let max = q.max_abs();
        assert!(q.mirror_asymmetry() < 1e-3 * max);
        assert!(q.values.iter().all(|&v| v >= -1e-8 * max));
        assert!(steady_spectrum(&liouv(8, 1.8, 0.0, 0.1), &xs, 200.0).unwrap().max_abs() < 1e-12);
    }
}
