//! The RWA Hamiltonian and its analytic companions.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::fock::{ComplexOperator, FockSpace, Parity, StateVector};
use crate::C64;

/// Coherent-state population allowed outside the space when checking the
/// factorised eigenstates.
pub const COHERENT_TAIL_LIMIT: f64 = 1e-12;

/// Dimensionless detuning `δ` and drive `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwaSystem {
    pub delta: f64,
    pub f: f64,
}

impl RwaSystem {
    pub fn new(delta: f64, f: f64) -> Result<Self> {
        if !delta.is_finite() {
            return Err(invalid("delta", format!("{delta} is not finite")));
        }
        if !(f >= 0.0 && f.is_finite()) {
            return Err(invalid("f", format!("{f} must be finite and non-negative")));
        }
        Ok(Self { delta, f })
    }

    /// Dimensionless Planck constant `λ = 1/(2f)`.
    pub fn lambda(&self) -> Option<f64> {
        (self.f > 0.0).then(|| 1.0 / (2.0 * self.f))
    }

    /// `μ = δ/f`.
    pub fn mu(&self) -> Option<f64> {
        (self.f > 0.0).then(|| self.delta / self.f)
    }

    pub fn with_f(&self, f: f64) -> Self {
        Self { f, ..*self }
    }
}

/// `H = −δ n + (n² + n)/2 + (f/2)(a² + a†²)` as a real symmetric matrix.
pub(crate) fn h_rwa_real(dim: usize, sys: &RwaSystem) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        let x = n as f64;
        h[(n, n)] = -sys.delta * x + 0.5 * (x * x + x);
        if n + 2 < dim {
            let c = 0.5 * sys.f * ((x + 1.0) * (x + 2.0)).sqrt();
            h[(n, n + 2)] = c;
            h[(n + 2, n)] = c;
        }
    }
    h
}

/// Block of the RWA Hamiltonian over the Fock levels of one parity.
pub(crate) fn h_rwa_block(dim: usize, sys: &RwaSystem, parity: Parity) -> DMatrix<f64> {
    let idx: Vec<usize> = parity.levels(dim).collect();
    let m = idx.len();
    let mut h = DMatrix::zeros(m, m);
    for (i, &n) in idx.iter().enumerate() {
        let x = n as f64;
        h[(i, i)] = -sys.delta * x + 0.5 * (x * x + x);
        if i + 1 < m {
            let c = 0.5 * sys.f * ((x + 1.0) * (x + 2.0)).sqrt();
            h[(i, i + 1)] = c;
            h[(i + 1, i)] = c;
        }
    }
    h
}

pub fn build_h_rwa(space: &FockSpace, sys: &RwaSystem) -> ComplexOperator {
    let h = h_rwa_real(space.dim(), sys).map(|x| C64::new(x, 0.0));
    ComplexOperator::hermitian(h).expect("RWA Hamiltonian is real symmetric")
}

/// `Ē_n = (n + 1/2 − δ)²/2`
fn ebar(delta: f64, n: usize) -> f64 {
    let x = n as f64 + 0.5 - delta;
    0.5 * x * x
}

/// Zero-drive RWA levels `E_0 … E_{n_max}` measured from `E_0`.
pub fn zero_drive_levels(delta: f64, n_max: usize) -> Vec<f64> {
    let e0 = ebar(delta, 0);
    (0..=n_max).map(|n| ebar(delta, n) - e0).collect()
}

/// Second-order drive-induced shift of level `n`.
pub fn perturbative_shift(delta: f64, f: f64, n: usize) -> Result<f64> {
    let e = ebar(delta, n);
    let den = 2.0 * e - 1.0;
    if den.abs() < 1e-9 {
        return Err(Error::DegenerateDenominator { level: n });
    }
    Ok(-0.25 * f * f * (2.0 * e - delta * delta - 0.75) / den)
}

/// Scaled classical Hamiltonian function `g(Q, P)`.
pub fn classical_g(q: f64, p: f64, mu: f64) -> f64 {
    let r2 = p * p + q * q;
    0.25 * r2 * r2 - 0.5 * mu * r2 + 0.5 * (p * p - q * q)
}

/// Small-vibration data of the two wells of `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiclassicalSummary {
    /// Well position `Q₀ = √(μ+1)` on the `P = 0` axis.
    pub q0: f64,
    pub omega_min: f64,
    pub g_min: f64,
    /// Squeezing factor of the intrawell ground state.
    pub eta: f64,
    /// Estimate of the same-parity gap of the lowest states, in units of V.
    pub gap_estimate: f64,
}

pub fn semiclassics(sys: &RwaSystem) -> Result<SemiclassicalSummary> {
    let mu = sys
        .mu()
        .ok_or_else(|| invalid("f", "semiclassical wells need f > 0"))?;
    let m1 = mu + 1.0;
    if m1 <= 0.0 {
        return Err(Error::NoDoubleWell(m1));
    }
    let q0 = m1.sqrt();
    Ok(SemiclassicalSummary {
        q0,
        omega_min: 2.0 * q0,
        g_min: -0.25 * m1 * m1,
        eta: 1.0 / q0,
        gap_estimate: 2.0 * ((sys.delta + sys.f) * sys.f).sqrt(),
    })
}

/// Residual of the factorised eigenstates at `δ = 1`.
///
/// Builds `|±α⟩` with `α = ±i√f` and returns the larger of
/// `‖(H + f²/2)|±α⟩‖`.
pub fn coherent_eigen_residual(space: &FockSpace, f: f64) -> Result<f64> {
    if !(f >= 0.0) {
        return Err(invalid("f", format!("{f} must be non-negative")));
    }
    let sys = RwaSystem::new(1.0, f)?;
    let h = build_h_rwa(space, &sys);
    let energy = -0.5 * f * f;
    let mut worst: f64 = 0.0;
    for sign in [1.0, -1.0] {
        let alpha = C64::new(0.0, sign * f.sqrt());
        let tail = space.coherent_tail(alpha);
        if tail > COHERENT_TAIL_LIMIT {
            return Err(Error::NotConverged {
                dim: space.dim(),
                tail,
                limit: COHERENT_TAIL_LIMIT,
            });
        }
        let psi = space.coherent(alpha);
        let hpsi = h.apply(&psi);
        let r = StateVector::new(hpsi.amplitudes() - psi.amplitudes() * C64::new(energy, 0.0));
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn zero_drive_diagonal() {
        let s = FockSpace::new(6).unwrap();
        let h = build_h_rwa(&s, &RwaSystem::new(0.0, 0.0).unwrap());
        for (n, want) in [0.0, 1.0, 3.0, 6.0, 10.0, 15.0].iter().enumerate() {
            assert_eq!(h.matrix()[(n, n)].re, *want);
        }
    }

    #[test]
    fn drive_matrix_element() {
        let s = FockSpace::new(5).unwrap();
        let h = build_h_rwa(&s, &RwaSystem::new(0.0, 0.5).unwrap());
        assert!((h.matrix()[(2, 0)].re - 0.5 * 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((h.matrix()[(2, 0)].re - 0.35355).abs() < 1e-5);
    }

    #[test]
    fn h_commutes_with_parity() {
        let s = FockSpace::new(15).unwrap();
        let h = build_h_rwa(&s, &RwaSystem::new(1.3, 2.7).unwrap());
        let c = h.commutator(&s.parity());
        assert!(c.max_abs() < 1e-14);
    }

    #[test]
    fn eq6_examples() {
        let e = zero_drive_levels(0.0, 3);
        assert_eq!(e[1], 1.0);
        assert_eq!(e[2], 3.0);
        let e = zero_drive_levels(2.0, 3);
        assert_eq!((e[0], e[1], e[2], e[3]), (0.0, -1.0, -1.0, 0.0));
        let e = zero_drive_levels(2.5, 4);
        assert_eq!(e[0], e[4]);
        assert_eq!(e[1], e[3]);
    }

    #[test]
    fn delta2_spectrum_pairs() {
        let s = FockSpace::new(20).unwrap();
        let h = build_h_rwa(&s, &RwaSystem::new(2.0, 0.0).unwrap());
        let ev = linalg::eigvalsh(h.matrix());
        assert!((ev[0] - ev[1]).abs() < 1e-12);
        assert!((ev[2] - ev[3]).abs() < 1e-12);
    }

    #[test]
    fn shift_ground_state_second_order_oracle() {
        // |⟨0|H₁|2⟩|² / (E₀ − E₂) with H₁ = (f/2)(a² + a†²)
        let f = 0.1;
        let m = 0.5 * f * 2f64.sqrt();
        let oracle = m * m / (0.0 - 3.0);
        let got = perturbative_shift(0.0, f, 0).unwrap();
        assert!((got - oracle).abs() < 1e-15);
        assert!((got + f * f / 6.0).abs() < 1e-15);
        assert_eq!(perturbative_shift(0.7, 0.0, 3).unwrap(), 0.0);
    }

    #[test]
    fn shift_degenerate_pairs_match() {
        for f in [0.01, 0.05] {
            let s = |n| perturbative_shift(2.0, f, n).unwrap();
            assert!((s(0) - s(3)).abs() < 1e-15);
            assert!((s(1) - s(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn shift_denominator_error() {
        // 2Ē_0 = 1 when (1/2 − δ)² = 1, i.e. δ = −1/2
        assert_eq!(
            perturbative_shift(-0.5, 0.1, 0),
            Err(Error::DegenerateDenominator { level: 0 })
        );
    }

    #[test]
    fn shift_matches_exact_diagonalization_at_fourth_order() {
        let s = FockSpace::new(30).unwrap();
        for delta in [0.0, 0.3] {
            for n in 0..3 {
                let resid = |f: f64| {
                    let sys = RwaSystem::new(delta, f).unwrap();
                    let p = Parity::of_level(n);
                    let (vals, vecs) = linalg::eigh_real(&h_rwa_block(s.dim(), &sys, p));
                    // pick the level continuously connected to |n⟩
                    let row = n / 2;
                    let k = (0..vals.len())
                        .max_by(|&a, &b| vecs[(row, a)].abs().total_cmp(&vecs[(row, b)].abs()))
                        .unwrap();
                    let exact = vals[k] - zero_drive_levels(delta, n)[n];
                    (exact - perturbative_shift(delta, f, n).unwrap()).abs()
                };
                let ratio = resid(0.1) / resid(0.05);
                assert!((12.0..=20.0).contains(&ratio), "δ={delta} n={n} ratio={ratio}");
            }
        }
    }

    #[test]
    fn classical_g_examples() {
        assert_eq!(classical_g(0.0, 0.0, 0.37), 0.0);
        assert_eq!(classical_g(1.0, 0.0, 0.0), -0.25);
        let q0 = 1.6f64.sqrt();
        assert!((classical_g(q0, 0.0, 0.6) + 0.64).abs() < 1e-14);
        // minimum: nearby points are higher
        for (dq, dp) in [(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3)] {
            assert!(classical_g(q0 + dq, dp, 0.6) > -0.64);
        }
    }

    #[test]
    fn semiclassics_examples() {
        let s = semiclassics(&RwaSystem::new(0.0, 1.0).unwrap()).unwrap();
        assert_eq!((s.q0, s.omega_min, s.eta, s.g_min), (1.0, 2.0, 1.0, -0.25));
        let s = semiclassics(&RwaSystem::new(0.0, 5.0).unwrap()).unwrap();
        assert_eq!(s.gap_estimate, 10.0);
        let s = semiclassics(&RwaSystem::new(-0.999999, 1.0).unwrap()).unwrap();
        assert!(s.q0 < 1e-2 && s.omega_min < 2e-2);
        assert!(matches!(
            semiclassics(&RwaSystem::new(-2.0, 1.0).unwrap()),
            Err(Error::NoDoubleWell(_))
        ));
    }

    #[test]
    fn coherent_states_factorised_case() {
        assert!(coherent_eigen_residual(&FockSpace::new(40).unwrap(), 0.5).unwrap() < 1e-8);
        assert!(coherent_eigen_residual(&FockSpace::new(60).unwrap(), 2.0).unwrap() < 1e-8);
        assert!(coherent_eigen_residual(&FockSpace::new(10).unwrap(), 1e-6).unwrap() < 1e-10);
        assert!(matches!(
            coherent_eigen_residual(&FockSpace::new(8).unwrap(), 2.0),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn derived_scales() {
        let s = RwaSystem::new(0.8, 2.5).unwrap();
        assert!((s.lambda().unwrap() * 2.0 * s.f - 1.0).abs() < 1e-15);
        assert!((s.mu().unwrap() * s.f - s.delta).abs() < 1e-15);
        assert_eq!(RwaSystem::new(0.8, 0.0).unwrap().lambda(), None);
        assert!(RwaSystem::new(0.0, -1.0).is_err());
    }
}
