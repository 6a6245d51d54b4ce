//! Truncated Fock space: ladder and parity operators, pure states and
//! density matrices.
//!
//! All operators are dense `dim × dim` complex matrices over the basis
//! `|0⟩ … |dim−1⟩`. The truncation drops the matrix elements that would
//! connect `|dim−1⟩` to `|dim⟩`, so `[a, a†]` equals the identity except in
//! its last diagonal entry.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::C64;

/// Population above which the top Fock levels signal a non-converged
/// truncation.
pub const TAIL_LIMIT: f64 = 1e-8;

/// Number of top Fock levels inspected by the default convergence check.
pub const DEFAULT_TAIL_LEVELS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockSpace {
    dim: usize,
}

impl FockSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(invalid("dim", format!("need at least 2 levels, got {dim}")));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The same space with `extra` more levels, used by convergence checks.
    pub fn enlarged(&self, extra: usize) -> Self {
        Self {
            dim: self.dim + extra,
        }
    }

    pub fn annihilation(&self) -> ComplexOperator {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for n in 1..self.dim {
            m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
        }
        ComplexOperator::general(m)
    }

    pub fn creation(&self) -> ComplexOperator {
        self.annihilation().adjoint()
    }

    pub fn number(&self) -> ComplexOperator {
        self.diagonal(|n| n as f64)
    }

    pub fn parity(&self) -> ComplexOperator {
        self.diagonal(|n| if n % 2 == 0 { 1.0 } else { -1.0 })
    }

    pub fn identity(&self) -> ComplexOperator {
        self.diagonal(|_| 1.0)
    }

    /// Hermitian operator diagonal in the Fock basis.
    pub fn diagonal(&self, f: impl Fn(usize) -> f64) -> ComplexOperator {
        let m = DMatrix::from_fn(self.dim, self.dim, |i, j| {
            if i == j {
                C64::new(f(i), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        ComplexOperator {
            entries: m,
            hermitian: true,
        }
    }

    /// The Fock state `|n⟩`.
    pub fn basis(&self, n: usize) -> Result<StateVector> {
        if n >= self.dim {
            return Err(invalid("n", format!("level {n} outside dim {}", self.dim)));
        }
        let mut v = DVector::zeros(self.dim);
        v[n] = C64::new(1.0, 0.0);
        Ok(StateVector { amplitudes: v })
    }

    /// Coherent state `|α⟩` with its exact (untruncated) Fock amplitudes.
    ///
    /// The vector is not renormalised; its norm deficit equals the
    /// population that falls outside the space.
    pub fn coherent(&self, alpha: C64) -> StateVector {
        let mut v = DVector::zeros(self.dim);
        let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for n in 0..self.dim {
            v[n] = c;
            c = c * alpha / ((n + 1) as f64).sqrt();
        }
        StateVector { amplitudes: v }
    }

    /// Population of a coherent state outside this space.
    pub fn coherent_tail(&self, alpha: C64) -> f64 {
        let inside: f64 = self.coherent(alpha).amplitudes.iter().map(|z| z.norm_sqr()).sum();
        (1.0 - inside).max(0.0)
    }
}

/// Ladder operators `(a, a†)` of the space.
pub fn build_ladder(space: &FockSpace) -> (ComplexOperator, ComplexOperator) {
    let a = space.annihilation();
    let ad = a.adjoint();
    (a, ad)
}

/// Occupation-number parity `exp(−iπ a†a)`.
pub fn parity_operator(space: &FockSpace) -> ComplexOperator {
    space.parity()
}

/// Population in the top `tail_levels` Fock levels.
///
/// Callers treat values above [`TAIL_LIMIT`] as a non-converged truncation.
pub fn truncation_check<T: TailMass + ?Sized>(x: &T, tail_levels: usize) -> Result<f64> {
    x.tail_mass(tail_levels)
}

pub trait TailMass {
    fn tail_mass(&self, tail_levels: usize) -> Result<f64>;
}

fn check_tail(dim: usize, tail_levels: usize) -> Result<()> {
    if tail_levels >= dim {
        return Err(invalid(
            "tail_levels",
            format!("{tail_levels} tail levels requested for dim {dim}"),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_level(n: usize) -> Self {
        if n % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn sign(self) -> i32 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }

    pub fn from_sign(sign: i32) -> Option<Self> {
        match sign {
            1 => Some(Parity::Even),
            -1 => Some(Parity::Odd),
            _ => None,
        }
    }

    /// Fock indices of this parity below `dim`.
    pub fn levels(self, dim: usize) -> impl Iterator<Item = usize> {
        let start = match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        };
        (start..dim).step_by(2)
    }

    pub fn opposite(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// Dense complex matrix with an optional Hermiticity guarantee.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexOperator {
    entries: DMatrix<C64>,
    hermitian: bool,
}

impl ComplexOperator {
    pub fn general(entries: DMatrix<C64>) -> Self {
        assert!(entries.is_square(), "operator must be square");
        Self {
            entries,
            hermitian: false,
        }
    }

    /// Wraps a matrix that must be Hermitian to `1e-12` relative accuracy.
    pub fn hermitian(entries: DMatrix<C64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        let scale = linalg::max_abs(&entries);
        let r = linalg::hermiticity_residual(&entries);
        if r > 1e-12 * scale {
            return Err(Error::InvalidState(format!(
                "matrix not Hermitian: residual {r:.3e}"
            )));
        }
        Ok(Self {
            entries,
            hermitian: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            hermitian: self.hermitian,
        }
    }

    pub fn apply(&self, psi: &StateVector) -> StateVector {
        StateVector {
            amplitudes: &self.entries * &psi.amplitudes,
        }
    }

    pub fn mul(&self, other: &ComplexOperator) -> ComplexOperator {
        ComplexOperator::general(&self.entries * &other.entries)
    }

    pub fn commutator(&self, other: &ComplexOperator) -> ComplexOperator {
        ComplexOperator::general(
            &self.entries * &other.entries - &other.entries * &self.entries,
        )
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.entries)
    }

    /// Sub-matrix over the given Fock indices.
    pub fn block(&self, idx: &[usize]) -> DMatrix<C64> {
        DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.entries[(idx[i], idx[j])])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn new(amplitudes: DVector<C64>) -> Self {
        Self { amplitudes }
    }

    pub fn from_slice(amplitudes: &[C64]) -> Self {
        Self {
            amplitudes: DVector::from_column_slice(amplitudes),
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn as_slice(&self) -> &[C64] {
        self.amplitudes.as_slice()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() < 1e-10
    }

    pub fn normalized(&self) -> Self {
        Self {
            amplitudes: self.amplitudes.unscale(self.norm()),
        }
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn expectation(&self, op: &ComplexOperator) -> C64 {
        self.amplitudes.dotc(&(op.matrix() * &self.amplitudes))
    }

    /// `⟨n̂⟩` without building the number operator.
    pub fn mean_occupation(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, z)| n as f64 * z.norm_sqr())
            .sum()
    }

    pub fn parity_expectation(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, z)| if n % 2 == 0 { z.norm_sqr() } else { -z.norm_sqr() })
            .sum()
    }

    /// Population in the Fock levels of the given parity.
    pub fn parity_population(&self, parity: Parity) -> f64 {
        parity.levels(self.dim()).map(|n| self.amplitudes[n].norm_sqr()).sum()
    }

    /// Copy into a larger Fock space, padding with zeros.
    pub fn embedded(&self, dim: usize) -> Result<StateVector> {
        if dim < self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: dim,
            });
        }
        let mut v = DVector::zeros(dim);
        v.rows_mut(0, self.dim()).copy_from(&self.amplitudes);
        Ok(StateVector { amplitudes: v })
    }
}

impl TailMass for StateVector {
    fn tail_mass(&self, tail_levels: usize) -> Result<f64> {
        let d = self.dim();
        check_tail(d, tail_levels)?;
        Ok((d - tail_levels..d).map(|n| self.amplitudes[n].norm_sqr()).sum())
    }
}

/// Tolerances for validating a density matrix.
#[derive(Debug, Clone, Copy)]
pub struct DensityTolerance {
    pub hermiticity: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
}

impl Default for DensityTolerance {
    fn default() -> Self {
        Self {
            hermiticity: 1e-10,
            trace: 1e-10,
            min_eigenvalue: -1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity with the default
    /// tolerances.
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        let rho = Self::new_unchecked(entries);
        rho.check(&DensityTolerance::default())?;
        Ok(rho)
    }

    /// Wraps a matrix without validation, e.g. a propagated state whose
    /// invariants are checked by the caller at looser tolerances.
    pub fn new_unchecked(entries: DMatrix<C64>) -> Self {
        assert!(entries.is_square(), "density matrix must be square");
        Self { entries }
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let v = psi.amplitudes();
        Self {
            entries: v * v.adjoint(),
        }
    }

    pub fn fock(space: &FockSpace, n: usize) -> Result<Self> {
        Ok(Self::from_pure(&space.basis(n)?))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn as_slice(&self) -> &[C64] {
        self.entries.as_slice()
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        linalg::hermiticity_residual(&self.entries)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.entries + self.entries.adjoint()) * C64::new(0.5, 0.0);
        linalg::eigvalsh(&h)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    pub fn expectation(&self, op: &ComplexOperator) -> C64 {
        (op.matrix() * &self.entries).trace()
    }

    pub fn mean_occupation(&self) -> f64 {
        (0..self.dim()).map(|n| n as f64 * self.entries[(n, n)].re).sum()
    }

    pub fn parity_population(&self, parity: Parity) -> f64 {
        parity.levels(self.dim()).map(|n| self.entries[(n, n)].re).sum()
    }

    /// `½ Tr|ρ − σ|`
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let d = &self.entries - &other.entries;
        let h = (&d + d.adjoint()) * C64::new(0.5, 0.0);
        0.5 * linalg::eigvalsh(&h).iter().map(|x| x.abs()).sum::<f64>()
    }

    pub fn check(&self, tol: &DensityTolerance) -> Result<()> {
        let h = self.hermiticity_residual();
        if h > tol.hermiticity {
            return Err(Error::InvalidState(format!("not Hermitian: residual {h:.3e}")));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > tol.trace {
            return Err(Error::InvalidState(format!(
                "trace {:.12} + {:.3e}i differs from 1",
                tr.re, tr.im
            )));
        }
        let m = self.min_eigenvalue();
        if m < tol.min_eigenvalue {
            return Err(Error::InvalidState(format!("negative eigenvalue {m:.3e}")));
        }
        Ok(())
    }
}

impl TailMass for DensityMatrix {
    fn tail_mass(&self, tail_levels: usize) -> Result<f64> {
        let d = self.dim();
        check_tail(d, tail_levels)?;
        Ok((d - tail_levels..d).map(|n| self.entries[(n, n)].re).sum())
    }
}
