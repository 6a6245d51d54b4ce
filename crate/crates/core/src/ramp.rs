//! Schrödinger evolution under a linearly ramped drive `f(t) = s̃ t`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DVector;

use crate::error::{invalid, Error, Result};
use crate::fock::{truncation_check, FockSpace, StateVector, DEFAULT_TAIL_LEVELS, TAIL_LIMIT};
use crate::linalg::Sparse;
use crate::ode::{Dopri5, Tolerance};
use crate::rwa::{build_h_rwa, RwaSystem};
use crate::spectrum::{eigenstate, LevelLabel};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct RampProtocol {
    pub s_tilde: f64,
    pub f_final: f64,
    pub delta: f64,
    pub initial_state: StateVector,
    /// Times at which the state is recorded; the end of the ramp is always
    /// recorded as well.
    pub output_times: Vec<f64>,
}

impl RampProtocol {
    pub fn t_end(&self) -> f64 {
        self.f_final / self.s_tilde
    }

    pub fn drive_at(&self, t: f64) -> f64 {
        (self.s_tilde * t).min(self.f_final)
    }

    /// `n` equally spaced output times covering the whole ramp.
    pub fn uniform_times(&self, n: usize) -> Vec<f64> {
        let te = self.t_end();
        (0..n).map(|i| te * i as f64 / (n.max(2) - 1) as f64).collect()
    }

    fn validate(&self, space: &FockSpace) -> Result<()> {
        if !(self.s_tilde > 0.0 && self.s_tilde.is_finite()) {
            return Err(invalid("s_tilde", format!("{} must be positive", self.s_tilde)));
        }
        if !(self.f_final > 0.0 && self.f_final.is_finite()) {
            return Err(invalid("f_final", format!("{} must be positive", self.f_final)));
        }
        if !self.delta.is_finite() {
            return Err(invalid("delta", "not finite"));
        }
        if self.initial_state.dim() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: self.initial_state.dim(),
            });
        }
        if !self.initial_state.is_normalized() {
            return Err(invalid("initial_state", "not normalized"));
        }
        let te = self.t_end();
        if self.output_times.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(invalid("output_times", "must be ascending"));
        }
        if self.output_times.iter().any(|&t| !(0.0..=te).contains(&t)) {
            return Err(invalid("output_times", format!("must lie in [0, {te}]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RampResult {
    pub times: Vec<f64>,
    pub trajectory: Vec<StateVector>,
    pub final_state: StateVector,
    /// Label of the stationary state followed by the ramp.
    pub label: LevelLabel,
    /// `|⟨φ_E|φ(t_end)⟩|` against the final stationary state.
    pub final_overlap: f64,
    /// `|⟨φ_E|φ(t_end)⟩|²`
    pub final_fidelity: f64,
    pub max_norm_error: f64,
}

/// Zero-drive label of the Fock level carrying most of the state.
pub fn label_of_state(state: &StateVector, delta: f64) -> LevelLabel {
    let n = state
        .amplitudes()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        .map(|(n, _)| n)
        .unwrap_or(0);
    LevelLabel::of_fock_level(delta, n)
}

/// Integrates the ramp and compares the final state with the stationary
/// state of the final Hamiltonian that carries the initial state's label.
pub fn evolve_ramp(space: &FockSpace, protocol: &RampProtocol, rel_tol: f64) -> Result<RampResult> {
    protocol.validate(space)?;
    let label = label_of_state(&protocol.initial_state, protocol.delta);
    let final_sys = RwaSystem::new(protocol.delta, protocol.f_final)?;
    let (_, target) = eigenstate(space, &final_sys, label)?;
    let tail = truncation_check(&target, DEFAULT_TAIL_LEVELS)?;
    if tail > TAIL_LIMIT {
        return Err(Error::NotConverged {
            dim: space.dim(),
            tail,
            limit: TAIL_LIMIT,
        });
    }

    let h0 = Sparse::from_dense(build_h_rwa(space, &RwaSystem::new(protocol.delta, 0.0)?).matrix());
    // ∂H/∂f = (a² + a†²)/2
    let h1 = Sparse::from_dense(build_h_rwa(space, &RwaSystem::new(0.0, 1.0)?).matrix());
    let h1 = Sparse {
        entries: h1.entries.into_iter().filter(|e| e.0 != e.1).collect(),
    };
    let s = protocol.s_tilde;
    let f_final = protocol.f_final;
    let minus_i = C64::new(0.0, -1.0);
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        let f = (s * t).min(f_final);
        for &(i, k, v) in &h0.entries {
            dy[i] += minus_i * v * y[k];
        }
        for &(i, k, v) in &h1.entries {
            dy[i] += minus_i * v * f * y[k];
        }
    };
    let mut stepper = Dopri5::new(
        rhs,
        0.0,
        protocol.initial_state.as_slice().to_vec(),
        Tolerance::relative(rel_tol),
    )?;
    let mut times = Vec::with_capacity(protocol.output_times.len());
    let mut trajectory = Vec::with_capacity(protocol.output_times.len());
    let mut max_norm_error: f64 = 0.0;
    for &t in &protocol.output_times {
        stepper.advance_to(t)?;
        let st = StateVector::new(DVector::from_column_slice(stepper.y()));
        max_norm_error = max_norm_error.max((st.norm() - 1.0).abs());
        times.push(t);
        trajectory.push(st);
    }
    stepper.advance_to(protocol.t_end())?;
    let final_state = StateVector::new(DVector::from_column_slice(stepper.y()));
    max_norm_error = max_norm_error.max((final_state.norm() - 1.0).abs());
    let final_overlap = target.inner(&final_state).norm();
    Ok(RampResult {
        times,
        trajectory,
        final_state,
        label,
        final_overlap,
        final_fidelity: final_overlap * final_overlap,
        max_norm_error,
    })
}

/// `|⟨φ_E|state⟩|²` against the stationary state with the given label at
/// drive `f`.
pub fn instantaneous_fidelity(state: &StateVector, space: &FockSpace, delta: f64, f: f64, label: LevelLabel) -> Result<f64> {
    if !(f >= 0.0) {
        return Err(invalid("f", format!("{f} must be non-negative")));
    }
    let (_, phi) = eigenstate(space, &RwaSystem::new(delta, f)?, label)?;
    Ok(phi.inner(state).norm_sqr())
}
