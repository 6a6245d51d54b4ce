//! Adaptive Dormand–Prince 5(4) integrator for complex linear systems.
//!
//! Steps are clamped so that every requested output time is hit exactly;
//! no interpolation is involved.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::C64;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus embedded fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Local error tolerances of the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_steps: usize,
}

impl Tolerance {
    /// Relative tolerance with an absolute floor 100 times smaller.
    pub fn relative(rel: f64) -> Self {
        Self {
            rel,
            abs: rel * 1e-2,
            max_steps: 20_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel > 0.0 && self.rel < 1.0) {
            return Err(invalid("rel_tol", alloc::format!("{} not in (0, 1)", self.rel)));
        }
        if !(self.abs > 0.0) {
            return Err(invalid("abs_tol", alloc::format!("{} not positive", self.abs)));
        }
        Ok(())
    }
}

/// Stateful integrator for `y' = f(t, y)`.
///
/// The right-hand side writes `f(t, y)` into its third argument, which is
/// zeroed before every call.
pub struct Dopri5<F> {
    rhs: F,
    tol: Tolerance,
    t: f64,
    y: Vec<C64>,
    h: f64,
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    fsal: bool,
    steps: usize,
}

impl<F> Dopri5<F>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    pub fn new(rhs: F, t0: f64, y0: Vec<C64>, tol: Tolerance) -> Result<Self> {
        tol.validate()?;
        let n = y0.len();
        Ok(Self {
            rhs,
            tol,
            t: t0,
            y: y0,
            h: 0.0,
            k: core::array::from_fn(|_| vec![C64::new(0.0, 0.0); n]),
            tmp: vec![C64::new(0.0, 0.0); n],
            fsal: false,
            steps: 0,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[C64] {
        &self.y
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Replaces the state, e.g. after an external renormalisation.
    pub fn reset(&mut self, t: f64, y: &[C64]) {
        self.t = t;
        self.y.copy_from_slice(y);
        self.fsal = false;
    }

    fn eval(&mut self, stage: usize, t: f64) {
        let k = &mut self.k[stage];
        k.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        (self.rhs)(t, &self.tmp, k);
    }

    fn err_weight(&self, i: usize, y_new: C64) -> f64 {
        self.tol.abs + self.tol.rel * self.y[i].norm().max(y_new.norm())
    }

    fn initial_step(&mut self, span: f64) -> f64 {
        // Hairer–Wanner starting-step heuristic
        self.tmp.copy_from_slice(&self.y);
        let t = self.t;
        self.eval(0, t);
        let n = self.y.len().max(1) as f64;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..self.y.len() {
            let w = self.tol.abs + self.tol.rel * self.y[i].norm();
            d0 += (self.y[i].norm() / w).powi(2);
            d1 += (self.k[0][i].norm() / w).powi(2);
        }
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(span.abs());
        for i in 0..self.y.len() {
            self.tmp[i] = self.y[i] + self.k[0][i] * h0;
        }
        self.eval(1, t + h0);
        let mut d2 = 0.0;
        for i in 0..self.y.len() {
            let w = self.tol.abs + self.tol.rel * self.y[i].norm();
            d2 += ((self.k[1][i] - self.k[0][i]).norm() / w).powi(2);
        }
        let d2 = (d2 / n).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        self.fsal = true;
        (100.0 * h0).min(h1).min(span.abs())
    }

    /// Attempts one step of size `h`; returns the scaled error norm.
    fn try_step(&mut self, h: f64) -> f64 {
        let n = self.y.len();
        let t = self.t;
        if !self.fsal {
            self.tmp.copy_from_slice(&self.y);
            self.eval(0, t);
            self.fsal = true;
        }
        for i in 0..n {
            self.tmp[i] = self.y[i] + self.k[0][i] * (h * A21);
        }
        self.eval(1, t + C2 * h);
        for i in 0..n {
            self.tmp[i] = self.y[i] + (self.k[0][i] * A31 + self.k[1][i] * A32) * h;
        }
        self.eval(2, t + C3 * h);
        for i in 0..n {
            self.tmp[i] = self.y[i]
                + (self.k[0][i] * A41 + self.k[1][i] * A42 + self.k[2][i] * A43) * h;
        }
        self.eval(3, t + C4 * h);
        for i in 0..n {
            self.tmp[i] = self.y[i]
                + (self.k[0][i] * A51
                    + self.k[1][i] * A52
                    + self.k[2][i] * A53
                    + self.k[3][i] * A54)
                    * h;
        }
        self.eval(4, t + C5 * h);
        for i in 0..n {
            self.tmp[i] = self.y[i]
                + (self.k[0][i] * A61
                    + self.k[1][i] * A62
                    + self.k[2][i] * A63
                    + self.k[3][i] * A64
                    + self.k[4][i] * A65)
                    * h;
        }
        self.eval(5, t + h);
        for i in 0..n {
            self.tmp[i] = self.y[i]
                + (self.k[0][i] * B1
                    + self.k[2][i] * B3
                    + self.k[3][i] * B4
                    + self.k[4][i] * B5
                    + self.k[5][i] * B6)
                    * h;
        }
        self.eval(6, t + h);
        let mut acc = 0.0;
        for i in 0..n {
            let e = (self.k[0][i] * E1
                + self.k[2][i] * E3
                + self.k[3][i] * E4
                + self.k[4][i] * E5
                + self.k[5][i] * E6
                + self.k[6][i] * E7)
                * h;
            let w = self.err_weight(i, self.tmp[i]);
            acc += (e.norm() / w).powi(2);
        }
        (acc / n.max(1) as f64).sqrt()
    }

    /// Integrates up to exactly `t_end` (which may equal the current time).
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        let span = t_end - self.t;
        if span == 0.0 {
            return Ok(());
        }
        if span < 0.0 {
            return Err(invalid("t_end", "integration only runs forward in time"));
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(span);
        }
        loop {
            let remaining = t_end - self.t;
            if remaining <= 1e-14 * t_end.abs().max(1.0) {
                self.t = t_end;
                return Ok(());
            }
            let last = self.h >= remaining;
            let h = if last { remaining } else { self.h };
            if h <= 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t: self.t, h });
            }
            self.steps += 1;
            if self.steps > self.tol.max_steps {
                return Err(Error::TooManySteps(self.tol.max_steps));
            }
            let err = self.try_step(h);
            if err.is_nan() {
                return Err(Error::StepUnderflow { t: self.t, h });
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                self.t = if last { t_end } else { self.t + h };
                core::mem::swap(&mut self.y, &mut self.tmp);
                self.k.swap(0, 6);
                // keep the proposed step when the clamp shortened this one
                if !(last && h < self.h) {
                    self.h = h * factor;
                } else {
                    self.h = self.h.max(h * factor);
                }
                if last {
                    return Ok(());
                }
            } else {
                self.h = h * factor.min(1.0);
            }
        }
    }
}

/// Integrates from `t0` and records the state at every output time.
///
/// `times` must be non-decreasing and start at or after `t0`.
pub fn integrate<F>(rhs: F, t0: f64, y0: Vec<C64>, times: &[f64], tol: Tolerance) -> Result<Vec<Vec<C64>>>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let mut stepper = Dopri5::new(rhs, t0, y0, tol)?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        stepper.advance_to(t)?;
        out.push(stepper.y().to_vec());
    }
    Ok(out)
}
