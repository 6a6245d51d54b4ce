//! Landau-Zener crossing on the half line `t ≥ 0`.
//!
//! Two Fock states `n ∓ 1` of equal parity are coupled by `Δ` while their
//! detuning `ν = s t` is swept. In the basis `(|n−1⟩ ± |n+1⟩)/√2` the
//! Hamiltonian is `[[ν, Δ], [Δ, −ν]]` and the initial state is `|n−1⟩`,
//! i.e. `C₊(0) = C₋(0) = 1/√2`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::ode::{Dopri5, Tolerance};

pub use crate::special::complex_gamma;
use crate::special::recip_gamma;
use crate::C64;

/// Target of `2 s t_max²` when extracting the asymptote numerically.
pub const ASYMPTOTIC_PHASE: f64 = 1e4;

/// Largest number of significant digits the Weber solution may cancel.
pub const MAX_DIGITS_LOST: f64 = 6.0;

/// Tolerance of the ray integration for `D_ν`.
pub const WEBER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LzProblem {
    pub delta: f64,
    pub s: f64,
}

impl LzProblem {
    pub fn new(delta: f64, s: f64) -> Result<Self> {
        if !delta.is_finite() {
            return Err(invalid("delta", "not finite"));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(invalid("s", format!("{s} must be positive")));
        }
        Ok(Self { delta, s })
    }

    /// Problem with a given adiabaticity `Δ²/s` and sign of `Δ`.
    pub fn from_ratio(ratio: f64, s: f64, positive: bool) -> Result<Self> {
        if !(ratio >= 0.0) {
            return Err(invalid("ratio", format!("{ratio} must be non-negative")));
        }
        let d = (ratio * s).sqrt();
        Self::new(if positive { d } else { -d }, s)
    }

    /// `p = Δ²/2s`
    pub fn p(&self) -> f64 {
        self.delta * self.delta / (2.0 * self.s)
    }

    /// Time after which the crossing is over and `2 s t² ≥ 10⁴`.
    pub fn asymptotic_time(&self) -> f64 {
        (ASYMPTOTIC_PHASE / (2.0 * self.s)).sqrt().max(20.0 * self.delta.abs() / self.s)
    }
}

/// Upper and lower adiabatic eigenvectors of `[[ν, Δ], [Δ, −ν]]`.
pub fn adiabatic_vectors(nu: f64, delta: f64) -> ([f64; 2], [f64; 2]) {
    let e = nu.hypot(delta);
    let (x, y) = (nu + e, delta);
    let n = x.hypot(y);
    if n == 0.0 {
        // Δ = 0 and ν ≤ 0; the degenerate point ν = 0 joins the ν > 0 side
        return if nu == 0.0 { ([1.0, 0.0], [0.0, 1.0]) } else { ([0.0, 1.0], [1.0, 0.0]) };
    }
    ([x / n, y / n], [-y / n, x / n])
}

#[derive(Debug, Clone, PartialEq)]
pub struct LzSolution {
    pub t_grid: Vec<f64>,
    pub c_plus: Vec<C64>,
    pub c_minus: Vec<C64>,
    pub c_up: Vec<C64>,
    pub c_down: Vec<C64>,
    pub alpha_up: Option<C64>,
    pub alpha_down: Option<C64>,
}

impl LzSolution {
    fn from_amplitudes(prob: &LzProblem, t_grid: &[f64], c_plus: Vec<C64>, c_minus: Vec<C64>) -> Self {
        let mut c_up = Vec::with_capacity(t_grid.len());
        let mut c_down = Vec::with_capacity(t_grid.len());
        for (i, &t) in t_grid.iter().enumerate() {
            let (u, d) = adiabatic_vectors(prob.s * t, prob.delta);
            c_up.push(c_plus[i] * u[0] + c_minus[i] * u[1]);
            c_down.push(c_plus[i] * d[0] + c_minus[i] * d[1]);
        }
        Self {
            t_grid: t_grid.to_vec(),
            c_plus,
            c_minus,
            c_up,
            c_down,
            alpha_up: None,
            alpha_down: None,
        }
    }

    pub fn up_population(&self) -> Vec<f64> {
        self.c_up.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn max_norm_error(&self) -> f64 {
        self.c_plus
            .iter()
            .zip(&self.c_minus)
            .fold(0.0, |m, (a, b)| m.max((a.norm_sqr() + b.norm_sqr() - 1.0).abs()))
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.iter().any(|&t| !(t >= 0.0 && t.is_finite())) || t_grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(invalid("t_grid", "must be ascending and non-negative"));
    }
    Ok(())
}

/// `exp(−i(a·σ))` applied to `y`.
fn spin_rotation(a: [f64; 3], y: [C64; 2]) -> [C64; 2] {
    let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    let (c, sn) = (n.cos(), if n > 0.0 { n.sin() / n } else { 1.0 });
    let i = C64::new(0.0, 1.0);
    // (a·σ) y
    let m0 = y[0] * a[2] + y[1] * C64::new(a[0], -a[1]);
    let m1 = y[0] * C64::new(a[0], a[1]) - y[1] * a[2];
    [y[0] * c - i * sn * m0, y[1] * c - i * sn * m1]
}

/// One fourth-order Magnus step of `H = st σ_z + Δ σ_x`.
fn magnus_step(s: f64, delta: f64, t: f64, h: f64, y: [C64; 2]) -> [C64; 2] {
    // the Gauss-point average gives st at the midpoint; the commutator
    // correction is along σ_y
    let tm = t + 0.5 * h;
    spin_rotation([h * delta, h * h * h * s * delta / 6.0, h * s * tm], y)
}

/// Direct integration of the two-level Schrödinger equation.
///
/// Uses an adaptive fourth-order Magnus propagator, so the norm is
/// preserved to rounding error and `rel_tol` only controls the phase
/// accuracy. Step size is set by step doubling.
pub fn lz_evolve_numeric(prob: &LzProblem, t_grid: &[f64], rel_tol: f64) -> Result<LzSolution> {
    check_grid(t_grid)?;
    Tolerance::relative(rel_tol).validate()?;
    let (s, delta) = (prob.s, prob.delta);
    let mut y = [C64::new(FRAC_1_SQRT_2, 0.0); 2];
    let mut t = 0.0;
    let mut h = 0.1 / (1.0 + delta.abs() + s.sqrt());
    let mut steps = 0usize;
    let mut cp = Vec::with_capacity(t_grid.len());
    let mut cm = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        while t < target {
            let last = h >= target - t;
            let hs = if last { target - t } else { h };
            let full = magnus_step(s, delta, t, hs, y);
            let half = magnus_step(s, delta, t + 0.5 * hs, 0.5 * hs, magnus_step(s, delta, t, 0.5 * hs, y));
            let err = ((full[0] - half[0]).norm_sqr() + (full[1] - half[1]).norm_sqr()).sqrt() / 15.0;
            let factor = if err > 0.0 { (0.9 * (rel_tol / err).powf(0.2)).clamp(0.2, 4.0) } else { 4.0 };
            if err <= rel_tol {
                y = half;
                t = if last { target } else { t + hs };
                if !last || factor < 1.0 {
                    h = hs * factor;
                }
                steps += 1;
                if steps > 20_000_000 {
                    return Err(Error::TooManySteps(steps));
                }
            } else {
                h = hs * factor;
                if h < 1e-14 * t.max(1.0) {
                    return Err(Error::StepUnderflow { t, h });
                }
            }
        }
        cp.push(y[0]);
        cm.push(y[1]);
    }
    Ok(LzSolution::from_amplitudes(prob, t_grid, cp, cm))
}

/// `θ(t) = st²/2 + (Δ²/2s) ln(2st/|Δ|) + Δ²/4s`
pub fn dynamical_phase(prob: &LzProblem, t: f64) -> f64 {
    let s = prob.s;
    let d2 = prob.delta * prob.delta;
    if d2 == 0.0 {
        return s * t * t / 2.0;
    }
    s * t * t / 2.0 + d2 / (2.0 * s) * (2.0 * s * t / prob.delta.abs()).ln() + d2 / (4.0 * s)
}

/// Exact `∫₀ᵗ √(ν² + Δ²) dt′`.
pub fn adiabatic_phase_integral(prob: &LzProblem, t: f64) -> f64 {
    let (s, d) = (prob.s, prob.delta.abs());
    let nu = s * t;
    if d == 0.0 {
        return nu * t / 2.0;
    }
    0.5 * t * nu.hypot(d) + d * d / (2.0 * s) * (nu / d).asinh()
}

/// Closed-form asymptotic amplitudes `(α↑, α↓)` on the two adiabatic
/// branches.
pub fn lz_asymptotic_alphas(prob: &LzProblem) -> (C64, C64) {
    let p = prob.p();
    if p == 0.0 {
        return (C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0));
    }
    let sgn = prob.delta.signum();
    let i = C64::new(0.0, 1.0);
    let g = |z: C64| complex_gamma(z).expect("non-real argument");
    let pref = C64::new(2.0 * p / core::f64::consts::E, 0.0).powc(-i * p / 2.0)
        * ((3.0 * PI * p / 4.0).exp() - (-5.0 * PI * p / 4.0).exp())
        * p.sqrt()
        * g(i * p)
        / (4.0 * 2f64.sqrt() * PI);
    let lam_plus = pref;
    let lam_minus = pref.conj();
    let up = lam_plus * (g(-i * p / 2.0) * p.sqrt() + C64::new(1.0, 1.0) * sgn * g((1.0 - i * p) / 2.0));
    let down = lam_minus * (g(i * p / 2.0) * p.sqrt() + C64::new(-1.0, 1.0) * sgn * g((1.0 + i * p) / 2.0));
    (up, down)
}

/// Upper-branch population at long times, from a numeric run averaged
/// over the last oscillation period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LzAsymptote {
    pub t_max: f64,
    pub up_population: f64,
    pub down_population: f64,
}

pub fn numeric_asymptote(prob: &LzProblem, rel_tol: f64) -> Result<LzAsymptote> {
    let t_max = prob.asymptotic_time();
    // |C↑|² beats as e^{2iθ}, period π/E
    let e = (prob.s * t_max).hypot(prob.delta);
    let t0 = t_max - PI / e;
    let m = 256;
    let mut grid = vec![0.0];
    grid.extend((0..m).map(|k| t0 + (t_max - t0) * (k as f64 + 0.5) / m as f64));
    let sol = lz_evolve_numeric(prob, &grid, rel_tol)?;
    let up = sol.c_up[1..].iter().map(|c| c.norm_sqr()).sum::<f64>() / m as f64;
    let down = sol.c_down[1..].iter().map(|c| c.norm_sqr()).sum::<f64>() / m as f64;
    Ok(LzAsymptote {
        t_max,
        up_population: up,
        down_population: down,
    })
}

/// `1/t` correction amplitudes `(β↑, β↓)` read off a solution at its last
/// grid time, given the asymptotic `α`s.
pub fn correction_amplitudes(prob: &LzProblem, sol: &LzSolution, alphas: (C64, C64)) -> Result<(C64, C64)> {
    let k = sol.t_grid.len().checked_sub(1).ok_or_else(|| invalid("t_grid", "empty"))?;
    let t = sol.t_grid[k];
    if !(t > 0.0) {
        return Err(invalid("t_grid", "last time must be positive"));
    }
    let th = dynamical_phase(prob, t);
    let scale = (2.0 * prob.s * t * t).sqrt();
    let e = C64::new(0.0, th).exp();
    let up = (sol.c_up[k] - alphas.0 * e.conj()) * e.conj() * scale;
    let down = (sol.c_down[k] - alphas.1 * e) * e * scale;
    Ok((up, down))
}

/// `D_ν(r e^{iφ})` at each radius of the ascending `radii`.
///
/// The Weber equation `w″ + (ν + ½ − z²/4) w = 0` is integrated along the
/// ray from the origin.
pub fn parabolic_cylinder_ray(nu: C64, phi: f64, radii: &[f64]) -> Result<Vec<C64>> {
    check_grid(radii).map_err(|_| invalid("radii", "must be ascending and non-negative"))?;
    let sq_pi = PI.sqrt();
    let two = C64::new(2.0, 0.0);
    let w0 = two.powc(nu / 2.0) * sq_pi * recip_gamma((1.0 - nu) / 2.0);
    let dw0 = -two.powc((nu + 1.0) / 2.0) * sq_pi * recip_gamma(-nu / 2.0);
    let dir = C64::from_polar(1.0, phi);
    let dir2 = dir * dir;
    let rhs = move |r: f64, y: &[C64], dy: &mut [C64]| {
        // d/dr along z = r e^{iφ}
        dy[0] = dir * y[1];
        dy[1] = dir * (dir2 * (r * r / 4.0) - nu - 0.5) * y[0];
    };
    let mut tol = Tolerance::relative(WEBER_TOL);
    tol.abs = WEBER_TOL * (w0.norm() + dw0.norm()).max(1e-300);
    let mut stepper = Dopri5::new(rhs, 0.0, vec![w0, dw0], tol)?;
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        stepper.advance_to(r)?;
        out.push(stepper.y()[0]);
    }
    Ok(out)
}

/// `D_ν(z)` at one point.
pub fn parabolic_cylinder(nu: C64, z: C64) -> Result<C64> {
    Ok(parabolic_cylinder_ray(nu, z.arg(), &[z.norm()])?[0])
}

/// `(D_ν(0), D′_ν(0))`
fn origin_values(nu: C64) -> (C64, C64) {
    let two = C64::new(2.0, 0.0);
    let sq_pi = PI.sqrt();
    (
        two.powc(nu / 2.0) * sq_pi * recip_gamma((1.0 - nu) / 2.0),
        -two.powc((nu + 1.0) / 2.0) * sq_pi * recip_gamma(-nu / 2.0),
    )
}

/// One amplitude `A D_{ν_a}(r e^{iφ_a}) + B D_{ν_b}(r e^{iφ_b})`, with `r =
/// √(2s) t`, fixed by its value and derivative at `t = 0`.
fn weber_branch(prob: &LzProblem, t_grid: &[f64], (nu_a, phi_a): (C64, f64), (nu_b, phi_b): (C64, f64), c0: C64, dc0: C64) -> Result<(Vec<C64>, f64)> {
    let k = (2.0 * prob.s).sqrt();
    let (da0, dda0) = origin_values(nu_a);
    let (db0, ddb0) = origin_values(nu_b);
    // d/dt D(k t e^{iφ}) = k e^{iφ} D′
    let ea = C64::from_polar(k, phi_a);
    let eb = C64::from_polar(k, phi_b);
    let (m11, m12, m21, m22) = (da0, db0, ea * dda0, eb * ddb0);
    let det = m11 * m22 - m12 * m21;
    let scale = (m11.norm() * m22.norm()).max(m12.norm() * m21.norm());
    if !(det.norm() > 1e-14 * scale) {
        return Err(Error::PrecisionLoss { digits: 16.0 });
    }
    let a = (c0 * m22 - m12 * dc0) / det;
    let b = (m11 * dc0 - m21 * c0) / det;
    let mut lost = (scale / det.norm()).log10().max(0.0);

    let radii: Vec<f64> = t_grid.iter().map(|t| k * t).collect();
    let wa = parabolic_cylinder_ray(nu_a, phi_a, &radii)?;
    let wb = parabolic_cylinder_ray(nu_b, phi_b, &radii)?;
    let mut out = Vec::with_capacity(t_grid.len());
    for (x, y) in wa.iter().zip(&wb) {
        let (ta, tb) = (a * x, b * y);
        let c = ta + tb;
        let big = ta.norm().max(tb.norm());
        if big > 0.0 {
            lost = lost.max((big / c.norm()).log10());
        }
        out.push(c);
    }
    Ok((out, lost))
}

/// Exact solution in parabolic cylinder functions.
///
/// `C₊ = A₊ D_{ip−1}(−i z₊) + B₊ D_{−ip}(z₊)` and
/// `C₋ = A₋ D_{−ip−1}(i z₋) + B₋ D_{ip}(z₋)` with
/// `z± = √(2s) e^{±iπ/4} t`. The `α`s are filled in from the closed form.
pub fn weber_solution(prob: &LzProblem, t_grid: &[f64]) -> Result<LzSolution> {
    check_grid(t_grid)?;
    let p = prob.p();
    let i = C64::new(0.0, 1.0);
    let c0 = C64::new(FRAC_1_SQRT_2, 0.0);
    // i Ċ±(0) = Δ C∓(0)
    let dc0 = -i * prob.delta * c0;
    let (cp, lost_p) = weber_branch(prob, t_grid, (i * p - 1.0, -FRAC_PI_4), (-i * p, FRAC_PI_4), c0, dc0)?;
    let (cm, lost_m) = weber_branch(prob, t_grid, (-i * p - 1.0, FRAC_PI_4), (i * p, -FRAC_PI_4), c0, dc0)?;
    let digits = lost_p.max(lost_m);
    if digits > MAX_DIGITS_LOST {
        return Err(Error::PrecisionLoss { digits });
    }
    let mut sol = LzSolution::from_amplitudes(prob, t_grid, cp, cm);
    let (au, ad) = lz_asymptotic_alphas(prob);
    sol.alpha_up = Some(au);
    sol.alpha_down = Some(ad);
    Ok(sol)
}

/// Exponent `κ` of `|α↓|² ∝ (Δ²/s)^{−κ}` fitted on log-log axes.
pub fn nonadiabatic_exponent(ratios: &[f64]) -> Result<f64> {
    if ratios.len() < 2 {
        return Err(invalid("ratios", "need at least two points"));
    }
    let mut xs = Vec::with_capacity(ratios.len());
    let mut ys = Vec::with_capacity(ratios.len());
    for &r in ratios {
        let (_, down) = lz_asymptotic_alphas(&LzProblem::from_ratio(r, 1.0, true)?);
        xs.push(r.ln());
        ys.push(down.norm_sqr().ln());
    }
    let (slope, _, _) = crate::open::linear_fit(&xs, &ys);
    Ok(-slope)
}
