//! Gamma function of complex argument.

use core::f64::consts::PI;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::C64;

// Lanczos approximation, g = 7, n = 9
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_pole(z: C64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// `ln Γ(z)` on the principal sheet for `Re z ≥ 1/2`.
fn ln_gamma_right(z: C64) -> C64 {
    let z = z - 1.0;
    let mut x = C64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// `Γ(z)` for complex `z`.
///
/// Uses the reflection formula for `Re z < 1/2`.
pub fn complex_gamma(z: C64) -> Result<C64> {
    if is_pole(z) {
        return Err(Error::GammaPole { re: z.re, im: z.im });
    }
    if z.re < 0.5 {
        // Γ(z) Γ(1−z) = π / sin(πz)
        let s = (z * PI).sin();
        Ok(PI / (s * ln_gamma_right(1.0 - z).exp()))
    } else {
        Ok(ln_gamma_right(z).exp())
    }
}

/// `1/Γ(z)`, an entire function that vanishes at the poles of `Γ`.
pub fn recip_gamma(z: C64) -> C64 {
    if is_pole(z) {
        return C64::new(0.0, 0.0);
    }
    if z.re < 0.5 {
        let s = (z * PI).sin();
        s * ln_gamma_right(1.0 - z).exp() / PI
    } else {
        (-ln_gamma_right(z)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn real_values() {
        assert!(rel(complex_gamma(C64::new(1.0, 0.0)).unwrap(), C64::new(1.0, 0.0)) < 1e-14);
        assert!(rel(complex_gamma(C64::new(0.5, 0.0)).unwrap(), C64::new(PI.sqrt(), 0.0)) < 1e-14);
        let mut fact = 1.0;
        for n in 1..20 {
            fact *= n as f64;
            let g = complex_gamma(C64::new(n as f64 + 1.0, 0.0)).unwrap();
            assert!(rel(g, C64::new(fact, 0.0)) < 1e-13, "n={n}");
        }
        // Γ(−1/2) = −2√π
        assert!(rel(complex_gamma(C64::new(-0.5, 0.0)).unwrap(), C64::new(-2.0 * PI.sqrt(), 0.0)) < 1e-14);
    }

    #[test]
    fn imaginary_axis_modulus() {
        // |Γ(ix)|² = π / (x sinh πx)
        for &x in &[0.1, 1.0, 2.5, 7.0, 15.0] {
            let g = complex_gamma(C64::new(0.0, x)).unwrap();
            let want = (PI / (x * (PI * x).sinh())).sqrt();
            assert!((g.norm() - want).abs() / want < 1e-12, "x={x}");
        }
        assert!((complex_gamma(C64::new(0.0, 1.0)).unwrap().norm() - 0.521564).abs() < 1e-6);
    }

    #[test]
    fn recurrence_and_conjugation() {
        for &(a, b) in &[(0.3, 4.0), (-3.7, 1.2), (10.0, -8.0), (-12.5, 3.0), (2.0, 18.0)] {
            let z = C64::new(a, b);
            let g = complex_gamma(z).unwrap();
            let g1 = complex_gamma(z + 1.0).unwrap();
            assert!(rel(g1, z * g) < 1e-12, "z={z}");
            assert!(rel(complex_gamma(z.conj()).unwrap(), g.conj()) < 1e-13);
        }
    }

    #[test]
    fn half_line_modulus() {
        // |Γ(1/2 + ix)|² = π / cosh πx
        for &x in &[0.5, 3.0, 12.0] {
            let g = complex_gamma(C64::new(0.5, x)).unwrap();
            let want = (PI / (PI * x).cosh()).sqrt();
            assert!((g.norm() - want).abs() / want < 1e-12);
        }
    }

    #[test]
    fn poles() {
        assert!(complex_gamma(C64::new(0.0, 0.0)).is_err());
        assert!(complex_gamma(C64::new(-3.0, 0.0)).is_err());
        assert_eq!(recip_gamma(C64::new(-2.0, 0.0)), C64::new(0.0, 0.0));
        let r = recip_gamma(C64::new(3.0, 0.0));
        assert!((r.re - 0.5).abs() < 1e-14);
    }
}
