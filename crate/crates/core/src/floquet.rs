//! Lab-frame Floquet eigenproblem in the Fourier × Fock basis.
//!
//! Unlike the rest of the crate this module works in lab units: `ω₀` sets
//! the unit of frequency and energies carry their natural scale. It is the
//! independent check of the RWA quasienergy mapping.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::fock::Parity;
use crate::rwa::{h_rwa_block, RwaSystem};
use crate::{linalg, ComplexOperator, C64};

pub const DEFAULT_K_CUT: usize = 12;
pub const DEFAULT_N_CUT: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabFrameParams {
    pub omega0: f64,
    /// Kerr nonlinearity `V`.
    pub v: f64,
    /// Modulation amplitude `F` of the squared frequency.
    pub drive: f64,
    pub omega_f: f64,
    pub k_cut: usize,
    pub n_cut: usize,
}

impl LabFrameParams {
    pub fn new(omega0: f64, v: f64, drive: f64, omega_f: f64, k_cut: usize, n_cut: usize) -> Result<Self> {
        if !(omega0 > 0.0) {
            return Err(invalid("omega0", format!("{omega0} must be positive")));
        }
        if !(v > 0.0 && v < 0.05 * omega0) {
            return Err(invalid("V", format!("{v} must lie in (0, 0.05 omega0)")));
        }
        if !(drive >= 0.0) {
            return Err(invalid("F", format!("{drive} must be non-negative")));
        }
        if !(omega_f > 0.0 && (omega_f - 2.0 * omega0).abs() < 0.2 * omega0) {
            return Err(invalid(
                "omegaF",
                format!("{omega_f} must be within 0.2 omega0 of 2 omega0"),
            ));
        }
        if k_cut < 4 || n_cut < 4 {
            return Err(invalid("cutoff", format!("k_cut = {k_cut}, n_cut = {n_cut}; both must be >= 4")));
        }
        Ok(Self {
            omega0,
            v,
            drive,
            omega_f,
            k_cut,
            n_cut,
        })
    }

    /// Lab parameters that realise the dimensionless `(δ, f)` at the given
    /// nonlinearity.
    pub fn from_rwa(omega0: f64, v: f64, sys: &RwaSystem, k_cut: usize, n_cut: usize) -> Result<Self> {
        let omega_f = 2.0 * (omega0 + sys.delta * v);
        let drive = 4.0 * omega0 * sys.f * v;
        Self::new(omega0, v, drive, omega_f, k_cut, n_cut)
    }

    /// Effective drive `F̃ = F/4ω₀`.
    pub fn f_tilde(&self) -> f64 {
        self.drive / (4.0 * self.omega0)
    }

    /// The dimensionless RWA parameters of this setup.
    pub fn rwa_system(&self) -> RwaSystem {
        RwaSystem {
            delta: (0.5 * self.omega_f - self.omega0) / self.v,
            f: self.f_tilde() / self.v,
        }
    }

    /// Undriven Kerr level `𝓔_n = ω₀ n + V(n² + n)/2`.
    pub fn level(&self, n: usize) -> f64 {
        let x = n as f64;
        self.omega0 * x + 0.5 * self.v * (x * x + x)
    }

    pub fn n_fourier(&self) -> usize {
        2 * self.k_cut + 1
    }

    pub fn size(&self) -> usize {
        self.n_fourier() * self.n_cut
    }

    /// Position of `u_{k,n}` in the Floquet matrix.
    pub fn index(&self, k: i64, n: usize) -> Option<usize> {
        let kc = self.k_cut as i64;
        (k.abs() <= kc && n < self.n_cut).then(|| (k + kc) as usize * self.n_cut + n)
    }

    fn k_values(&self) -> impl Iterator<Item = i64> {
        let kc = self.k_cut as i64;
        -kc..=kc
    }

    /// `⟨n|q²|m⟩` for `q = (a + a†)/√(2ω₀)`.
    fn q2(&self, n: usize, m: usize) -> f64 {
        let s = 1.0 / (2.0 * self.omega0);
        let (lo, hi) = if n <= m { (n, m) } else { (m, n) };
        if lo == hi {
            s * (2 * lo + 1) as f64
        } else if hi == lo + 2 {
            s * (((lo + 1) * (lo + 2)) as f64).sqrt()
        } else {
            0.0
        }
    }

    fn matrix_element(&self, (k, n): (i64, usize), (k2, n2): (i64, usize)) -> f64 {
        if k == k2 {
            if n == n2 {
                self.level(n) - k as f64 * self.omega_f
            } else {
                0.0
            }
        } else if (k - k2).abs() == 1 {
            0.25 * self.drive * self.q2(n, n2)
        } else {
            0.0
        }
    }

    fn sector(&self, parity: Parity) -> Vec<(i64, usize)> {
        let mut out = Vec::new();
        for k in self.k_values() {
            for n in parity.levels(self.n_cut) {
                out.push((k, n));
            }
        }
        out
    }

    fn sector_matrix(&self, basis: &[(i64, usize)]) -> DMatrix<f64> {
        DMatrix::from_fn(basis.len(), basis.len(), |i, j| self.matrix_element(basis[i], basis[j]))
    }
}

pub(crate) fn floquet_matrix_real(p: &LabFrameParams) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(p.size(), p.size());
    for k in p.k_values() {
        for n in 0..p.n_cut {
            let i = p.index(k, n).unwrap();
            m[(i, i)] = p.level(n) - k as f64 * p.omega_f;
            for n2 in n.saturating_sub(2)..(n + 3).min(p.n_cut) {
                let c = 0.25 * p.drive * p.q2(n, n2);
                if c == 0.0 {
                    continue;
                }
                for k2 in [k - 1, k + 1] {
                    if let Some(j) = p.index(k2, n2) {
                        m[(i, j)] = c;
                    }
                }
            }
        }
    }
    m
}

/// The Floquet matrix over `k ∈ [−k_cut, k_cut]`, `n ∈ [0, n_cut)`.
pub fn build_floquet_matrix(p: &LabFrameParams) -> ComplexOperator {
    let m = floquet_matrix_real(p).map(|x| C64::new(x, 0.0));
    ComplexOperator::hermitian(m).expect("Floquet matrix is real symmetric")
}

/// Members of the resonant set `G_{k,n}` inside the cutoffs.
pub fn resonant_set(p: &LabFrameParams, k: i64, n: usize) -> Vec<(i64, usize)> {
    let mut out = Vec::new();
    let mut kk = k - (n / 2) as i64;
    let mut nn = n % 2;
    while nn < p.n_cut {
        if p.index(kk, nn).is_some() {
            out.push((kk, nn));
        }
        kk += 1;
        nn += 2;
    }
    out
}

/// Block of the Floquet matrix restricted to a resonant set.
pub fn resonant_block(p: &LabFrameParams, set: &[(i64, usize)]) -> DMatrix<f64> {
    p.sector_matrix(set)
}

/// The two resonant systems `G_{0,0}` (even) and `G_{0,1}` (odd).
///
/// Row `k` couples `u_{k,2k(+1)}` to its neighbours with the exact
/// harmonic-oscillator coefficient `(F̃/2)√((n+1)(n+2))`. Unlike the sets
/// returned by [`resonant_set`], the index starts at `k = 0` regardless of
/// `k_cut`.
pub fn reduced_rwa_equations(p: &LabFrameParams) -> (DMatrix<f64>, DMatrix<f64>) {
    let build = |offset: usize| {
        let m = (p.n_cut - offset).div_ceil(2);
        DMatrix::from_fn(m, m, |i, j| {
            let (n, n2) = (2 * i + offset, 2 * j + offset);
            if i == j {
                p.level(n) - i as f64 * p.omega_f
            } else if i.abs_diff(j) == 1 {
                0.25 * p.drive * p.q2(n, n2)
            } else {
                0.0
            }
        })
    };
    (build(0), build(1))
}

/// Quasienergy of an RWA level, reduced into `[0, ω_F)`.
///
/// `e` and `omega_f` must share units.
pub fn quasienergies_from_rwa(e: f64, parity: i32, omega_f: f64) -> f64 {
    reduce(e + (1 - parity) as f64 * omega_f / 4.0, omega_f)
}

fn rem_euclid(x: f64, m: f64) -> f64 {
    let r = x % m;
    if r < 0.0 {
        r + m
    } else {
        r
    }
}

fn reduce(x: f64, omega_f: f64) -> f64 {
    let r = rem_euclid(x, omega_f);
    if r >= omega_f {
        0.0
    } else {
        r
    }
}

/// Distance between two quasienergies on the circle of circumference `ω_F`.
pub fn circular_distance(a: f64, b: f64, omega_f: f64) -> f64 {
    let d = rem_euclid(a - b, omega_f);
    d.min(omega_f - d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasienergySet {
    pub omega_f: f64,
    pub values: Vec<f64>,
    pub parity_labels: Vec<i32>,
}

impl QuasienergySet {
    fn push(&mut self, eps: f64, parity: i32) {
        self.values.push(reduce(eps, self.omega_f));
        self.parity_labels.push(parity);
    }
}

/// All quasienergies of the truncated Floquet matrix, reduced modulo `ω_F`
/// and sorted, with their Fock-parity labels.
pub fn floquet_spectrum(p: &LabFrameParams) -> QuasienergySet {
    let mut out = QuasienergySet {
        omega_f: p.omega_f,
        values: Vec::new(),
        parity_labels: Vec::new(),
    };
    let mut all = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        let basis = p.sector(parity);
        for e in linalg::eigh_real(&p.sector_matrix(&basis)).0 {
            all.push((reduce(e, p.omega_f), parity.sign()));
        }
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (e, s) in all {
        out.push(e, s);
    }
    out
}

/// Quasienergies of the lowest RWA levels, computed two ways.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetComparison {
    /// From RWA diagonalisation and the parity-dependent mapping.
    pub rwa: QuasienergySet,
    /// From the Floquet matrix, the eigenvector matched to each RWA level.
    pub floquet: QuasienergySet,
    /// Overlap of each matched Floquet eigenvector with the RWA profile.
    pub overlaps: Vec<f64>,
    pub max_discrepancy: f64,
}

/// Matches the `n_states` lowest RWA levels to eigenvectors of the full
/// Floquet matrix.
///
/// Each RWA eigenvector `φ` is laid along the resonant diagonal
/// `u_{⌊n/2⌋−K, n} = φ_n` (with `K` centring the profile in the Fourier
/// window) and refined by inverse iteration at the shift predicted by the
/// RWA mapping. Fails if the refined vector retains less than half of its
/// overlap with the RWA profile.
pub fn compare_with_rwa(p: &LabFrameParams, n_states: usize) -> Result<FloquetComparison> {
    let sys = p.rwa_system();
    let shift = (p.n_cut / 4) as i64;
    let mut levels: Vec<(f64, Parity, DVector<f64>)> = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        let (vals, vecs) = linalg::eigh_real(&h_rwa_block(p.n_cut, &sys, parity));
        for (r, &e) in vals.iter().enumerate() {
            levels.push((e, parity, vecs.column(r).into_owned()));
        }
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    if n_states > levels.len() {
        return Err(invalid("n_states", format!("{n_states} exceeds {} RWA levels", levels.len())));
    }
    let empty = || QuasienergySet {
        omega_f: p.omega_f,
        values: Vec::new(),
        parity_labels: Vec::new(),
    };
    let (mut rwa, mut floquet, mut overlaps) = (empty(), empty(), Vec::new());
    let mut max_discrepancy: f64 = 0.0;
    let mut cache: Vec<(Parity, Vec<(i64, usize)>, DMatrix<f64>)> = Vec::new();
    for (e, parity, phi) in levels.into_iter().take(n_states) {
        let lab_e = e * p.v;
        let eps_rwa = quasienergies_from_rwa(lab_e, parity.sign(), p.omega_f);
        rwa.push(eps_rwa, parity.sign());

        if !cache.iter().any(|c| c.0 == parity) {
            let basis = p.sector(parity);
            let m = p.sector_matrix(&basis);
            cache.push((parity, basis, m));
        }
        let (_, basis, m) = cache.iter().find(|c| c.0 == parity).unwrap();
        let mut w = DVector::<f64>::zeros(basis.len());
        for (i, &(k, n)) in basis.iter().enumerate() {
            if k == (n / 2) as i64 - shift {
                w[i] = phi[n / 2];
            }
        }
        let w = w.normalize();
        // eigenvalue of the centred copy before reduction
        let target = lab_e + (1 - parity.sign()) as f64 * p.omega_f / 4.0 + shift as f64 * p.omega_f;
        let (eps, overlap) = inverse_iteration(m, &w, target)?;
        if overlap < 0.5 {
            return Err(Error::NotConverged {
                dim: p.n_cut,
                tail: 1.0 - overlap,
                limit: 0.5,
            });
        }
        floquet.push(eps, parity.sign());
        overlaps.push(overlap);
        max_discrepancy = max_discrepancy.max(circular_distance(eps, eps_rwa, p.omega_f));
    }
    Ok(FloquetComparison {
        rwa,
        floquet,
        overlaps,
        max_discrepancy,
    })
}

fn inverse_iteration(m: &DMatrix<f64>, w: &DVector<f64>, shift: f64) -> Result<(f64, f64)> {
    let n = m.nrows();
    let shifted = m - DMatrix::<f64>::identity(n, n) * shift;
    let lu = shifted.lu();
    let mut x = w.clone();
    for _ in 0..3 {
        let y = lu
            .solve(&x)
            .ok_or_else(|| Error::InvalidState("Floquet shift hits an eigenvalue exactly".into()))?;
        x = y.normalize();
    }
    let rq = x.dot(&(m * &x));
    Ok((rq, x.dot(w).abs()))
}

/// Convenience for scanning: quasienergy discrepancy for a ladder of
/// nonlinearities at fixed `(δ, f)`.
pub fn rwa_discrepancy_ladder(omega0: f64, vs: &[f64], sys: &RwaSystem, n_states: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; vs.len()];
    for (o, &v) in out.iter_mut().zip(vs) {
        let p = LabFrameParams::from_rwa(omega0, v, sys, DEFAULT_K_CUT, DEFAULT_N_CUT)?;
        *o = compare_with_rwa(&p, n_states)?.max_discrepancy;
    }
    Ok(out)
}
