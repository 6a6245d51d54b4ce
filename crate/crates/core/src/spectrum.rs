//! Parity-resolved RWA spectra, level labels, gaps and degeneracies.
//!
//! A level is identified by its parity and its ascending rank inside the
//! parity block. Same-parity levels repel, so the label is stable along any
//! drive ramp.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::fock::{FockSpace, Parity, StateVector, DEFAULT_TAIL_LEVELS, TAIL_LIMIT};
use crate::linalg;
use crate::rwa::{h_rwa_block, RwaSystem};
use crate::{ComplexOperator, C64};

/// Default absolute tolerance for calling two levels degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LevelLabel {
    pub parity: Parity,
    pub rank: usize,
}

impl LevelLabel {
    pub fn new(parity: Parity, rank: usize) -> Self {
        Self { parity, rank }
    }

    /// Label of the Fock level `|n⟩` at zero drive.
    ///
    /// Ties inside a parity block are broken by the Fock index.
    pub fn of_fock_level(delta: f64, n: usize) -> Self {
        let parity = Parity::of_level(n);
        let e = |m: usize| crate::rwa::zero_drive_levels(delta, m)[m];
        let en = e(n);
        let rank = parity
            .levels(n + usize::max(2 * n + 8, 64))
            .filter(|&m| m != n)
            .filter(|&m| {
                let em = e(m);
                em < en || (em == en && m < n)
            })
            .count();
        Self { parity, rank }
    }
}

/// Splits an operator into its even and odd Fock-sublattice blocks.
pub fn parity_split(h: &ComplexOperator, space: &FockSpace) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    if h.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: h.dim(),
        });
    }
    let r = h.commutator(&space.parity()).max_abs();
    if r > 1e-10 * h.max_abs().max(1.0) {
        return Err(Error::ParityViolation(r));
    }
    let even: Vec<usize> = Parity::Even.levels(space.dim()).collect();
    let odd: Vec<usize> = Parity::Odd.levels(space.dim()).collect();
    Ok((h.block(&even), h.block(&odd)))
}

/// Eigenvalues and full-space eigenvectors of one parity block, ascending.
pub fn parity_eigensystem(space: &FockSpace, sys: &RwaSystem, parity: Parity) -> (Vec<f64>, Vec<StateVector>) {
    let dim = space.dim();
    let (vals, vecs) = linalg::eigh_real(&h_rwa_block(dim, sys, parity));
    let idx: Vec<usize> = parity.levels(dim).collect();
    let states = (0..vals.len())
        .map(|k| {
            let mut v = DVector::zeros(dim);
            for (i, &n) in idx.iter().enumerate() {
                v[n] = C64::new(vecs[(i, k)], 0.0);
            }
            StateVector::new(linalg::fix_phase(v))
        })
        .collect();
    (vals, states)
}

/// Stationary RWA eigenstate with the given label and its energy.
pub fn eigenstate(space: &FockSpace, sys: &RwaSystem, label: LevelLabel) -> Result<(f64, StateVector)> {
    let (vals, mut states) = parity_eigensystem(space, sys, label.parity);
    if label.rank >= vals.len() {
        return Err(Error::LabelOutOfRange {
            parity: label.parity,
            rank: label.rank,
            available: vals.len(),
        });
    }
    Ok((vals[label.rank], states.swap_remove(label.rank)))
}

/// RWA levels along a drive grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSeries {
    pub delta: f64,
    pub f_grid: Vec<f64>,
    /// Row per drive value, column per tracked level.
    pub levels: DMatrix<f64>,
    /// Label of every column: all even ranks first, then all odd ranks.
    pub labels: Vec<LevelLabel>,
}

impl SpectrumSeries {
    pub fn column(&self, label: LevelLabel) -> Result<usize> {
        let per = self.labels.len() / 2;
        self.labels
            .iter()
            .position(|l| *l == label)
            .ok_or(Error::LabelOutOfRange {
                parity: label.parity,
                rank: label.rank,
                available: per,
            })
    }

    pub fn energies(&self, label: LevelLabel) -> Result<Vec<f64>> {
        let c = self.column(label)?;
        Ok(self.levels.column(c).iter().copied().collect())
    }

    pub fn parities(&self) -> Vec<i32> {
        self.labels.iter().map(|l| l.parity.sign()).collect()
    }

    /// `(f, parity, rank, energy)` rows, ordered by drive then column.
    pub fn rows(&self) -> Vec<(f64, i32, usize, f64)> {
        let mut out = Vec::with_capacity(self.levels.len());
        for (i, &f) in self.f_grid.iter().enumerate() {
            for (c, l) in self.labels.iter().enumerate() {
                out.push((f, l.parity.sign(), l.rank, self.levels[(i, c)]));
            }
        }
        out
    }
}

/// Lowest `n_levels` levels of each parity at every drive in `f_grid`.
///
/// Fails when any tracked eigenvector at the largest drive leaves more than
/// [`TAIL_LIMIT`] population in the top Fock levels.
pub fn spectrum_vs_drive(space: &FockSpace, delta: f64, f_grid: &[f64], n_levels: usize) -> Result<SpectrumSeries> {
    if f_grid.is_empty() {
        return Err(invalid("f_grid", "empty"));
    }
    if f_grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(invalid("f_grid", "must be ascending"));
    }
    let per_block = space.dim() / 2;
    if n_levels == 0 || n_levels > per_block {
        return Err(invalid(
            "n_levels",
            format!("{n_levels} not in 1..={per_block} for dim {}", space.dim()),
        ));
    }
    let f_max = f_grid[f_grid.len() - 1];
    let sys_max = RwaSystem::new(delta, f_max)?;
    for parity in [Parity::Even, Parity::Odd] {
        let (_, states) = parity_eigensystem(space, &sys_max, parity);
        for s in states.iter().take(n_levels) {
            let tail = crate::fock::truncation_check(s, DEFAULT_TAIL_LEVELS)?;
            if tail > TAIL_LIMIT {
                return Err(Error::NotConverged {
                    dim: space.dim(),
                    tail,
                    limit: TAIL_LIMIT,
                });
            }
        }
    }
    let mut labels = Vec::with_capacity(2 * n_levels);
    for parity in [Parity::Even, Parity::Odd] {
        for rank in 0..n_levels {
            labels.push(LevelLabel { parity, rank });
        }
    }
    let mut levels = DMatrix::zeros(f_grid.len(), 2 * n_levels);
    for (i, &f) in f_grid.iter().enumerate() {
        let sys = RwaSystem::new(delta, f)?;
        for (b, parity) in [Parity::Even, Parity::Odd].into_iter().enumerate() {
            let vals = linalg::eigh_real(&h_rwa_block(space.dim(), &sys, parity)).0;
            for r in 0..n_levels {
                levels[(i, b * n_levels + r)] = vals[r];
            }
        }
    }
    Ok(SpectrumSeries {
        delta,
        f_grid: f_grid.to_vec(),
        levels,
        labels,
    })
}

/// Distance to the nearest same-parity level at every drive value.
///
/// The level above the requested one must also be tracked.
pub fn same_parity_gap(series: &SpectrumSeries, label: LevelLabel) -> Result<Vec<f64>> {
    let upper = LevelLabel {
        rank: label.rank + 1,
        ..label
    };
    let c = series.column(label)?;
    let cu = series.column(upper).map_err(|_| Error::LabelOutOfRange {
        parity: label.parity,
        rank: label.rank,
        available: series.labels.len() / 2 - 1,
    })?;
    let cl = if label.rank > 0 {
        Some(series.column(LevelLabel {
            rank: label.rank - 1,
            ..label
        })?)
    } else {
        None
    };
    Ok((0..series.f_grid.len())
        .map(|i| {
            let e = series.levels[(i, c)];
            let mut g = (series.levels[(i, cu)] - e).abs();
            if let Some(cl) = cl {
                g = g.min((e - series.levels[(i, cl)]).abs());
            }
            g
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegeneracyKind {
    OppositeParity,
    SameParity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Degeneracy {
    pub delta: f64,
    pub kind: DegeneracyKind,
    pub first: LevelLabel,
    pub second: LevelLabel,
    pub splitting: f64,
}

/// Scans detuning values for coinciding levels among the lowest
/// `n_levels` of each parity.
///
/// Opposite-parity pairs are any even/odd levels closer than `tol`;
/// same-parity pairs are adjacent ranks closer than `tol`.
pub fn find_degeneracy_points(
    space: &FockSpace,
    delta_grid: &[f64],
    f: f64,
    tol: f64,
    n_levels: usize,
) -> Result<Vec<Degeneracy>> {
    if !(tol > 0.0) {
        return Err(invalid("tol", format!("{tol} must be positive")));
    }
    let per_block = space.dim() / 2;
    if n_levels == 0 || n_levels > per_block {
        return Err(invalid("n_levels", format!("{n_levels} not in 1..={per_block}")));
    }
    let mut out = Vec::new();
    for &delta in delta_grid {
        let sys = RwaSystem::new(delta, f)?;
        let blocks: Vec<Vec<f64>> = [Parity::Even, Parity::Odd]
            .iter()
            .map(|&p| {
                let mut v = linalg::eigh_real(&h_rwa_block(space.dim(), &sys, p)).0;
                v.truncate(n_levels);
                v
            })
            .collect();
        for (i, &ee) in blocks[0].iter().enumerate() {
            for (j, &eo) in blocks[1].iter().enumerate() {
                let d = (ee - eo).abs();
                if d < tol {
                    out.push(Degeneracy {
                        delta,
                        kind: DegeneracyKind::OppositeParity,
                        first: LevelLabel::new(Parity::Even, i),
                        second: LevelLabel::new(Parity::Odd, j),
                        splitting: d,
                    });
                }
            }
        }
        for (b, parity) in [Parity::Even, Parity::Odd].into_iter().enumerate() {
            for r in 1..blocks[b].len() {
                let d = blocks[b][r] - blocks[b][r - 1];
                if d < tol {
                    out.push(Degeneracy {
                        delta,
                        kind: DegeneracyKind::SameParity,
                        first: LevelLabel::new(parity, r - 1),
                        second: LevelLabel::new(parity, r),
                        splitting: d,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rwa::build_h_rwa;

    fn space(d: usize) -> FockSpace {
        FockSpace::new(d).unwrap()
    }

    #[test]
    fn split_dim4_blocks() {
        let s = space(4);
        let h = build_h_rwa(&s, &RwaSystem::new(0.3, 0.7).unwrap());
        let (e, o) = parity_split(&h, &s).unwrap();
        assert_eq!(e, DMatrix::from_fn(2, 2, |i, j| h.matrix()[(2 * i, 2 * j)]));
        assert_eq!(o, DMatrix::from_fn(2, 2, |i, j| h.matrix()[(2 * i + 1, 2 * j + 1)]));
    }

    #[test]
    fn split_zero_drive_diagonal() {
        let s = space(8);
        let h = build_h_rwa(&s, &RwaSystem::new(1.1, 0.0).unwrap());
        let (e, o) = parity_split(&h, &s).unwrap();
        for m in [e, o] {
            let off = m.map(|z| z.norm()).sum() - m.diagonal().map(|z| z.norm()).sum();
            assert_eq!(off, 0.0);
        }
    }

    #[test]
    fn split_rejects_parity_breaking() {
        let s = space(5);
        let (a, ad) = crate::fock::build_ladder(&s);
        let x = ComplexOperator::general(a.matrix() + ad.matrix());
        assert!(matches!(parity_split(&x, &s), Err(Error::ParityViolation(_))));
    }

    #[test]
    fn split_spectra_union_matches_full() {
        let s = space(24);
        let h = build_h_rwa(&s, &RwaSystem::new(0.4, 1.9).unwrap());
        let (e, o) = parity_split(&h, &s).unwrap();
        let mut union = linalg::eigvalsh(&e);
        union.extend(linalg::eigvalsh(&o));
        union.sort_by(f64::total_cmp);
        let full = linalg::eigvalsh(h.matrix());
        for (a, b) in union.iter().zip(&full) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn fock_labels() {
        // δ = 1.8: even zero-drive levels E₂ < E₀ < E₄
        assert_eq!(LevelLabel::of_fock_level(1.8, 0), LevelLabel::new(Parity::Even, 1));
        assert_eq!(LevelLabel::of_fock_level(1.8, 2), LevelLabel::new(Parity::Even, 0));
        assert_eq!(LevelLabel::of_fock_level(0.0, 0), LevelLabel::new(Parity::Even, 0));
        assert_eq!(LevelLabel::of_fock_level(0.0, 3), LevelLabel::new(Parity::Odd, 1));
    }

    #[test]
    fn delta2_lowest_pair_coincides() {
        let grid: Vec<f64> = (0..=12).map(|i| 0.25 * i as f64).collect();
        let sp = spectrum_vs_drive(&space(60), 2.0, &grid, 3).unwrap();
        let e = sp.energies(LevelLabel::new(Parity::Even, 0)).unwrap();
        let o = sp.energies(LevelLabel::new(Parity::Odd, 0)).unwrap();
        for (a, b) in e.iter().zip(&o) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn delta0_levels_pair_up() {
        let sp = spectrum_vs_drive(&space(80), 0.0, &[0.0, 3.0, 6.0], 2).unwrap();
        let e = sp.energies(LevelLabel::new(Parity::Even, 0)).unwrap();
        let o = sp.energies(LevelLabel::new(Parity::Odd, 0)).unwrap();
        let split: Vec<f64> = e.iter().zip(&o).map(|(a, b)| (a - b).abs()).collect();
        assert!(split[0] > 0.5);
        assert!(split[2] < split[1] && split[1] < split[0]);
        assert!(split[2] < 0.1 * split[1], "{split:?}");
    }

    #[test]
    fn delta18_vacuum_stays_third_lowest() {
        let s = space(50);
        let label = LevelLabel::of_fock_level(1.8, 0);
        for f in [0.0, 0.5, 1.0, 2.0, 3.0] {
            let sys = RwaSystem::new(1.8, f).unwrap();
            let (e, _) = eigenstate(&s, &sys, label).unwrap();
            let mut all = parity_eigensystem(&s, &sys, Parity::Even).0;
            all.extend(parity_eigensystem(&s, &sys, Parity::Odd).0);
            all.sort_by(f64::total_cmp);
            let pos = all.iter().position(|&x| x == e).unwrap();
            // the degenerate-by-symmetry partner may share the energy
            assert!(pos == 2 || (pos == 1 && (all[2] - e).abs() < 1e-8), "f={f} pos={pos}");
        }
    }

    #[test]
    fn gap_at_zero_drive() {
        let sp = spectrum_vs_drive(&space(40), 0.0, &[0.0], 3).unwrap();
        let g = same_parity_gap(&sp, LevelLabel::new(Parity::Even, 0)).unwrap();
        assert_eq!(g[0], 3.0);
        assert!(same_parity_gap(&sp, LevelLabel::new(Parity::Even, 2)).is_err());
    }

    #[test]
    fn gap_approaches_semiclassical_estimate() {
        let mut prev = 0.0;
        for (f, d) in [(5.0, 80), (10.0, 120), (20.0, 200)] {
            let sp = spectrum_vs_drive(&space(d), 0.0, &[f], 3).unwrap();
            let g = same_parity_gap(&sp, LevelLabel::new(Parity::Even, 0)).unwrap()[0];
            let est = crate::rwa::semiclassics(&RwaSystem::new(0.0, f).unwrap()).unwrap().gap_estimate;
            let ratio = g / est;
            assert!(g >= 0.0 && ratio > prev && ratio < 1.0, "f={f} ratio={ratio}");
            prev = ratio;
        }
        assert!(prev > 0.85);
    }

    #[test]
    fn unconverged_truncation_reported() {
        assert!(matches!(
            spectrum_vs_drive(&space(12), 0.0, &[0.0, 5.0], 2),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn degeneracy_scan_integer_detuning() {
        let grid: Vec<f64> = (0..=14).map(|i| i as f64 * 0.25).collect();
        let found = find_degeneracy_points(&space(60), &grid, 0.3, DEGENERACY_TOL, 4).unwrap();
        let mut deltas: Vec<f64> = found
            .iter()
            .filter(|d| d.kind == DegeneracyKind::OppositeParity)
            .map(|d| d.delta)
            .collect();
        deltas.dedup();
        assert_eq!(deltas, [1.0, 2.0, 3.0]);
        // k pairs at δ = k
        for k in 1..=3 {
            let n = found.iter().filter(|d| d.delta == k as f64).count();
            assert_eq!(n, k);
        }
    }

    #[test]
    fn same_parity_coincidence_lifted_by_drive() {
        let at = |f| find_degeneracy_points(&space(40), &[2.5], f, DEGENERACY_TOL, 4).unwrap();
        let zero = at(0.0);
        let same: Vec<_> = zero.iter().filter(|d| d.kind == DegeneracyKind::SameParity).collect();
        assert_eq!(same.len(), 2);
        assert!(same.iter().any(|d| d.first.parity == Parity::Even));
        assert!(same.iter().any(|d| d.first.parity == Parity::Odd));
        assert!(at(0.3).iter().all(|d| d.kind != DegeneracyKind::SameParity));
    }
}
