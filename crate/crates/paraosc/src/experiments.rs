use anyhow::{bail, Context, Result};
use serde_json::{json, Map, Value};

use paraosc_core::floquet::{compare_with_rwa, LabFrameParams};
use paraosc_core::fock::{DensityMatrix, FockSpace, Parity, StateVector, TAIL_LIMIT};
use paraosc_core::lz::{lz_asymptotic_alphas, lz_evolve_numeric, nonadiabatic_exponent, numeric_asymptote, weber_solution, LzProblem};
use paraosc_core::open::{build_liouvillian, decay_vs_drive, linear_fit, DEFAULT_MASTER_TOL};
use paraosc_core::radiation::{default_time_step, steady_spectrum, sum_rule_check, transient_spectrum, RELAXATION_LIMIT};
use paraosc_core::ramp::{evolve_ramp, instantaneous_fidelity, RampProtocol};
use paraosc_core::rwa::{zero_drive_levels, RwaSystem};
use paraosc_core::spectrum::{eigenstate, find_degeneracy_points, parity_eigensystem, spectrum_vs_drive, LevelLabel};
use paraosc_core::wigner::{wigner_at, wigner_transform};

use crate::config::{key, ExperimentConfig, Key, Kind::*};
use crate::output::Table;

/// Extra Fock levels (or Fourier/oscillator cutoff) of the enlarged run.
pub const ENLARGEMENT: usize = 10;

pub struct Experiment {
    pub name: &'static str,
    pub summary: &'static str,
    pub keys: &'static [Key],
    plan: fn(&ExperimentConfig) -> Result<Box<dyn Job>>,
}

impl std::fmt::Debug for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Experiment").field("name", &self.name).finish()
    }
}

impl Experiment {
    /// Checks every parameter and returns the ready-to-run job.
    pub fn plan(&self, cfg: &ExperimentConfig) -> Result<Box<dyn Job>> {
        (self.plan)(cfg)
    }
}

pub trait Job: Send + Sync {
    /// Runs at the base truncation, or at the enlarged one when `enlarged`.
    fn compute(&self, enlarged: bool) -> Result<Outcome>;
    /// Truncation parameters of the base or enlarged run.
    fn truncation(&self, enlarged: bool) -> Value;
    fn tolerances(&self) -> Value;
}

pub struct Outcome {
    pub tables: Vec<Table>,
    pub results: Map<String, Value>,
    /// Numbers compared between the base and the enlarged run.
    pub probe: Vec<f64>,
}

pub const ALL: &[Experiment] = &[
    Experiment {
        name: "spectrum",
        summary: "RWA levels of both parities along a drive grid",
        keys: &[
            key("delta", Float, None, "detuning"),
            key("f_min", Float, Some("0.0"), "first drive value"),
            key("f_max", Float, None, "last drive value"),
            key("f_points", Int, Some("61"), "number of drive values"),
            key("n_levels", Int, Some("4"), "levels tracked per parity"),
            key("dim", Int, Some("40"), "Fock truncation"),
        ],
        plan: SpectrumJob::plan,
    },
    Experiment {
        name: "zero_drive",
        summary: "undriven levels against detuning and their crossings",
        keys: &[
            key("delta_min", Float, Some("-1.0"), "first detuning"),
            key("delta_max", Float, Some("3.0"), "last detuning"),
            key("delta_points", Int, Some("81"), "number of detunings"),
            key("n_max", Int, Some("6"), "highest Fock level"),
            key("degeneracy_tol", Float, Some("1e-12"), "splitting below which levels count as degenerate"),
            key("dim", Int, Some("40"), "Fock truncation of the diagonalisation check"),
        ],
        plan: ZeroDriveJob::plan,
    },
    Experiment {
        name: "ramp",
        summary: "state prepared by a linear drive ramp from a Fock state",
        keys: &[
            key("delta", Float, None, "detuning"),
            key("f_final", Float, None, "drive at the end of the ramp"),
            key("s_tilde", Float, None, "ramp speed"),
            key("initial_fock", Int, Some("0"), "initial Fock level"),
            key("rel_tol", Float, Some("1e-9"), "integrator tolerance"),
            key("output_points", Int, Some("201"), "recorded times"),
            key("dim", Int, Some("50"), "Fock truncation"),
        ],
        plan: RampJob::plan,
    },
    Experiment {
        name: "wigner",
        summary: "Wigner function of a ramped, stationary or Fock state",
        keys: &[
            key("delta", Float, None, "detuning"),
            key("f", Float, None, "final drive (sets the phase-space scale)"),
            key("prepare", Str, Some("\"ramp\""), "ramp, eigenstate or fock"),
            key("s_tilde", Float, Some("1.0"), "ramp speed (prepare = ramp)"),
            key("initial_fock", Int, Some("0"), "Fock level (prepare = ramp or fock)"),
            key("parity", Str, Some("\"even\""), "level parity (prepare = eigenstate)"),
            key("rank", Int, Some("0"), "level rank within its parity (prepare = eigenstate)"),
            key("rel_tol", Float, Some("1e-9"), "integrator tolerance"),
            key("q_min", Float, Some("-3.0"), ""),
            key("q_max", Float, Some("3.0"), ""),
            key("q_points", Int, Some("121"), ""),
            key("p_min", Float, Some("-3.0"), ""),
            key("p_max", Float, Some("3.0"), ""),
            key("p_points", Int, Some("121"), ""),
            key("dim", Int, Some("50"), "Fock truncation"),
        ],
        plan: WignerJob::plan,
    },
    Experiment {
        name: "lz",
        summary: "half-line Landau-Zener sweep: populations and asymptotic amplitudes",
        keys: &[
            key("ratio", Float, None, "Delta^2 / s"),
            key("s", Float, Some("1.0"), "sweep rate"),
            key("sign", Str, Some("\"positive\""), "sign of Delta: positive or negative"),
            key("t_max", Float, Some("10.0"), "last recorded time"),
            key("t_points", Int, Some("401"), "recorded times"),
            key("rel_tol", Float, Some("1e-10"), "integrator tolerance"),
            key("weber", Bool, Some("true"), "also evaluate the parabolic-cylinder solution"),
            key("scan_min", Float, Some("0.01"), "smallest Delta^2/s of the amplitude scan"),
            key("scan_max", Float, Some("50.0"), "largest Delta^2/s of the amplitude scan"),
            key("scan_points", Int, Some("41"), "log-spaced scan points"),
        ],
        plan: LzJob::plan,
    },
    Experiment {
        name: "decay_rates",
        summary: "energy decay rates and same-parity gap against drive",
        keys: &[
            key("delta", Float, Some("0.0"), "detuning"),
            key("f_min", Float, Some("3.0"), "first drive value"),
            key("f_max", Float, Some("6.0"), "last drive value"),
            key("f_points", Int, Some("31"), "number of drive values"),
            key("gamma_tildes", FloatList, Some("[0.5, 1.0, 2.0]"), "damping rates"),
            key("parity", Str, Some("\"even\""), "level parity"),
            key("rank", Int, Some("0"), "level rank within its parity"),
            key("dim", Int, Some("40"), "Fock truncation"),
        ],
        plan: DecayJob::plan,
    },
    Experiment {
        name: "radiation",
        summary: "transient and steady emission spectra of a prepared state",
        keys: &[
            key("delta", Float, None, "detuning"),
            key("f", Float, None, "drive"),
            key("gamma_tilde", Float, None, "damping rate"),
            key("prepare", Str, Some("\"ramp\""), "ramp, eigenstate or fock"),
            key("s_tilde", Float, Some("0.06"), "ramp speed (prepare = ramp)"),
            key("initial_fock", Int, Some("0"), "Fock level (prepare = ramp or fock)"),
            key("parity", Str, Some("\"even\""), "level parity (prepare = eigenstate)"),
            key("rank", Int, Some("0"), "level rank within its parity (prepare = eigenstate)"),
            key("rel_tol", Float, Some("1e-9"), "ramp integrator tolerance"),
            key("t_max", Float, Some("300.0"), "emission horizon, at least 10 / gamma_tilde"),
            key("x_min", Float, Some("-4.0"), "first frequency offset"),
            key("x_max", Float, Some("4.0"), "last frequency offset"),
            key("x_points", Int, Some("801"), "number of frequencies"),
            key("steady", Bool, Some("true"), "also compute the steady-state spectrum"),
            key("sum_rule", Bool, Some("true"), "also evaluate the frequency sum rule"),
            key("dim", Int, Some("24"), "Fock truncation"),
        ],
        plan: RadiationJob::plan,
    },
    Experiment {
        name: "floquet_check",
        summary: "quasienergies from the Floquet matrix against the RWA mapping",
        keys: &[
            key("delta", Float, None, "detuning"),
            key("f", Float, None, "drive"),
            key("omega0", Float, Some("1.0"), "oscillator frequency"),
            key("v_values", FloatList, Some("[1e-3, 5e-4, 2.5e-4]"), "nonlinearities, decreasing"),
            key("n_states", Int, Some("6"), "lowest levels compared"),
            key("k_cut", Int, Some("12"), "Fourier cutoff"),
            key("n_cut", Int, Some("24"), "oscillator cutoff"),
        ],
        plan: FloquetJob::plan,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    ALL.iter().find(|e| e.name == name)
}

fn space(dim: usize, enlarged: bool) -> Result<FockSpace> {
    Ok(FockSpace::new(dim + if enlarged { ENLARGEMENT } else { 0 })?)
}

fn dim_of(cfg: &ExperimentConfig) -> Result<usize> {
    let d = cfg.usize_at_least("dim", 4)?;
    FockSpace::new(d).with_context(|| "key `dim`")?;
    Ok(d)
}

fn dim_json(dim: usize, enlarged: bool) -> Value {
    json!({ "dim": dim + if enlarged { ENLARGEMENT } else { 0 } })
}

fn parity_of(cfg: &ExperimentConfig) -> Result<Parity> {
    Ok(match cfg.choice("parity", &["even", "odd"])? {
        "even" => Parity::Even,
        _ => Parity::Odd,
    })
}

fn label_json(l: LevelLabel) -> Value {
    json!({ "parity": l.parity.sign(), "rank": l.rank })
}

fn rwa(delta: f64, f: f64, delta_key: &str, f_key: &str) -> Result<RwaSystem> {
    RwaSystem::new(delta, f).with_context(|| format!("keys `{delta_key}`, `{f_key}`"))
}

struct SpectrumJob {
    delta: f64,
    f_grid: Vec<f64>,
    n_levels: usize,
    dim: usize,
}

impl SpectrumJob {
    fn plan(cfg: &ExperimentConfig) -> Result<Box<dyn Job>> {
        let delta = cfg.f64("delta")?;
        let f_grid = cfg.grid("f")?;
        if f_grid[0] < 0.0 {
            bail!("key `f_min` must be non-negative, got {}", f_grid[0]);
        }
        let dim = dim_of(cfg)?;
        let n_levels = cfg.usize_at_least("n_levels", 1)?;
        if n_levels > dim / 2 {
            bail!("key `n_levels` ({n_levels}) exceeds half of `dim` ({dim})");
        }
        Ok(Box::new(SpectrumJob {
            delta,
            f_grid,
            n_levels,
            dim,
        }))
    }
}

impl Job for SpectrumJob {
    fn compute(&self, enlarged: bool) -> Result<Outcome> {
        let s = spectrum_vs_drive(&space(self.dim, enlarged)?, self.delta, &self.f_grid, self.n_levels)
            .context("level tracking")?;
        let mut levels = Table::new("spectrum", &["f", "parity", "rank", "energy"]);
        for (f, p, r, e) in s.rows() {
            levels.push(vec![f.into(), p.into(), r.into(), e.into()]);
        }
        let mut split = Table::new("splittings", &["f", "rank", "even_minus_odd"]);
        let mut worst = vec![0.0f64; self.n_levels];
        for r in 0..self.n_levels {
            let ev = s.energies(LevelLabel::new(Parity::Even, r))?;
            let od = s.energies(LevelLabel::new(Parity::Odd, r))?;
            for (i, &f) in self.f_grid.iter().enumerate() {
                let d = ev[i] - od[i];
                worst[r] = worst[r].max(d.abs());
                split.push(vec![f.into(), r.into(), d.into()]);
            }
        }
        let mut results = Map::new();
        results.insert("max_abs_splitting_by_rank".into(), json!(worst));
        Ok(Outcome {
            tables: vec![levels, split],
            results,
            probe: s.levels.iter().copied().collect(),
        })
    }

    fn truncation(&self, enlarged: bool) -> Value {
        dim_json(self.dim, enlarged)
    }

    fn tolerances(&self) -> Value {
        json!({ "tail_limit": TAIL_LIMIT })
    }
}

struct ZeroDriveJob {
    deltas: Vec<f64>,
    n_max: usize,
    tol: f64,
    dim: usize,
}

impl ZeroDriveJob {
    fn plan(cfg: &ExperimentConfig) -> Result<Box<dyn Job>> {
        let deltas = cfg.grid("delta")?;
        let n_max = cfg.usize_at_least("n_max", 1)?;
        let tol = cfg.positive("degeneracy_tol")?;
        let dim = dim_of(cfg)?;
        if n_max + 1 > dim / 2 {
            bail!("key `n_max` ({n_max}) needs `dim` of at least {}", 2 * (n_max + 1));
        }
        Ok(Box::new(ZeroDriveJob { deltas, n_max, tol, dim }))
    }
}

impl Job for ZeroDriveJob {
    fn compute(&self, enlarged: bool) -> Result<Outcome> {
        let sp = space(self.dim, enlarged)?;
        let mut t = Table::new("zero_drive", &["delta", "n", "parity", "energy"]);
        let mut probe = Vec::new();
        let mut deviation = 0.0f64;
        for &delta in &self.deltas {
            let exact = zero_drive_levels(delta, self.n_max);
            for (n, &e) in exact.iter().enumerate() {
                t.push(vec![delta.into(), n.into(), Parity::of_level(n).sign().into(), e.into()]);
            }
            // the diagonalised Fock levels, offset to E_0, sorted by Fock index
            let sys = RwaSystem::new(delta, 0.0)?;
            let mut by_n = vec![0.0; self.n_max + 1];
            for parity in [Parity::Even, Parity::Odd] {
                let (vals, vecs) = parity_eigensystem(&sp, &sys, parity);
                for (e, v) in vals.iter().zip(&vecs) {
                    let n = v.as_slice().iter().position(|c| c.norm() > 0.5).expect("Fock eigenvector");
                    if n <= self.n_max {
                        by_n[n] = *e;
                    }
                }
            }
            let e0 = by_n[0];
            for (n, e) in by_n.iter().enumerate() {
                probe.push(e - e0);
                deviation = deviation.max((e - e0 - exact[n]).abs());
            }
        }
        let per = self.n_max / 2 + 1;
        let found = find_degeneracy_points(&sp, &self.deltas, 0.0, self.tol, per)?;
        let mut deg = Table::new(
            "degeneracies",
            &["delta", "first_parity", "first_rank", "second_parity", "second_rank", "splitting"],
        );
        for d in &found {
            deg.push(vec![
                d.delta.into(),
                d.first.parity.sign().into(),
                d.first.rank.into(),
                d.second.parity.sign().into(),
                d.second.rank.into(),
                d.splitting.into(),
            ]);
        }
        let mut results = Map::new();
        results.insert("max_closed_form_deviation".into(), json!(deviation));
        results.insert("degeneracy_count".into(), json!(found.len()));
        Ok(Outcome {
            tables: vec![t, deg],
            results,
            probe,
        })
    }

    fn truncation(&self, enlarged: bool) -> Value {
        dim_json(self.dim, enlarged)
    }

    fn tolerances(&self) -> Value {
        json!({ "degeneracy_tol": self.tol })
    }
}

struct RampJob {
    delta: f64,
    f_final: f64,
    s_tilde: f64,
    initial_fock: usize,
    rel_tol: f64,
    points: usize,
    dim: usize,
}

impl RampJob {
    fn plan(cfg: &ExperimentConfig) -> Result<Box<dyn Job>> {
        let dim = dim_of(cfg)?;
        let initial_fock = cfg.usize_at_least("initial_fock", 0)?;
        if initial_fock >= dim {
            bail!("key `initial_fock` ({initial_fock}) must be below `dim` ({dim})");
        }
        let job = RampJob {
            delta: cfg.f64("delta")?,
            f_final: cfg.positive("f_final")?,
            s_tilde: cfg.positive("s_tilde")?,
            initial_fock,
            rel_tol: cfg.positive("rel_tol")?,
            points: cfg.usize_at_least("output_points", 2)?,
            dim,
        };
        rwa(job.delta, job.f_final, "delta", "f_final")?;
        Ok(Box::new(job))
    }
}

impl Job for RampJob {
    fn compute(&self, enlarged: bool) -> Result<Outcome> {
        let sp = space(self.dim, enlarged)?;
        let mut p = RampProtocol {
            s_tilde: self.s_tilde,
            f_final: self.f_final,
            delta: self.delta,
            initial_state: sp.basis(self.initial_fock)?,
            output_times: Vec::new(),
        };
        p.output_times = p.uniform_times(self.points);
        let r = evolve_ramp(&sp, &p, self.rel_tol).context("ramp integration")?;
        let mut t = Table::new("ramp", &["t", "f", "fidelity", "mean_occupation", "parity_expectation"]);
        for (&time, psi) in r.times.iter().zip(&r.trajectory) {
            let f = p.drive_at(time);
            let fid = instantaneous_fidelity(psi, &sp, self.delta, f, r.label)?;
            t.push(vec![
                time.into(),
                f.into(),
                fid.into(),
                psi.mean_occupation().into(),
                psi.parity_expectation().into(),
            ]);
        }
        let mut results = Map::new();
        results.insert("label".into(), label_json(r.label));
        results.insert("final_fidelity".into(), json!(r.final_fidelity));
        results.insert("final_overlap".into(), json!(r.final_overlap));
        results.insert("max_norm_error".into(), json!(r.max_norm_error));
        Ok(Outcome {
            tables: vec![t],
            results,
            probe: vec![r.final_fidelity, r.final_overlap],
        })
    }

    fn truncation(&self, enlarged: bool) -> Value {
        dim_json(self.dim, enlarged)
    }

    fn tolerances(&self) -> Value {
        json!({ "rel_tol": self.rel_tol, "tail_limit": TAIL_LIMIT })
    }
}

/// How the state analysed by `wigner` and `radiation` is obtained.
#[derive(Debug, Clone, Copy)]
enum Preparation {
    Ramp { s_tilde: f64, initial_fock: usize, rel_tol: f64 },
    Eigenstate(LevelLabel),
    Fock(usize),
}

impl Preparation {
    fn from_config(cfg: &ExperimentConfig, dim: usize) -> Result<Self> {
        let initial_fock = cfg.usize_at_least("initial_fock", 0)?;
        if initial_fock >= dim {
            bail!("key `initial_fock` ({initial_fock}) must be below `dim` ({dim})");
        }
        Ok(match cfg.choice("prepare", &["ramp", "eigenstate", "fock"])? {
            "ramp" => Preparation::Ramp {
                s_tilde: cfg.positive("s_tilde")?,
                initial_fock,
                rel_tol: cfg.positive("rel_tol")?,
            },
            "eigenstate" => {
                let rank = cfg.usize_at_least("rank", 0)?;
                if rank >= dim / 2 {
                    bail!("key `rank` ({rank}) must be below half of `dim` ({dim})");
                }
                Preparation::Eigenstate(LevelLabel::new(parity_of(cfg)?, rank))
            }
            _ => Preparation::Fock(initial_fock),
        })
    }

    /// The prepared state, plus the ramp's label and fidelity when ramped.
    fn state(&self, sp: &FockSpace, sys: &RwaSystem) -> Result<(StateVector, Map<String, Value>)> {
        let mut info = Map::new();
        let psi = match *self {
            Preparation::Ramp {
                s_tilde,
                initial_fock,
                rel_tol,
            } => {
                if !(sys.f > 0.0) {
                    bail!("key `f` must be positive to prepare by a ramp");
                }
                let mut p = RampProtocol {
                    s_tilde,
                    f_final: sys.f,
                    delta: sys.delta,
                    initial_state: sp.basis(initial_fock)?,
                    output_times: Vec::new(),
                };
                p.output_times = vec![p.t_end()];
                let r = evolve_ramp(sp, &p, rel_tol).context("preparation ramp")?;
                info.insert("ramp_label".into(), label_json(r.label));
                info.insert("ramp_fidelity".into(), json!(r.final_fidelity));
                r.final_state
            }
            Preparation::Eigenstate(label) => eigenstate(sp, sys, label)?.1,
            Preparation::Fock(n) => sp.basis(n)?,
        };
        Ok((psi, info))
    }
}

struct WignerJob {
    sys: RwaSystem,
    lambda: f64,
    prep: Preparation,
    qs: Vec<f64>,
    ps: Vec<f64>,
    dim: usize,
}

impl WignerJob {
    fn plan(cfg: &ExperimentConfig) -> Result<Box<dyn Job>> {
        let dim = dim_of(cfg)?;
        let sys = rwa(cfg.f64("delta")?, cfg.positive("f")?, "delta", "f")?;
        let qs = cfg.grid("q")?;
        let ps = cfg.grid("p")?;
        if qs.len() < 2 || ps.len() < 2 {
            bail!("keys `q_points` and `p_points` must be at least 2");
        }
        Ok(Box::new(WignerJob {
            lambda: sys.lambda().expect("f > 0"),
            sys,
            prep: Preparation::from_config(cfg, dim)?,
            qs,
            ps,
            dim,
        }))
    }
}

impl Job for WignerJob {
    fn compute(&self, enlarged: bool) -> Result<Outcome> {
        let sp = space(self.dim, enlarged)?;
        let (psi, mut results) = self.prep.state(&sp, &self.sys)?;
        let rho = DensityMatrix::from_pure(&psi);
        let w = wigner_transform(&rho, self.lambda, &self.qs, &self.ps).context("Wigner grid")?;
        let mut t = Table::new("wigner", &["q", "p", "w"]);
        for (q, p, v) in w.rows() {
            t.push(vec![q.into(), p.into(), v.into()]);
        }
        let (lo, hi) = w
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        results.insert("lambda".into(), json!(self.lambda));
        results.insert("integral".into(), json!(w.integral()));
        results.insert("boundary_weight".into(), json!(w.boundary_weight()));
        results.insert("w_min".into(), json!(lo));
        results.insert("w_max".into(), json!(hi));
        results.insert("w_origin".into(), json!(wigner_at(&rho, self.lambda, 0.0, 0.0)));
        Ok(Outcome {
            tables: vec![t],
            results,
            probe: w.values.iter().copied().collect(),
        })
    }

    fn truncation(&self, enlarged: bool) -> Value {
        dim_json(self.dim, enlarged)
    }

    fn tolerances(&self) -> Value {
        let mut t = json!({ "boundary_limit": paraosc_core::wigner::BOUNDARY_LIMIT });
        if let Preparation::Ramp { rel_tol, .. } = self.prep {
            t["rel_tol"] = json!(rel_tol);
        }
        t
    }
}

struct LzJob {
    prob: LzProblem,
    times: Vec<f64>,
    rel_tol: f64,
    weber: bool,
    scan: Vec<f64>,
}

impl LzJob {
    fn plan(cfg: &ExperimentConfig) -> Result<Box<dyn Job>> {
        let ratio = cfg.non_negative("ratio")?;
        let s = cfg.positive("s")?;
        let positive = cfg.choice("sign", &["positive", "negative"])? == "positive";
        let prob = LzProblem::from_ratio(ratio, s, positive).context("keys `ratio`, `s`")?;
        let t_max = cfg.positive("t_max")?;
        let n = cfg.usize_at_least("t_points", 2)?;
        let (lo, hi) = (cfg.positive("scan_min")?, cfg.positive("scan_max")?);
        let m = cfg.usize_at_least("scan_points", 2)?;
        if hi <= lo {
            bail!("key `scan_max` ({hi}) must exceed `scan_min` ({lo})");
        }
        Ok(Box::new(LzJob {
            prob,
            times: (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect(),
            rel_tol: cfg.positive("rel_tol")?,
            weber: cfg.bool("weber"),
            scan: (0..m).map(|i| lo * (hi / lo).powf(i as f64 / (m - 1) as f64)).collect(),
        }))
    }

    fn tol(&self, enlarged: bool) -> f64 {
        if enlarged {
            self.rel_tol / 10.0
        } else {
            self.rel_tol
        }
    }
}

impl Job for LzJob {
    fn compute(&self, enlarged: bool) -> Result<Outcome> {
        let tol = self.tol(enlarged);
        let num = lz_evolve_numeric(&self.prob, &self.times, tol).context("numeric sweep")?;
        let up = num.up_population();
        let mut results = Map::new();
        let mut cols = vec!["t", "up_numeric", "down_numeric", "re_c_plus", "im_c_plus", "re_c_minus", "im_c_minus"];
        let weber = if self.weber {
            cols.push("up_weber");
            let w = weber_solution(&self.prob, &self.times).context("parabolic-cylinder solution (set weber = false to skip)")?;
            let wu = w.up_population();
            let dev = up.iter().zip(&wu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            results.insert("max_weber_deviation".into(), json!(dev));
            Some(wu)
        } else {
            None
        };
        let mut t = Table::new("lz", &cols);
        for (i, &time) in self.times.iter().enumerate() {
            let (cp, cm) = (num.c_plus[i], num.c_minus[i]);
            let mut row = vec![
                time.into(),
                up[i].into(),
                num.c_down[i].norm_sqr().into(),
                cp.re.into(),
                cp.im.into(),
                cm.re.into(),
                cm.im.into(),
            ];
            if let Some(w) = &weber {
                row.push(w[i].into());
            }
            t.push(row);
        }

        let (au, ad) = lz_asymptotic_alphas(&self.prob);
        let asym = numeric_asymptote(&self.prob, tol).context("asymptotic run")?;
        results.insert("alpha_up_sq".into(), json!(au.norm_sqr()));
        results.insert("alpha_down_sq".into(), json!(ad.norm_sqr()));
        results.insert("numeric_up_population".into(), json!(asym.up_population));
        results.insert("numeric_down_population".into(), json!(asym.down_population));
        results.insert("asymptotic_time".into(), json!(asym.t_max));

        let mut scan = Table::new("alphas", &["ratio", "up_positive", "down_positive", "up_negative", "down_negative"]);
        for &r in &self.scan {
            let (up_p, down_p) = lz_asymptotic_alphas(&LzProblem::from_ratio(r, 1.0, true)?);
            let (up_n, down_n) = lz_asymptotic_alphas(&LzProblem::from_ratio(r, 1.0, false)?);
            scan.push(vec![
                r.into(),
                up_p.norm_sqr().into(),
                down_p.norm_sqr().into(),
                up_n.norm_sqr().into(),
                down_n.norm_sqr().into(),
            ]);
        }
        let fit: Vec<f64> = (0..10).map(|i| 5.0 * 10f64.powf(i as f64 / 9.0)).collect();
        results.insert("nonadiabatic_exponent".into(), json!(nonadiabatic_exponent(&fit)?));

        let mut probe = up;
        probe.push(asym.up_population);
        Ok(Outcome {
            tables: vec![t, scan],
            results,
            probe,
        })
    }

    fn truncation(&self, enlarged: bool) -> Value {
        json!({ "rel_tol": self.tol(enlarged) })
    }

    fn tolerances(&self) -> Value {
        json!({ "rel_tol": self.rel_tol, "weber_tol": paraosc_core::lz::WEBER_TOL })
    }
}

struct DecayJob {
    delta: f64,
    f_grid: Vec<f64>,
    gammas: Vec<f64>,
    label: LevelLabel,
    dim: usize,
}

impl DecayJob {
    fn plan(cfg: &ExperimentConfig) -> Result<Box<dyn Job>> {
        let dim = dim_of(cfg)?;
        let f_grid = cfg.grid("f")?;
        if f_grid[0] < 0.0 {
            bail!("key `f_min` must be non-negative, got {}", f_grid[0]);
        }
        let gammas = cfg.list("gamma_tildes")?;
        if let Some(g) = gammas.iter().find(|g| **g <= 0.0) {
            bail!("key `gamma_tildes` must hold positive rates, got {g}");
        }
        let rank = cfg.usize_at_least("rank", 0)?;
        if rank + 2 > dim / 2 {
            bail!("key `rank` ({rank}) needs `dim` of at least {}", 2 * (rank + 2));
        }
        Ok(Box::new(DecayJob {
            delta: cfg.f64("delta")?,
            f_grid,
            gammas,
            label: LevelLabel::new(parity_of(cfg)?, rank),
            dim,
        }))
    }
}

fn fit_json(x: &[f64], y: &[f64]) -> Value {
    let (slope, intercept, r2) = linear_fit(x, y);
    json!({ "slope": slope, "intercept": intercept, "r2": r2 })
}

impl Job for DecayJob {
    fn compute(&self, enlarged: bool) -> Result<Outcome> {
        let d = decay_vs_drive(&space(self.dim, enlarged)?, self.delta, &self.f_grid, &self.gammas, self.label)
            .context("decay rates")?;
        let mut t = Table::new("decay_rates", &["f", "gamma_tilde", "rate", "gap", "mean_occupation"]);
        for (g, rates) in d.gamma_tildes.iter().zip(&d.rates) {
            for (i, &f) in d.f_grid.iter().enumerate() {
                t.push(vec![
                    f.into(),
                    (*g).into(),
                    rates[i].into(),
                    d.gap[i].into(),
                    d.mean_occupation[i].into(),
                ]);
            }
        }
        let mut results = Map::new();
        results.insert("label".into(), label_json(self.label));
        results.insert("gap_fit".into(), fit_json(&d.f_grid, &d.gap));
        let (gap_slope, _, _) = linear_fit(&d.f_grid, &d.gap);
        let fits: Vec<Value> = d
            .gamma_tildes
            .iter()
            .zip(&d.rates)
            .map(|(g, r)| {
                let mut v = fit_json(&d.f_grid, r);
                v["gamma_tilde"] = json!(g);
                v["slope_over_gap_slope"] = json!(v["slope"].as_f64().unwrap() / gap_slope);
                v
            })
            .collect();
        results.insert("rate_fits".into(), Value::Array(fits));
        let mut probe = d.gap.clone();
        probe.extend(&d.mean_occupation);
        Ok(Outcome {
            tables: vec![t],
            results,
            probe,
        })
    }

    fn truncation(&self, enlarged: bool) -> Value {
        dim_json(self.dim, enlarged)
    }

    fn tolerances(&self) -> Value {
        json!({ "tail_limit": TAIL_LIMIT })
    }
}

struct RadiationJob {
    sys: RwaSystem,
    gamma: f64,
    prep: Preparation,
    t_max: f64,
    xs: Vec<f64>,
    steady: bool,
    sum_rule: bool,
    dim: usize,
}

impl RadiationJob {
    fn plan(cfg: &ExperimentConfig) -> Result<Box<dyn Job>> {
        let dim = dim_of(cfg)?;
        let sys = rwa(cfg.f64("delta")?, cfg.non_negative("f")?, "delta", "f")?;
        let gamma = cfg.positive("gamma_tilde")?;
        let t_max = cfg.positive("t_max")?;
        if t_max < 10.0 / gamma {
            bail!("key `t_max` ({t_max}) must be at least 10 / gamma_tilde = {}", 10.0 / gamma);
        }
        let xs = cfg.grid("x")?;
        let prep = Preparation::from_config(cfg, dim)?;
        if matches!(prep, Preparation::Ramp { .. }) && sys.f == 0.0 {
            bail!("key `f` must be positive to prepare by a ramp");
        }
        Ok(Box::new(RadiationJob {
            sys,
            gamma,
            prep,
            t_max,
            xs,
            steady: cfg.bool("steady"),
            sum_rule: cfg.bool("sum_rule"),
            dim,
        }))
    }
}

impl Job for RadiationJob {
    fn compute(&self, enlarged: bool) -> Result<Outcome> {
        let sp = space(self.dim, enlarged)?;
        let (psi, mut results) = self.prep.state(&sp, &self.sys)?;
        let rho = DensityMatrix::from_pure(&psi);
        let l = build_liouvillian(&sp, &self.sys, self.gamma)?;
        let e = transient_spectrum(&l, &rho, self.t_max, &self.xs).context("transient spectrum")?;
        let mut tables = Vec::new();
        let mut t = Table::new("radiation", &["x", "e_rad"]);
        for (&x, &v) in self.xs.iter().zip(&e.values) {
            t.push(vec![x.into(), v.into()]);
        }
        tables.push(t);
        let argext = |better: fn(f64, f64) -> bool| {
            let mut k = 0;
            for i in 1..e.values.len() {
                if better(e.values[i], e.values[k]) {
                    k = i;
                }
            }
            json!({ "x": self.xs[k], "value": e.values[k] })
        };
        results.insert("maximum".into(), argext(|a, b| a > b));
        results.insert("minimum".into(), argext(|a, b| a < b));
        if self.steady {
            let q = steady_spectrum(&l, &self.xs, self.t_max).context("steady spectrum")?;
            let mut t = Table::new("steady", &["x", "q_st"]);
            for (&x, &v) in self.xs.iter().zip(&q.values) {
                t.push(vec![x.into(), v.into()]);
            }
            tables.push(t);
            results.insert("steady_mirror_asymmetry".into(), json!(q.mirror_asymmetry() / q.max_abs()));
        }
        if self.sum_rule {
            let (lhs, rhs) = sum_rule_check(&l, &rho, self.t_max).context("sum rule")?;
            results.insert("sum_rule".into(), json!({ "spectral": lhs, "occupation": rhs }));
        }
        Ok(Outcome {
            tables,
            results,
            probe: e.values,
        })
    }

    fn truncation(&self, enlarged: bool) -> Value {
        dim_json(self.dim, enlarged)
    }

    fn tolerances(&self) -> Value {
        let x_max = self.xs.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let mut t = json!({
            "master_rel_tol": DEFAULT_MASTER_TOL,
            "relaxation_limit": RELAXATION_LIMIT,
            "time_step": default_time_step(self.gamma, x_max),
        });
        if let Preparation::Ramp { rel_tol, .. } = self.prep {
            t["rel_tol"] = json!(rel_tol);
        }
        t
    }
}

struct FloquetJob {
    sys: RwaSystem,
    omega0: f64,
    vs: Vec<f64>,
    n_states: usize,
    k_cut: usize,
    n_cut: usize,
}

impl FloquetJob {
    fn plan(cfg: &ExperimentConfig) -> Result<Box<dyn Job>> {
        let sys = rwa(cfg.f64("delta")?, cfg.non_negative("f")?, "delta", "f")?;
        let omega0 = cfg.positive("omega0")?;
        let vs = cfg.list("v_values")?;
        let k_cut = cfg.usize_at_least("k_cut", 4)?;
        let n_cut = cfg.usize_at_least("n_cut", 4)?;
        for &v in &vs {
            LabFrameParams::from_rwa(omega0, v, &sys, k_cut, n_cut).with_context(|| format!("key `v_values` entry {v}"))?;
        }
        let n_states = cfg.usize_at_least("n_states", 1)?;
        if n_states > n_cut {
            bail!("key `n_states` ({n_states}) exceeds `n_cut` ({n_cut})");
        }
        Ok(Box::new(FloquetJob {
            sys,
            omega0,
            vs,
            n_states,
            k_cut,
            n_cut,
        }))
    }

    fn n_cut(&self, enlarged: bool) -> usize {
        self.n_cut + if enlarged { ENLARGEMENT } else { 0 }
    }
}

impl Job for FloquetJob {
    fn compute(&self, enlarged: bool) -> Result<Outcome> {
        let mut t = Table::new("floquet", &["v", "index", "parity", "rwa", "floquet", "overlap"]);
        let mut disc = Vec::with_capacity(self.vs.len());
        let mut probe = Vec::new();
        for &v in &self.vs {
            let p = LabFrameParams::from_rwa(self.omega0, v, &self.sys, self.k_cut, self.n_cut(enlarged))?;
            let c = compare_with_rwa(&p, self.n_states).with_context(|| format!("Floquet comparison at V = {v}"))?;
            for i in 0..c.rwa.values.len() {
                t.push(vec![
                    v.into(),
                    i.into(),
                    c.rwa.parity_labels[i].into(),
                    c.rwa.values[i].into(),
                    c.floquet.values[i].into(),
                    c.overlaps[i].into(),
                ]);
            }
            if probe.is_empty() {
                probe = c.floquet.values.clone();
            }
            disc.push(c.max_discrepancy);
        }
        let monotone = disc.windows(2).all(|w| w[1] < w[0]);
        let mut results = Map::new();
        results.insert("max_discrepancy".into(), json!(disc));
        results.insert("monotone".into(), json!(monotone));
        Ok(Outcome {
            tables: vec![t],
            results,
            probe,
        })
    }

    fn truncation(&self, enlarged: bool) -> Value {
        json!({ "k_cut": self.k_cut, "n_cut": self.n_cut(enlarged) })
    }

    fn tolerances(&self) -> Value {
        json!({ "tail_limit": TAIL_LIMIT })
    }
}
