//! Fidelity analysis of the full model: rate-equation estimate, optimized
//! fidelity against cooperativity, gap–fidelity tradeoff and convergence time.

use std::cell::Cell;

use faer::{c64, Col};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::dynamics::{evolve_observed, EvolveOptions};
use crate::effective::{analytic_effective_rates, reduced_liouvillian};
use crate::error::{Error, Result};
use crate::liouvillian::{
    model_liouvillian, singlet_fidelity, spectrum_and_gap, steady_state, steady_state_direct,
    DEFAULT_STEADY_TOL,
};
use crate::model::{AtomicStates, ModelParams, DEFAULT_N_MAX};
use crate::optimize::{coordinate_descent, golden_section, Bound, DescentOptions};
use crate::quantum::{partial_trace_cavity, DensityMatrix};

/// g = (2π)·35 MHz, in rad/s.
pub const REFERENCE_G_SI: f64 = 2.0 * std::f64::consts::PI * 35e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateEstimate {
    /// Population of |00⟩ implied by the closed-form estimate.
    pub p00: f64,
    /// 1 − F from the closed-form estimate (3·p00).
    #[serde(rename = "one_minus_F_est")]
    pub one_minus_f_est: f64,
    /// Stationary P_00 (= P_T = P_11) of the rate balance built from the
    /// effective rates.
    pub balance_p00: f64,
    #[serde(rename = "balance_one_minus_F")]
    pub balance_one_minus_f: f64,
}

/// Closed-form 1 − F estimate of the singlet rate equation, with the
/// triplet-corner populations taken equal.
///
/// `one_minus_f_est` depends on Δ, g, κ, γ only:
///
/// ```text
/// 6 (3γ/16 + κΔ²/2g²) · 2(κ/2 + γg²/2Δ²)² / (g²κ)
/// ```
///
/// The balance fields solve P_00 κ₁ = P_S (κ₂ + Σγᵢ) with P_S + 3P_00 = 1.
pub fn rate_equation_fidelity(p: &ModelParams) -> Result<RateEstimate> {
    let (g, kappa, gamma, big) = (p.g, p.kappa, p.gamma, p.laser_detuning);
    if kappa == 0.0 {
        return Err(Error::InvalidParam {
            field: "kappa",
            reason: "cavity decay must be nonzero".into(),
        });
    }
    if g == 0.0 {
        return Err(Error::InvalidParam {
            field: "g",
            reason: "coupling must be nonzero".into(),
        });
    }
    let rates = analytic_effective_rates(p)?;
    let numerator = 3.0 * gamma / 16.0 + kappa * big * big / (2.0 * g * g);
    let width = kappa / 2.0 + gamma * g * g / (2.0 * big * big);
    let denominator = g * g * kappa / (2.0 * width * width);
    let one_minus_f_est = 6.0 * numerator / denominator;

    let exit = rates.kappa_eff_2 + rates.total_gamma_exit();
    let balance_p00 = exit / (rates.kappa_eff_1 + 3.0 * exit);
    Ok(RateEstimate {
        p00: one_minus_f_est / 3.0,
        one_minus_f_est,
        balance_p00,
        balance_one_minus_f: 3.0 * balance_p00,
    })
}

/// Haar-random pure state of the two atoms in span{|0⟩,|1⟩}⊗², cavity empty.
pub fn random_ground_state(seed: u64, n_max: usize) -> DensityMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut amp = [c64::new(0.0, 0.0); 4];
    for a in &mut amp {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *a = c64::new(re, im);
    }
    let states = AtomicStates::new(n_max);
    let space = &states.atomic_space;
    let mut atomic = Col::<c64>::zeros(space.total_dim());
    for (k, a) in amp.iter().enumerate() {
        atomic[space.index(&[k / 2, k % 2])] = *a;
    }
    DensityMatrix::pure(&states.full_space, &states.embed_vacuum(&atomic))
}

/// Steady-state singlet fidelity from the bordered linear solve.
pub fn fast_fidelity(p: &ModelParams) -> Result<f64> {
    let l = model_liouvillian(p)?;
    let rho = steady_state_direct(&l)?;
    singlet_fidelity(&rho, &AtomicStates::new(p.n_max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimizeConstraints {
    /// Ω/g during the detuning search.
    pub omega_over_g: f64,
    /// Ω_MW/Ω during the detuning search.
    pub mw_over_omega: f64,
    /// Follow the detuning search with a descent over all four parameters.
    pub polish: bool,
    pub omega_over_g_range: (f64, f64),
    pub mw_over_omega_range: (f64, f64),
    /// Range of r = δΔ/g², the cavity detuning relative to the line shift.
    pub line_shift_ratio_range: (f64, f64),
    /// Δ is searched in [Δ₀/s, Δ₀·s] around Δ₀ = g√(2γ/κ).
    pub laser_detuning_span: f64,
    pub rel_tol: f64,
    pub max_sweeps: usize,
    pub n_max: usize,
}

impl Default for OptimizeConstraints {
    fn default() -> Self {
        Self {
            omega_over_g: 1.0 / 20.0,
            mw_over_omega: 0.4,
            polish: true,
            omega_over_g_range: (1.0 / 80.0, 1.0 / 20.0),
            mw_over_omega_range: (0.05, 2.0),
            line_shift_ratio_range: (0.6, 1.4),
            laser_detuning_span: 4.0,
            rel_tol: 1e-3,
            max_sweeps: 12,
            n_max: DEFAULT_N_MAX,
        }
    }
}

impl OptimizeConstraints {
    /// Drives pinned at Ω = g/20, Ω_MW = 2Ω/5; only Δ and δ are searched.
    pub fn fixed_drives() -> Self {
        Self {
            polish: false,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingPoint {
    #[serde(rename = "C")]
    pub c: f64,
    pub kappa_over_gamma: f64,
    pub best_params: ModelParams,
    pub fidelity: f64,
    #[serde(rename = "one_minus_F")]
    pub one_minus_f: f64,
    pub gap: f64,
    /// |λ| of the eigenvalue used for the recorded steady state.
    pub residual_eigenvalue: f64,
    pub evaluations: usize,
    pub sweeps: usize,
    /// False when a search stage hit its sweep cap.
    pub converged: bool,
}

struct Objective {
    evaluations: Cell<usize>,
    failures: Cell<usize>,
}

impl Objective {
    fn new() -> Self {
        Self {
            evaluations: Cell::new(0),
            failures: Cell::new(0),
        }
    }

    /// 1 − F, with failed solves mapped to the worst value.
    fn infidelity(&self, p: &ModelParams) -> f64 {
        self.evaluations.set(self.evaluations.get() + 1);
        match fast_fidelity(p) {
            Ok(f) if f.is_finite() => 1.0 - f,
            Ok(_) | Err(_) => {
                self.failures.set(self.failures.get() + 1);
                1.0
            }
        }
    }
}

fn check_positive(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParam {
            field,
            reason: format!("must be positive, got {v}"),
        })
    }
}

fn with_detuning_coords(base: &ModelParams, ln_delta: f64, r: f64) -> ModelParams {
    let big = ln_delta.exp();
    base.with_detunings(big, r * base.g * base.g / big)
}

/// Maximizes the steady-state singlet fidelity at fixed C and κ/γ (γ = 1).
///
/// Stage one searches (ln Δ, δΔ/g²) with the drives pinned; stage two, if
/// enabled, adds ln(Ω/g) and Ω_MW/Ω. The recorded fidelity and gap come from
/// a dense eigendecomposition at the optimum.
pub fn optimize_fidelity(
    c: f64,
    kappa_over_gamma: f64,
    constraints: &OptimizeConstraints,
) -> Result<ScalingPoint> {
    check_positive("C", c)?;
    check_positive("kappa_over_gamma", kappa_over_gamma)?;
    let k = constraints;
    let seed = ModelParams::at_cooperativity(c, kappa_over_gamma).with_n_max(k.n_max);
    let omega = k.omega_over_g * seed.g;
    let base = seed.with_drives(omega, k.mw_over_omega * omega);
    let obj = Objective::new();
    let tol = k.rel_tol;
    let opts = DescentOptions {
        max_sweeps: k.max_sweeps,
        ..DescentOptions::default()
    };

    let ln_d0 = seed.laser_detuning.ln();
    let span = k.laser_detuning_span.ln();
    let b_delta = Bound::new(ln_d0 - span, ln_d0 + span, tol);
    let b_ratio = Bound::new(k.line_shift_ratio_range.0, k.line_shift_ratio_range.1, tol);
    let stage1 = coordinate_descent(
        |x| obj.infidelity(&with_detuning_coords(&base, x[0], x[1])),
        &[ln_d0, 1.0],
        &[b_delta, b_ratio],
        opts,
    );
    let mut best = with_detuning_coords(&base, stage1.x[0], stage1.x[1]);
    let mut converged = stage1.converged;
    let mut sweeps = stage1.sweeps;

    if k.polish {
        let place = |x: &[f64]| {
            let om = x[2].exp() * base.g;
            with_detuning_coords(&base, x[0], x[1]).with_drives(om, x[3] * om)
        };
        let stage2 = coordinate_descent(
            |x| obj.infidelity(&place(x)),
            &[
                stage1.x[0],
                stage1.x[1],
                k.omega_over_g.ln(),
                k.mw_over_omega,
            ],
            &[
                b_delta,
                b_ratio,
                Bound::new(
                    k.omega_over_g_range.0.ln(),
                    k.omega_over_g_range.1.ln(),
                    tol,
                ),
                Bound::new(k.mw_over_omega_range.0, k.mw_over_omega_range.1, tol),
            ],
            opts,
        );
        best = place(&stage2.x);
        converged &= stage2.converged;
        sweeps += stage2.sweeps;
    }
    if !converged {
        log::warn!("optimizer hit the sweep cap at C = {c}, kappa/gamma = {kappa_over_gamma}");
    }
    if obj.failures.get() > 0 {
        log::warn!(
            "{} steady-state solves failed during the search",
            obj.failures.get()
        );
    }

    let l = model_liouvillian(&best)?;
    let ss = steady_state(&l, DEFAULT_STEADY_TOL)?;
    let fidelity = singlet_fidelity(&ss.rho_ss, &AtomicStates::new(best.n_max))?;
    let gap = spectrum_and_gap(&l, None)?.gap;
    Ok(ScalingPoint {
        c,
        kappa_over_gamma,
        best_params: best,
        fidelity,
        one_minus_f: 1.0 - fidelity,
        gap,
        residual_eigenvalue: ss.residual_eigenvalue,
        evaluations: obj.evaluations.get(),
        sweeps,
        converged,
    })
}

/// One optimization per (C, κ/γ) pair, run through [`crate::par::map`].
/// Results are ordered with C varying fastest.
pub fn scaling_sweep(
    c_list: &[f64],
    kappa_over_gamma: &[f64],
    constraints: &OptimizeConstraints,
) -> Vec<Result<ScalingPoint>> {
    let jobs: Vec<(f64, f64)> = kappa_over_gamma
        .iter()
        .flat_map(|&k| c_list.iter().map(move |&c| (c, k)))
        .collect();
    crate::par::map(&jobs, |&(c, k)| optimize_fidelity(c, k, constraints))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerLawFit {
    /// Least-squares slope of ln y against ln x.
    pub slope: f64,
    /// exp(intercept) of the same fit.
    pub prefactor: f64,
    /// exp(mean(ln y + ln x)): the prefactor with the slope held at −1.
    pub inverse_prefactor: f64,
    pub r_squared: f64,
}

/// Fits y = A·x^s on log–log axes.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidParam {
            field: "points",
            reason: "need at least two (x, y) pairs of equal length".into(),
        });
    }
    if xs.iter().chain(ys).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidParam {
            field: "points",
            reason: "log–log fit needs positive values".into(),
        });
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParam {
            field: "points",
            reason: "x values must not all coincide".into(),
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Ok(PowerLawFit {
        slope,
        prefactor: intercept.exp(),
        inverse_prefactor: (my + mx).exp(),
        r_squared: if syy > 0.0 {
            sxy * sxy / (sxx * syy)
        } else {
            1.0
        },
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TradeoffPoint {
    pub target_gap: f64,
    pub gap: f64,
    pub fidelity: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
    #[serde(rename = "Omega_MW")]
    pub omega_mw: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Tradeoff {
    /// Small-drive optimum supplying the fixed Δ and δ.
    pub base: ScalingPoint,
    pub points: Vec<TradeoffPoint>,
    /// Targets no drive setting within the bounds could reach.
    pub omitted: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct TradeoffOptions {
    pub omega_over_g_range: (f64, f64),
    pub mw_over_omega_range: (f64, f64),
    /// Accepted relative deviation of the measured gap from its target.
    pub gap_tol: f64,
    /// Resolution of the search over ln(Ω_MW/Ω).
    pub ratio_tol: f64,
    pub n_max: usize,
}

impl Default for TradeoffOptions {
    fn default() -> Self {
        Self {
            omega_over_g_range: (1.0 / 1000.0, 1.0 / 4.0),
            mw_over_omega_range: (0.02, 5.0),
            gap_tol: 0.05,
            ratio_tol: 0.02,
            n_max: DEFAULT_N_MAX,
        }
    }
}

fn full_gap(p: &ModelParams) -> Result<f64> {
    Ok(spectrum_and_gap(&model_liouvillian(p)?, None)?.gap)
}

fn reduced_gap(p: &ModelParams) -> Result<f64> {
    Ok(spectrum_and_gap(&reduced_liouvillian(p)?, None)?.gap)
}

/// Ω at which the full-model gap matches `target` for Ω_MW = ratio·Ω, or
/// `None` if the target is out of reach. The reduced model supplies the
/// starting point; secant steps in (ln Ω, ln gap) refine it on the full model.
fn drive_for_gap(
    base: &ModelParams,
    ratio: f64,
    target: f64,
    opts: &TradeoffOptions,
) -> Result<Option<(ModelParams, f64)>> {
    let at = |ln_om: f64| {
        let om = ln_om.exp();
        base.with_drives(om, ratio * om)
    };
    let lo = (opts.omega_over_g_range.0 * base.g).ln();
    let hi = (opts.omega_over_g_range.1 * base.g).ln();
    if reduced_gap(&at(hi))? < target {
        return Ok(None);
    }
    let (mut a, mut b) = (lo, hi);
    if reduced_gap(&at(lo))? >= target {
        b = lo;
    } else {
        for _ in 0..50 {
            let m = 0.5 * (a + b);
            if reduced_gap(&at(m))? < target {
                a = m;
            } else {
                b = m;
            }
        }
    }

    let mut x0 = b;
    let mut g0 = full_gap(&at(x0))?;
    let mut prev: Option<(f64, f64)> = None;
    for _ in 0..6 {
        if (g0 / target - 1.0).abs() <= 0.2 * opts.gap_tol {
            break;
        }
        // Without a second point, assume gap ∝ Ω².
        let slope = match prev {
            Some((x1, g1)) if x1 != x0 && g1 > 0.0 && g0 > 0.0 => (g0.ln() - g1.ln()) / (x0 - x1),
            _ => 2.0,
        };
        if !(slope.is_finite() && slope > 0.0) || g0 <= 0.0 {
            break;
        }
        let next = (x0 + (target.ln() - g0.ln()) / slope).clamp(lo, hi);
        prev = Some((x0, g0));
        x0 = next;
        g0 = full_gap(&at(x0))?;
    }
    if (g0 / target - 1.0).abs() <= opts.gap_tol {
        Ok(Some((at(x0), g0)))
    } else {
        Ok(None)
    }
}

/// For each target gap, the largest steady-state fidelity over (Ω, Ω_MW)
/// whose full-model gap lies within `gap_tol` of the target, with Δ and δ
/// fixed at the small-drive optimum for this C.
pub fn gap_fidelity_tradeoff(
    c: f64,
    kappa_over_gamma: f64,
    gap_targets: &[f64],
    opts: &TradeoffOptions,
) -> Result<Tradeoff> {
    let constraints = OptimizeConstraints {
        n_max: opts.n_max,
        ..OptimizeConstraints::fixed_drives()
    };
    let base = optimize_fidelity(c, kappa_over_gamma, &constraints)?;
    let fixed = base.best_params;
    let per_target = crate::par::map(gap_targets, |&target| -> Result<Option<TradeoffPoint>> {
        check_positive("gap_targets", target)?;
        let failure: Cell<Option<Error>> = Cell::new(None);
        let evaluate = |ln_ratio: f64| -> Option<TradeoffPoint> {
            let ratio = ln_ratio.exp();
            let found = drive_for_gap(&fixed, ratio, target, opts).and_then(|hit| {
                hit.map(|(p, gap)| {
                    fast_fidelity(&p).map(|fidelity| TradeoffPoint {
                        target_gap: target,
                        gap,
                        fidelity,
                        omega: p.omega,
                        omega_mw: p.omega_mw,
                    })
                })
                .transpose()
            });
            match found {
                Ok(v) => v,
                Err(e) => {
                    failure.set(Some(e));
                    None
                }
            }
        };
        let line = golden_section(
            |x| evaluate(x).map_or(2.0, |pt| 1.0 - pt.fidelity),
            opts.mw_over_omega_range.0.ln(),
            opts.mw_over_omega_range.1.ln(),
            opts.ratio_tol,
            100,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok(if line.fx < 2.0 {
            evaluate(line.x)
        } else {
            None
        })
    });
    let mut points = Vec::new();
    let mut omitted = Vec::new();
    for (target, r) in gap_targets.iter().zip(per_target) {
        match r? {
            Some(pt) => points.push(pt),
            None => {
                log::warn!("gap target {target} is not reachable; omitted");
                omitted.push(*target);
            }
        }
    }
    Ok(Tradeoff {
        base,
        points,
        omitted,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceTime {
    /// In units of 1/γ.
    pub time: f64,
    /// The same time in units of 1/g.
    pub time_g: f64,
    /// ‖Tr_cav ρ(t) − Tr_cav ρ_ss‖₁ at `time`.
    pub distance: f64,
    pub grid_index: usize,
}

impl ConvergenceTime {
    /// Seconds, given the coupling in rad/s (γ_SI = g_SI / g).
    pub fn seconds_from_g(&self, g_si: f64) -> f64 {
        self.time_g / g_si
    }

    /// Seconds, given γ in 1/s.
    pub fn seconds_from_gamma(&self, gamma_si: f64) -> f64 {
        self.time / gamma_si
    }
}

/// First grid time at which the atomic state is within `epsilon` (trace
/// norm) of the unique steady state.
pub fn convergence_time(
    p: &ModelParams,
    rho0: &DensityMatrix,
    epsilon: f64,
    t_grid: &[f64],
) -> Result<ConvergenceTime> {
    let l = model_liouvillian(p)?;
    let ss = steady_state(&l, DEFAULT_STEADY_TOL)?;
    if ss.degeneracy_flag {
        return Err(Error::InvalidState("steady state is not unique".into()));
    }
    let target = partial_trace_cavity(&ss.rho_ss)?;
    let mut last = (0, f64::NAN);
    let mut failure = None;
    let run = evolve_observed(&l, rho0, t_grid, EvolveOptions::default(), |k, rho| {
        match partial_trace_cavity(rho).and_then(|a| a.trace_norm_distance(&target)) {
            Ok(d) => {
                last = (k, d);
                d < epsilon
            }
            Err(e) => {
                failure = Some(e);
                true
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    match run.stopped_at {
        Some(k) => Ok(ConvergenceTime {
            time: t_grid[k],
            time_g: t_grid[k] * p.g,
            distance: last.1,
            grid_index: k,
        }),
        None => Err(Error::GridExhausted(last.1)),
    }
}
