//! Mode dispatch: turns a validated configuration into a result table.

use cavity_singlet::analysis::{
    fit_power_law, gap_fidelity_tradeoff, random_ground_state, rate_equation_fidelity,
    scaling_sweep, OptimizeConstraints, TradeoffOptions,
};
use cavity_singlet::dynamics::{evolve_with, linear_grid, EvolveOptions};
use cavity_singlet::effective::{coefficient_table, effective_model, non_hermitian_hamiltonian};
use cavity_singlet::liouvillian::{
    model_liouvillian, populations, spectrum_and_gap, steady_state, steady_state_residual,
    DEFAULT_STEADY_TOL,
};
use cavity_singlet::model::{AtomicStates, ModelParams};
use cavity_singlet::Result;
use serde_json::json;

use crate::config::{Mode, RunConfig};
use crate::output::{Cell, Table};

pub fn execute(cfg: &RunConfig) -> Result<Table> {
    match &cfg.mode {
        Mode::Dynamics {
            params,
            t_max,
            n_steps,
        } => dynamics(params, *t_max, *n_steps, cfg),
        Mode::Steady { params } => steady(params),
        Mode::Effective { params } => effective(params),
        Mode::Sweep {
            c_list,
            kappa_over_gamma,
            polish,
            n_max,
        } => sweep(c_list, kappa_over_gamma, *polish, *n_max),
        Mode::Tradeoff {
            c,
            kappa_over_gamma,
            gap_targets,
            n_max,
        } => tradeoff(*c, *kappa_over_gamma, gap_targets, *n_max),
    }
}

fn dynamics(p: &ModelParams, t_max: f64, n_steps: usize, cfg: &RunConfig) -> Result<Table> {
    let l = model_liouvillian(p)?;
    let rho0 = random_ground_state(cfg.seed, p.n_max);
    let grid = linear_grid(t_max, n_steps);
    let traj = evolve_with(&l, &rho0, &grid, EvolveOptions::default())?;
    let states = AtomicStates::new(p.n_max);

    let mut columns = vec!["t", "P_S", "P_T", "P_00", "P_11"];
    if cfg.gamma_si.is_some() {
        columns.push("t_SI");
    }
    let mut table = Table::new("dynamics", &columns);
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        let pop = populations(rho, &states)?;
        let mut row = vec![
            Cell::Num(*t),
            Cell::Num(pop.singlet),
            Cell::Num(pop.triplet),
            Cell::Num(pop.p00),
            Cell::Num(pop.p11),
        ];
        if let Some(g) = cfg.gamma_si {
            row.push(Cell::Num(t / g));
        }
        table.push(row);
    }
    table.diagnostic("seed", json!(cfg.seed));
    table.diagnostic("total_steps", json!(traj.total_steps));
    table.diagnostic("final_step", json!(traj.final_step));
    table.diagnostic("liouvillian_norm_inf", json!(l.norm_inf()));
    Ok(table)
}

fn steady(p: &ModelParams) -> Result<Table> {
    let l = model_liouvillian(p)?;
    let ss = steady_state(&l, DEFAULT_STEADY_TOL)?;
    let spec = spectrum_and_gap(&l, None)?;
    let pop = populations(&ss.rho_ss, &AtomicStates::new(p.n_max))?;
    let mut table = Table::new(
        "steady",
        &[
            "fidelity",
            "P_S",
            "P_T",
            "P_00",
            "P_11",
            "gap",
            "residual_eigenvalue",
            "degenerate",
        ],
    );
    table.push(vec![
        Cell::Num(pop.singlet),
        Cell::Num(pop.singlet),
        Cell::Num(pop.triplet),
        Cell::Num(pop.p00),
        Cell::Num(pop.p11),
        Cell::Num(spec.gap),
        Cell::Num(ss.residual_eigenvalue),
        Cell::Bool(ss.degeneracy_flag),
    ]);
    table.diagnostic(
        "residual_norm",
        json!(steady_state_residual(&l, &ss.rho_ss)),
    );
    table.diagnostic("zero_threshold", json!(spec.zero_threshold));
    if p.laser_detuning != 0.0 {
        table.diagnostic("rate_estimate", json!(rate_equation_fidelity(p)?));
    }
    Ok(table)
}

fn effective(p: &ModelParams) -> Result<Table> {
    let rows = coefficient_table(p)?;
    let model = effective_model(p)?;
    let block = non_hermitian_hamiltonian(p)?;
    let mut table = Table::new(
        "effective",
        &[
            "channel",
            "transition",
            "numeric",
            "analytic",
            "relative_error",
        ],
    );
    for r in rows {
        table.push(vec![
            Cell::Text(r.channel),
            Cell::Text(r.transition.into()),
            Cell::Num(r.numeric),
            Cell::Num(r.analytic),
            Cell::Num(r.relative_error),
        ]);
    }
    table.diagnostic("residual_norm", json!(model.residual_norm));
    table.diagnostic(
        "h_eff_hermiticity_error",
        json!(model.h_eff.hermiticity_error()),
    );
    table.diagnostic("h_nh_condition_number", json!(block.condition_number));
    table.diagnostic(
        "rates",
        json!(cavity_singlet::effective::analytic_effective_rates(p)?),
    );
    Ok(table)
}

fn sweep(c_list: &[f64], kog: &[f64], polish: bool, n_max: usize) -> Result<Table> {
    let constraints = OptimizeConstraints {
        polish,
        n_max,
        ..OptimizeConstraints::default()
    };
    let points = scaling_sweep(c_list, kog, &constraints)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(
        "sweep",
        &[
            "C",
            "kappa_over_gamma",
            "fidelity",
            "one_minus_F",
            "Delta",
            "delta",
            "Omega",
            "Omega_MW",
            "gap",
        ],
    );
    let mut per_point = Vec::new();
    for pt in &points {
        let b = &pt.best_params;
        table.push(vec![
            Cell::Num(pt.c),
            Cell::Num(pt.kappa_over_gamma),
            Cell::Num(pt.fidelity),
            Cell::Num(pt.one_minus_f),
            Cell::Num(b.laser_detuning),
            Cell::Num(b.cavity_detuning),
            Cell::Num(b.omega),
            Cell::Num(b.omega_mw),
            Cell::Num(pt.gap),
        ]);
        per_point.push(json!({
            "C": pt.c,
            "kappa_over_gamma": pt.kappa_over_gamma,
            "evaluations": pt.evaluations,
            "sweeps": pt.sweeps,
            "converged": pt.converged,
            "residual_eigenvalue": pt.residual_eigenvalue,
        }));
    }
    let mut fits = Vec::new();
    for &k in kog {
        let (xs, ys): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter(|p| p.kappa_over_gamma == k)
            .map(|p| (p.c, p.one_minus_f))
            .unzip();
        if let Ok(fit) = fit_power_law(&xs, &ys) {
            eprintln!(
                "fit kappa/gamma = {k}: slope {:.4}, prefactor {:.4} (slope fixed at -1: {:.4})",
                fit.slope, fit.prefactor, fit.inverse_prefactor
            );
            fits.push(json!({ "kappa_over_gamma": k, "fit": fit }));
        }
    }
    table.diagnostic("points", json!(per_point));
    table.diagnostic("fits", json!(fits));
    Ok(table)
}

fn tradeoff(c: f64, kog: f64, targets: &[f64], n_max: usize) -> Result<Table> {
    let opts = TradeoffOptions {
        n_max,
        ..TradeoffOptions::default()
    };
    let tr = gap_fidelity_tradeoff(c, kog, targets, &opts)?;
    let mut table = Table::new(
        "tradeoff",
        &["target_gap", "gap", "fidelity", "Omega", "Omega_MW"],
    );
    for pt in &tr.points {
        table.push(vec![
            Cell::Num(pt.target_gap),
            Cell::Num(pt.gap),
            Cell::Num(pt.fidelity),
            Cell::Num(pt.omega),
            Cell::Num(pt.omega_mw),
        ]);
    }
    for t in &tr.omitted {
        eprintln!("notice: gap target {t} is out of reach and was omitted");
    }
    table.diagnostic("omitted", json!(tr.omitted));
    table.diagnostic(
        "base",
        json!({
            "Delta": tr.base.best_params.laser_detuning,
            "delta": tr.base.best_params.cavity_detuning,
            "fidelity": tr.base.fidelity,
            "gap": tr.base.gap,
            "evaluations": tr.base.evaluations,
        }),
    );
    Ok(table)
}
