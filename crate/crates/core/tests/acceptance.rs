//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use cavity_singlet::analysis::{
    convergence_time, fit_power_law, optimize_fidelity, random_ground_state,
    rate_equation_fidelity, scaling_sweep, OptimizeConstraints, ScalingPoint, REFERENCE_G_SI,
};
use cavity_singlet::dynamics::{evolve, linear_grid};
use cavity_singlet::effective::{
    analytic_effective_rates, coefficient_table, ideal_liouvillian, reduced_liouvillian,
    QubitPairStates,
};
use cavity_singlet::liouvillian::{
    model_liouvillian, singlet_fidelity, spectrum_and_gap, steady_state, steady_state_direct,
    steady_state_residual, DEFAULT_STEADY_TOL,
};
use cavity_singlet::model::{AtomicStates, ModelParams};
use cavity_singlet::quantum::{vectorize, DensityMatrix};
use common::{expm, RandomModel};
use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const C_LIST: [f64; 6] = [10.0, 20.0, 30.0, 50.0, 100.0, 200.0];
const KAPPA_RATIOS: [f64; 3] = [0.5, 1.0, 2.0];

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {id:>2}. {name}: {detail}");
    }

    fn note(&self, text: String) {
        println!("       {text}");
    }
}

fn operating_point() -> ScalingPoint {
    optimize_fidelity(50.0, 0.5, &OptimizeConstraints::fixed_drives())
        .expect("operating-point optimization")
}

fn criterion_1(r: &mut Report, op: &ScalingPoint, elapsed: f64) {
    let f = op.fidelity;
    r.check(
        1,
        "operating point C=50, kappa=gamma/2, g=20 Omega, Omega=5 Omega_MW/2",
        (f - 0.92).abs() <= 0.02 && elapsed < 120.0,
        format!(
            "F = {f:.4} (target 0.92 +/- 0.02) at Delta = {:.4}, delta = {:.4}; {elapsed:.1} s",
            op.best_params.laser_detuning, op.best_params.cavity_detuning
        ),
    );
}

fn by_ratio(points: &[ScalingPoint], k: f64) -> Vec<&ScalingPoint> {
    points.iter().filter(|p| p.kappa_over_gamma == k).collect()
}

fn criteria_2_3_4(r: &mut Report, points: &[ScalingPoint], elapsed: f64) {
    let unit = by_ratio(points, 1.0);
    let xs: Vec<f64> = unit.iter().map(|p| p.c).collect();
    let ys: Vec<f64> = unit.iter().map(|p| p.one_minus_f).collect();
    let fit = fit_power_law(&xs, &ys).expect("fit");
    for p in &unit {
        r.note(format!(
            "C = {:>5}: 1-F = {:.5}, (1-F)C = {:.3}, gap = {:.3e}, Omega/g = {:.4}, Omega_MW/Omega = {:.3}",
            p.c,
            p.one_minus_f,
            p.one_minus_f * p.c,
            p.gap,
            p.best_params.omega / p.best_params.g,
            p.best_params.omega_mw / p.best_params.omega
        ));
    }
    let worst = unit.iter().map(|p| p.one_minus_f * p.c).fold(0.0, f64::max);
    r.check(
        2,
        "scaling law at kappa/gamma = 1",
        (fit.slope + 1.0).abs() <= 0.15
            && (fit.inverse_prefactor - 3.5).abs() <= 1.0
            && worst <= 4.5
            && elapsed < 1800.0,
        format!(
            "slope {:.3} (target -1 +/- 0.15), prefactor at slope -1 {:.3} (target 3.5 +/- 1), \
             max (1-F)C {worst:.3} (<= 4.5); free-fit prefactor {:.3}; sweep {elapsed:.0} s",
            fit.slope, fit.inverse_prefactor, fit.prefactor
        ),
    );

    let prefactors: Vec<(f64, f64)> = KAPPA_RATIOS
        .iter()
        .map(|&k| {
            let pts = by_ratio(points, k);
            let xs: Vec<f64> = pts.iter().map(|p| p.c).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.one_minus_f).collect();
            (k, fit_power_law(&xs, &ys).expect("fit").inverse_prefactor)
        })
        .collect();
    let hi = prefactors.iter().map(|p| p.1).fold(0.0, f64::max);
    let lo = prefactors.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let spread = (hi - lo) / lo;
    r.check(
        3,
        "kappa/gamma insensitivity of the prefactor",
        spread < 0.30,
        format!(
            "prefactors {} ; spread (max-min)/min = {:.1}% (< 30%)",
            prefactors
                .iter()
                .map(|(k, a)| format!("{k}: {a:.3}"))
                .collect::<Vec<_>>()
                .join(", "),
            100.0 * spread
        ),
    );

    let c30 = unit.iter().find(|p| p.c == 30.0).expect("C = 30 point");
    r.check(
        4,
        "C = 30 fidelity",
        c30.fidelity >= 0.88,
        format!("F = {:.4} (>= 0.88)", c30.fidelity),
    );
}

fn criterion_5(r: &mut Report, op: &ScalingPoint) {
    let p = op.best_params;
    let rho0 = random_ground_state(0, p.n_max);
    // Grid in 1/γ reaching 4000/g, spaced 5/g.
    let grid = linear_grid(4000.0 / p.g, 800);
    match convergence_time(&p, &rho0, 0.02, &grid) {
        Ok(t) => {
            let micro = t.seconds_from_g(REFERENCE_G_SI) * 1e6;
            let in_g = t.time_g;
            r.check(
                5,
                "convergence time at the operating point",
                (500.0..=2000.0).contains(&in_g) && (2.5..=10.0).contains(&micro),
                format!(
                    "||rho_at(t) - rho_at_ss||_1 < 0.02 at t = {in_g:.0}/g (target 1000/g within x2), \
                     {micro:.2} us at g = 2pi*35 MHz (target 5 us within x2)"
                ),
            );
        }
        Err(e) => r.check(
            5,
            "convergence time at the operating point",
            false,
            e.to_string(),
        ),
    }
    // Same trajectory under the half-trace-norm convention.
    if let Ok(t) = convergence_time(&p, &rho0, 0.04, &grid) {
        r.note(format!(
            "with the 1/2 ||.||_1 convention the crossing is at {:.0}/g ({:.2} us); relaxation time 1/gap = {:.0}/g",
            t.time_g,
            t.seconds_from_g(REFERENCE_G_SI) * 1e6,
            p.g / op.gap
        ));
    }
}

fn criterion_6(r: &mut Report) {
    let base = ModelParams::at_cooperativity(50.0, 0.5);
    let mut mismatches = Vec::new();
    let mut kappa_ok = true;
    let mut gamma_ok = true;
    for k in 0..3 {
        let p = base.with_drives(base.omega / 2f64.powi(k), base.omega_mw / 2f64.powi(k));
        let rows = coefficient_table(&p).expect("coefficients");
        if k == 0 {
            for row in &rows {
                let ok = row.relative_error <= 0.05;
                if row.channel == "kappa" {
                    kappa_ok &= ok;
                } else {
                    gamma_ok &= ok;
                }
                r.note(format!(
                    "{:<14} {:<6} numeric {:.6e} analytic {:.6e} rel. err {:.3e}",
                    row.channel, row.transition, row.numeric, row.analytic, row.relative_error
                ));
            }
        }
        mismatches.push(rows.iter().map(|x| x.relative_error).fold(0.0, f64::max));
    }
    let monotone = mismatches.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    r.check(
        6,
        "effective-operator agreement at Omega = g/20, delta = g^2/Delta",
        kappa_ok && gamma_ok && monotone,
        format!(
            "cavity channel within 5%: {kappa_ok}, emission channels within 5%: {gamma_ok}; \
             max mismatch at Omega, Omega/2, Omega/4 = {:.6e}, {:.6e}, {:.6e} (non-increasing: {monotone})",
            mismatches[0], mismatches[1], mismatches[2]
        ),
    );
}

fn criterion_7(r: &mut Report, op: &ScalingPoint) {
    let p = op.best_params;
    let reduced = reduced_liouvillian(&p)
        .and_then(|l| steady_state(&l, DEFAULT_STEADY_TOL))
        .map(|ss| ss.rho_ss.expectation(&QubitPairStates::new().singlet));
    match reduced {
        Ok(fr) => r.check(
            7,
            "reduced vs full steady-state fidelity",
            (fr - op.fidelity).abs() <= 0.02,
            format!(
                "reduced {fr:.4}, full {:.4}, |diff| {:.4} (<= 0.02)",
                op.fidelity,
                (fr - op.fidelity).abs()
            ),
        ),
        Err(e) => r.check(
            7,
            "reduced vs full steady-state fidelity",
            false,
            e.to_string(),
        ),
    }
}

fn criterion_8(r: &mut Report, points: &[ScalingPoint]) {
    let mut ok = true;
    for p in by_ratio(points, 1.0) {
        let est = rate_equation_fidelity(&p.best_params).expect("rate estimate");
        let ratio = est.one_minus_f_est / p.one_minus_f;
        ok &= (0.5..=2.0).contains(&ratio);
        r.note(format!(
            "C = {:>5}: closed form {:.5} ({:.2}/C), full {:.5}, ratio {ratio:.2}; rate balance {:.5} (ratio {:.2})",
            p.c,
            est.one_minus_f_est,
            est.one_minus_f_est * p.c,
            p.one_minus_f,
            est.balance_one_minus_f,
            est.balance_one_minus_f / p.one_minus_f
        ));
    }
    r.check(
        8,
        "closed-form rate-equation estimate within x2 of the optimized full model",
        ok,
        "see per-C ratios above".into(),
    );
}

fn random_model(rng: &mut ChaCha8Rng) -> RandomModel {
    let d = rng.random_range(2..=3usize);
    let nj = rng.random_range(1..=2usize);
    let mut entries = |n: usize| {
        (0..n)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect::<Vec<f64>>()
    };
    let h = entries(d * d);
    let h_im = entries(d * d);
    let jumps = (0..nj).map(|_| (entries(d * d), entries(d * d))).collect();
    let psi = entries(2 * d);
    RandomModel {
        d,
        h,
        h_im,
        jumps,
        psi,
    }
}

fn criterion_9(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (mut trace_err, mut min_eig, mut null_err, mut expm_err, mut resid): (
        f64,
        f64,
        f64,
        f64,
        f64,
    ) = (0.0, f64::INFINITY, 0.0, 0.0, 0.0);
    let tol = DEFAULT_STEADY_TOL;
    for _ in 0..40 {
        let m = random_model(&mut rng);
        let l = m.liouvillian();
        null_err = null_err.max(l.trace_preservation_error());
        let rho0 = DensityMatrix::pure(&m.space(), &m.initial_ket());
        let grid = linear_grid(2.0, 4);
        let states = evolve(&l, &rho0, &grid).expect("evolve");
        for rho in &states {
            trace_err = trace_err.max((rho.trace() - c64::new(1.0, 0.0)).norm());
            min_eig = min_eig.min(rho.min_eigenvalue().expect("eigenvalues"));
        }
        let n = l.matrix().nrows();
        let prop = expm(&Mat::from_fn(n, n, |i, j| l.matrix()[(i, j)] * 2.0));
        let v0 = vectorize(rho0.matrix().as_ref());
        let got = vectorize(states.last().unwrap().matrix().as_ref());
        for i in 0..n {
            let want: c64 = (0..n).map(|j| prop[(i, j)] * v0[j]).sum();
            expm_err = expm_err.max((got[i] - want).norm());
        }
        let ss = steady_state(&l, tol).expect("steady state");
        if !ss.degeneracy_flag {
            resid = resid.max(steady_state_residual(&l, &ss.rho_ss));
        }
    }

    let p = ModelParams::at_cooperativity(50.0, 0.5).with_detunings(7.7605, 3.1367);
    let full = model_liouvillian(&p).expect("model");
    null_err = null_err.max(full.trace_preservation_error());
    let ss = steady_state(&full, tol).expect("steady state");
    resid = resid.max(steady_state_residual(&full, &ss.rho_ss));
    let fid = |n: usize| {
        let q = p.with_n_max(n);
        let rho = steady_state_direct(&model_liouvillian(&q).unwrap()).unwrap();
        singlet_fidelity(&rho, &AtomicStates::new(n)).unwrap()
    };
    let truncation = (fid(2) - fid(3)).abs();

    r.check(
        9,
        "property suite",
        trace_err < 1e-8
            && min_eig >= -1e-8
            && null_err < 1e-9
            && expm_err < 1e-7
            && resid < 10.0 * tol
            && truncation < 1e-4,
        format!(
            "trace err {trace_err:.1e}, min eigenvalue {min_eig:.1e}, left null vector {null_err:.1e}, \
             expm oracle {expm_err:.1e}, steady residual {resid:.1e}, n_max 2 vs 3 {truncation:.1e}"
        ),
    );
}

fn criterion_10(r: &mut Report) {
    let p = ModelParams::at_cooperativity(50.0, 0.5);
    let kappa_eff = analytic_effective_rates(&p).expect("rates").kappa_eff_1;
    let l = ideal_liouvillian(p.omega_mw, kappa_eff).expect("ideal model");
    let ss = steady_state(&l, DEFAULT_STEADY_TOL).expect("steady state");
    let singlet = QubitPairStates::new().singlet;
    let target = DensityMatrix::pure(l.space(), &singlet);
    let dist = ss.rho_ss.trace_norm_distance(&target).expect("distance");
    let max_entry = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .map(|(i, j)| (ss.rho_ss.matrix()[(i, j)] - target.matrix()[(i, j)]).norm())
        .fold(0.0, f64::max);
    let gap = spectrum_and_gap(&l, None).expect("spectrum").gap;
    r.check(
        10,
        "idealized fixed point",
        max_entry < 1e-9 && gap > 0.0 && !ss.degeneracy_flag,
        format!(
            "max |rho_ss - |S><S|| entry {max_entry:.1e}, trace norm {dist:.1e}, gap {gap:.3e}"
        ),
    );
}

fn main() -> ExitCode {
    let mut r = Report { failures: 0 };
    println!("acceptance: running 10 criteria");

    let start = Instant::now();
    let op = operating_point();
    criterion_1(&mut r, &op, start.elapsed().as_secs_f64());

    let start = Instant::now();
    let points: Vec<ScalingPoint> =
        scaling_sweep(&C_LIST, &KAPPA_RATIOS, &OptimizeConstraints::default())
            .into_iter()
            .collect::<Result<_, _>>()
            .expect("scaling sweep");
    let elapsed = start.elapsed().as_secs_f64();
    if let Some(p) = points.iter().find(|p| !p.converged) {
        println!(
            "       warning: optimizer hit its sweep cap at C = {}, kappa/gamma = {}",
            p.c, p.kappa_over_gamma
        );
    }
    criteria_2_3_4(&mut r, &points, elapsed);
    criterion_5(&mut r, &op);
    criterion_6(&mut r);
    criterion_7(&mut r, &op);
    criterion_8(&mut r, &points);
    criterion_9(&mut r);
    criterion_10(&mut r);

    println!("acceptance: {} of 10 criteria passed", 10 - r.failures);
    if r.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
