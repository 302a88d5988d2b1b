//! Fixed-step RK4 propagation of the master equation with a Richardson
//! step-halving check at every output time.

use faer::{c64, Col, Mat};

use crate::error::{Error, Result};
use crate::liouvillian::Liouvillian;
use crate::quantum::{unvectorize, DensityMatrix, ZERO};

/// Compressed-row copy of a superoperator; the Lindblad generator is sparse
/// even though it is assembled densely.
#[derive(Clone, Debug)]
pub struct SparseGenerator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<c64>,
}

impl SparseGenerator {
    pub fn from_dense(m: &Mat<c64>) -> Self {
        let n = m.nrows();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != ZERO {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// out = L·x
    pub fn apply_into(&self, x: &[c64], out: &mut [c64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o = acc;
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    /// Initial step is `step_factor / ‖L‖∞`.
    pub step_factor: f64,
    /// Maximum accepted Richardson estimate (max-abs entry) of the error of
    /// a single step at each output time.
    pub local_tol: f64,
    /// Halvings allowed before giving up with [`Error::StepUnderflow`].
    pub max_halvings: u32,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            step_factor: 0.05,
            local_tol: 1e-11,
            max_halvings: 30,
        }
    }
}

struct Rk4 {
    k1: Vec<c64>,
    k2: Vec<c64>,
    k3: Vec<c64>,
    k4: Vec<c64>,
    tmp: Vec<c64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Self {
            k1: vec![ZERO; n],
            k2: vec![ZERO; n],
            k3: vec![ZERO; n],
            k4: vec![ZERO; n],
            tmp: vec![ZERO; n],
        }
    }

    fn step(&mut self, gen: &SparseGenerator, y: &mut [c64], h: f64) {
        let stage = |tmp: &mut [c64], y: &[c64], k: &[c64], s: f64| {
            for ((t, &yi), &ki) in tmp.iter_mut().zip(y).zip(k) {
                *t = yi + ki * s;
            }
        };
        gen.apply_into(y, &mut self.k1);
        stage(&mut self.tmp, y, &self.k1, 0.5 * h);
        gen.apply_into(&self.tmp, &mut self.k2);
        stage(&mut self.tmp, y, &self.k2, 0.5 * h);
        gen.apply_into(&self.tmp, &mut self.k3);
        stage(&mut self.tmp, y, &self.k3, h);
        gen.apply_into(&self.tmp, &mut self.k4);
        let w = h / 6.0;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * w;
        }
    }
}

fn max_diff(a: &[c64], b: &[c64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Step size in use at the end of the run.
    pub final_step: f64,
    pub total_steps: usize,
}

/// ρ(t) = exp(L t) ρ₀ on `t_grid`, which must start at 0 and increase strictly.
pub fn evolve(l: &Liouvillian, rho0: &DensityMatrix, t_grid: &[f64]) -> Result<Vec<DensityMatrix>> {
    Ok(evolve_with(l, rho0, t_grid, EvolveOptions::default())?.states)
}

pub fn evolve_with(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    opts: EvolveOptions,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(t_grid.len());
    let run = evolve_observed(l, rho0, t_grid, opts, |_, rho| {
        states.push(rho.clone());
        false
    })?;
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
        final_step: run.final_step,
        total_steps: run.total_steps,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct RunSummary {
    /// Grid index at which the observer asked to stop, if it did.
    pub stopped_at: Option<usize>,
    pub final_step: f64,
    pub total_steps: usize,
}

/// Propagates along `t_grid`, handing each grid state (including the
/// initial one) to `observe`, which returns `true` to stop early.
pub fn evolve_observed(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    opts: EvolveOptions,
    mut observe: impl FnMut(usize, &DensityMatrix) -> bool,
) -> Result<RunSummary> {
    if rho0.space() != l.space() {
        return Err(Error::SpaceMismatch {
            expected: l.space().factor_dims().to_vec(),
            found: rho0.space().factor_dims().to_vec(),
        });
    }
    match t_grid.first() {
        Some(&0.0) => {}
        _ => return Err(Error::TimeGrid("grid must start at t = 0".into())),
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::TimeGrid("grid must be strictly increasing".into()));
    }

    let gen = SparseGenerator::from_dense(l.matrix());
    let norm = l.norm_inf();
    let mut h_max = if norm > 0.0 {
        opts.step_factor / norm
    } else {
        f64::INFINITY
    };
    let h_floor = if norm > 0.0 {
        opts.step_factor / norm / 2f64.powi(opts.max_halvings as i32)
    } else {
        0.0
    };

    let n = gen.n;
    let mut y: Vec<c64> = {
        let v = rho0.vectorize();
        (0..n).map(|i| v[i]).collect()
    };
    let mut rk = Rk4::new(n);
    let mut total_steps = 0;
    let mut coarse = vec![ZERO; n];
    let mut fine = vec![ZERO; n];
    let summary = |stopped_at, final_step, total_steps| RunSummary {
        stopped_at,
        final_step,
        total_steps,
    };
    if observe(0, rho0) {
        return Ok(summary(Some(0), h_max, 0));
    }

    for (k, w) in t_grid.windows(2).enumerate() {
        let (t0, t1) = (w[0], w[1]);
        let span = t1 - t0;
        loop {
            let steps = if h_max.is_finite() {
                (span / h_max).ceil().max(1.0) as usize
            } else {
                1
            };
            let h = span / steps as f64;
            let mut cur = y.clone();
            let mut last_start = cur.clone();
            for _ in 0..steps {
                last_start.copy_from_slice(&cur);
                rk.step(&gen, &mut cur, h);
            }
            total_steps += steps;

            // Richardson: one step of h against two of h/2 from the start of
            // the final step.
            coarse.copy_from_slice(&last_start);
            rk.step(&gen, &mut coarse, h);
            fine.copy_from_slice(&last_start);
            rk.step(&gen, &mut fine, 0.5 * h);
            rk.step(&gen, &mut fine, 0.5 * h);
            let err = max_diff(&coarse, &fine) / 15.0;
            if err <= opts.local_tol {
                y = cur;
                break;
            }
            h_max = 0.5 * h;
            if h_max < h_floor {
                return Err(Error::StepUnderflow { t: t0, h: h_max });
            }
            log::debug!("halving step to {h_max:.3e} at t = {t0} (estimate {err:.3e})");
        }
        let v = Col::from_fn(n, |i| y[i]);
        let rho = DensityMatrix::new_unchecked(l.space().clone(), unvectorize(&v)?)?;
        if observe(k + 1, &rho) {
            return Ok(summary(Some(k + 1), h_max, total_steps));
        }
    }

    Ok(summary(None, h_max, total_steps))
}

/// `n + 1` evenly spaced points on [0, t_max].
pub fn linear_grid(t_max: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| t_max * k as f64 / n as f64).collect()
}
