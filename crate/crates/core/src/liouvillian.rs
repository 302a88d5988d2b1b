//! Lindblad generator as a superoperator on column-stacked density matrices,
//! with steady states, spectra and spectral gaps.

use faer::linalg::solvers::Solve;
use faer::{c64, Col, Mat};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, lindblad_operators, AtomicStates, ModelParams};
use crate::quantum::{
    hermitian_part, partial_trace_cavity, unvectorize, vectorize, DensityMatrix, HilbertSpace,
    Operator, I, ONE, ZERO,
};

/// Tolerance on the Hamiltonian's Hermiticity accepted by [`build_liouvillian`].
pub const HERMITIAN_INPUT_TOL: f64 = 1e-9;
/// Default modulus below which a second eigenvalue marks a degenerate steady state.
pub const DEFAULT_STEADY_TOL: f64 = 1e-9;
/// Default relative threshold separating zero modes from slow modes.
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Liouvillian {
    space: HilbertSpace,
    matrix: Mat<c64>,
    hamiltonian: Operator,
    lindblads: Vec<Operator>,
}

impl Liouvillian {
    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.matrix
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn lindblads(&self) -> &[Operator] {
        &self.lindblads
    }

    /// Hilbert-space dimension D (the superoperator is D² × D²).
    pub fn hilbert_dim(&self) -> usize {
        self.space.total_dim()
    }

    /// L·vec(ρ), reshaped.
    pub fn apply(&self, rho: &Mat<c64>) -> Mat<c64> {
        let v = &self.matrix * vectorize(rho.as_ref());
        unvectorize(&v).expect("square by construction")
    }

    /// Max absolute row sum ‖L‖∞.
    pub fn norm_inf(&self) -> f64 {
        let m = &self.matrix;
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// max_j |Σᵢ L[(i·D + i), j]|, i.e. the deviation of vec(I)†·L from zero.
    pub fn trace_preservation_error(&self) -> f64 {
        let d = self.hilbert_dim();
        let m = &self.matrix;
        (0..m.ncols())
            .map(|j| (0..d).map(|i| m[(i + i * d, j)]).sum::<c64>().norm())
            .fold(0.0, f64::max)
    }
}

/// L = −i(I ⊗ H_nh) + i(H_nh* ⊗ I) + Σⱼ Lⱼ* ⊗ Lⱼ, with H_nh = H − (i/2)Σⱼ Lⱼ†Lⱼ.
///
/// Acting on vec(ρ) this is −i[H, ρ] + Σⱼ (LⱼρLⱼ† − ½{Lⱼ†Lⱼ, ρ}).
pub fn build_liouvillian(h: &Operator, ls: &[Operator]) -> Result<Liouvillian> {
    let space = h.space().clone();
    for l in ls {
        l.check_space(&space)?;
    }
    let herm = h.hermiticity_error();
    if herm > HERMITIAN_INPUT_TOL {
        return Err(Error::NonHermitian(herm));
    }
    let d = space.total_dim();
    let mut h_nh = h.matrix().clone();
    for l in ls {
        let ldl = l.matrix().adjoint() * l.matrix();
        for j in 0..d {
            for i in 0..d {
                h_nh[(i, j)] -= 0.5 * I * ldl[(i, j)];
            }
        }
    }

    let n = d * d;
    let mut m = Mat::<c64>::zeros(n, n);
    // −i (I ⊗ H_nh): block-diagonal copies acting on the row index.
    // +i (conj(H_nh) ⊗ I): acts on the column index.
    for a in 0..d {
        for b in 0..d {
            let hv = h_nh[(a, b)];
            if hv == ZERO {
                continue;
            }
            for blk in 0..d {
                m[(blk * d + a, blk * d + b)] -= I * hv;
                m[(a * d + blk, b * d + blk)] += I * hv.conj();
            }
        }
    }
    for l in ls {
        let lm = l.matrix();
        let nz: Vec<(usize, usize, c64)> = (0..d)
            .flat_map(|j| (0..d).map(move |i| (i, j)))
            .filter_map(|(i, j)| {
                let v = lm[(i, j)];
                (v != ZERO).then_some((i, j, v))
            })
            .collect();
        for &(a1, a2, va) in &nz {
            for &(b1, b2, vb) in &nz {
                m[(a1 * d + b1, a2 * d + b2)] += va.conj() * vb;
            }
        }
    }

    Ok(Liouvillian {
        space,
        matrix: m,
        hamiltonian: h.clone(),
        lindblads: ls.to_vec(),
    })
}

/// Generator of the full atoms-plus-cavity model.
pub fn model_liouvillian(p: &ModelParams) -> Result<Liouvillian> {
    p.validate()?;
    build_liouvillian(&build_hamiltonian(p), &lindblad_operators(p))
}

#[derive(Clone, Debug)]
pub struct SteadyStateResult {
    pub rho_ss: DensityMatrix,
    /// |λ| of the eigenvalue whose eigenvector was taken.
    pub residual_eigenvalue: f64,
    /// A second eigenvalue lies within `tol` of zero.
    pub degeneracy_flag: bool,
}

fn normalize_state(m: &Mat<c64>) -> Option<Mat<c64>> {
    let herm = hermitian_part(m.as_ref());
    let tr: c64 = (0..herm.nrows()).map(|i| herm[(i, i)]).sum();
    if tr.norm() < 1e-300 {
        return None;
    }
    let s = tr.re.recip();
    Some(Mat::from_fn(herm.nrows(), herm.ncols(), |i, j| {
        herm[(i, j)] * s
    }))
}

/// Steady state from the eigenvector of the eigenvalue of smallest modulus.
pub fn steady_state(l: &Liouvillian, tol: f64) -> Result<SteadyStateResult> {
    let evd = l
        .matrix
        .eigen()
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..s.nrows()).collect();
    order.sort_by(|&a, &b| s[a].norm().total_cmp(&s[b].norm()));
    let first = order[0];
    let degenerate = order.len() > 1 && s[order[1]].norm() < tol;

    // With a degenerate null space, any single eigenvector may be nearly
    // traceless; take the near-zero mode with the largest trace.
    let candidates: Vec<usize> = if degenerate {
        order
            .iter()
            .copied()
            .take_while(|&k| s[k].norm() < tol)
            .collect()
    } else {
        vec![first]
    };
    let d = l.hilbert_dim();
    let trace_of = |k: usize| -> f64 { (0..d).map(|i| u[(i + i * d, k)]).sum::<c64>().norm() };
    let chosen = candidates
        .iter()
        .copied()
        .max_by(|&a, &b| trace_of(a).total_cmp(&trace_of(b)))
        .unwrap_or(first);

    let v = Col::from_fn(u.nrows(), |i| u[(i, chosen)]);
    let m = unvectorize(&v)?;
    let rho = normalize_state(&m)
        .ok_or_else(|| Error::Eigensolver("null vector has zero trace".into()))?;
    Ok(SteadyStateResult {
        rho_ss: DensityMatrix::new_unchecked(l.space.clone(), rho)?,
        residual_eigenvalue: s[chosen].norm(),
        degeneracy_flag: degenerate,
    })
}

/// Steady state from one LU solve of L with its first row replaced by the
/// trace functional. Assumes a unique steady state; much cheaper than
/// [`steady_state`] and used inside optimization loops.
pub fn steady_state_direct(l: &Liouvillian) -> Result<DensityMatrix> {
    let d = l.hilbert_dim();
    let n = d * d;
    let mut a = l.matrix.clone();
    for j in 0..n {
        a[(0, j)] = ZERO;
    }
    for i in 0..d {
        a[(0, i + i * d)] = ONE;
    }
    let mut rhs = Mat::<c64>::zeros(n, 1);
    rhs[(0, 0)] = ONE;
    let lu = a.partial_piv_lu();
    lu.solve_in_place(&mut rhs);
    if !(0..n).all(|i| rhs[(i, 0)].re.is_finite() && rhs[(i, 0)].im.is_finite()) {
        return Err(Error::Singular(f64::INFINITY));
    }
    let v = Col::from_fn(n, |i| rhs[(i, 0)]);
    let m = unvectorize(&v)?;
    let rho = normalize_state(&m).ok_or(Error::Singular(f64::INFINITY))?;
    DensityMatrix::new_unchecked(l.space.clone(), rho)
}

/// ‖unvectorize(L·vec(ρ))‖_max
pub fn steady_state_residual(l: &Liouvillian, rho: &DensityMatrix) -> f64 {
    crate::quantum::max_abs(l.apply(rho.matrix()).as_ref())
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<c64>,
    /// −max{Re λ : |λ| > threshold}, or 0 if every eigenvalue is below it.
    pub gap: f64,
    pub zero_threshold: f64,
}

/// Full spectrum and gap. `zero_threshold` is relative to max|λ|; `None`
/// selects [`DEFAULT_ZERO_THRESHOLD`].
pub fn spectrum_and_gap(l: &Liouvillian, zero_threshold: Option<f64>) -> Result<SpectrumResult> {
    let eigenvalues = l
        .matrix
        .eigenvalues()
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    Ok(gap_from_eigenvalues(
        eigenvalues,
        zero_threshold.unwrap_or(DEFAULT_ZERO_THRESHOLD),
    ))
}

pub fn gap_from_eigenvalues(eigenvalues: Vec<c64>, relative_threshold: f64) -> SpectrumResult {
    let scale = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let threshold = relative_threshold * scale;
    let gap = eigenvalues
        .iter()
        .filter(|z| z.norm() > threshold)
        .map(|z| -z.re)
        .fold(f64::INFINITY, f64::min);
    SpectrumResult {
        eigenvalues,
        gap: if gap.is_finite() { gap.max(0.0) } else { 0.0 },
        zero_threshold: threshold,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Populations {
    pub singlet: f64,
    pub triplet: f64,
    pub p00: f64,
    pub p11: f64,
}

impl Populations {
    pub fn sum(&self) -> f64 {
        self.singlet + self.triplet + self.p00 + self.p11
    }
}

/// (P_S, P_T, P_00, P_11) of the cavity-traced state.
pub fn populations(rho: &DensityMatrix, states: &AtomicStates) -> Result<Populations> {
    let atoms = partial_trace_cavity(rho)?;
    let p = |psi: &Col<c64>| atoms.expectation(psi);
    Ok(Populations {
        singlet: p(&states.singlet),
        triplet: p(&states.triplet),
        p00: p(&states.s00),
        p11: p(&states.s11),
    })
}

/// ⟨S| Tr_cav ρ |S⟩
pub fn singlet_fidelity(rho: &DensityMatrix, states: &AtomicStates) -> Result<f64> {
    Ok(partial_trace_cavity(rho)?.expectation(&states.singlet))
}
