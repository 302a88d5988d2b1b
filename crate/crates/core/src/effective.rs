//! Adiabatic elimination of the excited atomic and cavity states.
//!
//! The numeric route evaluates
//!
//! ```text
//! H_eff   = −½ V₋ [H_NH⁻¹ + (H_NH⁻¹)†] V₊ + H_g
//! L_eff,j = Lⱼ H_NH⁻¹ V₊,      H_NH = H₀ − (i/2) Σⱼ Lⱼ†Lⱼ
//! ```
//!
//! with H_NH restricted to the single-excitation manifold and every result
//! projected onto the ground manifold {|00⟩, |01⟩, |10⟩, |11⟩}. The analytic
//! route gives the closed-form rates of the dominant channels.

use faer::{c64, Col, Mat, MatRef};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::liouvillian::{build_liouvillian, Liouvillian};
use crate::model::{
    build_h0, build_hg, build_lindblads, build_vplus, excited_indices, ground_indices, Dissipator,
    ModelParams, LEVEL_0, LEVEL_1,
};
use crate::quantum::{real, HilbertSpace, Operator, I};

/// Above this condition number H_NH is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// The qubit-pair space {|0⟩, |1⟩} ⊗ {|0⟩, |1⟩}.
pub fn qubit_pair_space() -> HilbertSpace {
    HilbertSpace::new(vec![2, 2]).expect("valid")
}

/// |00⟩, |S⟩, |T⟩, |11⟩ on the qubit-pair space.
#[derive(Clone, Debug)]
pub struct QubitPairStates {
    pub s00: Col<c64>,
    pub singlet: Col<c64>,
    pub triplet: Col<c64>,
    pub s11: Col<c64>,
}

impl QubitPairStates {
    pub fn new() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut singlet = Col::zeros(4);
        singlet[1] = real(h);
        singlet[2] = real(-h);
        let mut triplet = Col::zeros(4);
        triplet[1] = real(h);
        triplet[2] = real(h);
        let space = qubit_pair_space();
        Self {
            s00: space.basis_ket(&[0, 0]),
            singlet,
            triplet,
            s11: space.basis_ket(&[1, 1]),
        }
    }
}

impl Default for QubitPairStates {
    fn default() -> Self {
        Self::new()
    }
}

fn submatrix(m: MatRef<'_, c64>, rows: &[usize], cols: &[usize]) -> Mat<c64> {
    Mat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// H_NH on the single-excitation manifold.
#[derive(Clone, Debug)]
pub struct NonHermitianBlock {
    /// Full-space basis indices spanning the block, in block order.
    pub indices: Vec<usize>,
    pub matrix: Mat<c64>,
    pub condition_number: f64,
    /// Norm of H₀ coupling the block to the rest of the space (zero for
    /// this model: H₀ conserves the excitation number).
    pub leakage: f64,
}

impl NonHermitianBlock {
    pub fn as_operator(&self) -> Operator {
        let space = HilbertSpace::new(vec![self.indices.len()]).expect("nonempty");
        Operator::new(space, self.matrix.clone()).expect("square")
    }
}

fn condition_number(m: &Mat<c64>) -> Result<f64> {
    let sv = m
        .singular_values()
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(if min > 0.0 { max / min } else { f64::INFINITY })
}

pub fn non_hermitian_hamiltonian(p: &ModelParams) -> Result<NonHermitianBlock> {
    p.validate()?;
    let space = p.space();
    let indices = excited_indices(&space);
    if indices.is_empty() {
        return Err(Error::InvalidSpace(
            "empty single-excitation manifold".into(),
        ));
    }
    let h0 = build_h0(p);
    let mut full = h0.matrix().clone();
    for j in build_lindblads(p) {
        let ldl = j.op.matrix().adjoint() * j.op.matrix();
        full = &full - &(&ldl * faer::Scale(0.5 * I));
    }
    let matrix = submatrix(full.as_ref(), &indices, &indices);
    let outside: Vec<usize> = (0..space.total_dim())
        .filter(|k| !indices.contains(k))
        .collect();
    let leakage = submatrix(h0.matrix().as_ref(), &outside, &indices).norm_l2();
    let condition_number = condition_number(&matrix)?;
    Ok(NonHermitianBlock {
        indices,
        matrix,
        condition_number,
        leakage,
    })
}

fn inverse_block(block: &NonHermitianBlock) -> Result<Mat<c64>> {
    if !(block.condition_number.is_finite() && block.condition_number <= MAX_CONDITION) {
        return Err(Error::Singular(block.condition_number));
    }
    use faer::linalg::solvers::DenseSolveCore;
    Ok(block.matrix.partial_piv_lu().inverse())
}

#[derive(Clone, Debug)]
pub struct EffectiveJump {
    pub source: Dissipator,
    /// 4×4 operator on the qubit-pair space.
    pub op: Operator,
    /// Norm of the part of Lⱼ H_NH⁻¹ V₊ that lands outside the ground manifold.
    pub truncated_norm: f64,
}

#[derive(Clone, Debug)]
pub struct EffectiveModel {
    pub h_eff: Operator,
    pub l_eff: Vec<EffectiveJump>,
    /// Largest norm dropped by projecting onto the ground manifold.
    pub residual_norm: f64,
}

impl EffectiveModel {
    pub fn jump(&self, source: Dissipator) -> Option<&Operator> {
        self.l_eff
            .iter()
            .find(|j| j.source == source)
            .map(|j| &j.op)
    }

    pub fn liouvillian(&self) -> Result<Liouvillian> {
        let ls: Vec<Operator> = self.l_eff.iter().map(|j| j.op.clone()).collect();
        build_liouvillian(&self.h_eff, &ls)
    }
}

struct Elimination {
    ground: Vec<usize>,
    excited: Vec<usize>,
    /// H_NH⁻¹ on the excited block.
    inverse: Mat<c64>,
    /// V₊ from ground (columns) to excited (rows).
    v_plus: Mat<c64>,
    leakage: f64,
}

fn eliminate(p: &ModelParams) -> Result<Elimination> {
    let block = non_hermitian_hamiltonian(p)?;
    let inverse = inverse_block(&block)?;
    let space = p.space();
    let ground = ground_indices(&space);
    let v_plus = submatrix(build_vplus(p).matrix().as_ref(), &block.indices, &ground);
    Ok(Elimination {
        ground,
        excited: block.indices,
        inverse,
        v_plus,
        leakage: block.leakage,
    })
}

fn on_pair(m: Mat<c64>) -> Operator {
    Operator::new(qubit_pair_space(), m).expect("4x4")
}

fn hamiltonian_from(p: &ModelParams, e: &Elimination) -> Operator {
    let sym = &e.inverse + e.inverse.adjoint();
    let sandwich = e.v_plus.adjoint() * &sym * &e.v_plus;
    let hg = submatrix(build_hg(p).matrix().as_ref(), &e.ground, &e.ground);
    let h = Mat::from_fn(4, 4, |i, j| hg[(i, j)] - 0.5 * sandwich[(i, j)]);
    // Restore exact Hermiticity lost to rounding in the inverse.
    on_pair(crate::quantum::hermitian_part(h.as_ref()))
}

fn jumps_from(p: &ModelParams, e: &Elimination) -> Vec<EffectiveJump> {
    let space = p.space();
    let outside: Vec<usize> = (0..space.total_dim())
        .filter(|k| !e.ground.contains(k))
        .collect();
    let propagated = &e.inverse * &e.v_plus;
    build_lindblads(p)
        .into_iter()
        .map(|j| {
            let lm = j.op.matrix().as_ref();
            let kept = submatrix(lm, &e.ground, &e.excited) * &propagated;
            let dropped = submatrix(lm, &outside, &e.excited) * &propagated;
            EffectiveJump {
                source: j.source,
                op: on_pair(kept),
                truncated_norm: dropped.norm_l2(),
            }
        })
        .collect()
}

/// H_eff on the qubit-pair space.
pub fn effective_hamiltonian(p: &ModelParams) -> Result<Operator> {
    let e = eliminate(p)?;
    Ok(hamiltonian_from(p, &e))
}

/// One effective jump per original dissipator, in build order.
pub fn effective_lindblads(p: &ModelParams) -> Result<Vec<EffectiveJump>> {
    let e = eliminate(p)?;
    Ok(jumps_from(p, &e))
}

pub fn effective_model(p: &ModelParams) -> Result<EffectiveModel> {
    let e = eliminate(p)?;
    let h_eff = hamiltonian_from(p, &e);
    let l_eff = jumps_from(p, &e);
    let residual_norm = l_eff
        .iter()
        .map(|j| j.truncated_norm)
        .fold(e.leakage, f64::max);
    if residual_norm > 0.0 {
        log::debug!("effective operators drop a component of norm {residual_norm:.3e}");
    }
    Ok(EffectiveModel {
        h_eff,
        l_eff,
        residual_norm,
    })
}

/// 16×16 generator of the reduced master equation.
pub fn reduced_liouvillian(p: &ModelParams) -> Result<Liouvillian> {
    effective_model(p)?.liouvillian()
}

/// H = ½Ω_MW(J₊ + J₋) with the single jump √κ_eff |S⟩⟨00|.
pub fn ideal_liouvillian(omega_mw: f64, kappa_eff: f64) -> Result<Liouvillian> {
    let space = qubit_pair_space();
    let mut up = Mat::<c64>::zeros(2, 2);
    up[(1, 0)] = real(1.0);
    let j_plus = &crate::quantum::embed(&up, 0, &space)? + &crate::quantum::embed(&up, 1, &space)?;
    let h = (&j_plus + &j_plus.dagger()).scale_real(0.5 * omega_mw);
    let st = QubitPairStates::new();
    let l = Operator::outer(&space, &st.singlet, &st.s00).scale_real(kappa_eff.sqrt());
    build_liouvillian(&h, &[l])
}

/// Closed-form effective rates of the dominant channels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EffectiveRates {
    /// |00⟩ → |S⟩ through cavity decay.
    pub kappa_eff_1: f64,
    /// |S⟩ → |11⟩ through cavity decay.
    pub kappa_eff_2: f64,
    /// Spontaneous-emission exits from |S⟩: two |S⟩ → |11⟩ channels at
    /// γ_eff/8 followed by two |S⟩ → |T⟩ channels at γ_eff/16. The first pair
    /// comes from decay into |1⟩, the second from decay into |0⟩.
    pub gamma_eff_list: [f64; 4],
    pub g_eff: f64,
    pub gamma_eff: f64,
}

impl EffectiveRates {
    pub fn total_gamma_exit(&self) -> f64 {
        self.gamma_eff_list.iter().sum()
    }
}

pub fn analytic_effective_rates(p: &ModelParams) -> Result<EffectiveRates> {
    let big = p.laser_detuning;
    if big == 0.0 {
        return Err(Error::InvalidParam {
            field: "Delta",
            reason: "laser detuning must be nonzero".into(),
        });
    }
    let (g, kappa, gamma, delta) = (p.g, p.kappa, p.gamma, p.cavity_detuning);
    let g_eff = g * p.omega / big;
    let width = kappa / 2.0 + gamma * delta / (2.0 * big);
    let shift = g * g / big;
    let lorentz =
        |detuning: f64| g_eff * g_eff * (kappa / 2.0) / (detuning * detuning + width * width);
    let gamma_eff = gamma * p.omega * p.omega / (2.0 * big * big);
    Ok(EffectiveRates {
        kappa_eff_1: lorentz(shift - delta),
        kappa_eff_2: lorentz(2.0 * shift - delta),
        gamma_eff_list: [
            gamma_eff / 8.0,
            gamma_eff / 8.0,
            gamma_eff / 16.0,
            gamma_eff / 16.0,
        ],
        g_eff,
        gamma_eff,
    })
}

/// One numeric-vs-analytic amplitude comparison.
#[derive(Clone, Debug, Serialize)]
pub struct CoefficientRow {
    pub channel: String,
    pub transition: &'static str,
    pub numeric: f64,
    pub analytic: f64,
    pub relative_error: f64,
}

/// |⟨bra| L |ket⟩| for the dominant channels of each dissipator against the
/// square roots of [`analytic_effective_rates`].
pub fn coefficient_table(p: &ModelParams) -> Result<Vec<CoefficientRow>> {
    let model = effective_model(p)?;
    let rates = analytic_effective_rates(p)?;
    let st = QubitPairStates::new();
    let mut rows = Vec::new();
    let mut push = |channel: String, transition: &'static str, numeric: f64, analytic: f64| {
        rows.push(CoefficientRow {
            channel,
            transition,
            numeric,
            analytic,
            relative_error: (numeric - analytic).abs() / analytic,
        });
    };
    for j in &model.l_eff {
        match j.source {
            Dissipator::CavityDecay => {
                push(
                    j.source.label(),
                    "S<-00",
                    j.op.element(&st.singlet, &st.s00).norm(),
                    rates.kappa_eff_1.sqrt(),
                );
                push(
                    j.source.label(),
                    "11<-S",
                    j.op.element(&st.s11, &st.singlet).norm(),
                    rates.kappa_eff_2.sqrt(),
                );
            }
            Dissipator::Emission { to, .. } if to == LEVEL_1 => push(
                j.source.label(),
                "11<-S",
                j.op.element(&st.s11, &st.singlet).norm(),
                rates.gamma_eff_list[0].sqrt(),
            ),
            Dissipator::Emission { to, .. } => {
                debug_assert_eq!(to, LEVEL_0);
                push(
                    j.source.label(),
                    "T<-S",
                    j.op.element(&st.triplet, &st.singlet).norm(),
                    rates.gamma_eff_list[2].sqrt(),
                )
            }
        }
    }
    Ok(rows)
}

/// Largest relative error over [`coefficient_table`].
pub fn max_coefficient_mismatch(p: &ModelParams) -> Result<f64> {
    Ok(coefficient_table(p)?
        .iter()
        .map(|r| r.relative_error)
        .fold(0.0, f64::max))
}
