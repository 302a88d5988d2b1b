//! Two Λ atoms in a detuned, lossy cavity.
//!
//! Atomic levels are indexed `0 = |0⟩`, `1 = |1⟩`, `2 = |e⟩`; the factor order
//! is (atom1, atom2, cavity). All rates and detunings are in units of γ.

use faer::{c64, Col, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{annihilation, embed, real, transition, HilbertSpace, Operator, ONE};

pub const LEVEL_0: usize = 0;
pub const LEVEL_1: usize = 1;
pub const LEVEL_E: usize = 2;
pub const ATOM_LEVELS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Atom–cavity coupling.
    pub g: f64,
    pub kappa: f64,
    #[serde(default = "unit_gamma")]
    pub gamma: f64,
    /// Optical drive on |0⟩ ↔ |e⟩.
    #[serde(rename = "Omega")]
    pub omega: f64,
    /// Microwave drive on |0⟩ ↔ |1⟩.
    #[serde(rename = "Omega_MW")]
    pub omega_mw: f64,
    /// Laser detuning Δ.
    #[serde(rename = "Delta")]
    pub laser_detuning: f64,
    /// Cavity detuning δ from two-photon resonance.
    #[serde(rename = "delta")]
    pub cavity_detuning: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

fn unit_gamma() -> f64 {
    1.0
}

fn default_n_max() -> usize {
    2
}

pub const DEFAULT_N_MAX: usize = 2;

impl ModelParams {
    /// Parameters at fixed cooperativity `C = g²/(κγ)` with γ = 1, the
    /// detunings at the analytic optimum γ = κΔ²/(2g²), δ = g²/Δ, and the
    /// drives at Ω = g/20, Ω_MW = 2Ω/5.
    pub fn at_cooperativity(c: f64, kappa_over_gamma: f64) -> Self {
        let gamma = 1.0;
        let kappa = kappa_over_gamma * gamma;
        let g = (c * kappa * gamma).sqrt();
        let laser_detuning = g * (2.0 * gamma / kappa).sqrt();
        let omega = g / 20.0;
        Self {
            g,
            kappa,
            gamma,
            omega,
            omega_mw: 0.4 * omega,
            laser_detuning,
            cavity_detuning: g * g / laser_detuning,
            n_max: DEFAULT_N_MAX,
        }
    }

    pub fn cooperativity(&self) -> f64 {
        self.g * self.g / (self.kappa * self.gamma)
    }

    /// Dispersive line shift g²/Δ of the cavity per atom in |1⟩.
    pub fn line_shift(&self) -> f64 {
        self.g * self.g / self.laser_detuning
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn with_detunings(mut self, laser: f64, cavity: f64) -> Self {
        self.laser_detuning = laser;
        self.cavity_detuning = cavity;
        self
    }

    pub fn with_drives(mut self, omega: f64, omega_mw: f64) -> Self {
        self.omega = omega;
        self.omega_mw = omega_mw;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("g", self.g), ("kappa", self.kappa), ("gamma", self.gamma)];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParam {
                    field,
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        let nonneg = [("Omega", self.omega), ("Omega_MW", self.omega_mw)];
        for (field, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParam {
                    field,
                    reason: format!("must be non-negative, got {v}"),
                });
            }
        }
        let finite = [
            ("Delta", self.laser_detuning),
            ("delta", self.cavity_detuning),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidParam {
                    field,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        if self.n_max < 1 {
            return Err(Error::InvalidParam {
                field: "n_max",
                reason: "cavity truncation must keep at least one photon".into(),
            });
        }
        Ok(())
    }

    pub fn space(&self) -> HilbertSpace {
        HilbertSpace::atoms_and_cavity(self.n_max)
    }
}

fn atom_op(space: &HilbertSpace, atom: usize, row: usize, col: usize) -> Operator {
    embed(&transition(ATOM_LEVELS, row, col), atom, space).expect("atom factor exists")
}

fn cavity_annihilation(space: &HilbertSpace) -> Operator {
    let n_max = space.factor_dims()[2] - 1;
    embed(&annihilation(n_max), 2, space).expect("cavity factor exists")
}

/// δ a†a + Δ Σₖ|e⟩ₖ⟨e| + g Σₖ(|e⟩ₖ⟨1| a + h.c.)
pub fn build_h0(p: &ModelParams) -> Operator {
    let space = p.space();
    let a = cavity_annihilation(&space);
    let ad = a.dagger();
    let mut h = (&ad * &a).scale_real(p.cavity_detuning);
    for atom in 0..2 {
        h = &h + &atom_op(&space, atom, LEVEL_E, LEVEL_E).scale_real(p.laser_detuning);
        let raise = &atom_op(&space, atom, LEVEL_E, LEVEL_1) * &a;
        let jc = &raise + &raise.dagger();
        h = &h + &jc.scale_real(p.g);
    }
    h
}

/// Ω_MW/2 Σₖ(|1⟩ₖ⟨0| + h.c.)
pub fn build_hg(p: &ModelParams) -> Operator {
    let space = p.space();
    let mut h = Operator::zeros(&space);
    for atom in 0..2 {
        let up = atom_op(&space, atom, LEVEL_1, LEVEL_0);
        h = &h + &(&up + &up.dagger()).scale_real(0.5 * p.omega_mw);
    }
    h
}

/// Ω/2 (|e⟩₁⟨0| − |e⟩₂⟨0|); the relative sign is the π phase of the pump.
pub fn build_vplus(p: &ModelParams) -> Operator {
    let space = p.space();
    let v1 = atom_op(&space, 0, LEVEL_E, LEVEL_0);
    let v2 = atom_op(&space, 1, LEVEL_E, LEVEL_0);
    (&v1 - &v2).scale_real(0.5 * p.omega)
}

pub fn build_vminus(p: &ModelParams) -> Operator {
    build_vplus(p).dagger()
}

/// H = H₀ + H_g + V₊ + V₋
pub fn build_hamiltonian(p: &ModelParams) -> Operator {
    let vp = build_vplus(p);
    let v = &vp + &vp.dagger();
    &(&build_h0(p) + &build_hg(p)) + &v
}

/// Source channel of a jump operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dissipator {
    CavityDecay,
    /// Spontaneous emission of `atom` (0 or 1) from |e⟩ into level `to`.
    Emission {
        atom: usize,
        to: usize,
    },
}

impl Dissipator {
    /// Build order of [`build_lindblads`].
    pub const ALL: [Dissipator; 5] = [
        Dissipator::CavityDecay,
        Dissipator::Emission {
            atom: 0,
            to: LEVEL_0,
        },
        Dissipator::Emission {
            atom: 1,
            to: LEVEL_0,
        },
        Dissipator::Emission {
            atom: 0,
            to: LEVEL_1,
        },
        Dissipator::Emission {
            atom: 1,
            to: LEVEL_1,
        },
    ];

    pub fn label(&self) -> String {
        match self {
            Dissipator::CavityDecay => "kappa".into(),
            Dissipator::Emission { atom, to } => format!("gamma_{}_to_{}", atom + 1, to),
        }
    }
}

#[derive(Clone, Debug)]
pub struct JumpOperator {
    pub source: Dissipator,
    pub op: Operator,
}

/// [√κ a, √(γ/2)|0⟩₁⟨e|, √(γ/2)|0⟩₂⟨e|, √(γ/2)|1⟩₁⟨e|, √(γ/2)|1⟩₂⟨e|]
pub fn build_lindblads(p: &ModelParams) -> Vec<JumpOperator> {
    let space = p.space();
    let branch = (0.5 * p.gamma).sqrt();
    Dissipator::ALL
        .iter()
        .map(|&source| {
            let op = match source {
                Dissipator::CavityDecay => cavity_annihilation(&space).scale_real(p.kappa.sqrt()),
                Dissipator::Emission { atom, to } => {
                    atom_op(&space, atom, to, LEVEL_E).scale_real(branch)
                }
            };
            JumpOperator { source, op }
        })
        .collect()
}

pub fn lindblad_operators(p: &ModelParams) -> Vec<Operator> {
    build_lindblads(p).into_iter().map(|j| j.op).collect()
}

/// Basis indices of the ground manifold {|00⟩, |01⟩, |10⟩, |11⟩} ⊗ |0⟩, in that order.
pub fn ground_indices(space: &HilbertSpace) -> Vec<usize> {
    let mut out = Vec::with_capacity(4);
    for a in [LEVEL_0, LEVEL_1] {
        for b in [LEVEL_0, LEVEL_1] {
            out.push(space.index(&[a, b, 0]));
        }
    }
    out
}

/// Basis indices of the single-excitation manifold: one atom in |e⟩ with an
/// empty cavity, or both atoms in {|0⟩, |1⟩} with one photon.
pub fn excited_indices(space: &HilbertSpace) -> Vec<usize> {
    let mut out = Vec::with_capacity(8);
    for k in 0..space.total_dim() {
        let l = space.levels(k);
        let excited_atoms = l[..2].iter().filter(|&&x| x == LEVEL_E).count();
        if (excited_atoms == 1 && l[2] == 0) || (excited_atoms == 0 && l[2] == 1) {
            out.push(k);
        }
    }
    out
}

fn projector(space: &HilbertSpace, indices: &[usize]) -> Operator {
    let mut m = Mat::zeros(space.total_dim(), space.total_dim());
    for &k in indices {
        m[(k, k)] = ONE;
    }
    Operator::new(space.clone(), m).expect("square")
}

/// (P_g, P_e)
pub fn ground_excited_projectors(p: &ModelParams) -> (Operator, Operator) {
    let space = p.space();
    (
        projector(&space, &ground_indices(&space)),
        projector(&space, &excited_indices(&space)),
    )
}

/// Reference two-atom states, both on the 9-dimensional atomic space and
/// embedded in the full space with an empty cavity.
#[derive(Clone, Debug)]
pub struct AtomicStates {
    pub atomic_space: HilbertSpace,
    pub full_space: HilbertSpace,
    pub s00: Col<c64>,
    pub s11: Col<c64>,
    pub singlet: Col<c64>,
    pub triplet: Col<c64>,
}

impl AtomicStates {
    pub fn new(n_max: usize) -> Self {
        let atomic_space = HilbertSpace::new(vec![ATOM_LEVELS, ATOM_LEVELS]).expect("valid");
        let ket = |a, b| atomic_space.basis_ket(&[a, b]);
        let h = real(std::f64::consts::FRAC_1_SQRT_2);
        let k01 = ket(LEVEL_0, LEVEL_1);
        let k10 = ket(LEVEL_1, LEVEL_0);
        let singlet = Col::from_fn(9, |i| h * (k01[i] - k10[i]));
        let triplet = Col::from_fn(9, |i| h * (k01[i] + k10[i]));
        Self {
            s00: ket(LEVEL_0, LEVEL_0),
            s11: ket(LEVEL_1, LEVEL_1),
            singlet,
            triplet,
            full_space: HilbertSpace::atoms_and_cavity(n_max),
            atomic_space,
        }
    }

    /// Lift a 9-dim atomic vector to the full space with zero photons.
    pub fn embed_vacuum(&self, atomic: &Col<c64>) -> Col<c64> {
        let dc = self.full_space.factor_dims()[2];
        let mut v = Col::zeros(self.full_space.total_dim());
        for i in 0..atomic.nrows() {
            v[i * dc] = atomic[i];
        }
        v
    }

    /// The four states in the order (S, T, 00, 11).
    pub fn ordered(&self) -> [&Col<c64>; 4] {
        [&self.singlet, &self.triplet, &self.s00, &self.s11]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::ZERO;
    use approx::assert_abs_diff_eq;

    fn params() -> ModelParams {
        ModelParams {
            g: 3.0,
            kappa: 0.7,
            gamma: 1.0,
            omega: 0.4,
            omega_mw: 0.25,
            laser_detuning: 6.0,
            cavity_detuning: 1.5,
            n_max: 2,
        }
    }

    fn idx(p: &ModelParams, l: [usize; 3]) -> usize {
        p.space().index(&l)
    }

    #[test]
    fn h0_entries() {
        let mut p = params();
        p.g = 0.0;
        let h = build_h0(&p);
        for i in 0..27 {
            for j in 0..27 {
                if i != j {
                    assert_eq!(h.get(i, j), ZERO);
                }
            }
        }
        let e00 = idx(&p, [LEVEL_E, 0, 0]);
        assert_eq!(h.get(e00, e00), real(p.laser_detuning));
        let p = params();
        let h = build_h0(&p);
        let n1 = idx(&p, [0, 0, 1]);
        assert_eq!(h.get(n1, n1), real(p.cavity_detuning));
        assert_eq!(
            h.get(idx(&p, [LEVEL_E, 0, 0]), idx(&p, [LEVEL_1, 0, 1])),
            real(p.g)
        );
        assert!(h.hermiticity_error() < 1e-12);
    }

    #[test]
    fn hg_entries() {
        let p = params();
        let h = build_hg(&p);
        assert_eq!(
            h.get(idx(&p, [1, 0, 0]), idx(&p, [0, 0, 0])),
            real(p.omega_mw / 2.0)
        );
        assert!(h.hermiticity_error() < 1e-12);
        let mut q = p;
        q.omega_mw = 0.0;
        assert_eq!(build_hg(&q).max_abs(), 0.0);
        let st = AtomicStates::new(p.n_max);
        let s = st.embed_vacuum(&st.singlet);
        assert!(h.apply(&s).norm_l2() < 1e-15);
    }

    #[test]
    fn vplus_entries() {
        let p = params();
        let v = build_vplus(&p);
        let g0 = idx(&p, [0, 0, 0]);
        assert_eq!(v.get(idx(&p, [LEVEL_E, 0, 0]), g0), real(p.omega / 2.0));
        assert_eq!(v.get(idx(&p, [0, LEVEL_E, 0]), g0), real(-p.omega / 2.0));
        let k11 = p.space().basis_ket(&[1, 1, 0]);
        assert_eq!(v.apply(&k11).norm_l2(), 0.0);
        // V₊² annihilates every low-excitation state with at most one atom in
        // |0⟩; with both atoms in |0⟩ both get pumped.
        let space = p.space();
        let v2 = &v * &v;
        for k in ground_indices(&space)
            .into_iter()
            .chain(excited_indices(&space))
        {
            let l = space.levels(k);
            let e = space.basis_ket(&l);
            let zeros = l[..2].iter().filter(|&&x| x == LEVEL_0).count();
            assert_eq!(v2.apply(&e).norm_l2() == 0.0, zeros < 2, "{l:?}");
        }
        let out = v2.apply(&space.basis_ket(&[0, 0, 0]));
        let ee = idx(&p, [LEVEL_E, LEVEL_E, 0]);
        assert_abs_diff_eq!(out[ee].re, -p.omega * p.omega / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.norm_l2(), p.omega * p.omega / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn lindblad_cases() {
        let p = params();
        let ls = build_lindblads(&p);
        assert_eq!(ls.len(), 5);
        let space = p.space();
        let v = ls[0].op.apply(&space.basis_ket(&[0, 0, 1]));
        assert_abs_diff_eq!(v[idx(&p, [0, 0, 0])].re, p.kappa.sqrt(), epsilon = 1e-15);

        let mut sum = Operator::zeros(&space);
        for j in &ls[1..] {
            sum = &sum + &(&j.op.dagger() * &j.op);
        }
        let ee = &atom_op(&space, 0, LEVEL_E, LEVEL_E) + &atom_op(&space, 1, LEVEL_E, LEVEL_E);
        let expected = ee.scale_real(p.gamma);
        assert!((&sum - &expected).max_abs() < 1e-15);

        for k in ground_indices(&space) {
            let e = space.basis_ket(&space.levels(k));
            for j in &ls {
                assert_eq!(j.op.apply(&e).norm_l2(), 0.0);
            }
        }
    }

    #[test]
    fn projectors() {
        let p = params();
        let (pg, pe) = ground_excited_projectors(&p);
        let space = p.space();
        let k = space.basis_ket(&[0, 0, 0]);
        assert_eq!(pg.apply(&k), k);
        assert_eq!(pg.apply(&space.basis_ket(&[LEVEL_E, 0, 0])).norm_l2(), 0.0);
        assert_eq!(pg.trace(), real(4.0));
        assert_eq!(pe.trace(), real(8.0));
        assert_eq!((&pg * &pe).max_abs(), 0.0);
        let sum = &pg + &pe;
        assert!((&sum - &Operator::identity(&space)).max_abs() > 0.5);
    }

    #[test]
    fn atomic_states_orthonormal() {
        let st = AtomicStates::new(2);
        let states = st.ordered();
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate() {
                let ip: c64 = (0..9).map(|k| a[k].conj() * b[k]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ip.re, expected, epsilon = 1e-15);
                assert_abs_diff_eq!(ip.im, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn params_validation() {
        let mut p = params();
        assert!(p.validate().is_ok());
        p.kappa = -1.0;
        match p.validate() {
            Err(Error::InvalidParam { field, .. }) => assert_eq!(field, "kappa"),
            other => panic!("unexpected {other:?}"),
        }
        let mut p = params();
        p.n_max = 0;
        assert!(p.validate().is_err());
        let p = ModelParams::at_cooperativity(50.0, 0.5);
        assert_abs_diff_eq!(p.cooperativity(), 50.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.g, 5.0, epsilon = 1e-12);
    }
}
