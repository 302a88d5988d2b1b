//! Dense complex operators on tensor-product Hilbert spaces.
//!
//! Factor ordering is fixed as (atom1, atom2, cavity) throughout the crate;
//! the left-most factor varies slowest in the flat basis index. Density
//! matrices are vectorized by stacking columns, so `vec(ρ)[i + j·D] = ρ[i, j]`
//! and `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`.

use std::ops::{Add, Mul, Neg, Sub};

use faer::{c64, Col, Mat, MatRef, Side};

use crate::error::{Error, Result};

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

pub fn real(x: f64) -> c64 {
    c64::new(x, 0.0)
}

/// Ordered tensor factors of a Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    factor_dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(factor_dims: Vec<usize>) -> Result<Self> {
        if factor_dims.is_empty() {
            return Err(Error::InvalidSpace("no factors".into()));
        }
        if let Some(d) = factor_dims.iter().find(|&&d| d == 0) {
            return Err(Error::InvalidSpace(format!("factor dimension {d}")));
        }
        Ok(Self { factor_dims })
    }

    /// atom1 ⊗ atom2 ⊗ cavity with three atomic levels and `n_max + 1` Fock states.
    pub fn atoms_and_cavity(n_max: usize) -> Self {
        Self {
            factor_dims: vec![3, 3, n_max + 1],
        }
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn num_factors(&self) -> usize {
        self.factor_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.factor_dims.iter().product()
    }

    pub fn tensor(&self, other: &HilbertSpace) -> HilbertSpace {
        let mut dims = self.factor_dims.clone();
        dims.extend_from_slice(&other.factor_dims);
        HilbertSpace { factor_dims: dims }
    }

    /// The space with the last factor traced out.
    pub fn without_last(&self) -> Result<HilbertSpace> {
        if self.factor_dims.len() < 2 {
            return Err(Error::InvalidSpace(
                "cannot trace out the only factor".into(),
            ));
        }
        HilbertSpace::new(self.factor_dims[..self.factor_dims.len() - 1].to_vec())
    }

    /// Flat basis index of a product state given one level per factor.
    pub fn index(&self, levels: &[usize]) -> usize {
        assert_eq!(
            levels.len(),
            self.factor_dims.len(),
            "wrong number of levels"
        );
        levels
            .iter()
            .zip(&self.factor_dims)
            .fold(0, |acc, (&l, &d)| {
                assert!(l < d, "level {l} out of range for factor of dimension {d}");
                acc * d + l
            })
    }

    /// Inverse of [`HilbertSpace::index`].
    pub fn levels(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factor_dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.factor_dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    pub fn basis_ket(&self, levels: &[usize]) -> Col<c64> {
        let mut v = Col::zeros(self.total_dim());
        v[self.index(levels)] = ONE;
        v
    }
}

/// Dense square matrix tagged with the space it acts on.
#[derive(Clone, Debug)]
pub struct Operator {
    space: HilbertSpace,
    matrix: Mat<c64>,
}

fn check_square(m: MatRef<'_, c64>, expected: usize) -> Result<()> {
    if m.nrows() != expected || m.ncols() != expected {
        return Err(Error::Shape {
            rows: m.nrows(),
            cols: m.ncols(),
            expected,
        });
    }
    Ok(())
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: Mat<c64>) -> Result<Self> {
        check_square(matrix.as_ref(), space.total_dim())?;
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: &HilbertSpace) -> Self {
        let d = space.total_dim();
        Self {
            space: space.clone(),
            matrix: Mat::zeros(d, d),
        }
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        let d = space.total_dim();
        Self {
            space: space.clone(),
            matrix: Mat::identity(d, d),
        }
    }

    pub fn from_fn(space: &HilbertSpace, f: impl FnMut(usize, usize) -> c64) -> Self {
        let d = space.total_dim();
        Self {
            space: space.clone(),
            matrix: Mat::from_fn(d, d, f),
        }
    }

    /// Single-factor operator from a square matrix.
    pub fn single(matrix: Mat<c64>) -> Self {
        let space = HilbertSpace {
            factor_dims: vec![matrix.nrows()],
        };
        assert_eq!(matrix.nrows(), matrix.ncols(), "operator must be square");
        Self { space, matrix }
    }

    /// |ket⟩⟨bra| for two vectors on `space`.
    pub fn outer(space: &HilbertSpace, ket: &Col<c64>, bra: &Col<c64>) -> Self {
        Self::from_fn(space, |i, j| ket[i] * bra[j].conj())
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat<c64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> c64 {
        self.matrix[(row, col)]
    }

    pub fn dagger(&self) -> Operator {
        Operator {
            space: self.space.clone(),
            matrix: self.matrix.adjoint().to_owned(),
        }
    }

    pub fn kron(&self, other: &Operator) -> Operator {
        kron(self, other)
    }

    pub fn scale(&self, s: c64) -> Operator {
        Operator {
            space: self.space.clone(),
            matrix: Mat::from_fn(self.dim(), self.dim(), |i, j| s * self.matrix[(i, j)]),
        }
    }

    pub fn scale_real(&self, s: f64) -> Operator {
        self.scale(real(s))
    }

    pub fn apply(&self, v: &Col<c64>) -> Col<c64> {
        &self.matrix * v
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    /// ⟨bra| self |ket⟩
    pub fn element(&self, bra: &Col<c64>, ket: &Col<c64>) -> c64 {
        let v = self.apply(ket);
        (0..v.nrows()).map(|i| bra[i].conj() * v[i]).sum()
    }

    /// Largest entrywise |A − A†|.
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(self.matrix.as_ref())
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(self.matrix.as_ref())
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        &(self * other) - &(other * self)
    }

    fn assert_same_space(&self, other: &Operator) {
        assert_eq!(
            self.space, other.space,
            "operators act on different Hilbert spaces"
        );
    }

    pub fn check_space(&self, space: &HilbertSpace) -> Result<()> {
        if &self.space != space {
            return Err(Error::SpaceMismatch {
                expected: space.factor_dims.clone(),
                found: self.space.factor_dims.clone(),
            });
        }
        Ok(())
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.assert_same_space(rhs);
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.assert_same_space(rhs);
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.assert_same_space(rhs);
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix * &rhs.matrix,
        }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_real(-1.0)
    }
}

pub fn max_abs(m: MatRef<'_, c64>) -> f64 {
    let mut out = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out = out.max(m[(i, j)].norm());
        }
    }
    out
}

pub fn hermiticity_error(m: MatRef<'_, c64>) -> f64 {
    let mut out = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..=j.min(m.nrows() - 1) {
            out = out.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    out
}

/// Kronecker product; `a` varies slowest.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let (da, db) = (a.dim(), b.dim());
    let matrix = Mat::from_fn(da * db, da * db, |r, c| {
        a.matrix[(r / db, c / db)] * b.matrix[(r % db, c % db)]
    });
    Operator {
        space: a.space.tensor(&b.space),
        matrix,
    }
}

pub fn dagger(a: &Operator) -> Operator {
    a.dagger()
}

/// Lift a single-factor operator to `space`, acting as identity elsewhere.
pub fn embed(single: &Mat<c64>, factor_index: usize, space: &HilbertSpace) -> Result<Operator> {
    let dims = space.factor_dims();
    if factor_index >= dims.len() {
        return Err(Error::FactorIndex {
            index: factor_index,
            factors: dims.len(),
        });
    }
    check_square(single.as_ref(), dims[factor_index])?;
    let left: usize = dims[..factor_index].iter().product();
    let right: usize = dims[factor_index + 1..].iter().product();
    let d = dims[factor_index];
    let total = space.total_dim();
    let mut m = Mat::zeros(total, total);
    for l in 0..left {
        for r in 0..right {
            for a in 0..d {
                for b in 0..d {
                    let v = single[(a, b)];
                    if v != ZERO {
                        m[((l * d + a) * right + r, (l * d + b) * right + r)] = v;
                    }
                }
            }
        }
    }
    Ok(Operator {
        space: space.clone(),
        matrix: m,
    })
}

/// |row⟩⟨col| on a single factor of dimension `dim`.
pub fn transition(dim: usize, row: usize, col: usize) -> Mat<c64> {
    let mut m = Mat::zeros(dim, dim);
    m[(row, col)] = ONE;
    m
}

/// Truncated annihilation operator on `n_max + 1` Fock states.
pub fn annihilation(n_max: usize) -> Mat<c64> {
    let d = n_max + 1;
    let mut m = Mat::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = real((n as f64).sqrt());
    }
    m
}

/// Column-stacking vectorization.
pub fn vectorize(m: MatRef<'_, c64>) -> Col<c64> {
    let d = m.nrows();
    Col::from_fn(d * m.ncols(), |k| m[(k % d, k / d)])
}

pub fn unvectorize(v: &Col<c64>) -> Result<Mat<c64>> {
    let n = v.nrows();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(Error::NotPerfectSquare(n));
    }
    Ok(Mat::from_fn(d, d, |i, j| v[i + j * d]))
}

/// Density matrix with validated trace, Hermiticity and positivity.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    space: HilbertSpace,
    matrix: Mat<c64>,
}

pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITIAN_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-8;

impl DensityMatrix {
    /// Validating constructor.
    pub fn new(space: HilbertSpace, matrix: Mat<c64>) -> Result<Self> {
        let rho = Self::new_unchecked(space, matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Shape is still checked; physical invariants are not.
    pub fn new_unchecked(space: HilbertSpace, matrix: Mat<c64>) -> Result<Self> {
        check_square(matrix.as_ref(), space.total_dim())?;
        Ok(Self { space, matrix })
    }

    pub fn pure(space: &HilbertSpace, psi: &Col<c64>) -> Self {
        let norm2: f64 = (0..psi.nrows()).map(|i| psi[i].norm_sqr()).sum();
        let d = space.total_dim();
        assert_eq!(psi.nrows(), d, "state vector has wrong dimension");
        Self {
            space: space.clone(),
            matrix: Mat::from_fn(d, d, |i, j| psi[i] * psi[j].conj() / norm2),
        }
    }

    pub fn maximally_mixed(space: &HilbertSpace) -> Self {
        let d = space.total_dim();
        Self {
            space: space.clone(),
            matrix: Mat::from_fn(
                d,
                d,
                |i, j| if i == j { real(1.0 / d as f64) } else { ZERO },
            ),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("Hermiticity error {herm:.3e}")));
        }
        let min = self.min_eigenvalue()?;
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(self.matrix.as_ref())
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let h = hermitian_part(self.matrix.as_ref());
        let ev = h
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        Ok(ev.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// ⟨ψ|ρ|ψ⟩, real part.
    pub fn expectation(&self, psi: &Col<c64>) -> f64 {
        let v = &self.matrix * psi;
        (0..v.nrows()).map(|i| psi[i].conj() * v[i]).sum::<c64>().re
    }

    pub fn vectorize(&self) -> Col<c64> {
        vectorize(self.matrix.as_ref())
    }

    /// Tensor product with another state; `self` is the left factor.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let a = Operator {
            space: self.space.clone(),
            matrix: self.matrix.clone(),
        };
        let b = Operator {
            space: other.space.clone(),
            matrix: other.matrix.clone(),
        };
        let k = kron(&a, &b);
        DensityMatrix {
            space: k.space,
            matrix: k.matrix,
        }
    }

    /// ‖self − other‖₁, the sum of |eigenvalues| of the difference (twice the
    /// trace distance).
    pub fn trace_norm_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch {
                expected: self.space.factor_dims.clone(),
                found: other.space.factor_dims.clone(),
            });
        }
        let diff = &self.matrix - &other.matrix;
        let h = hermitian_part(diff.as_ref());
        let ev = h
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        Ok(ev.iter().map(|x| x.abs()).sum())
    }
}

pub fn hermitian_part(m: MatRef<'_, c64>) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        (m[(i, j)] + m[(j, i)].conj()) * 0.5
    })
}

/// Trace out the last tensor factor (the cavity, by convention).
pub fn partial_trace_cavity(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let reduced = rho.space.without_last()?;
    let dc = *rho.space.factor_dims.last().expect("nonempty");
    let d = reduced.total_dim();
    let m = &rho.matrix;
    let matrix = Mat::from_fn(d, d, |i, j| {
        (0..dc).map(|n| m[(i * dc + n, j * dc + n)]).sum()
    });
    Ok(DensityMatrix {
        space: reduced,
        matrix,
    })
}
