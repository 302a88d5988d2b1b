#![allow(dead_code)]

use cavity_singlet::liouvillian::{build_liouvillian, Liouvillian};
use cavity_singlet::quantum::{HilbertSpace, Operator};
use faer::{c64, Mat};
use proptest::prelude::*;

/// Dense exp(A) by scaling and squaring with a Taylor core.
pub fn expm(a: &Mat<c64>) -> Mat<c64> {
    let n = a.nrows();
    let norm = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let scaled = Mat::from_fn(n, n, |i, j| a[(i, j)] / 2f64.powi(s));
    let mut result = Mat::<c64>::identity(n, n);
    let mut term = Mat::<c64>::identity(n, n);
    for k in 1..=24 {
        term = &term * &scaled;
        term = Mat::from_fn(n, n, |i, j| term[(i, j)] / k as f64);
        result = &result + &term;
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

pub fn mat_from(d: usize, re: &[f64], im: &[f64]) -> Mat<c64> {
    Mat::from_fn(d, d, |i, j| c64::new(re[i * d + j], im[i * d + j]))
}

pub fn hermitian_from(d: usize, re: &[f64], im: &[f64]) -> Mat<c64> {
    let m = mat_from(d, re, im);
    Mat::from_fn(d, d, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// Random model on a single `d`-level system: entries in [-1, 1].
#[derive(Clone, Debug)]
pub struct RandomModel {
    pub d: usize,
    pub h: Vec<f64>,
    pub h_im: Vec<f64>,
    pub jumps: Vec<(Vec<f64>, Vec<f64>)>,
    pub psi: Vec<f64>,
}

impl RandomModel {
    pub fn space(&self) -> HilbertSpace {
        HilbertSpace::new(vec![self.d]).unwrap()
    }

    pub fn liouvillian(&self) -> Liouvillian {
        let h = Operator::single(hermitian_from(self.d, &self.h, &self.h_im));
        let ls: Vec<Operator> = self
            .jumps
            .iter()
            .map(|(re, im)| Operator::single(mat_from(self.d, re, im)))
            .collect();
        build_liouvillian(&h, &ls).unwrap()
    }

    pub fn initial_ket(&self) -> faer::Col<c64> {
        let d = self.d;
        faer::Col::from_fn(d, |i| c64::new(self.psi[i], self.psi[i + d]))
    }
}

pub fn random_model() -> impl Strategy<Value = RandomModel> {
    (2usize..=3, 1usize..=2).prop_flat_map(|(d, nj)| {
        let entries = || prop::collection::vec(-1.0f64..1.0, d * d);
        (
            Just(d),
            entries(),
            entries(),
            prop::collection::vec((entries(), entries()), nj),
            prop::collection::vec(-1.0f64..1.0, 2 * d).prop_filter("nonzero state", |v| {
                v.iter().map(|x| x * x).sum::<f64>() > 1e-2
            }),
        )
            .prop_map(|(d, h, h_im, jumps, psi)| RandomModel {
                d,
                h,
                h_im,
                jumps,
                psi,
            })
    })
}
