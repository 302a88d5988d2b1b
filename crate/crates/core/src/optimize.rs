//! Derivative-free bounded minimization: golden-section line search and
//! cyclic coordinate descent built on it.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineMinimum {
    pub x: f64,
    pub fx: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` on `[lo, hi]` until the bracket is narrower than `tol`.
///
/// The bracket endpoints are never evaluated; if the minimum sits on a
/// bound the result converges to within `tol` of it.
pub fn golden_section(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
) -> LineMinimum {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evaluations = 2;
    let mut iter = 0;
    while b - a > tol && iter < max_iter {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        evaluations += 1;
        iter += 1;
    }
    let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    LineMinimum {
        x,
        fx,
        evaluations,
        converged: b - a <= tol,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
    /// Absolute resolution required along this coordinate.
    pub tol: f64,
}

impl Bound {
    pub fn new(lo: f64, hi: f64, tol: f64) -> Self {
        Self { lo, hi, tol }
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo.min(self.hi), self.lo.max(self.hi))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DescentOptions {
    pub max_sweeps: usize,
    pub max_line_iter: usize,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 12,
            max_line_iter: 60,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub sweeps: usize,
    pub evaluations: usize,
    /// A full sweep moved every coordinate by less than its tolerance.
    pub converged: bool,
}

/// Cyclic coordinate descent: each sweep runs a golden-section search over
/// the full bound of every coordinate in turn, keeping a move only if it
/// lowers the objective.
pub fn coordinate_descent(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    bounds: &[Bound],
    opts: DescentOptions,
) -> Minimum {
    assert_eq!(x0.len(), bounds.len());
    let mut x: Vec<f64> = x0.iter().zip(bounds).map(|(&v, b)| b.clamp(v)).collect();
    let mut fx = f(&x);
    let mut evaluations = 1;
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut moved = false;
        for (i, b) in bounds.iter().enumerate() {
            let mut trial = x.clone();
            let line = golden_section(
                |v| {
                    trial[i] = v;
                    f(&trial)
                },
                b.lo,
                b.hi,
                b.tol,
                opts.max_line_iter,
            );
            evaluations += line.evaluations;
            if line.fx < fx {
                if (line.x - x[i]).abs() > b.tol {
                    moved = true;
                }
                x[i] = line.x;
                fx = line.fx;
            }
        }
        if !moved {
            converged = true;
            break;
        }
    }
    Minimum {
        x,
        fx,
        sweeps,
        evaluations,
        converged,
    }
}
