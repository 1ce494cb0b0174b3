//! Piecewise-cubic densities on a grid.
//!
//! Each cell `[x_i, x_{i+1}]` is interpolated by the cubic through four
//! neighbouring nodes. Integrals against smooth weights use a
//! Gauss–Legendre rule per cell, with cells split at caller-supplied
//! breakpoints where the weight is discontinuous.

use crate::error::{Error, Result};
use std::sync::{Arc, OnceLock};

use crate::quad::{gauss_legendre, GaussLegendre, QuadValue};

const CELL_RULE: usize = 6;

fn cell_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<Arc<GaussLegendre>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(CELL_RULE))
}

/// Piecewise-cubic interpolant of nonnegative node values.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseCubic {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PiecewiseCubic {
    /// Build from strictly increasing abscissae and finite values.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidArgument(format!("grid has {} abscissae but {} values", x.len(), y.len())));
        }
        if x.len() < 4 {
            return Err(Error::InvalidArgument("grid needs at least 4 nodes".into()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("grid contains non-finite entries".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("grid abscissae must be strictly increasing".into()));
        }
        Ok(Self { x, y })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn lower(&self) -> f64 {
        self.x[0]
    }

    pub fn upper(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    /// Index `i` of the cell `[x_i, x_{i+1}]` containing `t` (clamped).
    pub fn cell_of(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    fn stencil(&self, cell: usize) -> usize {
        cell.saturating_sub(1).min(self.x.len() - 4)
    }

    fn eval_in_cell(&self, cell: usize, t: f64) -> f64 {
        let s = self.stencil(cell);
        let xs = &self.x[s..s + 4];
        let ys = &self.y[s..s + 4];
        let mut v = 0.0;
        for j in 0..4 {
            let mut l = 1.0;
            for k in 0..4 {
                if k != j {
                    l *= (t - xs[k]) / (xs[j] - xs[k]);
                }
            }
            v += ys[j] * l;
        }
        v.max(0.0)
    }

    /// Interpolated value, clamped at zero; zero outside the grid.
    pub fn eval(&self, t: f64) -> f64 {
        if t < self.lower() || t > self.upper() {
            return 0.0;
        }
        self.eval_in_cell(self.cell_of(t), t)
    }

    /// `∫_{lo}^{hi} g(x) f(x) dx` within one cell, assuming no breakpoints inside.
    fn cell_piece<T: QuadValue, G: Fn(f64) -> T>(&self, cell: usize, g: &G, lo: f64, hi: f64) -> T {
        let rule = cell_rule();
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        let mut s = T::zero();
        for (u, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = c + h * u;
            s = s + g(t) * (w * self.eval_in_cell(cell, t));
        }
        s * h
    }

    /// `∫ g(x) f(x) dx` over `[lo, hi] ∩ grid`, split at the given breakpoints.
    pub fn integrate_range<T: QuadValue, G: Fn(f64) -> T>(&self, g: &G, lo: f64, hi: f64, breaks: &[f64]) -> T {
        let lo = lo.max(self.lower());
        let hi = hi.min(self.upper());
        if hi <= lo {
            return T::zero();
        }
        let mut bs: Vec<f64> = breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect();
        bs.sort_by(f64::total_cmp);
        let first = self.cell_of(lo);
        let last = self.cell_of(hi);
        let mut total = T::zero();
        let mut bi = 0;
        for cell in first..=last {
            let a = self.x[cell].max(lo);
            let b = self.x[cell + 1].min(hi);
            if b <= a {
                continue;
            }
            let mut left = a;
            while bi < bs.len() && bs[bi] <= left {
                bi += 1;
            }
            while bi < bs.len() && bs[bi] < b {
                total = total + self.cell_piece(cell, g, left, bs[bi]);
                left = bs[bi];
                bi += 1;
            }
            total = total + self.cell_piece(cell, g, left, b);
        }
        total
    }

    /// `∫ g(x) f(x) dx` over the whole grid.
    pub fn integrate<T: QuadValue, G: Fn(f64) -> T>(&self, g: &G, breaks: &[f64]) -> T {
        self.integrate_range(g, self.lower(), self.upper(), breaks)
    }

    /// Integral of the interpolant over each cell.
    pub fn cell_masses(&self) -> Vec<f64> {
        (0..self.x.len() - 1).map(|i| self.cell_piece(i, &|_| 1.0, self.x[i], self.x[i + 1])).collect()
    }

    /// Running integral of the interpolant at the nodes, starting at 0.
    pub fn node_cumulative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.x.len());
        let mut acc = 0.0;
        out.push(0.0);
        for m in self.cell_masses() {
            acc += m;
            out.push(acc);
        }
        out
    }

    /// `∫_{x_cell}^{t} f`.
    pub fn partial_cell(&self, cell: usize, t: f64) -> f64 {
        let a = self.x[cell];
        if t <= a {
            return 0.0;
        }
        self.cell_piece(cell, &|_| 1.0, a, t.min(self.x[cell + 1]))
    }

    /// Trapezoid integral of the node values.
    pub fn trapezoid_mass(&self) -> f64 {
        self.x.windows(2).zip(self.y.windows(2)).map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1])).sum()
    }
}

/// Uniform grid of `n` nodes on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo + h * i as f64 }).collect()
}

/// Trapezoid weights for the node values of `x`.
pub fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (x[i + 1] - x[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}
