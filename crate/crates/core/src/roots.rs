//! Root sets with bracketing certificates, and scan-and-bisect search.

/// Roots of a scalar function with sign-change brackets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RootSet {
    /// Sorted roots.
    pub roots: Vec<f64>,
    /// `brackets[i] = (lo, hi)` with `f(lo)` and `f(hi)` of opposite sign.
    pub brackets: Vec<(f64, f64)>,
    /// `|f(root)|`.
    pub residuals: Vec<f64>,
}

impl RootSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }
}

/// Bisect `f` on `[lo, hi]` given `f(lo)`, `f(hi)` of opposite signs.
/// Returns the final bracket, tightened until its width is at most `xtol`.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, mut flo: f64, xtol: f64) -> (f64, f64) {
    for _ in 0..200 {
        if hi - lo <= xtol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return (mid, mid);
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Scan `[a, b]` with the given step, keep cells whose endpoint values
/// change sign and both exceed `floor` in magnitude, then bisect each.
pub fn scan_roots<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, step: f64, floor: &dyn Fn(f64) -> f64) -> RootSet {
    let n = ((b - a) / step).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    let mut out = RootSet::default();
    let mut x0 = a;
    let mut f0 = f(a);
    for k in 1..=n {
        let x1 = if k == n { b } else { a + h * k as f64 };
        let f1 = f(x1);
        let significant = f0.abs() > floor(x0) && f1.abs() > floor(x1);
        if significant && (f0 > 0.0) != (f1 > 0.0) {
            let (lo, hi) = bisect(f, x0, x1, f0, 1e-14 * x1.abs().max(1.0));
            let r = 0.5 * (lo + hi);
            out.roots.push(r);
            out.brackets.push((lo, hi));
            out.residuals.push(f(r).abs());
        }
        x0 = x1;
        f0 = f1;
    }
    out
}
