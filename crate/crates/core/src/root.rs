//! Safeguarded bisection/Newton for strictly decreasing scalar functions.

use crate::error::{Error, Result};

const BISECTION_WIDTH: f64 = 1e-6;
const MAX_ITER: usize = 200;

/// Outcome of a converged root search.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Root {
    pub x: f64,
    pub residual: f64,
}

/// Root of a strictly decreasing `f` inside `[lo, hi]` with `f(lo) >= 0 >= f(hi)`.
///
/// `f` returns `(value, derivative)`. Bisection narrows the bracket to a
/// width of `1e-6` (relative to `max(1, |x|)`), then Newton steps polish the
/// root; a Newton step that leaves the current bracket is replaced by a
/// bisection step. Iteration stops when the step stagnates at round-off.
pub(crate) fn decreasing_root<F>(f: F, mut lo: f64, mut hi: f64) -> Result<Root>
where
    F: Fn(f64) -> (f64, f64),
{
    let (flo, _) = f(lo);
    if flo == 0.0 {
        return Ok(Root { x: lo, residual: 0.0 });
    }
    let (fhi, _) = f(hi);
    if fhi == 0.0 {
        return Ok(Root { x: hi, residual: 0.0 });
    }
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::Numerical(format!(
            "root not bracketed: f({lo}) = {flo}, f({hi}) = {fhi}"
        )));
    }

    while hi - lo > BISECTION_WIDTH * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        let (fm, _) = f(mid);
        if fm == 0.0 {
            return Ok(Root { x: mid, residual: 0.0 });
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut x = 0.5 * (lo + hi);
    let mut last_step = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(Root { x, residual: 0.0 });
        }
        if fx > 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let mut next = x - fx / dfx;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        if step <= 4.0 * f64::EPSILON * x.abs().max(1.0) || (step >= last_step && step < 1e-12 * x.abs().max(1.0)) {
            let (fn_, _) = f(next);
            let (best, fb) = if fn_.abs() < fx.abs() { (next, fn_) } else { (x, fx) };
            return Ok(Root { x: best, residual: fb });
        }
        last_step = step;
        x = next;
    }
    let (fx, _) = f(x);
    Ok(Root { x, residual: fx })
}
