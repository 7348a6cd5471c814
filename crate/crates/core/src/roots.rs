//! Bracketed scalar root finding.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    /// Final bracket.
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

/// Brent's method (inverse quadratic / secant steps with bisection fallback)
/// on a bracket `[lo, hi]` where `f` changes sign.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Result<Root> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(Root { x: a, fx: 0.0, lo: a, hi: a, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, fx: 0.0, lo: b, hi: b, iterations: 0 });
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::Bracket {
            lo,
            hi,
            reason: format!("no sign change: f(lo) = {fa:e}, f(hi) = {fb:e}"),
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for it in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            let (l, h) = if b < c { (b, c) } else { (c, b) };
            return Ok(Root { x: b, fx: fb, lo: l, hi: h, iterations: it });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::Numeric {
        reason: format!("Brent iteration did not converge in {max_iter} steps"),
        lo: b.min(c),
        hi: b.max(c),
    })
}

/// Bisection on an integer-valued monotone count: the smallest `x` in
/// `[lo, hi]` (to `xtol`) with `count(x) >= target`.
pub fn bisect_count<F: FnMut(f64) -> usize>(mut count: F, mut lo: f64, mut hi: f64, target: usize, xtol: f64) -> Result<(f64, f64)> {
    if count(lo) >= target || count(hi) < target {
        return Err(Error::Bracket {
            lo,
            hi,
            reason: format!("count does not cross {target} on the interval"),
        });
    }
    let mut iter = 0;
    while hi - lo > xtol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        iter += 1;
        if iter > 400 {
            return Err(Error::Numeric {
                reason: "bisection did not converge".into(),
                lo,
                hi,
            });
        }
    }
    Ok((lo, hi))
}
