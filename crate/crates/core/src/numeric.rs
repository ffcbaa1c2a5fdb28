//! Scalar bracketing helpers shared by the analysis modules.

/// Absolute and relative width at which bisection stops by default.
pub const DEFAULT_BISECT_TOL: f64 = 1e-12;

/// Bisection for a sign change of `f` on `[lo, hi]`. Stops when the bracket
/// is narrower than `tol * (1 + |mid|)`. The endpoints need not be ordered
/// by function value; if `f` has the same sign at both ends the midpoint of
/// the final bracket is still returned.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol * (1.0 + mid.abs()) || mid <= lo || mid >= hi {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sign as -1, 0, +1.
pub fn sign(x: f64) -> i32 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}
