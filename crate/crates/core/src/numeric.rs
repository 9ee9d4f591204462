//! Small numeric routines shared across the solver: bracketed bisection,
//! golden-section search and central finite differences.

/// Inverse golden ratio, step factor for golden-section search.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Locate a root of `f` inside `[lo, hi]` by bisection.
///
/// Requires `f(lo)` and `f(hi)` to have opposite signs; the caller brackets the
/// root first. Stops when the interval is narrower than `tol`.
pub fn bisect_root(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    debug_assert!(flo * f(hi) <= 0.0, "bisect_root: endpoints do not bracket");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid == 0.0 {
            return mid;
        }
        if (flo < 0.0) == (fmid < 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Maximize a unimodal `f` on `[lo, hi]` by golden-section search.
///
/// Returns `(argmax, max)`. Accuracy in the argument is `tol`; for non-unimodal
/// inputs the result is a local maximum, so callers bracket with a coarse scan
/// when global behaviour matters.
pub fn golden_max(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid))
}

/// Minimize a unimodal `f` on `[lo, hi]`; returns `(argmin, min)`.
pub fn golden_min(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (x, v) = golden_max(|t| -f(t), lo, hi, tol);
    (x, -v)
}

/// Central finite difference `(f(x+h) − f(x−h)) / 2h`.
pub fn central_diff(mut f: impl FnMut(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Evenly spaced sample points over `[lo, hi]` with spacing at most `step`,
/// endpoints included. Always yields at least the two endpoints.
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    debug_assert!(step > 0.0 && hi >= lo);
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    (0..=n)
        .map(|k| lo + (hi - lo) * (k as f64) / (n as f64))
        .collect()
}

/// Round to 9 significant digits; report values use this for stable output.
pub fn sig9(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("sig9 reparse")
}
