//! Small bracketed root-finding helpers shared by the numeric modules.

/// Bisect `f` on `[lo, hi]` assuming a sign change, until the bracket width
/// drops below `xtol` or `max_iter` halvings have been done. Returns the
/// bracket midpoint.
///
/// The caller guarantees `f(lo)` and `f(hi)` have opposite signs (either may
/// be zero). Orientation is detected from the endpoint values.
pub(crate) fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    max_iter: usize,
) -> f64 {
    let flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    let fhi = f(hi);
    if fhi == 0.0 {
        return hi;
    }
    debug_assert!(
        flo.signum() != fhi.signum(),
        "bisect requires a sign change: f({lo}) = {flo}, f({hi}) = {fhi}"
    );
    let rising = fhi > flo;
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo < xtol || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bisection in log space for strictly positive roots spanning many decades.
pub(crate) fn bisect_log<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    max_iter: usize,
) -> f64 {
    debug_assert!(lo > 0.0 && hi > lo);
    let r = bisect(|x| f(x.exp()), lo.ln(), hi.ln(), rel_tol, max_iter);
    r.exp()
}

/// Secant refinement starting from two nearby points; falls back to `x1` if
/// the update degenerates. Used to polish bisection output without needing a
/// derivative.
pub(crate) fn secant_polish<F: FnMut(f64) -> f64>(
    mut f: F,
    mut x0: f64,
    mut x1: f64,
    steps: usize,
) -> f64 {
    let mut f0 = f(x0);
    for _ in 0..steps {
        let f1 = f(x1);
        if f1 == 0.0 {
            return x1;
        }
        let denom = f1 - f0;
        if denom == 0.0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / denom;
        if !x2.is_finite() {
            break;
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
    }
    x1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200);
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn bisect_handles_decreasing_functions() {
        let r = bisect(|x| 2.0 - x * x, 0.0, 2.0, 1e-14, 200);
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn bisect_log_spans_decades() {
        let r = bisect_log(|x| x.ln() + 10.0, 1e-9, 1e9, 1e-15, 300);
        assert!((r - (-10.0f64).exp()).abs() / r < 1e-12);
    }
}
