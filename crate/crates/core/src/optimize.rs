//! One-dimensional maximization of concave functions.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`,
/// shrinking the bracket to width `tol`.
///
/// Returns `(x, f(x))` for the best point evaluated, endpoints included, so a
/// maximum sitting on the boundary is reported exactly.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    debug_assert!(lo <= hi && tol > 0.0);
    let mut a = lo;
    let mut b = hi;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);

    while b - a > tol {
        if fc >= fd {
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
    }

    let mid = 0.5 * (a + b);
    let mut best = (mid, f(mid));
    for (x, fx) in [(c, fc), (d, fd), (lo, f(lo)), (hi, f(hi))] {
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Maximizer of a concave function on `[lo, hi]` given its derivative
/// `slope` (nonincreasing), by bisection on the sign of the slope down to a
/// bracket of width `tol`.
///
/// Unlike comparing function values, the slope keeps full relative precision
/// near the optimum, so the argmax is located to `tol` rather than to the
/// square root of machine precision.
pub fn concave_argmax_by_slope<F>(mut slope: F, lo: f64, hi: f64, tol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    debug_assert!(lo <= hi && tol > 0.0);
    if slope(lo) <= 0.0 {
        return lo;
    }
    if slope(hi) >= 0.0 {
        return hi;
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if slope(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_maximum() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-9);
        assert!(fx.abs() < 1e-18);
    }

    #[test]
    fn finds_boundary_maximum() {
        let (x, fx) = golden_section_max(|x| x, 0.0, 1.0, 1e-10);
        assert_eq!(x, 1.0);
        assert_eq!(fx, 1.0);
        let (x, _) = golden_section_max(|x| -x, 0.0, 1.0, 1e-10);
        assert_eq!(x, 0.0);
    }

    #[test]
    fn slope_bisection() {
        let x = concave_argmax_by_slope(|x| -2.0 * (x - 0.3), 0.0, 1.0, 1e-13);
        assert!((x - 0.3).abs() < 1e-12);
        assert_eq!(concave_argmax_by_slope(|_| 1.0, 0.0, 1.0, 1e-13), 1.0);
        assert_eq!(concave_argmax_by_slope(|_| -1.0, 0.0, 1.0, 1e-13), 0.0);
    }

    #[test]
    fn degenerate_interval() {
        let (x, fx) = golden_section_max(|x| x * 2.0, 0.5, 0.5, 1e-10);
        assert_eq!(x, 0.5);
        assert_eq!(fx, 1.0);
    }
}
