//! Small numeric helpers shared across modules.

/// Bracketing bisection for a function with a single sign change on [a, b].
///
/// Requires f(a) and f(b) to have opposite signs (either may be zero).
/// Refines until the bracket collapses to floating-point resolution.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi);
    let fa = f(a);
    if fa <= 0.0 {
        lo = a;
        hi = b;
    } else {
        lo = b;
        hi = a;
    }
    // invariant: f(lo) <= 0 <= f(hi); lo and hi need not be ordered
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Neumaier compensated summation.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `n` evenly spaced values from `a` to `b` inclusive (`n >= 2`).
pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
        .collect()
}
