//! Adaptive quadrature used by the steady-state construction and by tests.

/// Adaptive Simpson integration of `f` over [a, b] to absolute tolerance
/// `tol`, with Richardson-style error control.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Integrate `f` over [a, b] where `f` may have an integrable singularity at
/// the right endpoint `b` of square-root type. Substitutes x = b - u^2 so the
/// transformed integrand 2 u f(b - u^2) stays bounded; the u = 0 endpoint is
/// evaluated as zero.
pub fn integrate_sqrt_endpoint<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    let u_max = (b - a).sqrt();
    let g = |u: f64| {
        let x = b - u * u;
        // u so small that b - u^2 rounds back to b: the endpoint itself
        if u <= 0.0 || x >= b {
            0.0
        } else {
            2.0 * u * f(x)
        }
    };
    adaptive_simpson(&g, 0.0, u_max, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn integrates_polynomial_exactly() {
        let v = adaptive_simpson(&|x| x * x * x, 0.0, 2.0, 1e-12);
        assert_abs_diff_eq!(v, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn integrates_steep_exponential() {
        let v = adaptive_simpson(&|x: f64| (-50.0 * x).exp(), 0.0, 1.0, 1e-12);
        assert_abs_diff_eq!(v, (1.0 - (-50.0f64).exp()) / 50.0, epsilon = 1e-11);
    }

    #[test]
    fn sqrt_endpoint_handles_inverse_sqrt() {
        // int_0^1 1/sqrt(1 - x) dx = 2
        let v = integrate_sqrt_endpoint(&|x: f64| 1.0 / (1.0 - x).sqrt(), 0.0, 1.0, 1e-10);
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn zero_width_interval() {
        assert_eq!(adaptive_simpson(&|x| x, 1.0, 1.0, 1e-12), 0.0);
        assert_eq!(integrate_sqrt_endpoint(&|x| x, 1.0, 1.0, 1e-12), 0.0);
    }
}
