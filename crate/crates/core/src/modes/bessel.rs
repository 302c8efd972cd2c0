//! Spherical Bessel functions of the first kind by Miller's downward
//! recurrence, stable for orders well past anything the mode builders need.

/// Values `j_0(x) ..= j_{n_max}(x)`.
///
/// Upward recurrence in the order is unstable below the turning point
/// `n ~ x`, so the sequence is generated downward from a padded starting
/// order and rescaled against the closed-form `j_0`/`j_1` anchor with the
/// larger magnitude (one of them can sit at a zero).
pub fn spherical_jn_all(n_max: usize, x: f64) -> Vec<f64> {
    let ax = x.abs();
    if ax < 1e-8 {
        // Series limit j_n(x) = x^n / (2n+1)!! (1 + O(x^2)); below 1e-8 the
        // correction is under 1e-16 relative.
        let mut out = vec![0.0; n_max + 1];
        let mut term = 1.0;
        for (n, o) in out.iter_mut().enumerate() {
            *o = term;
            term *= x / (2.0 * n as f64 + 3.0);
        }
        return out;
    }

    let start = n_max + 20 + (1.5 * ax) as usize;
    let mut out = vec![0.0_f64; n_max + 1];
    let mut jp = 0.0_f64; // j_{m+1}, unnormalized
    let mut jc = 1e-30_f64; // j_m, unnormalized
    for m in (0..=start).rev() {
        if m <= n_max {
            out[m] = jc;
        }
        let jm = (2.0 * m as f64 + 1.0) / ax * jc - jp;
        jp = jc;
        jc = jm;
        if jc.abs() > 1e250 {
            let f = 1e-250;
            jp *= f;
            jc *= f;
            for o in out.iter_mut() {
                *o *= f;
            }
        }
    }
    // After the m = 0 step `jp` holds the unnormalized j_0.
    let un_j0 = jp;
    let true_j0 = ax.sin() / ax;
    let true_j1 = ax.sin() / (ax * ax) - ax.cos() / ax;
    let scale = if true_j0.abs() >= true_j1.abs() || n_max == 0 {
        true_j0 / un_j0
    } else {
        true_j1 / out[1]
    };
    for o in out.iter_mut() {
        *o *= scale;
    }
    if x < 0.0 {
        for (n, o) in out.iter_mut().enumerate() {
            if n % 2 == 1 {
                *o = -*o;
            }
        }
    }
    out
}

/// Single value `j_n(x)`.
pub fn spherical_jn(n: usize, x: f64) -> f64 {
    spherical_jn_all(n, x)[n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn low_orders_match_closed_forms() {
        for &x in &[0.3, 1.0, 2.5, 7.0, 15.0, 40.96, -3.2] {
            let j = spherical_jn_all(2, x);
            assert_abs_diff_eq!(j[0], x.sin() / x, epsilon = 1e-14);
            assert_abs_diff_eq!(j[1], x.sin() / (x * x) - x.cos() / x, epsilon = 1e-14);
            let j2 = (3.0 / (x * x) - 1.0) * x.sin() / x - 3.0 * x.cos() / (x * x);
            assert_abs_diff_eq!(j[2], j2, epsilon = 1e-13);
        }
    }

    #[test]
    fn origin_and_series_limit() {
        let j = spherical_jn_all(4, 0.0);
        assert_eq!(j, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        // j_n(x) ~ x^n / (2n+1)!! for small x.
        let x = 1e-3;
        let j = spherical_jn_all(3, x);
        // Leading-order series, correction O(x^2/10).
        assert_abs_diff_eq!(j[1], x / 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(j[2], x * x / 15.0, epsilon = 1e-13);
        assert_abs_diff_eq!(j[3], x * x * x / 105.0, epsilon = 1e-17);
    }

    #[test]
    fn addition_theorem_normalization() {
        // sum_n (2n+1) j_n(x)^2 = 1 for every real x.
        for &x in &[0.5, 1.0, 5.0, 12.0, 20.0, 40.0] {
            let n_max = 40 + (2.0 * x) as usize;
            let j = spherical_jn_all(n_max, x);
            let s: f64 = j
                .iter()
                .enumerate()
                .map(|(n, &v)| (2.0 * n as f64 + 1.0) * v * v)
                .sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn stable_at_zeros_of_sin() {
        // x = pi makes j_0 vanish; the j_1 anchor must take over.
        let x = std::f64::consts::PI;
        let j = spherical_jn_all(5, x);
        assert_abs_diff_eq!(j[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j[1], 1.0 / x, epsilon = 1e-13);
    }

    #[test]
    fn parity_in_the_argument() {
        let a = spherical_jn_all(6, 2.7);
        let b = spherical_jn_all(6, -2.7);
        for n in 0..=6 {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(a[n], sign * b[n]);
        }
    }
}
