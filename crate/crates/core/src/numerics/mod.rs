//! Deterministic numeric kernels shared by every physics module: quadrature,
//! the unitary discrete Fourier transform, finite differences and the
//! Stieltjes construction of orthonormal polynomials for arbitrary symmetric
//! weights.

mod fft;
mod grid;
mod ortho;

pub use fft::{fourier_transform, Direction};
pub use grid::Grid;
pub use ortho::{orthonormalize, Measure, OrthoBasis, DEGREE_CAP};

use crate::error::{Error, Result};

/// Quadrature weights for a uniform grid of `n` samples with spacing `h`.
///
/// Composite Simpson 1/3 with a 3/8 closure when the panel count is odd,
/// averaged with its mirror image so the weights are exactly symmetric.
/// O(h^4) on smooth integrands.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 2, "need at least two samples");
    let mut w = vec![0.0_f64; n];
    let panels = n - 1;
    if panels == 1 {
        return vec![h / 2.0, h / 2.0];
    }
    // Fill `w[offset..]` with the 1/3-rule over an even panel count.
    let fill_13 = |w: &mut [f64], offset: usize, last: usize| {
        w[offset] += h / 3.0;
        w[last] += h / 3.0;
        let mut j = offset + 1;
        while j < last {
            w[j] += if (j - offset) % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            };
            j += 1;
        }
    };
    if panels % 2 == 0 {
        fill_13(&mut w, 0, n - 1);
    } else if panels == 3 {
        for (j, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
            w[j] = c * 3.0 * h / 8.0;
        }
    } else {
        fill_13(&mut w, 0, n - 4);
        for (j, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
            w[n - 4 + j] += c * 3.0 * h / 8.0;
        }
    }
    // Symmetrize so that parity arguments hold exactly on mirror grids.
    let mut sym = w.clone();
    for j in 0..n {
        sym[j] = 0.5 * (w[j] + w[n - 1 - j]);
    }
    sym
}

/// Composite-Simpson integral of uniformly spaced samples.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let w = simpson_weights(values.len(), h);
    dot(&w, values)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Integrate samples of `f` over `[a, b]`.
///
/// `values` are samples on a uniform grid starting at `x0` with spacing
/// `spacing`; the endpoints `a` and `b` must coincide with grid points inside
/// the sampled range, otherwise a domain-not-covered error is returned.
pub fn integrate(values: &[f64], x0: f64, spacing: f64, a: f64, b: f64) -> Result<f64> {
    if values.len() < 2 || !(spacing > 0.0) || !(a < b) {
        return Err(Error::InvalidParameter(format!(
            "integrate needs >=2 samples, positive spacing and a < b (got n={}, h={spacing}, [{a}, {b}])",
            values.len()
        )));
    }
    let x_last = x0 + spacing * (values.len() - 1) as f64;
    let not_covered = || Error::DomainNotCovered {
        a,
        b,
        min: x0,
        max: x_last,
    };
    let idx = |x: f64| -> Result<usize> {
        let t = (x - x0) / spacing;
        let i = t.round();
        if i < -0.5 || i as usize >= values.len() || (t - i).abs() > 1e-6 {
            return Err(not_covered());
        }
        Ok(i as usize)
    };
    let i0 = idx(a)?;
    let i1 = idx(b)?;
    if i1 <= i0 {
        return Err(not_covered());
    }
    Ok(simpson(&values[i0..=i1], spacing))
}

/// Five-point central difference, O(h^4) truncation error.
pub fn finite_diff<F: Fn(f64) -> f64>(f: F, x0: f64, h: f64) -> f64 {
    (-f(x0 + 2.0 * h) + 8.0 * f(x0 + h) - 8.0 * f(x0 - h) + f(x0 - 2.0 * h)) / (12.0 * h)
}
