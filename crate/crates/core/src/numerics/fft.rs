use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

use super::Grid;

/// Transform direction. Forward carries the kernel `e^{-ipx}/sqrt(2*pi)`,
/// inverse is its adjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Unitary approximation of the continuous Fourier transform on a symmetric
/// grid.
///
/// The result lives on the conjugate grid (`spacing_out = 2*pi / (n *
/// spacing_in)`), and a forward/inverse round trip is an exact identity up to
/// floating-point rounding because the discretized kernel matrix is unitary.
pub fn fourier_transform(
    values: &[Complex64],
    grid: &Grid,
    direction: Direction,
) -> Result<(Vec<Complex64>, Grid)> {
    let n = grid.len();
    if values.len() != n {
        return Err(Error::LengthMismatch {
            got: values.len(),
            expected: n,
        });
    }
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let out_grid = grid.conjugate();
    let sigma = match direction {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    let h_in = grid.spacing();
    let in_min = grid.point(0);
    let out_min = out_grid.point(0);
    let h_out = out_grid.spacing();

    // out_j = (h_in/sqrt(2 pi)) * sum_k v_k e^{sigma i b_j a_k}; the bilinear
    // phase splits into two linear chirps around a plain DFT.
    let mut buf: Vec<Complex64> = values
        .iter()
        .enumerate()
        .map(|(k, v)| v * Complex64::from_polar(1.0, sigma * out_min * h_in * k as f64))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let fft = match direction {
        Direction::Forward => planner.plan_fft_forward(n),
        Direction::Inverse => planner.plan_fft_inverse(n),
    };
    fft.process(&mut buf);

    let scale = h_in / (2.0 * std::f64::consts::PI).sqrt();
    let corner = Complex64::from_polar(scale, sigma * out_min * in_min);
    let out: Vec<Complex64> = buf
        .iter()
        .enumerate()
        .map(|(j, v)| v * corner * Complex64::from_polar(1.0, sigma * j as f64 * h_out * in_min))
        .collect();
    Ok((out, out_grid))
}
