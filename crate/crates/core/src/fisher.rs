//! Fisher information of separation estimation: the quantum bound, per-mode
//! and cumulative information of projective mode sorting, direct intensity
//! imaging, and the plane-wave quadrature channels of the sinc PSF.

use crate::error::{Error, Result};
use crate::modes::{spherical_jn_all, ModeSet};
use crate::numerics::simpson_weights;
use crate::psf::{PsfKind, PsfModel};

/// Quantum Fisher information of the separation: the second momentum moment
/// of the PSF, independent of the separation itself.
pub fn quantum_fisher(psf: &PsfModel) -> f64 {
    let pg = psf.p_grid();
    let integrand: Vec<f64> = pg
        .points()
        .iter()
        .zip(psf.amp_p())
        .map(|(&p, &a)| p * p * a * a)
        .collect();
    pg.integrate(&integrand)
}

/// Real overlap amplitudes `a_n(s)` of the two-source state with each
/// measurement mode, and their separation derivatives.
///
/// With the modes' phase convention absorbed, the amplitudes are
///
/// even n: `a_n(s) = +-Int m_n(p) Psi(p) cos(sp/2) dp`,
/// odd n:  `a_n(s) = +-Int m_n(p) Psi(p) sin(sp/2) dp`,
///
/// with the sign `(+, +, -, -)` cycling in n, and the derivatives carry the
/// extra factor `-p/2` (even) or `p/2` (odd) under the integral.
#[derive(Debug, Clone)]
pub struct AmplitudeTable {
    separations: Vec<f64>,
    amplitudes: Vec<Vec<f64>>,
    derivative: Vec<Vec<f64>>,
}

impl AmplitudeTable {
    pub fn separations(&self) -> &[f64] {
        &self.separations
    }

    /// `a_n(s)` rows indexed by separation, columns by mode.
    pub fn amplitudes(&self) -> &[Vec<f64>] {
        &self.amplitudes
    }

    /// `da_n/ds` rows indexed by separation, columns by mode.
    pub fn derivative(&self) -> &[Vec<f64>] {
        &self.derivative
    }

    /// Probability missing from the first `D` modes, `1 - sum_{n<D} a_n^2`.
    pub fn tail(&self, separation_index: usize, depth: usize) -> f64 {
        let row = &self.amplitudes[separation_index];
        1.0 - row[..depth.min(row.len())]
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
    }
}

fn phase_sign(n: usize) -> f64 {
    match n % 4 {
        0 | 1 => 1.0,
        _ => -1.0,
    }
}

/// Overlap amplitudes of the PSF's two-source states with a mode set sharing
/// the PSF's momentum grid.
pub fn mode_amplitudes(
    psf: &PsfModel,
    modes: &ModeSet,
    separations: &[f64],
) -> Result<AmplitudeTable> {
    let pg = psf.p_grid();
    match modes.p_grid() {
        Some(g) if g.approx_eq(pg) => {}
        _ => return Err(Error::IncompatibleGrid),
    }
    let np = pg.len();
    let half = np / 2;
    let w = simpson_weights(np, pg.spacing());
    // Fold the quadrature onto p > 0: every integrand below is even in p.
    // folded[n][k] = 2 w m_n Psi at the k-th upper-half point.
    let folded: Vec<Vec<f64>> = (0..modes.len())
        .map(|n| {
            (half..np)
                .map(|k| 2.0 * w[k] * modes.mode_p(n)[k] * psf.amp_p()[k])
                .collect()
        })
        .collect();
    let upper_p: Vec<f64> = (half..np).map(|k| pg.point(k)).collect();

    let mut amplitudes = Vec::with_capacity(separations.len());
    let mut derivative = Vec::with_capacity(separations.len());
    for &s in separations {
        let mut a_row = vec![0.0_f64; modes.len()];
        let mut d_row = vec![0.0_f64; modes.len()];
        for (k, &p) in upper_p.iter().enumerate() {
            let (sin, cos) = (0.5 * s * p).sin_cos();
            for (n, f) in folded.iter().enumerate() {
                if n % 2 == 0 {
                    a_row[n] += f[k] * cos;
                    d_row[n] += f[k] * (-0.5 * p) * sin;
                } else {
                    a_row[n] += f[k] * sin;
                    d_row[n] += f[k] * 0.5 * p * cos;
                }
            }
        }
        for n in 0..modes.len() {
            let sign = phase_sign(n);
            a_row[n] *= sign;
            d_row[n] *= sign;
        }
        amplitudes.push(a_row);
        derivative.push(d_row);
    }
    Ok(AmplitudeTable {
        separations: separations.to_vec(),
        amplitudes,
        derivative,
    })
}

/// Per-mode Fisher information `F_{s,n} = 4 (da_n/ds)^2`, one row per
/// separation.
pub fn per_mode_fisher(table: &AmplitudeTable) -> Vec<Vec<f64>> {
    table
        .derivative
        .iter()
        .map(|row| row.iter().map(|d| 4.0 * d * d).collect())
        .collect()
}

/// Information captured by the first `depth` modes of one per-mode row.
pub fn cumulative_fisher(per_mode_row: &[f64], depth: usize) -> f64 {
    // `+ 0.0` turns the empty sum's negative zero into plain zero.
    per_mode_row[..depth.min(per_mode_row.len())].iter().sum::<f64>() + 0.0
}

/// Closed-form per-mode Fisher information of the adapted sinc basis,
/// `F_{s,n} = [n j_{n-1}(s/2) - (n+1) j_{n+1}(s/2)]^2 / (2n+1)` with
/// `j_{-1}(x) = cos(x)/x`, and the analytic `s -> 0` limits below the
/// switchover (1/3 for n = 1, zero otherwise).
pub fn sinc_per_mode_fisher_closed(n: usize, s: f64) -> f64 {
    assert!(s >= 0.0, "separation must be nonnegative");
    if s < 1e-6 {
        return if n == 1 { 1.0 / 3.0 } else { 0.0 };
    }
    let x = 0.5 * s;
    let j = spherical_jn_all(n + 1, x);
    let jm1 = if n == 0 { x.cos() / x } else { j[n - 1] };
    let expr = n as f64 * jm1 - (n as f64 + 1.0) * j[n + 1];
    expr * expr / (2.0 * n as f64 + 1.0)
}

/// Classical Fisher information of ideal intensity (direct) imaging,
/// `F = Int (d rho_s/ds)^2 / rho_s dx` with the exact shift derivative
/// `d rho/ds = [I'(x + s/2) - I'(x - s/2)] / 4`.
///
/// The intensity derivative is taken on the grid; shifted values are linearly
/// interpolated and the integrand is masked where `rho < 1e-14` (its
/// contribution vanishes analytically there).
pub fn direct_imaging_fisher(psf: &PsfModel, s: f64) -> Result<f64> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "separation must be finite and nonnegative, got {s}"
        )));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let grid = psf.grid();
    let n = grid.len();
    let h = grid.spacing();
    let intensity: Vec<f64> = psf.amp_x().iter().map(|a| a * a).collect();
    let mut deriv = vec![0.0_f64; n];
    for j in 2..n - 2 {
        deriv[j] = (-intensity[j + 2] + 8.0 * intensity[j + 1] - 8.0 * intensity[j - 1]
            + intensity[j - 2])
            / (12.0 * h);
    }
    let integrand: Vec<f64> = grid
        .points()
        .iter()
        .map(|&x| {
            let rho = 0.5
                * (grid.lerp_or_zero(&intensity, x - 0.5 * s)
                    + grid.lerp_or_zero(&intensity, x + 0.5 * s));
            if rho < 1e-14 {
                return 0.0;
            }
            let drho = 0.25
                * (grid.lerp_or_zero(&deriv, x + 0.5 * s) - grid.lerp_or_zero(&deriv, x - 0.5 * s));
            drho * drho / rho
        })
        .collect();
    Ok(grid.integrate(&integrand))
}

/// Plane-wave quadrature channel of the band-limited sinc measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneWaveChannel {
    Sine,
    Cosine,
}

/// Fisher information carried by the Fourier sine or cosine quadratures of a
/// band-limited (sinc) PSF, via the amplitude-derivative route:
///
/// sine:   `F = Int |Psi(k)|^2 k^2 cos^2(ks/2) dk`,
/// cosine: `F = Int |Psi(k)|^2 k^2 sin^2(ks/2) dk`.
///
/// The two channels sum to the quantum bound 1/3 for every separation; the
/// sine channel alone saturates it as `s -> 0`.
pub fn plane_wave_fisher(psf: &PsfModel, s: f64, channel: PlaneWaveChannel) -> Result<f64> {
    if !matches!(psf.kind(), PsfKind::Sinc) {
        return Err(Error::NonSincPsf);
    }
    let pg = psf.p_grid();
    let integrand: Vec<f64> = pg
        .points()
        .iter()
        .zip(psf.amp_p())
        .map(|(&k, &a)| {
            let trig = match channel {
                PlaneWaveChannel::Sine => (0.5 * k * s).cos(),
                PlaneWaveChannel::Cosine => (0.5 * k * s).sin(),
            };
            a * a * k * k * trig * trig
        })
        .collect();
    Ok(pg.integrate(&integrand))
}

/// The sine-channel expression in its alternative published form,
/// `(1/2) Int k^2 sin^2(ks/2) dk`, kept for comparison: it coincides with the
/// cosine channel above and vanishes as `s^2/20` for small separations
/// instead of saturating the quantum bound.
pub fn plane_wave_fisher_printed(psf: &PsfModel, s: f64) -> Result<f64> {
    plane_wave_fisher(psf, s, PlaneWaveChannel::Cosine)
}

/// Every Fisher quantity of one PSF/basis pairing over a separation scan.
#[derive(Debug, Clone)]
pub struct FisherCurve {
    pub separations: Vec<f64>,
    /// `F_{s,n}`, rows by separation, columns by mode.
    pub per_mode: Vec<Vec<f64>>,
    /// Cumulative information, rows by separation, column `d` = first `d`
    /// modes (so column 0 is identically zero).
    pub cumulative: Vec<Vec<f64>>,
    /// Direct-imaging information per separation.
    pub direct: Vec<f64>,
    /// Quantum bound (separation independent).
    pub quantum: f64,
    /// Probability tail `1 - sum_n a_n^2` per separation.
    pub tail: Vec<f64>,
}

/// Scan all Fisher quantities over the given separations.
pub fn fisher_scan(psf: &PsfModel, modes: &ModeSet, separations: &[f64]) -> Result<FisherCurve> {
    let table = mode_amplitudes(psf, modes, separations)?;
    let per_mode = per_mode_fisher(&table);
    let cumulative: Vec<Vec<f64>> = per_mode
        .iter()
        .map(|row| {
            let mut acc = 0.0;
            std::iter::once(0.0)
                .chain(row.iter().map(|f| {
                    acc += f;
                    acc
                }))
                .collect()
        })
        .collect();
    let direct = separations
        .iter()
        .map(|&s| direct_imaging_fisher(psf, s))
        .collect::<Result<Vec<f64>>>()?;
    let tail = (0..separations.len())
        .map(|i| table.tail(i, modes.len()))
        .collect();
    Ok(FisherCurve {
        separations: separations.to_vec(),
        per_mode,
        cumulative,
        direct,
        quantum: quantum_fisher(psf),
        tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::build_adapted_modes;
    use crate::psf::{default_gaussian_grid, default_sinc_grid, make_gaussian_psf, make_sinc_psf};
    use approx::assert_abs_diff_eq;

    fn sinc_psf() -> PsfModel {
        make_sinc_psf(&default_sinc_grid().unwrap()).unwrap()
    }

    fn gaussian_psf(sigma: f64) -> PsfModel {
        make_gaussian_psf(sigma, &default_gaussian_grid(sigma).unwrap()).unwrap()
    }

    #[test]
    fn quantum_fisher_reference_values() {
        assert_abs_diff_eq!(quantum_fisher(&gaussian_psf(1.0)), 0.25, epsilon = 1e-9);
        assert_abs_diff_eq!(quantum_fisher(&sinc_psf()), 1.0 / 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(quantum_fisher(&gaussian_psf(2.0)), 0.0625, epsilon = 1e-9);
    }

    #[test]
    fn sinc_amplitudes_match_bessel_closed_forms() {
        let psf = sinc_psf();
        let modes = build_adapted_modes(&psf, 8).unwrap();
        let seps = [0.3, 2.0, 5.0, 15.0];
        let table = mode_amplitudes(&psf, &modes, &seps).unwrap();
        for (i, &s) in seps.iter().enumerate() {
            let j = spherical_jn_all(7, 0.5 * s);
            for n in 0..8 {
                let expected = (2.0 * n as f64 + 1.0).sqrt() * j[n];
                assert_abs_diff_eq!(table.amplitudes()[i][n], expected, epsilon = 1e-9);
            }
        }
        // The worked reference point: a_0(2) = sin(1).
        let t2 = mode_amplitudes(&psf, &modes, &[2.0]).unwrap();
        assert_abs_diff_eq!(t2.amplitudes()[0][0], 1.0_f64.sin(), epsilon = 1e-10);
        assert_abs_diff_eq!(1.0_f64.sin(), 0.84147, epsilon = 1e-5);
    }

    #[test]
    fn zero_separation_excites_only_the_fundamental() {
        for psf in [sinc_psf(), gaussian_psf(1.0)] {
            let modes = build_adapted_modes(&psf, 10).unwrap();
            let table = mode_amplitudes(&psf, &modes, &[0.0]).unwrap();
            for (n, &a) in table.amplitudes()[0].iter().enumerate() {
                let expected = if n == 0 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(a, expected, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn probability_budget_and_mirror_symmetry() {
        let psf = sinc_psf();
        let modes = build_adapted_modes(&psf, 12).unwrap();
        let seps = [0.5, 2.0, 8.0];
        let table = mode_amplitudes(&psf, &modes, &seps).unwrap();
        for i in 0..seps.len() {
            let total: f64 = table.amplitudes()[i].iter().map(|a| a * a).sum();
            assert!(total <= 1.0 + 1e-9, "sum p_n = {total}");
            assert_abs_diff_eq!(table.tail(i, 12), 1.0 - total, epsilon = 1e-15);
        }
        // Swapping the sources (s -> -s) changes no detection probability.
        let pm = mode_amplitudes(&psf, &modes, &[1.7, -1.7]).unwrap();
        for n in 0..12 {
            let p_plus = pm.amplitudes()[0][n].powi(2);
            let p_minus = pm.amplitudes()[1][n].powi(2);
            assert_abs_diff_eq!(p_plus, p_minus, epsilon = 1e-12);
        }
    }

    #[test]
    fn analytic_derivative_matches_finite_differences() {
        let psf = sinc_psf();
        let modes = build_adapted_modes(&psf, 21).unwrap();
        let h = 1e-3;
        for &s in &[0.1, 1.0, 5.0] {
            let stencil = [s + 2.0 * h, s + h, s - h, s - 2.0 * h, s];
            let t = mode_amplitudes(&psf, &modes, &stencil).unwrap();
            let a = t.amplitudes();
            for n in 0..21 {
                let fd = (-a[0][n] + 8.0 * a[1][n] - 8.0 * a[2][n] + a[3][n]) / (12.0 * h);
                let an = t.derivative()[4][n];
                assert!((fd - an).abs() <= 1e-6, "n={n}, s={s}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn per_mode_quadrature_agrees_with_closed_form() {
        let psf = sinc_psf();
        let modes = build_adapted_modes(&psf, 11).unwrap();
        let seps = [0.5, 2.0, 7.5, 15.0];
        let table = mode_amplitudes(&psf, &modes, &seps).unwrap();
        let fm = per_mode_fisher(&table);
        for (i, &s) in seps.iter().enumerate() {
            for n in 0..11 {
                let closed = sinc_per_mode_fisher_closed(n, s);
                assert!(
                    (fm[i][n] - closed).abs() <= 1e-6,
                    "n={n}, s={s}: {} vs {closed}",
                    fm[i][n]
                );
            }
        }
    }

    #[test]
    fn closed_form_sums_to_the_quantum_bound() {
        for &s in &[0.5, 1.0, 2.0, 5.0, 15.0] {
            let total: f64 = (0..=40).map(|n| sinc_per_mode_fisher_closed(n, s)).sum();
            assert_abs_diff_eq!(total, 1.0 / 3.0, epsilon = 1e-5);
        }
    }

    #[test]
    fn closed_form_small_separation_limits() {
        assert_eq!(sinc_per_mode_fisher_closed(1, 0.0), 1.0 / 3.0);
        assert_eq!(sinc_per_mode_fisher_closed(0, 0.0), 0.0);
        let f0 = sinc_per_mode_fisher_closed(0, 1e-4);
        assert!(f0 <= 1e-9, "F_0(1e-4) = {f0:.3e}");
        assert_abs_diff_eq!(f0, 1e-8 / 36.0, epsilon = 1e-12);
        // Continuity across the series switchover.
        let f1 = sinc_per_mode_fisher_closed(1, 2e-6);
        assert_abs_diff_eq!(f1, 1.0 / 3.0, epsilon = 1e-9);
    }

    #[test]
    fn adapted_basis_sums_to_qfi_for_all_separations() {
        let psf = sinc_psf();
        let modes = build_adapted_modes(&psf, 40).unwrap();
        let seps: Vec<f64> = (0..=15).map(|k| k as f64).collect();
        let table = mode_amplitudes(&psf, &modes, &seps).unwrap();
        let fm = per_mode_fisher(&table);
        for (i, &s) in seps.iter().enumerate() {
            let total = cumulative_fisher(&fm[i], 40);
            assert!(
                (total - 1.0 / 3.0).abs() <= 1e-4,
                "s={s}: sum {total}"
            );
        }
    }

    #[test]
    fn direct_imaging_reference_points() {
        let psf = gaussian_psf(1.0);
        // Small separation: F ~ s^2/8.
        let f = direct_imaging_fisher(&psf, 0.1).unwrap();
        assert!((f - 1.25e-3).abs() <= 0.05 * 1.25e-3, "F(0.1) = {f:.4e}");
        // Well separated: approaches (but never exceeds) the quantum bound.
        let f6 = direct_imaging_fisher(&psf, 6.0).unwrap();
        assert!(f6 >= 0.9 * 0.25 && f6 <= 0.25 + 1e-6, "F(6) = {f6}");
        assert_eq!(direct_imaging_fisher(&psf, 0.0).unwrap(), 0.0);
        assert!(direct_imaging_fisher(&psf, -1.0).is_err());
    }

    #[test]
    fn gaussian_direct_imaging_collapses_quadratically() {
        let psf = gaussian_psf(1.0);
        let f_lo = direct_imaging_fisher(&psf, 1e-3).unwrap();
        let f_hi = direct_imaging_fisher(&psf, 1e-1).unwrap();
        let slope = (f_hi / f_lo).ln() / (1e-1_f64 / 1e-3).ln();
        assert!((slope - 2.0).abs() <= 0.05, "slope {slope}");
    }

    #[test]
    fn data_processing_inequality() {
        for psf in [sinc_psf(), gaussian_psf(1.0)] {
            let q = quantum_fisher(&psf);
            let modes = build_adapted_modes(&psf, 12).unwrap();
            let seps = [0.0, 0.3, 1.0, 4.0, 10.0];
            let curve = fisher_scan(&psf, &modes, &seps).unwrap();
            for i in 0..seps.len() {
                assert!(curve.direct[i] <= q + 1e-6);
                for d in 0..=12 {
                    assert!(curve.cumulative[i][d] <= q + 1e-6);
                    if d > 0 {
                        assert!(curve.cumulative[i][d] >= curve.cumulative[i][d - 1]);
                    }
                }
            }
        }
    }

    #[test]
    fn plane_wave_channels() {
        let psf = sinc_psf();
        // The sine channel saturates the quantum bound at zero separation.
        let f0 = plane_wave_fisher(&psf, 0.0, PlaneWaveChannel::Sine).unwrap();
        assert_abs_diff_eq!(f0, 1.0 / 3.0, epsilon = 1e-9);
        for &s in &[0.0, 0.5, 2.0, 8.0, 15.0] {
            let sine = plane_wave_fisher(&psf, s, PlaneWaveChannel::Sine).unwrap();
            let cosine = plane_wave_fisher(&psf, s, PlaneWaveChannel::Cosine).unwrap();
            assert_abs_diff_eq!(sine + cosine, 1.0 / 3.0, epsilon = 1e-6);
            // Closed-form oracle: Int k^2 cos(ks) dk over [-1, 1].
            if s > 0.0 {
                let c = 4.0 * s.cos() / (s * s) + (2.0 / s - 4.0 / (s * s * s)) * s.sin();
                assert_abs_diff_eq!(sine, 1.0 / 6.0 + c / 4.0, epsilon = 1e-9);
            }
        }
        // The alternative printed form starts at s^2/20 instead of 1/3.
        let s = 1e-3;
        let printed = plane_wave_fisher_printed(&psf, s).unwrap();
        assert_abs_diff_eq!(printed, s * s / 20.0, epsilon = 1e-12);
        assert!(matches!(
            plane_wave_fisher(&gaussian_psf(1.0), 1.0, PlaneWaveChannel::Sine),
            Err(Error::NonSincPsf)
        ));
    }

    #[test]
    fn incompatible_grids_are_rejected() {
        let psf = sinc_psf();
        let other = gaussian_psf(1.0);
        let modes = build_adapted_modes(&other, 4).unwrap();
        assert!(matches!(
            mode_amplitudes(&psf, &modes, &[1.0]),
            Err(Error::IncompatibleGrid)
        ));
    }
}
