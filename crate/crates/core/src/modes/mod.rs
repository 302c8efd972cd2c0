//! Measurement mode sets: PSF-adapted bases built from orthonormal
//! polynomials of the momentum weight, closed-form sinc modes, Hermite-Gauss
//! families and sampled plane-wave quadratures.

mod bessel;

pub use bessel::{spherical_jn, spherical_jn_all};

use crate::error::{Error, Result};
use crate::numerics::{orthonormalize, simpson_weights, Grid, OrthoBasis, DEGREE_CAP};
use crate::psf::PsfModel;

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// How a mode set was constructed. Continuum (plane-wave) sets are not
/// normalizable and are excluded from Gram-matrix validation.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Adapted,
    HermiteGauss { sigma: f64 },
    SincClosedForm,
    PlaneWave { k_values: Vec<f64> },
}

/// A family of measurement modes sampled in position (`modes_x` on `grid`)
/// and, for discrete bases, in momentum (`modes_p` on `p_grid`).
///
/// Every mode function is real. The momentum samples store the real profile
/// `m_n(p)` of `<p|n> = (-i)^n m_n(p)`; the constant phase is absorbed into
/// the basis so that position modes and all overlap amplitudes downstream
/// come out real. Immutable after construction; concurrent reads are safe.
#[derive(Debug, Clone)]
pub struct ModeSet {
    provenance: Provenance,
    grid: Grid,
    modes_x: Vec<Vec<f64>>,
    p_grid: Option<Grid>,
    modes_p: Vec<Vec<f64>>,
    parity: Vec<Parity>,
}

impl ModeSet {
    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn p_grid(&self) -> Option<&Grid> {
        self.p_grid.as_ref()
    }

    pub fn len(&self) -> usize {
        self.modes_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes_x.is_empty()
    }

    pub fn mode_x(&self, n: usize) -> &[f64] {
        &self.modes_x[n]
    }

    pub fn modes_x(&self) -> &[Vec<f64>] {
        &self.modes_x
    }

    /// Real momentum profiles `m_n(p)`; empty for continuum sets.
    pub fn mode_p(&self, n: usize) -> &[f64] {
        &self.modes_p[n]
    }

    pub fn modes_p(&self) -> &[Vec<f64>] {
        &self.modes_p
    }

    pub fn parity(&self) -> &[Parity] {
        &self.parity
    }

    pub fn is_continuum(&self) -> bool {
        matches!(self.provenance, Provenance::PlaneWave { .. })
    }

    /// Concatenate two sets sampled on the same grids without re-validating
    /// orthogonality. Diagnostic helper: the result keeps the provenance of
    /// `self` and is mainly useful for inspecting cross-basis Gram matrices.
    pub fn concat(mut self, other: ModeSet) -> Result<ModeSet> {
        if !self.grid.approx_eq(&other.grid) {
            return Err(Error::IncompatibleGrid);
        }
        match (&self.p_grid, &other.p_grid) {
            (Some(a), Some(b)) if a.approx_eq(b) => {}
            (None, None) => {}
            _ => return Err(Error::IncompatibleGrid),
        }
        self.modes_x.extend(other.modes_x);
        self.modes_p.extend(other.modes_p);
        self.parity.extend(other.parity);
        Ok(self)
    }
}

fn parity_tags(count: usize) -> Vec<Parity> {
    (0..count)
        .map(|n| if n % 2 == 0 { Parity::Even } else { Parity::Odd })
        .collect()
}

/// Position-space profiles from real momentum profiles `m_n(p)` of parity
/// `(-1)^n`, i.e. the inverse transform of `(-i)^n m_n(p)`:
///
/// even n: `phi_n(x) = (-1)^{n/2} (2 pi)^{-1/2} Int m_n(p) cos(px) dp`,
/// odd n:  `phi_n(x) = (-1)^{(n-1)/2} (2 pi)^{-1/2} Int m_n(p) sin(px) dp`.
///
/// Evaluated by direct oscillatory quadrature with a rotation recurrence for
/// the trigonometric factors; parity in x is enforced exactly by mirroring.
fn position_modes_from_momentum(
    p_grid: &Grid,
    modes_p: &[Vec<f64>],
    x_grid: &Grid,
) -> Vec<Vec<f64>> {
    let np = p_grid.len();
    let nx = x_grid.len();
    let count = modes_p.len();
    let wp = simpson_weights(np, p_grid.spacing());
    // Integrands are even in p for every parity pairing: fold onto the upper
    // half grid with a factor of two.
    let half = np / 2;
    let folded: Vec<Vec<f64>> = modes_p
        .iter()
        .map(|m| (half..np).map(|k| 2.0 * wp[k] * m[k]).collect())
        .collect();
    let p0 = p_grid.point(half);
    let dp = p_grid.spacing();

    let mut out = vec![vec![0.0_f64; nx]; count];
    let mut acc = vec![0.0_f64; count];
    for jx in nx / 2..nx {
        let x = x_grid.point(jx);
        let (mut c, mut s) = ((p0 * x).cos(), (p0 * x).sin());
        let (cd, sd) = ((dp * x).cos(), (dp * x).sin());
        acc.iter_mut().for_each(|a| *a = 0.0);
        for k in 0..half {
            for (n, f) in folded.iter().enumerate() {
                acc[n] += f[k] * if n % 2 == 0 { c } else { s };
            }
            let cn = c * cd - s * sd;
            s = s * cd + c * sd;
            c = cn;
        }
        for (n, a) in acc.iter().enumerate() {
            let sign = match n % 4 {
                0 | 1 => 1.0,
                _ => -1.0,
            };
            let v = sign * a / SQRT_2PI;
            out[n][jx] = v;
            out[n][nx - 1 - jx] = if n % 2 == 0 { v } else { -v };
        }
    }
    out
}

/// PSF-adapted measurement basis: `m_n(p) = Q_n(p) Psi(p)` with `Q_n`
/// orthonormal polynomials under the weight `|Psi(p)|^2`, inverse-transformed
/// to position space.
pub fn build_adapted_modes(psf: &PsfModel, count: usize) -> Result<ModeSet> {
    let basis = adapted_ortho_basis(psf, count)?;
    let modes_p: Vec<Vec<f64>> = (0..count)
        .map(|n| {
            basis
                .poly(n)
                .iter()
                .zip(psf.amp_p())
                .map(|(q, a)| q * a)
                .collect()
        })
        .collect();
    let modes_x = position_modes_from_momentum(psf.p_grid(), &modes_p, psf.grid());
    Ok(ModeSet {
        provenance: Provenance::Adapted,
        grid: psf.grid().clone(),
        modes_x,
        p_grid: Some(psf.p_grid().clone()),
        modes_p,
        parity: parity_tags(count),
    })
}

/// The polynomial layer of the adapted basis (shared with the Fisher
/// machinery, which never needs position-space profiles).
pub fn adapted_ortho_basis(psf: &PsfModel, count: usize) -> Result<OrthoBasis> {
    if count == 0 || count > DEGREE_CAP {
        return Err(Error::InvalidParameter(format!(
            "mode count must be in 1..={DEGREE_CAP}, got {count}"
        )));
    }
    let measure = psf.measure()?;
    orthonormalize(&measure, count - 1)
}

/// Closed-form mode profile of the sinc PSF,
/// `phi_n(x) = sqrt((2n+1)/pi) j_n(x)`, the normalized half-integer Bessel
/// family `sqrt(n + 1/2) J_{n+1/2}(x)/sqrt(x)`.
pub fn sinc_mode_closed_form(n: usize, x: f64) -> f64 {
    ((2.0 * n as f64 + 1.0) / std::f64::consts::PI).sqrt() * spherical_jn(n, x)
}

/// Closed-form sinc mode set: Bessel profiles in x, normalized Legendre
/// polynomials times the flat band profile in p.
pub fn build_sinc_closed_form_modes(count: usize, grid: &Grid) -> Result<ModeSet> {
    if count == 0 || count > DEGREE_CAP {
        return Err(Error::InvalidParameter(format!(
            "mode count must be in 1..={DEGREE_CAP}, got {count}"
        )));
    }
    let modes_x: Vec<Vec<f64>> = (0..count)
        .map(|n| {
            grid.points()
                .iter()
                .map(|&x| sinc_mode_closed_form(n, x))
                .collect()
        })
        .collect();
    let p_grid = Grid::new(1.0, 1 << 14)?;
    let pts = p_grid.points();
    // Orthonormal polynomials of the weight 1/2 on [-1, 1] are
    // sqrt(2n+1) P_n; the momentum profile carries the extra 1/sqrt(2).
    let mut legendre: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut prev = vec![1.0_f64; pts.len()];
    let mut cur: Vec<f64> = pts.clone();
    for n in 0..count {
        let pn = if n == 0 { &prev } else { &cur };
        legendre.push(
            pn.iter()
                .map(|v| v * ((2.0 * n as f64 + 1.0) / 2.0).sqrt())
                .collect(),
        );
        if n >= 1 {
            let next: Vec<f64> = pts
                .iter()
                .zip(cur.iter().zip(&prev))
                .map(|(&p, (&c, &pr))| {
                    ((2.0 * n as f64 + 1.0) * p * c - n as f64 * pr) / (n as f64 + 1.0)
                })
                .collect();
            prev = std::mem::replace(&mut cur, next);
        }
    }
    Ok(ModeSet {
        provenance: Provenance::SincClosedForm,
        grid: grid.clone(),
        modes_x,
        p_grid: Some(p_grid),
        modes_p: legendre,
        parity: parity_tags(count),
    })
}

/// Hermite-Gauss profiles `phi_n` with ground mode `exp(-x^2/(4 sigma^2))`,
/// i.e. `sigma` is the intensity standard deviation. Evaluated by the
/// two-term ladder recurrence in the scaled coordinate `u = x/(sqrt(2)
/// sigma)`, which keeps parity exact on a mirror grid.
fn hermite_functions(sigma: f64, count: usize, points: &[f64]) -> Vec<Vec<f64>> {
    let scale = std::f64::consts::SQRT_2 * sigma;
    let norm = 1.0 / scale.sqrt();
    let mut out = vec![vec![0.0_f64; points.len()]; count];
    for (j, &x) in points.iter().enumerate() {
        let u = x / scale;
        let mut hm = 0.0_f64;
        let mut h = std::f64::consts::PI.powf(-0.25) * (-0.5 * u * u).exp();
        for n in 0..count {
            out[n][j] = norm * h;
            let next = (std::f64::consts::SQRT_2 * u * h - (n as f64).sqrt() * hm)
                / ((n + 1) as f64).sqrt();
            hm = h;
            h = next;
        }
    }
    out
}

const HERMITE_COUNT_CAP: usize = 200;

fn check_hermite_args(sigma: f64, count: usize) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if count == 0 || count > HERMITE_COUNT_CAP {
        return Err(Error::InvalidParameter(format!(
            "mode count must be in 1..={HERMITE_COUNT_CAP}, got {count}"
        )));
    }
    Ok(())
}

fn check_hermite_grid(sigma: f64, count: usize, grid: &Grid, modes_x: &[Vec<f64>]) -> Result<()> {
    // Shortest oscillation wavelength of the highest mode near the origin is
    // 2 pi sqrt(2) sigma / sqrt(2 count + 1); demand at least eight samples
    // per period.
    let lambda =
        2.0 * std::f64::consts::PI * std::f64::consts::SQRT_2 * sigma
            / (2.0 * count as f64 + 1.0).sqrt();
    if grid.spacing() > lambda / 8.0 {
        let need = (2.0 * grid.x_max() / (lambda / 8.0)).ceil() as usize;
        return Err(Error::GridTooCoarse {
            got: grid.len(),
            need: need.next_power_of_two(),
        });
    }
    let top = &modes_x[count - 1];
    let tail = (grid.integrate(&top.iter().map(|v| v * v).collect::<Vec<_>>()) - 1.0).abs();
    if tail > 1e-6 {
        return Err(Error::GridTooNarrow(format!(
            "highest Hermite-Gauss mode loses {tail:.3e} of its norm on the grid (limit 1e-6)"
        )));
    }
    Ok(())
}

/// Hermite-Gauss mode set with an automatically chosen momentum grid wide and
/// fine enough for the whole family (the momentum profiles are the same
/// family with width `1/(2 sigma)`).
pub fn build_hermite_gauss_modes(sigma: f64, count: usize, grid: &Grid) -> Result<ModeSet> {
    check_hermite_args(sigma, count)?;
    let sigma_p = 0.5 / sigma;
    let classical = ((2.0 * count as f64 + 1.0).sqrt() + 8.0) * std::f64::consts::SQRT_2;
    let p_max = classical * sigma_p;
    let lambda_p = 2.0 * std::f64::consts::PI * std::f64::consts::SQRT_2 * sigma_p
        / (2.0 * count as f64 + 1.0).sqrt();
    let mut n_p = ((2.0 * p_max / (lambda_p / 16.0)).ceil() as usize).next_power_of_two();
    n_p = n_p.clamp(1 << 12, 1 << 16);
    let p_grid = Grid::new(p_max, n_p)?;
    build_hermite_gauss_modes_on(sigma, count, grid, &p_grid)
}

/// Hermite-Gauss mode set with the momentum profiles evaluated on an explicit
/// grid (e.g. the band-limited momentum grid of a sinc PSF, where everything
/// outside the band is irrelevant).
pub fn build_hermite_gauss_modes_on(
    sigma: f64,
    count: usize,
    grid: &Grid,
    p_grid: &Grid,
) -> Result<ModeSet> {
    check_hermite_args(sigma, count)?;
    let modes_x = hermite_functions(sigma, count, &grid.points());
    check_hermite_grid(sigma, count, grid, &modes_x)?;
    let modes_p = hermite_functions(0.5 / sigma, count, &p_grid.points());
    Ok(ModeSet {
        provenance: Provenance::HermiteGauss { sigma },
        grid: grid.clone(),
        modes_x,
        p_grid: Some(p_grid.clone()),
        modes_p,
        parity: parity_tags(count),
    })
}

/// Sampled plane-wave quadratures `cos(kx)/sqrt(2 pi)` and
/// `sin(kx)/sqrt(2 pi)`, interleaved per wavenumber (cosine first). These are
/// continuum modes: not normalizable, no momentum samples, excluded from
/// Gram-matrix validation.
pub fn build_plane_wave_modes(k_values: &[f64], grid: &Grid) -> Result<ModeSet> {
    for (i, &k) in k_values.iter().enumerate() {
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "wavenumbers must be finite and nonnegative, got {k}"
            )));
        }
        for &other in &k_values[..i] {
            if (k - other).abs() < 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "duplicate wavenumber {k}"
                )));
            }
        }
    }
    let pts = grid.points();
    let mut modes_x = Vec::with_capacity(2 * k_values.len());
    let mut parity = Vec::with_capacity(2 * k_values.len());
    for &k in k_values {
        modes_x.push(pts.iter().map(|&x| (k * x).cos() / SQRT_2PI).collect());
        parity.push(Parity::Even);
        modes_x.push(pts.iter().map(|&x| (k * x).sin() / SQRT_2PI).collect());
        parity.push(Parity::Odd);
    }
    Ok(ModeSet {
        provenance: Provenance::PlaneWave {
            k_values: k_values.to_vec(),
        },
        grid: grid.clone(),
        modes_x,
        p_grid: None,
        modes_p: Vec::new(),
        parity,
    })
}

/// Pairwise inner products of the modes. For bases carrying exact momentum
/// profiles (adapted, closed-form sinc) the product is evaluated in momentum
/// space, which by unitarity equals the full-line position-space inner
/// product and is immune to the slow spatial tails of band-limited modes;
/// Hermite-Gauss sets integrate in position space directly.
pub fn gram_matrix(modes: &ModeSet) -> Result<Vec<Vec<f64>>> {
    if modes.is_continuum() {
        return Err(Error::ContinuumModes);
    }
    let (grid, funcs): (&Grid, &[Vec<f64>]) = match modes.provenance() {
        Provenance::HermiteGauss { .. } => (&modes.grid, &modes.modes_x),
        _ => (
            modes.p_grid.as_ref().ok_or(Error::IncompatibleGrid)?,
            &modes.modes_p,
        ),
    };
    let w = simpson_weights(grid.len(), grid.spacing());
    let count = funcs.len();
    let mut gram = vec![vec![0.0_f64; count]; count];
    for a in 0..count {
        for b in a..count {
            let v: f64 = funcs[a]
                .iter()
                .zip(&funcs[b])
                .zip(&w)
                .map(|((x, y), wt)| x * y * wt)
                .sum();
            gram[a][b] = v;
            gram[b][a] = v;
        }
    }
    Ok(gram)
}
