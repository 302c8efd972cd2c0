use crate::error::{Error, Result};

use super::{simpson_weights, Grid};

/// Stability cap for the Stieltjes recurrence. Beyond this the construction
/// fails loudly instead of degrading silently.
pub const DEGREE_CAP: usize = 60;

/// A nonnegative, inversion-symmetric weight sampled on a grid, normalized to
/// unit total mass. Serves as the orthogonality measure `w(p) dp`.
#[derive(Debug, Clone)]
pub struct Measure {
    grid: Grid,
    weight: Vec<f64>,
    total_mass: f64,
}

impl Measure {
    pub fn new(grid: Grid, mut weight: Vec<f64>) -> Result<Measure> {
        let n = grid.len();
        if weight.len() != n {
            return Err(Error::LengthMismatch {
                got: weight.len(),
                expected: n,
            });
        }
        let max_w = weight.iter().fold(0.0_f64, |m, &w| m.max(w.abs()));
        for &w in &weight {
            if w < -1e-12 * max_w {
                return Err(Error::NegativeWeight(w));
            }
        }
        for j in 0..n / 2 {
            let d = (weight[j] - weight[n - 1 - j]).abs();
            if d > 1e-12 * max_w.max(1.0) {
                return Err(Error::AsymmetricWeight(d));
            }
        }
        // Make symmetry and nonnegativity exact; parity of the polynomials
        // downstream relies on both.
        for j in 0..n / 2 {
            let avg = 0.5 * (weight[j] + weight[n - 1 - j]).max(0.0);
            weight[j] = avg;
            weight[n - 1 - j] = avg;
        }
        let total_mass = grid.integrate(&weight);
        if (total_mass - 1.0).abs() > 1e-9 {
            return Err(Error::NonUnitMass(total_mass));
        }
        Ok(Measure {
            grid,
            weight,
            total_mass,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }
}

/// Orthonormal polynomials `Q_0..Q_N` of a symmetric measure, sampled on the
/// measure's grid, together with their three-term recurrence coefficients.
///
/// Because the measure is symmetric all alpha coefficients vanish and
/// `p Q_n(p) = sqrt(b_{n+1}) Q_{n+1}(p) + sqrt(b_n) Q_{n-1}(p)`.
#[derive(Debug, Clone)]
pub struct OrthoBasis {
    grid: Grid,
    degree_max: usize,
    recurrence_b: Vec<f64>,
    polys: Vec<Vec<f64>>,
}

impl OrthoBasis {
    pub fn degree_max(&self) -> usize {
        self.degree_max
    }

    /// `beta_k` for `k = 1..=degree_max`.
    pub fn recurrence_b(&self) -> &[f64] {
        &self.recurrence_b
    }

    pub fn poly(&self, n: usize) -> &[f64] {
        &self.polys[n]
    }

    pub fn polys(&self) -> &[Vec<f64>] {
        &self.polys
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
}

/// Build orthonormal polynomials by the Stieltjes procedure: iterated
/// weighted inner products, never raw moment matrices.
///
/// Signs follow the positive-leading-coefficient convention, and
/// `Q_n(-p) = (-1)^n Q_n(p)` holds exactly on the mirror grid.
pub fn orthonormalize(measure: &Measure, degree_max: usize) -> Result<OrthoBasis> {
    if degree_max > DEGREE_CAP {
        return Err(Error::DegreeCap(degree_max));
    }
    let grid = measure.grid().clone();
    let n = grid.len();
    let sw = simpson_weights(n, grid.spacing());
    // Combined quadrature-and-measure weights for the inner products.
    let qw: Vec<f64> = sw
        .iter()
        .zip(measure.weight())
        .map(|(a, b)| a * b)
        .collect();
    let inner = |f: &[f64], g: &[f64]| -> f64 {
        f.iter()
            .zip(g)
            .zip(&qw)
            .map(|((x, y), w)| x * y * w)
            .sum()
    };
    let points = grid.points();

    let mass: f64 = qw.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::Unstable {
            degree: 0,
            reason: "measure has zero discrete mass".into(),
        });
    }
    let mut polys: Vec<Vec<f64>> = Vec::with_capacity(degree_max + 1);
    polys.push(vec![1.0 / mass.sqrt(); n]);
    let mut betas: Vec<f64> = Vec::with_capacity(degree_max);

    for k in 1..=degree_max {
        let prev = &polys[k - 1];
        let mut t: Vec<f64> = points.iter().zip(prev).map(|(p, q)| p * q).collect();
        if k >= 2 {
            let sb = betas[k - 2].sqrt();
            for (tj, qj) in t.iter_mut().zip(&polys[k - 2]) {
                *tj -= sb * qj;
            }
        }
        // Guard against gradual loss of orthogonality at high degree: project
        // out any residue on earlier same-parity polynomials (the opposite
        // parity is orthogonal exactly).
        let mut m = k % 2;
        while m + 2 <= k {
            let c = inner(&t, &polys[m]);
            for (tj, qj) in t.iter_mut().zip(&polys[m]) {
                *tj -= c * qj;
            }
            m += 2;
        }
        // Enforce exact parity (-1)^k on the mirror grid.
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for j in 0..n / 2 {
            let avg = 0.5 * (t[j] + sign * t[n - 1 - j]);
            t[j] = avg;
            t[n - 1 - j] = sign * avg;
        }
        let beta = inner(&t, &t);
        if !(beta.is_finite() && beta > 1e-280) {
            return Err(Error::Unstable {
                degree: k,
                reason: format!("recurrence coefficient beta_{k} = {beta} is not positive"),
            });
        }
        let sb = beta.sqrt();
        for tj in t.iter_mut() {
            *tj /= sb;
        }
        betas.push(beta);
        polys.push(t);
    }

    // Orthonormality residual check against the same discrete inner product.
    let mut residual = 0.0_f64;
    for m in 0..=degree_max {
        for l in m..=degree_max {
            let v = inner(&polys[m], &polys[l]);
            let target = if m == l { 1.0 } else { 0.0 };
            residual = residual.max((v - target).abs());
        }
    }
    if residual > 1e-6 {
        return Err(Error::Unstable {
            degree: degree_max,
            reason: format!("orthonormality residual {residual:.3e} exceeds 1e-6"),
        });
    }

    Ok(OrthoBasis {
        grid,
        degree_max,
        recurrence_b: betas,
        polys,
    })
}

/// Discrete inner product `\int f g w dp` under a measure, used as an
/// independent check in the tests.
#[cfg(test)]
pub(crate) fn measure_inner(measure: &Measure, f: &[f64], g: &[f64]) -> f64 {
    let sw = simpson_weights(measure.grid().len(), measure.grid().spacing());
    f.iter()
        .zip(g)
        .zip(sw.iter().zip(measure.weight()))
        .map(|((x, y), (a, b))| x * y * a * b)
        .sum()
}
