use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid symmetric about the origin with a power-of-two point count.
///
/// Points sit at `x_j = (j - (n-1)/2) * spacing`, so the grid is exactly
/// mirror symmetric (`x_j = -x_{n-1-j}` in floating point) and does not
/// contain the origin itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grid {
    x_max: f64,
    n_points: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(x_max: f64, n_points: usize) -> Result<Grid> {
        if !(x_max.is_finite() && x_max > 0.0) {
            return Err(Error::BadGridWidth(x_max));
        }
        if n_points < 2 {
            return Err(Error::GridTooSmall(n_points));
        }
        if !n_points.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n_points));
        }
        let spacing = 2.0 * x_max / (n_points as f64 - 1.0);
        Ok(Grid {
            x_max,
            n_points,
            spacing,
        })
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn x_min(&self) -> f64 {
        -self.x_max
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn point(&self, j: usize) -> f64 {
        (j as f64 - (self.n_points as f64 - 1.0) / 2.0) * self.spacing
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.point(j)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x.is_finite() && x.abs() <= self.x_max * (1.0 + 1e-12)
    }

    /// Conjugate (momentum) grid of the unitary Fourier transform on this grid.
    pub fn conjugate(&self) -> Grid {
        let dp = 2.0 * std::f64::consts::PI / (self.n_points as f64 * self.spacing);
        let p_max = (self.n_points as f64 - 1.0) / 2.0 * dp;
        Grid {
            x_max: p_max,
            n_points: self.n_points,
            spacing: dp,
        }
    }

    /// Grids are interchangeable when both spacing and extent agree.
    pub fn approx_eq(&self, other: &Grid) -> bool {
        self.n_points == other.n_points
            && (self.spacing - other.spacing).abs() <= 1e-12 * self.spacing.abs()
            && (self.x_max - other.x_max).abs() <= 1e-9 * self.x_max.abs()
    }

    /// Linear interpolation of `values` at `x`; errors outside the grid.
    pub fn lerp(&self, values: &[f64], x: f64) -> Result<f64> {
        if !self.contains(x) {
            return Err(Error::OutOfGrid {
                x,
                min: self.x_min(),
                max: self.x_max,
            });
        }
        Ok(self.lerp_or_zero(values, x))
    }

    /// Linear interpolation treating everything beyond the grid as zero.
    pub fn lerp_or_zero(&self, values: &[f64], x: f64) -> f64 {
        debug_assert_eq!(values.len(), self.n_points);
        let t = (x - self.x_min()) / self.spacing;
        if t < 0.0 || t > (self.n_points - 1) as f64 {
            return 0.0;
        }
        let i = (t.floor() as usize).min(self.n_points - 2);
        let frac = t - i as f64;
        values[i] * (1.0 - frac) + values[i + 1] * frac
    }

    /// Composite-Simpson integral of `values` sampled on this grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_points);
        super::simpson(values, self.spacing)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(Grid::new(1.0, 3), Err(Error::NotPowerOfTwo(3))));
        assert!(matches!(Grid::new(1.0, 1), Err(Error::GridTooSmall(1))));
        assert!(matches!(Grid::new(-1.0, 4), Err(Error::BadGridWidth(_))));
    }

    #[test]
    fn points_are_exactly_mirror_symmetric() {
        let g = Grid::new(12.8, 1 << 11).unwrap();
        for j in 0..g.len() {
            assert_eq!(g.point(j), -g.point(g.len() - 1 - j));
        }
        assert_eq!(g.point(g.len() - 1), g.x_max());
    }

    #[test]
    fn conjugate_spacing_product() {
        let g = Grid::new(40.96, 1 << 13).unwrap();
        let c = g.conjugate();
        let prod = g.spacing() * c.spacing() * g.len() as f64;
        assert!((prod - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn lerp_endpoints_and_outside() {
        let g = Grid::new(1.0, 4).unwrap();
        let vals = vec![1.0, 2.0, 3.0, 4.0];
        assert!((g.lerp(&vals, g.point(2)).unwrap() - 3.0).abs() < 1e-12);
        assert!(g.lerp(&vals, 1.5).is_err());
        assert_eq!(g.lerp_or_zero(&vals, 1.5), 0.0);
    }
}
