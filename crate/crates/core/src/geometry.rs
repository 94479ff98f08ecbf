//! Time grid, approximation boxes and the maps that bring points back to
//! the unit cube.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("no approximation box at step {step} (boxes exist for 1..={last})")]
    NoBox { step: usize, last: usize },
    #[error("invalid domain parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Equidistant grid `t_n = n T / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self, GeometryError> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(GeometryError::InvalidParameter("horizon must be positive"));
        }
        if steps == 0 {
            return Err(GeometryError::InvalidParameter("steps must be positive"));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn h(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn t(&self, n: usize) -> f64 {
        if n == self.steps {
            self.horizon
        } else {
            n as f64 * self.horizon / self.steps as f64
        }
    }
}

/// Per-step boxes `O_n = prod_l [a^n_l, b^n_l]` for `n = 1..N-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    dim: usize,
    lower: Vec<Vec<f64>>,
    upper: Vec<Vec<f64>>,
}

impl DomainBox {
    /// Builds a box family from explicit corners; `lower[n-1]` is the lower
    /// corner at step `n`.
    pub fn from_corners(lower: Vec<Vec<f64>>, upper: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        if lower.len() != upper.len() {
            return Err(GeometryError::InvalidParameter(
                "corner lists differ in length",
            ));
        }
        let dim = lower.first().map_or(0, Vec::len);
        for (a, b) in lower.iter().zip(&upper) {
            if a.len() != dim || b.len() != dim {
                return Err(GeometryError::InvalidParameter("corner dimension mismatch"));
            }
            if a.iter().zip(b).any(|(a, b)| !(a < b)) {
                return Err(GeometryError::InvalidParameter(
                    "lower corner must be below upper",
                ));
            }
        }
        Ok(Self { dim, lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Last step carrying a box (`N - 1`).
    pub fn last_step(&self) -> usize {
        self.lower.len()
    }

    fn slot(&self, n: usize) -> Result<usize, GeometryError> {
        if n == 0 || n > self.lower.len() {
            Err(GeometryError::NoBox {
                step: n,
                last: self.lower.len(),
            })
        } else {
            Ok(n - 1)
        }
    }

    pub fn lower(&self, n: usize) -> Result<&[f64], GeometryError> {
        Ok(&self.lower[self.slot(n)?])
    }

    pub fn upper(&self, n: usize) -> Result<&[f64], GeometryError> {
        Ok(&self.upper[self.slot(n)?])
    }

    /// Affine chart `x_j -> (x_j - a^n_j) / (b^n_j - a^n_j)`.
    pub fn chart(&self, n: usize, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let s = self.slot(n)?;
        let mut out = vec![0.0; x.len()];
        self.chart_slot(s, x, &mut out);
        Ok(out)
    }

    /// Unchecked chart used on the hot path; `n` must be in `1..=last_step()`.
    #[inline]
    pub fn chart_into(&self, n: usize, x: &[f64], out: &mut [f64]) {
        self.chart_slot(n - 1, x, out);
    }

    #[inline]
    fn chart_slot(&self, s: usize, x: &[f64], out: &mut [f64]) {
        let (a, b) = (&self.lower[s], &self.upper[s]);
        for j in 0..x.len() {
            out[j] = (x[j] - a[j]) / (b[j] - a[j]);
        }
    }

    pub fn unchart(&self, n: usize, u: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let s = self.slot(n)?;
        let (a, b) = (&self.lower[s], &self.upper[s]);
        Ok(u.iter()
            .enumerate()
            .map(|(j, v)| a[j] + v * (b[j] - a[j]))
            .collect())
    }
}

fn check_common(r: f64, sigma: f64) -> Result<(), GeometryError> {
    if !(r > 0.0) {
        return Err(GeometryError::InvalidParameter(
            "width factor r must be positive",
        ));
    }
    if !(sigma > 0.0) {
        return Err(GeometryError::InvalidParameter("sigma must be positive"));
    }
    Ok(())
}

/// Boxes for a Brownian motion with drift:
/// `x0 + [mu t_n - r sigma sqrt(t_n), mu t_n + r sigma sqrt(t_n)]^d`.
pub fn domain_bm(
    x0: &[f64],
    mu: f64,
    sigma: f64,
    r: f64,
    grid: &TimeGrid,
) -> Result<DomainBox, GeometryError> {
    check_common(r, sigma)?;
    let (mut lower, mut upper) = (Vec::new(), Vec::new());
    for n in 1..grid.steps() {
        let t = grid.t(n);
        let half = r * sigma * t.sqrt();
        lower.push(x0.iter().map(|x| x + mu * t - half).collect());
        upper.push(x0.iter().map(|x| x + mu * t + half).collect());
    }
    DomainBox::from_corners(lower, upper).map(|b| DomainBox { dim: x0.len(), ..b })
}

/// Boxes for a geometric Brownian motion:
/// `[x0 e^{R - r sigma sqrt(t_n)}, x0 e^{R + r sigma sqrt(t_n)}]`,
/// `R = (mu - sigma^2 / 2) t_n`.
pub fn domain_gbm(
    x0: &[f64],
    mu: f64,
    sigma: f64,
    r: f64,
    grid: &TimeGrid,
) -> Result<DomainBox, GeometryError> {
    check_common(r, sigma)?;
    if x0.iter().any(|&x| !(x > 0.0)) {
        return Err(GeometryError::InvalidParameter("x0 must be positive"));
    }
    let (mut lower, mut upper) = (Vec::new(), Vec::new());
    for n in 1..grid.steps() {
        let t = grid.t(n);
        let drift = (mu - 0.5 * sigma * sigma) * t;
        let half = r * sigma * t.sqrt();
        lower.push(x0.iter().map(|x| x * (drift - half).exp()).collect());
        upper.push(x0.iter().map(|x| x * (drift + half).exp()).collect());
    }
    DomainBox::from_corners(lower, upper).map(|b| DomainBox { dim: x0.len(), ..b })
}

/// Fractional part of one coordinate, always in `[0, 1)`.
#[inline]
pub fn periodize_scalar(x: f64) -> f64 {
    let f = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Representative of `x` in `[0,1)^d` modulo `Z^d`.
pub fn periodize(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| periodize_scalar(v)).collect()
}

#[inline]
pub fn periodize_into(x: &[f64], out: &mut [f64]) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o = periodize_scalar(v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t: f64, n: usize) -> TimeGrid {
        TimeGrid::new(t, n).unwrap()
    }

    #[test]
    fn time_grid_hits_horizon_exactly() {
        let g = grid(0.3, 7);
        assert_eq!(g.t(7), 0.3);
        assert_eq!(g.t(0), 0.0);
        assert!((g.h() - 0.3 / 7.0).abs() < 1e-18);
        assert!(TimeGrid::new(0.0, 3).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn bm_box_at_unit_time() {
        // N = 2, T = 2 gives t_1 = 1
        let b = domain_bm(&[0.0, 0.0], 0.0, 1.0, 2.0, &grid(2.0, 2)).unwrap();
        assert_eq!(b.lower(1).unwrap(), &[-2.0, -2.0]);
        assert_eq!(b.upper(1).unwrap(), &[2.0, 2.0]);
        assert!(b.lower(0).is_err());
        assert!(b.lower(2).is_err());
    }

    #[test]
    fn bm_widths_scale_like_sqrt_time() {
        let g = grid(1.0, 10);
        let b = domain_bm(&[0.3], 0.0, 0.7, 2.5, &g).unwrap();
        let w = |n| b.upper(n).unwrap()[0] - b.lower(n).unwrap()[0];
        let ratio = w(8) / w(2);
        assert!((ratio - (g.t(8) / g.t(2)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gbm_box_without_drift_term() {
        let (sigma, r) = (0.2, 2.5);
        let mu = 0.5 * sigma * sigma;
        let g = grid(0.5, 10);
        let b = domain_gbm(&[100.0, 100.0], mu, sigma, r, &g).unwrap();
        for n in 1..10 {
            let s = r * sigma * g.t(n).sqrt();
            assert!((b.lower(n).unwrap()[0] - 100.0 * (-s).exp()).abs() < 1e-10);
            assert!((b.upper(n).unwrap()[1] - 100.0 * s.exp()).abs() < 1e-10);
            assert!(b.lower(n).unwrap()[0] > 0.0);
        }
        assert!(domain_gbm(&[0.0], 0.06, 0.2, 2.0, &g).is_err());
    }

    #[test]
    fn chart_corners_and_midpoint() {
        let b = domain_bm(&[1.0, -1.0], 0.1, 0.5, 2.0, &grid(1.0, 4)).unwrap();
        for n in 1..4 {
            let (a, c) = (b.lower(n).unwrap().to_vec(), b.upper(n).unwrap().to_vec());
            assert_eq!(b.chart(n, &a).unwrap(), vec![0.0, 0.0]);
            let one = b.chart(n, &c).unwrap();
            assert!(one.iter().all(|v| (v - 1.0).abs() < 1e-15));
            let mid: Vec<f64> = a.iter().zip(&c).map(|(a, c)| 0.5 * (a + c)).collect();
            let m = b.chart(n, &mid).unwrap();
            assert!(m.iter().all(|v| (v - 0.5).abs() < 1e-15));
        }
    }

    #[test]
    fn periodize_examples() {
        assert!((periodize_scalar(1.3) - 0.3).abs() < 1e-15);
        assert_eq!(periodize_scalar(-0.25), 0.75);
        assert_eq!(periodize_scalar(4.0), 0.0);
        assert_eq!(periodize_scalar(-1e-18), 0.0);
    }
}
