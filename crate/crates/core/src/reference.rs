//! Reference values: Monte-Carlo Cole-Hopf estimates for the quadratic
//! model and closed-form evaluation where a benchmark has one.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::models::{Model, Quadratic};
use crate::simulation::path_rng;

/// Samples drawn per independent stream; fixes the reduction order.
const CHUNK: usize = 4096;
const Z95: f64 = 1.96;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReferenceError {
    #[error("model '{0}' has no closed-form solution")]
    Unsupported(String),
    #[error("invalid reference request: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceEstimate {
    pub y0: f64,
    pub z0: Vec<f64>,
    /// Standard errors of the `z0` coordinates.
    pub z0_se: Vec<f64>,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: usize,
    pub seed: u64,
}

impl ReferenceEstimate {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }

    pub const CSV_HEADER_PREFIX: &'static str = "y0,ci_low,ci_high";

    pub fn csv_header(&self) -> String {
        let mut h = Self::CSV_HEADER_PREFIX.to_string();
        for i in 0..self.z0.len() {
            h.push_str(&format!(",z0_{i}"));
        }
        h
    }

    pub fn csv_row(&self) -> String {
        let mut r = format!("{:?},{:?},{:?}", self.y0, self.ci_low, self.ci_high);
        for z in &self.z0 {
            r.push_str(&format!(",{z:?}"));
        }
        r
    }
}

#[derive(Clone)]
struct Sums {
    w: f64,
    w2: f64,
    zw: Vec<f64>,
    zw2: Vec<f64>,
}

impl Sums {
    fn zero(d: usize) -> Self {
        Self {
            w: 0.0,
            w2: 0.0,
            zw: vec![0.0; d],
            zw2: vec![0.0; d],
        }
    }

    fn add(mut self, o: &Sums) -> Self {
        self.w += o.w;
        self.w2 += o.w2;
        for i in 0..self.zw.len() {
            self.zw[i] += o.zw[i];
            self.zw2[i] += o.zw2[i];
        }
        self
    }
}

/// `u(t, x) = (1/a) log E[exp(a g(x + W_{T-t}))]` and
/// `z_i = E[d_i g exp(a g)] / E[exp(a g)]`, with a delta-method 95%
/// interval for `u`. For `a = 0` the plain mean of `g` is returned.
pub fn cole_hopf(
    model: &Quadratic,
    horizon: f64,
    t: f64,
    x: &[f64],
    samples: usize,
    seed: u64,
) -> Result<ReferenceEstimate, ReferenceError> {
    let d = model.dim();
    if x.len() != d {
        return Err(ReferenceError::Invalid(format!(
            "x has {} coordinates, expected {d}",
            x.len()
        )));
    }
    if samples < 2 {
        return Err(ReferenceError::Invalid("need at least two samples".into()));
    }
    if !(t <= horizon) {
        return Err(ReferenceError::Invalid(
            "t must not exceed the horizon".into(),
        ));
    }
    let a = model.a();
    let sd = (horizon - t).sqrt();
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<Sums> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = path_rng(seed, c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut s = Sums::zero(d);
            let mut p = vec![0.0; d];
            let mut grad = vec![0.0; d];
            for _ in 0..count {
                for (pi, xi) in p.iter_mut().zip(x) {
                    let g: f64 = rng.sample(StandardNormal);
                    *pi = xi + sd * g;
                }
                let g = model.terminal(&p);
                let w = if a == 0.0 { g } else { (a * g).exp() };
                Quadratic::terminal_grad(&p, &mut grad);
                let zw_weight = if a == 0.0 { 1.0 } else { w };
                s.w += w;
                s.w2 += w * w;
                for i in 0..d {
                    let v = grad[i] * zw_weight;
                    s.zw[i] += v;
                    s.zw2[i] += v * v;
                }
            }
            s
        })
        .collect();
    let total = partial.iter().fold(Sums::zero(d), |acc, s| acc.add(s));
    let n = samples as f64;
    let mean = total.w / n;
    let var = ((total.w2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
    let se = (var / n).sqrt();
    let (y0, half) = if a == 0.0 {
        (mean, Z95 * se)
    } else {
        (mean.ln() / a, Z95 * se / (a.abs() * mean))
    };
    let norm = if a == 0.0 { 1.0 } else { mean };
    let z0: Vec<f64> = total.zw.iter().map(|s| s / n / norm).collect();
    let z0_se = total
        .zw
        .iter()
        .zip(&total.zw2)
        .map(|(s, s2)| {
            let m = s / n;
            (((s2 / n - m * m) * n / (n - 1.0)).max(0.0) / n).sqrt() / norm
        })
        .collect();
    Ok(ReferenceEstimate {
        y0,
        z0,
        z0_se,
        ci_low: y0 - half,
        ci_high: y0 + half,
        samples,
        seed,
    })
}

/// Closed-form `u(t, x)`.
pub fn exact_y0(model: &dyn Model, t: f64, x: &[f64]) -> Result<f64, ReferenceError> {
    model
        .exact(t, x)
        .ok_or_else(|| ReferenceError::Unsupported(model.name().to_string()))
}

/// Closed-form `sigma^T grad u (t, x)`.
pub fn exact_z0(model: &dyn Model, t: f64, x: &[f64]) -> Result<Vec<f64>, ReferenceError> {
    model
        .exact_z(t, x)
        .ok_or_else(|| ReferenceError::Unsupported(model.name().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Challenging, Financial, Periodic};

    #[test]
    fn closed_forms() {
        let c1 = Challenging::new(1, 1.0).unwrap();
        assert!((exact_y0(&c1, 0.0, &[0.5]).unwrap() - 1.3776).abs() < 5e-5);
        let p = Periodic::new(2, 0.3).unwrap();
        let x = [0.12, 0.77];
        assert!((exact_y0(&p, 0.3, &x).unwrap() - p.terminal(&x)).abs() < 1e-14);
        let f = Financial::new(2).unwrap();
        assert!(matches!(
            exact_y0(&f, 0.0, &[100.0; 2]),
            Err(ReferenceError::Unsupported(_))
        ));
    }

    #[test]
    fn zero_coupling_is_plain_mean() {
        let q = Quadratic::new(2, 0.0).unwrap();
        let r = cole_hopf(&q, 1.0, 1.0, &[0.3, -0.4], 100, 3).unwrap();
        // no time left: every sample is g(x)
        assert!((r.y0 - q.terminal(&[0.3, -0.4])).abs() < 1e-14);
        assert!(r.half_width() < 1e-12);
    }

    #[test]
    fn reproducible() {
        let q = Quadratic::new(3, 1.0).unwrap();
        let a = cole_hopf(&q, 1.0, 0.0, &[0.0; 3], 10_000, 9).unwrap();
        let b = cole_hopf(&q, 1.0, 0.0, &[0.0; 3], 10_000, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.ci_low <= a.y0 && a.y0 <= a.ci_high);
    }
}
