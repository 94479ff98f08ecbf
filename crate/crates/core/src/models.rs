//! Benchmark coefficient bundles `(b, sigma, f, g)`.
//!
//! The PDE is `d_t u + L u + f(t, x, u, sigma^T grad u) = 0`, `u(T, .) = g`,
//! with generator `L u = b . grad u + 1/2 tr(sigma sigma^T hess u)`.
//! Drivers take `(t, x, y, z)` throughout; the benchmarks that only depend
//! on `(y, z)` ignore the first two arguments.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown model '{0}'; valid names: periodic, quadratic, financial, challenging, bifurcation")]
    UnknownModel(String),
    #[error("model '{0}' has no closed-form solution")]
    NoClosedForm(String),
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
}

pub const MODEL_NAMES: [&str; 5] = [
    "periodic",
    "quadratic",
    "financial",
    "challenging",
    "bifurcation",
];

#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    Dirac(Vec<f64>),
    /// Uniform on `(0,1)^d`.
    Uniform01,
}

/// Shape of the forward process; selects the approximation boxes and the
/// path stepping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProcessKind {
    /// Each coordinate is `x0 + mu t + sigma W_t`.
    BrownianDrift { mu: f64, sigma: f64 },
    /// Each coordinate is `x0 exp((mu - sigma^2/2) t + sigma W_t)`.
    Gbm { mu: f64, sigma: f64 },
    /// Anything else; handled through periodization.
    General,
}

pub trait Model: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    fn initial_law(&self) -> InitialLaw;
    fn process(&self) -> ProcessKind;

    fn drift(&self, x: &[f64], out: &mut [f64]);
    /// `sigma(x)` as a row-major `d x d` matrix.
    fn vol(&self, x: &[f64]) -> Vec<f64>;

    /// Writes `sigma(x) dw` into `out`.
    fn vol_apply(&self, x: &[f64], dw: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let s = self.vol(x);
        for i in 0..d {
            out[i] = (0..d).map(|j| s[i * d + j] * dw[j]).sum();
        }
    }

    fn driver(&self, t: f64, x: &[f64], y: f64, z: &[f64]) -> f64;
    fn driver_dy(&self, t: f64, x: &[f64], y: f64, z: &[f64]) -> f64;
    fn driver_dz(&self, t: f64, x: &[f64], y: f64, z: &[f64], out: &mut [f64]);

    fn terminal(&self, x: &[f64]) -> f64;

    /// Closed-form `u(t, x)`, when the benchmark has one.
    fn exact(&self, _t: f64, _x: &[f64]) -> Option<f64> {
        None
    }

    /// Closed-form `sigma^T grad u (t, x)`, when available.
    fn exact_z(&self, _t: f64, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn has_exact(&self) -> bool {
        let x = vec![0.0; self.dim()];
        self.exact(0.0, &x).is_some()
    }
}

fn diag_matrix(diag: &[f64]) -> Vec<f64> {
    let d = diag.len();
    let mut m = vec![0.0; d * d];
    for (i, v) in diag.iter().enumerate() {
        m[i * d + i] = *v;
    }
    m
}

fn check_dim(d: usize) -> Result<(), ModelError> {
    if d == 0 {
        Err(ModelError::InvalidParameter(
            "dimension must be at least 1".into(),
        ))
    } else {
        Ok(())
    }
}

/// 1-periodic coefficients with a closed-form solution; `X_0 ~ U((0,1)^d)`.
#[derive(Debug, Clone)]
pub struct Periodic {
    dim: usize,
    horizon: f64,
}

impl Periodic {
    pub fn new(dim: usize, horizon: f64) -> Result<Self, ModelError> {
        check_dim(dim)?;
        Ok(Self { dim, horizon })
    }

    fn sigma_ii(&self, xi: f64) -> f64 {
        (0.25 + 0.1 * (2.0 * PI * xi).cos()) / (self.dim as f64 * PI).sqrt()
    }

    fn b_i(xi: f64) -> f64 {
        0.2 * (2.0 * PI * xi).sin()
    }

    fn phase(&self, t: f64, x: &[f64]) -> f64 {
        2.0 * PI * x.iter().sum::<f64>() + 2.0 * PI * (self.horizon - t)
    }

    fn source(&self, t: f64, x: &[f64]) -> f64 {
        let p = self.phase(t, x);
        2.0 * (p.cos() - p.sin())
    }
}

impl Model for Periodic {
    fn name(&self) -> &'static str {
        "periodic"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn initial_law(&self) -> InitialLaw {
        InitialLaw::Uniform01
    }
    fn process(&self) -> ProcessKind {
        ProcessKind::General
    }
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = Self::b_i(xi);
        }
    }
    fn vol(&self, x: &[f64]) -> Vec<f64> {
        let diag: Vec<f64> = x.iter().map(|&xi| self.sigma_ii(xi)).collect();
        diag_matrix(&diag)
    }
    fn vol_apply(&self, x: &[f64], dw: &[f64], out: &mut [f64]) {
        for i in 0..self.dim {
            out[i] = self.sigma_ii(x[i]) * dw[i];
        }
    }
    fn driver(&self, t: f64, x: &[f64], y: f64, z: &[f64]) -> f64 {
        let mut s2 = 0.0;
        let mut bz = 0.0;
        for i in 0..self.dim {
            let s = self.sigma_ii(x[i]);
            s2 += s * s;
            bz += Self::b_i(x[i]) * z[i] / s;
        }
        2.0 * PI * PI * y * s2 - bz + self.source(t, x)
    }
    fn driver_dy(&self, _t: f64, x: &[f64], _y: f64, _z: &[f64]) -> f64 {
        2.0 * PI * PI * x.iter().map(|&xi| self.sigma_ii(xi).powi(2)).sum::<f64>()
    }
    fn driver_dz(&self, _t: f64, x: &[f64], _y: f64, _z: &[f64], out: &mut [f64]) {
        for i in 0..self.dim {
            out[i] = -Self::b_i(x[i]) / self.sigma_ii(x[i]);
        }
    }
    fn terminal(&self, x: &[f64]) -> f64 {
        let s = 2.0 * PI * x.iter().sum::<f64>();
        (s.sin() + s.cos()) / PI
    }
    fn exact(&self, t: f64, x: &[f64]) -> Option<f64> {
        let p = self.phase(t, x);
        Some((p.sin() + p.cos()) / PI)
    }
    fn exact_z(&self, t: f64, x: &[f64]) -> Option<Vec<f64>> {
        let p = self.phase(t, x);
        let du = 2.0 * (p.cos() - p.sin());
        Some(x.iter().map(|&xi| self.sigma_ii(xi) * du).collect())
    }
}

/// `f = a |z|^2`, `g = log((1 + |x|^2) / 2)`, `X = W` started at the origin.
#[derive(Debug, Clone)]
pub struct Quadratic {
    dim: usize,
    a: f64,
}

impl Quadratic {
    pub fn new(dim: usize, a: f64) -> Result<Self, ModelError> {
        check_dim(dim)?;
        Ok(Self { dim, a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `d g / d x_i = 2 x_i / (1 + |x|^2)`.
    pub fn terminal_grad(x: &[f64], out: &mut [f64]) {
        let n2: f64 = x.iter().map(|v| v * v).sum();
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = 2.0 * xi / (1.0 + n2);
        }
    }
}

impl Model for Quadratic {
    fn name(&self) -> &'static str {
        "quadratic"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn initial_law(&self) -> InitialLaw {
        InitialLaw::Dirac(vec![0.0; self.dim])
    }
    fn process(&self) -> ProcessKind {
        ProcessKind::BrownianDrift {
            mu: 0.0,
            sigma: 1.0,
        }
    }
    fn drift(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn vol(&self, _x: &[f64]) -> Vec<f64> {
        diag_matrix(&vec![1.0; self.dim])
    }
    fn vol_apply(&self, _x: &[f64], dw: &[f64], out: &mut [f64]) {
        out.copy_from_slice(dw);
    }
    fn driver(&self, _t: f64, _x: &[f64], _y: f64, z: &[f64]) -> f64 {
        self.a * z.iter().map(|v| v * v).sum::<f64>()
    }
    fn driver_dy(&self, _t: f64, _x: &[f64], _y: f64, _z: &[f64]) -> f64 {
        0.0
    }
    fn driver_dz(&self, _t: f64, _x: &[f64], _y: f64, z: &[f64], out: &mut [f64]) {
        for (o, &zi) in out.iter_mut().zip(z) {
            *o = 2.0 * self.a * zi;
        }
    }
    fn terminal(&self, x: &[f64]) -> f64 {
        ((1.0 + x.iter().map(|v| v * v).sum::<f64>()) / 2.0).ln()
    }
}

/// Parameters of the two-rate option benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinancialParams {
    pub mu: f64,
    pub sigma: f64,
    pub rate_lend: f64,
    pub rate_borrow: f64,
    pub strike_low: f64,
    pub strike_high: f64,
    pub spot: f64,
}

impl Default for FinancialParams {
    fn default() -> Self {
        Self {
            mu: 0.06,
            sigma: 0.2,
            rate_lend: 0.04,
            rate_borrow: 0.06,
            strike_low: 110.0,
            strike_high: 130.0,
            spot: 100.0,
        }
    }
}

/// Call spread on the maximum of `d` geometric Brownian motions under
/// different borrowing and lending rates.
#[derive(Debug, Clone)]
pub struct Financial {
    dim: usize,
    p: FinancialParams,
}

impl Financial {
    pub fn new(dim: usize) -> Result<Self, ModelError> {
        Self::with_params(dim, FinancialParams::default())
    }

    pub fn with_params(dim: usize, p: FinancialParams) -> Result<Self, ModelError> {
        check_dim(dim)?;
        if !(p.sigma > 0.0 && p.spot > 0.0) {
            return Err(ModelError::InvalidParameter(
                "sigma and spot must be positive".into(),
            ));
        }
        Ok(Self { dim, p })
    }

    pub fn params(&self) -> &FinancialParams {
        &self.p
    }

    /// Whether the borrowing branch of the max term is active. The kink
    /// itself counts as inactive, so its subgradient is 0.
    fn borrowing(&self, y: f64, z: &[f64]) -> bool {
        z.iter().sum::<f64>() / self.p.sigma - y > 0.0
    }
}

impl Model for Financial {
    fn name(&self) -> &'static str {
        "financial"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn initial_law(&self) -> InitialLaw {
        InitialLaw::Dirac(vec![self.p.spot; self.dim])
    }
    fn process(&self) -> ProcessKind {
        ProcessKind::Gbm {
            mu: self.p.mu,
            sigma: self.p.sigma,
        }
    }
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = self.p.mu * xi;
        }
    }
    fn vol(&self, x: &[f64]) -> Vec<f64> {
        let diag: Vec<f64> = x.iter().map(|&xi| self.p.sigma * xi).collect();
        diag_matrix(&diag)
    }
    fn vol_apply(&self, x: &[f64], dw: &[f64], out: &mut [f64]) {
        for i in 0..self.dim {
            out[i] = self.p.sigma * x[i] * dw[i];
        }
    }
    fn driver(&self, _t: f64, _x: &[f64], y: f64, z: &[f64]) -> f64 {
        let p = &self.p;
        let sz: f64 = z.iter().sum();
        -p.rate_lend * y - (p.mu - p.rate_lend) / p.sigma * sz
            + (p.rate_borrow - p.rate_lend) * (sz / p.sigma - y).max(0.0)
    }
    fn driver_dy(&self, _t: f64, _x: &[f64], y: f64, z: &[f64]) -> f64 {
        let p = &self.p;
        if self.borrowing(y, z) {
            -p.rate_lend - (p.rate_borrow - p.rate_lend)
        } else {
            -p.rate_lend
        }
    }
    fn driver_dz(&self, _t: f64, _x: &[f64], y: f64, z: &[f64], out: &mut [f64]) {
        let p = &self.p;
        let mut g = -(p.mu - p.rate_lend) / p.sigma;
        if self.borrowing(y, z) {
            g += (p.rate_borrow - p.rate_lend) / p.sigma;
        }
        out.fill(g);
    }
    fn terminal(&self, x: &[f64]) -> f64 {
        let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (m - self.p.strike_low).max(0.0) - 2.0 * (m - self.p.strike_high).max(0.0)
    }
}

/// Unbounded solution mixing a ramp and an oscillation;
/// `X = x0 + W / sqrt(d)`, `x0 = 0.5 * 1`.
#[derive(Debug, Clone)]
pub struct Challenging {
    dim: usize,
    horizon: f64,
}

impl Challenging {
    pub fn new(dim: usize, horizon: f64) -> Result<Self, ModelError> {
        check_dim(dim)?;
        Ok(Self { dim, horizon })
    }

    fn weighted_sum(x: &[f64]) -> f64 {
        x.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum()
    }

    fn c(&self) -> f64 {
        let d = self.dim as f64;
        (d + 1.0) * (2.0 * d + 1.0) / 12.0
    }

    fn a_term(&self, x: &[f64]) -> f64 {
        x.iter()
            .map(|&v| if v < 0.0 { v.sin() } else { 0.0 })
            .sum::<f64>()
            / self.dim as f64
    }

    fn b_term(&self, x: &[f64]) -> f64 {
        x.iter()
            .map(|&v| if v >= 0.0 { v } else { 0.0 })
            .sum::<f64>()
            / self.dim as f64
    }
}

impl Model for Challenging {
    fn name(&self) -> &'static str {
        "challenging"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn initial_law(&self) -> InitialLaw {
        InitialLaw::Dirac(vec![0.5; self.dim])
    }
    fn process(&self) -> ProcessKind {
        ProcessKind::BrownianDrift {
            mu: 0.0,
            sigma: 1.0 / (self.dim as f64).sqrt(),
        }
    }
    fn drift(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn vol(&self, _x: &[f64]) -> Vec<f64> {
        diag_matrix(&vec![1.0 / (self.dim as f64).sqrt(); self.dim])
    }
    fn vol_apply(&self, _x: &[f64], dw: &[f64], out: &mut [f64]) {
        let s = 1.0 / (self.dim as f64).sqrt();
        for (o, &w) in out.iter_mut().zip(dw) {
            *o = s * w;
        }
    }
    fn driver(&self, t: f64, x: &[f64], _y: f64, _z: &[f64]) -> f64 {
        let tau = self.horizon - t;
        (1.0 + tau / (2.0 * self.dim as f64)) * self.a_term(x)
            + self.b_term(x)
            + self.c() * Self::weighted_sum(x).cos()
    }
    fn driver_dy(&self, _t: f64, _x: &[f64], _y: f64, _z: &[f64]) -> f64 {
        0.0
    }
    fn driver_dz(&self, _t: f64, _x: &[f64], _y: f64, _z: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn terminal(&self, x: &[f64]) -> f64 {
        Self::weighted_sum(x).cos()
    }
    fn exact(&self, t: f64, x: &[f64]) -> Option<f64> {
        let tau = self.horizon - t;
        Some(tau * (self.a_term(x) + self.b_term(x)) + Self::weighted_sum(x).cos())
    }
    fn exact_z(&self, t: f64, x: &[f64]) -> Option<Vec<f64>> {
        let tau = self.horizon - t;
        let d = self.dim as f64;
        let s = Self::weighted_sum(x).sin();
        Some(
            x.iter()
                .enumerate()
                .map(|(i, &v)| {
                    let ramp = if v < 0.0 { v.cos() } else { 1.0 };
                    (tau / d * ramp - (i + 1) as f64 * s) / d.sqrt()
                })
                .collect(),
        )
    }
}

/// `f = arctan(a y) + sum_j z_j`, logistic terminal, `X = W` from the origin.
#[derive(Debug, Clone)]
pub struct Bifurcation {
    dim: usize,
    a: f64,
}

impl Bifurcation {
    pub fn new(dim: usize, a: f64) -> Result<Self, ModelError> {
        check_dim(dim)?;
        Ok(Self { dim, a })
    }
}

impl Model for Bifurcation {
    fn name(&self) -> &'static str {
        "bifurcation"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn initial_law(&self) -> InitialLaw {
        InitialLaw::Dirac(vec![0.0; self.dim])
    }
    fn process(&self) -> ProcessKind {
        ProcessKind::BrownianDrift {
            mu: 0.0,
            sigma: 1.0,
        }
    }
    fn drift(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn vol(&self, _x: &[f64]) -> Vec<f64> {
        diag_matrix(&vec![1.0; self.dim])
    }
    fn vol_apply(&self, _x: &[f64], dw: &[f64], out: &mut [f64]) {
        out.copy_from_slice(dw);
    }
    fn driver(&self, _t: f64, _x: &[f64], y: f64, z: &[f64]) -> f64 {
        (self.a * y).atan() + z.iter().sum::<f64>()
    }
    fn driver_dy(&self, _t: f64, _x: &[f64], y: f64, _z: &[f64]) -> f64 {
        self.a / (1.0 + self.a * self.a * y * y)
    }
    fn driver_dz(&self, _t: f64, _x: &[f64], _y: f64, _z: &[f64], out: &mut [f64]) {
        out.fill(1.0);
    }
    fn terminal(&self, x: &[f64]) -> f64 {
        let s = 1.0 + x.iter().sum::<f64>();
        // logistic written to stay finite for large |s|
        if s >= 0.0 {
            1.0 / (1.0 + (-s).exp())
        } else {
            let e = s.exp();
            e / (1.0 + e)
        }
    }
}

/// Named model parameters as they appear in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub dim: usize,
    pub horizon: f64,
    pub a: Option<f64>,
}

/// Builds a benchmark by name.
pub fn build_model(name: &str, params: ModelParams) -> Result<Box<dyn Model>, ModelError> {
    let need_a = |default: Option<f64>| {
        params.a.or(default).ok_or_else(|| {
            ModelError::InvalidParameter(format!("model '{name}' requires parameter a"))
        })
    };
    Ok(match name {
        "periodic" => Box::new(Periodic::new(params.dim, params.horizon)?),
        "quadratic" => Box::new(Quadratic::new(params.dim, need_a(Some(1.0))?)?),
        "financial" => Box::new(Financial::new(params.dim)?),
        "challenging" => Box::new(Challenging::new(params.dim, params.horizon)?),
        "bifurcation" => Box::new(Bifurcation::new(params.dim, need_a(None)?)?),
        other => return Err(ModelError::UnknownModel(other.to_string())),
    })
}
