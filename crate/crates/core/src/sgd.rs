//! Learning-rate schedules, the direct SGD solver, the inner Picard
//! operator `Phi_M` and the outer Picard loop.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{InitialLaw, Model};
use crate::parametrization::{y0_at, Coefficients, SpaceLayout, Workspace};
use crate::simulation::{path_rng, Path, PathBatch, PathRef, PathSampler, Stepping};

/// Coefficients with an entry above this magnitude count as diverged.
pub const DIVERGENCE_BOUND: f64 = 1e8;
/// Upper bound on the trailing window used for reported averages.
pub const TRAILING_WINDOW: u64 = 10_000;
/// Fresh draws used for the mean squared error under a uniform start.
pub const MSE_DRAWS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("coefficients diverged at step {step}{}; last finite step {last_finite}", iteration.map(|p| format!(" of Picard iteration {p}")).unwrap_or_default())]
    Diverged {
        iteration: Option<usize>,
        step: u64,
        last_finite: u64,
    },
    #[error("coefficient shapes do not match the approximation spaces")]
    ShapeMismatch,
    #[error("invalid solver setting: {0}")]
    InvalidSetting(String),
}

/// `(alpha, beta1, beta0, m0)` of one coefficient group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupRate {
    pub alpha: f64,
    pub beta1: f64,
    pub beta0: f64,
    pub m0: f64,
}

impl GroupRate {
    pub const fn new(alpha: f64, beta1: f64, beta0: f64, m0: f64) -> Self {
        Self {
            alpha,
            beta1,
            beta0,
            m0,
        }
    }

    /// `(beta1 n + beta0) / (1 + (m + m0)^alpha)`.
    pub fn rate(&self, n: usize, m: u64) -> f64 {
        (self.beta1 * n as f64 + self.beta0) / (1.0 + (m as f64 + self.m0).powf(self.alpha))
    }

    fn scaled(&self, f: f64) -> Self {
        Self {
            beta0: self.beta0 * f,
            beta1: self.beta1 * f,
            ..*self
        }
    }

    fn validate(&self) -> Result<(), String> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.beta0 >= 0.0 && self.beta1 >= 0.0 && self.m0 >= 0.0) {
            return Err("beta0, beta1 and m0 must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    Y,
    Z0,
    Zn,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Empirical {
        y: GroupRate,
        z0: GroupRate,
        zn: GroupRate,
    },
    /// `gamma m^{-rho}`, with the `z` groups divided by `sqrt(h)`.
    PowerLaw { gamma: f64, rho: f64 },
}

impl Schedule {
    /// Step size for `group` at time index `n` and step `m >= 1`.
    pub fn rate(&self, group: Group, n: usize, m: u64, h: f64) -> f64 {
        match self {
            Schedule::Empirical { y, z0, zn } => match group {
                Group::Y => y.rate(0, m),
                Group::Z0 => z0.rate(0, m),
                Group::Zn => zn.rate(n, m),
            },
            Schedule::PowerLaw { gamma, rho } => {
                let g = gamma * (m as f64).powf(-rho);
                match group {
                    Group::Y => g,
                    _ => g / h.sqrt(),
                }
            }
        }
    }

    /// Multiplies `beta0` and `beta1` of every group by `f`.
    pub fn scaled(&self, f: f64) -> Self {
        match self {
            Schedule::Empirical { y, z0, zn } => Schedule::Empirical {
                y: y.scaled(f),
                z0: z0.scaled(f),
                zn: zn.scaled(f),
            },
            Schedule::PowerLaw { gamma, rho } => Schedule::PowerLaw {
                gamma: gamma * f,
                rho: *rho,
            },
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Schedule::Empirical { y, z0, zn } => {
                y.validate()?;
                z0.validate()?;
                zn.validate()
            }
            Schedule::PowerLaw { gamma, rho } => {
                if !(*gamma > 0.0) {
                    return Err("power-law gamma must be positive".into());
                }
                if !(*rho > 0.0 && *rho <= 1.0) {
                    return Err("power-law rho must lie in (0, 1]".into());
                }
                Ok(())
            }
        }
    }

    fn group_rate(&self, n: usize, m: u64, h: f64) -> f64 {
        let g = if n == 0 { Group::Z0 } else { Group::Zn };
        self.rate(g, n, m, h)
    }
}

/// A base schedule with per-iteration overrides and an optional geometric
/// decay of `(beta0, beta1)` in the Picard iteration index.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSet {
    pub base: Schedule,
    /// Schedule used from iteration `p` on, until the next key.
    pub overrides: BTreeMap<usize, Schedule>,
    /// Factor `decay^{p-1}` applied to the selected schedule.
    pub decay: Option<f64>,
}

impl ScheduleSet {
    pub fn fixed(base: Schedule) -> Self {
        Self {
            base,
            overrides: BTreeMap::new(),
            decay: None,
        }
    }

    pub fn for_iteration(&self, p: usize) -> Schedule {
        let s = self
            .overrides
            .range(..=p)
            .next_back()
            .map_or(self.base, |(_, s)| *s);
        match self.decay {
            Some(f) if p > 1 => s.scaled(f.powi(p as i32 - 1)),
            _ => s,
        }
    }
}

/// Where the `m`-th training path comes from.
pub trait PathSource {
    fn next_path(&mut self, m: u64) -> PathRef<'_>;
}

/// Fresh independent paths: step `m` uses stream `m - 1` of the seed.
pub struct FreshPaths<'a> {
    sampler: PathSampler<'a>,
    seed: u64,
    buf: Path,
}

impl<'a> FreshPaths<'a> {
    pub fn new(model: &'a dyn Model, layout: &SpaceLayout, stepping: Stepping, seed: u64) -> Self {
        Self {
            sampler: PathSampler::new(model, *layout.grid(), stepping),
            seed,
            buf: Path::zeros(model.dim(), layout.steps()),
        }
    }
}

impl PathSource for FreshPaths<'_> {
    fn next_path(&mut self, m: u64) -> PathRef<'_> {
        self.buf = self.sampler.sample(self.seed, m - 1);
        self.buf.view()
    }
}

/// Uniform draws with replacement from a fixed batch, so SGD targets the
/// empirical problem of that batch.
pub struct Resample<'a> {
    batch: &'a PathBatch,
    rng: ChaCha8Rng,
}

impl<'a> Resample<'a> {
    pub fn new(batch: &'a PathBatch, seed: u64) -> Self {
        Self {
            batch,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl PathSource for Resample<'_> {
    fn next_path(&mut self, _m: u64) -> PathRef<'_> {
        let i = self.rng.random_range(0..self.batch.len());
        self.batch.path(i)
    }
}

/// Which residual drives each block of the Picard update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualMode {
    /// Each block regresses `G` on its own features only.
    #[default]
    Block,
    /// Every block uses the full residual `G - u . Omega`.
    Joint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardConfig {
    /// `P`.
    pub outer: usize,
    /// `M`.
    pub inner: u64,
    /// `beta_K`; estimated when `None` and the schedule is a power law.
    pub beta_k: Option<f64>,
    pub warm_start: bool,
    pub residual: ResidualMode,
    /// Standard deviation of the jitter added to the initial coefficients
    /// of every iteration when `warm_start` is off.
    pub jitter: f64,
    pub stepping: Stepping,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            outer: 1,
            inner: 1000,
            beta_k: None,
            warm_start: true,
            residual: ResidualMode::Block,
            jitter: 0.01,
            stepping: Stepping::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectConfig {
    /// `M`.
    pub steps: u64,
    pub seed: u64,
    pub stepping: Stepping,
}

/// Summary of one SGD run (one direct solve or one Picard iteration).
#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    /// 1-based Picard index, 1 for the direct algorithm.
    pub p: usize,
    /// Trailing-window mean of the estimate stream.
    pub y0: f64,
    /// Estimate after the last step.
    pub y0_last: f64,
    /// Trailing-window mean of `z^0` (Dirac start only).
    pub z0: Vec<f64>,
    /// Trailing-window mean of the per-step squared error at the fresh start
    /// point, when a closed form is known.
    pub mse_trailing: Option<f64>,
    /// Mean squared error of the final coefficients on fresh uniform draws.
    pub mse_fresh: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub coefficients: Coefficients,
    /// Estimate stream of the last SGD run: `y_m` under a Dirac start,
    /// `Y_0^{u_m}(X_0^{m+1})` under a uniform start.
    pub trace: Vec<f64>,
    pub iterations: Vec<IterationReport>,
    pub y0: f64,
    pub z0: Vec<f64>,
    pub mse_trailing: Option<f64>,
    pub mse_fresh: Option<f64>,
    pub beta_k: Option<f64>,
    pub seed: u64,
    pub wall_time: Duration,
}

/// Running statistics of one SGD run.
struct Tracker {
    window_start: u64,
    trace: Vec<f64>,
    y_sum: f64,
    z_sum: Vec<f64>,
    err_sum: f64,
    count: u64,
    has_exact: bool,
}

impl Tracker {
    fn new(steps: u64, d: usize, has_exact: bool) -> Self {
        let window = TRAILING_WINDOW.min(steps / 2).max(1).min(steps.max(1));
        Self {
            window_start: steps.saturating_sub(window) + 1,
            trace: Vec::with_capacity(steps as usize),
            y_sum: 0.0,
            z_sum: vec![0.0; d],
            err_sum: 0.0,
            count: 0,
            has_exact,
        }
    }

    fn record(&mut self, m: u64, y: f64, z0: Option<&[f64]>, err: f64) {
        self.trace.push(y);
        if m >= self.window_start {
            self.y_sum += y;
            if let Some(z) = z0 {
                for (s, v) in self.z_sum.iter_mut().zip(z) {
                    *s += v;
                }
            }
            self.err_sum += err;
            self.count += 1;
        }
    }

    fn finish(
        self,
        p: usize,
        layout: &SpaceLayout,
        c: &Coefficients,
        model: &dyn Model,
        seed: u64,
    ) -> (IterationReport, Vec<f64>) {
        let n = self.count.max(1) as f64;
        let dirac = layout.is_dirac();
        let y_last = if dirac {
            c.y[0]
        } else {
            *self.trace.last().unwrap_or(&f64::NAN)
        };
        let (y0, z0) = if self.count == 0 {
            (
                if dirac { c.y[0] } else { f64::NAN },
                if dirac { c.z[0].clone() } else { Vec::new() },
            )
        } else if dirac {
            (self.y_sum / n, self.z_sum.iter().map(|s| s / n).collect())
        } else {
            (self.y_sum / n, Vec::new())
        };
        let uniform = !dirac && self.has_exact;
        let report = IterationReport {
            p,
            y0,
            y0_last: y_last,
            z0,
            mse_trailing: (uniform && self.count > 0).then(|| self.err_sum / n),
            mse_fresh: uniform.then(|| fresh_mse(layout, c, model, seed)),
        };
        (report, self.trace)
    }
}

/// `E |Y_0^u(X_0) - u(0, X_0)|^2` over fresh uniform draws.
pub fn fresh_mse(layout: &SpaceLayout, c: &Coefficients, model: &dyn Model, seed: u64) -> f64 {
    let d = model.dim();
    let mut rng = path_rng(seed ^ 0x6d73_655f_6472_6177, u64::MAX);
    let mut x = vec![0.0; d];
    let mut s = 0.0;
    for _ in 0..MSE_DRAWS {
        for v in &mut x {
            *v = rng.random::<f64>();
        }
        let u = model.exact(0.0, &x).unwrap_or(f64::NAN);
        let e = y0_at(layout, c, &x) - u;
        s += e * e;
    }
    s / MSE_DRAWS as f64
}

/// Instantaneous estimate and squared error at a loaded path's start.
fn start_estimate(
    ws: &Workspace,
    c: &Coefficients,
    model: &dyn Model,
    x0: &[f64],
    has_exact: bool,
) -> (f64, f64) {
    let y: f64 = ws.basis_y.iter().map(|(k, p)| p * c.y[k]).sum();
    let err = if has_exact {
        let u = model.exact(0.0, x0).unwrap_or(f64::NAN);
        (y - u) * (y - u)
    } else {
        0.0
    };
    (y, err)
}

struct Guard {
    iteration: Option<usize>,
}

impl Guard {
    #[inline]
    fn check(&self, v: f64, m: u64) -> Result<(), SolveError> {
        if v.is_finite() && v.abs() <= DIVERGENCE_BOUND {
            Ok(())
        } else {
            Err(SolveError::Diverged {
                iteration: self.iteration,
                step: m,
                last_finite: m - 1,
            })
        }
    }
}

fn has_exact(model: &dyn Model) -> bool {
    matches!(model.initial_law(), InitialLaw::Uniform01) && model.has_exact()
}

/// Runs `steps` direct SGD steps from `init` on paths from `source`.
pub fn direct_sgd(
    model: &dyn Model,
    layout: &SpaceLayout,
    schedule: &Schedule,
    steps: u64,
    source: &mut dyn PathSource,
    init: &Coefficients,
    seed: u64,
) -> Result<(Coefficients, IterationReport, Vec<f64>), SolveError> {
    if !init.matches(layout) {
        return Err(SolveError::ShapeMismatch);
    }
    let d = layout.dim();
    let h = layout.grid().h();
    let exact = has_exact(model);
    let guard = Guard { iteration: None };
    let mut c = init.clone();
    let mut ws = Workspace::new(layout);
    let mut tracker = Tracker::new(steps, d, exact);
    for m in 1..=steps {
        let path = source.next_path(m);
        ws.load_path(layout, &path);
        let (y_est, err) = start_estimate(&ws, &c, model, path.x(0), exact);
        ws.direct_gradient(layout, &c, model, &path);

        let ry = schedule.rate(Group::Y, 0, m, h);
        for (k, p) in ws.basis_y.iter() {
            c.y[k] -= ry * p * ws.grad_y;
            guard.check(c.y[k], m)?;
        }
        for n in 0..layout.steps() {
            let rz = schedule.group_rate(n, m, h);
            let g = &ws.grad_z[n * d..(n + 1) * d];
            let zn = &mut c.z[n];
            for (k, p) in ws.basis[n].iter() {
                for l in 0..d {
                    let v = &mut zn[k * d + l];
                    *v -= rz * p * g[l];
                    guard.check(*v, m)?;
                }
            }
        }
        let y_rec = if layout.is_dirac() { c.y[0] } else { y_est };
        tracker.record(m, y_rec, layout.is_dirac().then_some(&c.z[0][..]), err);
    }
    let (report, trace) = tracker.finish(1, layout, &c, model, seed);
    Ok((c, report, trace))
}

/// The direct algorithm on fresh paths.
pub fn solve_direct(
    model: &dyn Model,
    layout: &SpaceLayout,
    schedule: &Schedule,
    cfg: &DirectConfig,
    init: &Coefficients,
) -> Result<SolveReport, SolveError> {
    schedule.validate().map_err(SolveError::InvalidSetting)?;
    let start = Instant::now();
    let mut source = FreshPaths::new(model, layout, cfg.stepping, cfg.seed);
    let (c, it, trace) = direct_sgd(
        model,
        layout,
        schedule,
        cfg.steps,
        &mut source,
        init,
        cfg.seed,
    )?;
    Ok(SolveReport {
        coefficients: c,
        trace,
        y0: it.y0,
        z0: it.z0.clone(),
        mse_trailing: it.mse_trailing,
        mse_fresh: it.mse_fresh,
        iterations: vec![it],
        beta_k: None,
        seed: cfg.seed,
        wall_time: start.elapsed(),
    })
}

/// Step multipliers applied to the raw least-squares gradient
/// `-2 r omega` for the `y` block and the `z` blocks.
fn picard_multipliers(schedule: &Schedule, beta_k: f64, n: usize, m: u64, h: f64) -> (f64, f64) {
    match schedule {
        // the empirical rates are used on the raw gradient: gamma^y = rate beta_K,
        // gamma^z = rate beta_K sqrt(h)
        Schedule::Empirical { .. } => (
            schedule.rate(Group::Y, 0, m, h),
            schedule.group_rate(n, m, h),
        ),
        Schedule::PowerLaw { .. } => (
            schedule.rate(Group::Y, 0, m, h) / beta_k,
            schedule.group_rate(n, m, h) / (beta_k * h.sqrt()),
        ),
    }
}

/// Dense `H` maps of one path at `c`: the ascent direction of the frozen
/// least-squares problem used by [`phi_m_with`], before step multipliers.
pub fn h_maps(
    layout: &SpaceLayout,
    tilde: &Coefficients,
    c: &Coefficients,
    model: &dyn Model,
    path: &PathRef<'_>,
    mode: ResidualMode,
) -> Coefficients {
    let d = layout.dim();
    let mut ws = Workspace::new(layout);
    ws.load_path(layout, path);
    let target = ws.frozen_target(layout, tilde, model, path);
    let joint = target - ws.feature_dot(layout, c, path);
    let mut out = Coefficients::zeros(layout);
    let y: f64 = ws.basis_y.iter().map(|(k, p)| p * c.y[k]).sum();
    let ry = match mode {
        ResidualMode::Block => target - y,
        ResidualMode::Joint => joint,
    };
    for (k, p) in ws.basis_y.iter() {
        out.y[k] += ry * p;
    }
    let mut zl = vec![0.0; d];
    for n in 0..layout.steps() {
        let w = path.dw(n);
        zl.fill(0.0);
        for (k, p) in ws.basis[n].iter() {
            for l in 0..d {
                zl[l] += p * c.z[n][k * d + l];
            }
        }
        for (k, p) in ws.basis[n].iter() {
            for l in 0..d {
                let r = match mode {
                    ResidualMode::Block => target - w[l] * zl[l],
                    ResidualMode::Joint => joint,
                };
                out.z[n][k * d + l] += r * w[l] * p;
            }
        }
    }
    out
}

/// `Phi_M`: `steps` Robbins-Monro steps on the linear-quadratic problem
/// with the driver frozen at `tilde`.
#[allow(clippy::too_many_arguments)]
pub fn phi_m_with(
    model: &dyn Model,
    layout: &SpaceLayout,
    tilde: &Coefficients,
    schedule: &Schedule,
    steps: u64,
    beta_k: f64,
    residual: ResidualMode,
    source: &mut dyn PathSource,
    init: &Coefficients,
    iteration: Option<usize>,
    seed: u64,
) -> Result<(Coefficients, IterationReport, Vec<f64>), SolveError> {
    if !init.matches(layout) || !tilde.matches(layout) {
        return Err(SolveError::ShapeMismatch);
    }
    let d = layout.dim();
    let h = layout.grid().h();
    let exact = has_exact(model);
    let guard = Guard { iteration };
    let mut c = init.clone();
    let mut ws = Workspace::new(layout);
    let mut zl = vec![0.0; d];
    let mut tracker = Tracker::new(steps, d, exact);
    for m in 1..=steps {
        let path = source.next_path(m);
        ws.load_path(layout, &path);
        let target = ws.frozen_target(layout, tilde, model, &path);
        let (y_est, err) = start_estimate(&ws, &c, model, path.x(0), exact);

        let joint = match residual {
            ResidualMode::Block => 0.0,
            ResidualMode::Joint => target - ws.feature_dot(layout, &c, &path),
        };
        let (cy, _) = picard_multipliers(schedule, beta_k, 0, m, h);
        let ry = match residual {
            ResidualMode::Block => target - y_est,
            ResidualMode::Joint => joint,
        };
        for (k, p) in ws.basis_y.iter() {
            c.y[k] += 2.0 * cy * ry * p;
            guard.check(c.y[k], m)?;
        }
        for n in 0..layout.steps() {
            let (_, cz) = picard_multipliers(schedule, beta_k, n, m, h);
            let w = path.dw(n);
            let zn = &mut c.z[n];
            zl.fill(0.0);
            if residual == ResidualMode::Block {
                for (k, p) in ws.basis[n].iter() {
                    for l in 0..d {
                        zl[l] += p * zn[k * d + l];
                    }
                }
            }
            for l in 0..d {
                let r = match residual {
                    ResidualMode::Block => target - w[l] * zl[l],
                    ResidualMode::Joint => joint,
                };
                zl[l] = 2.0 * cz * r * w[l];
            }
            for (k, p) in ws.basis[n].iter() {
                for l in 0..d {
                    let v = &mut zn[k * d + l];
                    *v += zl[l] * p;
                    guard.check(*v, m)?;
                }
            }
        }
        let y_rec = if layout.is_dirac() { c.y[0] } else { y_est };
        tracker.record(m, y_rec, layout.is_dirac().then_some(&c.z[0][..]), err);
    }
    let (report, trace) = tracker.finish(iteration.unwrap_or(1), layout, &c, model, seed);
    Ok((c, report, trace))
}

/// `Phi_M` on fresh paths of stream family `seed`.
#[allow(clippy::too_many_arguments)]
pub fn phi_m(
    model: &dyn Model,
    layout: &SpaceLayout,
    tilde: &Coefficients,
    cfg: &PicardConfig,
    schedule: &Schedule,
    beta_k: f64,
    seed: u64,
    init: &Coefficients,
) -> Result<Coefficients, SolveError> {
    let mut source = FreshPaths::new(model, layout, cfg.stepping, seed);
    phi_m_with(
        model,
        layout,
        tilde,
        schedule,
        cfg.inner,
        beta_k,
        cfg.residual,
        &mut source,
        init,
        None,
        seed,
    )
    .map(|(c, _, _)| c)
}

/// Monte-Carlo estimate of `beta_K` with
/// `beta_K^2 >= max(1 + E|theta|^4, max_{n,l} 1 + E|omega~^{n,.}_l|^4)`,
/// `omega~ = omega / sqrt(h)`, inflated by 10%.
pub fn estimate_beta_k(
    layout: &SpaceLayout,
    model: &dyn Model,
    samples: usize,
    seed: u64,
    stepping: Stepping,
) -> f64 {
    let d = layout.dim();
    let n_steps = layout.steps();
    let h = layout.grid().h();
    let sampler = PathSampler::new(model, *layout.grid(), stepping);
    let mut ws = Workspace::new(layout);
    let mut theta4 = 0.0;
    let mut omega4 = vec![0.0; n_steps * d];
    for i in 0..samples {
        let p = sampler.sample(seed, i as u64);
        let path = p.view();
        ws.load_path(layout, &path);
        let t2 = ws.basis_y.sum_squares();
        theta4 += t2 * t2;
        for n in 0..n_steps {
            let s2 = ws.basis[n].sum_squares();
            let w = path.dw(n);
            for l in 0..d {
                let o2 = s2 * w[l] * w[l] / h;
                omega4[n * d + l] += o2 * o2;
            }
        }
    }
    let k = samples.max(1) as f64;
    let bound = omega4
        .iter()
        .map(|s| 1.0 + s / k)
        .fold(1.0 + theta4 / k, f64::max);
    1.1 * bound.sqrt()
}

/// Samples used by [`solve_picard`] when `beta_K` must be estimated.
pub const BETA_SAMPLES: usize = 10_000;

/// Gaussian jitter around `init` for a cold start.
fn jittered(init: &Coefficients, layout: &SpaceLayout, sd: f64, seed: u64) -> Coefficients {
    let mut rng = path_rng(seed ^ 0x6a69_7474_6572, u64::MAX - 1);
    let mut flat = init.flatten();
    for v in &mut flat {
        let g: f64 = rng.sample(StandardNormal);
        *v += sd * g;
    }
    Coefficients::from_flat(layout, &flat)
}

/// The outer Picard loop. Iteration `p` draws paths from seed `seed ^ p`
/// and freezes the driver at the previous iterate.
pub fn solve_picard(
    model: &dyn Model,
    layout: &SpaceLayout,
    cfg: &PicardConfig,
    schedules: &ScheduleSet,
    seed: u64,
    init: &Coefficients,
) -> Result<SolveReport, SolveError> {
    if cfg.outer == 0 {
        return Err(SolveError::InvalidSetting("P must be at least 1".into()));
    }
    if let Some(b) = cfg.beta_k {
        if !(b >= 1.0) {
            return Err(SolveError::InvalidSetting(
                "beta_K must be at least 1".into(),
            ));
        }
    }
    if !init.matches(layout) {
        return Err(SolveError::ShapeMismatch);
    }
    for p in 1..=cfg.outer {
        schedules
            .for_iteration(p)
            .validate()
            .map_err(SolveError::InvalidSetting)?;
    }
    let start = Instant::now();
    let needs_beta =
        (1..=cfg.outer).any(|p| matches!(schedules.for_iteration(p), Schedule::PowerLaw { .. }));
    let beta_k = match cfg.beta_k {
        Some(b) => b,
        None if needs_beta => estimate_beta_k(layout, model, BETA_SAMPLES, seed, cfg.stepping),
        None => 1.0,
    };

    let mut tilde = init.clone();
    let mut iterations = Vec::with_capacity(cfg.outer);
    let mut trace = Vec::new();
    for p in 1..=cfg.outer {
        let schedule = schedules.for_iteration(p);
        let s = seed ^ p as u64;
        let start_c = if cfg.warm_start {
            tilde.clone()
        } else {
            jittered(init, layout, cfg.jitter, s)
        };
        let mut source = FreshPaths::new(model, layout, cfg.stepping, s);
        let (c, it, tr) = phi_m_with(
            model,
            layout,
            &tilde,
            &schedule,
            cfg.inner,
            beta_k,
            cfg.residual,
            &mut source,
            &start_c,
            Some(p),
            s,
        )?;
        tilde = c;
        iterations.push(it);
        trace = tr;
    }
    let last = iterations.last().expect("at least one iteration");
    Ok(SolveReport {
        coefficients: tilde,
        trace,
        y0: last.y0,
        z0: last.z0.clone(),
        mse_trailing: last.mse_trailing,
        mse_fresh: last.mse_fresh,
        beta_k: Some(beta_k),
        iterations,
        seed,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_examples() {
        let g = GroupRate::new(1.0, 0.0, 1.0, 0.0);
        assert_eq!(g.rate(0, 1), 0.5);
        let p = Schedule::PowerLaw {
            gamma: 1.0,
            rho: 0.75,
        };
        assert!((p.rate(Group::Y, 0, 16, 0.1) - 0.125).abs() < 1e-15);
        assert!((p.rate(Group::Zn, 3, 16, 0.25) - 0.25).abs() < 1e-15);
        let inc = GroupRate::new(0.9, 0.02, 0.05, 100.0);
        assert!(inc.rate(2, 10) > inc.rate(1, 10));
    }

    #[test]
    fn overrides_and_decay() {
        let a = Schedule::Empirical {
            y: GroupRate::new(1.0, 0.0, 1.0, 0.0),
            z0: GroupRate::new(1.0, 0.0, 1.0, 0.0),
            zn: GroupRate::new(1.0, 0.1, 1.0, 0.0),
        };
        let b = a.scaled(0.5);
        let mut set = ScheduleSet::fixed(a);
        set.overrides.insert(3, b);
        assert_eq!(set.for_iteration(1), a);
        assert_eq!(set.for_iteration(2), a);
        assert_eq!(set.for_iteration(5), b);
        set.decay = Some(0.8);
        let Schedule::Empirical { zn, .. } = set.for_iteration(2) else {
            unreachable!()
        };
        assert!((zn.beta1 - 0.08).abs() < 1e-15 && (zn.beta0 - 0.8).abs() < 1e-15);
    }

    #[test]
    fn group_rate_validation() {
        assert!(GroupRate::new(1.2, 0.0, 1.0, 0.0).validate().is_err());
        assert!(GroupRate::new(0.5, -1.0, 1.0, 0.0).validate().is_err());
        assert!(Schedule::PowerLaw {
            gamma: 1.0,
            rho: 0.75
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn one_picard_step_follows_h_maps() {
        use crate::geometry::TimeGrid;
        use crate::models::Bifurcation;
        use crate::sparse_grid::Family;
        let model = Bifurcation::new(2, -0.4).unwrap();
        let grid = TimeGrid::new(1.0, 3).unwrap();
        let layout = SpaceLayout::for_model(&model, grid, Family::ModifiedHat, 2, 2.0).unwrap();
        let batch = PathBatch::simulate(&model, grid, 1, 5, Stepping::Auto);
        let tilde = Coefficients::constant(&layout, 0.3, 0.2, -0.1);
        let init = Coefficients::constant(&layout, 0.1, -0.3, 0.05);
        let rate = GroupRate::new(1.0, 0.0, 1.0, 0.0);
        let schedule = Schedule::Empirical {
            y: rate,
            z0: rate,
            zn: rate,
        };
        for mode in [ResidualMode::Block, ResidualMode::Joint] {
            let mut src = Resample::new(&batch, 1);
            let (c, _, _) = phi_m_with(
                &model, &layout, &tilde, &schedule, 1, 1.0, mode, &mut src, &init, None, 0,
            )
            .unwrap();
            let h = h_maps(&layout, &tilde, &init, &model, &batch.path(0), mode);
            // every group has rate 1/2 at m = 1
            for ((a, b), g) in c.flatten().iter().zip(init.flatten()).zip(h.flatten()) {
                assert!((a - (b + g)).abs() < 1e-13);
            }
        }
    }
}
