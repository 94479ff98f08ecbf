//! Running configured experiments and writing their CSV reports.

use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use super::config::{AlgoKind, ConfigError, ExperimentConfig};
use crate::geometry::{GeometryError, TimeGrid};
use crate::models::{build_model, Model, ModelError};
use crate::parametrization::{Coefficients, LayoutError, SpaceLayout};
use crate::sgd::{solve_direct, solve_picard, DirectConfig, PicardConfig, SolveError, SolveReport};
use crate::simulation::Stepping;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

impl From<GeometryError> for RunError {
    fn from(e: GeometryError) -> Self {
        RunError::Layout(e.into())
    }
}

impl RunError {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Solve(SolveError::Diverged { .. }) => EXIT_DIVERGED,
            _ => EXIT_CONFIG,
        }
    }
}

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub steps: Option<u64>,
    pub euler_strict: bool,
    pub warm_start: Option<bool>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seeds.base = s;
        }
        if let Some(r) = self.replicas {
            cfg.seeds.replicas = r;
        }
        if let Some(m) = self.steps {
            cfg.algo.steps = m;
        }
        if self.euler_strict {
            cfg.algo.euler_strict = true;
        }
        if let (Some(w), Some(p)) = (self.warm_start, cfg.picard.as_mut()) {
            p.warm_start = w;
        }
    }
}

/// Model, spaces and initial coefficients described by a config.
pub struct Problem {
    pub model: Box<dyn Model>,
    pub layout: SpaceLayout,
    pub init: Coefficients,
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<Problem, RunError> {
    cfg.validate()?;
    let model = build_model(&cfg.model.name, cfg.model_params())?;
    let grid = TimeGrid::new(cfg.grid.horizon, cfg.grid.steps)?;
    let layout = SpaceLayout::for_model(
        model.as_ref(),
        grid,
        cfg.space.family,
        cfg.space.level,
        cfg.space.width,
    )?;
    let init = Coefficients::constant(&layout, cfg.algo.init_y, cfg.algo.init_z0, cfg.algo.init_zn);
    Ok(Problem {
        model,
        layout,
        init,
    })
}

fn stepping(cfg: &ExperimentConfig) -> Stepping {
    if cfg.algo.euler_strict {
        Stepping::EulerStrict
    } else {
        Stepping::Auto
    }
}

/// One solve with an explicit seed.
pub fn run_once(
    cfg: &ExperimentConfig,
    problem: &Problem,
    seed: u64,
) -> Result<SolveReport, RunError> {
    let model = problem.model.as_ref();
    let report = match cfg.algo.kind {
        AlgoKind::Direct => {
            let schedule = cfg.schedules().base;
            let dc = DirectConfig {
                steps: cfg.algo.steps,
                seed,
                stepping: stepping(cfg),
            };
            solve_direct(model, &problem.layout, &schedule, &dc, &problem.init)?
        }
        AlgoKind::Picard => {
            let p = cfg.picard.expect("validated picard section");
            let pc = PicardConfig {
                outer: p.outer,
                inner: cfg.algo.steps,
                beta_k: p.beta_k,
                warm_start: p.warm_start,
                residual: p.residual,
                stepping: stepping(cfg),
                ..PicardConfig::default()
            };
            solve_picard(
                model,
                &problem.layout,
                &pc,
                &cfg.schedules(),
                seed,
                &problem.init,
            )?
        }
    };
    Ok(report)
}

/// Mean of the replica estimates with a normal 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub runs: usize,
    pub y0_mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mse_mean: Option<f64>,
}

impl Summary {
    pub fn from_reports(reports: &[SolveReport]) -> Self {
        let n = reports.len();
        let ys: Vec<f64> = reports.iter().map(|r| r.y0).collect();
        let mean = ys.iter().sum::<f64>() / n as f64;
        let half = if n > 1 {
            let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            1.96 * (var / n as f64).sqrt()
        } else {
            0.0
        };
        let mses: Vec<f64> = reports.iter().filter_map(|r| r.mse_trailing).collect();
        Self {
            runs: n,
            y0_mean: mean,
            ci_low: mean - half,
            ci_high: mean + half,
            mse_mean: (!mses.is_empty()).then(|| mses.iter().sum::<f64>() / mses.len() as f64),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: ExperimentConfig,
    pub reports: Vec<SolveReport>,
    pub summary: Summary,
}

/// Runs every replica (seeds `base, base + 1, ...`) concurrently.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let problem = build_problem(cfg)?;
    let base = cfg.seeds.base;
    let reports = (0..cfg.seeds.replicas)
        .into_par_iter()
        .map(|r| run_once(cfg, &problem, base.wrapping_add(r as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = Summary::from_reports(&reports);
    Ok(RunOutcome {
        config: cfg.clone(),
        reports,
        summary,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

pub const ITERATIONS_HEADER: &str = "replica,seed,p,y0,y0_last,mse_trailing,mse_fresh,wall_seconds";
pub const SUMMARY_HEADER: &str = "runs,y0_mean,ci_low,ci_high,mse_mean";

/// One row per replica and Picard iteration.
pub fn write_iterations_csv<W: Write>(out: &RunOutcome, mut w: W) -> io::Result<()> {
    writeln!(w, "{ITERATIONS_HEADER}")?;
    for (i, r) in out.reports.iter().enumerate() {
        for it in &r.iterations {
            writeln!(
                w,
                "{i},{},{},{:?},{:?},{},{},{:?}",
                r.seed,
                it.p,
                it.y0,
                it.y0_last,
                opt(it.mse_trailing),
                opt(it.mse_fresh),
                r.wall_time.as_secs_f64()
            )?;
        }
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(s: &Summary, mut w: W) -> io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    writeln!(
        w,
        "{},{:?},{:?},{:?},{}",
        s.runs,
        s.y0_mean,
        s.ci_low,
        s.ci_high,
        opt(s.mse_mean)
    )
}
