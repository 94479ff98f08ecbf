//! Re-running published experiments and printing results next to the
//! published numbers.

use std::io::{self, Write};
use std::str::FromStr;

use thiserror::Error;

use super::presets::preset;
use super::published::{self, COUNTS_WITHOUT_BOUNDARY, COUNTS_WITH_BOUNDARY};
use super::run::{run, RunError, RunOutcome};
use crate::models::{Challenging, Model, Quadratic};
use crate::reference::cole_hopf;
use crate::sparse_grid::{count, Family};

pub const TARGET_NAMES: &[&str] = &[
    "table1",
    "table3",
    "quadratic-d5",
    "periodic-d3",
    "financial-d2",
    "financial-d4",
    "challenging-d1",
    "challenging-d2",
    "challenging-d5",
    "challenging-d8",
    "challenging-d10",
    "bifurcation",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Table1,
    Table3,
    QuadraticD5,
    PeriodicD3,
    Financial(usize),
    Challenging(usize),
    Bifurcation,
}

#[derive(Debug, Error)]
pub enum ReproduceError {
    #[error("unknown target '{name}'; valid targets: {}", TARGET_NAMES.join(", "))]
    UnknownTarget { name: String },
    #[error(transparent)]
    Run(#[from] RunError),
}

impl ReproduceError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ReproduceError::UnknownTarget { .. } => super::run::EXIT_CONFIG,
            ReproduceError::Run(e) => e.exit_code(),
        }
    }
}

impl FromStr for Target {
    type Err = ReproduceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "table1" => Target::Table1,
            "table3" => Target::Table3,
            "quadratic-d5" => Target::QuadraticD5,
            "periodic-d3" => Target::PeriodicD3,
            "financial-d2" => Target::Financial(2),
            "financial-d4" => Target::Financial(4),
            "bifurcation" => Target::Bifurcation,
            _ => match s.strip_prefix("challenging-d").and_then(|d| d.parse().ok()) {
                Some(d @ (1 | 2 | 5 | 8 | 10)) => Target::Challenging(d),
                _ => {
                    return Err(ReproduceError::UnknownTarget {
                        name: s.to_string(),
                    })
                }
            },
        })
    }
}

/// One compared quantity. `published` is the paper-reported value.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub quantity: String,
    pub artifact: Option<f64>,
    pub published: Option<f64>,
}

impl Row {
    fn new(quantity: impl Into<String>, artifact: Option<f64>, published: Option<f64>) -> Self {
        Self {
            quantity: quantity.into(),
            artifact,
            published,
        }
    }

    pub fn abs_diff(&self) -> Option<f64> {
        Some((self.artifact? - self.published?).abs())
    }
}

pub const CSV_HEADER: &str = "quantity,artifact,published,abs_diff";

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[Row], mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.quantity,
            cell(r.artifact),
            cell(r.published),
            cell(r.abs_diff())
        )?;
    }
    Ok(())
}

const LEVELS: [u32; 3] = [3, 4, 5];

fn table_rows() -> (Vec<Row>, Vec<Row>) {
    let mut t1 = Vec::new();
    for &(d, cells) in COUNTS_WITH_BOUNDARY {
        for (l, c) in LEVELS.iter().zip(cells) {
            let got = count(d, *l, Family::PreWavelet);
            t1.push(Row::new(
                format!("count d={d} l={l}"),
                Some(got as f64),
                Some(c as f64),
            ));
        }
    }
    let mut t3 = Vec::new();
    for &(d, cells) in COUNTS_WITHOUT_BOUNDARY {
        for (l, c) in LEVELS.iter().zip(cells) {
            let got = count(d, *l, Family::ModifiedHat);
            t3.push(Row::new(
                format!("count d={d} l={l}"),
                Some(got as f64),
                c.map(|c| c as f64),
            ));
        }
    }
    (t1, t3)
}

fn run_preset(name: &str, seed: Option<u64>) -> Result<RunOutcome, RunError> {
    let mut cfg = preset(name).expect("known preset");
    if let Some(s) = seed {
        cfg.seeds.base = s;
    }
    run(&cfg)
}

fn picard_rows(label: &str, out: &RunOutcome, published: &[f64], rows: &mut Vec<Row>, mse: bool) {
    let report = &out.reports[0];
    for it in &report.iterations {
        let value = if mse { it.mse_trailing } else { Some(it.y0) };
        let paper = published.get(it.p.wrapping_sub(1)).copied();
        rows.push(Row::new(format!("{label} p={}", it.p), value, paper));
    }
}

/// Recomputes `target`. Stochastic targets use the preset's seed unless
/// `seed` is given.
pub fn reproduce(target: Target, seed: Option<u64>) -> Result<Vec<Row>, ReproduceError> {
    let mut rows = Vec::new();
    match target {
        Target::Table1 => rows = table_rows().0,
        Target::Table3 => rows = table_rows().1,
        Target::QuadraticD5 => {
            let q = Quadratic::new(5, 1.0).expect("valid model");
            let r = cole_hopf(&q, 1.0, 0.0, &[0.0; 5], 100_000, seed.unwrap_or(0))
                .expect("valid request");
            let (lo, hi) = published::QUADRATIC_D5_CI;
            rows.push(Row::new(
                "reference y0",
                Some(r.y0),
                Some(published::QUADRATIC_D5_Y0),
            ));
            rows.push(Row::new("reference ci_low", Some(r.ci_low), Some(lo)));
            rows.push(Row::new("reference ci_high", Some(r.ci_high), Some(hi)));
            let out = run_preset("quadratic-d5-prewavelet", seed)?;
            rows.push(Row::new(
                "direct y0",
                Some(out.summary.y0_mean),
                Some(published::QUADRATIC_D5_Y0),
            ));
        }
        Target::PeriodicD3 => {
            let out = run_preset("periodic-d3-picard", seed)?;
            picard_rows("mse", &out, &published::PERIODIC_D3_MSE, &mut rows, true);
            let fresh = out.reports[0].mse_fresh;
            rows.push(Row::new("mse fresh", fresh, None));
        }
        Target::Financial(d) => {
            let &(_, y0, (lo, hi), dl, _) = published::FINANCIAL_PREWAVELET
                .iter()
                .find(|r| r.0 == d)
                .expect("tabulated dimension");
            let out = run_preset(&format!("financial-d{d}-prewavelet"), seed)?;
            let s = out.summary;
            rows.push(Row::new("direct y0", Some(s.y0_mean), Some(y0)));
            rows.push(Row::new("direct ci_low", Some(s.ci_low), Some(lo)));
            rows.push(Row::new("direct ci_high", Some(s.ci_high), Some(hi)));
            rows.push(Row::new(
                "deep-learning y0 (paper-reported)",
                None,
                Some(dl),
            ));
            if d == 4 {
                let out = run_preset("financial-d4-picard", seed)?;
                let p = out.reports[0].iterations.len();
                let mut published = vec![f64::NAN; p];
                published[p - 1] = published::FINANCIAL_D4_PICARD_Y0;
                picard_rows("picard y0", &out, &published, &mut rows, false);
                for r in &mut rows {
                    if r.published.is_some_and(f64::is_nan) {
                        r.published = None;
                    }
                }
            }
        }
        Target::Challenging(d) => {
            let row = published::challenging(d).expect("tabulated dimension");
            let model = Challenging::new(d, 1.0).expect("valid model");
            let exact = model.exact(0.0, &vec![0.5; d]);
            rows.push(Row::new("exact y0", exact, Some(row.exact)));
            let direct = run_preset(&format!("challenging-d{d}"), seed)?;
            rows.push(Row::new(
                "direct y0",
                Some(direct.summary.y0_mean),
                Some(row.direct),
            ));
            rows.push(Row::new(
                "direct |y0 - exact|",
                Some((direct.summary.y0_mean - row.exact).abs()),
                Some((row.direct - row.exact).abs()),
            ));
            let picard = run_preset(&format!("challenging-d{d}-picard"), seed)?;
            rows.push(Row::new(
                "picard y0",
                Some(picard.summary.y0_mean),
                Some(row.picard),
            ));
            rows.push(Row::new(
                "picard |y0 - exact|",
                Some((picard.summary.y0_mean - row.exact).abs()),
                Some((row.picard - row.exact).abs()),
            ));
            rows.push(Row::new("DBDP1 y0 (paper-reported)", None, Some(row.dbdp1)));
            rows.push(Row::new("DBDP2 y0 (paper-reported)", None, Some(row.dbdp2)));
            rows.push(Row::new(
                "deep BSDE y0 (paper-reported)",
                None,
                row.deep_bsde,
            ));
        }
        Target::Bifurcation => {
            for (label, name) in [
                ("a=-0.4", "bifurcation-a04-picard"),
                ("a=-1.5", "bifurcation-a15-picard"),
            ] {
                let out = run_preset(name, seed)?;
                picard_rows(&format!("{label} y0"), &out, &[], &mut rows, false);
            }
        }
    }
    Ok(rows)
}
