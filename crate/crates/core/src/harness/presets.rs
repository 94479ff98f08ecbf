//! Named experiment setups with the published parameter values.
//!
//! "hat" setups use the modified hat family (no boundary functions).
//! Every setup uses sparse level 3.

use std::collections::BTreeMap;

use super::config::{
    AlgoKind, AlgoSection, ExperimentConfig, GridSection, GroupTriple, ModelSection, PicardSection,
    ScheduleSection, SeedSection, SpaceSection,
};
use crate::sgd::{GroupRate, ResidualMode};
use crate::sparse_grid::Family;

const LEVEL: u32 = 3;

fn g(alpha: f64, beta1: f64, beta0: f64, m0: f64) -> GroupRate {
    GroupRate::new(alpha, beta1, beta0, m0)
}

fn triple(y: GroupRate, z0: GroupRate, zn: GroupRate) -> GroupTriple {
    GroupTriple { y, z0, zn }
}

struct Setup {
    model: &'static str,
    dim: usize,
    a: Option<f64>,
    horizon: f64,
    steps: usize,
    family: Family,
    width: f64,
    m: u64,
    init: (f64, f64, f64),
    rates: GroupTriple,
    replicas: usize,
}

impl Setup {
    fn build(
        self,
        kind: AlgoKind,
        picard: Option<PicardSection>,
        overrides: Vec<(usize, GroupTriple)>,
    ) -> ExperimentConfig {
        ExperimentConfig {
            model: ModelSection {
                name: self.model.to_string(),
                dim: self.dim,
                a: self.a,
            },
            grid: GridSection {
                horizon: self.horizon,
                steps: self.steps,
            },
            space: SpaceSection {
                family: self.family,
                level: LEVEL,
                width: self.width,
            },
            algo: AlgoSection {
                kind,
                steps: self.m,
                init_y: self.init.0,
                init_z0: self.init.1,
                init_zn: self.init.2,
                euler_strict: false,
            },
            schedule: ScheduleSection {
                y: Some(self.rates.y),
                z0: Some(self.rates.z0),
                zn: Some(self.rates.zn),
                power_law: None,
                overrides: overrides
                    .into_iter()
                    .map(|(p, t)| (format!("p={p}"), t))
                    .collect::<BTreeMap<_, _>>(),
            },
            picard,
            seeds: SeedSection {
                base: 0,
                replicas: self.replicas,
            },
        }
    }

    fn direct(self) -> ExperimentConfig {
        self.build(AlgoKind::Direct, None, Vec::new())
    }

    fn picard(
        self,
        outer: usize,
        decay: Option<f64>,
        overrides: Vec<(usize, GroupTriple)>,
    ) -> ExperimentConfig {
        let p = PicardSection {
            outer,
            beta_k: None,
            warm_start: true,
            decay,
            residual: ResidualMode::Block,
        };
        self.build(AlgoKind::Picard, Some(p), overrides)
    }
}

fn quadratic_d5() -> Setup {
    Setup {
        model: "quadratic",
        dim: 5,
        a: Some(1.0),
        horizon: 1.0,
        steps: 10,
        family: Family::PreWavelet,
        width: 2.0,
        m: 2000,
        init: (0.5, -0.2, 0.0),
        rates: triple(
            g(1.0, 0.0, 1.0, 100.0),
            g(0.8, 0.0, 1.0, 100.0),
            g(0.86, 0.02, 0.05, 100.0),
        ),
        replicas: 1,
    }
}

fn financial(
    dim: usize,
    family: Family,
    width: f64,
    m: u64,
    init: (f64, f64, f64),
    rates: GroupTriple,
) -> Setup {
    Setup {
        model: "financial",
        dim,
        a: None,
        horizon: 0.5,
        steps: 10,
        family,
        width,
        m,
        init,
        rates,
        replicas: 10,
    }
}

fn challenging(
    dim: usize,
    steps: usize,
    width: f64,
    init: (f64, f64, f64),
    rates: GroupTriple,
) -> Setup {
    Setup {
        model: "challenging",
        dim,
        a: None,
        horizon: 1.0,
        steps,
        family: Family::ModifiedHat,
        width,
        m: 10_000,
        init,
        rates,
        replicas: 1,
    }
}

fn bifurcation(a: f64, init_y: f64, beta0_y: f64) -> Setup {
    Setup {
        model: "bifurcation",
        dim: 2,
        a: Some(a),
        horizon: 1.0,
        steps: 10,
        family: Family::PreWavelet,
        width: 2.0,
        m: 5000,
        init: (init_y, 0.0, 0.0),
        rates: triple(
            g(1.0, 0.0, beta0_y, 300.0),
            g(1.0, 0.0, 1.0, 300.0),
            g(1.0, 0.6, 0.1, 300.0),
        ),
        replicas: 1,
    }
}

fn periodic_row(y: (f64, f64), z: (f64, f64)) -> GroupTriple {
    let zr = g(0.6, 0.0, z.0, z.1);
    triple(g(0.6, 0.0, y.0, y.1), zr, zr)
}

fn fin_hat_rates(alpha_y: f64, beta0_y: f64, m0: f64) -> GroupTriple {
    triple(
        g(alpha_y, 0.0, beta0_y, m0),
        g(1.0, 0.0, 5.0, m0),
        g(1.0, 0.001, 0.01, m0),
    )
}

fn fin_picard_row(by: f64, bz0: f64, b1: f64, b0: f64, alpha_y: f64) -> GroupTriple {
    triple(
        g(alpha_y, 0.0, by, 1000.0),
        g(1.0, 0.0, bz0, 1000.0),
        g(1.0, b1, b0, 1000.0),
    )
}

fn chal_d10_row(by: f64, bz0: f64, b1: f64, b0: f64) -> GroupTriple {
    triple(
        g(1.0, 0.0, by, 500.0),
        g(0.95, 0.0, bz0, 500.0),
        g(1.0, b1, b0, 500.0),
    )
}

/// All preset names, in listing order.
pub const PRESET_NAMES: &[&str] = &[
    "quadratic-d5-prewavelet",
    "quadratic-d5-picard",
    "quadratic-d100-hat",
    "quadratic-d25-picard",
    "periodic-d3-picard",
    "financial-d2-prewavelet",
    "financial-d4-prewavelet",
    "financial-d4-picard",
    "financial-d5-hat",
    "financial-d10-hat",
    "financial-d15-hat",
    "financial-d20-hat",
    "financial-d25-hat",
    "financial-d20-picard",
    "challenging-d1",
    "challenging-d2",
    "challenging-d5",
    "challenging-d8",
    "challenging-d10",
    "challenging-d1-picard",
    "challenging-d2-picard",
    "challenging-d5-picard",
    "challenging-d8-picard",
    "challenging-d10-picard",
    "bifurcation-a04-picard",
    "bifurcation-a15-picard",
];

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let pw = Family::PreWavelet;
    let hat = Family::ModifiedHat;
    Some(match name {
        "quadratic-d5-prewavelet" => quadratic_d5().direct(),
        "quadratic-d5-picard" => {
            let mut s = quadratic_d5();
            s.rates = triple(
                g(1.0, 0.0, 0.8, 100.0),
                g(0.9, 0.0, 1.0, 100.0),
                g(0.84, 0.02, 0.05, 100.0),
            );
            s.picard(
                6,
                None,
                vec![
                    (
                        2,
                        triple(
                            g(1.0, 0.0, 0.3, 100.0),
                            g(0.9, 0.0, 0.4, 100.0),
                            g(0.84, 0.01, 0.02, 100.0),
                        ),
                    ),
                    (
                        3,
                        triple(
                            g(1.0, 0.0, 0.2, 100.0),
                            g(0.9, 0.0, 0.2, 100.0),
                            g(0.84, 0.005, 0.01, 100.0),
                        ),
                    ),
                ],
            )
        }
        "quadratic-d100-hat" => Setup {
            dim: 100,
            family: hat,
            width: 3.2,
            init: (5.5, 0.0, 0.0),
            rates: triple(
                g(0.9, 0.0, 1.0, 100.0),
                g(0.7, 0.0, 1.0, 100.0),
                g(1.0, 0.003, 0.01, 1000.0),
            ),
            ..quadratic_d5()
        }
        .direct(),
        "quadratic-d25-picard" => Setup {
            dim: 25,
            family: hat,
            width: 2.8,
            m: 1500,
            init: (2.0, 0.1, 0.0),
            rates: triple(
                g(0.9, 0.0, 0.5, 100.0),
                g(0.8, 0.0, 0.8, 100.0),
                g(1.0, 0.003, 0.01, 1000.0),
            ),
            ..quadratic_d5()
        }
        .picard(3, None, Vec::new()),
        "periodic-d3-picard" => Setup {
            model: "periodic",
            dim: 3,
            a: None,
            horizon: 0.3,
            steps: 10,
            family: pw,
            width: 1.0,
            m: 100_000,
            init: (0.0, 0.0, 0.0),
            rates: periodic_row((3.0, 15000.0), (20.0, 10000.0)),
            replicas: 1,
        }
        .picard(
            5,
            None,
            vec![
                (2, periodic_row((2.0, 8000.0), (10.0, 8000.0))),
                (3, periodic_row((1.0, 8000.0), (5.0, 8000.0))),
                (4, periodic_row((0.5, 8000.0), (3.0, 8000.0))),
            ],
        ),
        "financial-d2-prewavelet" => financial(
            2,
            pw,
            2.0,
            6000,
            (2.0, 0.0, 0.0),
            triple(
                g(1.0, 0.0, 1.5, 1000.0),
                g(1.0, 0.0, 20.0, 1000.0),
                g(1.0, 0.003, 0.01, 1000.0),
            ),
        )
        .direct(),
        "financial-d4-prewavelet" => financial(
            4,
            pw,
            2.0,
            6000,
            (5.0, 0.0, 0.0),
            triple(
                g(1.0, 0.0, 1.0, 1000.0),
                g(1.0, 0.0, 20.0, 1000.0),
                g(1.0, 0.001, 0.01, 1000.0),
            ),
        )
        .direct(),
        "financial-d4-picard" => {
            let mut s = financial(
                4,
                pw,
                2.0,
                6000,
                (5.0, 0.1, -0.01),
                fin_picard_row(1.0, 20.0, 0.001, 0.01, 1.0),
            );
            s.replicas = 1;
            s.picard(
                9,
                None,
                vec![
                    (2, fin_picard_row(0.3, 5.0, 0.0005, 0.005, 1.0)),
                    (3, fin_picard_row(0.2, 5.0, 0.0003, 0.003, 1.0)),
                    (4, fin_picard_row(0.15, 3.0, 0.0002, 0.002, 1.0)),
                    (6, fin_picard_row(0.1, 2.0, 0.0001, 0.001, 1.0)),
                ],
            )
        }
        "financial-d5-hat" => financial(
            5,
            hat,
            2.0,
            5000,
            (5.0, 0.0, 0.0),
            fin_hat_rates(0.95, 0.3, 100.0),
        )
        .direct(),
        "financial-d10-hat" => financial(
            10,
            hat,
            2.5,
            5000,
            (8.0, 0.0, 0.0),
            fin_hat_rates(0.9, 0.35, 300.0),
        )
        .direct(),
        "financial-d15-hat" => financial(
            15,
            hat,
            2.5,
            5000,
            (8.0, 0.0, 0.0),
            fin_hat_rates(0.85, 0.3, 500.0),
        )
        .direct(),
        "financial-d20-hat" => financial(
            20,
            hat,
            2.5,
            5000,
            (8.0, 0.0, 0.0),
            fin_hat_rates(0.8, 0.2, 1000.0),
        )
        .direct(),
        "financial-d25-hat" => financial(
            25,
            hat,
            2.8,
            5000,
            (8.0, 0.0, 0.0),
            fin_hat_rates(0.7, 0.2, 1500.0),
        )
        .direct(),
        "financial-d20-picard" => {
            let row = |by, bz0, b1, b0| {
                triple(
                    g(0.9, 0.0, by, 1000.0),
                    g(1.0, 0.0, bz0, 1000.0),
                    g(1.0, b1, b0, 1000.0),
                )
            };
            let mut s = financial(
                20,
                hat,
                2.5,
                5000,
                (8.0, 0.0, 0.0),
                row(0.6, 5.0, 0.001, 0.01),
            );
            s.replicas = 1;
            s.picard(
                4,
                None,
                vec![
                    (2, row(0.2, 4.0, 0.001, 0.01)),
                    (3, row(0.15, 3.0, 0.0005, 0.005)),
                    (4, row(0.1, 2.0, 0.0005, 0.005)),
                ],
            )
        }
        "challenging-d1" => challenging(1, 10, 2.0, (0.5, 0.0, 0.0), chal_rates(1)).direct(),
        "challenging-d2" => challenging(2, 20, 2.0, (0.1, 0.0, 0.0), chal_rates(2)).direct(),
        "challenging-d5" => challenging(5, 40, 2.0, (0.4, -1.0, 0.0), chal_rates(5)).direct(),
        "challenging-d8" => challenging(8, 60, 2.2, (0.6, 1.0, 0.08), chal_rates(8)).direct(),
        "challenging-d10" => challenging(10, 100, 2.5, (0.1, -1.0, -0.1), chal_rates(10)).direct(),
        "challenging-d1-picard" => {
            challenging(1, 10, 2.0, (0.5, 0.0, 0.0), chal_rates(1)).picard(5, Some(0.8), Vec::new())
        }
        "challenging-d2-picard" => {
            challenging(2, 20, 2.0, (0.1, 0.0, 0.0), chal_rates(2)).picard(5, Some(0.8), Vec::new())
        }
        "challenging-d5-picard" => challenging(5, 40, 2.0, (0.4, -2.0, 0.0), chal_rates(5)).picard(
            5,
            Some(0.8),
            Vec::new(),
        ),
        "challenging-d8-picard" => {
            let mut r = chal_rates(8);
            r.zn.beta0 = 1.0;
            challenging(8, 60, 2.2, (0.6, 1.0, 0.08), r).picard(5, Some(0.8), Vec::new())
        }
        "challenging-d10-picard" => challenging(
            10,
            100,
            2.5,
            (0.1, -1.0, -0.1),
            chal_d10_row(0.25, 4.0, 0.15, 0.5),
        )
        .picard(
            8,
            None,
            vec![
                (2, chal_d10_row(0.2, 3.0, 0.12, 0.4)),
                (3, chal_d10_row(0.15, 2.0, 0.1, 0.3)),
                (4, chal_d10_row(0.1, 1.0, 0.08, 0.25)),
                (6, chal_d10_row(0.05, 0.5, 0.05, 0.2)),
            ],
        ),
        "bifurcation-a04-picard" => bifurcation(-0.4, 0.3, 1.0).picard(9, None, Vec::new()),
        "bifurcation-a15-picard" => bifurcation(-1.5, 0.0, 2.0).picard(9, None, Vec::new()),
        _ => return None,
    })
}

/// Direct-algorithm rates of the challenging benchmark.
fn chal_rates(dim: usize) -> GroupTriple {
    match dim {
        1 => triple(
            g(1.0, 0.0, 0.5, 100.0),
            g(1.0, 0.0, 3.0, 100.0),
            g(1.0, 0.1, 0.1, 100.0),
        ),
        2 => triple(
            g(1.0, 0.0, 0.5, 100.0),
            g(1.0, 0.0, 5.0, 100.0),
            g(1.0, 0.2, 0.5, 100.0),
        ),
        5 => triple(
            g(1.0, 0.0, 0.5, 300.0),
            g(0.95, 0.0, 5.0, 500.0),
            g(1.0, 0.2, 0.1, 500.0),
        ),
        8 => triple(
            g(1.0, 0.0, 0.35, 500.0),
            g(1.0, 0.0, 5.0, 500.0),
            g(1.0, 0.2, 1.0, 500.0),
        ),
        _ => triple(
            g(1.0, 0.0, 0.35, 500.0),
            g(0.95, 0.0, 5.0, 500.0),
            g(1.0, 0.2, 1.0, 500.0),
        ),
    }
}
