//! Paper-reported numbers, kept as documentation for side-by-side output.
//!
//! These are published values, not oracles. Tests never compare stochastic
//! results against them except through explicit tolerances.

/// Basis counts with boundary functions (pre-wavelets): `(d, [l<=3, l<=4, l<=5])`.
pub const COUNTS_WITH_BOUNDARY: &[(usize, [u128; 3])] = &[
    (2, [49, 113, 257]),
    (3, [225, 593, 1505]),
    (4, [945, 2769, 7681]),
    (5, [3753, 12033, 36033]),
];

/// Basis counts without boundary functions (modified hats); `None` marks
/// an empty cell.
pub const COUNTS_WITHOUT_BOUNDARY: &[(usize, [Option<u128>; 3])] = &[
    (2, [Some(17), Some(49), Some(129)]),
    (4, [Some(49), Some(209), Some(769)]),
    (5, [Some(71), Some(351), Some(1471)]),
    (10, [Some(241), Some(2001), Some(13441)]),
    (20, [Some(881), Some(13201), Some(154881)]),
    (25, [Some(1351), Some(24751), Some(352351)]),
    (50, [Some(5201), Some(182001), Some(4867201)]),
    (100, [Some(20401), Some(1394001), None]),
];

/// Monte-Carlo reference for the quadratic model, `d = 5`, `a = 1`, `T = 1`.
pub const QUADRATIC_D5_Y0: f64 = 1.0976;
pub const QUADRATIC_D5_CI: (f64, f64) = (1.0943, 1.1009);

/// Periodic model, `d = 3`, trailing MSE per Picard iteration.
pub const PERIODIC_D3_MSE: [f64; 5] = [0.0286, 0.0247, 0.0219, 0.0207, 0.0201];

/// `(low, high)` of a 95% interval.
pub type Interval = (f64, f64);

/// Financial model with pre-wavelets: `(d, y0, ci, deep-learning y0, deep-learning ci)`.
pub const FINANCIAL_PREWAVELET: &[(usize, f64, Interval, f64, Interval)] = &[
    (2, 4.3332, (4.2921, 4.3743), 4.3516, (4.3420, 4.3612)),
    (4, 7.0960, (7.0432, 7.1487), 7.1130, (7.0649, 7.1611)),
];

/// Last Picard iterate for the financial model at `d = 4`.
pub const FINANCIAL_D4_PICARD_Y0: f64 = 7.1695;

/// Financial model with modified hats: `(d, y0, ci, seconds)`.
pub const FINANCIAL_HAT: &[(usize, f64, (f64, f64), f64)] = &[
    (5, 8.0966, (8.0226, 8.1705), 3.0),
    (10, 10.9865, (10.9224, 11.0506), 12.0),
    (15, 11.848, (11.7853, 11.9107), 33.0),
    (20, 11.8674, (11.7962, 11.9387), 61.0),
    (25, 11.7801, (11.6467, 11.9135), 130.0),
];

/// Challenging model at `T = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChallengingRow {
    pub dim: usize,
    pub exact: f64,
    pub direct: f64,
    pub picard: f64,
    pub dbdp1: f64,
    pub dbdp2: f64,
    /// `None` where the published run did not converge.
    pub deep_bsde: Option<f64>,
}

pub const CHALLENGING: &[ChallengingRow] = &[
    ChallengingRow {
        dim: 1,
        exact: 1.3776,
        direct: 1.3790,
        picard: 1.3825,
        dbdp1: 1.3720,
        dbdp2: 1.3736,
        deep_bsde: Some(1.3724),
    },
    ChallengingRow {
        dim: 2,
        exact: 0.5707,
        direct: 0.5795,
        picard: 0.5794,
        dbdp1: 0.5715,
        dbdp2: 0.5708,
        deep_bsde: Some(0.5715),
    },
    ChallengingRow {
        dim: 5,
        exact: 0.8466,
        direct: 0.8734,
        picard: 0.8606,
        dbdp1: 0.8666,
        dbdp2: 0.8365,
        deep_bsde: None,
    },
    ChallengingRow {
        dim: 8,
        exact: 1.1603,
        direct: 1.1745,
        picard: 1.1801,
        dbdp1: 1.1694,
        dbdp2: 1.0758,
        deep_bsde: None,
    },
    ChallengingRow {
        dim: 10,
        exact: -0.2149,
        direct: -0.2439,
        picard: -0.2594,
        dbdp1: -0.3105,
        dbdp2: -0.3961,
        deep_bsde: None,
    },
];

pub fn challenging(dim: usize) -> Option<&'static ChallengingRow> {
    CHALLENGING.iter().find(|r| r.dim == dim)
}
