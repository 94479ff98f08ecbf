use sparse_bsde::harness::published::CHALLENGING;
use sparse_bsde::models::{Challenging, Model, Periodic, Quadratic};
use sparse_bsde::reference::{cole_hopf, exact_y0, exact_z0, ReferenceError};

/// `E exp(a g)` for `a = 1` and `a = 2` from the Gaussian moments of
/// `S = |x + W_tau|^2`: `E S = |x|^2 + d tau`, `Var S = 2 d tau^2 + 4 tau |x|^2`.
fn closed_form(a: f64, d: usize, tau: f64, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let es = r2 + d as f64 * tau;
    let es2 = 2.0 * d as f64 * tau * tau + 4.0 * tau * r2 + es * es;
    let m = match a as i32 {
        1 => (1.0 + es) / 2.0,
        2 => (1.0 + 2.0 * es + es2) / 4.0,
        _ => unreachable!(),
    };
    m.ln() / a
}

#[test]
fn matches_gaussian_moment_closed_form() {
    let x = [0.3, -0.5, 0.1];
    for (a, tau) in [(1.0, 1.0), (1.0, 0.4), (2.0, 0.5)] {
        let q = Quadratic::new(3, a).unwrap();
        let r = cole_hopf(&q, 1.0, 1.0 - tau, &x, 400_000, 5).unwrap();
        let exact = closed_form(a, 3, tau, &x);
        assert!(
            (r.y0 - exact).abs() < 4.0 * r.half_width() / 1.96,
            "a={a} tau={tau}: {} vs {exact}",
            r.y0
        );
        assert!(r.ci_low < r.y0 && r.y0 < r.ci_high);
    }
}

#[test]
fn gradient_matches_closed_form_at_unit_coupling() {
    let x = [0.3, -0.5, 0.1, 0.0];
    let q = Quadratic::new(4, 1.0).unwrap();
    let r = cole_hopf(&q, 1.0, 0.0, &x, 400_000, 6).unwrap();
    let denom = 1.0 + x.iter().map(|v| v * v).sum::<f64>() + 4.0;
    for (i, xi) in x.iter().enumerate() {
        let z = 2.0 * xi / denom;
        assert!(
            (r.z0[i] - z).abs() < 5.0 * r.z0_se[i],
            "z[{i}] {} vs {z}",
            r.z0[i]
        );
    }
}

#[test]
fn confidence_interval_covers_at_nominal_rate() {
    let q = Quadratic::new(5, 1.0).unwrap();
    let truth = 3.0f64.ln();
    let hits = (0..50)
        .filter(|&s| {
            let r = cole_hopf(&q, 1.0, 0.0, &[0.0; 5], 10_000, 1000 + s).unwrap();
            r.ci_low <= truth && truth <= r.ci_high
        })
        .count();
    assert!(hits >= 44, "{hits}/50 intervals cover ln 3");
}

#[test]
fn independent_seeds_agree() {
    let q = Quadratic::new(5, 1.0).unwrap();
    let a = cole_hopf(&q, 1.0, 0.0, &[0.0; 5], 100_000, 1).unwrap();
    let b = cole_hopf(&q, 1.0, 0.0, &[0.0; 5], 100_000, 2).unwrap();
    let se = (a.half_width().powi(2) + b.half_width().powi(2)).sqrt() / 1.96;
    assert!((a.y0 - b.y0).abs() < 4.0 * se);
    assert_eq!(a, cole_hopf(&q, 1.0, 0.0, &[0.0; 5], 100_000, 1).unwrap());
}

#[test]
fn zero_coupling_is_the_mean_of_g() {
    // E g at x = 0, d = 1, tau = 1 with g = log((1 + W^2) / 2)
    let q = Quadratic::new(1, 0.0).unwrap();
    let r = cole_hopf(&q, 1.0, 0.0, &[0.0], 400_000, 3).unwrap();
    // midpoint quadrature of E g against the Gaussian density
    let n = 200_000;
    let mut quad = 0.0;
    for j in 0..n {
        let w = -10.0 + 20.0 * (j as f64 + 0.5) / n as f64;
        let pdf = (-0.5 * w * w).exp() / (2.0 * std::f64::consts::PI).sqrt();
        quad += ((1.0 + w * w) / 2.0).ln() * pdf * 20.0 / n as f64;
    }
    assert!(
        (r.y0 - quad).abs() < 4.0 * r.half_width() / 1.96,
        "{} vs {quad}",
        r.y0
    );
}

#[test]
fn rejects_bad_requests() {
    let q = Quadratic::new(2, 1.0).unwrap();
    assert!(matches!(
        cole_hopf(&q, 1.0, 0.0, &[0.0], 100, 0),
        Err(ReferenceError::Invalid(_))
    ));
    assert!(matches!(
        cole_hopf(&q, 1.0, 0.0, &[0.0; 2], 1, 0),
        Err(ReferenceError::Invalid(_))
    ));
    assert!(matches!(
        cole_hopf(&q, 1.0, 2.0, &[0.0; 2], 100, 0),
        Err(ReferenceError::Invalid(_))
    ));
    assert!(matches!(
        exact_y0(&q, 0.0, &[0.0; 2]),
        Err(ReferenceError::Unsupported(_))
    ));
}

#[test]
fn closed_form_lookups() {
    for row in CHALLENGING {
        let c = Challenging::new(row.dim, 1.0).unwrap();
        let y = exact_y0(&c, 0.0, &vec![0.5; row.dim]).unwrap();
        assert!((y - row.exact).abs() < 1e-4, "d={}: {y}", row.dim);
    }
    let p = Periodic::new(3, 0.3).unwrap();
    assert_eq!(
        exact_z0(&p, 0.1, &[0.2, 0.4, 0.6]).unwrap(),
        p.exact_z(0.1, &[0.2, 0.4, 0.6]).unwrap()
    );
}
