mod common;

use common::{fd_gradient, random_coefficients, u_recursion_residual};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparse_bsde::models::{Bifurcation, Challenging, Model, Periodic, Quadratic};
use sparse_bsde::parametrization::{
    forward_y, grad_g, loss_g, picard_residual, Coefficients, SpaceLayout,
};
use sparse_bsde::sgd::{h_maps, ResidualMode};
use sparse_bsde::simulation::{PathSampler, Stepping};
use sparse_bsde::{Family, TimeGrid};

fn layout(model: &dyn Model, horizon: f64, n: usize, family: Family, level: u32) -> SpaceLayout {
    SpaceLayout::for_model(
        model,
        TimeGrid::new(horizon, n).unwrap(),
        family,
        level,
        2.0,
    )
    .unwrap()
}

fn max_rel(fd: &[f64], an: &[f64]) -> f64 {
    let diff = fd
        .iter()
        .zip(an)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = an.iter().map(|v| v.abs()).fold(0.0, f64::max);
    diff / scale
}

#[test]
fn gradient_matches_finite_differences_across_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cases: Vec<(Box<dyn Model>, f64)> = vec![
        (Box::new(Periodic::new(2, 0.3).unwrap()), 0.3),
        (Box::new(Quadratic::new(2, 0.5).unwrap()), 1.0),
        (Box::new(Bifurcation::new(2, -1.5).unwrap()), 1.0),
        (Box::new(Challenging::new(2, 1.0).unwrap()), 1.0),
    ];
    for (model, horizon) in cases {
        let l = layout(model.as_ref(), horizon, 3, Family::ModifiedHat, 2);
        let sampler = PathSampler::new(model.as_ref(), *l.grid(), Stepping::Auto);
        for i in 0..3 {
            let c = random_coefficients(&l, 0.3, &mut rng);
            let p = sampler.sample(11, i);
            let an = grad_g(&l, &c, model.as_ref(), &p.view()).flatten();
            let fd = fd_gradient(&l, &c, model.as_ref(), &p.view(), 1e-5);
            let e = max_rel(&fd, &an);
            assert!(e < 1e-6, "{} path {i}: {e}", model.name());
        }
    }
}

#[test]
fn picard_residual_is_the_u_recursion_gap() {
    let model = Periodic::new(2, 0.3).unwrap();
    let l = layout(&model, 0.3, 4, Family::PreWavelet, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sampler = PathSampler::new(&model, *l.grid(), Stepping::Auto);
    for i in 0..5 {
        let tilde = random_coefficients(&l, 0.5, &mut rng);
        let c = random_coefficients(&l, 0.5, &mut rng);
        let p = sampler.sample(2, i);
        let r = picard_residual(&l, &tilde, &c, &model, &p.view());
        let oracle = u_recursion_residual(&l, &tilde, &c, &model, &p.view());
        assert!(
            (r.residual - oracle).abs() < 1e-12,
            "{} vs {oracle}",
            r.residual
        );
        let dot: f64 = r.features.iter().zip(c.flatten()).map(|(a, b)| a * b).sum();
        assert!((r.target - dot - r.residual).abs() < 1e-12);
    }
}

#[test]
fn picard_residual_is_affine_in_the_coefficients() {
    let model = Quadratic::new(3, 1.0).unwrap();
    let l = layout(&model, 1.0, 3, Family::ModifiedHat, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = PathSampler::new(&model, *l.grid(), Stepping::Auto).sample(4, 0);
    let tilde = random_coefficients(&l, 0.4, &mut rng);
    let a = random_coefficients(&l, 0.4, &mut rng);
    let b = random_coefficients(&l, 0.4, &mut rng);
    let mix: Vec<f64> = a
        .flatten()
        .iter()
        .zip(b.flatten())
        .map(|(x, y)| 0.3 * x + 0.7 * y)
        .collect();
    let r = |c: &Coefficients| picard_residual(&l, &tilde, c, &model, &p.view()).residual;
    let lhs = r(&Coefficients::from_flat(&l, &mix));
    assert!((lhs - (0.3 * r(&a) + 0.7 * r(&b))).abs() < 1e-12);
}

#[test]
fn direct_gradient_is_joint_picard_direction_when_driver_ignores_solution() {
    // f depends on (t, x) only, so the frozen problem equals the direct one
    let model = Challenging::new(2, 1.0).unwrap();
    let l = layout(&model, 1.0, 3, Family::ModifiedHat, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let sampler = PathSampler::new(&model, *l.grid(), Stepping::Auto);
    for i in 0..4 {
        let tilde = random_coefficients(&l, 0.5, &mut rng);
        let c = random_coefficients(&l, 0.5, &mut rng);
        let p = sampler.sample(6, i);
        let g = grad_g(&l, &c, &model, &p.view()).flatten();
        let h = h_maps(&l, &tilde, &c, &model, &p.view(), ResidualMode::Joint).flatten();
        for (a, b) in g.iter().zip(&h) {
            assert!((a + 2.0 * b).abs() < 1e-11, "{a} vs {}", -2.0 * b);
        }
    }
}

#[test]
fn loss_is_squared_terminal_gap() {
    let model = Bifurcation::new(2, -0.4).unwrap();
    let l = layout(&model, 1.0, 5, Family::PreWavelet, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let c = random_coefficients(&l, 0.2, &mut rng);
    let p = PathSampler::new(&model, *l.grid(), Stepping::Auto).sample(0, 0);
    let y = forward_y(&l, &c, &model, &p.view());
    assert_eq!(y.len(), 6);
    let e = model.terminal(p.view().terminal()) - y[5];
    assert!((loss_g(&l, &c, &model, &p.view()) - e * e).abs() < 1e-15);
}

#[test]
fn coefficient_csv_rejects_other_layouts() {
    let model = Quadratic::new(2, 1.0).unwrap();
    let l = layout(&model, 1.0, 3, Family::ModifiedHat, 2);
    let other = layout(&model, 1.0, 4, Family::ModifiedHat, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let c = random_coefficients(&l, 1.0, &mut rng);
    let mut buf = Vec::new();
    c.write_csv(&mut buf).unwrap();
    assert_eq!(Coefficients::read_csv(&l, &buf[..]).unwrap(), c);
    // rows are placed by index, so a shorter file pads with zeros
    let padded = Coefficients::read_csv(&other, &buf[..]).unwrap();
    assert_eq!(padded.z[..3], c.z[..]);
    assert!(padded.z[3].iter().all(|&v| v == 0.0));
    let mut long = Vec::new();
    padded.write_csv(&mut long).unwrap();
    assert!(Coefficients::read_csv(&l, &long[..]).is_err());
}
