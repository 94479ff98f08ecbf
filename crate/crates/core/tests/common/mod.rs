//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use sparse_bsde::models::Model;
use sparse_bsde::parametrization::{loss_g, Coefficients, SpaceLayout};
use sparse_bsde::simulation::PathRef;
use sparse_bsde::sparse_grid::BasisEval;

pub fn random_coefficients<R: Rng>(layout: &SpaceLayout, scale: f64, rng: &mut R) -> Coefficients {
    let flat: Vec<f64> = (0..layout.len())
        .map(|_| scale * (2.0 * rng.random::<f64>() - 1.0))
        .collect();
    Coefficients::from_flat(layout, &flat)
}

/// Central differences of the terminal loss in every coefficient.
pub fn fd_gradient(
    layout: &SpaceLayout,
    c: &Coefficients,
    model: &dyn Model,
    path: &PathRef<'_>,
    step: f64,
) -> Vec<f64> {
    let base = c.flatten();
    let mut out = Vec::with_capacity(base.len());
    let mut v = base.clone();
    for i in 0..base.len() {
        v[i] = base[i] + step;
        let up = loss_g(layout, &Coefficients::from_flat(layout, &v), model, path);
        v[i] = base[i] - step;
        let down = loss_g(layout, &Coefficients::from_flat(layout, &v), model, path);
        v[i] = base[i];
        out.push((up - down) / (2.0 * step));
    }
    out
}

fn combine(b: &BasisEval, coef: &[f64], d: usize) -> Vec<f64> {
    let mut z = vec![0.0; d];
    for (k, p) in b.iter() {
        for l in 0..d {
            z[l] += p * coef[k * d + l];
        }
    }
    z
}

/// `g(X_T) - U_N` where `U` follows `U_{n+1} = U_n - h f(Y~_n, Z~_n) + Z_n . dW_n`
/// from `U_0 = Y_0`, with `Y~` the forward process of `tilde`.
pub fn u_recursion_residual(
    layout: &SpaceLayout,
    tilde: &Coefficients,
    c: &Coefficients,
    model: &dyn Model,
    path: &PathRef<'_>,
) -> f64 {
    let d = layout.dim();
    let h = layout.grid().h();
    let mut b = BasisEval::new();
    let mut m = Vec::new();
    layout.eval_y(path.x(0), &mut b, &mut m);
    let mut yt: f64 = b.iter().map(|(k, p)| p * tilde.y[k]).sum();
    let mut u: f64 = b.iter().map(|(k, p)| p * c.y[k]).sum();
    for n in 0..layout.steps() {
        layout.eval_z(n, path.x(n), &mut b, &mut m);
        let zt = combine(&b, &tilde.z[n], d);
        let zu = combine(&b, &c.z[n], d);
        let f = model.driver(layout.grid().t(n), path.x(n), yt, &zt);
        let w = path.dw(n);
        let dt: f64 = zt.iter().zip(w).map(|(a, b)| a * b).sum();
        let du: f64 = zu.iter().zip(w).map(|(a, b)| a * b).sum();
        yt += -h * f + dt;
        u += -h * f + du;
    }
    model.terminal(path.terminal()) - u
}

/// Solves `A x = b` for a symmetric positive definite `A`.
pub fn solve_spd(a: DMatrix<f64>, b: DVector<f64>) -> DVector<f64> {
    match a.clone().cholesky() {
        Some(ch) => ch.solve(&b),
        None => a.lu().solve(&b).expect("nonsingular system"),
    }
}

/// Empirical least squares `min mean |G - u . Omega|^2` over the rows.
pub fn normal_equations(features: &[Vec<f64>], targets: &[f64]) -> Vec<f64> {
    let k = features[0].len();
    let mut a = DMatrix::<f64>::zeros(k, k);
    let mut b = DVector::<f64>::zeros(k);
    for (f, &g) in features.iter().zip(targets) {
        let v = DVector::from_column_slice(f);
        a.ger(1.0, &v, &v, 1.0);
        b.axpy(g, &v, 1.0);
    }
    let n = targets.len() as f64;
    solve_spd(a / n, b / n).iter().copied().collect()
}

/// Index sets of the blocks of the separable problem: `y`, then one block
/// per `(n, l)`, in flatten order.
pub fn blocks(layout: &SpaceLayout) -> Vec<Vec<usize>> {
    let d = layout.dim();
    let mut out = vec![(0..layout.k_y()).collect::<Vec<_>>()];
    let mut off = layout.k_y();
    for n in 0..layout.steps() {
        let k = layout.k_z(n);
        for l in 0..d {
            out.push((0..k).map(|j| off + j * d + l).collect());
        }
        off += k * d;
    }
    out
}

/// Block-separable least squares: each block regresses `G` on its own features.
pub fn block_normal_equations(
    layout: &SpaceLayout,
    features: &[Vec<f64>],
    targets: &[f64],
) -> Vec<f64> {
    let mut sol = vec![0.0; layout.len()];
    for idx in blocks(layout) {
        let rows: Vec<Vec<f64>> = features
            .iter()
            .map(|f| idx.iter().map(|&i| f[i]).collect())
            .collect();
        let x = normal_equations(&rows, targets);
        for (&i, v) in idx.iter().zip(x) {
            sol[i] = v;
        }
    }
    sol
}

/// `d_t u + b . grad u + tr(a a^T hess u) / 2 + f(t, x, u, a^T grad u)` by
/// finite differences of the closed form.
pub fn pde_residual(model: &dyn Model, t: f64, x: &[f64], step: f64) -> f64 {
    let d = x.len();
    let u = |t: f64, x: &[f64]| model.exact(t, x).expect("closed form");
    let u0 = u(t, x);
    let ut = (u(t + step, x) - u(t - step, x)) / (2.0 * step);
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    let mut p = x.to_vec();
    for i in 0..d {
        p[i] = x[i] + step;
        let up = u(t, &p);
        p[i] = x[i] - step;
        let dn = u(t, &p);
        p[i] = x[i];
        grad[i] = (up - dn) / (2.0 * step);
        hess[i * d + i] = (up - 2.0 * u0 + dn) / (step * step);
        for j in 0..i {
            let mut q = x.to_vec();
            let mut e = |si: f64, sj: f64| {
                q[i] = x[i] + si * step;
                q[j] = x[j] + sj * step;
                u(t, &q)
            };
            let v =
                (e(1.0, 1.0) - e(1.0, -1.0) - e(-1.0, 1.0) + e(-1.0, -1.0)) / (4.0 * step * step);
            hess[i * d + j] = v;
            hess[j * d + i] = v;
        }
    }
    let mut b = vec![0.0; d];
    model.drift(x, &mut b);
    let s = model.vol(x);
    let mut gen: f64 = b.iter().zip(&grad).map(|(a, g)| a * g).sum();
    for i in 0..d {
        for j in 0..d {
            let aij: f64 = (0..d).map(|k| s[i * d + k] * s[j * d + k]).sum();
            gen += 0.5 * aij * hess[i * d + j];
        }
    }
    let z: Vec<f64> = (0..d)
        .map(|j| (0..d).map(|i| s[i * d + j] * grad[i]).sum())
        .collect();
    ut + gen + model.driver(t, x, u0, &z)
}

/// `sigma^T grad u` by central differences of the closed form.
pub fn fd_z(model: &dyn Model, t: f64, x: &[f64], step: f64) -> Vec<f64> {
    let d = x.len();
    let s = model.vol(x);
    let mut p = x.to_vec();
    let grad: Vec<f64> = (0..d)
        .map(|i| {
            p[i] = x[i] + step;
            let up = model.exact(t, &p).unwrap();
            p[i] = x[i] - step;
            let dn = model.exact(t, &p).unwrap();
            p[i] = x[i];
            (up - dn) / (2.0 * step)
        })
        .collect();
    (0..d)
        .map(|j| (0..d).map(|i| s[i * d + j] * grad[i]).sum())
        .collect()
}
