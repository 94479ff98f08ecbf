//! The optimization variable `u = (y, z)` and everything computed from it
//! along one path: the controlled process `Y^u`, the loss
//! `G = |g(X_T) - Y^u_T|^2`, its analytic gradient, and the frozen-driver
//! residual used by the Picard iteration.
//!
//! `Y^u_0 = sum_k psi_y^k(X_0) y^k` and `Z^u_{t_n} = sum_k psi_n^k(X_{t_n}) z^{n,k}`,
//! with the `psi_n` taken from one sparse-grid space, composed with either
//! the per-step chart of an approximation box or the periodization map.
//! Under a Dirac initial law the step-0 space is the constant 1.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::geometry::{domain_bm, domain_gbm, periodize_into, DomainBox, GeometryError, TimeGrid};
use crate::models::{InitialLaw, Model, ProcessKind};
use crate::simulation::PathRef;
use crate::sparse_grid::{BasisEval, Family, GridError, SparseGridSpace};

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("box charts need a Dirac initial law")]
    ChartNeedsDirac,
    #[error("box dimension {got} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coefficient file: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// How points are brought into `[0,1]^d` before basis evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Mapping {
    Chart(DomainBox),
    Periodic,
}

/// The per-step approximation spaces.
#[derive(Debug, Clone)]
pub struct SpaceLayout {
    grid: TimeGrid,
    space: SparseGridSpace,
    mapping: Mapping,
    dirac: bool,
}

impl SpaceLayout {
    /// Picks the mapping from the model: periodization for a uniform start,
    /// otherwise box charts of width factor `r` sized for the forward process.
    pub fn for_model(
        model: &dyn Model,
        grid: TimeGrid,
        family: Family,
        level: u32,
        r: f64,
    ) -> Result<Self, LayoutError> {
        let space = SparseGridSpace::new(model.dim(), level, family)?;
        let (mapping, dirac) = match (model.initial_law(), model.process()) {
            (InitialLaw::Uniform01, _) => (Mapping::Periodic, false),
            (InitialLaw::Dirac(x0), ProcessKind::BrownianDrift { mu, sigma }) => {
                (Mapping::Chart(domain_bm(&x0, mu, sigma, r, &grid)?), true)
            }
            (InitialLaw::Dirac(x0), ProcessKind::Gbm { mu, sigma }) => {
                (Mapping::Chart(domain_gbm(&x0, mu, sigma, r, &grid)?), true)
            }
            (InitialLaw::Dirac(_), ProcessKind::General) => (Mapping::Periodic, true),
        };
        Ok(Self {
            grid,
            space,
            mapping,
            dirac,
        })
    }

    pub fn new(
        grid: TimeGrid,
        space: SparseGridSpace,
        mapping: Mapping,
        dirac: bool,
    ) -> Result<Self, LayoutError> {
        if let Mapping::Chart(b) = &mapping {
            if !dirac {
                return Err(LayoutError::ChartNeedsDirac);
            }
            if b.last_step() > 0 && b.dim() != space.dim() {
                return Err(LayoutError::DimensionMismatch {
                    expected: space.dim(),
                    got: b.dim(),
                });
            }
            if b.last_step() + 1 < grid.steps() {
                return Err(GeometryError::NoBox {
                    step: grid.steps() - 1,
                    last: b.last_step(),
                }
                .into());
            }
        }
        Ok(Self {
            grid,
            space,
            mapping,
            dirac,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn space(&self) -> &SparseGridSpace {
        &self.space
    }

    pub fn mapping(&self) -> &Mapping {
        &self.mapping
    }

    pub fn is_dirac(&self) -> bool {
        self.dirac
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn steps(&self) -> usize {
        self.grid.steps()
    }

    /// `K^y`.
    pub fn k_y(&self) -> usize {
        if self.dirac {
            1
        } else {
            self.space.size()
        }
    }

    /// `K^z_n`.
    pub fn k_z(&self, n: usize) -> usize {
        if n == 0 && self.dirac {
            1
        } else {
            self.space.size()
        }
    }

    /// Total number of scalar coefficients.
    pub fn len(&self) -> usize {
        self.k_y() + (0..self.steps()).map(|n| self.k_z(n)).sum::<usize>() * self.dim()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Nonzero values of `psi_y(x0)`.
    pub fn eval_y(&self, x0: &[f64], out: &mut BasisEval, mapped: &mut Vec<f64>) {
        self.eval_z(0, x0, out, mapped);
    }

    /// Nonzero values of `psi_n(x)`.
    pub fn eval_z(&self, n: usize, x: &[f64], out: &mut BasisEval, mapped: &mut Vec<f64>) {
        if n == 0 && self.dirac {
            out.set_constant();
            return;
        }
        mapped.resize(x.len(), 0.0);
        match &self.mapping {
            Mapping::Periodic => periodize_into(x, mapped),
            Mapping::Chart(b) => b.chart_into(n, x, mapped),
        }
        self.space.eval_sparse(mapped, out);
    }
}

/// `u = (y, z)`; `z[n][k d + l]` is the `l`-th coordinate of `z^{n,k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub y: Vec<f64>,
    pub z: Vec<Vec<f64>>,
    dim: usize,
}

impl Coefficients {
    pub fn zeros(layout: &SpaceLayout) -> Self {
        Self::constant(layout, 0.0, 0.0, 0.0)
    }

    /// Every entry of `y`, `z^0` and `z^{n >= 1}` set to the given scalar.
    pub fn constant(layout: &SpaceLayout, y0: f64, z0: f64, zn: f64) -> Self {
        let d = layout.dim();
        let z = (0..layout.steps())
            .map(|n| vec![if n == 0 { z0 } else { zn }; layout.k_z(n) * d])
            .collect();
        Self {
            y: vec![y0; layout.k_y()],
            z,
            dim: d,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.z.len()
    }

    pub fn len(&self) -> usize {
        self.y.len() + self.z.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn matches(&self, layout: &SpaceLayout) -> bool {
        self.dim == layout.dim()
            && self.y.len() == layout.k_y()
            && self.z.len() == layout.steps()
            && self
                .z
                .iter()
                .enumerate()
                .all(|(n, z)| z.len() == layout.k_z(n) * self.dim)
    }

    /// `y` followed by `z^0, z^1, ...`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.y.clone();
        for z in &self.z {
            v.extend_from_slice(z);
        }
        v
    }

    pub fn from_flat(layout: &SpaceLayout, flat: &[f64]) -> Self {
        assert_eq!(flat.len(), layout.len(), "flat coefficient length");
        let mut c = Self::zeros(layout);
        let (y, mut rest) = flat.split_at(c.y.len());
        c.y.copy_from_slice(y);
        for z in &mut c.z {
            let (head, tail) = rest.split_at(z.len());
            z.copy_from_slice(head);
            rest = tail;
        }
        c
    }

    pub fn max_abs(&self) -> f64 {
        self.y
            .iter()
            .chain(self.z.iter().flatten())
            .fold(
                0.0,
                |m: f64, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) },
            )
    }

    pub fn is_finite(&self) -> bool {
        self.y
            .iter()
            .chain(self.z.iter().flatten())
            .all(|v| v.is_finite())
    }

    /// `k,n,l,value` rows; `n = -1` marks the `y` part.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "k,n,l,value")?;
        for (k, v) in self.y.iter().enumerate() {
            writeln!(w, "{k},-1,0,{v:?}")?;
        }
        for (n, z) in self.z.iter().enumerate() {
            for (i, v) in z.iter().enumerate() {
                writeln!(w, "{},{n},{},{v:?}", i / self.dim, i % self.dim)?;
            }
        }
        Ok(())
    }

    /// Reads rows written by [`write_csv`](Self::write_csv); missing rows stay 0.
    pub fn read_csv<R: BufRead>(layout: &SpaceLayout, r: R) -> Result<Self, LayoutError> {
        let mut c = Self::zeros(layout);
        let d = layout.dim();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('k')) {
                continue;
            }
            let bad = || LayoutError::Csv(format!("line {}: '{line}'", lineno + 1));
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(bad());
            }
            let k: usize = cols[0].parse().map_err(|_| bad())?;
            let n: i64 = cols[1].parse().map_err(|_| bad())?;
            let l: usize = cols[2].parse().map_err(|_| bad())?;
            let v: f64 = cols[3].parse().map_err(|_| bad())?;
            let slot = if n < 0 {
                c.y.get_mut(k)
            } else if l < d {
                c.z.get_mut(n as usize).and_then(|z| z.get_mut(k * d + l))
            } else {
                None
            };
            *slot.ok_or_else(bad)? = v;
        }
        Ok(c)
    }
}

/// `sum_k psi^k z^k` for one step, written into `out` (length `d`).
#[inline]
fn combine(basis: &BasisEval, z: &[f64], d: usize, out: &mut [f64]) {
    out.fill(0.0);
    for (k, p) in basis.iter() {
        let zk = &z[k * d..(k + 1) * d];
        for l in 0..d {
            out[l] += p * zk[l];
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scratch buffers reused across paths.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    /// `psi_y(X_0)`.
    pub basis_y: BasisEval,
    /// `psi_n(X_{t_n})` for every step.
    pub basis: Vec<BasisEval>,
    mapped: Vec<f64>,
    /// `Y_{t_0..t_N}`.
    pub y: Vec<f64>,
    /// `Z_{t_n}`, flat with stride `d`.
    pub z: Vec<f64>,
    fy: Vec<f64>,
    fz: Vec<f64>,
    /// Per-step direction `v_n` such that the gradient in `z^{n,k}_l` is
    /// `psi_n^k v_n[l]`.
    pub grad_z: Vec<f64>,
    /// Gradient factor for `y`: the gradient in `y^k` is `psi_y^k grad_y`.
    pub grad_y: f64,
}

impl Workspace {
    pub fn new(layout: &SpaceLayout) -> Self {
        let n = layout.steps();
        let d = layout.dim();
        Self {
            basis_y: BasisEval::new(),
            basis: vec![BasisEval::new(); n],
            mapped: vec![0.0; d],
            y: vec![0.0; n + 1],
            z: vec![0.0; n * d],
            fy: vec![0.0; n],
            fz: vec![0.0; n * d],
            grad_z: vec![0.0; n * d],
            grad_y: 0.0,
        }
    }

    /// Evaluates every basis along the path. Independent of the coefficients.
    pub fn load_path(&mut self, layout: &SpaceLayout, path: &PathRef<'_>) {
        layout.eval_y(path.x(0), &mut self.basis_y, &mut self.mapped);
        for n in 0..layout.steps() {
            layout.eval_z(n, path.x(n), &mut self.basis[n], &mut self.mapped);
        }
    }

    /// Runs `Y^u` along a loaded path, filling `y` and `z`; returns `Y_T`.
    pub fn run_forward(
        &mut self,
        layout: &SpaceLayout,
        c: &Coefficients,
        model: &dyn Model,
        path: &PathRef<'_>,
    ) -> f64 {
        self.run(layout, c, model, path, false)
    }

    fn run(
        &mut self,
        layout: &SpaceLayout,
        c: &Coefficients,
        model: &dyn Model,
        path: &PathRef<'_>,
        derivs: bool,
    ) -> f64 {
        let d = layout.dim();
        let grid = layout.grid();
        let h = grid.h();
        let mut y: f64 = self.basis_y.iter().map(|(k, p)| p * c.y[k]).sum();
        self.y[0] = y;
        for n in 0..layout.steps() {
            let zn = &mut self.z[n * d..(n + 1) * d];
            combine(&self.basis[n], &c.z[n], d, zn);
            let (t, x) = (grid.t(n), path.x(n));
            let f = model.driver(t, x, y, zn);
            if derivs {
                self.fy[n] = model.driver_dy(t, x, y, zn);
                model.driver_dz(t, x, y, zn, &mut self.fz[n * d..(n + 1) * d]);
            }
            y += -h * f + dot(zn, path.dw(n));
            self.y[n + 1] = y;
        }
        y
    }

    /// Forward sweep plus the gradient of `|g(X_T) - Y_T|^2`, stored as
    /// `grad_y` and `grad_z`. Returns the mismatch `g(X_T) - Y_T`.
    pub fn direct_gradient(
        &mut self,
        layout: &SpaceLayout,
        c: &Coefficients,
        model: &dyn Model,
        path: &PathRef<'_>,
    ) -> f64 {
        let d = layout.dim();
        let h = layout.grid().h();
        let y_t = self.run(layout, c, model, path, true);
        let e = model.terminal(path.terminal()) - y_t;
        let factor = -2.0 * e;
        // suffix products of (1 - h f_y)
        let mut prod = 1.0;
        for n in (0..layout.steps()).rev() {
            let w = path.dw(n);
            let g = &mut self.grad_z[n * d..(n + 1) * d];
            for l in 0..d {
                g[l] = factor * prod * (w[l] - h * self.fz[n * d + l]);
            }
            prod *= 1.0 - h * self.fy[n];
        }
        self.grad_y = factor * prod;
        e
    }

    /// `G^u~ = g(X_T) + sum_n h f(t_n, X_n, Y^u~_n, Z^u~_n)` on a loaded path.
    /// Leaves `Z^u~` in `z`.
    pub fn frozen_target(
        &mut self,
        layout: &SpaceLayout,
        tilde: &Coefficients,
        model: &dyn Model,
        path: &PathRef<'_>,
    ) -> f64 {
        let d = layout.dim();
        let grid = layout.grid();
        let h = grid.h();
        let mut y: f64 = self.basis_y.iter().map(|(k, p)| p * tilde.y[k]).sum();
        self.y[0] = y;
        let mut acc = model.terminal(path.terminal());
        for n in 0..layout.steps() {
            let zn = &mut self.z[n * d..(n + 1) * d];
            combine(&self.basis[n], &tilde.z[n], d, zn);
            let f = model.driver(grid.t(n), path.x(n), y, zn);
            acc += h * f;
            y += -h * f + dot(zn, path.dw(n));
            self.y[n + 1] = y;
        }
        acc
    }

    /// `u . Omega = sum_k y^k theta^k + sum_n Z^u_n . dW_n` on a loaded path.
    pub fn feature_dot(
        &mut self,
        layout: &SpaceLayout,
        c: &Coefficients,
        path: &PathRef<'_>,
    ) -> f64 {
        let d = layout.dim();
        let mut s: f64 = self.basis_y.iter().map(|(k, p)| p * c.y[k]).sum();
        let mut zn = vec![0.0; d];
        for n in 0..layout.steps() {
            combine(&self.basis[n], &c.z[n], d, &mut zn);
            s += dot(&zn, path.dw(n));
        }
        s
    }

    /// Dense copy of the gradient left by [`direct_gradient`](Self::direct_gradient).
    pub fn dense_gradient(&self, layout: &SpaceLayout) -> Coefficients {
        let d = layout.dim();
        let mut g = Coefficients::zeros(layout);
        for (k, p) in self.basis_y.iter() {
            g.y[k] += p * self.grad_y;
        }
        for n in 0..layout.steps() {
            for (k, p) in self.basis[n].iter() {
                for l in 0..d {
                    g.z[n][k * d + l] += p * self.grad_z[n * d + l];
                }
            }
        }
        g
    }

    /// Dense feature vector `Omega = (theta, omega)` in flatten order.
    pub fn dense_features(&self, layout: &SpaceLayout, path: &PathRef<'_>) -> Vec<f64> {
        let d = layout.dim();
        let mut f = Coefficients::zeros(layout);
        for (k, p) in self.basis_y.iter() {
            f.y[k] = p;
        }
        for n in 0..layout.steps() {
            let w = path.dw(n);
            for (k, p) in self.basis[n].iter() {
                for l in 0..d {
                    f.z[n][k * d + l] = p * w[l];
                }
            }
        }
        f.flatten()
    }
}

/// `Z^u_{t_n}(x)`.
pub fn z_at(layout: &SpaceLayout, c: &Coefficients, n: usize, x: &[f64]) -> Vec<f64> {
    let d = layout.dim();
    let mut basis = BasisEval::new();
    let mut mapped = Vec::new();
    layout.eval_z(n, x, &mut basis, &mut mapped);
    let mut out = vec![0.0; d];
    combine(&basis, &c.z[n], d, &mut out);
    out
}

/// `Y^u_0(x0) = sum_k psi_y^k(x0) y^k`.
pub fn y0_at(layout: &SpaceLayout, c: &Coefficients, x0: &[f64]) -> f64 {
    let mut basis = BasisEval::new();
    let mut mapped = Vec::new();
    layout.eval_y(x0, &mut basis, &mut mapped);
    basis.iter().map(|(k, p)| p * c.y[k]).sum()
}

/// The trajectory `Y^u_{t_0..t_N}` along `path`.
pub fn forward_y(
    layout: &SpaceLayout,
    c: &Coefficients,
    model: &dyn Model,
    path: &PathRef<'_>,
) -> Vec<f64> {
    let mut ws = Workspace::new(layout);
    ws.load_path(layout, path);
    ws.run_forward(layout, c, model, path);
    ws.y
}

/// `G = |g(X_T) - Y^u_T|^2`.
pub fn loss_g(
    layout: &SpaceLayout,
    c: &Coefficients,
    model: &dyn Model,
    path: &PathRef<'_>,
) -> f64 {
    let y = forward_y(layout, c, model, path);
    let e = model.terminal(path.terminal()) - y[layout.steps()];
    e * e
}

/// Analytic gradient of [`loss_g`] with respect to every coefficient.
pub fn grad_g(
    layout: &SpaceLayout,
    c: &Coefficients,
    model: &dyn Model,
    path: &PathRef<'_>,
) -> Coefficients {
    let mut ws = Workspace::new(layout);
    ws.load_path(layout, path);
    ws.direct_gradient(layout, c, model, path);
    ws.dense_gradient(layout)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardResidual {
    /// `G^u~`.
    pub target: f64,
    /// `G^u~ - u . Omega`.
    pub residual: f64,
    /// `Omega` in flatten order.
    pub features: Vec<f64>,
}

/// Frozen-driver target, residual `G^u~ - u . Omega` and features of one path.
pub fn picard_residual(
    layout: &SpaceLayout,
    tilde: &Coefficients,
    c: &Coefficients,
    model: &dyn Model,
    path: &PathRef<'_>,
) -> PicardResidual {
    let mut ws = Workspace::new(layout);
    ws.load_path(layout, path);
    let target = ws.frozen_target(layout, tilde, model, path);
    let residual = target - ws.feature_dot(layout, c, path);
    PicardResidual {
        target,
        residual,
        features: ws.dense_features(layout, path),
    }
}

/// Human-readable shape summary, e.g. for logs.
pub fn describe(layout: &SpaceLayout) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "{} level {} in d={} ({} functions), N={}, K^y={}, {} coefficients",
        layout.space().family(),
        layout.space().level(),
        layout.dim(),
        layout.space().size(),
        layout.steps(),
        layout.k_y(),
        layout.len()
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Periodic, Quadratic};
    use crate::simulation::{PathSampler, Stepping};

    fn quad_layout(d: usize, n: usize) -> (Quadratic, SpaceLayout) {
        let m = Quadratic::new(d, 1.0).unwrap();
        let g = TimeGrid::new(1.0, n).unwrap();
        let l = SpaceLayout::for_model(&m, g, Family::PreWavelet, 2, 2.0).unwrap();
        (m, l)
    }

    #[test]
    fn shapes() {
        let (_, l) = quad_layout(2, 3);
        let k = l.space().size();
        assert_eq!(l.k_y(), 1);
        assert_eq!(l.k_z(0), 1);
        assert_eq!(l.len(), 1 + 2 * (1 + 2 * k));
        let c = Coefficients::constant(&l, 1.0, 2.0, 3.0);
        assert!(c.matches(&l));
        assert_eq!(Coefficients::from_flat(&l, &c.flatten()), c);

        let p = Periodic::new(2, 0.3).unwrap();
        let pl = SpaceLayout::for_model(
            &p,
            TimeGrid::new(0.3, 3).unwrap(),
            Family::PreWavelet,
            2,
            1.0,
        )
        .unwrap();
        assert_eq!(pl.k_y(), pl.space().size());
        assert!(matches!(pl.mapping(), Mapping::Periodic));
    }

    #[test]
    fn z_at_examples() {
        let (_, l) = quad_layout(2, 3);
        let mut c = Coefficients::zeros(&l);
        assert_eq!(z_at(&l, &c, 1, &[0.1, 0.2]), vec![0.0, 0.0]);
        c.z[0] = vec![0.4, -0.7];
        assert_eq!(z_at(&l, &c, 0, &[5.0, 9.0]), vec![0.4, -0.7]);
        let k = 3;
        c.z[2][k * 2 + 1] = 2.5;
        let x = [0.3, -0.2];
        let mut mapped = vec![0.0; 2];
        if let Mapping::Chart(b) = l.mapping() {
            b.chart_into(2, &x, &mut mapped);
        }
        let psi = l.space().eval_multivariate(k, &mapped).unwrap();
        let z = z_at(&l, &c, 2, &x);
        assert_eq!(z[0], 0.0);
        assert!((z[1] - 2.5 * psi).abs() < 1e-14);
    }

    #[test]
    fn forward_telescopes_without_driver() {
        let (m, l) = quad_layout(2, 4);
        let m0 = Quadratic::new(2, 0.0).unwrap();
        let p = PathSampler::new(&m, *l.grid(), Stepping::Auto).sample(5, 1);
        let mut c = Coefficients::constant(&l, 0.7, 0.3, -0.2);
        c.z[2][5] = 1.3;
        let y = forward_y(&l, &c, &m0, &p.view());
        let mut expect = 0.7;
        for n in 0..4 {
            expect += dot(&z_at(&l, &c, n, p.x(n)), p.dw(n));
        }
        assert!((y[4] - expect).abs() < 1e-12);
        let c0 = Coefficients::constant(&l, 0.7, 0.0, 0.0);
        assert_eq!(forward_y(&l, &c0, &m0, &p.view())[4], 0.7);
    }

    #[test]
    fn empty_products_in_one_step_gradient() {
        let (_, l) = quad_layout(3, 1);
        let m0 = Quadratic::new(3, 0.0).unwrap();
        let p = PathSampler::new(&m0, *l.grid(), Stepping::Auto).sample(2, 0);
        let c = Coefficients::constant(&l, 0.2, 0.1, 0.0);
        let e = m0.terminal(p.x(1)) - forward_y(&l, &c, &m0, &p.view())[1];
        let g = grad_g(&l, &c, &m0, &p.view());
        assert!((g.y[0] - (-2.0 * e)).abs() < 1e-14);
        for j in 0..3 {
            assert!((g.z[0][j] - (-2.0 * e * p.dw(0)[j])).abs() < 1e-14);
        }
    }

    #[test]
    fn csv_round_trip() {
        let (_, l) = quad_layout(2, 3);
        let mut c = Coefficients::constant(&l, 1.5, -0.25, 0.0);
        c.z[2][7] = 1.0 / 3.0;
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let back = Coefficients::read_csv(&l, &buf[..]).unwrap();
        assert_eq!(back, c);
        assert!(Coefficients::read_csv(&l, &b"k,n,l,value\n0,9,0,1.0\n"[..]).is_err());
    }
}
