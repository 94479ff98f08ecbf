//! Seeded Brownian increments and forward paths on a time grid.
//!
//! Every path owns a ChaCha8 stream selected by `(seed, path index)`, so a
//! batch is reproducible no matter how its paths are scheduled on threads.

use std::io::{self, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::geometry::TimeGrid;
use crate::models::{InitialLaw, Model, ProcessKind};

const DUMP_MAGIC: &[u8; 4] = b"BSDE";
const DUMP_VERSION: u32 = 1;

/// Independent generator for path `index` under `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `count` standard normals from stream 0 of `seed`.
pub fn gaussian_stream(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = path_rng(seed, 0);
    (0..count).map(|_| rng.sample(StandardNormal)).collect()
}

/// How `X_{n+1}` is produced from `X_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stepping {
    /// Exact log-normal update for geometric Brownian motion, Euler for
    /// everything else.
    #[default]
    Auto,
    /// Euler-Maruyama for every model.
    EulerStrict,
}

/// One path: states `X_0..X_N` and increments `dW_0..dW_{N-1}`, both
/// stored flat with stride `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    dim: usize,
    x: Vec<f64>,
    dw: Vec<f64>,
}

/// Borrowed view of a path, either owned or inside a [`PathBatch`].
#[derive(Debug, Clone, Copy)]
pub struct PathRef<'a> {
    pub dim: usize,
    pub x: &'a [f64],
    pub dw: &'a [f64],
}

impl<'a> PathRef<'a> {
    pub fn steps(&self) -> usize {
        self.dw.len() / self.dim
    }

    #[inline]
    pub fn x(&self, n: usize) -> &'a [f64] {
        &self.x[n * self.dim..(n + 1) * self.dim]
    }

    #[inline]
    pub fn dw(&self, n: usize) -> &'a [f64] {
        &self.dw[n * self.dim..(n + 1) * self.dim]
    }

    pub fn terminal(&self) -> &'a [f64] {
        self.x(self.steps())
    }
}

impl Path {
    pub fn zeros(dim: usize, steps: usize) -> Self {
        Self {
            dim,
            x: vec![0.0; (steps + 1) * dim],
            dw: vec![0.0; steps * dim],
        }
    }

    /// Builds a path from stored arrays; lengths must be `(N+1) d` and `N d`.
    pub fn from_parts(dim: usize, x: Vec<f64>, dw: Vec<f64>) -> Self {
        assert!(dim > 0 && dw.len().is_multiple_of(dim) && x.len() == dw.len() + dim);
        Self { dim, x, dw }
    }

    pub fn view(&self) -> PathRef<'_> {
        PathRef {
            dim: self.dim,
            x: &self.x,
            dw: &self.dw,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.dw.len() / self.dim
    }

    pub fn x(&self, n: usize) -> &[f64] {
        &self.x[n * self.dim..(n + 1) * self.dim]
    }

    pub fn dw(&self, n: usize) -> &[f64] {
        &self.dw[n * self.dim..(n + 1) * self.dim]
    }
}

/// Draws paths of one model on one grid.
#[derive(Debug, Clone, Copy)]
pub struct PathSampler<'m> {
    model: &'m dyn Model,
    grid: TimeGrid,
    stepping: Stepping,
}

impl<'m> PathSampler<'m> {
    pub fn new(model: &'m dyn Model, grid: TimeGrid, stepping: Stepping) -> Self {
        Self {
            model,
            grid,
            stepping,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Path number `index` of the stream family `seed`.
    pub fn sample(&self, seed: u64, index: u64) -> Path {
        let mut p = Path::zeros(self.model.dim(), self.grid.steps());
        self.sample_into(seed, index, &mut p.x, &mut p.dw);
        p
    }

    pub fn sample_into(&self, seed: u64, index: u64, x: &mut [f64], dw: &mut [f64]) {
        let mut rng = path_rng(seed, index);
        let d = self.model.dim();
        let sqrt_h = self.grid.h().sqrt();
        match self.model.initial_law() {
            InitialLaw::Dirac(x0) => x[..d].copy_from_slice(&x0),
            InitialLaw::Uniform01 => {
                for v in &mut x[..d] {
                    *v = rng.random::<f64>();
                }
            }
        }
        for v in dw.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *v = sqrt_h * g;
        }
        self.step_all(x, dw);
    }

    /// Fills `x[1..]` from `x[0]` and the increments.
    pub fn step_all(&self, x: &mut [f64], dw: &[f64]) {
        let d = self.model.dim();
        let h = self.grid.h();
        let gbm = match (self.stepping, self.model.process()) {
            (Stepping::Auto, ProcessKind::Gbm { mu, sigma }) => Some((mu, sigma)),
            _ => None,
        };
        let mut b = vec![0.0; d];
        let mut s = vec![0.0; d];
        for n in 0..self.grid.steps() {
            let (head, tail) = x.split_at_mut((n + 1) * d);
            let cur = &head[n * d..];
            let next = &mut tail[..d];
            let w = &dw[n * d..(n + 1) * d];
            if let Some((mu, sigma)) = gbm {
                let drift = (mu - 0.5 * sigma * sigma) * h;
                for j in 0..d {
                    next[j] = cur[j] * (drift + sigma * w[j]).exp();
                }
            } else {
                self.model.drift(cur, &mut b);
                self.model.vol_apply(cur, w, &mut s);
                for j in 0..d {
                    next[j] = cur[j] + b[j] * h + s[j];
                }
            }
        }
    }
}

/// A batch of paths stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    dim: usize,
    steps: usize,
    seed: u64,
    x: Vec<f64>,
    dw: Vec<f64>,
}

impl PathBatch {
    /// Simulates `batch` paths; path `i` uses stream `i` of `seed`.
    pub fn simulate(
        model: &dyn Model,
        grid: TimeGrid,
        batch: usize,
        seed: u64,
        stepping: Stepping,
    ) -> Self {
        let d = model.dim();
        let steps = grid.steps();
        let sampler = PathSampler::new(model, grid, stepping);
        let mut x = vec![0.0; batch * (steps + 1) * d];
        let mut dw = vec![0.0; batch * steps * d];
        x.par_chunks_mut((steps + 1) * d)
            .zip(dw.par_chunks_mut(steps * d))
            .enumerate()
            .for_each(|(i, (xs, ws))| sampler.sample_into(seed, i as u64, xs, ws));
        Self {
            dim: d,
            steps,
            seed,
            x,
            dw,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.x.len() / ((self.steps + 1) * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn path(&self, i: usize) -> PathRef<'_> {
        let sx = (self.steps + 1) * self.dim;
        let sw = self.steps * self.dim;
        PathRef {
            dim: self.dim,
            x: &self.x[i * sx..(i + 1) * sx],
            dw: &self.dw[i * sw..(i + 1) * sw],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = PathRef<'_>> + '_ {
        (0..self.len()).map(move |i| self.path(i))
    }

    /// Writes the batch as `"BSDE"`, version, `d`, `N`, batch size (all
    /// little-endian), then every state and every increment as `f64`.
    pub fn write_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        for v in [
            self.dim as u64,
            self.steps as u64,
            self.len() as u64,
            self.seed,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in self.x.iter().chain(&self.dw) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> io::Result<Self> {
        let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(bad("not a path dump"));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != DUMP_VERSION {
            return Err(bad("unsupported dump version"));
        }
        let mut b8 = [0u8; 8];
        let mut header = [0u64; 4];
        for v in &mut header {
            r.read_exact(&mut b8)?;
            *v = u64::from_le_bytes(b8);
        }
        let [dim, steps, batch, seed] = header.map(|v| v as usize);
        if dim == 0 {
            return Err(bad("zero dimension"));
        }
        let mut read_vec = |len: usize| -> io::Result<Vec<f64>> {
            let mut out = Vec::with_capacity(len);
            for _ in 0..len {
                r.read_exact(&mut b8)?;
                out.push(f64::from_le_bytes(b8));
            }
            Ok(out)
        };
        let x = read_vec(batch * (steps + 1) * dim)?;
        let dw = read_vec(batch * steps * dim)?;
        Ok(Self {
            dim,
            steps,
            seed: seed as u64,
            x,
            dw,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Financial, Quadratic};

    #[test]
    fn same_seed_same_stream() {
        assert_eq!(gaussian_stream(7, 100), gaussian_stream(7, 100));
        assert_ne!(gaussian_stream(7, 100), gaussian_stream(8, 100));
    }

    #[test]
    fn brownian_first_step_is_the_increment() {
        let m = Quadratic::new(3, 1.0).unwrap();
        let g = TimeGrid::new(1.0, 4).unwrap();
        let p = PathSampler::new(&m, g, Stepping::Auto).sample(1, 0);
        for j in 0..3 {
            assert_eq!(p.x(1)[j] - p.x(0)[j], p.dw(0)[j]);
        }
    }

    #[test]
    fn gbm_stepping_modes() {
        let m = Financial::new(2).unwrap();
        let g = TimeGrid::new(0.5, 5).unwrap();
        let exact = PathSampler::new(&m, g, Stepping::Auto).sample(3, 2);
        let euler = PathSampler::new(&m, g, Stepping::EulerStrict).sample(3, 2);
        assert_eq!(exact.dw, euler.dw);
        let h = g.h();
        for n in 0..5 {
            for j in 0..2 {
                let e = euler.x(n)[j] * (1.0 + 0.06 * h + 0.2 * euler.dw(n)[j]);
                assert!((euler.x(n + 1)[j] - e).abs() < 1e-12);
                let l = exact.x(n)[j] * ((0.06 - 0.02) * h + 0.2 * exact.dw(n)[j]).exp();
                assert!((exact.x(n + 1)[j] - l).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dump_round_trip() {
        let m = Quadratic::new(2, 1.0).unwrap();
        let g = TimeGrid::new(1.0, 3).unwrap();
        let b = PathBatch::simulate(&m, g, 5, 11, Stepping::Auto);
        let mut buf = Vec::new();
        b.write_dump(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"BSDE");
        assert_eq!(PathBatch::read_dump(&buf[..]).unwrap(), b);
        assert!(PathBatch::read_dump(&b"XXXX"[..]).is_err());
    }
}
