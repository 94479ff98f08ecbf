//! Sparse-grid approximation spaces on `[0,1]^d`.
//!
//! Three univariate families are supported:
//!
//! - [`Family::Hat`]: piecewise-linear hats `phi(2^l x - i)`, with the two
//!   level-0 boundary ramps.
//! - [`Family::PreWavelet`]: five-tap combinations of hats normalised by
//!   `2^{l/2}`, with special members next to the boundary.
//! - [`Family::ModifiedHat`]: hats whose boundary-adjacent members are
//!   extended to the edge of the domain, so no level-0 functions are needed.
//!
//! Multivariate functions are tensor products. A level multi-index `l` is
//! admissible at sparse level `L` when `zeta_d(l) <= L`, where
//! `zeta_d(0) = 0` and otherwise
//! `zeta_d(l) = |l|_1 - d + #{j : l_j = 0} + 1`.
//!
//! Basis functions are enumerated lexicographically on `(level, position)`
//! and addressed by a zero-based id `k`. Every univariate function vanishes
//! outside `[0,1]`, so every multivariate function vanishes outside
//! `[0,1]^d`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid basis index (level {level}, position {position}) for {family} family")]
    InvalidIndex {
        family: Family,
        level: u32,
        position: u32,
    },
    #[error("basis id {k} out of range for a space of size {size}")]
    OutOfRange { k: usize, size: usize },
    #[error("dimension and level must be positive (got dim={dim}, level={level})")]
    BadShape { dim: usize, level: u32 },
    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown basis family '{0}' (expected hat, prewavelet or modhat)")]
    UnknownFamily(String),
    #[error("space has {size} basis functions, above the limit of {limit}")]
    TooLarge { size: u128, limit: u128 },
}

/// Largest space `SparseGridSpace::new` will enumerate.
pub const MAX_SPACE_SIZE: u128 = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Hat,
    #[serde(rename = "prewavelet")]
    PreWavelet,
    #[serde(rename = "modhat")]
    ModifiedHat,
}

impl Family {
    /// Lowest admissible univariate level.
    pub fn min_level(self) -> u32 {
        match self {
            Family::Hat | Family::PreWavelet => 0,
            Family::ModifiedHat => 1,
        }
    }

    /// Number of univariate functions at level `l`.
    pub fn level_size(self, l: u32) -> usize {
        match (self, l) {
            (Family::ModifiedHat, 0) => 0,
            (_, 0) => 2,
            (_, l) => 1usize << (l - 1),
        }
    }

    pub fn is_valid(self, l: u32, i: u32) -> bool {
        if l == 0 {
            return self != Family::ModifiedHat && i <= 1;
        }
        if l >= 31 {
            return false;
        }
        i % 2 == 1 && i < (1u32 << l)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Hat => "hat",
            Family::PreWavelet => "prewavelet",
            Family::ModifiedHat => "modhat",
        })
    }
}

impl FromStr for Family {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hat" => Ok(Family::Hat),
            "prewavelet" | "pre-wavelet" => Ok(Family::PreWavelet),
            "modhat" | "modified-hat" | "modifiedhat" => Ok(Family::ModifiedHat),
            other => Err(GridError::UnknownFamily(other.to_string())),
        }
    }
}

/// Standard hat `phi(x) = max(1 - |x|, 0)`.
#[inline]
fn hat(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        1.0 - a
    } else {
        0.0
    }
}

/// `phi^{l,i}(x) = phi(2^l x - i)`, with `i` allowed to fall outside the grid.
#[inline]
fn hat_li(scale: f64, i: i64, x: f64) -> f64 {
    hat(scale * x - i as f64)
}

/// Evaluates a univariate basis function without validating `(l, i)`.
#[inline]
pub(crate) fn univariate_unchecked(family: Family, l: u32, i: u32, x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    match family {
        Family::Hat => {
            if l == 0 {
                hat(x - i as f64)
            } else {
                hat_li((1u64 << l) as f64, i as i64, x)
            }
        }
        Family::PreWavelet => prewavelet(l, i, x),
        Family::ModifiedHat => {
            let scale = (1u64 << l) as f64;
            let last = (1u32 << l) - 1;
            if l == 1 {
                1.0
            } else if i == 1 {
                if x <= 2.0 / scale {
                    1.0 - 0.5 * scale * x
                } else {
                    0.0
                }
            } else if i == last {
                if x >= 1.0 - 2.0 / scale {
                    0.5 * scale * x + (1.0 - i as f64) / 2.0
                } else {
                    0.0
                }
            } else {
                hat_li(scale, i as i64, x)
            }
        }
    }
}

fn prewavelet(l: u32, i: u32, x: f64) -> f64 {
    match l {
        0 => {
            if i == 0 {
                1.0
            } else {
                hat(x - 1.0)
            }
        }
        1 => 2.0 * hat(2.0 * x - 1.0) - 1.0,
        _ => {
            let last = (1u32 << l) - 1;
            if i == 1 {
                prewavelet_left(l, x)
            } else if i == last {
                prewavelet_left(l, 1.0 - x)
            } else {
                let scale = (1u64 << l) as f64;
                let i = i as i64;
                let norm = scale.sqrt();
                norm * (0.1 * hat_li(scale, i - 2, x) - 0.6 * hat_li(scale, i - 1, x)
                    + hat_li(scale, i, x)
                    - 0.6 * hat_li(scale, i + 1, x)
                    + 0.1 * hat_li(scale, i + 2, x))
            }
        }
    }
}

fn prewavelet_left(l: u32, x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    let scale = (1u64 << l) as f64;
    scale.sqrt()
        * (-1.2 * hat_li(scale, 0, x) + 1.1 * hat_li(scale, 1, x) - 0.6 * hat_li(scale, 2, x)
            + 0.1 * hat_li(scale, 3, x))
}

/// Value of the univariate basis function `(family, l, i)` at `x`.
pub fn eval_univariate(family: Family, l: u32, i: u32, x: f64) -> Result<f64, GridError> {
    if !family.is_valid(l, i) {
        return Err(GridError::InvalidIndex {
            family,
            level: l,
            position: i,
        });
    }
    Ok(univariate_unchecked(family, l, i, x))
}

/// Rank of position `i` inside the index set of level `l`.
#[inline]
fn position_rank(l: u32, i: u32) -> u32 {
    if l == 0 {
        i
    } else {
        (i - 1) / 2
    }
}

#[inline]
fn rank_position(l: u32, r: u32) -> u32 {
    if l == 0 {
        r
    } else {
        2 * r + 1
    }
}

/// The level selector `zeta_d`.
pub fn zeta(levels: &[u32]) -> u32 {
    if levels.iter().all(|&l| l == 0) {
        return 0;
    }
    let d = levels.len() as i64;
    let l1: i64 = levels.iter().map(|&l| l as i64).sum();
    let zeros = levels.iter().filter(|&&l| l == 0).count() as i64;
    (l1 - d + zeros + 1) as u32
}

/// Number of basis functions of the sparse space, computed from the
/// level-set structure without enumerating it.
///
/// Each coordinate contributes an "excess" `max(l_j - 1, 0)` to `zeta_d - 1`,
/// so the count is the truncated `d`-th power of the univariate generating
/// polynomial `sum_e c(e) t^e`.
pub fn count(dim: usize, level: u32, family: Family) -> u128 {
    if dim == 0 || level == 0 {
        return 0;
    }
    let max_excess = (level - 1) as usize;
    let univariate: Vec<u128> = (0..=max_excess)
        .map(|e| {
            let base = 1u128 << e;
            match (family, e) {
                (Family::ModifiedHat, _) => base,
                (_, 0) => 3,
                _ => base,
            }
        })
        .collect();
    let mut acc = vec![0u128; max_excess + 1];
    acc[0] = 1;
    for _ in 0..dim {
        let mut next = vec![0u128; max_excess + 1];
        for (a, &ca) in acc.iter().enumerate() {
            if ca == 0 {
                continue;
            }
            for (b, &cb) in univariate.iter().enumerate() {
                if a + b > max_excess {
                    break;
                }
                next[a + b] += ca * cb;
            }
        }
        acc = next;
    }
    acc.iter().sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    pub level: Vec<u32>,
    pub position: Vec<u32>,
}

/// One admissible level multi-index and the contiguous id range it owns.
#[derive(Debug, Clone)]
struct LevelBlock {
    levels: Vec<u32>,
    offset: usize,
    /// Dimensions that take part in evaluation, with their level and
    /// mixed-radix stride. For modified hats the level-1 factor is the
    /// constant 1 and those dimensions are skipped.
    active: Vec<(usize, u32, usize)>,
}

/// An enumerated sparse-grid space. Immutable after construction.
#[derive(Debug, Clone)]
pub struct SparseGridSpace {
    dim: usize,
    level: u32,
    family: Family,
    blocks: Vec<LevelBlock>,
    size: usize,
}

/// Reusable output of a localized evaluation: the nonzero basis ids and
/// their values, in increasing id order per level block.
#[derive(Debug, Clone, Default)]
pub struct BasisEval {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
    uni: Vec<Vec<(u32, f64)>>,
}

impl BasisEval {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.idx.clear();
        self.val.clear();
    }

    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn set_constant(&mut self) {
        self.clear();
        self.idx.push(0);
        self.val.push(1.0);
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.idx.iter().copied().zip(self.val.iter().copied())
    }

    pub fn sum_squares(&self) -> f64 {
        self.val.iter().map(|v| v * v).sum()
    }
}

impl SparseGridSpace {
    pub fn new(dim: usize, level: u32, family: Family) -> Result<Self, GridError> {
        if dim == 0 || level == 0 {
            return Err(GridError::BadShape { dim, level });
        }
        let size = count(dim, level, family);
        if size > MAX_SPACE_SIZE {
            return Err(GridError::TooLarge {
                size,
                limit: MAX_SPACE_SIZE,
            });
        }
        let mut blocks = Vec::new();
        let mut current = vec![0u32; dim];
        let mut offset = 0usize;
        enumerate_levels(
            family,
            level,
            0,
            0,
            &mut current,
            &mut |levels: &[u32]| {
                let mut active = Vec::new();
                let mut stride = 1usize;
                for j in (0..dim).rev() {
                    let l = levels[j];
                    if family == Family::ModifiedHat && l == 1 {
                        continue;
                    }
                    active.push((j, l, stride));
                    stride *= family.level_size(l);
                }
                active.reverse();
                blocks.push(LevelBlock {
                    levels: levels.to_vec(),
                    offset,
                    active,
                });
                offset += stride;
            },
        );
        Ok(Self {
            dim,
            level,
            family,
            blocks,
            size: offset,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of admissible level multi-indices.
    pub fn level_count(&self) -> usize {
        self.blocks.len()
    }

    /// The multi-index of basis id `k` (zero-based).
    pub fn index(&self, k: usize) -> Result<MultiIndex, GridError> {
        if k >= self.size {
            return Err(GridError::OutOfRange { k, size: self.size });
        }
        let b = match self.blocks.binary_search_by(|b| b.offset.cmp(&k)) {
            Ok(b) => b,
            Err(b) => b - 1,
        };
        let block = &self.blocks[b];
        let mut rem = k - block.offset;
        let mut position: Vec<u32> = block.levels.iter().map(|&l| rank_position(l, 0)).collect();
        for &(j, l, stride) in &block.active {
            let r = rem / stride;
            rem %= stride;
            position[j] = rank_position(l, r as u32);
        }
        Ok(MultiIndex {
            level: block.levels.clone(),
            position,
        })
    }

    /// Materialized index set in enumeration order.
    pub fn indices(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        (0..self.size).map(move |k| self.index(k).expect("k < size"))
    }

    /// Id of a multi-index, if it belongs to the space.
    pub fn id_of(&self, mi: &MultiIndex) -> Option<usize> {
        if mi.level.len() != self.dim || mi.position.len() != self.dim {
            return None;
        }
        let block = self.blocks.iter().find(|b| b.levels == mi.level)?;
        let mut k = block.offset;
        for (j, (&l, &i)) in mi.level.iter().zip(&mi.position).enumerate() {
            if !self.family.is_valid(l, i) {
                return None;
            }
            if let Some(&(_, _, stride)) = block.active.iter().find(|a| a.0 == j) {
                k += position_rank(l, i) as usize * stride;
            }
        }
        Some(k)
    }

    /// Value of basis function `k` at `x`.
    pub fn eval_multivariate(&self, k: usize, x: &[f64]) -> Result<f64, GridError> {
        self.check_point(x)?;
        let mi = self.index(k)?;
        let mut v = 1.0;
        for j in 0..self.dim {
            v *= univariate_unchecked(self.family, mi.level[j], mi.position[j], x[j]);
            if v == 0.0 {
                return Ok(0.0);
            }
        }
        Ok(v)
    }

    /// Dense vector of all `K` basis values at `x`.
    pub fn eval_all(&self, x: &[f64]) -> Result<Vec<f64>, GridError> {
        self.check_point(x)?;
        let mut buf = BasisEval::new();
        self.eval_sparse(x, &mut buf);
        let mut out = vec![0.0; self.size];
        for (k, v) in buf.iter() {
            out[k] = v;
        }
        Ok(out)
    }

    fn check_point(&self, x: &[f64]) -> Result<(), GridError> {
        if x.len() != self.dim {
            return Err(GridError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Localized evaluation: only the few positions per level whose support
    /// contains `x_j` are visited. `x` must have `dim` coordinates.
    pub fn eval_sparse(&self, x: &[f64], out: &mut BasisEval) {
        debug_assert_eq!(x.len(), self.dim);
        out.clear();
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return;
        }
        let max_l = self.level as usize;
        let stride_l = max_l + 1;
        out.uni.resize_with(self.dim * stride_l, Vec::new);
        for j in 0..self.dim {
            for l in self.family.min_level()..=self.level {
                let list = &mut out.uni[j * stride_l + l as usize];
                list.clear();
                univariate_nonzeros(self.family, l, x[j], list);
            }
        }

        let mut counters: Vec<usize> = Vec::with_capacity(self.dim);
        'blocks: for block in &self.blocks {
            counters.clear();
            for &(j, l, _) in &block.active {
                if out.uni[j * stride_l + l as usize].is_empty() {
                    continue 'blocks;
                }
                counters.push(0);
            }
            if block.active.is_empty() {
                out.idx.push(block.offset);
                out.val.push(1.0);
                continue;
            }
            loop {
                let mut k = block.offset;
                let mut v = 1.0;
                for (c, &(j, l, stride)) in counters.iter().zip(&block.active) {
                    let (r, val) = out.uni[j * stride_l + l as usize][*c];
                    k += r as usize * stride;
                    v *= val;
                }
                if v != 0.0 {
                    out.idx.push(k);
                    out.val.push(v);
                }
                // odometer over the per-dimension candidate lists
                let mut a = block.active.len();
                loop {
                    if a == 0 {
                        continue 'blocks;
                    }
                    a -= 1;
                    let (j, l, _) = block.active[a];
                    counters[a] += 1;
                    if counters[a] < out.uni[j * stride_l + l as usize].len() {
                        break;
                    }
                    counters[a] = 0;
                }
            }
        }
    }
}

/// Pushes `(rank, value)` for every position at level `l` whose function is
/// nonzero at `x` (assumed inside `[0,1]`).
fn univariate_nonzeros(family: Family, l: u32, x: f64, list: &mut Vec<(u32, f64)>) {
    if l == 0 {
        if family == Family::ModifiedHat {
            return;
        }
        for i in 0..=1 {
            let v = univariate_unchecked(family, 0, i, x);
            if v != 0.0 {
                list.push((i, v));
            }
        }
        return;
    }
    let n = 1i64 << l;
    let s = x * n as f64;
    // widest support among the families: three cells either side of the node
    let lo = ((s - 3.0).ceil() as i64).max(1);
    let hi = ((s + 3.0).floor() as i64).min(n - 1);
    let mut i = if lo % 2 == 0 { lo + 1 } else { lo };
    while i <= hi {
        let v = univariate_unchecked(family, l, i as u32, x);
        if v != 0.0 {
            list.push((position_rank(l, i as u32), v));
        }
        i += 2;
    }
    // boundary members reach four cells into the interval
    if family == Family::PreWavelet && l >= 2 {
        for edge in [1i64, n - 1] {
            if edge < lo || edge > hi {
                let v = univariate_unchecked(family, l, edge as u32, x);
                if v != 0.0 {
                    list.push((position_rank(l, edge as u32), v));
                }
            }
        }
        list.sort_by_key(|e| e.0);
    }
}

fn enumerate_levels(
    family: Family,
    level: u32,
    j: usize,
    excess: u32,
    current: &mut Vec<u32>,
    visit: &mut dyn FnMut(&[u32]),
) {
    if j == current.len() {
        visit(current);
        return;
    }
    let budget = level - 1;
    for l in family.min_level()..=level {
        let e = l.saturating_sub(1);
        if excess + e > budget {
            break;
        }
        current[j] = l;
        enumerate_levels(family, level, j + 1, excess + e, current, visit);
    }
    current[j] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn univariate_examples() {
        assert_eq!(eval_univariate(Family::PreWavelet, 0, 0, 0.5).unwrap(), 1.0);
        assert_eq!(eval_univariate(Family::Hat, 2, 1, 0.25).unwrap(), 1.0);
        let v = eval_univariate(Family::PreWavelet, 2, 1, 0.25).unwrap();
        assert!((v - 2.2).abs() < 1e-14, "{v}");
        assert_eq!(
            eval_univariate(Family::ModifiedHat, 1, 1, 0.9).unwrap(),
            1.0
        );
    }

    #[test]
    fn invalid_indices_are_rejected() {
        assert!(eval_univariate(Family::PreWavelet, 2, 2, 0.3).is_err());
        assert!(eval_univariate(Family::PreWavelet, 0, 2, 0.3).is_err());
        assert!(eval_univariate(Family::ModifiedHat, 0, 0, 0.3).is_err());
        assert!(eval_univariate(Family::Hat, 3, 9, 0.3).is_err());
    }

    #[test]
    fn modified_hat_boundary_ramps() {
        // ramps reach the edge of the domain and vanish two cells in
        let f = |i, x| eval_univariate(Family::ModifiedHat, 3, i, x).unwrap();
        assert_eq!(f(1, 0.0), 1.0);
        assert_eq!(f(1, 0.25), 0.0);
        assert_eq!(f(7, 1.0), 1.0);
        assert_eq!(f(7, 0.75), 0.0);
        assert!((f(1, 0.1) - f(7, 0.9)).abs() < 1e-15);
        assert_eq!(f(3, 3.0 / 8.0), 1.0);
    }

    #[test]
    fn zero_outside_unit_interval() {
        for fam in [Family::Hat, Family::PreWavelet, Family::ModifiedHat] {
            for l in fam.min_level()..=4 {
                for i in 0..(1u32 << l).max(2) {
                    if fam.is_valid(l, i) {
                        assert_eq!(univariate_unchecked(fam, l, i, -0.01), 0.0);
                        assert_eq!(univariate_unchecked(fam, l, i, 1.01), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn multivariate_examples() {
        let pw = SparseGridSpace::new(2, 3, Family::PreWavelet).unwrap();
        let k = pw
            .id_of(&MultiIndex {
                level: vec![0, 0],
                position: vec![0, 0],
            })
            .unwrap();
        assert_eq!(pw.eval_multivariate(k, &[0.3, 0.7]).unwrap(), 1.0);

        let hat = SparseGridSpace::new(2, 3, Family::Hat).unwrap();
        let k = hat
            .id_of(&MultiIndex {
                level: vec![1, 1],
                position: vec![1, 1],
            })
            .unwrap();
        assert_eq!(hat.eval_multivariate(k, &[0.5, 0.5]).unwrap(), 1.0);

        let sp = SparseGridSpace::new(3, 3, Family::PreWavelet).unwrap();
        for k in 0..sp.size() {
            assert_eq!(sp.eval_multivariate(k, &[1.5, 0.2, 0.3]).unwrap(), 0.0);
        }
        assert!(sp.eval_multivariate(sp.size(), &[0.1, 0.2, 0.3]).is_err());
    }

    #[test]
    fn eval_all_length_matches_table() {
        let sp = SparseGridSpace::new(2, 3, Family::PreWavelet).unwrap();
        assert_eq!(sp.eval_all(&[0.3, 0.4]).unwrap().len(), 49);
    }

    #[test]
    fn tabulated_counts() {
        assert_eq!(count(3, 3, Family::PreWavelet), 225);
        assert_eq!(count(100, 3, Family::ModifiedHat), 20401);
        assert_eq!(count(2, 4, Family::ModifiedHat), 49);
        assert_eq!(count(1, 4, Family::PreWavelet), 17);
    }

    #[test]
    fn enumeration_is_lexicographic_and_bijective() {
        let sp = SparseGridSpace::new(3, 3, Family::PreWavelet).unwrap();
        let all: Vec<MultiIndex> = sp.indices().collect();
        assert_eq!(all.len(), sp.size());
        for w in all.windows(2) {
            let a = (&w[0].level, &w[0].position);
            let b = (&w[1].level, &w[1].position);
            assert!(a < b, "{a:?} !< {b:?}");
        }
        for (k, mi) in all.iter().enumerate() {
            assert_eq!(sp.id_of(mi), Some(k));
            assert!(zeta(&mi.level) <= 3);
        }
    }

    #[test]
    fn zeta_definition() {
        assert_eq!(zeta(&[0, 0]), 0);
        assert_eq!(zeta(&[1, 1]), 1);
        assert_eq!(zeta(&[0, 1]), 1);
        assert_eq!(zeta(&[2, 0]), 2);
        assert_eq!(zeta(&[3, 2]), 4);
    }
}
