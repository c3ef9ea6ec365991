//! Boxes, distances, exponential grids and box-arrangement complements.
//!
//! Boxes are half-open, `[lo, hi)` on every axis. Grid cells are aligned so
//! that every level's lattice refines the next one: the cell side at level `j`
//! is `2^j · Φ / (4c)` with `c = ⌈10·α·d_u / (4ε′)⌉`, so the inner square of
//! each annulus falls on cell boundaries and no cell needs clipping. This
//! side never exceeds `ε′·2^j·Φ / (10·α·d_u)` and equals it whenever the
//! ceiling is exact.

use crate::error::{Error, Result};
use crate::points::dist2;
use crate::rect::Rect;

#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box corners differ in dimension");
        assert!(lo.iter().zip(&hi).all(|(l, h)| l <= h), "inverted box");
        Self { lo, hi }
    }

    /// The degenerate box holding a single point.
    pub fn point(p: &[f64]) -> Self {
        Self::new(p.to_vec(), p.to_vec())
    }

    pub fn cube(center: &[f64], side: f64) -> Self {
        Self::new(center.iter().map(|c| c - side / 2.0).collect(), center.iter().map(|c| c + side / 2.0).collect())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| l <= v && v < h)
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| l >= h)
    }

    pub fn intersects(&self, other: &AxisBox) -> bool {
        (0..self.dim()).all(|a| self.lo[a].max(other.lo[a]) < self.hi[a].min(other.hi[a]))
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    /// The closed rectangle over global attributes `attrs` holding exactly the
    /// points of this half-open box.
    pub fn to_rect(&self, attrs: &[usize], dim: usize) -> Rect {
        let mut r = Rect::unbounded(dim);
        for (a, &attr) in attrs.iter().enumerate() {
            let hi = if self.hi[a] > self.lo[a] { self.hi[a].next_down() } else { self.hi[a] };
            r.constrain(attr, self.lo[a], hi);
        }
        r
    }
}

/// Euclidean distance from `p` to the nearest point of the box.
pub fn point_box_distance(p: &[f64], b: &AxisBox) -> f64 {
    p.iter()
        .zip(b.lo.iter().zip(&b.hi))
        .map(|(&v, (&l, &h))| {
            let gap = (l - v).max(v - h).max(0.0);
            gap * gap
        })
        .sum::<f64>()
        .sqrt()
}

pub fn box_diam(b: &AxisBox) -> f64 {
    b.lo.iter().zip(&b.hi).map(|(l, h)| (h - l) * (h - l)).sum::<f64>().sqrt()
}

/// Distance from the nearest center of `centers` to the box.
pub fn set_box_distance(centers: &[Vec<f64>], b: &AxisBox) -> f64 {
    centers.iter().map(|c| point_box_distance(c, b)).fold(f64::INFINITY, f64::min)
}

/// Distance from `p` to its nearest center.
pub fn set_point_distance(centers: &[Vec<f64>], p: &[f64]) -> f64 {
    centers.iter().map(|c| dist2(c, p)).fold(f64::INFINITY, f64::min).sqrt()
}

/// One cell of an exponential grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub center: usize,
    pub level: u32,
    pub index: Vec<i64>,
    pub bounds: AxisBox,
}

/// Nested squares `Q_j` of side `2^j·Φ` around a center, each annulus split into cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialGrid {
    center: Vec<f64>,
    phi: f64,
    half_cells: i64,
    base_side: f64,
    max_level: u32,
    nominal_base_side: f64,
}

const INDEX_BIAS: i64 = 1 << 39;

impl ExponentialGrid {
    pub fn new(center: &[f64], phi: f64, alpha: f64, n: u64, eps: f64) -> Result<Self> {
        if phi <= 0.0 || !phi.is_finite() {
            return Err(Error::DegenerateScale);
        }
        if n == 0 {
            return Err(Error::EmptyJoin);
        }
        if !(eps > 0.0 && alpha > 0.0) {
            return Err(Error::InvalidInput(format!("grid needs ε′ > 0 and α > 0, got {eps}, {alpha}")));
        }
        let d = center.len() as f64;
        let half_cells = (10.0 * alpha * d / (4.0 * eps)).ceil().max(1.0);
        if half_cells >= INDEX_BIAS as f64 / 4.0 {
            return Err(Error::InvalidInput("grid resolution too fine".into()));
        }
        let an = alpha * n as f64;
        let doubled = (2.0 * an.log2()).ceil();
        // Also demand that the outer half-side 2^(J-1)·Φ strictly exceeds αnΦ.
        let strict = an.log2().floor() + 2.0;
        let max_level = doubled.max(strict).max(0.0) as u32;
        Ok(Self {
            center: center.to_vec(),
            phi,
            half_cells: half_cells as i64,
            base_side: phi / (4.0 * half_cells),
            max_level,
            nominal_base_side: eps * phi / (10.0 * alpha * d),
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn level_count(&self) -> u32 {
        self.max_level + 1
    }

    /// Side of `Q_j`.
    pub fn square_side(&self, level: u32) -> f64 {
        self.phi * 2f64.powi(level as i32)
    }

    pub fn cell_side(&self, level: u32) -> f64 {
        self.base_side * 2f64.powi(level as i32)
    }

    /// `ε′·2^j·Φ / (10·α·d_u)`, the upper limit for `cell_side`.
    pub fn nominal_cell_side(&self, level: u32) -> f64 {
        self.nominal_base_side * 2f64.powi(level as i32)
    }

    /// Cells per axis across half of `Q_{j-1}`; `Q_j` spans `[-2c, 2c)` cells.
    pub fn half_cells(&self) -> i64 {
        self.half_cells
    }

    /// The outermost square.
    pub fn outer_box(&self) -> AxisBox {
        let j = self.max_level;
        let c = 2 * self.half_cells;
        AxisBox::new(
            (0..self.dim()).map(|a| self.boundary(a, j, -c)).collect(),
            (0..self.dim()).map(|a| self.boundary(a, j, c)).collect(),
        )
    }

    fn boundary(&self, axis: usize, level: u32, m: i64) -> f64 {
        self.center[axis] + m as f64 * self.cell_side(level)
    }

    fn index_at(&self, axis: usize, level: u32, v: f64) -> i64 {
        let s = self.cell_side(level);
        let mut m = ((v - self.center[axis]) / s).floor().clamp(-(INDEX_BIAS as f64), INDEX_BIAS as f64) as i64;
        while m > -INDEX_BIAS && self.boundary(axis, level, m) > v {
            m -= 1;
        }
        while m < INDEX_BIAS && self.boundary(axis, level, m + 1) <= v {
            m += 1;
        }
        m
    }

    /// Smallest level whose square holds `v` on this axis, with the cell index there.
    pub fn axis_position(&self, axis: usize, v: f64) -> Option<(u32, i64)> {
        let c = 2 * self.half_cells;
        let ratio = (v - self.center[axis]).abs() / (c as f64 * self.base_side);
        let start = if ratio > 1.0 { (ratio.log2().floor() as u32).saturating_sub(1) } else { 0 };
        (start.min(self.max_level)..=self.max_level).find_map(|j| {
            let m = self.index_at(axis, j, v);
            (-c..c).contains(&m).then_some((j, m))
        })
    }

    /// Packs an axis position into one group key.
    pub fn pack(position: (u32, i64)) -> i64 {
        ((position.0 as i64) << 40) | (position.1 + INDEX_BIAS)
    }

    pub fn unpack(key: i64) -> (u32, i64) {
        ((key >> 40) as u32, (key & ((1 << 40) - 1)) - INDEX_BIAS)
    }

    /// Combines per-axis positions into the cell holding the point.
    pub fn cell_from_positions(&self, positions: &[(u32, i64)]) -> (u32, Vec<i64>) {
        let level = positions.iter().map(|p| p.0).max().unwrap_or(0);
        (level, positions.iter().map(|&(l, m)| m >> (level - l)).collect())
    }

    pub fn cell_box(&self, level: u32, index: &[i64]) -> AxisBox {
        AxisBox::new(
            index.iter().enumerate().map(|(a, &m)| self.boundary(a, level, m)).collect(),
            index.iter().enumerate().map(|(a, &m)| self.boundary(a, level, m + 1)).collect(),
        )
    }

    /// The cell holding `p`, or `None` outside the outer square.
    pub fn locate(&self, p: &[f64]) -> Option<(u32, Vec<i64>)> {
        let positions: Option<Vec<_>> = p.iter().enumerate().map(|(a, &v)| self.axis_position(a, v)).collect();
        positions.map(|ps| self.cell_from_positions(&ps))
    }

    /// Every cell of one level, in lexicographic index order. Only for small grids.
    pub fn level_cells(&self, level: u32) -> Vec<Vec<i64>> {
        let c = self.half_cells;
        let d = self.dim();
        let mut out = Vec::new();
        let mut idx = vec![-2 * c; d];
        loop {
            let inner = idx.iter().all(|&m| (-c..c).contains(&m));
            if level == 0 || !inner {
                out.push(idx.clone());
            }
            let mut a = d;
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < 2 * c {
                    break;
                }
                idx[a] = -2 * c;
            }
        }
    }
}

pub fn build_exponential_grid(center: &[f64], phi: f64, alpha: f64, n: u64, eps: f64) -> Result<ExponentialGrid> {
    ExponentialGrid::new(center, phi, alpha, n, eps)
}

/// The slab decomposition of `within` induced by a set of boxes.
#[derive(Debug, Clone)]
pub struct SlabGrid {
    cuts: Vec<Vec<f64>>,
    covered: Vec<bool>,
}

impl SlabGrid {
    pub fn new(covering: &[AxisBox], within: &AxisBox) -> Self {
        let d = within.dim();
        let relevant: Vec<&AxisBox> = covering.iter().filter(|g| g.intersects(within)).collect();
        let cuts: Vec<Vec<f64>> = (0..d)
            .map(|a| {
                let mut c = vec![within.lo[a], within.hi[a]];
                for g in &relevant {
                    for v in [g.lo[a], g.hi[a]] {
                        if within.lo[a] < v && v < within.hi[a] {
                            c.push(v);
                        }
                    }
                }
                c.sort_by(f64::total_cmp);
                c.dedup();
                c
            })
            .collect();
        let mut grid = Self { cuts, covered: Vec::new() };
        let count = grid.cell_count();
        grid.covered = (0..count)
            .map(|id| {
                let corner: Vec<f64> = grid.unravel(id).iter().enumerate().map(|(a, &i)| grid.cuts[a][i]).collect();
                relevant.iter().any(|g| g.contains(&corner))
            })
            .collect();
        grid
    }

    fn slabs(&self, axis: usize) -> usize {
        self.cuts[axis].len().saturating_sub(1)
    }

    pub fn cell_count(&self) -> usize {
        (0..self.cuts.len()).map(|a| self.slabs(a)).product()
    }

    fn unravel(&self, mut id: usize) -> Vec<usize> {
        let d = self.cuts.len();
        let mut out = vec![0; d];
        for a in (0..d).rev() {
            let n = self.slabs(a);
            out[a] = id % n;
            id /= n;
        }
        out
    }

    pub fn ravel(&self, index: &[usize]) -> usize {
        index.iter().enumerate().fold(0, |acc, (a, &i)| acc * self.slabs(a) + i)
    }

    /// Slab of `v` along `axis`, or `None` outside the grid.
    pub fn slab_of(&self, axis: usize, v: f64) -> Option<usize> {
        let c = &self.cuts[axis];
        if v < c[0] || v >= c[c.len() - 1] {
            return None;
        }
        Some(c.partition_point(|&x| x <= v) - 1)
    }

    pub fn is_covered(&self, id: usize) -> bool {
        self.covered[id]
    }

    /// Uncovered regions as boxes, merging runs along the last axis, each with
    /// the slab cells it consists of.
    pub fn complement(&self) -> Vec<(AxisBox, Vec<usize>)> {
        let d = self.cuts.len();
        if d == 0 || self.cell_count() == 0 {
            return Vec::new();
        }
        let last = self.slabs(d - 1);
        let mut out = Vec::new();
        for row in 0..self.cell_count() / last {
            let mut j = 0;
            while j < last {
                let id = row * last + j;
                if self.covered[id] {
                    j += 1;
                    continue;
                }
                let start = j;
                while j < last && !self.covered[row * last + j] {
                    j += 1;
                }
                let index = self.unravel(id);
                let mut lo: Vec<f64> = index.iter().enumerate().map(|(a, &i)| self.cuts[a][i]).collect();
                let mut hi: Vec<f64> = index.iter().enumerate().map(|(a, &i)| self.cuts[a][i + 1]).collect();
                lo[d - 1] = self.cuts[d - 1][start];
                hi[d - 1] = self.cuts[d - 1][j];
                out.push((AxisBox::new(lo, hi), (row * last + start..row * last + j).collect()));
            }
        }
        out
    }
}

/// Disjoint boxes covering `within ∖ ∪covering`.
pub fn complement_partition(covering: &[AxisBox], within: &AxisBox) -> Vec<AxisBox> {
    if within.is_empty() {
        return Vec::new();
    }
    SlabGrid::new(covering, within).complement().into_iter().map(|(b, _)| b).collect()
}
