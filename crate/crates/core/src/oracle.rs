//! Brute-force ground truth: explicit joins, exact costs and enumerated optima.

use crate::clustering::{binomial, Objective};
use crate::error::{Error, Result};
use crate::points::{dist2, WeightedPointSet};
use crate::rect::Rect;
use crate::relational::{join_relations, Database};

/// Largest join the oracle materializes by default.
pub const DEFAULT_JOIN_BUDGET: usize = 20_000;

/// Largest number of center subsets `discrete_opt` enumerates.
pub const SUBSET_LIMIT: u64 = 10_000;

/// Every join result as an explicit tuple over all attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterializedJoin {
    dim: usize,
    tuples: Vec<Vec<f64>>,
}

impl MaterializedJoin {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuples(&self) -> &[Vec<f64>] {
        &self.tuples
    }

    /// The multiset projection onto `attrs`, one entry per join result.
    pub fn project(&self, attrs: &[usize]) -> Vec<Vec<f64>> {
        self.tuples.iter().map(|t| attrs.iter().map(|&a| t[a]).collect()).collect()
    }

    /// The projection with coincident points merged into weights.
    pub fn weighted_projection(&self, attrs: &[usize]) -> WeightedPointSet {
        let pts = self.project(attrs);
        WeightedPointSet::from_points(attrs.len(), &pts, &vec![1.0; pts.len()]).merged()
    }

    pub fn count_in(&self, rect: &Rect) -> u64 {
        self.tuples.iter().filter(|t| rect.contains(t)).count() as u64
    }
}

/// Joins every relation of `db`, failing once more than `budget` tuples appear.
pub fn materialize(db: &Database, budget: usize) -> Result<MaterializedJoin> {
    let rels: Vec<_> = db.relations().iter().collect();
    let (attrs, tuples) = join_relations(&rels, budget)?;
    debug_assert_eq!(attrs, (0..db.dim()).collect::<Vec<_>>());
    Ok(MaterializedJoin { dim: db.dim(), tuples })
}

/// `Σ_t cost(π(t), centers)` over the projection of every join result.
pub fn exact_cost(join: &MaterializedJoin, attrs: &[usize], centers: &[Vec<f64>], objective: Objective) -> f64 {
    join.project(attrs)
        .iter()
        .map(|p| {
            let d2 = centers.iter().map(|c| dist2(p, c)).fold(f64::INFINITY, f64::min);
            objective.unit_cost(d2)
        })
        .sum()
}

/// Best `k` centers among the distinct projected points, by full enumeration.
pub fn discrete_opt(join: &MaterializedJoin, attrs: &[usize], k: usize, objective: Objective) -> Result<(Vec<Vec<f64>>, f64)> {
    let set = join.weighted_projection(attrs);
    if set.is_empty() {
        return Err(Error::EmptyJoin);
    }
    let points = set.points();
    let n = points.len();
    if k >= n {
        return Ok((points, 0.0));
    }
    let subsets = binomial(n as u64, k as u64);
    if subsets > SUBSET_LIMIT as u128 {
        return Err(Error::EnumerationLimit { subsets, limit: SUBSET_LIMIT });
    }
    let mut best = (f64::INFINITY, Vec::new());
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        let centers: Vec<Vec<f64>> = pick.iter().map(|&i| points[i].clone()).collect();
        let cost: f64 = set
            .iter()
            .map(|(p, w)| w * objective.unit_cost(centers.iter().map(|c| dist2(p, c)).fold(f64::INFINITY, f64::min)))
            .sum();
        if cost < best.0 {
            best = (cost, centers);
        }
        // Next combination in lexicographic order.
        let Some(i) = (0..k).rev().find(|&i| pick[i] < n - k + i) else { break };
        pick[i] += 1;
        for j in i + 1..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
    Ok((best.1, best.0))
}
