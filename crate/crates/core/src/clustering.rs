//! Weighted k-median and k-means solvers in the ordinary in-memory setting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::points::{dist2, WeightedPointSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    Median,
    Means,
}

impl Objective {
    /// Contribution of one unit of weight at squared distance `d2`.
    pub fn unit_cost(self, d2: f64) -> f64 {
        match self {
            Objective::Median => d2.sqrt(),
            Objective::Means => d2,
        }
    }
}

/// Whether centers are free (`Geometric`) or must be input points (`Discrete`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Geometric,
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Exhaustive,
    Iterative,
}

text_enum!(Objective { Median => "median", Means => "means" });
text_enum!(Mode { Geometric => "geometric", Discrete => "discrete" });
text_enum!(Strategy { Exhaustive => "exhaustive", Iterative => "iterative" });

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub objective: Objective,
    pub mode: Mode,
    pub strategy: Strategy,
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
    /// Exhaustive search runs only while `C(n, k) · n` stays within this; beyond
    /// it the iterative strategy takes over.
    pub max_enumeration_work: u64,
}

impl SolverSpec {
    pub fn new(objective: Objective, mode: Mode) -> Self {
        Self {
            objective,
            mode,
            strategy: Strategy::Exhaustive,
            restarts: 5,
            max_iterations: 100,
            seed: 0,
            max_enumeration_work: 400_000_000,
        }
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Approximation factor of this solver against the geometric optimum. The
    /// iterative strategy carries no certificate; its nominal factor is reported.
    pub fn gamma(&self) -> f64 {
        match (self.mode, self.objective) {
            (Mode::Discrete, _) => 1.0,
            (Mode::Geometric, Objective::Median) => 2.0,
            (Mode::Geometric, Objective::Means) => 4.0,
        }
    }

    /// Whether an exhaustive search over `n` distinct points with `k` centers fits the budget.
    pub fn enumeration_fits(&self, n: usize, k: usize) -> bool {
        binomial(n as u64, k as u64).saturating_mul(n as u128) <= self.max_enumeration_work as u128
    }
}

/// Outcome of one solver call.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRun {
    pub centers: Vec<Vec<f64>>,
    pub cost: f64,
    pub strategy: Strategy,
    /// Cost after each accepted refinement step of the winning start.
    pub history: Vec<f64>,
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Index of the nearest center and the squared distance to it; ties go to the lower index.
pub fn nearest_center(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = dist2(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

pub fn clustering_cost(points: &WeightedPointSet, centers: &[Vec<f64>], objective: Objective) -> f64 {
    points.iter().map(|(p, w)| w * objective.unit_cost(nearest_center(p, centers).1)).sum()
}

pub fn weighted_cluster(points: &WeightedPointSet, k: usize, spec: &SolverSpec) -> Result<Vec<Vec<f64>>> {
    cluster(points, k, spec).map(|run| run.centers)
}

pub fn cluster(points: &WeightedPointSet, k: usize, spec: &SolverSpec) -> Result<ClusterRun> {
    if points.is_empty() {
        return Err(Error::SolverFailure("no points to cluster".into()));
    }
    if k == 0 {
        return Err(Error::SolverFailure("k must be at least 1".into()));
    }
    let merged = points.merged();
    if merged.len() <= k {
        return Ok(ClusterRun { centers: merged.points(), cost: 0.0, strategy: spec.strategy, history: vec![0.0] });
    }
    if spec.strategy == Strategy::Exhaustive && spec.enumeration_fits(merged.len(), k) {
        let (centers, cost) = enumerate_discrete(&merged, k, spec.objective);
        let mut run = ClusterRun { centers, cost, strategy: Strategy::Exhaustive, history: vec![cost] };
        if spec.mode == Mode::Geometric {
            refine_geometric(&merged, &mut run, spec);
        }
        return Ok(run);
    }
    if spec.strategy == Strategy::Exhaustive {
        log::debug!("exhaustive search over {} points with k = {k} exceeds the budget; using local search", merged.len());
    }
    let mut best: Option<ClusterRun> = None;
    for restart in 0..spec.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let centers = seed_centers(&merged, k, spec.objective, &mut rng);
        let cost = clustering_cost(&merged, &centers, spec.objective);
        let mut run = ClusterRun { centers, cost, strategy: Strategy::Iterative, history: vec![cost] };
        match spec.mode {
            Mode::Geometric => refine_geometric(&merged, &mut run, spec),
            Mode::Discrete => swap_search(&merged, &mut run, spec),
        }
        if best.as_ref().is_none_or(|b| run.cost < b.cost) {
            best = Some(run);
        }
    }
    best.ok_or_else(|| Error::SolverFailure("no restart produced a solution".into()))
}

/// Snaps every center to its nearest input point, dropping repeats.
pub fn discrete_from_geometric(points: &WeightedPointSet, centers: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    let all = points.points();
    for c in centers {
        let (i, _) = nearest_center(c, &all);
        if let Some(p) = all.get(i) {
            if !out.contains(p) {
                out.push(p.clone());
            }
        }
    }
    out
}

/// Best `k`-subset of the points as centers; ties go to the lexicographically first subset.
fn enumerate_discrete(points: &WeightedPointSet, k: usize, objective: Objective) -> (Vec<Vec<f64>>, f64) {
    let n = points.len();
    let threads = std::thread::available_parallelism().map_or(1, |t| t.get()).min(n - k + 1);
    let results: Vec<(f64, Vec<usize>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                scope.spawn(move || {
                    let mut best = (f64::INFINITY, Vec::new());
                    let mut chosen = Vec::with_capacity(k);
                    let mut levels = vec![vec![f64::INFINITY; n]; k];
                    for first in (t..=n - k).step_by(threads) {
                        chosen.clear();
                        chosen.push(first);
                        fill_level(points, objective, &mut levels, 0, first);
                        descend(points, objective, k, &mut chosen, &mut levels, &mut best);
                    }
                    best
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("enumeration worker panicked")).collect()
    });
    let (cost, subset) = results
        .into_iter()
        .filter(|r| !r.1.is_empty())
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
        .expect("at least one subset");
    (subset.iter().map(|&i| points.point(i).to_vec()).collect(), cost)
}

fn fill_level(points: &WeightedPointSet, objective: Objective, levels: &mut [Vec<f64>], depth: usize, add: usize) {
    let (before, rest) = levels.split_at_mut(depth);
    let target = &mut rest[0];
    let c = points.point(add);
    for (q, slot) in target.iter_mut().enumerate() {
        let own = objective.unit_cost(dist2(points.point(q), c));
        *slot = if depth == 0 { own } else { own.min(before[depth - 1][q]) };
    }
}

fn descend(
    points: &WeightedPointSet,
    objective: Objective,
    k: usize,
    chosen: &mut Vec<usize>,
    levels: &mut [Vec<f64>],
    best: &mut (f64, Vec<usize>),
) {
    let depth = chosen.len();
    let n = points.len();
    let start = chosen[depth - 1] + 1;
    if depth == k {
        let cost: f64 = levels[depth - 1].iter().zip(points.weights()).map(|(c, w)| c * w).sum();
        if cost < best.0 {
            *best = (cost, chosen.clone());
        }
        return;
    }
    for next in start..=n - (k - depth) {
        if depth + 1 == k {
            let c = points.point(next);
            let cost: f64 = levels[depth - 1]
                .iter()
                .enumerate()
                .map(|(q, &m)| points.weight(q) * m.min(objective.unit_cost(dist2(points.point(q), c))))
                .sum();
            if cost < best.0 {
                let mut subset = chosen.clone();
                subset.push(next);
                *best = (cost, subset);
            }
        } else {
            chosen.push(next);
            fill_level(points, objective, levels, depth, next);
            descend(points, objective, k, chosen, levels, best);
            chosen.pop();
        }
    }
}

/// D^ℓ seeding: the first center by weight, each next one by weight times distance power.
fn seed_centers(points: &WeightedPointSet, k: usize, objective: Objective, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut score: Vec<f64> = points.weights().to_vec();
    while centers.len() < k {
        let total: f64 = score.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = score.iter().rposition(|&s| s > 0.0).unwrap_or(0);
            for (i, &s) in score.iter().enumerate() {
                if u < s {
                    pick = i;
                    break;
                }
                u -= s;
            }
            pick
        } else {
            break;
        };
        let c = points.point(pick).to_vec();
        for (i, s) in score.iter_mut().enumerate() {
            let d = objective.unit_cost(dist2(points.point(i), &c));
            let candidate = points.weight(i) * d;
            *s = if centers.is_empty() { candidate } else { s.min(candidate) };
        }
        centers.push(c);
    }
    centers
}

/// Alternating assignment and center update (weighted means or Weiszfeld steps),
/// keeping only steps that lower the cost.
fn refine_geometric(points: &WeightedPointSet, run: &mut ClusterRun, spec: &SolverSpec) {
    let dim = points.dim();
    for _ in 0..spec.max_iterations {
        let assignment: Vec<usize> = points.iter().map(|(p, _)| nearest_center(p, &run.centers).0).collect();
        let mut next = run.centers.clone();
        for (j, center) in next.iter_mut().enumerate() {
            let members: Vec<usize> = (0..points.len()).filter(|&i| assignment[i] == j).collect();
            if members.is_empty() {
                continue;
            }
            match spec.objective {
                Objective::Means => {
                    let mut acc = vec![0.0; dim];
                    let mut total = 0.0;
                    for &i in &members {
                        let w = points.weight(i);
                        total += w;
                        for (a, v) in acc.iter_mut().zip(points.point(i)) {
                            *a += w * v;
                        }
                    }
                    *center = acc.into_iter().map(|a| a / total).collect();
                }
                Objective::Median => {
                    let mut acc = vec![0.0; dim];
                    let mut total = 0.0;
                    for &i in &members {
                        let d = dist2(points.point(i), center).sqrt();
                        if d <= f64::EPSILON * (1.0 + center.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                            continue;
                        }
                        let w = points.weight(i) / d;
                        total += w;
                        for (a, v) in acc.iter_mut().zip(points.point(i)) {
                            *a += w * v;
                        }
                    }
                    if total > 0.0 {
                        *center = acc.into_iter().map(|a| a / total).collect();
                    }
                }
            }
        }
        let cost = clustering_cost(points, &next, spec.objective);
        if cost.partial_cmp(&run.cost) != Some(std::cmp::Ordering::Less) {
            break;
        }
        let gain = run.cost - cost;
        run.centers = next;
        run.cost = cost;
        run.history.push(cost);
        if gain <= 1e-12 * cost {
            break;
        }
    }
}

/// Single-swap local search over input points; accepts the best improving swap per pass.
fn swap_search(points: &WeightedPointSet, run: &mut ClusterRun, spec: &SolverSpec) {
    let n = points.len();
    let k = run.centers.len();
    let cost_to = |q: usize, c: &[f64]| spec.objective.unit_cost(dist2(points.point(q), c));
    for _ in 0..spec.max_iterations {
        let mut first = vec![(0usize, f64::INFINITY); n];
        let mut second = vec![f64::INFINITY; n];
        for (q, (f, s)) in first.iter_mut().zip(second.iter_mut()).enumerate() {
            for (j, c) in run.centers.iter().enumerate() {
                let v = cost_to(q, c);
                if v < f.1 {
                    *s = f.1;
                    *f = (j, v);
                } else if v < *s {
                    *s = v;
                }
            }
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for cand in 0..n {
            let p = points.point(cand);
            if run.centers.iter().any(|c| c.as_slice() == p) {
                continue;
            }
            let to_cand: Vec<f64> = (0..n).map(|q| cost_to(q, p)).collect();
            for slot in 0..k {
                let cost: f64 = (0..n)
                    .map(|q| {
                        let kept = if first[q].0 == slot { second[q] } else { first[q].1 };
                        points.weight(q) * kept.min(to_cand[q])
                    })
                    .sum();
                if cost < best.map_or(run.cost, |b| b.0) {
                    best = Some((cost, slot, cand));
                }
            }
        }
        let Some((_, slot, cand)) = best else { break };
        let mut next = run.centers.clone();
        next[slot] = points.point(cand).to_vec();
        let cost = clustering_cost(points, &next, spec.objective);
        if cost.partial_cmp(&run.cost) != Some(std::cmp::Ordering::Less) {
            break;
        }
        run.centers = next;
        run.cost = cost;
        run.history.push(cost);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::Strategy;
    use proptest::prelude::*;
    use rand::Rng;

    fn line(values: &[f64], weights: &[f64]) -> WeightedPointSet {
        let pts: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        WeightedPointSet::from_points(1, &pts, weights)
    }

    #[test]
    fn test_more_centers_than_points_costs_nothing() {
        let pts = line(&[1.0, 1.0, 4.0], &[1.0, 2.0, 1.0]);
        let spec = SolverSpec::new(Objective::Median, Mode::Geometric);
        let centers = weighted_cluster(&pts, 3, &spec).unwrap();
        assert_eq!(centers.len(), 2);
        assert_eq!(clustering_cost(&pts, &centers, Objective::Median), 0.0);
    }

    #[test]
    fn test_weighted_median_example() {
        let pts = line(&[0.0, 10.0], &[2.0, 1.0]);
        for strategy in [Strategy::Exhaustive, Strategy::Iterative] {
            let spec = SolverSpec::new(Objective::Median, Mode::Geometric).with_strategy(strategy);
            let centers = weighted_cluster(&pts, 1, &spec).unwrap();
            assert_eq!(centers, vec![vec![0.0]], "{strategy}");
            assert_eq!(clustering_cost(&pts, &centers, Objective::Median), 10.0);
        }
    }

    #[test]
    fn test_weighted_mean_example() {
        let pts = line(&[0.0, 2.0], &[1.0, 1.0]);
        for strategy in [Strategy::Exhaustive, Strategy::Iterative] {
            let spec = SolverSpec::new(Objective::Means, Mode::Geometric).with_strategy(strategy);
            let centers = weighted_cluster(&pts, 1, &spec).unwrap();
            assert_eq!(centers, vec![vec![1.0]], "{strategy}");
            assert_eq!(clustering_cost(&pts, &centers, Objective::Means), 2.0);
        }
    }

    #[test]
    fn test_cost_examples() {
        let pts = line(&[0.0, 10.0], &[2.0, 1.0]);
        assert_eq!(clustering_cost(&pts, &[vec![0.0], vec![10.0]], Objective::Median), 0.0);
        assert_eq!(clustering_cost(&pts, &[vec![0.0]], Objective::Median), 10.0);
        assert_eq!(clustering_cost(&line(&[0.0, 2.0], &[1.0, 1.0]), &[vec![1.0]], Objective::Means), 2.0);
    }

    #[test]
    fn test_discrete_from_geometric_examples() {
        let pts = line(&[0.0, 10.0], &[1.0, 1.0]);
        assert_eq!(discrete_from_geometric(&pts, &[vec![0.0]]), vec![vec![0.0]]);
        let pair = line(&[0.0, 2.0], &[1.0, 1.0]);
        let snapped = discrete_from_geometric(&pair, &[vec![1.0]]);
        assert_eq!(snapped, vec![vec![0.0]]);
        let cost = clustering_cost(&pair, &snapped, Objective::Means);
        assert_eq!(cost, 4.0);
        assert!(cost <= 4.0 * 2.0);
    }

    #[test]
    fn test_exhaustive_discrete_matches_brute_force() {
        let pts = line(&[0.0, 1.0, 5.0, 6.0, 20.0, 21.5, 40.0], &[1.0, 3.0, 2.0, 1.0, 5.0, 1.0, 0.5]);
        let spec = SolverSpec::new(Objective::Median, Mode::Discrete);
        let run = cluster(&pts, 3, &spec).unwrap();
        let all = pts.points();
        let mut best = f64::INFINITY;
        for a in 0..7 {
            for b in a + 1..7 {
                for c in b + 1..7 {
                    let cs = [all[a].clone(), all[b].clone(), all[c].clone()];
                    best = best.min(clustering_cost(&pts, &cs, Objective::Median));
                }
            }
        }
        assert_eq!(run.cost, best);
        assert!(run.centers.iter().all(|c| all.contains(c)));
    }

    #[test]
    fn test_iterative_history_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Vec<f64>> = (0..300).map(|i| vec![(i % 3) as f64 * 10.0 + rng.random::<f64>(), rng.random::<f64>()]).collect();
        let set = WeightedPointSet::from_points(2, &pts, &vec![1.0; 300]);
        for objective in [Objective::Median, Objective::Means] {
            for mode in [Mode::Geometric, Mode::Discrete] {
                let spec = SolverSpec::new(objective, mode).with_strategy(Strategy::Iterative).with_seed(3);
                let run = cluster(&set, 3, &spec).unwrap();
                assert!(run.history.windows(2).all(|w| w[1] <= w[0]), "{objective} {mode}");
                assert_eq!(*run.history.last().unwrap(), run.cost);
            }
        }
    }

    #[test]
    fn test_iterative_is_reproducible() {
        let pts = line(&[0.0, 1.0, 2.0, 10.0, 11.0, 30.0], &[1.0; 6]);
        let spec = SolverSpec::new(Objective::Means, Mode::Geometric).with_strategy(Strategy::Iterative).with_seed(11);
        assert_eq!(cluster(&pts, 2, &spec).unwrap(), cluster(&pts, 2, &spec).unwrap());
    }

    #[test]
    fn test_text_round_trip() {
        assert_eq!("means".parse::<Objective>().unwrap(), Objective::Means);
        assert_eq!(Mode::Discrete.to_string(), "discrete");
        assert!("fast".parse::<Strategy>().is_err());
    }

    #[test]
    fn test_binomial() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(40, 3), 9880);
        assert_eq!(binomial(3, 5), 0);
    }

    proptest! {
        #[test]
        fn prop_exhaustive_scale_equivariant(
            values in proptest::collection::vec(-50.0f64..50.0, 3..9),
            lambda in 0.1f64..10.0,
            k in 1usize..3,
        ) {
            let weights: Vec<f64> = (0..values.len()).map(|i| 1.0 + (i % 3) as f64).collect();
            let pts = line(&values, &weights);
            let scaled = pts.scaled(lambda);
            for (objective, power) in [(Objective::Median, 1), (Objective::Means, 2)] {
                let spec = SolverSpec::new(objective, Mode::Discrete);
                let a = cluster(&pts, k, &spec).unwrap();
                let b = cluster(&scaled, k, &spec).unwrap();
                let expected = a.cost * lambda.powi(power);
                prop_assert!((b.cost - expected).abs() <= 1e-9 * (1.0 + expected));
                let part = |set: &WeightedPointSet, cs: &[Vec<f64>]| -> Vec<usize> {
                    set.iter().map(|(p, _)| nearest_center(p, cs).0).collect()
                };
                let sorted = |cs: &[Vec<f64>]| {
                    let mut v: Vec<Vec<f64>> = cs.to_vec();
                    v.sort_by(|x, y| x[0].total_cmp(&y[0]));
                    v
                };
                let ca = sorted(&a.centers);
                let cb = sorted(&b.centers);
                let pa = part(&pts, &ca);
                let pb = part(&scaled, &cb);
                let tie_free = pts.iter().all(|(p, _)| {
                    let mut d: Vec<f64> = ca.iter().map(|c| dist2(p, c)).collect();
                    d.sort_by(f64::total_cmp);
                    d.len() < 2 || d[1] - d[0] > 1e-9
                });
                let same_subset = ca.iter().zip(&cb).all(|(x, y)| (x[0] * lambda - y[0]).abs() <= 1e-9 * (1.0 + y[0].abs()));
                if tie_free && same_subset {
                    prop_assert_eq!(pa, pb);
                }
            }
        }

        #[test]
        fn prop_snapping_inflation(values in proptest::collection::vec(-20.0f64..20.0, 2..8)) {
            let pts = line(&values, &vec![1.0; values.len()]);
            for (objective, factor) in [(Objective::Median, 2.0), (Objective::Means, 4.0)] {
                let spec = SolverSpec::new(objective, Mode::Geometric);
                let geo = cluster(&pts, 1, &spec).unwrap();
                let snapped = discrete_from_geometric(&pts, &geo.centers);
                let cost = clustering_cost(&pts, &snapped, objective);
                prop_assert!(cost <= factor * geo.cost + 1e-9);
            }
        }
    }
}
