//! Weighted coresets of a join projection, built from a many-center solution
//! and a cost bound by walking exponential grids around every center.
//!
//! Only nonempty grid cells are visited. They come from one grouped count per
//! center, which also yields every cell's population. Skipping empty cells
//! changes neither the processed-cell ledger's coverage of tuples nor any
//! weight, so the output matches a walk over every cell.

use std::collections::{BTreeMap, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clustering::{cluster, clustering_cost, Mode, Objective, SolverSpec};
use crate::error::{Error, Result};
use crate::geometry::{box_diam, point_box_distance, set_box_distance, AxisBox, ExponentialGrid, SlabGrid};
use crate::points::{value_bits, WeightedPointSet};
use crate::rect::{Rect, RectEngine};
use crate::relational::{Database, JoinTree};

/// Which coreset construction to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builder {
    /// Exact counts over the complement of processed cells.
    Slow,
    /// Sampled heavy/light classification.
    Fast,
}

text_enum!(Builder { Slow => "slow", Fast => "fast" });

impl Builder {
    /// Grid resolution for a user-level `epsilon`.
    pub fn grid_epsilon(self, objective: Objective, epsilon: f64) -> f64 {
        match (self, objective) {
            (Builder::Slow, Objective::Median) => epsilon / 4.0,
            (Builder::Slow, Objective::Means) => epsilon / 18.0,
            (Builder::Fast, _) => epsilon / 34.0,
        }
    }

    /// Upper bound on the chosen centers' cost over the whole projection,
    /// given their cost on the coreset.
    pub fn certified_bound(self, objective: Objective, epsilon: f64, coreset_cost: f64) -> f64 {
        match (self, objective) {
            (Builder::Slow, Objective::Median) => coreset_cost / (1.0 - epsilon / 4.0),
            // A grid at resolution ε/18 yields an (ε/10)-coreset for squared costs.
            (Builder::Slow, Objective::Means) => coreset_cost / (1.0 - epsilon / 10.0),
            (Builder::Fast, Objective::Median) => {
                let e = epsilon / 34.0;
                (1.0 + 4.0 * e) / (1.0 - 9.0 * e) * coreset_cost
            }
            (Builder::Fast, Objective::Means) => {
                let e = epsilon / 5.0;
                (1.0 + e) / ((1.0 - e) * (1.0 - e)) * coreset_cost
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoresetParams {
    pub objective: Objective,
    pub mode: Mode,
    pub epsilon: f64,
    pub alpha: f64,
    /// Upper bound on the cost of `centers` over the projection.
    pub radius: f64,
    pub centers: Vec<Vec<f64>>,
    /// Global attribute indices spanned by the projection, in coordinate order.
    pub attrs: Vec<usize>,
    pub seed: u64,
    /// Optional ceiling on the per-cell sample count of the fast builder.
    pub sample_cap: Option<u64>,
}

impl CoresetParams {
    pub fn new(
        objective: Objective,
        mode: Mode,
        epsilon: f64,
        alpha: f64,
        radius: f64,
        centers: Vec<Vec<f64>>,
        attrs: Vec<usize>,
    ) -> Self {
        Self { objective, mode, epsilon, alpha, radius, centers, attrs, seed: 0, sample_cap: None }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_sample_cap(mut self, cap: Option<u64>) -> Self {
        self.sample_cap = cap;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            return bad(format!("radius must be finite and nonnegative, got {}", self.radius));
        }
        if self.attrs.is_empty() || self.attrs.iter().any(|&a| a >= dim) {
            return bad(format!("attribute subset {:?} is not within 0..{dim}", self.attrs));
        }
        let mut sorted = self.attrs.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.attrs.len() {
            return bad("attribute subset repeats an attribute".into());
        }
        if self.centers.is_empty() {
            return bad("no centers".into());
        }
        if self.centers.iter().any(|c| c.len() != self.attrs.len() || c.iter().any(|v| !v.is_finite())) {
            return bad("centers must be finite points over the attribute subset".into());
        }
        if self.sample_cap == Some(0) {
            return bad("sample cap must be positive".into());
        }
        Ok(())
    }
}

/// The length scale `Φ`: `r/(αn)` for medians, `√(r/(αn))` for means.
pub fn scale_phi(params: &CoresetParams, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptyJoin);
    }
    let ratio = params.radius / (params.alpha * n as f64);
    Ok(match params.objective {
        Objective::Median => ratio,
        Objective::Means => ratio.sqrt(),
    })
}

/// Whether `x` is within `diam(cell)` of the nearest center's distance to the cell.
///
/// A relative slack of 1e-9 absorbs rounding in the three distances.
pub fn admit_cell(x: &[f64], cell: &AxisBox, centers: &[Vec<f64>]) -> bool {
    let own = point_box_distance(x, cell);
    let nearest = set_box_distance(centers, cell);
    let diam = box_diam(cell);
    own <= nearest + diam + 1e-9 * (own + nearest + diam)
}

/// Threshold and per-cell sample count of the fast builder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingPlan {
    pub threshold: f64,
    pub draws: u64,
    /// Sample count before any cap.
    pub nominal_draws: f64,
}

/// `τ = 1/(16·|X|·ε′^(−d_u−1)·log N)` and `M = 3/(ε′²τ)·log(2N^(10d))`, logs base 2.
pub fn sampling_plan(epsilon: f64, centers: usize, proj_dim: usize, dim: usize, max_relation: usize, cap: Option<u64>) -> SamplingPlan {
    let e = Builder::Fast.grid_epsilon(Objective::Median, epsilon);
    let log_n = (max_relation.max(2) as f64).log2();
    let threshold = 1.0 / (16.0 * centers as f64 * e.powi(-(proj_dim as i32) - 1) * log_n);
    let nominal_draws = 3.0 / (e * e * threshold) * (1.0 + 10.0 * dim as f64 * log_n);
    let full = if nominal_draws >= u64::MAX as f64 { u64::MAX } else { nominal_draws.ceil() as u64 };
    SamplingPlan { threshold, draws: cap.map_or(full, |c| full.min(c)), nominal_draws }
}

/// One admitted cell, in processing order.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    pub center: usize,
    pub level: u32,
    pub bounds: AxisBox,
    /// Join results inside the cell.
    pub population: u64,
    /// Weight of the coreset point the cell produced, or 0.
    pub weight: f64,
    /// Samples drawn (fast builder).
    pub draws: u64,
    /// Samples outside earlier heavy cells (fast builder).
    pub hits: u64,
    /// Whether the cell produced a coreset point.
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellLedger {
    pub builder: Builder,
    /// Processed cells (slow) or heavy cells (fast), in processing order.
    pub covered: Vec<AxisBox>,
    pub cells: Vec<CellRecord>,
    pub discovered: usize,
    pub rejected: usize,
    pub join_size: u64,
    pub phi: f64,
    pub plan: Option<SamplingPlan>,
    /// Set when the coreset is the exact projection and costs on it are exact.
    pub exact: bool,
}

impl CellLedger {
    fn new(builder: Builder, join_size: u64) -> Self {
        Self {
            builder,
            covered: Vec::new(),
            cells: Vec::new(),
            discovered: 0,
            rejected: 0,
            join_size,
            phi: 0.0,
            plan: None,
            exact: false,
        }
    }

    pub fn admitted(&self) -> usize {
        self.cells.len()
    }

    pub fn heavy(&self) -> usize {
        match self.builder {
            Builder::Fast => self.cells.iter().filter(|c| c.kept).count(),
            Builder::Slow => 0,
        }
    }

    pub fn light(&self) -> usize {
        match self.builder {
            Builder::Fast => self.admitted() - self.heavy(),
            Builder::Slow => 0,
        }
    }
}

pub fn build_coreset_slow(db: &Database, tree: &JoinTree, params: &CoresetParams) -> Result<(WeightedPointSet, CellLedger)> {
    build_coreset(&RectEngine::new(db, tree.clone()), params, Builder::Slow)
}

pub fn build_coreset_fast(db: &Database, tree: &JoinTree, params: &CoresetParams, seed: u64) -> Result<(WeightedPointSet, CellLedger)> {
    build_coreset(&RectEngine::new(db, tree.clone()), &params.clone().with_seed(seed), Builder::Fast)
}

pub fn build_coreset(engine: &RectEngine<'_>, params: &CoresetParams, builder: Builder) -> Result<(WeightedPointSet, CellLedger)> {
    let db = engine.db();
    params.validate(db.dim())?;
    let n = engine.count_all()?;
    if n == 0 {
        return Err(Error::EmptyJoin);
    }
    let mut ledger = CellLedger::new(builder, n);
    if params.radius == 0.0 {
        ledger.exact = true;
        return Ok((exact_projection(engine, params)?, ledger));
    }
    let eps = builder.grid_epsilon(params.objective, params.epsilon);
    let phi = scale_phi(params, n)?;
    if phi == 0.0 {
        return Err(Error::DegenerateScale);
    }
    ledger.phi = phi;
    let plan = (builder == Builder::Fast).then(|| {
        sampling_plan(params.epsilon, params.centers.len(), params.attrs.len(), db.dim(), db.max_relation_size(), params.sample_cap)
    });
    ledger.plan = plan;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut coreset = WeightedPointSet::new(params.attrs.len());

    for (i, x) in params.centers.iter().enumerate() {
        let grid = ExponentialGrid::new(x, phi, params.alpha, n, eps)?;
        let cells = discover_cells(engine, params, &grid)?;
        ledger.discovered += cells.len();
        for ((level, index), population) in cells {
            let bounds = grid.cell_box(level, &index);
            if !admit_cell(x, &bounds, &params.centers) {
                ledger.rejected += 1;
                continue;
            }
            let mut record =
                CellRecord { center: i, level, bounds, population, weight: 0.0, draws: 0, hits: 0, kept: false };
            match plan {
                None => {
                    if let Some((rep, count)) = uncovered_count(engine, params, &record.bounds, population, &ledger.covered, &mut rng)? {
                        record.weight = count as f64;
                        record.kept = true;
                        coreset.push(&rep, record.weight);
                    }
                    ledger.covered.push(record.bounds.clone());
                }
                Some(plan) => {
                    let rect = record.bounds.to_rect(&params.attrs, db.dim());
                    let sample = engine.sample_projected(&rect, plan.draws, &params.attrs, &mut rng)?;
                    let mut rep = None;
                    for (p, c) in sample.entries {
                        if !ledger.covered.iter().any(|b| b.contains(&p)) {
                            record.hits += c;
                            rep.get_or_insert(p);
                        }
                    }
                    record.draws = plan.draws;
                    let share = record.hits as f64 / plan.draws as f64;
                    if share >= 2.0 * plan.threshold {
                        record.weight = share * population as f64 / (1.0 - eps);
                        record.kept = true;
                        coreset.push(&rep.expect("positive hits leave a representative"), record.weight);
                        ledger.covered.push(record.bounds.clone());
                    }
                }
            }
            ledger.cells.push(record);
        }
    }
    log::debug!(
        "{builder} coreset: {} points, {} cells discovered, {} admitted, {} rejected",
        coreset.len(),
        ledger.discovered,
        ledger.admitted(),
        ledger.rejected
    );
    Ok((coreset, ledger))
}

/// Nonempty cells of one grid with their populations, ordered by level then index.
fn discover_cells(engine: &RectEngine<'_>, params: &CoresetParams, grid: &ExponentialGrid) -> Result<BTreeMap<(u32, Vec<i64>), u64>> {
    let rect = grid.outer_box().to_rect(&params.attrs, engine.db().dim());
    let groups = engine.grouped_count(&rect, &params.attrs, &|gi, v| grid.axis_position(gi, v).map(ExponentialGrid::pack))?;
    let mut cells = BTreeMap::new();
    for (key, count) in groups {
        let positions: Vec<(u32, i64)> = key.iter().map(|&k| ExponentialGrid::unpack(k)).collect();
        *cells.entry(grid.cell_from_positions(&positions)).or_insert(0) += count;
    }
    Ok(cells)
}

/// Join results in `cell` outside every box of `covered`, with one of them as representative.
fn uncovered_count(
    engine: &RectEngine<'_>,
    params: &CoresetParams,
    cell: &AxisBox,
    population: u64,
    covered: &[AxisBox],
    rng: &mut ChaCha8Rng,
) -> Result<Option<(Vec<f64>, u64)>> {
    let dim = engine.db().dim();
    let overlapping: Vec<AxisBox> = covered.iter().filter(|g| g.intersects(cell)).cloned().collect();
    let (count, source) = if overlapping.is_empty() {
        (population, cell.clone())
    } else {
        let slabs = SlabGrid::new(&overlapping, cell);
        let groups = engine.grouped_count(&cell.to_rect(&params.attrs, dim), &params.attrs, &|gi, v| {
            slabs.slab_of(gi, v).map(|s| s as i64)
        })?;
        let mut per_slab: HashMap<usize, u64> = HashMap::new();
        for (key, c) in groups {
            let index: Vec<usize> = key.iter().map(|&s| s as usize).collect();
            *per_slab.entry(slabs.ravel(&index)).or_insert(0) += c;
        }
        let mut total = 0u64;
        let mut first = None;
        for (b, ids) in slabs.complement() {
            let c: u64 = ids.iter().filter_map(|id| per_slab.get(id)).sum();
            total += c;
            if c > 0 && first.is_none() {
                first = Some(b);
            }
        }
        match first {
            None => return Ok(None),
            Some(b) => (total, b),
        }
    };
    let mut sample = engine.sample_projected(&source.to_rect(&params.attrs, dim), 1, &params.attrs, rng)?;
    Ok(Some((sample.entries.swap_remove(0).0, count)))
}

/// Distinct projected join results with exact multiplicities.
fn exact_projection(engine: &RectEngine<'_>, params: &CoresetParams) -> Result<WeightedPointSet> {
    let rect = Rect::unbounded(engine.db().dim());
    let groups = engine.grouped_count(&rect, &params.attrs, &|_, v| Some(value_bits(v) as i64))?;
    let mut out = WeightedPointSet::new(params.attrs.len());
    for (key, count) in groups {
        let p: Vec<f64> = key.iter().map(|&k| f64::from_bits(k as u64)).collect();
        out.push(&p, count as f64);
    }
    Ok(out)
}

/// Clusters the coreset and certifies an upper bound on the chosen centers' cost.
pub fn solve_from_coreset(
    coreset: &WeightedPointSet,
    ledger: &CellLedger,
    k: usize,
    params: &CoresetParams,
    solver: &SolverSpec,
) -> Result<(Vec<Vec<f64>>, f64)> {
    if coreset.is_empty() {
        return Err(Error::SolverFailure("empty coreset".into()));
    }
    let spec = SolverSpec { objective: params.objective, mode: params.mode, ..solver.clone() };
    let run = cluster(coreset, k, &spec)?;
    let cost = clustering_cost(coreset, &run.centers, params.objective);
    let bound = if ledger.exact { cost } else { ledger.builder.certified_bound(params.objective, params.epsilon, cost) };
    Ok((run.centers, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{db0, db0_join, tree_of};
    use crate::points::dist2;

    fn exact_cost(points: &[Vec<f64>], attrs: &[usize], centers: &[Vec<f64>], objective: Objective) -> f64 {
        points
            .iter()
            .map(|t| {
                let p: Vec<f64> = attrs.iter().map(|&a| t[a]).collect();
                objective.unit_cost(centers.iter().map(|c| dist2(&p, c)).fold(f64::INFINITY, f64::min))
            })
            .sum()
    }

    fn params_for(objective: Objective, centers: Vec<Vec<f64>>, attrs: Vec<usize>, slack: f64) -> CoresetParams {
        let cost = exact_cost(&db0_join(), &attrs, &centers, objective);
        CoresetParams::new(objective, Mode::Geometric, 0.25, 2.0, cost * slack, centers, attrs)
    }

    #[test]
    fn test_scale_phi_examples() {
        let mut p = CoresetParams::new(Objective::Median, Mode::Geometric, 0.1, 2.0, 10.0, vec![vec![0.0]], vec![0]);
        assert_eq!(scale_phi(&p, 5).unwrap(), 1.0);
        p.objective = Objective::Means;
        p.radius = 20.0;
        assert_eq!(scale_phi(&p, 10).unwrap(), 1.0);
        p.radius = 0.0;
        assert_eq!(scale_phi(&p, 10).unwrap(), 0.0);
        assert_eq!(scale_phi(&p, 0), Err(Error::EmptyJoin));
    }

    #[test]
    fn test_admit_examples() {
        let cell = AxisBox::new(vec![0.0], vec![0.5]);
        assert!(!admit_cell(&[5.5], &cell, &[vec![5.5], vec![-1.0]]));
        assert!(admit_cell(&[-1.0], &cell, &[vec![5.5], vec![-1.0]]));
        assert!(admit_cell(&[2.0], &cell, &[vec![2.0], vec![-1.0]]));
    }

    #[test]
    fn test_fast_grid_epsilon() {
        assert!((Builder::Fast.grid_epsilon(Objective::Median, 0.34) - 0.01).abs() < 1e-15);
        assert_eq!(Builder::Slow.grid_epsilon(Objective::Median, 0.2), 0.05);
    }

    #[test]
    fn test_slow_weights_sum_to_join_size() {
        let db = db0();
        let tree = tree_of(&db);
        let cases = [
            (vec![vec![1.0, 0.0, 2.0]], vec![0, 1, 2]),
            (vec![vec![0.0, 0.0, 1.0], vec![4.0, 2.0, 5.0]], vec![0, 1, 2]),
            (vec![vec![0.5]], vec![0]),
            (vec![vec![1.0, 4.0], vec![0.0, 0.0]], vec![2, 0]),
        ];
        for objective in [Objective::Median, Objective::Means] {
            for (centers, attrs) in &cases {
                for slack in [1.0, 1.7] {
                    let params = params_for(objective, centers.clone(), attrs.clone(), slack);
                    let (coreset, ledger) = build_coreset_slow(&db, &tree, &params).unwrap();
                    assert_eq!(coreset.total_weight(), 5.0, "{objective} {attrs:?}");
                    assert!(coreset.weights().iter().all(|w| w.fract() == 0.0 && *w > 0.0));
                    assert_eq!(ledger.covered.len(), ledger.admitted());
                }
            }
        }
    }

    #[test]
    fn test_zero_radius_returns_exact_projection() {
        let db = db0();
        let tree = tree_of(&db);
        let join = db0_join();
        let params = CoresetParams::new(Objective::Median, Mode::Geometric, 0.3, 2.0, 0.0, join.clone(), vec![0, 1, 2]);
        let (coreset, ledger) = build_coreset_slow(&db, &tree, &params).unwrap();
        assert!(ledger.exact);
        assert_eq!(coreset.len(), 5);
        assert!(coreset.iter().all(|(p, w)| join.contains(&p.to_vec()) && w == 1.0));
        let (centers, bound) = solve_from_coreset(&coreset, &ledger, 5, &params, &SolverSpec::new(Objective::Median, Mode::Geometric)).unwrap();
        assert_eq!(centers.len(), 5);
        assert_eq!(bound, 0.0);
    }

    #[test]
    fn test_fast_single_cell() {
        let db = db0();
        let tree = tree_of(&db);
        let params = CoresetParams::new(Objective::Median, Mode::Geometric, 0.34, 2.0, 1.0e6, vec![vec![0.0, 0.0, 0.0]], vec![0, 1, 2]);
        let (coreset, ledger) = build_coreset_fast(&db, &tree, &params, 7).unwrap();
        assert_eq!(ledger.admitted(), 1);
        assert_eq!(ledger.heavy(), 1);
        let cell = &ledger.cells[0];
        assert_eq!(cell.population, 5);
        assert_eq!(cell.hits, cell.draws);
        assert_eq!(coreset.len(), 1);
        assert_eq!(coreset.weight(0), 5.0 / (1.0 - 0.01));
    }

    #[test]
    fn test_fast_cell_inside_heavy_cells_is_light() {
        let db = db0();
        let tree = tree_of(&db);
        let center = vec![0.0, 0.0, 0.0];
        let params = CoresetParams::new(Objective::Median, Mode::Geometric, 0.34, 2.0, 1.0e6, vec![center.clone(), center], vec![0, 1, 2]);
        let (coreset, ledger) = build_coreset_fast(&db, &tree, &params, 7).unwrap();
        assert_eq!(ledger.admitted(), 2);
        assert_eq!(ledger.heavy(), 1);
        assert_eq!(ledger.light(), 1);
        assert_eq!(ledger.cells[1].hits, 0);
        assert_eq!(coreset.len(), 1);
    }

    #[test]
    fn test_fast_is_deterministic_given_seed() {
        let db = db0();
        let tree = tree_of(&db);
        let params = params_for(Objective::Median, vec![vec![1.0, 0.0, 2.0], vec![4.0, 2.0, 5.0]], vec![0, 1, 2], 1.2)
            .with_sample_cap(Some(5000));
        let a = build_coreset_fast(&db, &tree, &params, 3).unwrap();
        let b = build_coreset_fast(&db, &tree, &params, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn test_solve_from_coreset_examples() {
        let coreset = WeightedPointSet::from_points(1, &[vec![0.0], vec![10.0]], &[2.0, 1.0]);
        let ledger = CellLedger::new(Builder::Slow, 3);
        let eps = 0.2;
        let mut params = CoresetParams::new(Objective::Median, Mode::Geometric, eps, 2.0, 1.0, vec![vec![0.0]], vec![0]);
        let spec = SolverSpec::new(Objective::Median, Mode::Geometric);
        let (s, r) = solve_from_coreset(&coreset, &ledger, 1, &params, &spec).unwrap();
        assert_eq!(s, vec![vec![0.0]]);
        assert_eq!(r, 10.0 / (1.0 - eps / 4.0));

        params.objective = Objective::Means;
        let (s, r) = solve_from_coreset(&coreset, &ledger, 1, &params, &spec).unwrap();
        assert!((s[0][0] - 10.0 / 3.0).abs() < 1e-12);
        assert!((r * (1.0 - eps / 10.0) - 200.0 / 3.0).abs() < 1e-9);

        let (_, r) = solve_from_coreset(&coreset, &ledger, 2, &params, &spec).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn test_sampling_plan_cap() {
        let plan = sampling_plan(0.34, 4, 2, 3, 1000, None);
        assert!(plan.threshold > 0.0 && plan.threshold < 1.0);
        assert!(plan.draws as f64 >= plan.nominal_draws);
        assert_eq!(sampling_plan(0.34, 4, 2, 3, 1000, Some(100)).draws, 100);
    }

    #[test]
    fn test_invalid_params() {
        let db = db0();
        let tree = tree_of(&db);
        let p = CoresetParams::new(Objective::Median, Mode::Geometric, 1.5, 2.0, 1.0, vec![vec![0.0]], vec![0]);
        assert!(matches!(build_coreset_slow(&db, &tree, &p), Err(Error::InvalidInput(_))));
        let p = CoresetParams::new(Objective::Median, Mode::Geometric, 0.5, 2.0, 1.0, vec![vec![0.0, 1.0]], vec![0]);
        assert!(matches!(build_coreset_slow(&db, &tree, &p), Err(Error::InvalidInput(_))));
    }
}
