//! End-to-end relational clustering over a balanced tree of attribute subsets.
//!
//! Leaves cluster the exact weighted projection onto one attribute. An
//! internal node lifts its children's centers to their Cartesian product,
//! adds their bounds, and shrinks the product back to `k` centers through a
//! coreset of its own attribute block.

use crate::clustering::{cluster, clustering_cost, Mode, Objective, SolverSpec, Strategy};
use crate::coreset::{build_coreset, solve_from_coreset, Builder, CoresetParams};
use crate::error::{Error, Result};
use crate::ghd::{materialize_ghd_bags, GhdSpec, DEFAULT_BAG_BUDGET};
use crate::rect::{ProbeStats, RectEngine};
use crate::relational::{build_join_tree, leaf_weighted_projection, semi_join_reduce, Database, JoinTree};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttrNode {
    /// Global attribute indices below this node, in declaration order.
    pub attrs: Vec<usize>,
    pub children: Option<(usize, usize)>,
}

/// Balanced binary tree whose leaves are single attributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeTree {
    nodes: Vec<AttrNode>,
    root: usize,
}

impl AttributeTree {
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, i: usize) -> &AttrNode {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Children before parents; the root comes last.
    pub fn post_order(&self) -> Vec<usize> {
        (0..self.nodes.len()).collect()
    }

    pub fn height(&self) -> usize {
        fn h(t: &AttributeTree, u: usize) -> usize {
            t.nodes[u].children.map_or(0, |(l, r)| 1 + h(t, l).max(h(t, r)))
        }
        h(self, self.root)
    }

    pub fn leaves(&self) -> Vec<usize> {
        self.nodes[self.root].attrs.clone()
    }
}

/// Splits `attrs` in halves recursively, the left half taking the extra attribute.
pub fn attribute_tree(attrs: &[usize]) -> AttributeTree {
    fn grow(attrs: &[usize], nodes: &mut Vec<AttrNode>) -> usize {
        let children = (attrs.len() > 1).then(|| {
            let mid = attrs.len().div_ceil(2);
            (grow(&attrs[..mid], nodes), grow(&attrs[mid..], nodes))
        });
        nodes.push(AttrNode { attrs: attrs.to_vec(), children });
        nodes.len() - 1
    }
    assert!(!attrs.is_empty(), "attribute tree needs at least one attribute");
    let mut nodes = Vec::new();
    let root = grow(attrs, &mut nodes);
    AttributeTree { nodes, root }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub k: usize,
    pub epsilon: f64,
    pub objective: Objective,
    pub mode: Mode,
    pub builder: Builder,
    pub strategy: Strategy,
    pub seed: u64,
    /// Ceiling on per-cell samples in the fast builder.
    pub sample_cap: Option<u64>,
    pub bag_budget: usize,
}

impl RunConfig {
    pub fn new(k: usize, epsilon: f64, objective: Objective) -> Self {
        Self {
            k,
            epsilon,
            objective,
            mode: Mode::Geometric,
            builder: Builder::Fast,
            strategy: Strategy::Exhaustive,
            seed: 0,
            sample_cap: None,
            bag_budget: DEFAULT_BAG_BUDGET,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_builder(mut self, builder: Builder) -> Self {
        self.builder = builder;
        self
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_sample_cap(mut self, cap: Option<u64>) -> Self {
        self.sample_cap = cap;
        self
    }

    pub fn solver(&self, node: usize) -> SolverSpec {
        SolverSpec::new(self.objective, self.mode)
            .with_strategy(self.strategy)
            .with_seed(self.seed.wrapping_add((node as u64).wrapping_mul(0x2545_F491_4F6C_DD1D)))
    }

    /// Approximation factor of the lifted centers handed to an internal node's coreset.
    pub fn internal_alpha(&self) -> f64 {
        let gamma = self.solver(0).gamma();
        let e = self.epsilon;
        match (self.objective, self.mode) {
            (Objective::Median, Mode::Geometric) => (1.0 + e) * gamma * std::f64::consts::SQRT_2,
            (Objective::Median, Mode::Discrete) => 2.0 * (2.0 + e) * gamma * std::f64::consts::SQRT_2,
            (Objective::Means, Mode::Geometric) => (1.0 + e) * gamma,
            (Objective::Means, Mode::Discrete) => 4.0 * (4.0 + e) * gamma,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidInput(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Centers over one attribute block and an upper bound on their cost.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSolution {
    pub attrs: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub bound: f64,
}

/// What happened at one node of the attribute tree.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTrace {
    pub node: usize,
    pub attrs: Vec<usize>,
    /// Product of the children's centers; empty at leaves.
    pub lifted: Vec<Vec<f64>>,
    /// Sum of the children's bounds; zero at leaves.
    pub lifted_bound: f64,
    pub centers: Vec<Vec<f64>>,
    pub bound: f64,
    pub coreset_size: usize,
    pub cells_discovered: usize,
    pub cells_admitted: usize,
    pub cells_heavy: usize,
    pub cells_light: usize,
    pub cells_rejected: usize,
    pub probe: ProbeStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringSolution {
    /// Exactly `k` centers over all attributes.
    pub centers: Vec<Vec<f64>>,
    pub bound: f64,
    pub join_size: u64,
    pub nodes: Vec<NodeTrace>,
    pub probe: ProbeStats,
}

pub fn solve_leaf(engine: &RectEngine<'_>, attr: usize, config: &RunConfig, node: usize) -> Result<NodeSolution> {
    let db = engine.db();
    let projection = leaf_weighted_projection(db, engine.tree(), attr)?;
    engine.probe().touch(db.relations().iter().map(|r| r.len() as u64).sum::<u64>() * 2);
    if projection.is_empty() {
        return Err(Error::EmptyJoin);
    }
    let run = cluster(&projection, config.k, &config.solver(node))?;
    let bound = clustering_cost(&projection, &run.centers, config.objective);
    Ok(NodeSolution { attrs: vec![attr], centers: run.centers, bound })
}

/// Cartesian product of two center sets, left coordinates first, without repeats.
pub fn lift_centers(left: &[Vec<f64>], right: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(left.len() * right.len());
    for a in left {
        for b in right {
            let p: Vec<f64> = a.iter().chain(b).copied().collect();
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

/// Coreset parameters of an internal node built from its children's solutions.
pub fn lifted_params(left: &NodeSolution, right: &NodeSolution, config: &RunConfig, node: usize) -> CoresetParams {
    let attrs: Vec<usize> = left.attrs.iter().chain(&right.attrs).copied().collect();
    CoresetParams::new(
        config.objective,
        config.mode,
        config.epsilon,
        config.internal_alpha(),
        left.bound + right.bound,
        lift_centers(&left.centers, &right.centers),
        attrs,
    )
    .with_seed(config.seed ^ (node as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    .with_sample_cap(config.sample_cap)
}

pub fn solve_internal(
    engine: &RectEngine<'_>,
    left: &NodeSolution,
    right: &NodeSolution,
    config: &RunConfig,
    node: usize,
) -> Result<(NodeSolution, NodeTrace)> {
    let before = engine.probe().stats();
    let params = lifted_params(left, right, config, node);
    let (coreset, ledger) = build_coreset(engine, &params, config.builder)?;
    let (centers, bound) = solve_from_coreset(&coreset, &ledger, config.k, &params, &config.solver(node))?;
    let trace = NodeTrace {
        node,
        attrs: params.attrs.clone(),
        lifted: params.centers.clone(),
        lifted_bound: params.radius,
        centers: centers.clone(),
        bound,
        coreset_size: coreset.len(),
        cells_discovered: ledger.discovered,
        cells_admitted: ledger.admitted(),
        cells_heavy: ledger.heavy(),
        cells_light: ledger.light(),
        cells_rejected: ledger.rejected,
        probe: engine.probe().stats().since(&before),
    };
    Ok((NodeSolution { attrs: params.attrs, centers, bound }, trace))
}

/// Clusters the join of `db`, converting it through `ghd` when one is given.
pub fn run(db: &Database, config: &RunConfig, ghd: Option<&GhdSpec>) -> Result<ClusteringSolution> {
    config.validate()?;
    let (db, tree): (Database, JoinTree) = match ghd {
        Some(ghd) => materialize_ghd_bags(db, ghd, config.bag_budget)?,
        None => (db.clone(), build_join_tree(&db.query())?),
    };
    let reduced = semi_join_reduce(&db, &tree);
    let engine = RectEngine::new(&reduced, tree);
    run_on(&engine, config)
}

/// Runs the attribute-tree recursion over an already reduced instance.
pub fn run_on(engine: &RectEngine<'_>, config: &RunConfig) -> Result<ClusteringSolution> {
    config.validate()?;
    let join_size = engine.count_all()?;
    if join_size == 0 {
        return Err(Error::EmptyJoin);
    }
    let attrs: Vec<usize> = (0..engine.db().dim()).collect();
    let tree = attribute_tree(&attrs);
    let mut solved: Vec<Option<NodeSolution>> = vec![None; tree.len()];
    let mut nodes = Vec::with_capacity(tree.len());
    for u in tree.post_order() {
        let node = tree.node(u);
        let solution = match node.children {
            None => {
                let before = engine.probe().stats();
                let s = solve_leaf(engine, node.attrs[0], config, u)?;
                nodes.push(NodeTrace {
                    node: u,
                    attrs: s.attrs.clone(),
                    lifted: Vec::new(),
                    lifted_bound: 0.0,
                    centers: s.centers.clone(),
                    bound: s.bound,
                    coreset_size: 0,
                    cells_discovered: 0,
                    cells_admitted: 0,
                    cells_heavy: 0,
                    cells_light: 0,
                    cells_rejected: 0,
                    probe: engine.probe().stats().since(&before),
                });
                s
            }
            Some((l, r)) => {
                let left = solved[l].take().expect("children are solved first");
                let right = solved[r].take().expect("children are solved first");
                let (s, trace) = solve_internal(engine, &left, &right, config, u)?;
                nodes.push(trace);
                s
            }
        };
        log::info!("node {u} over attributes {:?}: {} centers, bound {}", solution.attrs, solution.centers.len(), solution.bound);
        solved[u] = Some(solution);
    }
    let root = solved[tree.root()].take().expect("root is solved");
    let mut centers = root.centers;
    let distinct = centers.len();
    while centers.len() < config.k {
        centers.push(centers[centers.len() % distinct].clone());
    }
    Ok(ClusteringSolution { centers, bound: root.bound, join_size, nodes, probe: engine.probe().stats() })
}
