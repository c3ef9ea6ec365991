//! The JSON document written by a run.

use relclust::pipeline::{ClusteringSolution, NodeTrace};
use relclust::relational::Database;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub k: usize,
    pub epsilon: f64,
    pub objective: String,
    pub mode: String,
    pub algorithm: String,
    pub solver: String,
    pub seed: u64,
    pub max_samples: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeReport {
    pub attributes: Vec<String>,
    pub lifted_centers: usize,
    pub lifted_bound: f64,
    pub bound: f64,
    pub coreset_size: usize,
    pub cells_discovered: usize,
    pub cells_admitted: usize,
    pub cells_heavy: usize,
    pub cells_light: usize,
    pub cells_rejected: usize,
    pub rect_queries: u64,
    pub tuples_touched: u64,
    pub samples_drawn: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub nodes: Vec<NodeReport>,
    pub rect_queries: u64,
    pub tuples_touched: u64,
    pub samples_drawn: u64,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscreteOptimum {
    pub centers: Vec<Vec<f64>>,
    pub cost: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub join_size: usize,
    /// Exact cost of the reported centers over the materialized join.
    pub cost: f64,
    pub discrete_optimum: Option<DiscreteOptimum>,
    /// Why the discrete optimum is missing, when it is.
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub settings: Settings,
    pub attributes: Vec<String>,
    pub join_size: u64,
    pub decomposition_width: Option<f64>,
    pub centers: Vec<Vec<f64>>,
    /// Certified upper bound on the cost of `centers`.
    pub bound: f64,
    pub diagnostics: Diagnostics,
    pub oracle: Option<OracleReport>,
}

fn node_report(db: &Database, trace: &NodeTrace) -> NodeReport {
    NodeReport {
        attributes: trace.attrs.iter().map(|&a| db.attributes()[a].name.clone()).collect(),
        lifted_centers: trace.lifted.len(),
        lifted_bound: trace.lifted_bound,
        bound: trace.bound,
        coreset_size: trace.coreset_size,
        cells_discovered: trace.cells_discovered,
        cells_admitted: trace.cells_admitted,
        cells_heavy: trace.cells_heavy,
        cells_light: trace.cells_light,
        cells_rejected: trace.cells_rejected,
        rect_queries: trace.probe.rect_queries,
        tuples_touched: trace.probe.tuples_touched,
        samples_drawn: trace.probe.samples_drawn,
    }
}

impl RunReport {
    pub fn new(
        settings: Settings,
        db: &Database,
        solution: ClusteringSolution,
        decomposition_width: Option<f64>,
        wall_time_ms: f64,
    ) -> Self {
        let diagnostics = Diagnostics {
            nodes: solution.nodes.iter().map(|t| node_report(db, t)).collect(),
            rect_queries: solution.probe.rect_queries,
            tuples_touched: solution.probe.tuples_touched,
            samples_drawn: solution.probe.samples_drawn,
            wall_time_ms,
        };
        Self {
            settings,
            attributes: db.attributes().iter().map(|a| a.name.clone()).collect(),
            join_size: solution.join_size,
            decomposition_width,
            centers: solution.centers,
            bound: solution.bound,
            diagnostics,
            oracle: None,
        }
    }
}
