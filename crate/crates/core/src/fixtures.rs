//! Small instances shared by unit tests.

use crate::relational::{build_join_tree, Database, JoinTree};

/// R1(A,B) = {(0,0),(1,0),(4,2)}, R2(B,C) = {(0,1),(0,3),(2,5)}; five join results.
pub(crate) fn db0() -> Database {
    Database::from_rows(
        &["A", "B", "C"],
        vec![
            ("R1", vec!["A", "B"], vec![vec![0., 0.], vec![1., 0.], vec![4., 2.]]),
            ("R2", vec!["B", "C"], vec![vec![0., 1.], vec![0., 3.], vec![2., 5.]]),
        ],
    )
    .unwrap()
}

pub(crate) fn tree_of(db: &Database) -> JoinTree {
    build_join_tree(&db.query()).unwrap()
}

/// The five join results of `db0`, in a fixed order.
pub(crate) fn db0_join() -> Vec<Vec<f64>> {
    vec![vec![0., 0., 1.], vec![0., 0., 3.], vec![1., 0., 1.], vec![1., 0., 3.], vec![4., 2., 5.]]
}
