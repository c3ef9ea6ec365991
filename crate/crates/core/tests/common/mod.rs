//! Instance generators and helpers shared by the integration tests.
#![allow(dead_code)]

use std::io::Write;

use rand::Rng;
use relclust::oracle::{materialize, MaterializedJoin, DEFAULT_JOIN_BUDGET};
use relclust::rect::Rect;
use relclust::relational::{build_join_tree, semi_join_reduce, Database, JoinTree, TableRows};

/// Relative slack for comparisons that hold exactly in real arithmetic.
pub const FP_REL_TOL: f64 = 1e-9;

pub fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + FP_REL_TOL * rhs.abs().max(lhs.abs())
}

/// Writes past the test harness capture so every verdict shows up in the log.
pub fn verdict(criterion: u32, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {criterion}: {tag} ({detail})");
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Single,
    Pair,
    Chain,
    Star,
}

pub const SHAPES: [Shape; 4] = [Shape::Single, Shape::Pair, Shape::Chain, Shape::Star];

/// Join attributes draw from `0..keys`; the rest from a wider grid with halves.
pub fn random_instance(rng: &mut impl Rng, shape: Shape, tuples: usize, keys: u32) -> Database {
    let key = |rng: &mut dyn rand::RngCore| f64::from(rng.random_range(0..keys));
    let free = |rng: &mut dyn rand::RngCore| f64::from(rng.random_range(0..40u32)) / 2.0;
    let rows = |key_cols: &[bool], rng: &mut dyn rand::RngCore| -> Vec<Vec<f64>> {
        let n = rng.random_range(1..=tuples);
        (0..n).map(|_| key_cols.iter().map(|&k| if k { key(rng) } else { free(rng) }).collect()).collect()
    };
    let (names, tables): (&[&str], Vec<TableRows<'_>>) = match shape {
        Shape::Single => (&["A", "B"], vec![("R", vec!["A", "B"], rows(&[false, false], rng))]),
        Shape::Pair => (
            &["A", "B", "C"],
            vec![("R1", vec!["A", "B"], rows(&[false, true], rng)), ("R2", vec!["B", "C"], rows(&[true, false], rng))],
        ),
        Shape::Chain => (
            &["A", "B", "C", "D"],
            vec![
                ("R1", vec!["A", "B"], rows(&[false, true], rng)),
                ("R2", vec!["B", "C"], rows(&[true, true], rng)),
                ("R3", vec!["C", "D"], rows(&[true, false], rng)),
            ],
        ),
        Shape::Star => (
            &["A", "B", "C", "D"],
            vec![
                ("R1", vec!["A", "B"], rows(&[true, false], rng)),
                ("R2", vec!["A", "C"], rows(&[true, false], rng)),
                ("R3", vec!["A", "D"], rows(&[true, false], rng)),
            ],
        ),
    };
    Database::from_rows(names, tables).expect("well-formed instance")
}

/// A reduced instance whose join size lies in `sizes`, with its materialized join.
pub fn sized_instance(
    rng: &mut impl Rng,
    shapes: &[Shape],
    sizes: std::ops::RangeInclusive<usize>,
) -> (Database, JoinTree, MaterializedJoin) {
    loop {
        let shape = shapes[rng.random_range(0..shapes.len())];
        let tuples = rng.random_range(2..=*sizes.end().min(&60));
        let keys = rng.random_range(2..=5);
        let db = random_instance(rng, shape, tuples, keys);
        let tree = build_join_tree(&db.query()).expect("generated queries are acyclic");
        let Ok(join) = materialize(&db, DEFAULT_JOIN_BUDGET) else { continue };
        if sizes.contains(&join.len()) {
            return (semi_join_reduce(&db, &tree), tree, join);
        }
    }
}

/// A random rectangle constraining a random subset of attributes.
pub fn random_rect(rng: &mut impl Rng, dim: usize) -> Rect {
    let mut rect = Rect::unbounded(dim);
    for a in 0..dim {
        if rng.random_bool(0.6) {
            let x = f64::from(rng.random_range(-2..42i32)) / 2.0;
            let y = f64::from(rng.random_range(-2..42i32)) / 2.0;
            rect.constrain(a, x.min(y), x.max(y));
        }
    }
    rect
}

/// `count` random points in the bounding box of `points`, widened by a quarter on each side.
pub fn random_centers(rng: &mut impl Rng, points: &[Vec<f64>], count: usize) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let lo: Vec<f64> = (0..dim).map(|j| points.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..dim).map(|j| points.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max)).collect();
    (0..count)
        .map(|_| {
            (0..dim)
                .map(|j| {
                    let pad = 0.25 * (hi[j] - lo[j]) + 0.5;
                    rng.random_range(lo[j] - pad..=hi[j] + pad)
                })
                .collect()
        })
        .collect()
}
