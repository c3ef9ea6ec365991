//! Generalized hypertree decompositions: validation and conversion of a cyclic
//! query into an acyclic one over materialized bags.

use crate::error::{Error, Result};
use crate::relational::{join_relations, Database, JoinQuery, JoinTree, Relation};

/// Default per-bag materialization budget.
pub const DEFAULT_BAG_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GhdSpec {
    /// Attribute indices of each bag.
    pub bags: Vec<Vec<usize>>,
    /// Undirected tree edges between bags.
    pub edges: Vec<(usize, usize)>,
    /// Optional fractional cover `cover[bag][relation]`.
    pub cover: Option<Vec<Vec<f64>>>,
}

impl GhdSpec {
    /// A decomposition with one bag holding every attribute.
    pub fn single_bag(query: &JoinQuery) -> Self {
        Self { bags: vec![(0..query.dim()).collect()], edges: Vec::new(), cover: None }
    }

    /// Resolves bags given as attribute names.
    pub fn from_names(query: &JoinQuery, bags: &[Vec<String>], edges: Vec<(usize, usize)>, cover: Option<Vec<Vec<f64>>>) -> Result<Self> {
        let bags = bags
            .iter()
            .map(|bag| {
                bag.iter()
                    .map(|n| query.attribute_index(n).ok_or_else(|| Error::SchemaMismatch(format!("unknown attribute {n} in bag"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { bags, edges, cover })
    }
}

/// Summary of an accepted decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct GhdReport {
    /// Largest per-bag cover weight, when cover weights are supplied.
    pub width: Option<f64>,
}

/// Checks tree shape, coverage, connectivity and cover constraints.
pub fn validate_ghd(query: &JoinQuery, ghd: &GhdSpec) -> Result<GhdReport> {
    let violation = |msg: String| Err(Error::GhdViolation(msg));
    let d = query.dim();
    let nb = ghd.bags.len();
    if nb == 0 {
        return violation("no bags".into());
    }
    if let Some(a) = ghd.bags.iter().flatten().find(|&&a| a >= d) {
        return violation(format!("bag names attribute {a}, but the query has {d}"));
    }
    let tree = JoinTree::from_edges(nb, &ghd.edges, 0).map_err(|e| Error::GhdViolation(format!("bags do not form a tree: {e}")))?;

    for r in &query.relations {
        if !ghd.bags.iter().any(|bag| r.attrs.iter().all(|a| bag.contains(a))) {
            return violation(format!("relation {} is covered by no bag", r.name));
        }
    }

    for a in 0..d {
        let holds: Vec<bool> = ghd.bags.iter().map(|bag| bag.contains(&a)).collect();
        let count = holds.iter().filter(|&&h| h).count();
        if count == 0 {
            return violation(format!("attribute {} is in no bag", query.attributes[a].name));
        }
        // The holders form a connected subtree iff exactly one holder lacks a holding parent.
        let tops = (0..nb).filter(|&u| holds[u] && !tree.parent(u).is_some_and(|p| holds[p])).count();
        if tops != 1 {
            return violation(format!("bags holding attribute {} are not connected", query.attributes[a].name));
        }
    }

    let Some(cover) = &ghd.cover else {
        return Ok(GhdReport { width: None });
    };
    if cover.len() != nb || cover.iter().any(|w| w.len() != query.relations.len()) {
        return violation("cover needs one weight per relation for every bag".into());
    }
    let mut width: f64 = 0.0;
    for (u, weights) in cover.iter().enumerate() {
        if weights.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return violation(format!("bag {u} has a negative or non-finite cover weight"));
        }
        for &a in &ghd.bags[u] {
            let total: f64 = query.relations.iter().zip(weights).filter(|(r, _)| r.attrs.contains(&a)).map(|(_, x)| x).sum();
            if total < 1.0 - 1e-12 {
                return violation(format!("bag {u} covers attribute {} with weight {total} < 1", query.attributes[a].name));
            }
        }
        width = width.max(weights.iter().sum());
    }
    Ok(GhdReport { width: Some(width) })
}

/// Replaces the relations by one materialized relation per bag, joined along the decomposition tree.
///
/// Each bag relation is the join of every input relation projected onto the bag.
pub fn materialize_ghd_bags(db: &Database, ghd: &GhdSpec, budget: usize) -> Result<(Database, JoinTree)> {
    let query = db.query();
    validate_ghd(&query, ghd)?;
    let mut bags = Vec::with_capacity(ghd.bags.len());
    for (u, bag) in ghd.bags.iter().enumerate() {
        let parts: Vec<Relation> = db
            .relations()
            .iter()
            .filter_map(|r| {
                let cols: Vec<usize> = (0..r.arity()).filter(|&c| bag.contains(&r.attrs()[c])).collect();
                if cols.is_empty() {
                    return None;
                }
                let attrs = cols.iter().map(|&c| r.attrs()[c]).collect();
                let rows = r.tuples().map(|t| cols.iter().map(|&c| t[c]).collect()).collect();
                Some(Relation::new(r.name(), attrs, rows))
            })
            .collect::<Result<_>>()?;
        let refs: Vec<&Relation> = parts.iter().collect();
        let (attrs, rows) = join_relations(&refs, budget).map_err(|e| match e {
            Error::BudgetExceeded { budget } => Error::BagTooLarge { bag: u, budget },
            other => other,
        })?;
        bags.push(Relation::new(format!("bag{u}"), attrs, rows)?);
    }
    let names = db.attributes().iter().map(|a| a.name.clone()).collect();
    let converted = Database::new(names, bags)?;
    let tree = JoinTree::from_edges(ghd.bags.len(), &ghd.edges, 0)?;
    Ok((converted, tree))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::materialize;

    fn triangle(rows: Vec<Vec<f64>>) -> Database {
        Database::from_rows(
            &["A", "B", "C"],
            vec![("R", vec!["A", "B"], rows.clone()), ("S", vec!["B", "C"], rows.clone()), ("T", vec!["A", "C"], rows)],
        )
        .unwrap()
    }

    #[test]
    fn test_single_bag_triangle_is_valid() {
        let db = triangle(vec![vec![0., 0.]]);
        assert_eq!(validate_ghd(&db.query(), &GhdSpec::single_bag(&db.query())).unwrap().width, None);
    }

    #[test]
    fn test_uncovered_relation_is_rejected() {
        let db = triangle(vec![vec![0., 0.]]);
        let ghd = GhdSpec { bags: vec![vec![0, 1], vec![1, 2]], edges: vec![(0, 1)], cover: None };
        let err = validate_ghd(&db.query(), &ghd).unwrap_err();
        assert!(matches!(&err, Error::GhdViolation(m) if m.contains('T')), "{err}");
    }

    #[test]
    fn test_half_cover_has_width_one_and_a_half() {
        let db = triangle(vec![vec![0., 0.]]);
        let ghd = GhdSpec { bags: vec![vec![0, 1, 2]], edges: vec![], cover: Some(vec![vec![0.5, 0.5, 0.5]]) };
        assert_eq!(validate_ghd(&db.query(), &ghd).unwrap().width, Some(1.5));
        let thin = GhdSpec { cover: Some(vec![vec![0.5, 0.5, 0.4]]), ..ghd };
        assert!(validate_ghd(&db.query(), &thin).is_err());
    }

    #[test]
    fn test_disconnected_attribute_is_rejected() {
        let db = Database::from_rows(
            &["A", "B", "C"],
            vec![("R", vec!["A", "B"], vec![vec![0., 0.]]), ("S", vec!["B", "C"], vec![vec![0., 0.]])],
        )
        .unwrap();
        let ghd = GhdSpec { bags: vec![vec![0, 1], vec![2], vec![1, 2]], edges: vec![(0, 1), (1, 2)], cover: None };
        assert!(matches!(validate_ghd(&db.query(), &ghd), Err(Error::GhdViolation(_))));
    }

    #[test]
    fn test_triangle_bag_examples() {
        let db = triangle(vec![vec![0., 0.]]);
        let (conv, tree) = materialize_ghd_bags(&db, &GhdSpec::single_bag(&db.query()), 100).unwrap();
        assert_eq!(tree.len(), 1);
        assert_eq!(conv.relations().len(), 1);
        assert_eq!(conv.relation(0).tuples().collect::<Vec<_>>(), vec![&[0., 0., 0.][..]]);

        let db = triangle(vec![vec![0., 1.], vec![1., 2.], vec![0., 2.], vec![2., 0.]]);
        let (conv, _) = materialize_ghd_bags(&db, &GhdSpec::single_bag(&db.query()), 100).unwrap();
        let mut bag: Vec<Vec<f64>> = conv.relation(0).tuples().map(<[f64]>::to_vec).collect();
        let mut brute = Vec::new();
        for r in db.relation(0).tuples() {
            for s in db.relation(1).tuples() {
                for t in db.relation(2).tuples() {
                    if r[1] == s[0] && r[0] == t[0] && s[1] == t[1] {
                        brute.push(vec![r[0], r[1], s[1]]);
                    }
                }
            }
        }
        bag.sort_by(|a, b| a.partial_cmp(b).unwrap());
        brute.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(bag, brute);
    }

    #[test]
    fn test_identity_decomposition_preserves_join() {
        let db = Database::from_rows(
            &["A", "B", "C"],
            vec![
                ("R1", vec!["A", "B"], vec![vec![0., 0.], vec![1., 0.], vec![4., 2.]]),
                ("R2", vec!["B", "C"], vec![vec![0., 1.], vec![0., 3.], vec![2., 5.]]),
            ],
        )
        .unwrap();
        let ghd = GhdSpec { bags: vec![vec![0, 1], vec![1, 2]], edges: vec![(0, 1)], cover: None };
        let (conv, tree) = materialize_ghd_bags(&db, &ghd, 100).unwrap();
        assert!(tree.is_join_tree_for(&conv.query()));
        assert_eq!(conv.relation(0).len(), 3);
        let mut a = materialize(&db, 100).unwrap().tuples().to_vec();
        let mut b = materialize(&conv, 100).unwrap().tuples().to_vec();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn test_bag_budget() {
        let rows: Vec<Vec<f64>> = (0..20).flat_map(|i| (0..20).map(move |j| vec![f64::from(i), f64::from(j)])).collect();
        let db = triangle(rows);
        let err = materialize_ghd_bags(&db, &GhdSpec::single_bag(&db.query()), 1000).unwrap_err();
        assert_eq!(err, Error::BagTooLarge { bag: 0, budget: 1000 });
    }
}
