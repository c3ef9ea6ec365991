//! Schemas, instances, join trees and Yannakakis-style passes.
//!
//! Relations are sets: duplicate rows collapse on construction. Join keys
//! compare stored values exactly (by bit pattern, with `-0.0 == 0.0`).

use std::collections::{HashMap, HashSet};

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::points::{value_bits, WeightedPointSet};

pub(crate) type Key = SmallVec<[u64; 4]>;

/// A relation name, its attribute names and its rows.
pub type TableRows<'a> = (&'a str, Vec<&'a str>, Vec<Vec<f64>>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub index: usize,
}

/// A named relation over a subset of the global attributes.
#[derive(Debug, Clone)]
pub struct Relation {
    name: String,
    attrs: Vec<usize>,
    data: Vec<f64>,
    /// Per column, tuple indices sorted by value.
    sorted: Vec<Vec<u32>>,
}

impl Relation {
    pub fn new(name: impl Into<String>, attrs: Vec<usize>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let name = name.into();
        let arity = attrs.len();
        let mut seen_attr = HashSet::new();
        if !attrs.iter().all(|a| seen_attr.insert(*a)) {
            return Err(Error::SchemaMismatch(format!("relation {name} repeats an attribute")));
        }
        let mut seen = HashSet::new();
        let mut data = Vec::with_capacity(rows.len() * arity);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != arity {
                return Err(Error::SchemaMismatch(format!(
                    "relation {name}, row {i}: expected {arity} values, got {}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("relation {name}, row {i}: value {v} is not finite")));
            }
            let key: Vec<u64> = row.iter().map(|&v| value_bits(v)).collect();
            if seen.insert(key) {
                data.extend(row.iter().map(|&v| if v == 0.0 { 0.0 } else { v }));
            }
        }
        Ok(Self::from_flat(name, attrs, data))
    }

    fn from_flat(name: String, attrs: Vec<usize>, data: Vec<f64>) -> Self {
        let arity = attrs.len();
        let len = data.len().checked_div(arity).unwrap_or(0);
        let sorted = (0..arity)
            .map(|c| {
                let mut idx: Vec<u32> = (0..len as u32).collect();
                idx.sort_by(|&a, &b| data[a as usize * arity + c].total_cmp(&data[b as usize * arity + c]));
                idx
            })
            .collect();
        Self { name, attrs, data, sorted }
    }

    /// Keeps the listed tuples (indices into this relation), in the given order.
    pub(crate) fn subset(&self, keep: &[u32]) -> Self {
        let arity = self.arity();
        let mut data = Vec::with_capacity(keep.len() * arity);
        for &t in keep {
            data.extend_from_slice(self.tuple(t as usize));
        }
        Self::from_flat(self.name.clone(), self.attrs.clone(), data)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn attrs(&self) -> &[usize] {
        &self.attrs
    }

    pub fn arity(&self) -> usize {
        self.attrs.len()
    }

    pub fn len(&self) -> usize {
        if self.attrs.is_empty() {
            0
        } else {
            self.data.len() / self.attrs.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tuple(&self, i: usize) -> &[f64] {
        let a = self.arity();
        &self.data[i * a..(i + 1) * a]
    }

    pub fn tuples(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |i| self.tuple(i))
    }

    /// Column position of a global attribute.
    pub fn position(&self, attr: usize) -> Option<usize> {
        self.attrs.iter().position(|&a| a == attr)
    }

    pub(crate) fn value(&self, t: usize, col: usize) -> f64 {
        self.data[t * self.arity() + col]
    }

    pub(crate) fn sorted_column(&self, col: usize) -> &[u32] {
        &self.sorted[col]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSchema {
    pub name: String,
    pub attrs: Vec<usize>,
}

/// The full conjunctive query joining every relation of an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinQuery {
    pub attributes: Vec<Attribute>,
    pub relations: Vec<RelationSchema>,
}

impl JoinQuery {
    pub fn dim(&self) -> usize {
        self.attributes.len()
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }
}

/// Named relations over named real-valued attributes.
#[derive(Debug, Clone)]
pub struct Database {
    attributes: Vec<Attribute>,
    relations: Vec<Relation>,
}

impl Database {
    pub fn new(attribute_names: Vec<String>, relations: Vec<Relation>) -> Result<Self> {
        if relations.is_empty() {
            return Err(Error::SchemaMismatch("a query needs at least one relation".into()));
        }
        let mut names = HashSet::new();
        for n in &attribute_names {
            if !names.insert(n.as_str()) {
                return Err(Error::SchemaMismatch(format!("attribute {n} declared twice")));
            }
        }
        let d = attribute_names.len();
        let mut used = vec![false; d];
        for r in &relations {
            for &a in r.attrs() {
                if a >= d {
                    return Err(Error::SchemaMismatch(format!("relation {} uses unknown attribute {a}", r.name())));
                }
                used[a] = true;
            }
        }
        if let Some(a) = used.iter().position(|u| !u) {
            return Err(Error::SchemaMismatch(format!(
                "attribute {} appears in no relation",
                attribute_names[a]
            )));
        }
        let attributes = attribute_names
            .into_iter()
            .enumerate()
            .map(|(index, name)| Attribute { name, index })
            .collect();
        Ok(Self { attributes, relations })
    }

    /// Builds an instance from attribute names and `(relation, attribute names, rows)` triples.
    pub fn from_rows(attribute_names: &[&str], tables: Vec<TableRows<'_>>) -> Result<Self> {
        let lookup = |n: &str| {
            attribute_names
                .iter()
                .position(|a| *a == n)
                .ok_or_else(|| Error::SchemaMismatch(format!("unknown attribute {n}")))
        };
        let mut relations = Vec::with_capacity(tables.len());
        for (name, attrs, rows) in tables {
            let idx = attrs.iter().map(|a| lookup(a)).collect::<Result<Vec<_>>>()?;
            relations.push(Relation::new(name, idx, rows)?);
        }
        Self::new(attribute_names.iter().map(|s| s.to_string()).collect(), relations)
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn dim(&self) -> usize {
        self.attributes.len()
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn relation(&self, i: usize) -> &Relation {
        &self.relations[i]
    }

    pub fn query(&self) -> JoinQuery {
        JoinQuery {
            attributes: self.attributes.clone(),
            relations: self
                .relations
                .iter()
                .map(|r| RelationSchema { name: r.name.clone(), attrs: r.attrs.clone() })
                .collect(),
        }
    }

    /// Largest relation size; stands in for `N` in every size-dependent formula.
    pub fn max_relation_size(&self) -> usize {
        self.relations.iter().map(Relation::len).max().unwrap_or(0)
    }

    pub(crate) fn with_relations(&self, relations: Vec<Relation>) -> Self {
        Self { attributes: self.attributes.clone(), relations }
    }

    /// Keeps, per relation, only the listed tuple indices.
    pub(crate) fn restrict(&self, keep: &[Vec<u32>]) -> Self {
        self.with_relations(self.relations.iter().zip(keep).map(|(r, k)| r.subset(k)).collect())
    }
}

/// A rooted join tree over the relations of a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinTree {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
}

impl JoinTree {
    /// Builds a tree from undirected edges and roots it at `root`.
    pub fn from_edges(nodes: usize, edges: &[(usize, usize)], root: usize) -> Result<Self> {
        if nodes == 0 || root >= nodes {
            return Err(Error::InvalidInput("join tree needs a valid root".into()));
        }
        if edges.len() + 1 != nodes {
            return Err(Error::InvalidInput(format!("{nodes} nodes need {} edges", nodes - 1)));
        }
        let mut adj = vec![Vec::new(); nodes];
        for &(a, b) in edges {
            if a >= nodes || b >= nodes || a == b {
                return Err(Error::InvalidInput(format!("bad edge ({a}, {b})")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let mut parent = vec![None; nodes];
        let mut children = vec![Vec::new(); nodes];
        let mut seen = vec![false; nodes];
        seen[root] = true;
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some(u);
                    children[u].push(v);
                    stack.push(v);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidInput("edges do not connect every node".into()));
        }
        for c in &mut children {
            c.sort_unstable();
        }
        Ok(Self { parent, children, root })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.len()).filter_map(|v| self.parent[v].map(|p| (p, v))).collect()
    }

    pub fn rooted_at(&self, root: usize) -> Self {
        Self::from_edges(self.len(), &self.edges(), root).expect("re-rooting a valid tree")
    }

    /// Parents before children.
    pub fn pre_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(u) = stack.pop() {
            out.push(u);
            for &c in self.children[u].iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Children before parents.
    pub fn post_order(&self) -> Vec<usize> {
        let mut out = self.pre_order();
        out.reverse();
        out
    }

    /// True iff, for every attribute, the relations holding it form a connected subtree.
    pub fn is_join_tree_for(&self, query: &JoinQuery) -> bool {
        if self.len() != query.relations.len() {
            return false;
        }
        (0..query.dim()).all(|a| {
            let holders: Vec<usize> =
                (0..self.len()).filter(|&r| query.relations[r].attrs.contains(&a)).collect();
            // A subset of a tree is connected iff exactly one holder lacks a holding parent.
            holders
                .iter()
                .filter(|&&r| self.parent[r].is_none_or(|p| !query.relations[p].attrs.contains(&a)))
                .count()
                <= 1
        })
    }
}

/// GYO ear removal. Ties go to the earliest declared relation.
pub fn build_join_tree(query: &JoinQuery) -> Result<JoinTree> {
    let m = query.relations.len();
    if m == 0 {
        return Err(Error::SchemaMismatch("a query needs at least one relation".into()));
    }
    let attrs: Vec<HashSet<usize>> =
        query.relations.iter().map(|r| r.attrs.iter().copied().collect()).collect();
    let mut alive = vec![true; m];
    let mut edges = Vec::with_capacity(m - 1);
    for _ in 1..m {
        let ear = (0..m).filter(|&e| alive[e]).find_map(|e| {
            let shared: HashSet<usize> = attrs[e]
                .iter()
                .copied()
                .filter(|a| (0..m).any(|o| o != e && alive[o] && attrs[o].contains(a)))
                .collect();
            (0..m)
                .find(|&f| f != e && alive[f] && shared.is_subset(&attrs[f]))
                .map(|f| (e, f))
        });
        match ear {
            Some((e, f)) => {
                alive[e] = false;
                edges.push((f, e));
            }
            None => return Err(Error::NotAcyclic),
        }
    }
    let root = alive.iter().position(|&a| a).expect("one relation survives");
    JoinTree::from_edges(m, &edges, root)
}

/// Column positions of the attributes a child shares with its parent.
pub(crate) struct EdgeKey {
    pub child_cols: Vec<usize>,
    pub parent_cols: Vec<usize>,
}

pub(crate) fn edge_key(db: &Database, child: usize, parent: usize) -> EdgeKey {
    let c = db.relation(child);
    let p = db.relation(parent);
    let mut child_cols = Vec::new();
    let mut parent_cols = Vec::new();
    for (ci, a) in c.attrs().iter().enumerate() {
        if let Some(pi) = p.position(*a) {
            child_cols.push(ci);
            parent_cols.push(pi);
        }
    }
    EdgeKey { child_cols, parent_cols }
}

pub(crate) fn key_of(rel: &Relation, t: usize, cols: &[usize]) -> Key {
    cols.iter().map(|&c| value_bits(rel.value(t, c))).collect()
}

/// Bottom-up counting over surviving tuples. `weights[r][i]` is the number of
/// join results of the subtree below `r` that extend `survivors[r][i]`; at the
/// root this is the full count `c(h)`.
pub(crate) struct CountPass {
    pub weights: Vec<Vec<u64>>,
    pub total: u64,
}

pub(crate) fn count_pass(db: &Database, tree: &JoinTree, survivors: &[Vec<u32>]) -> Result<CountPass> {
    let m = db.relations().len();
    let mut messages: Vec<HashMap<Key, u64>> = vec![HashMap::new(); m];
    let mut weights: Vec<Vec<u64>> = vec![Vec::new(); m];
    for r in tree.post_order() {
        let rel = db.relation(r);
        let child_keys: Vec<(usize, EdgeKey)> =
            tree.children(r).iter().map(|&c| (c, edge_key(db, c, r))).collect();
        let mut w = Vec::with_capacity(survivors[r].len());
        for &t in &survivors[r] {
            let mut prod: u64 = 1;
            for (c, ek) in &child_keys {
                let k = key_of(rel, t as usize, &ek.parent_cols);
                let cnt = messages[*c].get(&k).copied().unwrap_or(0);
                prod = prod.checked_mul(cnt).ok_or(Error::Overflow)?;
                if prod == 0 {
                    break;
                }
            }
            w.push(prod);
        }
        if let Some(p) = tree.parent(r) {
            let ek = edge_key(db, r, p);
            let mut msg: HashMap<Key, u64> = HashMap::new();
            for (&t, &wt) in survivors[r].iter().zip(&w) {
                if wt > 0 {
                    let slot = msg.entry(key_of(rel, t as usize, &ek.child_cols)).or_insert(0);
                    *slot = slot.checked_add(wt).ok_or(Error::Overflow)?;
                }
            }
            messages[r] = msg;
        }
        weights[r] = w;
    }
    let total = weights[tree.root()]
        .iter()
        .try_fold(0u64, |acc, &w| acc.checked_add(w))
        .ok_or(Error::Overflow)?;
    Ok(CountPass { weights, total })
}

pub(crate) fn all_tuples(db: &Database) -> Vec<Vec<u32>> {
    db.relations().iter().map(|r| (0..r.len() as u32).collect()).collect()
}

/// Removes dangling tuples with a bottom-up then a top-down semi-join sweep.
pub fn semi_join_reduce(db: &Database, tree: &JoinTree) -> Database {
    let mut keep = all_tuples(db);
    let sweep = |keep: &mut Vec<Vec<u32>>, target: usize, source: usize| {
        let (tcols, scols) = if tree.parent(source) == Some(target) {
            let ek = edge_key(db, source, target);
            (ek.parent_cols, ek.child_cols)
        } else {
            let ek = edge_key(db, target, source);
            (ek.child_cols, ek.parent_cols)
        };
        let src = db.relation(source);
        let keys: HashSet<Key> = keep[source].iter().map(|&t| key_of(src, t as usize, &scols)).collect();
        let tgt = db.relation(target);
        keep[target].retain(|&t| keys.contains(&key_of(tgt, t as usize, &tcols)));
    };
    for r in tree.post_order() {
        if let Some(p) = tree.parent(r) {
            sweep(&mut keep, p, r);
        }
    }
    for r in tree.pre_order() {
        for &c in tree.children(r) {
            sweep(&mut keep, c, r);
        }
    }
    db.restrict(&keep)
}

pub fn count_join_results(db: &Database, tree: &JoinTree) -> Result<u64> {
    Ok(count_pass(db, tree, &all_tuples(db))?.total)
}

/// Per-tuple counts `c(h)` for the tuples of one relation.
#[derive(Debug, Clone, PartialEq)]
pub struct TupleCountMap {
    pub relation: usize,
    pub counts: Vec<u64>,
}

impl TupleCountMap {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Count of the tuple with the given values, or 0 when absent.
    pub fn get(&self, db: &Database, tuple: &[f64]) -> u64 {
        let rel = db.relation(self.relation);
        (0..rel.len())
            .find(|&i| rel.tuple(i).iter().zip(tuple).all(|(a, b)| value_bits(*a) == value_bits(*b)))
            .map_or(0, |i| self.counts[i])
    }
}

/// Counts join results extending each tuple of the tree's root relation.
pub fn root_tuple_counts(db: &Database, tree: &JoinTree) -> Result<TupleCountMap> {
    let pass = count_pass(db, tree, &all_tuples(db))?;
    let root = tree.root();
    Ok(TupleCountMap { relation: root, counts: pass.weights[root].clone() })
}

/// The weighted projection of the join onto one attribute, sorted by value.
pub fn leaf_weighted_projection(db: &Database, tree: &JoinTree, attr: usize) -> Result<WeightedPointSet> {
    let holder = db
        .relations()
        .iter()
        .position(|r| r.position(attr).is_some())
        .ok_or_else(|| Error::SchemaMismatch(format!("no relation holds attribute {attr}")))?;
    let counts = root_tuple_counts(db, &tree.rooted_at(holder))?;
    let rel = db.relation(holder);
    let col = rel.position(attr).expect("holder has the attribute");
    let mut pairs: Vec<(f64, u64)> = (0..rel.len())
        .filter(|&t| counts.counts[t] > 0)
        .map(|t| (rel.value(t, col), counts.counts[t]))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = WeightedPointSet::new(1);
    let mut i = 0;
    while i < pairs.len() {
        let v = pairs[i].0;
        let mut w = 0u64;
        while i < pairs.len() && pairs[i].0 == v {
            w += pairs[i].1;
            i += 1;
        }
        out.push(&[v], w as f64);
    }
    Ok(out)
}

/// Natural join of arbitrary relations by successive hash joins.
///
/// Returns the joined attributes (ascending global index) and the result rows.
/// Fails with `BudgetExceeded` as soon as any intermediate result outgrows `budget`.
pub fn join_relations(relations: &[&Relation], budget: usize) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    let mut pending: Vec<usize> = (0..relations.len()).collect();
    let mut bound: Vec<usize> = Vec::new();
    let mut rows: Vec<Vec<f64>> = vec![Vec::new()];
    while !pending.is_empty() {
        // Next: the pending relation sharing the most bound attributes.
        let (pick, _) = pending
            .iter()
            .enumerate()
            .map(|(i, &r)| (i, relations[r].attrs().iter().filter(|a| bound.contains(a)).count()))
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("pending is nonempty");
        let rel = relations[pending.remove(pick)];
        let shared: Vec<(usize, usize)> = rel
            .attrs()
            .iter()
            .enumerate()
            .filter_map(|(c, a)| bound.iter().position(|b| b == a).map(|bpos| (c, bpos)))
            .collect();
        let fresh: Vec<usize> = (0..rel.arity()).filter(|c| !shared.iter().any(|s| s.0 == *c)).collect();
        let mut index: HashMap<Key, Vec<usize>> = HashMap::new();
        for t in 0..rel.len() {
            let k: Key = shared.iter().map(|&(c, _)| value_bits(rel.value(t, c))).collect();
            index.entry(k).or_default().push(t);
        }
        let mut next = Vec::new();
        for row in &rows {
            let k: Key = shared.iter().map(|&(_, b)| value_bits(row[b])).collect();
            if let Some(ts) = index.get(&k) {
                for &t in ts {
                    if next.len() >= budget {
                        return Err(Error::BudgetExceeded { budget });
                    }
                    let mut r = row.clone();
                    r.extend(fresh.iter().map(|&c| rel.value(t, c)));
                    next.push(r);
                }
            }
        }
        bound.extend(fresh.iter().map(|&c| rel.attrs()[c]));
        rows = next;
    }
    let mut order: Vec<usize> = (0..bound.len()).collect();
    order.sort_by_key(|&i| bound[i]);
    let attrs = order.iter().map(|&i| bound[i]).collect();
    let rows = rows.into_iter().map(|r| order.iter().map(|&i| r[i]).collect()).collect();
    Ok((attrs, rows))
}
