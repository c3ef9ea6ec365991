//! Counting and uniform sampling of join results inside axis-parallel rectangles.
//!
//! Every query filters the base relations by the rectangle and runs one
//! bottom-up counting pass over the join tree. Sampling then descends the tree,
//! splitting the requested number of samples among child tuples in proportion
//! to their subtree counts. A split of `c` samples over a group is done either
//! by `c` independent draws or by a chain of binomials, whichever touches fewer
//! tuples; both produce the same multinomial law as `c` independent descents.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::points::value_bits;
use crate::relational::{all_tuples, count_pass, edge_key, key_of, Database, JoinTree, Key, Relation};

/// Closed intervals per attribute; unconstrained attributes span the whole line.
#[derive(Debug, Clone, PartialEq)]
pub struct Rect {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Rect {
    pub fn unbounded(dim: usize) -> Self {
        Self { lo: vec![f64::NEG_INFINITY; dim], hi: vec![f64::INFINITY; dim] }
    }

    /// Constrains `attr` to `[lo, hi]`.
    pub fn with(mut self, attr: usize, lo: f64, hi: f64) -> Self {
        self.constrain(attr, lo, hi);
        self
    }

    pub fn constrain(&mut self, attr: usize, lo: f64, hi: f64) {
        assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        self.lo[attr] = lo;
        self.hi[attr] = hi;
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn interval(&self, attr: usize) -> (f64, f64) {
        (self.lo[attr], self.hi[attr])
    }

    pub fn is_constrained(&self, attr: usize) -> bool {
        self.lo[attr] > f64::NEG_INFINITY || self.hi[attr] < f64::INFINITY
    }

    /// Membership of a full tuple (one value per global attribute).
    pub fn contains(&self, tuple: &[f64]) -> bool {
        tuple.iter().enumerate().all(|(a, &v)| self.lo[a] <= v && v <= self.hi[a])
    }
}

/// Work counters shared by every query issued through one engine.
#[derive(Debug, Default)]
pub struct Probe {
    rect_queries: AtomicU64,
    tuples_touched: AtomicU64,
    samples_drawn: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProbeStats {
    pub rect_queries: u64,
    pub tuples_touched: u64,
    pub samples_drawn: u64,
}

impl ProbeStats {
    /// Work done since `earlier`.
    pub fn since(&self, earlier: &ProbeStats) -> ProbeStats {
        ProbeStats {
            rect_queries: self.rect_queries - earlier.rect_queries,
            tuples_touched: self.tuples_touched - earlier.tuples_touched,
            samples_drawn: self.samples_drawn - earlier.samples_drawn,
        }
    }
}

impl Probe {
    pub fn stats(&self) -> ProbeStats {
        ProbeStats {
            rect_queries: self.rect_queries.load(Ordering::Relaxed),
            tuples_touched: self.tuples_touched.load(Ordering::Relaxed),
            samples_drawn: self.samples_drawn.load(Ordering::Relaxed),
        }
    }

    /// Saturates instead of wrapping; sample counts can reach `u64::MAX`.
    fn record_samples(&self, n: u64) {
        let _ = self.samples_drawn.fetch_update(Ordering::Relaxed, Ordering::Relaxed, |v| Some(v.saturating_add(n)));
    }

    pub(crate) fn touch(&self, n: u64) {
        self.tuples_touched.fetch_add(n, Ordering::Relaxed);
    }
}

/// A multiset of join-result tuples stored as distinct entries with multiplicities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSet {
    pub attrs: Vec<usize>,
    pub entries: Vec<(Vec<f64>, u64)>,
    pub seed: Option<u64>,
}

impl SampleSet {
    pub fn len(&self) -> u64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every sample, repeated by multiplicity.
    pub fn expanded(&self) -> Vec<Vec<f64>> {
        self.entries
            .iter()
            .flat_map(|(t, c)| std::iter::repeat_n(t.clone(), *c as usize))
            .collect()
    }
}

/// Multiset projection onto `attrs` (global indices, in the order given).
/// Cardinality is preserved and no entries are merged.
pub fn project_samples(samples: &SampleSet, attrs: &[usize]) -> SampleSet {
    let cols: Vec<usize> = attrs
        .iter()
        .map(|a| samples.attrs.iter().position(|b| b == a).expect("projection onto a sampled attribute"))
        .collect();
    SampleSet {
        attrs: attrs.to_vec(),
        entries: samples
            .entries
            .iter()
            .map(|(t, c)| (cols.iter().map(|&i| t[i]).collect(), *c))
            .collect(),
        seed: samples.seed,
    }
}

/// Surviving tuple indices of one relation, using its sorted columns to scan
/// only the most selective constrained range.
fn filter_relation(rel: &Relation, rect: &Rect, probe: &Probe) -> Vec<u32> {
    let n = rel.len();
    let mut ranges = Vec::new();
    for (col, &attr) in rel.attrs().iter().enumerate() {
        if n == 0 || !rect.is_constrained(attr) {
            continue;
        }
        let (lo, hi) = rect.interval(attr);
        let sorted = rel.sorted_column(col);
        let min = rel.value(sorted[0] as usize, col);
        let max = rel.value(sorted[n - 1] as usize, col);
        if lo <= min && max <= hi {
            continue;
        }
        let start = sorted.partition_point(|&t| rel.value(t as usize, col) < lo);
        let end = sorted.partition_point(|&t| rel.value(t as usize, col) <= hi);
        ranges.push((col, lo, hi, start, end.max(start)));
    }
    let Some(&(best, _, _, start, end)) = ranges.iter().min_by_key(|r| r.4 - r.3) else {
        probe.touch(n as u64);
        return (0..n as u32).collect();
    };
    probe.touch((end - start) as u64);
    let mut keep: Vec<u32> = rel.sorted_column(best)[start..end]
        .iter()
        .copied()
        .filter(|&t| {
            ranges
                .iter()
                .all(|&(c, lo, hi, _, _)| c == best || (lo..=hi).contains(&rel.value(t as usize, c)))
        })
        .collect();
    keep.sort_unstable();
    keep
}

/// Drops every base tuple that lies outside the rectangle on its own attributes.
pub fn filter_by_rect(db: &Database, rect: &Rect) -> Database {
    let probe = Probe::default();
    let keep: Vec<Vec<u32>> = db.relations().iter().map(|r| filter_relation(r, rect, &probe)).collect();
    db.restrict(&keep)
}

pub fn count_rect(db: &Database, tree: &JoinTree, rect: &Rect) -> Result<u64> {
    RectEngine::new(db, tree.clone()).count(rect)
}

pub fn sample_rect(db: &Database, tree: &JoinTree, rect: &Rect, z: u64, seed: u64) -> Result<SampleSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = RectEngine::new(db, tree.clone()).sample(rect, z, &mut rng)?;
    out.seed = Some(seed);
    Ok(out)
}

type GroupKey = SmallVec<[i64; 4]>;
const UNSET: i64 = i64::MIN;
const UNSET_BITS: u64 = u64::MAX;

/// Projected values per output slot and pending join keys per relation.
type SampleState = (Vec<u64>, Vec<Option<Key>>);
/// Values a tuple sets plus its join keys towards relevant children.
type Signature = (Vec<(usize, u64)>, Vec<Key>);

/// Rectangle queries over one instance and one join tree, with shared work counters.
#[derive(Debug)]
pub struct RectEngine<'a> {
    db: &'a Database,
    tree: JoinTree,
    probe: Probe,
}

impl<'a> RectEngine<'a> {
    pub fn new(db: &'a Database, tree: JoinTree) -> Self {
        Self { db, tree, probe: Probe::default() }
    }

    pub fn db(&self) -> &Database {
        self.db
    }

    pub fn tree(&self) -> &JoinTree {
        &self.tree
    }

    pub fn probe(&self) -> &Probe {
        &self.probe
    }

    fn survivors(&self, rect: &Rect) -> Vec<Vec<u32>> {
        self.probe.rect_queries.fetch_add(1, Ordering::Relaxed);
        self.db.relations().iter().map(|r| filter_relation(r, rect, &self.probe)).collect()
    }

    /// `|q(D) ∩ rect|`.
    pub fn count(&self, rect: &Rect) -> Result<u64> {
        let keep = self.survivors(rect);
        Ok(count_pass(self.db, &self.tree, &keep)?.total)
    }

    /// `z` i.i.d. uniform samples (with replacement) from `q(D) ∩ rect`.
    pub fn sample(&self, rect: &Rect, z: u64, rng: &mut impl Rng) -> Result<SampleSet> {
        let attrs: Vec<usize> = (0..self.db.dim()).collect();
        self.sample_projected(rect, z, &attrs, rng)
    }

    /// Like [`RectEngine::sample`] followed by [`project_samples`] onto `attrs`,
    /// without materializing full tuples.
    ///
    /// Draws are split over distinct (projected values, child join keys)
    /// signatures rather than over tuples, and subtrees holding none of
    /// `attrs` are never descended, so the work is bounded by the number of
    /// distinct signatures instead of the number of sampled join results.
    pub fn sample_projected(&self, rect: &Rect, z: u64, attrs: &[usize], rng: &mut impl Rng) -> Result<SampleSet> {
        if z == 0 {
            return Ok(SampleSet { attrs: attrs.to_vec(), entries: Vec::new(), seed: None });
        }
        let keep = self.survivors(rect);
        let pass = count_pass(self.db, &self.tree, &keep)?;
        if pass.total == 0 {
            return Err(Error::EmptyRegion { requested: z });
        }
        self.probe.record_samples(z);
        let db = self.db;
        let tree = &self.tree;
        let m = db.relations().len();
        let order = tree.pre_order();

        // owned[r] = (output slot, column) pairs read at relation r.
        let mut owned: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
        for (slot, &a) in attrs.iter().enumerate() {
            let r = *order
                .iter()
                .find(|&&r| db.relation(r).position(a).is_some())
                .ok_or_else(|| Error::SchemaMismatch(format!("no relation holds attribute {a}")))?;
            owned[r].push((slot, db.relation(r).position(a).expect("holder")));
        }
        let mut relevant = vec![false; m];
        for r in tree.post_order() {
            relevant[r] = !owned[r].is_empty() || tree.children(r).iter().any(|&c| relevant[c]);
        }
        let edge_keys: Vec<Option<_>> = (0..m).map(|r| tree.parent(r).map(|p| edge_key(db, r, p))).collect();

        // Live tuples of each relation grouped by their key towards the parent.
        let mut members: Vec<HashMap<Key, Vec<(u32, u64)>>> = vec![HashMap::new(); m];
        for r in 0..m {
            if !relevant[r] {
                continue;
            }
            let rel = db.relation(r);
            for (&t, &w) in keep[r].iter().zip(&pass.weights[r]) {
                if w > 0 {
                    let key = edge_keys[r].as_ref().map_or_else(Key::new, |ek| key_of(rel, t as usize, &ek.child_cols));
                    members[r].entry(key).or_default().push((t, w));
                }
            }
        }

        let mut states: BTreeMap<SampleState, u64> = BTreeMap::new();
        states.insert((vec![UNSET_BITS; attrs.len()], vec![None; m]), z);
        let root = tree.root();
        for r in order {
            if !relevant[r] {
                continue;
            }
            let rel = db.relation(r);
            let child_cols: Vec<(usize, Vec<usize>)> = tree
                .children(r)
                .iter()
                .filter(|&&c| relevant[c])
                .map(|&c| (c, edge_key(db, c, r).parent_cols))
                .collect();
            let mut groups: HashMap<Key, (Vec<Signature>, WeightedGroup)> = HashMap::new();
            let mut next: BTreeMap<SampleState, u64> = BTreeMap::new();
            for ((values, mut pending), c) in std::mem::take(&mut states) {
                let key = if r == root { Key::new() } else { pending[r].take().expect("parent recorded the key") };
                if !groups.contains_key(&key) {
                    let list = members[r].get(&key).expect("positive weight implies a matching child");
                    self.probe.touch(list.len() as u64);
                    let mut by_sig: BTreeMap<Signature, u64> = BTreeMap::new();
                    for &(t, w) in list {
                        let own: Vec<(usize, u64)> =
                            owned[r].iter().map(|&(slot, col)| (slot, value_bits(rel.value(t as usize, col)))).collect();
                        let keys: Vec<Key> = child_cols.iter().map(|(_, cols)| key_of(rel, t as usize, cols)).collect();
                        *by_sig.entry((own, keys)).or_insert(0) += w;
                    }
                    let mut group = WeightedGroup::default();
                    let mut sigs = Vec::with_capacity(by_sig.len());
                    for (i, (sig, w)) in by_sig.into_iter().enumerate() {
                        group.add(i as u32, w);
                        sigs.push(sig);
                    }
                    groups.insert(key.clone(), (sigs, group));
                }
                let (sigs, group) = &groups[&key];
                for (i, ct) in group.split(c, rng, &self.probe) {
                    let (own, keys) = &sigs[i as usize];
                    let mut values = values.clone();
                    for &(slot, bits) in own {
                        values[slot] = bits;
                    }
                    let mut pending = pending.clone();
                    for ((child, _), k) in child_cols.iter().zip(keys) {
                        pending[*child] = Some(k.clone());
                    }
                    *next.entry((values, pending)).or_insert(0) += ct;
                }
            }
            states = next;
        }

        let mut entries: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
        for ((values, _), c) in states {
            *entries.entry(values).or_insert(0) += c;
        }
        let entries = entries.into_iter().map(|(bits, c)| (bits.into_iter().map(f64::from_bits).collect(), c)).collect();
        Ok(SampleSet { attrs: attrs.to_vec(), entries, seed: None })
    }

    /// Counts join results in `rect` grouped by per-attribute keys.
    ///
    /// `key(i, v)` maps the value `v` of `group_attrs[i]` to its group key, or
    /// `None` to exclude the tuple. Each group attribute is evaluated once, in
    /// the relation holding it closest to the root, so the pass never
    /// enumerates join results: its cost is the base tuples plus the number of
    /// distinct partial keys.
    pub fn grouped_count(
        &self,
        rect: &Rect,
        group_attrs: &[usize],
        key: &dyn Fn(usize, f64) -> Option<i64>,
    ) -> Result<BTreeMap<Vec<i64>, u64>> {
        let db = self.db;
        let tree = &self.tree;
        let keep = self.survivors(rect);
        let order = tree.pre_order();
        let m = db.relations().len();
        let g = group_attrs.len();

        // owned[r] = (group position, column) pairs evaluated at relation r.
        let mut owned: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
        for (gi, &a) in group_attrs.iter().enumerate() {
            let r = *order
                .iter()
                .find(|&&r| db.relation(r).position(a).is_some())
                .ok_or_else(|| Error::SchemaMismatch(format!("no relation holds attribute {a}")))?;
            owned[r].push((gi, db.relation(r).position(a).expect("holder")));
        }

        let mut messages: Vec<HashMap<Key, HashMap<GroupKey, u64>>> = vec![HashMap::new(); m];
        let mut result: HashMap<GroupKey, u64> = HashMap::new();
        for r in tree.post_order() {
            let rel = db.relation(r);
            let child_keys: Vec<_> = tree.children(r).iter().map(|&c| (c, edge_key(db, c, r))).collect();
            let up = tree.parent(r).map(|p| edge_key(db, r, p));
            let mut out: HashMap<Key, HashMap<GroupKey, u64>> = HashMap::new();
            'tuples: for &t in &keep[r] {
                let mut own: GroupKey = SmallVec::from_elem(UNSET, g);
                for &(gi, col) in &owned[r] {
                    match key(gi, rel.value(t as usize, col)) {
                        Some(k) => own[gi] = k,
                        None => continue 'tuples,
                    }
                }
                let mut combos: Vec<(GroupKey, u64)> = vec![(own, 1)];
                for (c, ek) in &child_keys {
                    let Some(msg) = messages[*c].get(&key_of(rel, t as usize, &ek.parent_cols)) else {
                        continue 'tuples;
                    };
                    let mut next = Vec::with_capacity(combos.len() * msg.len());
                    for (partial, cnt) in &combos {
                        for (child_partial, ccnt) in msg {
                            let mut merged = partial.clone();
                            for (slot, &v) in merged.iter_mut().zip(child_partial) {
                                if v != UNSET {
                                    *slot = v;
                                }
                            }
                            next.push((merged, cnt.checked_mul(*ccnt).ok_or(Error::Overflow)?));
                        }
                    }
                    combos = next;
                }
                let target = match &up {
                    Some(ek) => out.entry(key_of(rel, t as usize, &ek.child_cols)).or_default(),
                    None => &mut result,
                };
                for (k, c) in combos {
                    let slot = target.entry(k).or_insert(0);
                    *slot = slot.checked_add(c).ok_or(Error::Overflow)?;
                }
            }
            messages[r] = out;
            for &c in tree.children(r) {
                messages[c] = HashMap::new();
            }
        }
        Ok(result.into_iter().map(|(k, c)| (k.into_vec(), c)).collect())
    }

    /// Total join size; the unbounded rectangle.
    pub fn count_all(&self) -> Result<u64> {
        Ok(count_pass(self.db, &self.tree, &all_tuples(self.db))?.total)
    }
}

/// Tuples of one join group with cumulative subtree weights.
#[derive(Debug, Clone, Default)]
struct WeightedGroup {
    tuples: Vec<u32>,
    cumulative: Vec<u64>,
}

impl WeightedGroup {
    fn add(&mut self, t: u32, w: u64) {
        let prev = self.cumulative.last().copied().unwrap_or(0);
        self.tuples.push(t);
        self.cumulative.push(prev + w);
    }

    fn total(&self) -> u64 {
        self.cumulative.last().copied().unwrap_or(0)
    }

    /// Multinomial split of `count` samples over the group.
    fn split(&self, count: u64, rng: &mut impl Rng, probe: &Probe) -> Vec<(u32, u64)> {
        let total = self.total();
        if count <= self.tuples.len() as u64 {
            probe.touch(count);
            let mut hits: BTreeMap<usize, u64> = BTreeMap::new();
            for _ in 0..count {
                let x = rng.random_range(0..total);
                *hits.entry(self.cumulative.partition_point(|&c| c <= x)).or_insert(0) += 1;
            }
            return hits.into_iter().map(|(i, c)| (self.tuples[i], c)).collect();
        }
        let mut out = Vec::new();
        let mut left = count;
        let mut left_weight = total;
        let mut prev = 0u64;
        for (i, &cum) in self.cumulative.iter().enumerate() {
            if left == 0 {
                break;
            }
            probe.touch(1);
            let w = cum - prev;
            prev = cum;
            let x = if w == left_weight {
                left
            } else {
                let p = (w as f64 / left_weight as f64).min(1.0);
                Binomial::new(left, p).expect("valid binomial").sample(rng)
            };
            if x > 0 {
                out.push((self.tuples[i], x));
            }
            left -= x;
            left_weight -= w;
        }
        out
    }
}

/// Exact-equality hash key of a tuple.
pub fn tuple_key(t: &[f64]) -> Vec<u64> {
    t.iter().map(|&v| value_bits(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relational::build_join_tree;

    fn db0() -> Database {
        Database::from_rows(
            &["A", "B", "C"],
            vec![
                ("R1", vec!["A", "B"], vec![vec![0., 0.], vec![1., 0.], vec![4., 2.]]),
                ("R2", vec!["B", "C"], vec![vec![0., 1.], vec![0., 3.], vec![2., 5.]]),
            ],
        )
        .unwrap()
    }

    fn tree(db: &Database) -> JoinTree {
        build_join_tree(&db.query()).unwrap()
    }

    #[test]
    fn test_filter_examples() {
        let db = db0();
        let f = filter_by_rect(&db, &Rect::unbounded(3).with(0, 0., 1.));
        assert_eq!(f.relation(0).len(), 2);
        assert_eq!(f.relation(1).len(), 3);
        let same = filter_by_rect(&db, &Rect::unbounded(3));
        assert_eq!(same.relation(0).len(), 3);
        let none = filter_by_rect(&db, &Rect::unbounded(3).with(1, 3., 3.));
        assert!(none.relations().iter().all(Relation::is_empty));
    }

    #[test]
    fn test_count_examples() {
        let db = db0();
        let t = tree(&db);
        assert_eq!(count_rect(&db, &t, &Rect::unbounded(3).with(0, 0., 1.).with(2, 1., 3.)).unwrap(), 4);
        assert_eq!(count_rect(&db, &t, &Rect::unbounded(3).with(2, 5., 5.)).unwrap(), 1);
        assert_eq!(count_rect(&db, &t, &Rect::unbounded(3).with(0, 100., 100.)).unwrap(), 0);
    }

    #[test]
    fn test_sample_examples() {
        let db = db0();
        let t = tree(&db);
        let empty = sample_rect(&db, &t, &Rect::unbounded(3), 0, 1).unwrap();
        assert_eq!(empty.len(), 0);
        let single = sample_rect(&db, &t, &Rect::unbounded(3).with(2, 5., 5.), 50, 3).unwrap();
        assert_eq!(single.len(), 50);
        assert_eq!(single.entries, vec![(vec![4., 2., 5.], 50)]);
        assert_eq!(
            sample_rect(&db, &t, &Rect::unbounded(3).with(0, 100., 100.), 1, 1),
            Err(Error::EmptyRegion { requested: 1 })
        );
    }

    #[test]
    fn test_sample_frequencies_within_three_sigma() {
        let db = db0();
        let t = tree(&db);
        let z = 10_000u64;
        let s = sample_rect(&db, &t, &Rect::unbounded(3), z, 11).unwrap();
        assert_eq!(s.len(), z);
        assert_eq!(s.entries.len(), 5);
        let sigma = (z as f64 * 0.2 * 0.8).sqrt();
        for (_, c) in &s.entries {
            assert!((*c as f64 - 2000.0).abs() <= 3.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn test_sampling_is_reproducible() {
        let db = db0();
        let t = tree(&db);
        let a = sample_rect(&db, &t, &Rect::unbounded(3), 37, 5).unwrap();
        let b = sample_rect(&db, &t, &Rect::unbounded(3), 37, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn test_huge_sample_counts_are_cheap() {
        let db = db0();
        let t = tree(&db);
        let s = sample_rect(&db, &t, &Rect::unbounded(3), 1 << 60, 2).unwrap();
        assert_eq!(s.len(), 1 << 60);
        for (_, c) in &s.entries {
            let f = *c as f64 / (1u64 << 60) as f64;
            assert!((f - 0.2).abs() < 1e-6);
        }
    }

    #[test]
    fn test_projected_sampling_matches_projection_law() {
        let db = db0();
        let engine = RectEngine::new(&db, tree(&db));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z = 1u64 << 60;
        let s = engine.sample_projected(&Rect::unbounded(3), z, &[1], &mut rng).unwrap();
        assert_eq!(s.attrs, vec![1]);
        assert_eq!(s.len(), z);
        assert_eq!(s.entries.len(), 2);
        let share = s.entries[0].1 as f64 / z as f64;
        assert_eq!(s.entries[0].0, vec![0.]);
        assert!((share - 0.8).abs() < 1e-6);

        let before = engine.probe().stats();
        let c = engine.sample_projected(&Rect::unbounded(3), 1000, &[2, 0], &mut rng).unwrap();
        assert!(engine.probe().stats().since(&before).tuples_touched <= 20);
        assert_eq!(c.len(), 1000);
        assert!(c.entries.iter().all(|(p, _)| p.len() == 2));
        let none = engine.sample_projected(&Rect::unbounded(3), 7, &[], &mut rng).unwrap();
        assert_eq!(none.entries, vec![(vec![], 7)]);
    }

    #[test]
    fn test_projection_examples() {
        let s = SampleSet {
            attrs: vec![0, 1, 2],
            entries: vec![(vec![0., 0., 1.], 1), (vec![1., 0., 3.], 1)],
            seed: None,
        };
        let p = project_samples(&s, &[1]);
        assert_eq!(p.expanded(), vec![vec![0.], vec![0.]]);
        assert_eq!(project_samples(&s, &[0, 1, 2]), s);
        assert_eq!(project_samples(&SampleSet::default(), &[]).len(), 0);
    }

    #[test]
    fn test_grouped_count_matches_counts() {
        let db = db0();
        let engine = RectEngine::new(&db, tree(&db));
        let groups = engine
            .grouped_count(&Rect::unbounded(3), &[0, 2], &|_, v| Some((v >= 2.0) as i64))
            .unwrap();
        // (A<2, C<2): (0,_,1),(1,_,1); (A<2, C>=2): (0,_,3),(1,_,3); (A>=2, C>=2): (4,2,5)
        assert_eq!(groups.get(&vec![0, 0]), Some(&2));
        assert_eq!(groups.get(&vec![0, 1]), Some(&2));
        assert_eq!(groups.get(&vec![1, 1]), Some(&1));
        assert_eq!(groups.values().sum::<u64>(), 5);
        let none = engine.grouped_count(&Rect::unbounded(3), &[1], &|_, _| None).unwrap();
        assert!(none.is_empty());
    }
}
