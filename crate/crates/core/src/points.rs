//! Weighted point sets in a fixed-dimensional attribute subspace.

use std::collections::HashMap;

/// Points stored row-major with one positive weight each.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedPointSet {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedPointSet {
    pub fn new(dim: usize) -> Self {
        Self { dim, coords: Vec::new(), weights: Vec::new() }
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>], weights: &[f64]) -> Self {
        assert_eq!(points.len(), weights.len(), "one weight per point");
        let mut set = Self::new(dim);
        for (p, &w) in points.iter().zip(weights) {
            set.push(p, w);
        }
        set
    }

    pub fn push(&mut self, point: &[f64], weight: f64) {
        assert_eq!(point.len(), self.dim, "point dimension");
        self.coords.extend_from_slice(point);
        self.weights.push(weight);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        (0..self.len()).map(move |i| (self.point(i), self.weights[i]))
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i).to_vec()).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Merges coincident points, summing their weights. First occurrence order is kept.
    pub fn merged(&self) -> Self {
        let mut slot: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut out = Self::new(self.dim);
        for (p, w) in self.iter() {
            let key: Vec<u64> = p.iter().map(|&v| value_bits(v)).collect();
            match slot.get(&key) {
                Some(&i) => out.weights[i] += w,
                None => {
                    slot.insert(key, out.len());
                    out.push(p, w);
                }
            }
        }
        out
    }

    /// Multiplies every coordinate by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            coords: self.coords.iter().map(|v| v * factor).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// Bit pattern used for exact-equality hashing; folds -0.0 onto 0.0.
pub(crate) fn value_bits(v: f64) -> u64 {
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}
