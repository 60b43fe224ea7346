//! Random forest of CART trees, used as an independent negative-suspect
//! family. Label-only: the forest never exposes logits.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::stream;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const DEFAULT_N_TREES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Label counts of the bootstrap samples that reached this leaf;
        /// sums to the number of samples routed here.
        counts: Vec<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Walk to a leaf and return its majority label (ties take the smallest).
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Split { feature, threshold, left, right } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { counts } => {
                    return argmax_u64(counts);
                }
            }
        }
    }
}

fn argmax_u64(counts: &[u64]) -> usize {
    let mut best = 0;
    for (i, v) in counts.iter().enumerate().skip(1) {
        if *v > counts[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub d: usize,
    pub c: usize,
    pub seed: u64,
}

impl Forest {
    /// Majority vote over tree predictions; ties take the smallest label.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.d {
            return Err(Error::Input(format!(
                "input has dimension {}, forest expects {}",
                x.len(),
                self.d
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("input coordinates must be finite".into()));
        }
        let mut votes = vec![0u64; self.c];
        for tree in &self.trees {
            votes[tree.predict(x)] += 1;
        }
        Ok(argmax_u64(&votes))
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"forest");
        h.update(serde_json::to_vec(self).expect("forest serializes"));
        hex::encode(h.finalize())
    }
}

/// Train `n_trees` CART trees on bootstrap samples. Each split considers
/// max(1, floor(sqrt(d))) features and minimizes weighted Gini impurity;
/// nodes grow until pure or until no sampled feature admits a split.
pub fn train_forest(data: &Dataset, n_trees: usize, seed: u64) -> Result<Forest> {
    if n_trees == 0 {
        return Err(Error::Input("forest needs at least one tree".into()));
    }
    let trees: Vec<Tree> = (0..n_trees)
        .map(|t| {
            let mut rng = stream(seed, "tree", t as u64);
            let indices: Vec<usize> = (0..data.len())
                .map(|_| rng.gen_range(0..data.len()))
                .collect();
            let mut nodes = Vec::new();
            build_node(data, &indices, &mut rng, &mut nodes);
            Tree { nodes }
        })
        .collect();
    Ok(Forest { trees, d: data.d, c: data.c, seed })
}

fn gini(counts: &[u64], total: f64) -> f64 {
    1.0 - counts
        .iter()
        .map(|&n| {
            let p = n as f64 / total;
            p * p
        })
        .sum::<f64>()
}

fn build_node(
    data: &Dataset,
    indices: &[usize],
    rng: &mut rand_chacha::ChaCha8Rng,
    nodes: &mut Vec<Node>,
) -> usize {
    let mut counts = vec![0u64; data.c];
    for &i in indices {
        counts[data.labels[i]] += 1;
    }
    let total = indices.len() as f64;
    let is_pure = counts.iter().filter(|&&n| n > 0).count() <= 1;

    let slot = nodes.len();
    nodes.push(Node::Leaf { counts: counts.clone() });
    if is_pure {
        return slot;
    }

    // Sample floor(sqrt(d)) features without replacement, then order by
    // index so tie-breaks don't depend on draw order.
    let m = ((data.d as f64).sqrt().floor() as usize).max(1);
    let mut features: Vec<usize> = (0..data.d).collect();
    features.shuffle(rng);
    features.truncate(m);
    features.sort_unstable();

    let mut best: Option<(f64, usize, f64)> = None; // (weighted gini, feature, threshold)
    for &f in &features {
        let mut vals: Vec<(f64, usize)> = indices
            .iter()
            .map(|&i| (data.points[i][f], data.labels[i]))
            .collect();
        vals.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut left = vec![0u64; data.c];
        let mut right = counts.clone();
        for w in 0..vals.len() - 1 {
            left[vals[w].1] += 1;
            right[vals[w].1] -= 1;
            if vals[w].0 == vals[w + 1].0 {
                continue;
            }
            let nl = (w + 1) as f64;
            let nr = total - nl;
            let score = (nl * gini(&left, nl) + nr * gini(&right, nr)) / total;
            if best.map(|(s, _, _)| score < s).unwrap_or(true) {
                best = Some((score, f, (vals[w].0 + vals[w + 1].0) / 2.0));
            }
        }
    }

    let Some((_, feature, threshold)) = best else {
        return slot; // no sampled feature admits a split
    };
    let left_idx: Vec<usize> = indices
        .iter()
        .copied()
        .filter(|&i| data.points[i][feature] <= threshold)
        .collect();
    let right_idx: Vec<usize> = indices
        .iter()
        .copied()
        .filter(|&i| data.points[i][feature] > threshold)
        .collect();
    let left = build_node(data, &left_idx, rng, nodes);
    let right = build_node(data, &right_idx, rng, nodes);
    nodes[slot] = Node::Split { feature, threshold, left, right };
    slot
}
