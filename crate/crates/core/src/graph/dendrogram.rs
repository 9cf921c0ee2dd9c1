use serde::Serialize;

use super::union_find::UnionFind;
use crate::error::Result;
use crate::returns::{MatrixKind, PairMatrix};

/// One agglomeration. Cluster ids below `n` are leaves; merge `k` creates
/// cluster `n + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MergeStep {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

/// Single-linkage dendrogram in stepwise form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dendrogram {
    n: usize,
    steps: Vec<MergeStep>,
}

impl Dendrogram {
    pub fn n_leaves(&self) -> usize {
        self.n
    }

    pub fn steps(&self) -> &[MergeStep] {
        &self.steps
    }

    /// Merge heights, non-decreasing.
    pub fn heights(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.height).collect()
    }

    /// Clusters obtained by applying every merge with height `<= t`.
    /// Singletons are dropped, so the result lines up with the components of
    /// a threshold graph at `t`.
    pub fn cut(&self, t: f64) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.n);
        // representative leaf of every cluster id
        let mut leaf_of: Vec<usize> = (0..self.n).collect();
        for s in &self.steps {
            let (a, b) = (leaf_of[s.left], leaf_of[s.right]);
            leaf_of.push(a);
            if s.height <= t {
                uf.union(a, b);
            }
        }
        let labels = uf.canonical_labels();
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for (i, &l) in labels.iter().enumerate() {
            groups[l].push(i);
        }
        groups.into_iter().filter(|g| g.len() > 1).collect()
    }
}

/// Single-linkage clustering of a distance matrix, built from a minimum
/// spanning tree (Prim, O(n^2)).
pub fn dendrogram_equivalence(dist: &PairMatrix) -> Result<Dendrogram> {
    dist.expect_kind(MatrixKind::Distance)?;
    let n = dist.len();
    let mut mst: Vec<(f64, usize, usize)> = Vec::with_capacity(n.saturating_sub(1));
    if n > 1 {
        let mut in_tree = vec![false; n];
        let mut best = vec![f64::INFINITY; n];
        let mut parent = vec![0usize; n];
        in_tree[0] = true;
        for (j, b) in best.iter_mut().enumerate().skip(1) {
            *b = dist.get(0, j);
        }
        for _ in 1..n {
            let next = (0..n)
                .filter(|&j| !in_tree[j])
                .min_by(|&a, &b| best[a].total_cmp(&best[b]).then(a.cmp(&b)))
                .expect("vertex left");
            in_tree[next] = true;
            let (a, b) = (parent[next].min(next), parent[next].max(next));
            mst.push((best[next], a, b));
            for j in 0..n {
                if !in_tree[j] && dist.get(next, j) < best[j] {
                    best[j] = dist.get(next, j);
                    parent[j] = next;
                }
            }
        }
    }
    mst.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut uf = UnionFind::new(n);
    let mut cluster_of_root: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut steps = Vec::with_capacity(mst.len());
    for (h, a, b) in mst {
        let (ra, rb) = (uf.find(a), uf.find(b));
        let (ca, cb) = (cluster_of_root[ra], cluster_of_root[rb]);
        let merged = size[ra] + size[rb];
        uf.union(a, b);
        let r = uf.find(a);
        cluster_of_root[r] = n + steps.len();
        size[r] = merged;
        steps.push(MergeStep {
            left: ca.min(cb),
            right: ca.max(cb),
            height: h,
            size: merged,
        });
    }
    Ok(Dendrogram { n, steps })
}
