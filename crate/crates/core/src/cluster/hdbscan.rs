//! Exact HDBSCAN over Euclidean distance.
//!
//! Steps: core distances, mutual reachability, Prim's MST on the dense
//! mutual-reachability graph, single-linkage hierarchy, condensed tree,
//! cluster selection. The hierarchy merges all MST edges of equal weight in
//! one step, so a level where three components join at once yields one node
//! with three children. Clusters therefore are exactly the connected
//! components of the mutual-reachability graph at each level, independent of
//! which minimum spanning tree Prim happens to return.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{ClusterAssignment, ClusterParams, NOISE};
use crate::error::{Error, Result};
use crate::linalg::{euclidean, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Excess of mass.
    #[default]
    Eom,
    /// Leaves of the condensed tree.
    Leaf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HdbscanParams {
    pub min_cluster_size: usize,
    /// Neighbour count for core distances (the point itself counts as the
    /// first neighbour). `None` means `min_cluster_size`.
    pub min_samples: Option<usize>,
    pub selection: Selection,
    /// Whether the root of the condensed tree may be selected.
    pub allow_single_cluster: bool,
}

impl Default for HdbscanParams {
    fn default() -> Self {
        Self {
            min_cluster_size: 5,
            min_samples: None,
            selection: Selection::Eom,
            allow_single_cluster: false,
        }
    }
}

impl HdbscanParams {
    pub fn effective_min_samples(&self) -> usize {
        self.min_samples.unwrap_or(self.min_cluster_size)
    }
}

struct Node {
    children: Vec<usize>,
    dist: f64,
    size: usize,
}

struct Condensed {
    parent: Option<usize>,
    birth: f64,
    children: Vec<usize>,
    stability: f64,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

fn lambda(dist: f64) -> f64 {
    if dist > 0.0 {
        1.0 / dist
    } else {
        f64::INFINITY
    }
}

/// Distance from every point to its `min_samples`-th nearest neighbour,
/// counting the point itself.
pub(crate) fn core_distances(points: &Matrix, min_samples: usize) -> Vec<f64> {
    let n = points.rows();
    let mut row = vec![0.0; n];
    (0..n)
        .map(|i| {
            for (j, r) in row.iter_mut().enumerate() {
                *r = euclidean(points.row(i), points.row(j));
            }
            let (_, kth, _) = row.select_nth_unstable_by(min_samples - 1, f64::total_cmp);
            *kth
        })
        .collect()
}

/// Prim's algorithm on the implicit dense mutual-reachability graph.
fn mst(points: &Matrix, core: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = points.rows();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let w = euclidean(points.row(current), points.row(j))
                .max(core[current])
                .max(core[j]);
            if w < best[j] {
                best[j] = w;
                from[j] = current;
            }
            if next == usize::MAX || best[j] < best[next] {
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((from[next], next, best[next]));
        current = next;
    }
    edges
}

/// Single-linkage hierarchy; points are nodes `0..n`, the last node is the root.
fn hierarchy(n: usize, mut edges: Vec<(usize, usize, f64)>) -> Vec<Node> {
    edges.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.min(a.1).cmp(&b.0.min(b.1))));
    let mut nodes: Vec<Node> = (0..n)
        .map(|_| Node {
            children: Vec::new(),
            dist: 0.0,
            size: 1,
        })
        .collect();
    let mut uf = UnionFind::new(n);
    let mut comp_node: Vec<usize> = (0..n).collect();
    let mut start = 0;
    while start < edges.len() {
        let w = edges[start].2;
        let mut end = start;
        while end < edges.len() && edges[end].2 == w {
            end += 1;
        }
        let pairs: Vec<(usize, usize)> = edges[start..end]
            .iter()
            .map(|&(a, b, _)| (uf.find(a), uf.find(b)))
            .collect();
        let mut old_roots: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        old_roots.sort_unstable();
        old_roots.dedup();
        for &(a, b) in &pairs {
            uf.union(a, b);
        }
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        for &r in &old_roots {
            let new_root = uf.find(r);
            match groups.iter_mut().find(|(g, _)| *g == new_root) {
                Some((_, members)) => members.push(r),
                None => groups.push((new_root, vec![r])),
            }
        }
        for (new_root, members) in groups {
            let children: Vec<usize> = members.iter().map(|&r| comp_node[r]).collect();
            let size = children.iter().map(|&c| nodes[c].size).sum();
            nodes.push(Node {
                children,
                dist: w,
                size,
            });
            comp_node[new_root] = nodes.len() - 1;
        }
        start = end;
    }
    nodes
}

fn leaves_of(nodes: &[Node], node: usize, out: &mut Vec<usize>) {
    let mut stack = vec![node];
    while let Some(x) = stack.pop() {
        if nodes[x].children.is_empty() {
            out.push(x);
        } else {
            stack.extend(nodes[x].children.iter().copied());
        }
    }
}

/// Builds the condensed tree. Returns clusters plus, for every point, the
/// cluster it last belonged to and the lambda at which it left.
fn condense(
    nodes: &[Node],
    n: usize,
    min_cluster_size: usize,
) -> (Vec<Condensed>, Vec<usize>, Vec<f64>) {
    let mut clusters = vec![Condensed {
        parent: None,
        birth: 0.0,
        children: Vec::new(),
        stability: 0.0,
    }];
    let mut exit_cluster = vec![0usize; n];
    let mut exit_lambda = vec![0.0; n];
    let mut buf = Vec::new();
    let mut stack = vec![(nodes.len() - 1, 0usize)];
    while let Some((mut node, cid)) = stack.pop() {
        loop {
            let lam = lambda(nodes[node].dist);
            let birth = clusters[cid].birth;
            let (big, small): (Vec<usize>, Vec<usize>) = nodes[node]
                .children
                .iter()
                .partition(|&&c| nodes[c].size >= min_cluster_size);
            let falling: Vec<usize> = if big.is_empty() {
                nodes[node].children.clone()
            } else {
                small
            };
            for c in falling {
                buf.clear();
                leaves_of(nodes, c, &mut buf);
                for &p in &buf {
                    exit_cluster[p] = cid;
                    exit_lambda[p] = lam;
                    clusters[cid].stability += lam - birth;
                }
            }
            match big.len() {
                0 => break,
                1 => node = big[0],
                _ => {
                    for &c in &big {
                        let id = clusters.len();
                        clusters.push(Condensed {
                            parent: Some(cid),
                            birth: lam,
                            children: Vec::new(),
                            stability: 0.0,
                        });
                        clusters[cid].children.push(id);
                        clusters[cid].stability += nodes[c].size as f64 * (lam - birth);
                        stack.push((c, id));
                    }
                    break;
                }
            }
        }
    }
    (clusters, exit_cluster, exit_lambda)
}

fn deselect_descendants(clusters: &[Condensed], root: usize, selected: &mut [bool]) {
    let mut stack: Vec<usize> = clusters[root].children.clone();
    while let Some(c) = stack.pop() {
        selected[c] = false;
        stack.extend(clusters[c].children.iter().copied());
    }
}

fn select(clusters: &[Condensed], params: &HdbscanParams) -> Vec<bool> {
    let count = clusters.len();
    let mut selected = vec![false; count];
    match params.selection {
        Selection::Leaf => {
            for c in 0..count {
                selected[c] = clusters[c].children.is_empty();
            }
            if !params.allow_single_cluster {
                selected[0] = false;
            }
        }
        Selection::Eom => {
            let first = usize::from(!params.allow_single_cluster);
            let mut score: Vec<f64> = clusters.iter().map(|c| c.stability).collect();
            selected[first..].iter_mut().for_each(|s| *s = true);
            // Children always have larger ids than their parent.
            for c in (first..count).rev() {
                let subtree: f64 = clusters[c].children.iter().map(|&ch| score[ch]).sum();
                if subtree > score[c] {
                    selected[c] = false;
                    score[c] = subtree;
                } else {
                    deselect_descendants(clusters, c, &mut selected);
                }
            }
        }
    }
    selected
}

pub fn hdbscan(points: &Matrix, params: &HdbscanParams) -> Result<ClusterAssignment> {
    let n = points.rows();
    let wrap = |labels: Vec<i64>| {
        ClusterAssignment::from_labels(labels, ClusterParams::Hdbscan(params.clone()))
    };
    if n == 0 {
        return Err(Error::TooFewRows { need: 1, got: 0 });
    }
    if let Some((row, col)) = points.first_non_finite() {
        return Err(Error::NonFinite {
            what: "points",
            row,
            col,
        });
    }
    if params.min_cluster_size < 2 {
        return Err(Error::Config("min_cluster_size must be at least 2".into()));
    }
    let min_samples = params.effective_min_samples();
    if min_samples == 0 {
        return Err(Error::Config("min_samples must be at least 1".into()));
    }
    if n < params.min_cluster_size {
        return Ok(wrap(vec![NOISE; n]));
    }
    if min_samples > n {
        return Err(Error::Config(alloc::format!(
            "min_samples = {min_samples} exceeds the number of points {n}"
        )));
    }

    let core = core_distances(points, min_samples);
    let nodes = hierarchy(n, mst(points, &core));
    let (clusters, exit_cluster, exit_lambda) = condense(&nodes, n, params.min_cluster_size);
    let selected = select(&clusters, params);

    // A selected root only keeps the points that stay until its last event.
    let root_keep = if selected[0] {
        let last = (0..n)
            .filter(|&p| exit_cluster[p] == 0)
            .map(|p| exit_lambda[p])
            .chain(clusters[0].children.iter().map(|&c| clusters[c].birth))
            .fold(f64::NEG_INFINITY, f64::max);
        Some(last)
    } else {
        None
    };

    let labels = (0..n)
        .map(|p| {
            let mut c = exit_cluster[p];
            loop {
                if selected[c] {
                    if c == 0 && exit_cluster[p] == 0 {
                        return match root_keep {
                            Some(last) if exit_lambda[p] >= last => 0,
                            _ => NOISE,
                        };
                    }
                    return c as i64;
                }
                match clusters[c].parent {
                    Some(parent) => c = parent,
                    None => return NOISE,
                }
            }
        })
        .collect();
    Ok(wrap(labels))
}
