//! Cosine KNN document graph, its GCN normalization, and the feature-space
//! partition used to batch training.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, CsrMatrix, Matrix};
use crate::math;
use crate::seed;
use crate::vectorize::DocEmbeddings;

/// `a·b / (‖a‖‖b‖)`, or 0 when either vector is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Undirected graph over documents. Edges are stored once with `u < v`.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentGraph {
    n_nodes: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<usize>>,
}

impl DocumentGraph {
    /// Builds a graph from undirected edges. Self-edges are rejected and
    /// duplicates collapse to the first occurrence.
    pub fn from_edges(n_nodes: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut unique: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for e in edges {
            if e.u == e.v || e.u >= n_nodes || e.v >= n_nodes {
                return Err(Error::Parameter(alloc::format!("invalid edge ({}, {})", e.u, e.v)));
            }
            unique.entry((e.u.min(e.v), e.u.max(e.v))).or_insert(e.weight);
        }
        let mut adjacency = vec![Vec::new(); n_nodes];
        let edges: Vec<Edge> = unique
            .into_iter()
            .map(|((u, v), weight)| {
                adjacency[u].push(v);
                adjacency[v].push(u);
                Edge { u, v, weight }
            })
            .collect();
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(DocumentGraph { n_nodes, edges, adjacency })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }
}

/// Strategy for picking each node's k nearest neighbors. Returns, per node,
/// the selected neighbor indices.
pub trait NeighborSearch {
    fn select(&self, x: &Matrix, k: usize) -> Vec<Vec<usize>>;
}

/// Exhaustive all-pairs cosine search.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactSearch;

impl NeighborSearch for ExactSearch {
    fn select(&self, x: &Matrix, k: usize) -> Vec<Vec<usize>> {
        let n = x.rows();
        let norms: Vec<f64> = (0..n).map(|i| norm(x.row(i))).collect();
        let mut scored: Vec<(f64, usize)> = Vec::with_capacity(n);
        (0..n)
            .map(|i| {
                scored.clear();
                for j in (0..n).filter(|&j| j != i) {
                    let s = if norms[i] == 0.0 || norms[j] == 0.0 {
                        0.0
                    } else {
                        (dot(x.row(i), x.row(j)) / (norms[i] * norms[j])).clamp(-1.0, 1.0)
                    };
                    scored.push((s, j));
                }
                let by_rank = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
                if k < scored.len() {
                    scored.select_nth_unstable_by(k - 1, by_rank);
                    scored.truncate(k);
                }
                scored.sort_by(by_rank);
                scored.iter().map(|&(_, j)| j).collect()
            })
            .collect()
    }
}

/// Union-symmetrized cosine KNN graph (ties go to the lower node index).
pub fn build_knn_graph(x: &DocEmbeddings, k: usize) -> Result<DocumentGraph> {
    build_knn_graph_with(&ExactSearch, x, k)
}

pub fn build_knn_graph_with<S: NeighborSearch>(search: &S, x: &DocEmbeddings, k: usize) -> Result<DocumentGraph> {
    let n = x.n_docs();
    if k == 0 || k >= n {
        return Err(Error::Parameter(alloc::format!("knn k={k} must satisfy 1 <= k < N={n}")));
    }
    let selections = search.select(x.matrix(), k);
    let m = x.matrix();
    let edges = selections.iter().enumerate().flat_map(|(u, nbrs)| {
        nbrs.iter().map(move |&v| Edge { u, v, weight: cosine_similarity(m.row(u), m.row(v)) })
    });
    DocumentGraph::from_edges(n, edges)
}

/// `D̃^{-1/2}(A+I)D̃^{-1/2}` over the binary adjacency, stored sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency(pub CsrMatrix);

impl NormalizedAdjacency {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.0
    }

    /// Adjacency restricted to a batch, in the batch's local node order.
    /// Halo–halo entries are dropped; self-loops are kept for every node.
    pub fn restrict(&self, batch: &ClusterBatch) -> CsrMatrix {
        let nodes = batch.nodes();
        let local: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(l, &g)| (g, l)).collect();
        let n_core = batch.core.len();
        let rows = nodes
            .iter()
            .enumerate()
            .map(|(lu, &u)| {
                self.0
                    .row_iter(u)
                    .filter_map(|(v, w)| {
                        let lv = *local.get(&v)?;
                        (lu == lv || lu < n_core || lv < n_core).then_some((lv, w))
                    })
                    .collect()
            })
            .collect();
        CsrMatrix::from_rows(nodes.len(), rows).expect("local indices in range")
    }
}

pub fn normalize_adjacency(g: &DocumentGraph) -> NormalizedAdjacency {
    let inv_sqrt: Vec<f64> = (0..g.n_nodes).map(|u| 1.0 / math::sqrt((g.degree(u) + 1) as f64)).collect();
    let rows = (0..g.n_nodes)
        .map(|u| {
            let mut row: Vec<(usize, f64)> =
                g.neighbors(u).iter().map(|&v| (v, inv_sqrt[u] * inv_sqrt[v])).collect();
            row.push((u, inv_sqrt[u] * inv_sqrt[u]));
            row
        })
        .collect();
    NormalizedAdjacency(CsrMatrix::from_rows(g.n_nodes, rows).expect("node indices in range"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPartition {
    assignment: Vec<usize>,
    num_clusters: usize,
}

impl ClusterPartition {
    pub fn from_assignment(assignment: Vec<usize>, num_clusters: usize) -> Result<Self> {
        let mut sizes = vec![0usize; num_clusters];
        for &c in &assignment {
            if c >= num_clusters {
                return Err(Error::Parameter(alloc::format!("cluster id {c} >= {num_clusters}")));
            }
            sizes[c] += 1;
        }
        if sizes.contains(&0) {
            return Err(Error::Parameter("every cluster must be non-empty".into()));
        }
        Ok(ClusterPartition { assignment, num_clusters })
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn cluster_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&u| self.assignment[u] == cluster).collect()
    }
}

const KMEANS_MAX_ITERS: usize = 100;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Seeded k-means (k-means++ seeding, Lloyd iterations) on the document
/// embedding rows. Empty clusters take the farthest point of the largest
/// cluster.
pub fn partition_graph(x: &DocEmbeddings, num_clusters: usize, seed: u64) -> Result<ClusterPartition> {
    let n = x.n_docs();
    if num_clusters == 0 || num_clusters > n {
        return Err(Error::Parameter(alloc::format!("num_clusters={num_clusters} must be in 1..={n}")));
    }
    let m = x.matrix();
    let mut rng = seed::rng(seed);

    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(num_clusters);
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen[first] = true;
    centers.push(m.row(first).to_vec());
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(m.row(i), &centers[0])).collect();
    while centers.len() < num_clusters {
        let total: f64 = (0..n).filter(|&i| !chosen[i]).map(|i| d2[i]).sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = None;
            for i in (0..n).filter(|&i| !chosen[i]) {
                target -= d2[i];
                if target < 0.0 && d2[i] > 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| (0..n).rev().find(|&i| !chosen[i] && d2[i] > 0.0).unwrap())
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen[pick] = true;
        centers.push(m.row(pick).to_vec());
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(m.row(i), m.row(pick)));
        }
    }

    let assign = |centers: &[Vec<f64>]| -> Vec<usize> {
        (0..n)
            .map(|i| {
                let mut best = (f64::INFINITY, 0);
                for (c, ctr) in centers.iter().enumerate() {
                    let d = sq_dist(m.row(i), ctr);
                    if d < best.0 {
                        best = (d, c);
                    }
                }
                best.1
            })
            .collect()
    };

    let mut assignment = assign(&centers);
    repair_empty(m, &centers, &mut assignment, num_clusters);
    for _ in 0..KMEANS_MAX_ITERS {
        let mut sums = vec![vec![0.0; m.cols()]; num_clusters];
        let mut counts = vec![0usize; num_clusters];
        for (i, &c) in assignment.iter().enumerate() {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(m.row(i)) {
                *s += v;
            }
        }
        for c in 0..num_clusters {
            for s in &mut sums[c] {
                *s /= counts[c] as f64;
            }
        }
        centers = sums;
        let mut next = assign(&centers);
        repair_empty(m, &centers, &mut next, num_clusters);
        if next == assignment {
            break;
        }
        assignment = next;
    }
    ClusterPartition::from_assignment(assignment, num_clusters)
}

fn repair_empty(m: &Matrix, centers: &[Vec<f64>], assignment: &mut [usize], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &c in assignment.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else { return };
        // largest cluster, lowest id on ties
        let largest = (0..k).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).unwrap();
        let far = (0..assignment.len())
            .filter(|&i| assignment[i] == largest)
            .max_by(|&a, &b| {
                sq_dist(m.row(a), &centers[largest])
                    .total_cmp(&sq_dist(m.row(b), &centers[largest]))
                    .then(b.cmp(&a))
            })
            .unwrap();
        assignment[far] = empty;
    }
}

/// One Cluster-GCN batch: the cluster's own nodes, their out-of-cluster
/// neighbors, and every edge touching a core node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterBatch {
    pub core: Vec<usize>,
    pub halo: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

impl ClusterBatch {
    /// Core nodes followed by halo nodes; this is the batch's local order.
    pub fn nodes(&self) -> Vec<usize> {
        self.core.iter().chain(&self.halo).copied().collect()
    }
}

pub fn cluster_batch(g: &DocumentGraph, partition: &ClusterPartition, cluster_id: usize) -> Result<ClusterBatch> {
    if cluster_id >= partition.num_clusters() {
        return Err(Error::Parameter(alloc::format!(
            "cluster {cluster_id} out of range ({} clusters)",
            partition.num_clusters()
        )));
    }
    let core = partition.members(cluster_id);
    let mut halo = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for &u in &core {
        for &v in g.neighbors(u) {
            if partition.cluster_of(v) != cluster_id {
                halo.insert(v);
            }
            edges.insert((u.min(v), u.max(v)));
        }
    }
    Ok(ClusterBatch { core, halo: halo.into_iter().collect(), edges: edges.into_iter().collect() })
}
