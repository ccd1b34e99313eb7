//! Fixtures and brute-force oracles shared by integration tests. Oracles
//! are written independently of the library code they check.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ghtm_core::gcn::{batch_loss_and_grad, BatchInputs, GcnModel, LossConfig, Triplet};
use ghtm_core::graph::{build_knn_graph, DocumentGraph};
use ghtm_core::seed;
use ghtm_core::vectorize::DocEmbeddings;
use ghtm_core::{CsrMatrix, Matrix};
use rand::Rng;

/// Twelve points in two blobs of six around opposite 8-dim centers, with
/// their 3-NN graph.
pub fn two_blobs(seed_value: u64) -> (DocEmbeddings, DocumentGraph) {
    let mut rng = seed::rng(seed_value);
    let rows: Vec<Vec<f64>> = (0..12)
        .map(|i| {
            let sign = if i < 6 { 1.0 } else { -1.0 };
            (0..8).map(|j| sign * (1.0 + 0.1 * j as f64) + rng.gen_range(-0.3..0.3)).collect()
        })
        .collect();
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let x = DocEmbeddings(Matrix::from_rows(&refs).unwrap());
    let g = build_knn_graph(&x, 3).unwrap();
    (x, g)
}

/// Every edge in both orientations, with a negative from the other blob.
pub fn blob_triplets(g: &DocumentGraph) -> Vec<Triplet> {
    let mut out = Vec::new();
    for e in g.edges() {
        for (a, p) in [(e.u, e.v), (e.v, e.u)] {
            let negative = if a < 6 { 6 + (a + p) % 6 } else { (a + p) % 6 };
            out.push(Triplet { anchor: a, positive: p, negative });
        }
    }
    out
}

/// Largest relative error between analytic and central-difference
/// gradients over every trainable entry, with differences below `floor`
/// measured absolutely.
pub fn gradient_check(model: &GcnModel, x: &Matrix, adj: &CsrMatrix, triplets: &[Triplet], loss: &LossConfig, h: f64, floor: f64) -> f64 {
    let inputs = BatchInputs { features: x, adjacency: adj, n_core: x.rows(), triplets };
    let (_, grads) = batch_loss_and_grad(model, inputs, None, loss).unwrap();
    let analytic: Vec<Matrix> = grads.iter().cloned().collect();
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for (p, g) in analytic.iter().enumerate() {
        for i in 0..g.as_slice().len() {
            let value = |m: &mut GcnModel, delta: f64| {
                let orig = m.params_mut()[p].as_slice()[i];
                m.params_mut()[p].as_mut_slice()[i] = orig + delta;
                let l = batch_loss_and_grad(m, inputs, None, loss).unwrap().0;
                m.params_mut()[p].as_mut_slice()[i] = orig;
                l
            };
            let numeric = (value(&mut probe, h) - value(&mut probe, -h)) / (2.0 * h);
            let a = g.as_slice()[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            worst = worst.max(rel);
        }
    }
    worst
}

/// Brute-force KNN: rank all other nodes by cosine (descending, lower index
/// first on ties), keep k, then symmetrize.
pub fn knn_oracle(rows: &[Vec<f64>], k: usize) -> BTreeSet<(usize, usize)> {
    let cos = |a: &[f64], b: &[f64]| {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 { 0.0 } else { (dot / (na * nb)).clamp(-1.0, 1.0) }
    };
    let mut edges = BTreeSet::new();
    for i in 0..rows.len() {
        let mut others: Vec<(f64, usize)> = (0..rows.len()).filter(|&j| j != i).map(|j| (cos(&rows[i], &rows[j]), j)).collect();
        others.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        for &(_, j) in others.iter().take(k) {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    edges
}

/// Enumerates every window explicitly and counts distinct-term presence.
pub fn cooccurrence_oracle(docs: &[Vec<String>], window: usize) -> (u64, BTreeMap<String, u64>, BTreeMap<(String, String), u64>) {
    let mut n = 0;
    let mut single = BTreeMap::new();
    let mut pairs = BTreeMap::new();
    for d in docs {
        if d.is_empty() {
            continue;
        }
        let starts = if d.len() <= window { 1 } else { d.len() - window + 1 };
        for s in 0..starts {
            n += 1;
            let present: BTreeSet<&String> = d[s..(s + window).min(d.len())].iter().collect();
            for a in &present {
                *single.entry((*a).clone()).or_insert(0) += 1;
                for b in &present {
                    if a < b {
                        *pairs.entry(((*a).clone(), (*b).clone())).or_insert(0) += 1;
                    }
                }
            }
        }
    }
    (n, single, pairs)
}

/// `D^{-1/2}(A+I)D^{-1/2}` computed densely from an edge list.
pub fn dense_normalized(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = 1.0;
    }
    for &(u, v) in edges {
        a[u][v] = 1.0;
        a[v][u] = 1.0;
    }
    let d: Vec<f64> = a.iter().map(|r| r.iter().sum::<f64>()).collect();
    (0..n).map(|i| (0..n).map(|j| a[i][j] / (d[i] * d[j]).sqrt()).collect()).collect()
}

/// Uniform random matrix with entries in `[lo, hi)`.
pub fn random_matrix(rng: &mut seed::Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}
