use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::graph::DocumentGraph;
use crate::linalg::{dot, norm, Matrix};
use crate::math;
use crate::seed::Rng;

/// An anchor, one of its graph neighbors, and a sampled non-neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triplet {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
}

/// Cosine similarity and its gradients with respect to both inputs.
/// Zero vectors give similarity 0 and zero gradients.
fn cosine_grad(a: &[f64], b: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return (0.0, vec![0.0; a.len()], vec![0.0; b.len()]);
    }
    let c = dot(a, b) / (na * nb);
    let ga = a.iter().zip(b).map(|(x, y)| y / (na * nb) - c * x / (na * na)).collect();
    let gb = a.iter().zip(b).map(|(x, y)| x / (na * nb) - c * y / (nb * nb)).collect();
    (c, ga, gb)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    crate::graph::cosine_similarity(a, b)
}

/// Mean of `max(0, margin − cos(z_a, z_p) + cos(z_a, z_n))` over triplets.
pub fn hinge_loss(emb: &Matrix, triplets: &[Triplet], margin: f64) -> f64 {
    if triplets.is_empty() {
        return 0.0;
    }
    let total: f64 = triplets
        .iter()
        .map(|t| {
            let a = emb.row(t.anchor);
            (margin - cosine(a, emb.row(t.positive)) + cosine(a, emb.row(t.negative))).max(0.0)
        })
        .sum();
    total / triplets.len() as f64
}

/// [`hinge_loss`] together with its gradient with respect to `emb`.
pub fn hinge_loss_grad(emb: &Matrix, triplets: &[Triplet], margin: f64) -> (f64, Matrix) {
    let mut grad = Matrix::zeros(emb.rows(), emb.cols());
    if triplets.is_empty() {
        return (0.0, grad);
    }
    let scale = 1.0 / triplets.len() as f64;
    let mut total = 0.0;
    for t in triplets {
        let a = emb.row(t.anchor);
        let (cp, ga_p, gp) = cosine_grad(a, emb.row(t.positive));
        let (cn, ga_n, gn) = cosine_grad(a, emb.row(t.negative));
        let term = margin - cp + cn;
        if term <= 0.0 {
            continue;
        }
        total += term;
        for (j, (x, y)) in ga_p.iter().zip(&ga_n).enumerate() {
            grad.row_mut(t.anchor)[j] += scale * (y - x);
        }
        for (g, v) in grad.row_mut(t.positive).iter_mut().zip(&gp) {
            *g -= scale * v;
        }
        for (g, v) in grad.row_mut(t.negative).iter_mut().zip(&gn) {
            *g += scale * v;
        }
    }
    (total * scale, grad)
}

struct Normalized {
    unit: Matrix,
    norms: Vec<f64>,
}

fn normalize_rows(z: &Matrix) -> Normalized {
    let mut unit = z.clone();
    let norms = (0..z.rows())
        .map(|i| {
            let n = norm(z.row(i));
            if n > 0.0 {
                unit.row_mut(i).iter_mut().for_each(|v| *v /= n);
            }
            n
        })
        .collect();
    Normalized { unit, norms }
}

fn stack(a: &Matrix, b: &Matrix) -> Matrix {
    let mut data = a.as_slice().to_vec();
    data.extend_from_slice(b.as_slice());
    Matrix::from_vec(a.rows() + b.rows(), a.cols(), data).expect("same width")
}

/// Per-anchor softmax probabilities over the other `2m − 1` rows, and the
/// loss. Row `i` of the result is the distribution for anchor `i`.
fn ntxent_core(unit: &Matrix, temperature: f64) -> (f64, Matrix) {
    let n2 = unit.rows();
    let m = n2 / 2;
    let sims = unit.matmul_t(unit);
    let mut probs = Matrix::zeros(n2, n2);
    let mut loss = 0.0;
    for i in 0..n2 {
        let pos = if i < m { i + m } else { i - m };
        let logits: Vec<f64> = (0..n2).map(|j| sims.get(i, j) / temperature).collect();
        let max = (0..n2).filter(|&j| j != i).map(|j| logits[j]).fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = (0..n2).filter(|&j| j != i).map(|j| math::exp(logits[j] - max)).sum();
        let lse = max + math::ln(denom);
        loss += lse - logits[pos];
        for j in (0..n2).filter(|&j| j != i) {
            probs.set(i, j, math::exp(logits[j] - lse));
        }
    }
    (loss / n2 as f64, probs)
}

/// Symmetric two-view normalized-temperature cross-entropy. Row `i` of
/// `view1` and row `i` of `view2` form the positive pair; every other row of
/// either view is a negative. Batches smaller than two give 0.
pub fn contrastive_loss(view1: &Matrix, view2: &Matrix, temperature: f64) -> f64 {
    assert_eq!(view1.shape(), view2.shape(), "views must have equal shape");
    if view1.rows() < 2 {
        return 0.0;
    }
    let z = normalize_rows(&stack(view1, view2));
    ntxent_core(&z.unit, temperature).0
}

/// [`contrastive_loss`] with gradients for both views.
pub fn contrastive_loss_grad(view1: &Matrix, view2: &Matrix, temperature: f64) -> (f64, Matrix, Matrix) {
    assert_eq!(view1.shape(), view2.shape(), "views must have equal shape");
    let (m, d) = view1.shape();
    if m < 2 {
        return (0.0, Matrix::zeros(m, d), Matrix::zeros(m, d));
    }
    let n2 = 2 * m;
    let z = normalize_rows(&stack(view1, view2));
    let (loss, probs) = ntxent_core(&z.unit, temperature);
    // dL/dS_ij with S the temperature-scaled similarity matrix
    let mut g = probs;
    for i in 0..n2 {
        let pos = if i < m { i + m } else { i - m };
        let v = g.get(i, pos) - 1.0;
        g.set(i, pos, v);
    }
    g.scale(1.0 / n2 as f64);
    let mut sym = g.transpose();
    sym.add_assign(&g);
    let mut d_unit = sym.matmul(&z.unit);
    d_unit.scale(1.0 / temperature);
    let mut d_z = Matrix::zeros(n2, d);
    for i in 0..n2 {
        if z.norms[i] == 0.0 {
            continue;
        }
        let u = z.unit.row(i);
        let du = d_unit.row(i);
        let proj = dot(u, du);
        for (o, (uv, dv)) in d_z.row_mut(i).iter_mut().zip(u.iter().zip(du)) {
            *o = (dv - uv * proj) / z.norms[i];
        }
    }
    let data = d_z.into_vec();
    let (a, b) = data.split_at(m * d);
    (
        loss,
        Matrix::from_vec(m, d, a.to_vec()).expect("sized"),
        Matrix::from_vec(m, d, b.to_vec()).expect("sized"),
    )
}

/// For each positive `(anchor, positive)`, draws `count_per_edge` negatives
/// uniformly from `candidates` that are neither the anchor nor one of its
/// graph neighbors. Anchors with no valid candidate are skipped.
///
/// All node ids are global graph indices.
pub fn sample_negatives(
    g: &DocumentGraph,
    candidates: &[usize],
    positives: &[(usize, usize)],
    count_per_edge: usize,
    rng: &mut Rng,
) -> Vec<Triplet> {
    let pool: BTreeSet<usize> = candidates.iter().copied().collect();
    let mut cached: Option<(usize, Vec<usize>)> = None;
    let mut out = Vec::with_capacity(positives.len() * count_per_edge);
    for &(anchor, positive) in positives {
        if cached.as_ref().map(|c| c.0) != Some(anchor) {
            let valid = pool.iter().copied().filter(|&n| n != anchor && !g.has_edge(anchor, n)).collect();
            cached = Some((anchor, valid));
        }
        let valid = &cached.as_ref().unwrap().1;
        if valid.is_empty() {
            continue;
        }
        for _ in 0..count_per_edge {
            let negative = valid[rng.gen_range(0..valid.len())];
            out.push(Triplet { anchor, positive, negative });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use crate::seed;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn hinge_examples() {
        // rows: anchor, positive, negative
        let e = m(&[&[1.0, 0.0], &[2.0, 0.0], &[-1.0, 0.0]]);
        let t = [Triplet { anchor: 0, positive: 1, negative: 2 }];
        assert_eq!(hinge_loss(&e, &t, 0.5), 0.0);

        let e = m(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 3.0]]);
        assert!((hinge_loss(&e, &t, 0.5) - 0.5).abs() < 1e-15);

        // cos(a,p)=0.2, cos(a,n)=0.4
        let p = [0.2, libm::sqrt(1.0 - 0.04)];
        let n = [0.4, libm::sqrt(1.0 - 0.16)];
        let e = m(&[&[1.0, 0.0], &p, &n]);
        assert!((hinge_loss(&e, &t, 0.5) - 0.7).abs() < 1e-12);
        assert_eq!(hinge_loss(&e, &[], 0.5), 0.0);
    }

    #[test]
    fn contrastive_examples() {
        assert_eq!(contrastive_loss(&m(&[&[1.0, 2.0]]), &m(&[&[3.0, 1.0]]), 0.5), 0.0);

        let v = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let e = core::f64::consts::E;
        let expected = -libm::log(e / (e + 2.0));
        assert!((contrastive_loss(&v, &v, 1.0) - expected).abs() < 1e-12);
        assert!((expected - 0.5514).abs() < 1e-4);

        let mut scaled = v.clone();
        scaled.scale(7.5);
        assert!((contrastive_loss(&scaled, &scaled, 1.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn negative_sampling_examples() {
        let edges = |list: &[(usize, usize)]| list.iter().map(|&(u, v)| Edge { u, v, weight: 1.0 }).collect::<Vec<_>>();
        let mut rng = seed::rng(0);

        let complete = DocumentGraph::from_edges(3, edges(&[(0, 1), (0, 2), (1, 2)])).unwrap();
        assert!(sample_negatives(&complete, &[0, 1, 2], &[(0, 1), (1, 2)], 2, &mut rng).is_empty());

        // star centered at 0; leaf 1 has non-neighbors 2 and 3, restrict pool to {0,1,3}
        let star = DocumentGraph::from_edges(4, edges(&[(0, 1), (0, 2), (0, 3)])).unwrap();
        let t = sample_negatives(&star, &[0, 1, 3], &[(1, 0)], 5, &mut rng);
        assert_eq!(t.len(), 5);
        assert!(t.iter().all(|t| t.negative == 3));

        let path = DocumentGraph::from_edges(3, edges(&[(0, 1), (1, 2)])).unwrap();
        let t = sample_negatives(&path, &[0, 1, 2], &[(0, 1)], 1, &mut rng);
        assert_eq!(t, vec![Triplet { anchor: 0, positive: 1, negative: 2 }]);
    }

    fn numeric_grad(f: impl Fn(&Matrix) -> f64, x: &Matrix) -> Matrix {
        let h = 1e-6;
        let mut g = Matrix::zeros(x.rows(), x.cols());
        for i in 0..x.as_slice().len() {
            let mut p = x.clone();
            p.as_mut_slice()[i] += h;
            let mut q = x.clone();
            q.as_mut_slice()[i] -= h;
            g.as_mut_slice()[i] = (f(&p) - f(&q)) / (2.0 * h);
        }
        g
    }

    fn close(a: &Matrix, b: &Matrix, tol: f64) -> bool {
        a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
    }

    #[test]
    fn hinge_gradient_matches_differences() {
        let e = m(&[&[0.3, -1.0, 0.5], &[0.9, 0.2, -0.4], &[-0.2, 0.7, 0.1], &[0.5, 0.5, 0.5]]);
        let t = [
            Triplet { anchor: 0, positive: 1, negative: 2 },
            Triplet { anchor: 1, positive: 3, negative: 0 },
            Triplet { anchor: 3, positive: 0, negative: 2 },
        ];
        let (l, g) = hinge_loss_grad(&e, &t, 0.5);
        assert!((l - hinge_loss(&e, &t, 0.5)).abs() < 1e-15);
        assert!(close(&g, &numeric_grad(|x| hinge_loss(x, &t, 0.5), &e), 1e-6));
    }

    #[test]
    fn contrastive_gradient_matches_differences() {
        let a = m(&[&[0.3, -1.0, 0.5], &[0.9, 0.2, -0.4], &[-0.2, 0.7, 0.1]]);
        let b = m(&[&[0.1, -0.8, 0.6], &[1.1, 0.1, -0.2], &[-0.3, 0.9, 0.0]]);
        let (l, ga, gb) = contrastive_loss_grad(&a, &b, 0.5);
        assert!((l - contrastive_loss(&a, &b, 0.5)).abs() < 1e-15);
        assert!(close(&ga, &numeric_grad(|x| contrastive_loss(x, &b, 0.5), &a), 1e-6));
        assert!(close(&gb, &numeric_grad(|x| contrastive_loss(&a, x, 0.5), &b), 1e-6));
    }
}
