use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, Matrix};
use crate::math;
use crate::seed::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// in_dim × out_dim
    pub weight: Matrix,
    /// in_dim × out_dim projection, present only when the widths differ.
    pub residual: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    layers: Vec<Layer>,
}

/// Per-pass stochastic masks. Feature masks hold `0` or `1/(1-p)` per entry,
/// one matrix per layer input; the adjacency is the edge-dropped copy.
#[derive(Debug, Clone)]
pub struct DropoutMasks {
    pub features: Vec<Matrix>,
    pub adjacency: CsrMatrix,
}

#[derive(Debug, Clone, Copy)]
pub enum Mode<'a> {
    Eval,
    Train(&'a DropoutMasks),
}

/// Intermediates of a forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Matrix>,
    pre_activations: Vec<Matrix>,
    masks: Option<Vec<Matrix>>,
    adjacency: CsrMatrix,
    pub output: Matrix,
}

/// Gradients in the same layout as the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weight: Vec<Matrix>,
    pub residual: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn zeros_like(model: &GcnModel) -> Self {
        Gradients {
            weight: model.layers.iter().map(|l| Matrix::zeros(l.weight.rows(), l.weight.cols())).collect(),
            residual: model
                .layers
                .iter()
                .map(|l| l.residual.as_ref().map(|r| Matrix::zeros(r.rows(), r.cols())))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.weight.iter_mut().zip(&other.weight) {
            a.add_assign(b);
        }
        for (a, b) in self.residual.iter_mut().zip(&other.residual) {
            if let (Some(a), Some(b)) = (a, b) {
                a.add_assign(b);
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.weight.iter_mut().for_each(|m| m.scale(s));
        self.residual.iter_mut().flatten().for_each(|m| m.scale(s));
    }

    pub fn iter(&self) -> impl Iterator<Item = &Matrix> {
        self.weight.iter().chain(self.residual.iter().flatten())
    }
}

fn glorot(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    let limit = math::sqrt(6.0 / (rows + cols) as f64);
    let data = (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized by construction")
}

impl GcnModel {
    /// Glorot-uniform initialization for dims `[in, hidden…, out]`.
    pub fn new(dims: &[usize], rng: &mut Rng) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Parameter(alloc::format!("invalid layer dims {dims:?}")));
        }
        let layers = dims
            .windows(2)
            .map(|w| {
                let weight = glorot(w[0], w[1], rng);
                let residual = (w[0] != w[1]).then(|| glorot(w[0], w[1], rng));
                Layer { weight, residual }
            })
            .collect();
        Ok(GcnModel { layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Parameter("a model needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            let (i_dim, o_dim) = l.weight.shape();
            match &l.residual {
                Some(r) if r.shape() != (i_dim, o_dim) => {
                    return Err(Error::Shape(alloc::format!("layer {i} projection shape {:?}", r.shape())))
                }
                None if i_dim != o_dim => {
                    return Err(Error::Shape(alloc::format!("layer {i} changes width without a projection")))
                }
                _ => {}
            }
            if i > 0 && layers[i - 1].weight.cols() != i_dim {
                return Err(Error::Shape(alloc::format!("layer {i} input {i_dim} does not chain")));
            }
        }
        Ok(GcnModel { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.layers.iter().map(|l| l.weight.rows()).collect();
        d.push(self.output_dim());
        d
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().weight.cols()
    }

    /// Trainable matrices in a fixed order: all weights, then projections.
    pub fn params_mut(&mut self) -> Vec<&mut Matrix> {
        let mut weights = Vec::new();
        let mut projections = Vec::new();
        for l in &mut self.layers {
            weights.push(&mut l.weight);
            if let Some(r) = &mut l.residual {
                projections.push(r);
            }
        }
        weights.extend(projections);
        weights
    }

    pub fn forward(&self, features: &Matrix, adj: &CsrMatrix, mode: Mode<'_>) -> Result<Matrix> {
        Ok(self.forward_cached(features, adj, mode)?.output)
    }

    pub fn forward_cached(&self, features: &Matrix, adj: &CsrMatrix, mode: Mode<'_>) -> Result<ForwardCache> {
        let n = features.rows();
        if features.cols() != self.input_dim() {
            return Err(Error::Shape(alloc::format!(
                "features have {} columns, model expects {}",
                features.cols(),
                self.input_dim()
            )));
        }
        if adj.n_rows() != n || adj.n_cols() != n {
            return Err(Error::Shape(alloc::format!(
                "adjacency is {}x{} for {n} nodes",
                adj.n_rows(),
                adj.n_cols()
            )));
        }
        let (adjacency, masks) = match mode {
            Mode::Eval => (adj.clone(), None),
            Mode::Train(m) => {
                if m.features.len() != self.layers.len()
                    || m.adjacency.n_rows() != n
                    || m.features.iter().zip(&self.layers).any(|(f, l)| f.shape() != (n, l.weight.rows()))
                {
                    return Err(Error::Shape("dropout masks do not match the model and batch".into()));
                }
                (m.adjacency.clone(), Some(m.features.clone()))
            }
        };
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut h = features.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            if let Some(masks) = &masks {
                for (v, m) in h.as_mut_slice().iter_mut().zip(masks[l].as_slice()) {
                    *v *= m;
                }
            }
            let mut z = adjacency.mul_dense(&h.matmul(&layer.weight));
            match &layer.residual {
                Some(r) => z.add_assign(&h.matmul(r)),
                None => z.add_assign(&h),
            }
            let next = if l < last { z.map(|v| v.max(0.0)) } else { z.clone() };
            inputs.push(h);
            pre_activations.push(z);
            h = next;
        }
        Ok(ForwardCache { inputs, pre_activations, masks, adjacency, output: h })
    }

    /// Backpropagates `d_output` (same shape as the pass output).
    pub fn backward(&self, cache: &ForwardCache, d_output: &Matrix) -> Gradients {
        assert_eq!(d_output.shape(), cache.output.shape(), "gradient shape differs from output");
        let mut grads = Gradients::zeros_like(self);
        let last = self.layers.len() - 1;
        let mut d_h = d_output.clone();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let x = &cache.inputs[l];
            let mut d_z = d_h;
            if l < last {
                for (d, z) in d_z.as_mut_slice().iter_mut().zip(cache.pre_activations[l].as_slice()) {
                    if *z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let d_p = cache.adjacency.t_mul_dense(&d_z);
            grads.weight[l] = x.t_matmul(&d_p);
            let mut d_x = d_p.matmul_t(&layer.weight);
            match &layer.residual {
                Some(r) => {
                    grads.residual[l] = Some(x.t_matmul(&d_z));
                    d_x.add_assign(&d_z.matmul_t(r));
                }
                None => d_x.add_assign(&d_z),
            }
            if l == 0 {
                break;
            }
            if let Some(masks) = &cache.masks {
                for (d, m) in d_x.as_mut_slice().iter_mut().zip(masks[l].as_slice()) {
                    *d *= m;
                }
            }
            d_h = d_x;
        }
        grads
    }
}

impl DropoutMasks {
    /// Inverted-dropout masks for every layer input and an edge-dropped
    /// adjacency. Edges drop symmetrically; self-loops are never dropped.
    pub fn sample(model: &GcnModel, adj: &CsrMatrix, dropout: f64, edge_dropout: f64, rng: &mut Rng) -> Self {
        let n = adj.n_rows();
        let features = model
            .layers()
            .iter()
            .map(|l| {
                let keep = 1.0 - dropout;
                let data = (0..n * l.weight.rows())
                    .map(|_| if dropout == 0.0 || rng.gen::<f64>() >= dropout { 1.0 / keep } else { 0.0 })
                    .collect();
                Matrix::from_vec(n, l.weight.rows(), data).expect("sized by construction")
            })
            .collect();
        let adjacency = if edge_dropout == 0.0 {
            adj.clone()
        } else {
            let scale = 1.0 / (1.0 - edge_dropout);
            let mut kept = alloc::collections::BTreeMap::new();
            for r in 0..n {
                for (c, _) in adj.row_iter(r) {
                    if c > r {
                        kept.insert((r, c), rng.gen::<f64>() >= edge_dropout);
                    }
                }
            }
            let rows = (0..n)
                .map(|r| {
                    adj.row_iter(r)
                        .filter_map(|(c, v)| {
                            if c == r {
                                Some((c, v))
                            } else {
                                let key = (r.min(c), r.max(c));
                                // an entry without a mirror is treated as its own edge
                                kept.get(&key).copied().unwrap_or(true).then_some((c, v * scale))
                            }
                        })
                        .collect()
                })
                .collect();
            CsrMatrix::from_rows(n, rows).expect("same shape as input")
        };
        DropoutMasks { features, adjacency }
    }
}
