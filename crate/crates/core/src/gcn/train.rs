use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::adam::Adam;
use super::loss::{contrastive_loss_grad, hinge_loss_grad, sample_negatives, Triplet};
use super::model::{DropoutMasks, GcnModel, Gradients, Mode};
use crate::error::{Error, Result};
use crate::graph::{cluster_batch, ClusterBatch, ClusterPartition, DocumentGraph, NormalizedAdjacency};
use crate::linalg::{CsrMatrix, Matrix};
use crate::seed;
use crate::vectorize::DocEmbeddings;

/// Training hyperparameters. Defaults follow the reference setup: 100
/// epochs, learning rate 0.005, dropout 0.4, edge dropout 0.2, output width
/// 64, two hidden layers of 32.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub edge_dropout: f64,
    pub margin: f64,
    pub temperature: f64,
    pub hinge_weight: f64,
    pub contrastive_weight: f64,
    pub negatives_per_edge: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
    /// Number of Cluster-GCN partitions; `None` means "use the topic count".
    pub num_clusters: Option<usize>,
    pub seed: u64,
    /// Record a dropout-free loss after every epoch.
    pub track_loss: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            learning_rate: 0.005,
            dropout: 0.4,
            edge_dropout: 0.2,
            margin: 0.5,
            temperature: 0.5,
            hinge_weight: 1.0,
            contrastive_weight: 1.0,
            negatives_per_edge: 1,
            hidden_dims: vec![32, 32],
            output_dim: 64,
            num_clusters: None,
            seed: 0,
            track_loss: false,
        }
    }
}

impl TrainConfig {
    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Parameter(msg.into()));
        if !(0.0..1.0).contains(&self.dropout) || !(0.0..1.0).contains(&self.edge_dropout) {
            return bad("dropout and edge_dropout must lie in [0, 1)");
        }
        if !(self.margin > 0.0) || !(self.temperature > 0.0) {
            return bad("margin and temperature must be positive");
        }
        if !(self.hinge_weight >= 0.0) || !(self.contrastive_weight >= 0.0) {
            return bad("loss weights must be non-negative");
        }
        if self.negatives_per_edge == 0 {
            return bad("negatives_per_edge must be at least 1");
        }
        if self.output_dim == 0 || self.hidden_dims.contains(&0) {
            return bad("layer widths must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }

    pub fn loss(&self) -> LossConfig {
        LossConfig {
            margin: self.margin,
            temperature: self.temperature,
            hinge_weight: self.hinge_weight,
            contrastive_weight: self.contrastive_weight,
        }
    }

    pub fn layer_dims(&self, input_dim: usize) -> Vec<usize> {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(&self.hidden_dims);
        dims.push(self.output_dim);
        dims
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub margin: f64,
    pub temperature: f64,
    pub hinge_weight: f64,
    pub contrastive_weight: f64,
}

/// One batch in local node order: the first `n_core` rows are core nodes.
/// Triplets index local rows.
#[derive(Debug, Clone, Copy)]
pub struct BatchInputs<'a> {
    pub features: &'a Matrix,
    pub adjacency: &'a CsrMatrix,
    pub n_core: usize,
    pub triplets: &'a [Triplet],
}

/// Joint loss of one batch and its exact gradient. `masks` supplies the two
/// stochastic views; `None` runs both views dropout-free (they coincide).
pub fn batch_loss_and_grad(
    model: &GcnModel,
    batch: BatchInputs<'_>,
    masks: Option<(&DropoutMasks, &DropoutMasks)>,
    loss: &LossConfig,
) -> Result<(f64, Gradients)> {
    let (mode1, mode2) = match masks {
        Some((a, b)) => (Mode::Train(a), Mode::Train(b)),
        None => (Mode::Eval, Mode::Eval),
    };
    let cache1 = model.forward_cached(batch.features, batch.adjacency, mode1)?;
    let cache2 = match masks {
        Some(_) => Some(model.forward_cached(batch.features, batch.adjacency, mode2)?),
        None => None,
    };
    let out1 = &cache1.output;
    let out2 = cache2.as_ref().map_or(out1, |c| &c.output);
    let core: Vec<usize> = (0..batch.n_core).collect();
    let (lh, gh) = hinge_loss_grad(out1, batch.triplets, loss.margin);
    let (lc, g1, g2) = contrastive_loss_grad(&out1.select_rows(&core), &out2.select_rows(&core), loss.temperature);
    let total = loss.hinge_weight * lh + loss.contrastive_weight * lc;

    let mut d1 = gh;
    d1.scale(loss.hinge_weight);
    let mut d2 = Matrix::zeros(out1.rows(), out1.cols());
    for i in 0..batch.n_core {
        for (d, g) in d1.row_mut(i).iter_mut().zip(g1.row(i)) {
            *d += loss.contrastive_weight * g;
        }
        for (d, g) in d2.row_mut(i).iter_mut().zip(g2.row(i)) {
            *d += loss.contrastive_weight * g;
        }
    }
    let grads = match &cache2 {
        Some(c2) => {
            let mut g = model.backward(&cache1, &d1);
            g.add_assign(&model.backward(c2, &d2));
            g
        }
        None => {
            d1.add_assign(&d2);
            model.backward(&cache1, &d1)
        }
    };
    Ok((total, grads))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedEmbeddings(pub Matrix);

impl RefinedEmbeddings {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: GcnModel,
    pub embeddings: RefinedEmbeddings,
    /// Dropout-free joint loss after each epoch (empty unless tracked).
    pub epoch_losses: Vec<f64>,
}

struct PreparedBatch {
    nodes: Vec<usize>,
    n_core: usize,
    adjacency: CsrMatrix,
    features: Matrix,
    /// Global (anchor, positive) pairs with a core anchor.
    positives: Vec<(usize, usize)>,
}

fn prepare(batch: ClusterBatch, adj: &NormalizedAdjacency, features: &Matrix, partition: &ClusterPartition, id: usize) -> PreparedBatch {
    let nodes = batch.nodes();
    let mut positives = Vec::new();
    for &(u, v) in &batch.edges {
        if partition.cluster_of(u) == id {
            positives.push((u, v));
        }
        if partition.cluster_of(v) == id {
            positives.push((v, u));
        }
    }
    positives.sort_unstable();
    PreparedBatch {
        n_core: batch.core.len(),
        adjacency: adj.restrict(&batch),
        features: features.select_rows(&nodes),
        nodes,
        positives,
    }
}

fn localize(triplets: &[Triplet], nodes: &[usize]) -> Vec<Triplet> {
    let lookup: alloc::collections::BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(l, &g)| (g, l)).collect();
    triplets
        .iter()
        .map(|t| Triplet { anchor: lookup[&t.anchor], positive: lookup[&t.positive], negative: lookup[&t.negative] })
        .collect()
}

/// Trains and returns only the refined embeddings.
pub fn train(
    features: &DocEmbeddings,
    g: &DocumentGraph,
    adj: &NormalizedAdjacency,
    partition: &ClusterPartition,
    config: &TrainConfig,
) -> Result<RefinedEmbeddings> {
    Ok(train_model(features, g, adj, partition, config)?.embeddings)
}

pub fn train_model(
    features: &DocEmbeddings,
    g: &DocumentGraph,
    adj: &NormalizedAdjacency,
    partition: &ClusterPartition,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let n = features.n_docs();
    if g.n_nodes() != n || adj.matrix().n_rows() != n || partition.assignment().len() != n {
        return Err(Error::Shape(alloc::format!(
            "features ({n} rows), graph ({} nodes), adjacency ({}) and partition ({}) disagree",
            g.n_nodes(),
            adj.matrix().n_rows(),
            partition.assignment().len()
        )));
    }
    let mut init_rng = seed::rng(seed::derive(config.seed, "gcn/init"));
    let mut rng = seed::rng(seed::derive(config.seed, "gcn/train"));
    let mut model = GcnModel::new(&config.layer_dims(features.dim()), &mut init_rng)?;
    let loss_cfg = config.loss();
    let batches: Vec<PreparedBatch> = (0..partition.num_clusters())
        .map(|c| Ok(prepare(cluster_batch(g, partition, c)?, adj, features.matrix(), partition, c)))
        .collect::<Result<_>>()?;

    let mut optimizer = Adam::new(config.learning_rate);
    let mut order: Vec<usize> = (0..batches.len()).collect();
    let mut epoch_losses = Vec::new();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for &b in &order {
            let batch = &batches[b];
            let triplets = sample_negatives(g, &batch.nodes, &batch.positives, config.negatives_per_edge, &mut rng);
            let triplets = localize(&triplets, &batch.nodes);
            let m1 = DropoutMasks::sample(&model, &batch.adjacency, config.dropout, config.edge_dropout, &mut rng);
            let m2 = DropoutMasks::sample(&model, &batch.adjacency, config.dropout, config.edge_dropout, &mut rng);
            let inputs = BatchInputs {
                features: &batch.features,
                adjacency: &batch.adjacency,
                n_core: batch.n_core,
                triplets: &triplets,
            };
            let (loss, grads) = batch_loss_and_grad(&model, inputs, Some((&m1, &m2)), &loss_cfg)?;
            if !loss.is_finite() || !grads.iter().all(Matrix::is_finite) {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            optimizer.step(model.params_mut(), grads.iter());
        }
        if config.track_loss {
            epoch_losses.push(evaluation_loss(&model, g, &batches, config)?);
        }
    }

    let out = model.forward(features.matrix(), adj.matrix(), Mode::Eval)?;
    if !out.is_finite() {
        return Err(Error::NonFiniteLoss { epoch: config.epochs, batch: usize::MAX });
    }
    Ok(TrainOutcome { model, embeddings: RefinedEmbeddings(out), epoch_losses })
}

/// Dropout-free joint loss averaged over batches, with negatives drawn from
/// a fixed stream so that successive epochs are comparable.
fn evaluation_loss(model: &GcnModel, g: &DocumentGraph, batches: &[PreparedBatch], config: &TrainConfig) -> Result<f64> {
    let mut rng = seed::rng(seed::derive(config.seed, "gcn/eval"));
    let loss_cfg = config.loss();
    let mut total = 0.0;
    for batch in batches {
        let triplets = sample_negatives(g, &batch.nodes, &batch.positives, config.negatives_per_edge, &mut rng);
        let triplets = localize(&triplets, &batch.nodes);
        let inputs = BatchInputs {
            features: &batch.features,
            adjacency: &batch.adjacency,
            n_core: batch.n_core,
            triplets: &triplets,
        };
        total += batch_loss_and_grad(model, inputs, None, &loss_cfg)?.0;
    }
    Ok(total / batches.len() as f64)
}
