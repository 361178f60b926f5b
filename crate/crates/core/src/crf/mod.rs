//! Linear-chain CRF over combined labels and the factorial CRF over
//! separate labels.
//!
//! Feature templates, per label `j`:
//! * emission: feature value `x_d(t)` times `[a^t = j]`;
//! * transition: `[a^{t-1} = i, a^t = j]`;
//! * bias: `[a^t = j]`;
//! * initial: `[a^1 = j]`.
//!
//! Training minimizes the unregularized negative conditional log-likelihood
//! with L-BFGS starting from zero weights. The factorial CRF is handled by
//! merging the co-temporal labels of all residents into one variable per
//! step, which turns it into a single chain over `∏ K^m` states with exact
//! inference.

mod factorial;
pub mod lbfgs;

pub use factorial::{
    fcrf_decode, fcrf_decode_merged, fcrf_forward_backward, fcrf_objective_with, train_fcrf, train_fcrf_with,
    FcrfParams,
};
pub use lbfgs::{LbfgsConfig, LbfgsReport, Termination};

use ndarray::{Array2, ArrayView1};

use crate::chain::{self, ChainMarginals, ChainPotentials};
use crate::datamodel::{Dataset, Observation};
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::tables::{Block, TableFile};

/// Stacks observation features into a `T × D` matrix.
pub fn feature_matrix(obs: &[Observation]) -> Array2<f64> {
    let dim = obs.first().map_or(0, |o| o.features.len());
    Array2::from_shape_fn((obs.len(), dim), |(t, d)| obs[t].features[d])
}

/// A weight layout that scores a chain of (possibly merged) labels.
pub(crate) trait ChainLayout: Sync {
    fn n_weights(&self) -> usize;
    fn potentials(&self, w: &[f64], x: &Array2<f64>) -> ChainPotentials;
    /// Adds `E[f] - f(truth)` to `grad`.
    fn add_gradient(
        &self,
        x: &Array2<f64>,
        pot: &ChainPotentials,
        fb: &ChainMarginals,
        truth: &[usize],
        grad: &mut [f64],
    );
}

/// One training sequence: features and combined (merged) labels.
pub(crate) struct ChainExample {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
}

pub(crate) fn examples(ds: &Dataset) -> Result<Vec<ChainExample>> {
    ds.instances
        .iter()
        .map(|i| Ok(ChainExample { x: feature_matrix(&i.observations), y: i.combined_labels(&ds.label_space)? }))
        .collect()
}

/// Negative log-likelihood and its gradient, summed over the batch in
/// instance order.
pub(crate) fn chain_objective<L: ChainLayout>(
    layout: &L,
    w: &[f64],
    batch: &[ChainExample],
    exec: Exec,
) -> (f64, Vec<f64>) {
    let parts = exec.map(batch, |ex| {
        let pot = layout.potentials(w, &ex.x);
        let fb = chain::forward_backward(&pot);
        let nll = fb.log_z - pot.path_score(&ex.y);
        let mut g = vec![0.0; layout.n_weights()];
        layout.add_gradient(&ex.x, &pot, &fb, &ex.y, &mut g);
        (nll, g)
    });
    let mut nll = 0.0;
    let mut grad = vec![0.0; layout.n_weights()];
    for (n, g) in parts {
        nll += n;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    (nll, grad)
}

pub(crate) fn train_chain<L: ChainLayout>(
    layout: &L,
    batch: &[ChainExample],
    cfg: &LbfgsConfig,
    exec: Exec,
) -> Result<(Vec<f64>, LbfgsReport)> {
    if batch.is_empty() {
        return Err(Error::Config("empty training set".into()));
    }
    let x0 = vec![0.0; layout.n_weights()];
    lbfgs::minimize(|w| chain_objective(layout, w, batch, exec), x0, cfg)
}

/// Weight blocks of the combined-label CRF, stored contiguously as
/// `[emit (D×J) | trans (J×J) | bias (J) | init (J)]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct CrfLayout {
    pub dim: usize,
    pub labels: usize,
}

impl CrfLayout {
    fn trans_offset(&self) -> usize {
        self.dim * self.labels
    }
    fn bias_offset(&self) -> usize {
        self.trans_offset() + self.labels * self.labels
    }
    fn init_offset(&self) -> usize {
        self.bias_offset() + self.labels
    }
}

impl ChainLayout for CrfLayout {
    fn n_weights(&self) -> usize {
        self.init_offset() + self.labels
    }

    fn potentials(&self, w: &[f64], x: &Array2<f64>) -> ChainPotentials {
        let (d, j) = (self.dim, self.labels);
        let emit = ArrayView1::from(&w[..d * j]).into_shape_with_order((d, j)).expect("emit block");
        let bias = &w[self.bias_offset()..self.init_offset()];
        let mut node = x.dot(&emit);
        for mut row in node.rows_mut() {
            row.iter_mut().zip(bias).for_each(|(v, b)| *v += b);
        }
        let trans = Array2::from_shape_vec((j, j), w[self.trans_offset()..self.bias_offset()].to_vec())
            .expect("trans block");
        ChainPotentials { init: w[self.init_offset()..].to_vec(), trans, node }
    }

    fn add_gradient(
        &self,
        x: &Array2<f64>,
        pot: &ChainPotentials,
        fb: &ChainMarginals,
        truth: &[usize],
        grad: &mut [f64],
    ) {
        let j = self.labels;
        let mut resid = fb.node_marginals();
        for (t, &y) in truth.iter().enumerate() {
            resid[[t, y]] -= 1.0;
        }
        let emit = x.t().dot(&resid);
        grad[..self.dim * j].iter_mut().zip(emit.iter()).for_each(|(g, v)| *g += v);
        let trans = fb.expected_transitions(pot);
        let off = self.trans_offset();
        grad[off..off + j * j].iter_mut().zip(trans.iter()).for_each(|(g, v)| *g += v);
        for w in truth.windows(2) {
            grad[off + w[0] * j + w[1]] -= 1.0;
        }
        let off = self.bias_offset();
        for col in 0..j {
            grad[off + col] += resid.column(col).sum();
        }
        let off = self.init_offset();
        for col in 0..j {
            grad[off + col] += resid[[0, col]];
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrfParams {
    layout: CrfLayout,
    weights: Vec<f64>,
}

impl CrfParams {
    pub fn zeros(dim: usize, labels: usize) -> Self {
        let layout = CrfLayout { dim, labels };
        Self { weights: vec![0.0; layout.n_weights()], layout }
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn labels(&self) -> usize {
        self.layout.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn emit_mut(&mut self, d: usize, j: usize) -> &mut f64 {
        &mut self.weights[d * self.layout.labels + j]
    }

    pub fn trans_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let off = self.layout.trans_offset();
        &mut self.weights[off + i * self.layout.labels + j]
    }

    pub fn bias_mut(&mut self, j: usize) -> &mut f64 {
        let off = self.layout.bias_offset();
        &mut self.weights[off + j]
    }

    pub fn init_mut(&mut self, j: usize) -> &mut f64 {
        let off = self.layout.init_offset();
        &mut self.weights[off + j]
    }

    pub fn potentials(&self, obs: &[Observation]) -> ChainPotentials {
        self.layout.potentials(&self.weights, &feature_matrix(obs))
    }

    pub fn to_table(&self) -> TableFile {
        let (d, j) = (self.dim(), self.labels());
        let w = &self.weights;
        let l = &self.layout;
        let mut f = TableFile::new("crf");
        f.set("D", d)
            .set("J", j)
            .push("emit", Block { rows: d, cols: j, data: w[..l.trans_offset()].to_vec() })
            .push("trans", Block { rows: j, cols: j, data: w[l.trans_offset()..l.bias_offset()].to_vec() })
            .push("bias", Block::vector(&w[l.bias_offset()..l.init_offset()]))
            .push("init", Block::vector(&w[l.init_offset()..]));
        f
    }

    pub fn from_table(f: &TableFile) -> Result<Self> {
        if f.kind != "crf" {
            return Err(Error::Config(format!("expected a crf model, found {}", f.kind)));
        }
        let (d, j): (usize, usize) = (f.parse("D")?, f.parse("J")?);
        let mut weights = f.block_shaped("emit", d, j)?.data.clone();
        weights.extend(&f.block_shaped("trans", j, j)?.data);
        weights.extend(&f.block_shaped("bias", 1, j)?.data);
        weights.extend(&f.block_shaped("init", 1, j)?.data);
        Ok(Self { layout: CrfLayout { dim: d, labels: j }, weights })
    }
}

/// Log-partition function with node and edge marginals.
#[derive(Clone, Debug)]
pub struct CrfInference {
    pub log_z: f64,
    /// `T × J`.
    pub node: Array2<f64>,
    /// `edges[t - 1]` holds `p(a^{t-1} = i, a^t = j)` for `t ≥ 1`.
    pub edges: Vec<Array2<f64>>,
}

pub(crate) fn inference(pot: &ChainPotentials) -> CrfInference {
    let fb = chain::forward_backward(pot);
    CrfInference {
        log_z: fb.log_z,
        node: fb.node_marginals(),
        edges: (1..pot.len()).map(|t| fb.edge_marginal(pot, t)).collect(),
    }
}

pub fn crf_forward_backward(params: &CrfParams, obs: &[Observation]) -> CrfInference {
    inference(&params.potentials(obs))
}

/// `(Σ_instances −log p(a|o), ∇)`; the gradient has the weight layout of
/// [`CrfParams::weights`].
pub fn crf_objective(params: &CrfParams, batch: &Dataset) -> Result<(f64, Vec<f64>)> {
    crf_objective_with(params, batch, Exec::default())
}

pub fn crf_objective_with(params: &CrfParams, batch: &Dataset, exec: Exec) -> Result<(f64, Vec<f64>)> {
    check_shape(params.dim(), params.labels(), batch)?;
    Ok(chain_objective(&params.layout, &params.weights, &examples(batch)?, exec))
}

fn check_shape(dim: usize, labels: usize, ds: &Dataset) -> Result<()> {
    if ds.dim() != dim || ds.label_space.combined_size() != labels {
        return Err(Error::Config(format!(
            "model expects D={dim}, J={labels}; data has D={}, J={}",
            ds.dim(),
            ds.label_space.combined_size()
        )));
    }
    Ok(())
}

pub fn train_crf(train: &Dataset, max_iter: usize) -> Result<(CrfParams, LbfgsReport)> {
    let cfg = LbfgsConfig { max_iter, ..Default::default() };
    train_crf_with(train, &cfg, Exec::default())
}

pub fn train_crf_with(train: &Dataset, cfg: &LbfgsConfig, exec: Exec) -> Result<(CrfParams, LbfgsReport)> {
    let layout = CrfLayout { dim: train.dim(), labels: train.label_space.combined_size() };
    let (weights, report) = train_chain(&layout, &examples(train)?, cfg, exec)?;
    Ok((CrfParams { layout, weights }, report))
}

/// Exact Viterbi path over combined labels.
pub fn crf_decode(params: &CrfParams, obs: &[Observation]) -> Vec<usize> {
    let pot = params.potentials(obs);
    chain::viterbi(&pot.init, pot.trans.view(), pot.node.view()).1
}
