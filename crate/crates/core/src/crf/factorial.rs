use ndarray::{Array2, ArrayView1};

use super::{chain_objective, examples, feature_matrix, train_chain, ChainLayout, CrfParams, LbfgsConfig, LbfgsReport};
use crate::chain::{self, ChainMarginals, ChainPotentials};
use crate::datamodel::{Dataset, LabelSpace, Observation};
use crate::error::{Error, Result};
use crate::hmm::split_path;
use crate::par::Exec;
use crate::tables::{join_usize, Block, TableFile};

#[derive(Clone, Debug, PartialEq, Eq)]
struct ChainBlocks {
    emit: usize,
    trans: usize,
    bias: usize,
    init: usize,
}

/// Per-resident chains (emission, transition, bias and initial blocks) plus
/// one co-temporal pair table for every resident pair `m < m'`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct FcrfLayout {
    dim: usize,
    sizes: Vec<usize>,
    frames: Vec<Vec<usize>>,
    chains: Vec<ChainBlocks>,
    pairs: Vec<(usize, usize, usize)>,
    total: usize,
}

impl FcrfLayout {
    fn new(dim: usize, space: &LabelSpace) -> Self {
        let sizes = space.sizes().to_vec();
        let mut off = 0;
        let mut chains = Vec::new();
        for &k in &sizes {
            let emit = off;
            let trans = emit + dim * k;
            let bias = trans + k * k;
            let init = bias + k;
            off = init + k;
            chains.push(ChainBlocks { emit, trans, bias, init });
        }
        let mut pairs = Vec::new();
        for a in 0..sizes.len() {
            for b in a + 1..sizes.len() {
                pairs.push((a, b, off));
                off += sizes[a] * sizes[b];
            }
        }
        Self { dim, frames: space.frame_table(), sizes, chains, pairs, total: off }
    }

    /// Per-resident node scores `T × K^m`: emission plus bias.
    fn chain_nodes(&self, w: &[f64], x: &Array2<f64>) -> Vec<Array2<f64>> {
        self.chains
            .iter()
            .zip(&self.sizes)
            .map(|(c, &k)| {
                let emit = ArrayView1::from(&w[c.emit..c.emit + self.dim * k])
                    .into_shape_with_order((self.dim, k))
                    .expect("emit block");
                let mut node = x.dot(&emit);
                for mut row in node.rows_mut() {
                    row.iter_mut().zip(&w[c.bias..c.bias + k]).for_each(|(v, b)| *v += b);
                }
                node
            })
            .collect()
    }

    fn pair_score(&self, w: &[f64], frame: &[usize]) -> f64 {
        self.pairs
            .iter()
            .map(|&(a, b, off)| w[off + frame[a] * self.sizes[b] + frame[b]])
            .sum()
    }
}

impl ChainLayout for FcrfLayout {
    fn n_weights(&self) -> usize {
        self.total
    }

    fn potentials(&self, w: &[f64], x: &Array2<f64>) -> ChainPotentials {
        let joint = self.frames.len();
        let nodes = self.chain_nodes(w, x);
        let pair: Vec<f64> = self.frames.iter().map(|f| self.pair_score(w, f)).collect();
        let node = Array2::from_shape_fn((x.nrows(), joint), |(t, j)| {
            let f = &self.frames[j];
            let mut s = 0.0;
            for (m, n) in nodes.iter().enumerate() {
                s += n[[t, f[m]]];
            }
            s + pair[j]
        });
        let init = self
            .frames
            .iter()
            .map(|f| self.chains.iter().enumerate().map(|(m, c)| w[c.init + f[m]]).sum())
            .collect();
        let trans = Array2::from_shape_fn((joint, joint), |(i, j)| {
            let (fi, fj) = (&self.frames[i], &self.frames[j]);
            self.chains
                .iter()
                .enumerate()
                .map(|(m, c)| w[c.trans + fi[m] * self.sizes[m] + fj[m]])
                .sum()
        });
        ChainPotentials { init, trans, node }
    }

    fn add_gradient(
        &self,
        x: &Array2<f64>,
        pot: &ChainPotentials,
        fb: &ChainMarginals,
        truth: &[usize],
        grad: &mut [f64],
    ) {
        let len = x.nrows();
        let joint = self.frames.len();
        let merged = fb.node_marginals();
        // merged node marginals projected onto each resident, minus truth
        for (m, c) in self.chains.iter().enumerate() {
            let k = self.sizes[m];
            let mut resid = Array2::<f64>::zeros((len, k));
            for t in 0..len {
                for j in 0..joint {
                    resid[[t, self.frames[j][m]]] += merged[[t, j]];
                }
                resid[[t, self.frames[truth[t]][m]]] -= 1.0;
            }
            let emit = x.t().dot(&resid);
            grad[c.emit..c.emit + self.dim * k].iter_mut().zip(emit.iter()).for_each(|(g, v)| *g += v);
            for a in 0..k {
                grad[c.bias + a] += resid.column(a).sum();
                grad[c.init + a] += resid[[0, a]];
            }
        }
        let expected = fb.expected_transitions(pot);
        for i in 0..joint {
            for j in 0..joint {
                let e = expected[[i, j]];
                for (m, c) in self.chains.iter().enumerate() {
                    grad[c.trans + self.frames[i][m] * self.sizes[m] + self.frames[j][m]] += e;
                }
            }
        }
        for w in truth.windows(2) {
            let (fi, fj) = (&self.frames[w[0]], &self.frames[w[1]]);
            for (m, c) in self.chains.iter().enumerate() {
                grad[c.trans + fi[m] * self.sizes[m] + fj[m]] -= 1.0;
            }
        }
        if !self.pairs.is_empty() {
            let occupancy: Vec<f64> = (0..joint).map(|j| merged.column(j).sum()).collect();
            for (j, f) in self.frames.iter().enumerate() {
                for &(a, b, off) in &self.pairs {
                    grad[off + f[a] * self.sizes[b] + f[b]] += occupancy[j];
                }
            }
            for &y in truth {
                let f = &self.frames[y];
                for &(a, b, off) in &self.pairs {
                    grad[off + f[a] * self.sizes[b] + f[b]] -= 1.0;
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FcrfParams {
    layout: FcrfLayout,
    space: LabelSpace,
    weights: Vec<f64>,
}

impl FcrfParams {
    pub fn zeros(dim: usize, space: &LabelSpace) -> Self {
        let layout = FcrfLayout::new(dim, space);
        Self { weights: vec![0.0; layout.total], layout, space: space.clone() }
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn space(&self) -> &LabelSpace {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn emit_mut(&mut self, m: usize, d: usize, a: usize) -> &mut f64 {
        let off = self.layout.chains[m].emit + d * self.layout.sizes[m] + a;
        &mut self.weights[off]
    }

    pub fn trans_mut(&mut self, m: usize, a: usize, b: usize) -> &mut f64 {
        let off = self.layout.chains[m].trans + a * self.layout.sizes[m] + b;
        &mut self.weights[off]
    }

    pub fn bias_mut(&mut self, m: usize, a: usize) -> &mut f64 {
        let off = self.layout.chains[m].bias + a;
        &mut self.weights[off]
    }

    pub fn init_mut(&mut self, m: usize, a: usize) -> &mut f64 {
        let off = self.layout.chains[m].init + a;
        &mut self.weights[off]
    }

    /// Co-temporal weight between label `a` of resident `m1` and label `b`
    /// of resident `m2` (`m1 < m2`).
    pub fn pair_mut(&mut self, m1: usize, m2: usize, a: usize, b: usize) -> &mut f64 {
        let &(_, _, off) = self
            .layout
            .pairs
            .iter()
            .find(|p| p.0 == m1 && p.1 == m2)
            .expect("pair indices must satisfy m1 < m2 < M");
        let off = off + a * self.layout.sizes[m2] + b;
        &mut self.weights[off]
    }

    /// Merged clique-chain potentials over `∏ K^m` states.
    pub fn potentials(&self, obs: &[Observation]) -> ChainPotentials {
        self.layout.potentials(&self.weights, &feature_matrix(obs))
    }

    /// The combined-label CRF whose weights are the summed factored blocks;
    /// it defines the same conditional distribution.
    pub fn to_combined(&self) -> CrfParams {
        let l = &self.layout;
        let joint = l.frames.len();
        let mut p = CrfParams::zeros(l.dim, joint);
        for (j, f) in l.frames.iter().enumerate() {
            let mut bias = l.pair_score(&self.weights, f);
            let mut init = 0.0;
            for (m, c) in l.chains.iter().enumerate() {
                bias += self.weights[c.bias + f[m]];
                init += self.weights[c.init + f[m]];
                for d in 0..l.dim {
                    *p.emit_mut(d, j) += self.weights[c.emit + d * l.sizes[m] + f[m]];
                }
            }
            *p.bias_mut(j) = bias;
            *p.init_mut(j) = init;
            for (i, g) in l.frames.iter().enumerate() {
                *p.trans_mut(i, j) = l
                    .chains
                    .iter()
                    .enumerate()
                    .map(|(m, c)| self.weights[c.trans + g[m] * l.sizes[m] + f[m]])
                    .sum();
            }
        }
        p
    }

    pub fn to_table(&self) -> TableFile {
        let l = &self.layout;
        let mut f = TableFile::new("fcrf");
        f.set("D", l.dim).set("M", l.sizes.len()).set("K", join_usize(&l.sizes));
        for (m, c) in l.chains.iter().enumerate() {
            let k = l.sizes[m];
            let w = &self.weights;
            f.push(&format!("emit.{}", m + 1), Block { rows: l.dim, cols: k, data: w[c.emit..c.trans].to_vec() });
            f.push(&format!("trans.{}", m + 1), Block { rows: k, cols: k, data: w[c.trans..c.bias].to_vec() });
            f.push(&format!("bias.{}", m + 1), Block::vector(&w[c.bias..c.init]));
            f.push(&format!("init.{}", m + 1), Block::vector(&w[c.init..c.init + k]));
        }
        for &(a, b, off) in &l.pairs {
            let (ka, kb) = (l.sizes[a], l.sizes[b]);
            f.push(
                &format!("pair.{}.{}", a + 1, b + 1),
                Block { rows: ka, cols: kb, data: self.weights[off..off + ka * kb].to_vec() },
            );
        }
        f
    }

    pub fn from_table(f: &TableFile) -> Result<Self> {
        if f.kind != "fcrf" {
            return Err(Error::Config(format!("expected an fcrf model, found {}", f.kind)));
        }
        let space = LabelSpace::with_sizes(&f.parse_list("K")?)?;
        let mut p = Self::zeros(f.parse("D")?, &space);
        let l = p.layout.clone();
        for (m, c) in l.chains.iter().enumerate() {
            let k = l.sizes[m];
            let blocks = [
                (format!("emit.{}", m + 1), l.dim, k, c.emit),
                (format!("trans.{}", m + 1), k, k, c.trans),
                (format!("bias.{}", m + 1), 1, k, c.bias),
                (format!("init.{}", m + 1), 1, k, c.init),
            ];
            for (name, rows, cols, off) in blocks {
                let b = f.block_shaped(&name, rows, cols)?;
                p.weights[off..off + rows * cols].copy_from_slice(&b.data);
            }
        }
        for &(a, b, off) in &l.pairs {
            let (ka, kb) = (l.sizes[a], l.sizes[b]);
            let blk = f.block_shaped(&format!("pair.{}.{}", a + 1, b + 1), ka, kb)?;
            p.weights[off..off + ka * kb].copy_from_slice(&blk.data);
        }
        Ok(p)
    }
}

pub fn fcrf_forward_backward(params: &FcrfParams, obs: &[Observation]) -> super::CrfInference {
    super::inference(&params.potentials(obs))
}

pub fn fcrf_objective_with(params: &FcrfParams, batch: &Dataset, exec: Exec) -> Result<(f64, Vec<f64>)> {
    check_shape(params, batch)?;
    Ok(chain_objective(&params.layout, &params.weights, &examples(batch)?, exec))
}

fn check_shape(params: &FcrfParams, ds: &Dataset) -> Result<()> {
    if ds.dim() != params.dim() || ds.label_space.sizes() != params.space.sizes() {
        return Err(Error::Config("factorial CRF does not match the data's D or K^m".into()));
    }
    Ok(())
}

pub fn train_fcrf(train: &Dataset, max_iter: usize) -> Result<(FcrfParams, LbfgsReport)> {
    let cfg = LbfgsConfig { max_iter, ..Default::default() };
    train_fcrf_with(train, &cfg, Exec::default())
}

pub fn train_fcrf_with(train: &Dataset, cfg: &LbfgsConfig, exec: Exec) -> Result<(FcrfParams, LbfgsReport)> {
    let layout = FcrfLayout::new(train.dim(), &train.label_space);
    let (weights, report) = train_chain(&layout, &examples(train)?, cfg, exec)?;
    Ok((FcrfParams { layout, space: train.label_space.clone(), weights }, report))
}

/// Exact decoding on the merged chain, split into per-resident sequences.
pub fn fcrf_decode(params: &FcrfParams, obs: &[Observation]) -> Vec<Vec<usize>> {
    split_path(&params.space, &fcrf_decode_merged(params, obs))
}

pub fn fcrf_decode_merged(params: &FcrfParams, obs: &[Observation]) -> Vec<usize> {
    let pot = params.potentials(obs);
    chain::viterbi(&pot.init, pot.trans.view(), pot.node.view()).1
}
