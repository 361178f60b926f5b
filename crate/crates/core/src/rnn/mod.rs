//! Recurrent sequence labelers.
//!
//! A single recurrent layer (tanh, GRU or LSTM) reads the sensor features,
//! and either one softmax head over combined labels or one head per resident
//! sits on the shared hidden state. Weights use the row-vector convention
//! `h^t = f(x^t W + h^{t-1} V + c)`, with the gate blocks of `W`, `V` and `c`
//! laid side by side:
//!
//! | cell | blocks |
//! |------|--------|
//! | tanh | `[a]` |
//! | GRU  | `[z, r, n]` (update, reset, candidate) |
//! | LSTM | `[i, f, g, o]` (input, forget, cell, output) |
//!
//! GRU: `h = (1 - z) ⊙ n + z ⊙ h_prev`, `n = tanh(x W_n + (r ⊙ h_prev) V_n + c_n)`.
//! LSTM: `c = f ⊙ c_prev + i ⊙ g`, `h = o ⊙ tanh(c)`, no peepholes.

mod train;

pub use train::{train_rnn, EpochRecord, TrainingTrace};

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datamodel::{ActivityFrame, LabelSpace, Observation, SequenceInstance};
use crate::error::{Error, Result};
use crate::tables::{join_usize, Block, TableFile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cell {
    Tanh,
    Gru,
    Lstm,
}

impl Cell {
    pub fn gates(self) -> usize {
        match self {
            Cell::Tanh => 1,
            Cell::Gru => 3,
            Cell::Lstm => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Cell::Tanh => "tanh",
            Cell::Gru => "gru",
            Cell::Lstm => "lstm",
        }
    }
}

impl std::str::FromStr for Cell {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Cell::Tanh),
            "gru" => Ok(Cell::Gru),
            "lstm" => Ok(Cell::Lstm),
            _ => Err(Error::Config(format!("unknown cell {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    /// One softmax over `∏ K^m` joint labels.
    Combined,
    /// One softmax per resident.
    Separate,
}

impl Head {
    pub fn name(self) -> &'static str {
        match self {
            Head::Combined => "combined",
            Head::Separate => "separate",
        }
    }
}

impl std::str::FromStr for Head {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "combined" => Ok(Head::Combined),
            "separate" => Ok(Head::Separate),
            _ => Err(Error::Config(format!("unknown head mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RnnConfig {
    pub cell: Cell,
    pub head: Head,
    pub hidden: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Global gradient-norm clip.
    pub clip: f64,
}

impl RnnConfig {
    pub fn new(cell: Cell, head: Head, hidden: usize, learning_rate: f64, seed: u64) -> Self {
        Self { cell, head, hidden, learning_rate, max_epochs: 200, patience: 10, seed, clip: 5.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::Config("hidden size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.patience == 0 || self.max_epochs == 0 {
            return Err(Error::Config("patience and max epochs must be at least 1".into()));
        }
        if !(self.clip > 0.0) {
            return Err(Error::Config("gradient clip must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputHead {
    /// `H × K`.
    pub u: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RnnParams {
    pub cell: Cell,
    pub head: Head,
    pub space: LabelSpace,
    /// `D × G·H`.
    pub w: Array2<f64>,
    /// `H × G·H`.
    pub v: Array2<f64>,
    /// `G·H`.
    pub c: Array1<f64>,
    pub heads: Vec<OutputHead>,
    pub seed: u64,
}

impl RnnParams {
    pub fn zeros(cell: Cell, head: Head, dim: usize, hidden: usize, space: &LabelSpace) -> Self {
        let gh = cell.gates() * hidden;
        let head_sizes = match head {
            Head::Combined => vec![space.combined_size()],
            Head::Separate => space.sizes().to_vec(),
        };
        Self {
            cell,
            head,
            space: space.clone(),
            w: Array2::zeros((dim, gh)),
            v: Array2::zeros((hidden, gh)),
            c: Array1::zeros(gh),
            heads: head_sizes
                .into_iter()
                .map(|k| OutputHead { u: Array2::zeros((hidden, k)), b: Array1::zeros(k) })
                .collect(),
            seed: 0,
        }
    }

    /// Uniform(−1/√H, 1/√H) matrices, zero biases, LSTM forget bias 1.
    pub fn init(cfg: &RnnConfig, dim: usize, space: &LabelSpace, rng: &mut ChaCha8Rng) -> Self {
        let mut p = Self::zeros(cfg.cell, cfg.head, dim, cfg.hidden, space);
        let r = 1.0 / (cfg.hidden as f64).sqrt();
        let mut fill = |m: &mut Array2<f64>| m.iter_mut().for_each(|x| *x = rng.gen_range(-r..r));
        fill(&mut p.w);
        fill(&mut p.v);
        for h in &mut p.heads {
            fill(&mut h.u);
        }
        if cfg.cell == Cell::Lstm {
            p.c.slice_mut(s![cfg.hidden..2 * cfg.hidden]).fill(1.0);
        }
        p.seed = cfg.seed;
        p
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.v.nrows()
    }

    /// Every tensor as a flat slice, in a fixed order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = vec![
            self.w.as_slice().expect("standard layout"),
            self.v.as_slice().expect("standard layout"),
            self.c.as_slice().expect("standard layout"),
        ];
        for h in &self.heads {
            out.push(h.u.as_slice().expect("standard layout"));
            out.push(h.b.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![
            self.w.as_slice_mut().expect("standard layout"),
            self.v.as_slice_mut().expect("standard layout"),
            self.c.as_slice_mut().expect("standard layout"),
        ];
        for h in &mut self.heads {
            out.push(h.u.as_slice_mut().expect("standard layout"));
            out.push(h.b.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = vec!["W".to_string(), "V".into(), "c".into()];
        for m in 0..self.heads.len() {
            names.push(format!("U.{}", m + 1));
            names.push(format!("b.{}", m + 1));
        }
        names
    }

    pub fn n_weights(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.cell, self.head, self.dim(), self.hidden(), &self.space)
    }

    pub fn global_norm(&self) -> f64 {
        self.tensors().iter().flat_map(|t| t.iter()).map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// `self += scale · other`.
    pub fn add_scaled(&mut self, other: &RnnParams, scale: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += scale * y);
        }
    }

    fn check_input(&self, obs: &[Observation]) -> Result<()> {
        if let Some(o) = obs.iter().find(|o| o.features.len() != self.dim()) {
            return Err(Error::Config(format!(
                "network expects {} features, observation has {}",
                self.dim(),
                o.features.len()
            )));
        }
        Ok(())
    }

    pub fn to_table(&self) -> TableFile {
        let mut f = TableFile::new("rnn");
        f.set("cell", self.cell.name())
            .set("head", self.head.name())
            .set("D", self.dim())
            .set("H", self.hidden())
            .set("K", join_usize(self.space.sizes()))
            .set("seed", self.seed)
            .push("W", Block::matrix(&self.w))
            .push("V", Block::matrix(&self.v))
            .push("c", Block::vector(self.c.as_slice().unwrap()));
        for (m, h) in self.heads.iter().enumerate() {
            f.push(&format!("U.{}", m + 1), Block::matrix(&h.u));
            f.push(&format!("b.{}", m + 1), Block::vector(h.b.as_slice().unwrap()));
        }
        f
    }

    pub fn from_table(f: &TableFile) -> Result<Self> {
        if f.kind != "rnn" {
            return Err(Error::Config(format!("expected an rnn model, found {}", f.kind)));
        }
        let cell: Cell = f.get("cell")?.parse()?;
        let head: Head = f.get("head")?.parse()?;
        let (dim, hidden): (usize, usize) = (f.parse("D")?, f.parse("H")?);
        let space = LabelSpace::with_sizes(&f.parse_list("K")?)?;
        let mut p = Self::zeros(cell, head, dim, hidden, &space);
        let gh = cell.gates() * hidden;
        p.w = f.block_shaped("W", dim, gh)?.to_array2();
        p.v = f.block_shaped("V", hidden, gh)?.to_array2();
        p.c = Array1::from(f.block_shaped("c", 1, gh)?.data.clone());
        for (m, h) in p.heads.iter_mut().enumerate() {
            let k = h.b.len();
            h.u = f.block_shaped(&format!("U.{}", m + 1), hidden, k)?.to_array2();
            h.b = Array1::from(f.block_shaped(&format!("b.{}", m + 1), 1, k)?.data.clone());
        }
        p.seed = f.parse("seed")?;
        Ok(p)
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = logits.mapv(|v| (v - max).exp());
    let s = p.sum();
    p /= s;
    p
}

/// Forward pass with everything backpropagation needs.
#[derive(Clone, Debug)]
pub struct RnnTrace {
    /// `h^0 … h^T`.
    pub hidden: Vec<Array1<f64>>,
    /// LSTM cell states `c^0 … c^T` (empty for other cells).
    pub cells: Vec<Array1<f64>>,
    /// Post-activation gate blocks per step.
    pub gates: Vec<Array1<f64>>,
    /// `probs[t][head]`.
    pub probs: Vec<Vec<Array1<f64>>>,
}

fn step(p: &RnnParams, x: ArrayView1<f64>, h_prev: &Array1<f64>, c_prev: Option<&Array1<f64>>) -> (Array1<f64>, Option<Array1<f64>>, Array1<f64>) {
    let hs = p.hidden();
    let xw = x.dot(&p.w);
    match p.cell {
        Cell::Tanh => {
            let h = (xw + h_prev.dot(&p.v) + &p.c).mapv(f64::tanh);
            (h.clone(), None, h)
        }
        Cell::Gru => {
            let zr = &xw.slice(s![..2 * hs]) + &h_prev.dot(&p.v.slice(s![.., ..2 * hs])) + p.c.slice(s![..2 * hs]);
            let zr = zr.mapv(sigmoid);
            let z = zr.slice(s![..hs]);
            let r = zr.slice(s![hs..]);
            let rh = &r * h_prev;
            let n = (&xw.slice(s![2 * hs..]) + &rh.dot(&p.v.slice(s![.., 2 * hs..])) + p.c.slice(s![2 * hs..]))
                .mapv(f64::tanh);
            let h = (1.0 - &z) * &n + &z * h_prev;
            let mut gates = Array1::zeros(3 * hs);
            gates.slice_mut(s![..2 * hs]).assign(&zr);
            gates.slice_mut(s![2 * hs..]).assign(&n);
            (h, None, gates)
        }
        Cell::Lstm => {
            let pre = xw + h_prev.dot(&p.v) + &p.c;
            let mut gates = pre.clone();
            for (k, g) in gates.iter_mut().enumerate() {
                *g = if (2 * hs..3 * hs).contains(&k) { g.tanh() } else { sigmoid(*g) };
            }
            let i = gates.slice(s![..hs]);
            let f = gates.slice(s![hs..2 * hs]);
            let g = gates.slice(s![2 * hs..3 * hs]);
            let o = gates.slice(s![3 * hs..]);
            let c = &f * c_prev.expect("lstm cell state") + &i * &g;
            let h = &o * &c.mapv(f64::tanh);
            (h, Some(c), gates)
        }
    }
}

pub fn rnn_forward(params: &RnnParams, obs: &[Observation]) -> Result<RnnTrace> {
    params.check_input(obs)?;
    let hs = params.hidden();
    let mut trace = RnnTrace {
        hidden: vec![Array1::zeros(hs)],
        cells: if params.cell == Cell::Lstm { vec![Array1::zeros(hs)] } else { vec![] },
        gates: Vec::with_capacity(obs.len()),
        probs: Vec::with_capacity(obs.len()),
    };
    for o in obs {
        let x = ArrayView1::from(&o.features);
        let h_prev = trace.hidden.last().expect("h0");
        let (h, c, gates) = step(params, x, h_prev, trace.cells.last());
        trace.probs.push(params.heads.iter().map(|hd| softmax(&(h.dot(&hd.u) + &hd.b))).collect());
        trace.hidden.push(h);
        if let Some(c) = c {
            trace.cells.push(c);
        }
        trace.gates.push(gates);
    }
    Ok(trace)
}

/// Per-step target index for every head.
pub fn targets(head: Head, space: &LabelSpace, frames: &[ActivityFrame]) -> Result<Vec<Vec<usize>>> {
    frames
        .iter()
        .map(|f| match head {
            Head::Combined => Ok(vec![space.encode(f)?]),
            Head::Separate => {
                space.check(f)?;
                Ok(f.0.clone())
            }
        })
        .collect()
}

/// Mean over steps of the (summed over heads) cross-entropy.
pub fn rnn_loss(probs: &[Vec<Array1<f64>>], truth: &[Vec<usize>]) -> Result<f64> {
    if probs.len() != truth.len() || probs.is_empty() {
        return Err(Error::Domain("outputs and targets are not aligned".into()));
    }
    let mut total = 0.0;
    for (ps, ys) in probs.iter().zip(truth) {
        if ps.len() != ys.len() {
            return Err(Error::Domain("head count differs from target count".into()));
        }
        for (p, &y) in ps.iter().zip(ys) {
            total -= p[y].ln();
        }
    }
    Ok(total / probs.len() as f64)
}

fn outer_add(m: &mut Array2<f64>, a: ArrayView1<f64>, b: ArrayView1<f64>) {
    for (mut row, &ai) in m.axis_iter_mut(Axis(0)).zip(a.iter()) {
        if ai != 0.0 {
            row.scaled_add(ai, &b);
        }
    }
}

/// Exact BPTT gradient of [`rnn_loss`], without clipping.
pub fn rnn_gradient(params: &RnnParams, obs: &[Observation], truth: &[Vec<usize>]) -> Result<(f64, RnnParams)> {
    let trace = rnn_forward(params, obs)?;
    let loss = rnn_loss(&trace.probs, truth)?;
    let len = obs.len();
    let hs = params.hidden();
    let inv_t = 1.0 / len as f64;
    let mut g = params.zeros_like();
    let mut dh_next = Array1::<f64>::zeros(hs);
    let mut dc_next = Array1::<f64>::zeros(hs);
    let mut da = Array1::<f64>::zeros(params.cell.gates() * hs);

    for t in (0..len).rev() {
        let h = &trace.hidden[t + 1];
        let h_prev = &trace.hidden[t];
        let x = ArrayView1::from(&obs[t].features);
        let mut dh = dh_next.clone();
        for ((hd, gh), (p, &y)) in params.heads.iter().zip(g.heads.iter_mut()).zip(trace.probs[t].iter().zip(&truth[t])) {
            let mut dlogit = p * inv_t;
            dlogit[y] -= inv_t;
            outer_add(&mut gh.u, h.view(), dlogit.view());
            gh.b += &dlogit;
            dh += &hd.u.dot(&dlogit);
        }
        let gates = &trace.gates[t];
        match params.cell {
            Cell::Tanh => {
                da.assign(&(&dh * &h.mapv(|v| 1.0 - v * v)));
                outer_add(&mut g.v, h_prev.view(), da.view());
                dh_next = params.v.dot(&da);
            }
            Cell::Gru => {
                let z = gates.slice(s![..hs]);
                let r = gates.slice(s![hs..2 * hs]);
                let n = gates.slice(s![2 * hs..]);
                let dn = &dh * &(1.0 - &z);
                let dz = &dh * &(h_prev - &n);
                let dan = &dn * &n.mapv(|v| 1.0 - v * v);
                let rh = &r * h_prev;
                let vn = params.v.slice(s![.., 2 * hs..]);
                let drh = vn.dot(&dan);
                let dr = &drh * h_prev;
                da.slice_mut(s![..hs]).assign(&(&dz * &z.mapv(|v| v * (1.0 - v))));
                da.slice_mut(s![hs..2 * hs]).assign(&(&dr * &r.mapv(|v| v * (1.0 - v))));
                da.slice_mut(s![2 * hs..]).assign(&dan);
                {
                    let mut gv_zr = g.v.slice_mut(s![.., ..2 * hs]);
                    for (mut row, &hi) in gv_zr.axis_iter_mut(Axis(0)).zip(h_prev.iter()) {
                        row.scaled_add(hi, &da.slice(s![..2 * hs]));
                    }
                    let mut gv_n = g.v.slice_mut(s![.., 2 * hs..]);
                    for (mut row, &hi) in gv_n.axis_iter_mut(Axis(0)).zip(rh.iter()) {
                        row.scaled_add(hi, &dan);
                    }
                }
                let vzr = params.v.slice(s![.., ..2 * hs]);
                dh_next = &dh * &z + &(&drh * &r) + &vzr.dot(&da.slice(s![..2 * hs]));
            }
            Cell::Lstm => {
                let i = gates.slice(s![..hs]);
                let f = gates.slice(s![hs..2 * hs]);
                let gg = gates.slice(s![2 * hs..3 * hs]);
                let o = gates.slice(s![3 * hs..]);
                let c = &trace.cells[t + 1];
                let c_prev = &trace.cells[t];
                let tc = c.mapv(f64::tanh);
                let d_o = &dh * &tc;
                let dc = &dc_next + &(&dh * &o * &tc.mapv(|v| 1.0 - v * v));
                da.slice_mut(s![..hs]).assign(&(&dc * &gg * &i.mapv(|v| v * (1.0 - v))));
                da.slice_mut(s![hs..2 * hs]).assign(&(&dc * c_prev * &f.mapv(|v| v * (1.0 - v))));
                da.slice_mut(s![2 * hs..3 * hs]).assign(&(&dc * &i * &gg.mapv(|v| 1.0 - v * v)));
                da.slice_mut(s![3 * hs..]).assign(&(&d_o * &o.mapv(|v| v * (1.0 - v))));
                dc_next = &dc * &f;
                outer_add(&mut g.v, h_prev.view(), da.view());
                dh_next = params.v.dot(&da);
            }
        }
        outer_add(&mut g.w, x, da.view());
        g.c += &da;
    }
    Ok((loss, g))
}

/// BPTT gradient with global-norm clipping at `clip`.
pub fn rnn_backward(params: &RnnParams, obs: &[Observation], truth: &[Vec<usize>], clip: f64) -> Result<RnnParams> {
    let (_, mut g) = rnn_gradient(params, obs, truth)?;
    if !g.is_finite() {
        return Err(Error::Training("non-finite gradient".into()));
    }
    let norm = g.global_norm();
    if norm > clip {
        let scale = clip / norm;
        for t in g.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= scale);
        }
    }
    Ok(g)
}

fn argmax(p: &Array1<f64>) -> usize {
    let mut best = 0;
    for (k, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = k;
        }
    }
    best
}

/// Per-step argmax of every head; combined heads are split back into
/// per-resident labels. Ties go to the lower index.
pub fn rnn_decode(params: &RnnParams, obs: &[Observation]) -> Result<Vec<ActivityFrame>> {
    let trace = rnn_forward(params, obs)?;
    Ok(decode_probs(params.head, &params.space, &trace.probs))
}

pub fn decode_probs(head: Head, space: &LabelSpace, probs: &[Vec<Array1<f64>>]) -> Vec<ActivityFrame> {
    probs
        .iter()
        .map(|ps| match head {
            Head::Combined => space.decode_unchecked(argmax(&ps[0])),
            Head::Separate => ActivityFrame(ps.iter().map(argmax).collect()),
        })
        .collect()
}

pub fn instance_loss(params: &RnnParams, inst: &SequenceInstance) -> Result<f64> {
    let trace = rnn_forward(params, &inst.observations)?;
    rnn_loss(&trace.probs, &targets(params.head, &params.space, &inst.activities)?)
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(rows: &[&[f64]]) -> Vec<Observation> {
        rows.iter().map(|r| Observation { symbol: 0, features: r.to_vec() }).collect()
    }

    #[test]
    fn zero_parameters_give_uniform_outputs() {
        let space = LabelSpace::with_sizes(&[3, 5]).unwrap();
        for cell in [Cell::Tanh, Cell::Gru, Cell::Lstm] {
            for head in [Head::Combined, Head::Separate] {
                let p = RnnParams::zeros(cell, head, 2, 4, &space);
                let tr = rnn_forward(&p, &obs(&[&[1.0, 0.0], &[0.5, 0.5]])).unwrap();
                for ps in &tr.probs {
                    for d in ps {
                        let k = d.len() as f64;
                        assert!(d.iter().all(|v| (v - 1.0 / k).abs() < 1e-15));
                    }
                }
                assert_eq!(rnn_decode(&p, &obs(&[&[1.0, 0.0]])).unwrap()[0].0, vec![0, 0]);
            }
        }
    }

    #[test]
    fn tanh_two_step_recurrence() {
        let space = LabelSpace::with_sizes(&[2]).unwrap();
        let mut p = RnnParams::zeros(Cell::Tanh, Head::Combined, 1, 1, &space);
        p.w[[0, 0]] = 1.0;
        p.v[[0, 0]] = 0.5;
        let tr = rnn_forward(&p, &obs(&[&[1.0], &[0.0]])).unwrap();
        assert!((tr.hidden[1][0] - 0.761594).abs() < 1e-6);
        assert!((tr.hidden[2][0] - 0.3633995).abs() < 1e-6);
        assert_eq!(tr.hidden[1][0], 1f64.tanh());
        assert_eq!(tr.hidden[2][0], (0.5 * 1f64.tanh()).tanh());
    }

    #[test]
    fn loss_examples() {
        let u = |k: usize| Array1::from_elem(k, 1.0 / k as f64);
        assert!((rnn_loss(&[vec![u(4)]], &[vec![2]]).unwrap() - 4f64.ln()).abs() < 1e-15);
        let onehot = Array1::from(vec![0.0, 1.0, 0.0]);
        assert_eq!(rnn_loss(&[vec![onehot]], &[vec![1]]).unwrap(), 0.0);
        let l = rnn_loss(&[vec![u(3), u(5)], vec![u(3), u(5)]], &[vec![0, 4], vec![2, 1]]).unwrap();
        assert!((l - (3f64.ln() + 5f64.ln())).abs() < 1e-14);
        assert!(rnn_loss(&[vec![u(3)]], &[]).is_err());
    }

    #[test]
    fn forced_argmax_decodes_constant_frame() {
        let space = LabelSpace::with_sizes(&[3, 5]).unwrap();
        let mut sep = RnnParams::zeros(Cell::Gru, Head::Separate, 1, 2, &space);
        sep.heads[0].b[2] = 10.0;
        sep.heads[1].b[4] = 10.0;
        let mut comb = RnnParams::zeros(Cell::Lstm, Head::Combined, 1, 2, &space);
        comb.heads[0].b[14] = 10.0;
        let o = obs(&[&[0.3], &[0.9], &[0.0]]);
        for p in [sep, comb] {
            assert!(rnn_decode(&p, &o).unwrap().iter().all(|f| f.0 == vec![2, 4]));
        }
    }

    #[test]
    fn shape_mismatch_is_config_error() {
        let space = LabelSpace::with_sizes(&[2]).unwrap();
        let p = RnnParams::zeros(Cell::Tanh, Head::Combined, 3, 2, &space);
        assert!(matches!(rnn_forward(&p, &obs(&[&[1.0]])), Err(Error::Config(_))));
    }

    #[test]
    fn clipping_bounds_the_global_norm() {
        let space = LabelSpace::with_sizes(&[2, 2]).unwrap();
        let cfg = RnnConfig::new(Cell::Lstm, Head::Separate, 3, 0.1, 1);
        let mut p = RnnParams::init(&cfg, 2, &space, &mut rng_for(1));
        p.w.mapv_inplace(|v| v * 50.0);
        let o = obs(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let y = vec![vec![0, 1], vec![1, 1], vec![0, 0]];
        let g = rnn_backward(&p, &o, &y, 1e-3).unwrap();
        assert!(g.global_norm() <= 1e-3 * (1.0 + 1e-12));
    }

    #[test]
    fn model_file_roundtrip() {
        let space = LabelSpace::with_sizes(&[2, 3]).unwrap();
        let cfg = RnnConfig::new(Cell::Gru, Head::Separate, 4, 0.1, 7);
        let p = RnnParams::init(&cfg, 3, &space, &mut rng_for(7));
        let back = RnnParams::from_table(&TableFile::from_text(&p.to_table().render(), "m").unwrap()).unwrap();
        assert_eq!(back, p);
    }
}
