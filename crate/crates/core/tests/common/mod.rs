//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use mrar::crf::{CrfParams, FcrfParams};
use mrar::hmm::{FhmmParams, HmmParams};
use mrar::ingest::synth::{SynthConfig, SynthShape};
use mrar::rnn::{rnn_gradient, RnnParams};
use mrar::{ActivityFrame, LabelSpace, Observation, SequenceInstance};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Calls `f` on every label sequence of length `len` over `states` values.
pub fn for_each_path(states: usize, len: usize, mut f: impl FnMut(&[usize])) {
    let mut path = vec![0; len];
    loop {
        f(&path);
        let mut t = len;
        loop {
            if t == 0 {
                return;
            }
            t -= 1;
            path[t] += 1;
            if path[t] < states {
                break;
            }
            path[t] = 0;
        }
    }
}

/// Highest-scoring path by enumeration. Among equal scores the path that is
/// smallest when read from the last step backwards wins, which is what a
/// lowest-index-predecessor Viterbi produces.
pub fn brute_force_best(states: usize, len: usize, score: impl Fn(&[usize]) -> f64) -> (f64, Vec<usize>) {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for_each_path(states, len, |p| {
        let s = score(p);
        let better = match &best {
            None => true,
            Some((b, bp)) => s > *b || (s == *b && p.iter().rev().lt(bp.iter().rev())),
        };
        if better {
            best = Some((s, p.to_vec()));
        }
    });
    best.expect("at least one path")
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Row-major index of a frame, resident 1 most significant.
pub fn combined_index(sizes: &[usize], frame: &[usize]) -> usize {
    frame.iter().zip(sizes).fold(0, |acc, (&a, &k)| acc * k + a)
}

pub fn frames(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let total: usize = sizes.iter().product();
    for mut j in 0..total {
        let mut f = vec![0; sizes.len()];
        for m in (0..sizes.len()).rev() {
            f[m] = j % sizes[m];
            j /= sizes[m];
        }
        out.push(f);
    }
    out
}

pub fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

fn stochastic(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let data: Vec<f64> = (0..rows).flat_map(|_| simplex(rng, cols)).collect();
    Array2::from_shape_vec((rows, cols), data).unwrap()
}

pub fn random_hmm(rng: &mut ChaCha8Rng, sizes: &[usize], symbols: usize) -> HmmParams {
    let space = LabelSpace::with_sizes(sizes).unwrap();
    let j = space.combined_size();
    HmmParams {
        space,
        symbols,
        alpha: 1.0,
        prior: simplex(rng, j),
        transition: stochastic(rng, j, j),
        emission: stochastic(rng, j, symbols + 1),
    }
}

pub fn random_fhmm(rng: &mut ChaCha8Rng, sizes: &[usize], symbols: usize) -> FhmmParams {
    let space = LabelSpace::with_sizes(sizes).unwrap();
    let j = space.combined_size();
    FhmmParams {
        space,
        symbols,
        alpha: 1.0,
        priors: sizes.iter().map(|&k| simplex(rng, k)).collect(),
        transitions: sizes.iter().map(|&k| stochastic(rng, j, k)).collect(),
        emission: stochastic(rng, j, symbols + 1),
    }
}

pub fn symbol_obs(rng: &mut ChaCha8Rng, len: usize, symbols: usize) -> Vec<Observation> {
    (0..len).map(|_| Observation { symbol: rng.gen_range(0..=symbols), features: vec![0.0] }).collect()
}

pub fn feature_obs(rng: &mut ChaCha8Rng, len: usize, dim: usize) -> Vec<Observation> {
    (0..len)
        .map(|_| Observation { symbol: 0, features: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect() })
        .collect()
}

/// Joint log-probability of an HMM path, accumulated left to right.
pub fn hmm_path_score(p: &HmmParams, obs: &[Observation], path: &[usize]) -> f64 {
    let e = |t: usize| p.emission[[path[t], obs[t].symbol]].ln();
    let mut s = p.prior[path[0]].ln() + e(0);
    for t in 1..path.len() {
        s = s + p.transition[[path[t - 1], path[t]]].ln() + e(t);
    }
    s
}

/// Same for the cross-dependent factorial HMM, over joint indices.
pub fn fhmm_path_score(p: &FhmmParams, obs: &[Observation], path: &[usize]) -> f64 {
    let sizes = p.space.sizes();
    let fr = frames(sizes);
    let e = |t: usize| p.emission[[path[t], obs[t].symbol]].ln();
    let init: f64 = fr[path[0]].iter().enumerate().map(|(m, &a)| p.priors[m][a].ln()).sum();
    let mut s = init + e(0);
    for t in 1..path.len() {
        let tr: f64 = fr[path[t]].iter().enumerate().map(|(m, &a)| p.transitions[m][[path[t - 1], a]].ln()).sum();
        s = s + tr + e(t);
    }
    s
}

/// CRF weights kept as plain tables so scores can be computed without the
/// library's potential construction.
pub struct CrfTables {
    pub emit: Array2<f64>,
    pub trans: Array2<f64>,
    pub bias: Vec<f64>,
    pub init: Vec<f64>,
}

impl CrfTables {
    pub fn random(rng: &mut ChaCha8Rng, dim: usize, labels: usize, scale: f64) -> Self {
        let mut r = || rng.gen_range(-scale..scale);
        Self {
            emit: Array2::from_shape_fn((dim, labels), |_| r()),
            trans: Array2::from_shape_fn((labels, labels), |_| r()),
            bias: (0..labels).map(|_| r()).collect(),
            init: (0..labels).map(|_| r()).collect(),
        }
    }

    pub fn params(&self) -> CrfParams {
        let (dim, labels) = self.emit.dim();
        let mut p = CrfParams::zeros(dim, labels);
        for d in 0..dim {
            for j in 0..labels {
                *p.emit_mut(d, j) = self.emit[[d, j]];
            }
        }
        for i in 0..labels {
            for j in 0..labels {
                *p.trans_mut(i, j) = self.trans[[i, j]];
            }
            *p.bias_mut(i) = self.bias[i];
            *p.init_mut(i) = self.init[i];
        }
        p
    }

    pub fn score(&self, obs: &[Observation], path: &[usize]) -> f64 {
        let node = |t: usize, j: usize| {
            obs[t].features.iter().enumerate().map(|(d, x)| x * self.emit[[d, j]]).sum::<f64>() + self.bias[j]
        };
        let mut s = self.init[path[0]] + node(0, path[0]);
        for t in 1..path.len() {
            s += self.trans[[path[t - 1], path[t]]] + node(t, path[t]);
        }
        s
    }
}

pub struct FcrfTables {
    pub sizes: Vec<usize>,
    pub chains: Vec<CrfTables>,
    /// `(m1, m2, K^{m1} × K^{m2})` for every `m1 < m2`.
    pub pairs: Vec<(usize, usize, Array2<f64>)>,
}

impl FcrfTables {
    pub fn random(rng: &mut ChaCha8Rng, dim: usize, sizes: &[usize], scale: f64) -> Self {
        let chains = sizes.iter().map(|&k| CrfTables::random(rng, dim, k, scale)).collect();
        let mut pairs = Vec::new();
        for a in 0..sizes.len() {
            for b in a + 1..sizes.len() {
                pairs.push((a, b, Array2::from_shape_fn((sizes[a], sizes[b]), |_| rng.gen_range(-scale..scale))));
            }
        }
        Self { sizes: sizes.to_vec(), chains, pairs }
    }

    pub fn params(&self) -> FcrfParams {
        let dim = self.chains[0].emit.nrows();
        let mut p = FcrfParams::zeros(dim, &LabelSpace::with_sizes(&self.sizes).unwrap());
        for (m, c) in self.chains.iter().enumerate() {
            let k = self.sizes[m];
            for a in 0..k {
                for d in 0..dim {
                    *p.emit_mut(m, d, a) = c.emit[[d, a]];
                }
                for b in 0..k {
                    *p.trans_mut(m, a, b) = c.trans[[a, b]];
                }
                *p.bias_mut(m, a) = c.bias[a];
                *p.init_mut(m, a) = c.init[a];
            }
        }
        for (m1, m2, table) in &self.pairs {
            for ((a, b), v) in table.indexed_iter() {
                *p.pair_mut(*m1, *m2, a, b) = *v;
            }
        }
        p
    }

    /// Score of a sequence of frames.
    pub fn score(&self, obs: &[Observation], path: &[Vec<usize>]) -> f64 {
        let mut s = 0.0;
        for (m, c) in self.chains.iter().enumerate() {
            let labels: Vec<usize> = path.iter().map(|f| f[m]).collect();
            s += c.score(obs, &labels);
        }
        for f in path {
            for (m1, m2, table) in &self.pairs {
                s += table[[f[*m1], f[*m2]]];
            }
        }
        s
    }
}

/// `|a − b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Central difference of `f` along coordinate `i` of `x`.
pub fn central_difference(x: &mut [f64], i: usize, h: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = x[i];
    x[i] = orig + h;
    let up = f(x);
    x[i] = orig - h;
    let down = f(x);
    x[i] = orig;
    (up - down) / (2.0 * h)
}

/// Worst relative error of the BPTT gradient against central differences
/// over `coords` random coordinates.
pub fn rnn_gradient_check(
    params: &RnnParams,
    obs: &[Observation],
    truth: &[Vec<usize>],
    coords: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let (_, grad) = rnn_gradient(params, obs, truth).unwrap();
    let sizes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
    let flat_grad: Vec<f64> = grad.tensors().iter().flat_map(|t| t.iter().copied()).collect();
    let mut worst = 0.0f64;
    // every tensor gets at least one probe
    let mut picks: Vec<usize> = sizes.iter().scan(0, |off, &n| { let s = *off; *off += n; Some(s + rng.gen_range(0..n)) }).collect();
    let total: usize = sizes.iter().sum();
    while picks.len() < coords {
        picks.push(rng.gen_range(0..total));
    }
    for idx in picks {
        let (mut tensor, mut inner) = (0, idx);
        while inner >= sizes[tensor] {
            inner -= sizes[tensor];
            tensor += 1;
        }
        let loss_at = |v: f64| {
            let mut p = params.clone();
            p.tensors_mut()[tensor][inner] = v;
            let (l, _) = rnn_gradient(&p, obs, truth).unwrap();
            l
        };
        let orig = params.tensors()[tensor][inner];
        let h = 1e-5;
        let numeric = (loss_at(orig + h) - loss_at(orig - h)) / (2.0 * h);
        worst = worst.max(rel_err(flat_grad[idx], numeric, 1e-4));
    }
    worst
}

pub fn frames_to_instance(id: &str, obs: Vec<Observation>, frames: Vec<Vec<usize>>) -> SequenceInstance {
    SequenceInstance::new(id, obs, frames.into_iter().map(ActivityFrame).collect()).unwrap()
}

/// Generator with resident activities driven mostly by the other
/// resident's previous activity.
pub fn coupled_generator(sizes: &[usize], symbols: usize, steps: usize, days: usize, seed: u64) -> SynthConfig {
    let shape = SynthShape { stickiness: 1.0, coupling: 6.0, peak: 6.0 };
    let mut cfg = SynthConfig::random(sizes, symbols, steps, days, shape, seed, seed + 1).unwrap();
    cfg.noise = 0.0;
    cfg
}

/// Plain log-space Viterbi over explicit tables, used as the generator
/// oracle. `emit[j][s]` is indexed by generator symbol.
pub fn reference_viterbi(init: &[f64], trans: &Array2<f64>, emit: &Array2<f64>, symbols: &[usize]) -> Vec<usize> {
    let j = init.len();
    let mut delta: Vec<f64> = (0..j).map(|k| init[k].ln() + emit[[k, symbols[0]]].ln()).collect();
    let mut back: Vec<Vec<usize>> = Vec::new();
    for &s in &symbols[1..] {
        let mut next = vec![f64::NEG_INFINITY; j];
        let mut bp = vec![0; j];
        for to in 0..j {
            for from in 0..j {
                let v = delta[from] + trans[[from, to]].ln();
                if v > next[to] {
                    next[to] = v;
                    bp[to] = from;
                }
            }
            next[to] += emit[[to, s]].ln();
        }
        back.push(bp);
        delta = next;
    }
    let mut last = 0;
    for k in 1..j {
        if delta[k] > delta[last] {
            last = k;
        }
    }
    let mut path = vec![last];
    for bp in back.iter().rev() {
        last = bp[last];
        path.push(last);
    }
    path.reverse();
    path
}
