//! Combined-label HMM and the cross-dependent factorial HMM.
//!
//! Both models share one emission table over joint sensor-state symbols
//! (plus a UNK column). They differ in the transition structure: the
//! combined HMM has a single `J × J` table over joint frames, while the
//! factorial HMM has, for every resident `m`, a `J × K^m` table
//! `p(a^{m,t} | a^{t-1})` conditioned on the full previous joint frame.
//! Decoding the factorial model runs exact Viterbi over joint frames with
//! the transition score `Σ_m log A_m(i → j_m)`.
//!
//! Parameters are smoothed maximum-likelihood counts:
//! `(count + α) / (row total + α · row width)`.

use ndarray::Array2;

use crate::chain::{self, ChainPotentials};
use crate::datamodel::{Dataset, LabelSpace, Observation, SequenceInstance};
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::tables::{join_usize, Block, TableFile};

const ROW_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct HmmParams {
    pub space: LabelSpace,
    /// Known symbols `S`; the emission table has `S + 1` columns.
    pub symbols: usize,
    pub alpha: f64,
    pub prior: Vec<f64>,
    pub transition: Array2<f64>,
    pub emission: Array2<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FhmmParams {
    pub space: LabelSpace,
    pub symbols: usize,
    pub alpha: f64,
    pub priors: Vec<Vec<f64>>,
    /// `transitions[m]` is `J × K^m`.
    pub transitions: Vec<Array2<f64>>,
    pub emission: Array2<f64>,
}

/// Log-space tables ready for decoding.
#[derive(Clone, Debug)]
pub struct LogHmm {
    pub init: Vec<f64>,
    pub trans: Array2<f64>,
    pub emit: Array2<f64>,
}

impl LogHmm {
    fn symbol_column(&self, symbol: usize) -> usize {
        symbol.min(self.emit.ncols() - 1)
    }

    pub fn potentials(&self, obs: &[Observation]) -> ChainPotentials {
        let states = self.init.len();
        let node = Array2::from_shape_fn((obs.len(), states), |(t, j)| {
            self.emit[[j, self.symbol_column(obs[t].symbol)]]
        });
        ChainPotentials { init: self.init.clone(), trans: self.trans.clone(), node }
    }

    /// Most probable joint-state path.
    pub fn viterbi(&self, obs: &[Observation]) -> Vec<usize> {
        assert!(!obs.is_empty(), "viterbi on an empty observation sequence");
        let node = Array2::from_shape_fn((obs.len(), self.init.len()), |(t, j)| {
            self.emit[[j, self.symbol_column(obs[t].symbol)]]
        });
        chain::viterbi(&self.init, self.trans.view(), node.view()).1
    }

    /// `log p(states, obs)`.
    pub fn log_likelihood(&self, obs: &[Observation], states: &[usize]) -> f64 {
        let col = |t: usize| self.symbol_column(obs[t].symbol);
        let mut lp = self.init[states[0]] + self.emit[[states[0], col(0)]];
        for t in 1..states.len() {
            lp += self.trans[[states[t - 1], states[t]]] + self.emit[[states[t], col(t)]];
        }
        lp
    }
}

fn smooth_row(counts: &[f64], alpha: f64) -> Vec<f64> {
    let total: f64 = counts.iter().sum();
    let denom = total + alpha * counts.len() as f64;
    counts.iter().map(|c| (c + alpha) / denom).collect()
}

fn smooth_matrix(counts: &Array2<f64>, alpha: f64) -> Array2<f64> {
    let mut out = counts.clone();
    for mut row in out.rows_mut() {
        let smoothed = smooth_row(row.as_slice().expect("standard layout"), alpha);
        row.iter_mut().zip(smoothed).for_each(|(d, s)| *d = s);
    }
    out
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("smoothing factor must be positive, got {alpha}")));
    }
    Ok(())
}

fn check_rows(name: &str, m: &Array2<f64>) -> Result<()> {
    for (i, row) in m.rows().into_iter().enumerate() {
        let s = row.sum();
        if (s - 1.0).abs() > ROW_TOL || row.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::Domain(format!("{name} row {i} is not a positive distribution (sum {s})")));
        }
    }
    Ok(())
}

/// Raw counts gathered in one pass over a dataset.
struct Counts {
    joint_prior: Vec<f64>,
    resident_priors: Vec<Vec<f64>>,
    joint_trans: Array2<f64>,
    resident_trans: Vec<Array2<f64>>,
    emission: Array2<f64>,
}

impl Counts {
    fn zeros(space: &LabelSpace, columns: usize) -> Self {
        let joint = space.combined_size();
        Self {
            joint_prior: vec![0.0; joint],
            resident_priors: space.sizes().iter().map(|&k| vec![0.0; k]).collect(),
            joint_trans: Array2::zeros((joint, joint)),
            resident_trans: space.sizes().iter().map(|&k| Array2::zeros((joint, k))).collect(),
            emission: Array2::zeros((joint, columns)),
        }
    }

    fn instance(space: &LabelSpace, columns: usize, inst: &SequenceInstance) -> Result<Self> {
        let mut c = Self::zeros(space, columns);
        let states = inst.combined_labels(space)?;
        c.joint_prior[states[0]] += 1.0;
        for (m, &a) in inst.activities[0].0.iter().enumerate() {
            c.resident_priors[m][a] += 1.0;
        }
        for t in 0..states.len() {
            c.emission[[states[t], inst.observations[t].symbol.min(columns - 1)]] += 1.0;
            if t > 0 {
                c.joint_trans[[states[t - 1], states[t]]] += 1.0;
                for (m, &a) in inst.activities[t].0.iter().enumerate() {
                    c.resident_trans[m][[states[t - 1], a]] += 1.0;
                }
            }
        }
        Ok(c)
    }

    fn merge(mut self, other: &Counts) -> Self {
        self.joint_prior.iter_mut().zip(&other.joint_prior).for_each(|(a, b)| *a += b);
        for (a, b) in self.resident_priors.iter_mut().zip(&other.resident_priors) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.joint_trans += &other.joint_trans;
        for (a, b) in self.resident_trans.iter_mut().zip(&other.resident_trans) {
            *a += b;
        }
        self.emission += &other.emission;
        self
    }

    fn gather(train: &Dataset, exec: Exec) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Config("empty training set".into()));
        }
        let space = &train.label_space;
        let columns = train.codec.len() + 1;
        let parts = exec.map(&train.instances, |inst| Self::instance(space, columns, inst));
        let mut total = Self::zeros(space, columns);
        for p in parts {
            total = total.merge(&p?);
        }
        Ok(total)
    }
}

pub fn train_hmm(train: &Dataset, alpha: f64) -> Result<HmmParams> {
    train_hmm_with(train, alpha, Exec::default())
}

pub fn train_hmm_with(train: &Dataset, alpha: f64, exec: Exec) -> Result<HmmParams> {
    check_alpha(alpha)?;
    let c = Counts::gather(train, exec)?;
    Ok(HmmParams {
        space: train.label_space.clone(),
        symbols: train.codec.len(),
        alpha,
        prior: smooth_row(&c.joint_prior, alpha),
        transition: smooth_matrix(&c.joint_trans, alpha),
        emission: smooth_matrix(&c.emission, alpha),
    })
}

pub fn train_fhmm(train: &Dataset, alpha: f64) -> Result<FhmmParams> {
    train_fhmm_with(train, alpha, Exec::default())
}

pub fn train_fhmm_with(train: &Dataset, alpha: f64, exec: Exec) -> Result<FhmmParams> {
    check_alpha(alpha)?;
    let c = Counts::gather(train, exec)?;
    Ok(FhmmParams {
        space: train.label_space.clone(),
        symbols: train.codec.len(),
        alpha,
        priors: c.resident_priors.iter().map(|p| smooth_row(p, alpha)).collect(),
        transitions: c.resident_trans.iter().map(|a| smooth_matrix(a, alpha)).collect(),
        emission: smooth_matrix(&c.emission, alpha),
    })
}

impl HmmParams {
    pub fn joint_states(&self) -> usize {
        self.prior.len()
    }

    pub fn validate(&self) -> Result<()> {
        let j = self.space.combined_size();
        if self.prior.len() != j || self.transition.dim() != (j, j) || self.emission.dim() != (j, self.symbols + 1) {
            return Err(Error::Domain("HMM tables do not match J and S".into()));
        }
        check_rows("prior", &Array2::from_shape_vec((1, j), self.prior.clone()).unwrap())?;
        check_rows("transition", &self.transition)?;
        check_rows("emission", &self.emission)
    }

    pub fn log_tables(&self) -> LogHmm {
        LogHmm {
            init: self.prior.iter().map(|p| p.ln()).collect(),
            trans: self.transition.mapv(f64::ln),
            emit: self.emission.mapv(f64::ln),
        }
    }

    pub fn to_table(&self) -> TableFile {
        let mut f = TableFile::new("hmm");
        f.set("J", self.joint_states())
            .set("S", self.symbols)
            .set("M", self.space.residents())
            .set("K", join_usize(self.space.sizes()))
            .set("alpha", self.alpha)
            .push("prior", Block::vector(&self.prior))
            .push("transition", Block::matrix(&self.transition))
            .push("emission", Block::matrix(&self.emission));
        f
    }

    pub fn from_table(f: &TableFile) -> Result<Self> {
        if f.kind != "hmm" {
            return Err(Error::Config(format!("expected an hmm model, found {}", f.kind)));
        }
        let space = LabelSpace::with_sizes(&f.parse_list("K")?)?;
        let j = space.combined_size();
        let symbols: usize = f.parse("S")?;
        let p = Self {
            alpha: f.parse("alpha")?,
            prior: f.block_shaped("prior", 1, j)?.data.clone(),
            transition: f.block_shaped("transition", j, j)?.to_array2(),
            emission: f.block_shaped("emission", j, symbols + 1)?.to_array2(),
            space,
            symbols,
        };
        p.validate()?;
        Ok(p)
    }
}

impl FhmmParams {
    pub fn validate(&self) -> Result<()> {
        let j = self.space.combined_size();
        if self.emission.dim() != (j, self.symbols + 1) || self.transitions.len() != self.space.residents() {
            return Err(Error::Domain("fHMM tables do not match J and S".into()));
        }
        for (m, (p, a)) in self.priors.iter().zip(&self.transitions).enumerate() {
            let k = self.space.size(m);
            if p.len() != k || a.dim() != (j, k) {
                return Err(Error::Domain(format!("fHMM tables of resident {} have wrong shape", m + 1)));
            }
            check_rows("prior", &Array2::from_shape_vec((1, k), p.clone()).unwrap())?;
            check_rows("transition", a)?;
        }
        check_rows("emission", &self.emission)
    }

    /// Log tables of the joint chain: `init(j) = Σ_m log π_m(j_m)` and
    /// `trans(i, j) = Σ_m log A_m(i → j_m)`.
    pub fn log_tables(&self) -> LogHmm {
        let frames = self.space.frame_table();
        let joint = frames.len();
        let log_priors: Vec<Vec<f64>> = self.priors.iter().map(|p| p.iter().map(|v| v.ln()).collect()).collect();
        let log_trans: Vec<Array2<f64>> = self.transitions.iter().map(|a| a.mapv(f64::ln)).collect();
        let init = frames
            .iter()
            .map(|f| f.iter().enumerate().map(|(m, &a)| log_priors[m][a]).sum())
            .collect();
        let trans = Array2::from_shape_fn((joint, joint), |(i, j)| {
            frames[j].iter().enumerate().map(|(m, &a)| log_trans[m][[i, a]]).sum()
        });
        LogHmm { init, trans, emit: self.emission.mapv(f64::ln) }
    }

    /// The combined HMM with `A(i, j) = ∏_m A_m(i → j_m)` and
    /// `π(j) = ∏_m π_m(j_m)`, which defines the same joint distribution.
    pub fn product_embedding(&self) -> HmmParams {
        let frames = self.space.frame_table();
        let joint = frames.len();
        HmmParams {
            space: self.space.clone(),
            symbols: self.symbols,
            alpha: self.alpha,
            prior: frames
                .iter()
                .map(|f| f.iter().enumerate().map(|(m, &a)| self.priors[m][a]).product())
                .collect(),
            transition: Array2::from_shape_fn((joint, joint), |(i, j)| {
                frames[j].iter().enumerate().map(|(m, &a)| self.transitions[m][[i, a]]).product()
            }),
            emission: self.emission.clone(),
        }
    }

    pub fn to_table(&self) -> TableFile {
        let mut f = TableFile::new("fhmm");
        f.set("J", self.space.combined_size())
            .set("S", self.symbols)
            .set("M", self.space.residents())
            .set("K", join_usize(self.space.sizes()))
            .set("alpha", self.alpha);
        for m in 0..self.space.residents() {
            f.push(&format!("prior.{}", m + 1), Block::vector(&self.priors[m]));
            f.push(&format!("transition.{}", m + 1), Block::matrix(&self.transitions[m]));
        }
        f.push("emission", Block::matrix(&self.emission));
        f
    }

    pub fn from_table(f: &TableFile) -> Result<Self> {
        if f.kind != "fhmm" {
            return Err(Error::Config(format!("expected an fhmm model, found {}", f.kind)));
        }
        let space = LabelSpace::with_sizes(&f.parse_list("K")?)?;
        let j = space.combined_size();
        let symbols: usize = f.parse("S")?;
        let mut priors = Vec::new();
        let mut transitions = Vec::new();
        for m in 0..space.residents() {
            let k = space.size(m);
            priors.push(f.block_shaped(&format!("prior.{}", m + 1), 1, k)?.data.clone());
            transitions.push(f.block_shaped(&format!("transition.{}", m + 1), j, k)?.to_array2());
        }
        let p = Self {
            alpha: f.parse("alpha")?,
            emission: f.block_shaped("emission", j, symbols + 1)?.to_array2(),
            priors,
            transitions,
            space,
            symbols,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Joint-state Viterbi path of the combined HMM.
pub fn viterbi(params: &HmmParams, obs: &[Observation]) -> Vec<usize> {
    params.log_tables().viterbi(obs)
}

/// Per-resident label sequences from exact joint-space decoding of the
/// factorial HMM.
pub fn viterbi_fhmm(params: &FhmmParams, obs: &[Observation]) -> Vec<Vec<usize>> {
    let path = params.log_tables().viterbi(obs);
    split_path(&params.space, &path)
}

/// Splits a combined-state path into one sequence per resident.
pub fn split_path(space: &LabelSpace, path: &[usize]) -> Vec<Vec<usize>> {
    let frames: Vec<_> = path.iter().map(|&j| space.decode_unchecked(j)).collect();
    (0..space.residents()).map(|m| frames.iter().map(|f| f.0[m]).collect()).collect()
}

pub fn hmm_log_likelihood(params: &HmmParams, inst: &SequenceInstance) -> Result<f64> {
    let states = inst.combined_labels(&params.space)?;
    Ok(params.log_tables().log_likelihood(&inst.observations, &states))
}

pub fn fhmm_log_likelihood(params: &FhmmParams, inst: &SequenceInstance) -> Result<f64> {
    let states = inst.combined_labels(&params.space)?;
    Ok(params.log_tables().log_likelihood(&inst.observations, &states))
}
