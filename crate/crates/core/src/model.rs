//! Uniform train / predict / save / load over all model families.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::crf::{
    crf_decode, fcrf_decode, train_crf_with, train_fcrf_with, CrfParams, FcrfParams, LbfgsConfig, LbfgsReport,
};
use crate::datamodel::{ActivityFrame, Dataset, LabelSpace, Observation, ObservationCodec};
use crate::error::{Error, Result};
use crate::eval::metrics::PredictionSet;
use crate::hmm::{train_fhmm_with, train_hmm_with, viterbi, viterbi_fhmm, FhmmParams, HmmParams};
use crate::par::Exec;
use crate::rnn::{rnn_decode, train_rnn, Cell, Head, RnnConfig, RnnParams, TrainingTrace};
use crate::tables::{Block, TableFile};

/// Label encoding; the same two options as the recurrent heads.
pub type Encoding = Head;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Hmm,
    Fhmm,
    Crf,
    Fcrf,
    Rnn(Cell),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ModelKind {
    pub family: Family,
    pub encoding: Encoding,
}

impl ModelKind {
    pub fn new(family: Family, encoding: Encoding) -> Result<Self> {
        let ok = match family {
            Family::Hmm | Family::Crf => encoding == Head::Combined,
            Family::Fhmm | Family::Fcrf => encoding == Head::Separate,
            Family::Rnn(_) => true,
        };
        if !ok {
            let name = Self { family, encoding: Head::Combined }.name();
            return Err(Error::Config(format!("{name} does not support {} labels", encoding.name())));
        }
        Ok(Self { family, encoding })
    }

    /// The ten benchmark rows, in report order.
    pub fn table_rows() -> Vec<ModelKind> {
        let mut rows = Vec::new();
        for cell in [Cell::Tanh, Cell::Gru, Cell::Lstm] {
            rows.push(Self { family: Family::Rnn(cell), encoding: Head::Combined });
            rows.push(Self { family: Family::Rnn(cell), encoding: Head::Separate });
        }
        rows.push(Self { family: Family::Hmm, encoding: Head::Combined });
        rows.push(Self { family: Family::Fhmm, encoding: Head::Separate });
        rows.push(Self { family: Family::Crf, encoding: Head::Combined });
        rows.push(Self { family: Family::Fcrf, encoding: Head::Separate });
        rows
    }

    pub fn name(&self) -> String {
        match self.family {
            Family::Hmm => "HMM".into(),
            Family::Fhmm => "fHMM".into(),
            Family::Crf => "CRF".into(),
            Family::Fcrf => "fCRF".into(),
            Family::Rnn(cell) => {
                let prefix = if self.encoding == Head::Separate { "mRNN" } else { "RNN" };
                format!("{prefix}_{}", cell.name())
            }
        }
    }

    pub fn is_rnn(&self) -> bool {
        matches!(self.family, Family::Rnn(_))
    }

    /// Families whose training involves no randomness.
    pub fn is_deterministic(&self) -> bool {
        !self.is_rnn()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Accepts the report names case-insensitively (`hmm`, `fcrf`, `mrnn_gru`, …).
impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::table_rows()
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown model {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Hyperparams {
    /// Laplace smoothing for HMM/fHMM.
    pub alpha: f64,
    pub hidden: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// L-BFGS iteration cap for CRF/fCRF.
    pub max_iter: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub clip: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            alpha: 1e-2,
            hidden: 50,
            learning_rate: 1e-2,
            seed: 0,
            max_iter: 1000,
            max_epochs: 200,
            patience: 10,
            clip: 5.0,
        }
    }
}

impl Hyperparams {
    pub fn rnn_config(&self, cell: Cell, head: Head) -> RnnConfig {
        RnnConfig {
            cell,
            head,
            hidden: self.hidden,
            learning_rate: self.learning_rate,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed: self.seed,
            clip: self.clip,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Hmm(HmmParams),
    Fhmm(FhmmParams),
    Crf(CrfParams),
    Fcrf(FcrfParams),
    Rnn(RnnParams),
}

#[derive(Clone, Debug)]
pub enum TrainDetail {
    Counts,
    Lbfgs(LbfgsReport),
    Epochs(TrainingTrace),
}

pub fn train_model(
    kind: ModelKind,
    hp: &Hyperparams,
    train: &Dataset,
    val: Option<&Dataset>,
    exec: Exec,
) -> Result<(Model, TrainDetail)> {
    let lbfgs = LbfgsConfig { max_iter: hp.max_iter, ..Default::default() };
    Ok(match kind.family {
        Family::Hmm => (Model::Hmm(train_hmm_with(train, hp.alpha, exec)?), TrainDetail::Counts),
        Family::Fhmm => (Model::Fhmm(train_fhmm_with(train, hp.alpha, exec)?), TrainDetail::Counts),
        Family::Crf => {
            let (p, rep) = train_crf_with(train, &lbfgs, exec)?;
            (Model::Crf(p), TrainDetail::Lbfgs(rep))
        }
        Family::Fcrf => {
            let (p, rep) = train_fcrf_with(train, &lbfgs, exec)?;
            (Model::Fcrf(p), TrainDetail::Lbfgs(rep))
        }
        Family::Rnn(cell) => {
            let val = val.ok_or_else(|| Error::Config("recurrent models need a validation set".into()))?;
            let (p, trace) = train_rnn(train, val, &hp.rnn_config(cell, kind.encoding))?;
            (Model::Rnn(p), TrainDetail::Epochs(trace))
        }
    })
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Hmm(_) => ModelKind { family: Family::Hmm, encoding: Head::Combined },
            Model::Fhmm(_) => ModelKind { family: Family::Fhmm, encoding: Head::Separate },
            Model::Crf(_) => ModelKind { family: Family::Crf, encoding: Head::Combined },
            Model::Fcrf(_) => ModelKind { family: Family::Fcrf, encoding: Head::Separate },
            Model::Rnn(p) => ModelKind { family: Family::Rnn(p.cell), encoding: p.head },
        }
    }

    /// Label space the model predicts in. CRF weights only know the combined
    /// size, so a plain CRF reports a single-resident space of that size.
    pub fn label_sizes(&self) -> Vec<usize> {
        match self {
            Model::Hmm(p) => p.space.sizes().to_vec(),
            Model::Fhmm(p) => p.space.sizes().to_vec(),
            Model::Crf(p) => vec![p.labels()],
            Model::Fcrf(p) => p.space().sizes().to_vec(),
            Model::Rnn(p) => p.space.sizes().to_vec(),
        }
    }

    /// Decodes one sequence. A plain CRF needs `space` to split combined labels.
    pub fn predict(&self, obs: &[Observation], space: &LabelSpace) -> Result<Vec<ActivityFrame>> {
        if obs.is_empty() {
            return Err(Error::Domain("cannot decode an empty sequence".into()));
        }
        let split = |path: Vec<usize>| path.into_iter().map(|j| space.decode(j)).collect::<Result<Vec<_>>>();
        match self {
            Model::Hmm(p) => split(viterbi(p, obs)),
            Model::Crf(p) => {
                if p.labels() != space.combined_size() {
                    return Err(Error::Config(format!(
                        "CRF has {} labels, data has {}",
                        p.labels(),
                        space.combined_size()
                    )));
                }
                split(crf_decode(p, obs))
            }
            Model::Fhmm(p) => Ok(transpose(viterbi_fhmm(p, obs))),
            Model::Fcrf(p) => Ok(transpose(fcrf_decode(p, obs))),
            Model::Rnn(p) => rnn_decode(p, obs),
        }
    }

    pub fn predict_dataset(&self, ds: &Dataset, exec: Exec) -> Result<PredictionSet> {
        let sizes = self.label_sizes();
        let compatible = match self {
            Model::Crf(p) => p.labels() == ds.label_space.combined_size(),
            _ => sizes == ds.label_space.sizes(),
        };
        if !compatible {
            return Err(Error::Config(format!(
                "model labels {sizes:?} do not match data labels {:?}",
                ds.label_space.sizes()
            )));
        }
        let preds = exec.map(&ds.instances, |inst| self.predict(&inst.observations, &ds.label_space));
        Ok(PredictionSet::new(preds.into_iter().collect::<Result<_>>()?))
    }

    pub fn to_table(&self) -> TableFile {
        match self {
            Model::Hmm(p) => p.to_table(),
            Model::Fhmm(p) => p.to_table(),
            Model::Crf(p) => p.to_table(),
            Model::Fcrf(p) => p.to_table(),
            Model::Rnn(p) => p.to_table(),
        }
    }

    pub fn from_table(f: &TableFile) -> Result<Self> {
        match f.kind.as_str() {
            "hmm" => Ok(Model::Hmm(HmmParams::from_table(f)?)),
            "fhmm" => Ok(Model::Fhmm(FhmmParams::from_table(f)?)),
            "crf" => Ok(Model::Crf(CrfParams::from_table(f)?)),
            "fcrf" => Ok(Model::Fcrf(FcrfParams::from_table(f)?)),
            "rnn" => Ok(Model::Rnn(RnnParams::from_table(f)?)),
            other => Err(Error::Config(format!("unknown model kind {other:?}"))),
        }
    }

    /// Writes the model together with the training symbol table, so that
    /// new data can be symbolized the same way.
    pub fn save(&self, codec: &ObservationCodec, path: &Path) -> Result<()> {
        let mut f = self.to_table();
        let mut rows = Vec::with_capacity(codec.len() * codec.dim());
        codec.rows().iter().for_each(|r| rows.extend_from_slice(r));
        f.set("codec.sensors", codec.sensor_names().join(","));
        f.push("codec", Block { rows: codec.len(), cols: codec.dim(), data: rows });
        f.write(path)
    }

    pub fn load(path: &Path) -> Result<(Self, ObservationCodec)> {
        let f = TableFile::read(path)?;
        let model = Self::from_table(&f)?;
        let block = f.block("codec")?;
        let rows = block.data.chunks(block.cols.max(1)).map(|c| c.to_vec()).collect();
        let names = f.get("codec.sensors")?.split(',').map(str::to_string).collect();
        let codec = ObservationCodec::from_rows(rows, block.cols, names)?;
        Ok((model, codec))
    }
}

fn transpose(per_resident: Vec<Vec<usize>>) -> Vec<ActivityFrame> {
    let len = per_resident.first().map_or(0, Vec::len);
    (0..len).map(|t| ActivityFrame(per_resident.iter().map(|r| r[t]).collect())).collect()
}
