use rand::seq::SliceRandom;

use super::{decode_probs, rnn_backward, rnn_forward, rnn_loss, rng_for, targets, RnnConfig, RnnParams};
use crate::datamodel::{Dataset, SequenceInstance};
use crate::error::{Error, Result};
use crate::eval::metrics::{accuracy_all, PredictionSet};

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-instance loss seen during the epoch's SGD pass.
    pub train_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingTrace {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
}

impl TrainingTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_accuracy_all\n");
        for r in &self.epochs {
            out.push_str(&format!("{},{},{}\n", r.epoch, r.train_loss, r.val_accuracy));
        }
        out
    }
}

fn predict_all(params: &RnnParams, data: &[SequenceInstance]) -> Result<PredictionSet> {
    let predictions = data
        .iter()
        .map(|inst| Ok(decode_probs(params.head, &params.space, &rnn_forward(params, &inst.observations)?.probs)))
        .collect::<Result<_>>()?;
    Ok(PredictionSet::new(predictions))
}

/// Per-instance SGD with early stopping on validation joint accuracy.
///
/// Sequential by construction: the visiting order is part of the result.
pub fn train_rnn(train: &Dataset, val: &Dataset, cfg: &RnnConfig) -> Result<(RnnParams, TrainingTrace)> {
    cfg.validate()?;
    if train.instances.is_empty() {
        return Err(Error::Training("training set is empty".into()));
    }
    if val.instances.is_empty() {
        return Err(Error::Training("validation set is empty".into()));
    }
    if train.label_space != val.label_space {
        return Err(Error::Config("training and validation label spaces differ".into()));
    }
    let space = &train.label_space;
    let mut rng = rng_for(cfg.seed);
    let mut params = RnnParams::init(cfg, train.dim(), space, &mut rng);
    let all_targets = train
        .instances
        .iter()
        .map(|inst| targets(cfg.head, space, &inst.activities))
        .collect::<Result<Vec<_>>>()?;

    let mut order: Vec<usize> = (0..train.instances.len()).collect();
    let mut best = (f64::NEG_INFINITY, params.clone());
    let mut trace = TrainingTrace::default();
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for &i in &order {
            let inst = &train.instances[i];
            let fwd = rnn_forward(&params, &inst.observations)?;
            let loss = rnn_loss(&fwd.probs, &all_targets[i])?;
            if !loss.is_finite() {
                return Err(Error::Training(format!("loss diverged at epoch {epoch}, instance {}", inst.day_id)));
            }
            loss_sum += loss;
            let grad = rnn_backward(&params, &inst.observations, &all_targets[i], cfg.clip).map_err(|e| match e {
                Error::Training(msg) => Error::Training(format!("{msg} at epoch {epoch}, instance {}", inst.day_id)),
                other => other,
            })?;
            params.add_scaled(&grad, -cfg.learning_rate);
        }
        let val_accuracy = accuracy_all(&predict_all(&params, &val.instances)?, &val.instances)?;
        trace.epochs.push(EpochRecord { epoch, train_loss: loss_sum / order.len() as f64, val_accuracy });
        if val_accuracy > best.0 {
            best = (val_accuracy, params.clone());
            trace.best_epoch = epoch;
        }
        log::debug!("{} {} epoch {epoch}: val accuracy {val_accuracy:.4}", cfg.cell.name(), cfg.head.name());
        if epoch - trace.best_epoch >= cfg.patience {
            break;
        }
    }
    Ok((best.1, trace))
}
