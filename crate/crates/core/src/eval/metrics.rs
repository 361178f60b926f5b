use serde::Serialize;

use crate::datamodel::{ActivityFrame, SequenceInstance};
use crate::error::{Error, Result};

/// Predicted frames for each test instance, in dataset order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PredictionSet {
    pub predictions: Vec<Vec<ActivityFrame>>,
}

impl PredictionSet {
    pub fn new(predictions: Vec<Vec<ActivityFrame>>) -> Self {
        Self { predictions }
    }

    pub fn check(&self, truth: &[SequenceInstance]) -> Result<()> {
        if self.predictions.len() != truth.len() {
            return Err(Error::Domain(format!(
                "{} predicted sequences for {} instances",
                self.predictions.len(),
                truth.len()
            )));
        }
        for (p, inst) in self.predictions.iter().zip(truth) {
            if p.len() != inst.len() {
                return Err(Error::Domain(format!(
                    "instance {}: {} predicted steps for {} observed",
                    inst.day_id,
                    p.len(),
                    inst.len()
                )));
            }
            if let Some((f, g)) = p.iter().zip(&inst.activities).find(|(f, g)| f.0.len() != g.0.len()) {
                return Err(Error::Domain(format!(
                    "instance {}: frame has {} residents, truth has {}",
                    inst.day_id,
                    f.0.len(),
                    g.0.len()
                )));
            }
        }
        Ok(())
    }
}

/// Mean over instances of the per-instance fraction of steps where `hit` holds.
fn per_instance_mean<F>(preds: &PredictionSet, truth: &[SequenceInstance], hit: F) -> Result<f64>
where
    F: Fn(&ActivityFrame, &ActivityFrame) -> bool,
{
    preds.check(truth)?;
    if truth.is_empty() {
        return Err(Error::Domain("no instances to score".into()));
    }
    let mut total = 0.0;
    for (p, inst) in preds.predictions.iter().zip(truth) {
        if inst.is_empty() {
            return Err(Error::Domain(format!("instance {} is empty", inst.day_id)));
        }
        let hits = p.iter().zip(&inst.activities).filter(|(a, b)| hit(a, b)).count();
        total += hits as f64 / inst.len() as f64;
    }
    Ok(total / truth.len() as f64)
}

/// Accuracy for resident `m`, each instance weighted equally.
pub fn accuracy_per_resident(preds: &PredictionSet, truth: &[SequenceInstance], m: usize) -> Result<f64> {
    if let Some(inst) = truth.iter().find(|i| i.activities.iter().any(|f| f.0.len() <= m)) {
        return Err(Error::Domain(format!("instance {} has no resident {}", inst.day_id, m + 1)));
    }
    per_instance_mean(preds, truth, |a, b| a.0[m] == b.0[m])
}

/// A step counts only when every resident is right.
pub fn accuracy_all(preds: &PredictionSet, truth: &[SequenceInstance]) -> Result<f64> {
    per_instance_mean(preds, truth, |a, b| a == b)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scores {
    pub residents: Vec<f64>,
    pub all: f64,
}

pub fn score(preds: &PredictionSet, truth: &[SequenceInstance], residents: usize) -> Result<Scores> {
    Ok(Scores {
        residents: (0..residents).map(|m| accuracy_per_resident(preds, truth, m)).collect::<Result<_>>()?,
        all: accuracy_all(preds, truth)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::Observation;

    fn inst(frames: &[[usize; 2]]) -> SequenceInstance {
        let obs = frames.iter().map(|_| Observation { symbol: 0, features: vec![0.0] }).collect();
        SequenceInstance::new("d", obs, frames.iter().map(|f| ActivityFrame(f.to_vec())).collect()).unwrap()
    }

    fn preds(frames: &[&[[usize; 2]]]) -> PredictionSet {
        PredictionSet::new(frames.iter().map(|s| s.iter().map(|f| ActivityFrame(f.to_vec())).collect()).collect())
    }

    #[test]
    fn direct_counts() {
        let truth = vec![inst(&[[0, 0], [1, 1], [2, 0], [1, 0]])];
        assert_eq!(accuracy_per_resident(&preds(&[&[[0, 0], [1, 1], [2, 0], [1, 0]]]), &truth, 0).unwrap(), 1.0);
        assert_eq!(accuracy_per_resident(&preds(&[&[[0, 0], [1, 1], [2, 0], [0, 0]]]), &truth, 0).unwrap(), 0.75);
    }

    #[test]
    fn joint_match_rule() {
        let truth = vec![inst(&[[0, 0], [0, 1], [0, 0], [0, 1]])];
        let p = preds(&[&[[0, 0], [0, 0], [0, 0], [0, 0]]]);
        assert_eq!(accuracy_per_resident(&p, &truth, 0).unwrap(), 1.0);
        assert_eq!(accuracy_all(&p, &truth).unwrap(), 0.5);
    }

    #[test]
    fn misaligned_is_domain_error() {
        let truth = vec![inst(&[[0, 0], [0, 1]])];
        assert!(matches!(accuracy_all(&preds(&[&[[0, 0]]]), &truth), Err(Error::Domain(_))));
        assert!(matches!(accuracy_all(&preds(&[]), &truth), Err(Error::Domain(_))));
        assert!(accuracy_per_resident(&preds(&[&[[0, 0], [0, 1]]]), &truth, 2).is_err());
    }
}
