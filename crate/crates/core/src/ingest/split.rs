use crate::datamodel::{Dataset, ObservationCodec};
use crate::error::{Error, Result};

/// Chronological day counts: the first `train` days, then `val`, then `test`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitSpec {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitSpec {
    pub const fn new(train: usize, val: usize, test: usize) -> Self {
        Self { train, val, test }
    }

    /// CASAS protocol: 24 / 1 / 1 days.
    pub const CASAS: SplitSpec = SplitSpec::new(24, 1, 1);
    /// ARAS protocol: 7 / 2 / 2 days (the first 11 days are used).
    pub const ARAS: SplitSpec = SplitSpec::new(7, 2, 2);

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }

    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse().map_err(|_| Error::Config(format!("bad split {s:?}"))))
            .collect::<Result<_>>()?;
        match parts[..] {
            [train, val, test] => Ok(Self::new(train, val, test)),
            _ => Err(Error::Config(format!("split needs train,val,test; got {s:?}"))),
        }
    }
}

impl std::fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{},{}", self.train, self.val, self.test)
    }
}

/// Partitions whole days chronologically. The codec is rebuilt from the
/// training days and applied to all three parts, so unseen sensor states in
/// validation and test map to UNK.
pub fn split_by_days(ds: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    if spec.train == 0 || spec.test == 0 {
        return Err(Error::Config(format!("split {spec} needs at least one train and one test day")));
    }
    if spec.total() > ds.len() {
        return Err(Error::Config(format!(
            "split {spec} needs {} days, dataset has {}",
            spec.total(),
            ds.len()
        )));
    }
    let train_days = &ds.instances[..spec.train];
    let val_days = &ds.instances[spec.train..spec.train + spec.val];
    let test_days = &ds.instances[spec.train + spec.val..spec.total()];

    let mut codec = ObservationCodec::build(
        train_days.iter().flat_map(|i| i.observations.iter().map(|o| o.features.as_slice())),
    )?;
    codec.set_sensor_names(ds.codec.sensor_names().to_vec())?;
    let part = |days: &[crate::SequenceInstance]| {
        Dataset::new(days.to_vec(), ds.label_space.clone(), codec.clone())
    };
    Ok((part(train_days)?, part(val_days)?, part(test_days)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{ActivityFrame, LabelSpace, Observation, SequenceInstance};
    use std::collections::HashSet;

    fn days(n: usize) -> Dataset {
        let instances = (0..n)
            .map(|d| {
                let obs = vec![Observation { symbol: 0, features: vec![d as f64 / n as f64] }];
                SequenceInstance::new(format!("d{d:02}"), obs, vec![ActivityFrame(vec![0])]).unwrap()
            })
            .collect();
        Dataset::from_instances(instances, LabelSpace::with_sizes(&[1]).unwrap()).unwrap()
    }

    #[test]
    fn casas_and_aras_protocols() {
        let (tr, va, te) = split_by_days(&days(26), SplitSpec::CASAS).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (24, 1, 1));
        let (tr, va, te) = split_by_days(&days(30), SplitSpec::ARAS).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (7, 2, 2));
        assert_eq!(tr.instances[0].day_id, "d00");
        assert_eq!(te.instances[1].day_id, "d10");
    }

    #[test]
    fn oversubscription_is_rejected() {
        assert!(matches!(split_by_days(&days(26), SplitSpec::new(30, 2, 2)), Err(Error::Config(_))));
        assert!(split_by_days(&days(5), SplitSpec::new(0, 1, 1)).is_err());
    }

    #[test]
    fn parts_are_disjoint_and_codec_comes_from_train() {
        let ds = days(10);
        let (tr, va, te) = split_by_days(&ds, SplitSpec::new(6, 0, 4)).unwrap();
        let ids: Vec<&str> = [&tr, &va, &te]
            .iter()
            .flat_map(|p| p.instances.iter().map(|i| i.day_id.as_str()))
            .collect();
        let unique: HashSet<_> = ids.iter().collect();
        assert_eq!(unique.len(), 10);
        assert_eq!(tr.codec.len(), 6);
        // every test day has a sensor state unseen in training
        assert!(te.instances.iter().all(|i| i.observations[0].symbol == tr.codec.unk_id()));
        assert_eq!(SplitSpec::parse("24, 1,1").unwrap(), SplitSpec::CASAS);
    }
}
