//! Activities, observations and the two label encodings shared by every
//! model family.

use std::collections::HashSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-resident activity alphabets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpace {
    sizes: Vec<usize>,
    names: Vec<Vec<String>>,
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::Config("label space needs at least one resident".into()));
    }
    if sizes.contains(&0) {
        return Err(Error::Config(format!("empty activity alphabet in {sizes:?}")));
    }
    sizes
        .iter()
        .try_fold(1usize, |acc, &k| acc.checked_mul(k))
        .ok_or_else(|| Error::Config(format!("combined label space {sizes:?} overflows")))?;
    Ok(())
}

impl LabelSpace {
    pub fn new(sizes: Vec<usize>, names: Vec<Vec<String>>) -> Result<Self> {
        check_sizes(&sizes)?;
        if names.len() != sizes.len() || names.iter().zip(&sizes).any(|(n, &k)| n.len() != k) {
            return Err(Error::Config("activity name lists do not match alphabet sizes".into()));
        }
        Ok(Self { sizes, names })
    }

    /// Label space with generated names `r{m}_a{k}`.
    pub fn with_sizes(sizes: &[usize]) -> Result<Self> {
        check_sizes(sizes)?;
        let names = sizes
            .iter()
            .enumerate()
            .map(|(m, &k)| (0..k).map(|a| format!("r{}_a{}", m + 1, a)).collect())
            .collect();
        Self::new(sizes.to_vec(), names)
    }

    pub fn residents(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, m: usize) -> usize {
        self.sizes[m]
    }

    pub fn names(&self, m: usize) -> &[String] {
        &self.names[m]
    }

    /// Number of joint activity frames, `∏ K^m`.
    pub fn combined_size(&self) -> usize {
        self.sizes.iter().product()
    }

    /// Row-major mixed-radix index of a frame, resident 1 most significant.
    pub fn encode(&self, frame: &ActivityFrame) -> Result<usize> {
        if frame.0.len() != self.sizes.len() {
            return Err(Error::Domain(format!(
                "frame has {} labels, label space has {} residents",
                frame.0.len(),
                self.sizes.len()
            )));
        }
        let mut index = 0;
        for (m, (&label, &k)) in frame.0.iter().zip(&self.sizes).enumerate() {
            if label >= k {
                return Err(Error::Domain(format!(
                    "label {label} of resident {} outside alphabet of size {k}",
                    m + 1
                )));
            }
            index = index * k + label;
        }
        Ok(index)
    }

    pub fn decode(&self, index: usize) -> Result<ActivityFrame> {
        let total = self.combined_size();
        if index >= total {
            return Err(Error::Domain(format!("combined index {index} ≥ {total}")));
        }
        Ok(self.decode_unchecked(index))
    }

    pub(crate) fn decode_unchecked(&self, mut index: usize) -> ActivityFrame {
        let mut labels = vec![0; self.sizes.len()];
        for (slot, &k) in labels.iter_mut().zip(&self.sizes).rev() {
            *slot = index % k;
            index /= k;
        }
        ActivityFrame(labels)
    }

    /// Table of decoded frames for every combined index.
    pub fn frame_table(&self) -> Vec<Vec<usize>> {
        (0..self.combined_size()).map(|j| self.decode_unchecked(j).0).collect()
    }

    pub fn check(&self, frame: &ActivityFrame) -> Result<()> {
        self.encode(frame).map(|_| ())
    }
}

/// Free-function form of [`LabelSpace::encode`].
pub fn encode_combined(frame: &ActivityFrame, space: &LabelSpace) -> Result<usize> {
    space.encode(frame)
}

/// Free-function form of [`LabelSpace::decode`].
pub fn decode_combined(index: usize, space: &LabelSpace) -> Result<ActivityFrame> {
    space.decode(index)
}

/// Activities of all residents at one time step, 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActivityFrame(pub Vec<usize>);

impl ActivityFrame {
    pub fn labels(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for ActivityFrame {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Joint sensor-state symbol used as the HMM emission.
    pub symbol: usize,
    /// Sensor values in `[0, 1]`, used by CRFs and RNNs.
    pub features: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceInstance {
    pub day_id: String,
    pub observations: Vec<Observation>,
    pub activities: Vec<ActivityFrame>,
}

impl SequenceInstance {
    pub fn new(
        day_id: impl Into<String>,
        observations: Vec<Observation>,
        activities: Vec<ActivityFrame>,
    ) -> Result<Self> {
        let day_id = day_id.into();
        if observations.is_empty() {
            return Err(Error::Domain(format!("instance {day_id} is empty")));
        }
        if observations.len() != activities.len() {
            return Err(Error::Domain(format!(
                "instance {day_id}: {} observations vs {} activity frames",
                observations.len(),
                activities.len()
            )));
        }
        Ok(Self { day_id, observations, activities })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn symbols(&self) -> Vec<usize> {
        self.observations.iter().map(|o| o.symbol).collect()
    }

    /// Activities of resident `m` over time.
    pub fn resident_labels(&self, m: usize) -> Vec<usize> {
        self.activities.iter().map(|f| f.0[m]).collect()
    }

    pub fn combined_labels(&self, space: &LabelSpace) -> Result<Vec<usize>> {
        self.activities.iter().map(|f| space.encode(f)).collect()
    }
}

fn feature_key(features: &[f64]) -> Vec<u64> {
    // -0.0 and 0.0 are the same sensor state
    features.iter().map(|&v| if v == 0.0 { 0 } else { v.to_bits() }).collect()
}

/// Symbol table mapping distinct joint sensor states to dense ids.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationCodec {
    table: IndexMap<Vec<u64>, usize>,
    rows: Vec<Vec<f64>>,
    dim: usize,
    sensor_names: Vec<String>,
}

impl ObservationCodec {
    /// Assigns ids in order of first appearance.
    pub fn build<'a, I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut iter = rows.into_iter().peekable();
        let dim = match iter.peek() {
            Some(first) => first.len(),
            None => return Err(Error::Config("cannot build a codec from zero rows".into())),
        };
        let mut codec = Self {
            table: IndexMap::new(),
            rows: Vec::new(),
            dim,
            sensor_names: (0..dim).map(|d| format!("s{}", d + 1)).collect(),
        };
        for (i, row) in iter.enumerate() {
            if row.len() != dim {
                return Err(Error::Format {
                    location: format!("row {}", i + 1),
                    message: format!("expected {dim} features, found {}", row.len()),
                });
            }
            let key = feature_key(row);
            if !codec.table.contains_key(&key) {
                let id = codec.rows.len();
                codec.table.insert(key, id);
                codec.rows.push(row.to_vec());
            }
        }
        Ok(codec)
    }

    /// Rebuilds a codec from its serialized symbol table (ids in row order).
    pub fn from_rows(rows: Vec<Vec<f64>>, dim: usize, sensor_names: Vec<String>) -> Result<Self> {
        let mut table = IndexMap::new();
        for (id, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Format {
                    location: format!("symbol {id}"),
                    message: format!("expected {dim} features, found {}", row.len()),
                });
            }
            if table.insert(feature_key(row), id).is_some() {
                return Err(Error::Format {
                    location: format!("symbol {id}"),
                    message: "duplicate sensor state in symbol table".into(),
                });
            }
        }
        let mut codec = Self { table, rows, dim, sensor_names: Vec::new() };
        codec.set_sensor_names(sensor_names)?;
        Ok(codec)
    }

    pub fn set_sensor_names(&mut self, names: Vec<String>) -> Result<()> {
        if names.len() != self.dim {
            return Err(Error::Config(format!(
                "{} sensor names for {} features",
                names.len(),
                self.dim
            )));
        }
        self.sensor_names = names;
        Ok(())
    }

    pub fn sensor_names(&self) -> &[String] {
        &self.sensor_names
    }

    /// Number of known symbols `S`.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn unk_id(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lookup(&self, features: &[f64]) -> usize {
        self.table.get(&feature_key(features)).copied().unwrap_or(self.unk_id())
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn observation(&self, features: Vec<f64>) -> Observation {
        Observation { symbol: self.lookup(&features), features }
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub instances: Vec<SequenceInstance>,
    pub label_space: LabelSpace,
    pub codec: ObservationCodec,
}

impl Dataset {
    /// Validates shapes and re-symbolizes every observation with `codec`.
    pub fn new(
        instances: Vec<SequenceInstance>,
        label_space: LabelSpace,
        codec: ObservationCodec,
    ) -> Result<Self> {
        let mut ds = Self { instances, label_space, codec };
        ds.validate()?;
        ds.resymbolize();
        Ok(ds)
    }

    /// Builds the codec from the instances themselves.
    pub fn from_instances(instances: Vec<SequenceInstance>, label_space: LabelSpace) -> Result<Self> {
        let codec = ObservationCodec::build(
            instances.iter().flat_map(|i| i.observations.iter().map(|o| o.features.as_slice())),
        )?;
        Self::new(instances, label_space, codec)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for inst in &self.instances {
            if !seen.insert(inst.day_id.as_str()) {
                return Err(Error::Domain(format!("duplicate day id {}", inst.day_id)));
            }
            if inst.observations.len() != inst.activities.len() || inst.is_empty() {
                return Err(Error::Domain(format!("instance {} is misaligned or empty", inst.day_id)));
            }
            for o in &inst.observations {
                if o.features.len() != self.codec.dim() {
                    return Err(Error::Domain(format!(
                        "instance {}: feature length {} ≠ D = {}",
                        inst.day_id,
                        o.features.len(),
                        self.codec.dim()
                    )));
                }
            }
            for f in &inst.activities {
                self.label_space.check(f)?;
            }
        }
        Ok(())
    }

    fn resymbolize(&mut self) {
        let codec = &self.codec;
        for inst in &mut self.instances {
            for o in &mut inst.observations {
                o.symbol = codec.lookup(&o.features);
            }
        }
    }

    /// Same instances under a different codec (UNK fallback for unseen states).
    pub fn with_codec(&self, codec: ObservationCodec) -> Result<Self> {
        Self::new(self.instances.clone(), self.label_space.clone(), codec)
    }

    pub fn dim(&self) -> usize {
        self.codec.dim()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn total_steps(&self) -> usize {
        self.instances.iter().map(|i| i.len()).sum()
    }
}
