//! Synthetic multi-resident traces sampled from a cross-dependent factorial
//! HMM: each resident's next activity depends on the full previous joint
//! frame, and a single emission table is shared by all joint frames.
//!
//! Observations are one-hot vectors over the `S` generator symbols, so the
//! feature view and the symbol view carry the same information.

use ndarray::Array2;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datamodel::{ActivityFrame, Dataset, LabelSpace, Observation, SequenceInstance};
use crate::error::{Error, Result};

const ROW_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub sizes: Vec<usize>,
    /// Number of generator symbols `S` (= feature dimension).
    pub symbols: usize,
    pub steps_per_day: usize,
    pub days: usize,
    /// `priors[m]` over `K^m`.
    pub priors: Vec<Vec<f64>>,
    /// `transitions[m]` is `J × K^m`, row indexed by the previous joint frame.
    pub transitions: Vec<Array2<f64>>,
    /// `J × S`.
    pub emission: Array2<f64>,
    /// Probability that an emitted symbol is replaced by a uniform one.
    pub noise: f64,
    pub seed: u64,
}

/// Knobs for [`SynthConfig::random`].
#[derive(Clone, Copy, Debug)]
pub struct SynthShape {
    /// Extra weight on a resident keeping its previous activity.
    pub stickiness: f64,
    /// Extra weight on copying the previous activity of the next resident;
    /// this is the cross-resident coupling.
    pub coupling: f64,
    /// Extra weight on each joint frame's two signature symbols.
    pub peak: f64,
}

impl Default for SynthShape {
    fn default() -> Self {
        Self { stickiness: 4.0, coupling: 0.0, peak: 6.0 }
    }
}

fn normalize(row: &mut [f64]) {
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|v| *v /= s);
}

impl SynthConfig {
    pub fn label_space(&self) -> Result<LabelSpace> {
        LabelSpace::with_sizes(&self.sizes)
    }

    /// Random generator parameters drawn from `param_seed`; sampling uses
    /// `seed`.
    pub fn random(
        sizes: &[usize],
        symbols: usize,
        steps_per_day: usize,
        days: usize,
        shape: SynthShape,
        param_seed: u64,
        seed: u64,
    ) -> Result<Self> {
        let space = LabelSpace::with_sizes(sizes)?;
        let joint = space.combined_size();
        let frames = space.frame_table();
        let mut rng = ChaCha8Rng::seed_from_u64(param_seed);
        let m_count = sizes.len();

        let priors = sizes
            .iter()
            .map(|&k| {
                let mut p: Vec<f64> = (0..k).map(|_| rng.gen_range(0.5..1.0)).collect();
                normalize(&mut p);
                p
            })
            .collect();
        let transitions = (0..m_count)
            .map(|m| {
                let k = sizes[m];
                let mut a = Array2::zeros((joint, k));
                for (i, prev) in frames.iter().enumerate() {
                    let mut row: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
                    row[prev[m]] += shape.stickiness;
                    if m_count > 1 {
                        let other = prev[(m + 1) % m_count];
                        row[other % k] += shape.coupling;
                    }
                    normalize(&mut row);
                    a.row_mut(i).iter_mut().zip(&row).for_each(|(d, s)| *d = *s);
                }
                a
            })
            .collect();
        let mut emission = Array2::zeros((joint, symbols));
        for j in 0..joint {
            let mut row: Vec<f64> = (0..symbols).map(|_| rng.gen_range(0.05..1.0)).collect();
            row[j % symbols] += shape.peak;
            row[(3 * j + 1) % symbols] += shape.peak / 2.0;
            normalize(&mut row);
            emission.row_mut(j).iter_mut().zip(&row).for_each(|(d, s)| *d = *s);
        }
        let cfg = Self {
            sizes: sizes.to_vec(),
            symbols,
            steps_per_day,
            days,
            priors,
            transitions,
            emission,
            noise: 0.0,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let space = self.label_space()?;
        let joint = space.combined_size();
        if self.symbols == 0 || self.steps_per_day == 0 || self.days == 0 {
            return Err(Error::Config("symbols, steps per day and days must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(Error::Config(format!("noise rate {} outside [0, 1)", self.noise)));
        }
        let check_row = |row: &[f64], what: &str| -> Result<()> {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::Config(format!("{what} is not a distribution (sum {sum})")));
            }
            Ok(())
        };
        if self.priors.len() != self.sizes.len() || self.transitions.len() != self.sizes.len() {
            return Err(Error::Config("need one prior and one transition table per resident".into()));
        }
        for (m, (p, &k)) in self.priors.iter().zip(&self.sizes).enumerate() {
            if p.len() != k {
                return Err(Error::Config(format!("prior of resident {} has wrong length", m + 1)));
            }
            check_row(p, &format!("prior of resident {}", m + 1))?;
        }
        for (m, (a, &k)) in self.transitions.iter().zip(&self.sizes).enumerate() {
            if a.dim() != (joint, k) {
                return Err(Error::Config(format!("transition table of resident {} has wrong shape", m + 1)));
            }
            for (i, row) in a.rows().into_iter().enumerate() {
                check_row(row.as_slice().expect("standard layout"), &format!("transition row {i} of resident {}", m + 1))?;
            }
        }
        if self.emission.dim() != (joint, self.symbols) {
            return Err(Error::Config("emission table has wrong shape".into()));
        }
        for (j, row) in self.emission.rows().into_iter().enumerate() {
            check_row(row.as_slice().expect("standard layout"), &format!("emission row {j}"))?;
        }
        Ok(())
    }

    /// Joint transition `A(i, j) = ∏_m A_m(i → j_m)`.
    pub fn joint_transition(&self) -> Array2<f64> {
        let space = self.label_space().expect("validated");
        let frames = space.frame_table();
        let joint = frames.len();
        Array2::from_shape_fn((joint, joint), |(i, j)| {
            frames[j].iter().enumerate().map(|(m, &a)| self.transitions[m][[i, a]]).product()
        })
    }

    /// Joint prior `π(j) = ∏_m π_m(j_m)`.
    pub fn joint_prior(&self) -> Vec<f64> {
        let space = self.label_space().expect("validated");
        space
            .frame_table()
            .iter()
            .map(|f| f.iter().enumerate().map(|(m, &a)| self.priors[m][a]).product())
            .collect()
    }
}

/// Generator symbol carried by a synthetic one-hot observation.
pub fn generator_symbol(features: &[f64]) -> usize {
    features.iter().position(|&v| v == 1.0).expect("synthetic observations are one-hot")
}

/// Samples `cfg.days` independent day sequences. Deterministic in `cfg.seed`.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let space = cfg.label_space()?;
    let frames = space.frame_table();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dist = |w: &[f64]| WeightedIndex::new(w).map_err(|e| Error::Config(e.to_string()));
    let priors = cfg.priors.iter().map(|p| dist(p)).collect::<Result<Vec<_>>>()?;
    let transitions = cfg
        .transitions
        .iter()
        .map(|a| a.rows().into_iter().map(|r| dist(r.as_slice().unwrap())).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let emissions = cfg
        .emission
        .rows()
        .into_iter()
        .map(|r| dist(r.as_slice().unwrap()))
        .collect::<Result<Vec<_>>>()?;

    let mut instances = Vec::with_capacity(cfg.days);
    for day in 0..cfg.days {
        let mut observations = Vec::with_capacity(cfg.steps_per_day);
        let mut activities = Vec::with_capacity(cfg.steps_per_day);
        let mut prev: Option<usize> = None;
        for _ in 0..cfg.steps_per_day {
            let labels: Vec<usize> = match prev {
                None => priors.iter().map(|d| d.sample(&mut rng)).collect(),
                Some(i) => transitions.iter().map(|t| t[i].sample(&mut rng)).collect(),
            };
            let frame = ActivityFrame(labels);
            let j = space.encode(&frame)?;
            debug_assert_eq!(frames[j], frame.0);
            let mut symbol = emissions[j].sample(&mut rng);
            if cfg.noise > 0.0 && rng.gen::<f64>() < cfg.noise {
                symbol = rng.gen_range(0..cfg.symbols);
            }
            let mut features = vec![0.0; cfg.symbols];
            features[symbol] = 1.0;
            observations.push(Observation { symbol, features });
            activities.push(frame);
            prev = Some(j);
        }
        instances.push(SequenceInstance::new(format!("synth{day:03}"), observations, activities)?);
    }
    let mut ds = Dataset::from_instances(instances, space)?;
    ds.codec.set_sensor_names((0..cfg.symbols).map(|s| format!("sym{s}")).collect())?;
    Ok(ds)
}
