//! Run configuration: TOML sections, merged from files in order, then
//! overridden by flags. Every key can be set from the command line as
//! `--set section.key=value`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use toml::{Table, Value};

use mrar::eval::grid::{hidden_grid, learning_rate_grid, smoothing_grid};
use mrar::eval::{BenchmarkPlan, DatasetInput};
use mrar::ingest::synth::{SynthConfig, SynthShape};
use mrar::ingest::{generate_synthetic, load_aras, load_canonical, load_casas, split_by_days, SplitSpec};
use mrar::model::Hyperparams;
use mrar::{Dataset, Exec, ModelKind};

use crate::Failure;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub grid: GridSection,
    pub hmm: HmmSection,
    pub crf: CrfSection,
    pub rnn: RnnSection,
    pub data: BTreeMap<String, DataSource>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Comma-separated model names, or `all`.
    pub models: String,
    pub seed: u64,
    pub repeats: usize,
    pub out: PathBuf,
    /// `parallel` or `sequential`.
    pub exec: String,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { models: "all".into(), seed: 0, repeats: 50, out: "results".into(), exec: "parallel".into() }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub alpha: Vec<f64>,
    pub hidden: Vec<f64>,
    pub learning_rate: Vec<f64>,
    pub max_expansions: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { alpha: smoothing_grid(), hidden: hidden_grid(), learning_rate: learning_rate_grid(), max_expansions: 2 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HmmSection {
    pub alpha: f64,
}

impl Default for HmmSection {
    fn default() -> Self {
        Self { alpha: Hyperparams::default().alpha }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrfSection {
    pub max_iter: usize,
}

impl Default for CrfSection {
    fn default() -> Self {
        Self { max_iter: Hyperparams::default().max_iter }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RnnSection {
    pub hidden: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub clip: f64,
}

impl Default for RnnSection {
    fn default() -> Self {
        let hp = Hyperparams::default();
        Self {
            hidden: hp.hidden,
            learning_rate: hp.learning_rate,
            max_epochs: hp.max_epochs,
            patience: hp.patience,
            clip: hp.clip,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "format", rename_all = "lowercase")]
pub enum DataSource {
    Casas(FileSource),
    Aras(ArasSource),
    Canonical(FileSource),
    Synth(SynthSpec),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSource {
    pub path: PathBuf,
    pub split: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArasSource {
    pub path: PathBuf,
    pub house: String,
    pub split: Option<String>,
}

/// Generator settings, shared by the `synth` command and `format = "synth"`
/// data sections.
#[derive(Args, Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    /// Activity alphabet size per resident.
    #[arg(long, value_delimiter = ',', default_value = "3,3")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 8)]
    pub symbols: usize,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    #[arg(long, default_value_t = 100)]
    pub days: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Seed for the generator tables.
    #[arg(long, default_value_t = 0)]
    pub param_seed: u64,
    /// Seed for sampling.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = SynthShape::default().stickiness)]
    pub stickiness: f64,
    #[arg(long, default_value_t = SynthShape::default().coupling)]
    pub coupling: f64,
    #[arg(long, default_value_t = SynthShape::default().peak)]
    pub peak: f64,
    #[arg(skip)]
    pub split: Option<String>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        let shape = SynthShape::default();
        Self {
            sizes: vec![3, 3],
            symbols: 8,
            steps: 500,
            days: 100,
            noise: 0.0,
            param_seed: 0,
            seed: 1,
            stickiness: shape.stickiness,
            coupling: shape.coupling,
            peak: shape.peak,
            split: None,
        }
    }
}

impl SynthSpec {
    pub fn generator(&self) -> Result<SynthConfig, Failure> {
        let shape = SynthShape { stickiness: self.stickiness, coupling: self.coupling, peak: self.peak };
        let mut cfg =
            SynthConfig::random(&self.sizes, self.symbols, self.steps, self.days, shape, self.param_seed, self.seed)?;
        cfg.noise = self.noise;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl DataSource {
    pub fn path(&self) -> Option<&Path> {
        match self {
            DataSource::Casas(f) | DataSource::Canonical(f) => Some(&f.path),
            DataSource::Aras(a) => Some(&a.path),
            DataSource::Synth(_) => None,
        }
    }

    pub fn split(&self) -> Result<SplitSpec, Failure> {
        let given = match self {
            DataSource::Casas(f) | DataSource::Canonical(f) => &f.split,
            DataSource::Aras(a) => &a.split,
            DataSource::Synth(s) => &s.split,
        };
        match (given, self) {
            (Some(s), _) => Ok(SplitSpec::parse(s)?),
            (None, DataSource::Casas(_)) => Ok(SplitSpec::CASAS),
            (None, DataSource::Aras(_)) => Ok(SplitSpec::ARAS),
            (None, _) => Err(Failure::config("canonical and synthetic data need an explicit split")),
        }
    }

    pub fn load(&self) -> Result<Dataset, Failure> {
        Ok(match self {
            DataSource::Casas(f) => load_casas(&f.path)?,
            DataSource::Aras(a) => load_aras(&a.path, a.house.parse()?)?,
            DataSource::Canonical(f) => load_canonical(&f.path)?,
            DataSource::Synth(spec) => generate_synthetic(&spec.generator()?)?,
        })
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if let Some(p) = self.path() {
            if !p.exists() {
                return Err(Failure::config(format!("data path {} does not exist", p.display())));
            }
        }
        if let DataSource::Aras(a) = self {
            a.house.parse::<mrar::ingest::ArasHouse>()?;
        }
        if let DataSource::Synth(spec) = self {
            spec.generator()?;
        }
        self.split()?;
        Ok(())
    }
}

/// Parses a model list; `all` expands to the full ten-row matrix.
pub fn parse_models(list: &str) -> Result<Vec<ModelKind>, Failure> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(ModelKind::table_rows());
    }
    let mut out: Vec<ModelKind> = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let kind: ModelKind = name.parse()?;
        if out.contains(&kind) {
            return Err(Failure::config(format!("model {name} listed twice")));
        }
        out.push(kind);
    }
    if out.is_empty() {
        return Err(Failure::config("no models requested"));
    }
    Ok(out)
}

pub fn parse_exec(s: &str) -> Result<Exec, Failure> {
    match s {
        "parallel" => Ok(Exec::Parallel),
        "sequential" => Ok(Exec::Sequential),
        _ => Err(Failure::config(format!("exec must be parallel or sequential, got {s:?}"))),
    }
}

impl RunConfig {
    pub fn from_table(table: Table) -> Result<Self, Failure> {
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| Failure::config(e.message()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        parse_models(&self.run.models)?;
        parse_exec(&self.run.exec)?;
        if self.data.is_empty() {
            return Err(Failure::config("no [data.NAME] section given"));
        }
        for (name, src) in &self.data {
            src.validate().map_err(|e| e.context(&format!("data.{name}")))?;
        }
        let g = &self.grid;
        let positive = |v: &[f64]| !v.is_empty() && v.iter().all(|x| x.is_finite() && *x > 0.0);
        if !positive(&g.alpha) || !positive(&g.hidden) || !positive(&g.learning_rate) {
            return Err(Failure::config("grid values must be non-empty and positive"));
        }
        Ok(())
    }

    pub fn plan(&self) -> Result<BenchmarkPlan, Failure> {
        let base = Hyperparams {
            alpha: self.hmm.alpha,
            hidden: self.rnn.hidden,
            learning_rate: self.rnn.learning_rate,
            seed: self.run.seed,
            max_iter: self.crf.max_iter,
            max_epochs: self.rnn.max_epochs,
            patience: self.rnn.patience,
            clip: self.rnn.clip,
        };
        Ok(BenchmarkPlan {
            models: parse_models(&self.run.models)?,
            base,
            alpha_grid: self.grid.alpha.clone(),
            hidden_grid: self.grid.hidden.clone(),
            learning_rate_grid: self.grid.learning_rate.clone(),
            max_expansions: self.grid.max_expansions,
            repeats: self.run.repeats,
            exec: parse_exec(&self.run.exec)?,
        })
    }

    /// Loads and splits every dataset, in section-name order.
    pub fn datasets(&self) -> Result<Vec<DatasetInput>, Failure> {
        self.data
            .iter()
            .map(|(name, src)| {
                let ds = src.load().map_err(|e| e.context(&format!("data.{name}")))?;
                let (train, val, test) = split_by_days(&ds, src.split()?)?;
                Ok(DatasetInput { name: name.clone(), train, val, test })
            })
            .collect()
    }
}

/// Reads a config file. Relative data paths are taken relative to the file.
pub fn read_table(path: &Path) -> Result<Table, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new("io", format!("cannot read {}: {e}", path.display())))?;
    let mut table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Failure::config(format!("{}: {}", path.display(), e.message())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    if let Some(Value::Table(data)) = table.get_mut("data") {
        for (_, section) in data.iter_mut() {
            if let Some(Value::String(p)) = section.get_mut("path") {
                if Path::new(p.as_str()).is_relative() {
                    *p = base.join(&*p).to_string_lossy().into_owned();
                }
            }
        }
    }
    Ok(table)
}

/// Later values win; nested tables merge key by key.
pub fn merge(into: &mut Table, from: Table) {
    for (k, v) in from {
        match (into.get_mut(&k), v) {
            (Some(Value::Table(a)), Value::Table(b)) => merge(a, b),
            (_, v) => {
                into.insert(k, v);
            }
        }
    }
}

/// Applies `section.key=value`. The value is read as a TOML literal when it
/// parses as one and as a bare string otherwise.
pub fn set_key(table: &mut Table, assignment: &str) -> Result<(), Failure> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Failure::config(format!("override {assignment:?} is not key=value")))?;
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.len() < 2 || parts.iter().any(|p| p.is_empty()) {
        return Err(Failure::config(format!("override key {key:?} must be section.key")));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => return Err(Failure::config(format!("override key {key:?} crosses a plain value"))),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
