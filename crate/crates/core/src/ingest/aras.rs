//! ARAS per-day files: one row per second, 20 binary sensor columns followed
//! by the 1-based activity ids of the two residents.

use std::path::{Path, PathBuf};

use crate::datamodel::{ActivityFrame, Dataset, LabelSpace, Observation, SequenceInstance};
use crate::error::{Error, Result};
use crate::par::Exec;

pub const SENSORS: usize = 20;
pub const RESIDENTS: usize = 2;
pub const ACTIVITIES: usize = 27;
pub const PROVENANCE: &str = "timebase=1Hz source=aras";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArasHouse {
    A,
    B,
}

impl ArasHouse {
    pub fn tag(self) -> &'static str {
        match self {
            ArasHouse::A => "A",
            ArasHouse::B => "B",
        }
    }
}

impl std::str::FromStr for ArasHouse {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(ArasHouse::A),
            "B" => Ok(ArasHouse::B),
            _ => Err(Error::Config(format!("unknown ARAS house {s:?}"))),
        }
    }
}

/// Trailing integer of a file name, for `DAY_2.txt` < `DAY_10.txt` ordering.
fn day_number(path: &Path) -> Option<u32> {
    let stem = path.file_stem()?.to_string_lossy();
    let digits: String = stem.chars().rev().take_while(char::is_ascii_digit).collect();
    digits.chars().rev().collect::<String>().parse().ok()
}

fn parse_day(path: &Path, house: ArasHouse, index: usize) -> Result<SequenceInstance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut observations = Vec::new();
    let mut activities = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.is_empty() {
            continue;
        }
        if cols.len() != SENSORS + RESIDENTS {
            return Err(Error::format_at(
                path,
                line_no,
                format!("expected {} columns, found {}", SENSORS + RESIDENTS, cols.len()),
            ));
        }
        let mut features = Vec::with_capacity(SENSORS);
        for tok in &cols[..SENSORS] {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::format_at(path, line_no, format!("bad sensor value {tok:?}")))?;
            features.push(v.clamp(0.0, 1.0));
        }
        let mut labels = Vec::with_capacity(RESIDENTS);
        for tok in &cols[SENSORS..] {
            let a: usize = tok
                .parse()
                .ok()
                .filter(|a| (1..=ACTIVITIES).contains(a))
                .ok_or_else(|| Error::format_at(path, line_no, format!("activity id {tok:?} outside 1..={ACTIVITIES}")))?;
            labels.push(a - 1);
        }
        observations.push(Observation { symbol: 0, features });
        activities.push(ActivityFrame(labels));
    }
    if observations.is_empty() {
        return Err(Error::format_at(path, 1, "day file has no rows"));
    }
    let day = day_number(path).map_or(index + 1, |d| d as usize);
    SequenceInstance::new(format!("{}-day{day:02}", house.tag()), observations, activities)
}

/// Loads one ARAS house; day files are ordered by their trailing day number.
pub fn load_aras(dir: &Path, house: ArasHouse) -> Result<Dataset> {
    let mut files: Vec<PathBuf> = super::data_files(dir, &[])?;
    files.sort_by_key(|p| (day_number(p), p.clone()));
    if files.is_empty() {
        return Err(Error::Config(format!("no ARAS day files under {}", dir.display())));
    }
    let days = Exec::Parallel.map_indexed(files.len(), |i| parse_day(&files[i], house, i));
    let instances = days.into_iter().collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = (1..=ACTIVITIES).map(|a| format!("activity_{a}")).collect();
    let space = LabelSpace::new(vec![ACTIVITIES; RESIDENTS], vec![names; RESIDENTS])?;
    let mut ds = Dataset::from_instances(instances, space)?;
    ds.codec
        .set_sensor_names((1..=SENSORS).map(|s| format!("{}-S{s:02}", house.tag())).collect())?;
    Ok(ds)
}
