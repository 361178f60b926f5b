//! CASAS multi-resident event logs.
//!
//! Each line is one sensor event:
//!
//! ```text
//! 2008-02-27 12:43:27.416392 M08 ON 1 2
//! date       time            sensor value resident activity
//! ```
//!
//! One time step is produced per event. The observation is the state-carry
//! vector (the last known value of every sensor, updated by the event), and
//! each step is labeled with the current activity of both residents; an
//! annotation persists until the same resident is annotated again. Events
//! before both residents have been annotated once are dropped. Activity id
//! `0` marks a resident as unlabeled from that event on; such steps get a
//! reserved `Idle` activity, appended to the alphabets only when it occurs.

use std::collections::HashMap;
use std::path::Path;

use crate::datamodel::{ActivityFrame, Dataset, LabelSpace, Observation, SequenceInstance};
use crate::error::{Error, Result};

pub const RESIDENTS: usize = 2;
pub const ACTIVITIES: usize = 15;
pub const SENSOR_FILE: &str = "sensors.txt";
pub const PROVENANCE: &str = "timebase=event source=casas observation=state-carry";

/// Default 37-sensor layout of the two-resident testbed, used when the
/// corpus directory has no `sensors.txt`.
pub fn default_sensors() -> Vec<String> {
    let mut s: Vec<String> = (1..=26).map(|i| format!("M{i:02}")).collect();
    s.extend((1..=8).map(|i| format!("I{i:02}")));
    s.push("D01".into());
    s.push("AD1-A".into());
    s.push("AD1-B".into());
    s
}

enum Reading {
    Binary(f64),
    Analog(f64),
}

fn parse_value(raw: &str) -> Option<Reading> {
    match raw.to_ascii_uppercase().as_str() {
        "ON" | "OPEN" | "PRESENT" | "TRUE" => Some(Reading::Binary(1.0)),
        "OFF" | "CLOSE" | "CLOSED" | "ABSENT" | "FALSE" => Some(Reading::Binary(0.0)),
        other => other.parse::<f64>().ok().filter(|v| v.is_finite()).map(Reading::Analog),
    }
}

struct Event {
    day: String,
    sensor: usize,
    value: f64,
    resident: usize,
    activity: Option<usize>,
}

fn parse_events(text: &str, file: &Path, sensors: &HashMap<&str, usize>, events: &mut Vec<Event>) -> Result<()> {
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.is_empty() {
            continue;
        }
        if cols.len() < 6 {
            return Err(Error::format_at(
                file,
                line_no,
                "expected date, time, sensor, value, resident and activity columns",
            ));
        }
        let sensor = *sensors
            .get(cols[2])
            .ok_or_else(|| Error::format_at(file, line_no, format!("unknown sensor id {:?}", cols[2])))?;
        let value = match parse_value(cols[3]) {
            Some(Reading::Binary(v)) | Some(Reading::Analog(v)) => v,
            None => return Err(Error::format_at(file, line_no, format!("bad sensor value {:?}", cols[3]))),
        };
        let resident: usize = cols[4]
            .parse()
            .ok()
            .filter(|r| (1..=RESIDENTS).contains(r))
            .ok_or_else(|| Error::format_at(file, line_no, format!("bad resident id {:?}", cols[4])))?;
        let activity: usize = cols[5]
            .parse()
            .ok()
            .filter(|a| (0..=ACTIVITIES).contains(a))
            .ok_or_else(|| Error::format_at(file, line_no, format!("bad activity id {:?}", cols[5])))?;
        events.push(Event {
            day: cols[0].to_string(),
            sensor,
            value,
            resident: resident - 1,
            activity: activity.checked_sub(1),
        });
    }
    Ok(())
}

fn read_sensor_list(dir: &Path) -> Result<Vec<String>> {
    let path = dir.join(SENSOR_FILE);
    if !path.exists() {
        return Ok(default_sensors());
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let list: Vec<String> = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
    if list.is_empty() {
        return Err(Error::format_at(&path, 1, "empty sensor list"));
    }
    Ok(list)
}

/// Loads every event file in `dir` (name order) into one instance per
/// calendar day.
pub fn load_casas(dir: &Path) -> Result<Dataset> {
    let sensor_names = read_sensor_list(dir)?;
    let index: HashMap<&str, usize> = sensor_names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut events = Vec::new();
    for file in super::data_files(dir, &[SENSOR_FILE])? {
        let text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
        parse_events(&text, &file, &index, &mut events)?;
    }
    if events.is_empty() {
        return Err(Error::Config(format!("no CASAS events under {}", dir.display())));
    }

    // min-max scaling for analog sensors; binary sensors pass through
    let dim = sensor_names.len();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for e in &events {
        lo[e.sensor] = lo[e.sensor].min(e.value);
        hi[e.sensor] = hi[e.sensor].max(e.value);
    }
    let scale = |s: usize, v: f64| {
        if lo[s] >= 0.0 && hi[s] <= 1.0 {
            v
        } else if hi[s] > lo[s] {
            (v - lo[s]) / (hi[s] - lo[s])
        } else {
            1.0
        }
    };

    let mut state = vec![0.0; dim];
    let mut current: [Option<usize>; RESIDENTS] = [None; RESIDENTS];
    let mut annotated = [false; RESIDENTS];
    let mut dropped = 0usize;
    let mut days: Vec<(String, Vec<Vec<f64>>, Vec<[Option<usize>; RESIDENTS]>)> = Vec::new();
    for e in &events {
        state[e.sensor] = scale(e.sensor, e.value);
        current[e.resident] = e.activity;
        annotated[e.resident] = true;
        if !annotated.iter().all(|&a| a) {
            dropped += 1;
            continue;
        }
        if days.last().is_none_or(|d| d.0 != e.day) {
            days.push((e.day.clone(), Vec::new(), Vec::new()));
        }
        let day = days.last_mut().expect("pushed above");
        day.1.push(state.clone());
        day.2.push(current);
    }

    if dropped > 0 {
        log::info!("CASAS: dropped {dropped} events preceding the first annotation of every resident");
    }
    if days.is_empty() {
        return Err(Error::Config("CASAS corpus never annotates every resident".into()));
    }
    let has_gaps = days.iter().any(|d| d.2.iter().any(|f| f.iter().any(Option::is_none)));
    let idle = ACTIVITIES;
    let k = if has_gaps { ACTIVITIES + 1 } else { ACTIVITIES };
    let names: Vec<String> = (1..=ACTIVITIES)
        .map(|a| format!("activity_{a}"))
        .chain(has_gaps.then(|| "Idle".to_string()))
        .collect();
    let space = LabelSpace::new(vec![k; RESIDENTS], vec![names; RESIDENTS])?;

    let mut instances = Vec::with_capacity(days.len());
    for (day, states, frames) in days {
        if states.is_empty() {
            log::warn!("CASAS day {day} has no events; skipped");
            continue;
        }
        let observations = states.into_iter().map(|features| Observation { symbol: 0, features }).collect();
        let activities = frames
            .into_iter()
            .map(|f| ActivityFrame(f.iter().map(|a| a.unwrap_or(idle)).collect()))
            .collect();
        instances.push(SequenceInstance::new(day, observations, activities)?);
    }
    let mut ds = Dataset::from_instances(instances, space)?;
    ds.codec.set_sensor_names(sensor_names)?;
    Ok(ds)
}
