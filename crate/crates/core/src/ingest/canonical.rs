//! Canonical interchange format.
//!
//! One UTF-8 file per day named `NNN_<day_id>.tsv`:
//!
//! ```text
//! # sensors=3 residents=2
//! # timebase=event source=casas
//! 0	0,1,0.5	3,7
//! 1	1,1,0.5	3,7
//! ```
//!
//! plus a `codec.meta` sidecar holding the symbol table, the UNK id, sensor
//! names and the activity alphabets.

use std::fmt::Write as _;
use std::path::Path;

use crate::datamodel::{ActivityFrame, Dataset, LabelSpace, Observation, ObservationCodec, SequenceInstance};
use crate::error::{Error, Result};
use crate::par::Exec;

pub const CODEC_FILE: &str = "codec.meta";

/// Renders one day. Identical instances always produce identical bytes.
pub fn render_day(inst: &SequenceInstance, dim: usize, residents: usize, provenance: &str) -> String {
    let mut out = String::new();
    writeln!(out, "# sensors={dim} residents={residents}").unwrap();
    if !provenance.is_empty() {
        writeln!(out, "# {provenance}").unwrap();
    }
    for (t, (o, a)) in inst.observations.iter().zip(&inst.activities).enumerate() {
        let f: Vec<String> = o.features.iter().map(|v| v.to_string()).collect();
        let l: Vec<String> = a.0.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{t}\t{}\t{}", f.join(","), l.join(",")).unwrap();
    }
    out
}

pub fn render_codec(ds: &Dataset) -> String {
    let mut out = String::new();
    let space = &ds.label_space;
    writeln!(out, "sensors={}", ds.dim()).unwrap();
    writeln!(out, "residents={}", space.residents()).unwrap();
    writeln!(out, "sizes={}", crate::tables::join_usize(space.sizes())).unwrap();
    writeln!(out, "unk={}", ds.codec.unk_id()).unwrap();
    writeln!(out, "sensor_names={}", ds.codec.sensor_names().join(",")).unwrap();
    for m in 0..space.residents() {
        writeln!(out, "activities.{}={}", m + 1, space.names(m).join(",")).unwrap();
    }
    for (id, row) in ds.codec.rows().iter().enumerate() {
        let f: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "symbol\t{id}\t{}", f.join(",")).unwrap();
    }
    out
}

/// Writes every day plus `codec.meta` into `dir` (created if missing).
pub fn write_canonical(ds: &Dataset, dir: &Path, provenance: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, inst) in ds.instances.iter().enumerate() {
        let path = dir.join(format!("{i:03}_{}.tsv", inst.day_id));
        let text = render_day(inst, ds.dim(), ds.label_space.residents(), provenance);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    let path = dir.join(CODEC_FILE);
    std::fs::write(&path, render_codec(ds)).map_err(|e| Error::io(&path, e))
}

fn parse_numbers<T: std::str::FromStr>(s: &str, file: &Path, line: usize, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::format_at(file, line, format!("bad {what} value {v:?}")))
        })
        .collect()
}

fn header_value(header: &str, key: &str) -> Option<usize> {
    header
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix(key)?.strip_prefix('=')?.parse().ok())
}

/// Parses one canonical day file.
pub fn parse_day(text: &str, file: &Path, day_id: &str) -> Result<(usize, usize, SequenceInstance)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::format_at(file, 1, "empty file"))?;
    let (dim, residents) = match (header_value(header, "sensors"), header_value(header, "residents")) {
        (Some(d), Some(m)) if header.starts_with('#') => (d, m),
        _ => return Err(Error::format_at(file, 1, "expected `# sensors=D residents=M` header")),
    };
    let mut observations = Vec::new();
    let mut activities = Vec::new();
    for (n, line) in lines {
        let line_no = n + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::format_at(file, line_no, "expected t, features and activities separated by tabs"));
        }
        let features: Vec<f64> = parse_numbers(cols[1], file, line_no, "feature")?;
        let labels: Vec<usize> = parse_numbers(cols[2], file, line_no, "activity")?;
        if features.len() != dim || labels.len() != residents {
            return Err(Error::format_at(
                file,
                line_no,
                format!("expected {dim} features and {residents} activities"),
            ));
        }
        observations.push(Observation { symbol: 0, features });
        activities.push(ActivityFrame(labels));
    }
    if observations.is_empty() {
        return Err(Error::format_at(file, 1, "day has no time steps"));
    }
    Ok((dim, residents, SequenceInstance::new(day_id, observations, activities)?))
}

struct CodecMeta {
    sizes: Vec<usize>,
    names: Vec<Vec<String>>,
    sensor_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    dim: usize,
}

fn parse_codec(text: &str, file: &Path) -> Result<CodecMeta> {
    let mut meta = CodecMeta { sizes: vec![], names: vec![], sensor_names: vec![], rows: vec![], dim: 0 };
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if let Some(rest) = line.strip_prefix("symbol\t") {
            let (id, feats) = rest
                .split_once('\t')
                .ok_or_else(|| Error::format_at(file, line_no, "bad symbol line"))?;
            if id.parse::<usize>().ok() != Some(meta.rows.len()) {
                return Err(Error::format_at(file, line_no, "symbol ids must be contiguous"));
            }
            meta.rows.push(parse_numbers(feats, file, line_no, "feature")?);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else { continue };
        let list = || value.split(',').map(str::to_string).collect::<Vec<_>>();
        match key {
            "sensors" => meta.dim = value.parse().map_err(|_| Error::format_at(file, line_no, "bad sensors"))?,
            "sizes" => meta.sizes = parse_numbers(value, file, line_no, "size")?,
            "sensor_names" => meta.sensor_names = list(),
            k if k.starts_with("activities.") => meta.names.push(list()),
            _ => {}
        }
    }
    Ok(meta)
}

/// Loads a canonical directory. With a `codec.meta` sidecar the stored
/// symbol table and alphabets are used; otherwise alphabets are inferred
/// from the largest label seen and the codec is built from the data.
pub fn load_canonical(dir: &Path) -> Result<Dataset> {
    let files = super::data_files(dir, &[CODEC_FILE])?;
    let files: Vec<_> = files.into_iter().filter(|p| p.extension().is_some_and(|e| e == "tsv")).collect();
    if files.is_empty() {
        return Err(Error::Config(format!("no .tsv day files in {}", dir.display())));
    }
    let parsed = Exec::Parallel.map(&files, |path| -> Result<_> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let stem = path.file_stem().unwrap_or_default().to_string_lossy();
        let day_id = match stem.split_once('_') {
            Some((prefix, rest)) if prefix.chars().all(|c| c.is_ascii_digit()) => rest.to_string(),
            _ => stem.to_string(),
        };
        parse_day(&text, path, &day_id)
    });
    let mut instances = Vec::with_capacity(parsed.len());
    let mut shape = None;
    for (path, day) in files.iter().zip(parsed) {
        let (dim, residents, inst) = day?;
        match shape {
            None => shape = Some((dim, residents)),
            Some(s) if s != (dim, residents) => {
                return Err(Error::format_at(path, 1, "sensor/resident counts differ between days"))
            }
            _ => {}
        }
        instances.push(inst);
    }
    let (dim, residents) = shape.expect("at least one file");

    let meta_path = dir.join(CODEC_FILE);
    if meta_path.exists() {
        let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta = parse_codec(&text, &meta_path)?;
        if meta.dim != dim || meta.sizes.len() != residents {
            return Err(Error::format_at(&meta_path, 1, "codec.meta does not match the day files"));
        }
        let space = LabelSpace::new(meta.sizes, meta.names)?;
        let codec = ObservationCodec::from_rows(meta.rows, dim, meta.sensor_names)?;
        return Dataset::new(instances, space, codec);
    }
    let mut sizes = vec![1; residents];
    for inst in &instances {
        for f in &inst.activities {
            for (k, &a) in sizes.iter_mut().zip(&f.0) {
                *k = (*k).max(a + 1);
            }
        }
    }
    Dataset::from_instances(instances, LabelSpace::with_sizes(&sizes)?)
}
