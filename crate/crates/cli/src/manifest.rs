//! Reproduction manifest written next to every benchmark report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::Failure;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn files_under(path: &Path) -> Result<Vec<PathBuf>, Failure> {
    let io = |e: std::io::Error| Failure::new("io", format!("{}: {e}", path.display()));
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut out = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(path).map_err(io)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>().map_err(io)?;
    entries.sort();
    for e in entries {
        if e.is_dir() {
            out.extend(files_under(&e)?);
        } else {
            out.push(e);
        }
    }
    Ok(out)
}

/// `config` is the effective configuration text after merging and
/// overrides; its hash identifies the run.
pub fn render(config: &str, cfg: &RunConfig, workers: usize) -> Result<String, Failure> {
    let mut out = String::new();
    writeln!(out, "version=mrar {}", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(out, "config_sha256={}", sha256_hex(config.as_bytes())).unwrap();
    writeln!(out, "seed={}", cfg.run.seed).unwrap();
    writeln!(out, "repeats={}", cfg.run.repeats).unwrap();
    writeln!(out, "models={}", cfg.run.models).unwrap();
    writeln!(out, "exec={}", cfg.run.exec).unwrap();
    writeln!(out, "workers={workers}").unwrap();
    for (name, src) in &cfg.data {
        writeln!(out, "data.{name}.split={}", src.split()?).unwrap();
        let Some(root) = src.path() else {
            writeln!(out, "data.{name}.source=synthetic").unwrap();
            continue;
        };
        for file in files_under(root)? {
            let bytes = std::fs::read(&file).map_err(|e| Failure::new("io", format!("{}: {e}", file.display())))?;
            let rel = file.strip_prefix(root).unwrap_or(&file);
            let rel = if rel.as_os_str().is_empty() { file.file_name().map(Path::new).unwrap_or(&file) } else { rel };
            writeln!(out, "data.{name}.sha256.{}={}", rel.display(), sha256_hex(&bytes)).unwrap();
        }
    }
    writeln!(out, "\n[effective config]").unwrap();
    out.push_str(config);
    Ok(out)
}
