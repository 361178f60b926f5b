//! Loaders for the CASAS and ARAS corpora, the canonical interchange format,
//! day-based splitting and a synthetic trace generator.

pub mod aras;
pub mod canonical;
pub mod casas;
pub mod split;
pub mod synth;

pub use aras::{load_aras, ArasHouse};
pub use canonical::{load_canonical, write_canonical};
pub use casas::load_casas;
pub use split::{split_by_days, SplitSpec};
pub use synth::{generate_synthetic, SynthConfig};

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Regular, non-hidden files of `dir` in name order, skipping `exclude`.
pub(crate) fn data_files(dir: &Path, exclude: &[&str]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().into_owned();
        if !path.is_file() || name.starts_with('.') || exclude.contains(&name.as_str()) {
            continue;
        }
        files.push(path);
    }
    files.sort();
    Ok(files)
}
