//! Self-describing text container for model parameters.
//!
//! ```text
//! mrar-model hmm
//! J 9
//! alpha 0.0001
//! block prior 1 9
//! 0.11 0.12 ...
//! block transition 9 9
//! ...
//! ```
//!
//! Values are written with Rust's shortest round-trip float formatting, so
//! reading a file back reproduces every weight bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;
use ndarray::Array2;

use crate::error::{Error, Result};

const MAGIC: &str = "mrar-model";

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Block {
    pub fn vector(v: &[f64]) -> Self {
        Self { rows: 1, cols: v.len(), data: v.to_vec() }
    }

    pub fn matrix(m: &Array2<f64>) -> Self {
        let (rows, cols) = m.dim();
        Self { rows, cols, data: m.iter().copied().collect() }
    }

    pub fn to_array2(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.rows, self.cols), self.data.clone())
            .expect("block shape matches its data")
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TableFile {
    pub kind: String,
    pub meta: IndexMap<String, String>,
    pub blocks: IndexMap<String, Block>,
}

impl TableFile {
    pub fn new(kind: &str) -> Self {
        Self { kind: kind.to_string(), ..Default::default() }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn push(&mut self, name: &str, block: Block) -> &mut Self {
        self.blocks.insert(name.to_string(), block);
        self
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("model file lacks `{key}`")))
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| Error::Config(format!("model file: cannot parse `{key}` = {raw:?}")))
    }

    pub fn parse_list(&self, key: &str) -> Result<Vec<usize>> {
        self.get(key)?
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("model file: bad list `{key}`")))
            })
            .collect()
    }

    pub fn block(&self, name: &str) -> Result<&Block> {
        self.blocks
            .get(name)
            .ok_or_else(|| Error::Config(format!("model file lacks block `{name}`")))
    }

    pub fn block_shaped(&self, name: &str, rows: usize, cols: usize) -> Result<&Block> {
        let b = self.block(name)?;
        if b.rows != rows || b.cols != cols {
            return Err(Error::Config(format!(
                "block `{name}` is {}x{}, expected {rows}x{cols}",
                b.rows, b.cols
            )));
        }
        Ok(b)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MAGIC} {}", self.kind).unwrap();
        for (k, v) in &self.meta {
            writeln!(out, "{k} {v}").unwrap();
        }
        for (name, b) in &self.blocks {
            writeln!(out, "block {name} {} {}", b.rows, b.cols).unwrap();
            for r in 0..b.rows {
                let row = &b.data[r * b.cols..(r + 1) * b.cols];
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{}", line.join(" ")).unwrap();
            }
        }
        out
    }

    pub fn from_text(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let bad = |line: usize, msg: &str| Error::format_at(origin, line + 1, msg);
        let (_, head) = lines.next().ok_or_else(|| bad(0, "empty model file"))?;
        let kind = head
            .strip_prefix(MAGIC)
            .map(str::trim)
            .filter(|k| !k.is_empty())
            .ok_or_else(|| bad(0, "missing model header"))?;
        let mut file = TableFile::new(kind);
        while let Some((n, line)) = lines.next() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(2, ' ');
            let key = parts.next().unwrap_or_default();
            let rest = parts.next().unwrap_or_default();
            if key != "block" {
                file.meta.insert(key.to_string(), rest.to_string());
                continue;
            }
            let fields: Vec<&str> = rest.split_whitespace().collect();
            let [name, rows, cols] = fields[..] else {
                return Err(bad(n, "block header needs name, rows and cols"));
            };
            let rows: usize = rows.parse().map_err(|_| bad(n, "bad row count"))?;
            let cols: usize = cols.parse().map_err(|_| bad(n, "bad column count"))?;
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (rn, row) = lines.next().ok_or_else(|| bad(n, "truncated block"))?;
                let before = data.len();
                for tok in row.split_whitespace() {
                    data.push(tok.parse::<f64>().map_err(|_| bad(rn, "bad number"))?);
                }
                if data.len() - before != cols {
                    return Err(bad(rn, "row length does not match block header"));
                }
            }
            file.blocks.insert(name.to_string(), Block { rows, cols, data });
        }
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, &path.display().to_string())
    }
}

pub fn join_usize(v: &[usize]) -> String {
    v.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",")
}
