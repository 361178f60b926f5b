//! Grid search over log-spaced hyperparameter axes.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::par::Exec;

/// Which end of an axis wins a tie on validation score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Prefer {
    Smaller,
    Larger,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridAxis {
    pub name: String,
    /// Strictly increasing values.
    pub values: Vec<f64>,
    pub prefer: Prefer,
    /// Round extensions to integers (never below 1).
    pub integer: bool,
}

impl GridAxis {
    pub fn new(name: &str, values: Vec<f64>, prefer: Prefer) -> Self {
        Self { name: name.into(), values, prefer, integer: false }
    }

    pub fn integer(mut self) -> Self {
        self.integer = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config(format!("grid axis {} is empty", self.name)));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) || self.values.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Config(format!("grid axis {} must be positive and increasing", self.name)));
        }
        Ok(())
    }

    /// One log-step beyond the given end, using the ratio of the two
    /// outermost values (a single-value axis cannot be extended).
    fn extend(&mut self, upward: bool) -> Option<f64> {
        let n = self.values.len();
        if n < 2 {
            return None;
        }
        let v = if upward {
            self.values[n - 1] * self.values[n - 1] / self.values[n - 2]
        } else {
            self.values[0] * self.values[0] / self.values[1]
        };
        let v = if self.integer { v.round().max(1.0) } else { v };
        let fresh = if upward { v > self.values[n - 1] } else { v < self.values[0] };
        if !fresh {
            return None;
        }
        if upward {
            self.values.push(v);
        } else {
            self.values.insert(0, v);
        }
        Some(v)
    }
}

/// `1e-6, 1e-5, …, 1e-2`.
pub fn smoothing_grid() -> Vec<f64> {
    (0..5).map(|k| 10f64.powi(k - 6)).collect()
}

pub fn hidden_grid() -> Vec<f64> {
    vec![10.0, 50.0, 100.0, 500.0, 1000.0]
}

/// Nine values, half a decade apart, from `1e-4` to `1`.
pub fn learning_rate_grid() -> Vec<f64> {
    (0..9).map(|k| 10f64.powf(-4.0 + 0.5 * k as f64)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridTrial {
    pub point: Vec<f64>,
    pub score: Option<f64>,
    pub error: Option<String>,
    /// 0 for the initial grid, then one per expansion.
    pub round: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridResult {
    pub axes: Vec<GridAxis>,
    pub best: Vec<f64>,
    pub best_score: f64,
    pub expansions: usize,
    pub trials: Vec<GridTrial>,
}

impl GridResult {
    pub fn value(&self, axis: &str) -> Option<f64> {
        self.axes.iter().position(|a| a.name == axis).map(|i| self.best[i])
    }
}

fn cartesian(axes: &[GridAxis]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![vec![]], |acc, axis| {
        acc.into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect()
    })
}

/// `Greater` when `a` should be selected over `b`.
fn rank(axes: &[GridAxis], a: (&[f64], f64), b: (&[f64], f64)) -> Ordering {
    a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal).then_with(|| {
        for ((axis, x), y) in axes.iter().zip(a.0).zip(b.0) {
            let o = x.partial_cmp(y).unwrap_or(Ordering::Equal);
            let o = if axis.prefer == Prefer::Smaller { o.reverse() } else { o };
            if o != Ordering::Equal {
                return o;
            }
        }
        Ordering::Equal
    })
}

/// Evaluates every point, picks the best validation score (ties broken per
/// axis preference, in axis order), and extends any axis whose optimum sits
/// on a boundary by one log-step, for at most `max_expansions` rounds.
pub fn grid_search<F>(mut axes: Vec<GridAxis>, max_expansions: usize, exec: Exec, evaluate: F) -> Result<GridResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync + Send,
{
    if axes.is_empty() {
        return Err(Error::Config("grid has no axes".into()));
    }
    for a in &axes {
        a.validate()?;
    }
    let mut trials: Vec<GridTrial> = Vec::new();
    let mut round = 0;
    loop {
        let pending: Vec<Vec<f64>> =
            cartesian(&axes).into_iter().filter(|p| !trials.iter().any(|t| &t.point == p)).collect();
        let results = exec.map(&pending, |p| evaluate(p));
        for (point, r) in pending.into_iter().zip(results) {
            let (score, error) = match r {
                Ok(s) if s.is_finite() => (Some(s), None),
                Ok(s) => (None, Some(format!("non-finite score {s}"))),
                Err(e) => (None, Some(e.to_string())),
            };
            if let Some(e) = &error {
                log::warn!("grid point {point:?} failed: {e}");
            }
            trials.push(GridTrial { point, score, error, round });
        }
        let best = trials
            .iter()
            .filter_map(|t| t.score.map(|s| (t.point.as_slice(), s)))
            .max_by(|a, b| rank(&axes, *a, *b))
            .map(|(p, s)| (p.to_vec(), s));
        let Some((best, best_score)) = best else {
            return Err(Error::Selection(format!("all {} grid points failed", trials.len())));
        };
        let mut grew = false;
        if round < max_expansions {
            for (axis, &v) in axes.iter_mut().zip(&best) {
                let lo = axis.values[0];
                let hi = *axis.values.last().expect("non-empty axis");
                if v == hi {
                    grew |= axis.extend(true).is_some();
                }
                if v == lo {
                    grew |= axis.extend(false).is_some();
                }
            }
        }
        if !grew {
            return Ok(GridResult { axes, best, best_score, expansions: round, trials });
        }
        round += 1;
    }
}
