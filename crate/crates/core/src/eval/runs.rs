use std::time::Instant;

use serde::Serialize;

use super::metrics::Scores;
use crate::error::{Error, Result};
use crate::par::Exec;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepeatSummary {
    pub seeds: Vec<u64>,
    pub completed: usize,
    pub excluded: usize,
    pub failures: Vec<String>,
    pub mean: Scores,
    /// Population standard deviation.
    pub std: Scores,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs `run(seed + i)` for `i < n`, excluding failed runs from the
/// statistics.
pub fn repeated_runs<F>(seed: u64, n: usize, exec: Exec, run: F) -> Result<RepeatSummary>
where
    F: Fn(u64) -> Result<Scores> + Sync + Send,
{
    if n == 0 {
        return Err(Error::Config("repeat count must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..n as u64).map(|i| seed.wrapping_add(i)).collect();
    let results = exec.map(&seeds, |&s| run(s));
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (s, r) in seeds.iter().zip(results) {
        match r {
            Ok(scores) => ok.push(scores),
            Err(e) => failures.push(format!("seed {s}: {e}")),
        }
    }
    if ok.is_empty() {
        return Err(Error::Training(format!("all {n} runs failed; first: {}", failures[0])));
    }
    let residents = ok[0].residents.len();
    let column = |f: &dyn Fn(&Scores) -> f64| mean_std(&ok.iter().map(f).collect::<Vec<_>>());
    let per: Vec<(f64, f64)> = (0..residents).map(|m| column(&|s: &Scores| s.residents[m])).collect();
    let all = column(&|s: &Scores| s.all);
    Ok(RepeatSummary {
        seeds,
        completed: ok.len(),
        excluded: failures.len(),
        failures,
        mean: Scores { residents: per.iter().map(|p| p.0).collect(), all: all.0 },
        std: Scores { residents: per.iter().map(|p| p.1).collect(), all: all.1 },
    })
}

/// Wall-clock seconds spent in `task`.
pub fn measure_time<T>(task: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = task();
    (out, start.elapsed().as_secs_f64())
}

/// Seconds with two decimals, or hours once past an hour.
pub fn format_duration(seconds: f64) -> String {
    if seconds > 3600.0 {
        format!("{:.2} hrs", seconds / 3600.0)
    } else {
        format!("{seconds:.2} sec")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_run_has_zero_spread() {
        let r = repeated_runs(3, 1, Exec::Sequential, |s| Ok(Scores { residents: vec![s as f64 / 10.0], all: 0.25 }))
            .unwrap();
        assert_eq!(r.mean.residents, vec![0.3]);
        assert_eq!(r.std.all, 0.0);
        assert_eq!(r.seeds, vec![3]);
    }

    #[test]
    fn failures_are_excluded_and_counted() {
        let r = repeated_runs(0, 4, Exec::Parallel, |s| {
            if s % 2 == 1 {
                Err(Error::Training("diverged".into()))
            } else {
                Ok(Scores { residents: vec![s as f64], all: s as f64 })
            }
        })
        .unwrap();
        assert_eq!((r.completed, r.excluded), (2, 2));
        assert_eq!(r.mean.all, 1.0);
        assert_eq!(r.std.all, 1.0);
    }

    #[test]
    fn duration_rendering() {
        assert_eq!(format_duration(3599.0), "3599.00 sec");
        assert_eq!(format_duration(3601.0), "1.00 hrs");
        assert_eq!(format_duration(0.17), "0.17 sec");
        assert_eq!(format_duration(3600.0), "3600.00 sec");
    }

    #[test]
    fn noop_is_fast() {
        let ((), s) = measure_time(|| ());
        assert!(s < 0.01);
    }
}
