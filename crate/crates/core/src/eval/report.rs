//! Accuracy / timing tables, CSV and JSON emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::grid::GridResult;
use super::metrics::Scores;
use super::runs::format_duration;
use crate::rnn::Head;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Completed,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetInfo {
    pub name: String,
    pub residents: usize,
    pub alphabet: Vec<usize>,
    pub train_days: usize,
    pub val_days: usize,
    pub test_days: usize,
    pub test_steps: usize,
}

/// One model on one dataset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowResult {
    pub model: String,
    pub encoding: Head,
    pub dataset: String,
    pub status: RowStatus,
    pub error: Option<String>,
    /// Test accuracies (mean over repeats for recurrent models).
    pub scores: Option<Scores>,
    pub std: Option<Scores>,
    pub runs: usize,
    pub excluded: usize,
    pub run_failures: Vec<String>,
    /// Train + test prediction for one run.
    pub seconds: Option<f64>,
    pub selected: BTreeMap<String, f64>,
    pub grid: Option<GridResult>,
}

impl RowResult {
    pub fn failed(model: String, encoding: Head, dataset: String, error: String) -> Self {
        Self {
            model,
            encoding,
            dataset,
            status: RowStatus::Failed,
            error: Some(error),
            scores: None,
            std: None,
            runs: 0,
            excluded: 0,
            run_failures: Vec::new(),
            seconds: None,
            selected: BTreeMap::new(),
            grid: None,
        }
    }
}

/// Mean accuracy of each label-encoding group on one dataset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupSummary {
    pub dataset: String,
    pub combined_models: Vec<String>,
    pub separate_models: Vec<String>,
    /// Mean joint accuracy of the completed combined-label rows.
    pub combined_all: Option<f64>,
    pub separate_all: Option<f64>,
    /// Mean per-resident accuracy, averaged over residents and rows.
    pub combined_resident: Option<f64>,
    pub separate_resident: Option<f64>,
}

impl GroupSummary {
    /// `separate − combined` joint accuracy, when both groups completed.
    pub fn gap(&self) -> Option<f64> {
        Some(self.separate_all? - self.combined_all?)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub datasets: Vec<DatasetInfo>,
    pub models: Vec<String>,
    pub rows: Vec<RowResult>,
}

fn pct(v: f64) -> String {
    format!("{:.2}", 100.0 * v)
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn render_table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

impl BenchmarkReport {
    pub fn row(&self, model: &str, dataset: &str) -> Option<&RowResult> {
        self.rows.iter().find(|r| r.model == model && r.dataset == dataset)
    }

    pub fn all_completed(&self) -> bool {
        self.rows.iter().all(|r| r.status == RowStatus::Completed)
    }

    fn max_residents(&self) -> usize {
        self.datasets.iter().map(|d| d.residents).max().unwrap_or(0)
    }

    /// Mean of every per-resident and joint cell of the model across
    /// datasets; `None` if any cell is missing.
    pub fn average(&self, model: &str) -> Option<f64> {
        let mut cells = Vec::new();
        for d in &self.datasets {
            let s = self.row(model, &d.name)?.scores.as_ref()?;
            cells.extend_from_slice(&s.residents);
            cells.push(s.all);
        }
        mean(&cells)
    }

    pub fn accuracy_table(&self) -> String {
        let mut head1 = vec![String::new()];
        let mut head2 = vec!["Model".to_string()];
        for d in &self.datasets {
            for m in 0..d.residents {
                head1.push(if m == 0 { d.name.clone() } else { String::new() });
                head2.push(format!("R{}", m + 1));
            }
            head1.push(String::new());
            head2.push("All".into());
        }
        head1.push(String::new());
        head2.push("Average".into());
        let mut rows = vec![head1, head2];
        for model in &self.models {
            let mut r = vec![model.clone()];
            for d in &self.datasets {
                match self.row(model, &d.name).and_then(|row| row.scores.as_ref()) {
                    Some(s) => {
                        r.extend(s.residents.iter().map(|&v| pct(v)));
                        r.push(pct(s.all));
                    }
                    None => {
                        let mark = if self.row(model, &d.name).is_some() { "FAILED" } else { "-" };
                        r.extend(std::iter::repeat_n(mark.to_string(), d.residents + 1));
                    }
                }
            }
            r.push(self.average(model).map_or("-".into(), pct));
            rows.push(r);
        }
        render_table(&rows)
    }

    pub fn timing_table(&self) -> String {
        let mut rows = vec![std::iter::once("Model".to_string()).chain(self.datasets.iter().map(|d| d.name.clone())).collect()];
        for model in &self.models {
            let mut r = vec![model.clone()];
            for d in &self.datasets {
                r.push(match self.row(model, &d.name) {
                    Some(row) => row.seconds.map_or("FAILED".into(), format_duration),
                    None => "-".into(),
                });
            }
            rows.push(r);
        }
        render_table(&rows)
    }

    pub fn group_summaries(&self) -> Vec<GroupSummary> {
        self.datasets
            .iter()
            .map(|d| {
                let group = |enc: Head| {
                    let rows: Vec<&RowResult> =
                        self.rows.iter().filter(|r| r.dataset == d.name && r.encoding == enc).collect();
                    let done: Vec<&Scores> = rows.iter().filter_map(|r| r.scores.as_ref()).collect();
                    let all: Vec<f64> = done.iter().map(|s| s.all).collect();
                    let res: Vec<f64> = done.iter().filter_map(|s| mean(&s.residents)).collect();
                    (rows.iter().map(|r| r.model.clone()).collect::<Vec<_>>(), mean(&all), mean(&res))
                };
                let (cm, ca, cr) = group(Head::Combined);
                let (sm, sa, sr) = group(Head::Separate);
                GroupSummary {
                    dataset: d.name.clone(),
                    combined_models: cm,
                    separate_models: sm,
                    combined_all: ca,
                    separate_all: sa,
                    combined_resident: cr,
                    separate_resident: sr,
                }
            })
            .collect()
    }

    pub fn summary_table(&self) -> String {
        let mut rows = vec![vec![
            "Dataset".to_string(),
            "Combined All".into(),
            "Separate All".into(),
            "Combined R".into(),
            "Separate R".into(),
            "Gap (sep-comb)".into(),
        ]];
        let opt = |v: Option<f64>| v.map_or("-".to_string(), pct);
        for g in self.group_summaries() {
            rows.push(vec![
                g.dataset.clone(),
                opt(g.combined_all),
                opt(g.separate_all),
                opt(g.combined_resident),
                opt(g.separate_resident),
                g.gap().map_or("-".into(), |v| format!("{:+.2}", 100.0 * v)),
            ]);
        }
        render_table(&rows)
    }

    /// Plain-text report: accuracies (%), timings and the encoding comparison.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Prediction accuracy (%)\n");
        out.push_str(&self.accuracy_table());
        let _ = writeln!(out, "\nTrain + predict time for the selected configuration\n");
        out.push_str(&self.timing_table());
        let _ = writeln!(out, "\nCombined vs separate labels (mean accuracy %)\n");
        out.push_str(&self.summary_table());
        let failed: Vec<&RowResult> = self.rows.iter().filter(|r| r.status == RowStatus::Failed).collect();
        if !failed.is_empty() {
            let _ = writeln!(out, "\nFailed rows");
            for r in failed {
                let _ = writeln!(out, "  {} on {}: {}", r.model, r.dataset, r.error.as_deref().unwrap_or("unknown error"));
            }
        }
        out
    }

    /// One line per model × dataset: `model,dataset,R1..RM,All,status`.
    /// Accuracies are fractions; timings live in [`Self::timing_csv`].
    pub fn accuracy_csv(&self) -> String {
        let m = self.max_residents();
        let mut out = String::from("model,dataset");
        (1..=m).for_each(|i| out.push_str(&format!(",R{i}")));
        out.push_str(",All,status\n");
        for r in &self.rows {
            out.push_str(&format!("{},{}", r.model, r.dataset));
            match &r.scores {
                Some(s) => {
                    for i in 0..m {
                        out.push(',');
                        if let Some(v) = s.residents.get(i) {
                            out.push_str(&format!("{v:.6}"));
                        }
                    }
                    out.push_str(&format!(",{:.6}", s.all));
                }
                None => out.push_str(&",".repeat(m + 1)),
            }
            out.push_str(match r.status {
                RowStatus::Completed => ",completed\n",
                RowStatus::Failed => ",failed\n",
            });
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from("model,dataset,seconds,rendered\n");
        for r in &self.rows {
            match r.seconds {
                Some(s) => out.push_str(&format!("{},{},{s:.6},{}\n", r.model, r.dataset, format_duration(s))),
                None => out.push_str(&format!("{},{},,failed\n", r.model, r.dataset)),
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            report: &'a BenchmarkReport,
            averages: BTreeMap<&'a str, Option<f64>>,
            groups: Vec<GroupSummary>,
        }
        let averages = self.models.iter().map(|m| (m.as_str(), self.average(m))).collect();
        serde_json::to_string_pretty(&Summary { report: self, averages, groups: self.group_summaries() })
            .expect("report serializes")
    }
}
