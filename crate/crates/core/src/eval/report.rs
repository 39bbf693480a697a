use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Asr,
    Emotion,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    pub ci95_halfwidth: f64,
}

/// Frame-count range `[lo, hi)` with its utterance count and PER.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketRow {
    pub lo: usize,
    pub hi: usize,
    pub n: usize,
    pub per: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub model: String,
    pub seed: u64,
    pub config_hash: String,
    pub metrics: BTreeMap<String, Metric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_length_bucket: Option<Vec<BucketRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_names: Option<Vec<String>>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl EvalReport {
    pub fn new(task: Task) -> Self {
        Self {
            task,
            model: String::new(),
            seed: 0,
            config_hash: String::new(),
            metrics: BTreeMap::new(),
            per_length_bucket: None,
            confusion: None,
            class_names: None,
            notes: Vec::new(),
        }
    }

    pub fn set(&mut self, name: &str, value: f64, ci95_halfwidth: f64) {
        self.metrics.insert(name.to_string(), Metric { value, ci95_halfwidth });
    }

    pub fn metric(&self, name: &str) -> Result<Metric> {
        self.metrics
            .get(name)
            .copied()
            .ok_or_else(|| invalid(format!("report has no metric {name:?}")))
    }

    /// Checks value ranges and that confusion rows sum to `class_counts`.
    pub fn validate(&self, class_counts: Option<&[usize]>) -> Result<()> {
        for (name, m) in &self.metrics {
            let ok = match name.as_str() {
                "per" | "wer" => m.value >= 0.0,
                "accuracy" | "precision" | "recall" => (0.0..=1.0).contains(&m.value),
                _ => m.value.is_finite(),
            };
            if !ok || !(m.ci95_halfwidth >= 0.0) {
                return Err(invalid(format!("metric {name} = {} is out of range", m.value)));
            }
        }
        if let (Some(conf), Some(counts)) = (&self.confusion, class_counts) {
            for (c, (row, want)) in conf.iter().zip(counts).enumerate() {
                if row.iter().sum::<usize>() != *want {
                    return Err(invalid(format!("confusion row {c} does not sum to {want}")));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let task = match self.task {
            Task::Asr => "asr",
            Task::Emotion => "emotion",
        };
        let _ = writeln!(s, "task    {task}");
        let _ = writeln!(s, "model   {}", self.model);
        let _ = writeln!(s, "seed    {}", self.seed);
        let _ = writeln!(s, "config  {}", self.config_hash);
        for n in &self.notes {
            let _ = writeln!(s, "note    {n}");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<12} {:>10} {:>10}", "metric", "value%", "ci95%");
        for (name, m) in &self.metrics {
            let _ = writeln!(s, "{:<12} {:>10.2} {:>10.2}", name, 100.0 * m.value, 100.0 * m.ci95_halfwidth);
        }
        if let Some(rows) = &self.per_length_bucket {
            let _ = writeln!(s);
            let _ = writeln!(s, "{:>8} {:>8} {:>6} {:>8}", "lo", "hi", "n", "per%");
            for r in rows {
                let _ = writeln!(s, "{:>8} {:>8} {:>6} {:>8.2}", r.lo, r.hi, r.n, 100.0 * r.per);
            }
        }
        if let Some(conf) = &self.confusion {
            let names: Vec<String> = self
                .class_names
                .clone()
                .unwrap_or_else(|| (0..conf.len()).map(|c| c.to_string()).collect());
            let _ = writeln!(s);
            let _ = write!(s, "{:<10}", "true\\pred");
            for n in &names {
                let _ = write!(s, " {:>9}", n);
            }
            let _ = writeln!(s);
            for (n, row) in names.iter().zip(conf) {
                let _ = write!(s, "{:<10}", n);
                for v in row {
                    let _ = write!(s, " {:>9}", v);
                }
                let _ = writeln!(s);
            }
        }
        s
    }

    /// Writes `<stem>.json` and `<stem>.txt` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{stem}.json")), self.to_json()?)?;
        fs::write(dir.join(format!("{stem}.txt")), self.to_text())?;
        Ok(())
    }
}

pub fn buckets_csv(rows: &[BucketRow]) -> String {
    let mut s = String::from("bucket_lo,bucket_hi,n,per\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", r.lo, r.hi, r.n, r.per);
    }
    s
}

pub fn projection_csv(points: &[[f64; 2]], labels: &[String]) -> String {
    let mut s = String::from("x,y,label\n");
    for (p, l) in points.iter().zip(labels) {
        let _ = writeln!(s, "{},{},{}", p[0], p[1], l);
    }
    s
}
