use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::accuracy::{AccuracyReport, SweepPoint};
use super::latency::LatencyModel;

/// Everything `eval` produces, serialized as the report JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: AccuracyReport,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency: Option<LatencyModel>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }

    /// Human-readable summary table.
    pub fn to_table(&self) -> String {
        let a = &self.accuracy;
        let mut s = String::new();
        let _ = writeln!(s, "samples        {}", a.samples);
        let _ = writeln!(s, "top-1          {:.4}", a.top1);
        let _ = writeln!(s, "top-{:<2}         {:.4}", a.k, a.topk);
        let _ = writeln!(s, "per-class      {:.4} ± {:.4}", a.per_class.mean, a.per_class.std_dev);
        let _ = writeln!(s, "nDCG@7         {:.4}", a.ndcg_mean);
        let _ = writeln!(s, "\n{:<10} {:<16} {:>6} {:>7} {:>7}", "feature", "value", "n", "top-1", "top-7");
        for g in &a.groups {
            let _ = writeln!(s, "{:<10} {:<16} {:>6} {:>7.4} {:>7.4}", g.feature, g.value, g.count, g.top1, g.top7);
        }
        if !self.sweep.is_empty() {
            let _ = writeln!(s, "\n{:>6} {:>7} {:>7}", "ratio", "top-1", "top-7");
            for p in &self.sweep {
                let _ = writeln!(s, "{:>6.2} {:>7.4} {:>7.4}", p.ratio, p.top1, p.top7);
            }
        }
        if let Some(l) = &self.latency {
            let _ = writeln!(s, "\nlatency  t = {:.4}·len + {:.4}  (r² {:.4})", l.slope, l.intercept, l.r_squared);
        }
        s
    }
}
