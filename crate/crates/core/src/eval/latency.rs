use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Predicted inference time as a linear function of input duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl LatencyModel {
    pub fn predict(&self, input_s: f64) -> f64 {
        self.slope * input_s + self.intercept
    }
}

/// Ordinary least squares over `(input seconds, prediction seconds)`.
pub fn latency_fit(observations: &[(f64, f64)]) -> Result<LatencyModel, EvalError> {
    if observations.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(EvalError::Latency("observations must be finite".into()));
    }
    let first = observations.first().map(|o| o.0);
    if observations.iter().all(|o| Some(o.0) == first) {
        return Err(EvalError::Latency("need at least 2 distinct input lengths".into()));
    }
    let n = observations.len() as f64;
    let mx = observations.iter().map(|o| o.0).sum::<f64>() / n;
    let my = observations.iter().map(|o| o.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in observations {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = observations
        .iter()
        .map(|&(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(LatencyModel { slope, intercept, r_squared })
}

/// CSV with two numeric columns; `#` comments and a non-numeric header line
/// are skipped.
pub fn parse_latency_csv(text: &str) -> Result<Vec<(f64, f64)>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (a, b) = (cols.next().unwrap_or(""), cols.next().unwrap_or(""));
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(x), Ok(y)) => out.push((x, y)),
            _ if out.is_empty() && a.parse::<f64>().is_err() => continue,
            _ => return Err(EvalError::Latency(format!("line {}: expected two numbers", i + 1))),
        }
    }
    Ok(out)
}

pub fn load_latency_csv(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>, EvalError> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| EvalError::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_latency_csv(&text)
}
