use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::OplabError;

/// One `(case, quantity)` row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub experiment: String,
    pub case: usize,
    pub seed: u64,
    /// `key=value` pairs joined by `;`, enough to replay the case.
    pub params: String,
    pub quantity: String,
    pub value: f64,
    pub error: f64,
    /// Empty when clean; otherwise a short reason.
    pub flag: String,
}

/// A named pass/fail check with its measured value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub records: Vec<Record>,
    /// Summary statistics in insertion order.
    pub summary: Vec<(String, f64)>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            ..Self::default()
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn record(&mut self, case: usize, seed: u64, params: &str, quantity: &str, value: f64, error: f64, flag: &str) {
        self.records.push(Record {
            experiment: self.experiment.clone(),
            case,
            seed,
            params: params.to_string(),
            quantity: quantity.to_string(),
            value,
            error,
            flag: flag.to_string(),
        });
    }

    pub fn stat(&mut self, name: &str, value: f64) {
        self.summary.push((name.to_string(), value));
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn get_stat(&self, name: &str) -> Option<f64> {
        self.summary.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn flagged_records(&self) -> usize {
        self.records.iter().filter(|r| !r.flag.is_empty()).count()
    }

    /// Rows of the CSV schema, header included.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), OplabError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r).map_err(csv_err)?;
        }
        if self.records.is_empty() {
            w.write_record(["experiment", "case", "seed", "params", "quantity", "value", "error", "flag"])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Appends another report's rows, summary and checks.
    pub fn merge(&mut self, other: Report) {
        self.records.extend(other.records);
        self.summary.extend(other.summary);
        self.checks.extend(other.checks);
        self.notes.extend(other.notes);
    }
}

fn csv_err(e: csv::Error) -> OplabError {
    OplabError::Io(std::io::Error::other(e))
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "== {} ({} records) ==", self.experiment, self.records.len())?;
        for (name, value) in &self.summary {
            writeln!(f, "  {name:<28} {value:.6e}")?;
        }
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "  [{tag}] {}: {}", c.name, c.detail)?;
        }
        for note in &self.notes {
            writeln!(f, "  note: {note}")?;
        }
        let flagged = self.flagged_records();
        if flagged > 0 {
            writeln!(f, "  {flagged} flagged record(s)")?;
        }
        write!(f, "  overall: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Least-squares slope of `log y` against `log x`, with its standard error.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    linear_fit(&lx, &ly)
}

/// Slope and its standard error for `y = a + b x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    if x.len() < 3 {
        return (slope, 0.0);
    }
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    (slope, (rss / (n - 2.0) / sxx).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_slope() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-2.5)).collect();
        let (s, se) = loglog_slope(&xs, &ys);
        assert!((s + 2.5).abs() < 1e-12 && se < 1e-12);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut r = Report::new("demo");
        r.record(0, 7, "n=2", "norm", 1.5, 1e-4, "");
        let text = r.to_csv_string();
        assert!(text.starts_with("experiment,case,seed,params,quantity,value,error,flag\n"));
        assert!(text.contains("demo,0,7,n=2,norm,1.5,0.0001,"));
        assert!(Report::new("empty").to_csv_string().starts_with("experiment,"));
    }
}
