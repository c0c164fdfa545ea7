//! Experiment reports: metrics with explicit targets and verdicts, CSV series
//! and JSON output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::config::RunConfig;
use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// JSON has no infinities; non-finite values are written as strings.
mod float {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => match t.as_str() {
                "nan" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(serde::de::Error::custom(format!("bad float `{t}`"))),
            },
        }
    }
}

/// Series rows with the same non-finite encoding as [`float`].
mod float_rows {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(transparent)]
    struct F(#[serde(with = "float")] f64);

    pub fn serialize<S: Serializer>(rows: &[Vec<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
        let wrapped: Vec<Vec<F>> = rows.iter().map(|r| r.iter().map(|&v| F(v)).collect()).collect();
        wrapped.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<f64>>, D::Error> {
        let wrapped = Vec::<Vec<F>>::deserialize(d)?;
        Ok(wrapped.into_iter().map(|r| r.into_iter().map(|F(v)| v).collect()).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `value ≤ target + tolerance + slack`.
    AtMost,
    /// `value ≥ target - tolerance - slack`.
    AtLeast,
    /// `|value - target| ≤ tolerance + slack`.
    Within,
    /// Reported without a verdict.
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    #[serde(with = "float")]
    pub value: f64,
    pub comparison: Comparison,
    #[serde(with = "float")]
    pub target: f64,
    #[serde(with = "float")]
    pub tolerance: f64,
    /// Finite-n allowance added to the tolerance, printed separately.
    #[serde(with = "float")]
    pub slack: f64,
    /// `None` for informational metrics.
    pub pass: Option<bool>,
    /// Where the target comes from: a theorem bound, an analytic oracle, a
    /// Monte Carlo tolerance.
    pub basis: String,
}

impl Metric {
    pub fn new(name: &str, value: f64, comparison: Comparison, target: f64, basis: &str) -> Self {
        let mut m = Self {
            name: name.to_string(),
            value,
            comparison,
            target,
            tolerance: 0.0,
            slack: 0.0,
            pass: None,
            basis: basis.to_string(),
        };
        m.judge();
        m
    }

    pub fn info(name: &str, value: f64, basis: &str) -> Self {
        Self::new(name, value, Comparison::Info, f64::NAN, basis)
    }

    pub fn tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self.judge();
        self
    }

    pub fn slack(mut self, slack: f64) -> Self {
        self.slack = slack;
        self.judge();
        self
    }

    fn judge(&mut self) {
        let allow = self.tolerance + self.slack;
        self.pass = match self.comparison {
            Comparison::Info => None,
            Comparison::AtMost => Some(self.value <= self.target + allow),
            Comparison::AtLeast => Some(self.value >= self.target - allow),
            Comparison::Within => Some((self.value - self.target).abs() <= allow),
        };
    }

    pub fn verdict(&self) -> &'static str {
        match self.pass {
            None => "INFO",
            Some(true) => "PASS",
            Some(false) => "FAIL",
        }
    }
}

/// A numeric table written as one CSV file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    #[serde(with = "float_rows")]
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "series row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::InvalidArgument(format!("series `{}` has no column `{name}`", self.name)))?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        w.write_record(&self.columns).map_err(csv_error)?;
        for row in &self.rows {
            // `{:?}` prints the shortest representation that reparses exactly.
            w.write_record(row.iter().map(|v| format!("{v:?}"))).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(name: &str, path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
        let columns: Vec<String> = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_error)?;
            let row = rec
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| Error::Format(format!("non-numeric CSV field `{f}`"))))
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != columns.len() {
                return Err(Error::Format("ragged CSV row".into()));
            }
            rows.push(row);
        }
        Ok(Self {
            name: name.to_string(),
            columns,
            rows,
        })
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub experiment: String,
    pub code_version: String,
    pub config: RunConfig,
    pub metrics: Vec<Metric>,
    pub notes: Vec<String>,
    pub series: Vec<Series>,
    /// CSV files written by [`Report::write_artifacts`].
    pub artifacts: Vec<PathBuf>,
}

impl Report {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            experiment: config.experiment.clone(),
            code_version: CODE_VERSION.to_string(),
            config: config.clone(),
            metrics: Vec::new(),
            notes: Vec::new(),
            series: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    /// Adds a metric; non-finite values are rejected.
    pub fn push(&mut self, metric: Metric) -> Result<()> {
        if !metric.value.is_finite() {
            return Err(Error::NonFinite(format!("metric `{}`", metric.name)));
        }
        if self.metrics.iter().any(|m| m.name == metric.name) {
            return Err(Error::InvalidArgument(format!("duplicate metric `{}`", metric.name)));
        }
        self.metrics.push(metric);
        Ok(())
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn add_series(&mut self, series: Series) {
        self.series.push(series);
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn verdict(&self) -> Verdict {
        if self.metrics.iter().any(|m| m.pass == Some(false)) {
            Verdict::Fail
        } else {
            Verdict::Pass
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text)?;
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Format(format!("report schema version {}", r.schema_version)));
        }
        Ok(r)
    }

    /// Writes every series as `<experiment>_<series>.csv` under `dir` and
    /// records the paths.
    pub fn write_artifacts(&mut self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for s in &self.series {
            let path = dir.join(format!("{}_{}.csv", self.experiment, s.name));
            s.write_csv(&path)?;
            paths.push(path);
        }
        self.artifacts = paths;
        Ok(())
    }

    /// Metrics as a CSV table.
    pub fn metrics_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "value", "comparison", "target", "tolerance", "slack", "verdict", "basis"])
            .map_err(csv_error)?;
        for m in &self.metrics {
            let cmp = serde_json::to_value(m.comparison)?;
            w.write_record([
                m.name.clone(),
                format!("{:?}", m.value),
                cmp.as_str().unwrap_or_default().to_string(),
                format!("{:?}", m.target),
                format!("{:?}", m.tolerance),
                format!("{:?}", m.slack),
                m.verdict().to_string(),
                m.basis.clone(),
            ])
            .map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }

    /// One line per metric, for terminals.
    pub fn summary(&self) -> String {
        let mut out = format!("{} ({})\n", self.experiment, self.code_version);
        for m in &self.metrics {
            let bound = match m.comparison {
                Comparison::Info => String::new(),
                Comparison::AtMost => format!(" <= {:.6} (tol {:.3e}, slack {:.3e})", m.target, m.tolerance, m.slack),
                Comparison::AtLeast => format!(" >= {:.6} (tol {:.3e}, slack {:.3e})", m.target, m.tolerance, m.slack),
                Comparison::Within => format!(" ~ {:.6} (tol {:.3e}, slack {:.3e})", m.target, m.tolerance, m.slack),
            };
            out.push_str(&format!("{:<5} {} = {:.6}{bound}\n", m.verdict(), m.name, m.value));
        }
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> Report {
        let cfg = RunConfig::from_pairs("moment", &[]).unwrap();
        let mut r = Report::new(&cfg);
        r.push(Metric::new("a", 1.0, Comparison::AtMost, 0.9, "bound").slack(0.2)).unwrap();
        r.push(Metric::new("b", 0.5, Comparison::Within, 0.7, "oracle").tolerance(0.1)).unwrap();
        r.push(Metric::info("c", 3.0, "measured")).unwrap();
        r
    }

    #[test]
    fn verdicts() {
        let r = report();
        assert_eq!(r.metric("a").unwrap().pass, Some(true));
        assert_eq!(r.metric("b").unwrap().pass, Some(false));
        assert_eq!(r.metric("c").unwrap().pass, None);
        assert_eq!(r.verdict(), Verdict::Fail);
        assert!(Metric::new("x", 2.0, Comparison::AtLeast, 2.5, "").tolerance(0.5).pass.unwrap());
    }

    #[test]
    fn series_with_non_finite_values_round_trip() {
        let mut r = report();
        let mut s = Series::new("s", &["x", "y"]);
        s.push(vec![0.1 + 0.2, f64::NAN]);
        s.push(vec![f64::INFINITY, -1e-300]);
        r.add_series(s);
        let back = Report::from_json(&r.to_json().unwrap()).unwrap();
        let rows = &back.series("s").unwrap().rows;
        assert_eq!(rows[0][0].to_bits(), (0.1f64 + 0.2).to_bits());
        assert!(rows[0][1].is_nan());
        assert_eq!(rows[1], vec![f64::INFINITY, -1e-300]);
    }

    #[test]
    fn json_round_trip_keeps_nan_target() {
        let r = report();
        let back = Report::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back.metrics.len(), 3);
        assert!(back.metric("c").unwrap().target.is_nan());
        assert_eq!(back.metric("a").unwrap(), r.metric("a").unwrap());
    }

    #[test]
    fn rejects_non_finite_and_duplicate_metrics() {
        let mut r = report();
        assert!(r.push(Metric::info("d", f64::NAN, "")).is_err());
        assert!(r.push(Metric::info("a", 1.0, "")).is_err());
    }

    #[test]
    fn metrics_csv_has_one_row_per_metric() {
        let csv = report().metrics_csv().unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(2).unwrap().contains("FAIL"));
    }
}
