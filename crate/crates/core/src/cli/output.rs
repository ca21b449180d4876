//! Result files.
//!
//! Floats are written with 17 significant digits in scientific notation
//! (`{:.16e}`), which round-trips every f64 exactly and does not depend on
//! locale.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::LightConeMap;
use crate::error::{Error, Result};
use crate::experiment::{EnsembleResult, Measure};

use super::config::ConfigFile;

pub const RESULTS_HEADER: [&str; 10] =
    ["time", "neg_mean", "neg_var", "logneg_mean", "logneg_var", "conc_mean", "conc_var", "eof_mean", "eof_var", "n"];

pub const LIGHTCONE_HEADER: [&str; 3] = ["L", "t", "delta_sn"];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_to_string(rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn results_csv(result: &EnsembleResult) -> String {
    let header = RESULTS_HEADER.iter().map(|s| s.to_string()).collect();
    let rows = result.times().iter().enumerate().map(|(i, &t)| {
        let mut row = vec![fmt_f64(t)];
        for m in Measure::ALL {
            let s = result.stats(m);
            row.push(fmt_f64(s.mean[i]));
            row.push(fmt_f64(s.variance[i]));
        }
        row.push(result.n.to_string());
        row
    });
    csv_to_string(std::iter::once(header).chain(rows))
}

pub fn lightcone_csv(map: &LightConeMap) -> String {
    let header = LIGHTCONE_HEADER.iter().map(|s| s.to_string()).collect();
    let rows = map.l_values.iter().zip(&map.delta_sn).flat_map(|(&l, row)| {
        map.grid.times.iter().zip(row).map(move |(&t, &d)| vec![l.to_string(), fmt_f64(t), fmt_f64(d)])
    });
    csv_to_string(std::iter::once(header).chain(rows))
}

/// results.csv read back.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultsTable {
    pub times: Vec<f64>,
    /// Per measure, in [`Measure::ALL`] order: (mean, variance).
    pub columns: Vec<(Vec<f64>, Vec<f64>)>,
    pub n: usize,
}

impl ResultsTable {
    pub fn mean(&self, m: Measure) -> &[f64] {
        &self.columns[Measure::ALL.iter().position(|x| *x == m).expect("known measure")].0
    }

    pub fn variance(&self, m: Measure) -> &[f64] {
        &self.columns[Measure::ALL.iter().position(|x| *x == m).expect("known measure")].1
    }

    pub fn stderr(&self, m: Measure) -> Vec<f64> {
        self.variance(m).iter().map(|v| (v / self.n as f64).sqrt()).collect()
    }
}

fn malformed(path: &Path, message: impl Into<String>) -> Error {
    Error::Malformed { path: path.display().to_string(), message: message.into() }
}

/// Strict reader: exact header, ten fields per row, plain numeric fields.
pub fn read_results_csv(path: &Path) -> Result<ResultsTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_results_csv(&text, path)
}

pub fn parse_results_csv(text: &str, path: &Path) -> Result<ResultsTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| malformed(path, e.to_string()))?.clone();
    if header.iter().ne(RESULTS_HEADER.iter().copied()) {
        return Err(malformed(path, format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut table = ResultsTable { times: Vec::new(), columns: vec![(Vec::new(), Vec::new()); 4], n: 0 };
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| malformed(path, e.to_string()))?;
        let field = |i: usize| -> Result<f64> {
            let raw = &record[i];
            raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                malformed(path, format!("row {}: bad number {raw:?} in column {}", line + 1, RESULTS_HEADER[i]))
            })
        };
        table.times.push(field(0)?);
        for m in 0..4 {
            table.columns[m].0.push(field(1 + 2 * m)?);
            table.columns[m].1.push(field(2 + 2 * m)?);
        }
        let n: usize =
            record[9].parse().map_err(|_| malformed(path, format!("row {}: bad count {:?}", line + 1, &record[9])))?;
        if line > 0 && n != table.n {
            return Err(malformed(path, "realization count changes between rows"));
        }
        table.n = n;
    }
    if table.times.is_empty() {
        return Err(malformed(path, "no data rows"));
    }
    if table.times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(malformed(path, "times are not strictly increasing"));
    }
    Ok(table)
}

/// One row of a sweep's summary.csv.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub point: usize,
    #[serde(rename = "L")]
    pub n_sites: usize,
    pub delta: f64,
    pub h: f64,
    pub scenario: String,
    pub s_inf: f64,
    pub s_inf_spread: f64,
    pub s_inf_stderr: f64,
    pub tail_slope: f64,
    pub converged: bool,
    pub v: Option<f64>,
    pub v_stderr: Option<f64>,
    pub v_r2: Option<f64>,
    pub fit_lo: Option<f64>,
    pub fit_hi: Option<f64>,
    pub results: String,
}

pub const SUMMARY_HEADER: [&str; 16] = [
    "point",
    "L",
    "delta",
    "h",
    "scenario",
    "s_inf",
    "s_inf_spread",
    "s_inf_stderr",
    "tail_slope",
    "converged",
    "v",
    "v_stderr",
    "v_r2",
    "fit_lo",
    "fit_hi",
    "results",
];

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let header = SUMMARY_HEADER.iter().map(|s| s.to_string()).collect();
    let body = rows.iter().map(|r| {
        vec![
            r.point.to_string(),
            r.n_sites.to_string(),
            fmt_f64(r.delta),
            fmt_f64(r.h),
            r.scenario.clone(),
            fmt_f64(r.s_inf),
            fmt_f64(r.s_inf_spread),
            fmt_f64(r.s_inf_stderr),
            fmt_f64(r.tail_slope),
            r.converged.to_string(),
            opt(r.v),
            opt(r.v_stderr),
            opt(r.v_r2),
            opt(r.fit_lo),
            opt(r.fit_hi),
            r.results.clone(),
        ]
    });
    csv_to_string(std::iter::once(header).chain(body))
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| malformed(path, e.to_string()))?.clone();
    if header.iter().ne(SUMMARY_HEADER.iter().copied()) {
        return Err(malformed(path, "unexpected summary header"));
    }
    reader.deserialize().map(|r| r.map_err(|e: csv::Error| malformed(path, e.to_string()))).collect()
}

/// Everything needed to repeat a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// ISO-8601 UTC.
    pub timestamp: String,
    pub command: String,
    pub config: ConfigFile,
    pub config_digest: String,
    pub master_seed: u64,
    /// SHA-256 over the little-endian realization seeds, in order.
    pub seed_list_digest: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Malformed { path: "manifest".into(), message: e.to_string() })
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Creates `dir`, refusing to reuse an existing one unless `force` is set.
pub fn prepare_dir(dir: &Path, force: bool) -> Result<PathBuf> {
    if dir.exists() && !force {
        return Err(Error::io(
            dir,
            std::io::Error::new(
                std::io::ErrorKind::AlreadyExists,
                "output directory exists (use --force to overwrite)",
            ),
        ));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir.to_path_buf())
}
