//! Experiment results as an append-only table with a CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const METRIC_REL_ERROR: &str = "rel_error";
pub const METRIC_FREQ_MSE: &str = "freq_mse";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stat {
    Mean,
    /// Standard error of the mean.
    Se,
}

/// One value at one grid point. `k` is empty for infinite-level
/// quantization and `snr_db` for experiments without a scene. For
/// level rules that depend on the trial, `delta_r`/`delta_i` hold the mean
/// level used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: String,
    pub estimator: String,
    pub d: usize,
    pub n: usize,
    pub delta_r: f64,
    pub delta_i: f64,
    pub k: Option<u32>,
    pub ruler: String,
    pub snr_db: Option<f64>,
    pub trials: usize,
    pub stat: Stat,
    pub metric: String,
    pub value: f64,
    /// Empty unless the grid point failed (value is then NaN).
    pub note: String,
}

impl Row {
    /// Whether two rows describe the same grid point and estimator.
    pub fn same_point(&self, other: &Row) -> bool {
        self.experiment == other.experiment
            && self.estimator == other.estimator
            && self.d == other.d
            && self.n == other.n
            && self.delta_r == other.delta_r
            && self.delta_i == other.delta_i
            && self.k == other.k
            && self.ruler == other.ruler
            && self.snr_db == other.snr_db
            && self.metric == other.metric
    }
}

/// Mean and standard error read back from a table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    rows: Vec<Row>,
}

impl ResultTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn extend(&mut self, rows: impl IntoIterator<Item = Row>) {
        self.rows.extend(rows);
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn means(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.stat == Stat::Mean)
    }

    /// Mean and standard error of the first mean row matching `pred`.
    pub fn summary(&self, pred: impl Fn(&Row) -> bool) -> Option<Summary> {
        let mean = self.means().find(|r| pred(r))?;
        let se = self
            .rows
            .iter()
            .find(|r| r.stat == Stat::Se && r.same_point(mean))
            .map_or(f64::NAN, |r| r.value);
        Some(Summary {
            mean: mean.value,
            se,
        })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        if self.rows.is_empty() {
            wr.write_record(HEADER)?;
        }
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let rows = rd.deserialize().collect::<std::result::Result<Vec<Row>, _>>()?;
        Ok(Self { rows })
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

const HEADER: [&str; 14] = [
    "experiment",
    "estimator",
    "d",
    "n",
    "delta_r",
    "delta_i",
    "k",
    "ruler",
    "snr_db",
    "trials",
    "stat",
    "metric",
    "value",
    "note",
];
