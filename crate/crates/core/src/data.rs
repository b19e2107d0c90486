//! Quantal dose-response data: dose groups with responder counts.
//!
//! Doses are stored scaled so that the highest administered dose equals 1;
//! `dose_scale` keeps the original maximum so results can be reported on the
//! original dose metric.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::ln_choose;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantalDataset {
    doses: Vec<f64>,
    responders: Vec<u64>,
    group_sizes: Vec<u64>,
    dose_scale: f64,
    #[serde(skip)]
    log_coefficients: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    dose: f64,
    responders: u64,
    n: u64,
}

impl QuantalDataset {
    /// Builds a dataset from doses on their original scale. Groups are sorted
    /// by dose and rescaled so that the largest dose becomes 1.
    pub fn new(doses: &[f64], responders: &[u64], group_sizes: &[u64]) -> Result<Self> {
        if doses.len() != responders.len() || doses.len() != group_sizes.len() {
            return Err(Error::InvalidDataset(format!(
                "column lengths differ: {} doses, {} responder counts, {} group sizes",
                doses.len(),
                responders.len(),
                group_sizes.len()
            )));
        }
        let mut rows: Vec<(usize, f64, u64, u64)> = (0..doses.len())
            .map(|i| (i + 1, doses[i], responders[i], group_sizes[i]))
            .collect();
        for &(row, d, y, n) in &rows {
            if !d.is_finite() || d < 0.0 {
                return Err(Error::InvalidDataset(format!(
                    "row {row}: dose {d} is not a nonnegative number"
                )));
            }
            if n == 0 {
                return Err(Error::InvalidDataset(format!(
                    "row {row}: group size must be at least 1"
                )));
            }
            if y > n {
                return Err(Error::InvalidDataset(format!(
                    "row {row}: {y} responders exceeds group size {n}"
                )));
            }
        }
        rows.sort_by(|a, b| a.1.total_cmp(&b.1));
        if rows.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "at least 2 dose groups are required, got {}",
                rows.len()
            )));
        }
        for pair in rows.windows(2) {
            if pair[0].1 == pair[1].1 {
                return Err(Error::InvalidDataset(format!(
                    "duplicate dose {} (rows {} and {})",
                    pair[0].1, pair[0].0, pair[1].0
                )));
            }
        }
        if rows[0].1 != 0.0 {
            return Err(Error::InvalidDataset(format!(
                "the lowest dose must be a zero-dose control group, got {}",
                rows[0].1
            )));
        }
        let dose_scale = rows[rows.len() - 1].1;
        let scaled: Vec<f64> = rows.iter().map(|r| r.1 / dose_scale).collect();
        let responders: Vec<u64> = rows.iter().map(|r| r.2).collect();
        let group_sizes: Vec<u64> = rows.iter().map(|r| r.3).collect();
        Ok(Self::assemble(scaled, responders, group_sizes, dose_scale))
    }

    /// Reads a CSV file with header `dose,responders,n`.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["dose", "responders", "n"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(Error::InvalidDataset(format!(
                "expected header `dose,responders,n`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut doses = Vec::new();
        let mut ys = Vec::new();
        let mut ns = Vec::new();
        for (i, rec) in rdr.deserialize::<CsvRow>().enumerate() {
            let row = rec.map_err(|e| Error::InvalidDataset(format!("row {}: {e}", i + 1)))?;
            doses.push(row.dose);
            ys.push(row.responders);
            ns.push(row.n);
        }
        Self::new(&doses, &ys, &ns)
    }

    fn assemble(
        doses: Vec<f64>,
        responders: Vec<u64>,
        group_sizes: Vec<u64>,
        dose_scale: f64,
    ) -> Self {
        let log_coefficients = responders
            .iter()
            .zip(&group_sizes)
            .map(|(&y, &n)| ln_choose(n, y))
            .collect();
        Self {
            doses,
            responders,
            group_sizes,
            dose_scale,
            log_coefficients,
        }
    }

    /// Scaled doses, `d_1 = 0 < ... < d_m = 1`.
    pub fn doses(&self) -> &[f64] {
        &self.doses
    }

    pub fn responders(&self) -> &[u64] {
        &self.responders
    }

    pub fn group_sizes(&self) -> &[u64] {
        &self.group_sizes
    }

    /// The original highest dose; multiply scaled doses by this to report.
    pub fn dose_scale(&self) -> f64 {
        self.dose_scale
    }

    pub fn len(&self) -> usize {
        self.doses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doses.is_empty()
    }

    /// `ln C(N_i, Y_i)` for each group.
    pub(crate) fn log_coefficients(&self) -> &[f64] {
        &self.log_coefficients
    }

    /// Doses on the original scale.
    pub fn original_doses(&self) -> Vec<f64> {
        self.doses.iter().map(|d| d * self.dose_scale).collect()
    }

    /// Observed response proportions `Y_i / N_i`.
    pub fn proportions(&self) -> Vec<f64> {
        self.responders
            .iter()
            .zip(&self.group_sizes)
            .map(|(&y, &n)| y as f64 / n as f64)
            .collect()
    }

    /// Returns a copy with different responder counts (same doses and group sizes).
    pub fn with_responders(&self, responders: &[u64]) -> Result<Self> {
        let doses = self.original_doses();
        Self::new(&doses, responders, &self.group_sizes)
    }
}

/// NTP TR-542 cumene inhalation study, female B6C3F1 mice, alveolar/bronchiolar tumors.
pub fn cumene() -> QuantalDataset {
    QuantalDataset::new(
        &[0.0, 125.0, 250.0, 500.0],
        &[4, 31, 42, 46],
        &[50, 50, 50, 50],
    )
    .expect("cumene fixture is valid")
}
