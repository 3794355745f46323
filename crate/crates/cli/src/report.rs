//! Result rows, CSV output and the pass/fail summary.

use std::io::Write;

use serde::Serialize;

use crate::error::RunError;
use crate::stats::Estimate;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub parameter: String,
    pub mc_estimate: f64,
    /// Empty for deterministic rows.
    pub mc_stderr: Option<f64>,
    pub oracle_value: f64,
    pub z_score: Option<f64>,
    pub pass: bool,
}

impl Row {
    /// Monte Carlo row. `coarse` is the estimate at resolution `n` and
    /// `fine` the one at `2n`; their gap is the discretisation band, and
    /// `z` is the deviation left after removing the band, in standard errors.
    pub fn monte_carlo(experiment: &str, parameter: String, coarse: Estimate, fine: Estimate, oracle: f64, sigmas: f64) -> Row {
        let band = (coarse.value - fine.value).abs();
        Self::banded(experiment, parameter, coarse, band, oracle, sigmas)
    }

    pub fn banded(experiment: &str, parameter: String, est: Estimate, band: f64, oracle: f64, sigmas: f64) -> Row {
        let dev = est.value - oracle;
        let excess = (dev.abs() - band).max(0.0);
        let z = if excess == 0.0 {
            0.0
        } else if est.se > 0.0 {
            dev.signum() * excess / est.se
        } else {
            dev.signum() * f64::INFINITY
        };
        Row {
            experiment: experiment.to_string(),
            parameter,
            mc_estimate: est.value,
            mc_stderr: Some(est.se),
            oracle_value: oracle,
            z_score: Some(z),
            pass: z.abs() <= sigmas,
        }
    }

    /// Row without sampling error, passing within `rel_tol`.
    pub fn exact(experiment: &str, parameter: String, value: f64, oracle: f64, rel_tol: f64) -> Row {
        Row {
            experiment: experiment.to_string(),
            parameter,
            mc_estimate: value,
            mc_stderr: None,
            oracle_value: oracle,
            z_score: None,
            pass: (value - oracle).abs() <= rel_tol * oracle.abs().max(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub experiment: String,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn worst_z(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.z_score).map(f64::abs).reduce(f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), RunError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| RunError::Io(e.to_string());
        for r in &self.rows {
            w.serialize(r).map_err(io)?;
        }
        w.flush().map_err(|e| RunError::Io(e.to_string()))
    }

    pub fn csv_string(&self) -> Result<String, RunError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| RunError::Io(e.to_string()))
    }

    pub fn summary(&self) -> String {
        let failed = self.rows.iter().filter(|r| !r.pass).count();
        let worst = self.worst_z().map_or("n/a".to_string(), |z| format!("{z:.3}"));
        format!(
            "summary: experiment={} rows={} failed={} worst_z={} result={}",
            self.experiment,
            self.rows.len(),
            failed,
            worst,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}
