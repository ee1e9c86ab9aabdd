//! Machine-readable run reports.
//!
//! The JSON body is deterministic for a fixed command line: field order is
//! fixed, map-free, and the only run-dependent field outside the results
//! themselves is `totals.wall_seconds`. The config echo carries everything
//! needed to reproduce the run bit for bit, including the master seed.

use serde::Serialize;

/// Echo of the effective configuration.
#[derive(Debug, Clone, Serialize, Default)]
pub struct ConfigEcho {
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h1: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub seed: u64,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistic: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub missing_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub missing_marker: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smc_s: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    /// Rows with a usable response value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dropped_columns: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alt_proportion: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

/// One discovered hypothesis.
#[derive(Debug, Clone, Serialize)]
pub struct Discovery {
    pub column: String,
    /// Final confidence bounds (adaptive runs only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_lb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_ub: Option<f64>,
    /// Point p-value (full-MC and early-stopping runs).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    pub samples_used: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Totals {
    pub total_samples: u64,
    pub rounds: usize,
    pub wall_seconds: f64,
}

/// Report for one method run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub method: String,
    pub config: ConfigEcho,
    pub discoveries: Vec<Discovery>,
    pub totals: Totals,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flattened CSV: one row per discovery.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["method", "column", "p_lb", "p_ub", "p_value", "samples_used"])
            .expect("csv header");
        for d in &self.discoveries {
            let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
            writer
                .write_record([
                    self.method.clone(),
                    d.column.clone(),
                    opt(d.p_lb),
                    opt(d.p_ub),
                    opt(d.p_value),
                    d.samples_used.to_string(),
                ])
                .expect("csv row");
        }
        String::from_utf8(writer.into_inner().expect("csv flush")).expect("csv utf8")
    }
}

/// CSV flattening for a list of reports (the compare command).
pub fn reports_to_csv(reports: &[RunReport]) -> String {
    let mut out = String::from("method,column,p_lb,p_ub,p_value,samples_used\n");
    for report in reports {
        let body = report.to_csv();
        if let Some(idx) = body.find('\n') {
            out.push_str(&body[idx + 1..]);
        }
    }
    out
}
