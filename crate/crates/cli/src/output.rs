//! Report and rejection-table writers.

use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use cpdetect_core::{RejectionRow, TestReport, VarianceForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Text,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "text" | "txt" => Ok(Self::Text),
            other => Err(format!("unknown format {other:?} (expected json or text)")),
        }
    }
}

pub fn emit_report(report: &TestReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("reports serialize");
            out.push(b'\n');
            out
        }
        ReportFormat::Text => text_report(report).into_bytes(),
    }
}

pub fn parse_report(bytes: &[u8]) -> serde_json::Result<TestReport> {
    serde_json::from_slice(bytes)
}

fn text_report(r: &TestReport) -> String {
    let mut s = String::new();
    let mut line = |label: &str, value: &dyn std::fmt::Display| {
        writeln!(s, "{label:<18}{value}").expect("writing to a string");
    };
    line("statistic:", &r.statistic_name);
    line("statistic value:", &r.statistic_value);
    line("p-value:", &r.p_value);
    line("change point k:", &r.changepoint_index);
    line("method:", &r.method);
    if let Some(st) = r.studentized {
        line("studentized:", &st);
    }
    if let Some(v) = &r.variance {
        let form = match v.form {
            VarianceForm::Iid => "iid".to_string(),
            VarianceForm::Hac { ell } => format!("hac, ell = {ell}"),
        };
        line("variance:", &format!("{} ({form})", v.sigma2));
    }
    if let Some(ell) = r.ell_used {
        line("ell:", &ell);
    }
    if let Some(m) = r.replicates {
        line("replicates:", &m);
    }
    line("b_n:", &r.b_n);
    line("n:", &r.n);
    line("d:", &r.d);
    line("seed:", &r.seed);
    s
}

pub const REJECTION_HEADER: [&str; 9] = [
    "family", "n", "tau1", "tau2", "t", "gamma", "stat", "method", "reject_pct",
];

/// Writes the rejection table; an absent change location is an empty field.
pub fn write_rejection_table<W: Write>(rows: &[RejectionRow], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(REJECTION_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
