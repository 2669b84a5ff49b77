//! Per-run CSV rows, aggregate files, and their parsers. The metric
//! block inside each row is exactly the library's documented column
//! order, wrapped with the repetition bookkeeping and the
//! few-root-causes audit of the generated data.

use anyhow::{bail, Context, Result};
use sparserc::{FrcAudit, MetricsReport};

/// Columns 3..=20 are [`MetricsReport::CSV_HEADER`] verbatim.
pub const RUNS_HEADER: &str = "rep,status,method,seed,d,n,shd,sid,tpr,fpr,total_edges,\
                               nmse,avg_l1,max_l1,avg_l2,c_tpr,c_fpr,c_nmse,varsortability,\
                               runtime_s,frc_sparsity,frc_noise,frc_pass,l0_match";

#[derive(Debug, Clone, PartialEq)]
pub enum RepStatus {
    Ok,
    Timeout,
    Error(String),
}

impl RepStatus {
    pub fn as_str(&self) -> &str {
        match self {
            Self::Ok => "ok",
            Self::Timeout => "timeout",
            Self::Error(_) => "error",
        }
    }
}

/// Everything recorded about one repetition.
#[derive(Debug, Clone)]
pub struct RepRecord {
    pub rep: usize,
    pub status: RepStatus,
    pub seed: u64,
    pub d: usize,
    pub n: usize,
    pub report: Option<MetricsReport>,
    pub frc: Option<FrcAudit>,
    /// Whether the exhaustive L0 search agreed with the ground truth;
    /// absent when the oracle did not run.
    pub l0_match: Option<bool>,
}

fn opt_f64(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_nan() => "nan".into(),
        Some(x) => x.to_string(),
        None => "na".into(),
    }
}

pub fn record_to_row(r: &RepRecord) -> String {
    let metrics = match &r.report {
        Some(report) => report.to_csv_row("sparserc", r.seed, r.d, r.n),
        None => {
            let blanks = vec!["na"; 14].join(",");
            format!("sparserc,{},{},{},{blanks}", r.seed, r.d, r.n)
        }
    };
    let frc_sparsity = opt_f64(r.frc.as_ref().map(|a| a.sparsity_ratio));
    let frc_noise = opt_f64(r.frc.as_ref().map(|a| a.noise_ratio));
    let frc_pass = r
        .frc
        .as_ref()
        .map_or_else(|| "na".into(), |a| a.passes.to_string());
    let l0 = r
        .l0_match
        .map_or_else(|| "na".into(), |m| m.to_string());
    format!(
        "{},{},{metrics},{frc_sparsity},{frc_noise},{frc_pass},{l0}",
        r.rep,
        r.status.as_str()
    )
}

/// A parsed row of runs.csv.
#[derive(Debug, Clone)]
pub struct ParsedRow {
    pub rep: usize,
    pub status: String,
    pub report: Option<MetricsReport>,
    pub frc_sparsity: Option<f64>,
    pub frc_noise: Option<f64>,
}

pub fn parse_runs_csv(text: &str) -> Result<Vec<ParsedRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == RUNS_HEADER => {}
        other => bail!("unexpected runs.csv header: {other:?}"),
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 24 {
            bail!("expected 24 fields, found {} in {line:?}", fields.len());
        }
        let rep: usize = fields[0].parse().context("rep column")?;
        let status = fields[1].to_string();
        let report = if status == "ok" {
            let metric_row = fields[2..20].join(",");
            let (_, _, _, _, report) = MetricsReport::from_csv_row(&metric_row)?;
            Some(report)
        } else {
            None
        };
        let parse_opt = |s: &str| -> Option<f64> {
            match s {
                "na" => None,
                other => other.parse().ok(),
            }
        };
        rows.push(ParsedRow {
            rep,
            status,
            report,
            frc_sparsity: parse_opt(fields[20]),
            frc_noise: parse_opt(fields[21]),
        });
    }
    Ok(rows)
}

/// Mean and population standard deviation per metric over the successful
/// rows; metrics absent in a row are skipped for that row.
pub fn aggregate(records: &[RepRecord]) -> Vec<(&'static str, f64, f64, usize)> {
    let mut out = Vec::new();
    let columns: Vec<(&'static str, Box<dyn Fn(&RepRecord) -> Option<f64>>)> = vec![
        ("shd", Box::new(|r| r.report.as_ref().map(|m| m.shd as f64))),
        (
            "sid",
            Box::new(|r| r.report.as_ref().and_then(|m| m.sid.map(|v| v as f64))),
        ),
        ("tpr", Box::new(|r| r.report.as_ref().map(|m| m.tpr))),
        ("fpr", Box::new(|r| r.report.as_ref().map(|m| m.fpr))),
        (
            "total_edges",
            Box::new(|r| r.report.as_ref().map(|m| m.total_edges as f64)),
        ),
        (
            "nmse",
            Box::new(|r| r.report.as_ref().map(|m| m.nmse_weights)),
        ),
        ("avg_l1", Box::new(|r| r.report.as_ref().map(|m| m.avg_l1))),
        ("max_l1", Box::new(|r| r.report.as_ref().map(|m| m.max_l1))),
        ("avg_l2", Box::new(|r| r.report.as_ref().map(|m| m.avg_l2))),
        ("c_tpr", Box::new(|r| r.report.as_ref().and_then(|m| m.c_tpr))),
        ("c_fpr", Box::new(|r| r.report.as_ref().and_then(|m| m.c_fpr))),
        (
            "c_nmse",
            Box::new(|r| r.report.as_ref().and_then(|m| m.c_nmse)),
        ),
        (
            "varsortability",
            Box::new(|r| r.report.as_ref().and_then(|m| m.varsortability)),
        ),
        (
            "runtime_s",
            Box::new(|r| r.report.as_ref().map(|m| m.runtime_seconds)),
        ),
        (
            "frc_sparsity",
            Box::new(|r| r.frc.as_ref().map(|a| a.sparsity_ratio)),
        ),
        (
            "frc_noise",
            Box::new(|r| {
                r.frc
                    .as_ref()
                    .map(|a| a.noise_ratio)
                    .filter(|v| !v.is_nan())
            }),
        ),
    ];
    for (name, extract) in columns {
        let values: Vec<f64> = records.iter().filter_map(|r| extract(r)).collect();
        let (mean, std) = mean_std(&values);
        out.push((name, mean, std, values.len()));
    }
    out
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn aggregate_to_csv(stats: &[(&'static str, f64, f64, usize)]) -> String {
    let mut out = String::from("metric,mean,std,count\n");
    for (name, mean, std, count) in stats {
        if *count == 0 {
            out.push_str(&format!("{name},na,na,0\n"));
        } else {
            out.push_str(&format!("{name},{mean},{std},{count}\n"));
        }
    }
    out
}
