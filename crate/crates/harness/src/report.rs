//! Pivots a sweep summary into per-figure series and fits.
//!
//! Outputs (all CSV):
//! - `labels_vs_eps.csv`: `series,eps,mean_labels,median_labels,ci_low,ci_high`
//! - `labels_vs_k.csv`: `series,k,mean_labels,median_labels,ci_low,ci_high`
//! - `success_vs_eps.csv`: `series,eps,success_rate,trials`
//! - `fits.csv`: `figure,series,points,slope,intercept,r2,loglog_exponent`
//!
//! A series is one `(family, alg, params)` combination with the swept axis
//! removed from `params`. Rows with `status = skipped` are ignored. In
//! `fits.csv` the labels-vs-ε fit regresses mean labels on `ln(1/ε)`; the
//! labels-vs-k fit regresses mean labels on k.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use crate::error::{HarnessError, Result};
use crate::stats::{linear_fit, loglog_exponent};

pub const REQUIRED_COLUMNS: [&str; 11] = [
    "family",
    "params",
    "k",
    "alg",
    "eps",
    "trials",
    "mean_labels",
    "median_labels",
    "ci_low",
    "ci_high",
    "success_rate",
];

/// One usable row of a sweep summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub family: String,
    pub params: String,
    pub k: usize,
    pub alg: String,
    pub eps: f64,
    pub trials: usize,
    pub mean_labels: f64,
    pub median_labels: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub success_rate: f64,
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<T> {
    let raw = rec.get(idx).unwrap_or("");
    raw.trim()
        .parse()
        .map_err(|_| HarnessError::Schema(format!("line {line}: column {name} has unusable value `{raw}`")))
}

/// Reads a sweep summary, dropping skipped rows.
pub fn read_sweep<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| HarnessError::Schema(format!("missing column `{name}`")))
    };
    let idx: Vec<usize> = REQUIRED_COLUMNS.iter().map(|c| col(c)).collect::<Result<_>>()?;
    let status = headers.iter().position(|h| h == "status");
    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = n as u64 + 2;
        if let Some(s) = status {
            if rec.get(s) == Some("skipped") {
                continue;
            }
        }
        rows.push(SweepRow {
            family: rec.get(idx[0]).unwrap_or("").to_string(),
            params: rec.get(idx[1]).unwrap_or("").to_string(),
            k: field(&rec, idx[2], "k", line)?,
            alg: rec.get(idx[3]).unwrap_or("").to_string(),
            eps: field(&rec, idx[4], "eps", line)?,
            trials: field(&rec, idx[5], "trials", line)?,
            mean_labels: field(&rec, idx[6], "mean_labels", line)?,
            median_labels: field(&rec, idx[7], "median_labels", line)?,
            ci_low: field(&rec, idx[8], "ci_low", line)?,
            ci_high: field(&rec, idx[9], "ci_high", line)?,
            success_rate: field(&rec, idx[10], "success_rate", line)?,
        });
    }
    Ok(rows)
}

fn series_name(row: &SweepRow, drop: &[&str]) -> String {
    let params: Vec<&str> = row
        .params
        .split(';')
        .filter(|p| !p.is_empty())
        .filter(|p| !drop.iter().any(|d| p.split('=').next() == Some(d)))
        .collect();
    if params.is_empty() {
        format!("{}|{}", row.family, row.alg)
    } else {
        format!("{}|{}|{}", row.family, row.alg, params.join(";"))
    }
}

fn by_series<'a>(
    rows: &'a [SweepRow],
    drop: &[&str],
    x: impl Fn(&SweepRow) -> f64,
) -> BTreeMap<String, Vec<&'a SweepRow>> {
    let mut map: BTreeMap<String, Vec<&SweepRow>> = BTreeMap::new();
    for r in rows {
        map.entry(series_name(r, drop)).or_default().push(r);
    }
    for v in map.values_mut() {
        v.sort_by(|a, b| x(a).total_cmp(&x(b)));
    }
    map
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub labels_vs_eps: String,
    pub labels_vs_k: String,
    pub success_vs_eps: String,
    pub fits: String,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Builds every output file in memory.
pub fn build_report(rows: &[SweepRow]) -> Report {
    let mut rep = Report {
        labels_vs_eps: "series,eps,mean_labels,median_labels,ci_low,ci_high\n".into(),
        labels_vs_k: "series,k,mean_labels,median_labels,ci_low,ci_high\n".into(),
        success_vs_eps: "series,eps,success_rate,trials\n".into(),
        fits: "figure,series,points,slope,intercept,r2,loglog_exponent\n".into(),
    };
    for (name, series) in by_series(rows, &["eps"], |r| r.eps) {
        for r in &series {
            rep.labels_vs_eps.push_str(&format!(
                "{name},{},{},{},{},{}\n",
                r.eps, r.mean_labels, r.median_labels, r.ci_low, r.ci_high
            ));
            rep.success_vs_eps.push_str(&format!("{name},{},{},{}\n", r.eps, r.success_rate, r.trials));
        }
        let xs: Vec<f64> = series.iter().map(|r| (1.0 / r.eps).ln()).collect();
        let ys: Vec<f64> = series.iter().map(|r| r.mean_labels).collect();
        let inv: Vec<f64> = series.iter().map(|r| 1.0 / r.eps).collect();
        let fit = linear_fit(&xs, &ys);
        rep.fits.push_str(&format!(
            "labels_vs_eps,{name},{},{},{},{},{}\n",
            series.len(),
            opt(fit.map(|f| f.slope)),
            opt(fit.map(|f| f.intercept)),
            opt(fit.map(|f| f.r2)),
            opt(loglog_exponent(&inv, &ys)),
        ));
    }
    let k_series = by_series(rows, &["k", "eps"], |r| r.k as f64);
    for (name, series) in k_series {
        // one series per target error
        let mut by_eps: BTreeMap<u64, Vec<&SweepRow>> = BTreeMap::new();
        for r in series {
            by_eps.entry(r.eps.to_bits()).or_default().push(r);
        }
        for group in by_eps.values() {
            let name = format!("{name}|eps={}", group[0].eps);
            for r in group {
                rep.labels_vs_k.push_str(&format!(
                    "{name},{},{},{},{},{}\n",
                    r.k, r.mean_labels, r.median_labels, r.ci_low, r.ci_high
                ));
            }
            let xs: Vec<f64> = group.iter().map(|r| r.k as f64).collect();
            let ys: Vec<f64> = group.iter().map(|r| r.mean_labels).collect();
            let fit = linear_fit(&xs, &ys);
            rep.fits.push_str(&format!(
                "labels_vs_k,{name},{},{},{},{},{}\n",
                group.len(),
                opt(fit.map(|f| f.slope)),
                opt(fit.map(|f| f.intercept)),
                opt(fit.map(|f| f.r2)),
                opt(loglog_exponent(&xs, &ys)),
            ));
        }
    }
    rep
}

/// Reads `input` and writes the four report files into `out_dir`.
pub fn report(input: &Path, out_dir: &Path) -> Result<Report> {
    let file = std::fs::File::open(input).map_err(|e| HarnessError::io(input, e))?;
    let rows = read_sweep(file)?;
    let rep = build_report(&rows);
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    for (name, body) in [
        ("labels_vs_eps.csv", &rep.labels_vs_eps),
        ("labels_vs_k.csv", &rep.labels_vs_k),
        ("success_vs_eps.csv", &rep.success_vs_eps),
        ("fits.csv", &rep.fits),
    ] {
        let path = out_dir.join(name);
        std::fs::write(&path, body).map_err(|e| HarnessError::io(&path, e))?;
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_column_is_schema_error() {
        let text = "family,params,alg,eps\nprop1,k=2,passive-naive,0.1\n";
        assert!(matches!(read_sweep(text.as_bytes()), Err(HarnessError::Schema(_))));
    }

    #[test]
    fn bad_value_is_schema_error() {
        let text = "family,params,k,alg,eps,trials,mean_labels,median_labels,ci_low,ci_high,success_rate\n\
                    prop1,k=2,x,passive-naive,0.1,5,1,1,1,1,1\n";
        assert!(matches!(read_sweep(text.as_bytes()), Err(HarnessError::Schema(_))));
    }
}
