//! CSV and JSON output formats.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::continuation::Branch;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::nonlinearity::Nonlinearity;
use crate::report::{finite_or_inf, EstimateReport};
use crate::solver::Solution;

/// 17 significant digits; non-finite values as `inf`, `-inf` or `nan`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        t => t.parse().map_err(|_| Error::Io(format!("not a number: {t:?}"))),
    }
}

/// `r,value` rows in ascending radius; the origin of a singular function is
/// omitted.
pub fn write_grid_function<W: Write>(u: &GridFunction, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "value"])?;
    let nodes = u.grid().nodes();
    for i in u.first_valid()..nodes.len() {
        w.write_record([fmt_f64(nodes[i]), fmt_f64(u.values()[i])])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid_function_csv<R: Read>(input: R) -> Result<Vec<(f64, f64)>> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["r", "value"] {
        return Err(Error::Io(format!("unexpected header {headers:?}")));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        rows.push((parse_f64(&rec[0])?, parse_f64(&rec[1])?));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub lambda: f64,
    pub n: usize,
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub q: Option<f64>,
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    pub csv_path: String,
}

impl SolutionRecord {
    pub fn new(s: &Solution, csv_path: impl Into<String>) -> Self {
        let q = match s.problem.nonlinearity {
            Nonlinearity::Power { q } => Some(q),
            _ => None,
        };
        Self {
            lambda: s.problem.lambda,
            n: s.problem.dimension(),
            family: s.problem.nonlinearity.tag().to_string(),
            q,
            residual_norm: s.residual_norm,
            converged: s.converged,
            iterations: s.iterations,
            csv_path: csv_path.into(),
        }
    }
}

/// Writes `<stem>.csv` (the profile) and `<stem>.json` (the record) into `dir`.
pub fn write_solution(s: &Solution, dir: &Path, stem: &str) -> Result<SolutionRecord> {
    let csv_name = format!("{stem}.csv");
    write_grid_function(&s.u, BufWriter::new(File::create(dir.join(&csv_name))?))?;
    let record = SolutionRecord::new(s, csv_name);
    write_json(&record, &dir.join(format!("{stem}.json")))?;
    Ok(record)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// `s,lambda,sup_norm,mu1`; `mu1` is empty where it was not computed.
pub fn write_branch<W: Write>(branch: &Branch, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["s", "lambda", "sup_norm", "mu1"])?;
    for p in &branch.points {
        w.write_record([
            fmt_f64(p.arclength),
            fmt_f64(p.lambda),
            fmt_f64(p.sup_norm),
            p.mu1.map(fmt_f64).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the estimate summary table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub name: String,
    pub n: usize,
    pub family: String,
    #[serde(serialize_with = "finite_or_inf")]
    pub lambda_frac: f64,
    #[serde(serialize_with = "finite_or_inf")]
    pub lhs: f64,
    #[serde(serialize_with = "finite_or_inf")]
    pub rhs: f64,
    #[serde(serialize_with = "finite_or_inf")]
    pub ratio: f64,
    pub holds: bool,
}

impl SummaryRow {
    pub fn new(report: &EstimateReport, n: usize, family: &str, lambda_frac: f64) -> Self {
        Self {
            name: report.name.clone(),
            n,
            family: family.to_string(),
            lambda_frac,
            lhs: report.lhs,
            rhs: report.rhs,
            ratio: report.ratio,
            holds: report.holds,
        }
    }
}

/// `name,n,family,lambda_frac,lhs,rhs,ratio,holds`
pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "n", "family", "lambda_frac", "lhs", "rhs", "ratio", "holds"])?;
    for r in rows {
        w.write_record([
            r.name.clone(),
            r.n.to_string(),
            r.family.clone(),
            fmt_f64(r.lambda_frac),
            fmt_f64(r.lhs),
            fmt_f64(r.rhs),
            fmt_f64(r.ratio),
            r.holds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
