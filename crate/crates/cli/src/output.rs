//! Trace CSV files: writing, reading and summary statistics.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use pvtune_core::{Phase, TraceRecord};

use crate::error::CliError;

pub const TRACE_COLUMNS: [&str; 8] =
    ["run_seed", "iteration", "phase", "loss", "num_unique", "step_norm_rel", "l_subspace", "tau_used"];

/// Seventeen significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Writes one trace file; `runs` must already be in output order.
pub fn write_trace_csv(path: &Path, runs: &[Vec<TraceRecord>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(TRACE_COLUMNS).map_err(|e| io_err(path, e))?;
    for r in runs.iter().flatten() {
        w.write_record([
            r.run_seed.to_string(),
            r.iteration.to_string(),
            r.phase.as_str().to_string(),
            fmt_f64(r.loss),
            r.num_unique.to_string(),
            fmt_f64(r.step_norm_rel),
            r.l_subspace.map(fmt_f64).unwrap_or_default(),
            r.tau_used.map(|t| t.to_string()).unwrap_or_default(),
        ])
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Reads a trace file back, checking the header and every field.
pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRecord>, CliError> {
    let malformed = |line: u64, message: String| CliError::MalformedCsv { path: path.to_path_buf(), line, message };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(|e| io_err(path, e))?;
    let header = rdr.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    if header.iter().ne(TRACE_COLUMNS) {
        return Err(malformed(1, format!("expected header {}", TRACE_COLUMNS.join(","))));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| malformed(line, e.to_string()))?;
        let field = |k: usize| row.get(k).unwrap_or("");
        let num = |k: usize| -> Result<f64, CliError> {
            field(k).parse::<f64>().map_err(|_| malformed(line, format!("{}: not a number", TRACE_COLUMNS[k])))
        };
        let int = |k: usize| -> Result<u64, CliError> {
            field(k).parse::<u64>().map_err(|_| malformed(line, format!("{}: not an integer", TRACE_COLUMNS[k])))
        };
        let phase = Phase::parse(field(2)).ok_or_else(|| malformed(line, "phase: expected init, P or V".into()))?;
        out.push(TraceRecord {
            run_seed: int(0)?,
            iteration: int(1)? as usize,
            phase,
            loss: num(3)?,
            num_unique: int(4)? as usize,
            step_norm_rel: num(5)?,
            l_subspace: if field(6).is_empty() { None } else { Some(num(6)?) },
            tau_used: if field(7).is_empty() { None } else { Some(int(7)? as usize) },
        });
    }
    Ok(out)
}

/// Splits records into runs, keeping file order. A new run starts whenever the
/// seed changes.
pub fn split_runs(records: &[TraceRecord]) -> Vec<&[TraceRecord]> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=records.len() {
        if i == records.len() || records[i].run_seed != records[start].run_seed {
            if i > start {
                runs.push(&records[start..i]);
            }
            start = i;
        }
    }
    runs
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    quantile(&v, 0.5)
}

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub c: usize,
    pub num_runs: usize,
    pub median_final_loss: f64,
    pub q1_final_loss: f64,
    pub q3_final_loss: f64,
    pub median_iterations: f64,
}

impl SummaryRow {
    pub fn from_runs(algorithm: String, c: usize, runs: &[Vec<TraceRecord>]) -> Self {
        let mut finals: Vec<f64> = runs.iter().map(|r| r.last().map_or(f64::NAN, |x| x.loss)).collect();
        finals.sort_by(|a, b| a.total_cmp(b));
        let iters: Vec<f64> = runs.iter().map(|r| r.last().map_or(0.0, |x| x.iteration as f64)).collect();
        Self {
            algorithm,
            c,
            num_runs: runs.len(),
            median_final_loss: quantile(&finals, 0.5),
            q1_final_loss: quantile(&finals, 0.25),
            q3_final_loss: quantile(&finals, 0.75),
            median_iterations: median(&iters),
        }
    }
}

pub const SUMMARY_COLUMNS: [&str; 7] =
    ["algorithm", "c", "num_runs", "median_final_loss", "q1_final_loss", "q3_final_loss", "median_iterations"];

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(SUMMARY_COLUMNS).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record([
            r.algorithm.clone(),
            r.c.to_string(),
            r.num_runs.to_string(),
            fmt_f64(r.median_final_loss),
            fmt_f64(r.q1_final_loss),
            fmt_f64(r.q3_final_loss),
            fmt_f64(r.median_iterations),
        ])
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>, CliError> {
    let malformed = |line: u64, message: String| CliError::MalformedCsv { path: path.to_path_buf(), line, message };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| malformed(line, e.to_string()))?;
        if row.len() != SUMMARY_COLUMNS.len() {
            return Err(malformed(line, format!("expected {} fields", SUMMARY_COLUMNS.len())));
        }
        let num = |k: usize| row[k].parse::<f64>().map_err(|_| malformed(line, format!("{}: not a number", SUMMARY_COLUMNS[k])));
        out.push(SummaryRow {
            algorithm: row[0].to_string(),
            c: row[1].parse().map_err(|_| malformed(line, "c: not an integer".into()))?,
            num_runs: row[2].parse().map_err(|_| malformed(line, "num_runs: not an integer".into()))?,
            median_final_loss: num(3)?,
            q1_final_loss: num(4)?,
            q3_final_loss: num(5)?,
            median_iterations: num(6)?,
        });
    }
    Ok(out)
}

/// Writes rows of already-formatted fields under a header.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<PathBuf, CliError> {
    let mut f = File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))?;
    Ok(path.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(seed: u64, iteration: usize, phase: Phase, loss: f64) -> TraceRecord {
        TraceRecord {
            run_seed: seed,
            iteration,
            phase,
            loss,
            num_unique: 3,
            step_norm_rel: 0.0,
            l_subspace: if phase == Phase::V { Some(0.25) } else { None },
            tau_used: if phase == Phase::V { Some(1) } else { None },
        }
    }

    #[test]
    fn floats_have_seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.0), "0.0000000000000000e0");
        for v in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let runs = vec![
            vec![rec(5, 0, Phase::Init, 2.0), rec(5, 1, Phase::P, 1.0), rec(5, 1, Phase::V, 0.5)],
            vec![rec(9, 0, Phase::Init, 3.0)],
        ];
        write_trace_csv(&path, &runs).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("run_seed,iteration,phase,loss,num_unique,step_norm_rel,l_subspace,tau_used\n"));
        assert!(text.contains(",,\n"), "missing optionals are empty fields");
        let back = read_trace_csv(&path).unwrap();
        assert_eq!(back, runs.concat());
        assert_eq!(split_runs(&back).len(), 2);
    }

    #[test]
    fn malformed_rows_are_located() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, format!("{}\n1,0,init,abc,3,0,,\n", TRACE_COLUMNS.join(","))).unwrap();
        match read_trace_csv(&path) {
            Err(CliError::MalformedCsv { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        std::fs::write(&path, "a,b\n").unwrap();
        assert!(matches!(read_trace_csv(&path), Err(CliError::MalformedCsv { line: 1, .. })));
    }

    #[test]
    fn quartiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    }
}
