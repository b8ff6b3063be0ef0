//! Trace CSV files.
//!
//! Leading `# key=value` lines carry the algorithm, step parameter and
//! whether iterate columns are present. The header is
//! `t,f_x,f_xbar,g_xbar_1..g_xbar_m,q_norm,drift[,x_1..x_n]`. Floats use 17
//! significant digits, so parsing reproduces every value exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use queuegrad::solvers::{AlgorithmId, SolverTrace, TraceRecord};
use queuegrad::ConvexProgram;

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub t: usize,
    pub f_x: f64,
    pub f_xbar: f64,
    pub g_xbar: Vec<f64>,
    pub q_norm: f64,
    pub drift: f64,
    pub x: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTrace {
    pub algorithm: AlgorithmId,
    pub step: f64,
    pub rows: Vec<CsvRow>,
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn header(m: usize, n: Option<usize>) -> Vec<String> {
    let mut h = vec!["t".to_string(), "f_x".into(), "f_xbar".into()];
    h.extend((1..=m).map(|k| format!("g_xbar_{k}")));
    h.push("q_norm".into());
    h.push("drift".into());
    if let Some(n) = n {
        h.extend((1..=n).map(|i| format!("x_{i}")));
    }
    h
}

pub fn write_trace<W: Write>(mut out: W, trace: &SolverTrace, x_columns: bool) -> Result<()> {
    writeln!(out, "# algorithm={}", trace.algorithm)?;
    writeln!(out, "# step={}", fmt_f64(trace.step))?;
    writeln!(out, "# x_columns={x_columns}")?;
    let first = &trace.records[0];
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header(first.g_avg.len(), x_columns.then_some(first.x.len())))?;
    let mut row = Vec::new();
    for r in &trace.records {
        row.clear();
        row.push(r.t.to_string());
        row.push(fmt_f64(r.f_x));
        row.push(fmt_f64(r.f_avg));
        row.extend(r.g_avg.iter().map(|v| fmt_f64(*v)));
        row.push(fmt_f64(r.queue_norm));
        row.push(fmt_f64(r.drift));
        if x_columns {
            row.extend(r.x.iter().map(|v| fmt_f64(*v)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, trace: &SolverTrace, x_columns: bool) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_trace(std::io::BufWriter::new(file), trace, x_columns)
}

pub fn parse_trace(text: &str) -> Result<CsvTrace> {
    let mut algorithm = None;
    let mut step = None;
    let mut x_columns = None;
    let mut body_start = 0;
    for line in text.lines() {
        let Some(meta) = line.strip_prefix('#') else { break };
        body_start += line.len() + 1;
        let Some((key, value)) = meta.trim().split_once('=') else {
            bail!("malformed metadata line '{line}'");
        };
        match key {
            "algorithm" => algorithm = Some(value.parse::<AlgorithmId>()?),
            "step" => step = Some(value.parse::<f64>().context("step")?),
            "x_columns" => x_columns = Some(value.parse::<bool>().context("x_columns")?),
            _ => {}
        }
    }
    let algorithm = algorithm.context("trace is missing the '# algorithm=' line")?;
    let step = step.context("trace is missing the '# step=' line")?;
    let x_columns = x_columns.unwrap_or(false);

    let mut reader = csv::ReaderBuilder::new().from_reader(&text.as_bytes()[body_start.min(text.len())..]);
    let head: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let m = head.iter().filter(|h| h.starts_with("g_xbar_")).count();
    let n = head.iter().filter(|h| h.starts_with("x_")).count();
    ensure!(
        head == header(m, x_columns.then_some(n)),
        "unexpected header: {}",
        head.join(",")
    );
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .context("short row")?
                .parse::<f64>()
                .with_context(|| format!("data row {}, column {}", line + 1, head[i]))
        };
        let t = rec.get(0).context("empty row")?.parse::<usize>().context("t")?;
        let g_xbar = (0..m).map(|k| num(3 + k)).collect::<Result<Vec<_>>>()?;
        let x = if x_columns {
            Some((0..n).map(|i| num(5 + m + i)).collect::<Result<Vec<_>>>()?)
        } else {
            None
        };
        rows.push(CsvRow {
            t,
            f_x: num(1)?,
            f_xbar: num(2)?,
            g_xbar,
            q_norm: num(3 + m)?,
            drift: num(4 + m)?,
            x,
        });
    }
    ensure!(!rows.is_empty(), "trace has no data rows");
    Ok(CsvTrace { algorithm, step, rows })
}

pub fn read_trace_file(path: &Path) -> Result<CsvTrace> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_trace(&text).with_context(|| format!("parsing {}", path.display()))
}

impl CsvTrace {
    /// Rebuilds a full trace for checking.
    ///
    /// Queue vectors and running averages are replayed from the iterate
    /// columns; the scalar columns are kept as written so that corrupted
    /// values surface in the consistency and nonnegativity checks.
    pub fn to_solver_trace(&self, program: &ConvexProgram) -> Result<SolverTrace> {
        let m = program.num_constraints();
        let n = program.dim();
        let mut queue: Vec<f64> = Vec::new();
        let mut sum = vec![0.0; n];
        let mut records = Vec::with_capacity(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            let x = row
                .x
                .clone()
                .context("verification needs the x_1..x_n columns; re-run solve without --no-x-columns")?;
            ensure!(
                x.len() == n,
                "trace has {} iterate columns, problem has {n} variables",
                x.len()
            );
            ensure!(
                row.g_xbar.len() == m,
                "trace has {} constraint columns, problem has {m}",
                row.g_xbar.len()
            );
            let g = program.constraint_values(&x)?;
            if i == 0 {
                queue = g.iter().map(|v| (-v).max(0.0)).collect();
            } else {
                for (q, v) in queue.iter_mut().zip(&g) {
                    *q = (-v).max(*q + v);
                }
                for (s, v) in sum.iter_mut().zip(&x) {
                    *s += v;
                }
            }
            let x_avg = if i == 0 {
                x.clone()
            } else {
                sum.iter().map(|s| s / i as f64).collect()
            };
            records.push(TraceRecord {
                t: row.t,
                x,
                x_avg,
                queue: queue.clone(),
                queue_norm: row.q_norm,
                f_x: row.f_x,
                f_avg: row.f_xbar,
                g_avg: row.g_xbar.clone(),
                drift: row.drift,
            });
        }
        Ok(SolverTrace {
            algorithm: self.algorithm,
            step: self.step,
            records,
            elapsed: std::time::Duration::ZERO,
            aborted: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use queuegrad::instances::{build_qp, example_qp_instance};
    use queuegrad::solvers::{run, RunConfig};

    fn sample() -> SolverTrace {
        let (p, k) = build_qp(&example_qp_instance()).unwrap();
        let k = k.with_lambda_bound(50.0);
        run(AlgorithmId::New, &p, &k, &RunConfig::new(40, vec![0.0, 0.0])).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let trace = sample();
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\nt,f_x,f_xbar,g_xbar_1,g_xbar_2,g_xbar_3,q_norm,drift,x_1,x_2\n"));
        let parsed = parse_trace(&text).unwrap();
        assert_eq!(parsed.algorithm, trace.algorithm);
        assert_eq!(parsed.step, trace.step);
        for (row, rec) in parsed.rows.iter().zip(&trace.records) {
            assert_eq!(row.t, rec.t);
            assert_eq!(row.f_x, rec.f_x);
            assert_eq!(row.f_xbar, rec.f_avg);
            assert_eq!(row.g_xbar, rec.g_avg);
            assert_eq!(row.q_norm, rec.queue_norm);
            assert_eq!(row.drift, rec.drift);
            assert_eq!(row.x.as_ref().unwrap(), &rec.x);
        }
    }

    #[test]
    fn replay_rebuilds_queues_and_averages() {
        let trace = sample();
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace, true).unwrap();
        let parsed = parse_trace(std::str::from_utf8(&buf).unwrap()).unwrap();
        let (p, _) = build_qp(&example_qp_instance()).unwrap();
        let rebuilt = parsed.to_solver_trace(&p).unwrap();
        assert_eq!(rebuilt.records, trace.records);
    }

    #[test]
    fn missing_iterates_are_reported() {
        let trace = sample();
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace, false).unwrap();
        let parsed = parse_trace(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert!(parsed.rows[0].x.is_none());
        let (p, _) = build_qp(&example_qp_instance()).unwrap();
        assert!(parsed.to_solver_trace(&p).is_err());
    }
}
