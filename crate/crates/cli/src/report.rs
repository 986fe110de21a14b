//! Report emission. Floats are rounded to 12 significant digits; field
//! order is fixed by the report types.

use std::io::Write;

use bpo_core::fw::SolveReport;
use serde::Serialize;
use serde_json::Value;

use crate::args::Format;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` rounded to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Shortest text of the rounded value.
pub fn fmt_num(x: f64) -> String {
    format!("{:?}", round_sig(x))
}

fn round_value(v: &mut Value, omit_timings: bool) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n
                .as_f64()
                .and_then(|x| serde_json::Number::from_f64(round_sig(x)))
            {
                *n = x;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|x| round_value(x, omit_timings)),
        Value::Object(map) => {
            if omit_timings {
                map.remove("iteration_ms");
                map.remove("runtime_ms");
            }
            map.values_mut().for_each(|x| round_value(x, omit_timings));
        }
        _ => {}
    }
}

/// JSON tree of `value` with rounded floats and, optionally, without the
/// timing fields.
pub fn to_json<T: Serialize>(value: &T, omit_timings: bool) -> anyhow::Result<Value> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v, omit_timings);
    Ok(v)
}

pub fn write_json<T: Serialize, W: Write>(
    value: &T,
    omit_timings: bool,
    mut w: W,
) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut w, &to_json(value, omit_timings)?)?;
    writeln!(w)?;
    Ok(())
}

/// One CSV row per performed iteration: the iterate it started from and
/// the step it took.
pub fn write_iterations_csv<W: Write>(
    report: &SolveReport<f64>,
    omit_timings: bool,
    w: W,
) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["iteration", "objective", "gap", "step_size"];
    if !omit_timings {
        header.push("iteration_ms");
    }
    out.write_record(&header)?;
    for t in 0..report.iterations {
        let mut row = vec![
            t.to_string(),
            fmt_num(report.objective_trace[t]),
            fmt_num(report.gap_trace[t]),
            fmt_num(report.step_sizes[t]),
        ];
        if !omit_timings {
            row.push(fmt_num(report.iteration_ms[t]));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn emit_report<W: Write>(
    report: &SolveReport<f64>,
    format: Format,
    omit_timings: bool,
    w: W,
) -> anyhow::Result<()> {
    match format {
        Format::Json => write_json(report, omit_timings, w),
        Format::Csv => write_iterations_csv(report, omit_timings, w),
    }
}

/// A table whose `runtime_ms` column is dropped when timings are omitted.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    timing_column: Option<usize>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            timing_column: header.iter().position(|&h| h == "runtime_ms"),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write<W: Write>(&self, omit_timings: bool, w: W) -> anyhow::Result<()> {
        let skip = if omit_timings {
            self.timing_column
        } else {
            None
        };
        let keep = |row: &[String]| -> Vec<String> {
            row.iter()
                .enumerate()
                .filter(|&(i, _)| Some(i) != skip)
                .map(|(_, x)| x.clone())
                .collect()
        };
        let mut out = csv::Writer::from_writer(w);
        out.write_record(keep(&self.header))?;
        for row in &self.rows {
            out.write_record(keep(row))?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bpo_core::fw::Termination;

    fn report(iterations: usize) -> SolveReport<f64> {
        SolveReport {
            solver: "fw".into(),
            participation: vec![0.1234567890123456, 1.0],
            objective: 2.0 / 3.0,
            spend: 1.0,
            objective_trace: (0..=iterations).map(|t| t as f64 / 7.0).collect(),
            gap_trace: (0..=iterations).map(|t| 1.0 / (t as f64 + 3.0)).collect(),
            step_sizes: vec![0.5; iterations],
            iteration_ms: vec![1.25; iterations],
            termination: Termination::MaxIters,
            iterations,
            budget_excess: 0.0,
            box_excess: 0.0,
        }
    }

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(0.1234567890123456), 0.123456789012);
        assert_eq!(round_sig(-98765.43210987654), -98765.4321099);
        assert_eq!(round_sig(0.0), 0.0);
        assert_eq!(fmt_num(1e-20), "1e-20");
    }

    #[test]
    fn json_round_trips_to_the_rounded_report() {
        let r = report(3);
        let mut buf = Vec::new();
        emit_report(&r, Format::Json, false, &mut buf).unwrap();
        let back: SolveReport<f64> = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back.participation[0], 0.123456789012);
        assert_eq!(back.objective, round_sig(2.0 / 3.0));
        assert_eq!(back.iterations, 3);
        let mut again = Vec::new();
        emit_report(&back, Format::Json, false, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn empty_traces_are_valid_json() {
        let mut r = report(0);
        r.gap_trace.clear();
        let mut buf = Vec::new();
        emit_report(&r, Format::Json, true, &mut buf).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["gap_trace"], Value::Array(vec![]));
        assert!(v.get("iteration_ms").is_none());
        // timings are optional on input
        let back: SolveReport<f64> = serde_json::from_slice(&buf).unwrap();
        assert!(back.iteration_ms.is_empty());
    }

    #[test]
    fn csv_has_one_row_per_iteration() {
        for iterations in [0, 1, 5] {
            let mut buf = Vec::new();
            emit_report(&report(iterations), Format::Csv, false, &mut buf).unwrap();
            let text = String::from_utf8(buf).unwrap();
            assert_eq!(text.lines().count(), iterations + 1);
            assert!(text.starts_with("iteration,objective,gap,step_size,iteration_ms\n"));
        }
    }

    #[test]
    fn table_drops_the_timing_column() {
        let mut t = Table::new(&["solver", "runtime_ms", "objective"]);
        t.push(vec!["fw".into(), "3.5".into(), "1.0".into()]);
        let mut buf = Vec::new();
        t.write(true, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "solver,objective\nfw,1.0\n"
        );
    }
}
