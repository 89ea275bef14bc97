//! Monitor series and study tables as CSV.
//!
//! Numbers are written with 17 significant digits, which round-trips every
//! `f64`, so a series read back equals the one written.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::StudyResult;
use crate::monitors::MonitorRecord;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header for a series monitoring the given exponents.
pub fn monitor_header(q_list: &[f64]) -> String {
    let mut cols = vec!["t".to_string(), "dt".into(), "mass".into(), "min_u".into(), "max_u".into()];
    cols.extend(q_list.iter().map(|q| format!("l2q_{q}")));
    cols.extend(["grad_v_max".to_string(), "grad_energy_cum".into(), "elliptic_residual".into()]);
    cols.join(",")
}

/// Renders a series; the exponents are taken from the first record.
pub fn monitor_csv_string(series: &[MonitorRecord<f64>]) -> String {
    let q_list: Vec<f64> = series.first().map(|r| r.lq.iter().map(|&(q, _)| q).collect()).unwrap_or_default();
    let mut s = monitor_header(&q_list);
    s.push('\n');
    for r in series {
        let mut row = vec![num(r.t), num(r.dt), num(r.mass), num(r.min_u), num(r.max_u)];
        row.extend(r.lq.iter().map(|&(_, v)| num(v)));
        row.extend([num(r.grad_v_max), num(r.grad_energy_cum), num(r.elliptic_residual)]);
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

pub fn write_monitor_csv(series: &[MonitorRecord<f64>], path: &Path) -> Result<()> {
    fs::write(path, monitor_csv_string(series))?;
    Ok(())
}

pub fn parse_monitor_csv(text: &str) -> Result<Vec<MonitorRecord<f64>>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| Error::Csv("empty file".into()))?.split(',').collect();
    let n = header.len();
    if n < 8 || header[..5] != ["t", "dt", "mass", "min_u", "max_u"] || header[n - 3..] != ["grad_v_max", "grad_energy_cum", "elliptic_residual"] {
        return Err(Error::Csv(format!("unexpected header `{}`", header.join(","))));
    }
    let q_list = header[5..n - 3]
        .iter()
        .map(|c| {
            c.strip_prefix("l2q_")
                .and_then(|q| q.parse::<f64>().ok())
                .ok_or_else(|| Error::Csv(format!("bad norm column `{c}`")))
        })
        .collect::<Result<Vec<f64>>>()?;
    lines
        .enumerate()
        .map(|(i, line)| {
            let vals = line
                .split(',')
                .map(|v| v.parse::<f64>().map_err(|_| Error::Csv(format!("row {}: bad number `{v}`", i + 2))))
                .collect::<Result<Vec<f64>>>()?;
            if vals.len() != n {
                return Err(Error::Csv(format!("row {}: {} fields, expected {n}", i + 2, vals.len())));
            }
            Ok(MonitorRecord {
                t: vals[0],
                dt: vals[1],
                mass: vals[2],
                min_u: vals[3],
                max_u: vals[4],
                lq: q_list.iter().copied().zip(vals[5..n - 3].iter().copied()).collect(),
                grad_v_max: vals[n - 3],
                grad_energy_cum: vals[n - 2],
                elliptic_residual: vals[n - 1],
            })
        })
        .collect()
}

pub fn read_monitor_csv(path: &Path) -> Result<Vec<MonitorRecord<f64>>> {
    parse_monitor_csv(&fs::read_to_string(path)?)
}

/// Study table: configuration columns, outcome columns, row verdict.
pub fn study_csv_string(result: &StudyResult) -> String {
    let mut s = String::new();
    if let Some(first) = result.rows.first() {
        let mut cols: Vec<&str> = first.config.iter().map(|(k, _)| k.as_str()).collect();
        cols.extend(first.outcomes.iter().map(|(k, _)| k.as_str()));
        cols.push("verdict");
        let _ = writeln!(s, "{}", cols.join(","));
    }
    for row in &result.rows {
        let mut cells: Vec<String> = row.config.iter().map(|(_, v)| v.clone()).collect();
        cells.extend(row.outcomes.iter().map(|&(_, v)| num(v)));
        cells.push(row.verdict.clone());
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

pub fn write_study_csv(result: &StudyResult, path: &Path) -> Result<()> {
    fs::write(path, study_csv_string(result))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<MonitorRecord<f64>> {
        (0..4)
            .map(|k| {
                let t = 0.1 * k as f64;
                MonitorRecord {
                    t,
                    dt: 1.0 / 3.0,
                    mass: std::f64::consts::PI * t,
                    min_u: -1e-300,
                    max_u: 1e10 + t,
                    lq: vec![(1.0, 0.7), (2.5, 0.123_456_789_012_345_68)],
                    grad_v_max: 2.0f64.sqrt(),
                    grad_energy_cum: t * t,
                    elliptic_residual: 1e-17,
                }
            })
            .collect()
    }

    #[test]
    fn header_matches_schema() {
        assert_eq!(
            monitor_header(&[1.0, 2.0, 4.0]),
            "t,dt,mass,min_u,max_u,l2q_1,l2q_2,l2q_4,grad_v_max,grad_energy_cum,elliptic_residual"
        );
        let s = monitor_csv_string(&sample());
        assert!(s.starts_with("t,dt,mass,min_u,max_u,l2q_1,l2q_2.5,grad_v_max,"));
    }

    #[test]
    fn roundtrip_is_exact() {
        let series = sample();
        let text = monitor_csv_string(&series);
        assert_eq!(text.lines().count(), series.len() + 1);
        assert_eq!(parse_monitor_csv(&text).unwrap(), series);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_monitor_csv("").is_err());
        assert!(parse_monitor_csv("a,b,c\n").is_err());
        let mut text = monitor_csv_string(&sample());
        text.push_str("1,2,3\n");
        assert!(parse_monitor_csv(&text).is_err());
    }
}
