//! CSV, sidecar and plot emission.
//!
//! Floats are written in Rust's shortest round-trip form, so parsing a CSV
//! back yields the logged values bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::vpdpo::{GroundTruth, MetricRow};

pub fn csv_text(rows: &[MetricRow]) -> String {
    let mut out = MetricRow::HEADER.join(",");
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}",
            r.t,
            r.f_hat,
            r.g_hat,
            r.f_mixed,
            r.g_mixed,
            r.regret_avg,
            r.violation_avg,
            r.gamma,
            r.alpha_norm,
            r.beta_norm,
            r.v1_plan,
            u8::from(r.coverage)
        );
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<MetricRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Config("empty CSV".into()))?;
    if header.split(',').map(str::trim).ne(MetricRow::HEADER) {
        return Err(Error::Config(format!("unexpected CSV header `{header}`")));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != MetricRow::HEADER.len() {
                return Err(Error::Config(format!("CSV line {}: expected 12 fields", i + 2)));
            }
            let num = |k: usize| -> Result<f64> {
                cells[k].parse().map_err(|_| {
                    Error::Config(format!(
                        "CSV line {}, column {}: `{}`",
                        i + 2,
                        MetricRow::HEADER[k],
                        cells[k]
                    ))
                })
            };
            Ok(MetricRow {
                t: cells[0]
                    .parse()
                    .map_err(|_| Error::Config(format!("CSV line {}: bad round `{}`", i + 2, cells[0])))?,
                f_hat: num(1)?,
                g_hat: num(2)?,
                f_mixed: num(3)?,
                g_mixed: num(4)?,
                regret_avg: num(5)?,
                violation_avg: num(6)?,
                gamma: num(7)?,
                alpha_norm: num(8)?,
                beta_norm: num(9)?,
                v1_plan: num(10)?,
                coverage: cells[11] == "1",
            })
        })
        .collect()
}

pub fn write_csv(path: &Path, rows: &[MetricRow]) -> Result<()> {
    fs::write(path, csv_text(rows))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<MetricRow>> {
    parse_csv(&fs::read_to_string(path)?)
}

/// `Ψ*`, `f(Ψ*)` and the certificate as JSON.
pub fn write_truth(path: &Path, truth: &GroundTruth) -> Result<()> {
    let text = serde_json::to_string_pretty(truth).map_err(|e| Error::Numerical(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Writes `<stem>.dat` (whitespace columns) and `<stem>.gp`, a gnuplot
/// script that renders the regret, violation and objective curves to PNG.
pub fn write_plots(dir: &Path, stem: &str, rows: &[MetricRow]) -> Result<Vec<PathBuf>> {
    let data = dir.join(format!("{stem}.dat"));
    let script = dir.join(format!("{stem}.gp"));
    let mut text = String::from("# t regret violation f_mixed g_mixed f_hat gamma\n");
    for r in rows {
        let t = r.t as f64;
        let _ = writeln!(
            text,
            "{} {:?} {:?} {:?} {:?} {:?} {:?}",
            r.t,
            t * r.regret_avg,
            t * r.violation_avg,
            r.f_mixed,
            r.g_mixed,
            r.f_hat,
            r.gamma
        );
    }
    fs::write(&data, text)?;
    let data_name = format!("{stem}.dat");
    let gp = format!(
        "set terminal pngcairo size 1200,400\n\
         set output '{stem}.png'\n\
         set multiplot layout 1,3\n\
         set xlabel 't'\n\
         set logscale x\n\
         set title 'Regret(t)'\n\
         plot '{data_name}' using 1:2 with lines notitle\n\
         set title 'Violation(t)'\n\
         plot '{data_name}' using 1:3 with lines notitle\n\
         set title 'objective'\n\
         plot '{data_name}' using 1:4 with lines title 'mixed', '' using 1:6 with lines title 'planned'\n\
         unset multiplot\n"
    );
    fs::write(&script, gp)?;
    Ok(vec![data, script])
}
