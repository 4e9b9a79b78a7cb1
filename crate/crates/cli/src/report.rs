//! CSV and JSON output.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::runner::{Errors, Report};

pub const CSV_HEADER: &str = "r,k,l2,l2_eoc,h1,h1_eoc,h2,h2_eoc,linf,linf_eoc,dlinf,dlinf_eoc,nodal_val,nodal_val_eoc,nodal_deriv,nodal_deriv_eoc,iters_max,wall_ms";

/// 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.filter(|v| v.is_finite())
        .map(fmt_float)
        .unwrap_or_default()
}

/// Report table; `wall_ms` stays empty unless `timings` is set, so that
/// repeated runs give identical bytes.
pub fn csv_string(report: &Report, timings: bool) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for cell in &report.cells {
        let _ = write!(out, "{},{}", cell.r, fmt_float(cell.k));
        for j in 0..Errors::COLUMNS.len() {
            let value = cell.errors.map(|e| e.values()[j]);
            let _ = write!(out, ",{},{}", opt(value), opt(cell.eoc[j]));
        }
        let iters = if cell.failure.is_some() {
            String::new()
        } else {
            cell.iters_max.to_string()
        };
        let wall = if timings {
            fmt_float(cell.wall_ms)
        } else {
            String::new()
        };
        let _ = writeln!(out, ",{iters},{wall}");
    }
    out
}

/// Energy table with columns `r, k, t, H, E` over all cells.
pub fn energy_csv_string(report: &Report) -> String {
    let mut out = String::from("r,k,t,H,E\n");
    for cell in &report.cells {
        if let Some(series) = &cell.energy {
            for ((t, h), e) in series
                .times
                .iter()
                .zip(&series.energies)
                .zip(&series.errors)
            {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    cell.r,
                    fmt_float(cell.k),
                    fmt_float(*t),
                    fmt_float(*h),
                    fmt_float(*e)
                );
            }
        }
    }
    out
}

pub fn json_string(report: &Report) -> serde_json::Result<String> {
    serde_json::to_string_pretty(report)
}

/// Writes `report.csv`, `report.json` and, for energy traces, `energy.csv`.
pub fn write_outputs(report: &Report, dir: &Path, timings: bool) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.csv"), csv_string(report, timings))?;
    fs::write(
        dir.join("report.json"),
        json_string(report).map_err(io::Error::other)?,
    )?;
    if report.mode == crate::config::Mode::EnergyTrace {
        fs::write(dir.join("energy.csv"), energy_csv_string(report))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(-2.5), "-2.5000000000000000e0");
        for x in [1.0 / 3.0, 2.0f64.sqrt() * 1e-13, 6.02e-6] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn header_has_eighteen_columns() {
        assert_eq!(CSV_HEADER.split(',').count(), 18);
    }
}
