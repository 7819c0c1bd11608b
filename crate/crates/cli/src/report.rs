//! CSV output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::sweep::ResultRow;
use crate::CliError;

pub const HEADER: [&str; 13] = [
    "problem",
    "dx",
    "dt",
    "T",
    "Nt",
    "mode",
    "newton",
    "avg_gmres",
    "effective_steps",
    "newton_ratio",
    "gmres_ratio",
    "status",
    "wall_s",
];

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Formats with six significant digits, switching to exponent notation
/// outside `[1e-5, 1e6)`.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    // Round first so that e.g. 999999.7 picks the exponent of 1e6.
    let rounded: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    let e = rounded.abs().log10().floor() as i32;
    if (-5..6).contains(&e) {
        let decimals = (5 - e).max(0) as usize;
        trim_zeros(&format!("{rounded:.decimals$}")).to_string()
    } else {
        let s = format!("{rounded:.5e}");
        let (m, exp) = s.split_once('e').expect("exponent form");
        format!("{}e{exp}", trim_zeros(m))
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_sig).unwrap_or_default()
}

fn record(r: &ResultRow) -> [String; 13] {
    [
        r.problem.to_string(),
        format_sig(r.dx),
        format_sig(r.dt),
        format_sig(r.t_final),
        r.nt.to_string(),
        r.mode.to_string(),
        opt(r.newton),
        opt(r.avg_gmres),
        r.effective_steps.map(|n| n.to_string()).unwrap_or_default(),
        opt(r.newton_ratio),
        opt(r.gmres_ratio),
        r.status.to_string(),
        opt(r.wall_s),
    ]
}

/// Writes the header and one line per row, LF-terminated.
pub fn emit_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record(record(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<(), CliError> {
    let file = BufWriter::new(File::create(path)?);
    emit_csv(rows, file)
}
