//! Small shared output helpers for the evaluation subcommands.

use std::fs;
use std::path::Path;

use mvgeo::Result;

/// Writes a single-row CSV: header line plus one data line.
pub fn write_csv(path: &Path, header: &[&str], row: &[String]) -> Result<()> {
    let text = format!("{}\n{}\n", header.join(","), row.join(","));
    fs::write(path, text)?;
    Ok(())
}

/// Formats an aligned two-line table: names above fixed-precision values.
pub fn table(names: &[&str], values: &[f64]) -> String {
    let head: Vec<String> = names.iter().map(|n| format!("{n:<12}")).collect();
    let body: Vec<String> = values.iter().map(|v| format!("{v:<12.6}")).collect();
    format!(
        "{}\n{}",
        head.join(" ").trim_end(),
        body.join(" ").trim_end()
    )
}
