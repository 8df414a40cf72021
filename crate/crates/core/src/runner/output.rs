use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::RunError;
use crate::discretize::{write_field_csv, Field, Grid};

/// A field written as `<name>.csv`.
pub struct NamedField<'a> {
    pub name: &'a str,
    pub grid: &'a Grid,
    pub field: &'a Field,
}

/// Writes each field as CSV and the report as `report.json`. Object keys
/// come out sorted, floats in shortest round-trip form.
pub fn write_outputs(fields: &[NamedField], report: &serde_json::Value, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(fields.len() + 1);
    for f in fields {
        let path = dir.join(format!("{}.csv", f.name));
        write_field_csv(BufWriter::new(File::create(&path)?), f.grid, f.field)?;
        written.push(path);
    }
    let path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(report).map_err(|e| RunError::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(&path, text)?;
    written.push(path);
    Ok(written)
}
