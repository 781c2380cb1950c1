use std::fs;
use std::path::Path;

use crate::{CliError, Format};

/// Writes one delimited file with a header row. Empty strings stand for missing values.
pub fn write(dir: &Path, name: &str, format: Format, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    let file = match format {
        Format::Csv => format!("{name}.csv"),
        Format::Tsv => format!("{name}.tsv"),
    };
    let path = dir.join(file);
    let delimiter = if format == Format::Tsv { b'\t' } else { b',' };
    let io = |e: csv::Error| CliError::Input(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_path(&path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

pub fn real(x: f64) -> String {
    format!("{x:?}")
}

pub fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

pub fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
