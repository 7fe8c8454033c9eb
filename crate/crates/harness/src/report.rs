//! Report emission: pretty JSON (stdout or file) and RFC 4180 CSV tables.
//! Output is byte-stable for a fixed config and seed: field order follows
//! the struct definitions, floats print in shortest round-trip form, and
//! parallel batteries collect in input order.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::ConfigError;

/// Serialize pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, ConfigError> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| ConfigError(format!("cannot serialize report: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Write the JSON report to the path, or to stdout when no path is given.
pub fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), ConfigError> {
    let bytes = json_bytes(value)?;
    match path {
        Some(p) => std::fs::write(p, &bytes)
            .map_err(|e| ConfigError(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)
                .and_then(|()| out.flush())
                .map_err(|e| ConfigError(format!("cannot write to stdout: {e}")))
        }
    }
}

/// Write CSV rows (RFC 4180: CRLF line endings, comma separated) to a path.
/// Rows serialize through serde so numeric formatting matches the JSON
/// report exactly.
pub fn emit_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<(), ConfigError> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .map_err(|e| ConfigError(format!("cannot open {}: {e}", path.display())))?;
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display())))?;
    }
    writer
        .flush()
        .map_err(|e| ConfigError(format!("cannot flush {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        name: &'static str,
        value: f64,
    }

    #[test]
    fn json_bytes_are_stable() {
        let a = json_bytes(&Row { name: "x", value: 0.1 + 0.2 }).unwrap();
        let b = json_bytes(&Row { name: "x", value: 0.1 + 0.2 }).unwrap();
        assert_eq!(a, b);
        assert!(a.ends_with(b"\n"));
    }

    #[test]
    fn csv_uses_crlf_and_headers() {
        let dir = std::env::temp_dir().join(format!("umbilic-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rows.csv");
        emit_csv(&[Row { name: "a", value: 1.5 }, Row { name: "b", value: -2.0 }], &path)
            .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "name,value\r\na,1.5\r\nb,-2.0\r\n");
        std::fs::remove_dir_all(&dir).ok();
    }
}
