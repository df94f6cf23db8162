//! CSV input/output for data views and label vectors.
//!
//! Readers are tolerant: an optional header row is detected by trying to
//! parse the first record as numbers, fields are trimmed, and every
//! parse failure reports its 1-based line number. Writers are strict and
//! deterministic: fixed column order, shortest round-trip float
//! formatting, `\n` line endings — identical inputs yield identical
//! bytes, which the benchmark golden files rely on.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

fn csv_error(line: usize, msg: impl Into<String>) -> Error {
    Error::Csv { line, msg: msg.into() }
}

fn reader_for(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io(std::io::Error::other(format!(
                "cannot open {}: {e}",
                path.display()
            ))),
            _ => csv_error(0, e.to_string()),
        })
}

/// Read a numeric matrix from CSV. A single leading header row is
/// skipped when its fields do not all parse as numbers.
pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let mut reader = reader_for(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut ncols = 0usize;

    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| csv_error(line, e.to_string()))?;
        let fields: Vec<&str> = record.iter().collect();
        if fields.is_empty() || (fields.len() == 1 && fields[0].is_empty()) {
            continue; // blank line
        }
        let parsed: std::result::Result<Vec<f64>, String> = fields
            .iter()
            .enumerate()
            .map(|(col, f)| {
                f.parse::<f64>().map_err(|_| format!("column {} value `{f}` is not a number", col + 1))
            })
            .collect();
        match parsed {
            Ok(values) => {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(csv_error(line, "non-finite value"));
                }
                if rows.is_empty() {
                    ncols = values.len();
                } else if values.len() != ncols {
                    return Err(csv_error(
                        line,
                        format!("expected {ncols} columns, found {}", values.len()),
                    ));
                }
                rows.push(values);
            }
            Err(msg) => {
                if idx == 0 {
                    continue; // header row
                }
                return Err(csv_error(line, msg));
            }
        }
    }

    if rows.is_empty() {
        return Err(csv_error(1, "no data rows"));
    }
    let n = rows.len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((n, ncols), flat)
        .map_err(|e| Error::InvalidInput(format!("matrix shape error: {e}")))
}

/// Write a matrix as CSV with a `f0,f1,...` header.
pub fn write_matrix_csv(path: &Path, matrix: &Array2<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let header: Vec<String> = (0..matrix.ncols()).map(|j| format!("f{j}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for row in matrix.rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Read cluster labels. Accepts one-column files (`label`) or
/// two-column files (`sample,label`, where `sample` is ignored), with an
/// optional header.
pub fn read_labels_csv(path: &Path) -> Result<Vec<usize>> {
    let mut reader = reader_for(path)?;
    let mut labels = Vec::new();

    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| csv_error(line, e.to_string()))?;
        let fields: Vec<&str> = record.iter().collect();
        if fields.is_empty() || (fields.len() == 1 && fields[0].is_empty()) {
            continue;
        }
        if fields.len() > 2 {
            return Err(csv_error(line, format!("expected 1 or 2 columns, found {}", fields.len())));
        }
        let field = *fields.last().expect("non-empty record");
        match field.parse::<usize>() {
            Ok(v) => labels.push(v),
            Err(_) => {
                if idx == 0 {
                    continue; // header row
                }
                return Err(csv_error(line, format!("label `{field}` is not a nonnegative integer")));
            }
        }
    }

    if labels.is_empty() {
        return Err(csv_error(1, "no label rows"));
    }
    Ok(labels)
}

/// Write labels as `sample,label` rows with a header.
pub fn write_labels_csv(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "sample,label")?;
    for (i, label) in labels.iter().enumerate() {
        writeln!(w, "{i},{label}")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use std::fs;

    #[test]
    fn matrix_round_trip_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = array![[1.5, -2.0], [0.25, 1e-7], [3.0, 4.0]];
        write_matrix_csv(&path, &m).unwrap();
        let back = read_matrix_csv(&path).unwrap();
        assert_eq!(back.dim(), (3, 2));
        for (a, b) in m.iter().zip(back.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 0.0);
        }
    }

    #[test]
    fn matrix_without_header_and_blank_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        fs::write(&path, "1.0,2.0\n\n3.0,4.0\n").unwrap();
        let m = read_matrix_csv(&path).unwrap();
        assert_eq!(m.dim(), (2, 2));
        assert_abs_diff_eq!(m[[1, 1]], 4.0, epsilon = 0.0);
    }

    #[test]
    fn matrix_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();

        let ragged = dir.path().join("ragged.csv");
        fs::write(&ragged, "a,b\n1.0,2.0\n3.0\n").unwrap();
        match read_matrix_csv(&ragged).unwrap_err() {
            Error::Csv { line, .. } => assert_eq!(line, 3),
            other => panic!("expected csv error, got {other:?}"),
        }

        let junk = dir.path().join("junk.csv");
        fs::write(&junk, "1.0,2.0\n1.0,oops\n").unwrap();
        match read_matrix_csv(&junk).unwrap_err() {
            Error::Csv { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("oops"));
            }
            other => panic!("expected csv error, got {other:?}"),
        }

        let nan = dir.path().join("nan.csv");
        fs::write(&nan, "1.0,NaN\n").unwrap();
        assert!(matches!(read_matrix_csv(&nan).unwrap_err(), Error::Csv { line: 1, .. }));

        let empty = dir.path().join("empty.csv");
        fs::write(&empty, "").unwrap();
        assert!(read_matrix_csv(&empty).is_err());

        assert!(read_matrix_csv(&dir.path().join("missing.csv")).is_err());
    }

    #[test]
    fn labels_round_trip_and_single_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        write_labels_csv(&path, &[0, 2, 1, 1]).unwrap();
        assert_eq!(read_labels_csv(&path).unwrap(), vec![0, 2, 1, 1]);

        let bare = dir.path().join("bare.csv");
        fs::write(&bare, "2\n0\n1\n").unwrap();
        assert_eq!(read_labels_csv(&bare).unwrap(), vec![2, 0, 1]);

        let bad = dir.path().join("bad.csv");
        fs::write(&bad, "sample,label\n0,1\n1,x\n").unwrap();
        match read_labels_csv(&bad).unwrap_err() {
            Error::Csv { line, .. } => assert_eq!(line, 3),
            other => panic!("expected csv error, got {other:?}"),
        }
    }
}
