//! CSV and JSON score-matrix files.
//!
//! CSV: header `method,<example ids...>`, then one row per method with its
//! name first. JSON: `{"methods": [...], "examples": [...], "scores": [[...]]}`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BackendKind, ScoreMatrix, ScoreOracle};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Csv,
    Json,
}

impl MatrixFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
            Some(ext) if ext == "csv" => Ok(Self::Csv),
            Some(ext) if ext == "json" => Ok(Self::Json),
            _ => Err(Error::Input(format!(
                "cannot infer matrix format from {}; use .csv or .json",
                path.display()
            ))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonMatrix {
    methods: Vec<String>,
    examples: Vec<String>,
    scores: Vec<Vec<f64>>,
}

/// Loads a complete score file; `format` defaults to the file extension.
pub fn load_matrix(path: impl AsRef<Path>, format: Option<MatrixFormat>) -> Result<ScoreOracle> {
    let path = path.as_ref();
    let format = match format {
        Some(f) => f,
        None => MatrixFormat::from_path(path)?,
    };
    let matrix = match format {
        MatrixFormat::Csv => read_csv(path)?,
        MatrixFormat::Json => read_json(path)?,
    };
    Ok(ScoreOracle::dense(BackendKind::File, matrix))
}

pub fn save_matrix(matrix: &ScoreMatrix, path: impl AsRef<Path>, format: MatrixFormat) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        MatrixFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            let header = std::iter::once("method".to_string()).chain(matrix.examples.iter().cloned());
            w.write_record(header).map_err(|e| csv_io(path, e))?;
            for (i, name) in matrix.methods.iter().enumerate() {
                let row = &matrix.scores[i * matrix.cols()..(i + 1) * matrix.cols()];
                let record = std::iter::once(name.clone()).chain(row.iter().map(|v| v.to_string()));
                w.write_record(record).map_err(|e| csv_io(path, e))?;
            }
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        MatrixFormat::Json => {
            let doc = JsonMatrix {
                methods: matrix.methods.clone(),
                examples: matrix.examples.clone(),
                scores: matrix.scores.chunks(matrix.cols()).map(<[f64]>::to_vec).collect(),
            };
            serde_json::to_writer(&mut out, &doc).map_err(|e| Error::Json {
                path: path.to_path_buf(),
                source: e,
            })?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

fn read_csv(path: &Path) -> Result<ScoreMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));

    let mut records = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            row: row + 1,
            column: 0,
            message: e.to_string(),
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push(rec);
    }
    let Some(first) = records.first() else {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row: 1,
            column: 1,
            message: "file is empty".into(),
        });
    };

    let numeric = |s: &str| s.parse::<f64>().is_ok();
    let has_header = first.iter().any(|c| !numeric(c));
    let data_start = usize::from(has_header);
    let has_names = records
        .get(data_start)
        .map(|r| r.get(0).is_some_and(|c| !numeric(c)))
        .unwrap_or(has_header);
    let skip = usize::from(has_names);

    let width = first.len();
    let cols = width - skip;
    let examples: Vec<String> = if has_header {
        first.iter().skip(skip).map(str::to_string).collect()
    } else {
        (0..cols).map(|j| format!("x{j}")).collect()
    };

    let mut methods = Vec::new();
    let mut scores = Vec::new();
    for (offset, rec) in records.iter().enumerate().skip(data_start) {
        let row = offset + 1;
        if rec.len() != width {
            return Err(Error::Ragged {
                path: path.to_path_buf(),
                row,
                found: rec.len(),
                expected: width,
            });
        }
        let name = if has_names {
            rec[0].to_string()
        } else {
            format!("m{}", methods.len())
        };
        for (c, cell) in rec.iter().enumerate().skip(skip) {
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row,
                column: c + 1,
                message: format!("{cell:?} is not a number"),
            })?;
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::CellRange {
                    path: path.to_path_buf(),
                    method: name,
                    example: examples[c - skip].clone(),
                    value,
                });
            }
            scores.push(value);
        }
        methods.push(name);
    }
    if methods.is_empty() || cols == 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row: 1,
            column: 1,
            message: "no score rows".into(),
        });
    }
    ScoreMatrix::with_names(methods, examples, scores)
}

fn read_json(path: &Path) -> Result<ScoreMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let doc: JsonMatrix =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            row: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    let cols = doc.examples.len();
    if doc.scores.len() != doc.methods.len() {
        return Err(Error::Ragged {
            path: path.to_path_buf(),
            row: doc.scores.len(),
            found: doc.scores.len(),
            expected: doc.methods.len(),
        });
    }
    let mut scores = Vec::with_capacity(doc.methods.len() * cols);
    for (i, row) in doc.scores.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::Ragged {
                path: path.to_path_buf(),
                row: i + 1,
                found: row.len(),
                expected: cols,
            });
        }
        for (j, &value) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::CellRange {
                    path: path.to_path_buf(),
                    method: doc.methods[i].clone(),
                    example: doc.examples[j].clone(),
                    value,
                });
            }
        }
        scores.extend_from_slice(row);
    }
    ScoreMatrix::with_names(doc.methods, doc.examples, scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn csv_with_header_and_names() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "toy.csv", "method,q1,q2\nA,1,0\nB,0,1\n");
        let o = load_matrix(&p, None).unwrap();
        assert_eq!((o.methods(), o.examples()), (2, 2));
        assert_eq!(o.method_names(), ["A", "B"]);
        assert_eq!(o.example_ids(), ["q1", "q2"]);
        assert_eq!(o.kind(), BackendKind::File);
        assert_eq!(o.query(1, 1).unwrap(), 1.0);
    }

    #[test]
    fn csv_bare_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "bare.csv", "0.5,0.25\n1,0\n");
        let o = load_matrix(&p, None).unwrap();
        assert_eq!(o.method_names(), ["m0", "m1"]);
        assert_eq!(o.query(0, 1).unwrap(), 0.25);
    }

    #[test]
    fn csv_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "range.csv", "method,q1,q2\nA,1,1.5\n");
        match load_matrix(&p, None).unwrap_err() {
            Error::CellRange { method, example, value, .. } => {
                assert_eq!((method.as_str(), example.as_str(), value), ("A", "q2", 1.5));
            }
            e => panic!("unexpected {e}"),
        }
        let p = write(&dir, "ragged.csv", "method,q1,q2\nA,1,0\nB,0\n");
        assert!(matches!(
            load_matrix(&p, None).unwrap_err(),
            Error::Ragged { row: 3, found: 2, expected: 3, .. }
        ));
        let p = write(&dir, "bad.csv", "method,q1,q2\nA,1,zz\n");
        assert!(matches!(
            load_matrix(&p, None).unwrap_err(),
            Error::Parse { row: 2, column: 3, .. }
        ));
    }

    #[test]
    fn json_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "m.json",
            r#"{"methods":["A"],"examples":["a","b"],"scores":[[0.1,2.0]]}"#,
        );
        assert!(matches!(load_matrix(&p, None).unwrap_err(), Error::CellRange { .. }));
        let p = write(
            &dir,
            "r.json",
            r#"{"methods":["A","B"],"examples":["a","b"],"scores":[[0.1,0.2],[0.3]]}"#,
        );
        assert!(matches!(load_matrix(&p, None).unwrap_err(), Error::Ragged { .. }));
    }
}
