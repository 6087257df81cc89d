//! Matrix Market ingestion and CSV output.
//!
//! Supported Matrix Market headers are `matrix {coordinate|array}
//! {real|integer|pattern} {general|symmetric}` (`array pattern` excluded).
//! Everything else is rejected with [`Error::UnsupportedHeader`]. Sparse files
//! are densified up to [`DENSE_CAPACITY`] entries.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::solver::SolveTrace;

/// Largest `rows * cols` that will be densified.
pub const DENSE_CAPACITY: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmFormat {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmField {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmSymmetry {
    General,
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixMarketHeader {
    pub format: MmFormat,
    pub field: MmField,
    pub symmetry: MmSymmetry,
}

impl MatrixMarketHeader {
    pub fn parse(line: &str) -> Result<Self> {
        let tokens: Vec<String> = line.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
        let bad = |msg: String| Error::Parse { line: 1, msg };
        match tokens.first().map(String::as_str) {
            Some("%%matrixmarket") => {}
            _ => return Err(bad("first line must start with %%MatrixMarket".into())),
        }
        if tokens.len() != 5 {
            return Err(bad(format!("banner has {} fields, expected 5", tokens.len())));
        }
        if tokens[1] != "matrix" {
            return Err(Error::UnsupportedHeader(format!("object {:?}", tokens[1])));
        }
        let format = match tokens[2].as_str() {
            "coordinate" => MmFormat::Coordinate,
            "array" => MmFormat::Array,
            other => return Err(Error::UnsupportedHeader(format!("format {other:?}"))),
        };
        let field = match tokens[3].as_str() {
            "real" | "double" => MmField::Real,
            "integer" => MmField::Integer,
            "pattern" => MmField::Pattern,
            other => return Err(Error::UnsupportedHeader(format!("field {other:?}"))),
        };
        let symmetry = match tokens[4].as_str() {
            "general" => MmSymmetry::General,
            "symmetric" => MmSymmetry::Symmetric,
            other => return Err(Error::UnsupportedHeader(format!("symmetry {other:?}"))),
        };
        if format == MmFormat::Array && field == MmField::Pattern {
            return Err(Error::UnsupportedHeader("array format with pattern field".into()));
        }
        Ok(MatrixMarketHeader {
            format,
            field,
            symmetry,
        })
    }
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(BufReader::new(file), DENSE_CAPACITY)
}

/// Reads a Matrix Market stream into a dense matrix, refusing anything with
/// more than `cap` entries.
pub fn parse_matrix_market<R: BufRead>(reader: R, cap: usize) -> Result<DenseMatrix> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, banner) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let banner = banner.map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?;
    let header = MatrixMarketHeader::parse(&banner)?;

    // data lines: skip comments and blank lines
    let mut data = lines.filter_map(|(no, l)| match l {
        Ok(s) => {
            let t = s.trim();
            if t.is_empty() || t.starts_with('%') {
                None
            } else {
                Some(Ok((no, t.to_string())))
            }
        }
        Err(e) => Some(Err(Error::Parse { line: no, msg: e.to_string() })),
    });

    let (size_no, size_line) = data.next().transpose()?.ok_or(Error::Parse {
        line: 1,
        msg: "missing size line".into(),
    })?;
    let sizes = parse_usizes(&size_line, size_no)?;
    let want = if header.format == MmFormat::Coordinate { 3 } else { 2 };
    if sizes.len() != want {
        return Err(Error::Parse {
            line: size_no,
            msg: format!("size line has {} fields, expected {want}", sizes.len()),
        });
    }
    let (rows, cols) = (sizes[0], sizes[1]);
    if rows.checked_mul(cols).is_none_or(|e| e > cap) {
        return Err(Error::Capacity { rows, cols, cap });
    }
    if header.symmetry == MmSymmetry::Symmetric && rows != cols {
        return Err(Error::Parse {
            line: size_no,
            msg: format!("symmetric matrix must be square, got {rows}x{cols}"),
        });
    }
    let mut out = DenseMatrix::zeros(rows, cols);
    let mut last_line = size_no;

    match header.format {
        MmFormat::Coordinate => {
            let nnz = sizes[2];
            let mut count = 0;
            for item in data {
                let (no, line) = item?;
                last_line = no;
                let mut tok = line.split_whitespace();
                let i = parse_index(tok.next(), rows, no, "row")?;
                let j = parse_index(tok.next(), cols, no, "column")?;
                let v = match header.field {
                    MmField::Pattern => 1.0,
                    _ => parse_value(tok.next(), no)?,
                };
                if tok.next().is_some() {
                    return Err(Error::Parse { line: no, msg: "trailing fields".into() });
                }
                out.set(i, j, out.get(i, j) + v);
                if header.symmetry == MmSymmetry::Symmetric && i != j {
                    out.set(j, i, out.get(j, i) + v);
                }
                count += 1;
            }
            if count != nnz {
                return Err(Error::Parse {
                    line: last_line,
                    msg: format!("expected {nnz} entries, found {count}"),
                });
            }
        }
        MmFormat::Array => {
            // column-major; symmetric stores the lower triangle only
            let positions: Vec<(usize, usize)> = match header.symmetry {
                MmSymmetry::General => (0..cols).flat_map(|j| (0..rows).map(move |i| (i, j))).collect(),
                MmSymmetry::Symmetric => (0..cols).flat_map(|j| (j..rows).map(move |i| (i, j))).collect(),
            };
            let mut next = positions.iter();
            for item in data {
                let (no, line) = item?;
                last_line = no;
                for token in line.split_whitespace() {
                    let &(i, j) = next.next().ok_or(Error::Parse {
                        line: no,
                        msg: "more values than the size line allows".into(),
                    })?;
                    let v = parse_value(Some(token), no)?;
                    out.set(i, j, v);
                    if header.symmetry == MmSymmetry::Symmetric {
                        out.set(j, i, v);
                    }
                }
            }
            if next.next().is_some() {
                return Err(Error::Parse {
                    line: last_line,
                    msg: format!("expected {} values", positions.len()),
                });
            }
        }
    }
    Ok(out)
}

fn parse_usizes(line: &str, no: usize) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<usize>().map_err(|_| Error::Parse {
                line: no,
                msg: format!("invalid size {t:?}"),
            })
        })
        .collect()
}

fn parse_index(tok: Option<&str>, bound: usize, no: usize, what: &str) -> Result<usize> {
    let t = tok.ok_or(Error::Parse {
        line: no,
        msg: format!("missing {what} index"),
    })?;
    let v: usize = t.parse().map_err(|_| Error::Parse {
        line: no,
        msg: format!("invalid {what} index {t:?}"),
    })?;
    if v == 0 || v > bound {
        return Err(Error::Parse {
            line: no,
            msg: format!("{what} index {v} out of range 1..={bound}"),
        });
    }
    Ok(v - 1)
}

fn parse_value(tok: Option<&str>, no: usize) -> Result<f64> {
    let t = tok.ok_or(Error::Parse {
        line: no,
        msg: "missing value".into(),
    })?;
    let v: f64 = t.parse().map_err(|_| Error::Parse {
        line: no,
        msg: format!("invalid value {t:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line: no,
            msg: format!("non-finite value {t:?}"),
        });
    }
    Ok(v)
}

/// Writes the nonzeros of `a` as `coordinate real general`.
pub fn write_matrix_market(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    let wrap = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(wrap)?);
    let nnz = a.as_slice().iter().filter(|&&v| v != 0.0).count();
    writeln!(w, "%%MatrixMarket matrix coordinate real general").map_err(wrap)?;
    writeln!(w, "{} {} {}", a.rows(), a.cols(), nnz).map_err(wrap)?;
    for i in 0..a.rows() {
        for (j, &v) in a.row(i).iter().enumerate() {
            if v != 0.0 {
                writeln!(w, "{} {} {:e}", i + 1, j + 1, v).map_err(wrap)?;
            }
        }
    }
    w.flush().map_err(wrap)
}

/// Writes a vector as a one-column `array real general` file.
pub fn write_vector_mm(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let wrap = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(wrap)?);
    writeln!(w, "%%MatrixMarket matrix array real general").map_err(wrap)?;
    writeln!(w, "{} 1", v.len()).map_err(wrap)?;
    for x in v {
        writeln!(w, "{x:e}").map_err(wrap)?;
    }
    w.flush().map_err(wrap)
}

/// Reads a single-column (or single-row) Matrix Market file as a vector.
pub fn read_vector_mm(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let m = read_matrix_market(path)?;
    if m.cols() != 1 && m.rows() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "expected a vector, got a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    Ok(m.as_slice().to_vec())
}

/// 17 significant digits.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_opt(s: &str) -> std::result::Result<Option<f64>, std::num::ParseFloatError> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRecord {
    pub k: usize,
    pub error_norm: Option<f64>,
    pub residual_norm: Option<f64>,
}

pub const HISTORY_HEADER: [&str; 3] = ["k", "error_norm", "residual_norm"];
pub const RESULTS_HEADER: [&str; 10] = [
    "matrix", "m", "n", "method", "alpha", "ell", "tau", "iter_mean", "cpu_mean", "speedup",
];

/// Merges the error and residual histories of a trace by iteration index.
pub fn history_records(trace: &SolveTrace) -> Vec<HistoryRecord> {
    let mut out: Vec<HistoryRecord> = Vec::new();
    let mut errs = trace.error_history.iter().peekable();
    let mut ress = trace.residual_history.iter().peekable();
    loop {
        let k = match (errs.peek(), ress.peek()) {
            (None, None) => break,
            (Some(e), None) => e.0,
            (None, Some(r)) => r.0,
            (Some(e), Some(r)) => e.0.min(r.0),
        };
        let error_norm = errs.next_if(|e| e.0 == k).map(|e| e.1);
        let residual_norm = ress.next_if(|r| r.0 == k).map(|r| r.1);
        out.push(HistoryRecord {
            k,
            error_norm,
            residual_norm,
        });
    }
    out
}

pub fn write_history_csv(trace: &SolveTrace, path: impl AsRef<Path>) -> Result<()> {
    write_history_records(&history_records(trace), path)
}

pub fn write_history_records(records: &[HistoryRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    let csv_err = |e: csv::Error| csv_to_error(path, e);
    w.write_record(HISTORY_HEADER).map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for r in records {
        w.write_record([r.k.to_string(), opt(r.error_norm), opt(r.residual_norm)])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_history_csv(path: impl AsRef<Path>) -> Result<Vec<HistoryRecord>> {
    let path = path.as_ref();
    let mut rdr = csv_reader(path, &HISTORY_HEADER)?;
    let mut out = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| csv_to_error(path, e))?;
        let bad = |msg: String| Error::Parse { line, msg };
        if rec.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", rec.len())));
        }
        out.push(HistoryRecord {
            k: rec[0].parse().map_err(|_| bad(format!("invalid k {:?}", &rec[0])))?,
            error_norm: parse_opt(&rec[1]).map_err(|e| bad(e.to_string()))?,
            residual_norm: parse_opt(&rec[2]).map_err(|e| bad(e.to_string()))?,
        });
    }
    Ok(out)
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub matrix: String,
    pub m: usize,
    pub n: usize,
    pub method: String,
    pub alpha: f64,
    pub ell: usize,
    pub tau: usize,
    pub iter_mean: f64,
    pub cpu_mean: f64,
    pub speedup: f64,
}

pub fn write_results_csv(rows: &[ResultRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    let csv_err = |e: csv::Error| csv_to_error(path, e);
    w.write_record(RESULTS_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.matrix.clone(),
            r.m.to_string(),
            r.n.to_string(),
            r.method.clone(),
            fmt_f64(r.alpha),
            r.ell.to_string(),
            r.tau.to_string(),
            fmt_f64(r.iter_mean),
            fmt_f64(r.cpu_mean),
            fmt_f64(r.speedup),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRecord>> {
    let path = path.as_ref();
    let mut rdr = csv_reader(path, &RESULTS_HEADER)?;
    let mut out = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| csv_to_error(path, e))?;
        let bad = |msg: String| Error::Parse { line, msg };
        if rec.len() != RESULTS_HEADER.len() {
            return Err(bad(format!("expected {} fields, found {}", RESULTS_HEADER.len(), rec.len())));
        }
        let u = |i: usize| rec[i].parse::<usize>().map_err(|_| bad(format!("invalid {} {:?}", RESULTS_HEADER[i], &rec[i])));
        let f = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(format!("invalid {} {:?}", RESULTS_HEADER[i], &rec[i])));
        out.push(ResultRecord {
            matrix: rec[0].to_string(),
            m: u(1)?,
            n: u(2)?,
            method: rec[3].to_string(),
            alpha: f(4)?,
            ell: u(5)?,
            tau: u(6)?,
            iter_mean: f(7)?,
            cpu_mean: f(8)?,
            speedup: f(9)?,
        });
    }
    Ok(out)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn csv_reader(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let got = rdr.headers().map_err(|e| csv_to_error(path, e))?;
    if got.iter().ne(header.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected header {:?}", got.iter().collect::<Vec<_>>()),
        });
    }
    Ok(rdr)
}

fn csv_to_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        let line = e.position().map_or(0, |p| p.line() as usize);
        Error::Parse { line, msg: e.to_string() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<DenseMatrix> {
        parse_matrix_market(text.as_bytes(), DENSE_CAPACITY)
    }

    #[test]
    fn coordinate_identity() {
        let m = parse("%%MatrixMarket matrix coordinate real general\n% comment\n2 2 2\n1 1 1\n2 2 1\n").unwrap();
        assert_eq!(m, DenseMatrix::identity(2));
    }

    #[test]
    fn symmetric_lower_triangle_expands() {
        let m = parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 3\n").unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn pattern_and_duplicates() {
        let m = parse("%%MatrixMarket matrix coordinate pattern general\n2 3 3\n1 3\n2 1\n1 3\n").unwrap();
        assert_eq!(m, DenseMatrix::from_rows(&[[0.0, 0.0, 2.0], [1.0, 0.0, 0.0]]).unwrap());
        let m = parse("%%MatrixMarket matrix coordinate integer general\n1 1 2\n1 1 4\n1 1 -1\n").unwrap();
        assert_eq!(m.get(0, 0), 3.0);
    }

    #[test]
    fn array_general_and_symmetric() {
        let m = parse("%%MatrixMarket matrix array real general\n2 3\n1\n2\n3\n4\n5\n6\n").unwrap();
        assert_eq!(m, DenseMatrix::from_rows(&[[1.0, 3.0, 5.0], [2.0, 4.0, 6.0]]).unwrap());
        let m = parse("%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n").unwrap();
        assert_eq!(m, DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 3.0]]).unwrap());
    }

    #[test]
    fn header_rejection() {
        for banner in [
            "%%MatrixMarket matrix coordinate complex general",
            "%%MatrixMarket matrix coordinate real skew-symmetric",
            "%%MatrixMarket matrix coordinate real hermitian",
            "%%MatrixMarket matrix array pattern general",
            "%%MatrixMarket vector coordinate real general",
        ] {
            let err = parse(&format!("{banner}\n1 1 1\n1 1 1\n")).unwrap_err();
            assert!(matches!(err, Error::UnsupportedHeader(_)), "{banner}: {err}");
        }
        assert!(matches!(parse("%MatrixMarket matrix\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn malformed_entries_report_line() {
        let err = parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n3 1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let err = parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 x\n2 2 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n2 2 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn capacity_is_enforced() {
        let err = parse_matrix_market("%%MatrixMarket matrix coordinate real general\n100 100 0\n".as_bytes(), 9_999)
            .unwrap_err();
        assert!(matches!(err, Error::Capacity { rows: 100, cols: 100, .. }));
    }

    #[test]
    fn history_csv_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        write_history_records(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "k,error_norm,residual_norm\n");

        let rec = HistoryRecord {
            k: 0,
            error_norm: Some(1.0),
            residual_norm: Some(2.0),
        };
        write_history_records(std::slice::from_ref(&rec), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().nth(1).unwrap(), "0,1.0000000000000000e0,2.0000000000000000e0");
        assert_eq!(read_history_csv(&path).unwrap(), vec![rec]);
    }

    #[test]
    fn missing_file_has_path_context() {
        let err = read_matrix_market("/nonexistent/dir/a.mtx").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/a.mtx"));
    }
}
