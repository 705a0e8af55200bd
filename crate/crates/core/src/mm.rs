//! MatrixMarket coordinate files (real field; general or symmetric).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::{SparseMat, Triplets};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseMat> {
    let file = File::open(path)?;
    parse_matrix_market(BufReader::new(file))
}

/// Parses from any reader; line numbers in errors are 1-based.
pub fn parse_matrix_market(reader: impl BufRead) -> Result<SparseMat> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, banner) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))?;
    let banner = banner?;
    let tokens: Vec<String> = banner
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, format!("bad banner '{}'", banner.trim_end())));
    }
    if tokens[2] != "coordinate" {
        return Err(Error::UnsupportedFormat(format!(
            "format '{}' (only coordinate is supported)",
            tokens[2]
        )));
    }
    match tokens[3].as_str() {
        "real" | "double" | "integer" => {}
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "field '{other}' (only real is supported)"
            )))
        }
    }
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "symmetry '{other}' (expected general or symmetric)"
            )))
        }
    };

    let mut data = lines.filter_map(|(no, l)| match l {
        Ok(s) => {
            let t = s.trim();
            if t.is_empty() || t.starts_with('%') {
                None
            } else {
                Some(Ok((no, t.to_string())))
            }
        }
        Err(e) => Some(Err(e)),
    });

    let (size_line, size) = data
        .next()
        .ok_or_else(|| parse_err(2, "missing size line"))??;
    let counts: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(size_line, format!("bad size line '{size}'")))?;
    if counts.len() != 3 {
        return Err(parse_err(
            size_line,
            format!("size line needs rows, cols and entries, got '{size}'"),
        ));
    }
    let (nrows, ncols, nnz) = (counts[0], counts[1], counts[2]);
    if symmetric && nrows != ncols {
        return Err(parse_err(size_line, "symmetric matrix must be square"));
    }

    let mut t = Triplets::with_capacity(nrows, ncols, if symmetric { 2 * nnz } else { nnz });
    let mut seen = 0;
    let mut last_line = size_line;
    for item in data {
        let (no, entry) = item?;
        last_line = no;
        if seen == nnz {
            return Err(parse_err(no, format!("more than the declared {nnz} entries")));
        }
        let parts: Vec<&str> = entry.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(parse_err(no, format!("expected 'row col value', got '{entry}'")));
        }
        let idx = |s: &str, bound: usize, what: &str| -> Result<usize> {
            let k: usize = s
                .parse()
                .map_err(|_| parse_err(no, format!("bad {what} index '{s}'")))?;
            if k == 0 || k > bound {
                return Err(parse_err(
                    no,
                    format!("{what} index {k} outside 1..={bound}"),
                ));
            }
            Ok(k - 1)
        };
        let i = idx(parts[0], nrows, "row")?;
        let j = idx(parts[1], ncols, "column")?;
        let v: f64 = parts[2]
            .parse()
            .map_err(|_| parse_err(no, format!("bad value '{}'", parts[2])))?;
        t.push(i, j, v);
        if symmetric && i != j {
            t.push(j, i, v);
        }
        seen += 1;
    }
    if seen != nnz {
        return Err(parse_err(
            last_line,
            format!("declared {nnz} entries but found {seen}"),
        ));
    }
    t.to_csr()
}

/// Writes a general coordinate file, entries in row-major order with 17
/// significant digits.
pub fn write_matrix_market(a: &SparseMat, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j, v) in a.iter() {
        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}
