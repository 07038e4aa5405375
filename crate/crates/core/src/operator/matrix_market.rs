//! Matrix Market exchange format, real or integer valued, `array` and
//! `coordinate` layouts, `general` and `symmetric` qualifiers.
//!
//! The writer always emits `coordinate real symmetric` with the lower
//! triangle in column order and 17 significant digits, so a save/load cycle
//! reproduces every `f64` exactly.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{DenseSymmetric, SymmetricOperator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Array,
    Coordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<DenseSymmetric> {
    read_matrix_market(BufReader::new(File::open(path)?))
}

pub fn save_matrix_market(matrix: &DenseSymmetric, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_matrix_market(matrix, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_matrix_market<W: Write>(matrix: &DenseSymmetric, out: &mut W) -> Result<()> {
    let n = matrix.dim();
    let mut entries = Vec::new();
    for j in 0..n {
        for i in j..n {
            let x = matrix.get(i, j);
            if x != 0.0 {
                entries.push((i, j, x));
            }
        }
    }
    writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(out, "{n} {n} {}", entries.len())?;
    for (i, j, x) in entries {
        writeln!(out, "{} {} {:.16e}", i + 1, j + 1, x)?;
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<DenseSymmetric> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, banner) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let banner = banner?;
    let (layout, symmetry) = parse_banner(&banner)?;

    // Data lines with comments and blanks removed.
    let mut data = lines.filter_map(|(no, line)| match line {
        Ok(l) => {
            let t = l.trim();
            if t.is_empty() || t.starts_with('%') {
                None
            } else {
                Some(Ok((no, t.to_string())))
            }
        }
        Err(e) => Some(Err(Error::from(e))),
    });

    let (size_no, size_line) = data.next().ok_or_else(|| parse_err(2, "missing size line"))??;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(size_no, format!("bad size field `{t}`"))))
        .collect::<Result<_>>()?;
    let expected_fields = if layout == Layout::Coordinate { 3 } else { 2 };
    if sizes.len() != expected_fields {
        return Err(parse_err(size_no, format!("expected {expected_fields} size fields, got {}", sizes.len())));
    }
    let (rows, cols) = (sizes[0], sizes[1]);
    if rows != cols {
        return Err(parse_err(size_no, format!("matrix is {rows}x{cols}, not square")));
    }
    if rows == 0 {
        return Err(Error::EmptyMatrix);
    }
    let n = rows;
    let mut dense = vec![0.0; n * n];

    let parse_value = |no: usize, t: &str| -> Result<f64> {
        let x: f64 = t.parse().map_err(|_| parse_err(no, format!("bad value `{t}`")))?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(parse_err(no, format!("non-finite value `{t}`")))
        }
    };

    match layout {
        Layout::Array => {
            // Column-major; symmetric files store the lower triangle only.
            let positions: Vec<(usize, usize)> = match symmetry {
                Symmetry::General => (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).collect(),
                Symmetry::Symmetric => (0..n).flat_map(|j| (j..n).map(move |i| (i, j))).collect(),
            };
            let mut slots = positions.into_iter();
            for item in data.by_ref() {
                let (no, line) = item?;
                for tok in line.split_whitespace() {
                    let (i, j) = slots.next().ok_or_else(|| parse_err(no, "more values than the declared size"))?;
                    let x = parse_value(no, tok)?;
                    dense[i * n + j] = x;
                    if symmetry == Symmetry::Symmetric {
                        dense[j * n + i] = x;
                    }
                }
            }
            if slots.next().is_some() {
                return Err(parse_err(size_no, "fewer values than the declared size"));
            }
        }
        Layout::Coordinate => {
            let nnz = sizes[2];
            let mut seen = HashSet::with_capacity(nnz);
            let mut count = 0;
            for item in data.by_ref() {
                let (no, line) = item?;
                if count == nnz {
                    return Err(parse_err(no, "more entries than the declared count"));
                }
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(parse_err(no, format!("expected `row col value`, got {} fields", toks.len())));
                }
                let idx = |t: &str| -> Result<usize> {
                    match t.parse::<usize>() {
                        Ok(k) if (1..=n).contains(&k) => Ok(k - 1),
                        _ => Err(parse_err(no, format!("index `{t}` outside 1..={n}"))),
                    }
                };
                let (i, j) = (idx(toks[0])?, idx(toks[1])?);
                let x = parse_value(no, toks[2])?;
                let key = match symmetry {
                    Symmetry::General => (i, j),
                    Symmetry::Symmetric => (i.max(j), i.min(j)),
                };
                if !seen.insert(key) {
                    return Err(parse_err(no, format!("duplicate entry ({}, {})", i + 1, j + 1)));
                }
                dense[i * n + j] = x;
                if symmetry == Symmetry::Symmetric {
                    dense[j * n + i] = x;
                }
                count += 1;
            }
            if count != nnz {
                return Err(parse_err(size_no, format!("declared {nnz} entries, found {count}")));
            }
        }
    }

    DenseSymmetric::from_row_major(n, dense)
}

fn parse_banner(banner: &str) -> Result<(Layout, Symmetry)> {
    let toks: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" {
        return Err(parse_err(1, "missing `%%MatrixMarket matrix <layout> <field> <symmetry>` banner"));
    }
    if toks[1] != "matrix" {
        return Err(Error::UnsupportedField(format!("object `{}`", toks[1])));
    }
    let layout = match toks[2].as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        other => return Err(parse_err(1, format!("unknown layout `{other}`"))),
    };
    match toks[3].as_str() {
        "real" | "double" | "integer" => {}
        other => return Err(Error::UnsupportedField(other.to_string())),
    }
    let symmetry = match toks[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(Error::UnsupportedField(other.to_string())),
    };
    Ok((layout, symmetry))
}
