//! Matrix Market coordinate I/O for sparse complex matrices.
//!
//! Hermitian matrices are written as `coordinate complex hermitian` with the
//! lower triangle only; anything else as `coordinate complex general`.
//! Indices are 1-based and values use 17 significant digits so a write/read
//! cycle is exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64 as C64;

use crate::compiler::ClockHamiltonian;
use crate::error::{Error, Result};
use crate::sparse::{CooMatrix, CscMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Complex,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Hermitian,
    SkewSymmetric,
}

fn is_hermitian(m: &CscMatrix) -> bool {
    m.rows() == m.cols() && m.hermiticity_residual() <= 1e-14 * m.max_abs().max(f64::MIN_POSITIVE)
}

pub fn write_matrix_market<W: Write>(m: &CscMatrix, mut out: W) -> Result<()> {
    let hermitian = is_hermitian(m);
    let entries: Vec<(usize, usize, C64)> = if hermitian {
        m.iter().filter(|&(r, c, _)| r >= c).collect()
    } else {
        m.iter().collect()
    };
    let symmetry = if hermitian { "hermitian" } else { "general" };
    writeln!(out, "%%MatrixMarket matrix coordinate complex {symmetry}")?;
    writeln!(out, "{} {} {}", m.rows(), m.cols(), entries.len())?;
    for (r, c, v) in entries {
        writeln!(out, "{} {} {:.16e} {:.16e}", r + 1, c + 1, v.re, v.im)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `path` and a JSON sidecar next to it (same stem, `.json`).
pub fn write_hamiltonian(h: &ClockHamiltonian, path: &Path) -> Result<()> {
    write_matrix_market(h.total(), BufWriter::new(File::create(path)?))?;
    let sidecar = path.with_extension("json");
    let mut text = serde_json::to_string_pretty(&h.sidecar_json())?;
    text.push('\n');
    std::fs::write(sidecar, text)?;
    Ok(())
}

fn bad(line: usize, msg: impl Into<String>) -> Error {
    Error::MatrixMarket(format!("line {line}: {}", msg.into()))
}

fn parse_header(line: &str) -> Result<(Field, Symmetry)> {
    let words: Vec<String> = line
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" {
        return Err(bad(1, "missing %%MatrixMarket header"));
    }
    if words[1] != "matrix" || words[2] != "coordinate" {
        return Err(bad(
            1,
            format!("unsupported object/format `{} {}`", words[1], words[2]),
        ));
    }
    let field = match words[3].as_str() {
        "real" => Field::Real,
        "integer" => Field::Integer,
        "complex" => Field::Complex,
        "pattern" => Field::Pattern,
        other => return Err(bad(1, format!("unknown field `{other}`"))),
    };
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "hermitian" => Symmetry::Hermitian,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(bad(1, format!("unknown symmetry `{other}`"))),
    };
    Ok((field, symmetry))
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.ok_or_else(|| bad(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| bad(line, format!("invalid {what}")))
}

pub fn read_matrix_market<R: Read>(input: R) -> Result<CscMatrix> {
    let mut lines = BufReader::new(input).lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty input"))?;
    let (field, symmetry) = parse_header(&header?)?;

    let mut size = None;
    let mut coo = None;
    let mut seen = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        let Some((rows, cols, nnz)) = size else {
            let rows: usize = parse_num(toks.next(), lineno, "row count")?;
            let cols: usize = parse_num(toks.next(), lineno, "column count")?;
            let nnz: usize = parse_num(toks.next(), lineno, "entry count")?;
            if symmetry != Symmetry::General && rows != cols {
                return Err(bad(lineno, "symmetric storage needs a square matrix"));
            }
            size = Some((rows, cols, nnz));
            coo = Some(CooMatrix::with_capacity(rows, cols, 2 * nnz));
            continue;
        };
        let r: usize = parse_num(toks.next(), lineno, "row index")?;
        let c: usize = parse_num(toks.next(), lineno, "column index")?;
        if r == 0 || c == 0 || r > rows || c > cols {
            return Err(bad(
                lineno,
                format!("index ({r}, {c}) outside {rows}x{cols}"),
            ));
        }
        let v = match field {
            Field::Pattern => C64::new(1.0, 0.0),
            Field::Real | Field::Integer => C64::new(parse_num(toks.next(), lineno, "value")?, 0.0),
            Field::Complex => C64::new(
                parse_num(toks.next(), lineno, "real part")?,
                parse_num(toks.next(), lineno, "imaginary part")?,
            ),
        };
        if toks.next().is_some() {
            return Err(bad(lineno, "trailing tokens"));
        }
        seen += 1;
        if seen > nnz {
            return Err(bad(lineno, format!("more than the declared {nnz} entries")));
        }
        let (r, c) = (r - 1, c - 1);
        let coo = coo.as_mut().expect("size line parsed");
        coo.push(r, c, v);
        if r != c {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => coo.push(c, r, v),
                Symmetry::Hermitian => coo.push(c, r, v.conj()),
                Symmetry::SkewSymmetric => coo.push(c, r, -v),
            }
        }
    }
    let (_, _, nnz) = size.ok_or_else(|| bad(1, "missing size line"))?;
    if seen != nnz {
        return Err(Error::MatrixMarket(format!(
            "declared {nnz} entries, found {seen}"
        )));
    }
    Ok(coo.expect("size line parsed").to_csc())
}

pub fn read_matrix_market_file(path: &Path) -> Result<CscMatrix> {
    read_matrix_market(File::open(path)?)
}
