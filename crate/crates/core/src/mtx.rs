//! Matrix Market coordinate/array I/O.
//!
//! Values are written with 17 significant digits, which round-trips every
//! `f64` exactly. The reader is meant for untrusted files: sizes are capped
//! and allocation never trusts the header.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::interferometer::{user_splitter, BalancedSplitter};
use crate::sparse::CsrMatrix;

/// Largest entry count the reader accepts.
pub const MAX_ENTRIES: usize = 1 << 24;

/// Largest `rows * cols` the reader will densify.
pub const MAX_DENSE_ENTRIES: usize = 1 << 22;

/// Largest splitter file read from disk.
pub const MAX_FILE_BYTES: u64 = 64 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Real,
    Integer,
    Complex,
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
    Hermitian,
}

/// A parsed file with entries expanded to both triangles.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixMarket {
    pub format: Format,
    pub field: Field,
    pub symmetry: Symmetry,
    pub nrows: usize,
    pub ncols: usize,
    /// `(row, col, re, im)`, 0-based.
    pub entries: Vec<(usize, usize, f64, f64)>,
}

impl MatrixMarket {
    /// Real part as CSR; errors on a complex matrix with nonzero imaginary part.
    pub fn to_csr(&self) -> Result<CsrMatrix> {
        if self.entries.iter().any(|e| e.3 != 0.0) {
            return Err(parse_err(None, "matrix has complex entries, expected real"));
        }
        Ok(self.real_part())
    }

    pub fn real_part(&self) -> CsrMatrix {
        let trips: Vec<_> = self.entries.iter().map(|&(i, j, re, _)| (i, j, re)).collect();
        CsrMatrix::from_triplets(self.nrows, self.ncols, &trips)
    }

    pub fn imag_part(&self) -> CsrMatrix {
        let trips: Vec<_> = self.entries.iter().map(|&(i, j, _, im)| (i, j, im)).collect();
        CsrMatrix::from_triplets(self.nrows, self.ncols, &trips)
    }

    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.nrows.saturating_mul(self.ncols) > MAX_DENSE_ENTRIES {
            return Err(parse_err(
                None,
                &format!("{}x{} is too large to densify", self.nrows, self.ncols),
            ));
        }
        Ok(self.to_csr()?.to_dense())
    }
}

fn parse_err(line: Option<usize>, message: &str) -> Error {
    Error::Parse {
        line,
        column: None,
        message: message.to_string(),
    }
}

// ---- writer ----

fn header(out: &mut String, field: &str, symmetric: bool, nrows: usize, ncols: usize, nnz: usize) {
    let sym = if symmetric { "symmetric" } else { "general" };
    let _ = writeln!(out, "%%MatrixMarket matrix coordinate {field} {sym}");
    let _ = writeln!(out, "{nrows} {ncols} {nnz}");
}

fn exactly_symmetric(m: &CsrMatrix) -> bool {
    m.nrows() == m.ncols() && m.is_symmetric(0.0)
}

/// Real sparse matrix; the lower triangle only when exactly symmetric.
pub fn write_real(m: &CsrMatrix) -> String {
    let sym = exactly_symmetric(m);
    let entries: Vec<_> = m.triplets().filter(|&(i, j, _)| !sym || i >= j).collect();
    let mut out = String::with_capacity(40 * entries.len() + 64);
    header(&mut out, "real", sym, m.nrows(), m.ncols(), entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v);
    }
    out
}

/// Complex sparse matrix `re + i im`.
pub fn write_complex(re: &CsrMatrix, im: &CsrMatrix) -> String {
    assert_eq!((re.nrows(), re.ncols()), (im.nrows(), im.ncols()), "shape mismatch");
    let sym = exactly_symmetric(re) && exactly_symmetric(im);
    // union of the two sparsity patterns
    let mut keys: Vec<(usize, usize)> = re.triplets().chain(im.triplets()).map(|(i, j, _)| (i, j)).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.retain(|&(i, j)| !sym || i >= j);
    let mut out = String::with_capacity(64 * keys.len() + 64);
    header(&mut out, "complex", sym, re.nrows(), re.ncols(), keys.len());
    for (i, j) in keys {
        let _ = writeln!(out, "{} {} {:.16e} {:.16e}", i + 1, j + 1, re.get(i, j), im.get(i, j));
    }
    out
}

/// Dense matrix in coordinate form, dropping exact zeros.
pub fn write_dense(m: &DMatrix<f64>) -> String {
    write_real(&CsrMatrix::from_dense(m))
}

// ---- reader ----

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| parse_err(Some(line), &format!("bad {what} {tok:?}")))
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v = tok
        .parse::<f64>()
        .map_err(|_| parse_err(Some(line), &format!("bad value {tok:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(Some(line), &format!("non-finite value {tok:?}")));
    }
    Ok(v)
}

/// Parse a Matrix Market document.
pub fn read_matrix_market(text: &str) -> Result<MatrixMarket> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, banner) = lines.next().ok_or_else(|| parse_err(Some(1), "empty file"))?;
    let words: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(parse_err(Some(1), "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    let format = match words[2].as_str() {
        "coordinate" => Format::Coordinate,
        "array" => Format::Array,
        f => return Err(parse_err(Some(1), &format!("unknown format {f:?}"))),
    };
    let field = match words[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "complex" => Field::Complex,
        "pattern" => Field::Pattern,
        f => return Err(parse_err(Some(1), &format!("unknown field {f:?}"))),
    };
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        "hermitian" => Symmetry::Hermitian,
        s => return Err(parse_err(Some(1), &format!("unknown symmetry {s:?}"))),
    };
    if format == Format::Array && field == Field::Pattern {
        return Err(parse_err(Some(1), "pattern field needs coordinate format"));
    }
    if symmetry == Symmetry::Hermitian && field != Field::Complex {
        return Err(parse_err(Some(1), "hermitian symmetry needs complex field"));
    }

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim_start();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = data.next().ok_or_else(|| parse_err(None, "missing size line"))?;
    let toks: Vec<&str> = size.split_whitespace().collect();
    let want = if format == Format::Coordinate { 3 } else { 2 };
    if toks.len() != want {
        return Err(parse_err(Some(size_line), &format!("size line needs {want} integers")));
    }
    let nrows = parse_usize(toks[0], size_line, "row count")?;
    let ncols = parse_usize(toks[1], size_line, "column count")?;
    if symmetry != Symmetry::General && nrows != ncols {
        return Err(parse_err(Some(size_line), "symmetric storage needs a square matrix"));
    }
    let declared = if format == Format::Coordinate {
        parse_usize(toks[2], size_line, "entry count")?
    } else {
        let full = nrows
            .checked_mul(ncols)
            .ok_or_else(|| parse_err(Some(size_line), "matrix too large"))?;
        match symmetry {
            Symmetry::General => full,
            Symmetry::SkewSymmetric => nrows * nrows.saturating_sub(1) / 2,
            _ => nrows * (nrows + 1) / 2,
        }
    };
    if declared > MAX_ENTRIES {
        return Err(parse_err(
            Some(size_line),
            &format!("{declared} entries exceeds limit {MAX_ENTRIES}"),
        ));
    }

    let per_entry = if field == Field::Complex { 2 } else if field == Field::Pattern { 0 } else { 1 };
    let mut stored = Vec::with_capacity(declared.min(1 << 16));
    // array format walks columns top to bottom, lower triangle for symmetric kinds
    let mut cursor = (0usize, 0usize);
    let advance = |(i, j): (usize, usize)| -> (usize, usize) {
        if i + 1 < nrows {
            (i + 1, j)
        } else {
            let nj = j + 1;
            let start = match symmetry {
                Symmetry::General => 0,
                Symmetry::SkewSymmetric => nj + 1,
                _ => nj,
            };
            (start, nj)
        }
    };
    if format == Format::Array && symmetry == Symmetry::SkewSymmetric {
        cursor = (1, 0);
    }
    for _ in 0..declared {
        let (ln, line) = data
            .next()
            .ok_or_else(|| parse_err(None, &format!("expected {declared} entries, file ended early")))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        let (i, j, rest) = if format == Format::Coordinate {
            if toks.len() != 2 + per_entry {
                return Err(parse_err(Some(ln), &format!("expected {} fields", 2 + per_entry)));
            }
            let i = parse_usize(toks[0], ln, "row index")?;
            let j = parse_usize(toks[1], ln, "column index")?;
            if i == 0 || j == 0 || i > nrows || j > ncols {
                return Err(parse_err(Some(ln), &format!("index ({i}, {j}) outside {nrows}x{ncols}")));
            }
            (i - 1, j - 1, &toks[2..])
        } else {
            if toks.len() != per_entry {
                return Err(parse_err(Some(ln), &format!("expected {per_entry} fields")));
            }
            let (i, j) = cursor;
            cursor = advance(cursor);
            (i, j, &toks[..])
        };
        let (re, im) = match field {
            Field::Pattern => (1.0, 0.0),
            Field::Complex => (parse_f64(rest[0], ln)?, parse_f64(rest[1], ln)?),
            Field::Integer => {
                let v = rest[0]
                    .parse::<i64>()
                    .map_err(|_| parse_err(Some(ln), &format!("bad integer {:?}", rest[0])))?;
                (v as f64, 0.0)
            }
            Field::Real => (parse_f64(rest[0], ln)?, 0.0),
        };
        if symmetry != Symmetry::General && format == Format::Coordinate && j > i {
            return Err(parse_err(Some(ln), "symmetric storage must list the lower triangle"));
        }
        if symmetry == Symmetry::SkewSymmetric && i == j {
            return Err(parse_err(Some(ln), "skew-symmetric storage has no diagonal"));
        }
        stored.push((i, j, re, im));
    }
    if let Some((ln, _)) = data.next() {
        return Err(parse_err(Some(ln), "trailing data after the declared entries"));
    }

    let mut entries = Vec::with_capacity(stored.len());
    for &(i, j, re, im) in &stored {
        entries.push((i, j, re, im));
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => entries.push((j, i, re, im)),
                Symmetry::SkewSymmetric => entries.push((j, i, -re, -im)),
                Symmetry::Hermitian => entries.push((j, i, re, -im)),
            }
        }
    }
    Ok(MatrixMarket {
        format,
        field,
        symmetry,
        nrows,
        ncols,
        entries,
    })
}

/// Parse a splitter matrix from Matrix Market text and validate it.
pub fn parse_splitter(text: &str) -> Result<BalancedSplitter> {
    let mm = read_matrix_market(text)?;
    if mm.nrows != mm.ncols {
        return Err(Error::NotSquare {
            rows: mm.nrows,
            cols: mm.ncols,
        });
    }
    user_splitter(mm.to_dense()?)
}

/// Read and validate a user splitter file.
pub fn read_splitter_file(path: &Path) -> Result<BalancedSplitter> {
    let wrap = |message: String| Error::SplitterFile {
        path: path.to_path_buf(),
        message,
    };
    let file = std::fs::File::open(path).map_err(|e| wrap(e.to_string()))?;
    let mut text = String::new();
    file.take(MAX_FILE_BYTES + 1)
        .read_to_string(&mut text)
        .map_err(|e| wrap(e.to_string()))?;
    if text.len() as u64 > MAX_FILE_BYTES {
        return Err(wrap(format!("file exceeds {MAX_FILE_BYTES} bytes")));
    }
    parse_splitter(&text).map_err(|e| wrap(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::sylvester_splitter;
    use proptest::prelude::*;

    #[test]
    fn symmetric_header_and_lower_triangle() {
        let m = CsrMatrix::from_triplets(3, 3, &[(0, 1, 2.0), (1, 0, 2.0), (2, 2, -0.5)]);
        let text = write_real(&m);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("%%MatrixMarket matrix coordinate real symmetric"));
        assert_eq!(lines.next(), Some("3 3 2"));
        assert_eq!(lines.next(), Some("2 1 2.0000000000000000e0"));
        assert_eq!(lines.next(), Some("3 3 -5.0000000000000000e-1"));
        assert_eq!(read_matrix_market(&text).unwrap().to_csr().unwrap(), m);
    }

    #[test]
    fn general_and_complex_headers() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0)]);
        assert!(write_real(&m).starts_with("%%MatrixMarket matrix coordinate real general\n2 3 1\n"));
        let re = CsrMatrix::zeros(2, 2);
        let im = CsrMatrix::identity(2);
        let text = write_complex(&re, &im);
        assert!(text.starts_with("%%MatrixMarket matrix coordinate complex symmetric\n2 2 2\n"));
        let back = read_matrix_market(&text).unwrap();
        assert_eq!(back.field, Field::Complex);
        assert_eq!(back.imag_part(), im);
        assert_eq!(back.real_part().nnz(), 0);
        assert!(back.to_csr().is_err());
    }

    #[test]
    fn array_format_and_symmetry_kinds() {
        let text = "%%MatrixMarket matrix array real general\n% c\n2 2\n1\n2\n3\n4\n";
        let d = read_matrix_market(text).unwrap().to_dense().unwrap();
        assert_eq!(d, DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 2.0, 4.0]));
        let text = "%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n";
        let d = read_matrix_market(text).unwrap().to_dense().unwrap();
        assert_eq!(d, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]));
        let text = "%%MatrixMarket matrix array real skew-symmetric\n3 3\n1\n2\n3\n";
        let d = read_matrix_market(text).unwrap().to_dense().unwrap();
        assert_eq!(d, DMatrix::from_row_slice(3, 3, &[0., -1., -2., 1., 0., -3., 2., 3., 0.]));
        let text = "%%MatrixMarket matrix coordinate pattern general\n2 2 1\n1 2\n";
        assert_eq!(read_matrix_market(text).unwrap().entries, vec![(0, 1, 1.0, 0.0)]);
        let text = "%%MatrixMarket matrix coordinate complex hermitian\n2 2 1\n2 1 1 2\n";
        let mm = read_matrix_market(text).unwrap();
        assert_eq!(mm.imag_part().get(0, 1), -2.0);
    }

    #[test]
    fn malformed_input_is_rejected() {
        let bad = [
            "",
            "%%MatrixMarket matrix coordinate real\n1 1 1\n1 1 1\n",
            "%%MatrixMarket tensor coordinate real general\n1 1 1\n1 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n1 1 1\n2 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n1 1 1\n0 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n1 1 2\n1 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1\n1 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 nan\n",
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1\n",
            "%%MatrixMarket matrix coordinate real symmetric\n2 3 0\n",
            "%%MatrixMarket matrix coordinate real general\n9 9 99999999999\n",
            "%%MatrixMarket matrix array real general\n99999999 99999999\n",
            "%%MatrixMarket matrix array pattern general\n1 1\n",
            "%%MatrixMarket matrix coordinate real hermitian\n1 1 0\n",
        ];
        for text in bad {
            assert!(read_matrix_market(text).is_err(), "{text:?}");
        }
        let big = "%%MatrixMarket matrix coordinate real general\n100000 100000 0\n";
        assert!(read_matrix_market(big).unwrap().to_dense().is_err());
    }

    #[test]
    fn splitter_files() {
        for order in [2, 4, 8] {
            let h = sylvester_splitter(order).unwrap();
            assert_eq!(parse_splitter(&write_dense(h.matrix())).unwrap(), h);
        }
        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n0\n0\n1\n";
        assert!(matches!(parse_splitter(text), Err(Error::NotBalanced { .. })));
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.mtx");
        assert!(matches!(read_splitter_file(&missing), Err(Error::SplitterFile { .. })));
    }

    proptest! {
        #[test]
        fn write_read_round_trip_is_exact(
            trips in prop::collection::vec((0usize..6, 0usize..6, -1e6f64..1e6), 0..30),
            symmetrize in any::<bool>(),
        ) {
            let mut t = trips.clone();
            if symmetrize {
                t.extend(trips.iter().map(|&(i, j, v)| (j, i, v)));
            }
            let m = CsrMatrix::from_triplets(6, 6, &t);
            let back = read_matrix_market(&write_real(&m)).unwrap().to_csr().unwrap();
            prop_assert_eq!(back, m);
        }

        #[test]
        fn arbitrary_text_never_panics(text in "(%%MatrixMarket matrix (coordinate|array) (real|complex|integer|pattern) (general|symmetric|skew-symmetric|hermitian)\n)?[0-9 .e\\-\n%]{0,120}") {
            let _ = read_matrix_market(&text);
        }
    }
}
