//! Matrix Market coordinate files.
//!
//! Reading accepts `real` and `integer` fields in `symmetric` or `general`
//! storage. Symmetric files list one triangle and are expanded; general files
//! must have symmetric content. Writing emits the lower triangle in
//! `symmetric` storage with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::io::{BufRead, Write};

use ekcg::linalg::SparseSpdMatrix;

use crate::error::{HarnessError, Result};

fn err(line: usize, message: impl Into<String>) -> HarnessError {
    HarnessError::MatrixMarket {
        line,
        message: message.into(),
    }
}

pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<SparseSpdMatrix> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file"))?;
    let header = header?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" {
        return Err(err(1, format!("malformed header {header:?}")));
    }
    if fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(err(1, format!("only 'matrix coordinate' files are supported, got {header:?}")));
    }
    match fields[3].as_str() {
        "real" | "integer" => {}
        other => return Err(err(1, format!("unsupported field {other:?}"))),
    }
    let symmetric = match fields[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(err(1, format!("unsupported symmetry {other:?}"))),
    };

    let mut size = None;
    let mut entries = Vec::new();
    for (no, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(err(no, "size line must hold rows, columns and entries"));
                }
                let parse = |s: &str| s.parse::<usize>().map_err(|_| err(no, format!("bad size {s:?}")));
                let (m, n, nnz) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
                if m != n {
                    return Err(err(no, format!("matrix is {m} x {n}, not square")));
                }
                size = Some((n, nnz));
                entries.reserve(nnz);
            }
            Some((n, _)) => {
                if parts.len() != 3 {
                    return Err(err(no, "entry must hold row, column and value"));
                }
                let index = |s: &str| match s.parse::<usize>() {
                    Ok(i) if (1..=n).contains(&i) => Ok(i - 1),
                    _ => Err(err(no, format!("index {s:?} outside 1..={n}"))),
                };
                let (i, j) = (index(parts[0])?, index(parts[1])?);
                let v: f64 = parts[2].parse().map_err(|_| err(no, format!("bad value {:?}", parts[2])))?;
                if symmetric && i < j {
                    return Err(err(no, "symmetric storage must list the lower triangle"));
                }
                entries.push((i, j, v));
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| err(1, "missing size line"))?;
    if entries.len() != nnz {
        return Err(err(0, format!("expected {nnz} entries, found {}", entries.len())));
    }
    let matrix = if symmetric {
        SparseSpdMatrix::from_triangle(n, &entries)
    } else {
        SparseSpdMatrix::from_triplets(n, &entries)
    };
    matrix.map_err(|e| err(0, e.to_string()))
}

pub fn write_matrix_market<W: Write>(a: &SparseSpdMatrix, mut writer: W) -> Result<()> {
    let lower: Vec<(usize, usize, f64)> = (0..a.n())
        .flat_map(|i| a.row(i).filter(move |&(j, _)| j <= i).map(move |(j, v)| (i, j, v)))
        .collect();
    writeln!(writer, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(writer, "{} {} {}", a.n(), a.n(), lower.len())?;
    for (i, j, v) in lower {
        writeln!(writer, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_poisson2d, gen_skyscraper};

    fn read(s: &str) -> Result<SparseSpdMatrix> {
        read_matrix_market(s.as_bytes())
    }

    #[test]
    fn round_trip_is_exact() {
        for a in [gen_poisson2d(4, 4).unwrap(), gen_skyscraper(6, 6, None, 7.0).unwrap()] {
            let mut buf = Vec::new();
            write_matrix_market(&a, &mut buf).unwrap();
            assert_eq!(read_matrix_market(buf.as_slice()).unwrap(), a);
        }
    }

    #[test]
    fn one_based_indices_and_expansion() {
        let a = read("%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 3\n1 1 2.0\n2 1 -1\n2 2 3\n").unwrap();
        assert_eq!(a.to_dense(), vec![vec![2.0, -1.0], vec![-1.0, 3.0]]);
        let g = read("%%MatrixMarket matrix coordinate real general\n2 2 4\n1 1 2\n1 2 -1\n2 1 -1\n2 2 3\n").unwrap();
        assert_eq!(g, a);
    }

    #[test]
    fn rejections() {
        let complex = read("%%MatrixMarket matrix coordinate complex symmetric\n1 1 1\n1 1 1 0\n");
        assert!(matches!(complex, Err(HarnessError::MatrixMarket { line: 1, ref message }) if message.contains("complex")));
        assert!(read("%%MatrixMarket matrix\n1 1 1\n1 1 1\n").is_err());
        assert!(read("%%MatrixMarket matrix array real general\n1 1\n1\n").is_err());
        let nonsym = read("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 2\n1 2 -1\n2 2 3\n");
        assert!(nonsym.is_err());
        let nonpos = read("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 2\n2 2 0\n");
        assert!(nonpos.is_err());
        assert!(read("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 2\n").is_err());
        assert!(read("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 2\n").is_err());
    }
}
