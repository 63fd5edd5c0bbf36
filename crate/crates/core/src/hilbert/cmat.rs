//! `cmat` v1 text matrices.
//!
//! ```text
//! cmat <rows> <cols>
//! re,im re,im ...      (one line per row)
//! ```
//!
//! Writers emit 17 significant digits so values round-trip exactly.

use std::fmt::Write as _;
use std::path::Path;

use super::{CMatrix, CVector, StateVector, C64};
use crate::error::{Error, Result};

pub const CMAT_HEADER: &str = "cmat";

pub fn format_cmat(m: &CMatrix) -> String {
    let mut out = String::with_capacity(48 * m.len() + 16);
    let _ = writeln!(out, "{CMAT_HEADER} {} {}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(' ');
            }
            let z = m[(i, j)];
            let _ = write!(out, "{:.16e},{:.16e}", z.re, z.im);
        }
        out.push('\n');
    }
    out
}

/// Parses `cmat` text; `origin` only labels error messages.
pub fn parse_cmat(text: &str, origin: &Path) -> Result<CMatrix> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err(1, "empty input".into()))?;
    let parts: Vec<&str> = header.split(' ').collect();
    if parts.len() != 3 || parts[0] != CMAT_HEADER {
        return Err(err(1, format!("expected `cmat <rows> <cols>`, got `{header}`")));
    }
    let rows: usize = parts[1]
        .parse()
        .map_err(|e| err(1, format!("bad row count: {e}")))?;
    let cols: usize = parts[2]
        .parse()
        .map_err(|e| err(1, format!("bad column count: {e}")))?;
    let mut m = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        let lineno = i + 2;
        let line = lines
            .next()
            .ok_or_else(|| err(lineno, format!("expected {rows} rows, found {i}")))?;
        let entries: Vec<&str> = line.split(' ').collect();
        if entries.len() != cols {
            return Err(err(lineno, format!("expected {cols} entries, found {}", entries.len())));
        }
        for (j, entry) in entries.iter().enumerate() {
            let (re, im) = entry
                .split_once(',')
                .ok_or_else(|| err(lineno, format!("entry `{entry}` is not `re,im`")))?;
            let re: f64 = re
                .parse()
                .map_err(|e| err(lineno, format!("bad real part `{re}`: {e}")))?;
            let im: f64 = im
                .parse()
                .map_err(|e| err(lineno, format!("bad imaginary part `{im}`: {e}")))?;
            m[(i, j)] = C64::new(re, im);
        }
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(err(rows + 2, "trailing data after last row".into()));
    }
    Ok(m)
}

pub fn write_cmat(path: &Path, m: &CMatrix) -> Result<()> {
    std::fs::write(path, format_cmat(m)).map_err(|e| Error::io(path, e))
}

pub fn read_cmat(path: &Path) -> Result<CMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cmat(&text, path)
}

/// States are stored as `n x 1` matrices.
pub fn write_state(path: &Path, psi: &StateVector) -> Result<()> {
    let m = CMatrix::from_column_slice(psi.dim(), 1, psi.amplitudes().as_slice());
    write_cmat(path, &m)
}

pub fn read_state(path: &Path) -> Result<StateVector> {
    let m = read_cmat(path)?;
    if m.ncols() != 1 {
        return Err(Error::dims(1, m.ncols()));
    }
    StateVector::new(CVector::from_column_slice(m.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_layout() {
        let m = CMatrix::from_row_slice(2, 2, &[
            C64::new(1.0, 0.0), C64::new(0.0, -0.5),
            C64::new(0.25, 2.0), C64::new(-3.0, 1e-300),
        ]);
        let text = format_cmat(&m);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("cmat 2 2"));
        let row0 = lines.next().unwrap();
        assert_eq!(row0.split(' ').count(), 2);
        assert!(row0.starts_with("1.0000000000000000e0,0.0000000000000000e0"));
        assert_eq!(parse_cmat(&text, Path::new("mem")).unwrap(), m);
    }

    #[test]
    fn malformed_inputs() {
        let p = Path::new("x.cmat");
        assert!(parse_cmat("", p).is_err());
        assert!(parse_cmat("mat 1 1\n1,0\n", p).is_err());
        assert!(parse_cmat("cmat 1 2\n1,0\n", p).is_err());
        assert!(parse_cmat("cmat 2 1\n1,0\n", p).is_err());
        assert!(parse_cmat("cmat 1 1\n1;0\n", p).is_err());
        assert!(matches!(
            parse_cmat("cmat 1 1\n1,0\n2,0\n", p),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(
            rows in 1usize..5,
            cols in 1usize..5,
            vals in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::ZERO | proptest::num::f64::SUBNORMAL, 50)
        ) {
            let m = CMatrix::from_fn(rows, cols, |i, j| {
                let k = 2 * (i * cols + j);
                C64::new(vals[k % 50], vals[(k + 1) % 50])
            });
            let back = parse_cmat(&format_cmat(&m), Path::new("p")).unwrap();
            for (a, b) in m.iter().zip(back.iter()) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }
}
