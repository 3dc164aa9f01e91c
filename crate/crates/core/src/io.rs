//! Locale-independent number formatting and matrix dump files.
//!
//! Matrix files store a `rows × cols` complex matrix row-major with real and
//! imaginary parts interleaved. The CSV form starts with a `rows,cols` header
//! line; the binary form is `u32 rows, u32 cols` followed by `f64` pairs, all
//! little-endian.

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;

use crate::channel::CMatrix;
use crate::error::{Error, Result};

/// Formats with 9 significant digits, `%g` style, `.` as decimal separator.
pub fn fmt_g9(x: f64) -> String {
    const SIG: i32 = 9;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // Exponent after rounding to SIG digits.
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -5 || exp >= SIG {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (SIG - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_matrix_csv<W: Write>(mut w: W, m: &CMatrix) -> Result<()> {
    writeln!(w, "{},{}", m.nrows(), m.ncols())?;
    for r in 0..m.nrows() {
        let line: Vec<String> = (0..m.ncols())
            .flat_map(|c| {
                let x = m[(r, c)];
                [fmt_full(x.re), fmt_full(x.im)]
            })
            .collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Shortest representation that parses back to the same `f64`.
fn fmt_full(x: f64) -> String {
    format!("{x:?}")
}

pub fn read_matrix_csv<R: BufRead>(r: R) -> Result<CMatrix> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Io("empty matrix file".into()))??;
    let (rows, cols) = parse_header(&header)?;
    let mut m = CMatrix::zeros(rows, cols);
    for row in 0..rows {
        let line = lines
            .next()
            .ok_or_else(|| Error::Io(format!("missing row {row}")))??;
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Io(format!("row {row}: {e}"))))
            .collect::<Result<_>>()?;
        if vals.len() != 2 * cols {
            return Err(Error::Io(format!("row {row} has {} values, expected {}", vals.len(), 2 * cols)));
        }
        for c in 0..cols {
            m[(row, c)] = Complex64::new(vals[2 * c], vals[2 * c + 1]);
        }
    }
    Ok(m)
}

fn parse_header(h: &str) -> Result<(usize, usize)> {
    let bad = || Error::Io(format!("bad matrix header {h:?}"));
    let (a, b) = h.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

pub fn write_matrix_bin<W: Write>(mut w: W, m: &CMatrix) -> Result<()> {
    let dim = |n: usize| u32::try_from(n).map_err(|_| Error::Io("matrix too large".into()));
    w.write_all(&dim(m.nrows())?.to_le_bytes())?;
    w.write_all(&dim(m.ncols())?.to_le_bytes())?;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            w.write_all(&m[(r, c)].re.to_le_bytes())?;
            w.write_all(&m[(r, c)].im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_matrix_bin<R: Read>(mut r: R) -> Result<CMatrix> {
    let mut u = [0u8; 4];
    r.read_exact(&mut u)?;
    let rows = u32::from_le_bytes(u) as usize;
    r.read_exact(&mut u)?;
    let cols = u32::from_le_bytes(u) as usize;
    let mut m = CMatrix::zeros(rows, cols);
    let mut f = [0u8; 8];
    for row in 0..rows {
        for col in 0..cols {
            r.read_exact(&mut f)?;
            let re = f64::from_le_bytes(f);
            r.read_exact(&mut f)?;
            m[(row, col)] = Complex64::new(re, f64::from_le_bytes(f));
        }
    }
    Ok(m)
}
