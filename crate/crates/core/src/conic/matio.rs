//! Plain-text matrix dumps for cross-checking against external solvers.
//!
//! Each matrix is written as
//!
//! ```text
//! # <name>
//! <rows> <cols> real|complex
//! <row 0 entries>
//! ...
//! ```
//!
//! Rows are written in order; complex entries appear as `re im` pairs.
//! Lines starting with `%` are annotations and are ignored when parsing.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::{SdrProblem, SdrSolution};
use crate::error::{Error, Result};
use crate::linalg::{C64, CMatrix};

pub fn write_complex(out: &mut String, name: &str, m: &CMatrix) {
    let _ = writeln!(out, "# {name}\n{} {} complex", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|c| format!("{:e} {:e}", m[(r, c)].re, m[(r, c)].im))
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

pub fn write_real(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "# {name}\n{} {} real", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:e}", m[(r, c)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

/// A parsed matrix; real matrices are returned with zero imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedMatrix {
    pub name: String,
    pub value: CMatrix,
}

pub fn parse(text: &str) -> Result<Vec<NamedMatrix>> {
    let bad = |msg: &str| Error::Config(format!("matrix dump: {msg}"));
    let mut lines = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('%'));
    let mut out = Vec::new();
    while let Some(head) = lines.next() {
        let name = head
            .strip_prefix("# ")
            .ok_or_else(|| bad("expected '# name'"))?
            .to_string();
        let dims: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("missing dimensions"))?
            .split_whitespace()
            .collect();
        let [rows, cols, kind] = dims[..] else {
            return Err(bad("dimension line needs rows, cols and kind"));
        };
        let rows: usize = rows.parse().map_err(|_| bad("bad row count"))?;
        let cols: usize = cols.parse().map_err(|_| bad("bad column count"))?;
        let width = match kind {
            "real" => 1,
            "complex" => 2,
            _ => return Err(bad("kind must be real or complex")),
        };
        let mut value = CMatrix::zeros(rows, cols);
        for r in 0..rows {
            let nums = lines
                .next()
                .ok_or_else(|| bad("truncated matrix"))?
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| bad("bad number")))
                .collect::<Result<Vec<f64>>>()?;
            if nums.len() != cols * width {
                return Err(bad("row length does not match header"));
            }
            for c in 0..cols {
                value[(r, c)] = if width == 1 {
                    C64::new(nums[c], 0.0)
                } else {
                    C64::new(nums[2 * c], nums[2 * c + 1])
                };
            }
        }
        out.push(NamedMatrix { name, value });
    }
    Ok(out)
}

/// Problem data followed by the solution matrices.
pub fn dump_sdr(problem: &SdrProblem, solution: &SdrSolution) -> String {
    let mut out = String::new();
    write_complex(&mut out, "R_xx", problem.r_xx());
    write_real(&mut out, &format!("mu = {:e}; B", problem.mu()), problem.b());
    for (k, r) in problem.constraints().iter().enumerate() {
        write_complex(&mut out, &format!("R_{k}"), r);
    }
    write_complex(&mut out, "W", &solution.w);
    write_real(&mut out, "W_tilde", &solution.w_tilde);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = CMatrix::from_fn(2, 3, |r, c| C64::new(r as f64 + 0.25, -(c as f64) / 3.0));
        let b = DMatrix::from_fn(2, 2, |r, c| (r * 2 + c) as f64 * 1e-9);
        let mut text = String::new();
        write_complex(&mut text, "m", &m);
        write_real(&mut text, "b", &b);
        assert!(text.starts_with("# m\n2 3 complex\n"));
        let parsed = parse(&format!("% note\n{text}")).unwrap();
        assert_eq!(parsed[0].name, "m");
        assert_eq!(parsed[0].value, m);
        assert_eq!(parsed[1].value, b.map(|x| C64::new(x, 0.0)));
        assert!(parse("# x\n1 1 real\n").is_err());
    }
}
