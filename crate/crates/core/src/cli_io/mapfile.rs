//! Map files: JSON with a fixed key order and every real number written
//! with 17 significant digits, so that save -> load is bit-exact.
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "n": 2,
//!   "representation": "hermitian-basis",
//!   "matrix": [
//!     [1.0000000000000000e0, 0.0000000000000000e0, ...],
//!     ...
//!   ]
//! }
//! ```
//!
//! `"choi"` files store `[re, im]` pairs instead of reals.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde_json::Value;

use crate::superop::{ChoiMatrix, Superoperator};
use crate::{Error, Result, C64};

pub const FORMAT_VERSION: i64 = 1;

/// Hermiticity tolerance applied to Choi files.
pub const CHOI_HERMITIAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    HermitianBasis,
    Choi,
}

impl Representation {
    pub fn as_str(self) -> &'static str {
        match self {
            Representation::HermitianBasis => "hermitian-basis",
            Representation::Choi => "choi",
        }
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hermitian-basis" => Ok(Representation::HermitianBasis),
            "choi" => Ok(Representation::Choi),
            other => Err(Error::parse("representation", format!("unknown representation `{other}`"))),
        }
    }
}

/// 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_map_string(t: &Superoperator, representation: Representation) -> String {
    let n = t.dim();
    let d = n * n;
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"format_version\": {FORMAT_VERSION},");
    let _ = writeln!(out, "  \"n\": {n},");
    let _ = writeln!(out, "  \"representation\": \"{}\",", representation.as_str());
    out.push_str("  \"matrix\": [\n");
    let choi = match representation {
        Representation::Choi => Some(t.choi()),
        Representation::HermitianBasis => None,
    };
    for r in 0..d {
        let cells: Vec<String> = (0..d)
            .map(|c| match &choi {
                Some(ch) => {
                    let z = ch.matrix()[(r, c)];
                    format!("[{}, {}]", format_real(z.re), format_real(z.im))
                }
                None => format_real(t.matrix()[(r, c)]),
            })
            .collect();
        let sep = if r + 1 < d { "," } else { "" };
        let _ = writeln!(out, "    [{}]{sep}", cells.join(", "));
    }
    out.push_str("  ]\n}\n");
    out
}

pub fn save_map(t: &Superoperator, path: impl AsRef<Path>, representation: Representation) -> Result<()> {
    std::fs::write(path, to_map_string(t, representation))?;
    Ok(())
}

pub fn load_map(path: impl AsRef<Path>) -> Result<Superoperator> {
    let text = std::fs::read_to_string(path)?;
    parse_map(&text)
}

fn real_at(v: &Value, field: impl Fn() -> String) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::parse(field(), "expected a number"))
}

pub fn parse_map(text: &str) -> Result<Superoperator> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::parse("<document>", e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| Error::parse("<document>", "expected a JSON object"))?;
    let version = obj
        .get("format_version")
        .and_then(Value::as_i64)
        .ok_or_else(|| Error::parse("format_version", "missing or not an integer"))?;
    if version != FORMAT_VERSION {
        return Err(Error::parse("format_version", format!("unsupported version {version}")));
    }
    let n = obj
        .get("n")
        .and_then(Value::as_u64)
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::parse("n", "missing or not a positive integer"))? as usize;
    let representation: Representation = obj
        .get("representation")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::parse("representation", "missing or not a string"))?
        .parse()?;
    let rows = obj
        .get("matrix")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse("matrix", "missing or not an array"))?;
    let d = n * n;
    if rows.len() != d {
        return Err(Error::parse(
            "matrix",
            format!("dimension mismatch: expected {d} rows for n = {n}, found {}", rows.len()),
        ));
    }
    let mut cells = Vec::with_capacity(d);
    for (r, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::parse(format!("matrix[{r}]"), "expected an array"))?;
        if row.len() != d {
            return Err(Error::parse(
                format!("matrix[{r}]"),
                format!("dimension mismatch: expected {d} columns, found {}", row.len()),
            ));
        }
        cells.push(row);
    }
    match representation {
        Representation::HermitianBasis => {
            let mut m = DMatrix::zeros(d, d);
            for (r, row) in cells.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    m[(r, c)] = real_at(v, || format!("matrix[{r}][{c}]"))?;
                }
            }
            Superoperator::new(n, m)
        }
        Representation::Choi => {
            let mut m = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
            for (r, row) in cells.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    let field = || format!("matrix[{r}][{c}]");
                    let pair = v
                        .as_array()
                        .filter(|p| p.len() == 2)
                        .ok_or_else(|| Error::parse(field(), "expected [re, im]"))?;
                    m[(r, c)] = C64::new(real_at(&pair[0], field)?, real_at(&pair[1], field)?);
                }
            }
            let choi = ChoiMatrix::new(n, m, CHOI_HERMITIAN_TOL).map_err(|e| Error::parse("matrix", e.to_string()))?;
            Ok(choi.to_superoperator())
        }
    }
}
