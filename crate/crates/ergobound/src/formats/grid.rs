//! Region grid text format.
//!
//! ```text
//! ergobound-grid 1
//! dim 3
//! lo -25 -25 0
//! hi 25 25 60
//! resolution 121 121 121
//! threshold 3000
//! bound 595152.18...
//! certificate <hex sha-256 of U and V>
//! members 10857
//! member_fraction 0.0061...
//! min 21.36...
//! values 1771561
//! <one value of g = U − Φ − f·∇V per line, x fastest, then y, then z>
//! ```
//!
//! Header numbers carry 17 significant digits, node values 9. The mask is
//! `g ≤ threshold`.

use std::fmt::Write;

use ergobound_core::certify::{GridBox, GridShape, RegionGrid};

use super::{fmt17, fmt9, parse_err, FormatError};

pub const GRID_MAGIC: &str = "ergobound-grid 1";

pub fn write_grid(grid: &RegionGrid) -> String {
    let d = &grid.shape.domain;
    let join = |v: &[f64]| v.iter().map(|x| fmt17(*x)).collect::<Vec<_>>().join(" ");
    let mut out = String::with_capacity(16 * grid.values.len() + 512);
    writeln!(out, "{}", GRID_MAGIC).unwrap();
    writeln!(out, "dim {}", d.dim()).unwrap();
    writeln!(out, "lo {}", join(&d.lo)).unwrap();
    writeln!(out, "hi {}", join(&d.hi)).unwrap();
    let res: Vec<String> = grid.shape.resolution.iter().map(|n| n.to_string()).collect();
    writeln!(out, "resolution {}", res.join(" ")).unwrap();
    writeln!(out, "threshold {}", fmt17(grid.threshold)).unwrap();
    writeln!(out, "bound {}", fmt17(grid.bound)).unwrap();
    writeln!(out, "certificate {}", grid.certificate).unwrap();
    writeln!(out, "members {}", grid.member_count()).unwrap();
    writeln!(out, "member_fraction {}", fmt17(grid.member_fraction())).unwrap();
    writeln!(out, "min {}", fmt17(grid.min_value())).unwrap();
    writeln!(out, "values {}", grid.values.len()).unwrap();
    for v in &grid.values {
        out.push_str(&fmt9(*v));
        out.push('\n');
    }
    out
}

/// Contents of a grid file; [`GridFile::into_region`] rebuilds the mask.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFile {
    pub shape: GridShape,
    pub threshold: f64,
    pub bound: f64,
    pub certificate: String,
    pub values: Vec<f64>,
}

impl GridFile {
    pub fn into_region(self) -> Result<RegionGrid, FormatError> {
        RegionGrid::from_values(self.shape, self.values, self.threshold, self.bound, self.certificate)
            .map_err(|e| FormatError::Invalid(e.to_string()))
    }
}

pub fn read_grid(text: &str) -> Result<GridFile, FormatError> {
    let mut lines = text.lines().enumerate();
    let mut field = |key: &str| -> Result<(usize, Vec<String>), FormatError> {
        let (i, l) = lines.next().ok_or_else(|| parse_err(0, format!("missing `{}`", key)))?;
        let mut f = l.split_whitespace();
        if f.next() != Some(key) {
            return Err(parse_err(i + 1, format!("expected `{}`", key)));
        }
        Ok((i + 1, f.map(String::from).collect()))
    };
    let (ln, magic) = field("ergobound-grid")?;
    if magic != ["1"] {
        return Err(parse_err(ln, "unsupported grid version"));
    }
    let floats = |ln: usize, v: &[String]| -> Result<Vec<f64>, FormatError> {
        v.iter().map(|s| s.parse::<f64>().map_err(|_| parse_err(ln, "bad number"))).collect()
    };
    let (ln, dim) = field("dim")?;
    let d: usize = dim.first().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err(ln, "bad dimension"))?;
    let (ln, lo) = field("lo")?;
    let lo = floats(ln, &lo)?;
    let (ln, hi) = field("hi")?;
    let hi = floats(ln, &hi)?;
    let (ln, res) = field("resolution")?;
    let res: Vec<usize> = res.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(|_| parse_err(ln, "bad resolution"))?;
    if lo.len() != d || hi.len() != d || res.len() != d {
        return Err(parse_err(ln, "header lengths disagree with `dim`"));
    }
    let (ln, t) = field("threshold")?;
    let threshold = *floats(ln, &t)?.first().ok_or_else(|| parse_err(ln, "missing threshold"))?;
    let (ln, b) = field("bound")?;
    let bound = *floats(ln, &b)?.first().ok_or_else(|| parse_err(ln, "missing bound"))?;
    let (_, cert) = field("certificate")?;
    let certificate = cert.first().cloned().unwrap_or_default();
    field("members")?;
    field("member_fraction")?;
    field("min")?;
    let (ln, n) = field("values")?;
    let n: usize = n.first().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err(ln, "bad value count"))?;
    let domain = GridBox::new(lo, hi).map_err(|e| FormatError::Invalid(e.to_string()))?;
    let shape = GridShape::new(domain, res).map_err(|e| FormatError::Invalid(e.to_string()))?;
    if n != shape.len() {
        return Err(parse_err(ln, "value count differs from the resolution"));
    }
    let mut values = Vec::with_capacity(n);
    for (i, l) in lines {
        let l = l.trim();
        if l.is_empty() {
            continue;
        }
        values.push(l.parse::<f64>().map_err(|_| parse_err(i + 1, "bad value"))?);
    }
    if values.len() != n {
        return Err(parse_err(0, format!("expected {} values, found {}", n, values.len())));
    }
    Ok(GridFile {
        shape,
        threshold,
        bound,
        certificate,
        values,
    })
}
