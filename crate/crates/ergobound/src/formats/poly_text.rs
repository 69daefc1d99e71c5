//! Polynomial text form: a header `dim d`, then one term per line as
//! `coefficient e1 … ed`. Blank lines and lines starting with `#` are
//! ignored. Coefficients carry 17 significant digits, so reading a written
//! polynomial gives back the same bits.

use ergobound_core::Polynomial;

use super::{fmt17, parse_err, FormatError};

pub fn write_polynomial(p: &Polynomial) -> String {
    let mut out = format!("dim {}\n", p.dim());
    for (m, c) in p.terms() {
        out.push_str(&fmt17(c));
        for e in m.exponents() {
            out.push(' ');
            out.push_str(&e.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn read_polynomial(text: &str) -> Result<Polynomial, FormatError> {
    let mut dim = None;
    let mut terms = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let Some(d) = dim else {
            if fields.next() != Some("dim") {
                return Err(parse_err(i + 1, "expected header `dim d`"));
            }
            let d: usize = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| parse_err(i + 1, "bad dimension"))?;
            if d == 0 || fields.next().is_some() {
                return Err(parse_err(i + 1, "bad dimension"));
            }
            dim = Some(d);
            continue;
        };
        let c: f64 = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(i + 1, "bad coefficient"))?;
        if !c.is_finite() {
            return Err(parse_err(i + 1, "non-finite coefficient"));
        }
        let exps = fields.map(|s| s.parse::<u32>()).collect::<Result<Vec<_>, _>>();
        match exps {
            Ok(e) if e.len() == d => terms.push((c, e)),
            _ => return Err(parse_err(i + 1, format!("expected {} exponents", d))),
        }
    }
    let dim = dim.ok_or_else(|| parse_err(0, "missing `dim` header"))?;
    Polynomial::from_terms(dim, terms).map_err(|e| FormatError::Invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let p = Polynomial::from_terms(3, [(0.1, vec![1, 0, 2]), (-1.0 / 3.0, vec![0, 0, 0]), (1e-300, vec![4, 4, 4])])
            .unwrap();
        let text = write_polynomial(&p);
        assert!(text.starts_with("dim 3\n"));
        assert_eq!(read_polynomial(&text).unwrap(), p);
    }

    #[test]
    fn rejects_malformed() {
        assert!(read_polynomial("").is_err());
        assert!(read_polynomial("dim 2\n1.0 1\n").is_err());
        assert!(read_polynomial("1.0 1 1\n").is_err());
        assert!(read_polynomial("dim 2\nnan 1 1\n").is_err());
        assert_eq!(read_polynomial("# zero\ndim 2\n").unwrap(), Polynomial::zero(2));
    }
}
