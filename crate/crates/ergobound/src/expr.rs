//! Polynomial expressions such as `sigma*(y - x)` or `(z - 27)^2 / 4`.
//!
//! Identifiers resolve to variables first and named constants second.
//! Division is allowed only by expressions that evaluate to a nonzero
//! constant, and exponents must be non-negative integer literals.

use ergobound_core::Polynomial;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("unexpected character {ch:?} at offset {at}")]
    UnexpectedChar { ch: char, at: usize },
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("expected {expected} at offset {at}")]
    Expected { expected: &'static str, at: usize },
    #[error("unknown identifier {0:?}")]
    UnknownIdentifier(String),
    #[error("division by a non-constant or zero expression at offset {0}")]
    BadDivision(usize),
    #[error("invalid number {0:?}")]
    BadNumber(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>, ExprError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (at, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() {
                let ch = chars[i].1;
                let exp_sign = (ch == '+' || ch == '-') && i > start && matches!(chars[i - 1].1, 'e' | 'E');
                if ch.is_ascii_digit() || ch == '.' || ch == 'e' || ch == 'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            let text: String = chars[start..i].iter().map(|p| p.1).collect();
            let v = text.parse::<f64>().map_err(|_| ExprError::BadNumber(text.clone()))?;
            out.push((at, Token::Num(v)));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            out.push((at, Token::Ident(chars[start..i].iter().map(|p| p.1).collect())));
        } else if c == '*' && i + 1 < chars.len() && chars[i + 1].1 == '*' {
            out.push((at, Token::Op('^')));
            i += 2;
        } else if "+-*/^()".contains(c) {
            out.push((at, Token::Op(c)));
            i += 1;
        } else {
            return Err(ExprError::UnexpectedChar { ch: c, at });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    variables: &'a [String],
    constants: &'a [(String, f64)],
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|t| &t.1)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn dim(&self) -> usize {
        self.variables.len()
    }

    fn expr(&mut self) -> Result<Polynomial, ExprError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, ExprError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat('/') {
                let at = self.offset();
                let d = self.unary()?;
                let c = d.constant_term();
                if d.degree() > 0 || c == 0.0 {
                    return Err(ExprError::BadDivision(at));
                }
                acc = acc.scale(1.0 / c);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Polynomial, ExprError> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Polynomial, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            let at = self.offset();
            match self.peek() {
                Some(&Token::Num(e)) if e >= 0.0 && e.fract() == 0.0 && e <= 64.0 => {
                    self.pos += 1;
                    Ok(base.powi(e as u32))
                }
                _ => Err(ExprError::Expected {
                    expected: "a non-negative integer exponent",
                    at,
                }),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Polynomial, ExprError> {
        let at = self.offset();
        let Some(tok) = self.peek().cloned() else {
            return Err(ExprError::UnexpectedEnd);
        };
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Polynomial::constant(self.dim(), v)),
            Token::Ident(name) => {
                if let Some(i) = self.variables.iter().position(|v| *v == name) {
                    Ok(Polynomial::var(self.dim(), i))
                } else if let Some((_, v)) = self.constants.iter().find(|(n, _)| *n == name) {
                    Ok(Polynomial::constant(self.dim(), *v))
                } else {
                    Err(ExprError::UnknownIdentifier(name))
                }
            }
            Token::Op('(') => {
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(ExprError::Expected {
                        expected: "')'",
                        at: self.offset(),
                    });
                }
                Ok(inner)
            }
            Token::Op(_) => Err(ExprError::Expected {
                expected: "a number, name or '('",
                at,
            }),
        }
    }
}

/// Parses `src` as a polynomial in `variables`, substituting `constants`.
pub fn parse_polynomial(src: &str, variables: &[String], constants: &[(String, f64)]) -> Result<Polynomial, ExprError> {
    let tokens = tokenize(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        variables,
        constants,
        end: src.len(),
    };
    let out = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(ExprError::Expected {
            expected: "end of expression",
            at: p.offset(),
        });
    }
    Ok(out)
}

/// Evaluates a constant expression such as `8/3`.
pub fn parse_constant(src: &str, constants: &[(String, f64)]) -> Result<f64, ExprError> {
    let p = parse_polynomial(src, &[], constants)?;
    Ok(p.constant_term())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xyz() -> Vec<String> {
        ["x", "y", "z"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn lorenz_components() {
        let consts = vec![("sigma".to_string(), 10.0), ("beta".to_string(), 8.0 / 3.0)];
        let p = parse_polynomial("sigma*(y - x)", &xyz(), &consts).unwrap();
        assert_eq!(p.eval(&[1.0, 3.0, 0.0]).unwrap(), 20.0);
        let q = parse_polynomial("x*y - beta*z", &xyz(), &consts).unwrap();
        assert_eq!(q.eval(&[2.0, 3.0, 3.0]).unwrap(), 6.0 - 8.0);
        let r = parse_polynomial("-(z - 1)**2 / 4 + 1e-1", &xyz(), &[]).unwrap();
        assert!((r.eval(&[0.0, 0.0, 3.0]).unwrap() - (-1.0 + 0.1)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_polynomial("x / y", &xyz(), &[]), Err(ExprError::BadDivision(_))));
        assert!(matches!(parse_polynomial("w", &xyz(), &[]), Err(ExprError::UnknownIdentifier(_))));
        assert!(parse_polynomial("x^-1", &xyz(), &[]).is_err());
        assert!(parse_polynomial("x^1.5", &xyz(), &[]).is_err());
        assert!(parse_polynomial("(x + 1", &xyz(), &[]).is_err());
        assert!(parse_polynomial("x y", &xyz(), &[]).is_err());
        assert!(parse_polynomial("", &xyz(), &[]).is_err());
        assert!(parse_polynomial("x $ 1", &xyz(), &[]).is_err());
    }

    #[test]
    fn constants() {
        assert_eq!(parse_constant("8/3", &[]).unwrap(), 8.0 / 3.0);
        assert_eq!(parse_constant("2^10", &[]).unwrap(), 1024.0);
    }
}
