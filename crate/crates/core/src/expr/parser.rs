use thiserror::Error;

use super::node::{build, Expr};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("variable x{index} at offset {position} is out of range for dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize, position: usize },
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
    param: Option<&'a str>,
}

pub(super) fn parse(text: &str, dim: usize, param: Option<&str>) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, dim, param };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { position: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else if self.pos >= self.src.len() {
            Err(self.error(format!("expected `{}` but input ended", c as char)))
        } else {
            Err(self.error(format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(build::neg(self.term()?));
            } else {
                break;
            }
        }
        Ok(build::sum(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.factor()?;
                acc = build::product(vec![acc, rhs]);
            } else if self.eat(b'/') {
                let rhs = self.factor()?;
                acc = build::quotient(acc, rhs);
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(build::neg(self.factor()?));
        }
        let base = self.base()?;
        if self.eat(b'^') {
            let negative = self.eat(b'-');
            self.skip_ws();
            let start = self.pos;
            let digits = self.digits();
            if digits.is_empty() {
                return Err(self.error("expected integer exponent"));
            }
            let k: i32 = digits
                .parse()
                .map_err(|_| ParseError::Syntax { position: start, message: "exponent too large".into() })?;
            return Ok(build::pow(base, if negative { -k } else { k }));
        }
        Ok(base)
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap()
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let Some(c) = self.peek() else {
            return Err(self.error("unexpected end of input"));
        };
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(b')')?;
            return Ok(e);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() {
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                self.pos += 1;
            }
            let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            return self.word(word, start);
        }
        Err(self.error(format!("unexpected `{}`", c as char)))
    }

    fn word(&mut self, word: &str, start: usize) -> Result<Expr, ParseError> {
        if self.param == Some(word) {
            return Ok(build::var(0));
        }
        match word {
            "sin" | "cos" | "exp" => {
                self.expect(b'(')?;
                let arg = self.expr()?;
                self.expect(b')')?;
                Ok(match word {
                    "sin" => build::sin(arg),
                    "cos" => build::cos(arg),
                    _ => build::exp(arg),
                })
            }
            _ if word.len() > 1 && word.starts_with('x') && word[1..].bytes().all(|b| b.is_ascii_digit()) => {
                let index: usize = word[1..].parse().map_err(|_| ParseError::Syntax {
                    position: start,
                    message: "variable index too large".into(),
                })?;
                if index == 0 || index > self.dim {
                    return Err(ParseError::VariableOutOfRange { index, dim: self.dim, position: start });
                }
                Ok(build::var(index - 1))
            }
            _ => Err(ParseError::Syntax { position: start, message: format!("unknown identifier `{word}`") }),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let int_part = self.digits();
        let mut is_real = false;
        if self.src.get(self.pos) == Some(&b'.') {
            is_real = true;
            self.pos += 1;
            let frac = self.digits();
            if int_part.is_empty() && frac.is_empty() {
                return Err(ParseError::Syntax { position: start, message: "malformed number".into() });
            }
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if self.digits().is_empty() {
                self.pos = save;
            } else {
                is_real = true;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if !is_real {
            if let Ok(k) = text.parse::<i64>() {
                return Ok(build::int(k));
            }
        }
        text.parse::<f64>()
            .map(build::real)
            .map_err(|_| ParseError::Syntax { position: start, message: format!("malformed number `{text}`") })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err_pos(text: &str, dim: usize) -> usize {
        match parse(text, dim, None).unwrap_err() {
            ParseError::Syntax { position, .. } => position,
            ParseError::VariableOutOfRange { position, .. } => position,
        }
    }

    #[test]
    fn reports_positions() {
        assert_eq!(err_pos("x1 +", 1), 4);
        assert_eq!(err_pos("x1 * (x2", 2), 8);
        assert_eq!(err_pos("1 + x3", 2), 4);
        assert_eq!(err_pos("foo(x1)", 1), 0);
        assert_eq!(err_pos("x1 x2", 2), 3);
    }

    #[test]
    fn variable_range() {
        assert!(matches!(
            parse("x0", 3, None),
            Err(ParseError::VariableOutOfRange { index: 0, dim: 3, .. })
        ));
        assert!(matches!(
            parse("x4", 3, None),
            Err(ParseError::VariableOutOfRange { index: 4, dim: 3, .. })
        ));
    }

    #[test]
    fn numbers() {
        assert!(parse("1.5e-3 + .5 + 2.", 1, None).is_ok());
        assert!(parse(".", 1, None).is_err());
        assert!(parse("x1^", 1, None).is_err());
    }
}
