//! Tiny arithmetic evaluator behind `basic_calculator`: `+ - * /`, unary
//! minus, parentheses, decimal literals.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CalcError {
    #[error("unexpected character '{0}' at position {1}")]
    UnexpectedChar(char, usize),
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("expected ')' at position {0}")]
    MissingParen(usize),
    #[error("trailing input at position {0}")]
    TrailingInput(usize),
    #[error("division by zero")]
    DivisionByZero,
    #[error("malformed number at position {0}")]
    BadNumber(usize),
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(input: &'a str) -> Self {
        Self {
            bytes: input.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<f64, CalcError> {
        let mut value = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    value += self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    value -= self.term()?;
                }
                _ => return Ok(value),
            }
        }
    }

    fn term(&mut self) -> Result<f64, CalcError> {
        let mut value = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    value *= self.factor()?;
                }
                Some(b'/') => {
                    self.pos += 1;
                    let divisor = self.factor()?;
                    if divisor == 0.0 {
                        return Err(CalcError::DivisionByZero);
                    }
                    value /= divisor;
                }
                _ => return Ok(value),
            }
        }
    }

    fn factor(&mut self) -> Result<f64, CalcError> {
        match self.peek() {
            None => Err(CalcError::UnexpectedEnd),
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.factor()?)
            }
            Some(b'(') => {
                self.pos += 1;
                let value = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(CalcError::MissingParen(self.pos));
                }
                self.pos += 1;
                Ok(value)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) => Err(CalcError::UnexpectedChar(c as char, self.pos)),
        }
    }

    fn number(&mut self) -> Result<f64, CalcError> {
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .map_or(false, |c| c.is_ascii_digit() || *c == b'.')
        {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or(CalcError::BadNumber(start))
    }
}

pub fn evaluate_expression(input: &str) -> Result<f64, CalcError> {
    let mut parser = Parser::new(input);
    let value = parser.expr()?;
    if parser.peek().is_some() {
        return Err(CalcError::TrailingInput(parser.pos));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basics() {
        assert_eq!(evaluate_expression("(3+5)/2").unwrap(), 4.0);
        assert_eq!(evaluate_expression("2 + 3 * 4").unwrap(), 14.0);
        assert_eq!(evaluate_expression("-(2 + 3) * 2").unwrap(), -10.0);
        assert_eq!(evaluate_expression("10 / 4").unwrap(), 2.5);
        assert_eq!(evaluate_expression("0.5 * 8").unwrap(), 4.0);
    }

    #[test]
    fn errors() {
        assert_eq!(evaluate_expression("1/0"), Err(CalcError::DivisionByZero));
        assert!(matches!(
            evaluate_expression("2 +"),
            Err(CalcError::UnexpectedEnd)
        ));
        assert!(matches!(
            evaluate_expression("(1+2"),
            Err(CalcError::MissingParen(_))
        ));
        assert!(matches!(
            evaluate_expression("1 2"),
            Err(CalcError::TrailingInput(_))
        ));
        assert!(matches!(
            evaluate_expression("abc"),
            Err(CalcError::UnexpectedChar('a', 0))
        ));
        assert!(matches!(
            evaluate_expression("1..2"),
            Err(CalcError::BadNumber(_))
        ));
    }
}
