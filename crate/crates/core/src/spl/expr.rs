//! Boolean feature expressions.
//!
//! Grammar (binary operators associate to the left, no precedence):
//!
//! ```text
//! expr := term (('&' | '|') term)*
//! term := '!' term | '(' expr ')' | name | 'true'
//! ```

use std::fmt;

use super::SplError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureExpr {
    True,
    Feature(String),
    Not(Box<FeatureExpr>),
    And(Box<FeatureExpr>, Box<FeatureExpr>),
    Or(Box<FeatureExpr>, Box<FeatureExpr>),
}

impl FeatureExpr {
    pub fn parse(text: &str) -> Result<Self, SplError> {
        let mut p = Parser {
            text,
            chars: text.char_indices().collect(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, selected: &impl Fn(&str) -> bool) -> bool {
        match self {
            FeatureExpr::True => true,
            FeatureExpr::Feature(f) => selected(f),
            FeatureExpr::Not(e) => !e.eval(selected),
            FeatureExpr::And(a, b) => a.eval(selected) && b.eval(selected),
            FeatureExpr::Or(a, b) => a.eval(selected) || b.eval(selected),
        }
    }

    /// Feature names mentioned in the expression, in first-occurrence order.
    pub fn features(&self) -> Vec<&str> {
        fn walk<'a>(e: &'a FeatureExpr, out: &mut Vec<&'a str>) {
            match e {
                FeatureExpr::True => {}
                FeatureExpr::Feature(f) => {
                    if !out.contains(&f.as_str()) {
                        out.push(f)
                    }
                }
                FeatureExpr::Not(e) => walk(e, out),
                FeatureExpr::And(a, b) | FeatureExpr::Or(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }
}

impl fmt::Display for FeatureExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureExpr::True => write!(f, "true"),
            FeatureExpr::Feature(n) => write!(f, "{n}"),
            FeatureExpr::Not(e) => write!(f, "!{e}"),
            FeatureExpr::And(a, b) => write!(f, "({a} & {b})"),
            FeatureExpr::Or(a, b) => write!(f, "({a} | {b})"),
        }
    }
}

struct Parser<'a> {
    text: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.')
}

impl Parser<'_> {
    fn error(&self, message: &str) -> SplError {
        SplError::Expr {
            expr: self.text.to_string(),
            position: self.chars.get(self.pos).map_or(self.text.len(), |c| c.0),
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.1.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|c| c.1)
    }

    fn expr(&mut self) -> Result<FeatureExpr, SplError> {
        let mut lhs = self.term()?;
        while let Some(op @ ('&' | '|')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '&' {
                FeatureExpr::And(Box::new(lhs), Box::new(rhs))
            } else {
                FeatureExpr::Or(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<FeatureExpr, SplError> {
        match self.peek() {
            Some('!') => {
                self.pos += 1;
                Ok(FeatureExpr::Not(Box::new(self.term()?)))
            }
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if is_name_char(c) => {
                let start = self.pos;
                while self.chars.get(self.pos).is_some_and(|c| is_name_char(c.1)) {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().map(|c| c.1).collect();
                Ok(if name == "true" {
                    FeatureExpr::True
                } else {
                    FeatureExpr::Feature(name)
                })
            }
            Some(_) => Err(self.error("expected `!`, `(`, a feature name or `true`")),
            None => Err(self.error("unexpected end of expression")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(text: &str, on: &[&str]) -> bool {
        FeatureExpr::parse(text).unwrap().eval(&|f| on.contains(&f))
    }

    #[test]
    fn parses_and_evaluates() {
        assert!(eval("true", &[]));
        assert!(eval("A & !B", &["A"]));
        assert!(!eval("A & !B", &["A", "B"]));
        assert!(eval("!(A | B)", &[]));
        // left associative: (A | B) & C
        assert!(eval("A | B & C", &["B", "C"]));
        assert!(!eval("A | B & C", &["C"]));
        assert!(!eval("A | B & C", &["A"]));
    }

    #[test]
    fn reports_errors_with_position() {
        match FeatureExpr::parse("A & ") {
            Err(SplError::Expr { position, .. }) => assert_eq!(position, 4),
            other => panic!("{other:?}"),
        }
        assert!(FeatureExpr::parse("(A | B").is_err());
        assert!(FeatureExpr::parse("A B").is_err());
        assert!(FeatureExpr::parse("").is_err());
    }

    #[test]
    fn display_round_trips() {
        let e = FeatureExpr::parse("!A & (B | true)").unwrap();
        assert_eq!(FeatureExpr::parse(&e.to_string()).unwrap(), e);
        assert_eq!(e.features(), vec!["A", "B"]);
    }
}
