use std::collections::BTreeMap;
use std::fmt;

use super::{InnerFormula, OuterFormula, RobotGroup, TempCountProp};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken { expected: String, found: String },
    UnexpectedEnd { expected: String },
    UnclosedBracket(char),
    UnmatchedBracket(char),
    NegativeCount,
    CountOverflow,
    UnknownGroup(String),
    EmptyGroup(String),
}

/// Formula syntax error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::UnexpectedToken { expected, found } => {
                write!(f, "expected {expected}, found {found}")
            }
            ParseErrorKind::UnexpectedEnd { expected } => {
                write!(f, "unexpected end of input, expected {expected}")
            }
            ParseErrorKind::UnclosedBracket(c) => write!(f, "unclosed {c:?}"),
            ParseErrorKind::UnmatchedBracket(c) => write!(f, "unmatched {c:?}"),
            ParseErrorKind::NegativeCount => f.write_str("robot count must be nonnegative"),
            ParseErrorKind::CountOverflow => f.write_str("robot count is too large"),
            ParseErrorKind::UnknownGroup(g) => write!(f, "unknown group @{g}"),
            ParseErrorKind::EmptyGroup(g) => write!(f, "group @{g} has no robots"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(String),
    True,
    False,
    Not,
    And,
    Or,
    Next,
    Until,
    Release,
    Eventually,
    Always,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    At,
    Minus,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(s) => format!("number `{s}`"),
            Tok::True => "`true`".into(),
            Tok::False => "`false`".into(),
            Tok::Not => "`!`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Next => "`X`".into(),
            Tok::Until => "`U`".into(),
            Tok::Release => "`R`".into(),
            Tok::Eventually => "`F`".into(),
            Tok::Always => "`G`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::At => "`@`".into(),
            Tok::Minus => "`-`".into(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<(Vec<(Tok, Pos)>, Pos), ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1;
    let mut column = 1;
    let mut stack: Vec<(char, Pos)> = Vec::new();
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, column };
        if c == '\n' {
            chars.next();
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            column += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_ascii_alphanumeric() || d == '_' {
                    word.push(d);
                    chars.next();
                    column += 1;
                } else {
                    break;
                }
            }
            let tok = match word.as_str() {
                "true" => Tok::True,
                "false" => Tok::False,
                "X" => Tok::Next,
                "U" => Tok::Until,
                "R" => Tok::Release,
                "F" => Tok::Eventually,
                "G" => Tok::Always,
                _ => Tok::Ident(word),
            };
            out.push((tok, pos));
            continue;
        }
        if c.is_ascii_digit() {
            let mut num = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_ascii_digit() {
                    num.push(d);
                    chars.next();
                    column += 1;
                } else {
                    break;
                }
            }
            out.push((Tok::Int(num), pos));
            continue;
        }
        let tok = match c {
            '!' => Tok::Not,
            '&' => Tok::And,
            '|' => Tok::Or,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            '@' => Tok::At,
            '-' => Tok::Minus,
            other => {
                return Err(ParseError {
                    kind: ParseErrorKind::UnexpectedChar(other),
                    line,
                    column,
                })
            }
        };
        match tok {
            Tok::LParen => stack.push(('(', pos)),
            Tok::LBracket => stack.push(('[', pos)),
            Tok::RParen | Tok::RBracket => {
                let want = if tok == Tok::RParen { '(' } else { '[' };
                match stack.pop() {
                    Some((open, _)) if open == want => {}
                    Some((open, open_pos)) => {
                        return Err(ParseError {
                            kind: ParseErrorKind::UnclosedBracket(open),
                            line: open_pos.line,
                            column: open_pos.column,
                        })
                    }
                    None => {
                        return Err(ParseError {
                            kind: ParseErrorKind::UnmatchedBracket(c),
                            line,
                            column,
                        })
                    }
                }
            }
            _ => {}
        }
        out.push((tok, pos));
        chars.next();
        column += 1;
    }
    if let Some((open, pos)) = stack.pop() {
        return Err(ParseError {
            kind: ParseErrorKind::UnclosedBracket(open),
            line: pos.line,
            column: pos.column,
        });
    }
    Ok((out, Pos { line, column }))
}

struct Parser<'g> {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    end: Pos,
    groups: &'g BTreeMap<String, Vec<usize>>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.at).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        let p = self.pos();
        ParseError {
            kind,
            line: p.line,
            column: p.column,
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.err(ParseErrorKind::UnexpectedToken {
                expected: expected.to_string(),
                found: t.describe(),
            }),
            None => self.err(ParseErrorKind::UnexpectedEnd {
                expected: expected.to_string(),
            }),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn outer(&mut self) -> Result<OuterFormula, ParseError> {
        let lhs = self.outer_or()?;
        match self.peek() {
            Some(Tok::Until) => {
                self.at += 1;
                let rhs = self.outer()?;
                Ok(OuterFormula::Until(Box::new(lhs), Box::new(rhs)))
            }
            Some(Tok::Release) => {
                self.at += 1;
                let rhs = self.outer()?;
                Ok(OuterFormula::Release(Box::new(lhs), Box::new(rhs)))
            }
            _ => Ok(lhs),
        }
    }

    fn outer_or(&mut self) -> Result<OuterFormula, ParseError> {
        let mut items = vec![self.outer_and()?];
        while self.peek() == Some(&Tok::Or) {
            self.at += 1;
            items.push(self.outer_and()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            OuterFormula::Or(items)
        })
    }

    fn outer_and(&mut self) -> Result<OuterFormula, ParseError> {
        let mut items = vec![self.outer_unary()?];
        while self.peek() == Some(&Tok::And) {
            self.at += 1;
            items.push(self.outer_unary()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            OuterFormula::And(items)
        })
    }

    fn outer_unary(&mut self) -> Result<OuterFormula, ParseError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.at += 1;
                Ok(OuterFormula::Not(Box::new(self.outer_unary()?)))
            }
            Some(Tok::Next) => {
                self.at += 1;
                Ok(OuterFormula::Next(Box::new(self.outer_unary()?)))
            }
            Some(Tok::Eventually) => {
                self.at += 1;
                Ok(OuterFormula::Eventually(Box::new(self.outer_unary()?)))
            }
            Some(Tok::Always) => {
                self.at += 1;
                Ok(OuterFormula::Always(Box::new(self.outer_unary()?)))
            }
            Some(Tok::True) => {
                self.at += 1;
                Ok(OuterFormula::True)
            }
            Some(Tok::False) => {
                self.at += 1;
                Ok(OuterFormula::False)
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let f = self.outer()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Some(Tok::LBracket) => {
                self.at += 1;
                let tcp = self.tcp_body()?;
                self.expect(Tok::RBracket)?;
                Ok(OuterFormula::Tcp(tcp))
            }
            _ => Err(self.unexpected("a formula")),
        }
    }

    fn tcp_body(&mut self) -> Result<TempCountProp, ParseError> {
        let inner = self.inner()?;
        self.expect(Tok::Comma)?;
        let mut group = None;
        if self.peek() == Some(&Tok::At) {
            self.at += 1;
            let name = match self.peek() {
                Some(Tok::Ident(n)) => n.clone(),
                _ => return Err(self.unexpected("a group name")),
            };
            let robots = match self.groups.get(&name) {
                Some(r) => r.clone(),
                None => return Err(self.err(ParseErrorKind::UnknownGroup(name))),
            };
            if robots.is_empty() {
                return Err(self.err(ParseErrorKind::EmptyGroup(name)));
            }
            self.at += 1;
            self.expect(Tok::Comma)?;
            group = Some(RobotGroup { name, robots });
        }
        let m = match self.peek() {
            Some(Tok::Int(s)) => {
                let m = s
                    .parse::<u32>()
                    .map_err(|_| self.err(ParseErrorKind::CountOverflow))?;
                self.at += 1;
                m
            }
            Some(Tok::Minus) => return Err(self.err(ParseErrorKind::NegativeCount)),
            _ => return Err(self.unexpected("a robot count")),
        };
        Ok(TempCountProp { inner, group, m })
    }

    fn inner(&mut self) -> Result<InnerFormula, ParseError> {
        let lhs = self.inner_or()?;
        match self.peek() {
            Some(Tok::Until) => {
                self.at += 1;
                let rhs = self.inner()?;
                Ok(InnerFormula::Until(Box::new(lhs), Box::new(rhs)))
            }
            Some(Tok::Release) => {
                self.at += 1;
                let rhs = self.inner()?;
                Ok(InnerFormula::Release(Box::new(lhs), Box::new(rhs)))
            }
            _ => Ok(lhs),
        }
    }

    fn inner_or(&mut self) -> Result<InnerFormula, ParseError> {
        let mut items = vec![self.inner_and()?];
        while self.peek() == Some(&Tok::Or) {
            self.at += 1;
            items.push(self.inner_and()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            InnerFormula::Or(items)
        })
    }

    fn inner_and(&mut self) -> Result<InnerFormula, ParseError> {
        let mut items = vec![self.inner_unary()?];
        while self.peek() == Some(&Tok::And) {
            self.at += 1;
            items.push(self.inner_unary()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            InnerFormula::And(items)
        })
    }

    fn inner_unary(&mut self) -> Result<InnerFormula, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.at += 1;
                Ok(InnerFormula::Not(Box::new(self.inner_unary()?)))
            }
            Some(Tok::Next) => {
                self.at += 1;
                Ok(InnerFormula::Next(Box::new(self.inner_unary()?)))
            }
            Some(Tok::Eventually) => {
                self.at += 1;
                Ok(InnerFormula::Eventually(Box::new(self.inner_unary()?)))
            }
            Some(Tok::Always) => {
                self.at += 1;
                Ok(InnerFormula::Always(Box::new(self.inner_unary()?)))
            }
            Some(Tok::True) => {
                self.at += 1;
                Ok(InnerFormula::True)
            }
            Some(Tok::False) => {
                self.at += 1;
                Ok(InnerFormula::False)
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                Ok(InnerFormula::Atom(name))
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let f = self.inner()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            _ => Err(self.unexpected("an inner formula")),
        }
    }
}

/// Parses a formula that uses no robot groups.
///
/// ```
/// use ctlsynth::formula::{parse_formula, InnerFormula, OuterFormula};
///
/// let f = parse_formula("[F a, 5]").unwrap();
/// assert_eq!(f, OuterFormula::tcp(InnerFormula::atom("a").eventually(), 5));
/// ```
pub fn parse_formula(text: &str) -> Result<OuterFormula, ParseError> {
    parse_formula_with_groups(text, &BTreeMap::new())
}

/// Parses a formula, resolving `@name` references against `groups`.
pub fn parse_formula_with_groups(
    text: &str,
    groups: &BTreeMap<String, Vec<usize>>,
) -> Result<OuterFormula, ParseError> {
    let (toks, end) = lex(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        end,
        groups,
    };
    let f = p.outer()?;
    if p.at < p.toks.len() {
        return Err(p.unexpected("end of input"));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::InnerFormula as I;
    use crate::formula::OuterFormula as O;

    fn a(s: &str) -> I {
        I::atom(s)
    }

    #[test]
    fn eventually_inside_tcp() {
        assert_eq!(
            parse_formula("[F a, 5]").unwrap(),
            O::tcp(a("a").eventually(), 5)
        );
    }

    #[test]
    fn literal_true() {
        assert_eq!(parse_formula("true").unwrap(), O::True);
        assert_eq!(parse_formula("  false ").unwrap(), O::False);
    }

    #[test]
    fn bridge_clause() {
        let f = parse_formula("G !([D,1]) & (!([B,1]) U ([B1,1] & [B2,1]))").unwrap();
        let expected = O::And(vec![
            O::tcp(a("D"), 1).not().always(),
            O::tcp(a("B"), 1)
                .not()
                .until(O::And(vec![O::tcp(a("B1"), 1), O::tcp(a("B2"), 1)])),
        ]);
        assert_eq!(f, expected);
    }

    #[test]
    fn precedence_and_associativity() {
        // & binds tighter than |, which binds tighter than U; U is right associative
        let f = parse_formula("[a,1] | [b,1] & [c,1] U [d,1] U [e,1]").unwrap();
        let expected = O::Or(vec![
            O::tcp(a("a"), 1),
            O::And(vec![O::tcp(a("b"), 1), O::tcp(a("c"), 1)]),
        ])
        .until(O::tcp(a("d"), 1).until(O::tcp(a("e"), 1)));
        assert_eq!(f, expected);
    }

    #[test]
    fn inner_operators() {
        let f = parse_formula("[G F a & !b R X c, 2]").unwrap();
        let inner = I::And(vec![a("a").eventually().always(), a("b").not()]).release(a("c").next());
        assert_eq!(f, O::tcp(inner, 2));
    }

    #[test]
    fn groups_resolve() {
        let mut groups = BTreeMap::new();
        groups.insert("cams".to_string(), vec![0, 2]);
        let f = parse_formula_with_groups("[a, @cams, 1]", &groups).unwrap();
        match f {
            O::Tcp(t) => {
                assert_eq!(t.group.unwrap().robots, vec![0, 2]);
                assert_eq!(t.m, 1);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn error_positions() {
        let e = parse_formula("[a, -1]").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::NegativeCount);
        assert_eq!((e.line, e.column), (1, 5));

        let e = parse_formula("[a, 1] &\n  [b, @g, 1]").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownGroup("g".into()));
        assert_eq!((e.line, e.column), (2, 8));

        let e = parse_formula("([a, 1]").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnclosedBracket('('));
        assert_eq!((e.line, e.column), (1, 1));

        let e = parse_formula("[a, 1]]").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnmatchedBracket(']'));

        let e = parse_formula("[a $ b, 1]").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnexpectedChar('$'));
        assert_eq!((e.line, e.column), (1, 4));

        assert!(parse_formula("[a, 1] [b, 1]").is_err());
        assert!(parse_formula("").is_err());
        assert!(parse_formula("[a]").is_err());
        assert!(parse_formula("[a, 99999999999]").is_err());
    }

    #[test]
    fn display_roundtrip() {
        for text in [
            "G !([D,1]) & (!([B,1]) U ([B1,1] & [B2,1]))",
            "[a,1] | [b,1] & [c,1] U [d,1] U [e,1]",
            "X F ([G F a & !b R X c, 2] | true) R false",
            "((([a,1] & [b,2]) & [c,3]) | !!X [true, 0])",
        ] {
            let f = parse_formula(text).unwrap();
            let again = parse_formula(&f.to_string()).unwrap();
            assert_eq!(f, again, "{text}");
        }
    }
}
