use crate::error::{ParseError, Pos};
use crate::model::{Block, Formula};

use super::FENCE;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Lit(bool),
    And,
    Or,
    Not,
    LParen,
    RParen,
    Eq,
}

fn lex_line(line: &str, base: usize, source: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    const OPERATOR_CHARS: &str = "=!&|<>^~+-*/%";
    let mut toks = Vec::new();
    let mut it = line.char_indices().peekable();
    while let Some(&(i, ch)) = it.peek() {
        if ch.is_whitespace() {
            it.next();
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let mut end = i;
            while let Some(&(j, c)) = it.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    end = j + c.len_utf8();
                    it.next();
                } else {
                    break;
                }
            }
            let tok = match &line[i..end] {
                "and" => Tok::And,
                "or" => Tok::Or,
                "not" => Tok::Not,
                "True" => Tok::Lit(true),
                "False" => Tok::Lit(false),
                word => Tok::Ident(word.to_string()),
            };
            toks.push((tok, base + i));
        } else if ch == '(' || ch == ')' {
            it.next();
            toks.push((if ch == '(' { Tok::LParen } else { Tok::RParen }, base + i));
        } else if OPERATOR_CHARS.contains(ch) {
            let mut end = i;
            while let Some(&(j, c)) = it.peek() {
                if OPERATOR_CHARS.contains(c) {
                    end = j + c.len_utf8();
                    it.next();
                } else {
                    break;
                }
            }
            let op = &line[i..end];
            if op != "=" {
                return Err(ParseError::UnknownOperator {
                    token: op.to_string(),
                    pos: Pos::of(source, base + i),
                });
            }
            toks.push((Tok::Eq, base + i));
        } else {
            return Err(ParseError::UnknownOperator {
                token: ch.to_string(),
                pos: Pos::of(source, base + i),
            });
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: &'a [(Tok, usize)],
    i: usize,
    end: usize,
    source: &'a str,
    refs: Vec<(String, usize)>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.i).map_or(self.end, |(_, o)| *o)
    }

    fn error(&self, message: &str) -> ParseError {
        ParseError::syntax(Pos::of(self.source, self.offset()), message)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut terms = vec![self.and()?];
        while self.peek() == Some(&Tok::Or) {
            self.i += 1;
            terms.push(self.and()?);
        }
        Ok(Formula::or(terms))
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut terms = vec![self.not()?];
        while self.peek() == Some(&Tok::And) {
            self.i += 1;
            terms.push(self.not()?);
        }
        Ok(Formula::and(terms))
    }

    fn not(&mut self) -> Result<Formula, ParseError> {
        if self.peek() == Some(&Tok::Not) {
            self.i += 1;
            return Ok(Formula::negate(self.not()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        let Some((tok, off)) = self.toks.get(self.i).cloned() else {
            return Err(self.error("unexpected end of statement"));
        };
        self.i += 1;
        match tok {
            Tok::Ident(name) => {
                self.refs.push((name.clone(), off));
                Ok(Formula::Var(name))
            }
            Tok::Lit(b) => Ok(Formula::Const(b)),
            Tok::LParen => {
                let inner = self.or()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.error("expected `)`"));
                }
                self.i += 1;
                Ok(inner)
            }
            _ => {
                self.i -= 1;
                Err(self.error("expected a variable, literal or `(`"))
            }
        }
    }
}

/// A formula with the variable references it makes and their absolute offsets.
pub(super) type Statement = (Formula, Vec<(String, usize)>);

/// Parses newline-separated statements.
pub(super) fn parse_statements(text: &str, base: usize, source: &str) -> Result<Vec<Statement>, ParseError> {
    let mut out = Vec::new();
    let mut line_start = 0;
    for line in text.split_inclusive('\n') {
        let offset = base + line_start;
        line_start += line.len();
        let code = line.split('#').next().unwrap_or("");
        let toks = lex_line(code, offset, source)?;
        if toks.is_empty() {
            continue;
        }
        let mut p = Parser {
            toks: &toks,
            i: 0,
            end: offset + code.trim_end().len(),
            source,
            refs: Vec::new(),
        };
        let formula = match (&toks[0].0, toks.get(1).map(|t| &t.0)) {
            (Tok::Ident(lhs), Some(Tok::Eq)) => {
                p.refs.push((lhs.clone(), toks[0].1));
                p.i = 2;
                Formula::iff(lhs.clone(), p.or()?)
            }
            _ => p.or()?,
        };
        if p.i < toks.len() {
            return Err(p.error("unexpected token"));
        }
        out.push((formula, p.refs));
    }
    Ok(out)
}

/// Parses the statements of a code block. `source` is the document the block came from.
pub fn parse_code(block: &Block, source: &str) -> Result<Vec<Formula>, ParseError> {
    let tag = super::fence_tag_len(&block.payload);
    let base = block.span.start + FENCE.len() + tag;
    Ok(parse_statements(&block.payload[tag..], base, source)?
        .into_iter()
        .map(|(f, _)| f)
        .collect())
}
