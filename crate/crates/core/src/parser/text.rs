use crate::error::{ParseError, Pos};
use crate::model::{Dependency, Formula};

use super::is_identifier;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantifierKind {
    ForAll,
    ForSome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Text(String),
    Item(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantifierTerm {
    pub kind: QuantifierKind,
    pub segments: Vec<Segment>,
}

impl QuantifierTerm {
    pub fn items(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Item(t) => Some(t.as_str()),
            Segment::Text(_) => None,
        })
    }
}

/// A quantifier inside a let clause, with the clause text around it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantifierSite {
    pub prefix: String,
    pub term: QuantifierTerm,
    pub suffix: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LetBinding {
    pub out_var: String,
    /// Whitespace-normalized clause, quantifier text included verbatim.
    pub clause: String,
    pub where_clauses: Vec<Dependency>,
    pub quantifier: Option<QuantifierSite>,
}

/// Collapses whitespace runs to single spaces and trims the ends.
pub fn normalize_clause(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Delim {
    Brace,
    Bracket,
}

/// Index just past the delimiter that closes the one opening at `open`.
/// `{{ }}` and `[[ ]]` nest within each other.
fn find_closing(s: &str, open: usize) -> Option<usize> {
    let mut stack = Vec::new();
    let mut i = open;
    while i < s.len() {
        let rest = &s[i..];
        if rest.starts_with("{{") {
            stack.push(Delim::Brace);
            i += 2;
        } else if rest.starts_with("[[") {
            stack.push(Delim::Bracket);
            i += 2;
        } else if rest.starts_with("}}") || rest.starts_with("]]") {
            let want = if rest.starts_with("}}") {
                Delim::Brace
            } else {
                Delim::Bracket
            };
            if stack.pop() != Some(want) {
                return None;
            }
            i += 2;
            if stack.is_empty() {
                return Some(i);
            }
        } else {
            i += rest.chars().next().map_or(1, char::len_utf8);
        }
    }
    None
}

struct Cursor<'a> {
    s: &'a str,
    i: usize,
    base: usize,
    source: &'a str,
}

impl<'a> Cursor<'a> {
    fn pos(&self) -> Pos {
        Pos::of(self.source, self.base + self.i)
    }

    fn skip_ws(&mut self) {
        let rest = &self.s[self.i..];
        self.i += rest.len() - rest.trim_start().len();
    }

    fn rest(&self) -> &'a str {
        &self.s[self.i..]
    }

    fn at_end(&self) -> bool {
        self.rest().trim().is_empty()
    }

    /// Consumes `kw` when it appears as a whole word.
    fn keyword(&mut self, kw: &str) -> bool {
        let rest = self.rest();
        if rest.starts_with(kw) && !rest[kw.len()..].starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_') {
            self.i += kw.len();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Option<&'a str> {
        let rest = self.rest();
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        let word = &rest[..len];
        if is_identifier(word) {
            self.i += len;
            Some(word)
        } else {
            None
        }
    }
}

/// Parses the interior of a `{{ let ... }}` term.
pub fn parse_let(term: &str) -> Result<LetBinding, ParseError> {
    parse_let_at(term, 0, term)
}

pub(super) fn parse_let_at(term: &str, base: usize, source: &str) -> Result<LetBinding, ParseError> {
    let mut c = Cursor {
        s: term,
        i: 0,
        base,
        source,
    };
    c.skip_ws();
    if !c.keyword("let") {
        return Err(ParseError::syntax(c.pos(), "expected `let`"));
    }
    c.skip_ws();
    let out_var = c.ident().ok_or_else(|| {
        let token = c.rest().split_whitespace().next().unwrap_or("").to_string();
        ParseError::BadIdentifier { token, pos: c.pos() }
    })?;
    c.skip_ws();
    if !c.rest().starts_with('=') {
        return Err(ParseError::syntax(c.pos(), "expected `=` after let variable"));
    }
    c.i += 1;
    c.skip_ws();
    if !c.rest().starts_with("[[") {
        return Err(ParseError::MissingClauseBrackets(c.pos()));
    }
    let open = c.i;
    let close = find_closing(term, open).ok_or_else(|| ParseError::MissingClauseBrackets(c.pos()))?;
    let raw_clause = &term[open + 2..close - 2];
    let quantifier = parse_quantifier_site(raw_clause, base + open + 2, source)?;
    let clause = normalize_clause(raw_clause);
    if clause.is_empty() {
        return Err(ParseError::syntax(c.pos(), "empty clause"));
    }
    c.i = close;

    let mut where_clauses: Vec<Dependency> = Vec::new();
    c.skip_ws();
    if !c.at_end() {
        if !c.keyword("where") {
            return Err(ParseError::syntax(c.pos(), "expected `where` after clause"));
        }
        loop {
            c.skip_ws();
            if c.at_end() {
                return Err(ParseError::MissingWhereTarget(c.pos()));
            }
            if !c.rest().starts_with('"') {
                return Err(ParseError::BadQuote(c.pos()));
            }
            let start = c.pos();
            let body = &c.rest()[1..];
            let end = body.find('"').ok_or(ParseError::BadQuote(start))?;
            let phrase = normalize_clause(&body[..end]);
            if phrase.is_empty() {
                return Err(ParseError::BadQuote(start));
            }
            c.i += end + 2;
            c.skip_ws();
            if !c.keyword("is") {
                return Err(ParseError::MissingWhereTarget(c.pos()));
            }
            c.skip_ws();
            let var = c.ident().ok_or_else(|| ParseError::MissingWhereTarget(c.pos()))?;
            if where_clauses.iter().any(|d| d.phrase == phrase) {
                return Err(ParseError::syntax(start, format!("phrase \"{phrase}\" is bound twice")));
            }
            where_clauses.push(Dependency {
                phrase,
                var: var.to_string(),
            });
            c.skip_ws();
            if c.at_end() {
                break;
            }
            if !c.keyword("and") {
                return Err(ParseError::syntax(c.pos(), "expected `and` between where bindings"));
            }
        }
    }

    Ok(LetBinding {
        out_var: out_var.to_string(),
        clause,
        where_clauses,
        quantifier,
    })
}

fn parse_quantifier_site(clause: &str, base: usize, source: &str) -> Result<Option<QuantifierSite>, ParseError> {
    let Some(open) = clause.find("{{") else {
        return Ok(None);
    };
    let pos = |off: usize| Pos::of(source, base + off);
    let close = find_closing(clause, open).ok_or_else(|| ParseError::syntax(pos(open), "unclosed `{{`"))?;
    if clause[close..].contains("{{") {
        return Err(ParseError::MultipleQuantifiers(pos(
            close + clause[close..].find("{{").unwrap()
        )));
    }
    let interior = &clause[open + 2..close - 2];
    let lead = interior.len() - interior.trim_start().len();
    let body = interior.trim_start();
    let (kind, kw_len) = if body.starts_with("forall") {
        (QuantifierKind::ForAll, "forall".len())
    } else if body.starts_with("forsome") {
        (QuantifierKind::ForSome, "forsome".len())
    } else {
        return Err(ParseError::syntax(
            pos(open),
            "only forall/forsome terms may appear inside a clause",
        ));
    };
    let items_base = open + 2 + lead + kw_len;
    let items = &body[kw_len..];

    let mut segments = Vec::new();
    let mut i = 0;
    while i < items.len() {
        match items[i..].find("[[") {
            None => {
                segments.push(Segment::Text(items[i..].to_string()));
                break;
            }
            Some(rel) => {
                if rel > 0 {
                    segments.push(Segment::Text(items[i..i + rel].to_string()));
                }
                let start = i + rel;
                let end = find_closing(items, start)
                    .ok_or_else(|| ParseError::syntax(pos(items_base + start), "unclosed `[[`"))?;
                let item = &items[start + 2..end - 2];
                if item.contains("{{") {
                    return Err(ParseError::NestedQuantifier(pos(items_base + start)));
                }
                segments.push(Segment::Item(normalize_clause(item)));
                i = end;
            }
        }
    }
    let term = QuantifierTerm { kind, segments };
    if term.items().next().is_none() {
        return Err(ParseError::EmptyQuantifier(pos(open)));
    }
    Ok(Some(QuantifierSite {
        prefix: clause[..open].to_string(),
        term,
        suffix: clause[close..].to_string(),
    }))
}

/// Expands a quantified clause into one binding per item plus the defining formula
/// for the host variable. Children are named `<host>_q<i>`, 1-based.
pub fn expand_quantifier(site: &QuantifierSite, host: &LetBinding) -> Result<(Vec<LetBinding>, Formula), ParseError> {
    let children: Vec<LetBinding> = site
        .term
        .items()
        .enumerate()
        .map(|(i, item)| LetBinding {
            out_var: format!("{}_q{}", host.out_var, i + 1),
            clause: normalize_clause(&format!("{}{}{}", site.prefix, item, site.suffix)),
            where_clauses: host.where_clauses.clone(),
            quantifier: None,
        })
        .collect();
    if children.is_empty() {
        return Err(ParseError::EmptyQuantifier(Pos::default()));
    }
    let refs = children.iter().map(|c| Formula::var(&c.out_var)).collect();
    let body = match site.term.kind {
        QuantifierKind::ForSome => Formula::or(refs),
        QuantifierKind::ForAll => Formula::and(refs),
    };
    Ok((children, Formula::iff(&host.out_var, body)))
}

/// Finds every `{{ ... }}` term in a text block. Returns bindings with absolute offsets.
pub(super) fn parse_text_block(
    payload: &str,
    base: usize,
    source: &str,
) -> Result<Vec<(LetBinding, usize)>, ParseError> {
    let mut out = Vec::new();
    let mut i = 0;
    loop {
        let next_open = payload[i..].find("{{").map(|r| i + r);
        let next_close = payload[i..].find("}}").map(|r| i + r);
        match (next_open, next_close) {
            (None, None) => break,
            (None, Some(c)) => return Err(ParseError::syntax(Pos::of(source, base + c), "unmatched `}}`")),
            (Some(o), Some(c)) if c < o => return Err(ParseError::syntax(Pos::of(source, base + c), "unmatched `}}`")),
            (Some(open), _) => {
                let close = find_closing(payload, open)
                    .ok_or_else(|| ParseError::syntax(Pos::of(source, base + open), "unclosed `{{`"))?;
                let interior = &payload[open + 2..close - 2];
                let trimmed = interior.trim_start();
                let at = base + open;
                if trimmed.starts_with("forall") || trimmed.starts_with("forsome") {
                    return Err(ParseError::StrayQuantifier(Pos::of(source, at)));
                }
                let binding = parse_let_at(interior, at + 2, source)?;
                out.push((binding, at));
                i = close;
            }
        }
    }
    Ok(out)
}
