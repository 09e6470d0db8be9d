//! Logitext source text to [`ParsedDocument`].
//!
//! A document alternates prose and fenced code blocks. An optional leading
//! fence holding `(v1, v2:str, ...)` declares variables. Prose carries
//! `{{let v = [[clause]] where "phrase" is p and ...}}` terms, and a clause may
//! contain one `{{forsome ...}}` / `{{forall ...}}` quantifier over `[[item]]`s.
//! Code blocks hold one `v = expr` statement per line.

mod code;
mod text;

use std::collections::BTreeMap;
use std::sync::Arc;

pub use code::parse_code;
pub use text::{
    expand_quantifier, normalize_clause, parse_let, LetBinding, QuantifierKind, QuantifierSite, QuantifierTerm, Segment,
};

use crate::error::{ParseError, Pos};
use crate::model::{Block, BlockKind, Formula, Nltc, ParsedDocument, RawDocument, VarDecl, VarKind, Warning};

const FENCE: &str = "```";

const KEYWORDS: &[&str] = &[
    "and", "or", "not", "True", "False", "let", "where", "is", "forall", "forsome",
];

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&s)
}

/// Length of an `@lang` tag directly after an opening fence, if any.
fn fence_tag_len(payload: &str) -> usize {
    match payload.strip_prefix('@') {
        Some(rest) => {
            1 + rest
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                .unwrap_or(rest.len())
        }
        None => 0,
    }
}

/// Splits source text into text, code and declaration blocks whose spans tile the input.
pub fn tokenize_blocks(source: &str) -> Result<RawDocument, ParseError> {
    if source.trim().is_empty() {
        return Err(ParseError::EmptyDocument);
    }
    let mut blocks: Vec<Block> = Vec::new();
    let mut pos = 0;
    while let Some(rel) = source[pos..].find(FENCE) {
        let open = pos + rel;
        let body_start = open + FENCE.len();
        let close = source[body_start..]
            .find(FENCE)
            .map(|r| body_start + r)
            .ok_or_else(|| ParseError::UnterminatedFence(Pos::of(source, open)))?;
        let payload = &source[body_start..close];
        let end = close + FENCE.len();

        let first_fence = blocks.iter().all(|b| b.kind == BlockKind::Text);
        let leading_blank = source[..open].trim().is_empty();
        let is_decl = first_fence && leading_blank && payload[fence_tag_len(payload)..].trim_start().starts_with('(');
        if is_decl {
            // leading whitespace is folded into the declaration span so it stays first
            blocks.clear();
            blocks.push(Block {
                kind: BlockKind::Decl,
                span: 0..end,
                payload: payload.to_string(),
            });
        } else {
            if open > pos {
                blocks.push(text_block(source, pos..open));
            }
            blocks.push(Block {
                kind: BlockKind::Code,
                span: open..end,
                payload: payload.to_string(),
            });
        }
        pos = end;
    }
    if pos < source.len() {
        blocks.push(text_block(source, pos..source.len()));
    }
    Ok(RawDocument {
        source: Arc::from(source),
        blocks,
    })
}

fn text_block(source: &str, span: std::ops::Range<usize>) -> Block {
    Block {
        kind: BlockKind::Text,
        payload: source[span.clone()].to_string(),
        span,
    }
}

/// Parses the `(a, b:str, ...)` header of a declaration block.
pub fn parse_declarations(block: &Block) -> Result<Vec<VarDecl>, ParseError> {
    let (decls, _) = split_declarations(block, "")?;
    Ok(decls)
}

/// Returns the declarations and the byte offset (within the payload) where trailing code starts.
fn split_declarations(block: &Block, source: &str) -> Result<(Vec<VarDecl>, usize), ParseError> {
    let payload = block.payload.as_str();
    let base = block.span.end - FENCE.len() - payload.len();
    let pos = |off: usize| Pos::of(source, base + off);
    let mut decls: Vec<VarDecl> = Vec::new();
    let mut i = fence_tag_len(payload);
    loop {
        let ws = payload[i..].len() - payload[i..].trim_start().len();
        if !payload[i + ws..].starts_with('(') {
            break;
        }
        let open = i + ws;
        let close = payload[open..]
            .find(')')
            .map(|r| open + r)
            .ok_or_else(|| ParseError::syntax(pos(open), "unclosed declaration list"))?;
        let inner = &payload[open + 1..close];
        if !inner.trim().is_empty() {
            let mut off = open + 1;
            for item in inner.split(',') {
                let token = item.trim();
                let item_pos = pos(off + (item.len() - item.trim_start().len()));
                off += item.len() + 1;
                let (name, kind) = match token.split_once(':') {
                    Some((name, ty)) if ty.trim() == "str" => (name.trim(), VarKind::Str),
                    Some(_) => {
                        return Err(ParseError::BadIdentifier {
                            token: token.to_string(),
                            pos: item_pos,
                        })
                    }
                    None => (token, VarKind::Bool),
                };
                if !is_identifier(name) {
                    return Err(ParseError::BadIdentifier {
                        token: token.to_string(),
                        pos: item_pos,
                    });
                }
                if decls.iter().any(|d| d.name == name) {
                    return Err(ParseError::DuplicateDecl(name.to_string()));
                }
                decls.push(VarDecl {
                    name: name.to_string(),
                    kind,
                });
            }
        }
        i = close + 1;
    }
    Ok((decls, i))
}

struct Collector<'s> {
    source: &'s str,
    kinds: BTreeMap<String, VarKind>,
    formulas: Vec<Formula>,
    nltcs: Vec<Nltc>,
    criteria: Vec<String>,
    warnings: Vec<Warning>,
    pending_deps: Vec<(String, Pos)>,
}

impl<'s> Collector<'s> {
    fn warn(&mut self, pos: Pos, message: String) {
        self.warnings.push(Warning {
            line: pos.line,
            column: pos.column,
            message,
        });
    }

    fn declare_let_target(&mut self, name: &str) -> Result<(), ParseError> {
        if self.criteria.iter().any(|c| c == name) || self.nltcs.iter().any(|n| n.out_var == name) {
            return Err(ParseError::DuplicateLet(name.to_string()));
        }
        match self.kinds.get(name) {
            Some(VarKind::Str) => Err(ParseError::StringLetTarget(name.to_string())),
            Some(VarKind::Bool) => Ok(()),
            None => {
                self.kinds.insert(name.to_string(), VarKind::Bool);
                Ok(())
            }
        }
    }

    fn add_let(&mut self, binding: LetBinding, pos: Pos) -> Result<(), ParseError> {
        self.declare_let_target(&binding.out_var)?;
        self.criteria.push(binding.out_var.clone());
        for dep in &binding.where_clauses {
            self.pending_deps.push((dep.var.clone(), pos));
            if !binding.clause.contains(&dep.phrase) {
                self.warn(
                    pos,
                    format!(
                        "phrase \"{}\" does not occur in the clause of `{}`",
                        dep.phrase, binding.out_var
                    ),
                );
            }
        }
        let doc: Arc<str> = Arc::from(self.source);
        match &binding.quantifier {
            None => self.nltcs.push(Nltc {
                id: binding.out_var.clone(),
                out_var: binding.out_var.clone(),
                clause: binding.clause.clone(),
                deps: binding.where_clauses.clone(),
                doc_context: doc,
            }),
            Some(site) => {
                let (children, formula) = expand_quantifier(site, &binding)?;
                for child in children {
                    if self.kinds.contains_key(&child.out_var) {
                        return Err(ParseError::DuplicateDecl(child.out_var));
                    }
                    self.kinds.insert(child.out_var.clone(), VarKind::Bool);
                    self.nltcs.push(Nltc {
                        id: child.out_var.clone(),
                        out_var: child.out_var,
                        clause: child.clause,
                        deps: child.where_clauses,
                        doc_context: doc.clone(),
                    });
                }
                self.formulas.push(formula);
            }
        }
        Ok(())
    }

    fn add_code(&mut self, formulas: Vec<(Formula, Vec<(String, usize)>)>) -> Result<(), ParseError> {
        for (formula, refs) in formulas {
            for (name, offset) in refs {
                match self.kinds.get(&name) {
                    Some(VarKind::Bool) => {}
                    Some(VarKind::Str) => return Err(ParseError::StringInFormula(name)),
                    None => {
                        self.kinds.insert(name.clone(), VarKind::Bool);
                        let pos = Pos::of(self.source, offset);
                        self.warn(
                            pos,
                            format!("`{name}` is not declared; treating it as a boolean variable"),
                        );
                    }
                }
            }
            self.formulas.push(formula);
        }
        Ok(())
    }
}

/// Parses a whole document: variable collection, logical constraints and text constraints.
pub fn parse_document(source: &str) -> Result<ParsedDocument, ParseError> {
    let raw = tokenize_blocks(source)?;
    let mut c = Collector {
        source,
        kinds: BTreeMap::new(),
        formulas: Vec::new(),
        nltcs: Vec::new(),
        criteria: Vec::new(),
        warnings: Vec::new(),
        pending_deps: Vec::new(),
    };

    // Declarations first so that let targets and code references resolve against them.
    let mut decl_code = None;
    if let Some(decl) = raw.blocks_of(BlockKind::Decl).next() {
        let (decls, code_at) = split_declarations(decl, source)?;
        for d in decls {
            c.kinds.insert(d.name, d.kind);
        }
        let base = decl.span.end - FENCE.len() - decl.payload.len();
        if !decl.payload[code_at..].trim().is_empty() {
            decl_code = Some(code::parse_statements(
                &decl.payload[code_at..],
                base + code_at,
                source,
            )?);
        }
    }
    if let Some(stmts) = decl_code {
        c.add_code(stmts)?;
    }

    for block in &raw.blocks {
        match block.kind {
            BlockKind::Decl => {}
            BlockKind::Text => {
                for (binding, offset) in text::parse_text_block(&block.payload, block.span.start, source)? {
                    c.add_let(binding, Pos::of(source, offset))?;
                }
            }
            BlockKind::Code => {
                let tag = fence_tag_len(&block.payload);
                let base = block.span.start + FENCE.len() + tag;
                let stmts = code::parse_statements(&block.payload[tag..], base, source)?;
                c.add_code(stmts)?;
            }
        }
    }

    for (var, _pos) in std::mem::take(&mut c.pending_deps) {
        if !c.kinds.contains_key(&var) {
            return Err(ParseError::UnresolvedVar(var));
        }
    }

    let bool_vars = c
        .kinds
        .iter()
        .filter(|(_, k)| **k == VarKind::Bool)
        .map(|(n, _)| n.clone())
        .collect();
    let string_vars = c
        .kinds
        .iter()
        .filter(|(_, k)| **k == VarKind::Str)
        .map(|(n, _)| n.clone())
        .collect();
    let doc = ParsedDocument {
        bool_vars,
        string_vars,
        formulas: c.formulas,
        nltcs: c.nltcs,
        criteria: c.criteria,
        warnings: c.warnings,
        source: raw,
    };
    doc.validate()?;
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn prose_only_document() {
        let raw = tokenize_blocks("hello world").unwrap();
        assert_eq!(raw.blocks.len(), 1);
        assert_eq!(raw.blocks[0].kind, BlockKind::Text);
    }

    #[test]
    fn unterminated_fence() {
        let err = tokenize_blocks("```\nx = y\n").unwrap_err();
        assert_eq!(err, ParseError::UnterminatedFence(Pos { line: 1, column: 1 }));
    }

    #[test]
    fn empty_document() {
        assert_eq!(tokenize_blocks("  \n"), Err(ParseError::EmptyDocument));
    }

    #[test]
    fn decl_block_must_lead() {
        let raw = tokenize_blocks("text\n```(a)```\n").unwrap();
        assert!(raw.blocks_of(BlockKind::Decl).next().is_none());
        let raw = tokenize_blocks("\n```(a)```\nx").unwrap();
        assert_eq!(raw.blocks[0].kind, BlockKind::Decl);
        assert_eq!(raw.blocks[0].span.start, 0);
    }

    fn decl(payload: &str) -> Block {
        Block {
            kind: BlockKind::Decl,
            span: 0..payload.len() + 6,
            payload: payload.to_string(),
        }
    }

    #[test]
    fn policy_header_declarations() {
        let decls = parse_declarations(&decl("(M:str, d, t, C1, C2, C3, C4, C5, C6, C7)")).unwrap();
        assert_eq!(decls.len(), 10);
        assert_eq!(decls.iter().filter(|d| d.kind == VarKind::Str).count(), 1);
        assert_eq!(
            decls[0],
            VarDecl {
                name: "M".into(),
                kind: VarKind::Str
            }
        );
    }

    #[test]
    fn singleton_and_duplicate_declarations() {
        assert_eq!(parse_declarations(&decl("(x)")).unwrap().len(), 1);
        assert_eq!(
            parse_declarations(&decl("(x, x)")),
            Err(ParseError::DuplicateDecl("x".into()))
        );
        assert!(matches!(
            parse_declarations(&decl("(1x)")),
            Err(ParseError::BadIdentifier { .. })
        ));
        assert!(matches!(
            parse_declarations(&decl("(x:int)")),
            Err(ParseError::BadIdentifier { .. })
        ));
        assert!(matches!(
            parse_declarations(&decl("(and)")),
            Err(ParseError::BadIdentifier { .. })
        ));
    }

    #[test]
    fn whitespace_insensitive_declarations() {
        let decls = parse_declarations(&decl("( M : str ,d )")).unwrap();
        assert_eq!(decls[0].kind, VarKind::Str);
        assert_eq!(decls[1].name, "d");
    }

    #[test]
    fn logic_only_document() {
        let doc = parse_document("```(a)```\n```\na = True\n```\n").unwrap();
        assert_eq!(doc.bool_vars.len(), 1);
        assert!(doc.string_vars.is_empty());
        assert_eq!(doc.formulas.len(), 1);
        assert!(doc.nltcs.is_empty());
    }

    #[test]
    fn undeclared_code_variable_warns() {
        let doc = parse_document("```(x)```\n```\nx = not Z\n```\n").unwrap();
        assert!(doc.bool_vars.contains("Z"));
        assert_eq!(doc.warnings.len(), 1);
        assert_eq!(
            doc.warnings[0].message,
            "`Z` is not declared; treating it as a boolean variable"
        );
        assert_eq!((doc.warnings[0].line, doc.warnings[0].column), (3, 9));
        assert_eq!(doc.formulas[0], Formula::iff("x", Formula::negate(Formula::var("Z"))));
    }

    #[test]
    fn string_var_in_code_is_rejected() {
        let err = parse_document("```(M:str, a)```\n```\na = M\n```").unwrap_err();
        assert_eq!(err, ParseError::StringInFormula("M".into()));
    }

    #[test]
    fn unresolved_dependency() {
        let err = parse_document("{{let A = [[x]] where \"x\" is Q}}").unwrap_err();
        assert_eq!(err, ParseError::UnresolvedVar("Q".into()));
    }

    #[test]
    fn let_introduces_boolean() {
        let doc = parse_document("```(M:str)```\n{{let A = [[x]] where \"x\" is M}}").unwrap();
        assert!(doc.bool_vars.contains("A"));
        assert_eq!(doc.nltcs.len(), 1);
        assert!(doc.warnings.is_empty());
    }

    #[test]
    fn duplicate_let() {
        let err = parse_document("{{let A = [[x]]}} {{let A = [[y]]}}").unwrap_err();
        assert_eq!(err, ParseError::DuplicateLet("A".into()));
    }

    #[test]
    fn let_on_string_variable() {
        let err = parse_document("```(A:str)```{{let A = [[x]]}}").unwrap_err();
        assert_eq!(err, ParseError::StringLetTarget("A".into()));
    }

    #[test]
    fn language_tag_and_comments() {
        let doc = parse_document("```(a, b)```\n```@python\na = b # alias\n```").unwrap();
        assert_eq!(doc.formulas, vec![Formula::iff("a", Formula::var("b"))]);
    }

    proptest! {
        #[test]
        fn blocks_tile_source(parts in proptest::collection::vec(("[a-z {}\\[\\]\n]{0,12}", any::<bool>()), 1..6)) {
            let mut src = String::new();
            for (text, fenced) in &parts {
                if *fenced {
                    src.push_str("```");
                    src.push_str(text);
                    src.push_str("```");
                } else {
                    src.push_str(text);
                }
            }
            prop_assume!(!src.trim().is_empty());
            let raw = tokenize_blocks(&src).unwrap();
            let rebuilt: String = raw.blocks.iter().map(|b| &src[b.span.clone()]).collect();
            prop_assert_eq!(&rebuilt, &src);
            let mut at = 0;
            for b in &raw.blocks {
                prop_assert_eq!(b.span.start, at);
                at = b.span.end;
            }
            prop_assert!(raw.blocks.iter().skip(1).all(|b| b.kind != BlockKind::Decl));
        }

        #[test]
        fn parse_is_deterministic(src in "[a-z(){}\\[\\]=\"` \n]{0,40}") {
            let a = parse_document(&src);
            let b = parse_document(&src);
            prop_assert_eq!(a, b);
        }
    }
}
