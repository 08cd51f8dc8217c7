//! Text format for derivation trees:
//! `rule_name(child, ..., child)`, `rec LABEL. tree`, bare `LABEL` back
//! edges, `#{S}` truncation axioms (`*` sugar for the unit statement) and
//! `-- …` comments.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::tree::{DTree, Label, RuleFamily, TreeRepr};

/// Instance-supplied name resolution for the generic tree grammar.
pub trait TreeResolver<R: RuleFamily> {
    /// Resolve a rule name applied to `arity` children.
    fn resolve_rule(&self, name: &str, arity: usize) -> Result<R>;
    /// Parse a statement literal (the text between `#{` and `}`).
    fn parse_stmt(&self, text: &str) -> Result<R::Stmt>;
    /// The statement denoted by `*`, if the instance has one.
    fn unit_stmt(&self) -> Option<R::Stmt>;
}

/// A simple cursor over source text with line/column tracking.
pub struct Lexer<'a> {
    src: &'a str,
    pub pos: usize,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Lexer { src, pos: 0 }
    }

    pub fn error(&self, msg: impl Into<String>) -> Error {
        let mut line = 1;
        let mut col = 1;
        for c in self.src[..self.pos].chars() {
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        Error::Syntax { line, col, msg: msg.into() }
    }

    pub fn skip_ws(&mut self) {
        let b = self.src.as_bytes();
        loop {
            while self.pos < b.len() && b[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.src[self.pos..].starts_with("--") {
                while self.pos < b.len() && b[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                return;
            }
        }
    }

    pub fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    pub fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    /// Try to consume a whole keyword (identifier-delimited).
    pub fn eat_kw(&mut self, kw: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(kw) {
            let after = self.src[self.pos + kw.len()..].chars().next();
            if !matches!(after, Some(c) if is_ident_char(c)) {
                self.pos += kw.len();
                return true;
            }
        }
        false
    }

    pub fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        for c in self.src[self.pos..].chars() {
            if is_ident_char(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        if start == self.pos {
            Err(self.error("expected an identifier"))
        } else {
            Ok(self.src[start..self.pos].to_string())
        }
    }

    pub fn nat(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        let b = self.src.as_bytes();
        while self.pos < b.len() && b[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a number"));
        }
        self.src[start..self.pos]
            .parse()
            .map_err(|_| self.error("number too large"))
    }

    /// Raw text up to the matching `}` (supports nesting).
    pub fn braced(&mut self) -> Result<String> {
        self.expect('{')?;
        let start = self.pos;
        let mut depth = 1usize;
        for c in self.src[self.pos..].chars() {
            match c {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        let out = self.src[start..self.pos].to_string();
                        self.pos += 1;
                        return Ok(out);
                    }
                }
                _ => {}
            }
            self.pos += c.len_utf8();
        }
        Err(self.error("unterminated '{'"))
    }

    pub(crate) fn src_slice(&self, start: usize, end: usize) -> &str {
        &self.src[start..end]
    }

    /// A double-quoted string (no escapes).
    pub fn quoted(&mut self) -> Result<String> {
        self.expect('"')?;
        let start = self.pos;
        while self.pos < self.src.len() && self.src.as_bytes()[self.pos] != b'"' {
            self.pos += 1;
        }
        if self.pos >= self.src.len() {
            return Err(self.error("unterminated string"));
        }
        let out = self.src[start..self.pos].to_string();
        self.pos += 1;
        Ok(out)
    }

    pub fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.src.len()
    }

    pub fn expect_end(&mut self) -> Result<()> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("trailing input"))
        }
    }
}

pub fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

pub fn parse_tree<R: RuleFamily>(
    src: &str,
    resolver: &dyn TreeResolver<R>,
) -> Result<DTree<R>> {
    let mut lx = Lexer::new(src);
    let t = parse_tree_at(&mut lx, resolver, &mut Vec::new())?;
    lx.expect_end()?;
    Ok(t)
}

/// Parse one tree from the current position; `scope` maps rec names to
/// labels.
pub fn parse_tree_at<R: RuleFamily>(
    lx: &mut Lexer<'_>,
    resolver: &dyn TreeResolver<R>,
    scope: &mut Vec<(String, Label)>,
) -> Result<DTree<R>> {
    if lx.eat('*') {
        let s = resolver
            .unit_stmt()
            .ok_or_else(|| lx.error("'*' has no meaning for this instance"))?;
        return Ok(DTree::axiom(s));
    }
    if lx.eat('#') {
        let text = if lx.peek() == Some('{') {
            lx.braced()?
        } else {
            lx.ident()?
        };
        return Ok(DTree::axiom(resolver.parse_stmt(&text)?));
    }
    if lx.eat_kw("rec") {
        let name = lx.ident()?;
        lx.expect('.')?;
        let label = Label::fresh();
        scope.push((name, label));
        let body = parse_tree_at(lx, resolver, scope)?;
        scope.pop();
        return DTree::rec(label, body).map_err(|e| lx.error(e.to_string()));
    }
    let name = lx.ident()?;
    if lx.peek() == Some('(') {
        lx.expect('(')?;
        let mut children = Vec::new();
        if !lx.eat(')') {
            loop {
                children.push(parse_tree_at(lx, resolver, scope)?);
                if lx.eat(')') {
                    break;
                }
                lx.expect(',')?;
            }
        }
        let rule = resolver
            .resolve_rule(&name, children.len())
            .map_err(|e| lx.error(e.to_string()))?;
        DTree::rule(rule, children).map_err(|e| lx.error(e.to_string()))
    } else if let Some((_, label)) = scope.iter().rev().find(|(n, _)| *n == name) {
        Ok(DTree::back(*label))
    } else {
        let rule = resolver
            .resolve_rule(&name, 0)
            .map_err(|e| lx.error(e.to_string()))?;
        DTree::rule(rule, Vec::new()).map_err(|e| lx.error(e.to_string()))
    }
}

/// Print a thunk-free tree in the grammar above. Rec labels are renamed to
/// fresh `xN` names.
pub fn print_tree<R: RuleFamily>(t: &DTree<R>) -> Result<String> {
    let mut out = String::new();
    let mut names: HashMap<Label, String> = HashMap::new();
    let mut counter = 0usize;
    print_at(t, &mut out, &mut names, &mut counter)?;
    Ok(out)
}

fn print_at<R: RuleFamily>(
    t: &DTree<R>,
    out: &mut String,
    names: &mut HashMap<Label, String>,
    counter: &mut usize,
) -> Result<()> {
    match t.view() {
        TreeRepr::Rule(r, cs) => {
            out.push_str(&r.display_name());
            if !cs.is_empty() {
                out.push('(');
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    print_at(c, out, names, counter)?;
                }
                out.push(')');
            }
            Ok(())
        }
        TreeRepr::Rec { label, body, .. } => {
            *counter += 1;
            let name = format!("x{counter}");
            names.insert(*label, name.clone());
            out.push_str("rec ");
            out.push_str(&name);
            out.push_str(". ");
            print_at(body, out, names, counter)
        }
        TreeRepr::Back(l) => {
            let name = names
                .get(l)
                .ok_or_else(|| Error::UnboundBackEdge(l.to_string()))?;
            out.push_str(name);
            Ok(())
        }
        TreeRepr::Axiom(s) => {
            let txt = s.to_string();
            if txt == "•" {
                out.push('*');
            } else {
                out.push_str("#{");
                out.push_str(&txt);
                out.push('}');
            }
            Ok(())
        }
        TreeRepr::Thunk(_) => Err(Error::NotRegular),
    }
}

// ---------------------------------------------------------------------------
// Witness text format:
//   split @(ORD) { src TREE ; (seg [STEPS] @(ORD) HAT ;)* steps [STEPS] ; final HAT }
//   HAT  = lift RULE(W, …, W) | axiom #{S} | axiom *
//   STEP = name@[i,j,…]   (quoted "name" for non-identifier step names)
// with `rec L. …` / bare labels for cycles, as for trees.

use crate::ord::{parse_ordinal, Ordinal};
use crate::rewrite::{Hat, Segment, Step, WitRepr, Witness};

pub fn parse_witness<R: RuleFamily>(
    src: &str,
    resolver: &dyn TreeResolver<R>,
) -> Result<Witness<R>> {
    let mut lx = Lexer::new(src);
    let w = parse_witness_at(&mut lx, resolver, &mut Vec::new())?;
    lx.expect_end()?;
    Ok(w)
}

fn parse_witness_at<R: RuleFamily>(
    lx: &mut Lexer<'_>,
    resolver: &dyn TreeResolver<R>,
    scope: &mut Vec<(String, Label)>,
) -> Result<Witness<R>> {
    if lx.eat_kw("rec") {
        let name = lx.ident()?;
        lx.expect('.')?;
        let label = Label::fresh();
        scope.push((name, label));
        let body = parse_witness_at(lx, resolver, scope)?;
        scope.pop();
        // Unguarded cycles are accepted here and flagged by the validator,
        // so that a broken witness file yields a violation report rather
        // than a parse error.
        return Ok(Witness::rec_unchecked(label, body));
    }
    if lx.eat_kw("split") {
        lx.expect('@')?;
        let ordinal = parse_ord_paren(lx)?;
        lx.expect('{')?;
        if !lx.eat_kw("src") {
            return Err(lx.error("expected 'src'"));
        }
        let source = parse_tree_at(lx, resolver, scope)?;
        lx.expect(';')?;
        let mut segments = Vec::new();
        while lx.eat_kw("seg") {
            let steps = parse_steps(lx)?;
            lx.expect('@')?;
            let ord = parse_ord_paren(lx)?;
            let hat = parse_hat(lx, resolver, scope)?;
            lx.expect(';')?;
            segments.push(Segment { steps, ordinal: ord, hat });
        }
        if !lx.eat_kw("steps") {
            return Err(lx.error("expected 'steps'"));
        }
        let trailing = parse_steps(lx)?;
        lx.expect(';')?;
        if !lx.eat_kw("final") {
            return Err(lx.error("expected 'final'"));
        }
        let final_hat = parse_hat(lx, resolver, scope)?;
        lx.expect('}')?;
        return Ok(Witness::split(source, ordinal, segments, trailing, final_hat));
    }
    let name = lx.ident()?;
    if let Some((_, label)) = scope.iter().rev().find(|(n, _)| *n == name) {
        Ok(Witness::back(*label))
    } else {
        Err(lx.error(format!("unbound witness label '{name}'")))
    }
}

fn parse_ord_paren(lx: &mut Lexer<'_>) -> Result<Ordinal> {
    lx.expect('(')?;
    let start = lx.pos;
    while lx.peek().is_some() && lx.peek() != Some(')') {
        lx.pos += lx.peek().unwrap().len_utf8();
    }
    let text = lx.src_slice(start, lx.pos).to_string();
    lx.expect(')')?;
    parse_ordinal(text.trim()).map_err(|e| lx.error(e.to_string()))
}

fn parse_steps(lx: &mut Lexer<'_>) -> Result<Vec<Step>> {
    lx.expect('[')?;
    let mut out = Vec::new();
    if lx.eat(']') {
        return Ok(out);
    }
    loop {
        let name = if lx.peek() == Some('"') {
            lx.quoted()?
        } else {
            lx.ident()?
        };
        lx.expect('@')?;
        lx.expect('[')?;
        let mut path = Vec::new();
        if !lx.eat(']') {
            loop {
                path.push(lx.nat()?);
                if lx.eat(']') {
                    break;
                }
                lx.expect(',')?;
            }
        }
        out.push(Step { name, path });
        if lx.eat(']') {
            return Ok(out);
        }
        lx.expect(',')?;
    }
}

fn parse_hat<R: RuleFamily>(
    lx: &mut Lexer<'_>,
    resolver: &dyn TreeResolver<R>,
    scope: &mut Vec<(String, Label)>,
) -> Result<Hat<R>> {
    if lx.eat_kw("axiom") {
        if lx.eat('*') {
            let s = resolver
                .unit_stmt()
                .ok_or_else(|| lx.error("'*' has no meaning for this instance"))?;
            return Ok(Hat::Axiom(s));
        }
        lx.expect('#')?;
        let text = if lx.peek() == Some('{') { lx.braced()? } else { lx.ident()? };
        return Ok(Hat::Axiom(resolver.parse_stmt(&text)?));
    }
    if !lx.eat_kw("lift") {
        return Err(lx.error("expected 'lift' or 'axiom'"));
    }
    let name = lx.ident()?;
    let mut children = Vec::new();
    if lx.eat('(') {
        if !lx.eat(')') {
            loop {
                children.push(parse_witness_at(lx, resolver, scope)?);
                if lx.eat(')') {
                    break;
                }
                lx.expect(',')?;
            }
        }
    }
    let rule = resolver
        .resolve_rule(&name, children.len())
        .map_err(|e| lx.error(e.to_string()))?;
    Ok(Hat::Lift { rule, children })
}

pub fn print_witness<R: RuleFamily>(w: &Witness<R>) -> Result<String> {
    let mut out = String::new();
    let mut names = HashMap::new();
    let mut counter = 0usize;
    print_witness_at(w, &mut out, &mut names, &mut counter)?;
    Ok(out)
}

fn print_witness_at<R: RuleFamily>(
    w: &Witness<R>,
    out: &mut String,
    names: &mut HashMap<Label, String>,
    counter: &mut usize,
) -> Result<()> {
    match w.view() {
        WitRepr::Rec { label, body, .. } => {
            *counter += 1;
            let name = format!("w{counter}");
            names.insert(*label, name.clone());
            out.push_str("rec ");
            out.push_str(&name);
            out.push_str(". ");
            print_witness_at(body, out, names, counter)
        }
        WitRepr::Back(l) => {
            let name = names
                .get(l)
                .ok_or_else(|| Error::UnboundBackEdge(l.to_string()))?;
            out.push_str(name);
            Ok(())
        }
        WitRepr::Thunk(_) => Err(Error::NotRegular),
        WitRepr::Split(d) => {
            out.push_str(&format!("split @({}) {{ src ", d.ordinal));
            let mut tnames = HashMap::new();
            let mut tcounter = 0usize;
            print_at(&d.source, out, &mut tnames, &mut tcounter)?;
            out.push_str("; ");
            for seg in &d.segments {
                out.push_str("seg ");
                print_steps(&seg.steps, out);
                out.push_str(&format!(" @({}) ", seg.ordinal));
                print_hat(&seg.hat, out, names, counter)?;
                out.push_str("; ");
            }
            out.push_str("steps ");
            print_steps(&d.trailing, out);
            out.push_str("; final ");
            print_hat(&d.final_hat, out, names, counter)?;
            out.push_str(" }");
            Ok(())
        }
    }
}

fn print_steps(steps: &[Step], out: &mut String) {
    out.push('[');
    for (i, st) in steps.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        if st.name.chars().all(is_ident_char) && !st.name.is_empty() {
            out.push_str(&st.name);
        } else {
            out.push('"');
            out.push_str(&st.name);
            out.push('"');
        }
        out.push_str("@[");
        for (j, p) in st.path.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&p.to_string());
        }
        out.push(']');
    }
    out.push(']');
}

fn print_hat<R: RuleFamily>(
    h: &Hat<R>,
    out: &mut String,
    names: &mut HashMap<Label, String>,
    counter: &mut usize,
) -> Result<()> {
    match h {
        Hat::Axiom(s) => {
            let txt = s.to_string();
            if txt == "•" {
                out.push_str("axiom *");
            } else {
                out.push_str("axiom #{");
                out.push_str(&txt);
                out.push('}');
            }
            Ok(())
        }
        Hat::Lift { rule, children } => {
            out.push_str("lift ");
            out.push_str(&rule.display_name());
            if !children.is_empty() {
                out.push('(');
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    print_witness_at(c, out, names, counter)?;
                }
                out.push(')');
            }
            Ok(())
        }
    }
}
