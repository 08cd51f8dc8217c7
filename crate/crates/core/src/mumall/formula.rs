//! Formulæ and sequents of μMALL: multiplicative/additive linear logic
//! with least and greatest fixed points. Negation is computed (there is no
//! negation connective beyond dual atoms), `~X := X` on fixed-point
//! variables.

use std::fmt;

use crate::error::Result;
use crate::text::Lexer;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Formula {
    Atom(String),
    NegAtom(String),
    Zero,
    One,
    Top,
    Bot,
    Par(Box<Formula>, Box<Formula>),
    Tens(Box<Formula>, Box<Formula>),
    Plus(Box<Formula>, Box<Formula>),
    With(Box<Formula>, Box<Formula>),
    Var(String),
    Mu(String, Box<Formula>),
    Nu(String, Box<Formula>),
}

pub fn neg(f: &Formula) -> Formula {
    match f {
        Formula::Atom(a) => Formula::NegAtom(a.clone()),
        Formula::NegAtom(a) => Formula::Atom(a.clone()),
        Formula::Zero => Formula::Top,
        Formula::Top => Formula::Zero,
        Formula::One => Formula::Bot,
        Formula::Bot => Formula::One,
        Formula::Par(l, r) => Formula::Tens(Box::new(neg(l)), Box::new(neg(r))),
        Formula::Tens(l, r) => Formula::Par(Box::new(neg(l)), Box::new(neg(r))),
        Formula::Plus(l, r) => Formula::With(Box::new(neg(l)), Box::new(neg(r))),
        Formula::With(l, r) => Formula::Plus(Box::new(neg(l)), Box::new(neg(r))),
        Formula::Var(x) => Formula::Var(x.clone()),
        Formula::Mu(x, b) => Formula::Nu(x.clone(), Box::new(neg(b))),
        Formula::Nu(x, b) => Formula::Mu(x.clone(), Box::new(neg(b))),
    }
}

/// Substitute the fixed-point variable `x` by `g` in `f`; `g` is expected
/// to be closed, so no capture is possible.
pub fn formula_subst(f: &Formula, x: &str, g: &Formula) -> Formula {
    match f {
        Formula::Var(y) if y == x => g.clone(),
        Formula::Atom(_)
        | Formula::NegAtom(_)
        | Formula::Zero
        | Formula::One
        | Formula::Top
        | Formula::Bot
        | Formula::Var(_) => f.clone(),
        Formula::Par(l, r) => Formula::Par(
            Box::new(formula_subst(l, x, g)),
            Box::new(formula_subst(r, x, g)),
        ),
        Formula::Tens(l, r) => Formula::Tens(
            Box::new(formula_subst(l, x, g)),
            Box::new(formula_subst(r, x, g)),
        ),
        Formula::Plus(l, r) => Formula::Plus(
            Box::new(formula_subst(l, x, g)),
            Box::new(formula_subst(r, x, g)),
        ),
        Formula::With(l, r) => Formula::With(
            Box::new(formula_subst(l, x, g)),
            Box::new(formula_subst(r, x, g)),
        ),
        Formula::Mu(y, b) => {
            if y == x {
                f.clone()
            } else {
                Formula::Mu(y.clone(), Box::new(formula_subst(b, x, g)))
            }
        }
        Formula::Nu(y, b) => {
            if y == x {
                f.clone()
            } else {
                Formula::Nu(y.clone(), Box::new(formula_subst(b, x, g)))
            }
        }
    }
}

fn free_vars(f: &Formula, bound: &mut Vec<String>, out: &mut Vec<String>) {
    match f {
        Formula::Var(x) => {
            if !bound.iter().any(|b| b == x) {
                out.push(x.clone());
            }
        }
        Formula::Par(l, r)
        | Formula::Tens(l, r)
        | Formula::Plus(l, r)
        | Formula::With(l, r) => {
            free_vars(l, bound, out);
            free_vars(r, bound, out);
        }
        Formula::Mu(x, b) | Formula::Nu(x, b) => {
            bound.push(x.clone());
            free_vars(b, bound, out);
            bound.pop();
        }
        _ => {}
    }
}

pub fn is_closed(f: &Formula) -> bool {
    let mut out = Vec::new();
    free_vars(f, &mut Vec::new(), &mut out);
    out.is_empty()
}

fn fmt_formula(f: &Formula, operand: bool, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    match f {
        Formula::Atom(a) => write!(out, "{a}"),
        Formula::NegAtom(a) => write!(out, "~{a}"),
        Formula::Zero => write!(out, "0"),
        Formula::One => write!(out, "1"),
        Formula::Top => write!(out, "top"),
        Formula::Bot => write!(out, "bot"),
        Formula::Var(x) => write!(out, "{x}"),
        Formula::Par(l, r) => fmt_bin(l, "par", r, out),
        Formula::Tens(l, r) => fmt_bin(l, "tens", r, out),
        Formula::Plus(l, r) => fmt_bin(l, "plus", r, out),
        Formula::With(l, r) => fmt_bin(l, "with", r, out),
        Formula::Mu(x, b) => {
            if operand {
                write!(out, "(mu {x}. ")?;
                fmt_formula(b, false, out)?;
                write!(out, ")")
            } else {
                write!(out, "mu {x}. ")?;
                fmt_formula(b, false, out)
            }
        }
        Formula::Nu(x, b) => {
            if operand {
                write!(out, "(nu {x}. ")?;
                fmt_formula(b, false, out)?;
                write!(out, ")")
            } else {
                write!(out, "nu {x}. ")?;
                fmt_formula(b, false, out)
            }
        }
    }
}

fn fmt_bin(
    l: &Formula,
    op: &str,
    r: &Formula,
    out: &mut fmt::Formatter<'_>,
) -> fmt::Result {
    write!(out, "(")?;
    fmt_formula(l, true, out)?;
    write!(out, " {op} ")?;
    fmt_formula(r, true, out)?;
    write!(out, ")")
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_formula(self, false, f)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Sequent(pub Vec<Formula>);

impl Sequent {
    pub fn new(fs: Vec<Formula>) -> Self {
        Sequent(fs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based access, matching multicut coordinates.
    pub fn get1(&self, j: usize) -> Option<&Formula> {
        if j == 0 {
            None
        } else {
            self.0.get(j - 1)
        }
    }

    pub fn last(&self) -> Option<&Formula> {
        self.0.last()
    }

    pub fn with(mut self, f: Formula) -> Self {
        self.0.push(f);
        self
    }

    pub fn concat(&self, other: &Sequent) -> Sequent {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Sequent(v)
    }

    /// Drop the last `n` formulæ.
    pub fn drop_last(&self, n: usize) -> Sequent {
        Sequent(self.0[..self.0.len().saturating_sub(n)].to_vec())
    }

    pub fn split_at(&self, k: usize) -> (Sequent, Sequent) {
        let (a, b) = self.0.split_at(k.min(self.0.len()));
        (Sequent(a.to_vec()), Sequent(b.to_vec()))
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|-")?;
        for (i, x) in self.0.iter().enumerate() {
            if i == 0 {
                write!(f, " {x}")?;
            } else {
                write!(f, ", {x}")?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Text format: ascii connectives `par tens plus with`, binders `mu X.` /
// `nu X.` (maximal scope; parenthesise in operand position), constants
// `0 1 top bot`, `~F` computes the dual.

const KEYWORDS: &[&str] = &["par", "tens", "plus", "with", "mu", "nu", "top", "bot"];

pub fn parse_formula_str(src: &str) -> Result<Formula> {
    let mut lx = Lexer::new(src);
    let f = parse_formula_at(&mut lx, &mut Vec::new())?;
    lx.expect_end()?;
    Ok(f)
}

pub fn parse_formula_at(lx: &mut Lexer<'_>, scope: &mut Vec<String>) -> Result<Formula> {
    if lx.eat_kw("mu") {
        let x = lx.ident()?;
        lx.expect('.')?;
        scope.push(x.clone());
        let b = parse_formula_at(lx, scope)?;
        scope.pop();
        return Ok(Formula::Mu(x, Box::new(b)));
    }
    if lx.eat_kw("nu") {
        let x = lx.ident()?;
        lx.expect('.')?;
        scope.push(x.clone());
        let b = parse_formula_at(lx, scope)?;
        scope.pop();
        return Ok(Formula::Nu(x, Box::new(b)));
    }
    let lhs = parse_fatom(lx, scope)?;
    let op = if lx.eat_kw("par") {
        Formula::Par as fn(Box<Formula>, Box<Formula>) -> Formula
    } else if lx.eat_kw("tens") {
        Formula::Tens
    } else if lx.eat_kw("plus") {
        Formula::Plus
    } else if lx.eat_kw("with") {
        Formula::With
    } else {
        return Ok(lhs);
    };
    // Connectives associate to the right; the printer parenthesises fully.
    let rhs = parse_formula_at(lx, scope)?;
    Ok(op(Box::new(lhs), Box::new(rhs)))
}

fn parse_fatom(lx: &mut Lexer<'_>, scope: &mut Vec<String>) -> Result<Formula> {
    if lx.eat('(') {
        let f = parse_formula_at(lx, scope)?;
        lx.expect(')')?;
        return Ok(f);
    }
    if lx.eat('~') {
        let f = parse_fatom(lx, scope)?;
        return Ok(neg(&f));
    }
    if lx.eat('0') {
        return Ok(Formula::Zero);
    }
    if lx.eat('1') {
        return Ok(Formula::One);
    }
    if lx.eat_kw("top") {
        return Ok(Formula::Top);
    }
    if lx.eat_kw("bot") {
        return Ok(Formula::Bot);
    }
    let name = lx.ident()?;
    if KEYWORDS.contains(&name.as_str()) {
        return Err(lx.error(format!("'{name}' cannot be used as an atom")));
    }
    if scope.iter().any(|x| *x == name) {
        Ok(Formula::Var(name))
    } else {
        Ok(Formula::Atom(name))
    }
}

/// Parse a sequent `|- F, G, …` (possibly empty after `|-`).
pub fn parse_sequent_at(lx: &mut Lexer<'_>) -> Result<Sequent> {
    lx.expect('|')?;
    lx.expect('-')?;
    let mut fs = Vec::new();
    match lx.peek() {
        None | Some(';') | Some(')') | Some(']') | Some('|') | Some('}') | Some(',') => {
            return Ok(Sequent(fs))
        }
        _ => {}
    }
    loop {
        fs.push(parse_formula_at(lx, &mut Vec::new())?);
        if !lx.eat(',') {
            return Ok(Sequent(fs));
        }
    }
}

pub fn parse_sequent_str(src: &str) -> Result<Sequent> {
    let mut lx = Lexer::new(src);
    let s = parse_sequent_at(&mut lx)?;
    lx.expect_end()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::gen_formula;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn negation_is_an_involution() {
        let mut rng = StdRng::seed_from_u64(1);
        for _ in 0..200 {
            let f = gen_formula(&mut rng, 3);
            assert!(is_closed(&f));
            assert_eq!(neg(&neg(&f)), f, "{f}");
        }
    }

    #[test]
    fn duality_swaps_connectives() {
        let f = parse_formula_str("mu X. (p tens X) plus 1").unwrap();
        assert_eq!(neg(&f).to_string(), "nu X. ((~p par X) with bot)");
    }

    #[test]
    fn parse_print_roundtrip() {
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..200 {
            let f = gen_formula(&mut rng, 3);
            let f2 = parse_formula_str(&f.to_string()).unwrap();
            assert_eq!(f, f2, "{f}");
        }
        let s = parse_sequent_str("|- p, ~q par r, nu X. X").unwrap();
        assert_eq!(parse_sequent_str(&s.to_string()).unwrap(), s);
        assert_eq!(parse_sequent_str("|-").unwrap().len(), 0);
    }

    #[test]
    fn substitution_respects_binders() {
        let body = Formula::Par(
            Box::new(Formula::Var("X".into())),
            Box::new(parse_formula_str("nu X. X").unwrap()),
        );
        let out = formula_subst(&body, "X", &parse_formula_str("p").unwrap());
        assert_eq!(out.to_string(), "(p par (nu X. X))");
    }

    #[test]
    fn open_formulas_are_detected() {
        assert!(!is_closed(&Formula::Var("X".into())));
        assert!(is_closed(&parse_formula_str("mu X. X").unwrap()));
        // unknown names outside any binder scope are atoms, not variables
        assert!(is_closed(&parse_formula_str("mu X. Y").unwrap()));
    }
}
