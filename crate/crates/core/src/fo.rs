//! The left-linear first-order iTRS instance: signatures, terms as
//! derivation trees over constructor/variable rules, substitutions, root
//! zero steps `σ·l → σ·r`, and the pattern extraction/filling lemmas
//! providing the instance's Q-step.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use crate::compress::{q_step_congruence, Engine, QStep};
use crate::error::{Error, Result};
use crate::ord::Ordinal;
use crate::rewrite::{Hat, Step, Witness, ZeroStepOracle};
use crate::text::{Lexer, TreeResolver};
use crate::tree::{reachable_states, DTree, Label, RuleFamily, TreeRepr, UnitStmt};

/// Rules of the term family: a variable leaf or a constructor with
/// per-premiss coinductive flags.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum FoRule {
    Var(String),
    Cons { sym: String, coind: Vec<bool> },
}

impl RuleFamily for FoRule {
    type Stmt = UnitStmt;

    fn arity(&self) -> usize {
        match self {
            FoRule::Var(_) => 0,
            FoRule::Cons { coind, .. } => coind.len(),
        }
    }

    fn coind(&self, i: usize) -> bool {
        match self {
            FoRule::Var(_) => false,
            FoRule::Cons { coind, .. } => coind[i],
        }
    }

    fn conclusion(&self) -> UnitStmt {
        UnitStmt
    }

    fn check_premisses(&self, _premisses: &[UnitStmt]) -> Result<()> {
        Ok(())
    }

    fn display_name(&self) -> String {
        match self {
            FoRule::Var(x) => x.clone(),
            FoRule::Cons { sym, .. } => sym.clone(),
        }
    }
}

pub type FOTerm = DTree<FoRule>;

/// A finite map from variables to terms; unmapped variables are identities.
#[derive(Clone, Default, Debug)]
pub struct Substitution(pub BTreeMap<String, FOTerm>);

impl Substitution {
    pub fn get(&self, x: &str) -> Option<&FOTerm> {
        self.0.get(x)
    }

    pub fn insert(&mut self, x: impl Into<String>, t: FOTerm) {
        self.0.insert(x.into(), t);
    }

    /// Disjoint union; overlapping bindings must not occur (left-linearity).
    fn merge(&mut self, other: Substitution) -> Result<()> {
        for (x, t) in other.0 {
            if self.0.contains_key(&x) {
                return Err(Error::NotLinear(x));
            }
            self.0.insert(x, t);
        }
        Ok(())
    }
}

/// A first-order signature: symbol arities with per-premiss coind flags
/// (default all-coinductive).
#[derive(Clone, Default, Debug)]
pub struct Signature {
    symbols: Vec<(String, Vec<bool>)>,
}

impl Signature {
    pub fn declare(&mut self, name: impl Into<String>, arity: usize) -> Result<()> {
        let name = name.into();
        if self.lookup(&name).is_some() {
            return Err(Error::Domain(format!("duplicate symbol {name}")));
        }
        self.symbols.push((name, vec![true; arity]));
        Ok(())
    }

    /// Mark premiss `i` (1-based) of `name` inductive.
    pub fn set_inductive(&mut self, name: &str, i: usize) -> Result<()> {
        let entry = self
            .symbols
            .iter_mut()
            .find(|(n, _)| n == name)
            .ok_or_else(|| Error::Domain(format!("unknown symbol {name}")))?;
        if i == 0 || i > entry.1.len() {
            return Err(Error::Domain(format!("symbol {name} has no premiss {i}")));
        }
        entry.1[i - 1] = false;
        Ok(())
    }

    pub fn lookup(&self, name: &str) -> Option<&Vec<bool>> {
        self.symbols.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    pub fn cons_rule(&self, name: &str) -> Result<FoRule> {
        let coind = self
            .lookup(name)
            .ok_or_else(|| Error::Domain(format!("unknown symbol {name}")))?;
        Ok(FoRule::Cons { sym: name.to_string(), coind: coind.clone() })
    }

    pub fn cons(&self, name: &str, children: Vec<FOTerm>) -> Result<FOTerm> {
        DTree::rule(self.cons_rule(name)?, children)
    }

    pub fn var(name: impl Into<String>) -> FOTerm {
        DTree::rule_unchecked(FoRule::Var(name.into()), Vec::new())
    }

    pub fn symbols(&self) -> impl Iterator<Item = (&str, usize)> {
        self.symbols.iter().map(|(n, c)| (n.as_str(), c.len()))
    }
}

/// True iff no variable occurs twice in the (finite) term.
pub fn check_left_linear(lhs: &FOTerm) -> Result<bool> {
    let mut seen = HashSet::new();
    fn go(t: &FOTerm, seen: &mut HashSet<String>) -> Result<bool> {
        match t.view() {
            TreeRepr::Rule(FoRule::Var(x), _) => Ok(seen.insert(x.clone())),
            TreeRepr::Rule(_, cs) => {
                for c in cs {
                    if !go(c, seen)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            _ => Err(Error::Domain("left-hand sides must be finite terms".into())),
        }
    }
    go(lhs, &mut seen)
}

/// The variable names occurring in a regular term.
pub fn term_vars(t: &FOTerm) -> Result<HashSet<String>> {
    let mut out = HashSet::new();
    for st in reachable_states(t, crate::tree::TRAVERSAL_FUEL)? {
        if let TreeRepr::Rule(FoRule::Var(x), _) = st.view() {
            out.insert(x.clone());
        }
    }
    Ok(out)
}

/// Coinductive grafting of a substitution into a term.
pub fn subst_apply(sigma: &Substitution, t: &FOTerm) -> FOTerm {
    fn go(t: &FOTerm, sigma: &Substitution, memo: &mut HashMap<*const (), FOTerm>) -> FOTerm {
        if let Some(hit) = memo.get(&t.ptr()) {
            return hit.clone();
        }
        let out = match t.view() {
            TreeRepr::Rule(FoRule::Var(x), _) => match sigma.get(x) {
                Some(s) => s.clone(),
                None => t.clone(),
            },
            TreeRepr::Rule(r, cs) => {
                let cs2: Vec<_> = cs.iter().map(|c| go(c, sigma, memo)).collect();
                if cs2.iter().zip(cs).all(|(a, b)| a.ptr() == b.ptr()) {
                    t.clone()
                } else {
                    DTree::rule_unchecked(r.clone(), cs2)
                }
            }
            TreeRepr::Rec { label, body, .. } => {
                let b2 = go(body, sigma, memo);
                if b2.ptr() == body.ptr() {
                    t.clone()
                } else {
                    DTree::rec_unchecked(*label, b2)
                }
            }
            TreeRepr::Back(_) | TreeRepr::Axiom(_) => t.clone(),
            TreeRepr::Thunk(_) => {
                let t2 = t.clone();
                let s2 = sigma.clone();
                DTree::thunk(move || {
                    let forced = t2.resolve()?;
                    Ok(go(&forced, &s2, &mut HashMap::new()))
                })
            }
        };
        memo.insert(t.ptr(), out.clone());
        out
    }
    go(t, sigma, &mut HashMap::new())
}

/// Match a finite linear lhs against a term.
pub fn match_lhs(l: &FOTerm, t: &FOTerm) -> Result<Substitution> {
    if !check_left_linear(l)? {
        return Err(Error::NotLinear("left-hand side".into()));
    }
    let mut sigma = Substitution::default();
    fn go(l: &FOTerm, t: &FOTerm, sigma: &mut Substitution) -> Result<()> {
        match l.view() {
            TreeRepr::Rule(FoRule::Var(x), _) => {
                sigma.insert(x.clone(), t.clone());
                Ok(())
            }
            TreeRepr::Rule(r, ls) => {
                let (rt, ts) = t.unfold()?;
                if rt != *r {
                    return Err(Error::Mismatch(format!(
                        "expected {}, found {}",
                        r.display_name(),
                        rt.display_name()
                    )));
                }
                for (lc, tc) in ls.iter().zip(ts.iter()) {
                    go(lc, tc, sigma)?;
                }
                Ok(())
            }
            _ => Err(Error::Domain("left-hand sides must be finite terms".into())),
        }
    }
    go(l, t, &mut sigma)?;
    Ok(sigma)
}

/// A named rewrite rule `l → r` with finite, non-variable, linear lhs.
#[derive(Clone, Debug)]
pub struct FORule {
    pub name: String,
    pub lhs: FOTerm,
    pub rhs: FOTerm,
}

/// A left-linear iTRS: a signature plus named rules.
#[derive(Clone, Default, Debug)]
pub struct FoSystem {
    pub sig: Signature,
    rules: Vec<FORule>,
}

impl FoSystem {
    pub fn new(sig: Signature) -> Self {
        FoSystem { sig, rules: Vec::new() }
    }

    pub fn add_rule(&mut self, name: impl Into<String>, lhs: FOTerm, rhs: FOTerm) -> Result<()> {
        let name = name.into();
        if matches!(lhs.view(), TreeRepr::Rule(FoRule::Var(_), _)) {
            return Err(Error::Domain(format!("rule {name}: lhs is a variable")));
        }
        if !check_left_linear(&lhs)? {
            return Err(Error::NotLinear(name));
        }
        let lv = term_vars(&lhs)?;
        let rv = term_vars(&rhs)?;
        if let Some(x) = rv.difference(&lv).next() {
            return Err(Error::Domain(format!(
                "rule {name}: rhs variable {x} not bound by lhs"
            )));
        }
        if self.rules.iter().any(|r| r.name == name) {
            return Err(Error::Domain(format!("duplicate rule name {name}")));
        }
        self.rules.push(FORule { name, lhs, rhs });
        Ok(())
    }

    pub fn rule(&self, name: &str) -> Option<&FORule> {
        self.rules.iter().find(|r| r.name == name)
    }

    pub fn rules(&self) -> &[FORule] {
        &self.rules
    }
}

/// Root zero steps of an iTRS.
pub struct FoOracle {
    pub system: Arc<FoSystem>,
}

impl ZeroStepOracle<FoRule> for FoOracle {
    fn enumerate(&self, t: &FOTerm) -> Result<Vec<(String, FOTerm)>> {
        let mut out = Vec::new();
        for rule in self.system.rules() {
            if let Ok(sigma) = match_lhs(&rule.lhs, t) {
                out.push((rule.name.clone(), subst_apply(&sigma, &rule.rhs)));
            }
        }
        Ok(out)
    }

    fn apply(&self, name: &str, t: &FOTerm) -> Result<FOTerm> {
        let rule = self
            .system
            .rule(name)
            .ok_or_else(|| Error::StepNotApplicable(name.to_string()))?;
        let sigma =
            match_lhs(&rule.lhs, t).map_err(|_| Error::StepNotApplicable(name.to_string()))?;
        Ok(subst_apply(&sigma, &rule.rhs))
    }
}

/// Pattern extraction (induction on the linear lhs `l`): prepone until the
/// witness exposes `l`'s skeleton, collecting the matching substitution τ
/// and a witness `τ(x) ↠_δ σ(x)` per variable.
pub fn fo_pattern_extract(
    engine: &Engine<FoRule>,
    w: &Witness<FoRule>,
    l: &FOTerm,
) -> Result<(Vec<Step>, Substitution, BTreeMap<String, Witness<FoRule>>)> {
    match l.view() {
        TreeRepr::Rule(FoRule::Var(x), _) => {
            let mut tau = Substitution::default();
            tau.insert(x.clone(), w.source()?);
            let mut wits = BTreeMap::new();
            wits.insert(x.clone(), w.clone());
            Ok((Vec::new(), tau, wits))
        }
        TreeRepr::Rule(r, ls) => {
            let (mut prefix, hat) = engine.prepone_zero_steps(w)?;
            let Hat::Lift { rule, children } = hat else {
                return Err(Error::ShapeMismatch("lhs against axiom lift".into()));
            };
            if rule != *r {
                return Err(Error::ShapeMismatch(format!(
                    "lhs expects {}, witness lifts {}",
                    r.display_name(),
                    rule.display_name()
                )));
            }
            let mut tau = Substitution::default();
            let mut wits = BTreeMap::new();
            for (i, (lc, c)) in ls.iter().zip(children.iter()).enumerate() {
                let (pi, ti, wi) = fo_pattern_extract(engine, c, lc)?;
                prefix.extend(pi.into_iter().map(|st| st.under(i)));
                tau.merge(ti)?;
                wits.extend(wi);
            }
            Ok((prefix, tau, wits))
        }
        _ => Err(Error::Domain("left-hand sides must be finite terms".into())),
    }
}

/// Pattern filling (coinduction on the rhs `r`): assemble
/// `τ·r ↠_δ σ·r` from per-variable witnesses, reusing `r`'s regular
/// structure for the witness's cycles.
pub fn fo_pattern_fill(
    r: &FOTerm,
    tau: &Substitution,
    wits: &BTreeMap<String, Witness<FoRule>>,
    delta: &Ordinal,
) -> Result<Witness<FoRule>> {
    enum St {
        InProgress { label: Label, used: bool },
        Done(Witness<FoRule>),
    }
    fn go(
        t: &FOTerm,
        tau: &Substitution,
        wits: &BTreeMap<String, Witness<FoRule>>,
        delta: &Ordinal,
        memo: &mut HashMap<*const (), St>,
    ) -> Result<Witness<FoRule>> {
        let r = t.resolve()?;
        if let TreeRepr::Rule(FoRule::Var(x), _) = r.view() {
            return wits
                .get(x)
                .cloned()
                .ok_or_else(|| Error::MissingVariableWitness(x.clone()));
        }
        let key = r.ptr();
        match memo.get_mut(&key) {
            Some(St::InProgress { label, used }) => {
                *used = true;
                return Ok(Witness::back(*label));
            }
            Some(St::Done(w)) => return Ok(w.clone()),
            None => {}
        }
        let label = Label::fresh();
        memo.insert(key, St::InProgress { label, used: false });
        let hat = match r.view() {
            TreeRepr::Axiom(s) => Hat::Axiom(*s),
            TreeRepr::Rule(rule, cs) => {
                let children: Result<Vec<_>> =
                    cs.iter().map(|c| go(c, tau, wits, delta, memo)).collect();
                Hat::Lift { rule: rule.clone(), children: children? }
            }
            _ => unreachable!(),
        };
        let mut w = Witness::split(
            subst_apply(tau, &r),
            delta.clone(),
            Vec::new(),
            Vec::new(),
            hat,
        );
        if let Some(St::InProgress { used: true, .. }) = memo.get(&key) {
            w = Witness::rec_unchecked(label, w);
        }
        memo.insert(key, St::Done(w.clone()));
        Ok(w)
    }
    go(r, tau, wits, delta, &mut HashMap::new())
}

/// Property Q for left-linear iTRS: root steps via extraction + filling,
/// congruence steps via the shared lift-inversion recursion.
pub struct FoQStep {
    pub system: Arc<FoSystem>,
}

impl QStep<FoRule> for FoQStep {
    fn q_step(
        &self,
        w: &Witness<FoRule>,
        st: &Step,
        engine: &Engine<FoRule>,
    ) -> Result<(Vec<Step>, Witness<FoRule>)> {
        if !st.path.is_empty() {
            return q_step_congruence(engine, w, st);
        }
        let rule = self
            .system
            .rule(&st.name)
            .ok_or_else(|| Error::StepNotApplicable(st.name.clone()))?;
        let delta = w.ordinal()?;
        let (mut prefix, tau, wits) = fo_pattern_extract(engine, w, &rule.lhs)?;
        let w2 = fo_pattern_fill(&rule.rhs, &tau, &wits, &delta)?;
        prefix.push(Step::root(st.name.clone()));
        Ok((prefix, w2))
    }
}

/// Name resolution for the tree grammar over a signature: known symbols are
/// constructors, unknown nullary names are variables.
pub struct FoResolver<'a> {
    pub sig: &'a Signature,
}

impl TreeResolver<FoRule> for FoResolver<'_> {
    fn resolve_rule(&self, name: &str, arity: usize) -> Result<FoRule> {
        match self.sig.lookup(name) {
            Some(coind) => {
                if coind.len() != arity {
                    return Err(Error::Domain(format!(
                        "symbol {name} has arity {}, applied to {arity}",
                        coind.len()
                    )));
                }
                Ok(FoRule::Cons { sym: name.to_string(), coind: coind.clone() })
            }
            None if arity == 0 => Ok(FoRule::Var(name.to_string())),
            None => Err(Error::Domain(format!("unknown symbol {name}/{arity}"))),
        }
    }

    fn parse_stmt(&self, text: &str) -> Result<UnitStmt> {
        match text.trim() {
            "" | "•" => Ok(UnitStmt),
            other => Err(Error::Domain(format!("unexpected statement literal {other}"))),
        }
    }

    fn unit_stmt(&self) -> Option<UnitStmt> {
        Some(UnitStmt)
    }
}

/// Parse a `.trs` file:
///
/// ```text
/// sig f/1 g/1 a/0 ;
/// inductive f.1 ;
/// rule1 : a -> f(g(a)) ;
/// g(f(x)) -> f(x) ;       -- auto-named r2
/// ```
pub fn parse_trs(src: &str) -> Result<FoSystem> {
    let mut lx = Lexer::new(src);
    let mut sig = Signature::default();
    if !lx.eat_kw("sig") {
        return Err(lx.error("expected 'sig'"));
    }
    loop {
        if lx.eat(';') {
            break;
        }
        let name = lx.ident()?;
        lx.expect('/')?;
        let arity = lx.nat()?;
        sig.declare(name, arity).map_err(|e| lx.error(e.to_string()))?;
    }
    while lx.eat_kw("inductive") {
        let name = lx.ident()?;
        lx.expect('.')?;
        let i = lx.nat()?;
        sig.set_inductive(&name, i).map_err(|e| lx.error(e.to_string()))?;
        lx.expect(';')?;
    }
    let mut system = FoSystem::new(sig.clone());
    let mut count = 0usize;
    while !lx.at_end() {
        count += 1;
        let resolver = FoResolver { sig: &system.sig };
        let save = lx.pos;
        // Optional `name :` prefix.
        let name = match lx.ident() {
            Ok(id) if lx.eat(':') => id,
            _ => {
                lx.pos = save;
                format!("r{count}")
            }
        };
        let resolver_ref = &resolver;
        let lhs = crate::text::parse_tree_at(&mut lx, resolver_ref, &mut Vec::new())?;
        if !lx.eat('-') || !lx.eat('>') {
            return Err(lx.error("expected '->'"));
        }
        let rhs = crate::text::parse_tree_at(&mut lx, resolver_ref, &mut Vec::new())?;
        lx.expect(';')?;
        system
            .add_rule(name, lhs, rhs)
            .map_err(|e| lx.error(e.to_string()))?;
    }
    Ok(system)
}

/// The running-example system {a →₁ f(g(a)), g(f(x)) →₂ f(x)}.
pub fn example_system() -> FoSystem {
    parse_trs(
        "sig f/1 g/1 a/0 ;\n\
         rule1 : a -> f(g(a)) ;\n\
         rule2 : g(f(x)) -> f(x) ;\n",
    )
    .expect("example system parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{parse_tree, print_tree};

    #[test]
    fn trs_parsing_and_rule_naming() {
        let sys = parse_trs(
            "sig f/1 g/1 a/0 ;\n\
             inductive f.1 ;\n\
             rule1 : a -> f(g(a)) ;\n\
             g(f(x)) -> f(x) ;\n",
        )
        .unwrap();
        assert!(sys.rule("rule1").is_some());
        assert!(sys.rule("r2").is_some());
        assert_eq!(sys.sig.lookup("f"), Some(&vec![false]));
        assert_eq!(sys.sig.lookup("g"), Some(&vec![true]));
        assert!(parse_trs("sig f/1 ; x -> f(x) ;").is_err());
        assert!(matches!(
            parse_trs("sig c/2 a/0 ; c(x,x) -> a ;"),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn term_parse_print_roundtrip() {
        let sys = example_system();
        let resolver = FoResolver { sig: &sys.sig };
        for src in ["f(g(a))", "rec t. f(t)", "g(rec u. f(g(u)))"] {
            let t = parse_tree(src, &resolver).unwrap();
            let t2 = parse_tree(&print_tree(&t).unwrap(), &resolver).unwrap();
            assert!(crate::tree::bisimilar(&t, &t2).unwrap());
        }
    }

    #[test]
    fn matching_and_substitution() {
        let sys = example_system();
        let rule = sys.rule("rule2").unwrap();
        let t = sys
            .sig
            .cons("g", vec![sys.sig.cons("f", vec![sys.sig.cons("a", vec![]).unwrap()]).unwrap()])
            .unwrap();
        let sigma = match_lhs(&rule.lhs, &t).unwrap();
        let reduced = subst_apply(&sigma, &rule.rhs);
        assert_eq!(crate::tree::truncate(&reduced, 4).unwrap().to_string(), "f(a)");
        assert!(match_lhs(&rule.lhs, &sys.sig.cons("a", vec![]).unwrap()).is_err());
    }

    #[test]
    fn oracle_enumerates_root_redexes() {
        let sys = Arc::new(example_system());
        let oracle = FoOracle { system: Arc::clone(&sys) };
        let a = sys.sig.cons("a", vec![]).unwrap();
        let names: Vec<String> =
            oracle.enumerate(&a).unwrap().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, ["rule1"]);
        let t = oracle.apply("rule1", &a).unwrap();
        assert_eq!(crate::tree::truncate(&t, 5).unwrap().to_string(), "f(g(a))");
        assert!(matches!(oracle.apply("rule2", &a), Err(Error::StepNotApplicable(_))));
    }

    #[test]
    fn inductive_positions_block_cycles() {
        let mut sig = Signature::default();
        sig.declare("f", 1).unwrap();
        sig.set_inductive("f", 1).unwrap();
        let l = crate::tree::Label::fresh();
        let body = sig.cons("f", vec![DTree::back(l)]).unwrap();
        assert!(matches!(DTree::rec(l, body), Err(Error::Unguarded(_))));
    }
}
