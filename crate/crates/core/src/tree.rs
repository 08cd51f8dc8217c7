//! Regular and lazy derivation trees over a rule family, with truncation,
//! the truncation ultrametric and bisimilarity.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::Hash;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};

/// Guard budget for unproductive unfolding chains (rec/thunk layers that
/// never expose a rule node).
pub const GUARD_FUEL: usize = 10_000;

/// Node budget for truncation and other eager traversals; exhausting it
/// signals a non-productive (e.g. endlessly inductive) tree.
pub const TRAVERSAL_FUEL: usize = 2_000_000;

static NEXT_LABEL: AtomicU64 = AtomicU64::new(0);

/// A binder label for rec/back-edge cycles. Fresh labels are globally unique.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(u64);

impl Label {
    pub fn fresh() -> Label {
        Label(NEXT_LABEL.fetch_add(1, AtomicOrdering::Relaxed))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// The one-point statement set used by term instances.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct UnitStmt;

impl fmt::Display for UnitStmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "•")
    }
}

/// A family of derivation rules. Each value is a fully instantiated rule
/// (carrying whatever parameters its schema needs), so it knows its own
/// conclusion and premiss shapes.
pub trait RuleFamily: Clone + Eq + Hash + fmt::Debug + Send + Sync + 'static {
    /// The statements concluded by rules of this family.
    type Stmt: Clone + Eq + Hash + fmt::Debug + fmt::Display + Send + Sync + 'static;

    fn arity(&self) -> usize;
    /// Whether premiss `i` (0-based) is coinductive.
    fn coind(&self, i: usize) -> bool;
    fn conclusion(&self) -> Self::Stmt;
    /// Check that the given premiss statements are in this rule's domain.
    fn check_premisses(&self, premisses: &[Self::Stmt]) -> Result<()>;
    fn display_name(&self) -> String;
}

/// The partial conclusion function of a rule: validates the premisses and
/// returns the rule's conclusion.
pub fn rule_conclude<R: RuleFamily>(rule: &R, premisses: &[R::Stmt]) -> Result<R::Stmt> {
    if premisses.len() != rule.arity() {
        return Err(Error::Domain(format!(
            "rule {} expects {} premisses, got {}",
            rule.display_name(),
            rule.arity(),
            premisses.len()
        )));
    }
    rule.check_premisses(premisses)?;
    Ok(rule.conclusion())
}

pub struct Thunk<R: RuleFamily> {
    cell: OnceLock<Result<DTree<R>>>,
    gen: Box<dyn Fn() -> Result<DTree<R>> + Send + Sync>,
}

impl<R: RuleFamily> Thunk<R> {
    fn force(&self) -> Result<DTree<R>> {
        self.cell.get_or_init(|| (self.gen)()).clone()
    }
}

pub(crate) enum TreeRepr<R: RuleFamily> {
    Rule(R, Vec<DTree<R>>),
    Rec {
        label: Label,
        body: DTree<R>,
        unrolled: OnceLock<DTree<R>>,
    },
    Back(Label),
    Axiom(R::Stmt),
    Thunk(Thunk<R>),
}

/// A derivation tree: a rule node, a regular cycle (rec/back-edge), a
/// truncation axiom, or a lazy generator. Cheap to clone (shared).
pub struct DTree<R: RuleFamily> {
    repr: Arc<TreeRepr<R>>,
}

impl<R: RuleFamily> Clone for DTree<R> {
    fn clone(&self) -> Self {
        DTree { repr: Arc::clone(&self.repr) }
    }
}

impl<R: RuleFamily> fmt::Debug for DTree<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.repr {
            TreeRepr::Rule(r, cs) => {
                write!(f, "{}", r.display_name())?;
                if !cs.is_empty() {
                    f.debug_list().entries(cs).finish()?;
                }
                Ok(())
            }
            TreeRepr::Rec { label, body, .. } => write!(f, "rec {label}. {body:?}"),
            TreeRepr::Back(l) => write!(f, "{l}"),
            TreeRepr::Axiom(s) => write!(f, "#{s}"),
            TreeRepr::Thunk(_) => write!(f, "<thunk>"),
        }
    }
}

impl<R: RuleFamily> DTree<R> {
    fn from_repr(repr: TreeRepr<R>) -> Self {
        DTree { repr: Arc::new(repr) }
    }

    pub(crate) fn ptr(&self) -> *const () {
        Arc::as_ptr(&self.repr) as *const ()
    }

    pub(crate) fn view(&self) -> &TreeRepr<R> {
        &self.repr
    }

    /// Build a rule node, checking arity and (where the children's
    /// conclusions are locally available) the rule's premiss domain.
    pub fn rule(r: R, children: Vec<DTree<R>>) -> Result<Self> {
        if children.len() != r.arity() {
            return Err(Error::Domain(format!(
                "rule {} expects {} premisses, got {}",
                r.display_name(),
                r.arity(),
                children.len()
            )));
        }
        let stmts: Option<Vec<R::Stmt>> =
            children.iter().map(|c| c.conclusion_local()).collect();
        if let Some(stmts) = stmts {
            r.check_premisses(&stmts)?;
        }
        Ok(Self::from_repr(TreeRepr::Rule(r, children)))
    }

    pub fn rule_unchecked(r: R, children: Vec<DTree<R>>) -> Self {
        Self::from_repr(TreeRepr::Rule(r, children))
    }

    pub fn axiom(stmt: R::Stmt) -> Self {
        Self::from_repr(TreeRepr::Axiom(stmt))
    }

    pub fn back(label: Label) -> Self {
        Self::from_repr(TreeRepr::Back(label))
    }

    /// Bind a cycle. Fails unless every path from `body` to a matching back
    /// edge crosses a coinductive premiss (guardedness).
    pub fn rec(label: Label, body: DTree<R>) -> Result<Self> {
        check_guarded(&body, label)?;
        Ok(Self::rec_unchecked(label, body))
    }

    pub fn rec_unchecked(label: Label, body: DTree<R>) -> Self {
        Self::from_repr(TreeRepr::Rec { label, body, unrolled: OnceLock::new() })
    }

    pub fn thunk(gen: impl Fn() -> Result<DTree<R>> + Send + Sync + 'static) -> Self {
        Self::from_repr(TreeRepr::Thunk(Thunk { cell: OnceLock::new(), gen: Box::new(gen) }))
    }

    pub fn is_axiom(&self) -> bool {
        matches!(&*self.repr, TreeRepr::Axiom(_))
    }

    /// The conclusion statement, if it can be read off without forcing
    /// thunks or resolving back edges.
    pub fn conclusion_local(&self) -> Option<R::Stmt> {
        let mut cur = self.clone();
        for _ in 0..GUARD_FUEL {
            match &*cur.repr {
                TreeRepr::Rule(r, _) => return Some(r.conclusion()),
                TreeRepr::Axiom(s) => return Some(s.clone()),
                TreeRepr::Rec { body, .. } => cur = body.clone(),
                TreeRepr::Back(_) => return None,
                TreeRepr::Thunk(t) => match t.cell.get() {
                    Some(Ok(forced)) => cur = forced.clone(),
                    _ => return None,
                },
            }
        }
        None
    }

    /// The conclusion statement, forcing thunks as needed.
    pub fn conclusion(&self) -> Result<R::Stmt> {
        let mut cur = self.clone();
        for _ in 0..GUARD_FUEL {
            match &*cur.repr {
                TreeRepr::Rule(r, _) => return Ok(r.conclusion()),
                TreeRepr::Axiom(s) => return Ok(s.clone()),
                TreeRepr::Rec { body, .. } => cur = body.clone(),
                TreeRepr::Back(l) => return Err(Error::UnboundBackEdge(l.to_string())),
                TreeRepr::Thunk(t) => cur = t.force()?,
            }
        }
        Err(Error::NonProductive("conclusion: guard budget exhausted".into()))
    }

    /// Expose the root rule node, unrolling recs (cached, so pointer-stable)
    /// and forcing thunks.
    pub fn unfold(&self) -> Result<(R, Vec<DTree<R>>)> {
        let t = self.resolve()?;
        match &*t.repr {
            TreeRepr::Rule(r, cs) => Ok((r.clone(), cs.clone())),
            TreeRepr::Axiom(_) => {
                Err(Error::Domain("cannot unfold a truncation axiom".into()))
            }
            _ => unreachable!("resolve returns a rule or axiom"),
        }
    }

    /// Resolve to a `Rule` or `Axiom` rooted tree. Rec unrollings are cached
    /// per node, so repeated resolution of a regular tree visits finitely
    /// many distinct pointers.
    pub(crate) fn resolve(&self) -> Result<DTree<R>> {
        let mut cur = self.clone();
        for _ in 0..GUARD_FUEL {
            match &*cur.repr {
                TreeRepr::Rule(..) | TreeRepr::Axiom(_) => return Ok(cur),
                TreeRepr::Back(l) => return Err(Error::UnboundBackEdge(l.to_string())),
                TreeRepr::Thunk(t) => cur = t.force()?,
                TreeRepr::Rec { label, body, unrolled } => {
                    let next = unrolled
                        .get_or_init(|| subst_back(body, *label, &cur))
                        .clone();
                    cur = next;
                }
            }
        }
        Err(Error::NonProductive("resolve: guard budget exhausted".into()))
    }

    /// True when the tree contains no thunk (syntactically).
    pub fn is_thunk_free(&self) -> bool {
        fn go<R: RuleFamily>(t: &DTree<R>, seen: &mut HashSet<*const ()>) -> bool {
            if !seen.insert(t.ptr()) {
                return true;
            }
            match t.view() {
                TreeRepr::Rule(_, cs) => cs.iter().all(|c| go(c, seen)),
                TreeRepr::Rec { body, .. } => go(body, seen),
                TreeRepr::Back(_) | TreeRepr::Axiom(_) => true,
                TreeRepr::Thunk(_) => false,
            }
        }
        go(self, &mut HashSet::new())
    }
}

/// Replace `Back(label)` with `rep` throughout (sharing-preserving).
pub(crate) fn subst_back<R: RuleFamily>(t: &DTree<R>, label: Label, rep: &DTree<R>) -> DTree<R> {
    fn go<R: RuleFamily>(
        t: &DTree<R>,
        label: Label,
        rep: &DTree<R>,
        memo: &mut HashMap<*const (), DTree<R>>,
    ) -> DTree<R> {
        if let Some(hit) = memo.get(&t.ptr()) {
            return hit.clone();
        }
        let out = match t.view() {
            TreeRepr::Back(l) if *l == label => rep.clone(),
            TreeRepr::Back(_) | TreeRepr::Axiom(_) | TreeRepr::Thunk(_) => t.clone(),
            TreeRepr::Rule(r, cs) => {
                let cs2: Vec<_> = cs.iter().map(|c| go(c, label, rep, memo)).collect();
                if cs2.iter().zip(cs).all(|(a, b)| a.ptr() == b.ptr()) {
                    t.clone()
                } else {
                    DTree::rule_unchecked(r.clone(), cs2)
                }
            }
            TreeRepr::Rec { label: l2, body, .. } => {
                if *l2 == label {
                    t.clone()
                } else {
                    let b2 = go(body, label, rep, memo);
                    if b2.ptr() == body.ptr() {
                        t.clone()
                    } else {
                        DTree::rec_unchecked(*l2, b2)
                    }
                }
            }
        };
        memo.insert(t.ptr(), out.clone());
        out
    }
    go(t, label, rep, &mut HashMap::new())
}

/// Guardedness scan: every syntactic path from `body` to `Back(target)` must
/// cross a coinductive premiss. Thunks are opaque (they must not capture
/// outer labels).
fn check_guarded<R: RuleFamily>(body: &DTree<R>, target: Label) -> Result<()> {
    fn go<R: RuleFamily>(
        t: &DTree<R>,
        target: Label,
        guarded: bool,
        memo: &mut HashSet<(*const (), bool)>,
    ) -> Result<()> {
        if !memo.insert((t.ptr(), guarded)) {
            return Ok(());
        }
        match t.view() {
            TreeRepr::Back(l) if *l == target && !guarded => {
                Err(Error::Unguarded(target.to_string()))
            }
            TreeRepr::Back(_) | TreeRepr::Axiom(_) | TreeRepr::Thunk(_) => Ok(()),
            TreeRepr::Rule(r, cs) => {
                for (i, c) in cs.iter().enumerate() {
                    go(c, target, guarded || r.coind(i), memo)?;
                }
                Ok(())
            }
            TreeRepr::Rec { label, body, .. } => {
                if *label == target {
                    Ok(())
                } else {
                    go(body, target, guarded, memo)
                }
            }
        }
    }
    go(body, target, false, &mut HashSet::new())
}

/// Labels occurring free (unbound) in the tree.
pub fn free_backedges<R: RuleFamily>(t: &DTree<R>) -> HashSet<Label> {
    fn go<R: RuleFamily>(
        t: &DTree<R>,
        bound: &mut Vec<Label>,
        out: &mut HashSet<Label>,
        seen: &mut HashSet<*const ()>,
    ) {
        if !seen.insert(t.ptr()) {
            return;
        }
        match t.view() {
            TreeRepr::Back(l) => {
                if !bound.contains(l) {
                    out.insert(*l);
                }
            }
            TreeRepr::Axiom(_) | TreeRepr::Thunk(_) => {}
            TreeRepr::Rule(_, cs) => {
                for c in cs {
                    go(c, bound, out, seen);
                }
            }
            TreeRepr::Rec { label, body, .. } => {
                bound.push(*label);
                go(body, bound, out, seen);
                bound.pop();
            }
        }
    }
    let mut out = HashSet::new();
    go(t, &mut Vec::new(), &mut out, &mut HashSet::new());
    out
}

/// A fully forced finite derivation tree, as produced by truncation.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum FiniteTree<R: RuleFamily> {
    Rule(R, Vec<FiniteTree<R>>),
    Axiom(R::Stmt),
}

impl<R: RuleFamily> FiniteTree<R> {
    pub fn to_dtree(&self) -> DTree<R> {
        match self {
            FiniteTree::Rule(r, cs) => {
                DTree::rule_unchecked(r.clone(), cs.iter().map(|c| c.to_dtree()).collect())
            }
            FiniteTree::Axiom(s) => DTree::axiom(s.clone()),
        }
    }

    pub fn count_rules<F: Fn(&R) -> bool>(&self, pred: &F) -> usize {
        match self {
            FiniteTree::Rule(r, cs) => {
                (pred(r) as usize) + cs.iter().map(|c| c.count_rules(pred)).sum::<usize>()
            }
            FiniteTree::Axiom(_) => 0,
        }
    }
}

impl<R: RuleFamily> fmt::Display for FiniteTree<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FiniteTree::Rule(r, cs) => {
                write!(f, "{}", r.display_name())?;
                if !cs.is_empty() {
                    write!(f, "(")?;
                    for (i, c) in cs.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{c}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
            FiniteTree::Axiom(s) => {
                let txt = s.to_string();
                if txt == "•" {
                    write!(f, "*")
                } else {
                    write!(f, "#{{{txt}}}")
                }
            }
        }
    }
}

/// Truncate at coinductive depth `d`: budget 0 seals with a truncation
/// axiom; otherwise the root is kept and child `i` is truncated at
/// `d - coind(i)`.
pub fn truncate<R: RuleFamily>(t: &DTree<R>, d: usize) -> Result<FiniteTree<R>> {
    let mut fuel = TRAVERSAL_FUEL;
    truncate_fueled(t, d, &mut fuel)
}

fn truncate_fueled<R: RuleFamily>(
    t: &DTree<R>,
    d: usize,
    fuel: &mut usize,
) -> Result<FiniteTree<R>> {
    if *fuel == 0 {
        return Err(Error::NonProductive("truncate: traversal budget exhausted".into()));
    }
    *fuel -= 1;
    if d == 0 {
        return Ok(FiniteTree::Axiom(t.conclusion()?));
    }
    let r = t.resolve()?;
    match r.view() {
        TreeRepr::Axiom(s) => Ok(FiniteTree::Axiom(s.clone())),
        TreeRepr::Rule(rule, cs) => {
            let mut out = Vec::with_capacity(cs.len());
            for (i, c) in cs.iter().enumerate() {
                let d2 = if rule.coind(i) { d - 1 } else { d };
                out.push(truncate_fueled(c, d2, fuel)?);
            }
            Ok(FiniteTree::Rule(rule.clone(), out))
        }
        _ => unreachable!(),
    }
}

/// The truncation ultrametric, decided up to a depth budget.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Distance {
    /// Distance is exactly 2^-d.
    Exact(usize),
    /// All truncations up to the budget agree: distance ≤ 2^-budget.
    AtMost(usize),
}

impl Distance {
    pub fn as_f64(&self) -> f64 {
        match self {
            Distance::Exact(d) | Distance::AtMost(d) => 0.5f64.powi(*d as i32),
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Exact(d) => write!(f, "2^-{d}"),
            Distance::AtMost(d) => write!(f, "<=2^-{d}"),
        }
    }
}

/// d(s,t) = inf { 2^-d : ⌊s⌋_d = ⌊t⌋_d }, searched up to `budget`.
pub fn tree_distance<R: RuleFamily>(s: &DTree<R>, t: &DTree<R>, budget: usize) -> Result<Distance> {
    for d in 0..=budget {
        if truncate(s, d)? != truncate(t, d)? {
            return Ok(Distance::Exact(d.saturating_sub(1)));
        }
    }
    Ok(Distance::AtMost(budget))
}

/// Equality of infinite unrollings, decided by coinductive pairing over the
/// finite resolved-state graphs. Requires thunk-free inputs.
pub fn bisimilar<R: RuleFamily>(s: &DTree<R>, t: &DTree<R>) -> Result<bool> {
    if !s.is_thunk_free() || !t.is_thunk_free() {
        return Err(Error::NotRegular);
    }
    let mut assumed: HashSet<(*const (), *const ())> = HashSet::new();
    let mut stack = vec![(s.clone(), t.clone())];
    while let Some((a, b)) = stack.pop() {
        let ra = a.resolve()?;
        let rb = b.resolve()?;
        if ra.ptr() == rb.ptr() || !assumed.insert((ra.ptr(), rb.ptr())) {
            continue;
        }
        match (ra.view(), rb.view()) {
            (TreeRepr::Axiom(x), TreeRepr::Axiom(y)) => {
                if x != y {
                    return Ok(false);
                }
            }
            (TreeRepr::Rule(r1, cs1), TreeRepr::Rule(r2, cs2)) => {
                if r1 != r2 {
                    return Ok(false);
                }
                for (c1, c2) in cs1.iter().zip(cs2.iter()) {
                    stack.push((c1.clone(), c2.clone()));
                }
            }
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// The distinct resolved states reachable from `t` (root rule or axiom
/// views), capped at `cap` states.
pub fn reachable_states<R: RuleFamily>(t: &DTree<R>, cap: usize) -> Result<Vec<DTree<R>>> {
    let mut seen: HashSet<*const ()> = HashSet::new();
    let mut out = Vec::new();
    let mut stack = vec![t.clone()];
    while let Some(x) = stack.pop() {
        let r = x.resolve()?;
        if !seen.insert(r.ptr()) {
            continue;
        }
        if out.len() >= cap {
            return Err(Error::NonProductive(format!(
                "state graph exceeds {cap} nodes"
            )));
        }
        if let TreeRepr::Rule(_, cs) = r.view() {
            for c in cs.iter().rev() {
                stack.push(c.clone());
            }
        }
        out.push(r);
    }
    Ok(out)
}

/// Well-formedness: every node (to coinductive depth `depth`) satisfies its
/// rule's conclusion equation on its children's conclusions.
pub fn validate_tree<R: RuleFamily>(t: &DTree<R>, depth: usize) -> Result<Vec<String>> {
    let mut violations = Vec::new();
    let mut seen: HashSet<(*const (), usize)> = HashSet::new();
    let mut stack = vec![(t.clone(), depth)];
    while let Some((x, d)) = stack.pop() {
        let r = x.resolve()?;
        if !seen.insert((r.ptr(), d)) {
            continue;
        }
        if let TreeRepr::Rule(rule, cs) = r.view() {
            let stmts: Result<Vec<R::Stmt>> = cs.iter().map(|c| c.conclusion()).collect();
            match stmts {
                Ok(stmts) => {
                    if let Err(e) = rule_conclude(rule, &stmts) {
                        violations.push(format!("at rule {}: {e}", rule.display_name()));
                    }
                }
                Err(e) => violations.push(format!(
                    "at rule {}: premiss conclusion unavailable: {e}",
                    rule.display_name()
                )),
            }
            if d > 0 {
                for (i, c) in cs.iter().enumerate() {
                    let d2 = if rule.coind(i) { d - 1 } else { d };
                    if d2 > 0 || !rule.coind(i) {
                        stack.push((c.clone(), d2));
                    }
                }
            }
        }
    }
    Ok(violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fo::{example_system, FoResolver, FOTerm};
    use crate::text::parse_tree;

    fn t(src: &str) -> FOTerm {
        let sys = example_system();
        parse_tree(src, &FoResolver { sig: &sys.sig }).unwrap()
    }

    #[test]
    fn truncate_examples() {
        assert_eq!(truncate(&t("f(g(a))"), 0).unwrap().to_string(), "*");
        assert_eq!(truncate(&t("f(g(a))"), 2).unwrap().to_string(), "f(g(*))");
        assert_eq!(truncate(&t("f(g(a))"), 5).unwrap().to_string(), "f(g(a))");
    }

    #[test]
    fn regular_trees_unroll() {
        let inf = t("rec x. f(x)");
        assert_eq!(truncate(&inf, 3).unwrap().to_string(), "f(f(f(*)))");
        let (_, cs) = inf.unfold().unwrap();
        assert!(bisimilar(&inf, &cs[0]).unwrap());
        assert!(!bisimilar(&inf, &t("rec x. g(x)")).unwrap());
    }

    #[test]
    fn unguarded_cycle_rejected() {
        // no constructor between rec and its back edge
        let label = Label::fresh();
        assert!(matches!(
            DTree::<crate::fo::FoRule>::rec(label, DTree::back(label)),
            Err(Error::Unguarded(_))
        ));
    }

    #[test]
    fn distance_is_ultrametric() {
        use rand::SeedableRng;
        let sys = example_system();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let terms: Vec<FOTerm> = (0..30)
            .map(|_| crate::gen::gen_fo_regular(&sys.sig, &mut rng, 4).unwrap())
            .collect();
        for a in &terms {
            assert_eq!(tree_distance(a, a, 12).unwrap().as_f64(), 2f64.powi(-12));
        }
        for a in &terms {
            for b in &terms {
                for c in &terms {
                    let ab = tree_distance(a, b, 12).unwrap().as_f64();
                    let bc = tree_distance(b, c, 12).unwrap().as_f64();
                    let ac = tree_distance(a, c, 12).unwrap().as_f64();
                    assert!(ac <= ab.max(bc) + 1e-12, "strong triangle violated");
                    assert_eq!(ab, tree_distance(b, a, 12).unwrap().as_f64());
                }
            }
        }
    }

    #[test]
    fn truncations_are_monotone() {
        use rand::SeedableRng;
        let sys = example_system();
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..40 {
            let a = crate::gen::gen_fo_regular(&sys.sig, &mut rng, 4).unwrap();
            for d in 0..6 {
                let shallow = truncate(&a, d).unwrap();
                let deeper = truncate(&a, d + 1).unwrap();
                assert_eq!(truncate(&deeper.to_dtree(), d).unwrap(), shallow);
            }
        }
    }

    #[test]
    fn validate_tree_flags_bad_arity() {
        let sys = example_system();
        let f = sys.sig.cons_rule("f").unwrap();
        let bad = DTree::rule_unchecked(f, Vec::new());
        assert!(!validate_tree(&bad, 3).unwrap().is_empty());
        assert!(validate_tree(&t("f(g(a))"), 5).unwrap().is_empty());
    }
}
