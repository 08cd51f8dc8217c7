//! The abc-infinitary λ-calculus instance: terms over Abs/App/variable
//! rules whose coinductive premiss markings are the flags a, b, c; bound
//! variables are de Bruijn indices to their Abs (locally nameless), free
//! variables are named. β is the single root zero step.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::compress::{q_step_congruence, Engine, QStep};
use crate::error::{Error, Result};
use crate::ord::Ordinal;
use crate::rewrite::{hat_source, Hat, Step, Witness, ZeroStepOracle};
use crate::text::Lexer;
use crate::tree::{reachable_states, DTree, Label, RuleFamily, TreeRepr, UnitStmt};

/// Coinductive markings of abstraction body (a), application function (b)
/// and argument (c).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct AbcFlags {
    pub a: bool,
    pub b: bool,
    pub c: bool,
}

impl AbcFlags {
    /// Parse `"001"`-style flag strings.
    pub fn parse(s: &str) -> Result<AbcFlags> {
        let b: Vec<bool> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Domain(format!("bad flag character {c}"))),
            })
            .collect::<Result<_>>()?;
        if b.len() != 3 {
            return Err(Error::Domain("flags must be three bits".into()));
        }
        Ok(AbcFlags { a: b[0], b: b[1], c: b[2] })
    }
}

impl fmt::Display for AbcFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.a as u8, self.b as u8, self.c as u8)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum LamRule {
    Free(String),
    Bound(u32),
    Abs(AbcFlags),
    App(AbcFlags),
}

impl RuleFamily for LamRule {
    type Stmt = UnitStmt;

    fn arity(&self) -> usize {
        match self {
            LamRule::Free(_) | LamRule::Bound(_) => 0,
            LamRule::Abs(_) => 1,
            LamRule::App(_) => 2,
        }
    }

    fn coind(&self, i: usize) -> bool {
        match self {
            LamRule::Free(_) | LamRule::Bound(_) => false,
            LamRule::Abs(f) => f.a,
            LamRule::App(f) => {
                if i == 0 {
                    f.b
                } else {
                    f.c
                }
            }
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
            LamRule::Free(x) => x.clone(),
            LamRule::Bound(k) => format!("b{k}"),
            LamRule::Abs(_) => "lam".into(),
            LamRule::App(_) => "app".into(),
        }
    }
}

pub type LamTerm = DTree<LamRule>;

/// Term builders for one flag setting.
#[derive(Clone, Copy, Debug)]
pub struct LamCtx {
    pub flags: AbcFlags,
}

impl LamCtx {
    pub fn new(flags: AbcFlags) -> Self {
        LamCtx { flags }
    }

    pub fn var(&self, name: impl Into<String>) -> LamTerm {
        DTree::rule_unchecked(LamRule::Free(name.into()), Vec::new())
    }

    pub fn bvar(&self, k: u32) -> LamTerm {
        DTree::rule_unchecked(LamRule::Bound(k), Vec::new())
    }

    pub fn abs(&self, body: LamTerm) -> LamTerm {
        DTree::rule_unchecked(LamRule::Abs(self.flags), vec![body])
    }

    pub fn app(&self, f: LamTerm, a: LamTerm) -> LamTerm {
        DTree::rule_unchecked(LamRule::App(self.flags), vec![f, a])
    }
}

const MAX_INDEX: u32 = 127;

/// Free de Bruijn indices of a term as a bitset: index j is free when some
/// occurrence `Bound(j + d)` sits under d binders. Computed by fixpoint
/// iteration over the regular state graph.
pub fn free_indices(t: &LamTerm) -> Result<u128> {
    let states = reachable_states(t, crate::tree::TRAVERSAL_FUEL)?;
    let index: HashMap<*const (), usize> =
        states.iter().enumerate().map(|(i, s)| (s.ptr(), i)).collect();
    let mut free = vec![0u128; states.len()];
    loop {
        let mut changed = false;
        for (i, s) in states.iter().enumerate() {
            let v = match s.view() {
                TreeRepr::Rule(LamRule::Bound(k), _) => {
                    if *k > MAX_INDEX {
                        return Err(Error::UnresolvedIndex(*k));
                    }
                    1u128 << k
                }
                TreeRepr::Rule(LamRule::Abs(_), cs) => {
                    let b = free[index[&cs[0].resolve()?.ptr()]];
                    b >> 1
                }
                TreeRepr::Rule(LamRule::App(_), cs) => {
                    free[index[&cs[0].resolve()?.ptr()]]
                        | free[index[&cs[1].resolve()?.ptr()]]
                }
                _ => 0,
            };
            if v | free[i] != free[i] {
                free[i] |= v;
                changed = true;
            }
        }
        if !changed {
            return Ok(free[index[&t.resolve()?.ptr()]]);
        }
    }
}

fn bits_at_or_above(bits: u128, cutoff: u32) -> bool {
    if cutoff > MAX_INDEX {
        false
    } else {
        bits >> cutoff != 0
    }
}

enum KnotState {
    InProgress { label: Label, used: bool },
    Done(LamTerm),
}

struct ShiftCtx {
    memo: HashMap<(*const (), u32), KnotState>,
    free: HashMap<*const (), u128>,
}

impl ShiftCtx {
    fn free_of(&mut self, t: &LamTerm) -> Result<u128> {
        let r = t.resolve()?;
        if let Some(v) = self.free.get(&r.ptr()) {
            return Ok(*v);
        }
        let v = free_indices(&r)?;
        self.free.insert(r.ptr(), v);
        Ok(v)
    }
}

/// Add `d` to every index ≥ `cutoff` (cycles preserved via fresh rec knots).
pub fn term_shift(t: &LamTerm, d: u32, cutoff: u32) -> Result<LamTerm> {
    if d == 0 {
        return Ok(t.clone());
    }
    let mut ctx = ShiftCtx { memo: HashMap::new(), free: HashMap::new() };
    shift_go(t, d, cutoff, &mut ctx)
}

fn shift_go(t: &LamTerm, d: u32, cutoff: u32, ctx: &mut ShiftCtx) -> Result<LamTerm> {
    if !bits_at_or_above(ctx.free_of(t)?, cutoff) {
        return Ok(t.clone());
    }
    let r = t.resolve()?;
    let key = (r.ptr(), cutoff);
    match ctx.memo.get_mut(&key) {
        Some(KnotState::InProgress { label, used }) => {
            *used = true;
            return Ok(DTree::back(*label));
        }
        Some(KnotState::Done(x)) => return Ok(x.clone()),
        None => {}
    }
    let label = Label::fresh();
    ctx.memo.insert(key, KnotState::InProgress { label, used: false });
    let (rule, cs) = r.unfold()?;
    let out = match &rule {
        LamRule::Bound(k) => {
            let k2 = if *k >= cutoff { k + d } else { *k };
            DTree::rule_unchecked(LamRule::Bound(k2), Vec::new())
        }
        LamRule::Free(_) => r.clone(),
        LamRule::Abs(_) => {
            let b = shift_go(&cs[0], d, cutoff + 1, ctx)?;
            DTree::rule_unchecked(rule.clone(), vec![b])
        }
        LamRule::App(_) => {
            let f = shift_go(&cs[0], d, cutoff, ctx)?;
            let a = shift_go(&cs[1], d, cutoff, ctx)?;
            DTree::rule_unchecked(rule.clone(), vec![f, a])
        }
    };
    let out = match ctx.memo.get(&key) {
        Some(KnotState::InProgress { used: true, .. }) => DTree::rec_unchecked(label, out),
        _ => out,
    };
    ctx.memo.insert(key, KnotState::Done(out.clone()));
    Ok(out)
}

/// Substitute `arg` for index `level` in `t`, decrementing higher indices
/// (the binder at `level` disappears); `arg` is shifted as it crosses
/// binders.
pub fn open_at(t: &LamTerm, arg: &LamTerm, level: u32) -> Result<LamTerm> {
    let mut ctx = ShiftCtx { memo: HashMap::new(), free: HashMap::new() };
    open_go(t, arg, level, &mut ctx)
}

fn open_go(t: &LamTerm, arg: &LamTerm, level: u32, ctx: &mut ShiftCtx) -> Result<LamTerm> {
    if !bits_at_or_above(ctx.free_of(t)?, level) {
        return Ok(t.clone());
    }
    let r = t.resolve()?;
    let key = (r.ptr(), level);
    match ctx.memo.get_mut(&key) {
        Some(KnotState::InProgress { label, used }) => {
            *used = true;
            return Ok(DTree::back(*label));
        }
        Some(KnotState::Done(x)) => return Ok(x.clone()),
        None => {}
    }
    let label = Label::fresh();
    ctx.memo.insert(key, KnotState::InProgress { label, used: false });
    let (rule, cs) = r.unfold()?;
    let out = match &rule {
        LamRule::Bound(k) => {
            if *k == level {
                term_shift(arg, level, 0)?
            } else if *k > level {
                DTree::rule_unchecked(LamRule::Bound(k - 1), Vec::new())
            } else {
                r.clone()
            }
        }
        LamRule::Free(_) => r.clone(),
        LamRule::Abs(_) => {
            let b = open_go(&cs[0], arg, level + 1, ctx)?;
            DTree::rule_unchecked(rule.clone(), vec![b])
        }
        LamRule::App(_) => {
            let f = open_go(&cs[0], arg, level, ctx)?;
            let a = open_go(&cs[1], arg, level, ctx)?;
            DTree::rule_unchecked(rule.clone(), vec![f, a])
        }
    };
    let out = match ctx.memo.get(&key) {
        Some(KnotState::InProgress { used: true, .. }) => DTree::rec_unchecked(label, out),
        _ => out,
    };
    ctx.memo.insert(key, KnotState::Done(out.clone()));
    Ok(out)
}

/// `s[t]`: substitute `t` for the outermost binder's occurrences in the
/// abstraction body `s`.
pub fn lam_subst(s: &LamTerm, t: &LamTerm) -> Result<LamTerm> {
    open_at(s, t, 0)
}

/// The β root zero step: `(λ.s)t → s[t]`.
pub fn beta_zero_step(t: &LamTerm) -> Result<LamTerm> {
    let (rule, cs) = t.unfold()?;
    let LamRule::App(_) = rule else {
        return Err(Error::NotARedex);
    };
    let (frule, fcs) = cs[0].unfold()?;
    let LamRule::Abs(_) = frule else {
        return Err(Error::NotARedex);
    };
    lam_subst(&fcs[0], &cs[1])
}

pub struct LamOracle;

impl ZeroStepOracle<LamRule> for LamOracle {
    fn enumerate(&self, t: &LamTerm) -> Result<Vec<(String, LamTerm)>> {
        match beta_zero_step(t) {
            Ok(res) => Ok(vec![("beta".into(), res)]),
            Err(Error::NotARedex) => Ok(Vec::new()),
            Err(e) => Err(e),
        }
    }

    fn apply(&self, name: &str, t: &LamTerm) -> Result<LamTerm> {
        if name != "beta" {
            return Err(Error::StepNotApplicable(name.to_string()));
        }
        beta_zero_step(t).map_err(|_| Error::StepNotApplicable("beta".into()))
    }
}

/// Pattern extraction at a β-redex: prepone until the witness exposes
/// `lift_@` over `lift_λ`, returning the flattened prefix, the body
/// witness `u′ ↠_δ u` and the argument hat `v′ ↠̂_δ v`.
pub fn lam_pattern_extract(
    engine: &Engine<LamRule>,
    w: &Witness<LamRule>,
) -> Result<(Vec<Step>, Witness<LamRule>, Hat<LamRule>)> {
    let (mut prefix, hat0) = engine.prepone_zero_steps(w)?;
    let Hat::Lift { rule: LamRule::App(_), children } = hat0 else {
        return Err(Error::ShapeMismatch("witness target is not an application".into()));
    };
    let [wf, wa]: [Witness<LamRule>; 2] =
        children.try_into().map_err(|_| Error::Internal("app lift arity".into()))?;
    let (p1, hat1) = engine.prepone_zero_steps(&wf)?;
    let Hat::Lift { rule: LamRule::Abs(_), children: abs_children } = hat1 else {
        return Err(Error::ShapeMismatch("function side is not an abstraction".into()));
    };
    let wu = abs_children.into_iter().next().ok_or_else(|| {
        Error::Internal("abs lift arity".into())
    })?;
    let (p2, hat2) = engine.prepone_zero_steps(&wa)?;
    prefix.extend(p1.into_iter().map(|s| s.under(0)));
    prefix.extend(p2.into_iter().map(|s| s.under(1)));
    Ok((prefix, wu, hat2))
}

/// Shift a hat witness's terms by `d` (indices ≥ `cutoff`).
fn shift_hat(h: &Hat<LamRule>, d: u32, cutoff: u32) -> Result<Hat<LamRule>> {
    if d == 0 {
        return Ok(h.clone());
    }
    let mut memo = HashMap::new();
    shift_hat_go(h, d, cutoff, &mut memo)
}

fn wit_mentions(w: &Witness<LamRule>, cutoff: u32) -> Result<bool> {
    if !w.is_thunk_free() {
        return Ok(true);
    }
    let src = w.source()?;
    if bits_at_or_above(free_indices(&src)?, cutoff) {
        return Ok(true);
    }
    let tgt = crate::rewrite::witness_target(w)?;
    Ok(bits_at_or_above(free_indices(&tgt)?, cutoff))
}

enum WKnot {
    InProgress { label: Label, used: bool },
    Done(Witness<LamRule>),
}

fn shift_hat_go(
    h: &Hat<LamRule>,
    d: u32,
    cutoff: u32,
    memo: &mut HashMap<(*const (), u32), WKnot>,
) -> Result<Hat<LamRule>> {
    match h {
        Hat::Axiom(s) => Ok(Hat::Axiom(*s)),
        Hat::Lift { rule, children } => {
            let rule2 = match rule {
                LamRule::Bound(k) if *k >= cutoff => LamRule::Bound(k + d),
                other => other.clone(),
            };
            let inner_cut = |i: usize| if matches!(rule, LamRule::Abs(_)) && i == 0 {
                cutoff + 1
            } else {
                cutoff
            };
            let cs: Result<Vec<_>> = children
                .iter()
                .enumerate()
                .map(|(i, c)| shift_wit_go(c, d, inner_cut(i), memo))
                .collect();
            Ok(Hat::Lift { rule: rule2, children: cs? })
        }
    }
}

fn shift_wit_go(
    w: &Witness<LamRule>,
    d: u32,
    cutoff: u32,
    memo: &mut HashMap<(*const (), u32), WKnot>,
) -> Result<Witness<LamRule>> {
    if !wit_mentions(w, cutoff)? {
        return Ok(w.clone());
    }
    let r = w.resolve()?;
    let key = (r.ptr(), cutoff);
    match memo.get_mut(&key) {
        Some(WKnot::InProgress { label, used }) => {
            *used = true;
            return Ok(Witness::back(*label));
        }
        Some(WKnot::Done(x)) => return Ok(x.clone()),
        None => {}
    }
    let label = Label::fresh();
    memo.insert(key, WKnot::InProgress { label, used: false });
    let sv = r.split_view()?;
    let mut segments = Vec::with_capacity(sv.segments.len());
    for seg in &sv.segments {
        segments.push(crate::rewrite::Segment {
            steps: seg.steps.clone(),
            ordinal: seg.ordinal.clone(),
            hat: shift_hat_go(&seg.hat, d, cutoff, memo)?,
        });
    }
    let out = Witness::split(
        term_shift(&sv.source, d, cutoff)?,
        sv.ordinal.clone(),
        segments,
        sv.trailing.clone(),
        shift_hat_go(&sv.final_hat, d, cutoff, memo)?,
    );
    let out = match memo.get(&key) {
        Some(WKnot::InProgress { used: true, .. }) => Witness::rec_unchecked(label, out),
        _ => out,
    };
    memo.insert(key, WKnot::Done(out.clone()));
    Ok(out)
}

/// Pattern filling: from `wu : u′ ↠_δ u` and `hat_v : v′ ↠̂_δ v`, build
/// `u′[v′] ↠_δ u[v]` by the four-case nested induction/coinduction on the
/// preponed body witness.
pub fn lam_pattern_fill(
    engine: &Engine<LamRule>,
    wu: &Witness<LamRule>,
    hat_v: &Hat<LamRule>,
    delta: &Ordinal,
) -> Result<Witness<LamRule>> {
    let v_src = hat_source(hat_v)?;
    let mut memo = HashMap::new();
    fill_go(engine, wu, hat_v, &v_src, 0, delta, &mut memo)
}

fn fill_go(
    engine: &Engine<LamRule>,
    wu: &Witness<LamRule>,
    hat_v: &Hat<LamRule>,
    v_src: &LamTerm,
    level: u32,
    delta: &Ordinal,
    memo: &mut HashMap<(*const (), u32), WKnot>,
) -> Result<Witness<LamRule>> {
    if !wit_mentions(wu, level)? {
        // Neither endpoint mentions the substituted binder or anything
        // above it, so the substitution is the identity here.
        return Ok(wu.clone());
    }
    let r = wu.resolve()?;
    let key = (r.ptr(), level);
    match memo.get_mut(&key) {
        Some(WKnot::InProgress { label, used }) => {
            *used = true;
            return Ok(Witness::back(*label));
        }
        Some(WKnot::Done(x)) => return Ok(x.clone()),
        None => {}
    }
    let label = Label::fresh();
    memo.insert(key, WKnot::InProgress { label, used: false });
    let (pu, hat_u) = engine.prepone_zero_steps(&r)?;
    let source = open_at(&r.source()?, v_src, level)?;
    let final_hat = match hat_u {
        Hat::Axiom(s) => Hat::Axiom(s),
        Hat::Lift { rule, children } => match rule {
            LamRule::Bound(k) => {
                if k == level {
                    // The body reduced to the substituted occurrence: the
                    // result continues with the (shifted) argument hat.
                    shift_hat(hat_v, level, 0)?
                } else if k > level {
                    Hat::Lift { rule: LamRule::Bound(k - 1), children: Vec::new() }
                } else {
                    Hat::Lift { rule: LamRule::Bound(k), children: Vec::new() }
                }
            }
            LamRule::Free(x) => Hat::Lift { rule: LamRule::Free(x), children: Vec::new() },
            LamRule::Abs(fl) => {
                let b = fill_go(engine, &children[0], hat_v, v_src, level + 1, delta, memo)?;
                Hat::Lift { rule: LamRule::Abs(fl), children: vec![b] }
            }
            LamRule::App(fl) => {
                let f = fill_go(engine, &children[0], hat_v, v_src, level, delta, memo)?;
                let a = fill_go(engine, &children[1], hat_v, v_src, level, delta, memo)?;
                Hat::Lift { rule: LamRule::App(fl), children: vec![f, a] }
            }
        },
    };
    let out = Witness::split(source, delta.clone(), Vec::new(), pu, final_hat);
    let out = match memo.get(&key) {
        Some(WKnot::InProgress { used: true, .. }) => Witness::rec_unchecked(label, out),
        _ => out,
    };
    memo.insert(key, WKnot::Done(out.clone()));
    Ok(out)
}

/// Property Q for the abc-λ-calculus.
pub struct LamQStep;

impl QStep<LamRule> for LamQStep {
    fn q_step(
        &self,
        w: &Witness<LamRule>,
        st: &Step,
        engine: &Engine<LamRule>,
    ) -> Result<(Vec<Step>, Witness<LamRule>)> {
        if !st.path.is_empty() {
            return q_step_congruence(engine, w, st);
        }
        if st.name != "beta" {
            return Err(Error::StepNotApplicable(st.name.clone()));
        }
        let delta = w.ordinal()?;
        let (mut prefix, wu, hat_v) = lam_pattern_extract(engine, w)?;
        let filled = lam_pattern_fill(engine, &wu, &hat_v, &delta)?;
        prefix.push(Step::root("beta"));
        Ok((prefix, filled))
    }
}

// ---------------------------------------------------------------------------
// Standard-presentation derivations: each node fuses a split (the finite
// prefix) with the following lift, giving the familiar rules
// s ⇒* x / s ⇒* λx.u / s ⇒* u v.

pub struct StdDeriv {
    repr: Arc<StdRepr>,
}

impl Clone for StdDeriv {
    fn clone(&self) -> Self {
        StdDeriv { repr: Arc::clone(&self.repr) }
    }
}

enum StdRepr {
    Node(StdNode),
    Rec { label: Label, body: StdDeriv },
    Back(Label),
}

pub struct StdNode {
    pub source: LamTerm,
    pub steps: Vec<Step>,
    pub head: StdHead,
}

pub enum StdHead {
    Var(LamRule),
    Abs(AbcFlags, StdDeriv),
    App(AbcFlags, StdDeriv, StdDeriv),
}

impl StdDeriv {
    fn ptr(&self) -> *const () {
        Arc::as_ptr(&self.repr) as *const ()
    }
}

/// Fuse an ω-witness into a standard-presentation derivation.
pub fn to_standard_form(w: &Witness<LamRule>) -> Result<StdDeriv> {
    fn go(w: &Witness<LamRule>, memo: &mut HashMap<*const (), StdDeriv>) -> Result<StdDeriv> {
        if let Some(hit) = memo.get(&w.ptr()) {
            return Ok(hit.clone());
        }
        let out = match w.view() {
            crate::rewrite::WitRepr::Rec { label, body, .. } => StdDeriv {
                repr: Arc::new(StdRepr::Rec { label: *label, body: go(body, memo)? }),
            },
            crate::rewrite::WitRepr::Back(l) => {
                StdDeriv { repr: Arc::new(StdRepr::Back(*l)) }
            }
            crate::rewrite::WitRepr::Thunk(_) => return Err(Error::NotRegular),
            crate::rewrite::WitRepr::Split(d) => {
                if !d.segments.is_empty() {
                    return Err(Error::InvalidWitness(
                        "standard form requires an omega witness (no segments)".into(),
                    ));
                }
                let head = match &d.final_hat {
                    Hat::Axiom(_) => {
                        return Err(Error::InvalidWitness(
                            "standard form over truncation axioms".into(),
                        ))
                    }
                    Hat::Lift { rule, children } => match rule {
                        LamRule::Free(_) | LamRule::Bound(_) => StdHead::Var(rule.clone()),
                        LamRule::Abs(fl) => StdHead::Abs(*fl, go(&children[0], memo)?),
                        LamRule::App(fl) => {
                            StdHead::App(*fl, go(&children[0], memo)?, go(&children[1], memo)?)
                        }
                    },
                };
                StdDeriv {
                    repr: Arc::new(StdRepr::Node(StdNode {
                        source: d.source.clone(),
                        steps: d.trailing.clone(),
                        head,
                    })),
                }
            }
        };
        memo.insert(w.ptr(), out.clone());
        Ok(out)
    }
    go(w, &mut HashMap::new())
}

/// The inverse fusion: split each standard node back into split + lift.
pub fn std_to_omega(d: &StdDeriv) -> Result<Witness<LamRule>> {
    fn go(d: &StdDeriv, memo: &mut HashMap<*const (), Witness<LamRule>>) -> Result<Witness<LamRule>> {
        if let Some(hit) = memo.get(&d.ptr()) {
            return Ok(hit.clone());
        }
        let out = match &*d.repr {
            StdRepr::Rec { label, body } => Witness::rec_unchecked(*label, go(body, memo)?),
            StdRepr::Back(l) => Witness::back(*l),
            StdRepr::Node(n) => {
                let hat = match &n.head {
                    StdHead::Var(r) => Hat::Lift { rule: r.clone(), children: Vec::new() },
                    StdHead::Abs(fl, b) => Hat::Lift {
                        rule: LamRule::Abs(*fl),
                        children: vec![go(b, memo)?],
                    },
                    StdHead::App(fl, f, a) => Hat::Lift {
                        rule: LamRule::App(*fl),
                        children: vec![go(f, memo)?, go(a, memo)?],
                    },
                };
                Witness::split(
                    n.source.clone(),
                    Ordinal::zero(),
                    Vec::new(),
                    n.steps.clone(),
                    hat,
                )
            }
        };
        memo.insert(d.ptr(), out.clone());
        Ok(out)
    }
    go(d, &mut HashMap::new())
}

// ---------------------------------------------------------------------------
// Finite-term utilities: a brute-force leftmost-outermost normalizer used as
// an oracle against the coinductive pipeline.

pub fn is_finite(t: &LamTerm) -> bool {
    fn go(t: &LamTerm) -> bool {
        match t.view() {
            TreeRepr::Rule(_, cs) => cs.iter().all(go),
            TreeRepr::Axiom(_) => true,
            _ => false,
        }
    }
    go(t)
}

fn find_redex(t: &LamTerm, path: &mut Vec<usize>) -> Result<bool> {
    let (rule, cs) = t.unfold()?;
    if let LamRule::App(_) = rule {
        let (frule, _) = cs[0].unfold()?;
        if matches!(frule, LamRule::Abs(_)) {
            return Ok(true);
        }
    }
    for (i, c) in cs.iter().enumerate() {
        path.push(i);
        if find_redex(c, path)? {
            return Ok(true);
        }
        path.pop();
    }
    Ok(false)
}

/// Leftmost-outermost normalization of a finite term, bounded by
/// `max_steps`. Returns `None` when the bound is hit.
pub fn normalize(t: &LamTerm, max_steps: usize) -> Result<Option<(LamTerm, Vec<Step>)>> {
    if !is_finite(t) {
        return Err(Error::Domain("normalize requires a finite term".into()));
    }
    let oracle = LamOracle;
    let mut cur = t.clone();
    let mut steps = Vec::new();
    for _ in 0..=max_steps {
        let mut path = Vec::new();
        if !find_redex(&cur, &mut path)? {
            return Ok(Some((cur, steps)));
        }
        if steps.len() == max_steps {
            return Ok(None);
        }
        let st = Step::new("beta", path);
        cur = crate::rewrite::apply_step(&cur, &st, &oracle)?;
        steps.push(st);
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// `.lam` text format: optional `flags 001` header, `\x. e`, juxtaposition
// application, `rec L. e` cycles, `^k` raw indices.

pub fn parse_lam_file(src: &str) -> Result<(AbcFlags, LamTerm)> {
    let mut lx = Lexer::new(src);
    let flags = if lx.eat_kw("flags") {
        let id = lx.ident()?;
        AbcFlags::parse(&id).map_err(|e| lx.error(e.to_string()))?
    } else {
        AbcFlags::parse("001").unwrap()
    };
    let ctx = LamCtx::new(flags);
    let t = parse_term(&mut lx, &ctx, &mut Vec::new())?;
    lx.expect_end()?;
    Ok((flags, t))
}

pub fn parse_lam_term(src: &str, flags: AbcFlags) -> Result<LamTerm> {
    let mut lx = Lexer::new(src);
    let ctx = LamCtx::new(flags);
    let t = parse_term(&mut lx, &ctx, &mut Vec::new())?;
    lx.expect_end()?;
    Ok(t)
}

enum ScopeEntry {
    Binder(String),
    RecLabel(String, Label),
}

fn parse_term(lx: &mut Lexer<'_>, ctx: &LamCtx, scope: &mut Vec<ScopeEntry>) -> Result<LamTerm> {
    if lx.eat('\\') {
        let name = lx.ident()?;
        lx.expect('.')?;
        scope.push(ScopeEntry::Binder(name));
        let body = parse_term(lx, ctx, scope)?;
        scope.pop();
        return Ok(ctx.abs(body));
    }
    if lx.eat_kw("rec") {
        let name = lx.ident()?;
        lx.expect('.')?;
        let label = Label::fresh();
        scope.push(ScopeEntry::RecLabel(name, label));
        let body = parse_term(lx, ctx, scope)?;
        scope.pop();
        return DTree::rec(label, body).map_err(|e| lx.error(e.to_string()));
    }
    let mut acc = parse_atom(lx, ctx, scope)?;
    loop {
        match lx.peek() {
            Some(c) if c == '(' || c == '^' || c == '\\' || is_start_ident(c) => {
                // `rec` cannot start an application argument.
                if c == 'r' && lx.eat_kw("rec") {
                    return Err(lx.error("'rec' must be parenthesised in application position"));
                }
                let a = if c == '\\' {
                    parse_term(lx, ctx, scope)?
                } else {
                    parse_atom(lx, ctx, scope)?
                };
                acc = ctx.app(acc, a);
            }
            _ => return Ok(acc),
        }
    }
}

fn is_start_ident(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn parse_atom(lx: &mut Lexer<'_>, ctx: &LamCtx, scope: &mut Vec<ScopeEntry>) -> Result<LamTerm> {
    if lx.eat('(') {
        let t = parse_term(lx, ctx, scope)?;
        lx.expect(')')?;
        return Ok(t);
    }
    if lx.eat('^') {
        let k = lx.nat()?;
        return Ok(ctx.bvar(k as u32));
    }
    let name = lx.ident()?;
    let mut depth = 0u32;
    for entry in scope.iter().rev() {
        match entry {
            ScopeEntry::Binder(n) => {
                if *n == name {
                    return Ok(ctx.bvar(depth));
                }
                depth += 1;
            }
            ScopeEntry::RecLabel(n, l) => {
                if *n == name {
                    return Ok(DTree::back(*l));
                }
            }
        }
    }
    Ok(ctx.var(name))
}

/// Print a regular λ-term in the `.lam` syntax.
pub fn print_lam(t: &LamTerm) -> Result<String> {
    let mut out = String::new();
    let mut counter = 0usize;
    print_lam_at(t, &mut Vec::new(), &mut HashMap::new(), &mut counter, &mut out, false)?;
    Ok(out)
}

fn print_lam_at(
    t: &LamTerm,
    binders: &mut Vec<String>,
    recs: &mut HashMap<Label, String>,
    counter: &mut usize,
    out: &mut String,
    atom_pos: bool,
) -> Result<()> {
    match t.view() {
        TreeRepr::Rule(LamRule::Free(x), _) => {
            out.push_str(x);
            Ok(())
        }
        TreeRepr::Rule(LamRule::Bound(k), _) => {
            let idx = *k as usize;
            if idx < binders.len() {
                out.push_str(&binders[binders.len() - 1 - idx]);
            } else {
                out.push('^');
                out.push_str(&k.to_string());
            }
            Ok(())
        }
        TreeRepr::Rule(LamRule::Abs(_), cs) => {
            if atom_pos {
                out.push('(');
            }
            *counter += 1;
            let name = format!("v{counter}");
            out.push('\\');
            out.push_str(&name);
            out.push_str(". ");
            binders.push(name);
            print_lam_at(&cs[0], binders, recs, counter, out, false)?;
            binders.pop();
            if atom_pos {
                out.push(')');
            }
            Ok(())
        }
        TreeRepr::Rule(LamRule::App(_), cs) => {
            if atom_pos {
                out.push('(');
            }
            // Function position may be an application chain but not a λ/rec.
            let fun_is_atom = !matches!(
                cs[0].view(),
                TreeRepr::Rule(LamRule::App(_), _) | TreeRepr::Rule(LamRule::Free(_), _)
                    | TreeRepr::Rule(LamRule::Bound(_), _)
            );
            print_lam_at(&cs[0], binders, recs, counter, out, fun_is_atom)?;
            out.push(' ');
            print_lam_at(&cs[1], binders, recs, counter, out, true)?;
            if atom_pos {
                out.push(')');
            }
            Ok(())
        }
        TreeRepr::Rec { label, body, .. } => {
            if atom_pos {
                out.push('(');
            }
            *counter += 1;
            let name = format!("L{counter}");
            recs.insert(*label, name.clone());
            out.push_str("rec ");
            out.push_str(&name);
            out.push_str(". ");
            print_lam_at(body, binders, recs, counter, out, false)?;
            if atom_pos {
                out.push(')');
            }
            Ok(())
        }
        TreeRepr::Back(l) => {
            let name = recs
                .get(l)
                .ok_or_else(|| Error::UnboundBackEdge(l.to_string()))?;
            out.push_str(name);
            Ok(())
        }
        TreeRepr::Axiom(_) => {
            out.push('*');
            Ok(())
        }
        TreeRepr::Thunk(_) => Err(Error::NotRegular),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::gen_lam_regular;
    use crate::ord::Ordinal;
    use crate::rewrite::{refl_witness, witness_bisimilar};
    use crate::tree::bisimilar;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn ctx() -> LamCtx {
        LamCtx::new(AbcFlags::parse("001").unwrap())
    }

    #[test]
    fn parse_print_roundtrip() {
        let flags = AbcFlags::parse("001").unwrap();
        for src in [
            "\\x. x x",
            "(\\x. x x) (\\y. y)",
            "rec t. x t",
            "f (rec u. g u) h",
            "\\x. \\y. x (y ^3)",
        ] {
            let t = parse_lam_term(src, flags).unwrap();
            let t2 = parse_lam_term(&print_lam(&t).unwrap(), flags).unwrap();
            assert!(bisimilar(&t, &t2).unwrap(), "{src}");
        }
    }

    #[test]
    fn beta_reduces_at_the_root() {
        let flags = AbcFlags::parse("001").unwrap();
        let t = parse_lam_term("(\\x. x x) (\\y. y)", flags).unwrap();
        let r = beta_zero_step(&t).unwrap();
        let expect = parse_lam_term("(\\y. y) (\\y. y)", flags).unwrap();
        assert!(bisimilar(&r, &expect).unwrap());
        let stuck = parse_lam_term("\\x. x", flags).unwrap();
        assert!(matches!(beta_zero_step(&stuck), Err(Error::NotARedex)));
    }

    #[test]
    fn normalization_finds_normal_forms_or_gives_up() {
        let flags = AbcFlags::parse("001").unwrap();
        let t = parse_lam_term("(\\x. \\y. x) a b", flags).unwrap();
        let (nf, steps) = normalize(&t, 50).unwrap().unwrap();
        assert!(bisimilar(&nf, &parse_lam_term("a", flags).unwrap()).unwrap());
        assert_eq!(steps.len(), 2);
        let omega = parse_lam_term("(\\x. x x) (\\x. x x)", flags).unwrap();
        assert!(normalize(&omega, 50).unwrap().is_none());
        let inf = parse_lam_term("rec t. x t", flags).unwrap();
        assert!(matches!(normalize(&inf, 50), Err(Error::Domain(_))));
    }

    #[test]
    fn shifting_and_substitution() {
        let c = ctx();
        // (\. 1 0)[a] = \. a 0  via substituting the free index 0
        let body = c.abs(c.app(c.bvar(1), c.bvar(0)));
        let out = lam_subst(&body, &c.var("a")).unwrap();
        let expect = c.abs(c.app(c.var("a"), c.bvar(0)));
        assert!(bisimilar(&out, &expect).unwrap());
        let shifted = term_shift(&c.bvar(2), 3, 0).unwrap();
        assert!(bisimilar(&shifted, &c.bvar(5)).unwrap());
        assert_eq!(free_indices(&c.abs(c.bvar(1))).unwrap(), 1);
    }

    #[test]
    fn standard_form_roundtrip_is_bisimilar() {
        let c = ctx();
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..30 {
            let t = gen_lam_regular(&c, &mut rng, 3);
            let w = refl_witness(&t, &Ordinal::zero()).unwrap();
            let d = to_standard_form(&w).unwrap();
            let w2 = std_to_omega(&d).unwrap();
            assert!(witness_bisimilar(&w, &w2).unwrap());
        }
    }

    #[test]
    fn flag_strings_control_guardedness() {
        assert!(AbcFlags::parse("101").is_ok());
        assert!(AbcFlags::parse("2").is_err());
        // with a=0 the abstraction body is inductive: \x. cycle is rejected
        let strict = LamCtx::new(AbcFlags::parse("000").unwrap());
        let l = Label::fresh();
        let body = strict.abs(DTree::back(l));
        assert!(DTree::rec(l, body).is_err());
        // with c=1 the argument position guards the cycle
        let lazy = ctx();
        let l2 = Label::fresh();
        let t = DTree::rec(l2, lazy.app(lazy.var("f"), DTree::back(l2)));
        assert!(t.is_ok());
    }
}
