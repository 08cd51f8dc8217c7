//! Depth-annotated one-step rewriting generated from zero steps, and
//! ordinal-stratified reduction witnesses in the split/lift system.
//!
//! A witness for `s ↠_γ t` is a `Split` node: a sequence of interleaved
//! finite step runs and hat witnesses at ordinals strictly below γ
//! (the segments), then trailing finite steps, then a final hat witness at
//! γ. Hat witnesses (`s ↠̂_γ t`) lift a rule over child witnesses; cycles
//! and lazy generation use rec/back-edges and thunks exactly like trees.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::ord::Ordinal;
use crate::tree::{
    truncate, DTree, FiniteTree, Label, RuleFamily, TreeRepr,
};

/// Default truncation budget for endpoint comparisons on lazy witnesses.
pub const ENDPOINT_BUDGET: usize = 32;

const STATE_CAP: usize = 100_000;

/// A finite rewriting step: a zero step `name` applied at `path` (0-based
/// premiss indices from the root).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Step {
    pub name: String,
    pub path: Vec<usize>,
}

impl Step {
    pub fn new(name: impl Into<String>, path: Vec<usize>) -> Self {
        Step { name: name.into(), path }
    }

    pub fn root(name: impl Into<String>) -> Self {
        Step { name: name.into(), path: Vec::new() }
    }

    /// Prefix the path with `i` (the step now happens under premiss `i`).
    pub fn under(&self, i: usize) -> Step {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.push(i);
        path.extend_from_slice(&self.path);
        Step { name: self.name.clone(), path }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{:?}", self.name, self.path)
    }
}

/// The depth of a step: the number of coinductive premiss edges crossed by
/// its path in `t`.
pub fn step_depth<R: RuleFamily>(t: &DTree<R>, path: &[usize]) -> Result<usize> {
    let mut cur = t.clone();
    let mut depth = 0;
    for &i in path {
        let (r, cs) = cur.unfold()?;
        if i >= cs.len() {
            return Err(Error::BadPath(path.to_vec()));
        }
        if r.coind(i) {
            depth += 1;
        }
        cur = cs[i].clone();
    }
    Ok(depth)
}

/// Instance-supplied root zero steps.
pub trait ZeroStepOracle<R: RuleFamily>: Send + Sync {
    /// All root zero steps applicable at `t`, as (name, result) pairs.
    fn enumerate(&self, t: &DTree<R>) -> Result<Vec<(String, DTree<R>)>>;
    /// Apply the named root zero step at `t`.
    fn apply(&self, name: &str, t: &DTree<R>) -> Result<DTree<R>>;
    /// Whether this instance's steps preserve conclusion statements.
    fn conclusion_preserving(&self) -> bool {
        false
    }
}

/// Apply one step at its path.
pub fn apply_step<R: RuleFamily>(
    t: &DTree<R>,
    st: &Step,
    oracle: &dyn ZeroStepOracle<R>,
) -> Result<DTree<R>> {
    fn go<R: RuleFamily>(
        t: &DTree<R>,
        full: &[usize],
        rest: &[usize],
        name: &str,
        oracle: &dyn ZeroStepOracle<R>,
    ) -> Result<DTree<R>> {
        match rest.first() {
            None => oracle.apply(name, t),
            Some(&i) => {
                let (r, mut cs) = t.unfold()?;
                if i >= cs.len() {
                    return Err(Error::BadPath(full.to_vec()));
                }
                cs[i] = go(&cs[i], full, &rest[1..], name, oracle)?;
                Ok(DTree::rule_unchecked(r, cs))
            }
        }
    }
    go(t, &st.path, &st.path, &st.name, oracle)
}

/// Replay a finite run of steps.
pub fn replay<R: RuleFamily>(
    t: &DTree<R>,
    steps: &[Step],
    oracle: &dyn ZeroStepOracle<R>,
) -> Result<DTree<R>> {
    let mut cur = t.clone();
    for st in steps {
        cur = apply_step(&cur, st, oracle)?;
    }
    Ok(cur)
}

/// A hat witness `s ↠̂_γ t`: a rule lifted over child witnesses (one per
/// premiss, at the same γ), or the degenerate lift of a truncation axiom.
#[derive(Clone)]
pub enum Hat<R: RuleFamily> {
    Lift { rule: R, children: Vec<Witness<R>> },
    Axiom(R::Stmt),
}

/// One `steps; hat@δᵢ` component of a split, with δᵢ < γ.
#[derive(Clone)]
pub struct Segment<R: RuleFamily> {
    pub steps: Vec<Step>,
    pub ordinal: Ordinal,
    pub hat: Hat<R>,
}

/// The data of a split node.
#[derive(Clone)]
pub struct SplitData<R: RuleFamily> {
    pub source: DTree<R>,
    pub ordinal: Ordinal,
    pub segments: Vec<Segment<R>>,
    pub trailing: Vec<Step>,
    pub final_hat: Hat<R>,
}

pub struct WThunk<R: RuleFamily> {
    cell: OnceLock<Result<Witness<R>>>,
    gen: Box<dyn Fn() -> Result<Witness<R>> + Send + Sync>,
}

impl<R: RuleFamily> WThunk<R> {
    fn force(&self) -> Result<Witness<R>> {
        self.cell.get_or_init(|| (self.gen)()).clone()
    }
}

pub(crate) enum WitRepr<R: RuleFamily> {
    Split(SplitData<R>),
    Rec {
        label: Label,
        body: Witness<R>,
        unrolled: OnceLock<Witness<R>>,
    },
    Back(Label),
    Thunk(WThunk<R>),
}

/// An ordinal-stratified reduction witness (split-rooted).
pub struct Witness<R: RuleFamily> {
    repr: Arc<WitRepr<R>>,
}

impl<R: RuleFamily> Clone for Witness<R> {
    fn clone(&self) -> Self {
        Witness { repr: Arc::clone(&self.repr) }
    }
}

impl<R: RuleFamily> fmt::Debug for Witness<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.repr {
            WitRepr::Split(d) => write!(
                f,
                "split@{}(segs:{}, steps:{})",
                d.ordinal,
                d.segments.len(),
                d.trailing.len()
            ),
            WitRepr::Rec { label, .. } => write!(f, "rec {label}. …"),
            WitRepr::Back(l) => write!(f, "{l}"),
            WitRepr::Thunk(_) => write!(f, "<thunk>"),
        }
    }
}

impl<R: RuleFamily> Witness<R> {
    fn from_repr(r: WitRepr<R>) -> Self {
        Witness { repr: Arc::new(r) }
    }

    pub(crate) fn ptr(&self) -> *const () {
        Arc::as_ptr(&self.repr) as *const ()
    }

    pub(crate) fn view(&self) -> &WitRepr<R> {
        &self.repr
    }

    pub fn split(
        source: DTree<R>,
        ordinal: Ordinal,
        segments: Vec<Segment<R>>,
        trailing: Vec<Step>,
        final_hat: Hat<R>,
    ) -> Self {
        Self::from_repr(WitRepr::Split(SplitData {
            source,
            ordinal,
            segments,
            trailing,
            final_hat,
        }))
    }

    pub fn back(label: Label) -> Self {
        Self::from_repr(WitRepr::Back(label))
    }

    /// Bind a cycle; fails unless every path to a matching back edge crosses
    /// a coinductive lift premiss.
    pub fn rec(label: Label, body: Witness<R>) -> Result<Self> {
        if let Some(l) = find_unguarded(&body, label) {
            return Err(Error::Unguarded(l.to_string()));
        }
        Ok(Self::rec_unchecked(label, body))
    }

    pub fn rec_unchecked(label: Label, body: Witness<R>) -> Self {
        Self::from_repr(WitRepr::Rec { label, body, unrolled: OnceLock::new() })
    }

    pub fn thunk(gen: impl Fn() -> Result<Witness<R>> + Send + Sync + 'static) -> Self {
        Self::from_repr(WitRepr::Thunk(WThunk { cell: OnceLock::new(), gen: Box::new(gen) }))
    }

    /// Resolve to a split-rooted view (cached rec unrolling, thunk forcing).
    pub(crate) fn resolve(&self) -> Result<Witness<R>> {
        let mut cur = self.clone();
        for _ in 0..crate::tree::GUARD_FUEL {
            match &*cur.repr {
                WitRepr::Split(_) => return Ok(cur),
                WitRepr::Back(l) => return Err(Error::UnboundBackEdge(l.to_string())),
                WitRepr::Thunk(t) => cur = t.force()?,
                WitRepr::Rec { label, body, unrolled } => {
                    let next = unrolled
                        .get_or_init(|| wsubst_back(body, *label, &cur))
                        .clone();
                    cur = next;
                }
            }
        }
        Err(Error::NonProductive("witness resolve: guard budget exhausted".into()))
    }

    /// Clone of the root split data (after resolution).
    pub fn split_view(&self) -> Result<SplitData<R>> {
        let r = self.resolve()?;
        match &*r.repr {
            WitRepr::Split(d) => Ok(d.clone()),
            _ => unreachable!(),
        }
    }

    pub fn source(&self) -> Result<DTree<R>> {
        Ok(self.split_view()?.source)
    }

    pub fn ordinal(&self) -> Result<Ordinal> {
        Ok(self.split_view()?.ordinal)
    }

    pub fn is_thunk_free(&self) -> bool {
        fn go<R: RuleFamily>(w: &Witness<R>, seen: &mut HashSet<*const ()>) -> bool {
            if !seen.insert(w.ptr()) {
                return true;
            }
            match w.view() {
                WitRepr::Split(d) => {
                    d.segments.iter().all(|s| hat_ok(&s.hat, seen))
                        && hat_ok(&d.final_hat, seen)
                }
                WitRepr::Rec { body, .. } => go(body, seen),
                WitRepr::Back(_) => true,
                WitRepr::Thunk(_) => false,
            }
        }
        fn hat_ok<R: RuleFamily>(h: &Hat<R>, seen: &mut HashSet<*const ()>) -> bool {
            match h {
                Hat::Lift { children, .. } => children.iter().all(|c| go(c, seen)),
                Hat::Axiom(_) => true,
            }
        }
        go(self, &mut HashSet::new())
    }
}

/// Replace `Back(label)` with `rep` throughout a witness.
pub(crate) fn wsubst_back<R: RuleFamily>(
    w: &Witness<R>,
    label: Label,
    rep: &Witness<R>,
) -> Witness<R> {
    fn go<R: RuleFamily>(
        w: &Witness<R>,
        label: Label,
        rep: &Witness<R>,
        memo: &mut HashMap<*const (), Witness<R>>,
    ) -> Witness<R> {
        if let Some(hit) = memo.get(&w.ptr()) {
            return hit.clone();
        }
        let out = match w.view() {
            WitRepr::Back(l) if *l == label => rep.clone(),
            WitRepr::Back(_) | WitRepr::Thunk(_) => w.clone(),
            WitRepr::Rec { label: l2, body, .. } => {
                if *l2 == label {
                    w.clone()
                } else {
                    let b2 = go(body, label, rep, memo);
                    if b2.ptr() == body.ptr() {
                        w.clone()
                    } else {
                        Witness::rec_unchecked(*l2, b2)
                    }
                }
            }
            WitRepr::Split(d) => {
                let mut changed = false;
                let map_hat = |h: &Hat<R>,
                               changed: &mut bool,
                               memo: &mut HashMap<*const (), Witness<R>>|
                 -> Hat<R> {
                    match h {
                        Hat::Axiom(_) => h.clone(),
                        Hat::Lift { rule, children } => {
                            let cs: Vec<_> =
                                children.iter().map(|c| go(c, label, rep, memo)).collect();
                            if cs.iter().zip(children).any(|(a, b)| a.ptr() != b.ptr()) {
                                *changed = true;
                            }
                            Hat::Lift { rule: rule.clone(), children: cs }
                        }
                    }
                };
                let segments: Vec<_> = d
                    .segments
                    .iter()
                    .map(|s| Segment {
                        steps: s.steps.clone(),
                        ordinal: s.ordinal.clone(),
                        hat: map_hat(&s.hat, &mut changed, memo),
                    })
                    .collect();
                let final_hat = map_hat(&d.final_hat, &mut changed, memo);
                if changed {
                    Witness::split(
                        d.source.clone(),
                        d.ordinal.clone(),
                        segments,
                        d.trailing.clone(),
                        final_hat,
                    )
                } else {
                    w.clone()
                }
            }
        };
        memo.insert(w.ptr(), out.clone());
        out
    }
    go(w, label, rep, &mut HashMap::new())
}

/// Returns the label if some path from `body` to `Back(target)` crosses no
/// coinductive lift premiss.
fn find_unguarded<R: RuleFamily>(body: &Witness<R>, target: Label) -> Option<Label> {
    fn go<R: RuleFamily>(
        w: &Witness<R>,
        target: Label,
        guarded: bool,
        memo: &mut HashSet<(*const (), bool)>,
    ) -> bool {
        if !memo.insert((w.ptr(), guarded)) {
            return false;
        }
        match w.view() {
            WitRepr::Back(l) => *l == target && !guarded,
            WitRepr::Thunk(_) => false,
            WitRepr::Rec { label, body, .. } => {
                *label != target && go(body, target, guarded, memo)
            }
            WitRepr::Split(d) => {
                let hat_bad = |h: &Hat<R>, memo: &mut HashSet<(*const (), bool)>| match h {
                    Hat::Axiom(_) => false,
                    Hat::Lift { rule, children } => children
                        .iter()
                        .enumerate()
                        .any(|(i, c)| go(c, target, guarded || rule.coind(i), memo)),
                };
                d.segments.iter().any(|s| hat_bad(&s.hat, memo)) || hat_bad(&d.final_hat, memo)
            }
        }
    }
    if go(body, target, false, &mut HashSet::new()) {
        Some(target)
    } else {
        None
    }
}

/// The source tree of a hat: its lift rule applied to the child sources.
pub fn hat_source<R: RuleFamily>(h: &Hat<R>) -> Result<DTree<R>> {
    match h {
        Hat::Axiom(s) => Ok(DTree::axiom(s.clone())),
        Hat::Lift { rule, children } => {
            let cs: Result<Vec<_>> = children.iter().map(|c| c.source()).collect();
            Ok(DTree::rule_unchecked(rule.clone(), cs?))
        }
    }
}

/// The target of a witness, as a (lazy where the witness is lazy) tree. The
/// target is reached by descending final hats only.
pub fn witness_target<R: RuleFamily>(w: &Witness<R>) -> Result<DTree<R>> {
    fn go<R: RuleFamily>(w: &Witness<R>, map: &HashMap<Label, Label>) -> Result<DTree<R>> {
        match w.view() {
            WitRepr::Split(d) => hat_go(&d.final_hat, map),
            WitRepr::Rec { label, body, .. } => {
                let tl = Label::fresh();
                let mut map2 = map.clone();
                map2.insert(*label, tl);
                Ok(DTree::rec_unchecked(tl, go(body, &map2)?))
            }
            WitRepr::Back(l) => map
                .get(l)
                .map(|tl| DTree::back(*tl))
                .ok_or_else(|| Error::UnboundBackEdge(l.to_string())),
            WitRepr::Thunk(_) => {
                let w2 = w.clone();
                let map2 = map.clone();
                Ok(DTree::thunk(move || {
                    let forced = w2.resolve()?;
                    go(&forced, &map2)
                }))
            }
        }
    }
    fn hat_go<R: RuleFamily>(h: &Hat<R>, map: &HashMap<Label, Label>) -> Result<DTree<R>> {
        match h {
            Hat::Axiom(s) => Ok(DTree::axiom(s.clone())),
            Hat::Lift { rule, children } => {
                let cs: Result<Vec<_>> = children.iter().map(|c| go(c, map)).collect();
                Ok(DTree::rule_unchecked(rule.clone(), cs?))
            }
        }
    }
    go(w, &HashMap::new())
}

/// The target of a hat witness, as a tree.
pub fn hat_target<R: RuleFamily>(h: &Hat<R>) -> Result<DTree<R>> {
    match h {
        Hat::Axiom(s) => Ok(DTree::axiom(s.clone())),
        Hat::Lift { rule, children } => {
            let cs: Result<Vec<_>> = children.iter().map(witness_target).collect();
            Ok(DTree::rule_unchecked(rule.clone(), cs?))
        }
    }
}

/// Truncation of the witness's target at depth `d`.
pub fn target_truncation<R: RuleFamily>(w: &Witness<R>, d: usize) -> Result<FiniteTree<R>> {
    truncate(&witness_target(w)?, d)
}

/// Reflexivity: a hat witness `t ↠̂_γ t` built by lifting `t`'s own rules.
/// Regular inputs give regular witnesses.
pub fn refl_hat<R: RuleFamily>(t: &DTree<R>, gamma: &Ordinal) -> Result<Hat<R>> {
    let mut ctx = ReflCtx { memo: HashMap::new() };
    let r = t.resolve()?;
    match r.view() {
        TreeRepr::Axiom(s) => Ok(Hat::Axiom(s.clone())),
        TreeRepr::Rule(rule, cs) => {
            let children: Result<Vec<_>> =
                cs.iter().map(|c| refl_go(c, gamma, &mut ctx)).collect();
            Ok(Hat::Lift { rule: rule.clone(), children: children? })
        }
        _ => unreachable!(),
    }
}

/// Reflexivity as a full witness `t ↠_γ t`.
pub fn refl_witness<R: RuleFamily>(t: &DTree<R>, gamma: &Ordinal) -> Result<Witness<R>> {
    let mut ctx = ReflCtx { memo: HashMap::new() };
    refl_go(t, gamma, &mut ctx)
}

enum ReflState<R: RuleFamily> {
    InProgress { label: Label, used: bool },
    Done(Witness<R>),
}

struct ReflCtx<R: RuleFamily> {
    memo: HashMap<*const (), ReflState<R>>,
}

fn refl_go<R: RuleFamily>(
    t: &DTree<R>,
    gamma: &Ordinal,
    ctx: &mut ReflCtx<R>,
) -> Result<Witness<R>> {
    let r = t.resolve()?;
    let key = r.ptr();
    match ctx.memo.get_mut(&key) {
        Some(ReflState::InProgress { label, used }) => {
            *used = true;
            return Ok(Witness::back(*label));
        }
        Some(ReflState::Done(w)) => return Ok(w.clone()),
        None => {}
    }
    if ctx.memo.len() >= STATE_CAP {
        return Err(Error::NonProductive("refl: state budget exhausted".into()));
    }
    let label = Label::fresh();
    ctx.memo.insert(key, ReflState::InProgress { label, used: false });
    let hat = match r.view() {
        TreeRepr::Axiom(s) => Hat::Axiom(s.clone()),
        TreeRepr::Rule(rule, cs) => {
            let children: Result<Vec<_>> =
                cs.iter().map(|c| refl_go(c, gamma, ctx)).collect();
            Hat::Lift { rule: rule.clone(), children: children? }
        }
        _ => unreachable!(),
    };
    let mut w = Witness::split(r.clone(), gamma.clone(), Vec::new(), Vec::new(), hat);
    if let Some(ReflState::InProgress { used: true, .. }) = ctx.memo.get(&key) {
        w = Witness::rec_unchecked(label, w);
    }
    ctx.memo.insert(key, ReflState::Done(w.clone()));
    Ok(w)
}

/// Raise a witness's ordinal annotation from γ to δ ≥ γ.
pub fn weaken_witness<R: RuleFamily>(w: &Witness<R>, delta: &Ordinal) -> Result<Witness<R>> {
    let gamma = w.ordinal()?;
    if gamma > *delta {
        return Err(Error::OrdinalNotLarger(gamma.to_string(), delta.to_string()));
    }
    Ok(weaken_go(w, delta, &mut HashMap::new()))
}

fn weaken_go<R: RuleFamily>(
    w: &Witness<R>,
    delta: &Ordinal,
    memo: &mut HashMap<*const (), Witness<R>>,
) -> Witness<R> {
    if let Some(hit) = memo.get(&w.ptr()) {
        return hit.clone();
    }
    let out = match w.view() {
        WitRepr::Back(l) => Witness::back(*l),
        WitRepr::Rec { label, body, .. } => {
            Witness::rec_unchecked(*label, weaken_go(body, delta, memo))
        }
        WitRepr::Thunk(_) => {
            let w2 = w.clone();
            let d2 = delta.clone();
            Witness::thunk(move || {
                let forced = w2.resolve()?;
                Ok(weaken_go(&forced, &d2, &mut HashMap::new()))
            })
        }
        WitRepr::Split(d) => {
            let final_hat = match &d.final_hat {
                Hat::Axiom(s) => Hat::Axiom(s.clone()),
                Hat::Lift { rule, children } => Hat::Lift {
                    rule: rule.clone(),
                    children: children.iter().map(|c| weaken_go(c, delta, memo)).collect(),
                },
            };
            Witness::split(
                d.source.clone(),
                delta.clone(),
                d.segments.clone(),
                d.trailing.clone(),
                final_hat,
            )
        }
    };
    memo.insert(w.ptr(), out.clone());
    out
}

/// Concatenate hat witnesses `s ↠̂_γ t` and `t ↠̂_δ u` into
/// `s ↠̂_ε u` at ε = max(γ+1, δ), by zipping the lifts: the first hat's
/// sub-witnesses become a segment at γ before the second's.
///
/// When `check` is set, the midpoint is compared by truncation to that
/// depth.
pub fn concat_hat<R: RuleFamily>(
    h1: &Hat<R>,
    gamma: &Ordinal,
    h2: &Hat<R>,
    delta: &Ordinal,
    check: Option<usize>,
) -> Result<(Hat<R>, Ordinal)> {
    let eps = gamma.max_succ(delta);
    if let Some(budget) = check {
        let mid1 = truncate(&hat_target(h1)?, budget)?;
        let mid2 = truncate(&hat_source(h2)?, budget)?;
        if mid1 != mid2 {
            return Err(Error::EndpointMismatch(format!(
                "hat concatenation midpoint differs at depth {budget}"
            )));
        }
    }
    match (h1, h2) {
        (Hat::Axiom(s1), Hat::Axiom(s2)) => {
            if s1 == s2 {
                Ok((Hat::Axiom(s1.clone()), eps))
            } else {
                Err(Error::EndpointMismatch("axiom statements differ".into()))
            }
        }
        (Hat::Lift { rule: r1, children: cs1 }, Hat::Lift { rule: r2, children: cs2 }) => {
            if r1 != r2 {
                return Err(Error::EndpointMismatch(format!(
                    "lift rules differ: {} vs {}",
                    r1.display_name(),
                    r2.display_name()
                )));
            }
            let mut children = Vec::with_capacity(cs1.len());
            for (c1, c2) in cs1.iter().zip(cs2.iter()) {
                let d1 = c1.split_view()?;
                let d2 = c2.split_view()?;
                let mut segments = d1.segments;
                segments.push(Segment {
                    steps: d1.trailing,
                    ordinal: gamma.clone(),
                    hat: d1.final_hat,
                });
                segments.extend(d2.segments);
                let final_hat = match d2.final_hat {
                    Hat::Axiom(s) => Hat::Axiom(s),
                    Hat::Lift { rule, children } => Hat::Lift {
                        rule,
                        children: children
                            .iter()
                            .map(|c| weaken_go(c, &eps, &mut HashMap::new()))
                            .collect(),
                    },
                };
                children.push(Witness::split(
                    d1.source,
                    eps.clone(),
                    segments,
                    d2.trailing,
                    final_hat,
                ));
            }
            Ok((Hat::Lift { rule: r1.clone(), children }, eps))
        }
        _ => Err(Error::EndpointMismatch("lift vs axiom".into())),
    }
}

/// Inclusion ↠̂ ⊆ ↠: wrap a hat into a split with no segments and no steps.
pub fn hat_to_full<R: RuleFamily>(h: &Hat<R>, gamma: &Ordinal) -> Result<Witness<R>> {
    Ok(Witness::split(
        hat_source(h)?,
        gamma.clone(),
        Vec::new(),
        Vec::new(),
        h.clone(),
    ))
}

/// A violation found by [`validate_witness`]. Violations are data, not
/// errors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WitnessViolation {
    /// segment ordinal not < γ
    OrdinalViolation { segment: String, gamma: String },
    /// endpoint mismatch in the split chain
    EndpointMismatch { detail: String },
    /// unguarded cycle
    UnguardedCycle { label: String },
    /// lift source/target inconsistency at statement level
    LiftInconsistent { detail: String },
    /// a recorded finite step failed to replay
    Replay { detail: String },
}

impl fmt::Display for WitnessViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WitnessViolation::OrdinalViolation { segment, gamma } => {
                write!(f, "segment ordinal not < gamma: {segment} vs {gamma}")
            }
            WitnessViolation::EndpointMismatch { detail } => {
                write!(f, "endpoint mismatch: {detail}")
            }
            WitnessViolation::UnguardedCycle { label } => {
                write!(f, "unguarded cycle: {label}")
            }
            WitnessViolation::LiftInconsistent { detail } => {
                write!(f, "lift inconsistency: {detail}")
            }
            WitnessViolation::Replay { detail } => write!(f, "replay failure: {detail}"),
        }
    }
}

/// Validate a witness: ordinal side conditions, endpoint chaining (compared
/// by truncation at `budget`), lift consistency and cycle guardedness.
/// Thunk-free witnesses are explored exhaustively over their state graphs;
/// lazy ones down to `budget` lift levels.
pub fn validate_witness<R: RuleFamily>(
    w: &Witness<R>,
    budget: usize,
    oracle: &dyn ZeroStepOracle<R>,
) -> Result<Vec<WitnessViolation>> {
    let mut out = Vec::new();
    let exhaustive = w.is_thunk_free();
    let mut visited: HashSet<*const ()> = HashSet::new();
    let mut recs_seen: HashSet<*const ()> = HashSet::new();
    let mut stack: Vec<(Witness<R>, usize)> = vec![(w.clone(), budget)];
    while let Some((cur, depth)) = stack.pop() {
        // Guardedness is a syntactic condition on rec binders; check each
        // binder once, before resolution unrolls it away.
        scan_recs(&cur, &mut recs_seen, &mut out);
        let r = match cur.resolve() {
            Ok(r) => r,
            Err(e) => {
                out.push(WitnessViolation::Replay { detail: e.to_string() });
                continue;
            }
        };
        if !visited.insert(r.ptr()) {
            continue;
        }
        if visited.len() > STATE_CAP {
            return Err(Error::NonProductive("validate: state budget exhausted".into()));
        }
        let WitRepr::Split(d) = r.view() else { unreachable!() };
        for seg in &d.segments {
            if seg.ordinal >= d.ordinal {
                out.push(WitnessViolation::OrdinalViolation {
                    segment: seg.ordinal.to_string(),
                    gamma: d.ordinal.to_string(),
                });
            }
        }
        // Endpoint chain: source --steps--> hat source, hat target --steps-->
        // next hat source, ..., compared by truncation at `budget`.
        let mut cur_tree = d.source.clone();
        let mut chain_ok = true;
        for (steps, hat) in d
            .segments
            .iter()
            .map(|s| (&s.steps, &s.hat))
            .chain(std::iter::once((&d.trailing, &d.final_hat)))
        {
            if !chain_ok {
                break;
            }
            match replay(&cur_tree, steps, oracle) {
                Ok(t) => match endpoint_eq(&t, hat, budget) {
                    Ok(true) => {}
                    Ok(false) => {
                        out.push(WitnessViolation::EndpointMismatch {
                            detail: format!(
                                "replayed term disagrees with hat source at depth {budget}"
                            ),
                        });
                        chain_ok = false;
                    }
                    Err(e) => {
                        out.push(WitnessViolation::Replay { detail: e.to_string() });
                        chain_ok = false;
                    }
                },
                Err(e) => {
                    out.push(WitnessViolation::Replay { detail: e.to_string() });
                    chain_ok = false;
                }
            }
            if chain_ok {
                match hat_target(hat) {
                    Ok(t) => cur_tree = t,
                    Err(e) => {
                        out.push(WitnessViolation::Replay { detail: e.to_string() });
                        chain_ok = false;
                    }
                }
            }
        }
        for hat in d.segments.iter().map(|s| &s.hat).chain(std::iter::once(&d.final_hat)) {
            if let Hat::Lift { rule, children } = hat {
                if children.len() != rule.arity() {
                    out.push(WitnessViolation::LiftInconsistent {
                        detail: format!(
                            "lift of {} has {} children",
                            rule.display_name(),
                            children.len()
                        ),
                    });
                    continue;
                }
                let stmts: Result<Vec<R::Stmt>> = children
                    .iter()
                    .map(|c| c.source().and_then(|s| s.conclusion()))
                    .collect();
                if let Ok(stmts) = stmts {
                    if let Err(e) = crate::tree::rule_conclude(rule, &stmts) {
                        out.push(WitnessViolation::LiftInconsistent { detail: e.to_string() });
                    }
                }
                if depth > 0 || exhaustive {
                    for c in children {
                        stack.push((c.clone(), depth.saturating_sub(1)));
                    }
                }
            }
        }
    }
    Ok(out)
}

fn endpoint_eq<R: RuleFamily>(t: &DTree<R>, hat: &Hat<R>, budget: usize) -> Result<bool> {
    let hs = hat_source(hat)?;
    Ok(truncate(t, budget)? == truncate(&hs, budget)?)
}

fn scan_recs<R: RuleFamily>(
    w: &Witness<R>,
    seen: &mut HashSet<*const ()>,
    out: &mut Vec<WitnessViolation>,
) {
    if !seen.insert(w.ptr()) {
        return;
    }
    match w.view() {
        WitRepr::Rec { label, body, .. } => {
            if let Some(l) = find_unguarded(body, *label) {
                out.push(WitnessViolation::UnguardedCycle { label: l.to_string() });
            }
            scan_recs(body, seen, out);
        }
        WitRepr::Split(d) => {
            for hat in d.segments.iter().map(|s| &s.hat).chain([&d.final_hat]) {
                if let Hat::Lift { children, .. } = hat {
                    for c in children {
                        scan_recs(c, seen, out);
                    }
                }
            }
        }
        WitRepr::Back(_) | WitRepr::Thunk(_) => {}
    }
}

/// Bisimilarity of thunk-free witnesses: equality of the infinite
/// unrollings, decided by pairing on the resolved state graphs.
pub fn witness_bisimilar<R: RuleFamily>(a: &Witness<R>, b: &Witness<R>) -> Result<bool> {
    if !a.is_thunk_free() || !b.is_thunk_free() {
        return Err(Error::NotRegular);
    }
    let mut assumed: HashSet<(*const (), *const ())> = HashSet::new();
    let mut stack = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = stack.pop() {
        let rx = x.resolve()?;
        let ry = y.resolve()?;
        if rx.ptr() == ry.ptr() || !assumed.insert((rx.ptr(), ry.ptr())) {
            continue;
        }
        let (WitRepr::Split(dx), WitRepr::Split(dy)) = (rx.view(), ry.view()) else {
            unreachable!()
        };
        if dx.ordinal != dy.ordinal
            || dx.trailing != dy.trailing
            || dx.segments.len() != dy.segments.len()
        {
            return Ok(false);
        }
        if !crate::tree::bisimilar(&dx.source, &dy.source)? {
            return Ok(false);
        }
        for (sx, sy) in dx.segments.iter().zip(dy.segments.iter()) {
            if sx.steps != sy.steps || sx.ordinal != sy.ordinal {
                return Ok(false);
            }
            if !hat_pair(&sx.hat, &sy.hat, &mut stack)? {
                return Ok(false);
            }
        }
        if !hat_pair(&dx.final_hat, &dy.final_hat, &mut stack)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn hat_pair<R: RuleFamily>(
    hx: &Hat<R>,
    hy: &Hat<R>,
    stack: &mut Vec<(Witness<R>, Witness<R>)>,
) -> Result<bool> {
    match (hx, hy) {
        (Hat::Axiom(a), Hat::Axiom(b)) => Ok(a == b),
        (Hat::Lift { rule: r1, children: c1 }, Hat::Lift { rule: r2, children: c2 }) => {
            if r1 != r2 || c1.len() != c2.len() {
                return Ok(false);
            }
            for (a, b) in c1.iter().zip(c2.iter()) {
                stack.push((a.clone(), b.clone()));
            }
            Ok(true)
        }
        _ => Ok(false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fo::{example_system, FoOracle, FoRule, Signature};
    use crate::gen::{example_omega2_witness, example_omega_witness};
    use std::sync::Arc;

    fn oracle() -> FoOracle {
        FoOracle { system: Arc::new(example_system()) }
    }

    fn tr(w: &Witness<FoRule>, d: usize) -> String {
        target_truncation(w, d).unwrap().to_string()
    }

    #[test]
    fn refl_witness_is_valid_and_stationary() {
        let sys = example_system();
        let t = sys.sig.cons("f", vec![sys.sig.cons("g", vec![sys.sig.cons("a", vec![]).unwrap()]).unwrap()]).unwrap();
        let w = refl_witness(&t, &Ordinal::omega()).unwrap();
        assert_eq!(tr(&w, 5), "f(g(a))");
        assert!(validate_witness(&w, 8, &oracle()).unwrap().is_empty());
    }

    #[test]
    fn example_witnesses_validate_and_reach_f_omega() {
        for (_, w) in [example_omega2_witness().unwrap(), example_omega_witness().unwrap()] {
            assert!(validate_witness(&w, 8, &oracle()).unwrap().is_empty());
            assert_eq!(tr(&w, 3), "f(f(f(*)))");
        }
        let (_, w) = example_omega2_witness().unwrap();
        assert_eq!(w.ordinal().unwrap().to_string(), "w*2");
    }

    #[test]
    fn segment_ordinal_must_stay_below_gamma() {
        let sys = example_system();
        let a = sys.sig.cons("a", vec![]).unwrap();
        let om = Ordinal::omega();
        let seg = Segment { steps: vec![], ordinal: om.clone(), hat: refl_hat(&a, &om).unwrap() };
        let w = Witness::split(a.clone(), om.clone(), vec![seg], vec![], refl_hat(&a, &om).unwrap());
        let vs = validate_witness(&w, 8, &oracle()).unwrap();
        assert!(vs.iter().any(|v| matches!(v, WitnessViolation::OrdinalViolation { .. })), "{vs:?}");
    }

    #[test]
    fn endpoint_mismatch_is_flagged() {
        let sys = example_system();
        let a = sys.sig.cons("a", vec![]).unwrap();
        let om = Ordinal::omega();
        // after rule1 the term is f(g(a)), but the hat claims it is still a
        let w = Witness::split(a.clone(), om.clone(), vec![], vec![Step::root("rule1")], refl_hat(&a, &om).unwrap());
        let vs = validate_witness(&w, 8, &oracle()).unwrap();
        assert!(vs.iter().any(|v| matches!(v, WitnessViolation::EndpointMismatch { .. })), "{vs:?}");
    }

    #[test]
    fn unguarded_cycles_are_rejected_and_flagged() {
        let l = Label::fresh();
        assert!(matches!(
            Witness::<FoRule>::rec(l, Witness::back(l)),
            Err(Error::Unguarded(_))
        ));
        let w = Witness::<FoRule>::rec_unchecked(l, Witness::back(l));
        let vs = validate_witness(&w, 4, &oracle()).unwrap();
        assert!(vs.iter().any(|v| matches!(v, WitnessViolation::UnguardedCycle { .. })), "{vs:?}");
    }

    #[test]
    fn lift_arity_mismatch_is_flagged() {
        let sys = example_system();
        let a = sys.sig.cons("a", vec![]).unwrap();
        let om = Ordinal::omega();
        let f = sys.sig.cons_rule("f").unwrap();
        let w = Witness::split(a, om, vec![], vec![], Hat::Lift { rule: f, children: vec![] });
        let vs = validate_witness(&w, 4, &oracle()).unwrap();
        assert!(vs.iter().any(|v| matches!(v, WitnessViolation::LiftInconsistent { .. })), "{vs:?}");
    }

    #[test]
    fn weakening_raises_the_ordinal_only() {
        let sys = example_system();
        let t = sys.sig.cons("a", vec![]).unwrap();
        let w = refl_witness(&t, &Ordinal::omega()).unwrap();
        let om2 = Ordinal::omega_term(Ordinal::one(), 2);
        let w2 = weaken_witness(&w, &om2).unwrap();
        assert_eq!(w2.ordinal().unwrap(), om2);
        assert_eq!(tr(&w2, 4), tr(&w, 4));
        assert!(matches!(weaken_witness(&w2, &Ordinal::one()), Err(Error::OrdinalNotLarger(_, _))));
    }

    #[test]
    fn hat_concatenation_chains_endpoints() {
        let sys = example_system();
        let sig = &sys.sig;
        let a = sig.cons("a", vec![]).unwrap();
        let g_a = sig.cons("g", vec![a.clone()]).unwrap();
        let f_of = |t: DTree<FoRule>| sig.cons("f", vec![t]).unwrap();
        let om = Ordinal::omega();
        // f(a) -> f(f(g(a))) -> f(f(g(f(g(a))))) via rule1 at deeper redexes
        let f_g_a = f_of(g_a.clone());
        let h1 = Hat::Lift {
            rule: sig.cons_rule("f").unwrap(),
            children: vec![Witness::split(
                a.clone(),
                om.clone(),
                vec![],
                vec![Step::root("rule1")],
                refl_hat(&f_g_a, &om).unwrap(),
            )],
        };
        let big = f_of(sig.cons("g", vec![f_g_a.clone()]).unwrap());
        let h2 = Hat::Lift {
            rule: sig.cons_rule("f").unwrap(),
            children: vec![Witness::split(
                f_g_a.clone(),
                om.clone(),
                vec![],
                vec![Step::new("rule1", vec![0, 0])],
                refl_hat(&big, &om).unwrap(),
            )],
        };
        let (h, eps) = concat_hat(&h1, &om, &h2, &om, Some(6)).unwrap();
        assert_eq!(eps, om.succ());
        let full = hat_to_full(&h, &eps).unwrap();
        assert_eq!(truncate(&hat_source(&h).unwrap(), 4).unwrap().to_string(), "f(a)");
        assert_eq!(tr(&full, 4), "f(f(g(f(*))))");
        assert!(validate_witness(&full, 6, &oracle()).unwrap().is_empty());
    }

    #[test]
    fn replay_follows_recorded_steps() {
        let sys = example_system();
        let a = sys.sig.cons("a", vec![]).unwrap();
        let steps = [Step::root("rule1"), Step::new("rule1", vec![0, 0]), Step::new("rule2", vec![0])];
        let t = replay(&a, &steps, &oracle()).unwrap();
        assert_eq!(truncate(&t, 6).unwrap().to_string(), "f(f(g(a)))");
        assert!(matches!(
            replay(&a, &[Step::root("rule2")], &oracle()),
            Err(Error::StepNotApplicable(_))
        ));
        let _ = Signature::var("x");
    }
}
