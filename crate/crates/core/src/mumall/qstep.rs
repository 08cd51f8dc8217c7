//! Property Q for μMALL: pushing one cut-elimination root step through a
//! witness. The step's source-side effect is read off generically — a root
//! step only rearranges whole subproof handles, so the q-side pattern can
//! be recovered by matching those handles inside the stepped target.

use std::collections::{HashMap, VecDeque};

use crate::compress::{
    pattern_extract, pattern_fill as fill_witness, q_step_congruence, Engine, QStep,
};
use crate::error::{Error, Result};
use crate::pattern::Pattern;
use crate::rewrite::{witness_target, Step, Witness, ZeroStepOracle};

use super::rules::{MumallRule, PreProof};
use super::steps::{root_of, MumallOracle, RootStepKind};

/// 0-based child positions whose root rule the p-pattern opens up (their
/// premisses become holes); everything else is a hole as-is.
fn opened_children(name: &str, m: usize) -> Vec<usize> {
    match name {
        "merge" => vec![m - 1],
        "ax" => vec![m - 2],
        "tensor-par" | "with-plus" | "mu-nu" | "bot-one" => vec![m - 2, m - 1],
        s if s.starts_with("comm-") => vec![m - 1],
        _ => Vec::new(),
    }
}

/// The p-pattern of a root step over the concrete target, plus the target
/// subtrees standing under the holes (hole order = traversal order).
fn p_pattern(
    name: &str,
    tgt: &PreProof,
) -> Result<(Pattern<MumallRule>, Vec<PreProof>)> {
    if name == "wrap" {
        return Ok((Pattern::Hole(1), vec![tgt.clone()]));
    }
    let Some((root, children)) = root_of(tgt)? else {
        return Err(Error::NotApplicable("step target is a truncation leaf".into()));
    };
    let m = children.len();
    if m == 0 {
        return Err(Error::NotApplicable("root step on a nullary rule".into()));
    }
    let opened = opened_children(name, m);
    let mut holes = Vec::new();
    let mut pats = Vec::with_capacity(m);
    for (i, c) in children.iter().enumerate() {
        if opened.contains(&i) {
            let Some((r, gs)) = root_of(c)? else {
                return Err(Error::NotApplicable(
                    "premiss needed by the root step is a truncation leaf".into(),
                ));
            };
            let mut gpats = Vec::with_capacity(gs.len());
            for g in gs {
                holes.push(g);
                gpats.push(Pattern::Hole(holes.len()));
            }
            pats.push(Pattern::Node(r, gpats));
        } else {
            holes.push(c.clone());
            pats.push(Pattern::Hole(holes.len()));
        }
    }
    Ok((Pattern::Node(root, pats), holes))
}

/// Recover the q-pattern by locating the hole subtree handles inside the
/// stepped target. When one handle stands under several holes (shared
/// context subproofs), occurrences are matched in traversal order, except
/// that a handle is never exhausted — duplication in the new tree (the
/// with commutation) keeps reusing the last hole.
fn q_pattern(
    new_tgt: &PreProof,
    holes: &[PreProof],
) -> Result<Pattern<MumallRule>> {
    let mut map: HashMap<*const (), VecDeque<usize>> = HashMap::new();
    for (i, h) in holes.iter().enumerate() {
        map.entry(h.ptr()).or_default().push_back(i + 1);
    }
    fn go(
        t: &PreProof,
        map: &mut HashMap<*const (), VecDeque<usize>>,
        depth: usize,
    ) -> Result<Pattern<MumallRule>> {
        if let Some(q) = map.get_mut(&t.ptr()) {
            let i = if q.len() > 1 {
                q.pop_front().unwrap()
            } else {
                *q.front().unwrap()
            };
            return Ok(Pattern::Hole(i));
        }
        if depth == 0 {
            return Err(Error::Internal(
                "stepped target does not reuse the premiss subproofs".into(),
            ));
        }
        let (rule, cs) = t.unfold()?;
        let sub: Result<Vec<_>> = cs.iter().map(|c| go(c, map, depth - 1)).collect();
        Ok(Pattern::Node(rule, sub?))
    }
    go(new_tgt, &mut map, 8)
}

/// Premiss permutations rearrange equal handles, so their q-pattern is
/// written out from τ instead of recovered by handle matching.
fn perm_q_pattern(new_tgt: &PreProof, tau: &[usize]) -> Result<Pattern<MumallRule>> {
    let Some((exch, exch_children)) = root_of(new_tgt)? else {
        return Err(Error::Internal("permutation step lost the exchange root".into()));
    };
    let Some((mcut, _)) = root_of(&exch_children[0])? else {
        return Err(Error::Internal("permutation step lost the multicut".into()));
    };
    let inner = Pattern::Node(
        mcut,
        tau.iter().map(|&i| Pattern::Hole(i)).collect(),
    );
    Ok(Pattern::Node(exch, vec![inner]))
}

fn root_q_step(
    engine: &Engine<MumallRule>,
    w: &Witness<MumallRule>,
    name: &str,
) -> Result<(Vec<Step>, Witness<MumallRule>)> {
    let delta = w.ordinal()?;
    let tgt = witness_target(w)?;
    let new_tgt = MumallOracle.apply(name, &tgt)?;
    let (p, holes) = p_pattern(name, &tgt)?;
    let (mut prefix, wits) = pattern_extract(engine, w, &p)?;
    let q = match RootStepKind::parse(name) {
        Ok(RootStepKind::PremissPerm { tau }) => perm_q_pattern(&new_tgt, &tau)?,
        _ => q_pattern(&new_tgt, &holes)?,
    };
    let w2 = fill_witness(&q, &wits, &delta)?;
    prefix.push(Step::root(name));
    Ok((prefix, w2))
}

pub struct MumallQStep;

impl QStep<MumallRule> for MumallQStep {
    fn q_step(
        &self,
        w: &Witness<MumallRule>,
        st: &Step,
        engine: &Engine<MumallRule>,
    ) -> Result<(Vec<Step>, Witness<MumallRule>)> {
        if st.path.is_empty() {
            root_q_step(engine, w, &st.name)
        } else {
            q_step_congruence(engine, w, st)
        }
    }
}
