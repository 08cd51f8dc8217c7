//! Finite derivation patterns with numbered holes.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tree::{DTree, RuleFamily};

/// A finite derivation prefix whose leaves may be numbered holes ◻₁…◻ₖ.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Pattern<R: RuleFamily> {
    /// Hole indices are 1-based.
    Hole(usize),
    Node(R, Vec<Pattern<R>>),
}

impl<R: RuleFamily> Pattern<R> {
    /// Validate that every hole index in 1..=k occurs exactly once and
    /// return k.
    pub fn hole_arity(&self) -> Result<usize> {
        fn collect<R: RuleFamily>(p: &Pattern<R>, out: &mut Vec<usize>) {
            match p {
                Pattern::Hole(i) => out.push(*i),
                Pattern::Node(_, cs) => cs.iter().for_each(|c| collect(c, out)),
            }
        }
        let mut holes = Vec::new();
        collect(self, &mut holes);
        let k = holes.len();
        holes.sort_unstable();
        for (want, got) in (1..=k).zip(holes.iter()) {
            if want != *got {
                return Err(Error::Domain(format!(
                    "pattern holes must be exactly 1..={k}, found hole {got}"
                )));
            }
        }
        Ok(k)
    }
}

/// Match `t` along the pattern's skeleton; returns the subtrees under the
/// holes in index order.
pub fn pattern_match<R: RuleFamily>(p: &Pattern<R>, t: &DTree<R>) -> Result<Vec<DTree<R>>> {
    let k = p.hole_arity()?;
    let mut out: BTreeMap<usize, DTree<R>> = BTreeMap::new();
    fn go<R: RuleFamily>(
        p: &Pattern<R>,
        t: &DTree<R>,
        out: &mut BTreeMap<usize, DTree<R>>,
    ) -> Result<()> {
        match p {
            Pattern::Hole(i) => {
                out.insert(*i, t.clone());
                Ok(())
            }
            Pattern::Node(r, ps) => {
                let (rt, cs) = t.unfold()?;
                if rt != *r {
                    return Err(Error::Mismatch(format!(
                        "expected rule {}, found {}",
                        r.display_name(),
                        rt.display_name()
                    )));
                }
                for (pc, tc) in ps.iter().zip(cs.iter()) {
                    go(pc, tc, out)?;
                }
                Ok(())
            }
        }
    }
    go(p, t, &mut out)?;
    debug_assert_eq!(out.len(), k);
    Ok(out.into_values().collect())
}

/// Rebuild a tree by substituting `children` (in hole-index order) into the
/// pattern's skeleton, re-checking every rule's domain on the way up.
pub fn pattern_fill<R: RuleFamily>(p: &Pattern<R>, children: &[DTree<R>]) -> Result<DTree<R>> {
    let k = p.hole_arity()?;
    if children.len() != k {
        return Err(Error::Domain(format!(
            "pattern has {k} holes, {} children supplied",
            children.len()
        )));
    }
    fn go<R: RuleFamily>(p: &Pattern<R>, children: &[DTree<R>]) -> Result<DTree<R>> {
        match p {
            Pattern::Hole(i) => Ok(children[*i - 1].clone()),
            Pattern::Node(r, ps) => {
                let cs: Result<Vec<_>> = ps.iter().map(|pc| go(pc, children)).collect();
                DTree::rule(r.clone(), cs?)
            }
        }
    }
    go(p, children)
}
