//! Derivation rules of μMALL plus the multicut, with full side-condition
//! validation. Rule instances carry their whole contexts so that premisses
//! and conclusion are computable functions of the instance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::tree::{DTree, RuleFamily};

use super::formula::{formula_subst, neg, Formula, Sequent};

/// A premiss-formula coordinate `(premiss, position)`, both 1-based.
pub type Coord = (usize, usize);

/// The ⊲⊳ pairing on premiss-formula coordinates, stored as normalised
/// unordered pairs (symmetry is automatic).
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct CutRel {
    pairs: BTreeSet<(Coord, Coord)>,
}

impl CutRel {
    pub fn new() -> Self {
        CutRel::default()
    }

    pub fn from_pairs(it: impl IntoIterator<Item = (Coord, Coord)>) -> Self {
        let mut r = CutRel::new();
        for (a, b) in it {
            r.add(a, b);
        }
        r
    }

    pub fn add(&mut self, a: Coord, b: Coord) {
        if a <= b {
            self.pairs.insert((a, b));
        } else {
            self.pairs.insert((b, a));
        }
    }

    pub fn contains(&self, a: Coord, b: Coord) -> bool {
        let k = if a <= b { (a, b) } else { (b, a) };
        self.pairs.contains(&k)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Coord, Coord)> {
        self.pairs.iter()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn support(&self) -> BTreeSet<Coord> {
        let mut s = BTreeSet::new();
        for (a, b) in &self.pairs {
            s.insert(*a);
            s.insert(*b);
        }
        s
    }

    pub fn in_support(&self, c: Coord) -> bool {
        self.pairs.iter().any(|(a, b)| *a == c || *b == c)
    }

    /// All partners of a coordinate (a valid relation has exactly one).
    pub fn partners(&self, c: Coord) -> Vec<Coord> {
        let mut out = Vec::new();
        for (a, b) in &self.pairs {
            if *a == c {
                out.push(*b);
            } else if *b == c {
                out.push(*a);
            }
        }
        out
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum McutViolation {
    Correctness(String),
    Duality(String),
    Connectedness(String),
    Acyclicity(String),
}

impl fmt::Display for McutViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            McutViolation::Correctness(d) => write!(f, "correctness: {d}"),
            McutViolation::Duality(d) => write!(f, "duality: {d}"),
            McutViolation::Connectedness(d) => write!(f, "connectedness: {d}"),
            McutViolation::Acyclicity(d) => write!(f, "acyclicity: {d}"),
        }
    }
}

/// The conclusion an mcut would have: uncut formulæ in lexicographic
/// coordinate order. Does not validate.
pub fn mcut_conclusion(premisses: &[Sequent], rel: &CutRel) -> Sequent {
    let support = rel.support();
    let mut out = Vec::new();
    for (i, p) in premisses.iter().enumerate() {
        for (j, f) in p.0.iter().enumerate() {
            if !support.contains(&(i + 1, j + 1)) {
                out.push(f.clone());
            }
        }
    }
    Sequent(out)
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let r = self.find(self.0[x]);
            self.0[x] = r;
            r
        } else {
            x
        }
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            false
        } else {
            self.0[ra] = rb;
            true
        }
    }
}

/// Check the three multicut side conditions; an empty result means valid.
pub fn multicut_violations(premisses: &[Sequent], rel: &CutRel) -> Vec<McutViolation> {
    let k = premisses.len();
    let mut out = Vec::new();
    let support = rel.support();
    for c in &support {
        let (i, j) = *c;
        if i < 1 || i > k {
            out.push(McutViolation::Correctness(format!(
                "coordinate ({i},{j}) names no premiss"
            )));
        } else if j < 1 || j > premisses[i - 1].len() {
            out.push(McutViolation::Correctness(format!(
                "coordinate ({i},{j}) out of bounds"
            )));
        }
    }
    if !out.is_empty() {
        return out;
    }
    for c in &support {
        let ps = rel.partners(*c);
        if ps.len() != 1 {
            out.push(McutViolation::Duality(format!(
                "coordinate ({},{}) has {} partners",
                c.0,
                c.1,
                ps.len()
            )));
            continue;
        }
        let d = ps[0];
        let fc = premisses[c.0 - 1].get1(c.1).unwrap();
        let fd = premisses[d.0 - 1].get1(d.1).unwrap();
        if *fd != neg(fc) {
            out.push(McutViolation::Duality(format!(
                "({},{}) is {} but ({},{}) is {}, not its dual",
                c.0, c.1, fc, d.0, d.1, fd
            )));
        }
    }
    if k == 0 {
        out.push(McutViolation::Connectedness("no premisses".into()));
        return out;
    }
    let mut dsu = Dsu::new(k);
    for ((i, _), (i2, _)) in rel.iter() {
        if i == i2 {
            out.push(McutViolation::Acyclicity(format!(
                "self-loop on premiss {i}"
            )));
        } else if !dsu.union(i - 1, i2 - 1) {
            out.push(McutViolation::Acyclicity(format!(
                "cycle through premisses {i} and {i2}"
            )));
        }
    }
    let root = dsu.find(0);
    if !(0..k).all(|v| dsu.find(v) == root) {
        out.push(McutViolation::Connectedness(
            "premiss graph is not connected".into(),
        ));
    }
    out
}

/// The conclusion sequent of a valid multicut, or the violations.
pub fn validate_multicut(premisses: &[Sequent], rel: &CutRel) -> Result<Sequent> {
    let vs = multicut_violations(premisses, rel);
    if vs.is_empty() {
        Ok(mcut_conclusion(premisses, rel))
    } else {
        Err(Error::Multicut(
            vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "),
        ))
    }
}

/// A partial injective map from new coordinates to old coordinates, used
/// to transport ⊲⊳ across a root step.
#[derive(Clone, Debug, Default)]
pub struct IndexMap {
    map: BTreeMap<Coord, Coord>,
}

impl IndexMap {
    pub fn new() -> Self {
        IndexMap::default()
    }

    pub fn insert(&mut self, new: Coord, old: Coord) {
        debug_assert!(
            !self.map.values().any(|o| *o == old),
            "index map not injective"
        );
        self.map.insert(new, old);
    }

    pub fn get(&self, new: Coord) -> Option<Coord> {
        self.map.get(&new).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Coord, &Coord)> {
        self.map.iter()
    }
}

/// `(i,j) ⊲⊳′ (i′,j′)` iff `π(i,j) ⊲⊳ π(i′,j′)`, both defined.
pub fn reindex_cutrel(pi: &IndexMap, rel: &CutRel) -> CutRel {
    let inv: BTreeMap<Coord, Coord> = pi.iter().map(|(n, o)| (*o, *n)).collect();
    let mut out = CutRel::new();
    for (a, b) in rel.iter() {
        if let (Some(x), Some(y)) = (inv.get(a), inv.get(b)) {
            out.add(*x, *y);
        }
    }
    out
}

/// Split the context premisses of an mcut whose premiss `tens_pos` ends in
/// a tensor with `gamma_len` left-context formulæ: each context premiss is
/// assigned to the side it is rel-connected to (isolated ones go left).
pub fn partition_tensor_premisses(
    rel: &CutRel,
    total: usize,
    tens_pos: usize,
    gamma_len: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    #[derive(Clone, Copy, PartialEq)]
    enum Node {
        Prem(usize),
        GammaSide,
        DeltaSide,
    }
    let node = |c: Coord| {
        if c.0 == tens_pos {
            if c.1 <= gamma_len {
                Node::GammaSide
            } else {
                Node::DeltaSide
            }
        } else {
            Node::Prem(c.0)
        }
    };
    let idx = |n: Node| match n {
        Node::Prem(i) => i,       // 1..=total, tens_pos unused
        Node::GammaSide => 0,     // virtual
        Node::DeltaSide => total + 1,
    };
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); total + 2];
    for (a, b) in rel.iter() {
        let (x, y) = (idx(node(*a)), idx(node(*b)));
        adj[x].push(y);
        adj[y].push(x);
    }
    let reach = |start: usize| {
        let mut seen = vec![false; total + 2];
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            for &w in &adj[v] {
                stack.push(w);
            }
        }
        seen
    };
    let from_gamma = reach(0);
    let from_delta = reach(total + 1);
    let mut gs = Vec::new();
    let mut ds = Vec::new();
    for p in 1..=total {
        if p == tens_pos {
            continue;
        }
        match (from_gamma[p], from_delta[p]) {
            (true, true) => {
                return Err(Error::NotPartitionable(format!(
                    "premiss {p} connects to both tensor sides"
                )))
            }
            (false, true) => ds.push(p),
            // Isolated premisses go to the left side.
            _ => gs.push(p),
        }
    }
    Ok((gs, ds))
}

// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum MumallRule {
    Ax { f: Formula },
    Cut { gamma: Sequent, delta: Sequent, f: Formula },
    Exch { sigma: Vec<usize>, concl: Sequent },
    One,
    Top { gamma: Sequent },
    Bot { gamma: Sequent },
    Par { gamma: Sequent, f: Formula, g: Formula },
    Tens { gamma: Sequent, delta: Sequent, f: Formula, g: Formula },
    Plus { gamma: Sequent, i: usize, f0: Formula, f1: Formula },
    With { gamma: Sequent, f: Formula, g: Formula },
    Mu { gamma: Sequent, x: String, f: Formula },
    Nu { gamma: Sequent, x: String, f: Formula },
    Mcut { premisses: Vec<Sequent>, rel: CutRel },
}

pub type PreProof = DTree<MumallRule>;

impl MumallRule {
    pub fn premisses(&self) -> Vec<Sequent> {
        match self {
            MumallRule::Ax { .. } | MumallRule::One | MumallRule::Top { .. } => Vec::new(),
            MumallRule::Cut { gamma, delta, f } => vec![
                gamma.clone().with(f.clone()),
                delta.clone().with(neg(f)),
            ],
            MumallRule::Exch { sigma, concl } => {
                let fs = sigma
                    .iter()
                    .map(|&j| concl.get1(j).cloned().unwrap_or(Formula::Zero))
                    .collect();
                vec![Sequent(fs)]
            }
            MumallRule::Bot { gamma } => vec![gamma.clone()],
            MumallRule::Par { gamma, f, g } => {
                vec![gamma.clone().with(f.clone()).with(g.clone())]
            }
            MumallRule::Tens { gamma, delta, f, g } => vec![
                gamma.clone().with(f.clone()),
                delta.clone().with(g.clone()),
            ],
            MumallRule::Plus { gamma, i, f0, f1 } => {
                let fi = if *i == 0 { f0 } else { f1 };
                vec![gamma.clone().with(fi.clone())]
            }
            MumallRule::With { gamma, f, g } => vec![
                gamma.clone().with(f.clone()),
                gamma.clone().with(g.clone()),
            ],
            MumallRule::Mu { gamma, x, f } => {
                let fix = Formula::Mu(x.clone(), Box::new(f.clone()));
                vec![gamma.clone().with(formula_subst(f, x, &fix))]
            }
            MumallRule::Nu { gamma, x, f } => {
                let fix = Formula::Nu(x.clone(), Box::new(f.clone()));
                vec![gamma.clone().with(formula_subst(f, x, &fix))]
            }
            MumallRule::Mcut { premisses, .. } => premisses.clone(),
        }
    }
}

impl RuleFamily for MumallRule {
    type Stmt = Sequent;

    fn arity(&self) -> usize {
        match self {
            MumallRule::Ax { .. } | MumallRule::One | MumallRule::Top { .. } => 0,
            MumallRule::Exch { .. }
            | MumallRule::Bot { .. }
            | MumallRule::Par { .. }
            | MumallRule::Plus { .. }
            | MumallRule::Mu { .. }
            | MumallRule::Nu { .. } => 1,
            MumallRule::Cut { .. } | MumallRule::Tens { .. } | MumallRule::With { .. } => 2,
            MumallRule::Mcut { premisses, .. } => premisses.len(),
        }
    }

    fn coind(&self, _i: usize) -> bool {
        // Exchange is housekeeping and does not guard corecursion.
        !matches!(self, MumallRule::Exch { .. })
    }

    fn conclusion(&self) -> Sequent {
        match self {
            MumallRule::Ax { f } => Sequent(vec![f.clone(), neg(f)]),
            MumallRule::Cut { gamma, delta, .. } => gamma.concat(delta),
            MumallRule::Exch { concl, .. } => concl.clone(),
            MumallRule::One => Sequent(vec![Formula::One]),
            MumallRule::Top { gamma } => gamma.clone().with(Formula::Top),
            MumallRule::Bot { gamma } => gamma.clone().with(Formula::Bot),
            MumallRule::Par { gamma, f, g } => gamma
                .clone()
                .with(Formula::Par(Box::new(f.clone()), Box::new(g.clone()))),
            MumallRule::Tens { gamma, delta, f, g } => gamma
                .concat(delta)
                .with(Formula::Tens(Box::new(f.clone()), Box::new(g.clone()))),
            MumallRule::Plus { gamma, f0, f1, .. } => gamma
                .clone()
                .with(Formula::Plus(Box::new(f0.clone()), Box::new(f1.clone()))),
            MumallRule::With { gamma, f, g } => gamma
                .clone()
                .with(Formula::With(Box::new(f.clone()), Box::new(g.clone()))),
            MumallRule::Mu { gamma, x, f } => gamma
                .clone()
                .with(Formula::Mu(x.clone(), Box::new(f.clone()))),
            MumallRule::Nu { gamma, x, f } => gamma
                .clone()
                .with(Formula::Nu(x.clone(), Box::new(f.clone()))),
            MumallRule::Mcut { premisses, rel } => mcut_conclusion(premisses, rel),
        }
    }

    fn check_premisses(&self, premisses: &[Sequent]) -> Result<()> {
        if let MumallRule::Exch { sigma, concl } = self {
            let n = concl.len();
            let mut seen = vec![false; n];
            if sigma.len() != n {
                return Err(Error::Domain("exchange permutation length".into()));
            }
            for &j in sigma {
                if j < 1 || j > n || seen[j - 1] {
                    return Err(Error::Domain("not a permutation".into()));
                }
                seen[j - 1] = true;
            }
        }
        if let MumallRule::Mcut { premisses: ps, rel } = self {
            validate_multicut(ps, rel)?;
        }
        let expected = self.premisses();
        for (i, (got, want)) in premisses.iter().zip(expected.iter()).enumerate() {
            if got != want {
                return Err(Error::Mismatch(format!(
                    "premiss {}: expected {}, got {}",
                    i + 1,
                    want,
                    got
                )));
            }
        }
        Ok(())
    }

    fn display_name(&self) -> String {
        match self {
            MumallRule::Ax { .. } => "ax",
            MumallRule::Cut { .. } => "cut",
            MumallRule::Exch { .. } => "x",
            MumallRule::One => "one",
            MumallRule::Top { .. } => "top",
            MumallRule::Bot { .. } => "bot",
            MumallRule::Par { .. } => "par",
            MumallRule::Tens { .. } => "tens",
            MumallRule::Plus { .. } => "plus",
            MumallRule::With { .. } => "with",
            MumallRule::Mu { .. } => "mu",
            MumallRule::Nu { .. } => "nu",
            MumallRule::Mcut { .. } => "mcut",
        }
        .to_string()
    }
}

/// Fig.-1 conclusion computation with schema checking.
pub fn mumall_rule_conclude(rule: &MumallRule, premisses: &[Sequent]) -> Result<Sequent> {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{gen_invalid_mcut, gen_valid_mcut};
    use crate::mumall::parse_sequent_str;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Independent reference checker: explicit range/pairing scan, pairwise
    /// duality, and connectedness/acyclicity by exhaustive path search on
    /// the premiss multigraph.
    fn reference_valid(premisses: &[Sequent], rel: &CutRel) -> bool {
        let k = premisses.len();
        if k == 0 {
            return false;
        }
        let mut coords = Vec::new();
        for (a, b) in rel.iter() {
            coords.push(*a);
            coords.push(*b);
        }
        for (i, j) in &coords {
            if *i < 1 || *i > k || *j < 1 || *j > premisses[*i - 1].len() {
                return false;
            }
        }
        for c in &coords {
            if coords.iter().filter(|d| *d == c).count() != 1 {
                return false;
            }
        }
        for (a, b) in rel.iter() {
            let fa = premisses[a.0 - 1].get1(a.1).unwrap();
            let fb = premisses[b.0 - 1].get1(b.1).unwrap();
            if *fb != neg(fa) || a.0 == b.0 {
                return false;
            }
        }
        let edges: Vec<(usize, usize)> = rel.iter().map(|(a, b)| (a.0, b.0)).collect();
        // connected: every premiss reachable from 1 by some simple path
        fn reachable(from: usize, to: usize, edges: &[(usize, usize)], used: &mut Vec<bool>) -> bool {
            if from == to {
                return true;
            }
            for (e, (a, b)) in edges.iter().enumerate() {
                if used[e] {
                    continue;
                }
                let next = if *a == from { *b } else if *b == from { *a } else { continue };
                used[e] = true;
                if reachable(next, to, edges, used) {
                    used[e] = false;
                    return true;
                }
                used[e] = false;
            }
            false
        }
        for v in 2..=k {
            if !reachable(1, v, &edges, &mut vec![false; edges.len()]) {
                return false;
            }
        }
        // acyclic: no edge lies on a path between its own endpoints that
        // avoids it
        for (e, (a, b)) in edges.iter().enumerate() {
            let mut used = vec![false; edges.len()];
            used[e] = true;
            if reachable(*a, *b, &edges, &mut used) {
                return false;
            }
        }
        true
    }

    #[test]
    fn validator_agrees_with_the_reference_checker() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..120 {
            let k = rng.gen_range(1..=5);
            let (seqs, rel) = if rng.gen_bool(0.5) {
                gen_valid_mcut(&mut rng, k)
            } else {
                gen_invalid_mcut(&mut rng, k)
            };
            let got = validate_multicut(&seqs, &rel);
            let want = reference_valid(&seqs, &rel);
            assert_eq!(got.is_ok(), want, "{seqs:?} {rel:?}");
            if let Ok(concl) = got {
                assert_eq!(concl, mcut_conclusion(&seqs, &rel));
            }
        }
    }

    #[test]
    fn violations_are_classified() {
        let s = |src: &str| parse_sequent_str(src).unwrap();
        let two = vec![s("|- p, c"), s("|- q, ~c")];
        assert!(validate_multicut(&two, &CutRel::from_pairs([((1, 2), (2, 2))])).is_ok());
        let vs = multicut_violations(&two, &CutRel::from_pairs([((1, 5), (2, 2))]));
        assert!(vs.iter().any(|v| matches!(v, McutViolation::Correctness(_))), "{vs:?}");
        let vs = multicut_violations(&two, &CutRel::from_pairs([((1, 1), (2, 2))]));
        assert!(vs.iter().any(|v| matches!(v, McutViolation::Duality(_))), "{vs:?}");
        let vs = multicut_violations(&two, &CutRel::new());
        assert!(vs.iter().any(|v| matches!(v, McutViolation::Connectedness(_))), "{vs:?}");
        let cyclic = vec![s("|- c, d"), s("|- ~c, ~d")];
        let vs = multicut_violations(
            &cyclic,
            &CutRel::from_pairs([((1, 1), (2, 1)), ((1, 2), (2, 2))]),
        );
        assert!(vs.iter().any(|v| matches!(v, McutViolation::Acyclicity(_))), "{vs:?}");
    }

    #[test]
    fn conclusion_keeps_uncut_formulas_in_coordinate_order() {
        let s = |src: &str| parse_sequent_str(src).unwrap();
        let seqs = vec![s("|- p, c, q"), s("|- ~c, r")];
        let rel = CutRel::from_pairs([((1, 2), (2, 1))]);
        assert_eq!(validate_multicut(&seqs, &rel).unwrap(), s("|- p, q, r"));
    }

    #[test]
    fn tensor_partition_assigns_context_premisses() {
        // premisses 1,2 are contexts, premiss 3 ends in a tensor with one
        // gamma formula; 1 is tied to gamma, 2 to delta
        let rel = CutRel::from_pairs([((1, 2), (3, 1)), ((2, 2), (3, 2))]);
        let (gs, ds) = partition_tensor_premisses(&rel, 3, 3, 1).unwrap();
        assert_eq!(gs, vec![1]);
        assert_eq!(ds, vec![2]);
        // a premiss tied to both sides is not partitionable
        let bad = CutRel::from_pairs([((1, 1), (3, 1)), ((1, 2), (3, 2))]);
        assert!(partition_tensor_premisses(&bad, 3, 3, 1).is_err());
    }

    #[test]
    fn reindexing_transports_the_relation() {
        let mut pi = IndexMap::new();
        pi.insert((1, 1), (2, 2));
        pi.insert((2, 1), (1, 1));
        let rel = CutRel::from_pairs([((1, 1), (2, 2))]);
        let out = reindex_cutrel(&pi, &rel);
        assert!(out.contains((1, 1), (2, 1)));
        assert_eq!(out.len(), 1);
    }
}
