//! Seeded generators used by the test suite and the CLI's sampling
//! commands. Everything is driven by an explicit `StdRng`, so runs are
//! reproducible from a seed.

use std::sync::Arc;

use rand::rngs::StdRng;
use rand::Rng;

use crate::error::Result;
use crate::fo::{FOTerm, FoRule, FoSystem, Signature};
use crate::lambda::{LamCtx, LamTerm};
use crate::mumall::{
    CutRel, Formula, MumallRule, PreProof, RootStepKind, Sequent,
};
use crate::ord::Ordinal;
use crate::rewrite::{apply_step, refl_hat, Hat, Segment, Step, Witness, ZeroStepOracle};
use crate::tree::{DTree, Label, RuleFamily, TreeRepr};

// ---------------------------------------------------------------------------
// Generic runs and witnesses.

fn collect_steps<R: RuleFamily>(
    t: &DTree<R>,
    oracle: &dyn ZeroStepOracle<R>,
    depth: usize,
    at: &mut Vec<usize>,
    out: &mut Vec<Step>,
) -> Result<()> {
    let r = t.resolve()?;
    if let TreeRepr::Rule(_, cs) = r.view() {
        for (name, _) in oracle.enumerate(&r)? {
            out.push(Step { name, path: at.clone() });
        }
        if depth > 0 {
            for (i, c) in cs.iter().enumerate() {
                at.push(i);
                collect_steps(c, oracle, depth - 1, at, out)?;
                at.pop();
            }
        }
    }
    Ok(())
}

/// Perform up to `count` random zero steps on `cur` (scanning positions to
/// `scan_depth`), returning the steps taken.
pub fn random_zero_steps<R: RuleFamily>(
    cur: &mut DTree<R>,
    oracle: &dyn ZeroStepOracle<R>,
    rng: &mut StdRng,
    count: usize,
    scan_depth: usize,
) -> Result<Vec<Step>> {
    let mut out = Vec::new();
    for _ in 0..count {
        let mut cands = Vec::new();
        collect_steps(cur, oracle, scan_depth, &mut Vec::new(), &mut cands)?;
        if cands.is_empty() {
            break;
        }
        let st = cands.swap_remove(rng.gen_range(0..cands.len()));
        *cur = apply_step(cur, &st, oracle)?;
        out.push(st);
    }
    Ok(out)
}

/// A random witness at ω out of `t`: a few finite-ordinal segments of
/// random steps under reflexive hats, then either a reflexive final hat or
/// a lift whose children are generated recursively.
pub fn gen_run_witness<R: RuleFamily>(
    t: &DTree<R>,
    oracle: &dyn ZeroStepOracle<R>,
    rng: &mut StdRng,
    lift_depth: usize,
) -> Result<Witness<R>> {
    let gamma = Ordinal::omega();
    let mut cur = t.clone();
    let mut segments = Vec::new();
    for i in 0..rng.gen_range(0..3usize) {
        let n = rng.gen_range(0..3);
        let steps = random_zero_steps(&mut cur, oracle, rng, n, 3)?;
        let ord = Ordinal::from_nat(i as u64 + 1);
        segments.push(Segment { steps, ordinal: ord.clone(), hat: refl_hat(&cur, &ord)? });
    }
    let n = rng.gen_range(0..3);
    let trailing = random_zero_steps(&mut cur, oracle, rng, n, 3)?;
    let resolved = cur.resolve()?;
    let final_hat = match resolved.view() {
        TreeRepr::Rule(rule, cs) if lift_depth > 0 => {
            let children: Result<Vec<_>> = cs
                .iter()
                .map(|c| gen_run_witness(c, oracle, rng, lift_depth - 1))
                .collect();
            Hat::Lift { rule: rule.clone(), children: children? }
        }
        _ => refl_hat(&cur, &gamma)?,
    };
    Ok(Witness::split(t.clone(), gamma, segments, trailing, final_hat))
}

// ---------------------------------------------------------------------------
// First-order terms.

pub fn gen_fo_term(sig: &Signature, rng: &mut StdRng, depth: usize) -> Result<FOTerm> {
    let syms: Vec<(String, usize)> =
        sig.symbols().map(|(n, a)| (n.to_string(), a)).collect();
    let leaves: Vec<&(String, usize)> = syms.iter().filter(|(_, a)| *a == 0).collect();
    if depth == 0 || syms.is_empty() {
        return match leaves.get(rng.gen_range(0..leaves.len().max(1))) {
            Some((n, _)) => sig.cons(n, Vec::new()),
            None => Ok(Signature::var("v")),
        };
    }
    let (n, a) = syms[rng.gen_range(0..syms.len())].clone();
    let cs: Result<Vec<_>> = (0..a).map(|_| gen_fo_term(sig, rng, depth - 1)).collect();
    sig.cons(&n, cs?)
}

/// A random regular term: sometimes finite, sometimes a cycle through a
/// coinductive argument position.
pub fn gen_fo_regular(sig: &Signature, rng: &mut StdRng, depth: usize) -> Result<FOTerm> {
    let guards: Vec<(String, Vec<bool>)> = sig
        .symbols()
        .filter_map(|(n, _)| {
            let coind = sig.lookup(n)?;
            coind.iter().any(|b| *b).then(|| (n.to_string(), coind.clone()))
        })
        .collect();
    if guards.is_empty() || rng.gen_bool(0.4) {
        return gen_fo_term(sig, rng, depth);
    }
    let label = Label::fresh();
    let (sym, coind) = guards[rng.gen_range(0..guards.len())].clone();
    let holes: Vec<usize> =
        (0..coind.len()).filter(|&i| coind[i]).collect();
    let hole = holes[rng.gen_range(0..holes.len())];
    let cs: Result<Vec<_>> = (0..coind.len())
        .map(|i| {
            if i == hole {
                Ok(DTree::back(label))
            } else {
                gen_fo_term(sig, rng, depth.saturating_sub(1))
            }
        })
        .collect();
    let body = sig.cons(&sym, cs?)?;
    DTree::rec(label, body)
}

// ---------------------------------------------------------------------------
// λ-terms.

pub fn gen_lam_term(
    ctx: &LamCtx,
    rng: &mut StdRng,
    depth: usize,
    binders: u32,
) -> LamTerm {
    let leaf = |rng: &mut StdRng| {
        if binders > 0 && rng.gen_bool(0.7) {
            ctx.bvar(rng.gen_range(0..binders))
        } else {
            ctx.var(["x", "y", "z"][rng.gen_range(0..3)])
        }
    };
    if depth == 0 {
        return leaf(rng);
    }
    match rng.gen_range(0..4u8) {
        0 => leaf(rng),
        1 => ctx.abs(gen_lam_term(ctx, rng, depth - 1, binders + 1)),
        _ => {
            let f = gen_lam_term(ctx, rng, depth - 1, binders);
            let a = gen_lam_term(ctx, rng, depth - 1, binders);
            ctx.app(f, a)
        }
    }
}

/// A random regular λ-term: sometimes finite, sometimes a cycle guarded by
/// whichever position the flag setting makes coinductive.
pub fn gen_lam_regular(ctx: &LamCtx, rng: &mut StdRng, depth: usize) -> LamTerm {
    if rng.gen_bool(0.4) {
        return gen_lam_term(ctx, rng, depth, 0);
    }
    let label = Label::fresh();
    let back = || DTree::back(label);
    let filler = |rng: &mut StdRng| gen_lam_term(ctx, rng, depth.saturating_sub(1), 0);
    let mut bodies = vec![
        ctx.abs(back()),
        ctx.app(back(), filler(rng)),
        ctx.app(filler(rng), back()),
    ];
    while !bodies.is_empty() {
        let body = bodies.swap_remove(rng.gen_range(0..bodies.len()));
        if let Ok(t) = DTree::rec(label, body) {
            return t;
        }
    }
    gen_lam_term(ctx, rng, depth, 0)
}

// ---------------------------------------------------------------------------
// μMALL formulæ and multicuts.

pub fn gen_formula(rng: &mut StdRng, depth: usize) -> Formula {
    fn go(rng: &mut StdRng, depth: usize, scope: &mut Vec<String>, ctr: &mut usize) -> Formula {
        if depth == 0 {
            let atoms = ["p", "q", "r"];
            return match rng.gen_range(0..if scope.is_empty() { 3 } else { 4 }) {
                0 => Formula::Atom(atoms[rng.gen_range(0..3)].into()),
                1 => Formula::NegAtom(atoms[rng.gen_range(0..3)].into()),
                2 => [Formula::Zero, Formula::One, Formula::Top, Formula::Bot]
                    [rng.gen_range(0..4)]
                .clone(),
                _ => Formula::Var(scope[rng.gen_range(0..scope.len())].clone()),
            };
        }
        match rng.gen_range(0..6u8) {
            0 => Formula::Par(
                Box::new(go(rng, depth - 1, scope, ctr)),
                Box::new(go(rng, depth - 1, scope, ctr)),
            ),
            1 => Formula::Tens(
                Box::new(go(rng, depth - 1, scope, ctr)),
                Box::new(go(rng, depth - 1, scope, ctr)),
            ),
            2 => Formula::Plus(
                Box::new(go(rng, depth - 1, scope, ctr)),
                Box::new(go(rng, depth - 1, scope, ctr)),
            ),
            3 => Formula::With(
                Box::new(go(rng, depth - 1, scope, ctr)),
                Box::new(go(rng, depth - 1, scope, ctr)),
            ),
            fx => {
                *ctr += 1;
                let x = format!("X{ctr}");
                scope.push(x.clone());
                let b = go(rng, depth - 1, scope, ctr);
                scope.pop();
                if fx == 4 {
                    Formula::Mu(x, Box::new(b))
                } else {
                    Formula::Nu(x, Box::new(b))
                }
            }
        }
    }
    go(rng, depth, &mut Vec::new(), &mut 0)
}

/// A valid multicut shape: random base formulæ plus a spanning tree of
/// fresh dual atom pairs.
pub fn gen_valid_mcut(rng: &mut StdRng, k: usize) -> (Vec<Sequent>, CutRel) {
    let mut seqs: Vec<Vec<Formula>> = (0..k)
        .map(|_| (0..rng.gen_range(0..2)).map(|_| gen_formula(rng, 1)).collect())
        .collect();
    let mut rel = CutRel::new();
    for i in 2..=k {
        let j = rng.gen_range(1..i);
        let a = format!("c{i}");
        seqs[i - 1].push(Formula::Atom(a.clone()));
        seqs[j - 1].push(Formula::NegAtom(a));
        rel.add((i, seqs[i - 1].len()), (j, seqs[j - 1].len()));
    }
    (seqs.into_iter().map(Sequent::new).collect(), rel)
}

/// A perturbed multicut shape violating one condition.
pub fn gen_invalid_mcut(rng: &mut StdRng, k: usize) -> (Vec<Sequent>, CutRel) {
    let k = k.max(2);
    let (seqs, rel) = gen_valid_mcut(rng, k);
    let pairs: Vec<_> = rel.iter().cloned().collect();
    match rng.gen_range(0..3u8) {
        0 => {
            // disconnect
            let mut rel2 = CutRel::new();
            for p in pairs.iter().skip(1) {
                rel2.add(p.0, p.1);
            }
            (seqs, rel2)
        }
        1 => {
            // self-loop: breaks duality and acyclicity at once
            let mut rel2 = rel.clone();
            let (a, _) = pairs[0];
            rel2.add(a, a);
            (seqs, rel2)
        }
        _ => {
            // dangling coordinate
            let mut rel2 = rel.clone();
            rel2.add((1, seqs[0].len() + 5), (k, 1));
            (seqs, rel2)
        }
    }
}

/// Build the multicut pre-proof whose premisses are truncation leaves.
pub fn mcut_axiom_tree(seqs: Vec<Sequent>, rel: CutRel) -> Result<PreProof> {
    let children = seqs.iter().map(|s| DTree::axiom(s.clone())).collect();
    DTree::rule(MumallRule::Mcut { premisses: seqs, rel }, children)
}

// ---------------------------------------------------------------------------
// Root step exemplars: for each step kind a small multicut where it fires
// at the root. Premiss subproofs are truncation leaves except where the
// step inspects them.

fn at(s: &str) -> Formula {
    Formula::Atom(s.into())
}

fn nat(s: &str) -> Formula {
    Formula::NegAtom(s.into())
}

fn sq(fs: Vec<Formula>) -> Sequent {
    Sequent::new(fs)
}

fn by_rule(r: MumallRule) -> Result<PreProof> {
    let cs = r.premisses().iter().map(|s| DTree::axiom(s.clone())).collect();
    DTree::rule(r, cs)
}

fn mcut_over(children: Vec<PreProof>, rel: CutRel) -> Result<PreProof> {
    let premisses: Result<Vec<Sequent>> =
        children.iter().map(|c| c.conclusion()).collect();
    DTree::rule(MumallRule::Mcut { premisses: premisses?, rel }, children)
}

fn rel_of(pairs: &[((usize, usize), (usize, usize))]) -> CutRel {
    let mut rel = CutRel::new();
    for (a, b) in pairs {
        rel.add(*a, *b);
    }
    rel
}

pub fn mumall_step_exemplar(kind: &RootStepKind) -> Result<PreProof> {
    let p = at("p");
    let q = at("q");
    let ctx = DTree::axiom(sq(vec![at("r"), at("c1")]));
    match kind {
        RootStepKind::Merge => {
            let cut = by_rule(MumallRule::Cut {
                gamma: sq(vec![nat("c1")]),
                delta: sq(vec![]),
                f: q,
            })?;
            mcut_over(vec![ctx, cut], rel_of(&[((1, 2), (2, 1))]))
        }
        RootStepKind::PremissPerm { .. } => {
            mumall_step_exemplar(&RootStepKind::Merge)
        }
        RootStepKind::Ax => {
            let ax = by_rule(MumallRule::Ax { f: p })?;
            let partner = DTree::axiom(sq(vec![q, at("p")]));
            mcut_over(vec![ax, partner], rel_of(&[((1, 2), (2, 2))]))
        }
        RootStepKind::TensorPar => {
            let tens = by_rule(MumallRule::Tens {
                gamma: sq(vec![]),
                delta: sq(vec![]),
                f: p.clone(),
                g: q.clone(),
            })?;
            let par = by_rule(MumallRule::Par { gamma: sq(vec![]), f: nat("p"), g: nat("q") })?;
            mcut_over(vec![tens, par], rel_of(&[((1, 1), (2, 1))]))
        }
        RootStepKind::WithPlus => {
            let with = by_rule(MumallRule::With {
                gamma: sq(vec![]),
                f: p.clone(),
                g: q.clone(),
            })?;
            let plus = by_rule(MumallRule::Plus {
                gamma: sq(vec![]),
                i: 0,
                f0: nat("p"),
                f1: nat("q"),
            })?;
            mcut_over(vec![with, plus], rel_of(&[((1, 1), (2, 1))]))
        }
        RootStepKind::MuNu => {
            let body = Formula::Tens(Box::new(p.clone()), Box::new(Formula::Var("X".into())));
            let cobody = Formula::Par(Box::new(nat("p")), Box::new(Formula::Var("X".into())));
            let mu = by_rule(MumallRule::Mu { gamma: sq(vec![]), x: "X".into(), f: body })?;
            let nu = by_rule(MumallRule::Nu { gamma: sq(vec![]), x: "X".into(), f: cobody })?;
            mcut_over(vec![mu, nu], rel_of(&[((1, 1), (2, 1))]))
        }
        RootStepKind::BotOne => {
            let bot = by_rule(MumallRule::Bot { gamma: sq(vec![p]) })?;
            let one = by_rule(MumallRule::One)?;
            mcut_over(vec![bot, one], rel_of(&[((1, 2), (2, 1))]))
        }
        RootStepKind::CommPar => {
            let par =
                by_rule(MumallRule::Par { gamma: sq(vec![nat("c1")]), f: p, g: q })?;
            mcut_over(vec![ctx, par], rel_of(&[((1, 2), (2, 1))]))
        }
        RootStepKind::CommTensor => {
            let ctx2 = DTree::axiom(sq(vec![at("s"), at("c2")]));
            let tens = by_rule(MumallRule::Tens {
                gamma: sq(vec![nat("c1")]),
                delta: sq(vec![nat("c2")]),
                f: p,
                g: q,
            })?;
            mcut_over(
                vec![ctx, ctx2, tens],
                rel_of(&[((1, 2), (3, 1)), ((2, 2), (3, 2))]),
            )
        }
        RootStepKind::CommOne => mcut_over(vec![by_rule(MumallRule::One)?], CutRel::new()),
        RootStepKind::CommBot => {
            let bot = by_rule(MumallRule::Bot { gamma: sq(vec![nat("c1")]) })?;
            mcut_over(vec![ctx, bot], rel_of(&[((1, 2), (2, 1))]))
        }
        RootStepKind::CommPlus => {
            let plus = by_rule(MumallRule::Plus {
                gamma: sq(vec![nat("c1")]),
                i: 0,
                f0: p,
                f1: q,
            })?;
            mcut_over(vec![ctx, plus], rel_of(&[((1, 2), (2, 1))]))
        }
        RootStepKind::CommWith => {
            let with =
                by_rule(MumallRule::With { gamma: sq(vec![nat("c1")]), f: p, g: q })?;
            mcut_over(vec![ctx, with], rel_of(&[((1, 2), (2, 1))]))
        }
        RootStepKind::CommFix { nu } => {
            let body = Formula::Tens(Box::new(p.clone()), Box::new(Formula::Var("X".into())));
            let rule = if *nu {
                MumallRule::Nu { gamma: sq(vec![nat("c1")]), x: "X".into(), f: body }
            } else {
                MumallRule::Mu { gamma: sq(vec![nat("c1")]), x: "X".into(), f: body }
            };
            mcut_over(vec![ctx, by_rule(rule)?], rel_of(&[((1, 2), (2, 1))]))
        }
        RootStepKind::CommTop => {
            let top = by_rule(MumallRule::Top { gamma: sq(vec![nat("c1")]) })?;
            mcut_over(vec![ctx, top], rel_of(&[((1, 2), (2, 1))]))
        }
        RootStepKind::CommExch => {
            let exch = by_rule(MumallRule::Exch {
                sigma: vec![2, 1],
                concl: sq(vec![p, nat("c1")]),
            })?;
            mcut_over(vec![ctx, exch], rel_of(&[((1, 2), (2, 2))]))
        }
    }
}

/// A bare cut, for the `wrap` pseudo-step.
pub fn mumall_wrap_exemplar() -> Result<PreProof> {
    by_rule(MumallRule::Cut { gamma: sq(vec![at("p")]), delta: sq(vec![]), f: at("q") })
}

// ---------------------------------------------------------------------------
// Witnesses for the running first-order example.

/// The cyclic witness `g(a) ↠ f^ω` at ordinal `gamma`, phrased with one
/// finite segment (`rule1` under the `g`, at ordinal ω when `gamma` allows
/// it) and a trailing root `rule2` before the `f`-lift over the cycle.
fn example_g_witness(
    sys: &Arc<FoSystem>,
    gamma: &Ordinal,
    segmented: bool,
) -> Result<Witness<FoRule>> {
    let sig = &sys.sig;
    let a = sig.cons("a", vec![])?;
    let g_a = sig.cons("g", vec![a.clone()])?;
    let f_rule = sig.cons_rule("f")?;
    let label = Label::fresh();
    let lift = Hat::Lift { rule: f_rule, children: vec![Witness::back(label)] };
    let body = if segmented {
        let f_g_a = sig.cons("f", vec![g_a.clone()])?;
        let g_f_g_a = sig.cons("g", vec![f_g_a])?;
        let seg = Segment {
            steps: vec![Step::new("rule1", vec![0])],
            ordinal: Ordinal::omega(),
            hat: refl_hat(&g_f_g_a, &Ordinal::omega())?,
        };
        Witness::split(g_a, gamma.clone(), vec![seg], vec![Step::root("rule2")], lift)
    } else {
        Witness::split(
            g_a,
            gamma.clone(),
            vec![],
            vec![Step::new("rule1", vec![0]), Step::root("rule2")],
            lift,
        )
    };
    Witness::rec(label, body)
}

/// The witness `a ↠_{ω·2} f^ω` over the running example, with the inner
/// cycle `g(a) ↠ f^ω` kept as a genuine two-phase split so that compression
/// has work to do.
pub fn example_omega2_witness() -> Result<(Arc<FoSystem>, Witness<FoRule>)> {
    let sys = Arc::new(crate::fo::example_system());
    let omega2 = Ordinal::omega_term(Ordinal::one(), 2);
    let a = sys.sig.cons("a", vec![])?;
    let f_rule = sys.sig.cons_rule("f")?;
    let w_g = example_g_witness(&sys, &omega2, true)?;
    let w = Witness::split(
        a,
        omega2,
        vec![],
        vec![Step::root("rule1")],
        Hat::Lift { rule: f_rule, children: vec![w_g] },
    );
    Ok((sys, w))
}

/// The already-compressed ω-witness for the same reduction.
pub fn example_omega_witness() -> Result<(Arc<FoSystem>, Witness<FoRule>)> {
    let sys = Arc::new(crate::fo::example_system());
    let omega = Ordinal::omega();
    let a = sys.sig.cons("a", vec![])?;
    let f_rule = sys.sig.cons_rule("f")?;
    let w_g = example_g_witness(&sys, &omega, false)?;
    let w = Witness::split(
        a,
        omega,
        vec![],
        vec![Step::root("rule1")],
        Hat::Lift { rule: f_rule, children: vec![w_g] },
    );
    Ok((sys, w))
}

/// The circular ν-proof cut against its axiom: `cut(rec L. nu(L), ax)` at
/// goal `|- nu X. X`.
pub fn nu_cut_example() -> Result<PreProof> {
    let nux = Formula::Nu("X".into(), Box::new(Formula::Var("X".into())));
    let nu_rule = MumallRule::Nu {
        gamma: sq(vec![]),
        x: "X".into(),
        f: Formula::Var("X".into()),
    };
    let label = Label::fresh();
    let pi = DTree::rec(label, DTree::rule(nu_rule, vec![DTree::back(label)])?)?;
    let ax = by_rule(MumallRule::Ax { f: nux.clone() })?;
    let cut =
        MumallRule::Cut { gamma: sq(vec![]), delta: sq(vec![nux.clone()]), f: nux };
    DTree::rule(cut, vec![pi, ax])
}
