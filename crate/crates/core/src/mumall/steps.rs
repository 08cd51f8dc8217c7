//! Cut-elimination root steps on multicuts: the two multicut-handling
//! steps (merge, premiss permutation), the principal steps, and the
//! commutative steps, each with its coordinate reindexing. Also the zero
//! step oracle and a best-effort bottom-up elimination driver.

use crate::error::{Error, Result};
use crate::rewrite::{apply_step, Step, ZeroStepOracle};
use crate::tree::{truncate, DTree, FiniteTree, RuleFamily, TreeRepr};

use super::formula::{neg, Sequent};
use super::rules::{
    mcut_conclusion, partition_tensor_premisses, reindex_cutrel, CutRel, IndexMap,
    MumallRule, PreProof,
};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum RootStepKind {
    Merge,
    PremissPerm { tau: Vec<usize> },
    Ax,
    TensorPar,
    WithPlus,
    MuNu,
    BotOne,
    CommPar,
    CommTensor,
    CommOne,
    CommBot,
    CommPlus,
    CommWith,
    CommFix { nu: bool },
    CommTop,
    CommExch,
}

impl RootStepKind {
    pub fn name(&self) -> String {
        match self {
            RootStepKind::Merge => "merge".into(),
            RootStepKind::PremissPerm { tau } => {
                let parts: Vec<String> = tau.iter().map(|i| i.to_string()).collect();
                format!("perm:{}", parts.join(","))
            }
            RootStepKind::Ax => "ax".into(),
            RootStepKind::TensorPar => "tensor-par".into(),
            RootStepKind::WithPlus => "with-plus".into(),
            RootStepKind::MuNu => "mu-nu".into(),
            RootStepKind::BotOne => "bot-one".into(),
            RootStepKind::CommPar => "comm-par".into(),
            RootStepKind::CommTensor => "comm-tens".into(),
            RootStepKind::CommOne => "comm-one".into(),
            RootStepKind::CommBot => "comm-bot".into(),
            RootStepKind::CommPlus => "comm-plus".into(),
            RootStepKind::CommWith => "comm-with".into(),
            RootStepKind::CommFix { nu: false } => "comm-mu".into(),
            RootStepKind::CommFix { nu: true } => "comm-nu".into(),
            RootStepKind::CommTop => "comm-top".into(),
            RootStepKind::CommExch => "comm-exch".into(),
        }
    }

    pub fn parse(name: &str) -> Result<RootStepKind> {
        if let Some(rest) = name.strip_prefix("perm:") {
            let tau: Result<Vec<usize>> = rest
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::StepNotApplicable(name.to_string()))
                })
                .collect();
            return Ok(RootStepKind::PremissPerm { tau: tau? });
        }
        Ok(match name {
            "merge" => RootStepKind::Merge,
            "ax" => RootStepKind::Ax,
            "tensor-par" => RootStepKind::TensorPar,
            "with-plus" => RootStepKind::WithPlus,
            "mu-nu" => RootStepKind::MuNu,
            "bot-one" => RootStepKind::BotOne,
            "comm-par" => RootStepKind::CommPar,
            "comm-tens" => RootStepKind::CommTensor,
            "comm-one" => RootStepKind::CommOne,
            "comm-bot" => RootStepKind::CommBot,
            "comm-plus" => RootStepKind::CommPlus,
            "comm-with" => RootStepKind::CommWith,
            "comm-mu" => RootStepKind::CommFix { nu: false },
            "comm-nu" => RootStepKind::CommFix { nu: true },
            "comm-top" => RootStepKind::CommTop,
            "comm-exch" => RootStepKind::CommExch,
            _ => return Err(Error::StepNotApplicable(name.to_string())),
        })
    }

    /// Driver preference: housekeeping merges first, then principal steps,
    /// then commutations.
    pub fn priority(&self) -> u8 {
        match self {
            RootStepKind::Merge => 0,
            RootStepKind::Ax
            | RootStepKind::TensorPar
            | RootStepKind::WithPlus
            | RootStepKind::MuNu
            | RootStepKind::BotOne => 1,
            RootStepKind::PremissPerm { .. } => 3,
            _ => 2,
        }
    }
}

pub(crate) fn root_of(t: &PreProof) -> Result<Option<(MumallRule, Vec<PreProof>)>> {
    let r = t.resolve()?;
    match r.view() {
        TreeRepr::Rule(rule, cs) => Ok(Some((rule.clone(), cs.clone()))),
        TreeRepr::Axiom(_) => Ok(None),
        _ => Err(Error::Internal("unresolved proof node".into())),
    }
}

struct McutView {
    premisses: Vec<Sequent>,
    rel: CutRel,
    children: Vec<PreProof>,
}

fn mcut_view(p: &PreProof) -> Result<McutView> {
    match root_of(p)? {
        Some((MumallRule::Mcut { premisses, rel }, children)) => {
            Ok(McutView { premisses, rel, children })
        }
        _ => Err(Error::NotApplicable("root is not a multicut".into())),
    }
}

fn mk_mcut(
    premisses: Vec<Sequent>,
    rel: CutRel,
    children: Vec<PreProof>,
) -> Result<PreProof> {
    DTree::rule(MumallRule::Mcut { premisses, rel }, children)
        .map_err(|e| Error::Internal(format!("root step broke the multicut: {e}")))
}

fn mk_rule(rule: MumallRule, children: Vec<PreProof>) -> Result<PreProof> {
    DTree::rule(rule, children)
        .map_err(|e| Error::Internal(format!("root step produced an invalid rule: {e}")))
}

fn id_block(pi: &mut IndexMap, upto: usize, ns: &[Sequent]) {
    for i in 1..=upto {
        for j in 1..=ns[i - 1].len() {
            pi.insert((i, j), (i, j));
        }
    }
}

/// Wrap `inner` in the exchange that restores `old` as the conclusion, or
/// return it unchanged when no reordering happened.
fn exchange_to(old: &Sequent, inner: PreProof) -> Result<PreProof> {
    let got = inner.conclusion()?;
    if got == *old {
        return Ok(inner);
    }
    let mut used = vec![false; old.len()];
    let mut sigma = Vec::with_capacity(old.len());
    for f in &got.0 {
        let Some(j) = old
            .0
            .iter()
            .enumerate()
            .position(|(j, g)| !used[j] && g == f)
        else {
            return Err(Error::Internal(
                "step result is not a permutation of the conclusion".into(),
            ));
        };
        used[j] = true;
        sigma.push(j + 1);
    }
    mk_rule(MumallRule::Exch { sigma, concl: old.clone() }, vec![inner])
}

/// Uncut formula count of premiss `i` (1-based).
fn uncut_count(premisses: &[Sequent], rel: &CutRel, i: usize) -> usize {
    (1..=premisses[i - 1].len())
        .filter(|&j| !rel.in_support((i, j)))
        .count()
}

/// All positional root step shapes matching at an mcut root, in driver
/// preference order. Premiss permutations (an infinite family) are not
/// enumerated.
pub fn applicable_root_steps(p: &PreProof) -> Result<Vec<RootStepKind>> {
    let v = mcut_view(p)?;
    let m = v.premisses.len();
    let mut roots = Vec::with_capacity(m);
    for c in &v.children {
        roots.push(root_of(c)?.map(|(r, _)| r));
    }
    let mut out = Vec::new();
    let n_of = |i: usize| v.premisses[i - 1].len();
    if m >= 1 {
        if let Some(MumallRule::Cut { .. }) = roots[m - 1] {
            out.push(RootStepKind::Merge);
        }
    }
    if m >= 2 {
        let last_pair = |a_extra: usize, b_extra: usize| {
            v.rel.contains((m - 1, n_of(m - 1) - a_extra), (m, n_of(m) - b_extra))
        };
        match (&roots[m - 2], &roots[m - 1]) {
            (Some(MumallRule::Ax { f }), _) => {
                let zm = &v.premisses[m - 1];
                if zm.last() == Some(f) && v.rel.contains((m - 1, 2), (m, zm.len())) {
                    out.push(RootStepKind::Ax);
                }
            }
            _ => {}
        }
        match (&roots[m - 2], &roots[m - 1]) {
            (
                Some(MumallRule::Tens { f, g, .. }),
                Some(MumallRule::Par { f: nf, g: ng, .. }),
            ) => {
                if *nf == neg(f) && *ng == neg(g) && last_pair(0, 0) {
                    out.push(RootStepKind::TensorPar);
                }
            }
            (
                Some(MumallRule::With { f, g, .. }),
                Some(MumallRule::Plus { f0, f1, .. }),
            ) => {
                if *f0 == neg(f) && *f1 == neg(g) && last_pair(0, 0) {
                    out.push(RootStepKind::WithPlus);
                }
            }
            (Some(MumallRule::Mu { x, f, .. }), Some(MumallRule::Nu { x: y, f: nf, .. })) => {
                if y == x && *nf == neg(f) && last_pair(0, 0) {
                    out.push(RootStepKind::MuNu);
                }
            }
            (Some(MumallRule::Bot { .. }), Some(MumallRule::One)) => {
                if last_pair(0, 0) {
                    out.push(RootStepKind::BotOne);
                }
            }
            _ => {}
        }
    }
    if m >= 1 {
        let uncut_last = !v.rel.in_support((m, n_of(m)));
        match &roots[m - 1] {
            Some(MumallRule::Par { .. }) if uncut_last => out.push(RootStepKind::CommPar),
            Some(MumallRule::Bot { .. }) if uncut_last => out.push(RootStepKind::CommBot),
            Some(MumallRule::Plus { .. }) if uncut_last => out.push(RootStepKind::CommPlus),
            Some(MumallRule::With { .. }) if uncut_last => out.push(RootStepKind::CommWith),
            Some(MumallRule::Mu { .. }) if uncut_last => {
                out.push(RootStepKind::CommFix { nu: false })
            }
            Some(MumallRule::Nu { .. }) if uncut_last => {
                out.push(RootStepKind::CommFix { nu: true })
            }
            Some(MumallRule::Top { .. }) if uncut_last => out.push(RootStepKind::CommTop),
            Some(MumallRule::Exch { .. }) => out.push(RootStepKind::CommExch),
            Some(MumallRule::One) if m == 1 && v.rel.is_empty() => {
                out.push(RootStepKind::CommOne)
            }
            Some(MumallRule::Tens { gamma, .. }) if uncut_last => {
                if let Ok((gs, ds)) =
                    partition_tensor_premisses(&v.rel, m, m, gamma.len())
                {
                    let k = gs.len();
                    let sorted = gs.iter().copied().eq(1..=k)
                        && ds.iter().copied().eq(k + 1..m);
                    if sorted {
                        out.push(RootStepKind::CommTensor);
                    }
                }
            }
            _ => {}
        }
    }
    out.sort_by_key(|k| k.priority());
    Ok(out)
}

/// Apply one root step at the root of `p`. The resulting root conclusion
/// is checked to equal the old one (after the emitted exchange where the
/// clause emits one).
pub fn apply_root_step(kind: &RootStepKind, p: &PreProof) -> Result<PreProof> {
    let v = mcut_view(p)?;
    let old_concl = mcut_conclusion(&v.premisses, &v.rel);
    let out = apply_inner(kind, &v)?;
    let new_concl = out.conclusion()?;
    if new_concl != old_concl {
        return Err(Error::Internal(format!(
            "root step changed the conclusion: {old_concl} vs {new_concl}"
        )));
    }
    Ok(out)
}

fn apply_inner(kind: &RootStepKind, v: &McutView) -> Result<PreProof> {
    let m = v.premisses.len();
    let n_of = |i: usize| v.premisses[i - 1].len();
    let not_app = |msg: &str| Error::NotApplicable(msg.to_string());
    match kind {
        RootStepKind::Merge => {
            let Some((MumallRule::Cut { gamma, delta, f }, cut_children)) =
                root_of(&v.children[m - 1])?
            else {
                return Err(not_app("last premiss is not a cut"));
            };
            let mut premisses = v.premisses[..m - 1].to_vec();
            premisses.push(gamma.clone().with(f.clone()));
            premisses.push(delta.clone().with(neg(&f)));
            let mut pi = IndexMap::new();
            id_block(&mut pi, m - 1, &v.premisses);
            for j in 1..=gamma.len() {
                pi.insert((m, j), (m, j));
            }
            for j in 1..=delta.len() {
                pi.insert((m + 1, j), (m, gamma.len() + j));
            }
            let mut rel = reindex_cutrel(&pi, &v.rel);
            rel.add((m, gamma.len() + 1), (m + 1, delta.len() + 1));
            let mut children = v.children[..m - 1].to_vec();
            children.extend(cut_children);
            mk_mcut(premisses, rel, children)
        }
        RootStepKind::PremissPerm { tau } => {
            if tau.len() != m {
                return Err(not_app("permutation length mismatch"));
            }
            let mut inv = vec![0usize; m + 1];
            let mut seen = vec![false; m + 1];
            for (p0, &i) in tau.iter().enumerate() {
                if i < 1 || i > m || seen[i] {
                    return Err(not_app("not a premiss permutation"));
                }
                seen[i] = true;
                inv[i] = p0 + 1;
            }
            let premisses: Vec<Sequent> =
                tau.iter().map(|&i| v.premisses[i - 1].clone()).collect();
            let children: Vec<PreProof> =
                tau.iter().map(|&i| v.children[i - 1].clone()).collect();
            let mut rel = CutRel::new();
            for ((i, j), (i2, j2)) in v.rel.iter() {
                rel.add((inv[*i], *j), (inv[*i2], *j2));
            }
            let inner = mk_mcut(premisses, rel, children)?;
            // σ permutes the conclusion blocks along τ, order inside each
            // block untouched.
            let mut offsets = vec![0usize; m + 1];
            let mut total = 0usize;
            for i in 1..=m {
                offsets[i] = total;
                total += uncut_count(&v.premisses, &v.rel, i);
            }
            let mut sigma = Vec::with_capacity(total);
            for &i in tau {
                let u = uncut_count(&v.premisses, &v.rel, i);
                for t in 0..u {
                    sigma.push(offsets[i] + t + 1);
                }
            }
            let concl = mcut_conclusion(&v.premisses, &v.rel);
            mk_rule(MumallRule::Exch { sigma, concl }, vec![inner])
        }
        RootStepKind::Ax => {
            if m < 2 {
                return Err(not_app("ax step needs two premisses"));
            }
            let Some((MumallRule::Ax { f }, _)) = root_of(&v.children[m - 2])? else {
                return Err(not_app("second-to-last premiss is not an axiom"));
            };
            let zm = &v.premisses[m - 1];
            if zm.last() != Some(&f) || !v.rel.contains((m - 1, 2), (m, zm.len())) {
                return Err(not_app("axiom is not cut against the partner's last formula"));
            }
            let gamma_len = zm.len() - 1;
            let mut premisses = v.premisses[..m - 2].to_vec();
            premisses.push(zm.clone());
            let mut pi = IndexMap::new();
            id_block(&mut pi, m - 2, &v.premisses);
            for j in 1..=gamma_len {
                pi.insert((m - 1, j), (m, j));
            }
            pi.insert((m - 1, gamma_len + 1), (m - 1, 1));
            let rel = reindex_cutrel(&pi, &v.rel);
            let mut children = v.children[..m - 2].to_vec();
            children.push(v.children[m - 1].clone());
            // the surviving formula moves from the axiom's block to the
            // partner's last position, so an exchange restores the order
            let old = mcut_conclusion(&v.premisses, &v.rel);
            exchange_to(&old, mk_mcut(premisses, rel, children)?)
        }
        RootStepKind::TensorPar => {
            if m < 2 {
                return Err(not_app("tensor/par step needs two premisses"));
            }
            let Some((MumallRule::Tens { gamma, delta, f, g }, tens_children)) =
                root_of(&v.children[m - 2])?
            else {
                return Err(not_app("no tensor premiss"));
            };
            let Some((MumallRule::Par { gamma: eps, f: nf, g: ng }, par_children)) =
                root_of(&v.children[m - 1])?
            else {
                return Err(not_app("no par premiss"));
            };
            if nf != neg(&f)
                || ng != neg(&g)
                || !v.rel.contains((m - 1, n_of(m - 1)), (m, n_of(m)))
            {
                return Err(not_app("tensor is not cut against the dual par"));
            }
            let k = m - 2;
            let mut premisses = v.premisses[..k].to_vec();
            premisses.push(gamma.clone().with(f.clone()));
            premisses.push(delta.clone().with(g.clone()));
            premisses.push(eps.clone().with(nf.clone()).with(ng.clone()));
            let mut pi = IndexMap::new();
            id_block(&mut pi, k, &v.premisses);
            for j in 1..=gamma.len() {
                pi.insert((k + 1, j), (m - 1, j));
            }
            for j in 1..=delta.len() {
                pi.insert((k + 2, j), (m - 1, gamma.len() + j));
            }
            for j in 1..=eps.len() {
                pi.insert((k + 3, j), (m, j));
            }
            let mut rel = reindex_cutrel(&pi, &v.rel);
            rel.add((k + 1, gamma.len() + 1), (k + 3, eps.len() + 1));
            rel.add((k + 2, delta.len() + 1), (k + 3, eps.len() + 2));
            let mut children = v.children[..k].to_vec();
            children.extend(tens_children);
            children.extend(par_children);
            mk_mcut(premisses, rel, children)
        }
        RootStepKind::WithPlus => {
            if m < 2 {
                return Err(not_app("with/plus step needs two premisses"));
            }
            let Some((MumallRule::With { gamma, f, g }, with_children)) =
                root_of(&v.children[m - 2])?
            else {
                return Err(not_app("no with premiss"));
            };
            let Some((MumallRule::Plus { gamma: delta, i, f0, f1 }, plus_children)) =
                root_of(&v.children[m - 1])?
            else {
                return Err(not_app("no plus premiss"));
            };
            if f0 != neg(&f)
                || f1 != neg(&g)
                || !v.rel.contains((m - 1, n_of(m - 1)), (m, n_of(m)))
            {
                return Err(not_app("with is not cut against the dual plus"));
            }
            let fi = if i == 0 { f.clone() } else { g.clone() };
            let mut premisses = v.premisses[..m - 2].to_vec();
            premisses.push(gamma.clone().with(fi.clone()));
            premisses.push(delta.clone().with(neg(&fi)));
            let mut children = v.children[..m - 2].to_vec();
            children.push(with_children[i].clone());
            children.extend(plus_children);
            mk_mcut(premisses, v.rel.clone(), children)
        }
        RootStepKind::MuNu => {
            if m < 2 {
                return Err(not_app("mu/nu step needs two premisses"));
            }
            let Some((mu @ MumallRule::Mu { .. }, mu_children)) =
                root_of(&v.children[m - 2])?
            else {
                return Err(not_app("no mu premiss"));
            };
            let Some((nu @ MumallRule::Nu { .. }, nu_children)) =
                root_of(&v.children[m - 1])?
            else {
                return Err(not_app("no nu premiss"));
            };
            let (MumallRule::Mu { x, f, .. }, MumallRule::Nu { x: y, f: nf, .. }) =
                (&mu, &nu)
            else {
                unreachable!()
            };
            if y != x || *nf != neg(f) || !v.rel.contains((m - 1, n_of(m - 1)), (m, n_of(m)))
            {
                return Err(not_app("mu is not cut against the dual nu"));
            }
            let mut premisses = v.premisses[..m - 2].to_vec();
            premisses.push(mu.premisses().remove(0));
            premisses.push(nu.premisses().remove(0));
            let mut children = v.children[..m - 2].to_vec();
            children.extend(mu_children);
            children.extend(nu_children);
            mk_mcut(premisses, v.rel.clone(), children)
        }
        RootStepKind::BotOne => {
            if m < 2 {
                return Err(not_app("bot/one step needs two premisses"));
            }
            let Some((MumallRule::Bot { gamma }, bot_children)) =
                root_of(&v.children[m - 2])?
            else {
                return Err(not_app("no bot premiss"));
            };
            let Some((MumallRule::One, _)) = root_of(&v.children[m - 1])? else {
                return Err(not_app("no one premiss"));
            };
            if !v.rel.contains((m - 1, gamma.len() + 1), (m, 1)) {
                return Err(not_app("bot is not cut against the one"));
            }
            let mut premisses = v.premisses[..m - 2].to_vec();
            premisses.push(gamma.clone());
            let mut pi = IndexMap::new();
            id_block(&mut pi, m - 2, &v.premisses);
            for j in 1..=gamma.len() {
                pi.insert((m - 1, j), (m - 1, j));
            }
            let rel = reindex_cutrel(&pi, &v.rel);
            let mut children = v.children[..m - 2].to_vec();
            children.extend(bot_children);
            mk_mcut(premisses, rel, children)
        }
        RootStepKind::CommPar => {
            let Some((MumallRule::Par { gamma, f, g }, par_children)) =
                root_of(&v.children[m - 1])?
            else {
                return Err(not_app("last premiss is not a par"));
            };
            if v.rel.in_support((m, n_of(m))) {
                return Err(not_app("par formula is cut"));
            }
            let mut premisses = v.premisses[..m - 1].to_vec();
            premisses.push(gamma.clone().with(f.clone()).with(g.clone()));
            let mut children = v.children[..m - 1].to_vec();
            children.extend(par_children);
            let inner_concl = mcut_conclusion(&premisses, &v.rel);
            let inner = mk_mcut(premisses, v.rel.clone(), children)?;
            mk_rule(
                MumallRule::Par { gamma: inner_concl.drop_last(2), f, g },
                vec![inner],
            )
        }
        RootStepKind::CommTensor => {
            let Some((MumallRule::Tens { gamma, delta, f, g }, tens_children)) =
                root_of(&v.children[m - 1])?
            else {
                return Err(not_app("last premiss is not a tensor"));
            };
            if v.rel.in_support((m, n_of(m))) {
                return Err(not_app("tensor formula is cut"));
            }
            let (gs, ds) = partition_tensor_premisses(&v.rel, m, m, gamma.len())?;
            let k = gs.len();
            let l = ds.len();
            if !(gs.iter().copied().eq(1..=k) && ds.iter().copied().eq(k + 1..m)) {
                return Err(not_app("context premisses are not sorted by tensor side"));
            }
            let mut lp = v.premisses[..k].to_vec();
            lp.push(gamma.clone().with(f.clone()));
            let mut pi_l = IndexMap::new();
            id_block(&mut pi_l, k, &v.premisses);
            for j in 1..=gamma.len() {
                pi_l.insert((k + 1, j), (m, j));
            }
            let rel_l = reindex_cutrel(&pi_l, &v.rel);
            let mut lc = v.children[..k].to_vec();
            lc.push(tens_children[0].clone());
            let left_concl = mcut_conclusion(&lp, &rel_l);
            let left = mk_mcut(lp, rel_l, lc)?;
            let mut rp = v.premisses[k..m - 1].to_vec();
            rp.push(delta.clone().with(g.clone()));
            let mut pi_r = IndexMap::new();
            for (i2, prem) in v.premisses[k..m - 1].iter().enumerate() {
                for j in 1..=prem.len() {
                    pi_r.insert((i2 + 1, j), (k + i2 + 1, j));
                }
            }
            for j in 1..=delta.len() {
                pi_r.insert((l + 1, j), (m, gamma.len() + j));
            }
            let rel_r = reindex_cutrel(&pi_r, &v.rel);
            let mut rc = v.children[k..m - 1].to_vec();
            rc.push(tens_children[1].clone());
            let right_concl = mcut_conclusion(&rp, &rel_r);
            let right = mk_mcut(rp, rel_r, rc)?;
            let tens = mk_rule(
                MumallRule::Tens {
                    gamma: left_concl.drop_last(1),
                    delta: right_concl.drop_last(1),
                    f,
                    g,
                },
                vec![left, right],
            )?;
            // Block lengths of the old conclusion [ZΓ][ZΔ][CΓ][CΔ][F⊗G];
            // the tensor conclusion reads [ZΓ][CΓ][ZΔ][CΔ][F⊗G].
            let zg: usize = (1..=k).map(|i| uncut_count(&v.premisses, &v.rel, i)).sum();
            let zd: usize =
                (k + 1..m).map(|i| uncut_count(&v.premisses, &v.rel, i)).sum();
            let cg = (1..=gamma.len()).filter(|&j| !v.rel.in_support((m, j))).count();
            let cd = (gamma.len() + 1..n_of(m))
                .filter(|&j| !v.rel.in_support((m, j)))
                .count();
            let total = zg + zd + cg + cd + 1;
            let mut sigma = Vec::with_capacity(total);
            for p0 in 1..=total {
                let s = if p0 <= zg {
                    p0
                } else if p0 <= zg + cg {
                    zg + zd + (p0 - zg)
                } else if p0 <= zg + cg + zd {
                    zg + (p0 - zg - cg)
                } else {
                    p0
                };
                sigma.push(s);
            }
            let concl = mcut_conclusion(&v.premisses, &v.rel);
            mk_rule(MumallRule::Exch { sigma, concl }, vec![tens])
        }
        RootStepKind::CommOne => {
            if m != 1 || !v.rel.is_empty() {
                return Err(not_app("one/mcut needs the unary empty-relation shape"));
            }
            let Some((MumallRule::One, _)) = root_of(&v.children[0])? else {
                return Err(not_app("premiss is not the one rule"));
            };
            Ok(v.children[0].clone())
        }
        RootStepKind::CommBot => {
            let Some((MumallRule::Bot { gamma }, bot_children)) =
                root_of(&v.children[m - 1])?
            else {
                return Err(not_app("last premiss is not a bot"));
            };
            if v.rel.in_support((m, n_of(m))) {
                return Err(not_app("bot formula is cut"));
            }
            let mut premisses = v.premisses[..m - 1].to_vec();
            premisses.push(gamma.clone());
            let mut children = v.children[..m - 1].to_vec();
            children.extend(bot_children);
            let inner_concl = mcut_conclusion(&premisses, &v.rel);
            let inner = mk_mcut(premisses, v.rel.clone(), children)?;
            mk_rule(MumallRule::Bot { gamma: inner_concl }, vec![inner])
        }
        RootStepKind::CommPlus => {
            let Some((MumallRule::Plus { gamma, i, f0, f1 }, plus_children)) =
                root_of(&v.children[m - 1])?
            else {
                return Err(not_app("last premiss is not a plus"));
            };
            if v.rel.in_support((m, n_of(m))) {
                return Err(not_app("plus formula is cut"));
            }
            let fi = if i == 0 { f0.clone() } else { f1.clone() };
            let mut premisses = v.premisses[..m - 1].to_vec();
            premisses.push(gamma.clone().with(fi));
            let mut children = v.children[..m - 1].to_vec();
            children.extend(plus_children);
            let inner_concl = mcut_conclusion(&premisses, &v.rel);
            let inner = mk_mcut(premisses, v.rel.clone(), children)?;
            mk_rule(
                MumallRule::Plus { gamma: inner_concl.drop_last(1), i, f0, f1 },
                vec![inner],
            )
        }
        RootStepKind::CommWith => {
            let Some((MumallRule::With { gamma, f, g }, with_children)) =
                root_of(&v.children[m - 1])?
            else {
                return Err(not_app("last premiss is not a with"));
            };
            if v.rel.in_support((m, n_of(m))) {
                return Err(not_app("with formula is cut"));
            }
            let mut pf = v.premisses[..m - 1].to_vec();
            pf.push(gamma.clone().with(f.clone()));
            let mut cf = v.children[..m - 1].to_vec();
            cf.push(with_children[0].clone());
            let inner_concl = mcut_conclusion(&pf, &v.rel);
            let inner_f = mk_mcut(pf, v.rel.clone(), cf)?;
            let mut pg = v.premisses[..m - 1].to_vec();
            pg.push(gamma.clone().with(g.clone()));
            let mut cg2 = v.children[..m - 1].to_vec();
            cg2.push(with_children[1].clone());
            let inner_g = mk_mcut(pg, v.rel.clone(), cg2)?;
            mk_rule(
                MumallRule::With { gamma: inner_concl.drop_last(1), f, g },
                vec![inner_f, inner_g],
            )
        }
        RootStepKind::CommFix { nu } => {
            let root = root_of(&v.children[m - 1])?;
            let (rule, fix_children) = match (nu, root) {
                (false, Some((r @ MumallRule::Mu { .. }, cs))) => (r, cs),
                (true, Some((r @ MumallRule::Nu { .. }, cs))) => (r, cs),
                _ => return Err(not_app("last premiss is not the requested fixed point")),
            };
            if v.rel.in_support((m, n_of(m))) {
                return Err(not_app("fixed-point formula is cut"));
            }
            let unfolded = rule.premisses().remove(0);
            let mut premisses = v.premisses[..m - 1].to_vec();
            premisses.push(unfolded);
            let mut children = v.children[..m - 1].to_vec();
            children.extend(fix_children);
            let inner_concl = mcut_conclusion(&premisses, &v.rel);
            let inner = mk_mcut(premisses, v.rel.clone(), children)?;
            let outer = match rule {
                MumallRule::Mu { x, f, .. } => {
                    MumallRule::Mu { gamma: inner_concl.drop_last(1), x, f }
                }
                MumallRule::Nu { x, f, .. } => {
                    MumallRule::Nu { gamma: inner_concl.drop_last(1), x, f }
                }
                _ => unreachable!(),
            };
            mk_rule(outer, vec![inner])
        }
        RootStepKind::CommTop => {
            let Some((MumallRule::Top { .. }, _)) = root_of(&v.children[m - 1])? else {
                return Err(not_app("last premiss is not a top"));
            };
            if v.rel.in_support((m, n_of(m))) {
                return Err(not_app("top formula is cut"));
            }
            let concl = mcut_conclusion(&v.premisses, &v.rel);
            mk_rule(MumallRule::Top { gamma: concl.drop_last(1) }, Vec::new())
        }
        RootStepKind::CommExch => {
            let Some((exch @ MumallRule::Exch { .. }, exch_children)) =
                root_of(&v.children[m - 1])?
            else {
                return Err(not_app("last premiss is not an exchange"));
            };
            let MumallRule::Exch { sigma, concl } = &exch else { unreachable!() };
            let n = concl.len();
            let mut pi = IndexMap::new();
            id_block(&mut pi, m - 1, &v.premisses);
            for j in 1..=n {
                pi.insert((m, j), (m, sigma[j - 1]));
            }
            let rel = reindex_cutrel(&pi, &v.rel);
            let mut premisses = v.premisses[..m - 1].to_vec();
            premisses.push(exch.premisses().remove(0));
            let mut children = v.children[..m - 1].to_vec();
            children.extend(exch_children);
            let inner = mk_mcut(premisses, rel.clone(), children)?;
            // σ′ fixes the context part and matches the re-sorted extras.
            let base: usize =
                (1..m).map(|i| uncut_count(&v.premisses, &v.rel, i)).sum();
            let olds: Vec<usize> =
                (1..=n).filter(|&i| !v.rel.in_support((m, i))).collect();
            let news: Vec<usize> =
                (1..=n).filter(|&j| !v.rel.in_support((m, sigma[j - 1]))).collect();
            let mut sigma2: Vec<usize> = (1..=base).collect();
            for &j in &news {
                let target = sigma[j - 1];
                let q = olds
                    .iter()
                    .position(|&i| i == target)
                    .ok_or_else(|| Error::Internal("exchange reindex mismatch".into()))?;
                sigma2.push(base + q + 1);
            }
            let old_concl = mcut_conclusion(&v.premisses, &v.rel);
            mk_rule(MumallRule::Exch { sigma: sigma2, concl: old_concl }, vec![inner])
        }
    }
}

/// Absorb a bare cut into a fresh unary multicut so the merge step can
/// pick it up. Driver plumbing, exposed as the oracle step `wrap`.
pub fn wrap_cut(p: &PreProof) -> Result<PreProof> {
    let Some((MumallRule::Cut { .. }, _)) = root_of(p)? else {
        return Err(Error::NotApplicable("root is not a cut".into()));
    };
    let concl = p.conclusion()?;
    mk_mcut(vec![concl], CutRel::new(), vec![p.clone()])
}

pub struct MumallOracle;

impl ZeroStepOracle<MumallRule> for MumallOracle {
    fn enumerate(&self, t: &PreProof) -> Result<Vec<(String, PreProof)>> {
        match root_of(t)? {
            Some((MumallRule::Cut { .. }, _)) => Ok(vec![("wrap".into(), wrap_cut(t)?)]),
            Some((MumallRule::Mcut { .. }, _)) => applicable_root_steps(t)?
                .into_iter()
                .map(|k| Ok((k.name(), apply_root_step(&k, t)?)))
                .collect(),
            _ => Ok(Vec::new()),
        }
    }

    fn apply(&self, name: &str, t: &PreProof) -> Result<PreProof> {
        if name == "wrap" {
            wrap_cut(t)
        } else {
            apply_root_step(&RootStepKind::parse(name)?, t)
        }
    }

    fn conclusion_preserving(&self) -> bool {
        true
    }
}

// ---------------------------------------------------------------------------
// Elimination driver.

/// Find a premiss permutation that brings a matching step shape into
/// position, or `None`.
pub fn enabling_perm(p: &PreProof) -> Result<Option<Vec<usize>>> {
    let v = mcut_view(p)?;
    let m = v.premisses.len();
    let mut roots = Vec::with_capacity(m);
    for c in &v.children {
        roots.push(root_of(c)?.map(|(r, _)| r));
    }
    let n_of = |i: usize| v.premisses[i - 1].len();
    let move_last = |c: usize| -> Vec<usize> {
        (1..=m).filter(|&i| i != c).chain([c]).collect()
    };
    let move_last2 = |a: usize, b: usize| -> Vec<usize> {
        (1..=m).filter(|&i| i != a && i != b).chain([a, b]).collect()
    };
    let already = |tau: &[usize]| tau.iter().copied().eq(1..=m);
    // Merges first.
    for c in 1..=m {
        if matches!(roots[c - 1], Some(MumallRule::Cut { .. })) {
            let tau = move_last(c);
            if !already(&tau) {
                return Ok(Some(tau));
            }
        }
    }
    // Principal pairs.
    for a in 1..=m {
        if let Some(MumallRule::Ax { .. }) = &roots[a - 1] {
            let ps = v.rel.partners((a, 2));
            if let [(i, j)] = ps[..] {
                if i != a && j == n_of(i) {
                    let tau = move_last2(a, i);
                    if !already(&tau) {
                        return Ok(Some(tau));
                    }
                }
            }
        }
    }
    for t in 1..=m {
        for q in 1..=m {
            if t == q {
                continue;
            }
            let pair = v.rel.contains((t, n_of(t)), (q, n_of(q)));
            let matched = match (&roots[t - 1], &roots[q - 1]) {
                (
                    Some(MumallRule::Tens { f, g, .. }),
                    Some(MumallRule::Par { f: nf, g: ng, .. }),
                ) => pair && *nf == neg(f) && *ng == neg(g),
                (
                    Some(MumallRule::With { f, g, .. }),
                    Some(MumallRule::Plus { f0, f1, .. }),
                ) => pair && *f0 == neg(f) && *f1 == neg(g),
                (
                    Some(MumallRule::Mu { x, f, .. }),
                    Some(MumallRule::Nu { x: y, f: nf, .. }),
                ) => pair && y == x && *nf == neg(f),
                (Some(MumallRule::Bot { gamma }), Some(MumallRule::One)) => {
                    v.rel.contains((t, gamma.len() + 1), (q, 1))
                }
                _ => false,
            };
            if matched {
                let tau = move_last2(t, q);
                if !already(&tau) {
                    return Ok(Some(tau));
                }
            }
        }
    }
    // Commutations.
    for c in 1..=m {
        let uncut = !v.rel.in_support((c, n_of(c)));
        let movable = match &roots[c - 1] {
            Some(MumallRule::Par { .. })
            | Some(MumallRule::Bot { .. })
            | Some(MumallRule::Plus { .. })
            | Some(MumallRule::With { .. })
            | Some(MumallRule::Mu { .. })
            | Some(MumallRule::Nu { .. })
            | Some(MumallRule::Top { .. }) => uncut,
            Some(MumallRule::Exch { .. }) => true,
            _ => false,
        };
        if movable {
            let tau = move_last(c);
            if !already(&tau) {
                return Ok(Some(tau));
            }
        }
        if let Some(MumallRule::Tens { gamma, .. }) = &roots[c - 1] {
            if uncut {
                if let Ok((gs, ds)) = partition_tensor_premisses(&v.rel, m, c, gamma.len())
                {
                    let tau: Vec<usize> = gs.into_iter().chain(ds).chain([c]).collect();
                    if !already(&tau) {
                        return Ok(Some(tau));
                    }
                }
            }
        }
    }
    Ok(None)
}

#[derive(Debug)]
pub struct StuckReport {
    pub steps: Vec<Step>,
    pub truncation: FiniteTree<MumallRule>,
    pub reason: String,
}

fn subtree_at(t: &PreProof, path: &[usize]) -> Result<PreProof> {
    let mut cur = t.resolve()?;
    for &i in path {
        let (_, cs) = cur.unfold()?;
        cur = cs
            .get(i)
            .ok_or_else(|| Error::BadPath(path.to_vec()))?
            .resolve()?;
    }
    Ok(cur)
}

enum TargetKind {
    Mcut,
    BareCut,
}

/// Cuts and multicuts within truncation depth `d`, shallowest first.
fn find_targets(t: &PreProof, d: usize) -> Result<Vec<(Vec<usize>, TargetKind)>> {
    let mut out = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    queue.push_back((t.resolve()?, Vec::new(), d, false));
    let mut fuel = crate::tree::TRAVERSAL_FUEL;
    while let Some((node, path, budget, parent_mcut)) = queue.pop_front() {
        if budget == 0 {
            continue;
        }
        if fuel == 0 {
            return Err(Error::NonProductive("target scan budget exhausted".into()));
        }
        fuel -= 1;
        let TreeRepr::Rule(rule, cs) = node.view() else { continue };
        let is_mcut = matches!(rule, MumallRule::Mcut { .. });
        match rule {
            MumallRule::Mcut { .. } => out.push((path.clone(), TargetKind::Mcut)),
            MumallRule::Cut { .. } if !parent_mcut => {
                out.push((path.clone(), TargetKind::BareCut))
            }
            _ => {}
        }
        for (i, c) in cs.iter().enumerate() {
            let b2 = budget - if rule.coind(i) { 1 } else { 0 };
            let mut p2 = path.clone();
            p2.push(i);
            queue.push_back((c.resolve()?, p2, b2, is_mcut));
        }
    }
    Ok(out)
}

fn truncation_cut_free(t: &FiniteTree<MumallRule>) -> bool {
    match t {
        FiniteTree::Axiom(_) => true,
        FiniteTree::Rule(r, cs) => {
            !matches!(r, MumallRule::Cut { .. } | MumallRule::Mcut { .. })
                && cs.iter().all(truncation_cut_free)
        }
    }
}

/// Drive cut elimination until the depth-`d` truncation is cut-free,
/// preferring shallow multicuts and principal steps. Best effort: a
/// `StuckReport` is data, not an error.
pub fn cut_elim_observe(
    p: &PreProof,
    d: usize,
    fuel: usize,
) -> Result<(Vec<Step>, std::result::Result<FiniteTree<MumallRule>, StuckReport>)> {
    let oracle = MumallOracle;
    let mut cur = p.clone();
    let mut steps: Vec<Step> = Vec::new();
    let mut budget = fuel;
    loop {
        let targets = find_targets(&cur, d)?;
        if targets.is_empty() {
            let tr = truncate(&cur, d)?;
            debug_assert!(truncation_cut_free(&tr));
            return Ok((steps, Ok(tr)));
        }
        let stuck = |steps: Vec<Step>, cur: &PreProof, reason: String| {
            Ok((
                steps.clone(),
                Err(StuckReport { steps, truncation: truncate(cur, d)?, reason }),
            ))
        };
        if budget == 0 {
            return stuck(steps, &cur, "step budget exhausted".into());
        }
        let mut action: Option<Step> = None;
        for (path, kind) in &targets {
            match kind {
                TargetKind::BareCut => {
                    action = Some(Step { name: "wrap".into(), path: path.clone() });
                    break;
                }
                TargetKind::Mcut => {
                    let sub = subtree_at(&cur, path)?;
                    let mut kinds = applicable_root_steps(&sub)?;
                    if let Some(k) = kinds.drain(..).next() {
                        action = Some(Step { name: k.name(), path: path.clone() });
                        break;
                    }
                    if let Some(tau) = enabling_perm(&sub)? {
                        let k = RootStepKind::PremissPerm { tau };
                        action = Some(Step { name: k.name(), path: path.clone() });
                        break;
                    }
                }
            }
        }
        let Some(st) = action else {
            return stuck(steps, &cur, "no applicable root step".into());
        };
        cur = apply_step(&cur, &st, &oracle)?;
        steps.push(st);
        budget -= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{mumall_step_exemplar, mumall_wrap_exemplar, nu_cut_example};
    use super::super::rules::multicut_violations;
    use crate::tree::validate_tree;

    fn positional_kinds() -> Vec<RootStepKind> {
        vec![
            RootStepKind::Merge,
            RootStepKind::Ax,
            RootStepKind::TensorPar,
            RootStepKind::WithPlus,
            RootStepKind::MuNu,
            RootStepKind::BotOne,
            RootStepKind::CommPar,
            RootStepKind::CommTensor,
            RootStepKind::CommOne,
            RootStepKind::CommBot,
            RootStepKind::CommPlus,
            RootStepKind::CommWith,
            RootStepKind::CommFix { nu: false },
            RootStepKind::CommFix { nu: true },
            RootStepKind::CommTop,
            RootStepKind::CommExch,
        ]
    }

    fn assert_mcuts_valid(t: &FiniteTree<MumallRule>) {
        match t {
            FiniteTree::Rule(MumallRule::Mcut { premisses, rel }, cs) => {
                let vs = multicut_violations(premisses, rel);
                assert!(vs.is_empty(), "{vs:?}");
                cs.iter().for_each(assert_mcuts_valid);
            }
            FiniteTree::Rule(_, cs) => cs.iter().for_each(assert_mcuts_valid),
            FiniteTree::Axiom(_) => {}
        }
    }

    #[test]
    fn step_names_roundtrip() {
        let mut kinds = positional_kinds();
        kinds.push(RootStepKind::PremissPerm { tau: vec![3, 1, 2] });
        for k in kinds {
            assert_eq!(RootStepKind::parse(&k.name()).unwrap(), k);
        }
        assert!(RootStepKind::parse("nonsense").is_err());
    }

    #[test]
    fn exemplars_fire_and_preserve_the_conclusion() {
        for kind in positional_kinds() {
            let p = mumall_step_exemplar(&kind).unwrap();
            let enabled = applicable_root_steps(&p).unwrap();
            assert!(enabled.contains(&kind), "{} not enabled: {enabled:?}", kind.name());
            let before = p.conclusion().unwrap();
            let q = apply_root_step(&kind, &p).unwrap();
            assert_eq!(q.conclusion().unwrap(), before, "{}", kind.name());
            assert!(validate_tree(&q, 10).unwrap().is_empty(), "{}", kind.name());
            assert_mcuts_valid(&truncate(&q, 10).unwrap());
        }
    }

    /// Skip a step's emitted exchange, if any.
    fn under_exch(p: &PreProof) -> PreProof {
        match root_of(p).unwrap() {
            Some((MumallRule::Exch { .. }, cs)) => cs[0].clone(),
            _ => p.clone(),
        }
    }

    fn root_rel_len(p: &PreProof) -> usize {
        match root_of(&under_exch(p)).unwrap() {
            Some((MumallRule::Mcut { rel, .. }, _)) => rel.len(),
            other => panic!("expected a multicut root, got {other:?}"),
        }
    }

    #[test]
    fn principal_steps_change_the_pair_count_as_expected() {
        // tensor/par drops the principal pair and adds two fresh ones;
        // ax and bot/one just drop theirs
        for (kind, delta) in [
            (RootStepKind::TensorPar, 1isize),
            (RootStepKind::Ax, -1),
            (RootStepKind::BotOne, -1),
        ] {
            let p = mumall_step_exemplar(&kind).unwrap();
            let before = root_rel_len(&p) as isize;
            let q = apply_root_step(&kind, &p).unwrap();
            assert_eq!(root_rel_len(&q) as isize - before, delta, "{}", kind.name());
        }
        let p = mumall_step_exemplar(&RootStepKind::TensorPar).unwrap();
        let q = apply_root_step(&RootStepKind::TensorPar, &p).unwrap();
        match root_of(&under_exch(&q)).unwrap() {
            Some((MumallRule::Mcut { rel, .. }, _)) => {
                assert!(rel.contains((1, 1), (3, 1)));
                assert!(rel.contains((2, 1), (3, 2)));
            }
            _ => panic!("expected a multicut root"),
        }
    }

    #[test]
    fn premiss_permutation_reorders_children() {
        let p = mumall_step_exemplar(&RootStepKind::Merge).unwrap();
        let before = p.conclusion().unwrap();
        let q = apply_root_step(&RootStepKind::PremissPerm { tau: vec![2, 1] }, &p).unwrap();
        assert_eq!(q.conclusion().unwrap(), before);
        // the cut premiss moved to position 1, so merge is no longer enabled
        let inner = under_exch(&q);
        assert!(!applicable_root_steps(&inner).unwrap().contains(&RootStepKind::Merge));
        assert_eq!(enabling_perm(&inner).unwrap(), Some(vec![2, 1]));
        assert!(apply_root_step(&RootStepKind::PremissPerm { tau: vec![1, 1] }, &p).is_err());
    }

    #[test]
    fn wrapping_a_bare_cut_preserves_its_conclusion() {
        let p = mumall_wrap_exemplar().unwrap();
        let q = wrap_cut(&p).unwrap();
        assert_eq!(q.conclusion().unwrap(), p.conclusion().unwrap());
        assert!(matches!(root_of(&q).unwrap(), Some((MumallRule::Mcut { .. }, _))));
        assert!(matches!(wrap_cut(&q), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn oracle_steps_are_conclusion_preserving() {
        let oracle = MumallOracle;
        let p = mumall_step_exemplar(&RootStepKind::CommPar).unwrap();
        for (name, q) in oracle.enumerate(&p).unwrap() {
            assert_eq!(q.conclusion().unwrap(), p.conclusion().unwrap(), "{name}");
            let q2 = oracle.apply(&name, &p).unwrap();
            assert!(crate::tree::bisimilar(&q, &q2).unwrap());
        }
    }

    #[test]
    fn nu_cut_reaches_a_cut_free_truncation() {
        let p = nu_cut_example().unwrap();
        let (steps, obs) = cut_elim_observe(&p, 3, 10).unwrap();
        assert!(steps.len() <= 10, "{} steps", steps.len());
        let cert = obs.expect("elimination got stuck");
        assert_eq!(cert.count_rules(&|r| matches!(r, MumallRule::Nu { .. })), 3);
        assert_eq!(
            cert.count_rules(&|r| matches!(r, MumallRule::Cut { .. } | MumallRule::Mcut { .. })),
            0
        );
    }
}
