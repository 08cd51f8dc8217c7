//! The generic compression engine: preponement of zero steps past hat
//! witnesses, the stratified induction turning an arbitrary split into a
//! finite-prefix-plus-hat form, and the coinductive procedure producing
//! ω-witnesses (splits with no segments, at ordinal 0).
//!
//! The engine is parameterised by an instance's Q-step: given a witness
//! `s ↠_δ t` and a step `t → t′`, produce `s ⇒* s′` and `s′ ↠_δ t′`. The
//! engine's own preponement is handed back to the oracle as a callback,
//! which is how the stratified induction recurses below δ.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ord::Ordinal;
use crate::pattern::Pattern;
use crate::rewrite::{
    hat_source, replay, witness_target, Hat, Segment, Step, Witness, ZeroStepOracle,
};
use crate::tree::{truncate, DTree, FiniteTree, RuleFamily};

/// Property Q, supplied per instance.
pub trait QStep<R: RuleFamily>: Send + Sync {
    /// Push the step `st : t → t′` through `w : s ↠_δ t`, producing a finite
    /// prefix `s ⇒* s′` and a witness `s′ ↠_δ t′`.
    fn q_step(
        &self,
        w: &Witness<R>,
        st: &Step,
        engine: &Engine<R>,
    ) -> Result<(Vec<Step>, Witness<R>)>;
}

#[derive(Clone)]
pub struct EngineOpts {
    /// Total work budget across one engine call tree.
    pub fuel: u64,
}

impl Default for EngineOpts {
    fn default() -> Self {
        EngineOpts { fuel: 5_000_000 }
    }
}

/// The compression engine for one instance.
pub struct Engine<R: RuleFamily> {
    pub oracle: Arc<dyn ZeroStepOracle<R>>,
    pub q: Arc<dyn QStep<R>>,
    fuel: Arc<AtomicU64>,
}

impl<R: RuleFamily> Clone for Engine<R> {
    fn clone(&self) -> Self {
        Engine {
            oracle: Arc::clone(&self.oracle),
            q: Arc::clone(&self.q),
            fuel: Arc::clone(&self.fuel),
        }
    }
}

/// A preponed interleaving: a finite prefix followed by a chain of hat
/// witnesses at ordinals strictly below the input's γ.
pub struct PreponeResult<R: RuleFamily> {
    pub prefix: Vec<Step>,
    pub chain: Vec<(Hat<R>, Ordinal)>,
}

impl<R: RuleFamily> Engine<R> {
    pub fn new(oracle: Arc<dyn ZeroStepOracle<R>>, q: Arc<dyn QStep<R>>) -> Self {
        Self::with_opts(oracle, q, EngineOpts::default())
    }

    pub fn with_opts(
        oracle: Arc<dyn ZeroStepOracle<R>>,
        q: Arc<dyn QStep<R>>,
        opts: EngineOpts,
    ) -> Self {
        Engine { oracle, q, fuel: Arc::new(AtomicU64::new(opts.fuel)) }
    }

    fn tick(&self) -> Result<()> {
        let prev = self.fuel.fetch_sub(1, AtomicOrdering::Relaxed);
        if prev == 0 {
            self.fuel.store(0, AtomicOrdering::Relaxed);
            return Err(Error::WellFoundednessExhausted);
        }
        Ok(())
    }

    /// Prepone all zero steps of a split: `s ↠_δ t` becomes
    /// `s ⇒* s′ ↠̂_δ t`, by flattening the segment chain and folding it into
    /// the final hat via hat concatenation.
    pub fn prepone_zero_steps(&self, w: &Witness<R>) -> Result<(Vec<Step>, Hat<R>)> {
        self.tick()?;
        let d = w.split_view()?;
        for seg in &d.segments {
            if seg.ordinal >= d.ordinal {
                return Err(Error::OrdinalViolation(
                    seg.ordinal.to_string(),
                    d.ordinal.to_string(),
                ));
            }
        }
        let PreponeResult { prefix, chain } =
            self.prepone_sequence(&d.segments, &d.trailing)?;
        // Fold right-associatively into the final hat: each concatenation at
        // (δᵢ, acc) lands at max(δᵢ+1, acc) ≤ γ.
        let mut acc = (d.final_hat, d.ordinal.clone());
        for (hat, ord) in chain.into_iter().rev() {
            acc = crate::rewrite::concat_hat(&hat, &ord, &acc.0, &acc.1, None)?;
        }
        Ok((prefix, acc.0))
    }

    /// The stratified induction over the interleaving `s ⟿^{γ,m} s′`:
    /// peel the last segment and push the trailing steps through its hat via
    /// the instance's Q-step (each push re-entering preponement at the
    /// segment's smaller ordinal).
    pub fn prepone_sequence(
        &self,
        segments: &[Segment<R>],
        trailing: &[Step],
    ) -> Result<PreponeResult<R>> {
        self.tick()?;
        let Some((last, rest)) = segments.split_last() else {
            return Ok(PreponeResult { prefix: trailing.to_vec(), chain: Vec::new() });
        };
        let mut cur_hat = last.hat.clone();
        let mut pushed: Vec<Step> = Vec::new();
        for st in trailing {
            self.tick()?;
            let full = crate::rewrite::hat_to_full(&cur_hat, &last.ordinal)?;
            let (p1, w2) = self.q.q_step(&full, st, self)?;
            let (p2, hat2) = self.prepone_zero_steps(&w2)?;
            pushed.extend(p1);
            pushed.extend(p2);
            cur_hat = hat2;
        }
        let mut steps = last.steps.clone();
        steps.extend(pushed);
        let mut res = self.prepone_sequence(rest, &steps)?;
        res.chain.push((cur_hat, last.ordinal.clone()));
        Ok(res)
    }

    /// Compress `s ↠_γ t` into an ω-witness `s ↠_0 t`: the root split is
    /// preponed eagerly; coinductive lift children are compressed lazily.
    pub fn compress(&self, w: &Witness<R>) -> Result<Witness<R>> {
        self.tick()?;
        let source = w.source()?;
        let (prefix, hat) = self.prepone_zero_steps(w)?;
        let final_hat = match hat {
            Hat::Axiom(s) => Hat::Axiom(s),
            Hat::Lift { rule, children } => {
                let mut out = Vec::with_capacity(children.len());
                for (i, c) in children.into_iter().enumerate() {
                    if rule.coind(i) {
                        let eng = self.clone();
                        out.push(Witness::thunk(move || eng.compress(&c)));
                    } else {
                        out.push(self.compress(&c)?);
                    }
                }
                Hat::Lift { rule, children: out }
            }
        };
        Ok(Witness::split(source, Ordinal::zero(), Vec::new(), prefix, final_hat))
    }
}

/// Extract the finite prefix of the length-≤ω sequence denoted by an
/// ω-witness that reaches depth-`d` agreement with the target, together
/// with the truncation certificate.
pub fn observe_omega<R: RuleFamily>(
    w: &Witness<R>,
    d: usize,
    oracle: &dyn ZeroStepOracle<R>,
) -> Result<(Vec<Step>, FiniteTree<R>)> {
    let mut steps = Vec::new();
    let mut fuel = crate::tree::TRAVERSAL_FUEL;
    collect_omega(w, d, &mut Vec::new(), &mut steps, &mut fuel)?;
    let source = w.source()?;
    let reached = replay(&source, &steps, oracle)?;
    let cert = truncate(&reached, d)?;
    Ok((steps, cert))
}

fn collect_omega<R: RuleFamily>(
    w: &Witness<R>,
    d: usize,
    at: &mut Vec<usize>,
    out: &mut Vec<Step>,
    fuel: &mut usize,
) -> Result<()> {
    if d == 0 {
        return Ok(());
    }
    if *fuel == 0 {
        return Err(Error::NonProductive("observe: traversal budget exhausted".into()));
    }
    *fuel -= 1;
    let sv = w.split_view()?;
    if !sv.segments.is_empty() {
        return Err(Error::InvalidWitness(
            "omega witness contains a split segment".into(),
        ));
    }
    for st in &sv.trailing {
        let mut path = at.clone();
        path.extend_from_slice(&st.path);
        out.push(Step { name: st.name.clone(), path });
    }
    if let Hat::Lift { rule, children } = &sv.final_hat {
        for (i, c) in children.iter().enumerate() {
            let d2 = if rule.coind(i) { d - 1 } else { d };
            at.push(i);
            collect_omega(c, d2, at, out, fuel)?;
            at.pop();
        }
    }
    Ok(())
}

/// Generic pattern extraction over witnesses: prepone until the target's
/// `p`-skeleton is exposed as lifts, returning the accumulated prefix and
/// the witnesses under the holes (in hole-index order).
pub fn pattern_extract<R: RuleFamily>(
    engine: &Engine<R>,
    w: &Witness<R>,
    p: &Pattern<R>,
) -> Result<(Vec<Step>, Vec<Witness<R>>)> {
    let k = p.hole_arity()?;
    let mut holes: BTreeMap<usize, Witness<R>> = BTreeMap::new();
    let prefix = extract_go(engine, w, p, &mut holes)?;
    if holes.len() != k {
        return Err(Error::Internal("pattern extraction missed holes".into()));
    }
    Ok((prefix, holes.into_values().collect()))
}

fn extract_go<R: RuleFamily>(
    engine: &Engine<R>,
    w: &Witness<R>,
    p: &Pattern<R>,
    holes: &mut BTreeMap<usize, Witness<R>>,
) -> Result<Vec<Step>> {
    match p {
        Pattern::Hole(i) => {
            holes.insert(*i, w.clone());
            Ok(Vec::new())
        }
        Pattern::Node(r, ps) => {
            let (mut prefix, hat) = engine.prepone_zero_steps(w)?;
            let Hat::Lift { rule, children } = hat else {
                return Err(Error::ShapeMismatch(
                    "pattern node against axiom lift".into(),
                ));
            };
            if rule != *r {
                return Err(Error::ShapeMismatch(format!(
                    "pattern expects rule {}, witness lifts {}",
                    r.display_name(),
                    rule.display_name()
                )));
            }
            for (i, (pc, c)) in ps.iter().zip(children.iter()).enumerate() {
                let sub = extract_go(engine, c, pc, holes)?;
                prefix.extend(sub.into_iter().map(|st| st.under(i)));
            }
            Ok(prefix)
        }
    }
}

/// Generic pattern filling: assemble `q(w₁…wₖ) : q(s₁…) ↠_δ q(t₁…)` by
/// finite induction on `q`.
pub fn pattern_fill<R: RuleFamily>(
    q: &Pattern<R>,
    wits: &[Witness<R>],
    delta: &Ordinal,
) -> Result<Witness<R>> {
    match q {
        Pattern::Hole(i) => wits
            .get(*i - 1)
            .cloned()
            .ok_or_else(|| Error::Domain(format!("no witness for hole {i}"))),
        Pattern::Node(r, ps) => {
            let children: Result<Vec<_>> =
                ps.iter().map(|pc| pattern_fill(pc, wits, delta)).collect();
            let children = children?;
            let srcs: Result<Vec<_>> = children.iter().map(|c| c.source()).collect();
            let source = DTree::rule_unchecked(r.clone(), srcs?);
            Ok(Witness::split(
                source,
                delta.clone(),
                Vec::new(),
                Vec::new(),
                Hat::Lift { rule: r.clone(), children },
            ))
        }
    }
}

/// The congruence case shared by all instances' Q-steps: for a step under
/// premiss `i`, prepone, recurse into the i-th lift child, and re-assemble
/// the lift.
pub fn q_step_congruence<R: RuleFamily>(
    engine: &Engine<R>,
    w: &Witness<R>,
    st: &Step,
) -> Result<(Vec<Step>, Witness<R>)> {
    let delta = w.ordinal()?;
    let (mut prefix, hat) = engine.prepone_zero_steps(w)?;
    let Hat::Lift { rule, mut children } = hat else {
        return Err(Error::ShapeMismatch("congruence step against axiom".into()));
    };
    let i = st.path[0];
    if i >= children.len() {
        return Err(Error::BadPath(st.path.clone()));
    }
    let inner = Step { name: st.name.clone(), path: st.path[1..].to_vec() };
    let (pi, wi) = engine.q.q_step(&children[i], &inner, engine)?;
    prefix.extend(pi.into_iter().map(|s| s.under(i)));
    children[i] = wi;
    let srcs: Result<Vec<_>> = children.iter().map(|c| c.source()).collect();
    let source = DTree::rule_unchecked(rule.clone(), srcs?);
    Ok((
        prefix,
        Witness::split(
            source,
            delta,
            Vec::new(),
            Vec::new(),
            Hat::Lift { rule, children },
        ),
    ))
}

/// Compare target truncations of two witnesses at every depth `0..=d`.
pub fn truncations_agree<R: RuleFamily>(
    a: &Witness<R>,
    b: &Witness<R>,
    d: usize,
) -> Result<bool> {
    let ta = witness_target(a)?;
    let tb = witness_target(b)?;
    for k in 0..=d {
        if truncate(&ta, k)? != truncate(&tb, k)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Convenience: the source tree of a hat (re-exported for instances).
pub fn hat_source_tree<R: RuleFamily>(h: &Hat<R>) -> Result<DTree<R>> {
    hat_source(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fo::{example_system, FoOracle, FoQStep, FoRule};
    use crate::gen::{example_omega2_witness, example_omega_witness, gen_fo_regular, gen_run_witness};
    use crate::pattern::Pattern;
    use crate::rewrite::validate_witness;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn engine() -> (Engine<FoRule>, Arc<crate::fo::FoSystem>) {
        let sys = Arc::new(example_system());
        let eng = Engine::new(
            Arc::new(FoOracle { system: Arc::clone(&sys) }),
            Arc::new(FoQStep { system: Arc::clone(&sys) }),
        );
        (eng, sys)
    }

    #[test]
    fn omega2_witness_compresses_to_f_towers() {
        let (eng, _) = engine();
        let (sys, w) = example_omega2_witness().unwrap();
        let cw = eng.compress(&w).unwrap();
        assert!(cw.ordinal().unwrap().is_zero());
        let oracle = FoOracle { system: sys };
        for d in 1..=8 {
            let (steps, cert) = observe_omega(&cw, d, &oracle).unwrap();
            let expect = format!("{}*{}", "f(".repeat(d), ")".repeat(d));
            assert_eq!(cert.to_string(), expect);
            assert!(!steps.is_empty());
        }
    }

    #[test]
    fn compression_agrees_with_the_direct_omega_witness() {
        let (eng, _) = engine();
        let (_, w2) = example_omega2_witness().unwrap();
        let (_, w1) = example_omega_witness().unwrap();
        let cw = eng.compress(&w2).unwrap();
        assert!(truncations_agree(&cw, &w2, 10).unwrap());
        assert!(truncations_agree(&cw, &w1, 10).unwrap());
    }

    #[test]
    fn preponement_replays_to_the_hat_source() {
        let (eng, sys) = engine();
        let sig = &sys.sig;
        let a = sig.cons("a", vec![]).unwrap();
        let f_g_a = sig.cons("f", vec![sig.cons("g", vec![a.clone()]).unwrap()]).unwrap();
        let one = Ordinal::one();
        let seg = Segment {
            steps: vec![Step::root("rule1")],
            ordinal: one.clone(),
            hat: crate::rewrite::refl_hat(&f_g_a, &one).unwrap(),
        };
        let big = replay(&f_g_a, &[Step::new("rule1", vec![0, 0])], &*eng.oracle).unwrap();
        let w = Witness::split(
            a.clone(),
            Ordinal::omega(),
            vec![seg],
            vec![Step::new("rule1", vec![0, 0])],
            crate::rewrite::refl_hat(&big, &Ordinal::omega()).unwrap(),
        );
        let (prefix, hat) = eng.prepone_zero_steps(&w).unwrap();
        let reached = replay(&a, &prefix, &*eng.oracle).unwrap();
        let hs = hat_source(&hat).unwrap();
        assert_eq!(truncate(&reached, 8).unwrap(), truncate(&hs, 8).unwrap());
        assert_eq!(truncate(&hs, 8).unwrap(), truncate(&big, 8).unwrap());
    }

    #[test]
    fn generated_witnesses_compress_soundly() {
        let (eng, sys) = engine();
        let oracle = FoOracle { system: Arc::clone(&sys) };
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..20 {
            let t = gen_fo_regular(&sys.sig, &mut rng, 3).unwrap();
            let w = gen_run_witness(&t, &oracle, &mut rng, 2).unwrap();
            assert!(validate_witness(&w, 6, &oracle).unwrap().is_empty());
            let cw = eng.compress(&w).unwrap();
            assert!(truncations_agree(&w, &cw, 10).unwrap());
        }
    }

    #[test]
    fn pattern_extract_exposes_hole_witnesses() {
        let (eng, sys) = engine();
        let sig = &sys.sig;
        let a = sig.cons("a", vec![]).unwrap();
        let g_f_a = sig.cons("g", vec![sig.cons("f", vec![a.clone()]).unwrap()]).unwrap();
        let w = crate::rewrite::refl_witness(&g_f_a, &Ordinal::omega()).unwrap();
        let p = Pattern::Node(
            sig.cons_rule("g").unwrap(),
            vec![Pattern::Node(sig.cons_rule("f").unwrap(), vec![Pattern::Hole(1)])],
        );
        let (prefix, wits) = pattern_extract(&eng, &w, &p).unwrap();
        assert!(prefix.is_empty());
        assert_eq!(wits.len(), 1);
        let q = Pattern::Node(sig.cons_rule("f").unwrap(), vec![Pattern::Hole(1)]);
        let filled = pattern_fill(&q, &wits, &Ordinal::omega()).unwrap();
        assert_eq!(
            truncate(&filled.source().unwrap(), 5).unwrap().to_string(),
            "f(a)"
        );
        assert!(matches!(
            pattern_extract(&eng, &w, &Pattern::Node(sig.cons_rule("f").unwrap(), vec![Pattern::Hole(1)])),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn fuel_exhaustion_is_reported() {
        let sys = Arc::new(example_system());
        let eng = Engine::with_opts(
            Arc::new(FoOracle { system: Arc::clone(&sys) }),
            Arc::new(FoQStep { system: Arc::clone(&sys) }),
            EngineOpts { fuel: 2 },
        );
        let (_, w) = example_omega2_witness().unwrap();
        assert!(matches!(eng.compress(&w), Err(Error::WellFoundednessExhausted)));
    }
}
