//! End-to-end acceptance checks, one per criterion. Each test prints a
//! single PASS/FAIL line; run with `cargo test --test acceptance -- --nocapture`
//! to see them on success too.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use coinf::compress::{observe_omega, truncations_agree, Engine, QStep};
use coinf::fo::{example_system, FoOracle, FoQStep};
use coinf::gen::{
    example_omega2_witness, gen_fo_regular, gen_formula, gen_invalid_mcut,
    gen_lam_regular, gen_run_witness, gen_valid_mcut, mumall_step_exemplar,
    mumall_wrap_exemplar, nu_cut_example,
};
use coinf::lambda::{
    normalize, std_to_omega, to_standard_form, AbcFlags, LamCtx, LamOracle, LamQStep,
    LamTerm,
};
use coinf::mumall::{
    applicable_root_steps, apply_root_step, cut_elim_observe, mcut_conclusion,
    multicut_violations, neg, validate_multicut, wrap_cut, CutRel, MumallOracle,
    MumallQStep, MumallRule, RootStepKind, Sequent,
};
use coinf::ord::Ordinal;
use coinf::rewrite::{
    refl_hat, refl_witness, validate_witness, witness_bisimilar, Segment, Step,
    Witness, WitnessViolation, ZeroStepOracle,
};
use coinf::tree::{
    bisimilar, reachable_states, tree_distance, truncate, DTree, Distance, FiniteTree,
    Label, RuleFamily,
};

type Check = Result<(), Box<dyn std::error::Error>>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+).into());
        }
    };
}

fn report(n: usize, what: &str, r: Check) {
    match r {
        Ok(()) => println!("PASS criterion {n}: {what}"),
        Err(e) => {
            println!("FAIL criterion {n}: {what}: {e}");
            panic!("criterion {n} ({what}): {e}");
        }
    }
}

fn lam_ctx() -> LamCtx {
    LamCtx::new(AbcFlags::parse("001").unwrap())
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_1_compression_of_the_running_example() {
    report(1, "omega*2 witness compresses to f-towers", (|| -> Check {
        let start = Instant::now();
        let (sys, w) = example_omega2_witness()?;
        let oracle = Arc::new(FoOracle { system: Arc::clone(&sys) });
        let engine = Engine::new(
            oracle.clone(),
            Arc::new(FoQStep { system: Arc::clone(&sys) }),
        );
        ensure!(w.ordinal()?.to_string() == "w*2", "input ordinal is {}", w.ordinal()?);
        let cw = engine.compress(&w)?;
        ensure!(cw.ordinal()?.is_zero(), "compressed ordinal is {}", cw.ordinal()?);
        for d in 1..=8 {
            let (steps, cert) = observe_omega(&cw, d, oracle.as_ref())?;
            let expect = format!("{}*{}", "f(".repeat(d), ")".repeat(d));
            ensure!(cert.to_string() == expect, "depth {d}: got {cert}, want {expect}");
            ensure!(!steps.is_empty(), "depth {d}: empty replay prefix");
        }
        let took = start.elapsed();
        ensure!(took < Duration::from_secs(1), "took {took:?}, budget 1s");
        Ok(())
    })());
}

// ---------------------------------------------------------------------------

fn ultrametric_suite<R: RuleFamily>(trees: &[DTree<R>]) -> Check {
    let budget = 8;
    for t in trees {
        ensure!(bisimilar(t, t)?, "a tree is not bisimilar to itself");
        ensure!(
            tree_distance(t, t, budget)? == Distance::AtMost(budget),
            "self-distance is not <= 2^-{budget}"
        );
        // truncation is monotone: cutting the depth-8 cut again gives the
        // shallower cut exactly
        let t8 = truncate(t, budget)?.to_dtree();
        for d in [0, 1, 3, 5] {
            ensure!(
                truncate(&t8, d)? == truncate(t, d)?,
                "truncation at {d} disagrees with re-truncation from {budget}"
            );
        }
    }
    for ch in trees.chunks(3) {
        let [x, y, z] = ch else { continue };
        let dxy = tree_distance(x, y, budget)?;
        let dyx = tree_distance(y, x, budget)?;
        ensure!(dxy == dyx, "distance is not symmetric: {dxy:?} vs {dyx:?}");
        let dxz = tree_distance(x, z, budget)?.as_f64();
        let dyz = tree_distance(y, z, budget)?.as_f64();
        ensure!(
            dxz <= dxy.as_f64().max(dyz),
            "strong triangle fails: d(x,z)={dxz}, d(x,y)={}, d(y,z)={dyz}",
            dxy.as_f64()
        );
        // zero distance at budget means equal truncations throughout
        if dxy == Distance::AtMost(budget) {
            for d in 0..=budget {
                ensure!(truncate(x, d)? == truncate(y, d)?, "AtMost but truncations differ");
            }
        }
    }
    Ok(())
}

#[test]
fn criterion_2_ultrametric_and_truncation_suites() {
    report(2, "ultrametric and truncation laws on 500 random trees", (|| -> Check {
        let start = Instant::now();
        let mut rng = StdRng::seed_from_u64(20);
        let sys = example_system();
        let fo: Vec<_> = (0..250)
            .map(|_| gen_fo_regular(&sys.sig, &mut rng, 4))
            .collect::<coinf::Result<_>>()?;
        let ctx = lam_ctx();
        let lam: Vec<LamTerm> =
            (0..250).map(|_| gen_lam_regular(&ctx, &mut rng, 4)).collect();
        ultrametric_suite(&fo)?;
        ultrametric_suite(&lam)?;
        let took = start.elapsed();
        ensure!(took < Duration::from_secs(5), "took {took:?}, budget 5s");
        Ok(())
    })());
}

// ---------------------------------------------------------------------------

fn compression_soundness<R: RuleFamily>(
    what: &str,
    bases: &[DTree<R>],
    oracle: Arc<dyn ZeroStepOracle<R>>,
    q: Arc<dyn QStep<R>>,
    rng: &mut StdRng,
    n: usize,
) -> Check {
    for i in 0..n {
        let t = &bases[i % bases.len()];
        let w = gen_run_witness(t, oracle.as_ref(), rng, 1)?;
        let vs = validate_witness(&w, 8, oracle.as_ref())?;
        ensure!(vs.is_empty(), "{what} witness {i} is not valid: {vs:?}");
        let engine = Engine::new(Arc::clone(&oracle), Arc::clone(&q));
        let cw = engine.compress(&w)?;
        ensure!(cw.ordinal()?.is_zero(), "{what} witness {i}: ordinal {}", cw.ordinal()?);
        ensure!(
            truncations_agree(&w, &cw, 10)?,
            "{what} witness {i}: target truncations changed under compression"
        );
    }
    Ok(())
}

#[test]
fn criterion_3_compression_soundness() {
    report(3, "compression preserves targets on generated witnesses", (|| -> Check {
        let start = Instant::now();
        let mut rng = StdRng::seed_from_u64(30);

        let sys = Arc::new(example_system());
        let fo_bases: Vec<_> = (0..40)
            .map(|_| gen_fo_regular(&sys.sig, &mut rng, 3))
            .collect::<coinf::Result<_>>()?;
        compression_soundness(
            "fo",
            &fo_bases,
            Arc::new(FoOracle { system: Arc::clone(&sys) }),
            Arc::new(FoQStep { system: Arc::clone(&sys) }),
            &mut rng,
            200,
        )?;

        let ctx = lam_ctx();
        let lam_bases: Vec<LamTerm> =
            (0..40).map(|_| gen_lam_regular(&ctx, &mut rng, 3)).collect();
        compression_soundness(
            "lam",
            &lam_bases,
            Arc::new(LamOracle),
            Arc::new(LamQStep),
            &mut rng,
            200,
        )?;

        let mut mu_bases = Vec::new();
        for kind in all_step_kinds() {
            mu_bases.push(mumall_step_exemplar(&kind)?);
        }
        mu_bases.push(mumall_wrap_exemplar()?);
        mu_bases.push(nu_cut_example()?);
        compression_soundness(
            "mumall",
            &mu_bases,
            Arc::new(MumallOracle),
            Arc::new(MumallQStep),
            &mut rng,
            200,
        )?;

        let took = start.elapsed();
        ensure!(took < Duration::from_secs(60), "took {took:?}, budget 60s");
        Ok(())
    })());
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_4_validator_rejects_invalid_witnesses() {
    report(4, "validator tags three hand-built invalid witnesses", (|| -> Check {
        let sys = Arc::new(example_system());
        let oracle = FoOracle { system: Arc::clone(&sys) };
        let a = sys.sig.cons("a", vec![])?;
        let om = Ordinal::omega();

        // segment at the full ordinal, not below it
        let seg = Segment {
            steps: vec![],
            ordinal: om.clone(),
            hat: refl_hat(&a, &om)?,
        };
        let w = Witness::split(a.clone(), om.clone(), vec![seg], vec![], refl_hat(&a, &om)?);
        let vs = validate_witness(&w, 8, &oracle)?;
        ensure!(
            vs.iter().any(|v| matches!(v, WitnessViolation::OrdinalViolation { .. })),
            "ordinal violation not tagged: {vs:?}"
        );

        // after rule1 the term is f(g(a)), but the hat still claims a
        let w = Witness::split(
            a.clone(),
            om.clone(),
            vec![],
            vec![Step::root("rule1")],
            refl_hat(&a, &om)?,
        );
        let vs = validate_witness(&w, 8, &oracle)?;
        ensure!(
            vs.iter().any(|v| matches!(v, WitnessViolation::EndpointMismatch { .. })),
            "endpoint mismatch not tagged: {vs:?}"
        );

        // a cycle that crosses no coinductive premiss
        let l = Label::fresh();
        let w = Witness::rec_unchecked(l, Witness::back(l));
        let vs = validate_witness(&w, 4, &oracle)?;
        ensure!(
            vs.iter().any(|v| matches!(v, WitnessViolation::UnguardedCycle { .. })),
            "unguarded cycle not tagged: {vs:?}"
        );
        Ok(())
    })());
}

// ---------------------------------------------------------------------------

/// All closed λ-terms with exactly `size` nodes and `binders` enclosing
/// abstractions, de Bruijn style, memoised per (size, binders).
fn lam_terms(
    ctx: &LamCtx,
    size: usize,
    binders: u32,
    memo: &mut HashMap<(usize, u32), Arc<Vec<LamTerm>>>,
) -> Arc<Vec<LamTerm>> {
    if let Some(v) = memo.get(&(size, binders)) {
        return Arc::clone(v);
    }
    let mut out = Vec::new();
    if size == 1 {
        for k in 0..binders {
            out.push(ctx.bvar(k));
        }
    } else {
        let bodies = lam_terms(ctx, size - 1, binders + 1, memo);
        out.extend(bodies.iter().map(|b| ctx.abs(b.clone())));
        for i in 1..size - 1 {
            let fs = lam_terms(ctx, i, binders, memo);
            let args = lam_terms(ctx, size - 1 - i, binders, memo);
            for f in fs.iter() {
                for a in args.iter() {
                    out.push(ctx.app(f.clone(), a.clone()));
                }
            }
        }
    }
    let v = Arc::new(out);
    memo.insert((size, binders), Arc::clone(&v));
    v
}

#[test]
fn criterion_5_lambda_oracle_equivalence() {
    report(5, "observation agrees with brute-force normalization", (|| -> Check {
        let ctx = LamCtx::new(AbcFlags::parse("111")?);
        let mut memo = HashMap::new();
        let mut seen = 0usize;
        let mut normalized = 0usize;
        for size in 1..=12 {
            for t in lam_terms(&ctx, size, 0, &mut memo).iter() {
                seen += 1;
                let Some((nf, steps)) = normalize(t, 200)? else { continue };
                normalized += 1;
                let w = Witness::split(
                    t.clone(),
                    Ordinal::zero(),
                    vec![],
                    steps,
                    refl_hat(&nf, &Ordinal::zero())?,
                );
                for d in [2, 5, 16] {
                    let (_, cert) = observe_omega(&w, d, &LamOracle)?;
                    let want = truncate(&nf, d)?;
                    ensure!(
                        cert == want,
                        "size {size}: observation {cert} differs from normal form cut {want}"
                    );
                }
            }
        }
        ensure!(seen > 100_000, "enumeration looks too small: {seen} terms");
        ensure!(normalized > 0, "no term normalized");
        Ok(())
    })());
}

// ---------------------------------------------------------------------------

/// Independent multicut check: exhaustive simple-path search instead of the
/// library's union-find/degree argument.
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
    fn path(from: usize, to: usize, edges: &[(usize, usize)], used: &mut Vec<bool>) -> bool {
        if from == to {
            return true;
        }
        for (e, (a, b)) in edges.iter().enumerate() {
            if used[e] {
                continue;
            }
            let next = if *a == from { *b } else if *b == from { *a } else { continue };
            used[e] = true;
            if path(next, to, edges, used) {
                used[e] = false;
                return true;
            }
            used[e] = false;
        }
        false
    }
    for v in 2..=k {
        if !path(1, v, &edges, &mut vec![false; edges.len()]) {
            return false;
        }
    }
    for (e, (a, b)) in edges.iter().enumerate() {
        let mut used = vec![false; edges.len()];
        used[e] = true;
        if path(*a, *b, &edges, &mut used) {
            return false;
        }
    }
    true
}

fn all_step_kinds() -> Vec<RootStepKind> {
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

fn mcuts_valid(t: &FiniteTree<MumallRule>) -> Result<(), String> {
    if let FiniteTree::Rule(r, cs) = t {
        if let MumallRule::Mcut { premisses, rel } = r {
            let vs = multicut_violations(premisses, rel);
            if !vs.is_empty() {
                return Err(format!("{vs:?}"));
            }
        }
        for c in cs {
            mcuts_valid(c)?;
        }
    }
    Ok(())
}

#[test]
fn criterion_6_mumall_suite() {
    report(6, "negation, multicut validation and root steps", (|| -> Check {
        let mut rng = StdRng::seed_from_u64(60);
        for _ in 0..1000 {
            let f = gen_formula(&mut rng, 3);
            ensure!(neg(&neg(&f)) == f, "neg is not involutive on {f}");
        }

        let mut i = 0;
        while i < 400 {
            let k = rng.gen_range(1..=5);
            let (seqs, rel) = if rng.gen_bool(0.5) {
                gen_valid_mcut(&mut rng, k)
            } else {
                gen_invalid_mcut(&mut rng, k)
            };
            if seqs.iter().any(|s| s.len() > 3) {
                continue; // outside the n_i <= 3 comparison range
            }
            i += 1;
            let got = validate_multicut(&seqs, &rel);
            let want = reference_valid(&seqs, &rel);
            ensure!(
                got.is_ok() == want,
                "instance {i}: validator {} but reference {}",
                if got.is_ok() { "accepts" } else { "rejects" },
                if want { "accepts" } else { "rejects" }
            );
            if let Ok(concl) = got {
                ensure!(
                    concl == mcut_conclusion(&seqs, &rel),
                    "instance {i}: conclusion disagrees"
                );
            }
        }

        let kinds = all_step_kinds();
        let mut applied = 0usize;
        for i in 0.. {
            if applied >= 100 {
                break;
            }
            let p = mumall_step_exemplar(&kinds[i % kinds.len()])?;
            let before = p.conclusion()?;
            let mut steps = applicable_root_steps(&p)?;
            if let Ok(Some(tau)) = coinf::mumall::enabling_perm(&p) {
                steps.push(RootStepKind::PremissPerm { tau });
            }
            ensure!(!steps.is_empty(), "no step fires on the {} exemplar", kinds[i % kinds.len()].name());
            for kind in steps {
                let q = apply_root_step(&kind, &p)?;
                ensure!(
                    q.conclusion()? == before,
                    "{}: conclusion changed from {before} to {}",
                    kind.name(),
                    q.conclusion()?
                );
                mcuts_valid(&truncate(&q, 8)?)
                    .map_err(|e| format!("{} leaves an invalid multicut: {e}", kind.name()))?;
                applied += 1;
            }
        }
        let cut = mumall_wrap_exemplar()?;
        let wrapped = wrap_cut(&cut)?;
        ensure!(wrapped.conclusion()? == cut.conclusion()?, "wrap changed the conclusion");
        mcuts_valid(&truncate(&wrapped, 8)?).map_err(|e| format!("wrap: {e}"))?;
        Ok(())
    })());
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_7_cut_elimination_productivity() {
    report(7, "nu/ax cut reaches a cut-free depth-3 truncation", (|| -> Check {
        let p = nu_cut_example()?;
        let (steps, obs) = cut_elim_observe(&p, 3, 10)?;
        ensure!(steps.len() <= 10, "needed {} steps", steps.len());
        let cert = match obs {
            Ok(c) => c,
            Err(stuck) => return Err(format!("stuck: {}", stuck.reason).into()),
        };
        ensure!(
            cert.count_rules(&|r| matches!(r, MumallRule::Nu { .. })) == 3,
            "certificate is not three nu rules deep: {cert}"
        );
        ensure!(
            cert.count_rules(&|r| {
                matches!(r, MumallRule::Cut { .. } | MumallRule::Mcut { .. })
            }) == 0,
            "certificate still contains cuts: {cert}"
        );
        Ok(())
    })());
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_8_standard_presentation_round_trip() {
    report(8, "standard-form round trip is a bisimulation", (|| -> Check {
        let ctx = lam_ctx();
        let mut rng = StdRng::seed_from_u64(80);
        let mut checked = 0usize;
        while checked < 60 {
            let t = gen_lam_regular(&ctx, &mut rng, 3);
            if reachable_states(&t, 40).is_err() {
                continue; // state graph too large for the 40-node bound
            }
            let w = refl_witness(&t, &Ordinal::zero())?;
            let d = to_standard_form(&w)?;
            let w2 = std_to_omega(&d)?;
            ensure!(
                witness_bisimilar(&w, &w2)?,
                "round trip broke bisimilarity on sample {checked}"
            );
            checked += 1;
        }
        Ok(())
    })());
}
