//! Text format for circular pre-proofs. A file is `goal SEQ ; PROOF` and
//! the proof is parsed top-down against the expected sequent, so rule
//! parameters stay minimal: `cut[F;k]` gives the cut formula and the split
//! point, `tens[k]` the split point, `mcut` lists its premiss sequents and
//! relation in full. `*` is a truncation leaf, `rec L. p` binds a cycle.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::text::Lexer;
use crate::tree::{DTree, Label, RuleFamily, TreeRepr};

use super::formula::{parse_formula_at, parse_sequent_at, Formula, Sequent};
use super::rules::{mcut_conclusion, CutRel, MumallRule, PreProof};

pub fn parse_mumall_file(src: &str) -> Result<PreProof> {
    let mut lx = Lexer::new(src);
    if !lx.eat_kw("goal") {
        return Err(lx.error("expected 'goal'"));
    }
    let goal = parse_sequent_at(&mut lx)?;
    lx.expect(';')?;
    let p = parse_proof_at(&mut lx, &goal, &mut Vec::new())?;
    lx.expect_end()?;
    Ok(p)
}

type Scope = Vec<(String, Label, Sequent)>;

const RULE_KWS: &[&str] = &[
    "ax", "cut", "one", "top", "bot", "par", "tens", "plus", "with", "mu", "nu",
    "mcut", "rec", "x",
];

pub fn parse_proof_at(
    lx: &mut Lexer<'_>,
    expected: &Sequent,
    scope: &mut Scope,
) -> Result<PreProof> {
    if lx.eat('*') {
        return Ok(DTree::axiom(expected.clone()));
    }
    if lx.eat_kw("rec") {
        let name = lx.ident()?;
        lx.expect('.')?;
        let label = Label::fresh();
        scope.push((name, label, expected.clone()));
        let body = parse_proof_at(lx, expected, scope)?;
        scope.pop();
        return DTree::rec(label, body);
    }
    for kw in RULE_KWS {
        if *kw == "rec" {
            continue;
        }
        if lx.eat_kw(kw) {
            return parse_rule(lx, kw, expected, scope);
        }
    }
    let name = lx.ident()?;
    let Some((_, label, seq)) = scope.iter().find(|(n, _, _)| *n == name) else {
        return Err(lx.error(format!("'{name}' is neither a rule nor a bound cycle")));
    };
    if seq != expected {
        return Err(lx.error(format!(
            "cycle '{name}' proves {seq}, but {expected} is required here"
        )));
    }
    Ok(DTree::back(*label))
}

fn parse_rule(
    lx: &mut Lexer<'_>,
    kw: &str,
    expected: &Sequent,
    scope: &mut Scope,
) -> Result<PreProof> {
    let principal = |lx: &Lexer<'_>| {
        expected.last().cloned().ok_or_else(|| {
            lx.error(format!("'{kw}' needs its principal formula last in {expected}"))
        })
    };
    let rule = match kw {
        "ax" => {
            lx.expect('[')?;
            let f = parse_formula_at(lx, &mut Vec::new())?;
            lx.expect(']')?;
            MumallRule::Ax { f }
        }
        "cut" => {
            lx.expect('[')?;
            let f = parse_formula_at(lx, &mut Vec::new())?;
            lx.expect(';')?;
            let k = lx.nat()?;
            lx.expect(']')?;
            let (gamma, delta) = expected.split_at(k);
            MumallRule::Cut { gamma, delta, f }
        }
        "x" => {
            lx.expect('[')?;
            let mut sigma = vec![lx.nat()?];
            while lx.eat(',') {
                sigma.push(lx.nat()?);
            }
            lx.expect(']')?;
            MumallRule::Exch { sigma, concl: expected.clone() }
        }
        "one" => MumallRule::One,
        "top" => match principal(lx)? {
            Formula::Top => MumallRule::Top { gamma: expected.drop_last(1) },
            f => return Err(lx.error(format!("'top' cannot conclude {f}"))),
        },
        "bot" => match principal(lx)? {
            Formula::Bot => MumallRule::Bot { gamma: expected.drop_last(1) },
            f => return Err(lx.error(format!("'bot' cannot conclude {f}"))),
        },
        "par" => match principal(lx)? {
            Formula::Par(f, g) => {
                MumallRule::Par { gamma: expected.drop_last(1), f: *f, g: *g }
            }
            f => return Err(lx.error(format!("'par' cannot conclude {f}"))),
        },
        "tens" => {
            lx.expect('[')?;
            let k = lx.nat()?;
            lx.expect(']')?;
            match principal(lx)? {
                Formula::Tens(f, g) => {
                    let (gamma, delta) = expected.drop_last(1).split_at(k);
                    MumallRule::Tens { gamma, delta, f: *f, g: *g }
                }
                f => return Err(lx.error(format!("'tens' cannot conclude {f}"))),
            }
        }
        "plus" => {
            lx.expect('[')?;
            let i = lx.nat()?;
            lx.expect(']')?;
            if i > 1 {
                return Err(lx.error("'plus' side must be 0 or 1"));
            }
            match principal(lx)? {
                Formula::Plus(f0, f1) => MumallRule::Plus {
                    gamma: expected.drop_last(1),
                    i,
                    f0: *f0,
                    f1: *f1,
                },
                f => return Err(lx.error(format!("'plus' cannot conclude {f}"))),
            }
        }
        "with" => match principal(lx)? {
            Formula::With(f, g) => {
                MumallRule::With { gamma: expected.drop_last(1), f: *f, g: *g }
            }
            f => return Err(lx.error(format!("'with' cannot conclude {f}"))),
        },
        "mu" => match principal(lx)? {
            Formula::Mu(x, b) => {
                MumallRule::Mu { gamma: expected.drop_last(1), x, f: *b }
            }
            f => return Err(lx.error(format!("'mu' cannot conclude {f}"))),
        },
        "nu" => match principal(lx)? {
            Formula::Nu(x, b) => {
                MumallRule::Nu { gamma: expected.drop_last(1), x, f: *b }
            }
            f => return Err(lx.error(format!("'nu' cannot conclude {f}"))),
        },
        "mcut" => {
            lx.expect('[')?;
            let mut premisses = vec![parse_sequent_at(lx)?];
            while lx.eat(';') {
                premisses.push(parse_sequent_at(lx)?);
            }
            let mut rel = CutRel::new();
            if lx.eat('|') {
                if lx.peek() != Some(']') {
                    loop {
                        let a = (lx.nat()?, {
                            lx.expect('.')?;
                            lx.nat()?
                        });
                        lx.expect('~')?;
                        let b = (lx.nat()?, {
                            lx.expect('.')?;
                            lx.nat()?
                        });
                        rel.add(a, b);
                        if !lx.eat(',') {
                            break;
                        }
                    }
                }
            }
            lx.expect(']')?;
            let concl = mcut_conclusion(&premisses, &rel);
            if concl != *expected {
                return Err(lx.error(format!(
                    "multicut concludes {concl}, but {expected} is required here"
                )));
            }
            MumallRule::Mcut { premisses, rel }
        }
        _ => unreachable!(),
    };
    if rule.conclusion() != *expected {
        return Err(lx.error(format!(
            "'{kw}' concludes {}, but {expected} is required here",
            rule.conclusion()
        )));
    }
    let want = rule.premisses();
    let mut children = Vec::with_capacity(want.len());
    if !want.is_empty() {
        lx.expect('(')?;
        for (i, seq) in want.iter().enumerate() {
            if i > 0 {
                lx.expect(',')?;
            }
            children.push(parse_proof_at(lx, seq, scope)?);
        }
        lx.expect(')')?;
    }
    DTree::rule(rule, children)
}

pub fn print_mumall(p: &PreProof) -> Result<String> {
    let goal = p.conclusion()?;
    let mut out = format!("goal {goal} ; ");
    let mut names: HashMap<Label, String> = HashMap::new();
    print_at(p, &mut names, &mut 0, &mut out)?;
    Ok(out)
}

fn print_at(
    p: &PreProof,
    names: &mut HashMap<Label, String>,
    counter: &mut usize,
    out: &mut String,
) -> Result<()> {
    match p.view() {
        TreeRepr::Axiom(_) => {
            out.push('*');
            Ok(())
        }
        TreeRepr::Back(l) => {
            let name = names
                .get(l)
                .ok_or_else(|| Error::UnboundBackEdge(l.to_string()))?;
            out.push_str(name);
            Ok(())
        }
        TreeRepr::Rec { label, body, .. } => {
            *counter += 1;
            let name = format!("L{counter}");
            out.push_str(&format!("rec {name}. "));
            names.insert(*label, name);
            print_at(body, names, counter, out)
        }
        TreeRepr::Thunk(_) => {
            let forced = p.resolve()?;
            print_at(&forced, names, counter, out)
        }
        TreeRepr::Rule(rule, cs) => {
            let head = match rule {
                MumallRule::Ax { f } => format!("ax[{f}]"),
                MumallRule::Cut { gamma, f, .. } => {
                    format!("cut[{f};{}]", gamma.len())
                }
                MumallRule::Exch { sigma, .. } => {
                    let parts: Vec<String> =
                        sigma.iter().map(|i| i.to_string()).collect();
                    format!("x[{}]", parts.join(","))
                }
                MumallRule::One => "one".into(),
                MumallRule::Top { .. } => "top".into(),
                MumallRule::Bot { .. } => "bot".into(),
                MumallRule::Par { .. } => "par".into(),
                MumallRule::Tens { gamma, .. } => format!("tens[{}]", gamma.len()),
                MumallRule::Plus { i, .. } => format!("plus[{i}]"),
                MumallRule::With { .. } => "with".into(),
                MumallRule::Mu { .. } => "mu".into(),
                MumallRule::Nu { .. } => "nu".into(),
                MumallRule::Mcut { premisses, rel } => {
                    let seqs: Vec<String> =
                        premisses.iter().map(|s| s.to_string()).collect();
                    let pairs: Vec<String> = rel
                        .iter()
                        .map(|((a, b), (c, d))| format!("{a}.{b} ~ {c}.{d}"))
                        .collect();
                    if pairs.is_empty() {
                        format!("mcut[{}]", seqs.join(" ; "))
                    } else {
                        format!("mcut[{} | {}]", seqs.join(" ; "), pairs.join(", "))
                    }
                }
            };
            out.push_str(&head);
            if !cs.is_empty() {
                out.push('(');
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    print_at(c, names, counter, out)?;
                }
                out.push(')');
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{mumall_step_exemplar, nu_cut_example};
    use crate::mumall::RootStepKind;
    use crate::tree::bisimilar;

    fn roundtrip(src: &str) -> PreProof {
        let p = parse_mumall_file(src).unwrap();
        let p2 = parse_mumall_file(&print_mumall(&p).unwrap()).unwrap();
        assert!(bisimilar(&p, &p2).unwrap(), "{src}");
        p
    }

    #[test]
    fn small_proofs_roundtrip() {
        roundtrip("goal |- 1 ; one");
        roundtrip("goal |- p, ~p ; x[2,1](ax[~p])");
        roundtrip("goal |- 1, bot ; bot(one)");
        roundtrip("goal |- p par ~p ; par(x[2,1](ax[~p]))");
        roundtrip("goal |- top, 0 ; x[2,1](top)");
        roundtrip("goal |- (1 plus bot) with 1 ; with(plus[0](one), one)");
        roundtrip("goal |- mu X. 1 tens X ; *");
        roundtrip("goal |- q ; cut[p;1](*, *)");
    }

    #[test]
    fn cycles_roundtrip_and_check_their_sequent() {
        let p = roundtrip("goal |- nu X. X ; rec L. nu(L)");
        assert_eq!(p.conclusion().unwrap().to_string(), "|- nu X. X");
        assert!(parse_mumall_file("goal |- nu X. X ; rec L. nu(nope)").is_err());
        // a back edge at a different sequent is rejected
        assert!(
            parse_mumall_file("goal |- nu X. X par X ; rec L. nu(par(L))").is_err()
        );
        // ... but one at the same sequent, through the unfolding, is fine
        roundtrip("goal |- nu X. 1 tens X ; rec L. nu(tens[0](one, L))");
    }

    #[test]
    fn multicuts_roundtrip() {
        let src = "goal |- r ; mcut[|- r, c1 ; |- ~c1 | 1.2 ~ 2.1](*, *)";
        let p = roundtrip(src);
        assert_eq!(p.conclusion().unwrap().to_string(), "|- r");
        // a multicut whose stated conclusion disagrees is rejected
        assert!(parse_mumall_file("goal |- q ; mcut[|- r, c1 ; |- ~c1 | 1.2 ~ 2.1](*, *)").is_err());
    }

    #[test]
    fn generated_proofs_print_and_reparse() {
        for kind in [RootStepKind::Merge, RootStepKind::Ax, RootStepKind::CommTensor] {
            let p = mumall_step_exemplar(&kind).unwrap();
            let p2 = parse_mumall_file(&print_mumall(&p).unwrap()).unwrap();
            assert!(bisimilar(&p, &p2).unwrap(), "{}", kind.name());
        }
        let p = nu_cut_example().unwrap();
        let p2 = parse_mumall_file(&print_mumall(&p).unwrap()).unwrap();
        assert!(bisimilar(&p, &p2).unwrap());
    }

    #[test]
    fn rule_conclusion_mismatches_are_syntax_errors() {
        assert!(matches!(
            parse_mumall_file("goal |- p ; one"),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            parse_mumall_file("goal |- 1 ; par"),
            Err(Error::Syntax { .. })
        ));
    }
}
