//! Command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use coinf::compress::{observe_omega, Engine, EngineOpts};
use coinf::error::{Error, Result};
use coinf::fo::{parse_trs, FoOracle, FoQStep, FoResolver, FoSystem};
use coinf::lambda::{normalize, parse_lam_file, print_lam};
use coinf::mumall::{
    applicable_root_steps, cut_elim_observe, multicut_violations, parse_mumall_file,
    print_mumall, MumallOracle, MumallRule, PreProof,
};
use coinf::rewrite::{
    apply_step, step_depth, validate_witness, Step, Witness, ZeroStepOracle,
};
use coinf::text::{parse_tree, parse_witness, print_tree};
use coinf::tree::{tree_distance, truncate, validate_tree, DTree, FiniteTree};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser)]
#[command(name = "coinf", about = "Coinductive infinitary rewriting toolkit")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    /// Worker threads for batch commands taking several files.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the depth-d truncation of a first-order term.
    Truncate {
        #[arg(short, long)]
        system: PathBuf,
        #[arg(short, long, default_value_t = 8)]
        depth: usize,
        file: PathBuf,
    },
    /// Truncation distance between two first-order terms.
    Distance {
        #[arg(short, long)]
        system: PathBuf,
        #[arg(short, long, default_value_t = 16)]
        depth: usize,
        a: PathBuf,
        b: PathBuf,
    },
    /// List applicable zero steps of a term, or apply one (`--apply name@0.1`).
    Step {
        #[arg(short, long)]
        system: PathBuf,
        #[arg(long)]
        apply: Option<String>,
        file: PathBuf,
    },
    /// Reduce by repeated leftmost-outermost zero steps, printing the trace.
    Reduce {
        #[arg(short, long)]
        system: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        fuel: usize,
        #[arg(short, long, default_value_t = 8)]
        depth: usize,
        files: Vec<PathBuf>,
    },
    /// Validate a witness file, printing any violations.
    WitnessValidate {
        #[arg(short, long)]
        system: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        fuel: usize,
        file: PathBuf,
    },
    /// Compress a witness to an ω-witness and print its depth-d observation.
    Compress {
        #[arg(short, long)]
        system: PathBuf,
        #[arg(short, long, default_value_t = 8)]
        depth: usize,
        file: PathBuf,
    },
    /// Observe an ω-witness without compressing first.
    Observe {
        #[arg(short, long)]
        system: PathBuf,
        #[arg(short, long, default_value_t = 8)]
        depth: usize,
        file: PathBuf,
    },
    /// λ-calculus commands.
    Lam {
        #[command(subcommand)]
        sub: LamCmd,
    },
    /// μMALL commands.
    Mumall {
        #[command(subcommand)]
        sub: MumallCmd,
    },
}

#[derive(Subcommand)]
enum LamCmd {
    /// Print the depth-d truncation of a λ-term.
    Truncate {
        #[arg(short, long, default_value_t = 8)]
        depth: usize,
        file: PathBuf,
    },
    /// Normalize a finite λ-term, printing the β-step trace.
    Reduce {
        #[arg(long, default_value_t = 10_000)]
        fuel: usize,
        file: PathBuf,
    },
}

#[derive(Subcommand)]
enum MumallCmd {
    /// Well-formedness and multicut validation report.
    Check {
        #[arg(short, long, default_value_t = 8)]
        depth: usize,
        files: Vec<PathBuf>,
    },
    /// List applicable root steps, or apply one by name.
    Step {
        #[arg(long)]
        apply: Option<String>,
        file: PathBuf,
    },
    /// Run multicut elimination until the depth-d truncation is cut-free.
    Elim {
        #[arg(short, long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = 10_000)]
        fuel: usize,
        file: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Syntax { .. } => 2,
        Error::NonProductive(_) | Error::WellFoundednessExhausted => 3,
        Error::Multicut(_)
        | Error::InvalidWitness(_)
        | Error::Unguarded(_)
        | Error::OrdinalViolation(..)
        | Error::EndpointMismatch(_) => 4,
        _ => 1,
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Domain(format!("{}: {e}", path.display())))
}

fn load_system(path: &Path) -> Result<Arc<FoSystem>> {
    Ok(Arc::new(parse_trs(&read(path)?)?))
}

fn parse_apply(spec: &str) -> Result<Step> {
    let (name, path) = match spec.split_once('@') {
        Some((n, p)) if !p.is_empty() => {
            let idx: Result<Vec<usize>> = p
                .split('.')
                .map(|s| {
                    s.parse::<usize>()
                        .map_err(|_| Error::Domain(format!("bad path '{p}'")))
                })
                .collect();
            (n.to_string(), idx?)
        }
        Some((n, _)) => (n.to_string(), Vec::new()),
        None => (spec.to_string(), Vec::new()),
    };
    Ok(Step { name, path })
}

/// The first zero step in leftmost-outermost order, scanning to `depth`.
fn first_step<R: coinf::tree::RuleFamily>(
    t: &DTree<R>,
    oracle: &dyn ZeroStepOracle<R>,
    depth: usize,
) -> Result<Option<Step>> {
    let cs = match t.unfold() {
        Ok((_, cs)) => cs,
        Err(Error::Domain(_)) => return Ok(None), // truncation leaf
        Err(e) => return Err(e),
    };
    if let Some((name, _)) = oracle.enumerate(t)?.into_iter().next() {
        return Ok(Some(Step::root(name)));
    }
    if depth > 0 {
        for (i, c) in cs.iter().enumerate() {
            if let Some(st) = first_step(c, oracle, depth - 1)? {
                return Ok(Some(st.under(i)));
            }
        }
    }
    Ok(None)
}

struct Report {
    text: String,
    json: serde_json::Value,
}

fn emit(fmt: Format, r: &Report) {
    match fmt {
        Format::Text => print!("{}", r.text),
        Format::Json => println!("{}", r.json),
    }
}

fn path_str(p: &[usize]) -> String {
    if p.is_empty() {
        "ε".into()
    } else {
        p.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.cmd {
        Cmd::Truncate { system, depth, file } => {
            let sys = load_system(system)?;
            let t = parse_tree(&read(file)?, &FoResolver { sig: &sys.sig })?;
            let tr = truncate(&t, *depth)?;
            emit(cli.format, &Report {
                text: format!("{tr}\n"),
                json: json!({ "truncation": tr.to_string() }),
            });
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Distance { system, depth, a, b } => {
            let sys = load_system(system)?;
            let resolver = FoResolver { sig: &sys.sig };
            let ta = parse_tree(&read(a)?, &resolver)?;
            let tb = parse_tree(&read(b)?, &resolver)?;
            let d = tree_distance(&ta, &tb, *depth)?;
            let (kind, at) = match d {
                coinf::tree::Distance::Exact(k) => ("exact", k),
                coinf::tree::Distance::AtMost(k) => ("at-most", k),
            };
            emit(cli.format, &Report {
                text: format!("distance {kind} 2^-{at}\n"),
                json: json!({ "distance": { "kind": kind, "exponent": at } }),
            });
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Step { system, apply, file } => {
            let sys = load_system(system)?;
            let t = parse_tree(&read(file)?, &FoResolver { sig: &sys.sig })?;
            let oracle = FoOracle { system: Arc::clone(&sys) };
            match apply {
                Some(spec) => {
                    let st = parse_apply(spec)?;
                    let t2 = apply_step(&t, &st, &oracle)?;
                    let printed = print_tree(&t2)?;
                    emit(cli.format, &Report {
                        text: format!("{printed}\n"),
                        json: json!({ "term": printed }),
                    });
                }
                None => {
                    let names: Vec<String> =
                        oracle.enumerate(&t)?.into_iter().map(|(n, _)| n).collect();
                    emit(cli.format, &Report {
                        text: names.iter().map(|n| format!("{n}\n")).collect(),
                        json: json!({ "steps": names }),
                    });
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Reduce { system, fuel, depth, files } => {
            let sys = load_system(system)?;
            let reports = map_jobs(cli.jobs, files, |file| {
                let t = parse_tree(&read(file)?, &FoResolver { sig: &sys.sig })?;
                let oracle = FoOracle { system: Arc::clone(&sys) };
                let mut cur = t;
                let mut lines = Vec::new();
                let mut steps = Vec::new();
                for _ in 0..*fuel {
                    let Some(st) = first_step(&cur, &oracle, *depth)? else { break };
                    let sd = step_depth(&cur, &st.path)?;
                    lines.push(format!("{}@{} (depth {sd})", st.name, path_str(&st.path)));
                    cur = apply_step(&cur, &st, &oracle)?;
                    steps.push(st);
                }
                let tr = truncate(&cur, *depth)?;
                Ok(Report {
                    text: format!("{}{tr}\n", lines.iter().map(|l| format!("{l}\n")).collect::<String>()),
                    json: json!({
                        "steps": lines,
                        "truncation": tr.to_string(),
                    }),
                })
            })?;
            for r in &reports {
                emit(cli.format, r);
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::WitnessValidate { system, fuel, file } => {
            let sys = load_system(system)?;
            let w: Witness<coinf::fo::FoRule> =
                parse_witness(&read(file)?, &FoResolver { sig: &sys.sig })?;
            let oracle = FoOracle { system: Arc::clone(&sys) };
            let violations = validate_witness(&w, *fuel, &oracle)?;
            let texts: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            emit(cli.format, &Report {
                text: if texts.is_empty() {
                    "ok\n".into()
                } else {
                    texts.iter().map(|v| format!("violation: {v}\n")).collect()
                },
                json: json!({ "violations": texts }),
            });
            Ok(if texts.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(4) })
        }
        Cmd::Compress { system, depth, file } | Cmd::Observe { system, depth, file } => {
            let compress_first = matches!(cli.cmd, Cmd::Compress { .. });
            let sys = load_system(system)?;
            let w: Witness<coinf::fo::FoRule> =
                parse_witness(&read(file)?, &FoResolver { sig: &sys.sig })?;
            let oracle = Arc::new(FoOracle { system: Arc::clone(&sys) });
            let violations = validate_witness(&w, 10_000, oracle.as_ref())?;
            if !violations.is_empty() {
                for v in &violations {
                    eprintln!("violation: {v}");
                }
                return Ok(ExitCode::from(4));
            }
            let w = if compress_first {
                let engine = Engine::with_opts(
                    oracle.clone(),
                    Arc::new(FoQStep { system: Arc::clone(&sys) }),
                    EngineOpts::default(),
                );
                engine.compress(&w)?
            } else {
                w
            };
            let (steps, cert) = observe_omega(&w, *depth, oracle.as_ref())?;
            let lines: Vec<String> =
                steps.iter().map(|s| format!("{}@{}", s.name, path_str(&s.path))).collect();
            emit(cli.format, &Report {
                text: format!(
                    "{}{cert}\n",
                    lines.iter().map(|l| format!("{l}\n")).collect::<String>()
                ),
                json: json!({ "steps": lines, "truncation": cert.to_string() }),
            });
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Lam { sub } => run_lam(cli, sub),
        Cmd::Mumall { sub } => run_mumall(cli, sub),
    }
}

fn run_lam(cli: &Cli, sub: &LamCmd) -> Result<ExitCode> {
    match sub {
        LamCmd::Truncate { depth, file } => {
            let (_, t) = parse_lam_file(&read(file)?)?;
            let tr = truncate(&t, *depth)?;
            emit(cli.format, &Report {
                text: format!("{tr}\n"),
                json: json!({ "truncation": tr.to_string() }),
            });
            Ok(ExitCode::SUCCESS)
        }
        LamCmd::Reduce { fuel, file } => {
            let (_, t) = parse_lam_file(&read(file)?)?;
            match normalize(&t, *fuel)? {
                Some((nf, steps)) => {
                    let lines: Vec<String> = steps
                        .iter()
                        .map(|s| format!("beta@{}", path_str(&s.path)))
                        .collect();
                    let printed = print_lam(&nf)?;
                    emit(cli.format, &Report {
                        text: format!(
                            "{}{printed}\n",
                            lines.iter().map(|l| format!("{l}\n")).collect::<String>()
                        ),
                        json: json!({ "steps": lines, "normal_form": printed }),
                    });
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    eprintln!("no normal form within {fuel} steps");
                    Ok(ExitCode::from(3))
                }
            }
        }
    }
}

fn mumall_check_report(p: &PreProof, depth: usize) -> Result<(Report, bool)> {
    let mut problems = validate_tree(p, depth)?;
    // Re-validate every multicut relation in the truncation explicitly.
    fn scan(t: &FiniteTree<MumallRule>, out: &mut Vec<String>) {
        if let FiniteTree::Rule(r, cs) = t {
            if let MumallRule::Mcut { premisses, rel } = r {
                for v in multicut_violations(premisses, rel) {
                    out.push(format!("multicut: {v}"));
                }
            }
            cs.iter().for_each(|c| scan(c, out));
        }
    }
    scan(&truncate(p, depth)?, &mut problems);
    let goal = p.conclusion()?;
    let ok = problems.is_empty();
    let text = if ok {
        format!("ok: {goal}\n")
    } else {
        problems.iter().map(|v| format!("violation: {v}\n")).collect()
    };
    Ok((
        Report {
            text,
            json: json!({ "goal": goal.to_string(), "violations": problems }),
        },
        ok,
    ))
}

fn run_mumall(cli: &Cli, sub: &MumallCmd) -> Result<ExitCode> {
    match sub {
        MumallCmd::Check { depth, files } => {
            let mut all_ok = true;
            let results: Result<Vec<(Report, bool)>> = map_jobs(cli.jobs, files, |file| {
                let p = parse_mumall_file(&read(file)?)?;
                mumall_check_report(&p, *depth)
            });
            for (r, ok) in results? {
                emit(cli.format, &r);
                all_ok &= ok;
            }
            Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(4) })
        }
        MumallCmd::Step { apply, file } => {
            let p = parse_mumall_file(&read(file)?)?;
            let oracle = MumallOracle;
            match apply {
                Some(name) => {
                    let p2 = oracle.apply(name, &p)?;
                    let printed = print_mumall(&p2)?;
                    emit(cli.format, &Report {
                        text: format!("{printed}\n"),
                        json: json!({ "proof": printed }),
                    });
                }
                None => {
                    let names: Vec<String> = match p.unfold()? {
                        (MumallRule::Cut { .. }, _) => vec!["wrap".into()],
                        (MumallRule::Mcut { .. }, _) => applicable_root_steps(&p)?
                            .iter()
                            .map(|k| k.name())
                            .collect(),
                        _ => Vec::new(),
                    };
                    emit(cli.format, &Report {
                        text: names.iter().map(|n| format!("{n}\n")).collect(),
                        json: json!({ "steps": names }),
                    });
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        MumallCmd::Elim { depth, fuel, file } => {
            let p = parse_mumall_file(&read(file)?)?;
            let (steps, outcome) = cut_elim_observe(&p, *depth, *fuel)?;
            let lines: Vec<String> = steps
                .iter()
                .map(|s| format!("{}@{}", s.name, path_str(&s.path)))
                .collect();
            match outcome {
                Ok(tr) => {
                    emit(cli.format, &Report {
                        text: format!(
                            "{}{tr}\n",
                            lines.iter().map(|l| format!("{l}\n")).collect::<String>()
                        ),
                        json: json!({ "steps": lines, "truncation": tr.to_string() }),
                    });
                    Ok(ExitCode::SUCCESS)
                }
                Err(stuck) => {
                    emit(cli.format, &Report {
                        text: format!(
                            "{}stuck: {} (after {} steps)\n{}\n",
                            lines.iter().map(|l| format!("{l}\n")).collect::<String>(),
                            stuck.reason,
                            stuck.steps.len(),
                            stuck.truncation
                        ),
                        json: json!({
                            "steps": lines,
                            "stuck": stuck.reason,
                            "truncation": stuck.truncation.to_string(),
                        }),
                    });
                    Ok(ExitCode::from(5))
                }
            }
        }
    }
}

/// Process files, possibly on several threads, preserving input order.
fn map_jobs<T: Send>(
    jobs: usize,
    files: &[PathBuf],
    f: impl Fn(&PathBuf) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    if jobs <= 1 || files.len() <= 1 {
        return files.iter().map(&f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<Result<T>>>> =
        files.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(files.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= files.len() {
                    break;
                }
                let r = f(&files[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("worker filled every slot"))
        .collect()
}
