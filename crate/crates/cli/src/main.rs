//! Command line front end: solve, audit, decompose, gen, version.
//!
//! Exit codes: 0 success (audit: truthful), 1 audit found a violation
//! witness, 2 any error (parse, variant mismatch, bad flags). All numbers
//! print exactly, never as floats; equal inputs and seeds produce byte
//! identical output.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use tafm::assignment::{welfare, Outcome, OutcomeLottery};
use tafm::audit::{audit_grid, audit_strategyproofness, instance_label, GridSpec, Verdict};
use tafm::fractional::{sigap_dual_certificate, sigap_greedy_traced, verify_2approx};
use tafm::gen::{generate_instance, parse_alphabets};
use tafm::instance::{EdgeSet, Instance, Variant};
use tafm::io::{emit_instance, parse_instance, parse_fractional};
use tafm::mechanism::Mechanism;
use tafm::rational::{format_rational, rat_int, Rational};
use tafm::rounding::{decompose_scaled, sample_lottery};
use tafm::{Assignment, FractionalAssignment};

#[derive(Parser)]
#[command(
    name = "tafm",
    version,
    about = "Truthful assignment mechanisms over private bipartite graphs"
)]
struct Cli {
    /// Report style: human text or machine readable JSON.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EmitKind {
    Assignment,
    Lottery,
    Fractional,
}

#[derive(Subcommand)]
enum Command {
    /// Run a mechanism on an instance file.
    Solve {
        instance: PathBuf,
        #[arg(long)]
        mechanism: String,
        /// Seed for sampling an assignment out of a lottery outcome.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// What to print; defaults to the outcome's own kind.
        #[arg(long, value_enum)]
        emit: Option<EmitKind>,
    },
    /// Audit a mechanism for profitable misreports, on a file or a grid.
    Audit {
        instance: Option<PathBuf>,
        #[arg(long, conflicts_with = "instance")]
        grid: Option<String>,
        #[arg(long)]
        mechanism: String,
    },
    /// Halve a fractional assignment into a lottery over integral ones.
    Decompose {
        instance: PathBuf,
        fractional: PathBuf,
    },
    /// Generate a random instance file for a variant and shape.
    Gen {
        #[arg(long)]
        variant: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides like "values=1,2,3;sizes=1,2;capacities=1,2,3".
        #[arg(long, default_value = "")]
        alphabet: String,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the tool version.
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Solve {
            instance,
            mechanism,
            seed,
            emit,
        } => cmd_solve(&instance, &mechanism, seed, emit, cli.format),
        Command::Audit {
            instance,
            grid,
            mechanism,
        } => cmd_audit(instance.as_deref(), grid.as_deref(), &mechanism, cli.format),
        Command::Decompose {
            instance,
            fractional,
        } => cmd_decompose(&instance, &fractional, cli.format),
        Command::Gen {
            variant,
            n,
            m,
            seed,
            alphabet,
            out,
        } => cmd_gen(&variant, n, m, seed, &alphabet, out.as_deref()),
        Command::Version => {
            emit(&format!("tafm {}\n", env!("CARGO_PKG_VERSION")));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_instance(path: &std::path::Path) -> Result<(Instance, EdgeSet), String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_instance(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn mechanism_by_name(name: &str) -> Result<Mechanism, String> {
    Mechanism::from_name(name).ok_or_else(|| {
        let known: Vec<&str> = Mechanism::all().iter().map(|m| m.name()).collect();
        format!("unknown mechanism {name:?}; known: {}", known.join(", "))
    })
}

fn describe_assignment(a: &Assignment) -> String {
    let parts: Vec<String> = a
        .pairs()
        .map(|(i, j)| format!("job {} -> machine {}", i + 1, j + 1))
        .collect();
    if parts.is_empty() {
        "(empty)".to_string()
    } else {
        parts.join(", ")
    }
}

fn assignment_pairs_json(a: &Assignment) -> serde_json::Value {
    json!(a.pairs().map(|(i, j)| [i + 1, j + 1]).collect::<Vec<_>>())
}

fn matrix_json(x: &FractionalAssignment) -> serde_json::Value {
    json!((0..x.n)
        .map(|i| (0..x.m)
            .map(|j| format_rational(x.get(i, j)))
            .collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

/// Support sorted by descending probability, then by canonical assignment
/// order, so equal lotteries always print identically.
fn sorted_support(lottery: &OutcomeLottery) -> Vec<(Assignment, Rational)> {
    let mut support = lottery.support().to_vec();
    support.sort_by(|(a, p), (b, q)| {
        q.cmp(p).then_with(|| {
            let ka: Vec<Option<usize>> = (0..a.n()).map(|i| a.get(i)).collect();
            let kb: Vec<Option<usize>> = (0..b.n()).map(|i| b.get(i)).collect();
            ka.cmp(&kb)
        })
    });
    support
}

fn cmd_solve(
    path: &std::path::Path,
    mechanism: &str,
    seed: u64,
    emit: Option<EmitKind>,
    format: Format,
) -> Result<ExitCode, String> {
    let (inst, edges) = load_instance(path)?;
    let mech = mechanism_by_name(mechanism)?;
    let outcome = mech.run(&inst, &edges).map_err(|e| e.to_string())?;
    let emit = emit.unwrap_or(match &outcome {
        Outcome::Deterministic(_) => EmitKind::Assignment,
        Outcome::Fractional(_) => EmitKind::Fractional,
        Outcome::Randomized(_) => EmitKind::Lottery,
    });

    let mut doc = json!({
        "mechanism": mech.name(),
        "instance": instance_label(&inst),
    });
    let obj = doc.as_object_mut().unwrap();

    let edge_list: Vec<String> = edges
        .iter()
        .map(|(i, j)| format!("({}, {})", i + 1, j + 1))
        .collect();
    let mut lines: Vec<String> = vec![
        format!("mechanism: {}", mech.name()),
        format!("instance: {}", instance_label(&inst)),
        format!(
            "edges: {}",
            if edge_list.is_empty() {
                "(none)".to_string()
            } else {
                edge_list.join(", ")
            }
        ),
    ];
    obj.insert(
        "edges".into(),
        json!(edges.iter().map(|(i, j)| [i + 1, j + 1]).collect::<Vec<_>>()),
    );

    match (emit, &outcome) {
        (EmitKind::Assignment, Outcome::Deterministic(a)) => {
            let w = a.welfare(&inst, &edges).map_err(|e| e.to_string())?;
            lines.push(format!("assignment: {}", describe_assignment(a)));
            lines.push(format!("welfare: {}", format_rational(&w)));
            obj.insert("emit".into(), json!("assignment"));
            obj.insert("assignment".into(), assignment_pairs_json(a));
            obj.insert("welfare".into(), json!(format_rational(&w)));
        }
        (EmitKind::Assignment, Outcome::Randomized(l)) => {
            let a = sample_lottery(l, seed);
            let w = a.welfare(&inst, &edges).map_err(|e| e.to_string())?;
            lines.push(format!("sampled assignment (seed {seed}): {}", describe_assignment(&a)));
            lines.push(format!("welfare: {}", format_rational(&w)));
            obj.insert("emit".into(), json!("assignment"));
            obj.insert("seed".into(), json!(seed));
            obj.insert("assignment".into(), assignment_pairs_json(&a));
            obj.insert("welfare".into(), json!(format_rational(&w)));
        }
        (EmitKind::Assignment, Outcome::Fractional(_)) => {
            return Err(
                "this mechanism's outcome is fractional; use --emit fractional".to_string(),
            );
        }
        (EmitKind::Fractional, outcome) => {
            let x = match outcome {
                Outcome::Fractional(x) => x.clone(),
                Outcome::Deterministic(a) => {
                    let mut x = FractionalAssignment::zero(inst.n, inst.m);
                    for (i, j) in a.pairs() {
                        x.set(i, j, rat_int(1));
                    }
                    x
                }
                Outcome::Randomized(l) => l.expectation(inst.m),
            };
            let w = welfare(&x, &inst, &edges).map_err(|e| e.to_string())?;
            for i in 0..x.n {
                let row: Vec<String> =
                    (0..x.m).map(|j| format_rational(x.get(i, j))).collect();
                lines.push(format!("x[{}] = [{}]", i + 1, row.join(", ")));
            }
            lines.push(format!("welfare: {}", format_rational(&w)));
            obj.insert("emit".into(), json!("fractional"));
            obj.insert("fractional".into(), matrix_json(&x));
            obj.insert("welfare".into(), json!(format_rational(&w)));
        }
        (EmitKind::Lottery, Outcome::Randomized(l)) => {
            let w = l.expected_welfare(&inst, &edges).map_err(|e| e.to_string())?;
            let support = sorted_support(l);
            lines.push(format!("lottery support ({} outcomes):", support.len()));
            let mut sup_json = Vec::new();
            for (a, p) in &support {
                lines.push(format!("  {}: {}", format_rational(p), describe_assignment(a)));
                sup_json.push(json!({
                    "probability": format_rational(p),
                    "assignment": assignment_pairs_json(a),
                }));
            }
            lines.push(format!("expected welfare: {}", format_rational(&w)));
            obj.insert("emit".into(), json!("lottery"));
            obj.insert("lottery".into(), json!(sup_json));
            obj.insert("expected_welfare".into(), json!(format_rational(&w)));
        }
        (EmitKind::Lottery, Outcome::Deterministic(a)) => {
            let w = a.welfare(&inst, &edges).map_err(|e| e.to_string())?;
            lines.push("lottery support (1 outcome):".to_string());
            lines.push(format!("  1: {}", describe_assignment(a)));
            lines.push(format!("expected welfare: {}", format_rational(&w)));
            obj.insert("emit".into(), json!("lottery"));
            obj.insert(
                "lottery".into(),
                json!([{ "probability": "1", "assignment": assignment_pairs_json(a) }]),
            );
            obj.insert("expected_welfare".into(), json!(format_rational(&w)));
        }
        (EmitKind::Lottery, Outcome::Fractional(_)) => {
            return Err(
                "this mechanism's outcome is fractional; use --emit fractional".to_string(),
            );
        }
    }

    if mech == Mechanism::SigapGreedy {
        let run = sigap_greedy_traced(&inst, &edges);
        let cert = sigap_dual_certificate(&run, &inst);
        verify_2approx(&cert, &run.x, &inst, &edges)
            .map_err(|e| format!("dual certificate check failed: {e}"))?;
        let u: Vec<String> = cert.u.iter().map(format_rational).collect();
        let z: Vec<String> = cert.z.iter().map(format_rational).collect();
        let value = cert.value(&inst);
        lines.push(format!("dual certificate: u = [{}], z = [{}]", u.join(", "), z.join(", ")));
        lines.push(format!(
            "certificate value: {} (welfare >= value/2, certified ratio <= 2)",
            format_rational(&value)
        ));
        obj.insert(
            "certificate".into(),
            json!({ "u": u, "z": z, "value": format_rational(&value) }),
        );
    }

    print_report(format, &lines, &doc);
    Ok(ExitCode::SUCCESS)
}

fn cmd_audit(
    instance: Option<&std::path::Path>,
    grid: Option<&str>,
    mechanism: &str,
    format: Format,
) -> Result<ExitCode, String> {
    let mech = mechanism_by_name(mechanism)?;
    match (instance, grid) {
        (Some(path), None) => {
            let (inst, edges) = load_instance(path)?;
            let report =
                audit_strategyproofness(mech, &inst, &edges).map_err(|e| e.to_string())?;
            let mut lines = vec![
                format!("mechanism: {}", report.mechanism),
                format!("instance: {}", report.instance),
                match report.verdict {
                    Verdict::Truthful => "verdict: TRUTHFUL (0 witnesses)".to_string(),
                    Verdict::Violated => {
                        format!("verdict: VIOLATED ({} witnesses)", report.witnesses.len())
                    }
                },
            ];
            let mut witnesses_json = Vec::new();
            for w in report.witnesses.iter().take(8) {
                lines.push(format!(
                    "witness: job {} reporting machines {{{}}} raises utility {} -> {}",
                    w.job + 1,
                    w.misreport
                        .iter()
                        .map(|j| (j + 1).to_string())
                        .collect::<Vec<_>>()
                        .join(", "),
                    format_rational(&w.honest_utility),
                    format_rational(&w.deviant_utility),
                ));
            }
            if report.witnesses.len() > 8 {
                lines.push(format!("(and {} more)", report.witnesses.len() - 8));
            }
            for w in &report.witnesses {
                witnesses_json.push(json!({
                    "job": w.job + 1,
                    "misreport": w.misreport.iter().map(|j| j + 1).collect::<Vec<_>>(),
                    "honest_utility": format_rational(&w.honest_utility),
                    "deviant_utility": format_rational(&w.deviant_utility),
                }));
            }
            lines.push(format!(
                "honest welfare: {}",
                format_rational(&report.honest_welfare)
            ));
            if let Some(opt) = &report.optimal_welfare {
                lines.push(format!("optimal welfare: {}", format_rational(opt)));
            }
            if let Some(ratio) = &report.ratio {
                lines.push(format!("ratio: {}", format_rational(ratio)));
            }
            let doc = json!({
                "mechanism": report.mechanism,
                "instance": report.instance,
                "verdict": match report.verdict {
                    Verdict::Truthful => "truthful",
                    Verdict::Violated => "violated",
                },
                "witness_count": report.witnesses.len(),
                "witnesses": witnesses_json,
                "honest_welfare": format_rational(&report.honest_welfare),
                "optimal_welfare": report.optimal_welfare.as_ref().map(format_rational),
                "ratio": report.ratio.as_ref().map(format_rational),
            });
            print_report(format, &lines, &doc);
            Ok(if report.verdict == Verdict::Violated {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        (None, Some(grid_name)) => {
            let spec = GridSpec::named(grid_name, mech)
                .ok_or_else(|| format!("unknown grid {grid_name:?}; known: default, small"))?;
            let report = audit_grid(mech, &spec).map_err(|e| e.to_string())?;
            let coverage = if report.exhaustive {
                "exhaustive".to_string()
            } else {
                format!(
                    "sampled {} of {} instances",
                    report.instances_audited, report.instance_space
                )
            };
            let mut lines = vec![
                format!("mechanism: {}", report.mechanism),
                format!("grid: {grid_name} ({coverage})"),
                format!(
                    "audited: {} instances, {} true edge sets, {} mechanism runs",
                    report.instances_audited, report.edge_sets_audited, report.mechanism_runs
                ),
                if report.witness_count == 0 {
                    "verdict: TRUTHFUL (0 witnesses)".to_string()
                } else {
                    format!("verdict: VIOLATED ({} witnesses)", report.witness_count)
                },
            ];
            for rec in report.witnesses.iter().take(4) {
                lines.push(format!(
                    "witness: {} | job {} reporting machines {{{}}} raises utility {} -> {}",
                    instance_label(&rec.instance),
                    rec.witness.job + 1,
                    rec.witness
                        .misreport
                        .iter()
                        .map(|j| (j + 1).to_string())
                        .collect::<Vec<_>>()
                        .join(", "),
                    format_rational(&rec.witness.honest_utility),
                    format_rational(&rec.witness.deviant_utility),
                ));
            }
            match (&report.min_ratio, &report.max_ratio) {
                (Some(lo), Some(hi)) => lines.push(format!(
                    "welfare ratio vs optimum: [{}, {}]",
                    format_rational(lo),
                    format_rational(hi)
                )),
                _ => lines.push("welfare ratio vs optimum: (no positive optima)".to_string()),
            }
            let doc = json!({
                "mechanism": report.mechanism,
                "grid": grid_name,
                "instance_space": report.instance_space.to_string(),
                "instances_audited": report.instances_audited,
                "edge_sets_audited": report.edge_sets_audited,
                "mechanism_runs": report.mechanism_runs,
                "exhaustive": report.exhaustive,
                "verdict": if report.witness_count == 0 { "truthful" } else { "violated" },
                "witness_count": report.witness_count,
                "min_ratio": report.min_ratio.as_ref().map(format_rational),
                "max_ratio": report.max_ratio.as_ref().map(format_rational),
            });
            print_report(format, &lines, &doc);
            Ok(if report.witness_count > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        _ => Err("audit needs an instance file or --grid, not both or neither".to_string()),
    }
}

fn cmd_decompose(
    instance_path: &std::path::Path,
    fractional_path: &std::path::Path,
    format: Format,
) -> Result<ExitCode, String> {
    let (inst, edges) = load_instance(instance_path)?;
    let text = fs::read_to_string(fractional_path)
        .map_err(|e| format!("cannot read {}: {e}", fractional_path.display()))?;
    let x = parse_fractional(&text).map_err(|e| format!("{}: {e}", fractional_path.display()))?;
    if x.n != inst.n || x.m != inst.m {
        return Err(format!(
            "fractional assignment is {}x{}, instance is {}x{}",
            x.n, x.m, inst.n, inst.m
        ));
    }
    let dec = decompose_scaled(&x, &inst, &edges).map_err(|e| e.to_string())?;

    // Re-add the support from scratch; the printed check is independent of
    // the decomposer's own verification.
    let mut weight_sum = rat_int(0);
    let mut coverage = FractionalAssignment::zero(inst.n, inst.m);
    for (z, lambda) in &dec.support {
        weight_sum += lambda;
        for (i, j) in z.pairs() {
            let v = coverage.get(i, j) + lambda;
            coverage.set(i, j, v);
        }
    }
    let exact = coverage == dec.target && weight_sum == rat_int(1);

    let mut lines = vec![format!("support ({} points):", dec.support.len())];
    let mut sup_json = Vec::new();
    for (z, lambda) in &dec.support {
        lines.push(format!(
            "  {}: {}",
            format_rational(lambda),
            describe_assignment(z)
        ));
        sup_json.push(json!({
            "weight": format_rational(lambda),
            "assignment": assignment_pairs_json(z),
        }));
    }
    lines.push(format!("weights sum: {}", format_rational(&weight_sum)));
    lines.push(format!(
        "re-summation check: support averages to x/2 exactly: {}",
        if exact { "ok" } else { "FAILED" }
    ));
    let doc = json!({
        "support": sup_json,
        "weight_sum": format_rational(&weight_sum),
        "target": matrix_json(&dec.target),
        "exact": exact,
    });
    print_report(format, &lines, &doc);
    if exact {
        Ok(ExitCode::SUCCESS)
    } else {
        Err("decomposition does not re-sum to its target".to_string())
    }
}

fn cmd_gen(
    variant: &str,
    n: usize,
    m: usize,
    seed: u64,
    alphabet: &str,
    out: Option<&std::path::Path>,
) -> Result<ExitCode, String> {
    let variant = Variant::from_name(variant).map_err(|e| e.to_string())?;
    let alphabets = parse_alphabets(alphabet).map_err(|e| e.to_string())?;
    let (inst, edges) =
        generate_instance(variant, n, m, &alphabets, seed).map_err(|e| e.to_string())?;
    let text = emit_instance(&inst, &edges);
    match out {
        Some(path) => fs::write(path, &text)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => emit(&text),
    }
    Ok(ExitCode::SUCCESS)
}

/// Writes to stdout, treating a closed pipe as a normal early exit.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if write!(out, "{text}").and_then(|_| out.flush()).is_err() {
        std::process::exit(0);
    }
}

fn print_report(format: Format, lines: &[String], doc: &serde_json::Value) {
    match format {
        Format::Text => {
            for line in lines {
                emit(&format!("{line}\n"));
            }
        }
        Format::Structured => {
            let json = serde_json::to_string_pretty(doc).expect("valid json");
            emit(&format!("{json}\n"));
        }
    }
}
