//! The `traffic-calc` command line: `eval`, `reduce`, `cumulant`, `verify`.
//!
//! Every command writes one JSON document whose `config` block echoes the
//! fully-resolved inputs, so identical invocations give identical bytes.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::GraphMonomial;
use crate::io::{
    complex_to_json, load_distribution, load_json_arg, monomial_to_json, parse_custom_items, parse_graph,
    parse_monomial, parse_polynomial, parse_word, polynomial_to_json, Distribution, GraphInput,
};
use crate::matrix_lab::{compare_prediction, custom_suite, run_suite, EntryLaw, McOptions, SuiteParams, Tolerance};
use crate::operad::GraphPolynomial;
use crate::structure::{
    conditional_expectation, probe_basis, probe_residual, prune_cycle, prune_tec, q_transform, simplify_three_connections,
    tree_reduce,
};
use crate::traffic::{mixed_free_cumulant, partition_cap_from_env, CycleWeightSpec, StateOptions, TrafficEvaluator};

#[derive(Parser, Debug)]
#[command(name = "traffic-calc", version, about = "Traffic distributions of graph monomials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Largest vertex set enumerated by partition sums (default: TRAFFIC_CALC_CAP or 10).
    #[arg(long = "partition-cap")]
    pub partition_cap: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (affects wall time only).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Traffic state of a test graph, monomial or polynomial.
    Eval(EvalArgs),
    /// Rewrite a monomial modulo the kernel of ψ.
    Reduce(ReduceArgs),
    /// Mixed free cumulant of monomials.
    Cumulant(CumulantArgs),
    /// Monte Carlo verification suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    /// τ (ψ for monomials and polynomials).
    Traffic,
    /// τ⁰.
    Injective,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Graph or polynomial: inline JSON or a file.
    #[arg(long)]
    pub graph: String,
    /// Distribution: inline JSON, a file or a bare name.
    #[arg(long, default_value = "semicircular")]
    pub dist: String,
    #[arg(long, value_enum, default_value_t = EvalMode::Traffic)]
    pub mode: EvalMode,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReduceOp {
    /// Conditional expectation onto 𝓐 * 𝓐ᵀ * Δ(𝓑).
    Ce,
    /// Excise hanging two-edge-connected pieces.
    Tec,
    /// Identify 3-edge-connected pairs (quasi-cactus form).
    Quasi,
    /// Cycle pruning on the first prunable pad.
    PruneCycle,
    /// Full reduction to trees.
    Tree,
    /// Q-transform.
    Q,
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    /// Monomial: inline JSON or a file.
    #[arg(long)]
    pub graph: String,
    #[arg(long, value_enum)]
    pub op: ReduceOp,
    /// Distribution for state-dependent reductions and the ψ-probe check.
    #[arg(long)]
    pub dist: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct CumulantArgs {
    /// Array of monomials, or `{"word": "0 0*"}`: inline JSON or a file.
    #[arg(long)]
    pub graph: String,
    #[arg(long, default_value = "semicircular")]
    pub dist: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Wigner,
    Ginibre,
    Haar,
    Markov,
    Custom,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Wigner => "wigner",
            Suite::Ginibre => "ginibre",
            Suite::Haar => "haar",
            Suite::Markov => "markov",
            Suite::Custom => "custom",
        }
    }
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long = "N", default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Wigner pseudo-variance.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub beta: f64,
    /// Ginibre pseudo-variance: `re`, `re,im` or `[re, im]`.
    #[arg(long, default_value = "0", allow_negative_numbers = true)]
    pub zeta: String,
    #[arg(long, value_enum, default_value_t = LawArg::Gaussian)]
    pub law: LawArg,
    #[arg(long = "k-sigma", default_value_t = 3.0)]
    pub k_sigma: f64,
    #[arg(long = "bias-c", default_value_t = 10.0)]
    pub bias_c: f64,
    /// Custom suite: the tests file.
    #[arg(long)]
    pub graph: Option<String>,
    /// Custom suite: the ensemble.
    #[arg(long)]
    pub dist: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LawArg {
    Gaussian,
    RademacherMixed,
}

/// The JSON document, a human summary and the verdict.
#[derive(Debug)]
pub struct Outcome {
    pub report: Value,
    pub summary: Option<String>,
    pub success: bool,
}

fn partition_cap(c: &Common) -> usize {
    c.partition_cap.unwrap_or_else(partition_cap_from_env)
}

fn evaluator<'a>(spec: &'a CycleWeightSpec, c: &Common) -> TrafficEvaluator<'a> {
    TrafficEvaluator::with_options(spec, StateOptions { partition_cap: partition_cap(c), ..StateOptions::default() })
}

fn common_config(c: &Common) -> Value {
    json!({"partition_cap": partition_cap(c), "workers": c.workers})
}

pub fn parse_zeta(s: &str) -> Result<Complex64> {
    let t = s.trim().trim_start_matches('[').trim_end_matches(']');
    let parts: Vec<&str> = t.split(',').map(str::trim).collect();
    let num = |x: &str| x.parse::<f64>().map_err(|_| Error::Parse(format!("--zeta: cannot read `{s}`")));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(Error::Parse(format!("--zeta: cannot read `{s}`"))),
    }
}

fn cmd_eval(a: &EvalArgs) -> Result<Outcome> {
    let input = load_json_arg(&a.graph)?;
    let dist = load_distribution(&a.dist)?;
    let spec = dist.limit()?;
    let ev = evaluator(spec, &a.common);
    let (kind, value) = if input.is_array() {
        if a.mode == EvalMode::Injective {
            return Err(Error::Precondition("injective mode needs a single graph".into()));
        }
        ("polynomial", ev.trace_psi(&parse_polynomial(&input)?)?)
    } else {
        let g = parse_graph(&input)?;
        let kind = if matches!(g, GraphInput::Monomial(_)) { "monomial" } else { "test_graph" };
        let t = g.test_graph();
        let v = match a.mode {
            EvalMode::Traffic => ev.state(&t)?,
            EvalMode::Injective => ev.injective(&t)?,
        };
        (kind, v)
    };
    let report = json!({
        "config": {"command": "eval", "graph": input, "dist": dist.config, "mode": format!("{:?}", a.mode).to_lowercase(), "caps": common_config(&a.common)},
        "result": {"kind": kind, "value": complex_to_json(value), "partitions_visited": ev.partitions_visited()},
    });
    Ok(Outcome { report, summary: Some(format!("{kind}: {:.12} {:+.12}i", value.re, value.im)), success: true })
}

fn first_prunable_pad(t: &GraphMonomial, ev: &TrafficEvaluator<'_>) -> Result<GraphPolynomial> {
    let mut last = Error::Precondition("monomial has no cycle pad".into());
    for pad in t.graph().cycle_pads() {
        match prune_cycle(t, &pad, ev) {
            Ok(p) => return Ok(p),
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn cmd_reduce(a: &ReduceArgs) -> Result<Outcome> {
    let input = load_json_arg(&a.graph)?;
    let t = parse_monomial(&input)?;
    let dist: Distribution = load_distribution(a.dist.as_deref().unwrap_or("semicircular"))?;
    let spec = dist.limit()?;
    let ev = evaluator(spec, &a.common);
    let out = match a.op {
        ReduceOp::Ce => GraphPolynomial::monomial(conditional_expectation(&t)),
        ReduceOp::Tec => {
            let (c, r) = prune_tec(&t, &ev)?;
            GraphPolynomial::monomial(r).scale(c)
        }
        ReduceOp::Quasi => GraphPolynomial::monomial(simplify_three_connections(&t)),
        ReduceOp::PruneCycle => first_prunable_pad(&t, &ev)?,
        ReduceOp::Tree => tree_reduce(&t, &ev)?,
        ReduceOp::Q => q_transform(&t)?,
    };
    let verification = match (&a.dist, a.op) {
        (None, _) => Value::Null,
        (Some(_), ReduceOp::Q) => json!({"psi_of_result": complex_to_json(ev.trace_psi(&out)?)}),
        (Some(_), _) => {
            let gens: Vec<u32> = t.graph().generators().into_iter().collect();
            let probes = probe_basis(&gens);
            let r = probe_residual(&ev, &GraphPolynomial::monomial(t.clone()), &out, &probes)?;
            json!({"probes": probes.len(), "max_residual": r})
        }
    };
    let op = format!("{:?}", a.op).to_lowercase();
    let report = json!({
        "config": {"command": "reduce", "op": op, "graph": monomial_to_json(&t), "dist": dist.config, "dist_given": a.dist.is_some(), "caps": common_config(&a.common)},
        "result": polynomial_to_json(&out),
        "verification": verification,
    });
    Ok(Outcome { report, summary: Some(format!("{op}: {} term(s)", out.len())), success: true })
}

fn cmd_cumulant(a: &CumulantArgs) -> Result<Outcome> {
    let input = load_json_arg(&a.graph)?;
    let monomials: Vec<GraphMonomial> = match (&input, input.get("word")) {
        (_, Some(w)) => parse_word(w)?.into_iter().map(GraphMonomial::edge).collect::<Vec<_>>(),
        (Value::Array(ms), None) => ms.iter().map(parse_monomial).collect::<Result<_>>()?,
        _ => return Err(Error::Parse("cumulant: expected an array of monomials or {\"word\": ...}".into())),
    };
    if monomials.is_empty() {
        return Err(Error::Precondition("cumulant of no arguments".into()));
    }
    let dist = load_distribution(&a.dist)?;
    let ev = evaluator(dist.limit()?, &a.common);
    let value = mixed_free_cumulant(&ev, &monomials)?;
    let report = json!({
        "config": {"command": "cumulant", "arguments": monomials.iter().map(monomial_to_json).collect::<Vec<_>>(), "dist": dist.config, "caps": common_config(&a.common)},
        "result": {"order": monomials.len(), "value": complex_to_json(value)},
    });
    Ok(Outcome { report, summary: Some(format!("kappa_{}: {:.12} {:+.12}i", monomials.len(), value.re, value.im)), success: true })
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome> {
    let opts = McOptions {
        samples: a.samples,
        seed: a.seed,
        tolerance: Tolerance { k_sigma: a.k_sigma, bias_c: a.bias_c },
        partition_cap: partition_cap(&a.common),
        workers: a.common.workers,
    };
    let law = match a.law {
        LawArg::Gaussian => EntryLaw::Gaussian,
        LawArg::RademacherMixed => EntryLaw::RademacherMixed,
    };
    let params = SuiteParams { n: a.n, beta: a.beta, zeta: parse_zeta(&a.zeta)?, law };
    let mut config = json!({"command": "verify", "suite": a.suite.name(), "params": params, "samples": a.samples, "seed": a.seed,
        "tolerance": opts.tolerance, "caps": common_config(&a.common)});
    let report = match a.suite {
        Suite::Custom => {
            let tests_arg = a.graph.as_deref().ok_or_else(|| Error::Precondition("--suite custom needs --graph".into()))?;
            let items = parse_custom_items(&load_json_arg(tests_arg)?)?;
            let dist = load_distribution(a.dist.as_deref().ok_or_else(|| Error::Precondition("--suite custom needs --dist".into()))?)?;
            config["dist"] = dist.config.clone();
            config["tests"] = json!(items.iter().map(|it| json!({"name": it.name, "graph": crate::io::test_graph_to_json(&it.graph)})).collect::<Vec<_>>());
            compare_prediction("custom", &custom_suite(&items), &dist.ensemble_spec(a.n)?, &opts)?
        }
        s => run_suite(s.name(), &params, &opts)?,
    };
    let summary = report.summary();
    let success = report.all_pass;
    let report = json!({"config": config, "report": report});
    Ok(Outcome { report, summary: Some(summary), success })
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Reduce(a) => cmd_reduce(a),
        Command::Cumulant(a) => cmd_cumulant(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn out_path(cli: &Cli) -> Option<&PathBuf> {
    match &cli.command {
        Command::Eval(a) => a.common.out.as_ref(),
        Command::Reduce(a) => a.common.out.as_ref(),
        Command::Cumulant(a) => a.common.out.as_ref(),
        Command::Verify(a) => a.common.out.as_ref(),
    }
}

/// Runs the CLI: exit 0 on success, 1 when a verification fails, 2 on
/// invalid input.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let text = serde_json::to_string_pretty(&outcome.report).expect("JSON values serialize") + "\n";
    match out_path(&cli) {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &text) {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::from(2);
            }
            if let Some(s) = &outcome.summary {
                print!("{s}");
                if !s.ends_with('\n') {
                    println!();
                }
            }
        }
        None => {
            print!("{text}");
            if let Some(s) = &outcome.summary {
                eprint!("{s}");
                if !s.ends_with('\n') {
                    eprintln!();
                }
            }
        }
    }
    if outcome.success {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeAtom;

    fn run(args: &[&str]) -> Result<Outcome> {
        let mut v = vec!["traffic-calc"];
        v.extend_from_slice(args);
        execute(&Cli::try_parse_from(v).unwrap())
    }

    #[test]
    fn eval_examples() {
        let two_cycle = r#"{"vertices": 2, "edges": [{"src": 0, "dst": 1}, {"src": 1, "dst": 0}]}"#;
        let o = run(&["eval", "--graph", two_cycle]).unwrap();
        assert_eq!(o.report["result"]["value"], json!([1.0, 0.0]));
        let o = run(&["eval", "--graph", r#"{"vertices": 1, "edges": []}"#]).unwrap();
        assert_eq!(o.report["result"]["value"], json!([1.0, 0.0]));
        let e = run(&["eval", "--graph", r#"{"vertices": 2, "edges": [{"src": 0}]}"#]).unwrap_err();
        assert!(e.to_string().contains("dst"), "{e}");
    }

    #[test]
    fn reduce_examples() {
        // tree stays itself
        let edge = r#"{"vertices": 2, "edges": [{"src": 0, "dst": 1}], "input": 0, "output": 1}"#;
        let o = run(&["reduce", "--graph", edge, "--op", "tree", "--dist", "semicircular"]).unwrap();
        let p = parse_polynomial(&o.report["result"]).unwrap();
        assert_eq!((p.len(), p.coefficient(&GraphMonomial::edge(EdgeAtom::new(0)))), (1, Complex64::new(1.0, 0.0)));
        assert!(o.report["verification"]["max_residual"].as_f64().unwrap() < 1e-9);
        // a∘b becomes Δ(a∘b)
        let had = r#"{"vertices": 2, "edges": [{"src": 0, "dst": 1, "gen": 0}, {"src": 0, "dst": 1, "gen": 1}], "input": 0, "output": 1}"#;
        let o = run(&["reduce", "--graph", had, "--op", "ce"]).unwrap();
        let p = parse_polynomial(&o.report["result"]).unwrap();
        let ab = GraphMonomial::edge(EdgeAtom::new(0)).hadamard(&GraphMonomial::edge(EdgeAtom::new(1)));
        assert_eq!((p.len(), p.coefficient(&ab.delta())), (1, Complex64::new(1.0, 0.0)));
        // Q(rDeg a) = rDeg a − Δ(a)
        let rdeg = r#"{"vertices": 2, "edges": [{"src": 1, "dst": 0}], "input": 0, "output": 0}"#;
        let o = run(&["reduce", "--graph", rdeg, "--op", "q"]).unwrap();
        let coeffs: Vec<Value> = o.report["result"].as_array().unwrap().iter().map(|t| t["coeff"].clone()).collect();
        assert_eq!(coeffs.len(), 2);
        assert!(coeffs.contains(&json!([1.0, 0.0])) && coeffs.contains(&json!([-1.0, 0.0])));
    }

    #[test]
    fn cumulant_of_word() {
        let o = run(&["cumulant", "--graph", r#"{"word": "0 0"}"#]).unwrap();
        assert_eq!(o.report["result"]["value"], json!([1.0, 0.0]));
    }

    #[test]
    fn zeta_formats() {
        assert_eq!(parse_zeta("0.5").unwrap(), Complex64::new(0.5, 0.0));
        assert_eq!(parse_zeta("0.1,-0.2").unwrap(), Complex64::new(0.1, -0.2));
        assert_eq!(parse_zeta("[0.1, 0.2]").unwrap(), Complex64::new(0.1, 0.2));
        assert!(parse_zeta("x").is_err());
    }

    #[test]
    fn unknown_suite_is_a_usage_error() {
        assert!(Cli::try_parse_from(["traffic-calc", "verify", "--suite", "nope"]).is_err());
    }
}
