//! JSON formats for graphs, operations, polynomials, distributions and
//! custom Monte Carlo tests.
//!
//! Graphs: `{"vertices": [ids] | count, "edges": [{"id", "src", "dst",
//! "gen", "star"}], "input", "output"}`; with both roots the graph is a
//! monomial, with neither a test graph. Operations add `"order"` (edge ids in
//! argument order). Complex numbers are `[re, im]` or plain reals.

use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::cumulants::{CumulantSpec, Matrix, MomentTable};
use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeAtom, Graph, GraphMonomial, LabeledGraph, TestGraph, VertexId};
use crate::matrix_lab::{CustomItem, EnsembleKind, EnsembleSpec, EntryLaw, TraceMode};
use crate::operad::{GraphOperation, GraphPolynomial};
use crate::traffic::CycleWeightSpec;

#[derive(Deserialize)]
#[serde(untagged)]
enum VerticesJson {
    Count(u32),
    Ids(Vec<VertexId>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeJson {
    id: Option<u32>,
    src: VertexId,
    dst: VertexId,
    #[serde(default)]
    gen: u32,
    #[serde(default)]
    star: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphJson {
    vertices: VerticesJson,
    edges: Vec<EdgeJson>,
    input: Option<VertexId>,
    output: Option<VertexId>,
    order: Option<Vec<u32>>,
}

/// A parsed graph: rooted or not.
#[derive(Clone, Debug)]
pub enum GraphInput {
    Test(TestGraph),
    Monomial(GraphMonomial),
}

impl GraphInput {
    /// The test graph a state is evaluated on (roots merged for monomials).
    pub fn test_graph(&self) -> TestGraph {
        match self {
            GraphInput::Test(t) => t.clone(),
            GraphInput::Monomial(m) => m.tilde_delta(),
        }
    }
}

fn parse_err(what: &str, e: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{what}: {e}"))
}

fn labeled_graph(g: &GraphJson) -> Result<LabeledGraph> {
    let vertices = match &g.vertices {
        VerticesJson::Count(n) => (0..*n).collect(),
        VerticesJson::Ids(ids) => ids.clone(),
    };
    let edges = g
        .edges
        .iter()
        .enumerate()
        .map(|(k, e)| Edge { id: e.id.unwrap_or(k as u32), src: e.src, dst: e.dst, label: EdgeAtom { gen: e.gen, star: e.star } })
        .collect();
    Graph::new(vertices, edges)
}

pub fn parse_graph(v: &Value) -> Result<GraphInput> {
    let g: GraphJson = serde_json::from_value(v.clone()).map_err(|e| parse_err("graph", e))?;
    if g.order.is_some() {
        return Err(Error::Parse("graph: field `order` belongs to operations".into()));
    }
    let lg = labeled_graph(&g)?;
    match (g.input, g.output) {
        (None, None) => Ok(GraphInput::Test(TestGraph::new(lg)?)),
        (Some(i), Some(o)) => Ok(GraphInput::Monomial(GraphMonomial::new(lg, i, o)?)),
        _ => Err(Error::Parse("graph: fields `input` and `output` must be given together".into())),
    }
}

pub fn parse_monomial(v: &Value) -> Result<GraphMonomial> {
    match parse_graph(v)? {
        GraphInput::Monomial(m) => Ok(m),
        GraphInput::Test(_) => Err(Error::Parse("monomial: missing field `input`/`output`".into())),
    }
}

pub fn parse_operation(v: &Value) -> Result<GraphOperation> {
    if let Some(name) = v.as_str() {
        return GraphOperation::named(name);
    }
    let g: GraphJson = serde_json::from_value(v.clone()).map_err(|e| parse_err("operation", e))?;
    let lg = labeled_graph(&g)?;
    let (Some(i), Some(o)) = (g.input, g.output) else {
        return Err(Error::Parse("operation: missing field `input`/`output`".into()));
    };
    let order = g.order.unwrap_or_else(|| lg.edges().iter().map(|e| e.id).collect());
    GraphOperation::new(lg.map_labels(|_| ()), i, o, order)
}

fn graph_json(g: &LabeledGraph) -> Value {
    let edges: Vec<Value> = g
        .edges()
        .iter()
        .map(|e| json!({"id": e.id, "src": e.src, "dst": e.dst, "gen": e.label.gen, "star": e.label.star}))
        .collect();
    json!({"vertices": g.vertices(), "edges": edges})
}

pub fn test_graph_to_json(t: &TestGraph) -> Value {
    graph_json(t.graph())
}

pub fn monomial_to_json(m: &GraphMonomial) -> Value {
    let mut v = graph_json(m.graph());
    v["input"] = json!(m.input());
    v["output"] = json!(m.output());
    v
}

pub fn complex_to_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn parse_complex(v: &Value) -> Result<Complex64> {
    if let Some(x) = v.as_f64() {
        return Ok(Complex64::new(x, 0.0));
    }
    match v.as_array().map(|a| a.as_slice()) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
            _ => Err(Error::Parse(format!("complex number: expected [re, im], got {v}"))),
        },
        _ => Err(Error::Parse(format!("complex number: expected a real or [re, im], got {v}"))),
    }
}

/// `[{"coeff": [re, im], "monomial": {...}}, ...]`.
pub fn parse_polynomial(v: &Value) -> Result<GraphPolynomial> {
    let terms = v.as_array().ok_or_else(|| Error::Parse("polynomial: expected an array of terms".into()))?;
    let mut p = GraphPolynomial::zero();
    for t in terms {
        let coeff = t.get("coeff").map_or(Ok(Complex64::new(1.0, 0.0)), parse_complex)?;
        let m = t.get("monomial").ok_or_else(|| Error::Parse("polynomial term: missing field `monomial`".into()))?;
        p.add_term(coeff, parse_monomial(m)?);
    }
    Ok(p)
}

pub fn polynomial_to_json(p: &GraphPolynomial) -> Value {
    Value::Array(p.terms().map(|(c, m)| json!({"coeff": complex_to_json(c), "monomial": monomial_to_json(m)})).collect())
}

/// Parses `"0"`, `"3*"`.
pub fn parse_atom(s: &str) -> Result<EdgeAtom> {
    let (body, star) = match s.strip_suffix('*') {
        Some(b) => (b, true),
        None => (s, false),
    };
    let gen = body.trim().parse().map_err(|_| Error::Parse(format!("atom: cannot read `{s}`")))?;
    Ok(EdgeAtom { gen, star })
}

/// A word as `"0 1* 0"` or `["0", "1*", "0"]`.
pub fn parse_word(v: &Value) -> Result<Vec<EdgeAtom>> {
    match v {
        Value::String(s) => s.split_whitespace().map(parse_atom).collect(),
        Value::Array(xs) => xs
            .iter()
            .map(|x| match x {
                Value::String(s) => parse_atom(s),
                Value::Number(n) => Ok(EdgeAtom::new(n.as_u64().ok_or_else(|| Error::Parse(format!("atom: {n}")))? as u32)),
                other => Err(Error::Parse(format!("atom: {other}"))),
            })
            .collect(),
        other => Err(Error::Parse(format!("word: {other}"))),
    }
}

fn parse_matrix(v: &Value, what: &str) -> Result<Matrix> {
    let rows = v.as_array().ok_or_else(|| Error::Parse(format!("{what}: expected a matrix")))?;
    rows.iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| Error::Parse(format!("{what}: expected rows")))?
                .iter()
                .map(parse_complex)
                .collect()
        })
        .collect()
}

fn matrix_json(m: &Matrix) -> Value {
    Value::Array(m.iter().map(|r| Value::Array(r.iter().map(|&z| complex_to_json(z)).collect())).collect())
}

fn identity(n: usize) -> Matrix {
    (0..n).map(|i| (0..n).map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect()).collect()
}

fn f64_field(params: &Value, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v.as_f64().ok_or_else(|| Error::Parse(format!("field `{key}`: expected a number"))),
    }
}

/// A free-cumulant distribution by name, with its parameters filled in.
/// Names: `semicircular`, `circular`, `haar_unitary`, `gaussian_real`,
/// `constant`, `moment_table`.
pub fn cumulant_spec(name: &str, params: &Value) -> Result<(CumulantSpec, Value)> {
    match name {
        "semicircular" => {
            let cov = params.get("cov").map_or(Ok(identity(1)), |v| parse_matrix(v, "cov"))?;
            let cfg = json!({"type": name, "cov": matrix_json(&cov)});
            Ok((CumulantSpec::semicircular(cov)?, cfg))
        }
        "circular" => {
            let cov = params.get("cov").map_or(Ok(identity(1)), |v| parse_matrix(v, "cov"))?;
            let zero: Matrix = cov.iter().map(|r| vec![Complex64::new(0.0, 0.0); r.len()]).collect();
            let pseudo = params.get("pseudo").map_or(Ok(zero), |v| parse_matrix(v, "pseudo"))?;
            let cfg = json!({"type": name, "cov": matrix_json(&cov), "pseudo": matrix_json(&pseudo)});
            Ok((CumulantSpec::circular(cov, pseudo)?, cfg))
        }
        "haar_unitary" => Ok((CumulantSpec::HaarUnitary, json!({"type": name}))),
        "gaussian_real" => {
            let (mean, var) = (f64_field(params, "mean", 0.0)?, f64_field(params, "var", 1.0)?);
            Ok((CumulantSpec::gaussian_real(mean, var), json!({"type": name, "mean": mean, "var": var})))
        }
        "constant" => {
            let c = params.get("value").map_or(Ok(Complex64::new(1.0, 0.0)), parse_complex)?;
            Ok((CumulantSpec::Constant(c), json!({"type": name, "value": complex_to_json(c)})))
        }
        "moment_table" => {
            let tracial = params.get("tracial").and_then(Value::as_bool).unwrap_or(true);
            let entries = params
                .get("moments")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Parse("moment_table: missing field `moments`".into()))?;
            let mut table = MomentTable { tracial, ..MomentTable::default() };
            let mut cfg = Vec::new();
            for e in entries {
                let w = parse_word(e.get("word").ok_or_else(|| Error::Parse("moment_table: missing field `word`".into()))?)?;
                let v = parse_complex(e.get("value").ok_or_else(|| Error::Parse("moment_table: missing field `value`".into()))?)?;
                cfg.push(json!({"word": w.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" "), "value": complex_to_json(v)}));
                table.table.insert(w, v);
            }
            Ok((CumulantSpec::from_moments(table), json!({"type": name, "tracial": tracial, "moments": cfg})))
        }
        other => Err(Error::UnknownName(format!("distribution {other}"))),
    }
}

/// A resolved `--dist`: the limiting traffic distribution used for
/// predictions and, for random-matrix models, the finite-N ensemble.
#[derive(Debug)]
pub struct Distribution {
    /// Fully-resolved parameters, echoed into reports.
    pub config: Value,
    pub limit: Option<CycleWeightSpec>,
    pub ensemble: Option<(EnsembleKind, usize)>,
}

impl Distribution {
    pub fn limit(&self) -> Result<&CycleWeightSpec> {
        self.limit.as_ref().ok_or_else(|| Error::Precondition("distribution has no limiting traffic state".into()))
    }

    pub fn ensemble_spec(&self, n: usize) -> Result<EnsembleSpec> {
        let (kind, gens) = self.ensemble.clone().ok_or_else(|| Error::Precondition("distribution is not a matrix ensemble".into()))?;
        if let EnsembleKind::Deterministic(ms) = &kind {
            let size = ms[0].nrows();
            return EnsembleSpec::new(kind.clone(), size, gens);
        }
        EnsembleSpec::new(kind, n, gens)
    }
}

/// A scalar shared by all generators, or a list with one value each.
/// Returns the values and whether they came from a single scalar.
fn per_generator<T: Clone>(
    v: Option<&Value>,
    is_scalar: impl Fn(&Value) -> bool,
    parse: impl Fn(&Value) -> Result<T>,
    default: T,
    gens: usize,
) -> Result<(Vec<T>, bool)> {
    match v {
        None => Ok((vec![default; gens], true)),
        Some(x) if is_scalar(x) => Ok((vec![parse(x)?; gens], true)),
        Some(Value::Array(xs)) => Ok((xs.iter().map(&parse).collect::<Result<Vec<_>>>()?, false)),
        Some(x) => Err(Error::Parse(format!("expected a value or a list of values, got {x}"))),
    }
}

fn is_complex_scalar(v: &Value) -> bool {
    v.is_number() || v.as_array().is_some_and(|a| a.len() == 2 && a.iter().all(Value::is_number))
}

pub fn parse_distribution(v: &Value) -> Result<Distribution> {
    let (name, params) = match v {
        Value::String(s) => (s.as_str(), json!({})),
        Value::Object(o) => (
            o.get("type").and_then(Value::as_str).ok_or_else(|| Error::Parse("distribution: missing field `type`".into()))?,
            v.clone(),
        ),
        _ => return Err(Error::Parse("distribution: expected a name or an object".into())),
    };
    let gens = params.get("generators").and_then(Value::as_u64).unwrap_or(1) as usize;
    match name {
        "wigner" => {
            let law: EntryLaw = match params.get("law") {
                None => EntryLaw::Gaussian,
                Some(l) => serde_json::from_value(l.clone()).map_err(|e| parse_err("field `law`", e))?,
            };
            let beta_of = |x: &Value| x.as_f64().ok_or_else(|| Error::Parse(format!("field `beta`: expected a number, got {x}")));
            let (beta, uniform) = per_generator(params.get("beta"), Value::is_number, beta_of, 1.0, gens)?;
            let ensemble = uniform.then(|| (EnsembleKind::Wigner { beta: beta[0], law }, beta.len()));
            let cfg = json!({"type": name, "beta": beta, "law": law, "generators": beta.len()});
            Ok(Distribution { config: cfg, limit: Some(CycleWeightSpec::Wigner { beta }), ensemble })
        }
        "ginibre" => {
            let (zeta, uniform) = per_generator(params.get("zeta"), is_complex_scalar, parse_complex, Complex64::new(0.0, 0.0), gens)?;
            let ensemble = uniform.then(|| (EnsembleKind::Ginibre { zeta: zeta[0] }, zeta.len()));
            let cfg = json!({"type": name, "zeta": zeta.iter().map(|&z| complex_to_json(z)).collect::<Vec<_>>(), "generators": zeta.len()});
            Ok(Distribution { config: cfg, limit: Some(CycleWeightSpec::Ginibre { zeta }), ensemble })
        }
        "haar_unitary" => Ok(Distribution {
            config: json!({"type": name, "generators": gens}),
            limit: Some(CycleWeightSpec::HaarUnitary),
            ensemble: Some((EnsembleKind::HaarUnitary, gens)),
        }),
        "haar_orthogonal" => Ok(Distribution {
            config: json!({"type": name, "generators": gens}),
            limit: Some(CycleWeightSpec::HaarOrthogonal),
            ensemble: Some((EnsembleKind::HaarOrthogonal, gens)),
        }),
        "deterministic" => {
            let files: Vec<String> = params
                .get("files")
                .and_then(Value::as_array)
                .map(|fs| fs.iter().filter_map(|f| f.as_str().map(String::from)).collect())
                .ok_or_else(|| Error::Parse("deterministic: missing field `files`".into()))?;
            let spec = EnsembleSpec::from_csv_files(&files)?;
            Ok(Distribution {
                config: json!({"type": name, "files": files, "N": spec.n()}),
                limit: None,
                ensemble: Some((spec.kind().clone(), files.len())),
            })
        }
        _ => {
            let (spec, cfg) = cumulant_spec(name, &params)?;
            Ok(Distribution { config: cfg, limit: Some(CycleWeightSpec::Ue(spec)), ensemble: None })
        }
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Inline JSON, a path to a JSON file, or a bare name.
pub fn load_json_arg(arg: &str) -> Result<Value> {
    let t = arg.trim_start();
    if t.starts_with('{') || t.starts_with('[') || t.starts_with('"') {
        return serde_json::from_str(arg).map_err(|e| parse_err("inline JSON", e));
    }
    let p = Path::new(arg);
    if p.exists() {
        return read_json(p);
    }
    Ok(Value::String(arg.to_string()))
}

pub fn load_distribution(arg: &str) -> Result<Distribution> {
    parse_distribution(&load_json_arg(arg)?)
}

/// `{"tests": [{"name", "graph", "mode": "all"|"injective", "predicted"}]}`
/// or the bare array.
pub fn parse_custom_items(v: &Value) -> Result<Vec<CustomItem>> {
    let items = v.get("tests").unwrap_or(v).as_array().ok_or_else(|| Error::Parse("custom tests: expected an array".into()))?;
    items
        .iter()
        .enumerate()
        .map(|(k, it)| {
            let graph = it.get("graph").ok_or_else(|| Error::Parse(format!("custom test {k}: missing field `graph`")))?;
            let mode = match it.get("mode").and_then(Value::as_str).unwrap_or("all") {
                "all" => TraceMode::All,
                "injective" => TraceMode::Injective,
                other => return Err(Error::Parse(format!("custom test {k}: field `mode`: unknown `{other}`"))),
            };
            Ok(CustomItem {
                name: it.get("name").and_then(Value::as_str).map_or_else(|| format!("test_{k}"), String::from),
                graph: parse_graph(graph)?.test_graph(),
                mode,
                predicted: it.get("predicted").map(parse_complex).transpose()?,
            })
        })
        .collect()
}
