//! Graphs of matrices at finite N and Monte Carlo comparison with the
//! combinatorial large-N predictions.

mod cmat;
mod contract;
mod ensemble;
mod mc;
mod suites;

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use cmat::{CMat, CVec};
pub use contract::{contract, Contracted, ContractionStats};
pub use ensemble::{load_matrix_csv, sample_ensemble, EnsembleKind, EnsembleSpec, EntryLaw};
pub use mc::{compare_prediction, mc_estimate, Estimate, McEntry, McKind, McOptions, McReport, McTest, Reference, ReferenceCheck, Tolerance};
pub use suites::{
    custom_suite, free_convolution_sc_gaussian, ginibre_suite, ginibre_tables, haar_suite, markov_suite, run_suite, wigner_suite, CustomItem,
    SuiteParams, SUITES,
};

use crate::error::{Error, Result};
use crate::graph::{CanonicalKey, GraphMonomial, LabeledGraph, TestGraph};
use crate::operad::{GraphOperation, GraphPolynomial};
use crate::partitions::all_partitions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMode {
    /// Sum over all vertex maps.
    All,
    /// Sum over injective vertex maps.
    Injective,
}

fn check_dims(mats: &[CMat]) -> Result<usize> {
    let n = mats.first().map_or(0, |m| m.nrows());
    if n == 0 || mats.iter().any(|m| m.nrows() != n || m.ncols() != n) {
        return Err(Error::DimensionMismatch("matrices must be square of one common size".into()));
    }
    Ok(n)
}

/// Entry `(i, j)` sums over vertex maps sending the output to `i` and the
/// input to `j` the product of `A_{o(e)}(φ(target), φ(source))`.
pub fn eval_graph_op(op: &GraphOperation, mats: &[CMat]) -> Result<CMat> {
    if mats.len() != op.arity() {
        return Err(Error::ArityMismatch { expected: op.arity(), got: mats.len() });
    }
    let n = check_dims(mats)?;
    let g = op.graph();
    let edges: Vec<(usize, usize, &CMat)> = g
        .edges()
        .iter()
        .map(|e| {
            let k = op.order().iter().position(|&id| id == e.id).expect("ordering is a bijection");
            (g.idx(e.src), g.idx(e.dst), &mats[k])
        })
        .collect();
    let free = (g.idx(op.output()), g.idx(op.input()));
    Ok(contract(g.num_vertices(), &edges, Some(free), n).0.into_matrix(n))
}

/// Generator matrices and their adjoints, computed once.
struct Atoms<'a> {
    gens: &'a [CMat],
    adj: Vec<Option<CMat>>,
}

impl<'a> Atoms<'a> {
    fn new(gens: &'a [CMat], g: &LabeledGraph) -> Result<Self> {
        let mut adj = vec![None; gens.len()];
        for e in g.edges() {
            let k = e.label.gen as usize;
            if k >= gens.len() {
                return Err(Error::UnknownGenerator(e.label.gen));
            }
            if e.label.star && adj[k].is_none() {
                adj[k] = Some(gens[k].adjoint());
            }
        }
        Ok(Atoms { gens, adj })
    }

    fn edges(&self, g: &LabeledGraph) -> Vec<(usize, usize, &CMat)> {
        g.edges()
            .iter()
            .map(|e| {
                let k = e.label.gen as usize;
                let m = if e.label.star { self.adj[k].as_ref().unwrap() } else { &self.gens[k] };
                (g.idx(e.src), g.idx(e.dst), m)
            })
            .collect()
    }
}

pub fn eval_monomial(m: &GraphMonomial, gens: &[CMat]) -> Result<CMat> {
    let n = check_dims(gens)?;
    let g = m.graph();
    let atoms = Atoms::new(gens, g)?;
    let free = (g.idx(m.output()), g.idx(m.input()));
    Ok(contract(g.num_vertices(), &atoms.edges(g), Some(free), n).0.into_matrix(n))
}

pub fn eval_polynomial(p: &GraphPolynomial, gens: &[CMat]) -> Result<CMat> {
    let n = check_dims(gens)?;
    let mut acc = CMat::real(nalgebra::DMatrix::zeros(n, n));
    for (c, m) in p.terms() {
        acc = acc.add(&eval_monomial(m, gens)?.scale(c));
    }
    Ok(acc)
}

/// `(1/N) Σ_φ Π_e A_e(φ(target), φ(source))` with the contraction cost.
pub fn trace_with_stats(t: &TestGraph, gens: &[CMat]) -> Result<(Complex64, ContractionStats)> {
    let n = check_dims(gens)?;
    let g = t.graph();
    let atoms = Atoms::new(gens, g)?;
    let (c, stats) = contract(g.num_vertices(), &atoms.edges(g), None, n);
    match c {
        Contracted::Scalar(s) => Ok((s / n as f64, stats)),
        _ => unreachable!("closed graph"),
    }
}

/// Memo of quotient traces for one set of matrices.
#[derive(Default)]
pub struct TraceCache {
    traces: HashMap<CanonicalKey, Complex64>,
}

impl TraceCache {
    pub fn trace(&mut self, t: &TestGraph, gens: &[CMat]) -> Result<Complex64> {
        let key = t.canonical_key().ok();
        if let Some(v) = key.as_ref().and_then(|k| self.traces.get(k)) {
            return Ok(*v);
        }
        let v = trace_with_stats(t, gens)?.0;
        if let Some(k) = key {
            self.traces.insert(k, v);
        }
        Ok(v)
    }
}

/// Normalised trace over all maps, or over injective maps by Möbius
/// inversion over vertex partitions (bounded by `cap`).
pub fn trace_test_graph(t: &TestGraph, gens: &[CMat], mode: TraceMode, cap: usize) -> Result<Complex64> {
    trace_test_graph_cached(t, gens, mode, cap, &mut TraceCache::default())
}

pub fn trace_test_graph_cached(
    t: &TestGraph,
    gens: &[CMat],
    mode: TraceMode,
    cap: usize,
    cache: &mut TraceCache,
) -> Result<Complex64> {
    match mode {
        TraceMode::All => cache.trace(t, gens),
        TraceMode::Injective => {
            if t.num_vertices() > cap {
                return Err(Error::CapExceeded { what: "partition ground set", size: t.num_vertices(), cap });
            }
            let mut total = Complex64::new(0.0, 0.0);
            for pi in all_partitions(t.num_vertices())? {
                let mu = pi.mobius_from_zero() as f64;
                total += cache.trace(&t.quotient_by_labels(pi.labels()), gens)? * mu;
            }
            Ok(total)
        }
    }
}

/// The trace of `t` as a combination of all-maps traces of distinct
/// graphs: `t` itself, or its quotients weighted by Möbius coefficients
/// (isomorphic quotients merged, cancelled ones dropped).
pub fn trace_expansion(t: &TestGraph, mode: TraceMode, cap: usize) -> Result<Vec<(TestGraph, f64)>> {
    match mode {
        TraceMode::All => Ok(vec![(t.clone(), 1.0)]),
        TraceMode::Injective => {
            if t.num_vertices() > cap {
                return Err(Error::CapExceeded { what: "partition ground set", size: t.num_vertices(), cap });
            }
            let mut index: HashMap<CanonicalKey, usize> = HashMap::new();
            let mut terms: Vec<(TestGraph, f64)> = Vec::new();
            for pi in all_partitions(t.num_vertices())? {
                let mu = pi.mobius_from_zero() as f64;
                let q = t.quotient_by_labels(pi.labels());
                match q.canonical_key() {
                    Ok(k) => match index.get(&k) {
                        Some(&i) => terms[i].1 += mu,
                        None => {
                            index.insert(k, terms.len());
                            terms.push((q, mu));
                        }
                    },
                    Err(_) => terms.push((q, mu)),
                }
            }
            terms.retain(|(_, w)| *w != 0.0);
            Ok(terms)
        }
    }
}
