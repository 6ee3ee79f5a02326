//! Monte Carlo estimation of traffic quantities and comparison with their
//! combinatorial limits.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use super::cmat::CMat;
use super::ensemble::{sample_ensemble, EnsembleSpec};
use super::{eval_monomial, eval_polynomial, trace_expansion, trace_with_stats, TraceMode};
use crate::cumulants::{FnMoments, FreeCumulants};
use crate::error::{Error, Result};
use crate::graph::{CanonicalKey, GraphMonomial, TestGraph};
use crate::operad::GraphPolynomial;
use crate::traffic::{mixed_free_cumulant, StateOptions, TrafficEvaluator};

/// The per-sample statistic whose mean is estimated.
#[derive(Clone, Debug)]
pub enum McKind {
    /// `(1/N) Σ_φ` over all vertex maps; limit τ[T].
    Trace(TestGraph),
    /// Over injective vertex maps; limit τ⁰[T].
    Injective(TestGraph),
    /// Free cumulant of the matrices of the monomials; limit κ_n w.r.t. ψ.
    FreeCumulant(Vec<GraphMonomial>),
    /// `(1/N) Tr(P^k)`; limit ψ(P^k).
    PowerTrace { base: GraphPolynomial, power: usize },
}

/// A second, independent oracle for the prediction.
#[derive(Clone, Debug, Serialize)]
pub struct Reference {
    pub name: String,
    #[serde(serialize_with = "ser_c")]
    pub value: Complex64,
    pub tol: f64,
}

#[derive(Clone, Debug)]
pub struct McTest {
    pub name: String,
    pub kind: McKind,
    /// Overrides the prediction computed from the ensemble's limit.
    pub predicted: Option<Complex64>,
    pub reference: Option<Reference>,
}

impl McTest {
    pub fn new(name: impl Into<String>, kind: McKind) -> Self {
        McTest { name: name.into(), kind, predicted: None, reference: None }
    }

    pub fn with_reference(mut self, name: impl Into<String>, value: Complex64, tol: f64) -> Self {
        self.reference = Some(Reference { name: name.into(), value, tol });
        self
    }

    pub fn with_prediction(mut self, value: Complex64) -> Self {
        self.predicted = Some(value);
        self
    }

    fn kind_name(&self) -> &'static str {
        match self.kind {
            McKind::Trace(_) => "trace",
            McKind::Injective(_) => "injective",
            McKind::FreeCumulant(_) => "free_cumulant",
            McKind::PowerTrace { .. } => "power_trace",
        }
    }
}

/// Verdict: `|mean − predicted| ≤ k_sigma·stderr + bias_c/N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerance {
    pub k_sigma: f64,
    pub bias_c: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { k_sigma: 3.0, bias_c: 10.0 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct McOptions {
    pub samples: usize,
    pub seed: u64,
    pub tolerance: Tolerance,
    pub partition_cap: usize,
    /// Thread count; `None` uses the global pool. Never affects results.
    pub workers: Option<usize>,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            samples: 200,
            seed: 0,
            tolerance: Tolerance::default(),
            partition_cap: crate::traffic::partition_cap_from_env(),
            workers: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    #[serde(serialize_with = "ser_c")]
    pub mean: Complex64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[Complex64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<Complex64>() / n as f64;
        let var = if n > 1 { xs.iter().map(|x| (x - mean).norm_sqr()).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        Estimate { mean, stderr: (var / n as f64).sqrt(), samples: n }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReferenceCheck {
    pub name: String,
    #[serde(serialize_with = "ser_c")]
    pub value: Complex64,
    pub deviation: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct McEntry {
    pub name: String,
    pub kind: &'static str,
    #[serde(serialize_with = "ser_c")]
    pub predicted: Complex64,
    #[serde(serialize_with = "ser_c")]
    pub mean: Complex64,
    pub stderr: f64,
    pub samples: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub allowance: f64,
    pub deviation: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceCheck>,
}

#[derive(Clone, Debug, Serialize)]
pub struct McReport {
    pub suite: String,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    pub samples: usize,
    pub tolerance: Tolerance,
    pub ensemble: Value,
    pub entries: Vec<McEntry>,
    pub all_pass: bool,
}

impl McReport {
    /// One line per test.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            s.push_str(&format!(
                "{} {:<28} predicted {:>+.6}{:+.6}i  mean {:>+.6}{:+.6}i  ± {:.2e}  dev {:.2e} / {:.2e}",
                if e.pass { "PASS" } else { "FAIL" },
                e.name,
                e.predicted.re,
                e.predicted.im,
                e.mean.re,
                e.mean.im,
                e.stderr,
                e.deviation,
                e.allowance
            ));
            if let Some(r) = &e.reference {
                s.push_str(&format!("  [{} {:.1e}]", r.name, r.deviation));
            }
            s.push('\n');
        }
        s
    }
}

fn ser_c<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

/// `(1/N) Tr(M_1 ⋯ M_k)`, splitting the product in halves.
fn normalized_trace_of_product(ms: &[&CMat]) -> Complex64 {
    let n = ms[0].nrows() as f64;
    if ms.len() == 1 {
        return ms[0].trace() / n;
    }
    let h = ms.len() / 2;
    let prod = |part: &[&CMat]| part[1..].iter().fold(part[0].clone(), |acc, m| acc.matmul(m));
    prod(&ms[..h]).trace_of_product(&prod(&ms[h..])) / n
}

fn power_traces(p: &CMat, max: usize) -> Vec<Complex64> {
    // Tr(P^k) = Tr(P^⌈k/2⌉ P^⌊k/2⌋)
    let n = p.nrows() as f64;
    let mut pows = vec![CMat::identity(p.nrows()), p.clone()];
    while pows.len() <= max.div_ceil(2) {
        pows.push(pows.last().unwrap().matmul(p));
    }
    (0..=max).map(|k| pows[k.div_ceil(2)].trace_of_product(&pows[k / 2]) / n).collect()
}

/// Work shared by all samples: distinct graphs to trace, monomials to
/// evaluate and polynomials to raise to powers, with each test expressed
/// in terms of them.
struct Plan {
    classes: Vec<TestGraph>,
    monomials: Vec<GraphMonomial>,
    bases: Vec<(GraphPolynomial, usize)>,
    steps: Vec<Step>,
}

enum Step {
    Linear(Vec<(usize, f64)>),
    Cumulant(Vec<usize>),
    Power { base: usize, power: usize },
}

impl Plan {
    fn new(tests: &[McTest], cap: usize) -> Result<Self> {
        let mut plan = Plan { classes: Vec::new(), monomials: Vec::new(), bases: Vec::new(), steps: Vec::new() };
        let mut class_ix: HashMap<CanonicalKey, usize> = HashMap::new();
        let mut mono_ix: HashMap<CanonicalKey, usize> = HashMap::new();
        for t in tests {
            let step = match &t.kind {
                McKind::Trace(g) | McKind::Injective(g) => {
                    let mode = if matches!(t.kind, McKind::Trace(_)) { TraceMode::All } else { TraceMode::Injective };
                    let mut terms = Vec::new();
                    for (q, w) in trace_expansion(g, mode, cap)? {
                        let i = match q.canonical_key() {
                            Ok(k) => *class_ix.entry(k).or_insert_with(|| {
                                plan.classes.push(q.clone());
                                plan.classes.len() - 1
                            }),
                            Err(_) => {
                                plan.classes.push(q);
                                plan.classes.len() - 1
                            }
                        };
                        terms.push((i, w));
                    }
                    Step::Linear(terms)
                }
                McKind::FreeCumulant(ms) => {
                    let mut ix = Vec::with_capacity(ms.len());
                    for m in ms {
                        ix.push(*mono_ix.entry(m.canonical_key()?).or_insert_with(|| {
                            plan.monomials.push(m.clone());
                            plan.monomials.len() - 1
                        }));
                    }
                    Step::Cumulant(ix)
                }
                McKind::PowerTrace { base, power } => {
                    let i = match plan.bases.iter().position(|(b, _)| b == base) {
                        Some(i) => i,
                        None => {
                            plan.bases.push((base.clone(), 0));
                            plan.bases.len() - 1
                        }
                    };
                    plan.bases[i].1 = plan.bases[i].1.max(*power);
                    Step::Power { base: i, power: *power }
                }
            };
            plan.steps.push(step);
        }
        Ok(plan)
    }

    fn sample(&self, gens: &[CMat]) -> Result<Vec<Complex64>> {
        let traces = self.classes.iter().map(|g| Ok(trace_with_stats(g, gens)?.0)).collect::<Result<Vec<_>>>()?;
        let mats = self.monomials.iter().map(|m| eval_monomial(m, gens)).collect::<Result<Vec<_>>>()?;
        let powers = self
            .bases
            .iter()
            .map(|(b, max)| Ok(power_traces(&eval_polynomial(b, gens)?, *max)))
            .collect::<Result<Vec<_>>>()?;
        self.steps
            .iter()
            .map(|s| match s {
                Step::Linear(terms) => Ok(terms.iter().map(|&(i, w)| traces[i] * w).sum()),
                Step::Cumulant(ix) => {
                    let fc = FreeCumulants::new(FnMoments(|w: &[usize]| {
                        Ok(normalized_trace_of_product(&w.iter().map(|&i| &mats[ix[i]]).collect::<Vec<_>>()))
                    }));
                    fc.kappa(&(0..ix.len()).collect::<Vec<_>>())
                }
                Step::Power { base, power } => Ok(powers[*base][*power]),
            })
            .collect()
    }
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Sample mean and standard error of every test's statistic. Sample `i`
/// draws from substream `(seed, i)` and results are reduced in index
/// order, so the output does not depend on the worker count.
pub fn mc_estimate(tests: &[McTest], ensemble: &EnsembleSpec, opts: &McOptions) -> Result<Vec<Estimate>> {
    if opts.samples < 2 {
        return Err(Error::Precondition("at least two samples are required".into()));
    }
    let plan = Plan::new(tests, opts.partition_cap)?;
    let per_sample: Vec<Result<Vec<Complex64>>> = with_workers(opts.workers, || {
        (0..opts.samples as u64)
            .into_par_iter()
            .map(|i| plan.sample(&sample_ensemble(ensemble, opts.seed, i)))
            .collect()
    })?;
    let per_sample = per_sample.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((0..tests.len())
        .map(|k| Estimate::from_samples(&per_sample.iter().map(|s| s[k]).collect::<Vec<_>>()))
        .collect())
}

/// Large-N value of a test under the ensemble's limiting distribution.
pub fn predict(test: &McTest, ev: Option<&TrafficEvaluator<'_>>) -> Result<Complex64> {
    if let Some(p) = test.predicted {
        return Ok(p);
    }
    let ev = ev.ok_or_else(|| Error::Precondition(format!("no prediction available for {}", test.name)))?;
    match &test.kind {
        McKind::Trace(t) => ev.state(t),
        McKind::Injective(t) => ev.injective(t),
        McKind::FreeCumulant(ms) => mixed_free_cumulant(ev, ms),
        McKind::PowerTrace { base, power } => ev.trace_psi(&base.pow(*power)),
    }
}

/// Runs the tests against the ensemble and judges each estimate against
/// its prediction (and, when given, the prediction against a reference).
pub fn compare_prediction(suite: &str, tests: &[McTest], ensemble: &EnsembleSpec, opts: &McOptions) -> Result<McReport> {
    let limit = ensemble.limit_spec();
    let ev = limit.as_ref().map(|s| {
        TrafficEvaluator::with_options(s, StateOptions { partition_cap: opts.partition_cap, ..StateOptions::default() })
    });
    let predicted = tests.iter().map(|t| predict(t, ev.as_ref())).collect::<Result<Vec<_>>>()?;
    let estimates = mc_estimate(tests, ensemble, opts)?;
    let n = ensemble.n();
    let entries: Vec<McEntry> = tests
        .iter()
        .zip(predicted)
        .zip(estimates)
        .map(|((t, p), e)| {
            let allowance = opts.tolerance.k_sigma * e.stderr + opts.tolerance.bias_c / n as f64;
            let deviation = (e.mean - p).norm();
            let reference = t.reference.as_ref().map(|r| {
                let d = (r.value - p).norm();
                ReferenceCheck { name: r.name.clone(), value: r.value, deviation: d, tol: r.tol, pass: d <= r.tol }
            });
            let pass = deviation <= allowance && reference.as_ref().is_none_or(|r| r.pass);
            McEntry {
                name: t.name.clone(),
                kind: t.kind_name(),
                predicted: p,
                mean: e.mean,
                stderr: e.stderr,
                samples: e.samples,
                n,
                allowance,
                deviation,
                pass,
                reference,
            }
        })
        .collect();
    let all_pass = entries.iter().all(|e| e.pass);
    Ok(McReport {
        suite: suite.to_string(),
        seed: opts.seed,
        n,
        samples: opts.samples,
        tolerance: opts.tolerance,
        ensemble: ensemble.describe(),
        entries,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeAtom;
    use crate::matrix_lab::{EnsembleKind, EntryLaw};

    fn wigner(beta: f64, n: usize) -> EnsembleSpec {
        EnsembleSpec::new(EnsembleKind::Wigner { beta, law: EntryLaw::Gaussian }, n, 1).unwrap()
    }

    #[test]
    fn estimate_statistics() {
        let e = Estimate::from_samples(&[Complex64::new(1.0, 0.0), Complex64::new(3.0, 0.0)]);
        assert_eq!(e.mean, Complex64::new(2.0, 0.0));
        assert!((e.stderr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_traces_match_direct_products() {
        let gens = sample_ensemble(&wigner(0.3, 6), 1, 0);
        let p = &gens[0];
        let tr = power_traces(p, 5);
        let mut acc = CMat::identity(6);
        for (k, t) in tr.iter().enumerate() {
            assert!((t - acc.trace() / 6.0).norm() < 1e-12, "k = {k}");
            acc = acc.matmul(p);
        }
        let trip = normalized_trace_of_product(&[p, p, p]);
        assert!((trip - tr[3]).norm() < 1e-12);
    }

    #[test]
    fn wigner_two_cycles() {
        let a = EdgeAtom::new(0);
        let tests = vec![
            McTest::new("loop", McKind::Trace(TestGraph::directed_cycle(&[a]))),
            McTest::new("two_cycle", McKind::Trace(TestGraph::directed_cycle(&[a, a]))),
        ];
        let opts = McOptions { samples: 40, seed: 7, ..McOptions::default() };
        let r = compare_prediction("t", &tests, &wigner(0.5, 60), &opts).unwrap();
        assert!(r.all_pass, "{}", r.summary());
        assert!((r.entries[1].predicted - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn results_do_not_depend_on_workers() {
        let a = EdgeAtom::new(0);
        let tests = vec![McTest::new("w4", McKind::Trace(TestGraph::directed_cycle(&[a; 4])))];
        let run = |w| {
            let opts = McOptions { samples: 8, seed: 3, workers: Some(w), ..McOptions::default() };
            mc_estimate(&tests, &wigner(1.0, 20), &opts).unwrap()
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn too_few_samples() {
        let opts = McOptions { samples: 1, ..McOptions::default() };
        assert!(mc_estimate(&[], &wigner(0.0, 4), &opts).is_err());
    }
}
