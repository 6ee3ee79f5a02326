//! Built-in verification suites: finite-N ensembles against the limits
//! predicted by their traffic distributions.

use num_complex::Complex64;
use serde::Serialize;

use super::ensemble::{EnsembleKind, EnsembleSpec, EntryLaw};
use super::mc::{compare_prediction, McKind, McOptions, McReport, McTest};
use super::TraceMode;
use crate::cumulants::{cumulants_to_moments, moments_to_cumulants, GaussianMoments};
use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeAtom, Graph, GraphMonomial, TestGraph};
use crate::operad::GraphPolynomial;
use crate::partitions::catalan;

pub const SUITES: [&str; 5] = ["wigner", "ginibre", "haar", "markov", "custom"];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const EXACT: f64 = 1e-9;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SuiteParams {
    #[serde(rename = "N")]
    pub n: usize,
    pub beta: f64,
    #[serde(serialize_with = "ser_c")]
    pub zeta: Complex64,
    pub law: EntryLaw,
}

fn ser_c<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams { n: 200, beta: 0.5, zeta: ZERO, law: EntryLaw::Gaussian }
    }
}

fn a() -> EdgeAtom {
    EdgeAtom::new(0)
}

/// Two parallel edges `0 → 1` labelled `x`, `y`.
fn parallel_pair(x: EdgeAtom, y: EdgeAtom) -> TestGraph {
    let e = |id, label| Edge { id, src: 0, dst: 1, label };
    TestGraph::new(Graph::new(vec![0, 1], vec![e(0, x), e(1, y)]).unwrap()).unwrap()
}

/// `(a, aᵀ, rDeg a, cDeg a)`.
fn degree_family() -> [(&'static str, GraphMonomial); 4] {
    [
        ("a", GraphMonomial::edge(a())),
        ("aT", GraphMonomial::edge_transpose(a())),
        ("r", GraphMonomial::rdeg(a())),
        ("c", GraphMonomial::cdeg(a())),
    ]
}

pub fn wigner_suite(beta: f64) -> Vec<McTest> {
    let [(_, x), (_, xt), (_, r), (_, cd)] = degree_family();
    let cycle = |k| TestGraph::directed_cycle(&vec![a(); k]);
    let free = |name: &str, ms: Vec<GraphMonomial>| McTest::new(name, McKind::FreeCumulant(ms)).with_reference("free", ZERO, EXACT);
    vec![
        McTest::new("tr_W2", McKind::Trace(cycle(2))).with_reference("variance", c(1.0), EXACT),
        McTest::new("tr_W_WT", McKind::Trace(parallel_pair(a(), a()))).with_reference("beta", c(beta), EXACT),
        McTest::new("tr_W4", McKind::Trace(cycle(4))).with_reference("catalan", c(catalan(2) as f64), EXACT),
        McTest::new("tr_W6", McKind::Trace(cycle(6))).with_reference("catalan", c(catalan(3) as f64), EXACT),
        McTest::new("psi_r_rstar", McKind::Trace(r.product(&r.adjoint()).tilde_delta())).with_reference("variance", c(1.0), EXACT),
        McTest::new("psi_r_r", McKind::Trace(r.product(&r).tilde_delta())).with_reference("beta", c(beta), EXACT),
        free("kappa2[a,r]", vec![x.clone(), r.clone()]),
        free("kappa2[aT,c]", vec![xt.clone(), cd.clone()]),
        free("kappa3[a,a,r]", vec![x.clone(), x.clone(), r.clone()]),
        free("kappa3[a,aT,c]", vec![x.clone(), xt.clone(), cd.clone()]),
        free("kappa4[a,r,a,r]", vec![x.clone(), r.clone(), x, r]),
    ]
}

/// Limiting κ₂ tables of `(a, aᵀ, rDeg a, cDeg a)` for a Ginibre matrix:
/// covariance `κ₂[x_i, x_j*]` and pseudo-covariance `κ₂[x_i, x_j]`.
pub fn ginibre_tables(zeta: Complex64) -> ([[Complex64; 4]; 4], [[Complex64; 4]; 4]) {
    let mut cov = [[ZERO; 4]; 4];
    let mut pseudo = [[ZERO; 4]; 4];
    for i in 0..4 {
        cov[i][i] = c(1.0);
    }
    pseudo[0][1] = zeta;
    pseudo[1][0] = zeta;
    pseudo[2][2] = zeta;
    pseudo[3][3] = zeta;
    (cov, pseudo)
}

pub fn ginibre_suite(zeta: Complex64) -> Vec<McTest> {
    let fam = degree_family();
    let (cov, pseudo) = ginibre_tables(zeta);
    let mut tests = Vec::new();
    for (i, (ni, xi)) in fam.iter().enumerate() {
        for (j, (nj, xj)) in fam.iter().enumerate() {
            tests.push(
                McTest::new(format!("cov[{ni},{nj}*]"), McKind::FreeCumulant(vec![xi.clone(), xj.adjoint()]))
                    .with_reference("table", cov[i][j], EXACT),
            );
            tests.push(
                McTest::new(format!("pseudo[{ni},{nj}]"), McKind::FreeCumulant(vec![xi.clone(), xj.clone()]))
                    .with_reference("table", pseudo[i][j], EXACT),
            );
        }
    }
    tests
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

pub fn haar_suite() -> Vec<McTest> {
    let u = a();
    let alternating = |m: usize| TestGraph::directed_cycle(&(0..2 * m).map(|k| if k % 2 == 0 { u } else { u.adjoint() }).collect::<Vec<_>>());
    let mut sum = GraphPolynomial::monomial(GraphMonomial::edge(u));
    sum.add_term(c(1.0), GraphMonomial::edge(u.adjoint()));
    let mut tests = vec![
        McTest::new("injective_alt_4cycle", McKind::Injective(alternating(2))).with_reference("kappa4", c(-1.0), EXACT),
        McTest::new("injective_alt_6cycle", McKind::Injective(alternating(3))).with_reference("kappa6", c(2.0), EXACT),
    ];
    for n in 1..=3 {
        tests.push(
            McTest::new(format!("psi_(u+u*)^{}", 2 * n), McKind::PowerTrace { base: sum.clone(), power: 2 * n })
                .with_reference("binomial", c(binomial(2 * n as u64, n as u64) as f64), EXACT),
        );
    }
    tests
}

/// Moments of `SC(0,1) ⊞ N(0,1)`: free cumulants add, with the Gaussian's
/// free cumulants obtained from its classical moments.
pub fn free_convolution_sc_gaussian(k: usize) -> Result<Complex64> {
    let gauss = GaussianMoments { mean: 0.0, var: 1.0 };
    let kappa = |w: &[EdgeAtom]| -> Result<Complex64> {
        let sc = if w.len() == 2 { c(1.0) } else { ZERO };
        Ok(sc + moments_to_cumulants(gauss, w)?)
    };
    cumulants_to_moments(kappa, &vec![a(); k])
}

pub fn markov_suite() -> Result<Vec<McTest>> {
    let mut p = GraphPolynomial::monomial(GraphMonomial::edge(a()));
    p.add_term(c(-1.0), GraphMonomial::rdeg(a()));
    (1..=6)
        .map(|k| {
            Ok(McTest::new(format!("tr_(W-rDeg W)^{k}"), McKind::PowerTrace { base: p.clone(), power: k })
                .with_reference("sc_plus_gaussian", free_convolution_sc_gaussian(k)?, EXACT))
        })
        .collect()
}

/// A user-supplied test graph.
#[derive(Clone, Debug)]
pub struct CustomItem {
    pub name: String,
    pub graph: TestGraph,
    pub mode: TraceMode,
    pub predicted: Option<Complex64>,
}

pub fn custom_suite(items: &[CustomItem]) -> Vec<McTest> {
    items
        .iter()
        .map(|it| {
            let kind = match it.mode {
                TraceMode::All => McKind::Trace(it.graph.clone()),
                TraceMode::Injective => McKind::Injective(it.graph.clone()),
            };
            let t = McTest::new(it.name.clone(), kind);
            match it.predicted {
                Some(p) => t.with_prediction(p),
                None => t,
            }
        })
        .collect()
}

/// Runs a built-in suite (`custom` needs its items and goes through
/// [`compare_prediction`] directly).
pub fn run_suite(name: &str, params: &SuiteParams, opts: &McOptions) -> Result<McReport> {
    let (tests, kind) = match name {
        "wigner" => (wigner_suite(params.beta), EnsembleKind::Wigner { beta: params.beta, law: params.law }),
        "ginibre" => (ginibre_suite(params.zeta), EnsembleKind::Ginibre { zeta: params.zeta }),
        "haar" => (haar_suite(), EnsembleKind::HaarUnitary),
        "markov" => (markov_suite()?, EnsembleKind::Wigner { beta: 1.0, law: params.law }),
        _ => return Err(Error::UnknownName(format!("suite {name}"))),
    };
    compare_prediction(name, &tests, &EnsembleSpec::new(kind, params.n, 1)?, opts)
}
