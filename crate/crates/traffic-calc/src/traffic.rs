//! Traffic states of test graphs for cactus-type distributions.
//!
//! The injective state τ⁰ vanishes off cacti and factorises over pads;
//! `τ[T] = Σ_π τ⁰[T^π]`. The pruned evaluator first splits off
//! two-edge-connected pieces hanging at one vertex, merges 3-edge-connected
//! vertex pairs (neither changes τ), and only then enumerates partitions,
//! abandoning branches that already separate a 3-edge-connected pair.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use num_complex::Complex64;

use crate::cumulants::{haar_kappa, CumulantSpec, FreeCumulants, FnMoments};
use crate::error::{Error, Result};
use crate::graph::flow_indices;
use crate::graph::{cactus_classify, canonical_form_with_cap, CanonMode, CanonicalKey, CANON_CAP, EdgeAtom, GraphMonomial, LabeledGraph, Pad, TestGraph};
use crate::operad::{embed_word, GraphPolynomial};
use crate::partitions::{all_partitions, SetPartition, HARD_MAX};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default partition cap; `TRAFFIC_CALC_CAP` overrides it (clamped to the
/// hard maximum).
pub const DEFAULT_PARTITION_CAP: usize = 10;

pub fn partition_cap_from_env() -> usize {
    std::env::var("TRAFFIC_CALC_CAP")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .map_or(DEFAULT_PARTITION_CAP, |c| c.min(HARD_MAX))
}

/// How a pad (one cycle of a cactus) is weighted.
#[derive(Debug)]
pub enum CycleWeightSpec {
    /// Unitarily invariant: directed pads get the free cumulant of their
    /// labels, read against the arrows; other pads vanish.
    Ue(CumulantSpec),
    /// Wigner matrices with pseudo-variance β per generator.
    Wigner { beta: Vec<f64> },
    /// Non-Hermitian matrices with pseudo-variance ζ per generator.
    Ginibre { zeta: Vec<Complex64> },
    HaarUnitary,
    /// As `HaarUnitary`, after replacing reversed edges by edges with the
    /// adjoint label.
    HaarOrthogonal,
}

/// Labels of a pad in traversal order with their orientation flags.
pub fn cycle_word(g: &LabeledGraph, pad: &Pad) -> Vec<(EdgeAtom, bool)> {
    pad.edges.iter().zip(&pad.along).map(|(&k, &a)| (g.edges()[k].label, a)).collect()
}

fn two_cycle_gen(word: &[(EdgeAtom, bool)]) -> Option<u32> {
    (word.len() == 2 && word[0].0.gen == word[1].0.gen).then_some(word[0].0.gen)
}

impl CycleWeightSpec {
    /// Weight of a single pad given as `(label, traversed along its arrow)`.
    pub fn pad_weight(&self, word: &[(EdgeAtom, bool)]) -> Result<Complex64> {
        match self {
            CycleWeightSpec::Ue(spec) => match directed_labels(word) {
                Some(w) => spec.kappa(&w),
                None => Ok(ZERO),
            },
            CycleWeightSpec::HaarUnitary => Ok(directed_labels(word).map_or(ZERO, |w| haar_kappa(&w))),
            CycleWeightSpec::HaarOrthogonal => {
                let along: Vec<(EdgeAtom, bool)> =
                    word.iter().map(|&(a, al)| if al { (a, true) } else { (a.adjoint(), true) }).collect();
                Ok(haar_kappa(&directed_labels(&along).unwrap()))
            }
            CycleWeightSpec::Wigner { beta } => {
                let Some(g) = two_cycle_gen(word) else { return Ok(ZERO) };
                let b = *beta.get(g as usize).ok_or(Error::UnknownGenerator(g))?;
                // equal flags: a directed 2-cycle; unequal: parallel edges
                Ok(if word[0].1 == word[1].1 { ONE } else { Complex64::new(b, 0.0) })
            }
            CycleWeightSpec::Ginibre { zeta } => {
                let Some(g) = two_cycle_gen(word) else { return Ok(ZERO) };
                let z = *zeta.get(g as usize).ok_or(Error::UnknownGenerator(g))?;
                // a starred edge is a conjugated edge pointing the other way
                let norm: Vec<(bool, bool)> = word.iter().map(|&(a, al)| (al != a.star, a.star)).collect();
                if norm[0].0 == norm[1].0 {
                    return Ok(ZERO);
                }
                Ok(match (norm[0].1, norm[1].1) {
                    (false, false) => z,
                    (true, true) => z.conj(),
                    _ => ONE,
                })
            }
        }
    }
}

/// For a directed pad, the labels in the order the cumulant reads them:
/// against the arrows.
fn directed_labels(word: &[(EdgeAtom, bool)]) -> Option<Vec<EdgeAtom>> {
    if word.iter().all(|x| x.1) {
        Some(word.iter().rev().map(|x| x.0).collect())
    } else if word.iter().all(|x| !x.1) {
        Some(word.iter().map(|x| x.0).collect())
    } else {
        None
    }
}

/// τ⁰[T]: zero unless `T` is a cactus, otherwise the product of pad weights.
pub fn injective_state(t: &TestGraph, spec: &CycleWeightSpec) -> Result<Complex64> {
    injective_of_graph(t.graph(), spec)
}

fn injective_of_graph(g: &LabeledGraph, spec: &CycleWeightSpec) -> Result<Complex64> {
    let class = cactus_classify(g);
    if !class.is_cactus() {
        return Ok(ZERO);
    }
    let mut prod = ONE;
    for pad in class.pads() {
        prod *= spec.pad_weight(&cycle_word(g, pad))?;
        if prod == ZERO {
            break;
        }
    }
    Ok(prod)
}

/// `Σ_π μ(0̂, π) state(T^π)` for an arbitrary state.
pub fn injective_transform<F>(t: &TestGraph, cap: usize, mut state: F) -> Result<Complex64>
where
    F: FnMut(&TestGraph) -> Result<Complex64>,
{
    check_cap(t.num_vertices(), cap)?;
    let mut total = ZERO;
    for pi in all_partitions(t.num_vertices())? {
        let mu = pi.mobius_from_zero();
        total += state(&t.quotient_by_labels(pi.labels()))? * mu as f64;
    }
    Ok(total)
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::CapExceeded { what: "partition ground set", size: n, cap });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SumMode {
    /// Reductions plus pruned enumeration.
    Pruned,
    /// Plain sum over all partitions of the input.
    Exhaustive,
}

#[derive(Clone, Copy, Debug)]
pub struct StateOptions {
    pub partition_cap: usize,
    pub mode: SumMode,
}

impl Default for StateOptions {
    fn default() -> Self {
        StateOptions { partition_cap: partition_cap_from_env(), mode: SumMode::Pruned }
    }
}

/// Evaluates traffic states under one spec, caching by canonical form.
pub struct TrafficEvaluator<'a> {
    spec: &'a CycleWeightSpec,
    opts: StateOptions,
    cache: Mutex<HashMap<CanonicalKey, Complex64>>,
    visited: AtomicU64,
}

impl<'a> TrafficEvaluator<'a> {
    pub fn new(spec: &'a CycleWeightSpec) -> Self {
        Self::with_options(spec, StateOptions::default())
    }

    pub fn with_options(spec: &'a CycleWeightSpec, opts: StateOptions) -> Self {
        TrafficEvaluator { spec, opts, cache: Mutex::new(HashMap::new()), visited: AtomicU64::new(0) }
    }

    pub fn spec(&self) -> &CycleWeightSpec {
        self.spec
    }

    pub fn options(&self) -> StateOptions {
        self.opts
    }

    /// Partitions whose quotient was evaluated so far.
    pub fn partitions_visited(&self) -> u64 {
        self.visited.load(Ordering::Relaxed)
    }

    /// τ[T].
    pub fn state(&self, t: &TestGraph) -> Result<Complex64> {
        match self.opts.mode {
            SumMode::Exhaustive => self.exhaustive(t.graph()),
            SumMode::Pruned => self.pruned(t.graph().clone()),
        }
    }

    pub fn injective(&self, t: &TestGraph) -> Result<Complex64> {
        injective_state(t, self.spec)
    }

    /// ψ(t) = τ[Δ̃(t)].
    pub fn psi(&self, m: &GraphMonomial) -> Result<Complex64> {
        self.state(&m.tilde_delta())
    }

    pub fn trace_psi(&self, p: &GraphPolynomial) -> Result<Complex64> {
        let mut total = ZERO;
        for (c, m) in p.terms() {
            total += c * self.psi(m)?;
        }
        Ok(total)
    }

    /// ψ on the word algebra.
    pub fn psi_word(&self, w: &[EdgeAtom]) -> Result<Complex64> {
        self.psi(&embed_word(w))
    }

    fn exhaustive(&self, g: &LabeledGraph) -> Result<Complex64> {
        check_cap(g.num_vertices(), self.opts.partition_cap)?;
        let mut total = ZERO;
        for pi in all_partitions(g.num_vertices())? {
            self.visited.fetch_add(1, Ordering::Relaxed);
            total += injective_of_graph(&g.quotient_by_labels(pi.labels()), self.spec)?;
        }
        Ok(total)
    }

    fn pruned(&self, g: LabeledGraph) -> Result<Complex64> {
        let key = canonical_form_with_cap(&g, None, CanonMode::Iso, CANON_CAP).ok();
        if let Some(k) = &key {
            if let Some(&v) = self.cache.lock().unwrap().get(k) {
                return Ok(v);
            }
        }
        let v = self.pruned_uncached(g)?;
        if let Some(k) = key {
            self.cache.lock().unwrap().insert(k, v);
        }
        Ok(v)
    }

    fn pruned_uncached(&self, mut g: LabeledGraph) -> Result<Complex64> {
        let mut factor = ONE;
        loop {
            // loops are two-edge-connected pieces hanging at a vertex
            let loops: Vec<usize> = (0..g.num_edges()).filter(|&k| g.edges()[k].is_loop()).collect();
            if !loops.is_empty() {
                for &k in &loops {
                    factor *= self.spec.pad_weight(&[(g.edges()[k].label, true)])?;
                }
                if factor == ZERO {
                    return Ok(ZERO);
                }
                g = g.without(&loops, &[]);
                continue;
            }
            if g.num_edges() == 0 {
                return Ok(factor);
            }
            if let Some((piece, rest)) = split_hanging_tec(&g) {
                factor *= self.pruned(piece)?;
                if factor == ZERO {
                    return Ok(ZERO);
                }
                g = rest;
                continue;
            }
            if let Some((v, w)) = three_connected_pair(&g) {
                g = g.quotient_by_labels(&merge_labels(g.num_vertices(), v, w));
                continue;
            }
            break;
        }
        check_cap(g.num_vertices(), self.opts.partition_cap)?;
        Ok(factor * self.enumerate(&g)?)
    }

    /// Σ over partitions of τ⁰ of the quotient, skipping partial partitions
    /// that keep apart two blocks already joined by three edge-disjoint paths.
    fn enumerate(&self, g: &LabeledGraph) -> Result<Complex64> {
        self.enumerate_masked(g, None)
    }

    /// As the plain partition sum, restricted to partitions in which the
    /// vertex masks within each block are pairwise disjoint.
    pub(crate) fn restricted_injective_sum(&self, g: &LabeledGraph, masks: &[u64]) -> Result<Complex64> {
        self.enumerate_masked(g, Some(masks))
    }

    fn enumerate_masked(&self, g: &LabeledGraph, masks: Option<&[u64]>) -> Result<Complex64> {
        let mut st = EnumState {
            ends: g.endpoints(),
            masks,
            labels: Vec::with_capacity(g.num_vertices()),
            block_masks: Vec::new(),
            total: ZERO,
        };
        self.enum_rec(g, &mut st)?;
        Ok(st.total)
    }

    fn enum_rec(&self, g: &LabeledGraph, st: &mut EnumState<'_>) -> Result<()> {
        let n = g.num_vertices();
        let i = st.labels.len();
        if i == n {
            self.visited.fetch_add(1, Ordering::Relaxed);
            st.total += injective_of_graph(&g.quotient_by_labels(&st.labels), self.spec)?;
            return Ok(());
        }
        let m = st.masks.map_or(0, |ms| ms[i]);
        let nb = st.block_masks.len();
        for b in 0..=nb {
            if b < nb && st.block_masks[b] & m != 0 {
                continue;
            }
            st.labels.push(b as u8);
            if b == nb {
                st.block_masks.push(m);
            } else {
                st.block_masks[b] |= m;
            }
            if !separates_three_connected(&st.ends, &st.labels, st.block_masks.len(), n) {
                self.enum_rec(g, st)?;
            }
            if b == nb {
                st.block_masks.pop();
            } else {
                st.block_masks[b] &= !m;
            }
            st.labels.pop();
        }
        Ok(())
    }
}

struct EnumState<'m> {
    ends: Vec<(usize, usize)>,
    masks: Option<&'m [u64]>,
    labels: Vec<u8>,
    block_masks: Vec<u64>,
    total: Complex64,
}

/// Quotient where vertex indices `< labels.len()` are grouped by label and
/// the rest stay singletons; true when two distinct labelled blocks are
/// 3-edge-connected.
fn separates_three_connected(ends: &[(usize, usize)], labels: &[u8], nb: usize, n: usize) -> bool {
    if nb < 2 {
        return false;
    }
    let class = |v: usize| if v < labels.len() { labels[v] as usize } else { nb + v };
    let m = nb + n;
    let q: Vec<(usize, usize)> = ends.iter().map(|&(s, d)| (class(s), class(d))).collect();
    let mut deg = vec![0usize; m];
    for &(s, d) in &q {
        if s != d {
            deg[s] += 1;
            deg[d] += 1;
        }
    }
    for a in 0..nb {
        if deg[a] < 3 {
            continue;
        }
        for b in a + 1..nb {
            if deg[b] >= 3 && flow_indices(m, &q, a, b, 3) >= 3 {
                return true;
            }
        }
    }
    false
}

fn merge_labels(n: usize, v: usize, w: usize) -> Vec<usize> {
    (0..n).map(|x| if x == w { v } else { x }).collect()
}

/// Some pair of distinct vertex indices with λ ≥ 3.
pub(crate) fn three_connected_pair<L: Clone>(g: &crate::graph::Graph<L>) -> Option<(usize, usize)> {
    let n = g.num_vertices();
    let ends = g.endpoints();
    let mut deg = vec![0usize; n];
    for &(s, d) in &ends {
        if s != d {
            deg[s] += 1;
            deg[d] += 1;
        }
    }
    for a in 0..n {
        if deg[a] < 3 {
            continue;
        }
        for b in a + 1..n {
            if deg[b] >= 3 && flow_indices(n, &ends, a, b, 3) >= 3 {
                return Some((a, b));
            }
        }
    }
    None
}

/// Finds a two-edge-connected subgraph attached to the rest at a single
/// vertex, returning (piece, rest). The piece is never the whole graph.
pub(crate) fn split_hanging_tec(g: &LabeledGraph) -> Option<(LabeledGraph, LabeledGraph)> {
    let n = g.num_vertices();
    let ends = g.endpoints();
    let inc = g.incidence();
    for v in 0..n {
        for comp in components_without(n, &inc, v) {
            if comp.len() + 1 == n {
                continue;
            }
            if let Some(split) = split_off(g, &ends, v, &comp) {
                return Some(split);
            }
        }
    }
    None
}

/// Connected components of the graph with vertex `v` deleted.
pub(crate) fn components_without(n: usize, inc: &[Vec<(usize, usize)>], v: usize) -> Vec<Vec<usize>> {
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for s in 0..n {
        if s == v || comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![s];
        comp[s] = id;
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            for &(_, y) in &inc[x] {
                if y != v && comp[y] == usize::MAX {
                    comp[y] = id;
                    members.push(y);
                    stack.push(y);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// The subgraph spanned by `comp ∪ {v}` if it is two-edge-connected.
fn split_off(
    g: &LabeledGraph,
    ends: &[(usize, usize)],
    v: usize,
    comp: &[usize],
) -> Option<(LabeledGraph, LabeledGraph)> {
    let inside = |x: usize| x == v || comp.binary_search(&x).is_ok();
    let piece_edges: Vec<usize> =
        (0..ends.len()).filter(|&k| inside(ends[k].0) && inside(ends[k].1) && (ends[k].0 != v || ends[k].1 != v)).collect();
    let vid = g.vertices()[v];
    let piece = g.edge_subgraph(&piece_edges, &[vid]);
    if !piece.is_two_edge_connected() {
        return None;
    }
    let drop_v: Vec<u32> = comp.iter().map(|&x| g.vertices()[x]).collect();
    Some((piece, g.without(&piece_edges, &drop_v)))
}

/// τ[T] with default options.
pub fn traffic_state(t: &TestGraph, spec: &CycleWeightSpec) -> Result<Complex64> {
    TrafficEvaluator::new(spec).state(t)
}

/// ψ of a polynomial with default options.
pub fn trace_psi(p: &GraphPolynomial, spec: &CycleWeightSpec) -> Result<Complex64> {
    TrafficEvaluator::new(spec).trace_psi(p)
}

/// Mixed free cumulant κ_n of graph monomials with respect to ψ.
pub fn mixed_free_cumulant(ev: &TrafficEvaluator<'_>, monomials: &[GraphMonomial]) -> Result<Complex64> {
    let fc = FreeCumulants::new(FnMoments(|w: &[usize]| {
        let prod = GraphMonomial::product_all(&w.iter().map(|&i| monomials[i].clone()).collect::<Vec<_>>());
        ev.psi(&prod)
    }));
    let idx: Vec<usize> = (0..monomials.len()).collect();
    fc.kappa(&idx)
}

/// Partitions of the vertex set as blocks of vertex ids.
pub fn partition_blocks(t: &TestGraph, pi: &SetPartition) -> Vec<Vec<u32>> {
    pi.blocks().into_iter().map(|b| b.into_iter().map(|i| t.vertices()[i]).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Graph};
    use crate::partitions::catalan;

    fn a(g: u32) -> EdgeAtom {
        EdgeAtom::new(g)
    }

    fn sc() -> CycleWeightSpec {
        CycleWeightSpec::Ue(CumulantSpec::standard_semicircular())
    }

    fn tg(n: u32, es: &[(u32, u32, EdgeAtom)]) -> TestGraph {
        let edges = es.iter().enumerate().map(|(k, &(s, d, l))| Edge { id: k as u32, src: s, dst: d, label: l }).collect();
        TestGraph::new(Graph::new((0..n).collect(), edges).unwrap()).unwrap()
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn single_vertex_is_one() {
        assert_eq!(traffic_state(&TestGraph::single_vertex(), &sc()).unwrap(), ONE);
        assert_eq!(injective_state(&TestGraph::single_vertex(), &sc()).unwrap(), ONE);
    }

    #[test]
    fn directed_cycles_give_catalan() {
        for n in 1..=5 {
            let t = TestGraph::directed_cycle(&vec![a(0); 2 * n]);
            assert_eq!(traffic_state(&t, &sc()).unwrap(), c(catalan(n) as f64), "n={n}");
        }
    }

    #[test]
    fn pruned_matches_exhaustive_on_small_graphs() {
        let specs = [
            sc(),
            CycleWeightSpec::Wigner { beta: vec![0.5] },
            CycleWeightSpec::Ginibre { zeta: vec![Complex64::new(0.2, 0.3)] },
            CycleWeightSpec::HaarUnitary,
        ];
        let graphs = [
            tg(3, &[(0, 1, a(0)), (1, 2, a(0)), (2, 0, a(0)), (0, 2, a(0))]),
            tg(2, &[(0, 1, a(0)), (0, 1, a(0)), (1, 0, a(0).adjoint()), (1, 0, a(0))]),
            tg(4, &[(0, 1, a(0)), (1, 2, a(0).adjoint()), (2, 3, a(0)), (3, 0, a(0).adjoint()), (0, 0, a(0))]),
            tg(4, &[(0, 1, a(0)), (1, 0, a(0)), (1, 2, a(0)), (2, 3, a(0)), (3, 1, a(0))]),
        ];
        for spec in &specs {
            for t in &graphs {
                let ex = TrafficEvaluator::with_options(spec, StateOptions { partition_cap: 10, mode: SumMode::Exhaustive });
                let pr = TrafficEvaluator::new(spec);
                let (x, y) = (ex.state(t).unwrap(), pr.state(t).unwrap());
                assert!((x - y).norm() < 1e-12, "{spec:?} {t:?}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn psi_of_words_is_phi() {
        let spec = sc();
        let ev = TrafficEvaluator::new(&spec);
        assert_eq!(ev.psi_word(&[a(0), a(0), a(0), a(0)]).unwrap(), c(2.0));
        let CycleWeightSpec::Ue(cs) = &spec else { unreachable!() };
        assert_eq!(ev.psi_word(&[a(0); 6]).unwrap(), cs.moment(&[a(0); 6]).unwrap());
    }

    #[test]
    fn orientation_convention_two_generators() {
        // ψ(ab) must equal κ₂[a, b], which is asymmetric for a circular pair
        let z = Complex64::new(0.0, 0.7);
        let cs = CumulantSpec::circular(vec![vec![ONE, ZERO], vec![ZERO, ONE]], vec![vec![ZERO, z], vec![z, ZERO]]).unwrap();
        let spec = CycleWeightSpec::Ue(cs);
        let ev = TrafficEvaluator::new(&spec);
        assert_eq!(ev.psi_word(&[a(0), a(1)]).unwrap(), z);
        assert_eq!(ev.psi_word(&[a(0), a(1).adjoint()]).unwrap(), ZERO);
        assert_eq!(ev.psi_word(&[a(0), a(0).adjoint()]).unwrap(), ONE);
    }

    #[test]
    fn wigner_pads() {
        let spec = CycleWeightSpec::Wigner { beta: vec![0.3] };
        let ev = TrafficEvaluator::new(&spec);
        // Tr(W Wᵀ): two parallel edges
        let par = tg(2, &[(0, 1, a(0)), (0, 1, a(0))]);
        assert_eq!(ev.state(&par).unwrap(), c(0.3));
        let dir = tg(2, &[(0, 1, a(0)), (1, 0, a(0))]);
        assert_eq!(ev.state(&dir).unwrap(), ONE);
        assert!(matches!(spec.pad_weight(&[(a(4), true), (a(4), true)]), Err(Error::UnknownGenerator(4))));
    }

    #[test]
    fn ginibre_pads() {
        let z = Complex64::new(0.25, -0.5);
        let spec = CycleWeightSpec::Ginibre { zeta: vec![z] };
        let x = a(0);
        let xs = x.adjoint();
        // along-flags for a directed 2-cycle are (true, true)
        assert_eq!(spec.pad_weight(&[(x, true), (xs, true)]).unwrap(), ONE);
        assert_eq!(spec.pad_weight(&[(x, true), (x, true)]).unwrap(), ZERO);
        assert_eq!(spec.pad_weight(&[(x, true), (x, false)]).unwrap(), z);
        assert_eq!(spec.pad_weight(&[(xs, true), (xs, false)]).unwrap(), z.conj());
    }

    #[test]
    fn haar_alternating_cycles() {
        let u = a(0);
        let us = u.adjoint();
        let c4 = TestGraph::directed_cycle(&[u, us, u, us]);
        let c6 = TestGraph::directed_cycle(&[u, us, u, us, u, us]);
        assert_eq!(injective_state(&c4, &CycleWeightSpec::HaarUnitary).unwrap(), c(-1.0));
        assert_eq!(injective_state(&c6, &CycleWeightSpec::HaarUnitary).unwrap(), c(2.0));
        let mixed = tg(4, &[(0, 1, u), (2, 1, u), (2, 3, u), (0, 3, u)]);
        assert_eq!(injective_state(&mixed, &CycleWeightSpec::HaarUnitary).unwrap(), ZERO);
        assert_eq!(injective_state(&mixed, &CycleWeightSpec::HaarOrthogonal).unwrap(), c(-1.0));
    }

    #[test]
    fn injective_transform_inverts_state() {
        let spec = CycleWeightSpec::Wigner { beta: vec![0.7] };
        let ev = TrafficEvaluator::new(&spec);
        let t = tg(4, &[(0, 1, a(0)), (1, 2, a(0)), (2, 3, a(0)), (3, 0, a(0)), (0, 2, a(0))]);
        let inj = injective_transform(&t, 10, |q| ev.state(q)).unwrap();
        assert!((inj - ev.injective(&t).unwrap()).norm() < 1e-12);
        let t = TestGraph::directed_cycle(&[a(0); 4]);
        let inj = injective_transform(&t, 10, |q| ev.state(q)).unwrap();
        assert!((inj - ev.injective(&t).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let spec = sc();
        let ev = TrafficEvaluator::with_options(&spec, StateOptions { partition_cap: 3, mode: SumMode::Exhaustive });
        assert!(matches!(ev.state(&TestGraph::directed_cycle(&[a(0); 4])), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn mixed_cumulant_of_words() {
        let spec = sc();
        let ev = TrafficEvaluator::new(&spec);
        let x = GraphMonomial::edge(a(0));
        let k2 = mixed_free_cumulant(&ev, &[x.clone(), x.clone()]).unwrap();
        assert!((k2 - ONE).norm() < 1e-12);
        let k4 = mixed_free_cumulant(&ev, &[x.clone(), x.clone(), x.clone(), x]).unwrap();
        assert!(k4.norm() < 1e-12);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
        #[test]
        fn pruned_equals_exhaustive(
            es in proptest::collection::vec((0u32..5, 0u32..5, 0u32..2, proptest::bool::ANY), 1..7),
            beta in -1.0f64..1.0,
        ) {
            let mut es: Vec<(u32, u32, EdgeAtom)> = es.into_iter().map(|(s, d, g, st)| (s, d, EdgeAtom { gen: g, star: st })).collect();
            for k in 0..4 { es.push((k, k + 1, a(0))); }
            let t = tg(5, &es);
            for spec in [CycleWeightSpec::Wigner { beta: vec![beta, 0.5] }, CycleWeightSpec::Ginibre { zeta: vec![Complex64::new(beta, 0.1), ZERO] }] {
                let ex = TrafficEvaluator::with_options(&spec, StateOptions { partition_cap: 10, mode: SumMode::Exhaustive });
                let pr = TrafficEvaluator::new(&spec);
                let (x, y) = (ex.state(&t).unwrap(), pr.state(&t).unwrap());
                proptest::prop_assert!((x - y).norm() < 1e-10, "{} vs {}", x, y);
            }
        }
    }
}
