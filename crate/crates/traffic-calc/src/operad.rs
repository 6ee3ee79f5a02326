//! Graph operations and their action on graph monomials.
//!
//! A graph operation is a connected multidigraph with an input, an output
//! and an ordering of its edges. Composition and application substitute a
//! bi-rooted piece for each edge `e`, identifying `source(e)` with the
//! piece's input and `target(e)` with its output.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{
    canonical_form_with_cap, CanonMode, CanonicalKey, Edge, EdgeAtom, EdgeId, Graph, GraphMonomial, LabeledGraph,
    TestGraph, VertexId,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphOperation {
    graph: Graph<()>,
    input: VertexId,
    output: VertexId,
    /// `order[k]` is the edge receiving argument `k`.
    order: Vec<EdgeId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transform {
    /// Swap input and output.
    Transpose,
    /// Reverse every edge.
    Flip,
}

impl GraphOperation {
    pub fn new(graph: Graph<()>, input: VertexId, output: VertexId, order: Vec<EdgeId>) -> Result<Self> {
        for v in [input, output] {
            graph.index_of(v).ok_or(Error::UnknownVertex(v))?;
        }
        if !graph.is_connected() {
            return Err(Error::NotConnected);
        }
        let mut sorted = order.clone();
        sorted.sort_unstable();
        let mut ids: Vec<EdgeId> = graph.edges().iter().map(|e| e.id).collect();
        ids.sort_unstable();
        if sorted != ids {
            return Err(Error::Malformed("edge ordering is not a permutation of the edges".into()));
        }
        Ok(GraphOperation { graph, input, output, order })
    }

    /// Operation from `(src, dst)` pairs listed in argument order.
    pub fn from_edges(num_vertices: u32, edges: &[(VertexId, VertexId)], input: VertexId, output: VertexId) -> Result<Self> {
        let es = edges.iter().enumerate().map(|(k, &(s, d))| Edge { id: k as EdgeId, src: s, dst: d, label: () }).collect();
        let g = Graph::new((0..num_vertices).collect(), es)?;
        Self::new(g, input, output, (0..edges.len() as EdgeId).collect())
    }

    pub fn identity() -> Self {
        Self::from_edges(2, &[(0, 1)], 0, 1).unwrap()
    }

    /// Built-in operations: `id`, `product`, `hadamard`, `delta`, `rdeg`,
    /// `cdeg`, `transpose`.
    pub fn named(name: &str) -> Result<Self> {
        // vertex 0 is the input throughout
        let op = match name {
            "id" => Self::identity(),
            // out ←1− m ←2− in
            "product" => Self::from_edges(3, &[(1, 2), (0, 1)], 0, 2)?,
            "hadamard" => Self::from_edges(2, &[(0, 1), (0, 1)], 0, 1)?,
            "delta" => Self::from_edges(1, &[(0, 0)], 0, 0)?,
            // rDeg(A)(i,i) = Σ_j A(i,j): the pendant edge points into the root
            "rdeg" => Self::from_edges(2, &[(1, 0)], 0, 0)?,
            "cdeg" => Self::from_edges(2, &[(0, 1)], 0, 0)?,
            "transpose" => Self::from_edges(2, &[(1, 0)], 0, 1)?,
            other => return Err(Error::UnknownName(other.to_string())),
        };
        Ok(op)
    }

    pub fn arity(&self) -> usize {
        self.order.len()
    }

    pub fn graph(&self) -> &Graph<()> {
        &self.graph
    }

    pub fn input(&self) -> VertexId {
        self.input
    }

    pub fn output(&self) -> VertexId {
        self.output
    }

    pub fn order(&self) -> &[EdgeId] {
        &self.order
    }

    pub fn transform(&self, t: Transform) -> GraphOperation {
        match t {
            Transform::Transpose => GraphOperation { input: self.output, output: self.input, ..self.clone() },
            Transform::Flip => GraphOperation { graph: self.graph.flip(), ..self.clone() },
        }
    }

    /// `g_σ`: the edge that received argument `k` receives argument `σ[k]`.
    pub fn permute(&self, sigma: &[usize]) -> Result<GraphOperation> {
        let k = self.arity();
        let mut seen = vec![false; k];
        if sigma.len() != k || sigma.iter().any(|&s| s >= k || std::mem::replace(&mut seen[s], true)) {
            return Err(Error::Malformed(format!("{sigma:?} is not a permutation of {k} arguments")));
        }
        let mut order = vec![0; k];
        for (j, &s) in sigma.iter().enumerate() {
            order[s] = self.order[j];
        }
        Ok(GraphOperation { order, ..self.clone() })
    }

    /// Isomorphism key respecting roots and the argument order.
    pub fn canonical_key(&self) -> Result<CanonicalKey> {
        let labeled = self.graph.map_labels(|e| EdgeAtom::new(self.order.iter().position(|&id| id == e.id).unwrap() as u32));
        canonical_form_with_cap(&labeled, Some((self.input, self.output)), CanonMode::Iso, crate::graph::CANON_CAP)
    }

    fn slots(&self) -> Vec<(VertexId, VertexId)> {
        self.order
            .iter()
            .map(|&id| {
                let e = self.graph.edge(id).unwrap();
                (e.src, e.dst)
            })
            .collect()
    }

    /// Operadic composition `g(o_1, …, o_K)`; the result's edges are ordered
    /// blockwise, following the order of `g` and then each part's own order.
    pub fn compose(&self, parts: &[GraphOperation]) -> Result<GraphOperation> {
        if parts.len() != self.arity() {
            return Err(Error::ArityMismatch { expected: self.arity(), got: parts.len() });
        }
        let pieces: Vec<Piece<()>> = parts
            .iter()
            .map(|p| Piece {
                vertices: p.graph.vertices().to_vec(),
                edges: p.order.iter().map(|&id| p.graph.edge(id).unwrap().clone()).collect(),
                input: p.input,
                output: p.output,
            })
            .collect();
        let (g, map) = glue(self.graph.vertices(), &self.slots(), &pieces, &[]);
        let (g, old) = g.compact();
        let pos = |v: VertexId| old.binary_search(&map(v)).unwrap() as VertexId;
        let m = g.num_edges() as EdgeId;
        Ok(GraphOperation { graph: g, input: pos(self.input), output: pos(self.output), order: (0..m).collect() })
    }

    /// Evaluates the operation on graph monomials.
    pub fn apply(&self, args: &[GraphMonomial]) -> Result<GraphMonomial> {
        if args.len() != self.arity() {
            return Err(Error::ArityMismatch { expected: self.arity(), got: args.len() });
        }
        let pieces: Vec<Piece<EdgeAtom>> = args.iter().map(Piece::from_monomial).collect();
        let (g, map) = glue(self.graph.vertices(), &self.slots(), &pieces, &[]);
        let (g, old) = g.compact();
        let pos = |v: VertexId| old.binary_search(&map(v)).unwrap() as VertexId;
        Ok(GraphMonomial::new_unchecked(g, pos(self.input), pos(self.output)))
    }
}

impl fmt::Display for GraphOperation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "op(in={}, out={}; ", self.input, self.output)?;
        for (k, (s, d)) in self.slots().into_iter().enumerate() {
            write!(f, "{}:{}->{} ", k + 1, s, d)?;
        }
        write!(f, ")")
    }
}

struct Piece<L> {
    vertices: Vec<VertexId>,
    edges: Vec<Edge<L>>,
    input: VertexId,
    output: VertexId,
}

impl Piece<EdgeAtom> {
    fn from_monomial(m: &GraphMonomial) -> Self {
        Piece {
            vertices: m.graph().vertices().to_vec(),
            edges: m.graph().edges().to_vec(),
            input: m.input(),
            output: m.output(),
        }
    }
}

fn find(p: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while p[r] != r {
        r = p[r];
    }
    let mut y = x;
    while p[y] != r {
        let n = p[y];
        p[y] = r;
        y = n;
    }
    r
}

/// Replaces each slot `(s, d)` of a skeleton by a piece, identifying `s`
/// with the piece input and `d` with its output. `kept` edges of the
/// skeleton survive unchanged (with their ids). Vertices that absorb a
/// skeleton vertex keep the smallest such id; the others get fresh ids.
/// Returns the glued graph and a map from skeleton vertex id to its image.
fn glue<L: Clone>(
    skeleton: &[VertexId],
    slots: &[(VertexId, VertexId)],
    pieces: &[Piece<L>],
    kept: &[Edge<L>],
) -> (Graph<L>, impl Fn(VertexId) -> VertexId) {
    let n0 = skeleton.len();
    let sk = |v: VertexId| skeleton.binary_search(&v).unwrap();
    let mut offsets = Vec::with_capacity(pieces.len());
    let mut total = n0;
    for p in pieces {
        offsets.push(total);
        total += p.vertices.len();
    }
    let local = |k: usize, v: VertexId| offsets[k] + pieces[k].vertices.binary_search(&v).unwrap();
    let mut parent: Vec<usize> = (0..total).collect();
    for (k, (&(s, d), p)) in slots.iter().zip(pieces).enumerate() {
        let a = find(&mut parent, sk(s));
        let b = find(&mut parent, local(k, p.input));
        parent[a.max(b)] = a.min(b);
        let a = find(&mut parent, sk(d));
        let b = find(&mut parent, local(k, p.output));
        parent[a.max(b)] = a.min(b);
    }
    // Since unions always keep the smaller index, a class containing a
    // skeleton vertex is represented by its smallest skeleton index.
    let mut next_id = skeleton.last().map_or(0, |&v| v + 1);
    let mut ids = vec![VertexId::MAX; total];
    for x in 0..total {
        let r = find(&mut parent, x);
        if ids[r] == VertexId::MAX {
            ids[r] = if r < n0 {
                skeleton[r]
            } else {
                next_id += 1;
                next_id - 1
            };
        }
        ids[x] = ids[r];
    }
    let mut edges: Vec<Edge<L>> = kept
        .iter()
        .map(|e| Edge { id: e.id, src: ids[sk(e.src)], dst: ids[sk(e.dst)], label: e.label.clone() })
        .collect();
    let mut next_edge = kept.iter().map(|e| e.id + 1).max().unwrap_or(0);
    for (k, p) in pieces.iter().enumerate() {
        for e in &p.edges {
            edges.push(Edge {
                id: next_edge,
                src: ids[local(k, e.src)],
                dst: ids[local(k, e.dst)],
                label: e.label.clone(),
            });
            next_edge += 1;
        }
    }
    let mut vertices: Vec<VertexId> = ids.clone();
    vertices.sort_unstable();
    vertices.dedup();
    let skel_ids: Vec<VertexId> = ids[..n0].to_vec();
    let skeleton = skeleton.to_vec();
    let map = move |v: VertexId| skel_ids[skeleton.binary_search(&v).unwrap()];
    (Graph::from_parts_unchecked(vertices, edges), map)
}

/// Replaces edge `e` of a labeled graph by the monomial `t`; all other
/// vertex and edge ids are preserved, new edges get fresh ids. Returns the
/// graph and the image of each old vertex id.
fn substitute_in_graph(
    g: &LabeledGraph,
    e: EdgeId,
    t: &GraphMonomial,
) -> Result<(LabeledGraph, impl Fn(VertexId) -> VertexId)> {
    let edge = g.edge(e).ok_or(Error::UnknownEdge(e))?.clone();
    let kept: Vec<Edge<EdgeAtom>> = g.edges().iter().filter(|x| x.id != e).cloned().collect();
    let piece = Piece::from_monomial(t);
    let (mut out, map) = glue(g.vertices(), &[(edge.src, edge.dst)], &[piece], &kept);
    // fresh edge ids start after the largest id of the original graph
    let base = g.max_edge_id().map_or(0, |m| m + 1);
    let nk = kept.len();
    let edges: Vec<Edge<EdgeAtom>> = out
        .edges()
        .iter()
        .enumerate()
        .map(|(k, x)| if k < nk { x.clone() } else { Edge { id: base + (k - nk) as EdgeId, ..x.clone() } })
        .collect();
    out = Graph::from_parts_unchecked(out.vertices().to_vec(), edges);
    Ok((out, map))
}

pub fn substitute_edge(t: &TestGraph, e: EdgeId, part: &GraphMonomial) -> Result<TestGraph> {
    let (g, _) = substitute_in_graph(t.graph(), e, part)?;
    TestGraph::new(g)
}

pub fn substitute_edge_monomial(t: &GraphMonomial, e: EdgeId, part: &GraphMonomial) -> Result<GraphMonomial> {
    let (g, map) = substitute_in_graph(t.graph(), e, part)?;
    Ok(GraphMonomial::new_unchecked(g, map(t.input()), map(t.output())))
}

/// The path monomial `out ← a_1 ← … ← a_n ← in`.
pub fn embed_word(word: &[EdgeAtom]) -> GraphMonomial {
    let n = word.len() as VertexId;
    let edges = word
        .iter()
        .enumerate()
        .map(|(k, &a)| Edge { id: k as EdgeId, src: k as VertexId + 1, dst: k as VertexId, label: a })
        .collect();
    GraphMonomial::new_unchecked(Graph::from_parts_unchecked((0..=n).collect(), edges), n, 0)
}

impl GraphMonomial {
    /// `self · other`: the output of `other` is glued to the input of `self`.
    pub fn product(&self, other: &GraphMonomial) -> GraphMonomial {
        let (g, shift) = self.graph().disjoint_union(other.graph());
        let out_other = other.output() + shift;
        let merged = g
            .quotient(&[vec![self.input(), out_other]])
            .expect("roots belong to the union");
        let rep = self.input().min(out_other);
        let fix = |v: VertexId| if v == self.input() || v == out_other { rep } else { v };
        GraphMonomial::new_unchecked(merged, fix(other.input() + shift), fix(self.output())).compact()
    }

    pub fn product_all(factors: &[GraphMonomial]) -> GraphMonomial {
        factors.iter().fold(GraphMonomial::unit(), |acc, f| acc.product(f))
    }

    /// Hadamard product: both inputs glued, both outputs glued.
    pub fn hadamard(&self, other: &GraphMonomial) -> GraphMonomial {
        GraphOperation::named("hadamard").unwrap().apply(&[self.clone(), other.clone()]).unwrap()
    }

    pub fn rdeg(atom: EdgeAtom) -> GraphMonomial {
        GraphOperation::named("rdeg").unwrap().apply(&[GraphMonomial::edge(atom)]).unwrap()
    }

    pub fn cdeg(atom: EdgeAtom) -> GraphMonomial {
        GraphOperation::named("cdeg").unwrap().apply(&[GraphMonomial::edge(atom)]).unwrap()
    }

    pub fn edge_transpose(atom: EdgeAtom) -> GraphMonomial {
        GraphMonomial::edge(atom).transpose()
    }
}

/// Key under which isomorphic monomials are merged; graphs too large for a
/// canonical form fall back to a structural key (and are merged only when
/// literally equal).
pub(crate) fn polynomial_key(m: &GraphMonomial) -> CanonicalKey {
    match canonical_form_with_cap(m.graph(), Some((m.input(), m.output())), CanonMode::Iso, crate::graph::CANON_CAP) {
        Ok(k) => k,
        Err(_) => CanonicalKey::structural(m),
    }
}

/// A finite linear combination of graph monomials up to isomorphism.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GraphPolynomial {
    terms: BTreeMap<CanonicalKey, (Complex64, GraphMonomial)>,
}

impl GraphPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(m: GraphMonomial) -> Self {
        let mut p = Self::zero();
        p.add_term(Complex64::new(1.0, 0.0), m);
        p
    }

    pub fn scalar(c: Complex64) -> Self {
        let mut p = Self::zero();
        p.add_term(c, GraphMonomial::unit());
        p
    }

    pub fn add_term(&mut self, c: Complex64, m: GraphMonomial) {
        let key = polynomial_key(&m);
        let entry = self.terms.entry(key.clone()).or_insert((Complex64::new(0.0, 0.0), m));
        entry.0 += c;
        if entry.0 == Complex64::new(0.0, 0.0) {
            self.terms.remove(&key);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (Complex64, &GraphMonomial)> {
        self.terms.values().map(|(c, m)| (*c, m))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &GraphPolynomial) -> GraphPolynomial {
        let mut out = self.clone();
        for (c, m) in other.terms() {
            out.add_term(c, m.clone());
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> GraphPolynomial {
        let mut out = Self::zero();
        for (c, m) in self.terms() {
            out.add_term(c * s, m.clone());
        }
        out
    }

    pub fn mul(&self, other: &GraphPolynomial) -> GraphPolynomial {
        let mut out = Self::zero();
        for (c, m) in self.terms() {
            for (d, n) in other.terms() {
                out.add_term(c * d, m.product(n));
            }
        }
        out
    }

    pub fn pow(&self, k: usize) -> GraphPolynomial {
        (0..k).fold(Self::scalar(Complex64::new(1.0, 0.0)), |acc, _| acc.mul(self))
    }

    pub fn adjoint(&self) -> GraphPolynomial {
        let mut out = Self::zero();
        for (c, m) in self.terms() {
            out.add_term(c.conj(), m.adjoint());
        }
        out
    }

    /// Applies a linear map on monomials.
    pub fn map_terms<F>(&self, mut f: F) -> Result<GraphPolynomial>
    where
        F: FnMut(&GraphMonomial) -> Result<GraphPolynomial>,
    {
        let mut out = Self::zero();
        for (c, m) in self.terms() {
            for (d, n) in f(m)?.terms() {
                out.add_term(c * d, n.clone());
            }
        }
        Ok(out)
    }

    /// Coefficient of the monomial isomorphic to `m`.
    pub fn coefficient(&self, m: &GraphMonomial) -> Complex64 {
        self.terms.get(&polynomial_key(m)).map_or(Complex64::new(0.0, 0.0), |(c, _)| *c)
    }
}

impl From<GraphMonomial> for GraphPolynomial {
    fn from(m: GraphMonomial) -> Self {
        GraphPolynomial::monomial(m)
    }
}
