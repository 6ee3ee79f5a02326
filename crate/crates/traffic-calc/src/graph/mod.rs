//! Finite connected multidigraphs with labeled edges, quotients by vertex
//! partitions, and bi-rooted graph monomials.

mod blocks;
mod canon;
mod flow;

pub use blocks::{
    bcd_tree, block_decomposition, cactus_classify, BcdNode, BcdTree, Block, BlockDecomposition, BlockKind,
    CactusClass, Pad,
};
pub use canon::{
    anti_isomorphic, canonical_form, canonical_form_with_cap, CanonMode, CanonicalKey, DEFAULT_CAP as CANON_CAP,
};
pub use flow::{edge_connectivity, edge_connectivity_capped, lambda_cactus_oracle};
pub(crate) use flow::flow_indices;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partitions::SetPartition;

pub type VertexId = u32;
pub type EdgeId = u32;

/// Edge label: a generator symbol, possibly adjoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeAtom {
    pub gen: u32,
    pub star: bool,
}

impl EdgeAtom {
    pub const fn new(gen: u32) -> Self {
        EdgeAtom { gen, star: false }
    }

    pub const fn adjoint(self) -> Self {
        EdgeAtom { gen: self.gen, star: !self.star }
    }
}

impl fmt::Display for EdgeAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.gen, if self.star { "*" } else { "" })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge<L> {
    pub id: EdgeId,
    pub src: VertexId,
    pub dst: VertexId,
    pub label: L,
}

impl<L> Edge<L> {
    pub fn is_loop(&self) -> bool {
        self.src == self.dst
    }
}

/// A multidigraph with sorted vertex ids and id-stable edges. Loops and
/// parallel edges are allowed; connectivity is checked by the wrappers that
/// need it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph<L> {
    vertices: Vec<VertexId>,
    edges: Vec<Edge<L>>,
}

pub type LabeledGraph = Graph<EdgeAtom>;

impl<L: Clone> Graph<L> {
    pub fn new(vertices: Vec<VertexId>, edges: Vec<Edge<L>>) -> Result<Self> {
        let mut vs = vertices;
        vs.sort_unstable();
        let before = vs.len();
        vs.dedup();
        if vs.len() != before {
            return Err(Error::Malformed("duplicate vertex id".into()));
        }
        if vs.is_empty() {
            return Err(Error::Malformed("empty vertex set".into()));
        }
        let mut ids = BTreeSet::new();
        for e in &edges {
            if !ids.insert(e.id) {
                return Err(Error::Malformed(format!("duplicate edge id {}", e.id)));
            }
            for v in [e.src, e.dst] {
                if vs.binary_search(&v).is_err() {
                    return Err(Error::UnknownVertex(v));
                }
            }
        }
        Ok(Graph { vertices: vs, edges })
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge<L>] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn index_of(&self, v: VertexId) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    pub(crate) fn idx(&self, v: VertexId) -> usize {
        self.vertices.binary_search(&v).expect("vertex belongs to graph")
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge<L>> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn max_vertex_id(&self) -> VertexId {
        *self.vertices.last().unwrap()
    }

    pub fn max_edge_id(&self) -> Option<EdgeId> {
        self.edges.iter().map(|e| e.id).max()
    }

    /// Endpoints of every edge as vertex indices.
    pub(crate) fn endpoints(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (self.idx(e.src), self.idx(e.dst))).collect()
    }

    /// Undirected incidence lists `(edge index, other endpoint index)`;
    /// loops appear once.
    pub(crate) fn incidence(&self) -> Vec<Vec<(usize, usize)>> {
        let mut inc = vec![Vec::new(); self.num_vertices()];
        for (k, (s, d)) in self.endpoints().into_iter().enumerate() {
            inc[s].push((k, d));
            if s != d {
                inc[d].push((k, s));
            }
        }
        inc
    }

    pub fn is_connected(&self) -> bool {
        let n = self.num_vertices();
        let inc = self.incidence();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(_, w) in &inc[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    pub fn num_loops(&self) -> usize {
        self.edges.iter().filter(|e| e.is_loop()).count()
    }

    /// Degree counting a loop twice.
    pub fn degree(&self, v: VertexId) -> usize {
        self.edges.iter().map(|e| usize::from(e.src == v) + usize::from(e.dst == v)).sum()
    }

    pub fn in_degree(&self, v: VertexId) -> usize {
        self.edges.iter().filter(|e| e.dst == v).count()
    }

    pub fn out_degree(&self, v: VertexId) -> usize {
        self.edges.iter().filter(|e| e.src == v).count()
    }

    /// Connected and acyclic (loops count as cycles).
    pub fn is_tree(&self) -> bool {
        self.num_edges() + 1 == self.num_vertices() && self.is_connected()
    }

    /// Quotient by a block label per vertex index. Each merged vertex keeps
    /// the smallest id of its class; edge ids and labels are preserved.
    pub fn quotient_by_labels<T: Copy + Eq>(&self, labels: &[T]) -> Graph<L> {
        let map = self.quotient_map(labels);
        let mut vs: Vec<VertexId> = map.clone();
        vs.sort_unstable();
        vs.dedup();
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { id: e.id, src: map[self.idx(e.src)], dst: map[self.idx(e.dst)], label: e.label.clone() })
            .collect();
        Graph { vertices: vs, edges }
    }

    /// For each vertex index, the id of its representative in the quotient.
    pub(crate) fn quotient_map<T: Copy + Eq>(&self, labels: &[T]) -> Vec<VertexId> {
        assert_eq!(labels.len(), self.num_vertices());
        let p = SetPartition::from_labels(labels);
        let mut rep = vec![VertexId::MAX; p.num_blocks()];
        for (i, &v) in self.vertices.iter().enumerate() {
            let b = p.block_of(i);
            rep[b] = rep[b].min(v);
        }
        (0..self.num_vertices()).map(|i| rep[p.block_of(i)]).collect()
    }

    /// Quotient by a partition given as blocks of vertex ids; vertices not
    /// mentioned stay singletons.
    pub fn quotient(&self, blocks: &[Vec<VertexId>]) -> Result<Graph<L>> {
        let labels = self.labels_for_blocks(blocks)?;
        Ok(self.quotient_by_labels(&labels))
    }

    pub(crate) fn labels_for_blocks(&self, blocks: &[Vec<VertexId>]) -> Result<Vec<usize>> {
        let n = self.num_vertices();
        let mut labels: Vec<usize> = (0..n).collect();
        let mut assigned = vec![false; n];
        for (b, block) in blocks.iter().enumerate() {
            for &v in block {
                let i = self.index_of(v).ok_or(Error::UnknownVertex(v))?;
                if assigned[i] {
                    return Err(Error::InvalidPartition(format!("vertex {v} appears twice")));
                }
                assigned[i] = true;
                labels[i] = n + b;
            }
        }
        Ok(labels)
    }

    /// Reverses every edge.
    pub fn flip(&self) -> Graph<L> {
        Graph {
            vertices: self.vertices.clone(),
            edges: self.edges.iter().map(|e| Edge { id: e.id, src: e.dst, dst: e.src, label: e.label.clone() }).collect(),
        }
    }

    pub fn map_labels<M, F: FnMut(&Edge<L>) -> M>(&self, mut f: F) -> Graph<M> {
        Graph {
            vertices: self.vertices.clone(),
            edges: self.edges.iter().map(|e| Edge { id: e.id, src: e.src, dst: e.dst, label: f(e) }).collect(),
        }
    }

    /// Subgraph on the given edge indices and the vertices they touch plus
    /// `extra` vertices.
    pub(crate) fn edge_subgraph(&self, edge_idx: &[usize], extra: &[VertexId]) -> Graph<L> {
        let mut vs: Vec<VertexId> = extra.to_vec();
        let edges: Vec<Edge<L>> = edge_idx.iter().map(|&k| self.edges[k].clone()).collect();
        for e in &edges {
            vs.push(e.src);
            vs.push(e.dst);
        }
        vs.sort_unstable();
        vs.dedup();
        Graph { vertices: vs, edges }
    }

    /// Removes the given edge indices and all vertices in `drop_vertices`.
    pub(crate) fn without(&self, drop_edges: &[usize], drop_vertices: &[VertexId]) -> Graph<L> {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|(k, _)| !drop_edges.contains(k))
            .map(|(_, e)| e.clone())
            .collect();
        let vertices = self.vertices.iter().copied().filter(|v| !drop_vertices.contains(v)).collect();
        Graph { vertices, edges }
    }

    /// Renumbers vertices to `0..n` (in id order) and edges to `0..m` (in
    /// storage order). Returns the vertex relabeling map.
    pub fn compact(&self) -> (Graph<L>, Vec<VertexId>) {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .map(|(k, e)| Edge { id: k as EdgeId, src: self.idx(e.src) as VertexId, dst: self.idx(e.dst) as VertexId, label: e.label.clone() })
            .collect();
        (Graph { vertices: (0..self.num_vertices() as VertexId).collect(), edges }, self.vertices.clone())
    }

    /// Disjoint union with `other`, whose vertex and edge ids are shifted
    /// past ours. Returns the union and the vertex shift.
    pub(crate) fn disjoint_union(&self, other: &Graph<L>) -> (Graph<L>, VertexId) {
        let vshift = self.max_vertex_id() + 1;
        let eshift = self.max_edge_id().map_or(0, |m| m + 1);
        let mut vertices = self.vertices.clone();
        vertices.extend(other.vertices.iter().map(|v| v + vshift));
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|e| Edge {
            id: e.id + eshift,
            src: e.src + vshift,
            dst: e.dst + vshift,
            label: e.label.clone(),
        }));
        (Graph { vertices, edges }, vshift)
    }

    pub(crate) fn from_parts_unchecked(vertices: Vec<VertexId>, edges: Vec<Edge<L>>) -> Graph<L> {
        debug_assert!(vertices.windows(2).all(|w| w[0] < w[1]));
        Graph { vertices, edges }
    }
}

impl LabeledGraph {
    /// Reverses edges and toggles every star.
    pub fn adjoint_edges(&self) -> LabeledGraph {
        self.flip().map_labels(|e| e.label.adjoint())
    }

    pub fn generators(&self) -> BTreeSet<u32> {
        self.edges.iter().map(|e| e.label.gen).collect()
    }
}

/// A connected labeled multidigraph with no distinguished vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TestGraph(LabeledGraph);

impl TestGraph {
    pub fn new(g: LabeledGraph) -> Result<Self> {
        if !g.is_connected() {
            return Err(Error::NotConnected);
        }
        Ok(TestGraph(g))
    }

    pub fn single_vertex() -> Self {
        TestGraph(Graph { vertices: vec![0], edges: vec![] })
    }

    /// Directed cycle whose arrows follow `atoms` in order: edge `k` runs
    /// from vertex `k` to vertex `k + 1 (mod n)`.
    pub fn directed_cycle(atoms: &[EdgeAtom]) -> Self {
        let n = atoms.len().max(1) as VertexId;
        let edges = atoms
            .iter()
            .enumerate()
            .map(|(k, &a)| Edge { id: k as EdgeId, src: k as VertexId, dst: (k as VertexId + 1) % n, label: a })
            .collect();
        TestGraph(Graph { vertices: (0..n).collect(), edges })
    }

    pub fn graph(&self) -> &LabeledGraph {
        &self.0
    }

    pub fn into_graph(self) -> LabeledGraph {
        self.0
    }

    pub fn quotient(&self, blocks: &[Vec<VertexId>]) -> Result<TestGraph> {
        Ok(TestGraph(self.0.quotient(blocks)?))
    }

    pub fn quotient_by_labels<T: Copy + Eq>(&self, labels: &[T]) -> TestGraph {
        TestGraph(self.0.quotient_by_labels(labels))
    }
}

impl std::ops::Deref for TestGraph {
    type Target = LabeledGraph;
    fn deref(&self) -> &LabeledGraph {
        &self.0
    }
}

/// A test graph with an ordered pair of roots (output, input); the output
/// is the row index and the input the column index of the associated
/// matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GraphMonomial {
    graph: LabeledGraph,
    input: VertexId,
    output: VertexId,
}

impl GraphMonomial {
    pub fn new(graph: LabeledGraph, input: VertexId, output: VertexId) -> Result<Self> {
        for v in [input, output] {
            if graph.index_of(v).is_none() {
                return Err(Error::UnknownVertex(v));
            }
        }
        if !graph.is_connected() {
            return Err(Error::NotConnected);
        }
        Ok(GraphMonomial { graph, input, output })
    }

    pub(crate) fn new_unchecked(graph: LabeledGraph, input: VertexId, output: VertexId) -> Self {
        GraphMonomial { graph, input, output }
    }

    /// The unit: one vertex, both roots on it, no edges.
    pub fn unit() -> Self {
        GraphMonomial { graph: Graph { vertices: vec![0], edges: vec![] }, input: 0, output: 0 }
    }

    /// Single edge from input to output.
    pub fn edge(atom: EdgeAtom) -> Self {
        GraphMonomial {
            graph: Graph { vertices: vec![0, 1], edges: vec![Edge { id: 0, src: 0, dst: 1, label: atom }] },
            input: 0,
            output: 1,
        }
    }

    pub fn graph(&self) -> &LabeledGraph {
        &self.graph
    }

    pub fn num_vertices(&self) -> usize {
        self.graph.num_vertices()
    }

    pub fn num_edges(&self) -> usize {
        self.graph.num_edges()
    }

    pub fn input(&self) -> VertexId {
        self.input
    }

    pub fn output(&self) -> VertexId {
        self.output
    }

    pub fn is_diagonal(&self) -> bool {
        self.input == self.output
    }

    pub fn is_unit(&self) -> bool {
        self.graph.num_vertices() == 1 && self.graph.num_edges() == 0
    }

    /// Forgets the roots.
    pub fn to_test_graph(&self) -> TestGraph {
        TestGraph(self.graph.clone())
    }

    /// Merges input and output into one vertex and forgets the roots.
    pub fn tilde_delta(&self) -> TestGraph {
        TestGraph(self.delta().graph)
    }

    /// Merges input and output (the result is diagonal).
    pub fn delta(&self) -> GraphMonomial {
        if self.is_diagonal() {
            return self.clone();
        }
        self.quotient(&[vec![self.input, self.output]]).expect("roots belong to graph")
    }

    pub fn quotient(&self, blocks: &[Vec<VertexId>]) -> Result<GraphMonomial> {
        let labels = self.graph.labels_for_blocks(blocks)?;
        Ok(self.quotient_by_labels(&labels))
    }

    pub fn quotient_by_labels<T: Copy + Eq>(&self, labels: &[T]) -> GraphMonomial {
        let map = self.graph.quotient_map(labels);
        GraphMonomial {
            graph: self.graph.quotient_by_labels(labels),
            input: map[self.graph.idx(self.input)],
            output: map[self.graph.idx(self.output)],
        }
    }

    pub fn transpose(&self) -> GraphMonomial {
        GraphMonomial { graph: self.graph.clone(), input: self.output, output: self.input }
    }

    /// Reverses edges, toggles stars and swaps the roots.
    pub fn adjoint(&self) -> GraphMonomial {
        GraphMonomial { graph: self.graph.adjoint_edges(), input: self.output, output: self.input }
    }

    /// Renumbers vertices and edges densely, keeping roots attached.
    pub fn compact(&self) -> GraphMonomial {
        let (g, old) = self.graph.compact();
        let pos = |v: VertexId| old.binary_search(&v).unwrap() as VertexId;
        GraphMonomial { input: pos(self.input), output: pos(self.output), graph: g }
    }

    pub fn with_roots(&self, input: VertexId, output: VertexId) -> Result<GraphMonomial> {
        GraphMonomial::new(self.graph.clone(), input, output)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> EdgeAtom {
        EdgeAtom::new(0)
    }

    #[test]
    fn quotient_keeps_edge_ids() {
        let t = TestGraph::directed_cycle(&[a(), a(), a(), a()]);
        let q = t.quotient(&[vec![0, 2]]).unwrap();
        assert_eq!(q.num_vertices(), 3);
        let ids: Vec<_> = q.edges().iter().map(|e| e.id).collect();
        assert_eq!(ids, vec![0, 1, 2, 3]);
        assert_eq!(q.edge(1).unwrap().dst, 0);
        assert!(matches!(t.quotient(&[vec![0, 9]]), Err(Error::UnknownVertex(9))));
    }

    #[test]
    fn full_quotient_makes_loops() {
        let t = TestGraph::directed_cycle(&[a(), a(), a()]);
        let q = t.quotient(&[vec![0, 1, 2]]).unwrap();
        assert_eq!(q.num_vertices(), 1);
        assert_eq!(q.num_loops(), 3);
    }

    #[test]
    fn disconnected_rejected() {
        let g = Graph::new(vec![0, 1], vec![]).unwrap();
        assert!(matches!(TestGraph::new(g), Err(Error::NotConnected)));
    }

    #[test]
    fn malformed_rejected() {
        let e = |id, src, dst| Edge { id, src, dst, label: a() };
        assert!(Graph::new(vec![0, 1], vec![e(0, 0, 1), e(0, 1, 0)]).is_err());
        assert!(matches!(Graph::new(vec![0], vec![e(0, 0, 3)]), Err(Error::UnknownVertex(3))));
    }

    #[test]
    fn adjoint_is_involution() {
        let m = GraphMonomial::edge(EdgeAtom::new(2));
        assert_eq!(m.adjoint().adjoint(), m);
        let ad = m.adjoint();
        assert_eq!(ad.graph().edges()[0].label, EdgeAtom { gen: 2, star: true });
        // the adjoint of an input→output edge is again an input→output edge
        assert_eq!(ad.graph().edges()[0].src, ad.input());
    }

    #[test]
    fn tilde_delta_merges_roots() {
        let t = GraphMonomial::edge(a()).tilde_delta();
        assert_eq!(t.num_vertices(), 1);
        assert_eq!(t.num_loops(), 1);
    }
}
