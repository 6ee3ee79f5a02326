//! Biconnected blocks, cactus classification and block-cut trees.

use std::collections::VecDeque;

use super::{Graph, GraphMonomial, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    /// A single non-loop edge.
    Bridge,
    /// A simple cycle of length ≥ 2.
    Cycle,
    /// Loops only (based at one vertex).
    LoopBundle,
    /// Anything else: some edge lies on two simple cycles.
    Other,
}

/// A biconnected block; indices refer to `Graph::vertices()` and
/// `Graph::edges()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    pub kind: BlockKind,
}

#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    /// Blocks made of non-loop edges.
    pub blocks: Vec<Block>,
    /// Loop edge indices, grouped by base vertex index.
    pub loops: Vec<Vec<usize>>,
    /// Vertex indices lying in two or more non-loop blocks.
    pub is_cut: Vec<bool>,
}

pub fn block_decomposition<L: Clone>(g: &Graph<L>) -> BlockDecomposition {
    let n = g.num_vertices();
    let ends = g.endpoints();
    let inc = g.incidence();
    let mut loops = vec![Vec::new(); n];
    for (k, &(s, d)) in ends.iter().enumerate() {
        if s == d {
            loops[s].push(k);
        }
    }

    const UNSET: usize = usize::MAX;
    let mut disc = vec![UNSET; n];
    let mut low = vec![0; n];
    let mut time = 0;
    let mut stack: Vec<usize> = Vec::new();
    let mut edge_blocks: Vec<Vec<usize>> = Vec::new();

    // Iterative Tarjan: frames are (vertex, parent edge, next incidence).
    for root in 0..n {
        if disc[root] != UNSET {
            continue;
        }
        disc[root] = time;
        low[root] = time;
        time += 1;
        let mut frames: Vec<(usize, usize, usize)> = vec![(root, UNSET, 0)];
        while let Some(top) = frames.last_mut() {
            let (u, pe) = (top.0, top.1);
            if top.2 < inc[u].len() {
                let (k, w) = inc[u][top.2];
                top.2 += 1;
                if k == pe || ends[k].0 == ends[k].1 {
                    continue;
                }
                if disc[w] == UNSET {
                    stack.push(k);
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    frames.push((w, k, 0));
                } else if disc[w] < disc[u] {
                    stack.push(k);
                    low[u] = low[u].min(disc[w]);
                }
            } else {
                frames.pop();
                if let Some(&(p, _, _)) = frames.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] >= disc[p] {
                        let mut block = Vec::new();
                        while let Some(k) = stack.pop() {
                            block.push(k);
                            if k == pe {
                                break;
                            }
                        }
                        block.sort_unstable();
                        edge_blocks.push(block);
                    }
                }
            }
        }
    }

    let mut membership = vec![0usize; n];
    let blocks: Vec<Block> = edge_blocks
        .into_iter()
        .map(|edges| {
            let mut vertices: Vec<usize> = edges.iter().flat_map(|&k| [ends[k].0, ends[k].1]).collect();
            vertices.sort_unstable();
            vertices.dedup();
            for &v in &vertices {
                membership[v] += 1;
            }
            let kind = if edges.len() == 1 {
                BlockKind::Bridge
            } else if edges.len() == vertices.len() {
                BlockKind::Cycle
            } else {
                BlockKind::Other
            };
            Block { vertices, edges, kind }
        })
        .collect();
    let is_cut = membership.iter().map(|&m| m >= 2).collect();
    BlockDecomposition { blocks, loops, is_cut }
}

/// A pad: the edges of a simple cycle (or a single loop) in traversal order.
/// `along[k]` records whether edge `k` is traversed in its own direction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pad {
    pub edges: Vec<usize>,
    pub along: Vec<bool>,
}

impl Pad {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// All edges point the same way around the cycle.
    pub fn is_directed(&self) -> bool {
        self.along.iter().all(|&a| a) || self.along.iter().all(|&a| !a)
    }
}

/// Walks a cycle block starting at its smallest vertex.
fn walk_cycle(ends: &[(usize, usize)], block: &Block) -> Pad {
    let start = block.vertices[0];
    let mut edges = Vec::with_capacity(block.edges.len());
    let mut along = Vec::with_capacity(block.edges.len());
    let mut at = start;
    let mut prev = usize::MAX;
    for _ in 0..block.edges.len() {
        let k = *block
            .edges
            .iter()
            .find(|&&k| k != prev && (ends[k].0 == at || ends[k].1 == at))
            .expect("cycle block is 2-regular");
        let (s, d) = ends[k];
        along.push(s == at);
        at = if s == at { d } else { s };
        edges.push(k);
        prev = k;
    }
    debug_assert_eq!(at, start);
    Pad { edges, along }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CactusClass {
    NotCactus,
    Cactus(Vec<Pad>),
    OrientedCactus(Vec<Pad>),
}

impl CactusClass {
    pub fn is_cactus(&self) -> bool {
        !matches!(self, CactusClass::NotCactus)
    }

    pub fn is_oriented(&self) -> bool {
        matches!(self, CactusClass::OrientedCactus(_))
    }

    pub fn pads(&self) -> &[Pad] {
        match self {
            CactusClass::NotCactus => &[],
            CactusClass::Cactus(p) | CactusClass::OrientedCactus(p) => p,
        }
    }
}

/// Classifies a connected graph: a cactus has every edge on exactly one
/// simple cycle, i.e. all blocks are cycles or loops.
pub fn cactus_classify<L: Clone>(g: &Graph<L>) -> CactusClass {
    let dec = block_decomposition(g);
    if dec.blocks.iter().any(|b| b.kind != BlockKind::Cycle) {
        return CactusClass::NotCactus;
    }
    pads_of(g, &dec)
}

fn pads_of<L: Clone>(g: &Graph<L>, dec: &BlockDecomposition) -> CactusClass {
    let ends = g.endpoints();
    let mut pads: Vec<Pad> = dec
        .blocks
        .iter()
        .filter(|b| b.kind == BlockKind::Cycle)
        .map(|b| walk_cycle(&ends, b))
        .collect();
    for ls in &dec.loops {
        pads.extend(ls.iter().map(|&k| Pad { edges: vec![k], along: vec![true] }));
    }
    if pads.iter().all(Pad::is_directed) {
        CactusClass::OrientedCactus(pads)
    } else {
        CactusClass::Cactus(pads)
    }
}

impl<L: Clone> Graph<L> {
    /// Every block is a bridge, a cycle or a loop: no edge lies on two simple
    /// cycles (equivalently no pair of vertices is 3-edge-connected).
    pub fn is_quasi_cactus(&self) -> bool {
        block_decomposition(self).blocks.iter().all(|b| b.kind != BlockKind::Other)
    }

    /// Bridgeless (two-edge-connected) and connected.
    pub fn is_two_edge_connected(&self) -> bool {
        self.is_connected() && block_decomposition(self).blocks.iter().all(|b| b.kind != BlockKind::Bridge)
    }

    /// Pads of the cycle and loop blocks, ignoring bridges and other blocks.
    pub fn cycle_pads(&self) -> Vec<Pad> {
        let dec = block_decomposition(self);
        pads_of(self, &dec).pads().to_vec()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BcdNode {
    /// A cut vertex or a root.
    Circle(VertexId),
    /// A block, with vertex ids and edge indices; loops at non-cut vertices
    /// are folded into the block containing them.
    Block { vertices: Vec<VertexId>, edges: Vec<usize> },
}

/// Block-cut tree of a graph monomial with roots appended as circle nodes.
#[derive(Clone, Debug)]
pub struct BcdTree {
    pub nodes: Vec<BcdNode>,
    pub adj: Vec<Vec<usize>>,
    pub input_node: usize,
    pub output_node: usize,
}

impl BcdTree {
    /// Node path from the input circle to the output circle.
    pub fn path(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let mut prev = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut q = VecDeque::from([self.input_node]);
        seen[self.input_node] = true;
        while let Some(x) = q.pop_front() {
            for &y in &self.adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    prev[y] = x;
                    q.push_back(y);
                }
            }
        }
        let mut path = vec![self.output_node];
        while *path.last().unwrap() != self.input_node {
            path.push(prev[*path.last().unwrap()]);
        }
        path.reverse();
        path
    }

    pub fn circle_of(&self, v: VertexId) -> Option<usize> {
        self.nodes.iter().position(|x| *x == BcdNode::Circle(v))
    }
}

pub fn bcd_tree(t: &GraphMonomial) -> BcdTree {
    let g = t.graph();
    let dec = block_decomposition(g);
    let vid = |i: usize| g.vertices()[i];
    let mut nodes = Vec::new();
    let mut block_members: Vec<Vec<usize>> = Vec::new();
    let mut home = vec![usize::MAX; g.num_vertices()];
    for b in &dec.blocks {
        let mut edges = b.edges.clone();
        for &v in &b.vertices {
            if !dec.is_cut[v] {
                edges.extend(&dec.loops[v]);
                home[v] = nodes.len();
            }
        }
        edges.sort_unstable();
        block_members.push(b.vertices.clone());
        nodes.push(BcdNode::Block { vertices: b.vertices.iter().map(|&v| vid(v)).collect(), edges });
    }
    for v in 0..g.num_vertices() {
        if home[v] == usize::MAX && !dec.is_cut[v] && !dec.loops[v].is_empty() {
            // isolated vertex carrying loops (single-vertex graph)
            home[v] = nodes.len();
            block_members.push(vec![v]);
            nodes.push(BcdNode::Block { vertices: vec![vid(v)], edges: dec.loops[v].clone() });
        }
    }
    let mut adj = vec![Vec::new(); nodes.len()];
    let mut circle = vec![usize::MAX; g.num_vertices()];
    let roots = [g.idx(t.input()), g.idx(t.output())];
    for v in 0..g.num_vertices() {
        if dec.is_cut[v] || roots.contains(&v) {
            circle[v] = nodes.len();
            nodes.push(BcdNode::Circle(vid(v)));
            adj.push(Vec::new());
        }
    }
    for v in 0..g.num_vertices() {
        if circle[v] == usize::MAX {
            continue;
        }
        let c = circle[v];
        if dec.is_cut[v] {
            for (b, members) in block_members.iter().enumerate().take(dec.blocks.len()) {
                if members.contains(&v) {
                    adj[c].push(b);
                    adj[b].push(c);
                }
            }
            if !dec.loops[v].is_empty() {
                let b = nodes.len();
                nodes.push(BcdNode::Block { vertices: vec![vid(v)], edges: dec.loops[v].clone() });
                adj.push(vec![c]);
                adj[c].push(b);
            }
        } else if home[v] != usize::MAX {
            adj[c].push(home[v]);
            adj[home[v]].push(c);
        }
    }
    BcdTree { input_node: circle[roots[0]], output_node: circle[roots[1]], nodes, adj }
}
