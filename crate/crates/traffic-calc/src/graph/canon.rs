//! Canonical keys for labeled rooted multidigraphs.
//!
//! Rooted trees use an AHU-style encoding. Everything else goes through
//! colour refinement with individualisation; branches that differ only by a
//! transposition of twin vertices are skipped.

use super::{GraphMonomial, LabeledGraph, TestGraph, VertexId};
use crate::error::{Error, Result};

pub const DEFAULT_CAP: usize = 12;


#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CanonMode {
    Iso,
    /// Keys of `t` in this mode equal iso keys of `t'` exactly when a
    /// direction-reversing isomorphism maps `t` onto `t'`.
    AntiIso,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey(Vec<u32>);

impl CanonicalKey {
    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Literal encoding of the graph as stored; equal only for identical
    /// graphs up to vertex and edge renumbering in storage order.
    pub(crate) fn structural(m: &GraphMonomial) -> CanonicalKey {
        let c = m.compact();
        let mut key = vec![KIND_RAW, c.graph().num_vertices() as u32, c.input(), c.output()];
        for e in c.graph().edges() {
            key.extend([e.src, e.dst, atom_code(e)]);
        }
        CanonicalKey(key)
    }
}

const KIND_TREE: u32 = 1;
const KIND_GENERAL: u32 = 2;
const KIND_RAW: u32 = 3;
const NO_ROOT: u32 = u32::MAX;

pub fn canonical_form(m: &GraphMonomial, mode: CanonMode) -> Result<CanonicalKey> {
    canonical_form_with_cap(m.graph(), Some((m.input(), m.output())), mode, DEFAULT_CAP)
}

/// Key of a labeled graph with optional (input, output) roots.
pub fn canonical_form_with_cap(
    g: &LabeledGraph,
    roots: Option<(VertexId, VertexId)>,
    mode: CanonMode,
    cap: usize,
) -> Result<CanonicalKey> {
    let flipped;
    let g = match mode {
        CanonMode::Iso => g,
        CanonMode::AntiIso => {
            flipped = g.flip();
            &flipped
        }
    };
    if let Some((i, o)) = roots {
        for v in [i, o] {
            g.index_of(v).ok_or(Error::UnknownVertex(v))?;
        }
        if g.is_tree() {
            return Ok(tree_key(g, i, o));
        }
    }
    if g.num_vertices() > cap {
        return Err(Error::CapExceeded { what: "canonical form vertex count", size: g.num_vertices(), cap });
    }
    Ok(general_key(g, roots))
}

/// Whether the underlying rooted digraphs (labels ignored) are related by a
/// direction-reversing isomorphism.
pub fn anti_isomorphic(a: &GraphMonomial, b: &GraphMonomial) -> Result<bool> {
    let strip = |m: &GraphMonomial| m.graph().map_labels(|_| super::EdgeAtom::new(0));
    let ka = canonical_form_with_cap(&strip(a), Some((a.input(), a.output())), CanonMode::AntiIso, DEFAULT_CAP)?;
    let kb = canonical_form_with_cap(&strip(b), Some((b.input(), b.output())), CanonMode::Iso, DEFAULT_CAP)?;
    Ok(ka == kb)
}

impl GraphMonomial {
    pub fn canonical_key(&self) -> Result<CanonicalKey> {
        canonical_form(self, CanonMode::Iso)
    }
}

impl TestGraph {
    pub fn canonical_key(&self) -> Result<CanonicalKey> {
        canonical_form_with_cap(self.graph(), None, CanonMode::Iso, DEFAULT_CAP)
    }
}

fn atom_code(e: &super::Edge<super::EdgeAtom>) -> u32 {
    e.label.gen * 2 + u32::from(e.label.star)
}

fn tree_key(g: &LabeledGraph, input: VertexId, output: VertexId) -> CanonicalKey {
    const OPEN: u32 = u32::MAX;
    const CLOSE: u32 = u32::MAX - 1;
    let n = g.num_vertices();
    let inc = g.incidence();
    let ends = g.endpoints();
    let root = g.idx(input);
    let out = g.idx(output);
    // iterative post-order
    let mut order = Vec::with_capacity(n);
    let mut parent = vec![usize::MAX; n];
    let mut stack = vec![root];
    let mut seen = vec![false; n];
    seen[root] = true;
    while let Some(v) = stack.pop() {
        order.push(v);
        for &(_, w) in &inc[v] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = v;
                stack.push(w);
            }
        }
    }
    let mut code: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &v in order.iter().rev() {
        let mut kids: Vec<Vec<u32>> = inc[v]
            .iter()
            .filter(|&&(_, w)| parent[w] == v)
            .map(|&(k, w)| {
                let dir = u32::from(ends[k].0 == v);
                let mut c = vec![2 + atom_code(&g.edges()[k]) * 2 + dir];
                c.extend(std::mem::take(&mut code[w]));
                c
            })
            .collect();
        kids.sort();
        let mut c = vec![OPEN, u32::from(v == out)];
        for k in kids {
            c.extend(k);
        }
        c.push(CLOSE);
        code[v] = c;
    }
    let mut key = vec![KIND_TREE];
    key.append(&mut code[root]);
    CanonicalKey(key)
}

struct Search<'a> {
    g: &'a LabeledGraph,
    ends: Vec<(usize, usize)>,
    inc: Vec<Vec<(usize, usize)>>,
    roots: Option<(usize, usize)>,
    best: Option<Vec<u32>>,
}

impl<'a> Search<'a> {
    fn rerank<K: Ord + Clone>(keys: &[K]) -> Vec<u32> {
        let mut sorted: Vec<K> = keys.to_vec();
        sorted.sort();
        sorted.dedup();
        keys.iter().map(|k| sorted.binary_search(k).unwrap() as u32).collect()
    }

    fn refine(&self, mut colors: Vec<u32>) -> Vec<u32> {
        let n = colors.len();
        let mut ncells = Self::count(&colors);
        loop {
            let sigs: Vec<(u32, Vec<(u32, u32, u32)>)> = (0..n)
                .map(|v| {
                    let mut nb: Vec<(u32, u32, u32)> = self.inc[v]
                        .iter()
                        .map(|&(k, w)| {
                            let (s, d) = self.ends[k];
                            let dir = if s == d { 2 } else if s == v { 0 } else { 1 };
                            (dir, atom_code(&self.g.edges()[k]), colors[w])
                        })
                        .collect();
                    nb.sort_unstable();
                    (colors[v], nb)
                })
                .collect();
            colors = Self::rerank(&sigs);
            let c = Self::count(&colors);
            if c == ncells {
                return colors;
            }
            ncells = c;
        }
    }

    fn count(colors: &[u32]) -> usize {
        let mut c = colors.to_vec();
        c.sort_unstable();
        c.dedup();
        c.len()
    }

    fn encode(&self, colors: &[u32]) -> Vec<u32> {
        let mut edges: Vec<[u32; 3]> = self
            .ends
            .iter()
            .zip(self.g.edges())
            .map(|(&(s, d), e)| [colors[s], colors[d], atom_code(e)])
            .collect();
        edges.sort_unstable();
        let mut key = vec![KIND_GENERAL, colors.len() as u32];
        match self.roots {
            Some((i, o)) => key.extend([colors[i], colors[o]]),
            None => key.extend([NO_ROOT, NO_ROOT]),
        }
        key.extend(edges.into_iter().flatten());
        key
    }

    /// Swapping `u` and `w` preserves the edge multiset.
    fn twins(&self, u: usize, w: usize) -> bool {
        let swap = |x: usize| if x == u { w } else if x == w { u } else { x };
        let mut a: Vec<(usize, usize, u32)> =
            self.ends.iter().zip(self.g.edges()).map(|(&(s, d), e)| (s, d, atom_code(e))).collect();
        let mut b: Vec<(usize, usize, u32)> = a.iter().map(|&(s, d, c)| (swap(s), swap(d), c)).collect();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }

    fn search(&mut self, colors: Vec<u32>) {
        let n = colors.len();
        let mut sizes = vec![0usize; n];
        for &c in &colors {
            sizes[c as usize] += 1;
        }
        let target = (0..n as u32).find(|&c| sizes[c as usize] > 1);
        let Some(target) = target else {
            let code = self.encode(&colors);
            if self.best.as_ref().map_or(true, |b| code < *b) {
                self.best = Some(code);
            }
            return;
        };
        let cell: Vec<usize> = (0..n).filter(|&v| colors[v] == target).collect();
        let mut tried: Vec<usize> = Vec::new();
        for &v in &cell {
            if tried.iter().any(|&u| self.twins(u, v)) {
                continue;
            }
            tried.push(v);
            let keys: Vec<(u32, u8)> = (0..n).map(|u| (colors[u], u8::from(u != v))).collect();
            let next = self.refine(Self::rerank(&keys));
            self.search(next);
        }
    }
}

fn general_key(g: &LabeledGraph, roots: Option<(VertexId, VertexId)>) -> CanonicalKey {
    let roots = roots.map(|(i, o)| (g.idx(i), g.idx(o)));
    let mut s = Search { g, ends: g.endpoints(), inc: g.incidence(), roots, best: None };
    let init: Vec<u32> = (0..g.num_vertices())
        .map(|v| match roots {
            Some((i, o)) => u32::from(v == i) * 2 + u32::from(v == o),
            None => 0,
        })
        .collect();
    let start = s.refine(Search::rerank(&init));
    s.search(start);
    CanonicalKey(s.best.unwrap())
}
