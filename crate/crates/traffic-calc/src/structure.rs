//! Reductions of graph monomials that preserve every trace `ψ(t·s)`.
//!
//! All reductions assume a cactus-type distribution: vertex pairs joined by
//! three edge-disjoint paths are identified in every contributing quotient,
//! and two-edge-connected pieces hanging at a single vertex factor out.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{bcd_tree, BcdNode, Edge, EdgeAtom, Graph, GraphMonomial, LabeledGraph, Pad, TestGraph, VertexId};
use crate::operad::{embed_word, GraphPolynomial};
use crate::partitions::{all_partitions, pair_partitions};
use crate::traffic::{components_without, three_connected_pair, TrafficEvaluator};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest cycle length minus one accepted by [`prune_cycle`].
pub const PRUNE_CYCLE_CAP: usize = 10;
/// Most Q-variables in a direct moment sum.
pub const Q_FACTOR_CAP: usize = 6;
/// Most vertices in the glued graph of a direct moment sum.
pub const Q_VERTEX_CAP: usize = 24;

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }

    fn labels(&mut self) -> Vec<usize> {
        (0..self.0.len()).map(|x| self.find(x)).collect()
    }
}

fn identify_labels<L: Clone>(g: &Graph<L>, pairs: &[(VertexId, VertexId)]) -> Vec<usize> {
    let mut uf = UnionFind::new(g.num_vertices());
    for &(a, b) in pairs {
        uf.union(g.index_of(a).unwrap(), g.index_of(b).unwrap());
    }
    uf.labels()
}

fn identify_monomial(t: &GraphMonomial, pairs: &[(VertexId, VertexId)]) -> GraphMonomial {
    if pairs.is_empty() {
        return t.clone();
    }
    t.quotient_by_labels(&identify_labels(t.graph(), pairs))
}

fn identify_graph(g: &LabeledGraph, pairs: &[(VertexId, VertexId)]) -> LabeledGraph {
    if pairs.is_empty() {
        return g.clone();
    }
    g.quotient_by_labels(&identify_labels(g, pairs))
}

/// Identifies 3-edge-connected vertex pairs until the graph is a
/// quasi-cactus.
pub fn simplify_three_connections(t: &GraphMonomial) -> GraphMonomial {
    let mut t = t.clone();
    while let Some((a, b)) = three_connected_pair(t.graph()) {
        let n = t.num_vertices();
        let labels: Vec<usize> = (0..n).map(|x| if x == b { a } else { x }).collect();
        t = t.quotient_by_labels(&labels);
    }
    t
}

/// Excises loops and root-free two-edge-connected pieces hanging at a single
/// vertex, returning the product of their traffic states.
pub fn prune_tec(t: &GraphMonomial, ev: &TrafficEvaluator<'_>) -> Result<(Complex64, GraphMonomial)> {
    let mut factor = ONE;
    let mut g = t.graph().clone();
    let roots = [t.input(), t.output()];
    loop {
        let loops: Vec<usize> = (0..g.num_edges()).filter(|&k| g.edges()[k].is_loop()).collect();
        if !loops.is_empty() {
            for &k in &loops {
                factor *= ev.spec().pad_weight(&[(g.edges()[k].label, true)])?;
            }
            g = g.without(&loops, &[]);
            continue;
        }
        match hanging_piece(&g, &roots) {
            Some((edges, drop)) => {
                let piece = g.edge_subgraph(&edges, &[]);
                factor *= ev.state(&TestGraph::new(piece)?)?;
                g = g.without(&edges, &drop);
            }
            None => break,
        }
    }
    Ok((factor, GraphMonomial::new_unchecked(g, t.input(), t.output())))
}

/// Edge indices of a two-edge-connected piece hanging at one vertex with no
/// root off the attachment, plus the vertex ids to delete with it.
fn hanging_piece(g: &LabeledGraph, roots: &[VertexId]) -> Option<(Vec<usize>, Vec<VertexId>)> {
    let n = g.num_vertices();
    let ends = g.endpoints();
    let inc = g.incidence();
    for v in 0..n {
        for comp in components_without(n, &inc, v) {
            let ids: Vec<VertexId> = comp.iter().map(|&x| g.vertices()[x]).collect();
            if ids.iter().any(|x| roots.contains(x)) {
                continue;
            }
            let inside = |x: usize| x == v || comp.binary_search(&x).is_ok();
            let edges: Vec<usize> = (0..ends.len()).filter(|&k| inside(ends[k].0) && inside(ends[k].1)).collect();
            if g.edge_subgraph(&edges, &[]).is_two_edge_connected() {
                return Some((edges, ids));
            }
        }
    }
    None
}

/// Circle vertices and block nodes along the input→output path of the
/// block-cut tree: `(circles, blocks)` with `blocks[i]` between `circles[i]`
/// and `circles[i+1]`.
fn bcd_path(t: &GraphMonomial) -> (Vec<VertexId>, Vec<Vec<usize>>) {
    let tree = bcd_tree(t);
    let mut circles = Vec::new();
    let mut blocks = Vec::new();
    for k in tree.path() {
        match &tree.nodes[k] {
            BcdNode::Circle(v) => circles.push(*v),
            BcdNode::Block { edges, .. } => {
                let g = t.graph();
                blocks.push(edges.iter().copied().filter(|&e| !g.edges()[e].is_loop()).collect())
            }
        }
    }
    (circles, blocks)
}

/// Replaces every non-bridge block on the input→output path by its
/// diagonal, merging the two path vertices it joins.
pub fn conditional_expectation(t: &GraphMonomial) -> GraphMonomial {
    let (circles, blocks) = bcd_path(t);
    let pairs: Vec<(VertexId, VertexId)> =
        blocks.iter().enumerate().filter(|(_, b)| b.len() != 1).map(|(i, _)| (circles[i], circles[i + 1])).collect();
    identify_monomial(t, &pairs)
}

/// Splits `t = d_n m_{n-1} d_{n-1} ⋯ m_1 d_1` along the path from input to
/// output; factors are returned in product order.
pub fn block_factorize(t: &GraphMonomial) -> Vec<GraphMonomial> {
    if t.is_diagonal() {
        return vec![t.clone()];
    }
    let g = t.graph();
    let (circles, blocks) = bcd_path(t);
    let on_path: Vec<bool> = {
        let mut f = vec![false; g.num_edges()];
        blocks.iter().flatten().for_each(|&e| f[e] = true);
        f
    };
    let mut uf = UnionFind::new(g.num_vertices());
    let ends = g.endpoints();
    for (k, &(s, d)) in ends.iter().enumerate() {
        if !on_path[k] {
            uf.union(s, d);
        }
    }
    let comp = uf.labels();
    let circle_comp: Vec<usize> = circles.iter().map(|&c| comp[g.index_of(c).unwrap()]).collect();
    // every off-path component belongs to a circle or hangs off one block
    let mut owner_block: Vec<Option<usize>> = vec![None; g.num_vertices()];
    for (i, b) in blocks.iter().enumerate() {
        for &e in b {
            for x in [ends[e].0, ends[e].1] {
                if !circle_comp.contains(&comp[x]) {
                    owner_block[comp[x]] = Some(i);
                }
            }
        }
    }
    let diag = |c: VertexId| {
        let r = comp[g.index_of(c).unwrap()];
        let edges: Vec<usize> = (0..ends.len()).filter(|&k| !on_path[k] && comp[ends[k].0] == r).collect();
        GraphMonomial::new_unchecked(g.edge_subgraph(&edges, &[c]), c, c)
    };
    let mut out = Vec::new();
    for i in (0..circles.len()).rev() {
        out.push(diag(circles[i]));
        if i > 0 {
            let b = i - 1;
            let mut edges = blocks[b].clone();
            edges.extend((0..ends.len()).filter(|&k| !on_path[k] && owner_block[comp[ends[k].0]] == Some(b)));
            edges.sort_unstable();
            let m = GraphMonomial::new_unchecked(g.edge_subgraph(&edges, &[]), circles[b], circles[b + 1]);
            out.push(m);
        }
    }
    out
}

/// A cycle with diagonal petals at its vertices; petal 0 holds the root.
#[derive(Clone, Debug)]
pub struct FlowerDecomposition {
    pub cycle_vertices: Vec<VertexId>,
    pub petals: Vec<GraphMonomial>,
    pub cycle_edges: Vec<Edge<EdgeAtom>>,
    /// `along[i]`: edge `i` points from `cycle_vertices[i]` to the next one.
    pub along: Vec<bool>,
    petal_edges: Vec<Vec<usize>>,
    cycle_idx: Vec<usize>,
    source: GraphMonomial,
}

impl FlowerDecomposition {
    pub fn new(t: &GraphMonomial, pad: &Pad) -> Result<Self> {
        if !t.is_diagonal() {
            return Err(Error::Precondition("cycle pruning needs a diagonal monomial".into()));
        }
        let g = t.graph();
        let ends = g.endpoints();
        let len = pad.edges.len();
        if len == 0 || pad.edges.iter().any(|&k| k >= g.num_edges()) {
            return Err(Error::Precondition("pad edges are not edges of the monomial".into()));
        }
        let start: Vec<usize> =
            (0..len).map(|j| if pad.along[j] { ends[pad.edges[j]].0 } else { ends[pad.edges[j]].1 }).collect();
        let mut uf = UnionFind::new(g.num_vertices());
        for (k, &(s, d)) in ends.iter().enumerate() {
            if !pad.edges.contains(&k) {
                uf.union(s, d);
            }
        }
        let comp = uf.labels();
        let mut seen = std::collections::HashSet::new();
        if !start.iter().all(|&v| seen.insert(comp[v])) {
            return Err(Error::Precondition("cycle is not a pad of a quasi-cactus".into()));
        }
        let root_comp = comp[g.index_of(t.input()).unwrap()];
        let r = start.iter().position(|&v| comp[v] == root_comp).expect("connected");
        let rot = |j: usize| (j + r) % len;
        let cycle_idx: Vec<usize> = (0..len).map(|j| pad.edges[rot(j)]).collect();
        let along: Vec<bool> = (0..len).map(|j| pad.along[rot(j)]).collect();
        let verts: Vec<usize> = (0..len).map(|j| start[rot(j)]).collect();
        let mut petals = Vec::new();
        let mut petal_edges = Vec::new();
        for (i, &v) in verts.iter().enumerate() {
            let edges: Vec<usize> = (0..ends.len()).filter(|&k| !pad.edges.contains(&k) && comp[ends[k].0] == comp[v]).collect();
            let vid = g.vertices()[v];
            let root = if i == 0 { t.input() } else { vid };
            petals.push(GraphMonomial::new_unchecked(g.edge_subgraph(&edges, &[vid, root]), root, root));
            petal_edges.push(edges);
        }
        Ok(FlowerDecomposition {
            cycle_vertices: verts.iter().map(|&v| g.vertices()[v]).collect(),
            petals,
            cycle_edges: cycle_idx.iter().map(|&k| g.edges()[k].clone()).collect(),
            along,
            petal_edges,
            cycle_idx,
            source: t.clone(),
        })
    }

    /// Cycle length minus one.
    pub fn n(&self) -> usize {
        self.cycle_vertices.len() - 1
    }

    /// Glues the petals back onto the cycle.
    pub fn reassemble(&self) -> GraphMonomial {
        let mut vs: Vec<VertexId> = self.petals.iter().flat_map(|p| p.graph().vertices().to_vec()).collect();
        vs.extend(&self.cycle_vertices);
        vs.sort_unstable();
        vs.dedup();
        let mut es: Vec<Edge<EdgeAtom>> = self.petals.iter().flat_map(|p| p.graph().edges().to_vec()).collect();
        es.extend(self.cycle_edges.iter().cloned());
        es.sort_by_key(|e| e.id);
        let root = self.petals[0].input();
        GraphMonomial::new_unchecked(Graph::from_parts_unchecked(vs, es), root, root)
    }

    /// Cycle plus the petals outside `a`, with `v_0 ~ v_i` for `i ∈ b`.
    fn remainder(&self, a: u32, b: u32) -> LabeledGraph {
        let g = self.source.graph();
        let mut edges = self.cycle_idx.clone();
        for i in 1..=self.n() {
            if a & (1 << (i - 1)) == 0 {
                edges.extend(&self.petal_edges[i]);
            }
        }
        edges.sort_unstable();
        let sub = g.edge_subgraph(&edges, &self.cycle_vertices);
        identify_graph(&sub, &self.glue_pairs(b))
    }

    /// Petal 0 with the petals in `a` glued at `v_0`.
    fn gathered(&self, a: u32) -> GraphMonomial {
        let g = self.source.graph();
        let mut edges = self.petal_edges[0].clone();
        let mut extra = vec![self.cycle_vertices[0], self.source.input()];
        for i in 1..=self.n() {
            if a & (1 << (i - 1)) != 0 {
                edges.extend(&self.petal_edges[i]);
                extra.push(self.cycle_vertices[i]);
            }
        }
        edges.sort_unstable();
        let root = self.source.input();
        let m = GraphMonomial::new_unchecked(g.edge_subgraph(&edges, &extra), root, root);
        identify_monomial(&m, &self.glue_pairs(a))
    }

    fn glue_pairs(&self, set: u32) -> Vec<(VertexId, VertexId)> {
        (1..=self.n()).filter(|i| set & (1 << (i - 1)) != 0).map(|i| (self.cycle_vertices[0], self.cycle_vertices[i])).collect()
    }
}

/// Rewrites a diagonal flower as a polynomial in its petals:
/// `Σ_A c_A · d̂_A` with `c_A = Σ_{B ⊇ A} (−1)^{|B∖A|} τ[R_{A,B}]`, where
/// `d̂_A` glues the petals in `A` at the stem and `R_{A,B}` is the cycle with
/// the remaining petals and `v_0` identified with `v_i` for `i ∈ B`.
pub fn prune_cycle(t: &GraphMonomial, pad: &Pad, ev: &TrafficEvaluator<'_>) -> Result<GraphPolynomial> {
    let fl = FlowerDecomposition::new(t, pad)?;
    let n = fl.n();
    if n > PRUNE_CYCLE_CAP {
        return Err(Error::CapExceeded { what: "cycle length", size: n + 1, cap: PRUNE_CYCLE_CAP + 1 });
    }
    let full: u32 = (1u32 << n) - 1;
    let mut out = GraphPolynomial::zero();
    for a in 0..=full {
        let rest = full & !a;
        let mut c = ZERO;
        // submasks of the complement, including the empty one
        let mut s = rest;
        loop {
            let b = a | s;
            let sign = if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            c += ev.state(&TestGraph::new(fl.remainder(a, b))?)? * sign;
            if s == 0 {
                break;
            }
            s = (s - 1) & rest;
        }
        if c != ZERO {
            out.add_term(c, fl.gathered(a));
        }
    }
    Ok(out)
}

/// Diagonal monomial to tree polynomial by repeated cycle pruning.
fn reduce_diagonal(d: &GraphMonomial, ev: &TrafficEvaluator<'_>) -> Result<GraphPolynomial> {
    let mut done = GraphPolynomial::zero();
    let mut work = GraphPolynomial::monomial(d.clone());
    while !work.is_empty() {
        let mut next = GraphPolynomial::zero();
        for (c, m) in work.terms() {
            let m = simplify_three_connections(m);
            let (f, m) = prune_tec(&m, ev)?;
            let c = c * f;
            if c == ZERO {
                continue;
            }
            match m.graph().cycle_pads().first() {
                None => done.add_term(c, m),
                Some(pad) => {
                    for (c2, m2) in prune_cycle(&m, pad, ev)?.terms() {
                        next.add_term(c * c2, m2.clone());
                    }
                }
            }
        }
        work = next;
    }
    Ok(done)
}

/// Polynomial of tree monomials equivalent to `t` under ψ.
pub fn tree_reduce(t: &GraphMonomial, ev: &TrafficEvaluator<'_>) -> Result<GraphPolynomial> {
    let t = simplify_three_connections(&conditional_expectation(t));
    let (c, t) = prune_tec(&t, ev)?;
    if c == ZERO {
        return Ok(GraphPolynomial::zero());
    }
    let mut acc = GraphPolynomial::scalar(c);
    for f in block_factorize(&t) {
        let p = if f.is_diagonal() { reduce_diagonal(&f, ev)? } else { GraphPolynomial::monomial(f) };
        acc = acc.mul(&p);
    }
    Ok(acc)
}

/// Small monomials (at most three vertices) used to test equivalence
/// modulo ψ: single edges, transposes and degrees of every atom, and
/// products, Hadamard products and degree products of pairs of atoms.
pub fn probe_basis(generators: &[u32]) -> Vec<GraphMonomial> {
    let atoms: Vec<EdgeAtom> = generators.iter().flat_map(|&g| [EdgeAtom::new(g), EdgeAtom::new(g).adjoint()]).collect();
    let mut out = vec![GraphMonomial::unit()];
    for &x in &atoms {
        out.push(GraphMonomial::edge(x));
        out.push(GraphMonomial::edge_transpose(x));
        out.push(GraphMonomial::rdeg(x));
        out.push(GraphMonomial::cdeg(x));
    }
    for (i, &x) in atoms.iter().enumerate() {
        for &y in &atoms[i..] {
            out.push(embed_word(&[x, y]));
            out.push(GraphMonomial::edge(x).hadamard(&GraphMonomial::edge(y)));
            out.push(GraphMonomial::rdeg(x).product(&GraphMonomial::rdeg(y)));
        }
    }
    out
}

/// `max_s |ψ(lhs·s) − ψ(rhs·s)|` over the probes.
pub fn probe_residual(
    ev: &TrafficEvaluator<'_>,
    lhs: &GraphPolynomial,
    rhs: &GraphPolynomial,
    probes: &[GraphMonomial],
) -> Result<f64> {
    let mut worst = 0.0f64;
    for s in probes {
        let sp = GraphPolynomial::monomial(s.clone());
        worst = worst.max((ev.trace_psi(&lhs.mul(&sp))? - ev.trace_psi(&rhs.mul(&sp))?).norm());
    }
    Ok(worst)
}

/// Membership in the domain of the Q-transform: a diagonal tree whose root
/// has degree one and with no vertex of in- and out-degree both one.
/// Edge labels are always variables, so the no-constant-edge condition holds
/// by construction.
pub fn is_in_d(t: &GraphMonomial) -> bool {
    let g = t.graph();
    t.is_diagonal()
        && g.is_tree()
        && g.degree(t.input()) == 1
        && g.vertices().iter().all(|&v| !(g.in_degree(v) == 1 && g.out_degree(v) == 1))
}

/// `Q(t) = Σ_π μ(0, π) t^π`.
pub fn q_transform(t: &GraphMonomial) -> Result<GraphPolynomial> {
    if t.is_unit() {
        return Ok(GraphPolynomial::monomial(t.clone()));
    }
    if !is_in_d(t) {
        return Err(Error::Precondition("Q-transform needs a rooted tree in the domain D".into()));
    }
    let mut out = GraphPolynomial::zero();
    for pi in all_partitions(t.num_vertices())? {
        out.add_term(Complex64::new(pi.mobius_from_zero() as f64, 0.0), t.quotient_by_labels(pi.labels()));
    }
    Ok(out)
}

/// A tree monomial in the domain D together with its Q-expansion.
#[derive(Clone, Debug)]
pub struct QVariable {
    base: GraphMonomial,
    expansion: GraphPolynomial,
}

impl QVariable {
    pub fn new(t: GraphMonomial) -> Result<Self> {
        let expansion = q_transform(&t)?;
        Ok(QVariable { base: t, expansion })
    }

    pub fn base(&self) -> &GraphMonomial {
        &self.base
    }

    pub fn expansion(&self) -> &GraphPolynomial {
        &self.expansion
    }

    pub fn adjoint(&self) -> QVariable {
        QVariable { base: self.base.adjoint(), expansion: self.expansion.adjoint() }
    }
}

/// `ψ(Q(t_1)⋯Q(t_n))` as a sum of τ⁰ over partitions of the glued trees in
/// which the common root stays alone and each block meets each tree at most
/// once.
pub fn q_moments(ts: &[QVariable], ev: &TrafficEvaluator<'_>) -> Result<Complex64> {
    let ts: Vec<&QVariable> = ts.iter().filter(|q| !q.base.is_unit()).collect();
    if ts.len() > Q_FACTOR_CAP {
        return Err(Error::CapExceeded { what: "Q-moment factors", size: ts.len(), cap: Q_FACTOR_CAP });
    }
    let nv = 1 + ts.iter().map(|q| q.base.num_vertices() - 1).sum::<usize>();
    if nv > Q_VERTEX_CAP {
        return Err(Error::CapExceeded { what: "Q-moment vertices", size: nv, cap: Q_VERTEX_CAP });
    }
    let mut masks = vec![u64::MAX];
    let mut edges = Vec::new();
    let mut next = 1u32;
    for (i, q) in ts.iter().enumerate() {
        let g = q.base.graph();
        let root = q.base.input();
        let map: Vec<u32> = g
            .vertices()
            .iter()
            .map(|&v| {
                if v == root {
                    0
                } else {
                    masks.push(1 << i);
                    next += 1;
                    next - 1
                }
            })
            .collect();
        for e in g.edges() {
            let id = edges.len() as u32;
            edges.push(Edge { id, src: map[g.idx(e.src)], dst: map[g.idx(e.dst)], label: e.label });
        }
    }
    let glued = Graph::new((0..next).collect(), edges)?;
    ev.restricted_injective_sum(&glued, &masks)
}

/// Direct moment against its pair-partition expansion.
#[derive(Clone, Copy, Debug)]
pub struct WickReport {
    pub direct: Complex64,
    pub wick: Complex64,
    pub abs_error: f64,
}

pub fn wick_check(ts: &[QVariable], ev: &TrafficEvaluator<'_>) -> Result<WickReport> {
    let direct = q_moments(ts, ev)?;
    let n = ts.len();
    let mut cov = vec![vec![ZERO; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            cov[i][j] = q_moments(&[ts[i].clone(), ts[j].clone()], ev)?;
        }
    }
    let mut wick = ZERO;
    if n % 2 == 0 {
        for p in pair_partitions(n)? {
            wick += p.blocks().iter().map(|b| cov[b[0]][b[1]]).product::<Complex64>();
        }
    }
    Ok(WickReport { direct, wick, abs_error: (direct - wick).norm() })
}

/// Covariance `Γ_ij = ψ(Q(t_i) Q(t_j)*)` and pseudo-covariance
/// `C_ij = ψ(Q(t_i) Q(t_j))`.
pub fn gaussian_covariances(
    ts: &[QVariable],
    ev: &TrafficEvaluator<'_>,
) -> Result<(Vec<Vec<Complex64>>, Vec<Vec<Complex64>>)> {
    let n = ts.len();
    let mut gamma = vec![vec![ZERO; n]; n];
    let mut c = vec![vec![ZERO; n]; n];
    for i in 0..n {
        for j in 0..n {
            gamma[i][j] = q_moments(&[ts[i].clone(), ts[j].adjoint()], ev)?;
            c[i][j] = q_moments(&[ts[i].clone(), ts[j].clone()], ev)?;
        }
    }
    Ok((gamma, c))
}
