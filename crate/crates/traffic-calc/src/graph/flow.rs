//! Edge connectivity by unit-capacity augmenting paths on the undirected
//! multigraph (loops ignored).

use std::collections::VecDeque;

use super::{Graph, VertexId};
use crate::error::{Error, Result};

/// λ(v, w): the maximum number of edge-disjoint undirected paths.
pub fn edge_connectivity<L: Clone>(g: &Graph<L>, v: VertexId, w: VertexId) -> Result<usize> {
    edge_connectivity_capped(g, v, w, usize::MAX)
}

/// λ(v, w), stopping as soon as `cap` paths have been found.
pub fn edge_connectivity_capped<L: Clone>(g: &Graph<L>, v: VertexId, w: VertexId, cap: usize) -> Result<usize> {
    let s = g.index_of(v).ok_or(Error::UnknownVertex(v))?;
    let t = g.index_of(w).ok_or(Error::UnknownVertex(w))?;
    if s == t {
        return Err(Error::Precondition("edge connectivity of a vertex with itself".into()));
    }
    Ok(flow_indices(g.num_vertices(), &g.endpoints(), s, t, cap))
}

/// Each undirected edge becomes a pair of opposite arcs of capacity one.
pub(crate) fn flow_indices(n: usize, ends: &[(usize, usize)], s: usize, t: usize, cap: usize) -> usize {
    // arc 2k: a→b, arc 2k+1: b→a
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut head = Vec::with_capacity(2 * ends.len());
    for (k, &(a, b)) in ends.iter().enumerate() {
        head.push(b);
        head.push(a);
        if a != b {
            adj[a].push(2 * k);
            adj[b].push(2 * k + 1);
        }
    }
    // flow on arc, in {-1, 0, 1}: flow on 2k is minus flow on 2k+1
    let mut flow = vec![0i8; ends.len()];
    let residual = |arc: usize, flow: &[i8]| -> bool {
        let f = flow[arc / 2];
        if arc % 2 == 0 {
            f < 1
        } else {
            f > -1
        }
    };
    let mut total = 0;
    while total < cap {
        let mut prev = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            if x == t {
                break;
            }
            for &arc in &adj[x] {
                let y = head[arc];
                if !seen[y] && residual(arc, &flow) {
                    seen[y] = true;
                    prev[y] = arc;
                    q.push_back(y);
                }
            }
        }
        if !seen[t] {
            break;
        }
        let mut x = t;
        while x != s {
            let arc = prev[x];
            flow[arc / 2] += if arc % 2 == 0 { 1 } else { -1 };
            x = head[arc ^ 1];
        }
        total += 1;
    }
    total
}

/// Cactus test straight from the definition in terms of connectivity:
/// λ(v, w) = 2 for every pair of distinct vertices. Used as an oracle.
pub fn lambda_cactus_oracle<L: Clone>(g: &Graph<L>) -> bool {
    let n = g.num_vertices();
    let ends = g.endpoints();
    (0..n).all(|a| (a + 1..n).all(|b| flow_indices(n, &ends, a, b, 3) == 2))
}
