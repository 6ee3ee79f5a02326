//! Sums over vertex maps by eliminating one vertex at a time.
//!
//! Every edge `s → d` carrying `M` contributes the factor `M(x_d, x_s)`.
//! Eliminating a vertex with at most two distinct neighbours costs one
//! matrix product; when every remaining vertex has three or more, the
//! cheapest one is conditioned on (summed explicitly), which multiplies the
//! cost by `N` but keeps all factors at two variables.

use num_complex::Complex64;

use super::cmat::{CMat, CVec};

#[derive(Clone, Debug)]
enum Factor {
    Scalar(Complex64),
    Unary(usize, CVec),
    /// `M(x_a, x_b)`.
    Binary(usize, usize, CMat),
}

/// Result of a contraction with zero, one or two free vertices.
#[derive(Clone, Debug)]
pub enum Contracted {
    Scalar(Complex64),
    Diagonal(CVec),
    Matrix(CMat),
}

impl Contracted {
    fn add(self, o: Contracted) -> Contracted {
        match (self, o) {
            (Contracted::Scalar(a), Contracted::Scalar(b)) => Contracted::Scalar(a + b),
            (Contracted::Diagonal(a), Contracted::Diagonal(b)) => {
                Contracted::Diagonal(CMat::from_diagonal(&a).add(&CMat::from_diagonal(&b)).diagonal())
            }
            (Contracted::Matrix(a), Contracted::Matrix(b)) => Contracted::Matrix(a.add(&b)),
            _ => unreachable!("branches share their free vertices"),
        }
    }

    pub fn into_matrix(self, dim: usize) -> CMat {
        match self {
            Contracted::Scalar(s) => CMat::identity(dim).scale(s),
            Contracted::Diagonal(d) => CMat::from_diagonal(&d),
            Contracted::Matrix(m) => m,
        }
    }
}

/// Cost diagnostics: the largest elimination clique (vertex plus its
/// neighbours) and the number of conditioned vertices. The contraction costs
/// `O(N^(width + conditioned))`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ContractionStats {
    pub width: usize,
    pub conditioned: usize,
}

/// Contracts a graph on vertices `0..nv` whose edges `(src, dst, M)` carry
/// `N × N` matrices. `free = Some((out, in))` leaves those vertices as the
/// row and column index of the result.
pub fn contract(
    nv: usize,
    edges: &[(usize, usize, &CMat)],
    free: Option<(usize, usize)>,
    dim: usize,
) -> (Contracted, ContractionStats) {
    let factors: Vec<Factor> = edges
        .iter()
        .map(|&(s, d, m)| if s == d { Factor::Unary(s, m.diagonal()) } else { Factor::Binary(d, s, m.clone()) })
        .collect();
    let mut alive = vec![true; nv];
    if let Some((o, i)) = free {
        alive[o] = false;
        alive[i] = false;
    }
    let mut stats = ContractionStats::default();
    let out = run(factors, alive, free, dim, &mut stats);
    (out, stats)
}

fn neighbours(factors: &[Factor], v: usize) -> Vec<usize> {
    let mut ns: Vec<usize> = factors
        .iter()
        .filter_map(|f| match *f {
            Factor::Binary(a, b, _) if a == v => Some(b),
            Factor::Binary(a, b, _) if b == v => Some(a),
            _ => None,
        })
        .collect();
    ns.sort_unstable();
    ns.dedup();
    ns
}

fn run(
    mut factors: Vec<Factor>,
    mut alive: Vec<bool>,
    free: Option<(usize, usize)>,
    dim: usize,
    stats: &mut ContractionStats,
) -> Contracted {
    loop {
        let best = (0..alive.len()).filter(|&v| alive[v]).map(|v| (neighbours(&factors, v).len(), v)).min();
        let Some((k, v)) = best else { break };
        alive[v] = false;
        if k >= 3 {
            stats.conditioned += 1;
            let mut total: Option<Contracted> = None;
            for x in 0..dim {
                let sliced = factors.iter().map(|f| slice(f, v, x)).collect();
                let part = run(sliced, alive.clone(), free, dim, stats);
                total = Some(match total {
                    None => part,
                    Some(t) => t.add(part),
                });
            }
            return total.expect("dimension is positive");
        }
        stats.width = stats.width.max(k + 1);
        factors = eliminate(factors, v, dim);
    }
    finish(factors, free, dim)
}

fn slice(f: &Factor, v: usize, x: usize) -> Factor {
    match f {
        Factor::Unary(a, u) if *a == v => Factor::Scalar(u.get(x)),
        Factor::Binary(a, b, m) if *a == v => Factor::Unary(*b, m.row(x)),
        Factor::Binary(a, b, m) if *b == v => Factor::Unary(*a, m.column(x)),
        other => other.clone(),
    }
}

fn eliminate(factors: Vec<Factor>, v: usize, dim: usize) -> Vec<Factor> {
    let mut rest = Vec::new();
    let mut unary: Option<CVec> = None;
    // binary factors oriented as (x, v), Hadamard-merged per neighbour x
    let mut by_nb: Vec<(usize, CMat)> = Vec::new();
    for f in factors {
        let (x, m) = match f {
            Factor::Unary(a, u) if a == v => {
                unary = Some(match unary {
                    None => u,
                    Some(w) => w.hadamard(&u),
                });
                continue;
            }
            Factor::Binary(a, b, m) if b == v => (a, m),
            Factor::Binary(a, b, m) if a == v => (b, m.transpose()),
            other => {
                rest.push(other);
                continue;
            }
        };
        match by_nb.iter_mut().find(|(y, _)| *y == x) {
            Some((_, acc)) => *acc = acc.hadamard(&m),
            None => by_nb.push((x, m)),
        }
    }
    by_nb.sort_by_key(|(x, _)| *x);
    let new = match by_nb.len() {
        0 => Factor::Scalar(unary.map_or(Complex64::new(dim as f64, 0.0), |u| u.sum())),
        1 => {
            let (x, m) = &by_nb[0];
            Factor::Unary(*x, unary.map_or_else(|| m.row_sums(), |u| m.mul_vec(&u)))
        }
        2 => {
            let (x, mx) = &by_nb[0];
            let (y, my) = &by_nb[1];
            let left = match &unary {
                Some(u) => mx.scale_columns(u),
                None => mx.clone(),
            };
            Factor::Binary(*x, *y, left.matmul(&my.transpose()))
        }
        _ => unreachable!("wide vertices are conditioned"),
    };
    rest.push(new);
    rest
}

fn finish(factors: Vec<Factor>, free: Option<(usize, usize)>, dim: usize) -> Contracted {
    let mut scalar = Complex64::new(1.0, 0.0);
    match free {
        None => {
            for f in factors {
                match f {
                    Factor::Scalar(s) => scalar *= s,
                    _ => unreachable!("closed contraction leaves only scalars"),
                }
            }
            Contracted::Scalar(scalar)
        }
        Some((o, i)) if o == i => {
            let mut d = CVec::ones(dim);
            for f in factors {
                match f {
                    Factor::Scalar(s) => scalar *= s,
                    Factor::Unary(_, u) => d = d.hadamard(&u),
                    Factor::Binary(..) => unreachable!("one free vertex"),
                }
            }
            Contracted::Diagonal(d.scale(scalar))
        }
        Some((o, _)) => {
            let mut m: Option<CMat> = None;
            let mut rows: Option<CVec> = None;
            let mut cols: Option<CVec> = None;
            let had = |acc: Option<CMat>, b: CMat| Some(match acc {
                Some(a) => a.hadamard(&b),
                None => b,
            });
            let vhad = |acc: Option<CVec>, u: CVec| Some(match acc {
                Some(a) => a.hadamard(&u),
                None => u,
            });
            for f in factors {
                match f {
                    Factor::Scalar(s) => scalar *= s,
                    Factor::Unary(a, u) if a == o => rows = vhad(rows, u),
                    Factor::Unary(_, u) => cols = vhad(cols, u),
                    Factor::Binary(a, _, b) if a == o => m = had(m, b),
                    Factor::Binary(_, _, b) => m = had(m, b.transpose()),
                }
            }
            let mut m = m.unwrap_or_else(|| CMat::ones(dim, dim));
            if let Some(c) = cols {
                m = m.scale_columns(&c);
            }
            if let Some(r) = rows {
                m = m.scale_rows(&r);
            }
            Contracted::Matrix(if scalar == Complex64::new(1.0, 0.0) { m } else { m.scale(scalar) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(n: usize, seed: u64) -> CMat {
        let mut x = seed;
        CMat::from_fn(n, n, |_, _| {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((x >> 33) % 1000) as f64 / 1000.0 - 0.5;
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            Complex64::new(a, ((x >> 33) % 1000) as f64 / 1000.0 - 0.5)
        })
    }

    /// Σ over all maps, by brute force.
    fn brute(nv: usize, edges: &[(usize, usize, &CMat)], dim: usize) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        let mut phi = vec![0usize; nv];
        loop {
            total += edges.iter().map(|&(s, d, mm)| mm.get(phi[d], phi[s])).product::<Complex64>();
            let mut k = 0;
            while k < nv && phi[k] == dim - 1 {
                phi[k] = 0;
                k += 1;
            }
            if k == nv {
                break;
            }
            phi[k] += 1;
        }
        total
    }

    fn scalar(c: Contracted) -> Complex64 {
        match c {
            Contracted::Scalar(s) => s,
            _ => panic!(),
        }
    }

    #[test]
    fn closed_graphs_match_brute_force() {
        let n = 3;
        let (a, b, c, d) = (m(n, 1), m(n, 2), m(n, 3), m(n, 4));
        let cases: Vec<(usize, Vec<(usize, usize, &CMat)>)> = vec![
            (2, vec![(0, 1, &a), (1, 0, &b)]),
            (3, vec![(0, 1, &a), (1, 2, &b), (2, 0, &c), (1, 1, &d)]),
            (4, vec![(0, 1, &a), (0, 2, &b), (0, 3, &c), (1, 2, &d), (2, 3, &a), (3, 1, &b)]),
            (1, vec![(0, 0, &a), (0, 0, &b)]),
            (1, vec![]),
        ];
        for (nv, es) in cases {
            let (got, _) = contract(nv, &es, None, n);
            assert!((scalar(got) - brute(nv, &es, n)).norm() < 1e-10);
        }
    }

    #[test]
    fn k4_needs_conditioning() {
        let n = 3;
        let (a, b) = (m(n, 5), m(n, 6));
        let es = vec![(0, 1, &a), (0, 2, &b), (0, 3, &a), (1, 2, &b), (1, 3, &a), (2, 3, &b)];
        let (got, stats) = contract(4, &es, None, n);
        assert_eq!(stats.conditioned, 1);
        assert!((scalar(got) - brute(4, &es, n)).norm() < 1e-10);
    }

    #[test]
    fn free_vertices() {
        let n = 4;
        let (a, b) = (m(n, 7), m(n, 8));
        // out=2 ← 1 ← in=0
        let (got, _) = contract(3, &[(1, 2, &a), (0, 1, &b)], Some((2, 0)), n);
        assert!(got.into_matrix(n).max_abs_diff(&a.matmul(&b)) < 1e-12);
        let (got, _) = contract(2, &[(0, 1, &a), (0, 1, &b)], Some((1, 0)), n);
        assert!(got.into_matrix(n).max_abs_diff(&a.hadamard(&b)) < 1e-12);
        let (got, _) = contract(2, &[(1, 0, &a)], Some((0, 0)), n);
        assert!(got.into_matrix(n).max_abs_diff(&CMat::from_diagonal(&a.row_sums())) < 1e-12);
    }
}
