//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed; the
//! process exits non-zero if any criterion fails unexpectedly.

use std::cell::Cell;
use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet};
use std::hash::{Hash, Hasher};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use traffic_calc::cumulants::{cumulants_to_moments, min_rotation, CumulantSpec, FreeCumulants, MomentOracle, MomentTable};
use traffic_calc::graph::{
    anti_isomorphic, cactus_classify, lambda_cactus_oracle, CanonicalKey, Edge, EdgeAtom, Graph, GraphMonomial, TestGraph,
};
use traffic_calc::matrix_lab::{ginibre_tables, run_suite, McOptions, McReport, SuiteParams};
use traffic_calc::operad::GraphPolynomial;
use traffic_calc::partitions::{all_partitions, bell, catalan, noncrossing_partitions};
use traffic_calc::structure::{
    conditional_expectation, gaussian_covariances, is_in_d, probe_basis, prune_cycle, prune_tec, q_transform,
    simplify_three_connections, tree_reduce, wick_check, QVariable,
};
use traffic_calc::traffic::{mixed_free_cumulant, traffic_state, CycleWeightSpec, TrafficEvaluator};
use traffic_calc::Result;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

// Tolerances.
const ROUND_TRIP_TOL: f64 = 1e-10;
const ROUND_TRIP_SECONDS: f64 = 10.0;
const UE_TOL: f64 = 1e-10;
const EXACT_TOL: f64 = 1e-9;

// Monte Carlo settings.
const MC_N: usize = 200;
const MC_SAMPLES: usize = 200;
const HAAR_SAMPLES: usize = 200;

enum Verdict {
    Pass(String),
    Fail(String),
    /// Fails the pinned tolerance for a documented reason that was itself
    /// verified.
    KnownFail(String),
}

type Check = fn() -> Result<Verdict>;

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn a(g: u32) -> EdgeAtom {
    EdgeAtom::new(g)
}

fn graph<L: Clone>(n: u32, es: &[(u32, u32, L)]) -> Graph<L> {
    let edges = es.iter().enumerate().map(|(k, (s, d, l))| Edge { id: k as u32, src: *s, dst: *d, label: l.clone() }).collect();
    Graph::new((0..n).collect(), edges).unwrap()
}

fn mono(n: u32, es: &[(u32, u32, EdgeAtom)], i: u32, o: u32) -> GraphMonomial {
    GraphMonomial::new(graph(n, es), i, o).unwrap()
}

/// Deterministic pseudo-random complex number in the unit square.
fn hashed(seed: u64, w: &[u8]) -> Complex64 {
    let mut h = DefaultHasher::new();
    (seed, w).hash(&mut h);
    let x = h.finish();
    let u = |b: u64| (b & 0xffff_ffff) as f64 / u32::MAX as f64 * 2.0 - 1.0;
    Complex64::new(u(x >> 32), u(x))
}

/// Random non-tracial moment functional on words over a small alphabet.
struct RandomMoments(u64);

impl MomentOracle<u8> for RandomMoments {
    fn moment(&self, w: &[u8]) -> Result<Complex64> {
        Ok(if w.is_empty() { ONE } else { hashed(self.0, w) })
    }

    fn is_tracial(&self) -> bool {
        false
    }
}

/// Random tracial table over `letters`, complete up to `max_len`.
fn random_tracial_table(seed: u64, letters: &[EdgeAtom], max_len: usize) -> MomentTable {
    let mut table = HashMap::new();
    let mut words: Vec<Vec<u8>> = vec![vec![]];
    for _ in 0..max_len {
        words = words
            .iter()
            .flat_map(|w| (0..letters.len() as u8).map(move |l| [w.as_slice(), &[l]].concat()))
            .collect();
        for w in &words {
            let atoms = w.iter().map(|&l| letters[l as usize]).collect();
            table.insert(atoms, hashed(seed, &min_rotation(w)));
        }
    }
    MomentTable { table, tracial: true }
}

/// Edges of a random connected graph: a random tree plus `extra` edges.
fn random_connected(rng: &mut ChaCha8Rng, nv: u32, extra: usize, loop_p: f64) -> Vec<(u32, u32)> {
    let mut es = Vec::new();
    let orient = |rng: &mut ChaCha8Rng, x: u32, y: u32| if rng.random_bool(0.5) { (x, y) } else { (y, x) };
    for v in 1..nv {
        let p = rng.random_range(0..v);
        es.push(orient(rng, p, v));
    }
    for _ in 0..extra {
        let x = rng.random_range(0..nv);
        let y = if rng.random_bool(loop_p) { x } else { rng.random_range(0..nv) };
        es.push(orient(rng, x, y));
    }
    es
}

/// Random monomial whose skeleton edges all come in pairs (keeping many
/// traces away from zero), plus an occasional unpaired edge.
fn random_monomial(rng: &mut ChaCha8Rng, nv: u32, gens: u32, extra: usize) -> GraphMonomial {
    let mut es: Vec<(u32, u32, EdgeAtom)> = Vec::new();
    for (s, d) in random_connected(rng, nv, extra, 0.1) {
        let l = a(rng.random_range(0..gens));
        es.push((s, d, l));
        es.push(if rng.random_bool(0.5) { (d, s, l) } else { (s, d, l) });
    }
    if rng.random_bool(0.3) {
        es.push((rng.random_range(0..nv), rng.random_range(0..nv), a(rng.random_range(0..gens))));
    }
    let i = rng.random_range(0..nv);
    let o = if rng.random_bool(0.5) { i } else { rng.random_range(0..nv) };
    mono(nv, &es, i, o)
}

// 1. Moment ↔ cumulant inversion.
fn criterion_1() -> Result<Verdict> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seed in 0..50 {
        let fc = FreeCumulants::new(RandomMoments(seed));
        for _ in 0..4 {
            let len = rng.random_range(1..=8);
            let w: Vec<u8> = (0..len).map(|_| rng.random_range(0..3)).collect();
            let back = cumulants_to_moments(|s: &[u8]| fc.kappa(s), &w)?;
            worst = worst.max((back - fc.moment(&w)?).norm());
            worst = worst.max((fc.kappa(&w)? - fc.kappa_mobius(&w)?).norm());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(verdict(
        worst <= ROUND_TRIP_TOL && secs < ROUND_TRIP_SECONDS,
        format!("50 random sequences, max round-trip error {worst:.1e} in {secs:.2} s"),
    ))
}

// 2. Lattice counts.
fn criterion_2() -> Result<Verdict> {
    let mut ok = true;
    for n in 1..=8 {
        ok &= noncrossing_partitions(n)?.len() as u64 == catalan(n);
        ok &= all_partitions(n)?.len() as u64 == bell(n);
        ok &= all_partitions(n)?.iter().filter(|p| p.is_noncrossing()).count() as u64 == catalan(n);
    }
    Ok(verdict(ok, format!("|NC(n)| = Catalan(n), |P(n)| = Bell(n) for n ≤ 8 (Bell(8) = {})", bell(8))))
}

fn connected(nv: usize, es: &[(u32, u32)]) -> bool {
    let mut parent: Vec<usize> = (0..nv).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for &(s, d) in es {
        let (x, y) = (find(&mut parent, s as usize), find(&mut parent, d as usize));
        parent[x] = y;
    }
    let r = find(&mut parent, 0);
    (0..nv).all(|v| find(&mut parent, v) == r)
}

/// Calls `f` on every multiset of `ne` edges over `nv` vertices that forms
/// a connected graph.
fn for_each_connected(nv: u32, ne: usize, f: &mut impl FnMut(&[(u32, u32)])) {
    let pairs: Vec<(u32, u32)> = (0..nv).flat_map(|i| (i..nv).map(move |j| (i, j))).collect();
    fn rec(pairs: &[(u32, u32)], from: usize, left: usize, cur: &mut Vec<(u32, u32)>, nv: u32, f: &mut impl FnMut(&[(u32, u32)])) {
        if left == 0 {
            if connected(nv as usize, cur) {
                f(cur);
            }
            return;
        }
        for k in from..pairs.len() {
            cur.push(pairs[k]);
            rec(pairs, k, left - 1, cur, nv, f);
            cur.pop();
        }
    }
    rec(&pairs, 0, ne, &mut Vec::new(), nv, f);
}

// 3. Cactus classifier against the λ = 2 oracle.
fn criterion_3() -> Result<Verdict> {
    let (checked, cacti, mismatches) = (Cell::new(0usize), Cell::new(0usize), Cell::new(0usize));
    let tally = |(ours, agree): (bool, bool)| {
        checked.set(checked.get() + 1);
        cacti.set(cacti.get() + usize::from(ours));
        mismatches.set(mismatches.get() + usize::from(!agree));
    };
    let check = |es: &[(u32, u32)], nv: u32| {
        let g = graph(nv, &es.iter().map(|&(s, d)| (s, d, ())).collect::<Vec<_>>());
        let ours = cactus_classify(&g).is_cactus();
        (ours, ours == lambda_cactus_oracle(&g))
    };
    for ne in 0..=6 {
        for nv in 1..=(ne as u32 + 1) {
            for_each_connected(nv, ne, &mut |es| tally(check(es, nv)));
        }
    }
    let exhaustive = checked.get();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..500 {
        let nv = rng.random_range(1..=10u32);
        let es = if k % 2 == 0 {
            // glue random cycles, then perhaps one stray edge
            let mut es = Vec::new();
            let mut used = 1u32;
            while used < nv {
                let anchor = rng.random_range(0..used);
                let len = rng.random_range(1..=(nv - used).min(4));
                let mut prev = anchor;
                for _ in 0..len {
                    es.push((prev, used));
                    prev = used;
                    used += 1;
                }
                es.push((prev, anchor));
            }
            if rng.random_bool(0.3) {
                es.push((rng.random_range(0..nv), rng.random_range(0..nv)));
            }
            es.into_iter().map(|(s, d)| if rng.random_bool(0.5) { (s, d) } else { (d, s) }).collect()
        } else {
            let extra = rng.random_range(0..=5);
            random_connected(&mut rng, nv, extra, 0.1)
        };
        tally(check(&es, nv));
    }
    Ok(verdict(
        mismatches.get() == 0,
        format!(
            "{exhaustive} connected multigraphs with ≤ 6 edges + 500 random, {} cacti, {} mismatches",
            cacti.get(),
            mismatches.get()
        ),
    ))
}

// 4. Kreweras complement ↔ pads of quotients of a cycle.
fn criterion_4() -> Result<Verdict> {
    let mut checks = 0usize;
    let mut bad = Vec::new();
    for n in 1..=7u32 {
        let masks = if n <= 6 { 1u32 << n } else { 1 };
        for pi in all_partitions(n as usize)? {
            let nc = pi.is_noncrossing();
            let kre = if nc { Some(pi.kreweras()?) } else { None };
            for mask in 0..masks {
                let ccw = |i: u32| mask & (1 << i) == 0;
                let es: Vec<(u32, u32, ())> =
                    (0..n).map(|i| if ccw(i) { (i, (i + 1) % n, ()) } else { ((i + 1) % n, i, ()) }).collect();
                let q = graph(n, &es).quotient_by_labels(pi.labels());
                let class = cactus_classify(&q);
                checks += 1;
                let ok = match &kre {
                    None => !class.is_cactus(),
                    Some(k) => {
                        let mut pads: Vec<Vec<u32>> = class
                            .pads()
                            .iter()
                            .map(|p| {
                                let mut ids: Vec<u32> = p.edges.iter().map(|&e| q.edges()[e].id).collect();
                                ids.sort_unstable();
                                ids
                            })
                            .collect();
                        pads.sort();
                        let mut blocks: Vec<Vec<u32>> =
                            k.blocks().into_iter().map(|b| b.into_iter().map(|i| i as u32).collect()).collect();
                        blocks.sort();
                        let uniform = blocks.iter().all(|b| b.iter().all(|&i| ccw(i) == ccw(b[0])));
                        class.is_cactus() && pads == blocks && class.is_oriented() == uniform
                    }
                };
                if !ok && bad.len() < 3 {
                    bad.push(format!("n={n} π={:?} mask={mask:b}", pi.labels()));
                }
            }
        }
    }
    Ok(verdict(bad.is_empty(), format!("{checks} (partition, orientation) cases for cycles of length ≤ 7 {bad:?}")))
}

// 5. The UE state extends the trace.
fn criterion_5() -> Result<Verdict> {
    let letters = [a(0), a(1), a(0).adjoint(), a(1).adjoint()];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut count = 0;
    for seed in 0..3 {
        let table = random_tracial_table(100 + seed, &letters, 6);
        let spec = CycleWeightSpec::Ue(CumulantSpec::from_moments(table.clone()));
        let ev = TrafficEvaluator::new(&spec);
        for _ in 0..100 {
            let len = rng.random_range(1..=6);
            let w: Vec<EdgeAtom> = (0..len).map(|_| letters[rng.random_range(0..4)]).collect();
            worst = worst.max((ev.psi_word(&w)? - table.moment(&w)?).norm());
            count += 1;
        }
    }
    Ok(verdict(worst <= UE_TOL, format!("{count} words of length ≤ 6 over 3 random tracial oracles, max error {worst:.1e}")))
}

// 6. Semicircle moments.
fn criterion_6() -> Result<Verdict> {
    let spec = CycleWeightSpec::Ue(CumulantSpec::standard_semicircular());
    let mut worst = 0.0f64;
    for n in 1..=5 {
        let v = traffic_state(&TestGraph::directed_cycle(&vec![a(0); 2 * n]), &spec)?;
        worst = worst.max((v - catalan(n) as f64).norm());
    }
    Ok(verdict(worst <= EXACT_TOL, format!("τ[directed 2n-cycle] = Catalan(n) for n ≤ 5, max error {worst:.1e}")))
}

// 7. Freeness of A, Aᵀ and Δ(B); transposed cumulants.
fn criterion_7() -> Result<Verdict> {
    let table = random_tracial_table(7, &[a(0), a(0).adjoint()], 6);
    let spec = CycleWeightSpec::Ue(CumulantSpec::from_moments(table));
    let ev = TrafficEvaluator::new(&spec);
    let family = [
        (0, GraphMonomial::edge(a(0))),
        (1, GraphMonomial::edge_transpose(a(0))),
        (2, GraphMonomial::rdeg(a(0))),
        (2, GraphMonomial::cdeg(a(0))),
    ];
    let mut worst = 0.0f64;
    let mut mixed = 0;
    for n in 2..=4u32 {
        for code in 0..4usize.pow(n) {
            let idx: Vec<usize> = (0..n).map(|k| code / 4usize.pow(k) % 4).collect();
            let classes: HashSet<i32> = idx.iter().map(|&i| family[i].0).collect();
            if classes.len() < 2 {
                continue;
            }
            let ms: Vec<GraphMonomial> = idx.iter().map(|&i| family[i].1.clone()).collect();
            worst = worst.max(mixed_free_cumulant(&ev, &ms)?.norm());
            mixed += 1;
        }
    }
    let letters = [a(0), a(1), a(0).adjoint(), a(1).adjoint()];
    let cs = CumulantSpec::from_moments(random_tracial_table(77, &letters, 4));
    let kappa = |w: &[EdgeAtom]| cs.kappa(w);
    let spec2 = CycleWeightSpec::Ue(CumulantSpec::from_moments(random_tracial_table(77, &letters, 4)));
    let ev2 = TrafficEvaluator::new(&spec2);
    let mut worst_t = 0.0f64;
    for &x in &letters {
        for &y in &letters {
            let lhs = mixed_free_cumulant(&ev2, &[GraphMonomial::edge_transpose(x), GraphMonomial::edge_transpose(y)])?;
            worst_t = worst_t.max((lhs - kappa(&[y, x])?).norm());
        }
    }
    Ok(verdict(
        worst < EXACT_TOL && worst_t < EXACT_TOL,
        format!("{mixed} mixed cumulants (n ≤ 4), max |κ| {worst:.1e}; κ₂[xᵀ,yᵀ] = κ₂[y,x] over 16 pairs, max error {worst_t:.1e}"),
    ))
}

fn random_diagonal(rng: &mut ChaCha8Rng, gen: u32) -> GraphMonomial {
    let nv = rng.random_range(2..=5u32);
    let mut es: Vec<(u32, u32, EdgeAtom)> = Vec::new();
    for v in 1..nv {
        let p = rng.random_range(0..v);
        es.push((p, v, a(gen)));
        // directed 2-cycles make non-vanishing traces likely
        if rng.random_bool(0.85) {
            es.push((v, p, a(gen)));
        }
    }
    mono(nv, &es, 0, 0)
}

// 8. Diagonal subalgebras of free variables are classically independent.
fn criterion_8() -> Result<Verdict> {
    let spec = CycleWeightSpec::Ue(CumulantSpec::semicircular(vec![vec![ONE, ZERO], vec![ZERO, ONE]])?);
    let ev = TrafficEvaluator::new(&spec);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut nonzero = 0;
    for _ in 0..20 {
        let (d1, d2) = (random_diagonal(&mut rng, 0), random_diagonal(&mut rng, 1));
        let joint = ev.psi(&d1.product(&d2))?;
        let split = ev.psi(&d1)? * ev.psi(&d2)?;
        nonzero += usize::from(split.norm() > 1e-6);
        worst = worst.max((joint - split).norm());
    }
    Ok(verdict(worst <= EXACT_TOL, format!("20 pairs ({nonzero} with non-zero product), max error {worst:.1e}")))
}

fn psi_against(ev: &TrafficEvaluator<'_>, p: &GraphPolynomial, probes: &[GraphMonomial]) -> Result<Vec<Complex64>> {
    probes.iter().map(|s| ev.trace_psi(&p.mul(&GraphPolynomial::monomial(s.clone())))).collect()
}

fn max_diff(x: &[Complex64], y: &[Complex64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

fn key(m: &GraphMonomial) -> CanonicalKey {
    m.canonical_key().unwrap()
}

#[derive(Default)]
struct Soundness {
    worst: [f64; 5],
    nonzero: usize,
    traces: usize,
    pruned: usize,
    non_tree: usize,
    /// Reductions whose output differs from their input.
    changed: usize,
}

/// Compares ψ(t·s) before and after every reduction over the probes.
fn reduction_soundness(ev: &TrafficEvaluator<'_>, probes: &[GraphMonomial], ts: &[GraphMonomial]) -> Result<Soundness> {
    let mut out = Soundness::default();
    for t in ts {
        let base = psi_against(ev, &GraphPolynomial::monomial(t.clone()), probes)?;
        out.nonzero += base.iter().filter(|z| z.norm() > 1e-9).count();
        out.traces += base.len();
        let ce = GraphPolynomial::monomial(conditional_expectation(t));
        let (c, r) = prune_tec(t, ev)?;
        let tec = GraphPolynomial::monomial(r).scale(c);
        let quasi = GraphPolynomial::monomial(simplify_three_connections(t));
        let tree = tree_reduce(t, ev)?;
        let same = |p: &GraphPolynomial| p.len() == 1 && p.terms().all(|(c, m)| c == ONE && key(m) == key(t));
        out.changed += [&ce, &tec, &quasi, &tree].iter().filter(|p| !same(p)).count();
        out.non_tree += tree.terms().filter(|(_, m)| !m.graph().is_tree()).count();
        for (slot, p) in [(0, &ce), (1, &tec), (2, &quasi), (4, &tree)] {
            out.worst[slot] = out.worst[slot].max(max_diff(&base, &psi_against(ev, p, probes)?));
        }
        // cycle pruning applies to diagonal quasi-cacti
        let d = simplify_three_connections(&t.delta());
        if let Some(p) = d.graph().cycle_pads().iter().find_map(|pad| prune_cycle(&d, pad, ev).ok()) {
            let lhs = psi_against(ev, &GraphPolynomial::monomial(d.clone()), probes)?;
            out.worst[3] = out.worst[3].max(max_diff(&lhs, &psi_against(ev, &p, probes)?));
            out.pruned += 1;
        }
    }
    Ok(out)
}

/// Random monomial with at most `nv + extra` unpaired edges.
fn sparse_monomial(rng: &mut ChaCha8Rng, nv: u32, extra: usize) -> GraphMonomial {
    let es: Vec<(u32, u32, EdgeAtom)> = random_connected(rng, nv, extra, 0.2).into_iter().map(|(s, d)| (s, d, a(0))).collect();
    let i = rng.random_range(0..nv);
    let o = if rng.random_bool(0.5) { i } else { rng.random_range(0..nv) };
    mono(nv, &es, i, o)
}

// 9. Reductions preserve every probe trace.
fn criterion_9() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    // Wigner table with two generators, paired edges
    let wigner = CycleWeightSpec::Wigner { beta: vec![0.5, 1.0] };
    let ts: Vec<GraphMonomial> = (0..30)
        .map(|k| {
            let extra = rng.random_range(0..=2);
            random_monomial(&mut rng, 3 + (k % 6) as u32, 2, extra)
        })
        .collect();
    let w = reduction_soundness(&TrafficEvaluator::new(&wigner), &probe_basis(&[0, 1]), &ts)?;
    // UE of a non-centred Gaussian: free cumulants of every order
    let gauss = CycleWeightSpec::Ue(CumulantSpec::gaussian_real(0.3, 0.7));
    let ts: Vec<GraphMonomial> = (0..30)
        .map(|k| {
            let nv = 2 + (k % 7) as u32;
            let extra = rng.random_range(0..=(9 - nv as usize).min(2));
            sparse_monomial(&mut rng, nv, extra)
        })
        .collect();
    let g = reduction_soundness(&TrafficEvaluator::new(&gauss), &probe_basis(&[0]), &ts)?;
    let mut multiplicative = 0;
    for _ in 0..20 {
        let (n1, n2) = (rng.random_range(2..=5), rng.random_range(2..=5));
        let (e1, e2) = (rng.random_range(0..=2), rng.random_range(0..=2));
        let (t1, t2) = (random_monomial(&mut rng, n1, 2, e1), random_monomial(&mut rng, n2, 2, e2));
        let lhs = conditional_expectation(&t1.product(&t2));
        let rhs = conditional_expectation(&t1).product(&conditional_expectation(&t2));
        multiplicative += usize::from(key(&lhs) == key(&rhs));
    }
    let ok = [&w, &g].iter().all(|s| s.worst.iter().all(|&x| x <= EXACT_TOL) && s.pruned > 0 && s.non_tree == 0)
        && multiplicative == 20;
    let fmt = |name: &str, s: &Soundness| {
        format!(
            "{name}: {}/{} non-zero traces, {} reductions changed the monomial, max residual CE {:.1e} tec {:.1e} quasi {:.1e} prune_cycle {:.1e} ({} applicable) tree {:.1e}, non-tree outputs {}",
            s.nonzero, s.traces, s.changed, s.worst[0], s.worst[1], s.worst[2], s.worst[3], s.pruned, s.worst[4], s.non_tree
        )
    };
    Ok(verdict(
        ok,
        format!("30 monomials per law; {}; {}; CE multiplicative {multiplicative}/20", fmt("Wigner", &w), fmt("UE Gaussian", &g)),
    ))
}

/// Trees in the Q-transform domain with at most `max_v` vertices, up to
/// isomorphism.
fn domain_trees(max_v: u32) -> Vec<GraphMonomial> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for nv in 2..=max_v {
        let choices: usize = (1..nv as usize).product();
        for code in 0..choices {
            let mut c = code;
            let parents: Vec<u32> = (1..nv)
                .map(|v| {
                    let p = (c % v as usize) as u32;
                    c /= v as usize;
                    p
                })
                .collect();
            for mask in 0..(1u32 << (nv - 1)) {
                let es: Vec<(u32, u32, EdgeAtom)> = parents
                    .iter()
                    .enumerate()
                    .map(|(k, &p)| {
                        let v = k as u32 + 1;
                        if mask & (1 << k) == 0 { (p, v, a(0)) } else { (v, p, a(0)) }
                    })
                    .collect();
                let t = mono(nv, &es, 0, 0);
                if is_in_d(&t) && seen.insert(key(&t)) {
                    out.push(t);
                }
            }
        }
    }
    out
}

// 10. Q-calculus.
fn criterion_10() -> Result<Verdict> {
    let trees = domain_trees(4);
    let wig = CycleWeightSpec::Wigner { beta: vec![0.3] };
    let sc = CycleWeightSpec::Ue(CumulantSpec::standard_semicircular());
    let mut centered = 0.0f64;
    for spec in [&wig, &sc] {
        let ev = TrafficEvaluator::new(spec);
        for t in &trees {
            centered = centered.max(ev.trace_psi(&q_transform(t)?)?.norm());
        }
    }
    let ev = TrafficEvaluator::new(&wig);
    let qs: Vec<QVariable> = trees.iter().map(|t| QVariable::new(t.clone())).collect::<Result<_>>()?;
    let pool: Vec<QVariable> = qs.iter().flat_map(|q| [q.clone(), q.adjoint()]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut wick = 0.0f64;
    let mut cases = 0;
    for n in 2..=4 {
        for _ in 0..25 {
            let ts: Vec<QVariable> = (0..n).map(|_| pool[rng.random_range(0..pool.len())].clone()).collect();
            wick = wick.max(wick_check(&ts, &ev)?.abs_error);
            cases += 1;
        }
    }
    let evs = TrafficEvaluator::new(&sc);
    let r = GraphMonomial::rdeg(a(0));
    let c = GraphMonomial::cdeg(a(0));
    let (gamma, cc) = gaussian_covariances(&[QVariable::new(r.clone())?, QVariable::new(c.clone())?], &evs)?;
    let degrees = gamma == vec![vec![ONE, ZERO], vec![ZERO, ONE]]
        && cc == vec![vec![ZERO, ONE], vec![ONE, ZERO]]
        && evs.psi(&r.product(&c))? == ONE
        && evs.psi(&r.product(&r))? == ZERO;
    let three: Vec<&QVariable> = qs.iter().filter(|q| q.base().num_vertices() == 3).collect();
    let mut cov_pairs = 0;
    let mut cov_bad = 0;
    for s in &three {
        for t in &three {
            if !anti_isomorphic(s.base(), t.base())? {
                cov_pairs += 1;
                let v = traffic_calc::structure::q_moments(&[(*s).clone(), (*t).clone()], &evs)?;
                cov_bad += usize::from(v.norm() > EXACT_TOL);
            }
        }
    }
    let ok = centered <= EXACT_TOL && wick <= EXACT_TOL && degrees && cov_bad == 0 && cov_pairs > 0;
    Ok(verdict(
        ok,
        format!(
            "{} domain trees; max |ψ(Q(t))| {centered:.1e}; Wick on {cases} products (n = 2..4), max error {wick:.1e}; Γ = I, C = antidiag: {degrees}; {cov_pairs} non-anti-isomorphic 3-vertex pairs, {cov_bad} non-zero",
            trees.len()
        ),
    ))
}

fn mc_opts(samples: usize, seed: u64) -> McOptions {
    McOptions { samples, seed, ..Default::default() }
}

fn report_line(r: &McReport) -> String {
    let failed: Vec<&str> = r.entries.iter().filter(|e| !e.pass).map(|e| e.name.as_str()).collect();
    format!("{}: {}/{} pass {failed:?}", r.suite, r.entries.len() - failed.len(), r.entries.len())
}

// 11. Wigner Monte Carlo.
fn criterion_11() -> Result<Verdict> {
    let mut ok = true;
    let mut parts = Vec::new();
    for beta in [0.0, 0.5, 1.0] {
        let params = SuiteParams { n: MC_N, beta, ..Default::default() };
        let r = run_suite("wigner", &params, &mc_opts(MC_SAMPLES, 11))?;
        ok &= r.all_pass;
        parts.push(format!("β={beta} {}", report_line(&r)));
    }
    Ok(verdict(ok, format!("N = {MC_N}, {MC_SAMPLES} samples; {}", parts.join("; "))))
}

/// Exact finite-N injective traces of alternating cycles of a Haar unitary
/// (Weingarten calculus).
fn haar_injective_exact(m: usize, n: f64) -> f64 {
    match m {
        2 => -(n - 2.0) * (n - 3.0) / (n * (n + 1.0)),
        3 => 2.0 * (n - 3.0) * (n - 4.0) * (n - 5.0) / (n * (n + 1.0) * (n + 2.0)),
        _ => unreachable!(),
    }
}

// 12. Haar Monte Carlo.
fn criterion_12() -> Result<Verdict> {
    let params = SuiteParams { n: MC_N, ..Default::default() };
    let r = run_suite("haar", &params, &mc_opts(HAAR_SAMPLES, 12))?;
    let six = r.entries.iter().find(|e| e.name == "injective_alt_6cycle").expect("6-cycle entry");
    let others_pass = r.entries.iter().filter(|e| e.name != six.name).all(|e| e.pass);
    let line = format!("N = {MC_N}, {HAAR_SAMPLES} samples; {}", report_line(&r));
    if six.pass {
        return Ok(verdict(others_pass, line));
    }
    // The finite-N mean of the 6-cycle sits about 30/N below its limit,
    // beyond the 10/N allowance. Confirm that this is the only problem: the
    // limit prediction is right and the sample mean matches the exact
    // finite-N value.
    let mut consistent = true;
    let mut detail = Vec::new();
    for (m, name) in [(2, "injective_alt_4cycle"), (3, "injective_alt_6cycle")] {
        let e = r.entries.iter().find(|e| e.name == name).expect("entry");
        let exact = haar_injective_exact(m, MC_N as f64);
        let dev = (e.mean - exact).norm();
        consistent &= dev <= 3.0 * e.stderr + 1e-12 && e.reference.as_ref().is_some_and(|c| c.pass);
        detail.push(format!("{name}: mean {:.5} vs exact finite-N {exact:.5} (dev {dev:.1e}, 3σ {:.1e})", e.mean.re, 3.0 * e.stderr));
    }
    let limit_ok = (six.predicted - 2.0).norm() <= EXACT_TOL;
    let text = format!(
        "{line}; known finite-N bias of the 6-cycle ({:.3} > allowance {:.3}); {}",
        six.deviation,
        six.allowance,
        detail.join("; ")
    );
    Ok(if others_pass && consistent && limit_ok { Verdict::KnownFail(text) } else { Verdict::Fail(text) })
}

// 13. Markov matrix.
fn criterion_13() -> Result<Verdict> {
    let params = SuiteParams { n: MC_N, beta: 1.0, ..Default::default() };
    let r = run_suite("markov", &params, &mc_opts(MC_SAMPLES, 13))?;
    let oracle_gap = r.entries.iter().filter_map(|e| e.reference.as_ref()).map(|c| c.deviation).fold(0.0, f64::max);
    let moments: Vec<String> = r.entries.iter().map(|e| format!("{:.0}", e.predicted.re)).collect();
    Ok(verdict(
        r.all_pass && oracle_gap <= EXACT_TOL,
        format!("moments 1..6 = [{}]; combinatorial oracles differ by {oracle_gap:.1e}; {}", moments.join(", "), report_line(&r)),
    ))
}

// 14. Ginibre κ₂ tables.
fn criterion_14() -> Result<Verdict> {
    let zeta = Complex64::new(0.3, 0.2);
    let params = SuiteParams { n: MC_N, zeta, ..Default::default() };
    let r = run_suite("ginibre", &params, &mc_opts(MC_SAMPLES, 14))?;
    let (cov, pseudo) = ginibre_tables(zeta);
    let table: Vec<Complex64> = (0..4).flat_map(|i| (0..4).flat_map(move |j| [cov[i][j], pseudo[i][j]])).collect();
    let exact = r.entries.iter().zip(&table).all(|(e, t)| (e.predicted - t).norm() <= 1e-12);
    Ok(verdict(r.all_pass && exact, format!("ζ = {zeta}; table reproduced exactly: {exact}; {}", report_line(&r))))
}

fn main() -> ExitCode {
    let checks: [(u32, &str, Check); 14] = [
        (1, "moment-cumulant inversion", criterion_1),
        (2, "lattice counts", criterion_2),
        (3, "cactus equivalence", criterion_3),
        (4, "Kreweras / pad correspondence", criterion_4),
        (5, "UE extends the trace", criterion_5),
        (6, "semicircle moments", criterion_6),
        (7, "freeness structure", criterion_7),
        (8, "classical independence", criterion_8),
        (9, "reduction soundness", criterion_9),
        (10, "Q-calculus", criterion_10),
        (11, "Monte Carlo: Wigner", criterion_11),
        (12, "Monte Carlo: Haar", criterion_12),
        (13, "Markov matrix", criterion_13),
        (14, "Ginibre", criterion_14),
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut unexpected = 0;
    for (k, name, f) in checks {
        if only.is_some_and(|o| o != k) {
            continue;
        }
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Ok(Verdict::Fail("panicked".into())));
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match v {
            Ok(Verdict::Pass(d)) => ("PASS", d),
            Ok(Verdict::KnownFail(d)) => ("FAIL", d),
            Ok(Verdict::Fail(d)) => {
                unexpected += 1;
                ("FAIL", d)
            }
            Err(e) => {
                unexpected += 1;
                ("FAIL", format!("error: {e}"))
            }
        };
        println!("criterion {k:>2} {tag} [{name}] ({secs:.1} s) {detail}");
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    }
}
