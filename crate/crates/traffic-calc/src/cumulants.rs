//! Free cumulants of (possibly non-commutative) moment functionals.
//!
//! `φ(a_1 ⋯ a_n) = Σ_{π ∈ NC(n)} κ_π[a_1, …, a_n]`, inverted recursively
//! with memoisation over sub-words.

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::EdgeAtom;
use crate::partitions::{catalan, nc_mobius_to_top, noncrossing_partitions, SetPartition};

/// Longest word accepted by the cumulant machinery.
pub const WORD_CAP: usize = 10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn nc_cached(n: usize) -> &'static [SetPartition] {
    static CACHE: OnceLock<Vec<Vec<SetPartition>>> = OnceLock::new();
    &CACHE.get_or_init(|| (0..=WORD_CAP).map(|k| noncrossing_partitions(k).unwrap()).collect())[n]
}

fn check_word_len(n: usize) -> Result<()> {
    if n > WORD_CAP {
        return Err(Error::CapExceeded { what: "word length", size: n, cap: WORD_CAP });
    }
    Ok(())
}

/// Smallest rotation of a word.
pub fn min_rotation<T: Ord + Clone>(w: &[T]) -> Vec<T> {
    (0..w.len().max(1))
        .map(|r| w[r.min(w.len())..].iter().chain(&w[..r.min(w.len())]).cloned().collect::<Vec<T>>())
        .min()
        .unwrap_or_default()
}

/// A moment functional on words over `T`.
pub trait MomentOracle<T>: Send + Sync {
    fn moment(&self, word: &[T]) -> Result<Complex64>;

    /// Invariant under cyclic rotation of words.
    fn is_tracial(&self) -> bool {
        true
    }
}

/// Tracial oracle backed by a closure.
pub struct FnMoments<F>(pub F);

impl<T, F> MomentOracle<T> for FnMoments<F>
where
    F: Fn(&[T]) -> Result<Complex64> + Send + Sync,
{
    fn moment(&self, word: &[T]) -> Result<Complex64> {
        (self.0)(word)
    }
}

impl<T, O: MomentOracle<T> + ?Sized> MomentOracle<T> for Box<O> {
    fn moment(&self, word: &[T]) -> Result<Complex64> {
        (**self).moment(word)
    }

    fn is_tracial(&self) -> bool {
        (**self).is_tracial()
    }
}

/// Explicit table of moments. Lookups of tracial tables try all rotations.
#[derive(Clone, Debug, Default)]
pub struct MomentTable {
    pub table: HashMap<Vec<EdgeAtom>, Complex64>,
    pub tracial: bool,
}

impl MomentOracle<EdgeAtom> for MomentTable {
    fn moment(&self, word: &[EdgeAtom]) -> Result<Complex64> {
        if word.is_empty() {
            return Ok(ONE);
        }
        let n = word.len();
        let rotations = if self.tracial { n } else { 1 };
        for r in 0..rotations {
            let rot: Vec<EdgeAtom> = word[r..].iter().chain(&word[..r]).copied().collect();
            if let Some(&v) = self.table.get(&rot) {
                return Ok(v);
            }
        }
        Err(Error::MissingMoment(word.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ")))
    }

    fn is_tracial(&self) -> bool {
        self.tracial
    }
}

/// Moments `E[X^n]` of a real Gaussian `X ~ N(mean, var)`; stars and
/// generator ids are ignored.
#[derive(Clone, Copy, Debug)]
pub struct GaussianMoments {
    pub mean: f64,
    pub var: f64,
}

impl GaussianMoments {
    pub fn moment_n(&self, n: usize) -> f64 {
        // Σ_k C(n,k) m^{n-k} σ^k E[Z^k], E[Z^k] = (k-1)!! for even k
        let sd = self.var.sqrt();
        let mut total = 0.0;
        let mut binom = 1.0;
        for k in 0..=n {
            if k > 0 {
                binom = binom * (n - k + 1) as f64 / k as f64;
            }
            if k % 2 == 0 {
                let dfact: f64 = (1..k).step_by(2).map(|x| x as f64).product();
                total += binom * self.mean.powi((n - k) as i32) * sd.powi(k as i32) * dfact;
            }
        }
        total
    }
}

impl MomentOracle<EdgeAtom> for GaussianMoments {
    fn moment(&self, word: &[EdgeAtom]) -> Result<Complex64> {
        Ok(Complex64::new(self.moment_n(word.len()), 0.0))
    }
}

/// Memoised moment–cumulant inversion for one moment functional.
pub struct FreeCumulants<T, O> {
    oracle: O,
    tracial: bool,
    moments: Mutex<HashMap<Vec<T>, Complex64>>,
    cumulants: Mutex<HashMap<Vec<T>, Complex64>>,
}

impl<T, O> FreeCumulants<T, O>
where
    T: Clone + Eq + Hash + Ord,
    O: MomentOracle<T>,
{
    pub fn new(oracle: O) -> Self {
        let tracial = oracle.is_tracial();
        FreeCumulants { oracle, tracial, moments: Mutex::new(HashMap::new()), cumulants: Mutex::new(HashMap::new()) }
    }

    fn key(&self, w: &[T]) -> Vec<T> {
        if self.tracial {
            min_rotation(w)
        } else {
            w.to_vec()
        }
    }

    pub fn oracle(&self) -> &O {
        &self.oracle
    }

    pub fn moment(&self, w: &[T]) -> Result<Complex64> {
        if w.is_empty() {
            return Ok(ONE);
        }
        let key = self.key(w);
        if let Some(&v) = self.moments.lock().unwrap().get(&key) {
            return Ok(v);
        }
        let v = self.oracle.moment(w)?;
        self.moments.lock().unwrap().insert(key, v);
        Ok(v)
    }

    /// κ_n[w_1, …, w_n].
    pub fn kappa(&self, w: &[T]) -> Result<Complex64> {
        check_word_len(w.len())?;
        if w.is_empty() {
            return Err(Error::Precondition("cumulant of the empty word".into()));
        }
        let key = self.key(w);
        if let Some(&v) = self.cumulants.lock().unwrap().get(&key) {
            return Ok(v);
        }
        let top = SetPartition::full(w.len());
        let mut lower = ZERO;
        for pi in nc_cached(w.len()) {
            if *pi == top {
                continue;
            }
            lower += self.kappa_pi(w, pi)?;
        }
        let v = self.moment(w)? - lower;
        self.cumulants.lock().unwrap().insert(key, v);
        Ok(v)
    }

    /// κ_π: product over blocks of cumulants of the restricted sub-words.
    pub fn kappa_pi(&self, w: &[T], pi: &SetPartition) -> Result<Complex64> {
        let mut prod = ONE;
        for block in pi.blocks() {
            let sub: Vec<T> = block.iter().map(|&i| w[i].clone()).collect();
            prod *= self.kappa(&sub)?;
            if prod == ZERO {
                break;
            }
        }
        Ok(prod)
    }

    /// κ_n by Möbius inversion on NC(n), with μ(σ, 1̂) read off the
    /// Kreweras complement.
    pub fn kappa_mobius(&self, w: &[T]) -> Result<Complex64> {
        check_word_len(w.len())?;
        let mut total = ZERO;
        for sigma in nc_cached(w.len()) {
            let mut prod = ONE;
            for block in sigma.blocks() {
                let sub: Vec<T> = block.iter().map(|&i| w[i].clone()).collect();
                prod *= self.moment(&sub)?;
            }
            total += prod * nc_mobius_to_top(sigma)? as f64;
        }
        Ok(total)
    }
}

/// κ_n of a word under a moment oracle (one-off, no shared memo).
pub fn moments_to_cumulants<O: MomentOracle<EdgeAtom>>(oracle: O, word: &[EdgeAtom]) -> Result<Complex64> {
    FreeCumulants::new(oracle).kappa(word)
}

/// Moments from cumulants: Σ_{π ∈ NC(n)} κ_π.
pub fn cumulants_to_moments<T, F>(kappa: F, word: &[T]) -> Result<Complex64>
where
    T: Clone,
    F: Fn(&[T]) -> Result<Complex64>,
{
    check_word_len(word.len())?;
    if word.is_empty() {
        return Ok(ONE);
    }
    let mut total = ZERO;
    for pi in nc_cached(word.len()) {
        let mut prod = ONE;
        for block in pi.blocks() {
            let sub: Vec<T> = block.iter().map(|&i| word[i].clone()).collect();
            prod *= kappa(&sub)?;
            if prod == ZERO {
                break;
            }
        }
        total += prod;
    }
    Ok(total)
}

pub type Matrix = Vec<Vec<Complex64>>;

/// A tracial distribution described by its free cumulants.
pub enum CumulantSpec {
    /// Self-adjoint semicircular family; stars are ignored.
    Semicircular { cov: Matrix },
    /// Circular family: κ₂[a_i, a_j*] = cov_ij, κ₂[a_i, a_j] = pseudo_ij,
    /// κ₂[a_i*, a_j*] = conj(pseudo_ij).
    Circular { cov: Matrix, pseudo: Matrix },
    /// Free Haar unitaries, one per generator.
    HaarUnitary,
    /// Deterministic scalar `c` on every generator.
    Constant(Complex64),
    /// Cumulants obtained from a moment oracle.
    FromMoments(Box<FreeCumulants<EdgeAtom, Box<dyn MomentOracle<EdgeAtom>>>>),
}

impl std::fmt::Debug for CumulantSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CumulantSpec::Semicircular { cov } => write!(f, "Semicircular({cov:?})"),
            CumulantSpec::Circular { cov, pseudo } => write!(f, "Circular({cov:?}, {pseudo:?})"),
            CumulantSpec::HaarUnitary => write!(f, "HaarUnitary"),
            CumulantSpec::Constant(c) => write!(f, "Constant({c})"),
            CumulantSpec::FromMoments(_) => write!(f, "FromMoments"),
        }
    }
}

fn check_square(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().any(|r| r.len() != m.len()) {
        return Err(Error::DimensionMismatch(format!("{what} is not square")));
    }
    Ok(())
}

impl CumulantSpec {
    pub fn semicircular(cov: Matrix) -> Result<Self> {
        check_square(&cov, "covariance")?;
        Ok(CumulantSpec::Semicircular { cov })
    }

    pub fn standard_semicircular() -> Self {
        CumulantSpec::Semicircular { cov: vec![vec![ONE]] }
    }

    pub fn circular(cov: Matrix, pseudo: Matrix) -> Result<Self> {
        check_square(&cov, "covariance")?;
        check_square(&pseudo, "pseudo-covariance")?;
        if cov.len() != pseudo.len() {
            return Err(Error::DimensionMismatch("covariance and pseudo-covariance sizes differ".into()));
        }
        Ok(CumulantSpec::Circular { cov, pseudo })
    }

    pub fn from_moments<O: MomentOracle<EdgeAtom> + 'static>(oracle: O) -> Self {
        CumulantSpec::FromMoments(Box::new(FreeCumulants::new(Box::new(oracle) as Box<dyn MomentOracle<EdgeAtom>>)))
    }

    pub fn gaussian_real(mean: f64, var: f64) -> Self {
        Self::from_moments(GaussianMoments { mean, var })
    }

    fn entry(m: &Matrix, i: u32, j: u32) -> Result<Complex64> {
        let row = m.get(i as usize).ok_or(Error::UnknownGenerator(i))?;
        row.get(j as usize).copied().ok_or(Error::UnknownGenerator(j))
    }

    /// κ_n of the word.
    pub fn kappa(&self, w: &[EdgeAtom]) -> Result<Complex64> {
        check_word_len(w.len())?;
        match self {
            CumulantSpec::Semicircular { cov } => {
                if w.len() == 2 {
                    Self::entry(cov, w[0].gen, w[1].gen)
                } else {
                    for a in w {
                        Self::entry(cov, a.gen, a.gen)?;
                    }
                    Ok(ZERO)
                }
            }
            CumulantSpec::Circular { cov, pseudo } => {
                if w.len() != 2 {
                    for a in w {
                        Self::entry(cov, a.gen, a.gen)?;
                    }
                    return Ok(ZERO);
                }
                let (x, y) = (w[0], w[1]);
                match (x.star, y.star) {
                    (false, false) => Self::entry(pseudo, x.gen, y.gen),
                    (true, true) => Ok(Self::entry(pseudo, x.gen, y.gen)?.conj()),
                    (false, true) => Self::entry(cov, x.gen, y.gen),
                    (true, false) => Self::entry(cov, y.gen, x.gen),
                }
            }
            CumulantSpec::HaarUnitary => Ok(haar_kappa(w)),
            CumulantSpec::Constant(c) => Ok(if w.len() == 1 { *c } else { ZERO }),
            CumulantSpec::FromMoments(fc) => fc.kappa(w),
        }
    }

    /// φ of the word, via the moment–cumulant relation.
    pub fn moment(&self, w: &[EdgeAtom]) -> Result<Complex64> {
        cumulants_to_moments(|s: &[EdgeAtom]| self.kappa(s), w)
    }
}

/// Free cumulants of free Haar unitaries: non-zero only on alternating
/// words `u u* u u* …` (either starting letter) in a single generator,
/// where κ_{2m} = (-1)^{m-1} Cat(m-1).
pub fn haar_kappa(w: &[EdgeAtom]) -> Complex64 {
    let n = w.len();
    if n == 0 || n % 2 == 1 {
        return ZERO;
    }
    let g = w[0].gen;
    if w.iter().any(|a| a.gen != g) || (0..n).any(|k| w[k].star == w[(k + 1) % n].star) {
        return ZERO;
    }
    let m = n / 2;
    let c = catalan(m - 1) as f64;
    Complex64::new(if m % 2 == 1 { c } else { -c }, 0.0)
}
