//! Random matrix ensembles, sampled reproducibly per `(seed, sample index)`.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::cmat::CMat;
use crate::error::{Error, Result};
use crate::traffic::CycleWeightSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryLaw {
    Gaussian,
    /// Independent ±1 signs for the real and imaginary parts.
    RademacherMixed,
}

#[derive(Clone, Debug)]
pub enum EnsembleKind {
    Wigner { beta: f64, law: EntryLaw },
    Ginibre { zeta: Complex64 },
    HaarUnitary,
    HaarOrthogonal,
    Deterministic(Vec<CMat>),
}

#[derive(Clone, Debug)]
pub struct EnsembleSpec {
    kind: EnsembleKind,
    n: usize,
    generators: usize,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, n: usize, generators: usize) -> Result<Self> {
        if n == 0 || generators == 0 {
            return Err(Error::Precondition("dimension and generator count must be positive".into()));
        }
        match &kind {
            EnsembleKind::Wigner { beta, .. } if !(-1.0..=1.0).contains(beta) => {
                return Err(Error::Precondition(format!("beta = {beta} outside [-1, 1]")));
            }
            EnsembleKind::Ginibre { zeta } if zeta.norm() > 1.0 => {
                return Err(Error::Precondition(format!("|zeta| = {} exceeds 1", zeta.norm())));
            }
            EnsembleKind::Deterministic(ms) => {
                if ms.len() != generators || ms.iter().any(|m| m.nrows() != n || m.ncols() != n) {
                    return Err(Error::DimensionMismatch(format!("expected {generators} matrices of size {n}×{n}")));
                }
            }
            _ => {}
        }
        Ok(EnsembleSpec { kind, n, generators })
    }

    /// Deterministic ensemble from CSV files, one matrix per file; cells are
    /// real numbers or complex literals such as `1.5-2i`.
    pub fn from_csv_files<P: AsRef<Path>>(paths: &[P]) -> Result<Self> {
        let ms = paths.iter().map(|p| load_matrix_csv(p.as_ref())).collect::<Result<Vec<_>>>()?;
        let n = ms.first().map_or(0, |m| m.nrows());
        Self::new(EnsembleKind::Deterministic(ms), n, paths.len())
    }

    pub fn kind(&self) -> &EnsembleKind {
        &self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> usize {
        self.generators
    }

    /// The large-N traffic distribution, if the ensemble has one.
    pub fn limit_spec(&self) -> Option<CycleWeightSpec> {
        let m = self.generators;
        match &self.kind {
            EnsembleKind::Wigner { beta, .. } => Some(CycleWeightSpec::Wigner { beta: vec![*beta; m] }),
            EnsembleKind::Ginibre { zeta } => Some(CycleWeightSpec::Ginibre { zeta: vec![*zeta; m] }),
            EnsembleKind::HaarUnitary => Some(CycleWeightSpec::HaarUnitary),
            EnsembleKind::HaarOrthogonal => Some(CycleWeightSpec::HaarOrthogonal),
            EnsembleKind::Deterministic(_) => None,
        }
    }

    pub fn describe(&self) -> serde_json::Value {
        let kind = match &self.kind {
            EnsembleKind::Wigner { beta, law } => json!({"type": "wigner", "beta": beta, "law": law}),
            EnsembleKind::Ginibre { zeta } => json!({"type": "ginibre", "zeta": [zeta.re, zeta.im]}),
            EnsembleKind::HaarUnitary => json!({"type": "haar_unitary"}),
            EnsembleKind::HaarOrthogonal => json!({"type": "haar_orthogonal"}),
            EnsembleKind::Deterministic(_) => json!({"type": "deterministic"}),
        };
        json!({"kind": kind, "N": self.n, "generators": self.generators})
    }
}

pub fn load_matrix_csv(path: &Path) -> Result<CMat> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|cell| cell.parse::<Complex64>().map_err(|_| Error::Parse(format!("{}: bad entry {cell:?}", path.display()))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!("{}: matrix is not square", path.display())));
    }
    Ok(CMat::from_complex(&DMatrix::from_fn(n, n, |i, j| rows[i][j])))
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn wigner(rng: &mut ChaCha8Rng, n: usize, beta: f64, law: EntryLaw) -> CMat {
    let (a, b) = (((1.0 + beta) / 2.0).sqrt(), ((1.0 - beta) / 2.0).sqrt());
    let s = 1.0 / (n as f64).sqrt();
    let draw = |rng: &mut ChaCha8Rng| match law {
        EntryLaw::Gaussian => normal(rng),
        EntryLaw::RademacherMixed => sign(rng),
    };
    let mut re = DMatrix::zeros(n, n);
    let mut im = DMatrix::zeros(n, n);
    for i in 0..n {
        re[(i, i)] = draw(rng) * s;
        for j in i + 1..n {
            let (x, y) = (a * draw(rng) * s, b * draw(rng) * s);
            re[(i, j)] = x;
            re[(j, i)] = x;
            im[(i, j)] = y;
            im[(j, i)] = -y;
        }
    }
    CMat::new(re, (b != 0.0).then_some(im))
}

fn ginibre(rng: &mut ChaCha8Rng, n: usize, zeta: Complex64) -> CMat {
    // Y = √(1−|ζ|) z + √|ζ| e^{iθ/2} x with z standard complex, x real
    let (r, theta) = zeta.to_polar();
    let cz = (1.0 - r).sqrt() / 2f64.sqrt();
    let cx = Complex64::from_polar(r.sqrt(), theta / 2.0);
    let s = 1.0 / (n as f64).sqrt();
    let mut re = DMatrix::zeros(n, n);
    let mut im = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let (g1, g2, x) = (normal(rng), normal(rng), normal(rng));
            let y = Complex64::new(cz * g1, cz * g2) + cx * x;
            re[(i, j)] = y.re * s;
            im[(i, j)] = y.im * s;
        }
    }
    let real = im.iter().all(|&v| v == 0.0);
    CMat::new(re, (!real).then_some(im))
}

fn haar_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let z = DMatrix::from_fn(n, n, |_, _| Complex64::new(normal(rng), normal(rng)));
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases: Vec<Complex64> = (0..n).map(|i| r[(i, i)] / r[(i, i)].norm()).collect();
    CMat::from_complex(&DMatrix::from_fn(n, n, |i, j| q[(i, j)] * phases[j]))
}

fn haar_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let z = DMatrix::from_fn(n, n, |_, _| normal(rng));
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    let signs: Vec<f64> = (0..n).map(|i| r[(i, i)].signum()).collect();
    CMat::real(DMatrix::from_fn(n, n, |i, j| q[(i, j)] * signs[j]))
}

/// The generator matrices of sample `index`; stream `index` of the seeded
/// generator, so samples do not depend on evaluation order.
pub fn sample_ensemble(spec: &EnsembleSpec, seed: u64, index: u64) -> Vec<CMat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let n = spec.n;
    (0..spec.generators)
        .map(|g| match &spec.kind {
            EnsembleKind::Wigner { beta, law } => wigner(&mut rng, n, *beta, *law),
            EnsembleKind::Ginibre { zeta } => ginibre(&mut rng, n, *zeta),
            EnsembleKind::HaarUnitary => haar_unitary(&mut rng, n),
            EnsembleKind::HaarOrthogonal => haar_orthogonal(&mut rng, n),
            EnsembleKind::Deterministic(ms) => ms[g].clone(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn second_moments(m: &CMat) -> (f64, Complex64) {
        let n = m.nrows();
        let (mut abs2, mut sq) = (0.0, Complex64::new(0.0, 0.0));
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let z = m.get(i, j);
                    abs2 += z.norm_sqr();
                    sq += z * z;
                }
            }
        }
        let k = (n * (n - 1)) as f64 / n as f64;
        (abs2 / k, sq / k)
    }

    #[test]
    fn wigner_entries() {
        for (beta, law) in [(1.0, EntryLaw::Gaussian), (0.5, EntryLaw::Gaussian), (-0.3, EntryLaw::RademacherMixed)] {
            let spec = EnsembleSpec::new(EnsembleKind::Wigner { beta, law }, 120, 1).unwrap();
            let w = &sample_ensemble(&spec, 7, 0)[0];
            assert!(w.max_abs_diff(&w.adjoint()) < 1e-15);
            assert_eq!(w.is_real(), beta == 1.0);
            let (abs2, sq) = second_moments(w);
            assert!((abs2 - 1.0).abs() < 0.05, "{abs2}");
            assert!((sq.re - beta).abs() < 0.05 && sq.im.abs() < 0.05, "{sq}");
        }
    }

    #[test]
    fn ginibre_entries() {
        for zeta in [Complex64::new(0.0, 0.0), Complex64::new(0.3, 0.4), Complex64::new(1.0, 0.0)] {
            let spec = EnsembleSpec::new(EnsembleKind::Ginibre { zeta }, 120, 1).unwrap();
            let g = &sample_ensemble(&spec, 3, 1)[0];
            let (abs2, sq) = second_moments(g);
            assert!((abs2 - 1.0).abs() < 0.05);
            assert!((sq - zeta).norm() < 0.05, "{sq} vs {zeta}");
        }
    }

    #[test]
    fn haar_is_unitary() {
        for kind in [EnsembleKind::HaarUnitary, EnsembleKind::HaarOrthogonal] {
            let spec = EnsembleSpec::new(kind, 40, 2).unwrap();
            for u in sample_ensemble(&spec, 11, 5) {
                assert!(u.matmul(&u.adjoint()).max_abs_diff(&CMat::identity(40)) < 1e-10);
            }
        }
    }

    #[test]
    fn samples_are_reproducible() {
        let spec = EnsembleSpec::new(EnsembleKind::Ginibre { zeta: Complex64::new(0.2, 0.0) }, 10, 2).unwrap();
        assert_eq!(sample_ensemble(&spec, 1, 4), sample_ensemble(&spec, 1, 4));
        assert_ne!(sample_ensemble(&spec, 1, 4), sample_ensemble(&spec, 1, 5));
    }

    #[test]
    fn invalid_parameters() {
        assert!(EnsembleSpec::new(EnsembleKind::Wigner { beta: 1.5, law: EntryLaw::Gaussian }, 3, 1).is_err());
        assert!(EnsembleSpec::new(EnsembleKind::Ginibre { zeta: Complex64::new(1.0, 1.0) }, 3, 1).is_err());
    }
}
