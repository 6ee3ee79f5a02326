//! Complex matrices stored as separate real and imaginary parts, so products
//! run on the real matrix kernels; purely real matrices carry no imaginary
//! part at all.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    re: DMatrix<f64>,
    im: Option<DMatrix<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CVec {
    re: DVector<f64>,
    im: Option<DVector<f64>>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl CMat {
    pub fn new(re: DMatrix<f64>, im: Option<DMatrix<f64>>) -> Self {
        CMat { re, im }
    }

    pub fn real(re: DMatrix<f64>) -> Self {
        CMat { re, im: None }
    }

    pub fn from_complex(m: &DMatrix<Complex64>) -> Self {
        let re = m.map(|z| z.re);
        let im = m.map(|z| z.im);
        let im = (im.iter().any(|&x| x != 0.0)).then_some(im);
        CMat { re, im }
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.nrows(), self.ncols(), |i, j| self.get(i, j))
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Complex64>(n: usize, m: usize, mut f: F) -> Self {
        Self::from_complex(&DMatrix::from_fn(n, m, |i, j| f(i, j)))
    }

    pub fn identity(n: usize) -> Self {
        CMat::real(DMatrix::identity(n, n))
    }

    pub fn ones(n: usize, m: usize) -> Self {
        CMat::real(DMatrix::from_element(n, m, 1.0))
    }

    pub fn nrows(&self) -> usize {
        self.re.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.re.ncols()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_none()
    }

    pub fn re(&self) -> &DMatrix<f64> {
        &self.re
    }

    pub fn im(&self) -> Option<&DMatrix<f64>> {
        self.im.as_ref()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        c(self.re[(i, j)], self.im.as_ref().map_or(0.0, |m| m[(i, j)]))
    }

    pub fn transpose(&self) -> CMat {
        CMat { re: self.re.transpose(), im: self.im.as_ref().map(|m| m.transpose()) }
    }

    pub fn conj(&self) -> CMat {
        CMat { re: self.re.clone(), im: self.im.as_ref().map(|m| -m) }
    }

    pub fn adjoint(&self) -> CMat {
        CMat { re: self.re.transpose(), im: self.im.as_ref().map(|m| -m.transpose()) }
    }

    pub fn matmul(&self, o: &CMat) -> CMat {
        let re_re = &self.re * &o.re;
        match (&self.im, &o.im) {
            (None, None) => CMat::real(re_re),
            (Some(ai), None) => CMat::new(re_re, Some(ai * &o.re)),
            (None, Some(bi)) => CMat::new(re_re, Some(&self.re * bi)),
            (Some(ai), Some(bi)) => CMat::new(re_re - ai * bi, Some(&self.re * bi + ai * &o.re)),
        }
    }

    pub fn hadamard(&self, o: &CMat) -> CMat {
        let rr = self.re.component_mul(&o.re);
        match (&self.im, &o.im) {
            (None, None) => CMat::real(rr),
            (Some(ai), None) => CMat::new(rr, Some(ai.component_mul(&o.re))),
            (None, Some(bi)) => CMat::new(rr, Some(self.re.component_mul(bi))),
            (Some(ai), Some(bi)) => {
                CMat::new(rr - ai.component_mul(bi), Some(self.re.component_mul(bi) + ai.component_mul(&o.re)))
            }
        }
    }

    pub fn add(&self, o: &CMat) -> CMat {
        let im = match (&self.im, &o.im) {
            (None, None) => None,
            (Some(a), None) => Some(a.clone()),
            (None, Some(b)) => Some(b.clone()),
            (Some(a), Some(b)) => Some(a + b),
        };
        CMat::new(&self.re + &o.re, im)
    }

    pub fn scale(&self, s: Complex64) -> CMat {
        if s.im == 0.0 {
            return CMat { re: &self.re * s.re, im: self.im.as_ref().map(|m| m * s.re) };
        }
        let zero = DMatrix::zeros(self.nrows(), self.ncols());
        let im = self.im.as_ref().unwrap_or(&zero);
        CMat::new(&self.re * s.re - im * s.im, Some(&self.re * s.im + im * s.re))
    }

    pub fn diagonal(&self) -> CVec {
        CVec { re: self.re.diagonal(), im: self.im.as_ref().map(|m| m.diagonal()) }
    }

    pub fn from_diagonal(v: &CVec) -> CMat {
        CMat { re: DMatrix::from_diagonal(&v.re), im: v.im.as_ref().map(DMatrix::from_diagonal) }
    }

    /// `M · v`.
    pub fn mul_vec(&self, v: &CVec) -> CVec {
        let rr = &self.re * &v.re;
        match (&self.im, &v.im) {
            (None, None) => CVec::real(rr),
            (Some(ai), None) => CVec::new(rr, Some(ai * &v.re)),
            (None, Some(bi)) => CVec::new(rr, Some(&self.re * bi)),
            (Some(ai), Some(bi)) => CVec::new(rr - ai * bi, Some(&self.re * bi + ai * &v.re)),
        }
    }

    /// `M · diag(v)`.
    pub fn scale_columns(&self, v: &CVec) -> CMat {
        let n = self.nrows();
        let row = |x: &DVector<f64>| DMatrix::from_fn(n, x.len(), |_, j| x[j]);
        self.hadamard(&CMat { re: row(&v.re), im: v.im.as_ref().map(row) })
    }

    /// `diag(v) · M`.
    pub fn scale_rows(&self, v: &CVec) -> CMat {
        self.transpose().scale_columns(v).transpose()
    }

    /// `Σ_j M(i, j)`.
    pub fn row_sums(&self) -> CVec {
        CVec { re: self.re.column_sum(), im: self.im.as_ref().map(|m| m.column_sum()) }
    }

    pub fn row(&self, i: usize) -> CVec {
        CVec { re: self.re.row(i).transpose(), im: self.im.as_ref().map(|m| m.row(i).transpose()) }
    }

    pub fn column(&self, j: usize) -> CVec {
        CVec { re: self.re.column(j).into_owned(), im: self.im.as_ref().map(|m| m.column(j).into_owned()) }
    }

    /// `u vᵀ`.
    pub fn outer(u: &CVec, v: &CVec) -> CMat {
        let a = CMat { re: DMatrix::from_fn(u.len(), 1, |i, _| u.re[i]), im: u.im.as_ref().map(|x| DMatrix::from_fn(x.len(), 1, |i, _| x[i])) };
        let b = CMat { re: DMatrix::from_fn(1, v.len(), |_, j| v.re[j]), im: v.im.as_ref().map(|x| DMatrix::from_fn(1, x.len(), |_, j| x[j])) };
        a.matmul(&b)
    }

    pub fn trace(&self) -> Complex64 {
        c(self.re.trace(), self.im.as_ref().map_or(0.0, |m| m.trace()))
    }

    pub fn sum(&self) -> Complex64 {
        c(self.re.sum(), self.im.as_ref().map_or(0.0, |m| m.sum()))
    }

    /// `Tr(A B) = Σ_ij A(i,j) B(j,i)` without forming the product.
    pub fn trace_of_product(&self, o: &CMat) -> Complex64 {
        let dot = |a: &DMatrix<f64>, b: &DMatrix<f64>| -> f64 {
            let mut t = 0.0;
            for j in 0..a.ncols() {
                for i in 0..a.nrows() {
                    t += a[(i, j)] * b[(j, i)];
                }
            }
            t
        };
        let re = dot(&self.re, &o.re) - match (&self.im, &o.im) {
            (Some(a), Some(b)) => dot(a, b),
            _ => 0.0,
        };
        let im = self.im.as_ref().map_or(0.0, |a| dot(a, &o.re)) + o.im.as_ref().map_or(0.0, |b| dot(&self.re, b));
        c(re, im)
    }

    pub fn max_abs_diff(&self, o: &CMat) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                m = m.max((self.get(i, j) - o.get(i, j)).norm());
            }
        }
        m
    }
}

impl CVec {
    pub fn new(re: DVector<f64>, im: Option<DVector<f64>>) -> Self {
        CVec { re, im }
    }

    pub fn real(re: DVector<f64>) -> Self {
        CVec { re, im: None }
    }

    pub fn ones(n: usize) -> Self {
        CVec::real(DVector::from_element(n, 1.0))
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn get(&self, i: usize) -> Complex64 {
        c(self.re[i], self.im.as_ref().map_or(0.0, |v| v[i]))
    }

    pub fn hadamard(&self, o: &CVec) -> CVec {
        let rr = self.re.component_mul(&o.re);
        match (&self.im, &o.im) {
            (None, None) => CVec::real(rr),
            (Some(ai), None) => CVec::new(rr, Some(ai.component_mul(&o.re))),
            (None, Some(bi)) => CVec::new(rr, Some(self.re.component_mul(bi))),
            (Some(ai), Some(bi)) => {
                CVec::new(rr - ai.component_mul(bi), Some(self.re.component_mul(bi) + ai.component_mul(&o.re)))
            }
        }
    }

    pub fn scale(&self, s: Complex64) -> CVec {
        CMat { re: DMatrix::from_column_slice(self.len(), 1, self.re.as_slice()), im: self.im.as_ref().map(|v| DMatrix::from_column_slice(v.len(), 1, v.as_slice())) }
            .scale(s)
            .column(0)
    }

    pub fn sum(&self) -> Complex64 {
        c(self.re.sum(), self.im.as_ref().map_or(0.0, |v| v.sum()))
    }
}
