//! Dense matrix kernel over real or complex scalars.
//!
//! Everything in the toolkit lives in spaces of dimension `2^n` with `n <= 6`,
//! so matrices are stored as a flat row-major `Vec<T>` and all products are
//! the plain triple loop. Hermitian eigenproblems are solved with cyclic
//! Jacobi rotations, which converge quadratically and give eigenvectors that
//! are orthonormal to working precision.
//!
//! [`ComplexMatrix`] is the public currency of the crate. [`RealMatrix`] runs
//! the same algorithms at a quarter of the cost and is used internally when a
//! problem happens to be real symmetric.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative tolerance on `‖A − A†‖_F` accepted by the Hermitian routines.
pub const HERMITIAN_TOL: f64 = 1e-9;

const JACOBI_EPS: f64 = 1e-15;
const JACOBI_MAX_SWEEPS: usize = 60;

/// Field of matrix entries: `f64` or `Complex64`.
pub trait Scalar:
    Copy
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + Sum
{
    const ZERO: Self;
    const ONE: Self;
    fn from_real(x: f64) -> Self;
    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn im(self) -> f64;
    fn norm_sqr(self) -> f64;
    fn abs(self) -> f64 {
        self.norm_sqr().sqrt()
    }
    fn is_zero(self) -> bool {
        self == Self::ZERO
    }
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    #[inline]
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn im(self) -> f64 {
        0.0
    }
    #[inline]
    fn norm_sqr(self) -> f64 {
        self * self
    }
    #[inline]
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl Scalar for C64 {
    const ZERO: Self = C64::new(0.0, 0.0);
    const ONE: Self = C64::new(1.0, 0.0);
    #[inline]
    fn from_real(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn im(self) -> f64 {
        self.im
    }
    #[inline]
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
}

/// Square matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    dim: usize,
    data: Vec<T>,
}

pub type ComplexMatrix = Matrix<C64>;
pub type RealMatrix = Matrix<f64>;

impl<T: Scalar> Matrix<T> {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![T::ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = T::ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from row-major entries. Panics unless `data.len() == dim²`.
    pub fn from_row_major(dim: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), dim * dim, "entry count must be dim^2");
        assert!(dim >= 1);
        Self { dim, data }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = T::from_real(d);
        }
        m
    }

    /// `|v⟩⟨v|`
    pub fn outer(v: &[T]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re().is_finite() && z.im().is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for z in self.data.iter_mut() {
            *z = *z * s;
        }
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, s: f64, other: &Self) {
        assert_eq!(self.dim, other.dim);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖A − A†‖_F`
    pub fn hermitian_defect(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// `(A + A†) / 2`
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `‖A − B‖_F`
    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let dst = &mut out.data[i * n..(i + 1) * n];
            for (k, &a) in row.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let src = &rhs.data[k * n..(k + 1) * n];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `A† B`, without forming the adjoint.
    pub fn adjoint_matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for k in 0..n {
            let src = &rhs.data[k * n..(k + 1) * n];
            for i in 0..n {
                let a = self.data[k * n + i].conj();
                if a.is_zero() {
                    continue;
                }
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `U A U†`
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.matmul(self).matmul(&u.adjoint())
    }

    /// Real part of the Frobenius inner product `Tr(A† B)`.
    pub fn real_inner(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a.re() * b.re() + a.im() * b.im())
            .sum()
    }

    /// Real part of `Tr(A B)`.
    pub fn real_trace_product(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let a = self.data[i * n + j];
                let b = other.data[j * n + i];
                acc += a.re() * b.re() - a.im() * b.im();
            }
        }
        acc
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(self.dim, other.dim))
        }
    }

    fn check_hermitian(&self) -> Result<()> {
        let allowed = HERMITIAN_TOL * self.frobenius_norm().max(1.0);
        let asymmetry = self.hermitian_defect();
        if asymmetry <= allowed {
            Ok(())
        } else {
            Err(Error::NotHermitian { asymmetry, allowed })
        }
    }
}

impl ComplexMatrix {
    pub fn scale_complex(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// The real part, if every imaginary part is exactly zero.
    pub fn as_real(&self) -> Option<RealMatrix> {
        if self.data.iter().all(|z| z.im == 0.0) {
            Some(RealMatrix {
                dim: self.dim,
                data: self.data.iter().map(|z| z.re).collect(),
            })
        } else {
            None
        }
    }
}

impl RealMatrix {
    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.dim + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Scalar> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re(), z.im())?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<T: Scalar> Add for &Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.dim, rhs.dim);
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<T: Scalar> Sub for &Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.dim, rhs.dim);
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        self.matmul(rhs)
    }
}

impl<T: Scalar> AddAssign<&Matrix<T>> for Matrix<T> {
    fn add_assign(&mut self, rhs: &Matrix<T>) {
        self.add_scaled(1.0, rhs);
    }
}

impl<T: Scalar> SubAssign<&Matrix<T>> for Matrix<T> {
    fn sub_assign(&mut self, rhs: &Matrix<T>) {
        self.add_scaled(-1.0, rhs);
    }
}

/// Single-qubit Pauli operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> ComplexMatrix {
        let o = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let data = match self {
            Pauli::X => vec![o, one, one, o],
            Pauli::Y => vec![o, -i, i, o],
            Pauli::Z => vec![one, o, o, -one],
        };
        ComplexMatrix::from_row_major(2, data)
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product `a ⊗ b`.
pub fn kron<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let (m, n) = (a.dim, b.dim);
    let mut out = Matrix::zeros(m * n);
    for i in 0..m {
        for j in 0..m {
            let aij = a[(i, j)];
            if aij.is_zero() {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    out[(i * n + k, j * n + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Left-to-right tensor product of a non-empty list of factors.
pub fn kron_all<'a, T: Scalar>(factors: impl IntoIterator<Item = &'a Matrix<T>>) -> Matrix<T> {
    let mut it = factors.into_iter();
    let first = it.next().expect("kron_all needs at least one factor").clone();
    it.fold(first, |acc, f| kron(&acc, f))
}

/// `Tr(a b)`
pub fn trace_product<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<T> {
    a.check_same_dim(b)?;
    let n = a.dim;
    let mut acc = T::ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a.data[i * n + j] * b.data[j * n + i];
        }
    }
    Ok(acc)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted nonincreasing; column `k` of `vectors` belongs to
/// `values[k]`. Within a degenerate cluster the basis is arbitrary.
#[derive(Clone)]
pub struct HermitianEig<T = C64> {
    pub values: Vec<f64>,
    pub vectors: Matrix<T>,
}

impl<T: Scalar> fmt::Debug for HermitianEig<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HermitianEig")
            .field("values", &self.values)
            .field("vectors", &self.vectors)
            .finish()
    }
}

impl<T: Scalar> HermitianEig<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V f(Λ) V†`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix<T> {
        let n = self.dim();
        let v = &self.vectors;
        let mut out = Matrix::zeros(n);
        for k in 0..n {
            let w = f(self.values[k]);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v[(i, k)] * w;
                for j in 0..n {
                    out.data[i * n + j] += vik * v[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Matrix<T> {
        self.reconstruct_with(|x| x)
    }

    pub fn min_value(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    pub fn max_value(&self) -> f64 {
        self.values[0]
    }
}

/// Hermitian eigendecomposition. The input is symmetrized as `(A + A†)/2`
/// after the Hermiticity check.
pub fn eig_hermitian<T: Scalar>(a: &Matrix<T>) -> Result<HermitianEig<T>> {
    a.check_hermitian()?;
    let mut work = a.hermitian_part();
    let mut v = Matrix::identity(a.dim);
    jacobi_in_place(&mut work, &mut v);
    Ok(sorted_eig(&work, v))
}

/// Eigendecomposition seeded with an approximate eigenbasis `guess` (columns).
///
/// The matrix is first rotated into the guessed basis, so a good guess leaves
/// only a nearly diagonal problem for the Jacobi sweeps. Any unitary guess gives
/// a correct result; a poor one only costs extra sweeps.
pub fn eig_hermitian_seeded<T: Scalar>(a: &Matrix<T>, guess: &Matrix<T>) -> Result<HermitianEig<T>> {
    a.check_same_dim(guess)?;
    a.check_hermitian()?;
    let sym = a.hermitian_part();
    let mut work = guess.adjoint_matmul(&sym).matmul(guess);
    work = work.hermitian_part();
    let mut w = Matrix::identity(a.dim);
    jacobi_in_place(&mut work, &mut w);
    let mut vectors = guess.matmul(&w);
    reorthonormalize(&mut vectors);
    Ok(sorted_eig(&work, vectors))
}

/// Frobenius-nearest PSD matrix: negative eigenvalues clamped to zero.
pub fn project_psd<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let eig = eig_hermitian(a)?;
    Ok(psd_from_eig(&eig))
}

/// Rebuilds `V Λ⁺ V†` from a decomposition, summing over whichever side of the
/// spectrum has fewer terms.
pub fn psd_from_eig<T: Scalar>(eig: &HermitianEig<T>) -> Matrix<T> {
    let positives = eig.values.iter().filter(|&&x| x > 0.0).count();
    if positives * 2 <= eig.dim() {
        eig.reconstruct_with(|x| x.max(0.0))
    } else {
        let mut full = eig.reconstruct();
        let neg = eig.reconstruct_with(|x| x.min(0.0));
        full -= &neg;
        full
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue<T: Scalar>(a: &Matrix<T>) -> Result<f64> {
    Ok(eig_hermitian(a)?.min_value())
}

fn sorted_eig<T: Scalar>(diag: &Matrix<T>, v: Matrix<T>) -> HermitianEig<T> {
    let n = diag.dim;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[(j, j)].re().total_cmp(&diag[(i, i)].re()));
    let values = order.iter().map(|&i| diag[(i, i)].re()).collect();
    let vectors = Matrix::from_fn(n, |r, c| v[(r, order[c])]);
    HermitianEig { values, vectors }
}

fn off_diagonal_norm<T: Scalar>(a: &Matrix<T>) -> f64 {
    let n = a.dim;
    let mut acc = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            acc += a[(p, q)].norm_sqr();
        }
    }
    (2.0 * acc).sqrt()
}

/// Cyclic Jacobi on a Hermitian `a`, accumulating rotations into `v`.
/// On exit `a` is diagonal to working precision.
fn jacobi_in_place<T: Scalar>(a: &mut Matrix<T>, v: &mut Matrix<T>) {
    let n = a.dim;
    let scale = a.frobenius_norm();
    if scale == 0.0 || n == 1 {
        return;
    }
    let target = JACOBI_EPS * scale;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(a) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.abs();
                if mag <= 1e-300 || mag <= 1e-18 * scale {
                    a[(p, q)] = T::ZERO;
                    a[(q, p)] = T::ZERO;
                    continue;
                }
                let phase = apq / mag;
                let app = a[(p, p)].re();
                let aqq = a[(q, q)].re();
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                rotate(a, v, p, q, c, s, phase);
                a[(p, p)] = T::from_real(app - t * mag);
                a[(q, q)] = T::from_real(aqq + t * mag);
                a[(p, q)] = T::ZERO;
                a[(q, p)] = T::ZERO;
            }
        }
    }
}

/// Applies `A ← U† A U`, `V ← V U` with `U = [[c, s·e], [−s·ē, c]]` on the (p, q) plane.
#[inline]
fn rotate<T: Scalar>(a: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize, c: f64, s: f64, e: T) {
    let n = a.dim;
    let se = e * s;
    let se_bar = e.conj() * s;
    for k in 0..n {
        let akp = a.data[k * n + p];
        let akq = a.data[k * n + q];
        a.data[k * n + p] = akp * c - se_bar * akq;
        a.data[k * n + q] = se * akp + akq * c;
    }
    for k in 0..n {
        let apk = a.data[p * n + k];
        let aqk = a.data[q * n + k];
        a.data[p * n + k] = apk * c - se * aqk;
        a.data[q * n + k] = se_bar * apk + aqk * c;
    }
    for k in 0..n {
        let vkp = v.data[k * n + p];
        let vkq = v.data[k * n + q];
        v.data[k * n + p] = vkp * c - se_bar * vkq;
        v.data[k * n + q] = se * vkp + vkq * c;
    }
}

/// Modified Gram-Schmidt on the columns; keeps repeatedly seeded bases unitary.
fn reorthonormalize<T: Scalar>(v: &mut Matrix<T>) {
    let n = v.dim;
    for k in 0..n {
        for j in 0..k {
            let mut dot = T::ZERO;
            for i in 0..n {
                dot += v[(i, j)].conj() * v[(i, k)];
            }
            for i in 0..n {
                let vij = v[(i, j)];
                v[(i, k)] -= dot * vij;
            }
        }
        let norm = (0..n).map(|i| v[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            v[(i, k)] = v[(i, k)] / norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(dim: usize, entries: &[(f64, f64)]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(dim);
        let mut it = entries.iter().cycle();
        for i in 0..dim {
            for j in i..dim {
                let &(re, im) = it.next().unwrap();
                if i == j {
                    m[(i, i)] = c(re, 0.0);
                } else {
                    m[(i, j)] = c(re, im);
                    m[(j, i)] = c(re, -im);
                }
            }
        }
        m
    }

    fn eig_invariants(a: &ComplexMatrix, eig: &HermitianEig) {
        let recon = eig.reconstruct();
        let err = recon.distance(a);
        assert!(err <= 1e-10 * a.frobenius_norm().max(1.0), "reconstruction {err}");
        let vtv = eig.vectors.adjoint().matmul(&eig.vectors);
        assert!(vtv.distance(&ComplexMatrix::identity(a.dim())) <= 1e-10);
        for w in eig.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn kron_identities_and_paulis() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let zz = kron(&Pauli::Z.matrix(), &Pauli::Z.matrix());
        assert_eq!(zz, ComplexMatrix::from_real_diagonal(&[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn kron_bit_flip_on_first_qubit() {
        let x1 = kron(&Pauli::X.matrix(), &ComplexMatrix::identity(2));
        let ket00 = ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 0.0, 0.0]);
        let ket10 = ComplexMatrix::from_real_diagonal(&[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(ket00.conjugate_by(&x1), ket10);
    }

    #[test]
    fn kron_is_associative() {
        let a = Pauli::X.matrix();
        let b = Pauli::Y.matrix();
        let z = Pauli::Z.matrix();
        assert_eq!(kron(&kron(&a, &b), &z), kron(&a, &kron(&b, &z)));
    }

    #[test]
    fn eig_of_paulis() {
        let ez = eig_hermitian(&Pauli::Z.matrix()).unwrap();
        assert_eq!(ez.values, vec![1.0, -1.0]);
        let ex = eig_hermitian(&Pauli::X.matrix()).unwrap();
        assert!((ex.values[0] - 1.0).abs() < 1e-15 && (ex.values[1] + 1.0).abs() < 1e-15);
        // +1 eigenvector is (|0> + |1>)/sqrt2 up to phase
        let v0 = ex.vectors[(0, 0)];
        let v1 = ex.vectors[(1, 0)];
        assert!((v0 - v1).norm() < 1e-12);
        assert!((v0.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        eig_invariants(&Pauli::Y.matrix(), &eig_hermitian(&Pauli::Y.matrix()).unwrap());
    }

    #[test]
    fn eig_of_pure_projector() {
        for &theta in &[0.0, 0.3, 1.2] {
            let h: f64 = theta / 2.0;
            let v = [c(h.cos(), 0.0), c(h.sin(), 0.0)];
            let rho = ComplexMatrix::outer(&v);
            let e = eig_hermitian(&rho).unwrap();
            assert!((e.values[0] - 1.0).abs() < 1e-14);
            assert!(e.values[1].abs() < 1e-14);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut m = ComplexMatrix::zeros(2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
        assert!(matches!(project_psd(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn psd_projection_examples() {
        let p = project_psd(&ComplexMatrix::from_real_diagonal(&[1.0, -2.0])).unwrap();
        assert!(p.distance(&ComplexMatrix::from_real_diagonal(&[1.0, 0.0])) < 1e-15);
        let neg = ComplexMatrix::identity(3).scale(-1.0);
        assert!(project_psd(&neg).unwrap().frobenius_norm() < 1e-15);
        let psd = ComplexMatrix::from_fn(2, |i, j| {
            if i == j {
                c(2.0, 0.0)
            } else {
                c(0.5, if i < j { 0.3 } else { -0.3 })
            }
        });
        assert!(project_psd(&psd).unwrap().distance(&psd) < 1e-10);
    }

    #[test]
    fn trace_product_examples() {
        let p0 = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        let p1 = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
        assert_eq!(trace_product(&p0, &p1).unwrap(), c(0.0, 0.0));
        let rho = ComplexMatrix::outer(&[c(0.6, 0.0), c(0.0, 0.8)]);
        assert!((trace_product(&ComplexMatrix::identity(2), &rho).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert!(matches!(
            trace_product(&p0, &ComplexMatrix::identity(4)),
            Err(Error::DimensionMismatch(2, 4))
        ));
    }

    #[test]
    fn seeded_eig_matches_cold() {
        let a = random_hermitian(8, &[(0.3, -0.1), (1.2, 0.4), (-0.7, 0.9), (0.05, -0.6), (2.0, 0.0)]);
        let cold = eig_hermitian(&a).unwrap();
        let perturbed = {
            let mut b = a.clone();
            b[(0, 0)] += c(1e-3, 0.0);
            b
        };
        let warm = eig_hermitian_seeded(&perturbed, &cold.vectors).unwrap();
        eig_invariants(&perturbed, &warm);
        // an arbitrary unitary seed is still correct
        let h = kron_all([&Pauli::X.matrix(), &Pauli::Y.matrix(), &Pauli::Z.matrix()]);
        let seeded = eig_hermitian_seeded(&a, &h).unwrap();
        for (x, y) in seeded.values.iter().zip(&cold.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    fn hermitian_strategy() -> impl Strategy<Value = ComplexMatrix> {
        hermitian_up_to(16)
    }

    fn hermitian_up_to(max_dim: usize) -> impl Strategy<Value = ComplexMatrix> {
        (1usize..=max_dim).prop_flat_map(|dim| {
            proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), dim * (dim + 1) / 2)
                .prop_map(move |entries| random_hermitian(dim, &entries))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn eig_reconstructs_and_is_orthonormal(a in hermitian_strategy()) {
            let eig = eig_hermitian(&a).unwrap();
            eig_invariants(&a, &eig);
        }

        #[test]
        fn psd_projection_is_idempotent(a in hermitian_strategy()) {
            let p = project_psd(&a).unwrap();
            prop_assert!(min_eigenvalue(&p).unwrap() >= -1e-12 * a.frobenius_norm().max(1.0));
            let pp = project_psd(&p).unwrap();
            prop_assert!(pp.distance(&p) <= 1e-10 * p.frobenius_norm().max(1.0));
        }

        #[test]
        fn kron_trace_factorizes(a in hermitian_up_to(8), b in hermitian_up_to(8)) {
            let lhs = kron(&a, &b).trace();
            let rhs = a.trace() * b.trace();
            prop_assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm().max(1.0));
        }

        #[test]
        fn kron_trace_product_factorizes(
            a in hermitian_up_to(8), b in hermitian_up_to(8),
            seed in 0u64..1000,
        ) {
            let shift = |m: &ComplexMatrix, k: f64| ComplexMatrix::from_fn(m.dim(), |i, j| m[((i + 1) % m.dim(), j)] * k);
            let cm = shift(&a, 0.5 + seed as f64 * 1e-3);
            let dm = shift(&b, 1.5);
            let lhs = trace_product(&kron(&a, &b), &kron(&cm, &dm)).unwrap();
            let rhs = trace_product(&a, &cm).unwrap() * trace_product(&b, &dm).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm().max(1.0));
        }
    }
}
