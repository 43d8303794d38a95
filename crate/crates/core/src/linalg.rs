//! Small dense complex matrices: Pauli algebra, Kronecker products, a Jacobi
//! Hermitian eigensolver and matrix exponentials.
//!
//! Two-qubit operators use the basis ordering `|00>, |01>, |10>, |11>`, i.e.
//! the first tensor factor is the most significant bit.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense `N x N` complex matrix stored row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix<T, const N: usize> {
    data: [[Complex<T>; N]; N],
}

impl<T: Real, const N: usize> Default for Matrix<T, N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<T: Real, const N: usize> Matrix<T, N> {
    pub fn zeros() -> Self {
        Self {
            data: [[Complex::zero(); N]; N],
        }
    }

    pub fn identity() -> Self {
        Self::from_diag([T::one(); N])
    }

    pub fn from_rows(data: [[Complex<T>; N]; N]) -> Self {
        Self { data }
    }

    pub fn from_real(rows: [[T; N]; N]) -> Self {
        let mut m = Self::zeros();
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.data[i][j] = Complex::new(v, T::zero());
            }
        }
        m
    }

    pub fn from_diag(diag: [T; N]) -> Self {
        let mut m = Self::zeros();
        for (i, &v) in diag.iter().enumerate() {
            m.data[i][i] = Complex::new(v, T::zero());
        }
        m
    }

    /// Outer product `u v^†`.
    pub fn outer(u: &[Complex<T>; N], v: &[Complex<T>; N]) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.data[i][j] = u[i] * v[j].conj();
            }
        }
        m
    }

    pub fn rows(&self) -> &[[Complex<T>; N]; N] {
        &self.data
    }

    pub fn column(&self, j: usize) -> [Complex<T>; N] {
        std::array::from_fn(|i| self.data[i][j])
    }

    pub fn diagonal(&self) -> [Complex<T>; N] {
        std::array::from_fn(|i| self.data[i][i])
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.data[i][j] = self.data[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex<T> {
        (0..N).fold(Complex::zero(), |acc, i| acc + self.data[i][i])
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_complex(&self, s: Complex<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        let mut m = *self;
        for row in m.data.iter_mut() {
            for z in row.iter_mut() {
                *z = f(*z);
            }
        }
        m
    }

    pub fn apply(&self, v: &[Complex<T>; N]) -> [Complex<T>; N] {
        std::array::from_fn(|i| {
            (0..N).fold(Complex::zero(), |acc, k| acc + self.data[i][k] * v[k])
        })
    }

    /// `A B - B A`.
    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    /// Largest elementwise modulus.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .flatten()
            .fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        (*self - *other).max_abs()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .flatten()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Hermitian to within `tol` elementwise, relative to `max(1, max|M_ij|)`.
    pub fn is_hermitian(&self, tol: T) -> bool {
        let scale = T::one().max(self.max_abs());
        self.max_abs_diff(&self.adjoint()) <= tol * scale
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        (*self * self.adjoint()).max_abs_diff(&Self::identity()) <= tol
    }
}

impl<T: Real, const N: usize> Index<(usize, usize)> for Matrix<T, N> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i][j]
    }
}

impl<T: Real, const N: usize> IndexMut<(usize, usize)> for Matrix<T, N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i][j]
    }
}

impl<T: Real, const N: usize> Add for Matrix<T, N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.data[i][j] += rhs.data[i][j];
            }
        }
        self
    }
}

impl<T: Real, const N: usize> Sub for Matrix<T, N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.data[i][j] -= rhs.data[i][j];
            }
        }
        self
    }
}

impl<T: Real, const N: usize> Neg for Matrix<T, N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|z| -z)
    }
}

impl<T: Real, const N: usize> Mul for Matrix<T, N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.data[i][k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..N {
                    m.data[i][j] += a * rhs.data[k][j];
                }
            }
        }
        m
    }
}

pub type Matrix2<T> = Matrix<T, 2>;
pub type Matrix4<T> = Matrix<T, 4>;

pub fn identity2<T: Real>() -> Matrix2<T> {
    Matrix2::identity()
}

pub fn pauli_x<T: Real>() -> Matrix2<T> {
    Matrix2::from_real([[T::zero(), T::one()], [T::one(), T::zero()]])
}

pub fn pauli_y<T: Real>() -> Matrix2<T> {
    let i = Complex::i();
    Matrix2::from_rows([[Complex::zero(), -i], [i, Complex::zero()]])
}

pub fn pauli_z<T: Real>() -> Matrix2<T> {
    Matrix2::from_diag([T::one(), -T::one()])
}

/// Kronecker product `A ⊗ B`; `A` acts on the first (most significant) qubit.
pub fn tensor<T: Real>(a: &Matrix2<T>, b: &Matrix2<T>) -> Matrix4<T> {
    let mut m = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    m
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct EigenSystem<T, const N: usize> {
    pub values: [T; N],
    pub vectors: Matrix<T, N>,
}

impl<T: Real, const N: usize> EigenSystem<T, N> {
    pub fn vector(&self, k: usize) -> [Complex<T>; N] {
        self.vectors.column(k)
    }

    /// `Σ f(λ_k) v_k v_k^†`.
    pub fn reconstruct_with(&self, f: impl Fn(T) -> Complex<T>) -> Matrix<T, N> {
        (0..N).fold(Matrix::zeros(), |acc, k| {
            let v = self.vector(k);
            acc + Matrix::outer(&v, &v).scale_complex(f(self.values[k]))
        })
    }

    pub fn reconstruct(&self) -> Matrix<T, N> {
        self.reconstruct_with(|l| Complex::new(l, T::zero()))
    }
}

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Eigenvalues come back ascending. Each eigenvector is rescaled so that its
/// first component with modulus above `1e-10` is real and positive.
pub fn hermitian_eig<T: Real, const N: usize>(m: &Matrix<T, N>) -> Result<EigenSystem<T, N>> {
    if !m.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    if !m.is_hermitian(T::validation_tol()) {
        return Err(Error::invalid("matrix is not Hermitian"));
    }

    let half = T::lit(0.5);
    let mut a = (*m + m.adjoint()).scale(half);
    let mut v = Matrix::<T, N>::identity();
    let threshold = T::jacobi_tol() * T::one().max(a.frobenius_norm());

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r == T::zero() {
                    continue;
                }
                // Phase rotation makes the pivot real, then a real Jacobi
                // rotation annihilates it.
                let phase = apq / r;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (r + r);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;

                let mut g = Matrix::<T, N>::identity();
                g[(p, p)] = Complex::new(c, T::zero());
                g[(p, q)] = Complex::new(s, T::zero());
                g[(q, p)] = phase.conj() * (-s);
                g[(q, q)] = phase.conj() * c;

                a = g.adjoint() * a * g;
                a[(p, q)] = Complex::zero();
                a[(q, p)] = Complex::zero();
                for k in 0..N {
                    a[(k, k)].im = T::zero();
                }
                v = v * g;
            }
        }
    }
    if off_diagonal_norm(&a) > threshold {
        return Err(Error::invalid("Jacobi iteration did not converge"));
    }

    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| {
        a[(i, i)]
            .re
            .partial_cmp(&a[(j, j)].re)
            .expect("finite eigenvalues")
    });

    let values = order.map(|k| a[(k, k)].re);
    let mut vectors = Matrix::<T, N>::zeros();
    let cutoff = T::lit(1e-10);
    for (col, &k) in order.iter().enumerate() {
        let mut vec = v.column(k);
        if let Some(lead) = vec.iter().find(|z| z.norm() > cutoff) {
            let phase = lead.conj() / lead.norm();
            for z in vec.iter_mut() {
                *z *= phase;
            }
        }
        for (row, z) in vec.iter().enumerate() {
            vectors[(row, col)] = *z;
        }
    }
    Ok(EigenSystem { values, vectors })
}

fn off_diagonal_norm<T: Real, const N: usize>(a: &Matrix<T, N>) -> T {
    let mut acc = T::zero();
    for i in 0..N {
        for j in 0..N {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// `exp(-i s M)` for Hermitian `M`, built from the spectral decomposition.
/// `s = 0` returns the identity exactly.
pub fn unitary_exp<T: Real, const N: usize>(m: &Matrix<T, N>, s: T) -> Result<Matrix<T, N>> {
    if s == T::zero() {
        if !m.is_hermitian(T::validation_tol()) {
            return Err(Error::invalid("matrix is not Hermitian"));
        }
        return Ok(Matrix::identity());
    }
    let eig = hermitian_eig(m)?;
    Ok(eig.reconstruct_with(|l| {
        let phi = -s * l;
        Complex::new(phi.cos(), phi.sin())
    }))
}

/// General matrix exponential `e^X` by scaling and squaring of a Taylor series.
///
/// Independent of [`hermitian_eig`]; used to cross-check spectral exponentials.
pub fn exp_series<T: Real, const N: usize>(x: &Matrix<T, N>) -> Matrix<T, N> {
    let norm = x.frobenius_norm();
    let mut squarings = 0;
    let mut scaled = *x;
    let half = T::lit(0.5);
    let mut n = norm;
    while n > half {
        scaled = scaled.scale(half);
        n *= half;
        squarings += 1;
    }

    let mut sum = Matrix::<T, N>::identity();
    let mut term = Matrix::<T, N>::identity();
    for k in 1..=40 {
        term = (term * scaled).scale(T::one() / T::lit(k as f64));
        sum = sum + term;
        if term.max_abs() <= T::epsilon() * T::lit(1e-3) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// `Tr[H ρ]` for Hermitian operands. The imaginary residue is discarded.
pub fn expectation<T: Real, const N: usize>(h: &Matrix<T, N>, rho: &Matrix<T, N>) -> T {
    let mut acc = Complex::<T>::zero();
    for i in 0..N {
        for k in 0..N {
            acc += h[(i, k)] * rho[(k, i)];
        }
    }
    debug_assert!(
        acc.im.abs() <= T::validation_tol() * T::one().max(h.max_abs()),
        "expectation value has imaginary part {}",
        acc.im
    );
    acc.re
}

/// `i` as a complex scalar of type `T`.
pub fn imag_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// `cos(θ/2) I - i sin(θ/2) σ_x`, i.e. `exp(-i θ σ_x / 2)`.
pub fn x_rotation<T: Real>(theta: T) -> Matrix2<T> {
    let half = theta * T::lit(0.5);
    let c = Complex::new(half.cos(), T::zero());
    let s = Complex::new(T::zero(), -half.sin());
    Matrix2::from_rows([[c, s], [s, c]])
}
