//! The two-spin XYZ battery: Hamiltonian, closed-form spectrum and Gibbs state.

use num_complex::Complex;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eig, identity2, pauli_x, pauli_y, pauli_z, tensor, Matrix4};
use crate::scalar::{sinhc, Real};

/// Physical parameters of the battery. `beta` is the inverse temperature
/// in units where `k_B = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpinParams<T> {
    j: T,
    jz: T,
    gamma: T,
    b: T,
    beta: T,
}

impl<T: Real> SpinParams<T> {
    /// Parameters at `beta = 1`.
    pub fn new(j: T, jz: T, gamma: T, b: T) -> Result<Self> {
        Self::with_beta(j, jz, gamma, b, T::one())
    }

    pub fn with_beta(j: T, jz: T, gamma: T, b: T, beta: T) -> Result<Self> {
        for (name, v) in [("J", j), ("Jz", jz), ("gamma", gamma), ("B", b), ("beta", beta)] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
        }
        if beta <= T::zero() {
            return Err(Error::invalid("beta must be positive"));
        }
        Ok(Self {
            j,
            jz,
            gamma,
            b,
            beta,
        })
    }

    pub fn j(&self) -> T {
        self.j
    }
    pub fn jz(&self) -> T {
        self.jz
    }
    pub fn gamma(&self) -> T {
        self.gamma
    }
    /// Magnetic field strength `B`.
    pub fn field(&self) -> T {
        self.b
    }
    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn set_j(self, j: T) -> Result<Self> {
        Self::with_beta(j, self.jz, self.gamma, self.b, self.beta)
    }
    pub fn set_jz(self, jz: T) -> Result<Self> {
        Self::with_beta(self.j, jz, self.gamma, self.b, self.beta)
    }
    pub fn set_gamma(self, gamma: T) -> Result<Self> {
        Self::with_beta(self.j, self.jz, gamma, self.b, self.beta)
    }
    pub fn set_field(self, b: T) -> Result<Self> {
        Self::with_beta(self.j, self.jz, self.gamma, b, self.beta)
    }
    pub fn set_beta(self, beta: T) -> Result<Self> {
        Self::with_beta(self.j, self.jz, self.gamma, self.b, beta)
    }

    /// `γJ`, the corner coupling between `|00>` and `|11>`.
    pub fn corner_coupling(&self) -> T {
        self.gamma * self.j
    }

    /// `η = sqrt(B² + (γJ)²)`.
    pub fn eta(&self) -> T {
        self.b.hypot(self.corner_coupling())
    }

    pub(crate) fn require_unit_beta(&self) -> Result<()> {
        if self.beta != T::one() {
            return Err(Error::UnsupportedClosedForm {
                beta: self.beta.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }
}

/// `(J/2)[(1+γ) σx⊗σx + (1-γ) σy⊗σy] + (Jz/2) σz⊗σz`.
pub fn build_spin_hamiltonian<T: Real>(p: &SpinParams<T>) -> Matrix4<T> {
    let half = T::lit(0.5);
    let xx = tensor(&pauli_x(), &pauli_x());
    let yy = tensor(&pauli_y(), &pauli_y());
    let zz = tensor(&pauli_z(), &pauli_z());
    xx.scale(half * p.j * (T::one() + p.gamma))
        + yy.scale(half * p.j * (T::one() - p.gamma))
        + zz.scale(half * p.jz)
}

/// `(B/2)(σz⊗I + I⊗σz) = diag(B, 0, 0, -B)`.
pub fn build_field_hamiltonian<T: Real>(p: &SpinParams<T>) -> Matrix4<T> {
    let half = T::lit(0.5);
    let z1 = tensor(&pauli_z(), &identity2());
    let z2 = tensor(&identity2(), &pauli_z());
    (z1 + z2).scale(half * p.b)
}

pub fn build_total_hamiltonian<T: Real>(p: &SpinParams<T>) -> Matrix4<T> {
    build_spin_hamiltonian(p) + build_field_hamiltonian(p)
}

/// Closed-form eigenpairs of the total Hamiltonian, labelled in the fixed
/// order `E1 = (-Jz + 2J)/2`, `E2 = (-Jz - 2J)/2`, `E3 = Jz/2 + η`,
/// `E4 = Jz/2 - η` (not sorted).
#[derive(Clone, Debug)]
pub struct SpectralDecomposition<T> {
    pub energies: [T; 4],
    pub eta: T,
    /// `|11>` amplitude of `ψ3`.
    pub n_plus: T,
    /// `|11>` amplitude of `ψ4`.
    pub n_minus: T,
    pub states: [[Complex<T>; 4]; 4],
}

impl<T: Real> SpectralDecomposition<T> {
    /// `max_k ||H ψ_k - E_k ψ_k||`.
    pub fn max_residual(&self, h: &Matrix4<T>) -> T {
        (0..4)
            .map(|k| self.residual(h, k))
            .fold(T::zero(), |acc, r| acc.max(r))
    }

    pub fn residual(&self, h: &Matrix4<T>, k: usize) -> T {
        let psi = &self.states[k];
        let h_psi = h.apply(psi);
        (0..4)
            .map(|i| (h_psi[i] - psi[i] * self.energies[k]).norm_sqr())
            .fold(T::zero(), |acc, x| acc + x)
            .sqrt()
    }
}

pub fn closed_form_spectrum<T: Real>(p: &SpinParams<T>) -> SpectralDecomposition<T> {
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let zero = Complex::zero();
    let re = |x: T| Complex::new(x, T::zero());

    let eta = p.eta();
    let gj = p.corner_coupling();
    let b = p.b;

    let e1 = (-p.jz + two * p.j) * half;
    let e2 = (-p.jz - two * p.j) * half;
    let e3 = p.jz * half + eta;
    let e4 = p.jz * half - eta;

    let r = T::FRAC_1_SQRT_2();
    let psi1 = [zero, re(r), re(r), zero];
    let psi2 = [zero, re(-r), re(r), zero];

    let (psi3, psi4, n_plus, n_minus);
    if gj.abs() < T::lit(1e-12) {
        // Corner block already diagonal: the larger level sits on |00> for B >= 0.
        let up = [re(T::one()), zero, zero, zero];
        let down = [zero, zero, zero, re(T::one())];
        if b >= T::zero() {
            (psi3, psi4, n_plus, n_minus) = (up, down, T::zero(), T::one());
        } else {
            (psi3, psi4, n_plus, n_minus) = (down, up, T::one(), T::zero());
        }
    } else {
        // (B ± η)/(γJ), rearranged to avoid cancellation when B and ±η have opposite signs.
        let ratio_plus = if b >= T::zero() {
            (b + eta) / gj
        } else {
            gj / (eta - b)
        };
        let ratio_minus = if b <= T::zero() {
            (b - eta) / gj
        } else {
            -gj / (b + eta)
        };
        let norm = |x: T| T::one() / x.hypot(T::one());
        n_plus = norm(ratio_plus);
        n_minus = norm(ratio_minus);
        psi3 = [re(ratio_plus * n_plus), zero, zero, re(n_plus)];
        psi4 = [re(ratio_minus * n_minus), zero, zero, re(n_minus)];
    }

    SpectralDecomposition {
        energies: [e1, e2, e3, e4],
        eta,
        n_plus,
        n_minus,
        states: [psi1, psi2, psi3, psi4],
    }
}

/// Unnormalized entries of the `beta = 1` Gibbs matrix and the partition function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThermalElements<T> {
    pub mu_plus: T,
    pub mu_minus: T,
    pub kappa: T,
    pub nu: T,
    pub epsilon: T,
    pub partition: T,
}

pub fn thermal_elements<T: Real>(p: &SpinParams<T>) -> Result<ThermalElements<T>> {
    p.require_unit_beta()?;
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let eta = p.eta();
    let sc = sinhc(eta);
    let outer = (-p.jz * half).exp();
    let inner = (p.jz * half).exp();

    let mu = |sign: T| outer * (eta.cosh() + sign * p.b * sc);
    Ok(ThermalElements {
        mu_plus: mu(T::one()),
        mu_minus: mu(-T::one()),
        kappa: -p.corner_coupling() * outer * sc,
        nu: inner * p.j.cosh(),
        epsilon: -inner * p.j.sinh(),
        partition: two * (outer * eta.cosh() + inner * p.j.cosh()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GibbsMethod {
    /// Assemble the printed `beta = 1` matrix elements.
    ClosedForm,
    /// `exp(-βH)/Tr exp(-βH)` from the numerical eigendecomposition.
    Oracle,
}

/// A validated quantum state: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix<T> {
    matrix: Matrix4<T>,
}

impl<T: Real> DensityMatrix<T> {
    pub fn new(matrix: Matrix4<T>) -> Result<Self> {
        let tol = T::validation_tol();
        if !matrix.is_finite() {
            return Err(Error::invalid("density matrix has non-finite entries"));
        }
        if !matrix.is_hermitian(tol) {
            return Err(Error::invalid("density matrix is not Hermitian"));
        }
        let tr = matrix.trace();
        if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
            return Err(Error::invalid("density matrix trace differs from 1"));
        }
        let eig = hermitian_eig(&matrix)?;
        if eig.values[0] < -tol {
            return Err(Error::invalid("density matrix has a negative eigenvalue"));
        }
        Ok(Self { matrix })
    }

    /// Skips validation; for states produced by operations that preserve the invariants.
    pub(crate) fn new_unchecked(matrix: Matrix4<T>) -> Self {
        Self { matrix }
    }

    pub fn maximally_mixed() -> Self {
        Self::new_unchecked(Matrix4::identity().scale(T::lit(0.25)))
    }

    /// `|ψ><ψ|` for a normalized `ψ`.
    pub fn pure(psi: &[Complex<T>; 4]) -> Result<Self> {
        Self::new(Matrix4::outer(psi, psi))
    }

    pub fn matrix(&self) -> &Matrix4<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix4<T> {
        self.matrix
    }

    pub fn expectation(&self, op: &Matrix4<T>) -> T {
        linalg::expectation(op, &self.matrix)
    }

    /// Eigenvalues (populations) in ascending order.
    pub fn spectrum(&self) -> Result<[T; 4]> {
        Ok(hermitian_eig(&self.matrix)?.values)
    }
}

pub fn gibbs_state<T: Real>(p: &SpinParams<T>, method: GibbsMethod) -> Result<DensityMatrix<T>> {
    match method {
        GibbsMethod::ClosedForm => {
            let el = thermal_elements(p)?;
            let z = T::zero();
            let m = Matrix4::from_real([
                [el.mu_minus, z, z, el.kappa],
                [z, el.nu, el.epsilon, z],
                [z, el.epsilon, el.nu, z],
                [el.kappa, z, z, el.mu_plus],
            ]);
            Ok(DensityMatrix::new_unchecked(m.scale(T::one() / el.partition)))
        }
        GibbsMethod::Oracle => {
            let eig = hermitian_eig(&build_total_hamiltonian(p))?;
            // Shift by the ground energy so the weights cannot overflow.
            let ground = eig.values[0];
            let weights = eig.values.map(|e| (-p.beta * (e - ground)).exp());
            let norm = weights.iter().fold(T::zero(), |acc, &w| acc + w);
            let rho = eig.reconstruct_with(|e| {
                Complex::new((-p.beta * (e - ground)).exp() / norm, T::zero())
            });
            Ok(DensityMatrix::new_unchecked(rho))
        }
    }
}

/// `Tr exp(-βH)` from the closed-form energies.
pub fn partition_from_spectrum<T: Real>(p: &SpinParams<T>) -> T {
    closed_form_spectrum(p)
        .energies
        .iter()
        .fold(T::zero(), |acc, &e| acc + (-p.beta * e).exp())
}
