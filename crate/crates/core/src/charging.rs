//! Unitary charging by a constant transverse field, stored work and ergotropy.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eig, identity2, pauli_x, tensor, x_rotation, Matrix4};
use crate::model::{build_total_hamiltonian, gibbs_state, DensityMatrix, GibbsMethod, SpinParams};
use crate::scalar::Real;

/// Generator used for the charging propagator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropagationMode {
    /// `U = exp(-i H_c t)`.
    #[default]
    ChargingOnly,
    /// `U = exp(-i (H + H_c) t)`.
    Full,
}

impl PropagationMode {
    pub const ALL: [PropagationMode; 2] = [PropagationMode::ChargingOnly, PropagationMode::Full];

    pub fn as_str(&self) -> &'static str {
        match self {
            PropagationMode::ChargingOnly => "charging-only",
            PropagationMode::Full => "full",
        }
    }
}

impl fmt::Display for PropagationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PropagationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "charging-only" | "charging_only" => Ok(PropagationMode::ChargingOnly),
            "full" => Ok(PropagationMode::Full),
            other => Err(Error::invalid(format!("unknown propagation mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChargingSpec<T> {
    omega: T,
    mode: PropagationMode,
}

impl<T: Real> ChargingSpec<T> {
    pub fn new(omega: T, mode: PropagationMode) -> Result<Self> {
        if !omega.is_finite() || omega <= T::zero() {
            return Err(Error::invalid("omega must be positive and finite"));
        }
        Ok(Self { omega, mode })
    }

    pub fn charging_only(omega: T) -> Result<Self> {
        Self::new(omega, PropagationMode::ChargingOnly)
    }

    pub fn omega(&self) -> T {
        self.omega
    }

    pub fn mode(&self) -> PropagationMode {
        self.mode
    }

    /// `2π/ω`.
    pub fn period(&self) -> T {
        T::TAU() / self.omega
    }
}

/// `H_c = ω S_x` with `S_x = (σx⊗I + I⊗σx)/2`.
pub fn build_charging_hamiltonian<T: Real>(spec: &ChargingSpec<T>) -> Matrix4<T> {
    let sx = tensor(&pauli_x(), &identity2()) + tensor(&identity2(), &pauli_x());
    sx.scale(spec.omega * T::lit(0.5))
}

pub fn propagator<T: Real>(p: &SpinParams<T>, spec: &ChargingSpec<T>, t: T) -> Result<Matrix4<T>> {
    if !t.is_finite() {
        return Err(Error::invalid("time must be finite"));
    }
    match spec.mode {
        PropagationMode::ChargingOnly => {
            // H_c is a sum of commuting single-qubit terms, so U factorizes.
            let r = x_rotation(spec.omega * t);
            Ok(tensor(&r, &r))
        }
        PropagationMode::Full => {
            let generator = build_total_hamiltonian(p) + build_charging_hamiltonian(spec);
            linalg::unitary_exp(&generator, t)
        }
    }
}

/// `U ρ U^†`.
pub fn evolve<T: Real>(rho: &DensityMatrix<T>, u: &Matrix4<T>) -> DensityMatrix<T> {
    DensityMatrix::new_unchecked(*u * *rho.matrix() * u.adjoint())
}

/// A battery prepared in its Gibbs state, with the Hamiltonian and initial
/// energy cached for repeated work evaluations.
#[derive(Clone, Debug)]
pub struct Battery<T> {
    params: SpinParams<T>,
    hamiltonian: Matrix4<T>,
    initial: DensityMatrix<T>,
}

impl<T: Real> Battery<T> {
    pub fn new(params: SpinParams<T>) -> Result<Self> {
        Ok(Self {
            hamiltonian: build_total_hamiltonian(&params),
            initial: gibbs_state(&params, GibbsMethod::Oracle)?,
            params,
        })
    }

    pub fn params(&self) -> &SpinParams<T> {
        &self.params
    }

    pub fn hamiltonian(&self) -> &Matrix4<T> {
        &self.hamiltonian
    }

    pub fn initial_state(&self) -> &DensityMatrix<T> {
        &self.initial
    }

    pub fn state_at(&self, spec: &ChargingSpec<T>, t: T) -> Result<DensityMatrix<T>> {
        let u = propagator(&self.params, spec, t)?;
        Ok(evolve(&self.initial, &u))
    }

    /// `Tr[H ρ(t)] - Tr[H ρ(0)]`.
    pub fn stored_work(&self, spec: &ChargingSpec<T>, t: T) -> Result<T> {
        let rho_t = self.state_at(spec, t)?;
        Ok(rho_t.expectation(&self.hamiltonian) - self.initial.expectation(&self.hamiltonian))
    }

    pub fn work_series(&self, spec: &ChargingSpec<T>, t_max: T, n: usize) -> Result<WorkSeries<T>> {
        if n < 2 {
            return Err(Error::invalid("a work series needs at least 2 samples"));
        }
        if !(t_max > T::zero()) || !t_max.is_finite() {
            return Err(Error::invalid("t_max must be positive and finite"));
        }
        let last = T::lit((n - 1) as f64);
        let times: Vec<T> = (0..n)
            .map(|i| t_max * T::lit(i as f64) / last)
            .collect();
        let values = times
            .iter()
            .map(|&t| self.stored_work(spec, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(WorkSeries {
            times,
            values,
            omega: spec.omega,
            mode: spec.mode,
        })
    }
}

pub fn stored_work<T: Real>(p: &SpinParams<T>, spec: &ChargingSpec<T>, t: T) -> Result<T> {
    Battery::new(*p)?.stored_work(spec, t)
}

/// Stored work sampled uniformly on `[0, t_max]`, endpoints included.
pub fn work_series<T: Real>(
    p: &SpinParams<T>,
    spec: &ChargingSpec<T>,
    t_max: T,
    n: usize,
) -> Result<WorkSeries<T>> {
    Battery::new(*p)?.work_series(spec, t_max, n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkSeries<T> {
    pub times: Vec<T>,
    pub values: Vec<T>,
    pub omega: T,
    pub mode: PropagationMode,
}

impl<T: Real> WorkSeries<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn peak(&self) -> Option<(T, T)> {
        self.times
            .iter()
            .zip(&self.values)
            .fold(None, |best: Option<(T, T)>, (&t, &w)| match best {
                Some((_, bw)) if bw >= w => best,
                _ => Some((t, w)),
            })
    }
}

/// The passive state of `ρ` with respect to `H`: the populations of `ρ`
/// in decreasing order placed on the eigenstates of `H` in increasing energy.
pub fn passive_state<T: Real>(rho: &DensityMatrix<T>, h: &Matrix4<T>) -> Result<DensityMatrix<T>> {
    let pops = rho.spectrum()?;
    let levels = hermitian_eig(h)?;
    let mut out = Matrix4::zeros();
    for k in 0..4 {
        let v = levels.vector(k);
        out = out + Matrix4::outer(&v, &v).scale(pops[3 - k]);
    }
    Ok(DensityMatrix::new_unchecked(out))
}

/// Maximum work extractable from `ρ` by a unitary: `Tr[Hρ] - Tr[H ρ_passive]`.
pub fn ergotropy<T: Real>(rho: &DensityMatrix<T>, h: &Matrix4<T>) -> Result<T> {
    let pops = rho.spectrum()?;
    let levels = hermitian_eig(h)?.values;
    let passive_energy = (0..4).fold(T::zero(), |acc, k| acc + pops[3 - k] * levels[k]);
    Ok(rho.expectation(h) - passive_energy)
}
