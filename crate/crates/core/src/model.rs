//! Linear single-qubit annealing schedule `H(s) = (1−s)(Γx/2)σx + s(Γz/2)σz`, `s = t/t_f`.

use serde::{Deserialize, Serialize};

use crate::algebra::{expectation, hermitian_eigensystem, ComplexMatrix2, DensityMatrix, C64};
use crate::error::{Error, Result};

/// Tolerance on schedule-domain checks, so that grid-snapped end times pass.
const DOMAIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealSchedule {
    pub gamma_x: f64,
    pub gamma_z: f64,
    pub t_f: f64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            gamma_x: 1.0,
            gamma_z: 1.0,
            t_f: 14.0,
        }
    }
}

/// Instantaneous eigenpairs of `H(t)`, ground first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigensystem {
    pub e0: f64,
    pub e1: f64,
    pub v0: [C64; 2],
    pub v1: [C64; 2],
}

impl Eigensystem {
    pub fn gap(&self) -> f64 {
        self.e1 - self.e0
    }
}

impl AnnealSchedule {
    pub fn new(gamma_x: f64, gamma_z: f64, t_f: f64) -> Result<Self> {
        let s = Self {
            gamma_x,
            gamma_z,
            t_f,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("gamma_x", self.gamma_x),
            ("gamma_z", self.gamma_z),
            ("t_f", self.t_f),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive and finite",
                });
            }
        }
        Ok(())
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= -DOMAIN_TOL && t <= self.t_f + DOMAIN_TOL) {
            return Err(Error::TimeOutOfRange { t, t_f: self.t_f });
        }
        Ok(())
    }

    /// Anneal fraction `s = t/t_f`, clamped onto `[0, 1]`.
    pub fn s(&self, t: f64) -> f64 {
        (t / self.t_f).clamp(0.0, 1.0)
    }

    /// Pauli coefficients `(cx, cz)` of `H(t)`.
    pub(crate) fn field(&self, t: f64) -> (f64, f64) {
        self.field_at_s(self.s(t))
    }

    pub(crate) fn field_at_s(&self, s: f64) -> (f64, f64) {
        ((1.0 - s) * 0.5 * self.gamma_x, s * 0.5 * self.gamma_z)
    }

    pub(crate) fn hamiltonian_unchecked(&self, t: f64) -> ComplexMatrix2 {
        Drive::sweep(*self).hamiltonian_unchecked(t)
    }

    pub fn hamiltonian(&self, t: f64) -> Result<ComplexMatrix2> {
        Drive::sweep(*self).hamiltonian(t)
    }

    /// Closed-form gap `√((1−s)²Γx² + s²Γz²)`.
    pub fn gap(&self, t: f64) -> f64 {
        let (cx, cz) = self.field(t);
        2.0 * cx.hypot(cz)
    }

    pub fn eigensystem(&self, t: f64) -> Result<Eigensystem> {
        self.check_time(t)?;
        Ok(self.eigensystem_unchecked(t))
    }

    pub(crate) fn eigensystem_unchecked(&self, t: f64) -> Eigensystem {
        Drive::sweep(*self).eigensystem_unchecked(t)
    }

    /// Ground state of `H(0)`, `(|↑⟩ − |↓⟩)/√2` for positive `Γx`.
    pub fn initial_state(&self) -> DensityMatrix {
        let v0 = self.eigensystem_unchecked(0.0).v0;
        DensityMatrix::pure(v0).expect("eigenvector is normalized")
    }

    /// `Tr[ρ·H(t_f)] − E0(t_f)`.
    pub fn residual_energy(&self, rho: &DensityMatrix) -> f64 {
        let h = self.hamiltonian_unchecked(self.t_f);
        let e0 = self.eigensystem_unchecked(self.t_f).e0;
        expectation(rho, &h).expect("Hermitian") - e0
    }

    /// Ground-state population `⟨v0(t)|ρ|v0(t)⟩`.
    pub fn fidelity(&self, rho: &DensityMatrix, t: f64) -> Result<f64> {
        let es = self.eigensystem(t)?;
        Ok(population(rho, es.v0))
    }
}

/// Time dependence handed to the integrators: the linear sweep, or the
/// schedule held at a fixed anneal fraction over the same time window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    pub sched: AnnealSchedule,
    pub frozen_s: Option<f64>,
}

impl From<AnnealSchedule> for Drive {
    fn from(sched: AnnealSchedule) -> Self {
        Drive::sweep(sched)
    }
}

impl Drive {
    pub fn sweep(sched: AnnealSchedule) -> Self {
        Self {
            sched,
            frozen_s: None,
        }
    }

    pub fn frozen(sched: AnnealSchedule, s: f64) -> Self {
        Self {
            sched,
            frozen_s: Some(s.clamp(0.0, 1.0)),
        }
    }

    pub fn t_f(&self) -> f64 {
        self.sched.t_f
    }

    pub fn s(&self, t: f64) -> f64 {
        self.frozen_s.unwrap_or_else(|| self.sched.s(t))
    }

    /// Pauli coefficients `(cx, cz)` at time `t`.
    pub fn field(&self, t: f64) -> (f64, f64) {
        self.sched.field_at_s(self.s(t))
    }

    pub fn hamiltonian(&self, t: f64) -> Result<ComplexMatrix2> {
        self.sched.check_time(t)?;
        Ok(self.hamiltonian_unchecked(t))
    }

    pub(crate) fn hamiltonian_unchecked(&self, t: f64) -> ComplexMatrix2 {
        let (cx, cz) = self.field(t);
        ComplexMatrix2::from_pauli(0.0, cx, 0.0, cz)
    }

    pub fn eigensystem(&self, t: f64) -> Result<Eigensystem> {
        self.sched.check_time(t)?;
        Ok(self.eigensystem_unchecked(t))
    }

    pub(crate) fn eigensystem_unchecked(&self, t: f64) -> Eigensystem {
        let (e0, e1, v0, v1) = hermitian_eigensystem(&self.hamiltonian_unchecked(t))
            .expect("schedule Hamiltonian is Hermitian by construction");
        Eigensystem { e0, e1, v0, v1 }
    }
}

/// `⟨v|ρ|v⟩` for a unit vector.
pub fn population(rho: &DensityMatrix, v: [C64; 2]) -> f64 {
    let rv = rho.matrix().apply(v);
    (v[0].conj() * rv[0] + v[1].conj() * rv[1]).re
}
