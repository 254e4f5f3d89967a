//! Closed-form complex 2×2 algebra for a single qubit.
//!
//! Basis convention: `|↑⟩ = (1, 0)`, `|↓⟩ = (0, 1)`, `σz = diag(+1, −1)`.
//! Index 0 is therefore the up state and index 1 the down state.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Hermiticity tolerance for observables.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Trace tolerance when a density matrix is built from user input.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue of a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Row-major complex 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix2 {
    pub a: [[C64; 2]; 2],
}

impl ComplexMatrix2 {
    pub const fn new(a00: C64, a01: C64, a10: C64, a11: C64) -> Self {
        Self {
            a: [[a00, a01], [a10, a11]],
        }
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn sigma_x() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub const fn sigma_y() -> Self {
        Self::new(ZERO, C64::new(0.0, -1.0), I, ZERO)
    }

    pub const fn sigma_z() -> Self {
        Self::new(ONE, ZERO, ZERO, C64::new(-1.0, 0.0))
    }

    pub fn real_diag(d0: f64, d1: f64) -> Self {
        Self::new(d0.into(), ZERO, ZERO, d1.into())
    }

    /// `c0·I + cx·σx + cy·σy + cz·σz`.
    pub fn from_pauli(c0: f64, cx: f64, cy: f64, cz: f64) -> Self {
        Self::new(
            C64::new(c0 + cz, 0.0),
            C64::new(cx, -cy),
            C64::new(cx, cy),
            C64::new(c0 - cz, 0.0),
        )
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: [C64; 2], v: [C64; 2]) -> Self {
        Self::new(
            u[0] * v[0].conj(),
            u[0] * v[1].conj(),
            u[1] * v[0].conj(),
            u[1] * v[1].conj(),
        )
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.a[i][j]
    }

    pub fn trace(&self) -> C64 {
        self.a[0][0] + self.a[1][1]
    }

    pub fn dagger(&self) -> Self {
        Self::new(
            self.a[0][0].conj(),
            self.a[1][0].conj(),
            self.a[0][1].conj(),
            self.a[1][1].conj(),
        )
    }

    pub fn scale(&self, k: C64) -> Self {
        Self::new(self.a[0][0] * k, self.a[0][1] * k, self.a[1][0] * k, self.a[1][1] * k)
    }

    pub fn scale_re(&self, k: f64) -> Self {
        self.scale(C64::new(k, 0.0))
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.a[0][0] * v[0] + self.a[0][1] * v[1],
            self.a[1][0] * v[0] + self.a[1][1] * v[1],
        ]
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermitian_deviation(&self) -> f64 {
        let off = (self.a[0][1] - self.a[1][0].conj()).norm();
        off.max(self.a[0][0].im.abs()).max(self.a[1][1].im.abs())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.a[i][j] - other.a[i][j]).norm());
            }
        }
        m
    }

    /// Pauli decomposition `(c0, cx, cy, cz)` of a Hermitian matrix.
    pub fn pauli_coefficients(&self) -> (f64, f64, f64, f64) {
        let c0 = 0.5 * (self.a[0][0].re + self.a[1][1].re);
        let cz = 0.5 * (self.a[0][0].re - self.a[1][1].re);
        let off = 0.5 * (self.a[1][0] + self.a[0][1].conj());
        (c0, off.re, off.im, cz)
    }

    fn check_hermitian(&self) -> Result<()> {
        let deviation = self.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(())
    }

    /// Eigenvalues `(low, high)` of a Hermitian matrix, `c0 ∓ |c⃗|`.
    pub fn eigenvalues(&self) -> Result<(f64, f64)> {
        self.check_hermitian()?;
        Ok(self.eigenvalues_unchecked())
    }

    pub(crate) fn eigenvalues_unchecked(&self) -> (f64, f64) {
        let (c0, cx, cy, cz) = self.pauli_coefficients();
        let r = (cx * cx + cy * cy + cz * cz).sqrt();
        (c0 - r, c0 + r)
    }
}

impl Add for ComplexMatrix2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(
            self.a[0][0] + o.a[0][0],
            self.a[0][1] + o.a[0][1],
            self.a[1][0] + o.a[1][0],
            self.a[1][1] + o.a[1][1],
        )
    }
}

impl AddAssign for ComplexMatrix2 {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for ComplexMatrix2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for ComplexMatrix2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_re(-1.0)
    }
}

impl Mul for ComplexMatrix2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = &self.a;
        let b = &o.a;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Mul<f64> for ComplexMatrix2 {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        self.scale_re(k)
    }
}

/// `ab − ba`.
pub fn commutator(a: &ComplexMatrix2, b: &ComplexMatrix2) -> ComplexMatrix2 {
    *a * *b - *b * *a
}

/// `ab + ba`.
pub fn anticommutator(a: &ComplexMatrix2, b: &ComplexMatrix2) -> ComplexMatrix2 {
    *a * *b + *b * *a
}

/// Smaller eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &ComplexMatrix2) -> Result<f64> {
    m.eigenvalues().map(|(lo, _)| lo)
}

/// Eigen-decomposition of a Hermitian matrix: `(E0, E1, v0, v1)` with
/// `E0 ≤ E1`, unit eigenvectors, and each eigenvector's largest-magnitude
/// component made real-positive (first component on a tie).
pub fn hermitian_eigensystem(m: &ComplexMatrix2) -> Result<(f64, f64, [C64; 2], [C64; 2])> {
    m.check_hermitian()?;
    let (c0, cx, cy, cz) = m.pauli_coefficients();
    let r = (cx * cx + cy * cy + cz * cz).sqrt();
    if r == 0.0 {
        return Ok((c0, c0, [ONE, ZERO], [ZERO, ONE]));
    }
    // n̂·σ has eigenvectors built from the half-angles of n̂.
    let (nx, ny, nz) = (cx / r, cy / r, cz / r);
    let phase = C64::new(nx, ny);
    let rho = (nx * nx + ny * ny).sqrt();
    let unit_phase = if rho > 0.0 { phase / rho } else { ONE };
    let cos_half = (0.5 * (1.0 + nz)).max(0.0).sqrt();
    let sin_half = (0.5 * (1.0 - nz)).max(0.0).sqrt();
    let excited = [C64::new(cos_half, 0.0), unit_phase * sin_half];
    let ground = [C64::new(sin_half, 0.0), -unit_phase * cos_half];
    Ok((c0 - r, c0 + r, fix_phase(ground), fix_phase(excited)))
}

fn fix_phase(v: [C64; 2]) -> [C64; 2] {
    let (n0, n1) = (v[0].norm(), v[1].norm());
    let pivot = if n1 > n0 * (1.0 + 1e-12) { v[1] } else { v[0] };
    let rot = pivot.conj() / pivot.norm();
    [v[0] * rot, v[1] * rot]
}

/// Qubit state: Hermitian by construction, unit trace, positive semidefinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    m: ComplexMatrix2,
}

impl DensityMatrix {
    /// Validates trace (1e−12) and positivity, Hermitian-projecting entries
    /// whose deviation is below the Hermiticity tolerance.
    pub fn new(m: ComplexMatrix2) -> Result<Self> {
        Self::with_trace_tolerance(m, TRACE_TOL)
    }

    pub fn with_trace_tolerance(m: ComplexMatrix2, trace_tol: f64) -> Result<Self> {
        let deviation = m.hermitian_deviation();
        if deviation > HERMITIAN_TOL.max(trace_tol) {
            return Err(Error::NotHermitian { deviation });
        }
        let rho = Self::hermitian_part(m);
        let tr = rho.trace_re();
        if (tr - 1.0).abs() > trace_tol {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let lo = rho.min_eigenvalue();
        if lo < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {lo:e}")));
        }
        Ok(rho)
    }

    /// Enforces `a01 = conj(a10)` and real diagonal without validation.
    pub(crate) fn hermitian_part(m: ComplexMatrix2) -> Self {
        let c = 0.5 * (m.a[0][1] + m.a[1][0].conj());
        Self {
            m: ComplexMatrix2::new(m.a[0][0].re.into(), c, c.conj(), m.a[1][1].re.into()),
        }
    }

    /// Populations and the `⟨↑|ρ|↓⟩` coherence.
    pub fn from_parts(p_up: f64, p_down: f64, coherence: C64) -> Result<Self> {
        Self::new(ComplexMatrix2::new(
            p_up.into(),
            coherence,
            coherence.conj(),
            p_down.into(),
        ))
    }

    pub fn pure(psi: [C64; 2]) -> Result<Self> {
        let n = psi[0].norm_sqr() + psi[1].norm_sqr();
        if n <= 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let s = 1.0 / n.sqrt();
        let v = [psi[0] * s, psi[1] * s];
        Self::new(ComplexMatrix2::outer(v, v))
    }

    pub fn up() -> Self {
        Self {
            m: ComplexMatrix2::real_diag(1.0, 0.0),
        }
    }

    pub fn down() -> Self {
        Self {
            m: ComplexMatrix2::real_diag(0.0, 1.0),
        }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            m: ComplexMatrix2::real_diag(0.5, 0.5),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix2 {
        &self.m
    }

    pub fn p_up(&self) -> f64 {
        self.m.a[0][0].re
    }

    pub fn p_down(&self) -> f64 {
        self.m.a[1][1].re
    }

    /// `ρ↑↓ = ⟨↑|ρ|↓⟩`.
    pub fn coherence(&self) -> C64 {
        self.m.a[0][1]
    }

    pub fn trace_re(&self) -> f64 {
        self.m.a[0][0].re + self.m.a[1][1].re
    }

    pub fn purity(&self) -> f64 {
        (self.m * self.m).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.m.eigenvalues_unchecked().0
    }

    /// Bloch vector `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)`.
    pub fn bloch(&self) -> [f64; 3] {
        let (_, cx, cy, cz) = self.m.pauli_coefficients();
        [2.0 * cx, 2.0 * cy, 2.0 * cz]
    }

    pub fn trace_distance(&self, other: &Self) -> f64 {
        let d = self.m - other.m;
        let (lo, hi) = d.eigenvalues_unchecked();
        0.5 * (lo.abs() + hi.abs())
    }
}

/// `Tr[ρ·A]` for a Hermitian observable.
pub fn expectation(rho: &DensityMatrix, obs: &ComplexMatrix2) -> Result<f64> {
    obs.check_hermitian()?;
    let tr = (*rho.matrix() * *obs).trace();
    debug_assert!(tr.im.abs() < 1e-10);
    Ok(tr.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn expectation_examples() {
        let sz = ComplexMatrix2::sigma_z();
        let sx = ComplexMatrix2::sigma_x();
        assert!(close(expectation(&DensityMatrix::maximally_mixed(), &sz).unwrap(), 0.0, 1e-15));
        assert!(close(expectation(&DensityMatrix::down(), &sz).unwrap(), -1.0, 1e-15));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let gs0 = DensityMatrix::pure([C64::new(s, 0.0), C64::new(-s, 0.0)]).unwrap();
        assert!(close(expectation(&gs0, &sx).unwrap(), -1.0, 1e-15));
    }

    #[test]
    fn expectation_rejects_non_hermitian() {
        let bad = ComplexMatrix2::new(ZERO, ONE, ZERO, ZERO);
        assert!(matches!(
            expectation(&DensityMatrix::maximally_mixed(), &bad),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn commutator_examples() {
        let sx = ComplexMatrix2::sigma_x();
        let sz = ComplexMatrix2::sigma_z();
        let sy = ComplexMatrix2::sigma_y();
        assert_eq!(commutator(&sx, &sx), ComplexMatrix2::zero());
        let expect = sy.scale(C64::new(0.0, -2.0));
        assert!(commutator(&sx, &sz).max_abs_diff(&expect) < 1e-15);
        let m = ComplexMatrix2::new(C64::new(0.3, 1.0), C64::new(-2.0, 0.5), ONE, I);
        assert_eq!(commutator(&ComplexMatrix2::identity(), &m), ComplexMatrix2::zero());
    }

    #[test]
    fn min_eigenvalue_examples() {
        let half = ComplexMatrix2::real_diag(0.5, 0.5);
        assert!(close(min_eigenvalue(&half).unwrap(), 0.5, 1e-15));
        assert!(close(min_eigenvalue(&ComplexMatrix2::sigma_z()).unwrap(), -1.0, 1e-15));
        let m = ComplexMatrix2::real_diag(0.999, 0.001);
        assert!(close(min_eigenvalue(&m).unwrap(), 0.001, 1e-15));
        let bad = ComplexMatrix2::new(ZERO, ONE, ZERO, ZERO);
        assert!(min_eigenvalue(&bad).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::from_parts(0.6, 0.6, ZERO).is_err());
        assert!(DensityMatrix::from_parts(0.5, 0.5, C64::new(0.6, 0.0)).is_err());
        let rho = DensityMatrix::from_parts(0.5, 0.5, C64::new(0.5, 0.0)).unwrap();
        assert!(close(rho.purity(), 1.0, 1e-15));
    }

    #[test]
    fn eigensystem_phase_convention() {
        let (e0, e1, v0, v1) = hermitian_eigensystem(&ComplexMatrix2::sigma_x().scale_re(0.5)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(e0, -0.5, 1e-15) && close(e1, 0.5, 1e-15));
        assert!((v0[0] - s).norm() < 1e-15 && (v0[1] + s).norm() < 1e-15);
        assert!((v1[0] - s).norm() < 1e-15 && (v1[1] - s).norm() < 1e-15);
        let (_, _, g, _) = hermitian_eigensystem(&ComplexMatrix2::sigma_z()).unwrap();
        assert_eq!(g, [ZERO, ONE]);
    }

    fn hermitian() -> impl Strategy<Value = ComplexMatrix2> {
        (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)
            .prop_map(|(c0, cx, cy, cz)| ComplexMatrix2::from_pauli(c0, cx, cy, cz))
    }

    fn state() -> impl Strategy<Value = DensityMatrix> {
        (0.0..1.0f64, 0.0..std::f64::consts::TAU, 0.0..std::f64::consts::PI, 0.0..1.0f64).prop_map(
            |(r, phi, theta, _)| {
                let (x, y, z) = (
                    r * theta.sin() * phi.cos(),
                    r * theta.sin() * phi.sin(),
                    r * theta.cos(),
                );
                DensityMatrix::new(ComplexMatrix2::from_pauli(0.5, 0.5 * x, 0.5 * y, 0.5 * z))
                    .unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn eigenvalues_match_pauli_closed_form(c0 in -2.0..2.0f64, cx in -2.0..2.0f64,
                                               cy in -2.0..2.0f64, cz in -2.0..2.0f64) {
            let m = ComplexMatrix2::from_pauli(c0, cx, cy, cz);
            let r = (cx * cx + cy * cy + cz * cz).sqrt();
            let (lo, hi) = m.eigenvalues().unwrap();
            prop_assert!((lo - (c0 - r)).abs() < 1e-12);
            prop_assert!((hi - (c0 + r)).abs() < 1e-12);
        }

        #[test]
        fn eigensystem_diagonalizes(m in hermitian()) {
            let (e0, e1, v0, v1) = hermitian_eigensystem(&m).unwrap();
            prop_assert!(e0 <= e1);
            for (e, v) in [(e0, v0), (e1, v1)] {
                let mv = m.apply(v);
                prop_assert!((mv[0] - v[0] * e).norm() < 1e-12 && (mv[1] - v[1] * e).norm() < 1e-12);
                prop_assert!(((v[0].norm_sqr() + v[1].norm_sqr()) - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn expectation_is_linear(a in hermitian(), b in hermitian(), s1 in state(), s2 in state(),
                                 k in -3.0..3.0f64, w in 0.0..1.0f64) {
            let lhs = expectation(&s1, &(a + b * k)).unwrap();
            let rhs = expectation(&s1, &a).unwrap() + k * expectation(&s1, &b).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);

            let mix = DensityMatrix::new(s1.matrix().scale_re(w) + s2.matrix().scale_re(1.0 - w)).unwrap();
            let lhs = expectation(&mix, &a).unwrap();
            let rhs = w * expectation(&s1, &a).unwrap() + (1.0 - w) * expectation(&s2, &a).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
