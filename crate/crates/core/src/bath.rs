//! Ohmic bosonic bath coupled through σz, in the adiabatic (instantaneous
//! eigenbasis) secular Lindblad form.
//!
//! Rates follow the KMS-consistent ohmic form
//! `γ(ω) = 2πα·ω·e^{−|ω|/ω_c} / (1 − e^{−βω})`, the Lamb shift is the
//! principal-value transform `S(ω) = (1/2π)·PV∫ γ(ω′)/(ω − ω′) dω′`, and the
//! jump operators are the Bohr-frequency components of σz in the eigenbasis
//! of `H(t)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{anticommutator, commutator, ComplexMatrix2, DensityMatrix, C64};
use crate::error::{Error, Result};
use crate::model::{Drive, Eigensystem};

/// Quadrature nodes used for the Lamb shift.
pub const LAMB_SHIFT_NODES: usize = 4000;
/// Half-width of the excluded symmetric window around the pole, in units of `ω_c`.
const PV_WINDOW: f64 = 1e-6;
/// Integration domain half-width, in units of `ω_c`.
const PV_DOMAIN: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathParams {
    pub alpha: f64,
    pub beta: f64,
    pub omega_c: f64,
    pub lamb_shift: bool,
}

impl Default for BathParams {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            beta: 10.0,
            omega_c: 10.0,
            lamb_shift: true,
        }
    }
}

impl BathParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let bp = Self {
            alpha,
            beta,
            ..Self::default()
        };
        bp.validate()?;
        Ok(bp)
    }

    pub fn with_lamb_shift(mut self, on: bool) -> Self {
        self.lamb_shift = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: self.alpha,
                reason: "must be non-negative",
            });
        }
        for (name, value) in [("beta", self.beta), ("omega_c", self.omega_c)] {
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

    pub fn is_coupled(&self) -> bool {
        self.alpha > 0.0
    }
}

/// Ohmic KMS rate `γ(ω)`, with `γ(0) = 2πα/β`.
pub fn rate_gamma(omega: f64, bp: &BathParams) -> f64 {
    if bp.alpha == 0.0 {
        return 0.0;
    }
    let cutoff = (-omega.abs() / bp.omega_c).exp();
    let x = bp.beta * omega;
    // ω/(1 − e^{−βω}) written with expm1 so that the ω → 0 limit is exact.
    let bose = if x == 0.0 {
        1.0 / bp.beta
    } else {
        omega / -(-x).exp_m1()
    };
    2.0 * PI * bp.alpha * cutoff * bose
}

/// Lamb shift `S(ω)` with the default node count.
pub fn lamb_shift_s(omega: f64, bp: &BathParams) -> f64 {
    lamb_shift_with_nodes(omega, bp, LAMB_SHIFT_NODES)
}

/// Principal-value Lamb shift on `[−20ω_c, 20ω_c]`, excluding a symmetric
/// window of half-width `1e−6·ω_c` around the pole.
///
/// Each side of the pole is mapped through `x = ω ± e^u`, which turns the
/// `1/(ω − x)` kernel into a unit Jacobian; the remaining integrand is smooth
/// apart from the `|x|` kink at `x = 0`, where the `u`-range is split.
pub fn lamb_shift_with_nodes(omega: f64, bp: &BathParams, nodes: usize) -> f64 {
    if !bp.lamb_shift || bp.alpha == 0.0 {
        return 0.0;
    }
    let lo = -PV_DOMAIN * bp.omega_c;
    let hi = PV_DOMAIN * bp.omega_c;
    let window = PV_WINDOW * bp.omega_c;
    let per_side = (nodes / 2).max(8);
    let u_min = window.ln();

    // x = ω + e^u: ∫ γ(x)/(ω − x) dx = −∫ γ(ω + e^u) du.
    let right = if hi - omega > window {
        let kink = (-omega > window).then(|| (-omega).ln());
        -log_side_integral(u_min, (hi - omega).ln(), kink, per_side, |e| {
            rate_gamma(omega + e, bp)
        })
    } else {
        0.0
    };
    // x = ω − e^u: ∫ γ(x)/(ω − x) dx = +∫ γ(ω − e^u) du.
    let left = if omega - lo > window {
        let kink = (omega > window).then(|| omega.ln());
        log_side_integral(u_min, (omega - lo).ln(), kink, per_side, |e| {
            rate_gamma(omega - e, bp)
        })
    } else {
        0.0
    };
    (left + right) / (2.0 * PI)
}

/// `∫_{u0}^{u1} f(e^u) du` by composite Simpson, split at an interior kink.
fn log_side_integral(
    u0: f64,
    u1: f64,
    kink: Option<f64>,
    nodes: usize,
    f: impl Fn(f64) -> f64,
) -> f64 {
    let g = |u: f64| f(u.exp());
    match kink {
        Some(k) if k > u0 && k < u1 => {
            let frac = (k - u0) / (u1 - u0);
            let n_a = ((nodes as f64 * frac).round() as usize).max(4);
            let n_b = nodes.saturating_sub(n_a).max(4);
            simpson(&g, u0, k, n_a) + simpson(&g, k, u1, n_b)
        }
        _ => simpson(&g, u0, u1, nodes),
    }
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, nodes: usize) -> f64 {
    let mut n = nodes.max(3) - 1;
    if n % 2 == 1 {
        n += 1;
    }
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// One Bohr-frequency channel of the dissipator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindbladTerm {
    pub omega: f64,
    pub op: ComplexMatrix2,
    pub rate: f64,
    pub shift: f64,
}

/// Bohr-frequency components of σz in the instantaneous eigenbasis, ordered
/// `ω = −Δ, 0, +Δ`; they sum to σz.
pub fn jump_operators(es: &Eigensystem) -> [(f64, ComplexMatrix2); 3] {
    let sz = ComplexMatrix2::sigma_z();
    let mel = |a: [C64; 2], b: [C64; 2]| {
        let sb = sz.apply(b);
        a[0].conj() * sb[0] + a[1].conj() * sb[1]
    };
    let proj = |a: [C64; 2], b: [C64; 2]| ComplexMatrix2::outer(a, b);
    let (g, e) = (es.v0, es.v1);
    let delta = es.gap();
    let lower = proj(g, e).scale(mel(g, e));
    let raise = proj(e, g).scale(mel(e, g));
    let diag = proj(g, g).scale(mel(g, g)) + proj(e, e).scale(mel(e, e));
    [(-delta, raise), (0.0, diag), (delta, lower)]
}

pub fn lindblad_terms(drive: impl Into<Drive>, t: f64, bp: &BathParams) -> Result<[LindbladTerm; 3]> {
    let drive = drive.into();
    let es = drive.eigensystem(t)?;
    let delta = es.gap();
    let shifts = [
        lamb_shift_s(-delta, bp),
        lamb_shift_s(0.0, bp),
        lamb_shift_s(delta, bp),
    ];
    Ok(terms_with_shifts(&es, bp, shifts))
}

/// Terms with precomputed `S(−Δ), S(0), S(+Δ)`.
pub(crate) fn terms_with_shifts(es: &Eigensystem, bp: &BathParams, shifts: [f64; 3]) -> [LindbladTerm; 3] {
    let ops = jump_operators(es);
    let mut out = [LindbladTerm {
        omega: 0.0,
        op: ComplexMatrix2::zero(),
        rate: 0.0,
        shift: 0.0,
    }; 3];
    for (k, (omega, op)) in ops.into_iter().enumerate() {
        out[k] = LindbladTerm {
            omega,
            op,
            rate: rate_gamma(omega, bp),
            shift: shifts[k],
        };
    }
    out
}

/// `H_LS = Σ_ω S(ω) L_ω†L_ω`.
pub fn lamb_shift_hamiltonian(terms: &[LindbladTerm]) -> ComplexMatrix2 {
    terms.iter().fold(ComplexMatrix2::zero(), |acc, term| {
        acc + (term.op.dagger() * term.op).scale_re(term.shift)
    })
}

/// `−i[H, ρ] + Σ_ω γ(ω)(L ρ L† − ½{L†L, ρ})`.
pub fn lindblad_generator(h: &ComplexMatrix2, terms: &[LindbladTerm], rho: &ComplexMatrix2) -> ComplexMatrix2 {
    let mut out = commutator(h, rho).scale(C64::new(0.0, -1.0));
    for term in terms {
        if term.rate == 0.0 {
            continue;
        }
        let l = term.op;
        let ld = l.dagger();
        let jump = l * *rho * ld - anticommutator(&(ld * l), rho).scale_re(0.5);
        out += jump.scale_re(term.rate);
    }
    out
}

/// Right-hand side of the master equation at time `t`.
pub fn master_rhs(
    rho: &DensityMatrix,
    drive: impl Into<Drive>,
    t: f64,
    bp: &BathParams,
) -> Result<ComplexMatrix2> {
    let drive = drive.into();
    let h = drive.hamiltonian(t)?;
    if !bp.is_coupled() {
        return Ok(lindblad_generator(&h, &[], rho.matrix()));
    }
    let terms = lindblad_terms(drive, t, bp)?;
    let h_eff = h + lamb_shift_hamiltonian(&terms);
    Ok(lindblad_generator(&h_eff, &terms, rho.matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AnnealSchedule;
    use proptest::prelude::*;

    fn bath(alpha: f64, beta: f64) -> BathParams {
        BathParams::new(alpha, beta).unwrap()
    }

    #[test]
    fn rate_at_zero_frequency() {
        let g = rate_gamma(0.0, &bath(1e-3, 10.0));
        assert!((g - 2.0 * PI * 1e-4).abs() < 1e-18);
        // continuity of the removable singularity
        let near = rate_gamma(1e-9, &bath(1e-3, 10.0));
        assert!((near - g).abs() < 1e-11);
    }

    #[test]
    fn rate_vanishes_when_decoupled() {
        for w in [-3.0, 0.0, 0.7, 10.0] {
            assert_eq!(rate_gamma(w, &bath(0.0, 10.0)), 0.0);
        }
    }

    #[test]
    fn rate_detailed_balance_example() {
        let bp = bath(1e-3, 10.0);
        let w = std::f64::consts::FRAC_1_SQRT_2;
        let ratio = rate_gamma(-w, &bp) / rate_gamma(w, &bp);
        assert!((ratio / (-10.0 * w).exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bath_validation() {
        assert!(BathParams::new(-1e-3, 10.0).is_err());
        assert!(BathParams::new(1e-3, 0.0).is_err());
        let mut bp = BathParams::default();
        bp.omega_c = -1.0;
        assert!(bp.validate().is_err());
    }

    #[test]
    fn lamb_shift_switches() {
        assert_eq!(lamb_shift_s(0.5, &bath(0.0, 10.0)), 0.0);
        assert_eq!(lamb_shift_s(0.5, &bath(1e-2, 10.0).with_lamb_shift(false)), 0.0);
    }

    #[test]
    fn lamb_shift_refinement() {
        for beta in [1.0, 10.0, 100.0] {
            let bp = bath(1e-2, beta);
            for w in [-1.0, -0.7, 0.0, 0.3, 0.70710678, 1.0, 3.0] {
                let s1 = lamb_shift_with_nodes(w, &bp, LAMB_SHIFT_NODES);
                let s2 = lamb_shift_with_nodes(w, &bp, 2 * LAMB_SHIFT_NODES);
                assert!((s1 - s2).abs() < 1e-6 * s1.abs().max(1.0), "w={w} beta={beta}: {s1} vs {s2}");
            }
        }
    }

    #[test]
    fn lamb_shift_zero_frequency_closed_form() {
        // S(0) = −(1/2π)∫ γ(x)/x dx = −α·ω_c on the full line, any β.
        let bp = bath(1e-2, 10.0);
        let s0 = lamb_shift_s(0.0, &bp);
        assert!((s0 + 1e-2 * 10.0).abs() < 1e-6, "{s0}");
    }

    #[test]
    fn jump_operators_at_endpoints() {
        let sched = AnnealSchedule::default();
        let bp = bath(1e-3, 10.0);
        let end = lindblad_terms(sched, 14.0, &bp).unwrap();
        assert!(end[0].op.max_abs_diff(&ComplexMatrix2::zero()) < 1e-15);
        assert!(end[2].op.max_abs_diff(&ComplexMatrix2::zero()) < 1e-15);
        assert!(end[1].op.max_abs_diff(&ComplexMatrix2::sigma_z()) < 1e-15);

        let start = lindblad_terms(sched, 0.0, &bp).unwrap();
        assert!(start[1].op.max_abs_diff(&ComplexMatrix2::zero()) < 1e-15);
        let es = sched.eigensystem(0.0).unwrap();
        let sz = ComplexMatrix2::sigma_z();
        let sv = sz.apply(es.v1);
        let m = es.v0[0].conj() * sv[0] + es.v0[1].conj() * sv[1];
        assert!((m.norm() - 1.0).abs() < 1e-15);
        assert!((start[2].omega - 1.0).abs() < 1e-15 && (start[0].omega + 1.0).abs() < 1e-15);
    }

    #[test]
    fn decoupled_rhs_is_unitary() {
        let sched = AnnealSchedule::default();
        let rho = sched.initial_state();
        for t in [0.0, 2.5, 7.0, 14.0] {
            let rhs = master_rhs(&rho, sched, t, &bath(0.0, 10.0)).unwrap();
            let h = sched.hamiltonian(t).unwrap();
            let expect = commutator(&h, rho.matrix()).scale(C64::new(0.0, -1.0));
            assert_eq!(rhs, expect);
        }
    }

    /// Gibbs state from `e^{−βH} = cosh(βr)·I − sinh(βr)·n̂·σ`.
    fn gibbs(h: &ComplexMatrix2, beta: f64) -> DensityMatrix {
        let (_, cx, cy, cz) = h.pauli_coefficients();
        let r = (cx * cx + cy * cy + cz * cz).sqrt();
        let th = (beta * r).tanh();
        DensityMatrix::new(ComplexMatrix2::from_pauli(
            0.5,
            -0.5 * th * cx / r,
            -0.5 * th * cy / r,
            -0.5 * th * cz / r,
        ))
        .unwrap()
    }

    #[test]
    fn gibbs_state_is_stationary() {
        let sched = AnnealSchedule::default();
        for &(alpha, beta) in &[(1e-3, 10.0), (1e-2, 1.0), (5e-2, 100.0)] {
            let bp = bath(alpha, beta).with_lamb_shift(false);
            for s in [0.0, 0.2, 0.5, 0.77, 1.0] {
                let drive = Drive::frozen(sched, s);
                let rho = gibbs(&drive.hamiltonian(3.0).unwrap(), beta);
                let rhs = master_rhs(&rho, drive, 3.0, &bp).unwrap();
                assert!(rhs.max_abs_diff(&ComplexMatrix2::zero()) < 1e-10, "s={s}: {rhs:?}");
            }
        }
    }

    fn state() -> impl Strategy<Value = DensityMatrix> {
        (0.0..1.0f64, 0.0..std::f64::consts::TAU, 0.0..PI).prop_map(|(r, phi, th)| {
            DensityMatrix::new(ComplexMatrix2::from_pauli(
                0.5,
                0.5 * r * th.sin() * phi.cos(),
                0.5 * r * th.sin() * phi.sin(),
                0.5 * r * th.cos(),
            ))
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn kms_detailed_balance(w in 0.01..10.0f64, bi in 0usize..3) {
            let beta = [1.0, 10.0, 100.0][bi];
            let bp = bath(1e-2, beta);
            let (gp, gm) = (rate_gamma(w, &bp), rate_gamma(-w, &bp));
            prop_assert!(gp >= 0.0 && gm >= 0.0);
            let kms = (-beta * w).exp() * gp;
            prop_assert!((gm - kms).abs() <= 1e-12 * kms + f64::MIN_POSITIVE);
        }

        #[test]
        fn jump_operators_sum_to_sigma_z(t in 0.0..14.0f64) {
            let es = AnnealSchedule::default().eigensystem(t).unwrap();
            let sum = jump_operators(&es).iter().fold(ComplexMatrix2::zero(), |a, (_, l)| a + *l);
            prop_assert!(sum.max_abs_diff(&ComplexMatrix2::sigma_z()) < 1e-12);
        }

        #[test]
        fn rhs_is_hermitian_and_traceless(rho in state(), t in 0.0..14.0f64, ai in 0usize..3) {
            let alpha = [0.0, 1e-3, 1e-2][ai];
            let bp = bath(alpha, 10.0).with_lamb_shift(false);
            let rhs = master_rhs(&rho, AnnealSchedule::default(), t, &bp).unwrap();
            prop_assert!(rhs.trace().norm() < 1e-12);
            prop_assert!(rhs.is_hermitian(1e-12));
        }
    }
}
