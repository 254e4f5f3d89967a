//! σz readout kernels.
//!
//! A weak readout `r` is drawn from `ρ↓↓·N(−1, D) + ρ↑↑·N(+1, D)`; the
//! conditional state follows the Gaussian-likelihood Bayes rule, which for
//! peaks at ∓1 reduces to `ρ↓↓ ∝ ρ↓↓e^{g}`, `ρ↑↑ ∝ ρ↑↑e^{−g}`, coherence
//! unchanged before normalization, with `g = −r/D`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algebra::{ComplexMatrix2, DensityMatrix};
use crate::error::{Error, Result};

/// Smallest normalization accepted by the weak update.
const MIN_NORM: f64 = 1e-300;
/// Enumerated projective branches below this probability are dropped.
pub const BRANCH_CUTOFF: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementParams {
    /// Variance of each Gaussian readout peak.
    pub d: f64,
}

impl Default for MeasurementParams {
    fn default() -> Self {
        Self { d: 20.0 }
    }
}

impl MeasurementParams {
    /// Pointer mean for `|↓⟩`.
    pub const PEAK_DOWN: f64 = -1.0;
    /// Pointer mean for `|↑⟩`.
    pub const PEAK_UP: f64 = 1.0;

    pub fn new(d: f64) -> Result<Self> {
        let mp = Self { d };
        mp.validate()?;
        Ok(mp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "d",
                value: self.d,
                reason: "must be positive and finite",
            });
        }
        Ok(())
    }

    /// Coherence damping of a non-selective weak measurement, `exp(−1/(2D))`.
    pub fn dephasing_factor(&self) -> f64 {
        (-0.5 / self.d).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Readout {
    pub r: f64,
    pub t: f64,
}

pub fn sample_readout<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    mp: &MeasurementParams,
    t: f64,
    rng: &mut R,
) -> Readout {
    let u: f64 = rng.random();
    let peak = if u < rho.p_down() {
        MeasurementParams::PEAK_DOWN
    } else {
        MeasurementParams::PEAK_UP
    };
    let z: f64 = rng.sample(StandardNormal);
    Readout {
        r: peak + mp.d.sqrt() * z,
        t,
    }
}

/// Bayes update with log-likelihood ratio `g = −r/D`.
pub fn weak_update(rho: &DensityMatrix, read: &Readout, mp: &MeasurementParams) -> Result<DensityMatrix> {
    update_with_strength(rho, -read.r / mp.d)
}

/// The weak update written directly in terms of `g`.
pub fn update_with_strength(rho: &DensityMatrix, g: f64) -> Result<DensityMatrix> {
    // Factor out e^{|g|} so large readouts cannot overflow.
    let a = g.abs();
    let w_down = rho.p_down() * (g - a).exp();
    let w_up = rho.p_up() * (-g - a).exp();
    let coh = (-a).exp();
    let norm = w_down + w_up;
    if !(norm > MIN_NORM) {
        return Err(Error::DegenerateOutcome { norm });
    }
    let c = rho.coherence() * (coh / norm);
    Ok(DensityMatrix::hermitian_part(ComplexMatrix2::new(
        (w_up / norm).into(),
        c,
        c.conj(),
        (w_down / norm).into(),
    )))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    /// σz eigenvalue, ±1.
    pub outcome: i8,
    pub probability: f64,
    pub state: DensityMatrix,
}

/// Both projective σz branches with their probabilities.
pub fn projective_branches(rho: &DensityMatrix) -> Vec<Branch> {
    [
        (1i8, rho.p_up(), DensityMatrix::up()),
        (-1i8, rho.p_down(), DensityMatrix::down()),
    ]
    .into_iter()
    .filter(|&(_, p, _)| p >= BRANCH_CUTOFF)
    .map(|(outcome, probability, state)| Branch {
        outcome,
        probability,
        state,
    })
    .collect()
}

/// One sampled projective σz outcome.
pub fn projective_sample<R: Rng + ?Sized>(rho: &DensityMatrix, rng: &mut R) -> Branch {
    let u: f64 = rng.random();
    if u < rho.p_down() {
        Branch {
            outcome: -1,
            probability: rho.p_down(),
            state: DensityMatrix::down(),
        }
    } else {
        Branch {
            outcome: 1,
            probability: rho.p_up(),
            state: DensityMatrix::up(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::C64;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, Normal};

    const N: usize = 1_000_000;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn sample_mean(rho: &DensityMatrix, mp: &MeasurementParams, seed: u64) -> f64 {
        let mut g = rng(seed);
        (0..N).map(|_| sample_readout(rho, mp, 0.0, &mut g).r).sum::<f64>() / N as f64
    }

    #[test]
    fn readout_means() {
        let mp = MeasurementParams::default();
        let tol = 4.0 * (mp.d / N as f64).sqrt();
        assert!((sample_mean(&DensityMatrix::down(), &mp, 1) + 1.0).abs() < tol);
        assert!(sample_mean(&DensityMatrix::maximally_mixed(), &mp, 2).abs() < tol);
    }

    #[test]
    fn readout_distribution_matches_mixture() {
        let mp = MeasurementParams::default();
        let rho = DensityMatrix::from_parts(0.2, 0.8, C64::new(0.1, 0.0)).unwrap();
        let mut g = rng(3);
        let mut xs: Vec<f64> = (0..N).map(|_| sample_readout(&rho, &mp, 0.0, &mut g).r).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let sd = mp.d.sqrt();
        let down = Normal::new(-1.0, sd).unwrap();
        let up = Normal::new(1.0, sd).unwrap();
        let cdf = |x: f64| 0.8 * down.cdf(x) + 0.2 * up.cdf(x);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = cdf(x);
                (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.002, "KS statistic {ks}");
    }

    #[test]
    fn eigenstate_is_fixed_point() {
        let mp = MeasurementParams::default();
        for r in [-50.0, -1.0, 0.0, 3.3, 40.0] {
            let out = weak_update(&DensityMatrix::up(), &Readout { r, t: 0.0 }, &mp).unwrap();
            assert_eq!(out, DensityMatrix::up());
        }
    }

    #[test]
    fn zero_strength_is_identity() {
        let rho = DensityMatrix::from_parts(0.3, 0.7, C64::new(0.1, 0.2)).unwrap();
        let mp = MeasurementParams::new(1e300).unwrap();
        let out = weak_update(&rho, &Readout { r: 5.0, t: 0.0 }, &mp).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn update_arithmetic_example() {
        let out = update_with_strength(&DensityMatrix::maximally_mixed(), 2f64.ln()).unwrap();
        assert!((out.p_down() - 0.8).abs() < 1e-15);
        assert!((out.p_up() - 0.2).abs() < 1e-15);
        assert_eq!(out.coherence(), C64::new(0.0, 0.0));
    }

    #[test]
    fn degenerate_outcome() {
        // only the up state carries weight and the readout drowns it
        let err = update_with_strength(&DensityMatrix::up(), 800.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateOutcome { .. }));
    }

    #[test]
    fn projective_examples() {
        let b = projective_branches(&DensityMatrix::down());
        assert_eq!(b.len(), 1);
        assert_eq!((b[0].outcome, b[0].probability), (-1, 1.0));

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let gs0 = DensityMatrix::pure([C64::new(s, 0.0), C64::new(-s, 0.0)]).unwrap();
        let b = projective_branches(&gs0);
        assert_eq!(b.len(), 2);
        assert!((b[0].probability - 0.5).abs() < 1e-15 && b[0].outcome == 1);
        assert!((b[1].probability - 0.5).abs() < 1e-15 && b[1].outcome == -1);

        let mut g = rng(9);
        let hits = (0..10_000).filter(|_| projective_sample(&gs0, &mut g).outcome == 1).count();
        assert!((hits as f64 / 1e4 - 0.5).abs() < 0.02);
    }

    #[test]
    fn branches_sum_to_dephased_state() {
        let rho = DensityMatrix::from_parts(0.35, 0.65, C64::new(0.2, -0.3)).unwrap();
        let sum = projective_branches(&rho)
            .iter()
            .fold(ComplexMatrix2::zero(), |acc, b| acc + b.state.matrix().scale_re(b.probability));
        let dephased = ComplexMatrix2::real_diag(0.35, 0.65);
        assert!(sum.max_abs_diff(&dephased) < 1e-15);
    }

    #[test]
    fn non_selective_average() {
        let mp = MeasurementParams::default();
        let rho = DensityMatrix::from_parts(0.3, 0.7, C64::new(0.25, 0.35)).unwrap();
        let mut g = rng(11);
        let (mut s_up, mut s_up2) = (0.0, 0.0);
        let (mut s_c, mut s_c2) = (C64::new(0.0, 0.0), 0.0);
        for _ in 0..N {
            let r = sample_readout(&rho, &mp, 0.0, &mut g);
            let post = weak_update(&rho, &r, &mp).unwrap();
            s_up += post.p_up();
            s_up2 += post.p_up() * post.p_up();
            s_c += post.coherence();
            s_c2 += post.coherence().norm_sqr();
        }
        let n = N as f64;
        let up = s_up / n;
        let se_up = ((s_up2 / n - up * up) / n).sqrt();
        assert!((up - 0.3).abs() < 4.0 * se_up, "{up} ± {se_up}");
        let c = s_c / n;
        let se_c = ((s_c2 / n - c.norm_sqr()) / n).sqrt();
        let expect = rho.coherence() * mp.dephasing_factor();
        assert!((mp.dephasing_factor() - 0.97531).abs() < 5e-6);
        assert!((c - expect).norm() < 4.0 * se_c, "{c} vs {expect} ± {se_c}");
    }

    fn state() -> impl Strategy<Value = DensityMatrix> {
        (0.0..1.0f64, 0.0..std::f64::consts::TAU, 0.0..std::f64::consts::PI).prop_map(|(r, phi, th)| {
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
        fn updates_compose(rho in state(), r1 in -30.0..30.0f64, r2 in -30.0..30.0f64, d in 0.5..50.0f64) {
            let mp = MeasurementParams::new(d).unwrap();
            let two = weak_update(&weak_update(&rho, &Readout { r: r1, t: 0.0 }, &mp).unwrap(),
                                  &Readout { r: r2, t: 0.0 }, &mp).unwrap();
            let one = update_with_strength(&rho, -(r1 + r2) / d).unwrap();
            prop_assert!(two.matrix().max_abs_diff(one.matrix()) < 1e-13);
        }

        #[test]
        fn update_keeps_phase_and_validity(rho in state(), r in -30.0..30.0f64, d in 0.5..50.0f64) {
            let mp = MeasurementParams::new(d).unwrap();
            let out = weak_update(&rho, &Readout { r, t: 0.0 }, &mp).unwrap();
            prop_assert!(DensityMatrix::new(*out.matrix()).is_ok());
            if rho.coherence().norm() > 1e-6 {
                let dphi = (out.coherence() / rho.coherence()).arg();
                prop_assert!(dphi.abs() < 1e-12);
            }
            // purity is preserved for pure inputs
            if (rho.purity() - 1.0).abs() < 1e-12 {
                prop_assert!((out.purity() - 1.0).abs() < 1e-10);
            }
        }
    }
}
