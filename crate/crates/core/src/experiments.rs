//! Correlators, K₃ functions and sweeps.
//!
//! All quantum runs start from the ground state of `H(0)`. A Leggett-Garg
//! point at `τ` uses measurement times `t1 = 0`, `t2 = τ`, `t3 = 2τ`, each
//! correlator `C_ij` coming from its own family of two-measurement runs.
//!
//! The deterministic part of every trajectory (evolution between
//! measurements) is a linear map, so it is integrated once per segment as a
//! [`Propagator`] and each trajectory only samples readouts and applies maps.

use serde::{Deserialize, Serialize};

use crate::algebra::{DensityMatrix, C64};
use crate::bath::BathParams;
use crate::classical::{classical_lgi_sweep, LangevinParams};
use crate::ensemble::{reduce, trajectory_rng, Moments};
use crate::error::{Error, Result};
use crate::integrate::{IntegratorConfig, MasterEquation, Propagator};
use crate::measure::{projective_branches, sample_readout, weak_update, MeasurementParams};
use crate::model::{AnnealSchedule, Drive};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Weak,
    Projective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dynamics {
    Quantum,
    Classical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub sched: AnnealSchedule,
    pub bath: BathParams,
    pub measurement: MeasurementParams,
    pub integrator: IntegratorConfig,
    pub n_traj: usize,
    pub master_seed: u64,
    pub tau_grid: Vec<f64>,
    pub mode: Mode,
    pub dynamics: Dynamics,
    /// Hold the Hamiltonian at this anneal fraction instead of sweeping.
    pub frozen_s: Option<f64>,
    /// Classical damping; `π·α` when unset.
    pub eta: Option<f64>,
}

pub const DEFAULT_MASTER_SEED: u64 = 20_240_601;

impl Default for ExperimentConfig {
    fn default() -> Self {
        let sched = AnnealSchedule::default();
        Self {
            tau_grid: default_tau_grid(sched.t_f, 15),
            sched,
            bath: BathParams::default(),
            measurement: MeasurementParams::default(),
            integrator: IntegratorConfig::default(),
            n_traj: 100_000,
            master_seed: DEFAULT_MASTER_SEED,
            mode: Mode::Weak,
            dynamics: Dynamics::Quantum,
            frozen_s: None,
            eta: None,
        }
    }
}

/// `n` equally spaced values covering `[0, t_f/2]`.
pub fn default_tau_grid(t_f: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|k| 0.5 * t_f * k as f64 / (n - 1) as f64).collect(),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.sched.validate()?;
        self.bath.validate()?;
        self.measurement.validate()?;
        self.integrator.validate(self.sched.t_f)?;
        if self.n_traj == 0 {
            return Err(Error::InvalidParameter {
                name: "n_traj",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        for &tau in &self.tau_grid {
            if !(tau >= 0.0 && tau <= 0.5 * self.sched.t_f + 1e-9) {
                return Err(Error::InvalidParameter {
                    name: "tau_grid",
                    value: tau,
                    reason: "every tau must lie in [0, t_f/2]",
                });
            }
        }
        if let Some(s) = self.frozen_s {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::InvalidParameter {
                    name: "frozen_s",
                    value: s,
                    reason: "must lie in [0, 1]",
                });
            }
        }
        if let Some(eta) = self.eta {
            if !(eta >= 0.0 && eta.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "eta",
                    value: eta,
                    reason: "must be non-negative and finite",
                });
            }
        }
        Ok(())
    }

    pub fn drive(&self) -> Drive {
        match self.frozen_s {
            Some(s) => Drive::frozen(self.sched, s),
            None => Drive::sweep(self.sched),
        }
    }

    /// Langevin parameters sharing this configuration's bath, step and seed.
    pub fn langevin(&self) -> LangevinParams {
        let mut lp = LangevinParams::from_alpha(self.bath.alpha, self.bath.beta);
        if let Some(eta) = self.eta {
            lp.eta = eta;
        }
        lp.dt = self.integrator.dt;
        lp.n_traj = self.n_traj;
        lp.master_seed = self.master_seed;
        lp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelatorEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub t_i: f64,
    pub t_j: f64,
}

impl CorrelatorEstimate {
    pub fn from_moments(m: &Moments, t_i: f64, t_j: f64) -> Self {
        Self {
            mean: m.mean,
            stderr: m.stderr(),
            n: m.n,
            t_i,
            t_j,
        }
    }

    fn exact(mean: f64, t_i: f64, t_j: f64) -> Self {
        Self {
            mean,
            stderr: 0.0,
            n: 1,
            t_i,
            t_j,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum K3Variant {
    A,
    B,
    C,
}

impl K3Variant {
    pub const ALL: [K3Variant; 3] = [K3Variant::A, K3Variant::B, K3Variant::C];

    pub fn label(&self) -> &'static str {
        match self {
            K3Variant::A => "a",
            K3Variant::B => "b",
            K3Variant::C => "c",
        }
    }

    fn signs(&self) -> [f64; 3] {
        match self {
            K3Variant::A => [1.0, 1.0, -1.0],
            K3Variant::B => [-1.0, -1.0, -1.0],
            K3Variant::C => [-1.0, 1.0, 1.0],
        }
    }
}

impl std::str::FromStr for K3Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(K3Variant::A),
            "b" => Ok(K3Variant::B),
            "c" => Ok(K3Variant::C),
            other => Err(Error::InvalidState(format!("unknown K3 variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct K3Result {
    pub variant: K3Variant,
    pub tau: f64,
    pub value: f64,
    pub stderr: f64,
}

pub fn k3(c12: f64, c23: f64, c13: f64, variant: K3Variant) -> f64 {
    let [a, b, c] = variant.signs();
    a * c12 + b * c23 + c * c13
}

fn k3_stderr(s12: f64, s23: f64, s13: f64) -> f64 {
    (s12 * s12 + s23 * s23 + s13 * s13).sqrt()
}

// Experiment ids: kind in the top byte, family in the next nibble, then the
// two step indices. Distinct families and time pairs never share a stream.
const KIND_WEAK: u64 = 0x57;
const KIND_ANNEAL: u64 = 0x41;

fn experiment_id(kind: u64, family: u64, a: usize, b: usize) -> u64 {
    (kind << 56) | ((family & 0xf) << 52) | (((a as u64) & 0x3ff_ffff) << 26) | ((b as u64) & 0x3ff_ffff)
}

fn sigma_z(rho: &DensityMatrix) -> f64 {
    rho.p_up() - rho.p_down()
}

/// Final state, residual energy and fidelity averaged over measured runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredAnneal {
    pub rho: DensityMatrix,
    /// Standard errors of `ρ↑↑`, `Re ρ↑↓`, `Im ρ↑↓`.
    pub state_stderr: [f64; 3],
    pub res_energy: f64,
    pub res_energy_stderr: f64,
    pub fidelity: f64,
    pub fidelity_stderr: f64,
    pub n: u64,
}

/// A master equation bound to one configuration, reused across a sweep.
pub struct QuantumEngine {
    ec: ExperimentConfig,
    me: MasterEquation,
    rho0: DensityMatrix,
}

impl QuantumEngine {
    pub fn new(ec: &ExperimentConfig) -> Result<Self> {
        ec.validate()?;
        let me = MasterEquation::new(ec.drive(), &ec.bath, &ec.integrator)?;
        Ok(Self {
            rho0: ec.sched.initial_state(),
            ec: ec.clone(),
            me,
        })
    }

    pub fn master_equation(&self) -> &MasterEquation {
        &self.me
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.ec
    }

    pub fn initial_state(&self) -> DensityMatrix {
        self.rho0
    }

    fn step(&self, t: f64) -> Result<usize> {
        self.ec.sched.check_time(t)?;
        Ok(self.me.grid().snap(t))
    }

    fn time(&self, k: usize) -> f64 {
        self.me.grid().time(k)
    }

    /// Unmeasured state at `t`.
    pub fn state_at(&self, t: f64) -> Result<DensityMatrix> {
        self.me.evolve(&self.rho0, 0.0, t)
    }

    fn ordered(&self, t_i: f64, t_j: f64) -> Result<(usize, usize)> {
        let (a, b) = (self.step(t_i)?, self.step(t_j)?);
        Ok((a.min(b), a.max(b)))
    }

    /// Branch-enumerated `Σ_a a·p_a·⟨σz⟩_a(t_j)`.
    pub fn correlator_projective(&self, t_i: f64, t_j: f64) -> Result<CorrelatorEstimate> {
        let (ki, kj) = self.ordered(t_i, t_j)?;
        self.projective_steps(ki, kj)
    }

    fn projective_steps(&self, ki: usize, kj: usize) -> Result<CorrelatorEstimate> {
        let (ti, tj) = (self.time(ki), self.time(kj));
        let rho_i = self.state_at(ti)?;
        let phi = self.me.propagator(ti, tj)?;
        let mut c = 0.0;
        for b in projective_branches(&rho_i) {
            c += f64::from(b.outcome) * b.probability * sigma_z(&phi.apply(&b.state)?);
        }
        Ok(CorrelatorEstimate::exact(c, ti, tj))
    }

    /// Monte Carlo mean of `r_i·r_j` over `n_traj` two-measurement runs.
    pub fn correlator_weak(&self, t_i: f64, t_j: f64) -> Result<CorrelatorEstimate> {
        let (ki, kj) = self.ordered(t_i, t_j)?;
        self.weak_steps(ki, kj, 0)
    }

    fn weak_steps(&self, ki: usize, kj: usize, family: u64) -> Result<CorrelatorEstimate> {
        let (ti, tj) = (self.time(ki), self.time(kj));
        let rho_i = self.state_at(ti)?;
        let phi = self.me.propagator(ti, tj)?;
        let mp = self.ec.measurement;
        let id = experiment_id(KIND_WEAK, family, ki, kj);
        let seed = self.ec.master_seed;
        let m = reduce(self.ec.n_traj, 1, |idx, out| {
            let mut rng = trajectory_rng(seed, id, idx);
            let r1 = sample_readout(&rho_i, &mp, ti, &mut rng);
            let after = phi.apply(&weak_update(&rho_i, &r1, &mp)?)?;
            let r2 = sample_readout(&after, &mp, tj, &mut rng);
            out[0] = r1.r * r2.r;
            Ok(())
        })?;
        Ok(CorrelatorEstimate::from_moments(&m[0], ti, tj))
    }

    fn correlator_steps(&self, ki: usize, kj: usize, family: u64) -> Result<CorrelatorEstimate> {
        match self.ec.mode {
            Mode::Weak => self.weak_steps(ki, kj, family),
            Mode::Projective => self.projective_steps(ki, kj),
        }
    }

    /// K₃ variants at every τ of the configured grid, in grid order.
    pub fn lgi_sweep(&self) -> Result<Vec<K3Result>> {
        let n = self.me.grid().n_steps;
        let mut out = Vec::with_capacity(3 * self.ec.tau_grid.len());
        for &tau in &self.ec.tau_grid {
            let k = self.step(tau)?;
            let k3_ = (2 * k).min(n);
            let c12 = self.correlator_steps(0, k, 1)?;
            let c23 = self.correlator_steps(k, k3_, 2)?;
            let c13 = self.correlator_steps(0, k3_, 3)?;
            let se = k3_stderr(c12.stderr, c23.stderr, c13.stderr);
            for variant in K3Variant::ALL {
                out.push(K3Result {
                    variant,
                    tau: self.time(k),
                    value: k3(c12.mean, c23.mean, c13.mean, variant),
                    stderr: se,
                });
            }
        }
        Ok(out)
    }

    /// Runs measured at `times` (sorted ascending, snapped to the grid) and
    /// evolved to `t_f`. Weak mode samples `n_traj` runs with readout
    /// variance `mp.d`; projective mode enumerates all branches.
    pub fn measured_anneal(&self, times: &[f64], mp: &MeasurementParams, mode: Mode) -> Result<MeasuredAnneal> {
        mp.validate()?;
        let mut steps = Vec::with_capacity(times.len());
        for &t in times {
            steps.push(self.step(t)?);
        }
        if steps.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter {
                name: "times",
                value: times.iter().cloned().fold(f64::NAN, f64::max),
                reason: "measurement times must be ascending",
            });
        }
        let n_steps = self.me.grid().n_steps;
        let first = self.state_at(self.time(steps.first().copied().unwrap_or(n_steps)))?;
        let mut segments: Vec<Propagator> = Vec::with_capacity(steps.len());
        for (i, &k) in steps.iter().enumerate() {
            let next = steps.get(i + 1).copied().unwrap_or(n_steps);
            segments.push(self.me.propagator(self.time(k), self.time(next))?);
        }
        match mode {
            Mode::Projective => self.enumerate(first, &segments),
            Mode::Weak => self.sample(first, &steps, &segments, mp),
        }
    }

    fn summary(&self, rho: &DensityMatrix) -> [f64; 5] {
        let f = self.ec.sched.fidelity(rho, self.ec.sched.t_f).unwrap_or(f64::NAN);
        [
            rho.p_up(),
            rho.coherence().re,
            rho.coherence().im,
            self.ec.sched.residual_energy(rho),
            f,
        ]
    }

    fn enumerate(&self, first: DensityMatrix, segments: &[Propagator]) -> Result<MeasuredAnneal> {
        let mut branches = vec![(1.0, first)];
        for phi in segments {
            let mut next = Vec::with_capacity(2 * branches.len());
            for (p, rho) in &branches {
                for b in projective_branches(rho) {
                    next.push((p * b.probability, phi.apply(&b.state)?));
                }
            }
            branches = next;
        }
        let mut acc = [0.0; 5];
        for (p, rho) in &branches {
            for (a, x) in acc.iter_mut().zip(self.summary(rho)) {
                *a += p * x;
            }
        }
        let rho = DensityMatrix::from_parts(acc[0], 1.0 - acc[0], C64::new(acc[1], acc[2]))?;
        Ok(MeasuredAnneal {
            rho,
            state_stderr: [0.0; 3],
            res_energy: acc[3],
            res_energy_stderr: 0.0,
            fidelity: acc[4],
            fidelity_stderr: 0.0,
            n: 1,
        })
    }

    fn sample(
        &self,
        first: DensityMatrix,
        steps: &[usize],
        segments: &[Propagator],
        mp: &MeasurementParams,
    ) -> Result<MeasuredAnneal> {
        let a = steps.first().copied().unwrap_or(0);
        let b = steps.last().copied().unwrap_or(0);
        // Shared across D: runs at different strengths use common random numbers.
        let id = experiment_id(KIND_ANNEAL, steps.len() as u64, a, b);
        let seed = self.ec.master_seed;
        let m = reduce(self.ec.n_traj, 5, |idx, out| {
            let mut rng = trajectory_rng(seed, id, idx);
            let mut rho = first;
            for (phi, &k) in segments.iter().zip(steps) {
                let r = sample_readout(&rho, mp, self.time(k), &mut rng);
                rho = phi.apply(&weak_update(&rho, &r, mp)?)?;
            }
            out.copy_from_slice(&self.summary(&rho));
            Ok(())
        })?;
        let rho = DensityMatrix::from_parts(m[0].mean, 1.0 - m[0].mean, C64::new(m[1].mean, m[2].mean))?;
        Ok(MeasuredAnneal {
            rho,
            state_stderr: [m[0].stderr(), m[1].stderr(), m[2].stderr()],
            res_energy: m[3].mean,
            res_energy_stderr: m[3].stderr(),
            fidelity: m[4].mean,
            fidelity_stderr: m[4].stderr(),
            n: m[0].n,
        })
    }
}

pub fn correlator_projective(t_i: f64, t_j: f64, ec: &ExperimentConfig) -> Result<CorrelatorEstimate> {
    QuantumEngine::new(ec)?.correlator_projective(t_i, t_j)
}

pub fn correlator_weak(t_i: f64, t_j: f64, ec: &ExperimentConfig) -> Result<CorrelatorEstimate> {
    QuantumEngine::new(ec)?.correlator_weak(t_i, t_j)
}

/// K₃ sweep over `ec.tau_grid`, quantum or classical per `ec.dynamics`.
pub fn lgi_sweep(ec: &ExperimentConfig) -> Result<Vec<K3Result>> {
    match ec.dynamics {
        Dynamics::Quantum => QuantumEngine::new(ec)?.lgi_sweep(),
        Dynamics::Classical => {
            ec.validate()?;
            classical_lgi_sweep(&ec.langevin(), ec.drive(), &ec.tau_grid)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResEnergyPoint {
    pub d: f64,
    pub tau: f64,
    pub run: MeasuredAnneal,
}

/// Weak measurements at `τ` and `2τ` for every `(D, τ)`, D-major order.
pub fn resenergy_sweep(ec: &ExperimentConfig, d_grid: &[f64]) -> Result<Vec<ResEnergyPoint>> {
    let engine = QuantumEngine::new(ec)?;
    let n = engine.me.grid().n_steps;
    let mut out = Vec::with_capacity(d_grid.len() * ec.tau_grid.len());
    for &d in d_grid {
        let mp = MeasurementParams::new(d)?;
        for &tau in &ec.tau_grid {
            let k = engine.step(tau)?;
            let times = [engine.time(k), engine.time((2 * k).min(n))];
            out.push(ResEnergyPoint {
                d,
                tau: times[0],
                run: engine.measured_anneal(&times, &mp, Mode::Weak)?,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleAnneal {
    pub rho: DensityMatrix,
    pub res_energy: f64,
    pub fidelity: f64,
    /// `(t, ⟨σz⟩)` samples.
    pub sigma_z: Vec<(f64, f64)>,
}

/// Unmeasured evolution over `[0, t_f]`, with `⟨σz⟩` sampled every
/// `sample_every` steps.
pub fn run_single_anneal(ec: &ExperimentConfig, sample_every: usize) -> Result<SingleAnneal> {
    ec.validate()?;
    let me = MasterEquation::new(ec.drive(), &ec.bath, &ec.integrator)?;
    let t_f = ec.sched.t_f;
    let (rho, sigma_z) = me.evolve_sampled(&ec.sched.initial_state(), 0.0, t_f, sample_every, |t, r| (t, sigma_z(r)))?;
    Ok(SingleAnneal {
        res_energy: ec.sched.residual_energy(&rho),
        fidelity: ec.sched.fidelity(&rho, t_f)?,
        rho,
        sigma_z,
    })
}
