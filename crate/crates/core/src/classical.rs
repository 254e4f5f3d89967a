//! Classical comparator: a unit spin under stochastic Landau-Lifshitz-Gilbert
//! dynamics in the annealing field.
//!
//! The energy is `E(m) = b·m` with `b = ((1−s)Γx/2, 0, sΓz/2)`. Each step
//! integrates `dm/dt = −m×h − η·m×(m×h)` with `h = −(b + ξ)`, Stratonovich
//! sense, by Heun's method with the noise held fixed across the step.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ensemble::{reduce, trajectory_rng, Moments};
use crate::error::{Error, Result};
use crate::experiments::{k3, CorrelatorEstimate, K3Result, K3Variant};
use crate::integrate::TimeGrid;
use crate::model::{AnnealSchedule, Drive};

pub type Vec3 = [f64; 3];

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalSpin {
    pub m: Vec3,
}

impl ClassicalSpin {
    /// Normalized copy of `m`.
    pub fn new(m: Vec3) -> Result<Self> {
        let n = norm(m);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidState(format!("spin vector {m:?} has no direction")));
        }
        Ok(Self {
            m: [m[0] / n, m[1] / n, m[2] / n],
        })
    }

    /// Minimum of the `s = 0` energy for positive `Γx`.
    pub fn initial() -> Self {
        Self { m: [-1.0, 0.0, 0.0] }
    }

    pub fn mz(&self) -> f64 {
        self.m[2]
    }

    pub fn energy(&self, b: Vec3) -> f64 {
        dot(self.m, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LangevinParams {
    pub eta: f64,
    pub beta: f64,
    pub dt: f64,
    pub n_traj: usize,
    pub master_seed: u64,
}

impl LangevinParams {
    /// Damping `η = π·α`.
    pub fn from_alpha(alpha: f64, beta: f64) -> Self {
        Self {
            eta: std::f64::consts::PI * alpha,
            beta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| Err(Error::InvalidParameter { name, value, reason });
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad("eta", self.eta, "must be non-negative and finite");
        }
        if !(self.beta > 0.0) {
            return bad("beta", self.beta, "must be positive");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", self.dt, "must be positive and finite");
        }
        if self.n_traj == 0 {
            return bad("n_traj", 0.0, "must be at least 1");
        }
        Ok(())
    }

    /// Per-component white-noise intensity `2η/(β(1+η²))`, which makes the
    /// Boltzmann distribution stationary for this form of the equation.
    pub fn noise_intensity(&self) -> f64 {
        2.0 * self.eta / (self.beta * (1.0 + self.eta * self.eta))
    }

    fn is_noiseless(&self) -> bool {
        !(self.noise_intensity() > 0.0)
    }

    /// Trajectories actually run; one when the noise vanishes.
    pub fn effective_n_traj(&self) -> usize {
        if self.is_noiseless() {
            1
        } else {
            self.n_traj
        }
    }
}

impl Default for LangevinParams {
    fn default() -> Self {
        Self {
            eta: 0.0,
            beta: 10.0,
            dt: 1e-3,
            n_traj: 100_000,
            master_seed: 0,
        }
    }
}

/// `b(t)`, the gradient of the classical energy.
pub fn effective_field(sched: &AnnealSchedule, t: f64) -> Result<Vec3> {
    sched.check_time(t)?;
    Ok(field(&Drive::sweep(*sched), t))
}

fn field(drive: &Drive, t: f64) -> Vec3 {
    let (bx, bz) = drive.field(t);
    [bx, 0.0, bz]
}

fn llg(m: Vec3, h: Vec3, eta: f64) -> Vec3 {
    let mxh = cross(m, h);
    let damp = cross(m, mxh);
    [
        -mxh[0] - eta * damp[0],
        -mxh[1] - eta * damp[1],
        -mxh[2] - eta * damp[2],
    ]
}

fn renormalized(m: Vec3) -> Vec3 {
    let n = norm(m);
    [m[0] / n, m[1] / n, m[2] / n]
}

fn heun(m: Vec3, b0: Vec3, b1: Vec3, xi: Vec3, eta: f64, h: f64) -> Vec3 {
    let h0 = [-(b0[0] + xi[0]), -(b0[1] + xi[1]), -(b0[2] + xi[2])];
    let h1 = [-(b1[0] + xi[0]), -(b1[1] + xi[1]), -(b1[2] + xi[2])];
    let f0 = llg(m, h0, eta);
    let pred = renormalized([m[0] + h * f0[0], m[1] + h * f0[1], m[2] + h * f0[2]]);
    let f1 = llg(pred, h1, eta);
    renormalized([
        m[0] + 0.5 * h * (f0[0] + f1[0]),
        m[1] + 0.5 * h * (f0[1] + f1[1]),
        m[2] + 0.5 * h * (f0[2] + f1[2]),
    ])
}

fn draw_noise<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> Vec3 {
    if sigma == 0.0 {
        return [0.0; 3];
    }
    let mut xi = [0.0; 3];
    for x in &mut xi {
        *x = sigma * rng.sample::<f64, _>(StandardNormal);
    }
    xi
}

/// One Heun step of length `lp.dt` starting at `t`.
pub fn langevin_step<R: Rng + ?Sized>(
    spin: &ClassicalSpin,
    t: f64,
    lp: &LangevinParams,
    drive: &Drive,
    rng: &mut R,
) -> ClassicalSpin {
    step_with(spin, t, lp.dt, lp, drive, rng)
}

fn step_with<R: Rng + ?Sized>(
    spin: &ClassicalSpin,
    t: f64,
    h: f64,
    lp: &LangevinParams,
    drive: &Drive,
    rng: &mut R,
) -> ClassicalSpin {
    let sigma = (lp.noise_intensity() / h).sqrt();
    let xi = draw_noise(sigma, rng);
    let t1 = (t + h).min(drive.t_f());
    ClassicalSpin {
        m: heun(spin.m, field(drive, t), field(drive, t1), xi, lp.eta, h),
    }
}

/// Runs one trajectory over the whole window from `m0`, recording `f(m)` at
/// each step index in `record` (sorted ascending).
pub fn trajectory<R: Rng + ?Sized>(
    m0: ClassicalSpin,
    lp: &LangevinParams,
    drive: &Drive,
    record: &[usize],
    rng: &mut R,
    out: &mut [f64],
    f: impl Fn(&ClassicalSpin) -> f64,
) {
    let grid = TimeGrid::new(drive.t_f(), lp.dt);
    let mut spin = m0;
    let mut next = 0;
    for k in 0..=grid.n_steps {
        while next < record.len() && record[next] == k {
            out[next] = f(&spin);
            next += 1;
        }
        if next == record.len() || k == grid.n_steps {
            break;
        }
        spin = step_with(&spin, grid.time(k), grid.h, lp, drive, rng);
    }
}

const CLASSICAL_EXPERIMENT: u64 = 0xC1A5_5000_0000_0000;

fn validated_grid(lp: &LangevinParams, drive: &Drive) -> Result<TimeGrid> {
    lp.validate()?;
    drive.sched.validate()?;
    Ok(TimeGrid::new(drive.t_f(), lp.dt))
}

/// `⟨mz(t_i)·mz(t_j)⟩` over trajectories started from [`ClassicalSpin::initial`].
pub fn classical_correlator(
    t_i: f64,
    t_j: f64,
    lp: &LangevinParams,
    drive: impl Into<Drive>,
) -> Result<CorrelatorEstimate> {
    let drive = drive.into();
    let grid = validated_grid(lp, &drive)?;
    drive.sched.check_time(t_i)?;
    drive.sched.check_time(t_j)?;
    let (ki, kj) = (grid.snap(t_i.min(t_j)), grid.snap(t_i.max(t_j)));
    let n = lp.effective_n_traj();
    let [m] = reduce_fixed::<1>(n, |idx, out| {
        let mut rng = trajectory_rng(lp.master_seed, CLASSICAL_EXPERIMENT, idx);
        let mut rec = [0.0; 2];
        trajectory(ClassicalSpin::initial(), lp, &drive, &[ki, kj], &mut rng, &mut rec, ClassicalSpin::mz);
        out[0] = rec[0] * rec[1];
    })?;
    Ok(CorrelatorEstimate::from_moments(&m, grid.time(ki), grid.time(kj)))
}

fn reduce_fixed<const K: usize>(
    n: usize,
    f: impl Fn(u64, &mut [f64]) + Sync,
) -> Result<[Moments; K]> {
    let v = reduce(n, K, |i, out| {
        f(i, out);
        Ok(())
    })?;
    Ok(v.try_into().expect("width matches"))
}

/// K₃ functions at `t1 = 0, t2 = τ, t3 = 2τ` for every τ, all from one set of
/// trajectories. Since the three correlators share trajectories, the
/// standard error is taken from the per-trajectory K₃ values.
pub fn classical_lgi_sweep(
    lp: &LangevinParams,
    drive: impl Into<Drive>,
    tau_grid: &[f64],
) -> Result<Vec<K3Result>> {
    let drive = drive.into();
    let grid = validated_grid(lp, &drive)?;
    let mut steps = Vec::with_capacity(tau_grid.len());
    for &tau in tau_grid {
        drive.sched.check_time(2.0 * tau).map_err(|_| Error::InvalidParameter {
            name: "tau",
            value: tau,
            reason: "must lie in [0, t_f/2]",
        })?;
        let k = grid.snap(tau);
        steps.push((k, (2 * k).min(grid.n_steps)));
    }
    let mut record: Vec<usize> = steps.iter().flat_map(|&(a, b)| [0, a, b]).collect();
    record.sort_unstable();
    record.dedup();
    let slot = |k: usize| record.binary_search(&k).expect("recorded");

    let width = 3 * steps.len();
    let n = lp.effective_n_traj();
    let moments = reduce(n, width, |idx, out| {
        let mut rng = trajectory_rng(lp.master_seed, CLASSICAL_EXPERIMENT, idx);
        let mut mz = vec![0.0; record.len()];
        trajectory(ClassicalSpin::initial(), lp, &drive, &record, &mut rng, &mut mz, ClassicalSpin::mz);
        for (p, &(a, b)) in steps.iter().enumerate() {
            let (q1, q2, q3) = (mz[slot(0)], mz[slot(a)], mz[slot(b)]);
            for (v, variant) in K3Variant::ALL.iter().enumerate() {
                out[3 * p + v] = k3(q1 * q2, q2 * q3, q1 * q3, *variant);
            }
        }
        Ok(())
    })?;

    let mut out = Vec::with_capacity(width);
    for (p, &(a, _)) in steps.iter().enumerate() {
        for (v, variant) in K3Variant::ALL.iter().enumerate() {
            let m = &moments[3 * p + v];
            out.push(K3Result {
                variant: *variant,
                tau: grid.time(a),
                value: m.mean,
                stderr: m.stderr(),
            });
        }
    }
    Ok(out)
}

/// Boltzmann average of `m·b̂` on the unit sphere for energy `b·m`:
/// `−(coth x − 1/x)` with `x = β|b|`.
pub fn boltzmann_alignment(beta: f64, b_norm: f64) -> f64 {
    let x = beta * b_norm;
    if x < 1e-4 {
        -x / 3.0
    } else {
        -(1.0 / x.tanh() - 1.0 / x)
    }
}

/// Mean and standard error of `m·b̂` at the end of a frozen-field run of
/// length `sched.t_f`, starting from `m0`.
pub fn frozen_alignment(lp: &LangevinParams, sched: &AnnealSchedule, s: f64, m0: ClassicalSpin) -> Result<Moments> {
    let drive = Drive::frozen(*sched, s);
    let grid = validated_grid(lp, &drive)?;
    let b = field(&drive, 0.0);
    let bn = norm(b);
    let b_hat = [b[0] / bn, b[1] / bn, b[2] / bn];
    let [m] = reduce_fixed::<1>(lp.effective_n_traj(), |idx, out| {
        let mut rng = trajectory_rng(lp.master_seed, CLASSICAL_EXPERIMENT ^ 1, idx);
        trajectory(m0, lp, &drive, &[grid.n_steps], &mut rng, out, |sp| dot(sp.m, b_hat));
    })?;
    Ok(m)
}
