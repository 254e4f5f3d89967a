//! Fixed-step RK4 propagation of the master equation.
//!
//! The generator is assembled once per `(drive, bath, step)` as a 4×4
//! superoperator at every half-step node, so each RK4 stage is a single
//! matrix-vector product. Because the map is linear, the same tables also
//! yield full propagators `Φ(t0 → t1)` for trajectory ensembles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{ComplexMatrix2, DensityMatrix, C64, POSITIVITY_TOL};
use crate::bath::{lamb_shift_hamiltonian, lamb_shift_s, terms_with_shifts, BathParams};
use crate::error::{Error, Result};
use crate::model::Drive;

/// Trace tolerance of integrated states.
pub const EVOLVE_TRACE_TOL: f64 = 1e-9;
/// Lamb-shift table spacing (time units) before cubic interpolation.
const LAMB_TABLE_SPACING: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub method: Method,
    pub renormalize: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            method: Method::Rk4,
            renormalize: true,
        }
    }
}

impl IntegratorConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }

    pub fn validate(&self, t_f: f64) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: self.dt,
                reason: "must be positive",
            });
        }
        if self.dt > t_f / 100.0 * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: self.dt,
                reason: "must not exceed t_f/100",
            });
        }
        Ok(())
    }
}

/// Uniform step grid on `[0, t_f]`; the step is `t_f / round(t_f/dt)` so the
/// end point is a grid node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub n_steps: usize,
    pub h: f64,
}

impl TimeGrid {
    pub fn new(t_f: f64, dt: f64) -> Self {
        let n_steps = ((t_f / dt).round() as usize).max(1);
        Self {
            n_steps,
            h: t_f / n_steps as f64,
        }
    }

    /// Nearest step index, clamped to the grid.
    pub fn snap(&self, t: f64) -> usize {
        ((t / self.h).round().max(0.0) as usize).min(self.n_steps)
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    pub fn snap_time(&self, t: f64) -> f64 {
        self.time(self.snap(t))
    }
}

/// Row-major superoperator on `vec(ρ) = (ρ00, ρ01, ρ10, ρ11)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superop(pub [[C64; 4]; 4]);

pub type StateVec = [C64; 4];

impl Superop {
    pub fn zero() -> Self {
        Self([[C64::new(0.0, 0.0); 4]; 4])
    }

    pub fn identity() -> Self {
        let mut s = Self::zero();
        for k in 0..4 {
            s.0[k][k] = C64::new(1.0, 0.0);
        }
        s
    }

    /// The map `ρ ↦ A ρ B`.
    pub fn sandwich(a: &ComplexMatrix2, b: &ComplexMatrix2) -> Self {
        let mut s = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        s.0[2 * i + j][2 * k + l] = a.get(i, k) * b.get(l, j);
                    }
                }
            }
        }
        s
    }

    /// Generator of `−i[H, ρ] + Σ γ(LρL† − ½{L†L, ρ})`.
    pub fn lindbladian(h: &ComplexMatrix2, jumps: &[(f64, ComplexMatrix2)]) -> Self {
        let id = ComplexMatrix2::identity();
        let mi = C64::new(0.0, -1.0);
        let mut g = (Self::sandwich(h, &id) - Self::sandwich(&id, h)).scale(mi);
        for &(rate, l) in jumps {
            if rate == 0.0 {
                continue;
            }
            let ld = l.dagger();
            let ldl = ld * l;
            let d = Self::sandwich(&l, &ld)
                - (Self::sandwich(&ldl, &id) + Self::sandwich(&id, &ldl)).scale(C64::new(0.5, 0.0));
            g = g + d.scale(C64::new(rate, 0.0));
        }
        g
    }

    pub fn scale(&self, k: C64) -> Self {
        let mut s = *self;
        s.0.iter_mut().flatten().for_each(|x| *x *= k);
        s
    }

    #[inline]
    pub fn apply(&self, v: &StateVec) -> StateVec {
        let m = &self.0;
        let mut out = [C64::new(0.0, 0.0); 4];
        for (o, row) in out.iter_mut().zip(m.iter()) {
            *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
        }
        out
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        let mut s = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..4 {
                    acc += self.0[i][k] * rhs.0[k][j];
                }
                s.0[i][j] = acc;
            }
        }
        s
    }

    fn axpy(&self, k: f64, other: &Self) -> Self {
        let mut s = *self;
        for (a, b) in s.0.iter_mut().flatten().zip(other.0.iter().flatten()) {
            *a += *b * k;
        }
        s
    }
}

impl std::ops::Add for Superop {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.axpy(1.0, &o)
    }
}

impl std::ops::Sub for Superop {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.axpy(-1.0, &o)
    }
}

pub fn vectorize(m: &ComplexMatrix2) -> StateVec {
    [m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1)]
}

pub fn unvectorize(v: &StateVec) -> ComplexMatrix2 {
    ComplexMatrix2::new(v[0], v[1], v[2], v[3])
}

fn axpy4(v: &StateVec, k: f64, d: &StateVec) -> StateVec {
    [v[0] + d[0] * k, v[1] + d[1] * k, v[2] + d[2] * k, v[3] + d[3] * k]
}

/// Smallest eigenvalue of the Hermitian part of `vec(ρ)`.
fn min_eig(v: &StateVec) -> f64 {
    DensityMatrix::hermitian_part(unvectorize(v)).min_eigenvalue()
}

enum Generators {
    Constant(Superop),
    /// Indexed by half-step node `j`, time `j·h/2`.
    HalfSteps(Vec<Superop>),
}

/// A master equation discretized on a fixed step grid.
pub struct MasterEquation {
    drive: Drive,
    bath: BathParams,
    cfg: IntegratorConfig,
    grid: TimeGrid,
    generators: Generators,
}

impl MasterEquation {
    pub fn new(drive: impl Into<Drive>, bath: &BathParams, cfg: &IntegratorConfig) -> Result<Self> {
        let drive = drive.into();
        drive.sched.validate()?;
        bath.validate()?;
        cfg.validate(drive.t_f())?;
        let grid = TimeGrid::new(drive.t_f(), cfg.dt);
        let shift0 = lamb_shift_s(0.0, bath);

        let generators = if drive.frozen_s.is_some() {
            let lamb = |_t: f64| {
                let delta = drive.eigensystem_unchecked(0.0).gap();
                (lamb_shift_s(-delta, bath), lamb_shift_s(delta, bath))
            };
            Generators::Constant(generator_at(&drive, bath, 0.0, shift0, &lamb))
        } else {
            let table = LambTable::build(&drive, bath);
            let half = grid.h / 2.0;
            let gens = (0..=2 * grid.n_steps)
                .into_par_iter()
                .map(|j| {
                    let t = j as f64 * half;
                    generator_at(&drive, bath, t, shift0, &|t| table.at(t))
                })
                .collect();
            Generators::HalfSteps(gens)
        };

        Ok(Self {
            drive,
            bath: *bath,
            cfg: *cfg,
            grid,
            generators,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn drive(&self) -> &Drive {
        &self.drive
    }

    pub fn bath(&self) -> &BathParams {
        &self.bath
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.cfg
    }

    #[inline]
    fn gen(&self, half_node: usize) -> &Superop {
        match &self.generators {
            Generators::Constant(g) => g,
            Generators::HalfSteps(v) => &v[half_node],
        }
    }

    fn rk4_step(&self, k: usize, v: &StateVec) -> StateVec {
        let h = self.grid.h;
        let (g0, gm, g1) = (self.gen(2 * k), self.gen(2 * k + 1), self.gen(2 * k + 2));
        let k1 = g0.apply(v);
        let k2 = gm.apply(&axpy4(v, 0.5 * h, &k1));
        let k3 = gm.apply(&axpy4(v, 0.5 * h, &k2));
        let k4 = g1.apply(&axpy4(v, h, &k3));
        let mut out = *v;
        for i in 0..4 {
            out[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        out
    }

    fn step_range(&self, t0: f64, t1: f64) -> Result<(usize, usize)> {
        self.drive.sched.check_time(t0)?;
        self.drive.sched.check_time(t1)?;
        if t1 < t0 {
            return Err(Error::InvalidParameter {
                name: "t1",
                value: t1,
                reason: "must not precede t0",
            });
        }
        Ok((self.grid.snap(t0), self.grid.snap(t1)))
    }

    /// `ρ(t1)` from `ρ(t0)`, both times snapped to the step grid.
    pub fn evolve(&self, rho: &DensityMatrix, t0: f64, t1: f64) -> Result<DensityMatrix> {
        let (k0, k1) = self.step_range(t0, t1)?;
        if k0 == k1 {
            return Ok(*rho);
        }
        let mut v = vectorize(rho.matrix());
        for k in k0..k1 {
            v = self.rk4_step(k, &v);
            self.finish_step(&mut v, k + 1)?;
        }
        DensityMatrix::with_trace_tolerance(unvectorize(&v), EVOLVE_TRACE_TOL)
    }

    /// Like [`evolve`](Self::evolve), also returning `f(t, ρ)` every `every` steps
    /// (and at both ends).
    pub fn evolve_sampled<T>(
        &self,
        rho: &DensityMatrix,
        t0: f64,
        t1: f64,
        every: usize,
        mut f: impl FnMut(f64, &DensityMatrix) -> T,
    ) -> Result<(DensityMatrix, Vec<T>)> {
        let (k0, k1) = self.step_range(t0, t1)?;
        let every = every.max(1);
        let mut out = vec![f(self.grid.time(k0), rho)];
        let mut v = vectorize(rho.matrix());
        for k in k0..k1 {
            v = self.rk4_step(k, &v);
            self.finish_step(&mut v, k + 1)?;
            if (k + 1 - k0) % every == 0 || k + 1 == k1 {
                let state = DensityMatrix::hermitian_part(unvectorize(&v));
                out.push(f(self.grid.time(k + 1), &state));
            }
        }
        let last = DensityMatrix::with_trace_tolerance(unvectorize(&v), EVOLVE_TRACE_TOL)?;
        Ok((last, out))
    }

    fn finish_step(&self, v: &mut StateVec, k: usize) -> Result<()> {
        if self.cfg.renormalize {
            let tr = (v[0] + v[3]).re;
            let inv = 1.0 / tr;
            v.iter_mut().for_each(|x| *x *= inv);
        }
        let lo = min_eig(v);
        if lo < -POSITIVITY_TOL {
            return Err(Error::IntegrationFailure {
                t: self.grid.time(k),
                min_eigenvalue: lo,
            });
        }
        Ok(())
    }

    /// Linear propagator `Φ(t0 → t1)` integrated with the same RK4 stages.
    pub fn propagator(&self, t0: f64, t1: f64) -> Result<Propagator> {
        let (k0, k1) = self.step_range(t0, t1)?;
        let h = self.grid.h;
        let mut phi = Superop::identity();
        for k in k0..k1 {
            let (g0, gm, g1) = (self.gen(2 * k), self.gen(2 * k + 1), self.gen(2 * k + 2));
            let d1 = g0.compose(&phi);
            let d2 = gm.compose(&phi.axpy(0.5 * h, &d1));
            let d3 = gm.compose(&phi.axpy(0.5 * h, &d2));
            let d4 = g1.compose(&phi.axpy(h, &d3));
            phi = phi
                .axpy(h / 6.0, &d1)
                .axpy(h / 3.0, &d2)
                .axpy(h / 3.0, &d3)
                .axpy(h / 6.0, &d4);
        }
        Ok(Propagator {
            map: phi,
            t0: self.grid.time(k0),
            t1: self.grid.time(k1),
            renormalize: self.cfg.renormalize,
        })
    }
}

/// Precomputed dynamical map between two grid times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    pub map: Superop,
    pub t0: f64,
    pub t1: f64,
    renormalize: bool,
}

impl Propagator {
    pub fn identity(t: f64) -> Self {
        Self {
            map: Superop::identity(),
            t0: t,
            t1: t,
            renormalize: true,
        }
    }

    pub fn then(&self, next: &Propagator) -> Propagator {
        Propagator {
            map: next.map.compose(&self.map),
            t0: self.t0,
            t1: next.t1,
            renormalize: self.renormalize,
        }
    }

    pub fn apply_matrix(&self, m: &ComplexMatrix2) -> ComplexMatrix2 {
        unvectorize(&self.map.apply(&vectorize(m)))
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let mut v = self.map.apply(&vectorize(rho.matrix()));
        if self.renormalize {
            let inv = 1.0 / (v[0] + v[3]).re;
            v.iter_mut().for_each(|x| *x *= inv);
        }
        let lo = min_eig(&v);
        if lo < -POSITIVITY_TOL {
            return Err(Error::IntegrationFailure {
                t: self.t1,
                min_eigenvalue: lo,
            });
        }
        DensityMatrix::with_trace_tolerance(unvectorize(&v), EVOLVE_TRACE_TOL)
    }
}

fn generator_at(
    drive: &Drive,
    bath: &BathParams,
    t: f64,
    shift0: f64,
    lamb: &dyn Fn(f64) -> (f64, f64),
) -> Superop {
    let h = drive.hamiltonian_unchecked(t);
    if !bath.is_coupled() {
        return Superop::lindbladian(&h, &[]);
    }
    let es = drive.eigensystem_unchecked(t);
    let (s_minus, s_plus) = if bath.lamb_shift { lamb(t) } else { (0.0, 0.0) };
    let terms = terms_with_shifts(&es, bath, [s_minus, shift0, s_plus]);
    let h_eff = h + lamb_shift_hamiltonian(&terms);
    let jumps: Vec<(f64, ComplexMatrix2)> = terms.iter().map(|t| (t.rate, t.op)).collect();
    Superop::lindbladian(&h_eff, &jumps)
}

/// `S(∓Δ(t))` tabulated on a uniform time grid, read back by cubic
/// (Catmull-Rom) interpolation.
struct LambTable {
    spacing: f64,
    minus: Vec<f64>,
    plus: Vec<f64>,
}

impl LambTable {
    fn build(drive: &Drive, bath: &BathParams) -> Self {
        if !bath.lamb_shift || !bath.is_coupled() {
            return Self {
                spacing: 1.0,
                minus: vec![],
                plus: vec![],
            };
        }
        let n = ((drive.t_f() / LAMB_TABLE_SPACING).ceil() as usize).max(4);
        let spacing = drive.t_f() / n as f64;
        let (minus, plus) = (0..=n)
            .into_par_iter()
            .map(|k| {
                let delta = drive.eigensystem_unchecked(k as f64 * spacing).gap();
                (lamb_shift_s(-delta, bath), lamb_shift_s(delta, bath))
            })
            .unzip();
        Self {
            spacing,
            minus,
            plus,
        }
    }

    fn at(&self, t: f64) -> (f64, f64) {
        (interp(&self.minus, self.spacing, t), interp(&self.plus, self.spacing, t))
    }
}

fn interp(y: &[f64], h: f64, t: f64) -> f64 {
    let n = y.len() - 1;
    let x = (t / h).clamp(0.0, n as f64);
    let i = (x.floor() as usize).min(n - 1);
    let u = x - i as f64;
    // one-sided end slopes by extrapolating the neighbouring cell
    let p0 = if i == 0 { 2.0 * y[0] - y[1] } else { y[i - 1] };
    let p3 = if i + 2 > n { 2.0 * y[n] - y[n - 1] } else { y[i + 2] };
    let (p1, p2) = (y[i], y[i + 1]);
    let u2 = u * u;
    let u3 = u2 * u;
    0.5 * ((2.0 * p1)
        + (-p0 + p2) * u
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u2
        + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u3)
}

/// One-shot convenience wrapper around [`MasterEquation::evolve`].
pub fn evolve(
    rho: &DensityMatrix,
    t0: f64,
    t1: f64,
    drive: impl Into<Drive>,
    bath: &BathParams,
    cfg: &IntegratorConfig,
) -> Result<DensityMatrix> {
    MasterEquation::new(drive, bath, cfg)?.evolve(rho, t0, t1)
}

/// Schrödinger propagation of a pure state with the same RK4 grid.
pub fn evolve_unitary(
    psi: [C64; 2],
    t0: f64,
    t1: f64,
    drive: impl Into<Drive>,
    cfg: &IntegratorConfig,
) -> Result<[C64; 2]> {
    let drive = drive.into();
    drive.sched.validate()?;
    cfg.validate(drive.t_f())?;
    drive.sched.check_time(t0)?;
    drive.sched.check_time(t1)?;
    if t1 < t0 {
        return Err(Error::InvalidParameter {
            name: "t1",
            value: t1,
            reason: "must not precede t0",
        });
    }
    let grid = TimeGrid::new(drive.t_f(), cfg.dt);
    let (k0, k1) = (grid.snap(t0), grid.snap(t1));
    let h = grid.h;
    let mi = C64::new(0.0, -1.0);
    let deriv = |t: f64, v: [C64; 2]| {
        let hv = drive.hamiltonian_unchecked(t).apply(v);
        [hv[0] * mi, hv[1] * mi]
    };
    let add = |v: [C64; 2], k: f64, d: [C64; 2]| [v[0] + d[0] * k, v[1] + d[1] * k];
    let mut v = psi;
    for k in k0..k1 {
        let t = grid.time(k);
        let d1 = deriv(t, v);
        let d2 = deriv(t + 0.5 * h, add(v, 0.5 * h, d1));
        let d3 = deriv(t + 0.5 * h, add(v, 0.5 * h, d2));
        let d4 = deriv(t + h, add(v, h, d3));
        for i in 0..2 {
            v[i] += (d1[i] + (d2[i] + d3[i]) * 2.0 + d4[i]) * (h / 6.0);
        }
        if cfg.renormalize {
            let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            v = [v[0] / n, v[1] / n];
        }
    }
    Ok(v)
}
