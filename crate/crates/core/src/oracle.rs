//! Brute-force integration of the driven three-level master equation in the
//! lab frame, used to check every closed-form result.
//!
//! Frequencies enter in MHz and are multiplied by 2π here; time is in μs.
//! H(t) = H₀ + H_L(t) + H_d(t) + H_P(t) with
//!
//! * H₀ = diag(0, ω_x, ω_y)
//! * H_L = ½(Ω_x|0⟩⟨E_x| + Ω_y|0⟩⟨E_y|) e^{iω_L t} + h.c.
//! * H_d = ½Ω_d |E_x⟩⟨E_y| e^{−iω_d t} + h.c.
//! * H_P = (A_x|E_x⟩⟨E_x| + A_y|E_y⟩⟨E_y|) cos ω_d t
//!
//! and spontaneous emission |e⟩ → |0⟩ at rate γ* from every excited level.
//! An optional fourth level |E_m⟩ couples to E_x and E_y through
//! ½Ω_m(|E_x⟩⟨E_m| + |E_y⟩⟨E_m|) e^{−iω_d t} + h.c.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rayon::prelude::*;

use crate::diagnostics::{emit, Warning};
use crate::error::{Error, Result};
use crate::model::ModelBundle;
use crate::spectra::{Spectrum, SpectrumKind};

pub type Matrix<const N: usize> = [[C; N]; N];

const ZERO: C = C::new(0.0, 0.0);

/// Trace tolerance of the density-matrix invariants.
pub const TRACE_TOLERANCE: f64 = 1e-8;
/// Hermiticity tolerance of the density-matrix invariants.
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
/// Most negative eigenvalue tolerated.
pub const POSITIVITY_TOLERANCE: f64 = -1e-8;

/// Density matrix over {|0⟩, |E_x⟩, |E_y⟩[, |E_m⟩]}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix<const N: usize> {
    pub m: Matrix<N>,
}

impl<const N: usize> DensityMatrix<N> {
    pub fn pure(i: usize) -> Self {
        let mut m = [[ZERO; N]; N];
        m[i][i] = C::new(1.0, 0.0);
        Self { m }
    }

    pub fn ground() -> Self {
        Self::pure(0)
    }

    pub fn trace(&self) -> C {
        (0..N).map(|i| self.m[i][i]).sum()
    }

    pub fn population(&self, i: usize) -> f64 {
        self.m[i][i].re
    }

    /// Total population outside the ground state.
    pub fn excited_population(&self) -> f64 {
        (1..N).map(|i| self.m[i][i].re).sum()
    }

    /// max |ρ_ij − conj(ρ_ji)|.
    pub fn hermiticity_error(&self) -> f64 {
        let mut e: f64 = 0.0;
        for i in 0..N {
            for j in i..N {
                e = e.max((self.m[i][j] - self.m[j][i].conj()).norm());
            }
        }
        e
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = DMatrix::from_fn(N, N, |i, j| 0.5 * (self.m[i][j] + self.m[j][i].conj()));
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn check(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).norm() > TRACE_TOLERANCE
            || self.hermiticity_error() > HERMITICITY_TOLERANCE
            || self.min_eigenvalue() < POSITIVITY_TOLERANCE
        {
            return Err(Error::Domain(format!(
                "initial state is not a density matrix (trace {tr}, hermiticity {:.1e}, min eigenvalue {:.1e})",
                self.hermiticity_error(),
                self.min_eigenvalue()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Rk4,
}

/// Step size and averaging windows, all in μs. `None` selects the default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    /// Default 1/(100 f_max).
    pub dt: Option<f64>,
    /// Default 10 excited-state lifetimes.
    pub t_transient: Option<f64>,
    /// Default 8 drive periods, or 2 lifetimes without a drive.
    pub t_average: Option<f64>,
    /// Cap on transient plus averaging time; default transient + 60 lifetimes.
    pub t_max: Option<f64>,
    /// Relative agreement demanded of consecutive window averages.
    pub tolerance: f64,
    /// Phase of the microwave at t = 0 (rad).
    pub drive_phase: f64,
    pub method: Method,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            dt: None,
            t_transient: None,
            t_average: None,
            t_max: None,
            tolerance: 1e-4,
            drive_phase: 0.0,
            method: Method::Rk4,
        }
    }
}

/// Coupling of the drive to a magnetic excited level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagneticCoupling {
    pub omega_m: f64,
    pub rabi_m: f64,
}

/// Worst invariant violations seen during integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hygiene {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub steps: u64,
}

impl Default for Hygiene {
    fn default() -> Self {
        Self {
            max_trace_error: 0.0,
            max_hermiticity_error: 0.0,
            min_eigenvalue: f64::INFINITY,
            steps: 0,
        }
    }
}

impl Hygiene {
    pub fn merge(&mut self, o: &Hygiene) {
        self.max_trace_error = self.max_trace_error.max(o.max_trace_error);
        self.max_hermiticity_error = self.max_hermiticity_error.max(o.max_hermiticity_error);
        self.min_eigenvalue = self.min_eigenvalue.min(o.min_eigenvalue);
        self.steps += o.steps;
    }

    /// Trace drift scaled to a 10⁴-step budget.
    pub fn trace_error_per_10k_steps(&self) -> f64 {
        self.max_trace_error * (1e4 / self.steps.max(1) as f64).min(1.0)
    }

    pub fn within_tolerance(&self) -> bool {
        self.max_trace_error <= TRACE_TOLERANCE
            && self.max_hermiticity_error <= HERMITICITY_TOLERANCE
            && self.min_eigenvalue >= POSITIVITY_TOLERANCE
    }
}

/// Time-dependent Hamiltonian and decay, in angular units.
#[derive(Debug, Clone, Copy)]
struct System<const N: usize> {
    energy: [f64; N],
    laser: [f64; N],
    omega_l: f64,
    half_rabi_d: f64,
    half_rabi_m: f64,
    stark: [f64; N],
    omega_d: f64,
    phase: f64,
    gamma: f64,
}

const X: usize = 1;
const Y: usize = 2;
const M: usize = 3;

impl<const N: usize> System<N> {
    fn new(b: &ModelBundle, magnetic: Option<MagneticCoupling>, omega_l: f64, phase: f64) -> Self {
        let mut energy = [0.0; N];
        let mut laser = [0.0; N];
        let mut stark = [0.0; N];
        energy[X] = TAU * b.levels.omega_x;
        energy[Y] = TAU * b.levels.omega_y;
        laser[X] = 0.5 * TAU * b.laser.rabi_x;
        laser[Y] = 0.5 * TAU * b.laser.rabi_y;
        stark[X] = TAU * b.drive.stark_x();
        stark[Y] = TAU * b.drive.stark_y();
        let mut half_rabi_m = 0.0;
        if let (Some(m), true) = (magnetic, N > M) {
            energy[M] = TAU * m.omega_m;
            half_rabi_m = 0.5 * TAU * m.rabi_m;
        }
        Self {
            energy,
            laser,
            omega_l: TAU * omega_l,
            half_rabi_d: 0.5 * TAU * b.drive.rabi_d(),
            half_rabi_m,
            stark,
            omega_d: TAU * b.drive.omega_d,
            phase,
            gamma: TAU * b.shape.gamma_star,
        }
    }

    /// Bound on the fastest angular frequency in H(t).
    fn f_max(&self) -> f64 {
        let lo = self.energy.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.energy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let couplings = 2.0 * (self.laser.iter().sum::<f64>() + self.half_rabi_d + 2.0 * self.half_rabi_m)
            + self.stark.iter().fold(0.0f64, |a, s| a.max(s.abs()));
        [hi - lo + couplings, self.omega_l.abs(), self.omega_d, self.gamma]
            .into_iter()
            .fold(0.0, f64::max)
    }

    fn hamiltonian(&self, t: f64) -> Matrix<N> {
        let mut h = [[ZERO; N]; N];
        let wd = self.omega_d * t + self.phase;
        let cos_d = wd.cos();
        for i in 1..N {
            h[i][i] = C::new(self.energy[i] + self.stark[i] * cos_d, 0.0);
        }
        let el = C::from_polar(1.0, self.omega_l * t);
        for e in [X, Y] {
            let v = self.laser[e] * el;
            h[0][e] = v;
            h[e][0] = v.conj();
        }
        let ed = C::from_polar(1.0, -wd);
        let v = self.half_rabi_d * ed;
        h[X][Y] = v;
        h[Y][X] = v.conj();
        if N > M {
            let v = self.half_rabi_m * ed;
            for e in [X, Y] {
                h[e][M] = v;
                h[M][e] = v.conj();
            }
        }
        h
    }

    /// dρ/dt = −i[H, ρ] + Σ_e γ D[|0⟩⟨e|] ρ.
    fn rhs(&self, h: &Matrix<N>, r: &Matrix<N>) -> Matrix<N> {
        let mut out = [[ZERO; N]; N];
        for i in 0..N {
            for j in 0..N {
                let mut c = ZERO;
                for k in 0..N {
                    c += h[i][k] * r[k][j] - r[i][k] * h[k][j];
                }
                out[i][j] = C::new(c.im, -c.re);
            }
        }
        let g = self.gamma;
        let mut gain = 0.0;
        for i in 0..N {
            for j in 0..N {
                let decay = 0.5 * g * ((i > 0) as u8 as f64 + (j > 0) as u8 as f64);
                out[i][j] -= decay * r[i][j];
            }
            if i > 0 {
                gain += g * r[i][i].re;
            }
        }
        out[0][0] += gain;
        out
    }
}

fn axpy<const N: usize>(a: &Matrix<N>, s: f64, b: &Matrix<N>) -> Matrix<N> {
    let mut out = *a;
    for i in 0..N {
        for j in 0..N {
            out[i][j] += s * b[i][j];
        }
    }
    out
}

/// Fixed-step RK4 propagator.
struct Stepper<const N: usize> {
    sys: System<N>,
    dt: f64,
    t: f64,
    rho: Matrix<N>,
    hygiene: Hygiene,
}

const HYGIENE_STRIDE: u64 = 64;
const EIGEN_STRIDE: u64 = 8192;

impl<const N: usize> Stepper<N> {
    fn step(&mut self) {
        let (t, dt) = (self.t, self.dt);
        let h0 = self.sys.hamiltonian(t);
        let hm = self.sys.hamiltonian(t + 0.5 * dt);
        let h1 = self.sys.hamiltonian(t + dt);
        let r = &self.rho;
        let k1 = self.sys.rhs(&h0, r);
        let k2 = self.sys.rhs(&hm, &axpy(r, 0.5 * dt, &k1));
        let k3 = self.sys.rhs(&hm, &axpy(r, 0.5 * dt, &k2));
        let k4 = self.sys.rhs(&h1, &axpy(r, dt, &k3));
        for i in 0..N {
            for j in 0..N {
                self.rho[i][j] += dt / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]);
            }
        }
        self.t += dt;
        self.hygiene.steps += 1;
        if self.hygiene.steps % HYGIENE_STRIDE == 0 {
            self.audit(self.hygiene.steps % EIGEN_STRIDE == 0);
        }
    }

    fn audit(&mut self, eigen: bool) {
        let d = DensityMatrix { m: self.rho };
        let h = &mut self.hygiene;
        h.max_trace_error = h.max_trace_error.max((d.trace() - 1.0).norm());
        h.max_hermiticity_error = h.max_hermiticity_error.max(d.hermiticity_error());
        if eigen {
            h.min_eigenvalue = h.min_eigenvalue.min(d.min_eigenvalue());
        }
    }

    fn excited(&self) -> f64 {
        (1..N).map(|i| self.rho[i][i].re).sum()
    }

    /// Trapezoid average of the excited population over `steps` steps.
    fn window_average(&mut self, steps: u64) -> f64 {
        let mut acc = 0.5 * self.excited();
        for k in 0..steps {
            self.step();
            acc += if k + 1 == steps {
                0.5 * self.excited()
            } else {
                self.excited()
            };
        }
        self.audit(true);
        acc / steps as f64
    }
}

/// Resolved step size and window lengths for one system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub dt: f64,
    pub transient_steps: u64,
    pub window_steps: u64,
    pub max_windows: u64,
    pub f_max: f64,
}

impl IntegrationConfig {
    fn schedule<const N: usize>(&self, sys: &System<N>) -> Result<Schedule> {
        let f_max = sys.f_max();
        if !(f_max > 0.0) {
            return Err(Error::Domain(
                "oracle system has no dynamics (all frequencies zero)".into(),
            ));
        }
        let limit = 1.0 / (50.0 * f_max);
        let dt = self.dt.unwrap_or(1.0 / (100.0 * f_max));
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("time step must be > 0, got {dt}")));
        }
        if dt > limit {
            return Err(Error::StepTooLarge {
                dt_us: dt,
                limit_us: limit,
            });
        }
        let lifetime = if sys.gamma > 0.0 { 1.0 / sys.gamma } else { 1.0 };
        let t_tr = self.t_transient.unwrap_or(10.0 * lifetime);
        let t_avg = match (self.t_average, sys.omega_d > 0.0) {
            (Some(t), _) => t,
            (None, true) => 8.0 * TAU / sys.omega_d,
            (None, false) => 2.0 * lifetime,
        };
        if !(t_avg > 0.0) || !(t_tr >= 0.0) {
            return Err(Error::Domain("averaging window must be > 0 and transient >= 0".into()));
        }
        if sys.omega_d > 0.0 && t_avg < TAU / sys.omega_d * (1.0 - 1e-12) {
            return Err(Error::Domain("averaging window shorter than one drive period".into()));
        }
        // a whole number of steps per window
        let window_steps = (t_avg / dt).ceil().max(1.0) as u64;
        let dt = t_avg / window_steps as f64;
        let transient_steps = (t_tr / dt).ceil() as u64;
        let t_max = self.t_max.unwrap_or(t_tr + 60.0 * lifetime);
        let max_windows = (((t_max - t_tr) / t_avg).floor() as u64).max(2);
        Ok(Schedule {
            dt,
            transient_steps,
            window_steps,
            max_windows,
            f_max,
        })
    }
}

/// Hamiltonian of `bundle` at time `t` (μs), angular units (rad/μs).
pub fn build_hamiltonian(bundle: &ModelBundle, t: f64) -> Matrix<3> {
    System::<3>::new(bundle, None, bundle.laser.omega_l, 0.0).hamiltonian(t)
}

/// Hamiltonian including a magnetic level as the fourth basis state.
pub fn build_hamiltonian_magnetic(bundle: &ModelBundle, magnetic: MagneticCoupling, t: f64) -> Matrix<4> {
    System::<4>::new(bundle, Some(magnetic), bundle.laser.omega_l, 0.0).hamiltonian(t)
}

/// Sampled evolution from ρ₀.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix<N>>,
    pub hygiene: Hygiene,
}

/// Integrate for `duration` μs, storing the state every `stride` steps.
pub fn integrate(
    bundle: &ModelBundle,
    config: &IntegrationConfig,
    rho0: DensityMatrix<3>,
    duration: f64,
    stride: usize,
) -> Result<Trajectory<3>> {
    integrate_n::<3>(bundle, None, config, rho0, duration, stride)
}

pub fn integrate_magnetic(
    bundle: &ModelBundle,
    magnetic: MagneticCoupling,
    config: &IntegrationConfig,
    rho0: DensityMatrix<4>,
    duration: f64,
    stride: usize,
) -> Result<Trajectory<4>> {
    integrate_n::<4>(bundle, Some(magnetic), config, rho0, duration, stride)
}

fn integrate_n<const N: usize>(
    bundle: &ModelBundle,
    magnetic: Option<MagneticCoupling>,
    config: &IntegrationConfig,
    rho0: DensityMatrix<N>,
    duration: f64,
    stride: usize,
) -> Result<Trajectory<N>> {
    rho0.check()?;
    if !(duration >= 0.0) || stride == 0 {
        return Err(Error::Domain("duration must be >= 0 and stride > 0".into()));
    }
    let sys = System::<N>::new(bundle, magnetic, bundle.laser.omega_l, config.drive_phase);
    let sched = config.schedule(&sys)?;
    let steps = (duration / sched.dt).round() as u64;
    let mut st = Stepper {
        sys,
        dt: sched.dt,
        t: 0.0,
        rho: rho0.m,
        hygiene: Hygiene::default(),
    };
    st.audit(true);
    let mut times = vec![0.0];
    let mut states = vec![rho0];
    for k in 1..=steps {
        st.step();
        if k % stride as u64 == 0 || k == steps {
            times.push(st.t);
            states.push(DensityMatrix { m: st.rho });
        }
    }
    st.audit(true);
    Ok(Trajectory {
        times,
        states,
        hygiene: st.hygiene,
    })
}

/// Steady-state excited population at one laser frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyPoint {
    pub omega_l: f64,
    pub population: f64,
    pub converged: bool,
    pub relative_change: f64,
    pub hygiene: Hygiene,
}

fn steady_point_n<const N: usize>(
    bundle: &ModelBundle,
    magnetic: Option<MagneticCoupling>,
    omega_l: f64,
    config: &IntegrationConfig,
) -> Result<SteadyPoint> {
    let sys = System::<N>::new(bundle, magnetic, omega_l, config.drive_phase);
    let sched = config.schedule(&sys)?;
    let mut st = Stepper {
        sys,
        dt: sched.dt,
        t: 0.0,
        rho: DensityMatrix::<N>::ground().m,
        hygiene: Hygiene::default(),
    };
    for _ in 0..sched.transient_steps {
        st.step();
    }
    let mut prev = st.window_average(sched.window_steps);
    let mut rel = f64::INFINITY;
    for _ in 1..sched.max_windows {
        let cur = st.window_average(sched.window_steps);
        rel = (cur - prev).abs() / cur.abs().max(f64::MIN_POSITIVE);
        prev = cur;
        if rel <= config.tolerance {
            return Ok(SteadyPoint {
                omega_l,
                population: cur,
                converged: true,
                relative_change: rel,
                hygiene: st.hygiene,
            });
        }
    }
    Ok(SteadyPoint {
        omega_l,
        population: prev,
        converged: false,
        relative_change: rel,
        hygiene: st.hygiene,
    })
}

pub fn steady_state_point(bundle: &ModelBundle, omega_l: f64, config: &IntegrationConfig) -> Result<SteadyPoint> {
    steady_point_n::<3>(bundle, None, omega_l, config)
}

/// Result of an oracle scan over laser frequency.
#[derive(Debug, Clone)]
pub struct OracleScan {
    pub spectrum: Spectrum,
    pub points: Vec<SteadyPoint>,
    pub hygiene: Hygiene,
    pub schedule: Schedule,
}

impl OracleScan {
    pub fn unconverged(&self) -> impl Iterator<Item = &SteadyPoint> {
        self.points.iter().filter(|p| !p.converged)
    }
}

/// Homogeneous steady-state PLE spectrum by direct integration at every grid point.
pub fn steady_state_scan(bundle: &ModelBundle, grid: &[f64], config: &IntegrationConfig) -> Result<OracleScan> {
    scan_n::<3>(bundle, None, grid, config)
}

pub fn steady_state_scan_magnetic(
    bundle: &ModelBundle,
    magnetic: MagneticCoupling,
    grid: &[f64],
    config: &IntegrationConfig,
) -> Result<OracleScan> {
    scan_n::<4>(bundle, Some(magnetic), grid, config)
}

fn scan_n<const N: usize>(
    bundle: &ModelBundle,
    magnetic: Option<MagneticCoupling>,
    grid: &[f64],
    config: &IntegrationConfig,
) -> Result<OracleScan> {
    crate::lineshape::check_grid(grid)?;
    if grid.is_empty() {
        return Err(Error::Domain("oracle scan needs at least one grid point".into()));
    }
    let lifetime = TAU * bundle.shape.gamma_star;
    if let (Some(t), true) = (config.t_transient, lifetime > 0.0) {
        if t < 10.0 / lifetime * (1.0 - 1e-12) {
            return Err(Error::Domain(format!(
                "transient {t} us is shorter than 10 excited-state lifetimes"
            )));
        }
    }
    let schedule = config.schedule(&System::<N>::new(
        bundle,
        magnetic,
        grid[grid.len() - 1],
        config.drive_phase,
    ))?;
    let points: Vec<SteadyPoint> = grid
        .par_iter()
        .map(|&w| steady_point_n::<N>(bundle, magnetic, w, config))
        .collect::<Result<_>>()?;
    let mut hygiene = Hygiene::default();
    let mut warnings = Vec::new();
    for p in &points {
        hygiene.merge(&p.hygiene);
        if !p.converged {
            emit(
                &mut warnings,
                Warning::OracleNotConverged {
                    omega_l: p.omega_l,
                    relative_change: p.relative_change,
                },
            );
        }
    }
    let intensity = points.iter().map(|p| p.population.max(0.0)).collect();
    let mut spectrum = crate::spectra::echo_bundle(Spectrum::new(SpectrumKind::Ple, grid.to_vec(), intensity)?, bundle)
        .echo("oracle_dt_us", schedule.dt)
        .echo("oracle_window_steps", schedule.window_steps)
        .echo("oracle_transient_steps", schedule.transient_steps)
        .echo("oracle_drive_phase_rad", config.drive_phase);
    spectrum.warnings = warnings;
    Ok(OracleScan {
        spectrum,
        points,
        hygiene,
        schedule,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lineshape::rho11;
    use crate::model::{validate_model, DriveField, LaserField, LevelDiagram, LineshapeParams};

    fn bundle(omega_x: f64, drive: DriveField, laser: LaserField, gamma: f64) -> ModelBundle {
        validate_model(
            LevelDiagram::new(omega_x, 0.0),
            drive,
            laser,
            LineshapeParams::homogeneous(gamma),
        )
        .unwrap()
    }

    #[test]
    fn hamiltonian_static_parts() {
        let b = bundle(2900.0, DriveField::undriven(0.0), LaserField::new(0.0, 0.0), 15.0);
        let h = build_hamiltonian(&b, 0.37);
        assert_eq!(h[1][1].re, TAU * 2900.0);
        assert_eq!(h[2][2].re, 0.0);
        assert_eq!(h[0][0], ZERO);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(h[i][j], ZERO);
                }
            }
        }
    }

    #[test]
    fn hamiltonian_stark_at_origin_and_drive_bound() {
        let d = DriveField {
            omega_d: 470.0,
            power_mw: 4.0,
            k_rabi: 10.0,
            k_stark_x: 3.0,
            k_stark_y: 5.0,
            k_magnetic: 0.0,
        };
        let b = bundle(0.0, d, LaserField::new(0.0, 0.0), 15.0);
        let h = build_hamiltonian(&b, 0.0);
        assert!((h[1][1].re - TAU * 6.0).abs() < 1e-12);
        assert!((h[2][2].re - TAU * 10.0).abs() < 1e-12);
        for k in 0..50 {
            let h = build_hamiltonian(&b, k as f64 * 1.3e-4);
            assert!(h[1][2].norm() <= std::f64::consts::PI * 20.0 + 1e-12);
            assert_eq!(h[1][2], h[2][1].conj());
        }
    }

    #[test]
    fn spontaneous_decay_lifetime() {
        // γ* = 1/(2π·10.5 ns) in MHz
        let gamma = 1.0 / (TAU * 0.0105);
        let b = bundle(2900.0, DriveField::undriven(0.0), LaserField::new(0.0, 0.0), gamma);
        let tr = integrate(&b, &IntegrationConfig::default(), DensityMatrix::pure(2), 0.05, 200).unwrap();
        for (t, s) in tr.times.iter().zip(&tr.states) {
            let want = (-t / 0.0105).exp();
            assert!((s.excited_population() - want).abs() < 1e-9, "t={t}");
        }
        assert!(tr.hygiene.within_tolerance());
    }

    #[test]
    fn closed_rabi_oscillation() {
        let b = bundle(2900.0, DriveField::undriven(0.0), LaserField::new(0.0, 5.0), 0.0);
        let cfg = IntegrationConfig::default();
        let tr = integrate(&b, &cfg, DensityMatrix::ground(), 0.4, 50).unwrap();
        for (t, s) in tr.times.iter().zip(&tr.states) {
            let want = (std::f64::consts::PI * 5.0 * t).sin().powi(2);
            assert!((s.population(2) - want).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn refuses_large_step() {
        let b = bundle(2900.0, DriveField::undriven(0.0), LaserField::new(0.0, 1.0), 15.0);
        let cfg = IntegrationConfig {
            dt: Some(1e-4),
            ..Default::default()
        };
        assert!(matches!(
            steady_state_point(&b, 0.0, &cfg),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn rejects_invalid_initial_state() {
        let b = bundle(2900.0, DriveField::undriven(0.0), LaserField::new(0.0, 1.0), 15.0);
        let mut r = DensityMatrix::<3>::ground();
        r.m[0][0] = C::new(0.5, 0.0);
        assert!(integrate(&b, &IntegrationConfig::default(), r, 0.01, 1).is_err());
    }

    #[test]
    fn undriven_matches_closed_form() {
        let b = bundle(2900.0, DriveField::undriven(0.0), LaserField::new(0.0, 10.0), 15.0);
        let cfg = IntegrationConfig::default();
        for w in [0.0, 7.5, -20.0] {
            let p = steady_state_point(&b, w, &cfg).unwrap();
            let want = rho11(10.0, w, 15.0);
            assert!(p.converged);
            assert!(
                (p.population - want).abs() < 0.01 * want,
                "{w}: {} vs {want}",
                p.population
            );
            assert!(p.hygiene.within_tolerance());
        }
    }

    #[test]
    fn magnetic_level_without_coupling_is_inert() {
        let b = bundle(2900.0, DriveField::undriven(0.0), LaserField::new(0.0, 10.0), 15.0);
        let cfg = IntegrationConfig::default();
        let m = MagneticCoupling {
            omega_m: -2850.0,
            rabi_m: 0.0,
        };
        let a = steady_state_scan(&b, &[3.0], &cfg).unwrap();
        let c = steady_state_scan_magnetic(&b, m, &[3.0], &cfg).unwrap();
        let (x, y) = (a.points[0].population, c.points[0].population);
        assert!((x - y).abs() < 1e-9 * x, "{x} {y}");
    }

    #[test]
    fn transient_shorter_than_ten_lifetimes_rejected() {
        let b = bundle(2900.0, DriveField::undriven(0.0), LaserField::new(0.0, 1.0), 15.0);
        let cfg = IntegrationConfig {
            t_transient: Some(0.01),
            ..Default::default()
        };
        assert!(steady_state_scan(&b, &[0.0], &cfg).is_err());
    }
}
