//! Closed-form dressed-state algebra for the E_x/E_y pair under a microwave
//! drive: mixing angle, quasi-energies, optical resonance centers, Stark
//! amplitudes of the dressed states and the Jacobi–Anger sideband ladder.
//!
//! Two angle conventions appear. [`DressedFrame::theta`] is
//! θ = atan2(|Ω_d|, Δ) ∈ [0, π] with
//! |+⟩ = sin(θ/2)|E_x⟩ + cos(θ/2)|E_y⟩ and |−⟩ = cos(θ/2)|E_x⟩ − sin(θ/2)|E_y⟩.
//! The Stark and sideband formulas are written with the complementary angle
//! θ' = π − θ, for which |+⟩ = cos(θ'/2)|E_x⟩ + sin(θ'/2)|E_y⟩ up to the sign
//! of |−⟩. [`stark_amplitudes`] and [`sideband_rabi`] take θ'; use
//! [`DressedFrame::ladder_angle`] to get it.

use std::f64::consts::PI;

use crate::diagnostics::{emit, Warning};
use crate::error::{Error, Result};
use crate::model::{DriveField, LaserField, LevelDiagram};
use crate::special::bessel_j_table;

/// Bound on |A₊,₋|/(2ω₊) below which the cross term may be dropped.
pub const CROSS_TERM_LIMIT: f64 = 0.2;

/// Dressed states of the E_x/E_y pair in the microwave rotating frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedFrame {
    pub theta: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub detuning: f64,
    pub rabi_d: f64,
}

/// Amplitudes ⟨E_x|±⟩ and ⟨E_y|±⟩ of the dressed states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Composition {
    pub plus_x: f64,
    pub plus_y: f64,
    pub minus_x: f64,
    pub minus_y: f64,
}

impl DressedFrame {
    /// Generalized Rabi frequency ω₊ − ω₋.
    pub fn generalized_rabi(&self) -> f64 {
        self.omega_plus - self.omega_minus
    }

    /// θ' = π − θ, the angle used by the Stark and sideband formulas.
    pub fn ladder_angle(&self) -> f64 {
        PI - self.theta
    }

    pub fn composition(&self) -> Composition {
        let (s, c) = (0.5 * self.theta).sin_cos();
        Composition {
            plus_x: s,
            plus_y: c,
            minus_x: c,
            minus_y: -s,
        }
    }
}

/// Dressed frame for drive Rabi frequency `rabi_d` at `detuning` Δ = ω_d − (ω_x − ω_y).
pub fn mixing(rabi_d: f64, detuning: f64) -> Result<DressedFrame> {
    if !(rabi_d >= 0.0) {
        return Err(Error::Domain(format!(
            "drive Rabi frequency must be >= 0, got {rabi_d}"
        )));
    }
    let half = 0.5 * rabi_d.hypot(detuning);
    Ok(DressedFrame {
        theta: rabi_d.atan2(detuning),
        omega_plus: half,
        omega_minus: -half,
        detuning,
        rabi_d,
    })
}

/// The four optical resonance centers of the dressed pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalResonances {
    pub plus_x: f64,
    pub minus_x: f64,
    pub plus_y: f64,
    pub minus_y: f64,
}

pub fn optical_resonances(levels: &LevelDiagram, rabi_d: f64, omega_d: f64) -> Result<OpticalResonances> {
    let frame = mixing(rabi_d, levels.detuning(omega_d))?;
    let sum = levels.omega_x + levels.omega_y;
    let x_mid = 0.5 * (sum + omega_d);
    let y_mid = 0.5 * (sum - omega_d);
    Ok(OpticalResonances {
        plus_x: x_mid + frame.omega_plus,
        minus_x: x_mid + frame.omega_minus,
        plus_y: y_mid + frame.omega_plus,
        minus_y: y_mid + frame.omega_minus,
    })
}

/// Stark modulation amplitudes of the dressed states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarkAmplitudes {
    pub plus: f64,
    pub minus: f64,
    pub cross: f64,
}

/// A₊, A₋ and the cross term A₊,₋ for bare amplitudes `a_x`, `a_y` and ladder angle θ'.
pub fn stark_amplitudes(a_x: f64, a_y: f64, ladder_theta: f64) -> StarkAmplitudes {
    let (s, c) = (0.5 * ladder_theta).sin_cos();
    let (s2, c2) = (s * s, c * c);
    StarkAmplitudes {
        plus: a_x * c2 + a_y * s2,
        minus: a_x * s2 + a_y * c2,
        cross: 0.5 * (a_y - a_x) * ladder_theta.sin(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn symbol(self) -> char {
        match self {
            Branch::Plus => '+',
            Branch::Minus => '-',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '+' => Some(Branch::Plus),
            '-' => Some(Branch::Minus),
            _ => None,
        }
    }
}

/// Effective optical Rabi frequency of sideband `n` on `branch`.
///
/// `a_plus`, `a_minus` are the modulation indices A₊/ω_d and A₋/ω_d.
pub fn sideband_rabi(branch: Branch, n: i64, laser: &LaserField, ladder_theta: f64, a_plus: f64, a_minus: f64) -> f64 {
    let (s, c) = (0.5 * ladder_theta).sin_cos();
    let j = crate::special::bessel_j;
    match branch {
        Branch::Plus => laser.rabi_x * c * j(n, a_plus) + laser.rabi_y * s * j(n + 1, a_plus),
        Branch::Minus => laser.rabi_y * c * j(n, a_minus) - laser.rabi_x * s * j(n - 1, a_minus),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderEntry {
    pub branch: Branch,
    pub n: i64,
    /// Laser frequency of the resonance.
    pub center: f64,
    pub eff_rabi: f64,
    /// (E_x fraction, E_y fraction) of the dressed state.
    pub branch_weights: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SidebandLadder {
    pub entries: Vec<LadderEntry>,
    pub frame: DressedFrame,
    pub omega_d: f64,
    pub n_max: usize,
    pub a_plus: f64,
    pub a_minus: f64,
    pub a_cross: f64,
    /// |A₊,₋| / (2ω₊).
    pub validity_ratio: f64,
    pub warnings: Vec<Warning>,
}

impl SidebandLadder {
    pub fn entry(&self, branch: Branch, n: i64) -> Option<&LadderEntry> {
        self.entries.iter().find(|e| e.branch == branch && e.n == n)
    }

    pub fn branch(&self, branch: Branch) -> impl Iterator<Item = &LadderEntry> {
        self.entries.iter().filter(move |e| e.branch == branch)
    }
}

/// Tail of the Bessel sum rule tolerated when truncating the ladder.
pub const SUM_RULE_TOLERANCE: f64 = 1e-10;

/// Smallest truncation order N ≥ max(⌈a⌉ + 5, 2) with Σ_{|n|≤N} J_n(a)² ≥ 1 − 1e-10.
pub fn default_n_max(modulation_index: f64) -> usize {
    let a = modulation_index.abs();
    let base = ((a.ceil() as usize) + 5).max(2);
    let cap = base + 20 + (4.0 * a.cbrt()).ceil() as usize;
    let j = bessel_j_table(cap, a);
    let mut acc = j[0] * j[0];
    for (k, v) in j.iter().enumerate().skip(1) {
        acc += 2.0 * v * v;
        if k >= base && 1.0 - acc < SUM_RULE_TOLERANCE {
            return k;
        }
    }
    cap
}

/// Enumerate the optical resonances for |n| ≤ n_max on both dressed branches.
pub fn sideband_ladder(
    levels: &LevelDiagram,
    laser: &LaserField,
    drive: &DriveField,
    n_max: Option<usize>,
) -> Result<SidebandLadder> {
    let omega_d = drive.omega_d;
    if !(omega_d > 0.0) {
        return Err(Error::Domain(format!(
            "sideband ladder needs a drive frequency > 0, got {omega_d}"
        )));
    }
    let frame = mixing(drive.rabi_d(), levels.detuning(omega_d))?;
    let theta = frame.ladder_angle();
    let stark = stark_amplitudes(drive.stark_x(), drive.stark_y(), theta);
    let a_plus = stark.plus / omega_d;
    let a_minus = stark.minus / omega_d;
    let n_max = n_max.unwrap_or_else(|| default_n_max(a_plus.abs().max(a_minus.abs())));

    let mut warnings = Vec::new();
    let validity_ratio = if stark.cross == 0.0 {
        0.0
    } else {
        stark.cross.abs() / (2.0 * frame.omega_plus)
    };
    if validity_ratio > CROSS_TERM_LIMIT {
        emit(&mut warnings, Warning::CrossTermLarge { ratio: validity_ratio });
    }

    let res = optical_resonances(levels, frame.rabi_d, omega_d)?;
    let (s, c) = (0.5 * theta).sin_cos();
    let jp = signed_table(n_max + 1, a_plus);
    let jm = signed_table(n_max + 1, a_minus);
    let at = |t: &Vec<f64>, n: i64| t[(n + n_max as i64 + 1) as usize];

    let mut entries = Vec::with_capacity(2 * (2 * n_max + 1));
    let n_lim = n_max as i64;
    for n in -n_lim..=n_lim {
        entries.push(LadderEntry {
            branch: Branch::Plus,
            n,
            center: res.plus_x + n as f64 * omega_d,
            eff_rabi: laser.rabi_x * c * at(&jp, n) + laser.rabi_y * s * at(&jp, n + 1),
            branch_weights: (c * c, s * s),
        });
    }
    for n in -n_lim..=n_lim {
        entries.push(LadderEntry {
            branch: Branch::Minus,
            n,
            center: res.minus_y + n as f64 * omega_d,
            eff_rabi: laser.rabi_y * c * at(&jm, n) - laser.rabi_x * s * at(&jm, n - 1),
            branch_weights: (s * s, c * c),
        });
    }

    Ok(SidebandLadder {
        entries,
        frame,
        omega_d,
        n_max,
        a_plus: stark.plus,
        a_minus: stark.minus,
        a_cross: stark.cross,
        validity_ratio,
        warnings,
    })
}

fn signed_table(n: usize, x: f64) -> Vec<f64> {
    crate::special::bessel_j_symmetric(n, x)
}

/// Exact shift of a resonantly dressed line when a transverse field moves
/// ω_x → ω_x + ε⊥ and ω_y → ω_y − ε⊥ with the drive left at the bare splitting.
///
/// To leading order the shift is ε⊥²/Ω_d.
pub fn protected_shift(eps_perp: f64, rabi_d: f64) -> Result<f64> {
    if !(rabi_d > 0.0) {
        return Err(Error::Domain(format!(
            "protection needs a drive Rabi frequency > 0, got {rabi_d}"
        )));
    }
    let e2 = 4.0 * eps_perp * eps_perp;
    // (√(Ω² + 4ε²) − Ω)/2 written without cancellation
    Ok(0.5 * e2 / (rabi_d.hypot(2.0 * eps_perp) + rabi_d))
}
