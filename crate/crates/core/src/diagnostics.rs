use std::fmt;

/// Non-fatal conditions raised while building a spectrum or a ladder.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// The neglected dressed-state Stark cross term is no longer small.
    CrossTermLarge { ratio: f64 },
    /// Two strong ladder lines overlap; the single-resonance RWA is doubtful.
    OverlappingPeaks { first: f64, second: f64 },
    /// Sampling grid coarser than the narrowest feature.
    CoarseGrid { spacing: f64, limit: f64 },
    /// W = γ* = Δ_R = 0: population reported as 0.
    DegenerateLineshape,
    /// The time-domain oracle did not settle at one frequency.
    OracleNotConverged { omega_l: f64, relative_change: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::CrossTermLarge { ratio } => {
                write!(f, "dressed Stark cross term ratio {ratio:.3} exceeds 0.2")
            }
            Warning::OverlappingPeaks { first, second } => write!(
                f,
                "ladder lines at {first:.3} and {second:.3} MHz overlap; rotating-wave treatment is approximate"
            ),
            Warning::CoarseGrid { spacing, limit } => write!(
                f,
                "grid spacing {spacing:.4} MHz is coarser than the resolution limit {limit:.4} MHz"
            ),
            Warning::DegenerateLineshape => {
                write!(f, "zero Rabi frequency, rate and detuning: population set to 0")
            }
            Warning::OracleNotConverged {
                omega_l,
                relative_change,
            } => write!(
                f,
                "oracle steady state at {omega_l:.3} MHz still moving (relative change {relative_change:.2e})"
            ),
        }
    }
}

pub(crate) fn emit(warnings: &mut Vec<Warning>, w: Warning) {
    log::warn!("{w}");
    if !warnings.contains(&w) {
        warnings.push(w);
    }
}
