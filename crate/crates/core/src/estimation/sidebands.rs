//! Joint fit of sideband amplitudes tracked across drive powers.

use std::collections::BTreeMap;

use crate::dressed::Branch;
use crate::error::{Error, Result};
use crate::estimation::lm::{levenberg_marquardt, LmOptions};
use crate::model::ModelBundle;
use crate::spectra::PleModel;

pub const PARAM_NAMES: [&str; 5] = ["k_stark_x", "k_stark_y", "rabi_x", "rabi_y", "pl_ratio"];

/// Peak height of one tracked sideband at one power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeObservation {
    pub power_mw: f64,
    pub branch: Branch,
    pub n: i64,
    pub amplitude: f64,
}

/// Free parameters of the amplitude fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandParams {
    pub k_stark_x: f64,
    pub k_stark_y: f64,
    pub rabi_x: f64,
    pub rabi_y: f64,
    pub pl_ratio: f64,
}

impl SidebandParams {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.k_stark_x, self.k_stark_y, self.rabi_x, self.rabi_y, self.pl_ratio]
    }

    pub fn from_slice(p: &[f64]) -> Self {
        Self {
            k_stark_x: p[0],
            k_stark_y: p[1],
            rabi_x: p[2],
            rabi_y: p[3],
            pl_ratio: p[4],
        }
    }

    /// Starting point with every scale at one.
    pub fn unity() -> Self {
        Self::from_slice(&[1.0; 5])
    }

    fn apply(&self, template: &ModelBundle, power_mw: f64) -> ModelBundle {
        let mut b = *template;
        b.drive.power_mw = power_mw;
        b.drive.k_stark_x = self.k_stark_x;
        b.drive.k_stark_y = self.k_stark_y;
        b.laser.rabi_x = self.rabi_x.abs();
        b.laser.rabi_y = self.rabi_y.abs();
        b.shape.pl_ratio = self.pl_ratio.abs();
        b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SidebandFit {
    pub params: SidebandParams,
    pub stderr: Vec<f64>,
    pub covariance: Option<Vec<Vec<f64>>>,
    /// Sum of squared residuals relative to the largest observed amplitude.
    pub cost: f64,
    pub reduced_chi2: f64,
    pub iterations: usize,
    /// Parameters pinned at zero where the Jacobian vanishes.
    pub at_zero: Vec<&'static str>,
}

fn group_by_power(obs: &[AmplitudeObservation]) -> Vec<(f64, Vec<usize>)> {
    let mut groups: BTreeMap<u64, (f64, Vec<usize>)> = BTreeMap::new();
    for (i, o) in obs.iter().enumerate() {
        groups
            .entry(o.power_mw.to_bits())
            .or_insert((o.power_mw, Vec::new()))
            .1
            .push(i);
    }
    let mut out: Vec<_> = groups.into_values().collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// PLE intensity at the center of each tracked sideband.
pub fn predict_amplitudes(
    template: &ModelBundle,
    params: &SidebandParams,
    obs: &[AmplitudeObservation],
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; obs.len()];
    for (power, idx) in group_by_power(obs) {
        let model = PleModel::new(&params.apply(template, power), None)?;
        let ladder = model
            .ladder
            .as_ref()
            .ok_or_else(|| Error::Domain("sideband fit needs a drive (omega_d > 0)".into()))?;
        for i in idx {
            let o = &obs[i];
            let e = ladder.entry(o.branch, o.n).ok_or_else(|| {
                Error::Domain(format!(
                    "sideband {}{} outside the ladder (n_max {})",
                    o.branch.symbol(),
                    o.n,
                    ladder.n_max
                ))
            })?;
            out[i] = model.eval(e.center);
        }
    }
    Ok(out)
}

/// Amplitude table of `tracked` sidebands at each power, from the forward model.
pub fn synthesize_amplitudes(
    template: &ModelBundle,
    params: &SidebandParams,
    powers: &[f64],
    tracked: &[(Branch, i64)],
) -> Result<Vec<AmplitudeObservation>> {
    let mut obs: Vec<AmplitudeObservation> = powers
        .iter()
        .flat_map(|p| {
            tracked.iter().map(move |(branch, n)| AmplitudeObservation {
                power_mw: *p,
                branch: *branch,
                n: *n,
                amplitude: 0.0,
            })
        })
        .collect();
    let amps = predict_amplitudes(template, params, &obs)?;
    for (o, a) in obs.iter_mut().zip(amps) {
        o.amplitude = a;
    }
    Ok(obs)
}

/// Parameters with |value| below this are treated as pinned at zero when the
/// Jacobian column vanishes there.
const ZERO_PIN: f64 = 1e-2;

/// Fit the Stark slopes, optical Rabi frequencies and PL ratio to tracked amplitudes.
///
/// `template` fixes the levels, k_rabi, ω_d and lineshape; its laser, Stark and
/// ratio fields are ignored.
pub fn fit_sideband_amplitudes(
    template: &ModelBundle,
    obs: &[AmplitudeObservation],
    initial: Option<SidebandParams>,
) -> Result<SidebandFit> {
    let groups = group_by_power(obs);
    if obs.len() < 6 || groups.len() < 4 {
        return Err(Error::Domain(format!(
            "sideband fit needs >= 6 tracked peaks across >= 4 powers, got {} peaks at {} powers",
            obs.len(),
            groups.len()
        )));
    }
    if let Some(o) = obs.iter().find(|o| !(o.power_mw > 0.0) || !o.amplitude.is_finite()) {
        return Err(Error::Domain(format!("invalid amplitude observation {o:?}")));
    }
    if !(template.drive.omega_d > 0.0) {
        return Err(Error::Domain("sideband fit needs a drive (omega_d > 0)".into()));
    }
    let scale = obs.iter().map(|o| o.amplitude.abs()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::NoPeak("all tracked amplitudes are zero".into()));
    }
    let x0 = initial.unwrap_or_else(SidebandParams::unity).to_vec();
    let fit = levenberg_marquardt(
        |p| {
            let pred = predict_amplitudes(template, &SidebandParams::from_slice(p), obs)?;
            Ok(pred.iter().zip(obs).map(|(m, o)| (m - o.amplitude) / scale).collect())
        },
        &x0,
        &LmOptions::default(),
    )?;
    let mut at_zero = Vec::new();
    if let Some(k) = fit.rank_deficient {
        if fit.params[k].abs() < ZERO_PIN {
            at_zero.push(PARAM_NAMES[k]);
        } else {
            return Err(Error::Unidentifiable {
                parameter: PARAM_NAMES[k].to_string(),
            });
        }
    }
    let mut params = SidebandParams::from_slice(&fit.params);
    params.rabi_x = params.rabi_x.abs();
    params.rabi_y = params.rabi_y.abs();
    params.pl_ratio = params.pl_ratio.abs();
    Ok(SidebandFit {
        params,
        stderr: fit.stderr.clone(),
        covariance: fit.covariance.clone(),
        cost: fit.cost,
        reduced_chi2: fit.reduced_chi2(),
        iterations: fit.iterations,
        at_zero,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_model, DriveField, LaserField, LevelDiagram, LineshapeParams};

    pub(crate) fn template() -> ModelBundle {
        let drive = DriveField {
            omega_d: 470.0,
            power_mw: 1.0,
            k_rabi: 10.7,
            k_stark_x: 0.0,
            k_stark_y: 0.0,
            k_magnetic: 0.0,
        };
        let shape = LineshapeParams {
            gamma_star: 15.0,
            sigma_x: 20.0,
            sigma_y: 20.0,
            pl_ratio: 1.0,
        };
        validate_model(LevelDiagram::new(2900.0, 0.0), drive, LaserField::new(1.0, 1.0), shape).unwrap()
    }

    fn tracked() -> Vec<(Branch, i64)> {
        (-3..=3).flat_map(|n| [(Branch::Plus, n), (Branch::Minus, n)]).collect()
    }

    const POWERS: [f64; 6] = [100.0, 300.0, 600.0, 1000.0, 1500.0, 2000.0];

    #[test]
    fn zero_stark_leaves_only_carrier_near_zero() {
        let truth = SidebandParams {
            k_stark_x: 0.0,
            k_stark_y: 0.0,
            rabi_x: 11.0,
            rabi_y: 6.3,
            pl_ratio: 3.1,
        };
        let obs = synthesize_amplitudes(&template(), &truth, &POWERS, &tracked()).unwrap();
        let fit = fit_sideband_amplitudes(&template(), &obs, None).unwrap();
        assert!(fit.params.k_stark_x.abs() < 0.5, "{:?}", fit.params);
        assert!(fit.params.k_stark_y.abs() < 0.5, "{:?}", fit.params);
    }

    #[test]
    fn round_trip_from_offset_start() {
        let truth = SidebandParams {
            k_stark_x: 11.7,
            k_stark_y: 19.4,
            rabi_x: 11.0,
            rabi_y: 6.3,
            pl_ratio: 3.1,
        };
        let obs = synthesize_amplitudes(&template(), &truth, &POWERS, &tracked()).unwrap();
        let start = SidebandParams::from_slice(
            &truth
                .to_vec()
                .iter()
                .zip([1.15, 0.85, 0.85, 1.15, 0.85])
                .map(|(a, b)| a * b)
                .collect::<Vec<_>>(),
        );
        let fit = fit_sideband_amplitudes(&template(), &obs, Some(start)).unwrap();
        for (a, b) in fit.params.to_vec().iter().zip(truth.to_vec()) {
            assert!((a - b).abs() < 1e-4 * b, "{:?}", fit.params);
        }
    }

    #[test]
    fn too_few_powers_rejected() {
        let obs = synthesize_amplitudes(&template(), &SidebandParams::unity(), &POWERS[..3], &tracked()).unwrap();
        assert!(fit_sideband_amplitudes(&template(), &obs, None).is_err());
    }

    #[test]
    fn misfixed_rabi_slope_degrades_fit() {
        let truth = SidebandParams {
            k_stark_x: 11.7,
            k_stark_y: 19.4,
            rabi_x: 11.0,
            rabi_y: 6.3,
            pl_ratio: 3.1,
        };
        let obs = synthesize_amplitudes(&template(), &truth, &POWERS, &tracked()).unwrap();
        let mut last = -1.0;
        for f in [1.0, 1.25, 1.5] {
            let mut t = template();
            t.drive.k_rabi *= f;
            let fit = fit_sideband_amplitudes(&t, &obs, Some(truth)).unwrap();
            assert!(fit.cost > last, "k_rabi x{f}: {} <= {last}", fit.cost);
            last = fit.cost;
        }
    }
}
