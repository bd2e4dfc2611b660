//! Splitting against drive power.

use crate::error::{Error, Result};

/// Slope of splitting = k·√P through the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSlope {
    /// MHz/√mW.
    pub slope: f64,
    pub stderr: f64,
    pub residuals: Vec<f64>,
}

/// Least-squares slope through the origin of `splitting` against `√power`.
pub fn fit_splitting_vs_power(samples: &[(f64, f64)]) -> Result<PowerSlope> {
    if samples.len() < 3 {
        return Err(Error::Domain(format!(
            "power regression needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    if let Some((p, s)) = samples
        .iter()
        .find(|(p, s)| !(*p > 0.0) || !p.is_finite() || !s.is_finite())
    {
        return Err(Error::Domain(format!(
            "powers must be > 0 and values finite, got ({p}, {s})"
        )));
    }
    let sxx: f64 = samples.iter().map(|(p, _)| p).sum();
    let sxy: f64 = samples.iter().map(|(p, s)| p.sqrt() * s).sum();
    let slope = sxy / sxx;
    let residuals: Vec<f64> = samples.iter().map(|(p, s)| s - slope * p.sqrt()).collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let stderr = (rss / (samples.len() - 1) as f64 / sxx).sqrt();
    Ok(PowerSlope {
        slope,
        stderr,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn recovers_slope() {
        let d: Vec<(f64, f64)> = [10.0f64, 50.0, 200.0, 800.0]
            .iter()
            .map(|p| (*p, 10.7 * p.sqrt()))
            .collect();
        let f = fit_splitting_vs_power(&d).unwrap();
        assert!((f.slope - 10.7).abs() < 1e-12);
        let z: Vec<(f64, f64)> = d.iter().map(|(p, _)| (*p, 0.0)).collect();
        assert_eq!(fit_splitting_vs_power(&z).unwrap().slope, 0.0);
        assert!(fit_splitting_vs_power(&d[..2]).is_err());
    }

    proptest! {
        #[test]
        fn unit_relabel_scales_by_sqrt_1000(k in 1.0f64..30.0, noise in proptest::collection::vec(-1.0f64..1.0, 5)) {
            let powers = [20.0f64, 90.0, 300.0, 700.0, 1500.0];
            let mw: Vec<(f64, f64)> = powers.iter().zip(&noise).map(|(p, n)| (*p, k * p.sqrt() + n)).collect();
            let w: Vec<(f64, f64)> = mw.iter().map(|(p, s)| (p / 1000.0, *s)).collect();
            let a = fit_splitting_vs_power(&mw).unwrap();
            let b = fit_splitting_vs_power(&w).unwrap();
            prop_assert!((b.slope - a.slope * 1000f64.sqrt()).abs() <= 1e-12 * b.slope.abs());
        }
    }
}
