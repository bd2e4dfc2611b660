use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    /// Piecewise linear in dBm between table points.
    #[default]
    LinearDb,
}

impl Interpolation {
    pub fn tag(self) -> &'static str {
        match self {
            Interpolation::LinearDb => "linear-db",
        }
    }
}

/// Delivered microwave power versus drive frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaResponse {
    frequency_mhz: Vec<f64>,
    power_dbm: Vec<f64>,
    pub interpolation: Interpolation,
}

impl AntennaResponse {
    pub fn new(frequency_mhz: Vec<f64>, power_dbm: Vec<f64>) -> Result<Self> {
        if frequency_mhz.is_empty() {
            return Err(Error::Domain("antenna table is empty".into()));
        }
        if frequency_mhz.len() != power_dbm.len() {
            return Err(Error::Domain("antenna table columns differ in length".into()));
        }
        if frequency_mhz.iter().chain(&power_dbm).any(|v| !v.is_finite()) {
            return Err(Error::Domain("antenna table contains non-finite values".into()));
        }
        if frequency_mhz.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Domain("antenna frequencies must be strictly increasing".into()));
        }
        Ok(Self {
            frequency_mhz,
            power_dbm,
            interpolation: Interpolation::LinearDb,
        })
    }

    /// Constant response over `[lo, hi]`.
    pub fn flat(lo: f64, hi: f64, dbm: f64) -> Result<Self> {
        Self::new(vec![lo, hi], vec![dbm, dbm])
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequency_mhz
    }

    pub fn powers_dbm(&self) -> &[f64] {
        &self.power_dbm
    }

    pub fn range(&self) -> (f64, f64) {
        (self.frequency_mhz[0], *self.frequency_mhz.last().unwrap())
    }

    pub fn max_dbm(&self) -> f64 {
        self.power_dbm.iter().copied().fold(f64::MIN, f64::max)
    }

    /// Interpolated delivered power; queries outside the table are refused.
    pub fn delivered_dbm(&self, f: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(f >= lo && f <= hi) {
            return Err(Error::Domain(format!(
                "drive frequency {f} MHz outside antenna table [{lo}, {hi}] MHz"
            )));
        }
        let x = &self.frequency_mhz;
        let i = x.partition_point(|v| *v <= f);
        if i == x.len() {
            return Ok(self.power_dbm[x.len() - 1]);
        }
        let (x0, x1) = (x[i - 1], x[i]);
        let (y0, y1) = (self.power_dbm[i - 1], self.power_dbm[i]);
        Ok(y0 + (y1 - y0) * (f - x0) / (x1 - x0))
    }

    /// Power delivered at `f` relative to the best-coupled frequency of the table, linear.
    pub fn relative_power(&self, f: f64) -> Result<f64> {
        Ok(10f64.powf((self.delivered_dbm(f)? - self.max_dbm()) / 10.0))
    }

    /// Configured power corrected for the response at `f`.
    pub fn corrected_power(&self, power_mw: f64, f: f64) -> Result<f64> {
        Ok(power_mw * self.relative_power(f)?)
    }
}
