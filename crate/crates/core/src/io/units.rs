//! The single place where logarithmic power enters the library.

/// 10^(dBm/10).
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// 10·log₁₀(mW).
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn thirty_dbm_is_one_watt() {
        assert!((dbm_to_mw(30.0) - 1000.0).abs() < 1e-9);
        assert_eq!(mw_to_dbm(1.0), 0.0);
    }

    proptest! {
        #[test]
        fn round_trip(dbm in -60.0f64..60.0) {
            let back = mw_to_dbm(dbm_to_mw(dbm));
            prop_assert!((back - dbm).abs() <= 1e-12 * dbm.abs().max(1.0));
        }
    }
}
