//! Configuration, input tables, unit conversion and result serialization.

pub mod config;
pub mod output;
pub mod table;
pub mod units;

pub use config::{load_config, parse_config, DipoleConfig, FitConfig, RunConfig, ScanConfig};
pub use output::{sidecar_path, spectrum_report, sweep_report, write_artifacts, Cell, Report};
pub use table::{
    load_amplitudes, load_antenna, load_dipoles, load_power_series, load_spectrum, load_table, Table, TableSchema,
};
pub use units::{dbm_to_mw, mw_to_dbm};
