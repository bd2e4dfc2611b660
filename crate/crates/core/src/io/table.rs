//! Delimited input tables. Lines starting with `#` are comments, so spectra
//! written by this crate read back directly.

use std::path::Path;

use crate::dressed::Branch;
use crate::error::{Error, Result};
use crate::estimation::{AmplitudeObservation, DipoleRow, DipoleVector};
use crate::io::units::{dbm_to_mw, mw_to_dbm};
use crate::spectra::{AntennaResponse, Spectrum, SpectrumKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableSchema {
    /// `frequency_mhz, power_dbm` (or `power_mw`).
    Antenna,
    /// `frequency_mhz, counts` (or `intensity`).
    Spectrum,
    /// `power_mw` (or `power_dbm`), `splitting_mhz`.
    PowerSeries,
    /// `power_mw` (or `power_dbm`), `branch`, `n`, `amplitude`.
    Amplitudes,
    /// `strain, dpy_x, dpy_y, dpy_z, dpx_x, dpx_y, dpx_z, mu_x, mu_y, mu_z`.
    Dipoles,
}

#[derive(Debug, Clone)]
pub enum Table {
    Antenna(AntennaResponse),
    Spectrum(Spectrum),
    PowerSeries(Vec<(f64, f64)>),
    Amplitudes(Vec<AmplitudeObservation>),
    Dipoles(Vec<DipoleRow>),
}

struct Rows {
    header: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

fn table_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Table {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn read_rows(path: &Path) -> Result<Rows> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| table_err(path, e.to_string()))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| table_err(path, e.to_string()))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| table_err(path, e.to_string()))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(Rows { header, rows })
}

fn expect_header(path: &Path, rows: &Rows, options: &[&[&str]]) -> Result<Vec<usize>> {
    if rows.header.len() != options.len() {
        return Err(table_err(
            path,
            format!("expected {} columns, header has {}", options.len(), rows.header.len()),
        ));
    }
    options
        .iter()
        .zip(&rows.header)
        .map(|(opts, h)| {
            opts.iter()
                .position(|o| o == h)
                .ok_or_else(|| table_err(path, format!("column `{h}` should be one of {}", opts.join(" | "))))
        })
        .collect()
}

fn cell(path: &Path, line: usize, s: &str) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(table_err(path, format!("line {line}: `{s}` is not a finite number"))),
    }
}

fn numeric(path: &Path, rows: &Rows) -> Result<Vec<Vec<f64>>> {
    rows.rows
        .iter()
        .map(|(line, r)| r.iter().map(|s| cell(path, *line, s)).collect())
        .collect()
}

fn check_monotone(path: &Path, rows: &Rows, axis: &[f64]) -> Result<()> {
    for (k, w) in axis.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(table_err(
                path,
                format!(
                    "line {}: axis not strictly increasing ({} after {})",
                    rows.rows[k + 1].0,
                    w[1],
                    w[0]
                ),
            ));
        }
    }
    Ok(())
}

pub fn load_table(path: &Path, schema: TableSchema) -> Result<Table> {
    let rows = read_rows(path)?;
    let local = |e: Error| match e {
        Error::Domain(m) => table_err(path, m),
        other => other,
    };
    match schema {
        TableSchema::Antenna => {
            let units = expect_header(path, &rows, &[&["frequency_mhz"], &["power_dbm", "power_mw"]])?;
            let v = numeric(path, &rows)?;
            let f: Vec<f64> = v.iter().map(|r| r[0]).collect();
            check_monotone(path, &rows, &f)?;
            let p: Vec<f64> = v
                .iter()
                .map(|r| if units[1] == 1 { mw_to_dbm(r[1]) } else { r[1] })
                .collect();
            Ok(Table::Antenna(AntennaResponse::new(f, p).map_err(local)?))
        }
        TableSchema::Spectrum => {
            expect_header(path, &rows, &[&["frequency_mhz"], &["counts", "intensity"]])?;
            let v = numeric(path, &rows)?;
            let f: Vec<f64> = v.iter().map(|r| r[0]).collect();
            check_monotone(path, &rows, &f)?;
            let y = v.iter().map(|r| r[1]).collect();
            Ok(Table::Spectrum(Spectrum::new(SpectrumKind::Ple, f, y).map_err(local)?))
        }
        TableSchema::PowerSeries => {
            let units = expect_header(path, &rows, &[&["power_mw", "power_dbm"], &["splitting_mhz"]])?;
            let v = numeric(path, &rows)?;
            Ok(Table::PowerSeries(
                v.iter()
                    .map(|r| (if units[0] == 1 { dbm_to_mw(r[0]) } else { r[0] }, r[1]))
                    .collect(),
            ))
        }
        TableSchema::Amplitudes => {
            let units = expect_header(
                path,
                &rows,
                &[&["power_mw", "power_dbm"], &["branch"], &["n"], &["amplitude"]],
            )?;
            rows.rows
                .iter()
                .map(|(line, r)| {
                    let p = cell(path, *line, &r[0])?;
                    let branch = r[1]
                        .chars()
                        .next()
                        .filter(|_| r[1].len() == 1)
                        .and_then(Branch::from_symbol)
                        .ok_or_else(|| table_err(path, format!("line {line}: branch `{}` is not + or -", r[1])))?;
                    let n = r[2]
                        .parse::<i64>()
                        .map_err(|_| table_err(path, format!("line {line}: `{}` is not an integer", r[2])))?;
                    Ok(AmplitudeObservation {
                        power_mw: if units[0] == 1 { dbm_to_mw(p) } else { p },
                        branch,
                        n,
                        amplitude: cell(path, *line, &r[3])?,
                    })
                })
                .collect::<Result<_>>()
                .map(Table::Amplitudes)
        }
        TableSchema::Dipoles => {
            let names = [
                "strain", "dpy_x", "dpy_y", "dpy_z", "dpx_x", "dpx_y", "dpx_z", "mu_x", "mu_y", "mu_z",
            ];
            let opts: Vec<&[&str]> = names.iter().map(std::slice::from_ref).collect();
            expect_header(path, &rows, &opts)?;
            let v = numeric(path, &rows)?;
            Ok(Table::Dipoles(
                v.iter()
                    .map(|r| DipoleRow {
                        strain: r[0],
                        delta_p_y: DipoleVector::new(r[1], r[2], r[3]),
                        delta_p_x: DipoleVector::new(r[4], r[5], r[6]),
                        transition: DipoleVector::new(r[7], r[8], r[9]),
                    })
                    .collect(),
            ))
        }
    }
}

pub fn load_antenna(path: &Path) -> Result<AntennaResponse> {
    match load_table(path, TableSchema::Antenna)? {
        Table::Antenna(a) => Ok(a),
        _ => unreachable!(),
    }
}

pub fn load_spectrum(path: &Path) -> Result<Spectrum> {
    match load_table(path, TableSchema::Spectrum)? {
        Table::Spectrum(s) => Ok(s),
        _ => unreachable!(),
    }
}

pub fn load_power_series(path: &Path) -> Result<Vec<(f64, f64)>> {
    match load_table(path, TableSchema::PowerSeries)? {
        Table::PowerSeries(s) => Ok(s),
        _ => unreachable!(),
    }
}

pub fn load_amplitudes(path: &Path) -> Result<Vec<AmplitudeObservation>> {
    match load_table(path, TableSchema::Amplitudes)? {
        Table::Amplitudes(s) => Ok(s),
        _ => unreachable!(),
    }
}

pub fn load_dipoles(path: &Path) -> Result<Vec<DipoleRow>> {
    match load_table(path, TableSchema::Dipoles)? {
        Table::Dipoles(s) => Ok(s),
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn antenna_table() {
        let f = file("frequency_mhz,power_dbm\n100,20\n200,25\n300,22\n");
        let a = load_antenna(f.path()).unwrap();
        assert_eq!(a.range(), (100.0, 300.0));
        assert_eq!(a.max_dbm(), 25.0);
    }

    #[test]
    fn spectrum_table_with_comments() {
        let f = file("# kind=ple\nfrequency_mhz,counts\n-1,0.5\n0,2\n1,0.5\n");
        let s = load_spectrum(f.path()).unwrap();
        assert_eq!(s.axis, vec![-1.0, 0.0, 1.0]);
        assert_eq!(s.intensity[1], 2.0);
    }

    #[test]
    fn shuffled_and_nan_rejected() {
        let f = file("frequency_mhz,counts\n0,1\n2,1\n1,1\n");
        assert!(matches!(load_spectrum(f.path()), Err(Error::Table { .. })));
        let f = file("frequency_mhz,counts\n0,1\n1,NaN\n");
        assert!(matches!(load_spectrum(f.path()), Err(Error::Table { .. })));
        let f = file("freq,counts\n0,1\n");
        assert!(matches!(load_spectrum(f.path()), Err(Error::Table { .. })));
    }

    #[test]
    fn amplitude_and_dipole_tables() {
        let f = file("power_dbm,branch,n,amplitude\n30,+,0,0.1\n30,-,-2,0.01\n");
        let a = load_amplitudes(f.path()).unwrap();
        assert!((a[0].power_mw - 1000.0).abs() < 1e-9);
        assert_eq!((a[1].branch, a[1].n), (Branch::Minus, -2));
        let f = file("strain,dpy_x,dpy_y,dpy_z,dpx_x,dpx_y,dpx_z,mu_x,mu_y,mu_z\n2,0.23,-2.10,1.63,-0.23,2.10,1.63,-0.13,-0.93,1.99\n");
        let d = load_dipoles(f.path()).unwrap();
        assert_eq!(d[0].transition.z, 1.99);
    }
}
