//! Bit-stable text output: `# key=value` echo lines, a header row, then
//! comma-separated rows with nine significant digits.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::spectra::Spectrum;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

pub fn fmt_num(v: f64) -> String {
    format!("{v:.8e}")
}

/// A delimited table with its echo header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub echo: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn echo(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.echo.push((key.into(), value.to_string()));
        self
    }

    pub fn row(&mut self, cells: Vec<Cell>) -> &mut Self {
        self.rows.push(cells);
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.echo {
            let _ = writeln!(out, "# {k}={v}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for r in &self.rows {
            let cells: Vec<String> = r
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => fmt_num(*v),
                    Cell::Int(v) => v.to_string(),
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// Two-column report of a spectrum, echoing its parameters and warnings.
pub fn spectrum_report(s: &Spectrum) -> Report {
    let mut r = Report::new(&["frequency_mhz", "intensity"]);
    r.echo("kind", s.kind.tag());
    for (k, v) in &s.params_echo {
        r.echo(k.clone(), v);
    }
    for w in &s.warnings {
        r.echo("warning", w);
    }
    for (x, y) in s.axis.iter().zip(&s.intensity) {
        r.row(vec![Cell::Num(*x), Cell::Num(*y)]);
    }
    r
}

/// Long-format report of a family of spectra labelled by `label`.
pub fn sweep_report(label: &str, members: &[(f64, Spectrum)]) -> Report {
    let mut r = Report::new(&[label, "frequency_mhz", "intensity"]);
    if let Some((_, first)) = members.first() {
        r.echo("kind", first.kind.tag());
        for (k, v) in &first.params_echo {
            if k != label {
                r.echo(k.clone(), v);
            }
        }
    }
    r.echo("members", members.len());
    for (v, s) in members {
        for w in &s.warnings {
            r.echo("warning", format!("{label}={v}: {w}"));
        }
        for (x, y) in s.axis.iter().zip(&s.intensity) {
            r.row(vec![Cell::Num(*v), Cell::Num(*x), Cell::Num(*y)]);
        }
    }
    r
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".params.ini");
    PathBuf::from(s)
}

/// Write `body` to `out` and `sidecar` next to it, refusing to replace
/// either unless `overwrite` is set.
pub fn write_artifacts(out: &Path, body: &str, sidecar: &str, overwrite: bool) -> Result<()> {
    let side = sidecar_path(out);
    if !overwrite {
        for p in [out, side.as_path()] {
            if p.exists() {
                return Err(Error::OutputExists(p.to_path_buf()));
            }
        }
    }
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(out, body)?;
    std::fs::write(side, sidecar)?;
    Ok(())
}
