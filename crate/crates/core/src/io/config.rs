//! Sectioned key–value run configuration with unit-tagged keys.
//!
//! ```ini
//! [model]
//! omega_x_mhz = 2900
//! omega_y_mhz = 0
//! [drive]
//! omega_d_mhz = 2900
//! power_dbm = 30
//! k_rabi_mhz = 15.8
//! ```
//!
//! Every quantity carries its unit in the key: `_mhz` (frequencies and
//! coupling slopes, the latter per √mW), `_mw` or `_dbm` (powers), `_deg`,
//! `_us` and `_kv_m`. Dimensionless keys (`pl_ratio`, `n_max`, `seed`,
//! `tolerance`, `samples`, `model`, `tracked`, `include`) take no suffix.

use std::path::{Path, PathBuf};

use ini::Ini;

use crate::dressed::Branch;
use crate::error::{Error, Result};
use crate::estimation::{PeakModel, SidebandParams};
use crate::io::units::dbm_to_mw;
use crate::model::{validate_model, DriveField, LaserField, LevelDiagram, LineshapeParams, ModelBundle};
use crate::oracle::IntegrationConfig;
use crate::spectra::{linear_grid, MagneticLevel, OdmrModel, ODMR_DEFAULT_INHOM_FWHM};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Number,
    List,
    Text,
}

/// (section, key without suffix, accepted suffixes, kind)
const SCHEMA: &[(&str, &str, &[&str], Kind)] = &[
    ("model", "omega_x", &["_mhz"], Kind::Number),
    ("model", "omega_y", &["_mhz"], Kind::Number),
    ("model", "omega_m", &["_mhz"], Kind::Number),
    ("drive", "omega_d", &["_mhz"], Kind::Number),
    ("drive", "power", &["_mw", "_dbm"], Kind::Number),
    ("drive", "k_rabi", &["_mhz"], Kind::Number),
    ("drive", "k_stark_x", &["_mhz"], Kind::Number),
    ("drive", "k_stark_y", &["_mhz"], Kind::Number),
    ("drive", "k_magnetic", &["_mhz"], Kind::Number),
    ("laser", "rabi_x", &["_mhz"], Kind::Number),
    ("laser", "rabi_y", &["_mhz"], Kind::Number),
    ("lineshape", "gamma_star", &["_mhz"], Kind::Number),
    ("lineshape", "sigma_x", &["_mhz"], Kind::Number),
    ("lineshape", "sigma_y", &["_mhz"], Kind::Number),
    ("lineshape", "pl_ratio", &[""], Kind::Number),
    ("scan", "min", &["_mhz"], Kind::Number),
    ("scan", "max", &["_mhz"], Kind::Number),
    ("scan", "step", &["_mhz"], Kind::Number),
    ("scan", "powers", &["_mw", "_dbm"], Kind::List),
    ("scan", "drive_frequencies", &["_mhz"], Kind::List),
    ("scan", "n_max", &[""], Kind::Number),
    ("odmr", "inhom_fwhm", &["_mhz"], Kind::Number),
    ("odmr", "gamma_star", &["_mhz"], Kind::Number),
    ("odmr", "omega_e1", &["_mhz"], Kind::Number),
    ("odmr", "omega_e2", &["_mhz"], Kind::Number),
    ("odmr", "omega_a1", &["_mhz"], Kind::Number),
    ("odmr", "include", &[""], Kind::Text),
    ("odmr", "root_step", &["_mhz"], Kind::Number),
    ("oracle", "dt", &["_us"], Kind::Number),
    ("oracle", "transient", &["_us"], Kind::Number),
    ("oracle", "average", &["_us"], Kind::Number),
    ("oracle", "max_time", &["_us"], Kind::Number),
    ("oracle", "tolerance", &[""], Kind::Number),
    ("oracle", "drive_phase", &["_deg"], Kind::Number),
    ("fit", "model", &[""], Kind::Text),
    ("fit", "windows", &["_mhz"], Kind::Text),
    ("fit", "tracked", &[""], Kind::Text),
    ("fit", "initial_k_stark_x", &["_mhz"], Kind::Number),
    ("fit", "initial_k_stark_y", &["_mhz"], Kind::Number),
    ("fit", "initial_rabi_x", &["_mhz"], Kind::Number),
    ("fit", "initial_rabi_y", &["_mhz"], Kind::Number),
    ("fit", "initial_pl_ratio", &[""], Kind::Number),
    ("dipole", "splitting", &["_mhz"], Kind::Number),
    ("dipole", "field", &["_kv_m"], Kind::Number),
    ("dipole", "rabi_m", &["_mhz"], Kind::Number),
    ("dipole", "field_parallel", &["_kv_m"], Kind::Number),
    ("dipole", "field_perp", &["_kv_m"], Kind::Number),
    ("dipole", "tilt", &["_deg"], Kind::Number),
    ("dipole", "samples", &[""], Kind::Number),
    ("run", "seed", &[""], Kind::Number),
    ("run", "input", &[""], Kind::Text),
    ("run", "antenna", &[""], Kind::Text),
];

/// One parsed entry, kept in file order for the parameter echo.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub section: String,
    pub key: String,
    pub value: String,
    line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub grid: Option<Vec<f64>>,
    pub powers_mw: Vec<f64>,
    pub drive_frequencies: Vec<f64>,
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub model: PeakModel,
    pub windows: Vec<(f64, f64)>,
    pub tracked: Vec<(Branch, i64)>,
    pub initial: Option<SidebandParams>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleConfig {
    pub splitting_mhz: Option<f64>,
    pub field_kv_m: Option<f64>,
    pub rabi_m_mhz: Option<f64>,
    pub field_parallel_kv_m: Option<f64>,
    pub field_perp_kv_m: Option<f64>,
    pub tilt_deg: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub path: PathBuf,
    bundle: Option<ModelBundle>,
    pub scan: ScanConfig,
    pub oracle: IntegrationConfig,
    pub fit: FitConfig,
    pub dipole: DipoleConfig,
    pub seed: Option<u64>,
    pub input: Option<PathBuf>,
    pub antenna: Option<PathBuf>,
    pub entries: Vec<Entry>,
}

struct Raw<'a> {
    path: &'a Path,
    entries: Vec<Entry>,
}

impl Raw<'_> {
    fn find(&self, section: &str, base: &str) -> Option<(&Entry, &'static str)> {
        let (_, _, suffixes, _) = SCHEMA.iter().find(|(s, b, _, _)| *s == section && *b == base)?;
        self.entries.iter().filter(|e| e.section == section).find_map(|e| {
            suffixes
                .iter()
                .find(|suf| e.key == format!("{base}{suf}"))
                .map(|suf| (e, *suf))
        })
    }

    fn err(&self, e: &Entry, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: e.line,
            message: format!("{}.{}: {}", e.section, e.key, message.into()),
        }
    }

    fn parse_num(&self, e: &Entry, s: &str) -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(e, format!("`{s}` is not a finite number")))
    }

    /// Value in canonical units (mW for powers).
    fn num(&self, section: &str, base: &str) -> Result<Option<f64>> {
        let Some((e, suf)) = self.find(section, base) else {
            return Ok(None);
        };
        let v = self.parse_num(e, &e.value)?;
        Ok(Some(if suf == "_dbm" { dbm_to_mw(v) } else { v }))
    }

    fn list(&self, section: &str, base: &str) -> Result<Vec<f64>> {
        let Some((e, suf)) = self.find(section, base) else {
            return Ok(Vec::new());
        };
        e.value
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                let v = self.parse_num(e, s)?;
                Ok(if suf == "_dbm" { dbm_to_mw(v) } else { v })
            })
            .collect()
    }

    fn text(&self, section: &str, base: &str) -> Option<&Entry> {
        self.find(section, base).map(|(e, _)| e)
    }

    fn count(&self, section: &str, base: &str) -> Result<Option<u64>> {
        let Some((e, _)) = self.find(section, base) else {
            return Ok(None);
        };
        e.value
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| self.err(e, format!("`{}` is not a non-negative integer", e.value)))
    }
}

fn line_of(text: &str, section: Option<&str>, key: &str) -> usize {
    let mut current: Option<String> = None;
    for (i, l) in text.lines().enumerate() {
        let t = l.trim();
        if t.starts_with('[') && t.ends_with(']') {
            current = Some(t[1..t.len() - 1].trim().to_string());
        } else if current.as_deref() == section {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim() == key {
                    return i + 1;
                }
            }
        }
    }
    0
}

fn classify(text: &str, path: &Path, ini: &Ini) -> Result<Vec<Entry>> {
    let mut entries = Vec::new();
    for (section, props) in ini.iter() {
        for (key, value) in props.iter() {
            let line = line_of(text, section, key);
            let parse = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line,
                message,
            };
            let Some(sec) = section else {
                return Err(parse(format!("key `{key}` outside any section")));
            };
            let known = SCHEMA
                .iter()
                .filter(|(s, _, _, _)| *s == sec)
                .find(|(_, base, sufs, _)| sufs.iter().any(|suf| key == format!("{base}{suf}")));
            if known.is_none() {
                if let Some((_, _, sufs, _)) = SCHEMA
                    .iter()
                    .find(|(s, base, sufs, _)| *s == sec && *base == key && !sufs.contains(&""))
                {
                    return Err(Error::UnitTagMissing {
                        key: format!("{sec}.{key}"),
                        expected: sufs[0],
                    });
                }
                if !SCHEMA.iter().any(|(s, _, _, _)| *s == sec) {
                    return Err(parse(format!("unknown section [{sec}]")));
                }
                return Err(parse(format!("unknown key `{key}` in [{sec}]")));
            }
            let base = known.map(|(_, b, _, _)| *b);
            if entries
                .iter()
                .any(|e: &Entry| e.section == sec && base_of(&e.key, sec) == base)
            {
                return Err(parse(format!("quantity `{key}` given twice in [{sec}]")));
            }
            entries.push(Entry {
                section: sec.to_string(),
                key: key.to_string(),
                value: value.to_string(),
                line,
            });
        }
    }
    Ok(entries)
}

fn base_of<'a>(key: &str, section: &str) -> Option<&'a str> {
    SCHEMA
        .iter()
        .filter(|(s, _, _, _)| *s == section)
        .find(|(_, base, sufs, _)| sufs.iter().any(|suf| key == format!("{base}{suf}")))
        .map(|(_, base, _, _)| *base)
}

fn parse_tracked(raw: &Raw, e: &Entry) -> Result<Vec<(Branch, i64)>> {
    e.value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let parsed = s.split_once(':').and_then(|(b, n)| {
                let b = b.trim();
                let branch = b
                    .chars()
                    .next()
                    .filter(|_| b.len() == 1)
                    .and_then(Branch::from_symbol)?;
                Some((branch, n.trim().parse::<i64>().ok()?))
            });
            parsed.ok_or_else(|| raw.err(e, format!("tracked peak `{s}` is not branch:n (e.g. +:0, -:-2)")))
        })
        .collect()
}

fn parse_windows(raw: &Raw, e: &Entry) -> Result<Vec<(f64, f64)>> {
    e.value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (a, b) = s
                .split_once(':')
                .ok_or_else(|| raw.err(e, format!("window `{s}` is not lo:hi")))?;
            let (a, b) = (raw.parse_num(e, a)?, raw.parse_num(e, b)?);
            if a < b {
                Ok((a, b))
            } else {
                Err(raw.err(e, format!("window `{s}` needs lo < hi")))
            }
        })
        .collect()
}

fn parse_model(raw: &Raw) -> Result<ModelBundle> {
    let omega_x = raw
        .num("model", "omega_x")?
        .ok_or_else(|| Error::MissingKey("model.omega_x_mhz".into()))?;
    let omega_y = raw
        .num("model", "omega_y")?
        .ok_or_else(|| Error::MissingKey("model.omega_y_mhz".into()))?;
    let mut levels = LevelDiagram::new(omega_x, omega_y);
    if let Some(m) = raw.num("model", "omega_m")? {
        levels = levels.with_magnetic(m);
    }
    let mut drive = DriveField::undriven(raw.num("drive", "omega_d")?.unwrap_or(0.0));
    drive.power_mw = raw.num("drive", "power")?.unwrap_or(0.0);
    drive.k_rabi = raw.num("drive", "k_rabi")?.unwrap_or(0.0);
    drive.k_stark_x = raw.num("drive", "k_stark_x")?.unwrap_or(0.0);
    drive.k_stark_y = raw.num("drive", "k_stark_y")?.unwrap_or(0.0);
    drive.k_magnetic = raw.num("drive", "k_magnetic")?.unwrap_or(0.0);
    let laser = LaserField::new(
        raw.num("laser", "rabi_x")?.unwrap_or(1.0),
        raw.num("laser", "rabi_y")?.unwrap_or(1.0),
    );
    let d = LineshapeParams::default();
    let shape = LineshapeParams {
        gamma_star: raw.num("lineshape", "gamma_star")?.unwrap_or(d.gamma_star),
        sigma_x: raw.num("lineshape", "sigma_x")?.unwrap_or(d.sigma_x),
        sigma_y: raw.num("lineshape", "sigma_y")?.unwrap_or(d.sigma_y),
        pl_ratio: raw.num("lineshape", "pl_ratio")?.unwrap_or(d.pl_ratio),
    };
    validate_model(levels, drive, laser, shape)
}

/// Parse a configuration held in memory; `path` is used for messages and relative paths.
pub fn parse_config(text: &str, path: &Path) -> Result<RunConfig> {
    let ini = Ini::load_from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line,
        message: e.msg.to_string(),
    })?;
    let raw = Raw {
        path,
        entries: classify(text, path, &ini)?,
    };

    let has_model = raw.entries.iter().any(|e| e.section != "dipole" && e.section != "run");
    let bundle = if has_model { Some(parse_model(&raw)?) } else { None };

    let grid = match (
        raw.num("scan", "min")?,
        raw.num("scan", "max")?,
        raw.num("scan", "step")?,
    ) {
        (Some(a), Some(b), Some(s)) => Some(linear_grid(a, b, s)?),
        (None, None, None) => None,
        _ => {
            return Err(Error::MissingKey(
                "scan.min_mhz, scan.max_mhz and scan.step_mhz together".into(),
            ))
        }
    };
    let scan = ScanConfig {
        grid,
        powers_mw: raw.list("scan", "powers")?,
        drive_frequencies: raw.list("scan", "drive_frequencies")?,
        n_max: raw.count("scan", "n_max")?.map(|v| v as usize),
    };

    let mut oracle = IntegrationConfig::default();
    oracle.dt = raw.num("oracle", "dt")?;
    oracle.t_transient = raw.num("oracle", "transient")?;
    oracle.t_average = raw.num("oracle", "average")?;
    oracle.t_max = raw.num("oracle", "max_time")?;
    if let Some(t) = raw.num("oracle", "tolerance")? {
        oracle.tolerance = t;
    }
    oracle.drive_phase = raw.num("oracle", "drive_phase")?.unwrap_or(0.0).to_radians();

    let model = match raw.text("fit", "model") {
        Some(e) => PeakModel::from_tag(&e.value).map_err(|err| raw.err(e, err.to_string()))?,
        None => PeakModel::Lorentzian,
    };
    let windows = match raw.text("fit", "windows") {
        Some(e) => parse_windows(&raw, e)?,
        None => Vec::new(),
    };
    let tracked = match raw.text("fit", "tracked") {
        Some(e) => parse_tracked(&raw, e)?,
        None => Vec::new(),
    };
    let initial = {
        let v = [
            raw.num("fit", "initial_k_stark_x")?,
            raw.num("fit", "initial_k_stark_y")?,
            raw.num("fit", "initial_rabi_x")?,
            raw.num("fit", "initial_rabi_y")?,
            raw.num("fit", "initial_pl_ratio")?,
        ];
        if v.iter().all(Option::is_none) {
            None
        } else {
            let u = SidebandParams::unity().to_vec();
            let p: Vec<f64> = v.iter().zip(u).map(|(a, b)| a.unwrap_or(b)).collect();
            Some(SidebandParams::from_slice(&p))
        }
    };

    let dipole = DipoleConfig {
        splitting_mhz: raw.num("dipole", "splitting")?,
        field_kv_m: raw.num("dipole", "field")?,
        rabi_m_mhz: raw.num("dipole", "rabi_m")?,
        field_parallel_kv_m: raw.num("dipole", "field_parallel")?,
        field_perp_kv_m: raw.num("dipole", "field_perp")?,
        tilt_deg: raw.num("dipole", "tilt")?.unwrap_or(25.0),
        samples: raw.count("dipole", "samples")?.unwrap_or(0) as usize,
    };

    let dir = path.parent().unwrap_or(Path::new("."));
    let rel = |e: Option<&Entry>| e.map(|e| dir.join(e.value.trim()));
    Ok(RunConfig {
        path: path.to_path_buf(),
        bundle,
        scan,
        oracle,
        fit: FitConfig {
            model,
            windows,
            tracked,
            initial,
        },
        dipole,
        seed: raw.count("run", "seed")?,
        input: rel(raw.text("run", "input")),
        antenna: rel(raw.text("run", "antenna")),
        entries: raw.entries,
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, path)
}

impl RunConfig {
    fn entry(&self, section: &str, base: &str) -> Option<&Entry> {
        self.entries
            .iter()
            .find(|e| e.section == section && base_of(&e.key, section) == Some(base))
    }

    fn raw_num(&self, section: &str, base: &str) -> Result<Option<f64>> {
        match self.entry(section, base) {
            Some(e) => Raw {
                path: &self.path,
                entries: Vec::new(),
            }
            .parse_num(e, &e.value)
            .map(Some),
            None => Ok(None),
        }
    }

    /// ODMR model from `[odmr]`, falling back to `model.omega_m_mhz`.
    pub fn odmr_model(&self) -> Result<OdmrModel> {
        let labelled = [("e1", "omega_e1"), ("e2", "omega_e2"), ("a1", "omega_a1")];
        let include: Option<Vec<String>> = self.entry("odmr", "include").map(|e| {
            e.value
                .split(',')
                .map(|s| s.trim().to_ascii_lowercase())
                .filter(|s| !s.is_empty())
                .collect()
        });
        let mut magnetic = Vec::new();
        for (tag, base) in labelled {
            if let Some(v) = self.raw_num("odmr", base)? {
                if include.as_ref().is_none_or(|inc| inc.iter().any(|t| t == tag)) {
                    magnetic.push(MagneticLevel::new(tag.to_ascii_uppercase(), v));
                }
            }
        }
        let bundle = self.bundle()?;
        let levels = bundle.levels;
        let mut model = if magnetic.is_empty() {
            if levels.omega_m.is_none() {
                return Err(Error::MissingKey("model.omega_m_mhz".into()));
            }
            OdmrModel::new(levels, bundle.drive.k_magnetic)?
        } else {
            OdmrModel::with_levels(levels, magnetic, bundle.drive.k_magnetic)?
        };
        model.inhom_width = self.raw_num("odmr", "inhom_fwhm")?.unwrap_or(ODMR_DEFAULT_INHOM_FWHM);
        if let Some(g) = self.raw_num("odmr", "gamma_star")? {
            model.gamma_star = g;
        }
        if model.inhom_width < 0.0 || model.gamma_star < 0.0 {
            return Err(Error::Domain("odmr widths must be >= 0".into()));
        }
        Ok(model)
    }

    /// The model bundle; every command except the dipole estimates needs one.
    pub fn bundle(&self) -> Result<&ModelBundle> {
        self.bundle
            .as_ref()
            .ok_or_else(|| Error::MissingKey("model.omega_x_mhz".into()))
    }

    pub fn odmr_root_step(&self) -> Result<f64> {
        Ok(self.raw_num("odmr", "root_step")?.unwrap_or(1.0))
    }

    pub fn require_grid(&self) -> Result<&[f64]> {
        self.scan
            .grid
            .as_deref()
            .ok_or_else(|| Error::MissingKey("scan.min_mhz / scan.max_mhz / scan.step_mhz".into()))
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::MissingKey("run.seed".into()))
    }

    /// Canonical INI text of every entry, for the parameter sidecar.
    pub fn to_ini(&self, extra: &[(&str, String)]) -> String {
        let mut out = String::new();
        let mut sections: Vec<&str> = Vec::new();
        for e in &self.entries {
            if !sections.contains(&e.section.as_str()) {
                sections.push(&e.section);
            }
        }
        if !extra.is_empty() && !sections.contains(&"run") {
            sections.push("run");
        }
        for s in sections {
            out.push_str(&format!("[{s}]\n"));
            for e in self.entries.iter().filter(|e| e.section == s) {
                if s == "run" && extra.iter().any(|(k, _)| *k == e.key) {
                    continue;
                }
                out.push_str(&format!("{} = {}\n", e.key, e.value));
            }
            if s == "run" {
                for (k, v) in extra {
                    out.push_str(&format!("{k} = {v}\n"));
                }
            }
            out.push('\n');
        }
        out
    }
}
