//! Command-line front end. Each subcommand writes a delimited result and a
//! `<out>.params.ini` sidecar that reproduces it when passed back as `--config`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::{
    dipole_from_splitting, field_from_magnetic_rabi, find_peaks, fit_peak, fit_sideband_amplitudes,
    fit_splitting_vs_power, orientation_spread, row_geometry, DipoleGeometry, PeakWidth,
};
use crate::io::{
    load_amplitudes, load_antenna, load_config, load_dipoles, load_power_series, load_spectrum, spectrum_report,
    sweep_report, write_artifacts, Cell, Report, RunConfig,
};
use crate::oracle::steady_state_scan;
use crate::spectra::{
    mw_frequency_sweep, odmr_resonance_roots, power_sweep_ple, simulate_odmr, simulate_ple, AntennaResponse, PleModel,
};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "NVDRESS_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "nvdress", version, about = "Dressed-state PLE/ODMR simulation and fitting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Run configuration (INI with unit-suffixed keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input table; overrides `run.input`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Antenna response table (frequency_mhz, power_dbm); overrides `run.antenna`.
    #[arg(long)]
    pub antenna: Option<PathBuf>,
    /// Output file; the sidecar goes to `<out>.params.ini`.
    #[arg(long)]
    pub out: PathBuf,
    /// Replace existing output files.
    #[arg(long)]
    pub overwrite: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// PLE spectrum on the scan grid.
    SimulatePle(Common),
    /// ODMR spectrum over drive frequency on the scan grid.
    SimulateOdmr(Common),
    /// PLE spectra at each `scan.powers_*`.
    SweepPower(Common),
    /// PLE spectra at each `scan.drive_frequencies_mhz`.
    SweepMw(Common),
    /// Fit one peak per `fit.windows_mhz` window of a measured spectrum.
    FitPeaks(Common),
    /// Regress splitting against √power.
    FitPowerSeries(Common),
    /// Joint fit of tracked sideband amplitudes.
    FitSidebands(Common),
    /// Dipole moment and microwave field from `[dipole]`.
    EstimateDipole(Common),
    /// Magnitudes, projections and angles of computed dipole vectors.
    DipoleGeometry(Common),
    /// Compare the master-equation oracle with the closed-form spectrum.
    OracleValidate(Common),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SimulatePle(_) => "simulate-ple",
            Command::SimulateOdmr(_) => "simulate-odmr",
            Command::SweepPower(_) => "sweep-power",
            Command::SweepMw(_) => "sweep-mw",
            Command::FitPeaks(_) => "fit-peaks",
            Command::FitPowerSeries(_) => "fit-power-series",
            Command::FitSidebands(_) => "fit-sidebands",
            Command::EstimateDipole(_) => "estimate-dipole",
            Command::DipoleGeometry(_) => "dipole-geometry",
            Command::OracleValidate(_) => "oracle-validate",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::SimulatePle(c)
            | Command::SimulateOdmr(c)
            | Command::SweepPower(c)
            | Command::SweepMw(c)
            | Command::FitPeaks(c)
            | Command::FitPowerSeries(c)
            | Command::FitSidebands(c)
            | Command::EstimateDipole(c)
            | Command::DipoleGeometry(c)
            | Command::OracleValidate(c) => c,
        }
    }
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub out: PathBuf,
    /// Set when a numerical step finished without meeting its tolerance.
    pub non_converged: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.non_converged {
            3
        } else {
            0
        }
    }
}

struct Ctx<'a> {
    cfg: Option<RunConfig>,
    common: &'a Common,
}

impl Ctx<'_> {
    fn cfg(&self) -> Result<&RunConfig> {
        self.cfg.as_ref().ok_or_else(|| Error::MissingKey("--config".into()))
    }

    fn input(&self) -> Result<PathBuf> {
        self.common
            .input
            .clone()
            .or_else(|| self.cfg.as_ref().and_then(|c| c.input.clone()))
            .ok_or_else(|| Error::MissingKey("--input or run.input".into()))
    }

    fn antenna_path(&self) -> Option<PathBuf> {
        self.common
            .antenna
            .clone()
            .or_else(|| self.cfg.as_ref().and_then(|c| c.antenna.clone()))
    }

    fn antenna(&self) -> Result<Option<AntennaResponse>> {
        self.antenna_path().map(|p| load_antenna(&p)).transpose()
    }

    fn sidecar(&self, command: &str) -> String {
        let abs = |p: &Path| {
            std::path::absolute(p)
                .unwrap_or_else(|_| p.to_path_buf())
                .display()
                .to_string()
        };
        let mut extra = Vec::new();
        if let Ok(p) = self.input() {
            extra.push(("input", abs(&p)));
        }
        if let Some(p) = self.antenna_path() {
            extra.push(("antenna", abs(&p)));
        }
        let body = match &self.cfg {
            Some(c) => c.to_ini(&extra),
            None => {
                let mut s = String::from("[run]\n");
                for (k, v) in &extra {
                    s.push_str(&format!("{k} = {v}\n"));
                }
                s
            }
        };
        format!("# command={command}\n{body}")
    }
}

fn configure_workers() {
    if let Some(n) = std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        if n > 0 {
            // a pool built earlier in the process wins
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Execute one subcommand.
pub fn run(command: &Command) -> Result<Outcome> {
    configure_workers();
    let common = command.common();
    let cfg = common.config.as_deref().map(load_config).transpose()?;
    let ctx = Ctx { cfg, common };
    let (report, non_converged) = match command {
        Command::SimulatePle(_) => (simulate_ple_cmd(&ctx)?, false),
        Command::SimulateOdmr(_) => (simulate_odmr_cmd(&ctx)?, false),
        Command::SweepPower(_) => (sweep_power_cmd(&ctx)?, false),
        Command::SweepMw(_) => (sweep_mw_cmd(&ctx)?, false),
        Command::FitPeaks(_) => (fit_peaks_cmd(&ctx)?, false),
        Command::FitPowerSeries(_) => (fit_power_series_cmd(&ctx)?, false),
        Command::FitSidebands(_) => (fit_sidebands_cmd(&ctx)?, false),
        Command::EstimateDipole(_) => (estimate_dipole_cmd(&ctx)?, false),
        Command::DipoleGeometry(_) => (dipole_geometry_cmd(&ctx)?, false),
        Command::OracleValidate(_) => oracle_validate_cmd(&ctx)?,
    };
    let mut report = report;
    report.echo.insert(0, ("command".into(), command.name().into()));
    write_artifacts(
        &common.out,
        &report.render(),
        &ctx.sidecar(command.name()),
        common.overwrite,
    )?;
    Ok(Outcome {
        out: common.out.clone(),
        non_converged,
    })
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli.command) {
        Ok(o) => {
            if o.non_converged {
                log::error!("{}: result written but not converged", o.out.display());
            }
            o.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn simulate_ple_cmd(ctx: &Ctx) -> Result<Report> {
    let c = ctx.cfg()?;
    let s = simulate_ple(c.bundle()?, c.require_grid()?, c.scan.n_max)?;
    Ok(spectrum_report(&s))
}

fn simulate_odmr_cmd(ctx: &Ctx) -> Result<Report> {
    let c = ctx.cfg()?;
    let grid = c.require_grid()?;
    let model = c.odmr_model()?;
    let antenna = ctx.antenna()?;
    let s = simulate_odmr(&model, &c.bundle()?.drive, grid, antenna.as_ref())?;
    let mut r = spectrum_report(&s);
    let roots = odmr_resonance_roots(
        &model,
        &c.bundle()?.drive,
        antenna.as_ref(),
        grid[0],
        grid[grid.len() - 1],
        c.odmr_root_step()?,
    )?;
    for root in roots {
        r.echo(
            "resonance",
            format!(
                "{} {:?}{} omega_d_mhz={} splitting_mhz={}",
                root.level,
                root.component,
                root.branch.symbol(),
                crate::io::output::fmt_num(root.omega_d),
                crate::io::output::fmt_num(root.splitting)
            ),
        );
    }
    Ok(r)
}

fn sweep_power_cmd(ctx: &Ctx) -> Result<Report> {
    let c = ctx.cfg()?;
    if c.scan.powers_mw.is_empty() {
        return Err(Error::MissingKey("scan.powers_mw".into()));
    }
    let spectra = power_sweep_ple(c.bundle()?, &c.scan.powers_mw, c.require_grid()?)?;
    let members: Vec<(f64, _)> = c.scan.powers_mw.iter().copied().zip(spectra).collect();
    Ok(sweep_report("power_mw", &members))
}

fn sweep_mw_cmd(ctx: &Ctx) -> Result<Report> {
    let c = ctx.cfg()?;
    if c.scan.drive_frequencies.is_empty() {
        return Err(Error::MissingKey("scan.drive_frequencies_mhz".into()));
    }
    let antenna = ctx.antenna()?;
    let spectra = mw_frequency_sweep(
        c.bundle()?,
        &c.scan.drive_frequencies,
        c.require_grid()?,
        antenna.as_ref(),
    )?;
    let members: Vec<(f64, _)> = c.scan.drive_frequencies.iter().copied().zip(spectra).collect();
    let mut r = sweep_report("omega_d_mhz", &members);
    r.echo("antenna", if antenna.is_some() { "table" } else { "flat" });
    Ok(r)
}

fn fit_peaks_cmd(ctx: &Ctx) -> Result<Report> {
    let c = ctx.cfg()?;
    if c.fit.windows.is_empty() {
        return Err(Error::MissingKey("fit.windows_mhz".into()));
    }
    let spectrum = load_spectrum(&ctx.input()?)?;
    let model = c.fit.model;
    let fits: Vec<_> = c
        .fit
        .windows
        .par_iter()
        .map(|w| fit_peak(&spectrum, *w, model))
        .collect::<Result<_>>()?;
    let mut r = Report::new(&["peak", "parameter", "value", "stderr"]);
    r.echo("model", model.tag());
    for (i, (f, w)) in fits.iter().zip(&c.fit.windows).enumerate() {
        r.echo(format!("window[{i}]"), format!("{}:{}", w.0, w.1));
        r.echo(
            format!("residual_norm[{i}]"),
            crate::io::output::fmt_num(f.residual_norm),
        );
        for ((name, v), e) in model.param_names().iter().zip(&f.params).zip(&f.stderr) {
            r.row(vec![Cell::Int(i as i64), (*name).into(), Cell::Num(*v), Cell::Num(*e)]);
        }
        let derived = match f.width {
            PeakWidth::Sigma(_) => Some(f.stderr[1] * (8.0 * std::f64::consts::LN_2).sqrt()),
            PeakWidth::Fwhm(_) => None,
            PeakWidth::Voigt { .. } => Some(f64::NAN),
        };
        if let Some(e) = derived {
            r.row(vec![
                Cell::Int(i as i64),
                "fwhm".into(),
                Cell::Num(f.width.fwhm()),
                Cell::Num(e),
            ]);
        }
    }
    Ok(r)
}

fn fit_power_series_cmd(ctx: &Ctx) -> Result<Report> {
    let samples = load_power_series(&ctx.input()?)?;
    let f = fit_splitting_vs_power(&samples)?;
    let mut r = Report::new(&["power_mw", "splitting_mhz", "residual_mhz"]);
    r.echo("slope_mhz_per_sqrt_mw", crate::io::output::fmt_num(f.slope));
    r.echo("slope_stderr", crate::io::output::fmt_num(f.stderr));
    for ((p, s), e) in samples.iter().zip(&f.residuals) {
        r.row(vec![Cell::Num(*p), Cell::Num(*s), Cell::Num(*e)]);
    }
    Ok(r)
}

fn fit_sidebands_cmd(ctx: &Ctx) -> Result<Report> {
    let c = ctx.cfg()?;
    let obs = load_amplitudes(&ctx.input()?)?;
    let f = fit_sideband_amplitudes(c.bundle()?, &obs, c.fit.initial)?;
    let mut r = Report::new(&["parameter", "value", "stderr"]);
    r.echo("cost", crate::io::output::fmt_num(f.cost));
    r.echo("reduced_chi2", crate::io::output::fmt_num(f.reduced_chi2));
    r.echo("iterations", f.iterations);
    r.echo("observations", obs.len());
    for name in &f.at_zero {
        r.echo("pinned_at_zero", name);
    }
    for ((name, v), e) in crate::estimation::sidebands::PARAM_NAMES
        .iter()
        .zip(f.params.to_vec())
        .zip(&f.stderr)
    {
        r.row(vec![(*name).into(), Cell::Num(v), Cell::Num(*e)]);
    }
    Ok(r)
}

fn estimate_dipole_cmd(ctx: &Ctx) -> Result<Report> {
    let c = ctx.cfg()?;
    let d = &c.dipole;
    let mut r = Report::new(&["quantity", "value", "unit"]);
    if let (Some(s), Some(e)) = (d.splitting_mhz, d.field_kv_m) {
        let est = dipole_from_splitting(s, e)?;
        r.row(vec!["transition_dipole".into(), Cell::Num(est.mu), "debye".into()]);
    }
    if let Some(m) = d.rabi_m_mhz {
        r.row(vec![
            "b_perp".into(),
            Cell::Num(field_from_magnetic_rabi(m)?),
            "uT".into(),
        ]);
    }
    if d.samples > 0 {
        let seed = c.require_seed()?;
        let s = d
            .splitting_mhz
            .ok_or_else(|| Error::MissingKey("dipole.splitting_mhz".into()))?;
        let par = d
            .field_parallel_kv_m
            .ok_or_else(|| Error::MissingKey("dipole.field_parallel_kv_m".into()))?;
        let perp = d.field_perp_kv_m.unwrap_or(0.0);
        let o = orientation_spread(s, par, perp, d.tilt_deg, d.samples, seed)?;
        r.echo("seed", seed);
        r.row(vec![
            "projected_field_mean".into(),
            Cell::Num(o.field_mean),
            "kV/m".into(),
        ]);
        r.row(vec![
            "projected_field_std".into(),
            Cell::Num(o.field_std),
            "kV/m".into(),
        ]);
        r.row(vec!["dipole_median".into(), Cell::Num(o.mu_median), "debye".into()]);
        r.row(vec!["dipole_p16".into(), Cell::Num(o.mu_low), "debye".into()]);
        r.row(vec!["dipole_p84".into(), Cell::Num(o.mu_high), "debye".into()]);
    }
    if r.rows.is_empty() {
        return Err(Error::MissingKey(
            "dipole.splitting_mhz + dipole.field_kv_m, or dipole.rabi_m_mhz".into(),
        ));
    }
    Ok(r)
}

fn dipole_geometry_cmd(ctx: &Ctx) -> Result<Report> {
    let rows = load_dipoles(&ctx.input()?)?;
    let mut r = Report::new(&[
        "strain",
        "vector",
        "magnitude_d",
        "parallel_d",
        "perpendicular_d",
        "angle_deg",
    ]);
    let push = |r: &mut Report, strain: f64, name: &str, g: &DipoleGeometry| {
        r.row(vec![
            Cell::Num(strain),
            name.into(),
            Cell::Num(g.magnitude),
            Cell::Num(g.parallel),
            Cell::Num(g.perpendicular),
            g.angle_to_axis.map(Cell::Num).unwrap_or_else(|| "undefined".into()),
        ]);
    };
    for row in &rows {
        let g = row_geometry(row)?;
        push(&mut r, g.strain, "delta_p_y", &g.delta_p_y);
        push(&mut r, g.strain, "delta_p_x", &g.delta_p_x);
        push(&mut r, g.strain, "transition", &g.transition);
        r.row(vec![
            Cell::Num(g.strain),
            "pair_angle_x_y".into(),
            "".into(),
            "".into(),
            "".into(),
            Cell::Num(g.pair_angle),
        ]);
    }
    Ok(r)
}

/// Peak positions refined by a parabola through the three top samples.
fn refined_peaks(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    find_peaks(y, 0.02)
        .into_iter()
        .filter(|&i| i > 0 && i + 1 < y.len())
        .map(|i| {
            let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
            let den = a - 2.0 * b + c;
            let off = if den != 0.0 { 0.5 * (a - c) / den } else { 0.0 };
            let h = x[i + 1] - x[i];
            (x[i] + off * h, b - 0.25 * (a - c) * off)
        })
        .collect()
}

fn oracle_validate_cmd(ctx: &Ctx) -> Result<(Report, bool)> {
    let c = ctx.cfg()?;
    let grid = c.require_grid()?;
    let mut b = *c.bundle()?;
    b.shape.sigma_x = 0.0;
    b.shape.sigma_y = 0.0;
    b.shape.pl_ratio = 1.0;
    let scan = steady_state_scan(&b, grid, &c.oracle)?;
    let analytic = PleModel::new(&b, c.scan.n_max)?;
    let expect: Vec<f64> = grid.iter().map(|w| analytic.eval(*w)).collect();
    let peak = expect.iter().copied().fold(0.0, f64::max);

    let mut r = Report::new(&["frequency_mhz", "oracle", "analytic", "difference"]);
    for (k, v) in &scan.spectrum.params_echo {
        r.echo(k.clone(), v);
    }
    let max_amp = scan
        .spectrum
        .intensity
        .iter()
        .zip(&expect)
        .map(|(o, a)| (o - a).abs())
        .fold(0.0, f64::max);
    let op = refined_peaks(grid, &scan.spectrum.intensity);
    let ap = refined_peaks(grid, &expect);
    let max_pos = ap
        .iter()
        .map(|(a, _)| op.iter().map(|(o, _)| (o - a).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let fmt = crate::io::output::fmt_num;
    r.echo("analytic_peaks", ap.len());
    r.echo("oracle_peaks", op.len());
    r.echo("max_position_error_mhz", fmt(max_pos));
    r.echo("max_amplitude_error", fmt(max_amp));
    r.echo(
        "max_relative_amplitude_error",
        fmt(if peak > 0.0 { max_amp / peak } else { 0.0 }),
    );
    r.echo("max_trace_error", fmt(scan.hygiene.max_trace_error));
    r.echo("max_hermiticity_error", fmt(scan.hygiene.max_hermiticity_error));
    r.echo("min_eigenvalue", fmt(scan.hygiene.min_eigenvalue));
    let unconverged: Vec<f64> = scan.unconverged().map(|p| p.omega_l).collect();
    r.echo("unconverged_points", unconverged.len());
    for w in &scan.spectrum.warnings {
        r.echo("warning", w);
    }
    for ((x, o), a) in grid.iter().zip(&scan.spectrum.intensity).zip(&expect) {
        r.row(vec![Cell::Num(*x), Cell::Num(*o), Cell::Num(*a), Cell::Num(o - a)]);
    }
    if !scan.hygiene.within_tolerance() {
        r.echo("hygiene", "violated");
    }
    Ok((r, !unconverged.is_empty() || !scan.hygiene.within_tolerance()))
}
