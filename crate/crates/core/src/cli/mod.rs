//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::fitting::{
    initial_guess, selectivity, subtract_linear_background, Fitter, Transition,
};
use crate::hamiltonian::{hyperfine_stick_spectrum, Branch, StaticField};
use crate::odmr::{self, argmax, integrated_contrast, Spectrum};

pub use config::RunConfig;
use output::{fmt_num, Band, Series, Table};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 3,
            _ => 2,
        }
    }
}

impl From<odmr::OdmrError> for CliError {
    fn from(e: odmr::OdmrError) -> Self {
        match e {
            odmr::OdmrError::Param(p) => CliError::Config(p.to_string()),
            odmr::OdmrError::InvalidSweep(m) => CliError::Config(format!("sweep: {m}")),
            odmr::OdmrError::InvalidSpectrum(m) => CliError::Input(m.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

/// A `LO:HI` frequency window in MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskWindow {
    pub lo: f64,
    pub hi: f64,
}

impl FromStr for MaskWindow {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
        let lo: f64 = a.trim().parse().map_err(|_| format!("bad lower bound {a:?}"))?;
        let hi: f64 = b.trim().parse().map_err(|_| format!("bad upper bound {b:?}"))?;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(format!("window {s:?} needs LO <= HI"));
        }
        Ok(Self { lo, hi })
    }
}

#[derive(Debug, Parser)]
#[command(name = "odmr-sim", version, about = "Phase-controlled ODMR simulator and analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "odmr-out")]
    pub out: PathBuf,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub plot: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Applied phase difference, degrees (overrides drive.delta_deg).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Static field, mT (overrides field.b0).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub b0: Option<f64>,
    /// Frequency window excluded from fits, LO:HI in MHz; repeatable.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub mask: Vec<MaskWindow>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// ODMR spectrum at one phase and field.
    Spectrum,
    /// Spectra over the phase grid plus integrated contrast per phase.
    PhaseSweep,
    /// Maximum selectivity per field.
    FieldSweep,
    /// Double-Lorentzian fit of a measured or simulated spectrum.
    Fit {
        /// CSV with frequency_mhz and contrast columns.
        input: PathBuf,
    },
    /// Hyperfine-resolved transition sticks.
    StickSpectrum,
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("odmr-sim: {e}");
            e.exit_code()
        }
    }
}

pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = cli.delta {
        cfg.drive.delta_deg = d;
    }
    if let Some(b) = cli.b0 {
        cfg.field.b0 = b;
    }
    if cli.plot {
        cfg.output.plot = true;
    }
    cfg.fit.mask.extend(cli.mask.iter().map(|m| [m.lo, m.hi]));
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    if cli.threads == Some(0) {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", cli.out.display())))?;
    output::write_file(&cli.out.join("config.toml"), &cfg.to_toml())?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;
    let out = cli.out.as_path();
    pool.install(|| match &cli.command {
        Command::Spectrum => cmd_spectrum(&cfg, out),
        Command::PhaseSweep => cmd_phase_sweep(&cfg, out),
        Command::FieldSweep => cmd_field_sweep(&cfg, out),
        Command::Fit { input } => cmd_fit(input, &cfg, out),
        Command::StickSpectrum => cmd_stick_spectrum(&cfg, out),
    })
}

fn write_svg(cfg: &RunConfig, path: &Path, svg: impl FnOnce() -> String) -> Result<(), CliError> {
    if cfg.output.plot {
        output::write_file(path, &svg())?;
    }
    Ok(())
}

pub fn cmd_spectrum(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let spec = odmr::frequency_sweep(&cfg.sweep_config(), cfg.drive.delta_deg, cfg.field.b0)?;
    let mut t = Table::new(&["frequency_mhz", "contrast"]);
    for (f, c) in spec.freqs.iter().zip(&spec.contrasts) {
        t.push_nums(&[*f, *c]);
    }
    t.write(&out.join("spectrum.csv"))?;
    write_svg(cfg, &out.join("spectrum.svg"), || {
        output::line_plot(
            &[Series {
                xs: &spec.freqs,
                ys: &spec.contrasts,
                color: "#1f3a93",
                label: "",
                markers: false,
            }],
            &[],
            "frequency (MHz)",
            "contrast",
        )
    })
}

pub fn cmd_phase_sweep(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let map = odmr::phase_sweep(&cfg.sweep_config(), cfg.field.b0)?;
    let mut grid = Table::new(&["delta_deg", "frequency_mhz", "contrast"]);
    for (d, row) in map.deltas.iter().zip(&map.contrast) {
        for (f, c) in map.freqs.iter().zip(row) {
            grid.push_nums(&[*d, *f, *c]);
        }
    }
    grid.write(&out.join("phase_map.csv"))?;

    let ic = integrated_contrast(&map, cfg.defect.d_gs);
    let mut summary = Table::new(&[
        "delta_deg",
        "integrated_below",
        "integrated_above",
        "normalized_below",
        "normalized_above",
    ]);
    for k in 0..ic.deltas.len() {
        summary.push_nums(&[ic.deltas[k], ic.below_raw[k], ic.above_raw[k], ic.below[k], ic.above[k]]);
    }
    summary.write(&out.join("phase_summary.csv"))?;

    if let (Some(ib), Some(ia)) = (argmax(&ic.below), argmax(&ic.above)) {
        println!(
            "max integrated contrast: below d_gs at {} deg, above d_gs at {} deg",
            fmt_num(ic.deltas[ib]),
            fmt_num(ic.deltas[ia])
        );
    }
    write_svg(cfg, &out.join("phase_map.svg"), || {
        output::heatmap(&map.freqs, &map.deltas, &map.contrast, "frequency (MHz)", "phase difference (deg)")
    })?;
    write_svg(cfg, &out.join("phase_summary.svg"), || {
        output::line_plot(
            &[
                Series {
                    xs: &ic.deltas,
                    ys: &ic.below,
                    color: "#1f3a93",
                    label: "below d_gs",
                    markers: true,
                },
                Series {
                    xs: &ic.deltas,
                    ys: &ic.above,
                    color: "#c0392b",
                    label: "above d_gs",
                    markers: true,
                },
            ],
            &[],
            "phase difference (deg)",
            "normalized integrated contrast",
        )
    })
}

fn fitter(cfg: &RunConfig) -> Fitter {
    Fitter {
        max_iterations: cfg.fit.max_iterations,
        ..Fitter::default()
    }
}

pub fn cmd_field_sweep(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let curve = odmr::field_sweep(&cfg.sweep_config(), &fitter(cfg))?;
    let mut t = Table::new(&[
        "b0_mt",
        "sel_minus",
        "sel_minus_sigma",
        "sel_plus",
        "sel_plus_sigma",
        "delta_star_minus",
        "delta_star_plus",
        "peak_sep_mhz",
        "status",
    ]);
    let (mut bs, mut sm, mut sp) = (Vec::new(), Vec::new(), Vec::new());
    for p in &curve.points {
        match &p.result {
            Ok(m) => {
                let mut row: Vec<String> = [
                    p.b0,
                    m.sel_minus.value,
                    m.sel_minus.sigma,
                    m.sel_plus.value,
                    m.sel_plus.sigma,
                    m.delta_star_minus,
                    m.delta_star_plus,
                    m.peak_separation,
                ]
                .iter()
                .map(|&v| fmt_num(v))
                .collect();
                row.push(if m.degenerate { "degenerate".into() } else { "ok".into() });
                t.push(row);
                bs.push(p.b0);
                sm.push(m.sel_minus.value);
                sp.push(m.sel_plus.value);
            }
            Err(e) => {
                eprintln!("odmr-sim: b0 = {} mT: {e}", fmt_num(p.b0));
                let mut row = vec![fmt_num(p.b0)];
                row.extend(std::iter::repeat_n(String::new(), 7));
                row.push(status_of(e));
                t.push(row);
            }
        }
    }
    t.write(&out.join("field_sweep.csv"))?;
    write_svg(cfg, &out.join("field_sweep.svg"), || {
        output::line_plot(
            &[
                Series {
                    xs: &bs,
                    ys: &sm,
                    color: "#1f3a93",
                    label: "|0> -> |-1>",
                    markers: true,
                },
                Series {
                    xs: &bs,
                    ys: &sp,
                    color: "#c0392b",
                    label: "|0> -> |+1>",
                    markers: true,
                },
            ],
            &[],
            "B0 (mT)",
            "maximum selectivity",
        )
    })
}

fn status_of(e: &odmr::OdmrError) -> String {
    match e {
        odmr::OdmrError::Fit { .. } => "fit_failed".into(),
        _ => "solver_failed".into(),
    }
}

pub fn cmd_fit(input: &Path, cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let (freqs, contrasts) = output::read_spectrum_csv(input)?;
    let spec = Spectrum::new(freqs, contrasts, cfg.drive.delta_deg, cfg.field.b0)?;
    let windows: Vec<(f64, f64)> = cfg.fit.mask.iter().map(|[lo, hi]| (*lo, *hi)).collect();
    let mut spec = spec.masked(&windows);
    if cfg.fit.wing_fraction > 0.0 {
        spec = subtract_linear_background(&spec, cfg.fit.wing_fraction)
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    let params = cfg.params();
    let guess = initial_guess(&spec, &params, &StaticField::new(cfg.field.b0));
    let fit = fitter(cfg).fit(&spec, &guess).map_err(|e| CliError::Numerical(e.to_string()))?;
    let sm = selectivity(&fit, Transition::Minus).map_err(|e| CliError::Numerical(e.to_string()))?;
    let sp = selectivity(&fit, Transition::Plus).map_err(|e| CliError::Numerical(e.to_string()))?;

    let sd = |i: usize| fit.covariance[i][i].max(0.0).sqrt();
    let mut t = Table::new(&["quantity", "value", "sigma"]);
    let rows = [
        ("center_minus_mhz", fit.peak_minus.center, sd(0)),
        ("fwhm_minus_mhz", fit.peak_minus.fwhm, sd(1)),
        ("area_minus", fit.peak_minus.area, sd(2)),
        ("center_plus_mhz", fit.peak_plus.center, sd(3)),
        ("fwhm_plus_mhz", fit.peak_plus.fwhm, sd(4)),
        ("area_plus", fit.peak_plus.area, sd(5)),
        ("bg_slope_per_mhz", fit.bg_slope, sd(6)),
        ("bg_offset", fit.bg_offset, sd(7)),
        ("bg_reference_mhz", fit.f_ref, 0.0),
        ("sel_minus", sm.value, sm.sigma),
        ("sel_plus", sp.value, sp.sigma),
        ("peak_sep_mhz", fit.separation(), (sd(0).powi(2) + sd(3).powi(2) - 2.0 * fit.covariance[0][3]).max(0.0).sqrt()),
        ("rms_residual", fit.rms_residual, 0.0),
    ];
    for (name, v, s) in rows {
        t.push(vec![name.to_string(), fmt_num(v), fmt_num(s)]);
    }
    t.write(&out.join("fit.csv"))?;
    println!(
        "selectivity |0>->|-1>: {} +- {}, |0>->|+1>: {} +- {}{}",
        fmt_num(sm.value),
        fmt_num(sm.sigma),
        fmt_num(sp.value),
        fmt_num(sp.sigma),
        if fit.poorly_separated { " (poorly separated)" } else { "" }
    );

    write_svg(cfg, &out.join("fit.svg"), || {
        let shape = fit.line_shape();
        let model: Vec<f64> = spec.freqs.iter().map(|&f| shape.eval(f)).collect();
        let minus: Vec<f64> = spec.freqs.iter().map(|&f| -fit.peak_minus.eval(f)).collect();
        let plus: Vec<f64> = spec.freqs.iter().map(|&f| -fit.peak_plus.eval(f)).collect();
        output::line_plot(
            &[
                Series {
                    xs: &spec.freqs,
                    ys: &spec.contrasts,
                    color: "black",
                    label: "data",
                    markers: true,
                },
                Series {
                    xs: &spec.freqs,
                    ys: &model,
                    color: "#555555",
                    label: "fit",
                    markers: false,
                },
            ],
            &[
                Band {
                    xs: &spec.freqs,
                    ys: &minus,
                    base: 0.0,
                    color: "#7fb3d5",
                    opacity: 0.5,
                },
                Band {
                    xs: &spec.freqs,
                    ys: &plus,
                    base: 0.0,
                    color: "#1a5276",
                    opacity: 0.5,
                },
            ],
            "frequency (MHz)",
            "contrast",
        )
    })
}

pub fn cmd_stick_spectrum(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let sticks = hyperfine_stick_spectrum(&cfg.params(), &cfg.field, &cfg.hyperfine)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut t = Table::new(&["frequency_mhz", "weight", "branch"]);
    for s in &sticks {
        t.push(vec![fmt_num(s.frequency), fmt_num(s.weight), s.branch.label().to_string()]);
    }
    t.write(&out.join("sticks.csv"))?;
    write_svg(cfg, &out.join("sticks.svg"), || {
        let xs: Vec<f64> = sticks.iter().map(|s| s.frequency).collect();
        let ys: Vec<f64> = sticks.iter().map(|s| s.weight).collect();
        let colors: Vec<&str> = sticks
            .iter()
            .map(|s| if s.branch == Branch::Minus { "#1f3a93" } else { "#c0392b" })
            .collect();
        output::stem_plot(&xs, &ys, &colors, "frequency (MHz)", "weight")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_parsing() {
        assert_eq!("3890:3910".parse::<MaskWindow>().unwrap(), MaskWindow { lo: 3890.0, hi: 3910.0 });
        assert!("3910:3890".parse::<MaskWindow>().is_err());
        assert!("3890".parse::<MaskWindow>().is_err());
        assert!("a:b".parse::<MaskWindow>().is_err());
    }

    #[test]
    fn flags_override_config() {
        let cli = Cli::try_parse_from(["odmr-sim", "spectrum", "--b0", "4.5", "--delta", "-10", "--mask", "1:2"]).unwrap();
        let cfg = resolve_config(&cli).unwrap();
        assert_eq!(cfg.field.b0, 4.5);
        assert_eq!(cfg.drive.delta_deg, -10.0);
        assert_eq!(cfg.fit.mask, vec![[1.0, 2.0]]);
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::Config(String::new()).exit_code(), 2);
        assert_eq!(CliError::Input(String::new()).exit_code(), 2);
        assert_eq!(CliError::Numerical(String::new()).exit_code(), 3);
    }
}
