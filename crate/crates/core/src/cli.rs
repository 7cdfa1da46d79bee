//! Command-line front-end: experiment tables, geometry reports, matrix
//! export and one-shot capacity evaluations.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::capacity_continuous::{ergodic_capacity_continuous, OuSpectrum};
use crate::capacity_discrete::{
    capacity_awgn, capacity_from_variances, capacity_uncorrelated, spectral_variances, Snr,
};
use crate::channel::{
    discretize_kernel, geometry_from_fractions, ou_kernel, ChannelGeometry, CovarianceMatrix,
};
use crate::error::{Error, Result};
use crate::montecarlo::estimate_capacity_curve;
use crate::ou_analytic::{
    capacity_bounds, capacity_series, capacity_wideband_approx, SeriesControl,
};
use crate::quadrature::QuadratureSpec;

pub const CSV_HEADER: &str =
    "alpha_db,c_cont,c_n,c_us,c_awgn,c_lower,c_upper,c_approx,c_series,series_converged,c_mc,mc_stderr";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Cont,
    Disc,
    Us,
    Awgn,
    Bounds,
    Approx,
    Series,
    Mc,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Cont,
        Method::Disc,
        Method::Us,
        Method::Awgn,
        Method::Bounds,
        Method::Approx,
        Method::Series,
        Method::Mc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cont => "cont",
            Method::Disc => "disc",
            Method::Us => "us",
            Method::Awgn => "awgn",
            Method::Bounds => "bounds",
            Method::Approx => "approx",
            Method::Series => "series",
            Method::Mc => "mc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown method `{}`", s.trim())))
    }
}

/// Parses a comma-separated method list, dropping duplicates.
pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    let mut out: Vec<Method> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(Method::parse)
        .collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    pub eps_hat: f64,
    pub n_subcarriers: usize,
    pub snr_db_start: f64,
    pub snr_db_stop: f64,
    pub snr_db_step: f64,
    pub methods: Vec<Method>,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            a: 0.5,
            b: 0.5,
            eps: 0.998,
            eps_hat: 0.998,
            n_subcarriers: 6300,
            snr_db_start: 0.0,
            snr_db_stop: 30.0,
            snr_db_step: 1.0,
            methods: Method::ALL
                .into_iter()
                .filter(|m| *m != Method::Mc)
                .collect(),
            mc_samples: 100_000,
            seed: 1,
        }
    }
}

impl ExperimentConfig {
    /// Applies `key=value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key=value, got `{line}`"),
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse()
                .map_err(|e| Error::Config(format!("{key}: cannot parse `{value}` ({e})")))
        }
        match key {
            "a" => self.a = num(key, value)?,
            "b" => self.b = num(key, value)?,
            "eps" => self.eps = num(key, value)?,
            "eps_hat" => self.eps_hat = num(key, value)?,
            "n_subcarriers" => self.n_subcarriers = num(key, value)?,
            "snr_db_start" => self.snr_db_start = num(key, value)?,
            "snr_db_stop" => self.snr_db_stop = num(key, value)?,
            "snr_db_step" => self.snr_db_step = num(key, value)?,
            "methods" => self.methods = parse_methods(value)?,
            "mc_samples" => self.mc_samples = num::<f64>(key, value).and_then(|v| count(key, v))?,
            "seed" => self.seed = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config(
                "methods: at least one method is required".into(),
            ));
        }
        if !(self.snr_db_step > 0.0) || !self.snr_db_step.is_finite() {
            return Err(Error::Config("snr_db_step: must be positive".into()));
        }
        if !(self.snr_db_start.is_finite() && self.snr_db_stop.is_finite())
            || self.snr_db_stop < self.snr_db_start
        {
            return Err(Error::Config(
                "snr grid: need finite snr_db_start <= snr_db_stop".into(),
            ));
        }
        if self.n_subcarriers == 0 {
            return Err(Error::Config("n_subcarriers: must be at least 1".into()));
        }
        if self.mc_samples < 2 {
            return Err(Error::Config("mc_samples: must be at least 2".into()));
        }
        geometry_from_fractions(self.a, self.b, self.eps, self.eps_hat)?;
        Ok(())
    }

    /// `start, start+step, …` up to `stop` (inclusive, with slack for
    /// rounding).
    pub fn snr_grid_db(&self) -> Vec<f64> {
        let span = (self.snr_db_stop - self.snr_db_start) / self.snr_db_step;
        let count = (span + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| {
                let v = self.snr_db_start + i as f64 * self.snr_db_step;
                (v * 1e9).round() / 1e9
            })
            .collect()
    }
}

fn count(key: &str, v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e15 {
        Ok(v as usize)
    } else {
        Err(Error::Config(format!("{key}: `{v}` is not a count")))
    }
}

/// One row of an experiment table; `None` marks a method that was not run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentRow {
    pub alpha_db: f64,
    pub c_cont: Option<f64>,
    pub c_n: Option<f64>,
    pub c_us: Option<f64>,
    pub c_awgn: Option<f64>,
    pub c_lower: Option<f64>,
    pub c_upper: Option<f64>,
    pub c_approx: Option<f64>,
    /// Outer `None`: not requested. Inner `None`: not converged.
    pub c_series: Option<Option<f64>>,
    pub c_mc: Option<f64>,
    pub mc_stderr: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ExperimentTable {
    pub config: ExperimentConfig,
    pub geometry: ChannelGeometry,
    /// Values in bits/s (all columns scaled by `W`) instead of bits/s/Hz.
    pub raw_units: bool,
    pub rows: Vec<ExperimentRow>,
}

pub fn channel_matrix(g: &ChannelGeometry) -> Result<CovarianceMatrix> {
    discretize_kernel(&ou_kernel(g.ou_params())?, g.bandwidth, g.delay_spread)
}

pub fn run_experiment(config: &ExperimentConfig, raw_units: bool) -> Result<ExperimentTable> {
    config.validate()?;
    let g = geometry_from_fractions(config.a, config.b, config.eps, config.eps_hat)?;
    let p = g.ou_params();
    let w = g.bandwidth;
    let grid = config.snr_grid_db();
    let snrs: Vec<Snr> = grid
        .iter()
        .map(|d| Snr::from_db(*d))
        .collect::<Result<_>>()?;
    let wants = |m| config.methods.contains(&m);

    let needs_matrix = wants(Method::Disc) || wants(Method::Mc);
    let gamma = if needs_matrix {
        Some(channel_matrix(&g)?)
    } else {
        None
    };
    let variances = match &gamma {
        Some(m) if wants(Method::Disc) => Some(spectral_variances(m, config.n_subcarriers)?),
        _ => None,
    };
    let mc = match &gamma {
        Some(m) if wants(Method::Mc) => Some(estimate_capacity_curve(
            m,
            config.n_subcarriers,
            &snrs,
            config.mc_samples,
            config.seed,
        )?),
        _ => None,
    };

    let quad = QuadratureSpec::default();
    let series_ctrl = SeriesControl::default();
    let scale = if raw_units { w } else { 1.0 };
    let rows = grid
        .par_iter()
        .zip(snrs.par_iter())
        .enumerate()
        .map(|(i, (&db, &s))| -> Result<ExperimentRow> {
            let mut row = ExperimentRow {
                alpha_db: db,
                ..Default::default()
            };
            // continuous results are in bits/s, discrete ones in bits/s/Hz
            let per_hz = |v: f64| v / w * scale;
            let disc = |v: f64| v * scale;
            if wants(Method::Cont) {
                row.c_cont = Some(per_hz(ergodic_capacity_continuous(
                    &OuSpectrum(p),
                    w,
                    s,
                    &quad,
                )?));
            }
            if let Some(v) = &variances {
                row.c_n = Some(disc(capacity_from_variances(v, s)));
            }
            if wants(Method::Us) {
                row.c_us = Some(disc(capacity_uncorrelated(s)));
            }
            if wants(Method::Awgn) {
                row.c_awgn = Some(disc(capacity_awgn(s)));
            }
            if wants(Method::Bounds) {
                let b = capacity_bounds(&p, w, s);
                row.c_lower = Some(per_hz(b.lower));
                row.c_upper = Some(per_hz(b.upper));
            }
            if wants(Method::Approx) {
                row.c_approx = Some(per_hz(capacity_wideband_approx(&p, s)));
            }
            if wants(Method::Series) {
                row.c_series = Some(
                    capacity_series(&p, w, s, &series_ctrl)?
                        .capacity()
                        .map(per_hz),
                );
            }
            if let Some(est) = &mc {
                row.c_mc = Some(disc(est[i].mean));
                row.mc_stderr = Some(disc(est[i].stderr));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ExperimentTable {
        config: config.clone(),
        geometry: g,
        raw_units,
        rows,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.10}")).unwrap_or_default()
}

/// `# key=value` lines echoing the derived constants.
pub fn geometry_echo(g: &ChannelGeometry) -> String {
    format!(
        "# a={} b={} eps={} eps_hat={}\n# T_d={:.6} W={:.6} c={:.6} L={}\n",
        g.a, g.b, g.eps, g.eps_hat, g.delay_spread, g.bandwidth, g.energy, g.taps
    )
}

pub fn write_csv<W: Write>(table: &ExperimentTable, mut out: W) -> Result<()> {
    let c = &table.config;
    let methods: Vec<&str> = c.methods.iter().map(|m| m.name()).collect();
    write!(out, "{}", geometry_echo(&table.geometry))?;
    writeln!(
        out,
        "# N={} units={} methods={} mc_samples={} seed={}",
        c.n_subcarriers,
        if table.raw_units {
            "bits/s"
        } else {
            "bits/s/Hz"
        },
        methods.join(","),
        c.mc_samples,
        c.seed
    )?;
    writeln!(out, "{CSV_HEADER}")?;
    for r in &table.rows {
        let (series, flag) = match r.c_series {
            None => (String::new(), ""),
            Some(Some(v)) => (cell(Some(v)), "true"),
            Some(None) => (String::new(), "false"),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.alpha_db,
            cell(r.c_cont),
            cell(r.c_n),
            cell(r.c_us),
            cell(r.c_awgn),
            cell(r.c_lower),
            cell(r.c_upper),
            cell(r.c_approx),
            series,
            flag,
            cell(r.c_mc),
            cell(r.mc_stderr)
        )?;
    }
    Ok(())
}

pub fn describe_geometry(a: f64, b: f64, eps: f64, eps_hat: f64, csv: bool) -> Result<String> {
    let g = geometry_from_fractions(a, b, eps, eps_hat)?;
    let mut s = String::new();
    if csv {
        writeln!(s, "a,b,eps,eps_hat,t_d,w,c,l").unwrap();
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            g.a, g.b, g.eps, g.eps_hat, g.delay_spread, g.bandwidth, g.energy, g.taps
        )
        .unwrap();
    } else {
        writeln!(s, "T_d = {:.6} s", g.delay_spread).unwrap();
        writeln!(s, "W   = {:.6} Hz", g.bandwidth).unwrap();
        writeln!(s, "c   = {:.6}", g.energy).unwrap();
        writeln!(s, "L   = {}", g.taps).unwrap();
    }
    Ok(s)
}

pub fn export_matrix(
    a: f64,
    b: f64,
    eps: f64,
    eps_hat: f64,
    path: &std::path::Path,
) -> Result<CovarianceMatrix> {
    let g = geometry_from_fractions(a, b, eps, eps_hat)?;
    let m = channel_matrix(&g)?;
    m.save(path)?;
    Ok(m)
}

#[derive(Debug, Parser)]
#[command(
    name = "ergocap",
    version,
    about = "Ergodic capacity of correlated-scattering Rayleigh fading channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Capacity-vs-SNR table as CSV.
    Experiment {
        /// key=value config file
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        /// Report bits/s instead of bits/s/Hz.
        #[arg(long = "raw_units", alias = "raw-units")]
        raw_units: bool,
        /// Write the CSV here instead of standard output.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Delay spread, bandwidth, energy constant and tap count.
    Geometry {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long)]
        csv: bool,
    },
    /// Writes the tap covariance matrix in plain-text format.
    ExportMatrix {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Single capacity value at one SNR.
    Capacity {
        #[arg(long, value_parser = |s: &str| Method::parse(s).map_err(|e| e.to_string()))]
        method: Method,
        #[arg(long = "snr_db", alias = "snr-db", allow_hyphen_values = true)]
        snr_db: f64,
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(
            long = "n_subcarriers",
            alias = "n-subcarriers",
            default_value_t = 6300
        )]
        n_subcarriers: usize,
        #[arg(long = "mc_samples", alias = "mc-samples", default_value_t = 100_000)]
        mc_samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Covariance matrix file used by `disc` and `mc` instead of the
        /// geometry's OU matrix.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long = "raw_units", alias = "raw-units")]
        raw_units: bool,
    },
    /// Quick numerical self-checks.
    Selftest,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct GeometryArgs {
    #[arg(long, default_value_t = 0.5)]
    pub a: f64,
    #[arg(long, default_value_t = 0.5)]
    pub b: f64,
    #[arg(long, default_value_t = 0.998)]
    pub eps: f64,
    #[arg(long = "eps_hat", alias = "eps-hat", default_value_t = 0.998)]
    pub eps_hat: f64,
}

/// Config keys as flags; each set flag replaces the file's value.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub a: Option<String>,
    #[arg(long)]
    pub b: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long = "eps_hat", alias = "eps-hat")]
    pub eps_hat: Option<String>,
    #[arg(long = "n_subcarriers", alias = "n-subcarriers")]
    pub n_subcarriers: Option<String>,
    #[arg(
        long = "snr_db_start",
        alias = "snr-db-start",
        allow_hyphen_values = true
    )]
    pub snr_db_start: Option<String>,
    #[arg(
        long = "snr_db_stop",
        alias = "snr-db-stop",
        allow_hyphen_values = true
    )]
    pub snr_db_stop: Option<String>,
    #[arg(long = "snr_db_step", alias = "snr-db-step")]
    pub snr_db_step: Option<String>,
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long = "mc_samples", alias = "mc-samples")]
    pub mc_samples: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
}

impl Overrides {
    fn apply(&self, config: &mut ExperimentConfig) -> Result<()> {
        let pairs = [
            ("a", &self.a),
            ("b", &self.b),
            ("eps", &self.eps),
            ("eps_hat", &self.eps_hat),
            ("n_subcarriers", &self.n_subcarriers),
            ("snr_db_start", &self.snr_db_start),
            ("snr_db_stop", &self.snr_db_stop),
            ("snr_db_step", &self.snr_db_step),
            ("methods", &self.methods),
            ("mc_samples", &self.mc_samples),
            ("seed", &self.seed),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                config
                    .set(key, v)
                    .map_err(|e| Error::Config(format!("--{key}: {e}")))?;
            }
        }
        Ok(())
    }
}

/// Exit status for an error: 2 for numerical failures, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run_from_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match run(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn run(command: Command, stdout: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Experiment {
            config,
            overrides,
            raw_units,
            output,
        } => {
            let mut cfg = ExperimentConfig::default();
            if let Some(path) = config {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                cfg.apply_text(&text)?;
            }
            overrides.apply(&mut cfg)?;
            let table = run_experiment(&cfg, raw_units)?;
            match output {
                Some(path) => {
                    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
                    write_csv(&table, &mut f)?;
                    f.flush()?;
                }
                None => write_csv(&table, &mut *stdout)?,
            }
            Ok(0)
        }
        Command::Geometry { geometry: g, csv } => {
            write!(
                stdout,
                "{}",
                describe_geometry(g.a, g.b, g.eps, g.eps_hat, csv)?
            )?;
            Ok(0)
        }
        Command::ExportMatrix {
            geometry: g,
            output,
        } => {
            let m = export_matrix(g.a, g.b, g.eps, g.eps_hat, &output)?;
            writeln!(
                stdout,
                "wrote {}x{} matrix to {}",
                m.dim(),
                m.dim(),
                output.display()
            )?;
            Ok(0)
        }
        Command::Capacity {
            method,
            snr_db,
            geometry,
            n_subcarriers,
            mc_samples,
            seed,
            matrix,
            raw_units,
        } => {
            let line = one_shot(
                method,
                snr_db,
                geometry,
                n_subcarriers,
                mc_samples,
                seed,
                matrix,
                raw_units,
            )?;
            writeln!(stdout, "{line}")?;
            Ok(0)
        }
        Command::Selftest => {
            let checks = crate::selftest::run_selftest();
            let mut failed = 0;
            for c in &checks {
                writeln!(
                    stdout,
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                )?;
                failed += usize::from(!c.passed);
            }
            writeln!(
                stdout,
                "{} of {} checks passed",
                checks.len() - failed,
                checks.len()
            )?;
            Ok(if failed == 0 { 0 } else { 2 })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn one_shot(
    method: Method,
    snr_db: f64,
    geometry: GeometryArgs,
    n: usize,
    mc_samples: usize,
    seed: u64,
    matrix: Option<PathBuf>,
    raw_units: bool,
) -> Result<String> {
    let g = geometry_from_fractions(geometry.a, geometry.b, geometry.eps, geometry.eps_hat)?;
    let s = Snr::from_db(snr_db)?;
    let p = g.ou_params();
    let w = g.bandwidth;
    let per_hz = |v: f64| if raw_units { v } else { v / w };
    let disc = |v: f64| if raw_units { v * w } else { v };
    let gamma = || match &matrix {
        Some(path) => CovarianceMatrix::load(path),
        None => channel_matrix(&g),
    };
    Ok(match method {
        Method::Cont => cell(Some(per_hz(ergodic_capacity_continuous(
            &OuSpectrum(p),
            w,
            s,
            &QuadratureSpec::default(),
        )?))),
        Method::Disc => {
            let v = spectral_variances(&gamma()?, n)?;
            cell(Some(disc(capacity_from_variances(&v, s))))
        }
        Method::Us => cell(Some(disc(capacity_uncorrelated(s)))),
        Method::Awgn => cell(Some(disc(capacity_awgn(s)))),
        Method::Bounds => {
            let b = capacity_bounds(&p, w, s);
            format!(
                "{},{}",
                cell(Some(per_hz(b.lower))),
                cell(Some(per_hz(b.upper)))
            )
        }
        Method::Approx => cell(Some(per_hz(capacity_wideband_approx(&p, s)))),
        Method::Series => {
            let r = capacity_series(&p, w, s, &SeriesControl::default())?;
            match r.capacity() {
                Some(v) => cell(Some(per_hz(v))),
                None => {
                    return Err(Error::SeriesNotConverged {
                        terms: r.terms_used,
                    })
                }
            }
        }
        Method::Mc => {
            let e = estimate_capacity_curve(&gamma()?, n, &[s], mc_samples, seed)?[0];
            format!(
                "{},{}",
                cell(Some(disc(e.mean))),
                cell(Some(disc(e.stderr)))
            )
        }
    })
}
