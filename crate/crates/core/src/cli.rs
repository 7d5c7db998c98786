//! Command-line front end: TOML run configuration, named experiments,
//! parameter sweeps and CSV/JSON tables.
//!
//! Exit status: 0 success, 1 failed validation check, 2 configuration error,
//! 3 numerical failure.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::forces::{
    eta_curve_between, force_cavity, Channel, ForceReport, MotionSpec, NonadditivityCurve,
};
use crate::greens::{green_derivative_at0, green_q, GreenDerivative};
use crate::quadrature::{derivative_at, QuadratureSpec};
use crate::units::{CavityGeometry, InternalDissipationModel, ParticleModel, ReflectionModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Column names of a force-report table, in output order.
pub const REPORT_COLUMNS: [&str; 11] = [
    "z_a",
    "w",
    "v",
    "f_int",
    "f_rad",
    "f_int_add",
    "f_rad_add",
    "eta_int",
    "eta_rad",
    "rad_sigma_term",
    "rad_spin_term",
];

pub const FIG3_COLUMNS: [&str; 3] = ["z_over_w", "eta_rad", "lorentz_model"];

pub const SWEEP_PARAMS: [&str; 6] = ["z_a", "w", "v", "rho1", "rho2", "r0"];

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Config(String),
    Numeric(Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric(_) | CliError::Io(_) => EXIT_NUMERIC,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

/// Model errors raised while building from a config are configuration
/// errors; everything else is numerical.
fn numeric(e: Error) -> CliError {
    match e {
        Error::InvalidModel(m) => CliError::Config(m),
        other => CliError::Numeric(other),
    }
}

fn config_err(e: Error) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "qfriction",
    version,
    about = "Quantum friction near planar surfaces and in planar cavities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output file (default: stdout)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Relative quadrature tolerance
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,

    /// Seed for the randomized checks of `validate`
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Particle above a single plane
    Single,
    /// Particle inside a two-plate cavity
    Cavity,
    /// Radiative nonadditivity across the cavity with its Lorentzian model
    Fig3,
    /// One force report per value of a swept parameter
    Sweep {
        /// One of z_a, w, v, rho1, rho2, r0
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
    },
    /// Run the invariant checks on the configured models
    Validate {
        /// Replace the derivative kernel by one with broken parity
        #[arg(long, hide = true)]
        corrupt_kernel: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateConfig {
    pub r0: Option<f64>,
    pub rho: Option<f64>,
    #[serde(default)]
    pub perfect_conductor: bool,
}

impl Default for PlateConfig {
    fn default() -> Self {
        Self {
            r0: Some(1.0),
            rho: Some(1.0),
            perfect_conductor: false,
        }
    }
}

impl PlateConfig {
    pub fn model(&self) -> Result<ReflectionModel, CliError> {
        if self.perfect_conductor {
            if self.rho.is_some_and(|r| r != 0.0) || self.r0.is_some_and(|r| r != 1.0) {
                return Err(CliError::Config(
                    "a perfect conductor has r0 = 1 and rho = 0".into(),
                ));
            }
            return Ok(ReflectionModel::perfect_conductor());
        }
        ReflectionModel::new(self.r0.unwrap_or(1.0), self.rho.unwrap_or(1.0)).map_err(config_err)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub w: f64,
    pub z_a: f64,
    pub plate1: PlateConfig,
    pub plate2: PlateConfig,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            w: 1.0,
            z_a: 0.5,
            plate1: PlateConfig::default(),
            plate2: PlateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParticleConfig {
    pub alpha0: f64,
    pub omega_a: f64,
    pub mu_xx: f64,
    pub mu_yy: f64,
    pub mu_zz: f64,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        Self {
            alpha0: 1.0,
            omega_a: 1.0,
            mu_xx: 1.0,
            mu_yy: 1.0,
            mu_zz: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionConfig {
    pub v: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self { v: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub rel_tol: f64,
    pub max_evals: usize,
    pub n_points: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let spec = QuadratureSpec::default();
        Self {
            rel_tol: spec.rel_tol,
            max_evals: spec.max_evals,
            n_points: 33,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub format: Option<Format>,
    pub path: Option<PathBuf>,
}

/// Run configuration. Every quantity is in reduced units (ħ = ε0 = 1): with
/// a length unit ℓ0, lengths are in ℓ0, wavevectors in 1/ℓ0, and ρ, v carry
/// the corresponding reduced time unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub particle: ParticleConfig,
    pub motion: MotionConfig,
    pub numerics: NumericsConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Checks every model the config can produce.
    pub fn validate(&self) -> Result<(), CliError> {
        self.single_plane()?;
        self.cavity()?;
        self.particle()?;
        self.motion()?;
        self.quadrature()?;
        Ok(())
    }

    pub fn single_plane(&self) -> Result<CavityGeometry, CliError> {
        CavityGeometry::single_plane(self.geometry.z_a, self.geometry.plate1.model()?)
            .map_err(config_err)
    }

    pub fn cavity(&self) -> Result<CavityGeometry, CliError> {
        let g = &self.geometry;
        CavityGeometry::cavity(g.w, g.z_a, g.plate1.model()?, g.plate2.model()?).map_err(config_err)
    }

    pub fn particle(&self) -> Result<ParticleModel, CliError> {
        let p = &self.particle;
        let mu = InternalDissipationModel::new(p.mu_xx, p.mu_yy, p.mu_zz).map_err(config_err)?;
        ParticleModel::new(p.alpha0, p.omega_a, mu).map_err(config_err)
    }

    pub fn motion(&self) -> Result<MotionSpec, CliError> {
        MotionSpec::new(self.motion.v).map_err(config_err)
    }

    pub fn quadrature(&self) -> Result<QuadratureSpec, CliError> {
        let spec = QuadratureSpec::default()
            .with_rel_tol(self.numerics.rel_tol)
            .with_max_evals(self.numerics.max_evals);
        spec.validate().map_err(config_err)?;
        Ok(spec)
    }

    /// Copy with one named parameter replaced.
    pub fn with_param(&self, param: &str, value: f64) -> Result<Self, CliError> {
        let mut c = self.clone();
        match param {
            "z_a" => c.geometry.z_a = value,
            "w" => c.geometry.w = value,
            "v" => c.motion.v = value,
            "rho1" => c.geometry.plate1.rho = Some(value),
            "rho2" => c.geometry.plate2.rho = Some(value),
            "r0" => {
                c.geometry.plate1.r0 = Some(value);
                c.geometry.plate2.r0 = Some(value);
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown sweep parameter '{other}', expected one of {}",
                    SWEEP_PARAMS.join(", ")
                )))
            }
        }
        Ok(c)
    }
}

/// A rectangular table of optional numbers with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn from_reports(reports: &[ForceReport]) -> Self {
        let mut t = Self::new(&REPORT_COLUMNS);
        t.rows = reports.iter().map(report_row).collect();
        t
    }

    pub fn to_reports(&self) -> Result<Vec<ForceReport>, CliError> {
        if self.columns != REPORT_COLUMNS {
            return Err(CliError::Config(
                "table does not have the force-report columns".into(),
            ));
        }
        self.rows.iter().map(|r| report_from_row(r)).collect()
    }

    /// 17 significant digits, `.` separator, empty field for undefined values.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(
                row.iter()
                    .map(|c| c.map(|x| format!("{x:.16e}")).unwrap_or_default()),
            )?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self, CliError> {
        let mut r = csv::Reader::from_reader(input);
        let columns = r.headers()?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|f| {
                    if f.is_empty() {
                        Ok(None)
                    } else {
                        f.parse::<f64>()
                            .map(Some)
                            .map_err(|e| CliError::Config(format!("bad number '{f}': {e}")))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }

    /// Array of objects keyed by column name; undefined values are `null`.
    pub fn to_json(&self) -> serde_json::Value {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let obj = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| {
                        let value = v
                            .and_then(serde_json::Number::from_f64)
                            .map(serde_json::Value::Number)
                            .unwrap_or(serde_json::Value::Null);
                        (c.clone(), value)
                    })
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }

    pub fn from_json(value: &serde_json::Value, columns: &[&str]) -> Result<Self, CliError> {
        let bad = || CliError::Config("expected a JSON array of row objects".into());
        let mut t = Self::new(columns);
        for row in value.as_array().ok_or_else(bad)? {
            let obj = row.as_object().ok_or_else(bad)?;
            t.rows.push(
                columns
                    .iter()
                    .map(|c| obj.get(*c).and_then(|v| v.as_f64()))
                    .collect(),
            );
        }
        Ok(t)
    }

    pub fn write<W: Write>(&self, format: Format, mut out: W) -> Result<(), CliError> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, &self.to_json())
                    .map_err(std::io::Error::other)?;
                writeln!(out)?;
                Ok(())
            }
        }
    }
}

fn report_row(r: &ForceReport) -> Vec<Option<f64>> {
    vec![
        Some(r.z_a),
        r.w,
        Some(r.v),
        Some(r.f_int),
        Some(r.f_rad),
        Some(r.f_int_additive),
        Some(r.f_rad_additive),
        r.eta_int,
        r.eta_rad,
        Some(r.rad_sigma_term),
        Some(r.rad_spin_term),
    ]
}

fn report_from_row(row: &[Option<f64>]) -> Result<ForceReport, CliError> {
    if row.len() != REPORT_COLUMNS.len() {
        return Err(CliError::Config(format!(
            "row has {} fields, expected 11",
            row.len()
        )));
    }
    let req = |i: usize| {
        row[i].ok_or_else(|| CliError::Config(format!("missing value for {}", REPORT_COLUMNS[i])))
    };
    Ok(ForceReport {
        z_a: req(0)?,
        w: row[1],
        v: req(2)?,
        f_int: req(3)?,
        f_rad: req(4)?,
        f_int_additive: req(5)?,
        f_rad_additive: req(6)?,
        eta_int: row[7],
        eta_rad: row[8],
        rad_sigma_term: req(9)?,
        rad_spin_term: req(10)?,
    })
}

pub fn cmd_single(cfg: &RunConfig) -> Result<Table, CliError> {
    let report = force_cavity(
        &cfg.single_plane()?,
        &cfg.particle()?,
        &cfg.motion()?,
        &cfg.quadrature()?,
    )
    .map_err(numeric)?;
    if report.f_rad != 0.0 {
        log::info!(
            "spin suppression phi = {}",
            report.rad_sigma_term / report.f_rad
        );
    }
    Ok(Table::from_reports(&[report]))
}

pub fn cmd_cavity(cfg: &RunConfig) -> Result<Table, CliError> {
    let report = force_cavity(
        &cfg.cavity()?,
        &cfg.particle()?,
        &cfg.motion()?,
        &cfg.quadrature()?,
    )
    .map_err(numeric)?;
    Ok(Table::from_reports(&[report]))
}

pub fn fig3_curve(cfg: &RunConfig) -> Result<NonadditivityCurve, CliError> {
    let geom = cfg.cavity()?;
    if !geom.has_identical_plates() {
        return Err(CliError::Config("fig3 requires identical plates".into()));
    }
    eta_curve_between(
        &geom,
        &cfg.particle()?,
        &cfg.motion()?,
        Channel::Radiative,
        0.1,
        1.9,
        cfg.numerics.n_points,
        &cfg.quadrature()?,
    )
    .map_err(numeric)
}

pub fn cmd_fig3(cfg: &RunConfig) -> Result<Table, CliError> {
    let curve = fig3_curve(cfg)?;
    let mut t = Table::new(&FIG3_COLUMNS);
    for (&(x, eta), model) in curve.points.iter().zip(curve.model()) {
        t.rows
            .push(vec![Some(x), eta.is_finite().then_some(eta), Some(model)]);
    }
    Ok(t)
}

/// Cavity reports for `steps` equally spaced values of `param`, computed in
/// parallel and returned in sweep order.
pub fn cmd_sweep(
    cfg: &RunConfig,
    param: &str,
    from: f64,
    to: f64,
    steps: usize,
) -> Result<Table, CliError> {
    if steps == 0 {
        return Err(CliError::Config("a sweep needs at least one step".into()));
    }
    let values: Vec<f64> = (0..steps)
        .map(|i| {
            if steps == 1 {
                from
            } else {
                from + (to - from) * i as f64 / (steps - 1) as f64
            }
        })
        .collect();
    let configs = values
        .iter()
        .map(|&x| {
            let c = cfg.with_param(param, x)?;
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let reports = configs
        .par_iter()
        .map(|c| {
            force_cavity(&c.cavity()?, &c.particle()?, &c.motion()?, &c.quadrature()?)
                .map_err(numeric)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Table::from_reports(&reports))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name,
        passed,
        detail,
    }
}

/// Invariant checks on the configured cavity, with the derivative kernel
/// supplied by the caller so that a corrupted kernel can be injected.
pub fn run_checks<K>(cfg: &RunConfig, kernel: K, seed: u64) -> Result<Vec<CheckResult>, CliError>
where
    K: Fn(f64) -> crate::Result<GreenDerivative>,
{
    let geom = cfg.cavity()?;
    let particle = cfg.particle()?;
    let spec = cfg.quadrature()?;
    let scale = 1.0 / geom.decay_scale();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<f64> = (0..8).map(|_| rng.gen_range(0.05..2.0) * scale).collect();
    let mut out = Vec::new();

    let mut parity = 0.0f64;
    for &q in &samples {
        let (a, b) = (kernel(q).map_err(numeric)?, kernel(-q).map_err(numeric)?);
        let size = a.dsigma.norm().max(a.ds_y.abs()).max(f64::MIN_POSITIVE);
        parity = parity.max((a.dsigma - b.dsigma).norm() / size);
        parity = parity.max((a.ds_y + b.ds_y).abs() / size);
    }
    out.push(check(
        "parity",
        parity <= 1e-8,
        format!("max relative deviation {parity:.3e}"),
    ));

    let mut min_eig = f64::INFINITY;
    for &q in &samples {
        let k = kernel(q).map_err(numeric)?;
        let norm = k.dsigma.norm().max(f64::MIN_POSITIVE);
        min_eig = min_eig.min(k.dsigma.symmetric_eigenvalues().min() / norm);
    }
    out.push(check(
        "sigma_psd",
        min_eig >= -1e-12,
        format!("min scaled eigenvalue {min_eig:.3e}"),
    ));

    let mut fd = 0.0f64;
    let h = 1e-3 * scale.recip().min(1.0);
    for &q in samples.iter().take(3) {
        let k = kernel(q).map_err(numeric)?;
        let numeric_d = derivative_at(
            |omega| {
                green_q(q, &geom, omega, &spec)
                    .map(|g| g.sigma_spin().sigma[(2, 2)])
                    .unwrap_or(f64::NAN)
            },
            0.0,
            h,
        )
        .map_err(numeric)?;
        let size = k.dsigma[(2, 2)].abs().max(f64::MIN_POSITIVE);
        fd = fd.max((numeric_d.value - k.dsigma[(2, 2)]).abs() / size);
    }
    out.push(check(
        "finite_difference",
        fd <= 1e-5,
        format!("max relative deviation {fd:.3e}"),
    ));

    let m1 = MotionSpec::new(cfg.motion.v).map_err(config_err)?;
    let m2 = MotionSpec::new(2.0 * cfg.motion.v).map_err(config_err)?;
    let f1 = force_cavity(&geom, &particle, &m1, &spec).map_err(numeric)?;
    let f2 = force_cavity(&geom, &particle, &m2, &spec).map_err(numeric)?;
    let dev = if f1.f_rad != 0.0 {
        (f2.f_rad / f1.f_rad - 8.0).abs() / 8.0
    } else {
        0.0
    };
    out.push(check(
        "velocity_cubed",
        dev <= 1e-12,
        format!("relative deviation {dev:.3e}"),
    ));

    if geom.has_identical_plates() {
        let mirrored = geom.mirrored().map_err(numeric)?;
        let fm = force_cavity(&mirrored, &particle, &m1, &spec).map_err(numeric)?;
        let dev = match (f1.eta_rad, fm.eta_rad) {
            (Some(a), Some(b)) => (a - b).abs(),
            _ => 0.0,
        };
        out.push(check(
            "mirror_symmetry",
            dev <= 1e-8,
            format!("|eta(z) - eta(2w - z)| = {dev:.3e}"),
        ));
    }

    let bounded = f1.f_int <= 0.0 && f1.f_rad <= 0.0 && f1.rad_sigma_term <= 0.0;
    out.push(check(
        "drag_sign",
        bounded,
        format!("f_int {:e}, f_rad {:e}", f1.f_int, f1.f_rad),
    ));
    Ok(out)
}

pub fn cmd_validate<W: Write>(
    cfg: &RunConfig,
    corrupt_kernel: bool,
    seed: u64,
    mut out: W,
) -> Result<(), CliError> {
    let geom = cfg.cavity()?;
    let spec = cfg.quadrature()?;
    let kernel = |q: f64| {
        let mut k = green_derivative_at0(q, &geom, &spec)?;
        if corrupt_kernel {
            k.ds_y += 1e-3 * (-q * q).exp();
        }
        Ok(k)
    };
    let results = run_checks(cfg, kernel, seed)?;
    for r in &results {
        writeln!(out, "{r}")?;
    }
    let failed: Vec<_> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name)
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failed.join(", ")))
    }
}

/// Executes a parsed command line, writing tables to `--out` or `stdout`.
pub fn run<W: Write>(cli: &Cli, stdout: W) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(tol) = cli.rel_tol {
        cfg.numerics.rel_tol = tol;
        cfg.quadrature()?;
    }
    let format = cli.format.or(cfg.output.format).unwrap_or_default();
    let path = cli.out.clone().or_else(|| cfg.output.path.clone());
    let mut sink: Box<dyn Write> = match &path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(stdout),
    };
    let table = match &cli.command {
        Command::Single => cmd_single(&cfg)?,
        Command::Cavity => cmd_cavity(&cfg)?,
        Command::Fig3 => cmd_fig3(&cfg)?,
        Command::Sweep {
            param,
            from,
            to,
            steps,
        } => cmd_sweep(&cfg, param, *from, *to, *steps)?,
        Command::Validate { corrupt_kernel } => {
            return cmd_validate(&cfg, *corrupt_kernel, cli.seed.unwrap_or(0), &mut sink);
        }
    };
    table.write(format, &mut sink)?;
    sink.flush()?;
    Ok(())
}

/// Parses `args`, runs, reports errors on stderr and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli, std::io::stdout().lock()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("qfriction: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = RunConfig::from_toml("[geometry]\nwidth = 2.0\n").unwrap_err();
        assert_eq!(e.exit_code(), EXIT_CONFIG);
        let e = RunConfig::from_toml("[extra]\n").unwrap_err();
        assert_eq!(e.exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn invalid_models_are_config_errors() {
        let e = RunConfig::from_toml("[geometry.plate1]\nrho = -0.1\n").unwrap_err();
        assert!(e.to_string().contains("passivity violated"), "{e}");
        assert_eq!(e.exit_code(), EXIT_CONFIG);
        let e = RunConfig::from_toml("[geometry]\nw = 1.0\nz_a = 2.0\n").unwrap_err();
        assert!(e.to_string().contains("position on plate"), "{e}");
        let e = RunConfig::from_toml("[geometry.plate2]\nperfect_conductor = true\nrho = 0.5\n")
            .unwrap_err();
        assert_eq!(e.exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn perfect_conductor_plate() {
        let c = RunConfig::from_toml("[geometry.plate2]\nperfect_conductor = true\n").unwrap();
        let g = c.cavity().unwrap();
        assert!(g.plate2().is_perfect_conductor());
        assert_eq!(g.plate2().rho(), 0.0);
    }

    #[test]
    fn sweep_parameters() {
        let c = RunConfig::default();
        for p in SWEEP_PARAMS {
            c.with_param(p, 0.5).unwrap();
        }
        assert_eq!(
            c.with_param("alpha", 1.0).unwrap_err().exit_code(),
            EXIT_CONFIG
        );
        assert_eq!(
            c.with_param("r0", 0.3).unwrap().geometry.plate2.r0,
            Some(0.3)
        );
    }

    #[test]
    fn csv_preserves_bits() {
        let mut t = Table::new(&["a", "b"]);
        t.rows.push(vec![Some(0.1 + 0.2), None]);
        t.rows.push(vec![Some(-1.0e-300), Some(f64::MAX)]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = Table::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("a,b\n3.0000000000000004e-1,\n"), "{text}");
    }

    #[test]
    fn json_mirrors_columns() {
        let mut t = Table::new(&["a", "b"]);
        t.rows.push(vec![Some(1.5), None]);
        let j = t.to_json();
        assert_eq!(j[0]["a"], 1.5);
        assert!(j[0]["b"].is_null());
        assert_eq!(Table::from_json(&j, &["a", "b"]).unwrap(), t);
    }
}
