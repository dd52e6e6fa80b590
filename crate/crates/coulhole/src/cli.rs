//! Command-line front end.
//!
//! Every command resolves its flags (config file first, command line
//! second), computes, and hands back the files it wants written. The
//! caller writes them together with a `run-manifest.json` that repeats
//! the run when passed back through `--config`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use coulhole_core::dynamics::{
    coulomb_eta, critical_scale, gamow_factor, map_approx, map_minimum, map_sigma_exact,
    BeamParameters, CoulombScale, Propagator,
};
use coulhole_core::montecarlo::{HistogramSpec, SimulationConfig, Spacing, TransverseModel};
use coulhole_core::scales::{regime_report, ExperimentPreset, RegimeThresholds};
use coulhole_core::statistics::{
    convolve_resolution, convolve_resolution_at, correlation_function, default_time_grid,
    pushforward_with, EmissionModel, GridFunction, MapModel, TimeMap,
};
use coulhole_core::{Energy, Error as CoreError, Length, Quantity, Time, Velocity};

use crate::config;
use crate::csv::Table;
use crate::error::{Error, Result, EXIT_OK, EXIT_USAGE};
use crate::manifest::{RunManifest, MANIFEST_NAME};
use crate::parallel::run_simulation_parallel;
use crate::report::scales_table;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "COULHOLE_OUT_DIR";

/// Subcommand names, as typed.
pub const SUBCOMMANDS: [&str; 6] = [
    "scales",
    "map",
    "timemap",
    "correlation",
    "simulate",
    "gamow",
];

/// Format of tabular outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Comment-headed CSV.
    Csv,
    /// JSON object with the same content.
    Json,
}

/// Top-level arguments.
#[derive(Debug, Parser)]
#[command(
    name = "coulhole",
    version,
    about = "Coulomb hole and HBT scales of field-emission electron beams",
    args_override_self = true
)]
pub struct Cli {
    /// Config file (flat `key = value`) or run manifest; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory [default: $COULHOLE_OUT_DIR, else `.`].
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Format of table outputs [default: csv].
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// What to compute.
    #[command(subcommand)]
    pub command: Option<Command>,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coulomb and HBT scales of a beam, and which one dominates.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Scales(ScalesArgs),
    /// Final against initial separation, in units of s_c.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Map(MapArgs),
    /// Arrival against emission interval for several transverse offsets.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Timemap(TimemapArgs),
    /// Arrival-interval density and pair correlation, raw and smoothed.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Correlation(CorrelationArgs),
    /// Monte Carlo histograms of emission and arrival intervals.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Gamow factor for a Coulomb parameter or a relative velocity.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Gamow(GamowArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Scales(_) => "scales",
            Command::Map(_) => "map",
            Command::Timemap(_) => "timemap",
            Command::Correlation(_) => "correlation",
            Command::Simulate(_) => "simulate",
            Command::Gamow(_) => "gamow",
        }
    }
}

/// Beam flags; quantities need unit suffixes.
#[derive(Debug, Clone, Default, Args)]
pub struct BeamArgs {
    /// Final beam energy, e.g. `50keV`.
    #[arg(long = "ef", value_name = "ENERGY")]
    pub ef: Option<String>,
    /// Initial energy spread, e.g. `0.17eV`.
    #[arg(long = "de", value_name = "ENERGY")]
    pub de: Option<String>,
    /// Flight length, e.g. `100cm`.
    #[arg(long = "L", value_name = "LENGTH")]
    pub l: Option<String>,
}

/// `scales` flags.
#[derive(Debug, Clone, Args)]
pub struct ScalesArgs {
    /// Published experiment (`kot` or `kiesel`) instead of a beam triple.
    #[arg(long)]
    pub preset: Option<String>,
    /// Beam triple.
    #[command(flatten)]
    pub beam: BeamArgs,
    /// Source size, for the transverse scales.
    #[arg(long, value_name = "LENGTH")]
    pub r0: Option<String>,
    /// Ratios above this mean the Coulomb effect is negligible.
    #[arg(long, default_value_t = 100.0)]
    pub negligible_above: f64,
    /// Ratios at or below this mean it dominates.
    #[arg(long, default_value_t = 3.0)]
    pub dominant_at_or_below: f64,
}

/// `map` flags.
#[derive(Debug, Clone, Args)]
pub struct MapArgs {
    /// Smallest s_i/s_c.
    #[arg(long, default_value_t = 0.01)]
    pub u_min: f64,
    /// Largest s_i/s_c.
    #[arg(long, default_value_t = 100.0)]
    pub u_max: f64,
    /// Log-spaced sample count.
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    /// Add the piecewise approximation.
    #[arg(long)]
    pub approx: bool,
    /// Optional beam, for columns in nm.
    #[command(flatten)]
    pub beam: BeamArgs,
}

/// `timemap` flags.
#[derive(Debug, Clone, Args)]
pub struct TimemapArgs {
    /// Comma-separated transverse offsets x_i/s_c.
    #[arg(long, default_value = "0,0.05,0.1,0.3")]
    pub xi_over_sc: String,
    /// Comma-separated transverse offsets with units; needs the beam and
    /// replaces --xi-over-sc.
    #[arg(long, value_name = "LENGTHS")]
    pub xi: Option<String>,
    /// `min,max` of t_i/tau_c.
    #[arg(long, default_value = "1e-3,1e2")]
    pub ti_range: String,
    /// Log-spaced sample count.
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    /// Add the piecewise approximation.
    #[arg(long)]
    pub approx: bool,
    /// Optional beam, for columns in ns.
    #[command(flatten)]
    pub beam: BeamArgs,
}

/// `correlation` flags.
#[derive(Debug, Clone, Args)]
pub struct CorrelationArgs {
    /// Beam; required.
    #[command(flatten)]
    pub beam: BeamArgs,
    /// Mean emission interval.
    #[arg(long, default_value = "0.2ns")]
    pub tbar: String,
    /// Detector resolution, a time or a multiple of `tau_c`.
    #[arg(long, default_value = "tau_c")]
    pub tr: String,
    /// Transverse offset x_i/s_c.
    #[arg(long, default_value_t = 0.0)]
    pub xi_over_sc: f64,
    /// Largest grid cell, a time or a multiple of `tau_c`.
    #[arg(long, default_value = "0.25tau_c")]
    pub grid_spacing: String,
    /// Last time written; the computation always covers the full support.
    #[arg(long, value_name = "TIME")]
    pub output_max: Option<String>,
    /// Exact map only.
    #[arg(long)]
    pub exact: bool,
    /// Approximate map only.
    #[arg(long)]
    pub approx: bool,
    /// Monte Carlo overlay `pairs,seed`.
    #[arg(long, value_name = "N,SEED")]
    pub mc: Option<String>,
    /// Bins of the overlay histogram.
    #[arg(long, default_value_t = 100)]
    pub mc_bins: usize,
    /// Upper edge of the overlay histogram.
    #[arg(long, default_value = "50tau_c")]
    pub mc_max: String,
    /// Worker threads for the overlay (0: one per core).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

/// Transverse offset model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Transverse {
    /// No offset.
    Point,
    /// Constant offset `--x-i`.
    Fixed,
    /// Gaussian spot of width `--r0`.
    Disk,
}

/// Histogram bin placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BinSpacing {
    /// Equal widths.
    Lin,
    /// Equal ratios.
    Log,
}

/// `simulate` flags.
#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Beam; required.
    #[command(flatten)]
    pub beam: BeamArgs,
    /// Mean emission interval.
    #[arg(long, default_value = "0.2ns")]
    pub tbar: String,
    /// Pairs to propagate, e.g. `1e6`.
    #[arg(long, default_value_t = 1_000_000, value_parser = pair_count)]
    pub pairs: u64,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Transverse model.
    #[arg(long, value_enum, default_value_t = Transverse::Point)]
    pub transverse: Transverse,
    /// Offset for `--transverse fixed`.
    #[arg(long, value_name = "LENGTH")]
    pub x_i: Option<String>,
    /// Spot width for `--transverse disk`.
    #[arg(long, value_name = "LENGTH")]
    pub r0: Option<String>,
    /// Lower histogram edge, a time or a multiple of `tau_c`.
    #[arg(long, default_value = "0.1tau_c")]
    pub hist_min: String,
    /// Upper histogram edge, a time or a multiple of `tau_c`.
    #[arg(long, default_value = "50tau_c")]
    pub hist_max: String,
    /// Histogram bins.
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    /// Bin placement.
    #[arg(long, value_enum, default_value_t = BinSpacing::Log)]
    pub spacing: BinSpacing,
    /// Worker threads (0: one per core). Does not change the output.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

/// `gamow` flags: either `--eta` or `--vrel` with charges.
#[derive(Debug, Clone, Args)]
pub struct GamowArgs {
    /// Coulomb parameter.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Relative velocity, e.g. `1e6nm/ns`.
    #[arg(long, value_name = "VELOCITY")]
    pub vrel: Option<String>,
    /// Charge number of the first particle [default: -1].
    #[arg(long)]
    pub z: Option<i32>,
    /// Charge number of the second particle [default: -1].
    #[arg(long)]
    pub zprime: Option<i32>,
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    /// Subcommand name.
    pub command: &'static str,
    /// Text for standard output.
    pub stdout: String,
    /// Files to write, relative to the output directory.
    pub files: Vec<(String, String)>,
    /// Resolved parameters, defaults included.
    pub params: Vec<(String, String)>,
    /// Seed, for sampling commands.
    pub seed: Option<u64>,
}

#[derive(Default)]
struct Params(Vec<(String, String)>);

impl Params {
    fn set(&mut self, k: &str, v: impl ToString) {
        self.0.push((k.to_string(), v.to_string()));
    }

    fn opt(&mut self, k: &str, v: &Option<String>) {
        if let Some(v) = v {
            self.set(k, v);
        }
    }

    /// Parameters that can change results; the worker count cannot.
    fn for_tables(&self) -> Vec<(String, String)> {
        self.0
            .iter()
            .filter(|(k, _)| k != "workers")
            .cloned()
            .collect()
    }

    fn beam(&mut self, b: &BeamArgs) {
        self.opt("ef", &b.ef);
        self.opt("de", &b.de);
        self.opt("L", &b.l);
    }
}

fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value()
        .map(|p| p.get_name().to_string())
        .unwrap_or_default()
}

/// Parse a quantity of type `T`; a missing or wrong unit is a usage error.
pub fn quantity<T>(flag: &str, s: &str) -> Result<T>
where
    T: TryFrom<Quantity, Error = CoreError>,
{
    let q = Quantity::parse(s).map_err(|e| Error::usage(format!("--{flag} {s}: {e}")))?;
    T::try_from(q)
        .map_err(|e| Error::usage(format!("--{flag} {s}: {e} (a unit suffix is required)")))
}

/// A time given absolutely or as a multiple of `tau_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeSpec {
    /// Fixed time.
    Absolute(Time),
    /// Multiple of the critical time.
    TauC(f64),
}

impl TimeSpec {
    /// Parse `0.2ns`, `tau_c`, `4tau_c` or `0.25 tau_c`.
    pub fn parse(flag: &str, s: &str) -> Result<Self> {
        let t = s.trim();
        match t.strip_suffix("tau_c") {
            Some(k) => {
                let k = k.trim().trim_end_matches('*').trim();
                let k = if k.is_empty() {
                    1.0
                } else {
                    k.parse::<f64>()
                        .map_err(|_| Error::usage(format!("--{flag} {s}: bad multiple of tau_c")))?
                };
                Ok(TimeSpec::TauC(k))
            }
            None => Ok(TimeSpec::Absolute(quantity(flag, t)?)),
        }
    }

    /// Time for a given `tau_c`.
    pub fn resolve(self, tau_c: Time) -> Time {
        match self {
            TimeSpec::Absolute(t) => t,
            TimeSpec::TauC(k) => tau_c * k,
        }
    }
}

impl BeamArgs {
    fn given(&self) -> usize {
        [&self.ef, &self.de, &self.l]
            .iter()
            .filter(|x| x.is_some())
            .count()
    }

    /// The beam, if all three flags are present; a partial set is an error.
    pub fn optional(&self) -> Result<Option<BeamParameters>> {
        match (&self.ef, &self.de, &self.l) {
            (Some(e), Some(d), Some(l)) => Ok(Some(BeamParameters::new(
                quantity::<Energy>("ef", e)?,
                quantity::<Energy>("de", d)?,
                quantity::<Length>("L", l)?,
            )?)),
            (None, None, None) => Ok(None),
            _ => Err(Error::usage("beam needs all of --ef, --de and --L")),
        }
    }

    /// The beam; missing flags are a usage error.
    pub fn required(&self, cmd: &str) -> Result<BeamParameters> {
        self.optional()?
            .ok_or_else(|| Error::usage(format!("{cmd} needs --ef, --de and --L")))
    }
}

fn parse_list(flag: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::usage(format!("--{flag}: `{x}` is not a number")))
        })
        .collect()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let r = (hi / lo).ln();
    let mut v: Vec<f64> = (0..n)
        .map(|k| lo * (r * k as f64 / (n - 1) as f64).exp())
        .collect();
    v[0] = lo;
    v[n - 1] = hi;
    v
}

fn check_range(what: &str, lo: f64, hi: f64, n: usize) -> Result<()> {
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::usage(format!(
            "{what} needs 0 < min < max, got {lo}, {hi}"
        )));
    }
    if n < 2 {
        return Err(Error::usage("--points must be at least 2"));
    }
    Ok(())
}

fn table_file(name: &str, t: &Table, format: Format) -> Result<(String, String)> {
    Ok(match format {
        Format::Csv => (format!("{name}.csv"), t.to_csv()),
        Format::Json => (format!("{name}.json"), t.to_json()?),
    })
}

fn wrote(files: &[(String, String)]) -> String {
    files.iter().map(|(f, _)| format!("wrote {f}\n")).collect()
}

fn cmd_scales(a: &ScalesArgs, p: &mut Params, format: Format) -> Result<Run> {
    let thresholds = RegimeThresholds::new(a.negligible_above, a.dominant_at_or_below)
        .map_err(|e| Error::usage(format!("thresholds: {e}")))?;
    let r0 =
        a.r0.as_deref()
            .map(|s| quantity::<Length>("r0", s))
            .transpose()?;
    let report = match &a.preset {
        Some(name) => {
            if a.beam.given() > 0 {
                return Err(Error::usage(
                    "give either --preset or --ef/--de/--L, not both",
                ));
            }
            let preset = ExperimentPreset::find(name)
                .ok_or_else(|| Error::usage(format!("unknown preset `{name}` (kot, kiesel)")))?;
            p.set("preset", preset.name);
            preset.report(r0, &thresholds)?
        }
        None => {
            let mut beam = a.beam.optional()?.ok_or_else(|| {
                Error::usage("scales needs --preset or all of --ef, --de and --L")
            })?;
            p.beam(&a.beam);
            if let Some(r) = r0 {
                beam = beam.with_source_size(r)?;
            }
            regime_report(None, &[beam], &thresholds)
        }
    };
    p.opt("r0", &a.r0);
    p.set("negligible-above", a.negligible_above);
    p.set("dominant-at-or-below", a.dominant_at_or_below);
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    let table = scales_table(&report);
    let stdout = match format {
        Format::Csv => table.clone(),
        Format::Json => json.clone(),
    };
    Ok(Run {
        command: "scales",
        stdout,
        files: vec![("scales.json".into(), json), ("scales.txt".into(), table)],
        params: Vec::new(),
        seed: None,
    })
}

fn cmd_map(a: &MapArgs, p: &mut Params, format: Format) -> Result<Run> {
    check_range("map", a.u_min, a.u_max, a.points)?;
    let beam = a.beam.optional()?;
    p.set("u-min", a.u_min);
    p.set("u-max", a.u_max);
    p.set("points", a.points);
    p.set("approx", a.approx);
    p.beam(&a.beam);

    let unit = CoulombScale::new(Length::nm(1.0), Velocity::nm_per_ns(1.0))?;
    let sc = beam.map(|b| critical_scale(&b).s_c.as_nm());
    let mut cols = vec!["s_i/s_c".to_string(), "s_f/s_c exact".into()];
    if a.approx {
        cols.push("s_f/s_c approx".into());
    }
    if sc.is_some() {
        cols.push("s_i[nm]".into());
        cols.push("s_f exact[nm]".into());
        if a.approx {
            cols.push("s_f approx[nm]".into());
        }
    }
    let mut t = Table::new(cols);
    let (mut best, mut best_k) = (f64::INFINITY, 0);
    for (k, u) in log_grid(a.u_min, a.u_max, a.points).into_iter().enumerate() {
        let y = u * map_sigma_exact(u)?;
        if y < best {
            best = y;
            best_k = k;
        }
        let ya = a
            .approx
            .then(|| map_approx(Length::nm(u), &unit))
            .transpose()?;
        let mut row = vec![u, y];
        row.extend(ya.map(|l| l.as_nm()));
        if let Some(s) = sc {
            row.push(u * s);
            row.push(y * s);
            row.extend(ya.map(|l| l.as_nm() * s));
        }
        t.push(row);
    }
    let m = map_minimum();
    t.comments.push(format!(
        "minimum: row={best_k} s_i/s_c={} s_f/s_c={}",
        t.rows[best_k][0], best
    ));
    t.comments.push(format!(
        "analytic minimum: s_i/s_c={} s_f/s_c={}",
        m.u_star, m.y_min
    ));
    if let Some(s) = sc {
        t.comments.push(format!("s_c={s} nm"));
    }
    t.params = p.for_tables();
    let files = vec![table_file("map", &t, format)?];
    Ok(Run {
        command: "map",
        stdout: wrote(&files),
        files,
        params: Vec::new(),
        seed: None,
    })
}

fn cmd_timemap(a: &TimemapArgs, p: &mut Params, format: Format) -> Result<Run> {
    let range = parse_list("ti-range", &a.ti_range)?;
    let [lo, hi] = range[..] else {
        return Err(Error::usage("--ti-range needs `min,max`"));
    };
    check_range("--ti-range", lo, hi, a.points)?;
    let beam = a.beam.optional()?;
    let scale = beam.map(|b| critical_scale(&b));
    let xis: Vec<f64> = match &a.xi {
        Some(list) => {
            let s = scale.ok_or_else(|| Error::usage("--xi needs the beam (--ef, --de, --L)"))?;
            list.split(',')
                .map(|x| Ok(quantity::<Length>("xi", x.trim())? / s.s_c))
                .collect::<Result<_>>()?
        }
        None => parse_list("xi-over-sc", &a.xi_over_sc)?,
    };
    if let Some(bad) = xis.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::usage(format!(
            "transverse offsets must be ≥ 0, got {bad}"
        )));
    }
    match &a.xi {
        Some(x) => p.set("xi", x),
        None => p.set("xi-over-sc", &a.xi_over_sc),
    }
    p.set("ti-range", &a.ti_range);
    p.set("points", a.points);
    p.set("approx", a.approx);
    p.beam(&a.beam);

    let mut models = vec![MapModel::Exact];
    if a.approx {
        models.push(MapModel::Approximate);
    }
    let mut maps = Vec::new();
    let mut cols = vec!["t_i/tau_c".to_string()];
    for m in &models {
        for &x in &xis {
            maps.push(TimeMap::new(*m, x)?);
            cols.push(format!("t_f/tau_c {} xi={x}", model_label(*m)));
        }
    }
    if scale.is_some() {
        cols.push("t_i[ns]".into());
        for m in &models {
            for &x in &xis {
                cols.push(format!("t_f {} xi={x}[ns]", model_label(*m)));
            }
        }
    }
    let mut t = Table::new(cols);
    for tau in log_grid(lo, hi, a.points) {
        let mut row = vec![tau];
        let ys: Vec<f64> = maps
            .iter()
            .map(|m| m.forward(tau).map(|(g, _)| g))
            .collect::<coulhole_core::Result<_>>()?;
        row.extend(&ys);
        if let Some(s) = scale {
            let tc = s.tau_c.as_ns();
            row.push(tau * tc);
            row.extend(ys.iter().map(|y| y * tc));
        }
        t.push(row);
    }
    t.comments.push(format!(
        "xi = x_i/s_c; offsets: {}",
        xis.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    ));
    if let Some(s) = scale {
        t.comments.push(format!(
            "tau_c={} ns s_c={} nm",
            s.tau_c.as_ns(),
            s.s_c.as_nm()
        ));
    }
    t.params = p.for_tables();
    let files = vec![table_file("timemap", &t, format)?];
    Ok(Run {
        command: "timemap",
        stdout: wrote(&files),
        files,
        params: Vec::new(),
        seed: None,
    })
}

fn model_label(m: MapModel) -> &'static str {
    match m {
        MapModel::Exact => "exact",
        MapModel::Approximate => "approx",
    }
}

/// Density and correlation of one map model on a shared grid.
struct Curves {
    model: MapModel,
    p: GridFunction,
    p_tilde: GridFunction,
    c: GridFunction,
    c_tilde: Vec<f64>,
}

/// A positive whole number, also written as `1e6`.
fn pair_count(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim();
    if let Ok(n) = s.parse::<u64>() {
        return if n > 0 {
            Ok(n)
        } else {
            Err("need at least one pair".into())
        };
    }
    s.parse::<f64>()
        .ok()
        .filter(|x| *x >= 1.0 && x.fract() == 0.0 && *x <= u64::MAX as f64)
        .map(|x| x as u64)
        .ok_or_else(|| format!("bad pair count `{s}`"))
}

fn parse_mc(s: &str) -> Result<(u64, u64)> {
    let (n, seed) = s
        .split_once(',')
        .ok_or_else(|| Error::usage("--mc needs `pairs,seed`"))?;
    let n = pair_count(n).map_err(|e| Error::usage(format!("--mc: {e}")))?;
    let seed = seed
        .trim()
        .parse::<u64>()
        .map_err(|_| Error::usage(format!("--mc: bad seed `{seed}`")))?;
    Ok((n, seed))
}

fn cmd_correlation(a: &CorrelationArgs, p: &mut Params, format: Format) -> Result<Run> {
    let beam = a.beam.required("correlation")?;
    let t_bar: Time = quantity("tbar", &a.tbar)?;
    let tr_spec = TimeSpec::parse("tr", &a.tr)?;
    let grid_spec = TimeSpec::parse("grid-spacing", &a.grid_spacing)?;
    let mc_max = TimeSpec::parse("mc-max", &a.mc_max)?;
    let mc = a.mc.as_deref().map(parse_mc).transpose()?;
    let output_max = a
        .output_max
        .as_deref()
        .map(|s| TimeSpec::parse("output-max", s))
        .transpose()?;
    if !(a.xi_over_sc >= 0.0) || !a.xi_over_sc.is_finite() {
        return Err(Error::usage("--xi-over-sc must be ≥ 0"));
    }
    p.beam(&a.beam);
    p.set("tbar", &a.tbar);
    p.set("tr", &a.tr);
    p.set("xi-over-sc", a.xi_over_sc);
    p.set("grid-spacing", &a.grid_spacing);
    p.opt("output-max", &a.output_max);
    p.set("exact", a.exact);
    p.set("approx", a.approx);
    if let Some(m) = &a.mc {
        p.set("mc", m);
        p.set("mc-bins", a.mc_bins);
        p.set("mc-max", &a.mc_max);
        p.set("workers", a.workers);
    }

    let scale = critical_scale(&beam);
    let tc = scale.tau_c;
    let tr = tr_spec.resolve(tc);
    let beam = beam.with_emission_interval(t_bar)?.with_resolution(tr)?;
    let emission = EmissionModel::new(t_bar)?;
    let models: Vec<MapModel> = match (a.exact, a.approx) {
        (true, false) => vec![MapModel::Exact],
        (false, true) => vec![MapModel::Approximate],
        _ => vec![MapModel::Exact, MapModel::Approximate],
    };
    let maps: Vec<TimeMap> = models
        .iter()
        .map(|m| TimeMap::new(*m, a.xi_over_sc))
        .collect::<coulhole_core::Result<_>>()?;

    // one grid holding the edges of every map, so the rows line up
    let spacing = grid_spec.resolve(tc);
    let mut grid: Vec<f64> = Vec::new();
    for m in &maps {
        grid.extend(
            default_time_grid(&scale, &emission, m, spacing)?
                .iter()
                .map(|t| t.as_ns()),
        );
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs());
    let grid: Vec<Time> = grid.into_iter().map(Time::ns).collect();

    let mut curves = Vec::new();
    for (m, map) in models.iter().zip(&maps) {
        let pf = pushforward_with(&grid, &scale, &emission, map)?;
        let c = correlation_function(&pf, &emission)?;
        let p_tilde = convolve_resolution(&pf, tr)?;
        let pts: Vec<Time> = pf.abscissae_ns().iter().copied().map(Time::ns).collect();
        let c_tilde = convolve_resolution_at(&c, tr, &pts)?;
        curves.push(Curves {
            model: *m,
            p: pf,
            p_tilde,
            c,
            c_tilde,
        });
    }
    let base = curves[0].p.abscissae_ns().to_vec();
    if curves.iter().any(|c| c.p.abscissae_ns() != base.as_slice()) {
        return Err(Error::Invariant(
            "map models produced different grids".into(),
        ));
    }

    let mut cols = vec!["t/tau_c".to_string(), "t[ns]".into()];
    for c in &curves {
        let l = model_label(c.model);
        cols.push(format!("P {l}[1/ns]"));
        cols.push(format!("P~ {l}[1/ns]"));
        cols.push(format!("C {l}"));
        cols.push(format!("C~ {l}"));
    }
    let mut t = Table::new(cols);
    let last = output_max.map_or(f64::INFINITY, |m| m.resolve(tc).as_ns());
    for (i, &x) in base.iter().enumerate().take_while(|(_, x)| **x <= last) {
        let mut row = vec![x / tc.as_ns(), x];
        for c in &curves {
            row.push(c.p.values()[i]);
            row.push(c.p_tilde.values()[i]);
            row.push(c.c.values()[i]);
            row.push(c.c_tilde[i]);
        }
        t.push(row);
    }
    t.normalization = curves
        .iter()
        .map(|c| {
            format!(
                "int P {l}={} int P~ {l}={}",
                c.p.integral(),
                c.p_tilde.integral(),
                l = model_label(c.model)
            )
        })
        .collect::<Vec<_>>()
        .join(" ");
    t.comments.push(format!(
        "tau_c={} ns s_c={} nm t_r={} ns t_bar={} ns",
        tc.as_ns(),
        scale.s_c.as_nm(),
        tr.as_ns(),
        t_bar.as_ns()
    ));
    for c in &curves {
        let floor = maps[models.iter().position(|m| *m == c.model).unwrap_or(0)]
            .edges()
            .iter()
            .map(|e| e.y)
            .fold(f64::INFINITY, f64::min);
        t.comments.push(format!(
            "hole floor {}: t/tau_c={floor}",
            model_label(c.model)
        ));
        for w in c.p.warnings() {
            t.comments.push(format!(
                "warning {}: {}",
                model_label(c.model),
                serde_json::to_string(w)?
            ));
        }
    }
    t.params = p.for_tables();
    let mut files = vec![table_file("correlation", &t, format)?];

    let mut seed = None;
    if let Some((n, s)) = mc {
        seed = Some(s);
        let transverse = if a.xi_over_sc > 0.0 {
            TransverseModel::FixedOffset(scale.s_c * a.xi_over_sc)
        } else {
            TransverseModel::PointSource
        };
        let cfg = SimulationConfig {
            beam,
            n_pairs: n,
            seed: s,
            transverse,
            histogram: HistogramSpec {
                t_min: Time::ns(0.0),
                t_max: mc_max.resolve(tc),
                n_bins: a.mc_bins,
                spacing: Spacing::Linear,
            },
        };
        let res = run_simulation_parallel(&cfg, a.workers)?;
        let mut h = Table::new([
            "t_lo/tau_c",
            "t_hi/tau_c",
            "count",
            "count_se",
            "P_mc[1/ns]",
            "P_mc_se[1/ns]",
            "C_mc",
            "C_mc_se",
        ]);
        let tb = t_bar.as_ns();
        let edges = res.t_f.edges_ns();
        let dens = res.t_f.density();
        for (k, (&cnt, (d, de))) in res.t_f.counts().iter().zip(dens).enumerate() {
            let (lo, hi) = (edges[k], edges[k + 1]);
            let p0 = -(-lo / tb).exp() * (-(hi - lo) / tb).exp_m1();
            let expect = n as f64 * p0;
            let c = cnt as f64;
            h.push(vec![
                lo / tc.as_ns(),
                hi / tc.as_ns(),
                c,
                c.sqrt(),
                d,
                de,
                c / expect,
                c.sqrt() / expect,
            ]);
        }
        h.normalization =
            "P_mc=count/(pairs*width) C_mc=count/(pairs*emission bin probability)".into();
        h.comments.push(format!(
            "pairs={} underflow={} overflow={} resamples={} hole_floor_time={} ns",
            res.summary.n_pairs,
            res.t_f.underflow(),
            res.t_f.overflow(),
            res.summary.resample_count,
            res.summary.hole_floor_time.as_ns()
        ));
        h.params = p.for_tables();
        files.push(table_file("correlation-mc", &h, format)?);
    }
    Ok(Run {
        command: "correlation",
        stdout: wrote(&files),
        files,
        params: Vec::new(),
        seed,
    })
}

fn histogram_table(
    res: &coulhole_core::montecarlo::Histogram,
    tc: Time,
    params: &[(String, String)],
) -> Table {
    let mut t = Table::new([
        "t_lo/tau_c",
        "t_hi/tau_c",
        "t_lo[ns]",
        "t_hi[ns]",
        "count",
        "count_se",
        "density[1/ns]",
        "density_se[1/ns]",
    ]);
    let e = res.edges_ns();
    for (k, (&c, (d, de))) in res.counts().iter().zip(res.density()).enumerate() {
        let c = c as f64;
        t.push(vec![
            e[k] / tc.as_ns(),
            e[k + 1] / tc.as_ns(),
            e[k],
            e[k + 1],
            c,
            c.sqrt(),
            d,
            de,
        ]);
    }
    t.normalization = "density=count/(n_total*width)".into();
    t.comments.push(format!(
        "n_total={} underflow={} overflow={}",
        res.n_total(),
        res.underflow(),
        res.overflow()
    ));
    t.params = params.to_vec();
    t
}

fn cmd_simulate(a: &SimulateArgs, p: &mut Params, format: Format) -> Result<Run> {
    let beam = a.beam.required("simulate")?;
    let t_bar: Time = quantity("tbar", &a.tbar)?;
    let lo = TimeSpec::parse("hist-min", &a.hist_min)?;
    let hi = TimeSpec::parse("hist-max", &a.hist_max)?;
    let transverse = match a.transverse {
        Transverse::Point => {
            if a.x_i.is_some() || a.r0.is_some() {
                return Err(Error::usage(
                    "--x-i and --r0 need --transverse fixed or disk",
                ));
            }
            TransverseModel::PointSource
        }
        Transverse::Fixed => {
            let x = a
                .x_i
                .as_deref()
                .ok_or_else(|| Error::usage("--transverse fixed needs --x-i"))?;
            TransverseModel::FixedOffset(quantity("x-i", x)?)
        }
        Transverse::Disk => {
            let r =
                a.r0.as_deref()
                    .ok_or_else(|| Error::usage("--transverse disk needs --r0"))?;
            TransverseModel::GaussianDisk(quantity("r0", r)?)
        }
    };
    p.beam(&a.beam);
    p.set("tbar", &a.tbar);
    p.set("pairs", a.pairs);
    p.set("seed", a.seed);
    p.set("transverse", value_name(&a.transverse));
    p.opt("x-i", &a.x_i);
    p.opt("r0", &a.r0);
    p.set("hist-min", &a.hist_min);
    p.set("hist-max", &a.hist_max);
    p.set("bins", a.bins);
    p.set("spacing", value_name(&a.spacing));
    p.set("workers", a.workers);

    let prop = Propagator::new(&beam);
    let tc = prop.scale().tau_c;
    let cfg = SimulationConfig {
        beam: beam.with_emission_interval(t_bar)?,
        n_pairs: a.pairs,
        seed: a.seed,
        transverse,
        histogram: HistogramSpec {
            t_min: lo.resolve(tc),
            t_max: hi.resolve(tc),
            n_bins: a.bins,
            spacing: match a.spacing {
                BinSpacing::Lin => Spacing::Linear,
                BinSpacing::Log => Spacing::Log,
            },
        },
    };
    let res = run_simulation_parallel(&cfg, a.workers)?;
    let floor = prop.hole_floor();
    if transverse == TransverseModel::PointSource
        && res.summary.hole_floor_time.as_ns() < floor.as_ns() * (1.0 - 1e-12)
    {
        return Err(Error::Invariant(format!(
            "sampled interval {} ns below the hole floor {} ns",
            res.summary.hole_floor_time.as_ns(),
            floor.as_ns()
        )));
    }
    let mut summary = serde_json::to_value(res.summary)?;
    if let Some(o) = summary.as_object_mut() {
        o.insert("point_source_floor_time".into(), floor.as_ns().into());
        o.insert("tau_c".into(), tc.as_ns().into());
        o.insert("time_unit".into(), "ns".into());
    }
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    let files = vec![
        table_file(
            "simulate-tf",
            &histogram_table(&res.t_f, tc, &p.for_tables()),
            format,
        )?,
        table_file(
            "simulate-ti",
            &histogram_table(&res.t_i, tc, &p.for_tables()),
            format,
        )?,
        ("simulate-summary.json".into(), json.clone()),
    ];
    Ok(Run {
        command: "simulate",
        stdout: json,
        files,
        params: Vec::new(),
        seed: Some(a.seed),
    })
}

fn cmd_gamow(a: &GamowArgs, p: &mut Params) -> Result<Run> {
    let eta = match (a.eta, &a.vrel) {
        (Some(_), Some(_)) => return Err(Error::usage("give either --eta or --vrel, not both")),
        (None, None) => return Err(Error::usage("gamow needs --eta or --vrel")),
        (Some(eta), None) => {
            if a.z.is_some() || a.zprime.is_some() {
                return Err(Error::usage("--z and --zprime go with --vrel"));
            }
            if !eta.is_finite() {
                return Err(Error::usage("--eta must be finite"));
            }
            p.set("eta", eta);
            eta
        }
        (None, Some(v)) => {
            let (z, zp) = (a.z.unwrap_or(-1), a.zprime.unwrap_or(-1));
            p.set("vrel", v);
            p.set("z", z);
            p.set("zprime", zp);
            coulomb_eta(quantity("vrel", v)?, z, zp)?
        }
    };
    let g = gamow_factor(eta);
    let json = format!(
        "{}\n",
        serde_json::to_string_pretty(&serde_json::json!({ "eta": eta, "gamow_factor": g }))?
    );
    Ok(Run {
        command: "gamow",
        stdout: format!("{g}\n"),
        files: vec![("gamow.json".into(), json)],
        params: Vec::new(),
        seed: None,
    })
}

/// Parse `argv`, folding in the config file named by `--config`.
pub fn parse(argv: &[OsString]) -> std::result::Result<Cli, ParseError> {
    let cli = Cli::try_parse_from(argv).map_err(ParseError::Clap)?;
    let Some(path) = &cli.config else {
        return Ok(cli);
    };
    let cfg = config::load(path).map_err(ParseError::Other)?;
    let merged = config::merge_args(argv, &cfg, &SUBCOMMANDS).map_err(ParseError::Other)?;
    Cli::try_parse_from(merged).map_err(ParseError::Clap)
}

/// Failure while reading arguments.
#[derive(Debug)]
pub enum ParseError {
    /// From clap, including help and version requests.
    Clap(clap::Error),
    /// Config file problems.
    Other(Error),
}

/// Run the parsed command without touching the file system.
pub fn execute(cli: &Cli) -> Result<Run> {
    let cmd = cli
        .command
        .as_ref()
        .ok_or_else(|| Error::usage("no subcommand; see --help"))?;
    let format = cli.format.unwrap_or(Format::Csv);
    let mut p = Params::default();
    let mut run = match cmd {
        Command::Scales(a) => cmd_scales(a, &mut p, format)?,
        Command::Map(a) => cmd_map(a, &mut p, format)?,
        Command::Timemap(a) => cmd_timemap(a, &mut p, format)?,
        Command::Correlation(a) => cmd_correlation(a, &mut p, format)?,
        Command::Simulate(a) => cmd_simulate(a, &mut p, format)?,
        Command::Gamow(a) => cmd_gamow(a, &mut p)?,
    };
    debug_assert_eq!(run.command, cmd.name());
    p.set("format", value_name(&format));
    run.params = p.0;
    Ok(run)
}

/// Output directory: `--out-dir` (or config), then the environment, then `.`.
pub fn out_dir(cli: &Cli) -> PathBuf {
    cli.out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Write a run's files and its manifest into `dir`.
pub fn write_run(dir: &Path, run: &Run) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = Vec::new();
    for (name, body) in &run.files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        names.push(name.clone());
    }
    let m = RunManifest::new(run.command, &run.params, run.seed, names);
    let path = dir.join(MANIFEST_NAME);
    std::fs::write(&path, m.to_json()?).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

/// Entry point; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match parse(&argv) {
        Ok(c) => c,
        Err(ParseError::Clap(e)) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
        Err(ParseError::Other(e)) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let result = execute(&cli).and_then(|run| {
        write_run(&out_dir(&cli), &run)?;
        Ok(run)
    });
    match result {
        Ok(run) => {
            print!("{}", run.stdout);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> Result<Run> {
        let mut v = vec!["coulhole"];
        v.extend(args);
        let argv: Vec<OsString> = v.into_iter().map(OsString::from).collect();
        match parse(&argv) {
            Ok(c) => execute(&c),
            Err(ParseError::Clap(e)) => Err(Error::usage(e.to_string())),
            Err(ParseError::Other(e)) => Err(e),
        }
    }

    #[test]
    fn pair_counts() {
        assert_eq!(pair_count("1e6"), Ok(1_000_000));
        assert_eq!(pair_count("20000"), Ok(20_000));
        assert!(pair_count("0").is_err());
        assert!(pair_count("1.5").is_err());
        assert!(pair_count("-3").is_err());
        assert_eq!(parse_mc("2.5e5,7").unwrap(), (250_000, 7));
    }

    #[test]
    fn time_specs() {
        let tc = Time::ns(2.0);
        assert_eq!(
            TimeSpec::parse("x", "tau_c").unwrap().resolve(tc),
            Time::ns(2.0)
        );
        assert_eq!(
            TimeSpec::parse("x", "0.25tau_c").unwrap().resolve(tc),
            Time::ns(0.5)
        );
        assert_eq!(
            TimeSpec::parse("x", "3ps").unwrap().resolve(tc),
            Time::ns(3e-3)
        );
        assert!(TimeSpec::parse("x", "3").is_err());
        assert!(TimeSpec::parse("x", "3eV").is_err());
    }

    #[test]
    fn unsuffixed_quantities_are_rejected() {
        let e = run(&["scales", "--ef", "1000", "--de", "1eV", "--L", "1cm"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("unit suffix"));
    }

    #[test]
    fn scales_needs_inputs() {
        assert_eq!(run(&["scales"]).unwrap_err().exit_code(), 2);
        assert_eq!(run(&["scales", "--ef", "1keV"]).unwrap_err().exit_code(), 2);
        let both = run(&[
            "scales", "--preset", "kot", "--ef", "1keV", "--de", "1eV", "--L", "1cm",
        ]);
        assert_eq!(both.unwrap_err().exit_code(), 2);
        assert_eq!(
            run(&["scales", "--preset", "nope"])
                .unwrap_err()
                .exit_code(),
            2
        );
    }

    #[test]
    fn scales_preset_ratios() {
        let r = run(&["--format", "json", "scales", "--preset", "kiesel"]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
        let ratio = v["entries"][0]["scales"]["ratio_time"].as_f64().unwrap();
        assert!((ratio - 44.0).abs() < 3.0, "{ratio}");
        assert!(v["entries"][0]["scales"].get("s_hbt_nm").is_none());
        let r = run(&["--format", "json", "scales", "--preset", "KOT"]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
        let lo = v["entries"][0]["scales"]["ratio_time"].as_f64().unwrap();
        let hi = v["entries"][1]["scales"]["ratio_time"].as_f64().unwrap();
        assert!(
            (1.7e3..2.1e3).contains(&lo) && (6.0e3..7.4e3).contains(&hi),
            "{lo} {hi}"
        );
    }

    #[test]
    fn scales_custom_beam() {
        let r = run(&[
            "--format", "json", "scales", "--ef", "1keV", "--de", "1eV", "--L", "1cm",
        ])
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
        let s_c_cm = v["entries"][0]["scales"]["s_c_nm"].as_f64().unwrap() * 1e-7;
        assert!((s_c_cm / 6.5e-4 - 1.0).abs() < 0.03, "{s_c_cm}");
        assert!(r.params.iter().any(|(k, v)| k == "L" && v == "1cm"));
    }

    #[test]
    fn map_columns_and_minimum() {
        let r = run(&["map", "--points", "41", "--approx"]).unwrap();
        let (name, body) = &r.files[0];
        assert_eq!(name, "map.csv");
        let (header, comments, rows) = crate::csv::parse_csv(body).unwrap();
        assert!(header.contains("s_f/s_c approx"));
        assert_eq!(rows.len(), 41);
        assert!(comments[0].starts_with("minimum: row="));
        let last = rows.last().unwrap();
        assert!(last[1] / last[0] - 1.0 < 1e-5);
        assert!(last[1] > last[0]);
    }

    #[test]
    fn map_range_checked() {
        assert_eq!(run(&["map", "--u-min", "-1"]).unwrap_err().exit_code(), 2);
        assert_eq!(
            run(&["map", "--u-min", "2", "--u-max", "1"])
                .unwrap_err()
                .exit_code(),
            2
        );
        assert_eq!(run(&["map", "--points", "1"]).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn timemap_offsets() {
        let r = run(&["timemap", "--xi-over-sc", "0,0.1", "--points", "11"]).unwrap();
        let (_, _, rows) = crate::csv::parse_csv(&r.files[0].1).unwrap();
        assert_eq!(rows[0].len(), 3);
        // larger offsets arrive earlier at small t_i
        assert!(rows[0][2] < rows[0][1]);
        assert_eq!(
            run(&["timemap", "--xi-over-sc", "-1"])
                .unwrap_err()
                .exit_code(),
            2
        );
        assert_eq!(run(&["timemap", "--xi", "5nm"]).unwrap_err().exit_code(), 2);
        let r = run(&[
            "timemap", "--xi", "0nm,5nm", "--ef", "1keV", "--de", "1eV", "--L", "1cm", "--points",
            "5",
        ])
        .unwrap();
        assert!(r.files[0].1.contains("t_i[ns]"));
    }

    #[test]
    fn correlation_under_resolved_is_exit_3() {
        let e = run(&[
            "correlation",
            "--ef",
            "1keV",
            "--de",
            "1eV",
            "--L",
            "1cm",
            "--tbar",
            "1e-3ns",
            "--tr",
            "0.1tau_c",
        ])
        .unwrap_err();
        assert_eq!(e.exit_code(), 3, "{e}");
        assert_eq!(run(&["correlation"]).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn gamow_forms() {
        assert_eq!(run(&["gamow", "--eta", "0"]).unwrap().stdout, "1\n");
        let r = run(&["gamow", "--eta", "-0.1"]).unwrap();
        let g: f64 = r.stdout.trim().parse().unwrap();
        assert!((g - 1.347).abs() < 1e-3);
        assert_eq!(run(&["gamow"]).unwrap_err().exit_code(), 2);
        let both = run(&["gamow", "--eta", "1", "--vrel", "1e6nm/ns"]);
        assert_eq!(both.unwrap_err().exit_code(), 2);
        let r = run(&["gamow", "--vrel", "1e6nm/ns"]).unwrap();
        let g: f64 = r.stdout.trim().parse().unwrap();
        assert!(g > 0.0 && g < 1.0);
        assert_eq!(run(&["gamow", "--vrel", "1e6"]).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn simulate_needs_offset_for_fixed() {
        let e = run(&[
            "simulate",
            "--ef",
            "1keV",
            "--de",
            "1eV",
            "--L",
            "1cm",
            "--transverse",
            "fixed",
        ]);
        assert_eq!(e.unwrap_err().exit_code(), 2);
    }
}
