//! Subcommands of the `superres` binary.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use superres_core::cfi::MeasurementKind;
use superres_core::crlb::{loglog_slope, precisions, sweep, PrecisionTriple, SweepSpec};
use superres_core::measure_opt::{optimize_measurement, DesignSpec, Objective};
use superres_core::montecarlo::{crlb_saturation_study, StudySpec};
use superres_core::psf::{gaussian_psf, moments, overlaps, validate_real_psf};
use superres_core::qfi::{qfim_closed_form, qfim_grid_oracle, qfim_rank2, rho_eigensystem, GridSpec, SubspaceRep};
use superres_core::{FisherMatrix, Param, PsfModel, SourceParams};

use crate::error::CliError;
use crate::exec::RayonExecutor;
use crate::io::{fmt_num, load_measurement, load_psf, save_measurement};
use crate::table::{round, round_json, SweepTable};

/// Largest tolerated disagreement between QFIM provenances.
pub const ORACLE_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(
    name = "superres",
    version,
    about = "Quantum and classical Fisher information for two-point superresolution"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quantum Fisher information matrices at one or more points.
    Qfim(QfimArgs),
    /// Quantum and classical precisions over an (s, q) grid.
    Sweep(SweepArgs),
    /// Log-log slopes of sweep columns against s.
    Slopes(SlopesArgs),
    /// Monte Carlo check of CRLB saturation by maximum likelihood.
    Simulate(SimulateArgs),
    /// Multistart optimization of a mode-projection measurement.
    Optimize(OptimizeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PsfArgs {
    /// `gaussian` or a file of amplitude samples (`x re [im]`).
    #[arg(long, default_value = "gaussian")]
    pub psf: String,
    /// Intensity standard deviation of the Gaussian PSF.
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
    /// Flags from a `key value` file, spliced in at this position.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

impl PsfArgs {
    pub fn load(&self) -> Result<PsfModel, CliError> {
        if self.psf == "gaussian" {
            return Ok(gaussian_psf(self.width)?);
        }
        let (psf, factor) = load_psf(Path::new(&self.psf))?;
        let parity = validate_real_psf(&psf);
        if !parity.is_real {
            return Err(CliError::usage(format!(
                "PSF {} is not real (max |Im| = {:e}, momentum asymmetry = {:e})",
                self.psf, parity.max_imaginary, parity.symmetry_defect
            )));
        }
        if (factor - 1.0).abs() > 1e-9 {
            eprintln!("note: PSF samples rescaled by {factor:.9} to unit intensity");
        }
        Ok(psf)
    }

    fn describe(&self) -> Value {
        if self.psf == "gaussian" {
            json!({"kind": "gaussian", "width": self.width})
        } else {
            json!({"kind": "sampled", "file": self.psf})
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProvenanceChoice {
    Closed,
    Rank2,
    Grid,
    All,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct QfimArgs {
    #[command(flatten)]
    pub psf: PsfArgs,
    /// Separations (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub s: Vec<f64>,
    /// Relative brightnesses (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub q: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub s0: f64,
    #[arg(long, value_enum, default_value_t = ProvenanceChoice::Closed)]
    pub provenance: ProvenanceChoice,
    /// Compute all provenances and fail unless they agree within 1e-6.
    #[arg(long)]
    pub check_oracle: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Explicit separations (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub s: Option<Vec<f64>>,
    /// Log-spaced separations `min:max:points`.
    #[arg(long, value_name = "MIN:MAX:N")]
    pub s_log: Option<String>,
    /// Linearly spaced separations `min:max:points`.
    #[arg(long, value_name = "MIN:MAX:N")]
    pub s_lin: Option<String>,
    /// Relative brightnesses (comma separated).
    #[arg(long, default_value = "")]
    pub q: String,
    #[arg(long, default_value_t = 0.0)]
    pub s0: f64,
    /// Measurements: direct, hg<N>, sld-s0, sld-s, sld-q, bins<WIDTH>, or a
    /// measurement file (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "direct")]
    pub measure: Vec<String>,
}

impl GridArgs {
    pub fn s_values(&self) -> Result<Vec<f64>, CliError> {
        let given = [self.s.is_some(), self.s_log.is_some(), self.s_lin.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(CliError::usage("give exactly one of --s, --s-log, --s-lin"));
        }
        if let Some(s) = &self.s {
            return Ok(s.clone());
        }
        let (spec, log) = match (&self.s_log, &self.s_lin) {
            (Some(l), _) => (l, true),
            (_, Some(l)) => (l, false),
            _ => unreachable!(),
        };
        parse_range(spec, log)
    }

    pub fn q_values(&self) -> Result<Vec<f64>, CliError> {
        let q = parse_list(&self.q)?;
        if q.is_empty() {
            return Err(CliError::usage("the q list is empty"));
        }
        if q.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(CliError::usage("q values must lie in [0, 1]"));
        }
        Ok(q)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec, CliError> {
        let measurements = self
            .measure
            .iter()
            .map(|m| parse_measure(m).map(|k| (measure_name(m), k)))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, (name, _)) in measurements.iter().enumerate() {
            if name == "opt" || measurements[..i].iter().any(|(n, _)| n == name) {
                return Err(CliError::usage(format!(
                    "measurement name {name:?} is reserved or repeated"
                )));
            }
        }
        Ok(SweepSpec {
            s_values: self.s_values()?,
            q_values: self.q_values()?,
            s0: self.s0,
            measurements,
        })
    }
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SweepArgs {
    #[command(flatten)]
    pub psf: PsfArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Accepted for config compatibility; sweeps are deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SlopesArgs {
    #[command(flatten)]
    pub psf: PsfArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Read a sweep CSV instead of computing one.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Fit window in s.
    #[arg(long, default_value_t = 1e-3)]
    pub s_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub s_max: f64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub psf: PsfArgs,
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 0.0)]
    pub s0: f64,
    /// Photons per trial.
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value = "direct")]
    pub measure: String,
    /// Parameters to estimate (the rest are known).
    #[arg(long, value_delimiter = ',', default_value = "s0,s,q")]
    pub free: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub psf: PsfArgs,
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 0.0)]
    pub s0: f64,
    /// Hs, Hq or min-diag-ratio.
    #[arg(long, default_value = "Hs")]
    pub objective: String,
    #[arg(long, default_value_t = 4)]
    pub modes: usize,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the optimized measurement in the measurement text format.
    #[arg(long)]
    pub export: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn parse_f64(s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::usage(format!("not a number: {s:?}")))
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').filter(|f| !f.trim().is_empty()).map(parse_f64).collect()
}

/// `min:max:points`, log or linearly spaced, endpoints included.
pub fn parse_range(spec: &str, log: bool) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::usage(format!("expected MIN:MAX:N, got {spec:?}")));
    }
    let (lo, hi) = (parse_f64(parts[0])?, parse_f64(parts[1])?);
    let n: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("bad point count {:?}", parts[2])))?;
    if n == 0 || !(hi >= lo) || (log && !(lo > 0.0)) {
        return Err(CliError::usage(format!("invalid range {spec:?}")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            if i == n - 1 {
                hi
            } else if log {
                (lo.ln() + t * (hi / lo).ln()).exp()
            } else {
                lo + t * (hi - lo)
            }
        })
        .collect())
}

/// Column-name form of a measurement argument.
pub fn measure_name(m: &str) -> String {
    if m.contains('/') || m.contains('.') && Path::new(m).exists() {
        Path::new(m)
            .file_stem()
            .map_or_else(|| m.to_string(), |s| s.to_string_lossy().into_owned())
    } else {
        m.to_string()
    }
}

pub fn parse_measure(m: &str) -> Result<MeasurementKind, CliError> {
    let m = m.trim();
    Ok(match m {
        "direct" => MeasurementKind::Direct,
        "sld-s0" => MeasurementKind::Sld(Param::Centroid),
        "sld-s" => MeasurementKind::Sld(Param::Separation),
        "sld-q" => MeasurementKind::Sld(Param::Brightness),
        _ => {
            if let Some(n) = m.strip_prefix("hg").and_then(|n| n.parse().ok()) {
                MeasurementKind::ModeBasis(n)
            } else if let Some(w) = m.strip_prefix("bins").and_then(|w| w.parse::<f64>().ok()) {
                MeasurementKind::Bins {
                    width: w,
                    half_range: 10.0,
                }
            } else if Path::new(m).is_file() {
                MeasurementKind::Fixed(load_measurement(Path::new(m))?)
            } else {
                return Err(CliError::usage(format!("unknown measurement {m:?}")));
            }
        }
    })
}

fn params(s0: f64, s: f64, q: f64) -> Result<SourceParams, CliError> {
    SourceParams::new(s0, s, q).map_err(|e| CliError::usage(e.to_string()))
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::io("<stdout>", e)),
            _ => Ok(()),
        },
    }
}

fn report(mut v: Value, started: Instant) -> String {
    round_json(&mut v);
    v["timing"] = json!({"seconds": started.elapsed().as_secs_f64()});
    let mut s = serde_json::to_string_pretty(&v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn matrix_json(f: &FisherMatrix) -> Value {
    json!({
        "entries": f.entries(),
        "kind": format!("{:?}", f.kind()).to_lowercase(),
        "provenance": f.provenance().name(),
        "degenerate": Param::ALL.iter().filter(|p| f.degenerate()[p.index()]).map(|p| p.symbol()).collect::<Vec<_>>(),
    })
}

fn precision_json(h: &PrecisionTriple) -> Value {
    json!({
        "Hs0": h.h_s0(),
        "Hs": h.h_s(),
        "Hq": h.h_q(),
        "degenerate": Param::ALL.iter().filter(|p| h.degenerate[p.index()]).map(|p| p.symbol()).collect::<Vec<_>>(),
        "ill_conditioned": h.ill_conditioned,
    })
}

fn matrix_text(out: &mut String, f: &FisherMatrix) {
    writeln!(out, "provenance: {}", f.provenance().name()).unwrap();
    for (i, row) in f.entries().iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|&x| format!("{:>16}", fmt_num(round(x)))).collect();
        writeln!(out, "  {:>2} {}", Param::ALL[i].symbol(), cells.join(" ")).unwrap();
    }
    let flagged: Vec<&str> = Param::ALL
        .iter()
        .filter(|p| f.degenerate()[p.index()])
        .map(|p| p.symbol())
        .collect();
    if !flagged.is_empty() {
        writeln!(out, "degenerate: {}", flagged.join(", ")).unwrap();
    }
}

/// All QFIM provenances that are requested at one point.
fn qfim_set(psf: &PsfModel, p: SourceParams, which: ProvenanceChoice) -> Result<Vec<FisherMatrix>, CliError> {
    let ov = overlaps(psf, p.s)?;
    let mom = moments(psf)?;
    let mut out = Vec::new();
    if matches!(which, ProvenanceChoice::Closed | ProvenanceChoice::All) {
        out.push(qfim_closed_form(&ov, &mom, p)?);
    }
    if matches!(which, ProvenanceChoice::Rank2 | ProvenanceChoice::All) {
        let sub = SubspaceRep::new(&ov, &mom, p)?;
        out.push(qfim_rank2(&sub, &rho_eigensystem(&ov, p.q)?)?);
    }
    if matches!(which, ProvenanceChoice::Grid | ProvenanceChoice::All) {
        out.push(qfim_grid_oracle(psf, p, &GridSpec::default())?);
    }
    Ok(out)
}

pub fn cmd_qfim(a: &QfimArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let psf = a.psf.load()?;
    let which = if a.check_oracle {
        ProvenanceChoice::All
    } else {
        a.provenance
    };
    let mut text = String::new();
    let mut points = Vec::new();
    let mut worst = 0.0f64;
    for &q in &a.q {
        for &s in &a.s {
            let p = params(a.s0, s, q)?;
            let set = qfim_set(&psf, p, which)?;
            let spread = set
                .iter()
                .flat_map(|x| set.iter().map(move |y| x.max_abs_diff(y)))
                .fold(0.0, f64::max);
            worst = worst.max(spread);
            writeln!(text, "# s = {} q = {} s0 = {}", fmt_num(s), fmt_num(q), fmt_num(a.s0)).unwrap();
            for f in &set {
                matrix_text(&mut text, f);
            }
            let h = precisions(&set[0]);
            writeln!(
                text,
                "precisions: Hs0 = {} Hs = {} Hq = {}",
                fmt_num(round(h.h_s0())),
                fmt_num(round(h.h_s())),
                fmt_num(round(h.h_q()))
            )
            .unwrap();
            if a.check_oracle {
                writeln!(text, "max |delta| across provenances: {worst:.3e}").unwrap();
            }
            points.push(json!({
                "s": s, "q": q, "s0": a.s0,
                "matrices": set.iter().map(matrix_json).collect::<Vec<_>>(),
                "precisions": precision_json(&h),
                "max_abs_delta": spread,
            }));
        }
    }
    let body = match a.format {
        Format::Json => report(
            json!({
                "run_config": {"command": "qfim", "psf": a.psf.describe(), "s": a.s, "q": a.q, "s0": a.s0,
                               "check_oracle": a.check_oracle},
                "results": points,
                "crlb_reference": points.iter().map(|p| p["precisions"].clone()).collect::<Vec<_>>(),
            }),
            started,
        ),
        _ => text,
    };
    emit(&a.output, &body)?;
    if a.check_oracle && !(worst <= ORACLE_TOL) {
        return Err(CliError::Check(format!(
            "QFIM provenances disagree by {worst:.3e} (> {ORACLE_TOL:e})"
        )));
    }
    Ok(())
}

pub fn run_sweep(psf: &PsfModel, grid: &GridArgs) -> Result<SweepTable, CliError> {
    let spec = grid.sweep_spec()?;
    let rows = sweep(&RayonExecutor, psf, &spec)?;
    let names: Vec<String> = spec.measurements.iter().map(|(n, _)| n.clone()).collect();
    Ok(SweepTable::from_rows(&rows, &names))
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let psf = a.psf.load()?;
    let table = run_sweep(&psf, &a.grid)?;
    let body = match a.format {
        Format::Json => report(
            json!({
                "run_config": {"command": "sweep", "psf": a.psf.describe(), "s": a.grid.s_values()?,
                               "q": a.grid.q_values()?, "s0": a.grid.s0, "measure": a.grid.measure},
                "results": table,
                "crlb_reference": {"columns": "H_alpha = 1/(F^-1)_alpha,alpha per detected photon"},
            }),
            started,
        ),
        _ => table.to_csv_string()?,
    };
    emit(&a.output, &body)
}

pub fn cmd_slopes(a: &SlopesArgs) -> Result<(), CliError> {
    let table = match &a.input {
        Some(p) => SweepTable::read_csv(fs::File::open(p).map_err(|e| CliError::io(p, e))?)?,
        None => run_sweep(&a.psf.load()?, &a.grid)?,
    };
    let (si, qi) = match (table.column("s"), table.column("q")) {
        (Some(s), Some(q)) => (s, q),
        _ => return Err(CliError::usage("sweep table needs s and q columns")),
    };
    let mut qs: Vec<f64> = Vec::new();
    for r in &table.rows {
        if !qs.contains(&r[qi]) {
            qs.push(r[qi]);
        }
    }
    let mut out = String::from("q,column,slope,stderr,points\n");
    for &q in &qs {
        for (c, name) in table.columns.iter().enumerate().filter(|(_, n)| n.starts_with('H')) {
            let series: Vec<(f64, f64)> = table
                .rows
                .iter()
                .filter(|r| r[qi] == q && r[si] >= a.s_min && r[si] <= a.s_max && r[c] > 0.0)
                .map(|r| (r[si], r[c]))
                .collect();
            if series.len() < 5 {
                continue;
            }
            let fit = loglog_slope(&series)?;
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_num(q),
                name,
                fmt_num(round(fit.slope)),
                fmt_num(round(fit.stderr)),
                fit.points
            )
            .unwrap();
        }
    }
    emit(&a.output, &out)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let psf = a.psf.load()?;
    let truth = params(a.s0, a.s, a.q)?;
    let kind = parse_measure(&a.measure)?;
    let mut spec = StudySpec::new(kind, a.n, a.trials, a.seed);
    let mut free = [false; 3];
    for f in &a.free {
        let p = Param::from_symbol(f.trim()).ok_or_else(|| CliError::usage(format!("unknown parameter {f:?}")))?;
        free[p.index()] = true;
    }
    spec.mle.free = free;
    let run = crlb_saturation_study(&RayonExecutor, &psf, truth, &spec)?;
    let report_body = json!({
        "run_config": {"command": "simulate", "psf": a.psf.describe(), "s": a.s, "q": a.q, "s0": a.s0,
                       "n": a.n, "trials": a.trials, "measure": a.measure, "seed": a.seed, "free": a.free},
        "results": {
            "trials": run.trials(),
            "mean": run.mean,
            "covariance": run.covariance,
            "saturation_ratios": ratios_json(&run.ratios),
            "quantum_ratios": ratios_json(&run.quantum_ratios),
            "boundary_hits": run.boundary_hits,
            "estimates": run.estimates.iter().map(|e| e.params.to_array()).collect::<Vec<_>>(),
        },
        "crlb_reference": {
            "fisher": matrix_json(&run.fisher),
            "precisions": precision_json(&run.crlb),
            "quantum_precisions": precision_json(&run.quantum),
        },
    });
    emit(&a.output, &report(report_body, started))
}

fn ratios_json(r: &[Option<f64>; 3]) -> Value {
    let mut m = serde_json::Map::new();
    for p in Param::ALL {
        m.insert(p.symbol().to_string(), r[p.index()].map_or(Value::Null, |x| json!(x)));
    }
    Value::Object(m)
}

pub fn cmd_optimize(a: &OptimizeArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let psf = a.psf.load()?;
    let p = params(a.s0, a.s, a.q)?;
    let objective = Objective::from_name(&a.objective)
        .ok_or_else(|| CliError::usage(format!("unknown objective {:?}", a.objective)))?;
    let mut spec = DesignSpec::new(a.modes, objective, a.seed);
    spec.restarts = a.restarts;
    let d = optimize_measurement(&RayonExecutor, &spec, &psf, p)?;
    if let Some(path) = &a.export {
        save_measurement(&d.measurement, path)?;
    }
    let ratio = if d.quantum_objective > 0.0 {
        d.objective / d.quantum_objective
    } else {
        f64::NAN
    };
    let body = json!({
        "run_config": {"command": "optimize", "psf": a.psf.describe(), "s": a.s, "q": a.q, "s0": a.s0,
                       "objective": objective.name(), "modes": a.modes, "restarts": a.restarts, "seed": a.seed},
        "results": {
            "objective": d.objective,
            "quantum_objective": d.quantum_objective,
            "achieved_over_quantum": ratio,
            "best_restart": d.best_restart,
            "all_unconverged": d.all_unconverged,
            "fisher": matrix_json(&d.fisher),
            "precisions": precision_json(&precisions(&d.fisher)),
            "restarts": d.restarts.iter().map(|r| json!({
                "index": r.index, "start_objective": r.start_objective, "best_objective": r.best_objective,
                "evals": r.evals, "converged": r.converged, "angles": r.angles, "trace": r.trace,
            })).collect::<Vec<_>>(),
        },
        "crlb_reference": {
            "quantum": matrix_json(&d.quantum),
            "quantum_precisions": precision_json(&precisions(&d.quantum)),
        },
    });
    emit(&a.output, &report(body, started))
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Qfim(a) => cmd_qfim(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Slopes(a) => cmd_slopes(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Optimize(a) => cmd_optimize(a),
    }
}
