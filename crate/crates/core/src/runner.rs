//! Subcommand orchestration and result emission.
//!
//! Every output file starts with a header comment carrying the tool
//! version, the config digest, and the seed list. Floats are printed with
//! 17 significant digits so repeated runs are byte-comparable. Workers run
//! one per (density, seed) pair; the collector writes in config order, so
//! outputs do not depend on the worker count.

use crate::config::{format_float, ExperimentConfig};
use crate::lower_bound::{self, LowerBoundError, LowerBoundReport};
use crate::parallel;
use crate::potential::RadialPotential;
use crate::scattering::{self, ScatteringError};
use crate::trial::TrialError;
use crate::vmc::{self, ChainSettings, EnergyEstimate, VmcError};
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Scatter,
    Check,
    Upper,
    Lower,
    Sweep,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub out: Option<PathBuf>,
    pub n_samples: Option<usize>,
    pub n_burn_in: Option<usize>,
    pub n_steps: Option<usize>,
    pub t: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub const_c: Option<f64>,
}

#[derive(Debug)]
pub enum RunError {
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Scattering(ScatteringError),
    Trial(TrialError),
    Vmc(VmcError),
    LowerBound(LowerBoundError),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Io { path, source } => {
                write!(f, "i/o failure on {}: {source}", path.display())
            }
            RunError::Scattering(e) => write!(f, "{e}"),
            RunError::Trial(e) => write!(f, "{e}"),
            RunError::Vmc(e) => write!(f, "{e}"),
            RunError::LowerBound(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ScatteringError> for RunError {
    fn from(e: ScatteringError) -> Self {
        RunError::Scattering(e)
    }
}

impl From<VmcError> for RunError {
    fn from(e: VmcError) -> Self {
        RunError::Vmc(e)
    }
}

impl From<LowerBoundError> for RunError {
    fn from(e: LowerBoundError) -> Self {
        RunError::LowerBound(e)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    let mut f = fs::File::create(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    f.write_all(contents.as_bytes()).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn header(cfg: &ExperimentConfig) -> String {
    let seeds: Vec<String> = cfg.seeds.iter().map(u64::to_string).collect();
    format!(
        "# bosegas {} config={:016x} seeds={}\n",
        VERSION,
        cfg.digest(),
        seeds.join(",")
    )
}

fn out_path(cfg: &ExperimentConfig, ov: &RunOverrides) -> PathBuf {
    ov.out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output_path))
}

/// Default `(c1, c2)` for a potential: the covering-constant values when a
/// positive core is declared, the degenerate `(12, 2)` otherwise.
pub fn default_c1_c2(v: &RadialPotential) -> (f64, f64) {
    let ratio = if v.r1() > 0.0 { v.r0() / v.r1() } else { 0.0 };
    lower_bound::default_c_constants(ratio)
}

fn scatter(cfg: &ExperimentConfig, ov: &RunOverrides) -> Result<i32, RunError> {
    let v = cfg.potential();
    let r_max = if v.r0() > 0.0 { 4.0 * v.r0() } else { 4.0 };
    let n_steps = ov.n_steps.unwrap_or(scattering::DEFAULT_TAIL_STEPS);
    let sol = scattering::solve_zero_energy(&v, r_max, n_steps)?;
    let mut out = header(cfg);
    out.push_str("r,u,f\n");
    for i in 0..sol.grid.len() {
        out.push_str(&format!(
            "{},{},{}\n",
            format_float(sol.grid[i]),
            format_float(sol.u[i]),
            format_float(sol.f_at(i))
        ));
    }
    out.push_str(&format!("a={}\n", format_float(sol.a)));
    write_file(&out_path(cfg, ov), &out)?;
    println!("a={}", format_float(sol.a));
    Ok(0)
}

fn check(cfg: &ExperimentConfig, ov: &RunOverrides) -> Result<i32, RunError> {
    let v = cfg.potential();
    let t = ov.t.unwrap_or(cfg.t);
    let (c1_default, c2_default) = default_c1_c2(&v);
    let c1 = ov.c1.or(cfg.c1).unwrap_or(c1_default);
    let c2 = ov.c2.or(cfg.c2).unwrap_or(c2_default);
    let report = scattering::check_conditions(&v, t, c1, c2)?;
    let mut out = header(cfg);
    out.push_str(&format!("sl_combined = {}\n", format_float(report.sl_combined)));
    out.push_str(&format!("core_ok = {}\n", report.core_ok));
    out.push_str(&format!("sl_ok = {}\n", report.sl_ok));
    out.push_str(&format!(
        "bound_state_suspected = {}\n",
        report.bound_state_suspected
    ));
    out.push_str(&format!("t = {}\n", format_float(report.inputs.t)));
    out.push_str(&format!("c1 = {}\n", format_float(report.inputs.c1)));
    out.push_str(&format!("c2 = {}\n", format_float(report.inputs.c2)));
    out.push_str(&format!(
        "lambda_plus = {}\n",
        format_float(report.inputs.lambda_plus)
    ));
    out.push_str(&format!(
        "lambda_minus = {}\n",
        format_float(report.inputs.lambda_minus)
    ));
    out.push_str(&format!("r1 = {}\n", format_float(report.inputs.r1)));
    out.push_str(&format!("R0 = {}\n", format_float(report.inputs.r0)));
    out.push_str(&format!("pass = {}\n", report.passed()));
    write_file(&out_path(cfg, ov), &out)?;
    print!("{out}");
    Ok(if report.passed() { 0 } else { 1 })
}

struct UpperTask {
    density: f64,
    seed: u64,
}

struct UpperRow {
    density: f64,
    n: usize,
    box_l: f64,
    seed: u64,
    estimate: Result<EnergyEstimate, VmcError>,
}

fn upper_rows(cfg: &ExperimentConfig, ov: &RunOverrides) -> Result<Vec<UpperRow>, RunError> {
    let v = cfg.potential();
    let a = scattering::scattering_length(&v)?;
    let n = cfg.n_particles;
    let n_samples = ov.n_samples.unwrap_or(cfg.n_samples);
    let n_burn_in = ov.n_burn_in.unwrap_or(cfg.n_burn_in);
    let mut tasks = Vec::new();
    for &density in &cfg.densities {
        for &seed in &cfg.seeds {
            tasks.push(UpperTask { density, seed });
        }
    }
    let rows = parallel::map(&tasks, |task| {
        let rho = task.density / a.powi(3);
        let box_l = (n as f64 / rho).cbrt();
        let estimate = vmc::estimate_upper_bound(
            &v,
            a,
            rho,
            n,
            ChainSettings::new(task.seed, n_samples, n_burn_in),
        );
        UpperRow {
            density: task.density,
            n,
            box_l,
            seed: task.seed,
            estimate,
        }
    });
    Ok(rows)
}

const UPPER_COLUMNS: &str = "a3rho,N,L,mean,stderr,ratio,Y_up,acceptance_rate,seed";

fn upper_row_csv(row: &UpperRow) -> Result<String, RunError> {
    let est = row.estimate.as_ref().map_err(|e| RunError::Vmc(e.clone()))?;
    let y_up = (4.0 * std::f64::consts::PI / 3.0 * row.density).powf(0.25);
    Ok(format!(
        "{},{},{},{},{},{},{},{},{}\n",
        format_float(row.density),
        row.n,
        format_float(row.box_l),
        format_float(est.mean),
        format_float(est.stderr),
        format_float(est.ratio_to_bogoliubov),
        format_float(y_up),
        format_float(est.acceptance_rate),
        row.seed
    ))
}

fn upper(cfg: &ExperimentConfig, ov: &RunOverrides) -> Result<i32, RunError> {
    let rows = upper_rows(cfg, ov)?;
    let mut out = header(cfg);
    out.push_str(UPPER_COLUMNS);
    out.push('\n');
    for row in &rows {
        out.push_str(&upper_row_csv(row)?);
    }
    write_file(&out_path(cfg, ov), &out)?;
    Ok(0)
}

fn lower_report_block(rep: &LowerBoundReport, density: f64) -> String {
    let mut out = String::new();
    out.push_str(&format!("a3rho = {}\n", format_float(density)));
    out.push_str(&format!("a = {}\n", format_float(rep.a)));
    out.push_str(&format!("rho = {}\n", format_float(rep.rho)));
    out.push_str(&format!("Y_low = {}\n", format_float(rep.y_low)));
    out.push_str(&format!("R = {}\n", format_float(rep.big_r)));
    out.push_str(&format!("ell = {}\n", format_float(rep.ell)));
    out.push_str(&format!("epsilon = {}\n", format_float(rep.epsilon)));
    out.push_str(&format!("sl_v_plus = {}\n", format_float(rep.sl_v_plus)));
    out.push_str(&format!("const_C = {}\n", format_float(rep.const_c)));
    out.push_str(&format!("t = {}\n", format_float(rep.t)));
    out.push_str(&format!(
        "floor_per_particle = {}\n",
        format_float(rep.floor_per_particle)
    ));
    out.push_str(&format!(
        "epsilon_admissible = {}\n",
        rep.epsilon_admissible
    ));
    out.push_str(&format!("R_geq_2R0a = {}\n", rep.r_geq_2r0a));
    out.push_str(&format!(
        "covering_sample_resolution = {}\n",
        lower_bound::COVERING_CENTER_SAMPLES
    ));
    out.push_str("n,temple_bound,floor\n");
    for row in &rep.temple_rows {
        let floor =
            lower_bound::cell_energy_floor(row.n, rep.ell, rep.rho, rep.a, rep.y_low, rep.const_c);
        let bound = match row.bound {
            Some(b) => format_float(b),
            None => "nan".to_string(),
        };
        out.push_str(&format!("{},{},{}\n", row.n, bound, format_float(floor)));
    }
    out
}

fn lower(cfg: &ExperimentConfig, ov: &RunOverrides) -> Result<i32, RunError> {
    let v = cfg.potential();
    let a = scattering::scattering_length(&v)?;
    let const_c = ov.const_c.unwrap_or(cfg.const_c);
    let t = ov.t.unwrap_or(cfg.t);
    let mut out = header(cfg);
    for (i, &density) in cfg.densities.iter().enumerate() {
        let rho = density / a.powi(3);
        let rep = lower_bound::assemble_lower_bound(&v, a, rho, const_c, t)?;
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&lower_report_block(&rep, density));
    }
    write_file(&out_path(cfg, ov), &out)?;
    Ok(0)
}

fn sweep(cfg: &ExperimentConfig, ov: &RunOverrides) -> Result<i32, RunError> {
    let v = cfg.potential();
    let a = scattering::scattering_length(&v)?;
    let const_c = ov.const_c.unwrap_or(cfg.const_c);
    let t = ov.t.unwrap_or(cfg.t);
    let rows = upper_rows(cfg, ov)?;
    let mut out = header(cfg);
    out.push_str(UPPER_COLUMNS);
    out.push_str(",Y_low,R,ell,epsilon,floor_per_particle\n");
    for row in &rows {
        let rho = row.density / a.powi(3);
        let rep = lower_bound::assemble_lower_bound(&v, a, rho, const_c, t)?;
        let mut line = upper_row_csv(row)?;
        line.pop(); // swap the newline for the appended lower-bound fields
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            line,
            format_float(rep.y_low),
            format_float(rep.big_r),
            format_float(rep.ell),
            format_float(rep.epsilon),
            format_float(rep.floor_per_particle)
        ));
    }
    write_file(&out_path(cfg, ov), &out)?;
    Ok(0)
}

/// Dispatch a subcommand. Exit code 0 on success, 1 when a condition check
/// fails; hard errors come back as `Err` (exit 2 in the binary).
pub fn run(
    cfg: &ExperimentConfig,
    sub: Subcommand,
    overrides: &RunOverrides,
) -> Result<i32, RunError> {
    match sub {
        Subcommand::Scatter => scatter(cfg, overrides),
        Subcommand::Check => check(cfg, overrides),
        Subcommand::Upper => upper(cfg, overrides),
        Subcommand::Lower => lower(cfg, overrides),
        Subcommand::Sweep => sweep(cfg, overrides),
    }
}
