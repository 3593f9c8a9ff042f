//! Experiment configuration: a line-oriented `key = value` format with
//! `[section]` headers. One file defines the potential, the density sweep,
//! and the sampling controls, so an experiment is a reproducible artifact.
//!
//! ```text
//! [potential]
//! segment = 0 1 50
//! R0 = 1
//! r1 = 1
//! lambda_plus = 50
//! lambda_minus = 0
//!
//! [experiment]
//! densities = 1e-4 1e-5
//! N = 16
//! seeds = 1 2 3
//! n_samples = 1000
//! n_burn_in = 200
//! output_path = out.csv
//!
//! [overrides]
//! t = 1
//! const_C = 1
//! ```
//!
//! Densities are the dimensionless `a^3 rho`. Parsing reports every
//! violation, not just the first, each with its line number.

use crate::potential::{PotentialError, RadialPotential, Segment};
use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IssueKind {
    UnknownKey,
    DuplicateKey { first_line: usize },
    MissingRequired,
    InvariantViolation,
}

/// One configuration problem, pinned to a line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub line: usize,
    pub kind: IssueKind,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            IssueKind::UnknownKey => "unknown key",
            IssueKind::DuplicateKey { .. } => "duplicate key",
            IssueKind::MissingRequired => "missing required",
            IssueKind::InvariantViolation => "invariant violation",
        };
        write!(f, "line {}: {}: {}", self.line, kind, self.message)
    }
}

/// Every violation found in one parse pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for issue in &self.0 {
            writeln!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// Raw potential declaration as written in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub segments: Vec<(f64, f64, f64)>,
    pub r0: f64,
    pub r1: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

impl PotentialSpec {
    pub fn build(&self) -> Result<RadialPotential, PotentialError> {
        RadialPotential::new(
            self.segments
                .iter()
                .map(|&(r_lo, r_hi, value)| Segment { r_lo, r_hi, value })
                .collect(),
            self.r0,
            self.r1,
            self.lambda_plus,
            self.lambda_minus,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub potential: PotentialSpec,
    /// Dimensionless `a^3 rho` values, each in (0, 1).
    pub densities: Vec<f64>,
    pub n_particles: usize,
    pub seeds: Vec<u64>,
    pub n_samples: usize,
    pub n_burn_in: usize,
    pub t: f64,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub const_c: f64,
    pub output_path: String,
}

pub const DEFAULT_N_PARTICLES: usize = 16;
pub const DEFAULT_N_SAMPLES: usize = 1000;
pub const DEFAULT_N_BURN_IN: usize = 200;
pub const DEFAULT_T: f64 = 1.0;
pub const DEFAULT_CONST_C: f64 = 1.0;
pub const DEFAULT_OUTPUT_PATH: &str = "out.csv";

/// 17 significant digits, enough to round-trip any f64 exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325_u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

struct RawValue {
    line: usize,
    value: String,
}

struct Parser {
    issues: Vec<ConfigIssue>,
    values: HashMap<(String, String), RawValue>,
    segments: Vec<(usize, String)>,
    section_lines: HashMap<String, usize>,
}

impl Parser {
    fn push(&mut self, line: usize, kind: IssueKind, message: String) {
        self.issues.push(ConfigIssue {
            line,
            kind,
            message,
        });
    }

    fn take(&mut self, section: &str, key: &str) -> Option<RawValue> {
        self.values.remove(&(section.to_string(), key.to_string()))
    }

    fn parse_f64(&mut self, raw: &RawValue, key: &str) -> Option<f64> {
        match raw.value.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                self.push(
                    raw.line,
                    IssueKind::InvariantViolation,
                    format!("{key}: `{}` is not a finite number", raw.value),
                );
                None
            }
        }
    }

    fn parse_usize(&mut self, raw: &RawValue, key: &str) -> Option<usize> {
        match raw.value.parse::<usize>() {
            Ok(x) => Some(x),
            Err(_) => {
                self.push(
                    raw.line,
                    IssueKind::InvariantViolation,
                    format!("{key}: `{}` is not a nonnegative integer", raw.value),
                );
                None
            }
        }
    }
}

const POTENTIAL_KEYS: &[&str] = &["segment", "R0", "r1", "lambda_plus", "lambda_minus"];
const EXPERIMENT_KEYS: &[&str] = &[
    "densities",
    "N",
    "seeds",
    "n_samples",
    "n_burn_in",
    "output_path",
];
const OVERRIDE_KEYS: &[&str] = &["t", "c1", "c2", "const_C"];

/// Parse a config file, collecting all violations instead of stopping at
/// the first.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let mut p = Parser {
        issues: Vec::new(),
        values: HashMap::new(),
        segments: Vec::new(),
        section_lines: HashMap::new(),
    };
    let mut section: Option<String> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            let name = line[1..line.len() - 1].trim().to_string();
            match name.as_str() {
                "potential" | "experiment" | "overrides" => {
                    p.section_lines.insert(name.clone(), line_no);
                    section = Some(name);
                }
                other => {
                    p.push(
                        line_no,
                        IssueKind::UnknownKey,
                        format!("unknown section [{other}]"),
                    );
                    section = Some(other.to_string());
                }
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            p.push(
                line_no,
                IssueKind::InvariantViolation,
                format!("expected `key = value`, got `{line}`"),
            );
            continue;
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let Some(ref sec) = section else {
            p.push(
                line_no,
                IssueKind::UnknownKey,
                format!("key `{key}` appears before any [section]"),
            );
            continue;
        };
        let known = match sec.as_str() {
            "potential" => POTENTIAL_KEYS.contains(&key.as_str()),
            "experiment" => EXPERIMENT_KEYS.contains(&key.as_str()),
            "overrides" => OVERRIDE_KEYS.contains(&key.as_str()),
            _ => false,
        };
        if !known {
            p.push(
                line_no,
                IssueKind::UnknownKey,
                format!("unknown key `{key}` in [{sec}]"),
            );
            continue;
        }
        if key == "segment" {
            p.segments.push((line_no, value));
            continue;
        }
        if let Some(prev) = p.values.get(&(sec.clone(), key.clone())) {
            let first_line = prev.line;
            p.push(
                line_no,
                IssueKind::DuplicateKey { first_line },
                format!("`{key}` already defined at line {first_line}"),
            );
            continue;
        }
        p.values.insert(
            (sec.clone(), key.clone()),
            RawValue {
                line: line_no,
                value,
            },
        );
    }

    // potential section
    let potential_line = p.section_lines.get("potential").copied().unwrap_or(0);
    if !p.section_lines.contains_key("potential") {
        p.push(
            0,
            IssueKind::MissingRequired,
            "[potential] section is required".into(),
        );
    }
    let mut segments = Vec::new();
    let mut segment_lines = Vec::new();
    let seg_items = std::mem::take(&mut p.segments);
    for (line, value) in seg_items {
        let parts: Vec<&str> = value.split_whitespace().collect();
        let nums: Vec<Option<f64>> = parts
            .iter()
            .map(|s| s.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect();
        if parts.len() != 3 || nums.iter().any(Option::is_none) {
            p.push(
                line,
                IssueKind::InvariantViolation,
                format!("segment: expected `r_lo r_hi value`, got `{value}`"),
            );
            continue;
        }
        segments.push((nums[0].unwrap(), nums[1].unwrap(), nums[2].unwrap()));
        segment_lines.push(line);
    }
    if segments.is_empty() && p.section_lines.contains_key("potential") {
        p.push(
            potential_line,
            IssueKind::MissingRequired,
            "at least one `segment = r_lo r_hi value` is required".into(),
        );
    }
    let r0 = match p.take("potential", "R0") {
        Some(raw) => p.parse_f64(&raw, "R0").unwrap_or(0.0),
        None => {
            if p.section_lines.contains_key("potential") {
                p.push(
                    potential_line,
                    IssueKind::MissingRequired,
                    "R0 is required in [potential]".into(),
                );
            }
            0.0
        }
    };
    let r1 = match p.take("potential", "r1") {
        Some(raw) => p.parse_f64(&raw, "r1").unwrap_or(0.0),
        None => 0.0,
    };
    let lambda_plus = match p.take("potential", "lambda_plus") {
        Some(raw) => p.parse_f64(&raw, "lambda_plus").unwrap_or(0.0),
        None => 0.0,
    };
    let lambda_minus = match p.take("potential", "lambda_minus") {
        Some(raw) => p.parse_f64(&raw, "lambda_minus").unwrap_or(0.0),
        None => 0.0,
    };
    let potential = PotentialSpec {
        segments,
        r0,
        r1,
        lambda_plus,
        lambda_minus,
    };
    if p.issues.is_empty() {
        if let Err(e) = potential.build() {
            // attribute to the offending segment line when the error
            // carries an index, otherwise to the section header
            let line = match &e {
                PotentialError::BadSegmentBounds { index, .. }
                | PotentialError::BrokenTiling { index, .. }
                | PotentialError::CoreFloorViolated { index, .. }
                | PotentialError::GlobalFloorViolated { index, .. } => {
                    segment_lines.get(*index).copied().unwrap_or(potential_line)
                }
                _ => potential_line,
            };
            p.push(line, IssueKind::InvariantViolation, e.to_string());
        }
    }

    // experiment section
    let experiment_line = p.section_lines.get("experiment").copied().unwrap_or(0);
    if !p.section_lines.contains_key("experiment") {
        p.push(
            0,
            IssueKind::MissingRequired,
            "[experiment] section is required".into(),
        );
    }
    let densities = match p.take("experiment", "densities") {
        Some(raw) => {
            let mut out = Vec::new();
            for part in raw.value.split_whitespace() {
                match part.parse::<f64>() {
                    Ok(x) if x.is_finite() => {
                        if x <= 0.0 || x >= 1.0 {
                            p.push(
                                raw.line,
                                IssueKind::InvariantViolation,
                                format!("density {x} must lie in (0, 1)"),
                            );
                        }
                        out.push(x);
                    }
                    _ => p.push(
                        raw.line,
                        IssueKind::InvariantViolation,
                        format!("densities: `{part}` is not a finite number"),
                    ),
                }
            }
            if out.is_empty() {
                p.push(
                    raw.line,
                    IssueKind::InvariantViolation,
                    "densities must contain at least one value".into(),
                );
            }
            out
        }
        None => {
            if p.section_lines.contains_key("experiment") {
                p.push(
                    experiment_line,
                    IssueKind::MissingRequired,
                    "densities is required in [experiment]".into(),
                );
            }
            Vec::new()
        }
    };
    let seeds = match p.take("experiment", "seeds") {
        Some(raw) => {
            let mut out = Vec::new();
            for part in raw.value.split_whitespace() {
                match part.parse::<u64>() {
                    Ok(x) => out.push(x),
                    Err(_) => p.push(
                        raw.line,
                        IssueKind::InvariantViolation,
                        format!("seeds: `{part}` is not an unsigned integer"),
                    ),
                }
            }
            if out.is_empty() {
                p.push(
                    raw.line,
                    IssueKind::InvariantViolation,
                    "at least one seed is required".into(),
                );
            }
            out
        }
        None => {
            if p.section_lines.contains_key("experiment") {
                p.push(
                    experiment_line,
                    IssueKind::MissingRequired,
                    "seeds is required in [experiment]".into(),
                );
            }
            Vec::new()
        }
    };
    let n_particles = match p.take("experiment", "N") {
        Some(raw) => {
            let n = p.parse_usize(&raw, "N").unwrap_or(DEFAULT_N_PARTICLES);
            if n < 2 {
                p.push(
                    raw.line,
                    IssueKind::InvariantViolation,
                    format!("N = {n} must be at least 2"),
                );
            }
            n
        }
        None => DEFAULT_N_PARTICLES,
    };
    let n_samples = match p.take("experiment", "n_samples") {
        Some(raw) => {
            let n = p.parse_usize(&raw, "n_samples").unwrap_or(DEFAULT_N_SAMPLES);
            if n == 0 {
                p.push(
                    raw.line,
                    IssueKind::InvariantViolation,
                    "n_samples must be positive".into(),
                );
            }
            n
        }
        None => DEFAULT_N_SAMPLES,
    };
    let n_burn_in = match p.take("experiment", "n_burn_in") {
        Some(raw) => p.parse_usize(&raw, "n_burn_in").unwrap_or(DEFAULT_N_BURN_IN),
        None => DEFAULT_N_BURN_IN,
    };
    let output_path = match p.take("experiment", "output_path") {
        Some(raw) => raw.value,
        None => DEFAULT_OUTPUT_PATH.to_string(),
    };

    // overrides section
    let t = match p.take("overrides", "t") {
        Some(raw) => {
            let t = p.parse_f64(&raw, "t").unwrap_or(DEFAULT_T);
            if t <= 0.0 {
                p.push(
                    raw.line,
                    IssueKind::InvariantViolation,
                    format!("t = {t} must be positive"),
                );
            }
            t
        }
        None => DEFAULT_T,
    };
    let take_c = |p: &mut Parser, key: &str| match p.take("overrides", key) {
        Some(raw) => {
            let c = p.parse_f64(&raw, key).unwrap_or(1.0);
            if c < 1.0 {
                p.push(
                    raw.line,
                    IssueKind::InvariantViolation,
                    format!("{key} = {c} must be at least 1"),
                );
            }
            Some(c)
        }
        None => None,
    };
    let c1 = take_c(&mut p, "c1");
    let c2 = take_c(&mut p, "c2");
    let const_c = match p.take("overrides", "const_C") {
        Some(raw) => p.parse_f64(&raw, "const_C").unwrap_or(DEFAULT_CONST_C),
        None => DEFAULT_CONST_C,
    };

    if !p.issues.is_empty() {
        p.issues.sort_by_key(|i| i.line);
        return Err(ConfigErrors(p.issues));
    }
    Ok(ExperimentConfig {
        potential,
        densities,
        n_particles,
        seeds,
        n_samples,
        n_burn_in,
        t,
        c1,
        c2,
        const_c,
        output_path,
    })
}

impl ExperimentConfig {
    /// The validated potential. Parsing already proved it builds.
    pub fn potential(&self) -> RadialPotential {
        self.potential
            .build()
            .expect("config carried an invalid potential past validation")
    }

    /// Canonical text form; `parse_config(emit(c)) == c`.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        out.push_str("[potential]\n");
        for &(lo, hi, v) in &self.potential.segments {
            out.push_str(&format!(
                "segment = {} {} {}\n",
                format_float(lo),
                format_float(hi),
                format_float(v)
            ));
        }
        out.push_str(&format!("R0 = {}\n", format_float(self.potential.r0)));
        out.push_str(&format!("r1 = {}\n", format_float(self.potential.r1)));
        out.push_str(&format!(
            "lambda_plus = {}\n",
            format_float(self.potential.lambda_plus)
        ));
        out.push_str(&format!(
            "lambda_minus = {}\n",
            format_float(self.potential.lambda_minus)
        ));
        out.push_str("\n[experiment]\n");
        let densities: Vec<String> = self.densities.iter().map(|&d| format_float(d)).collect();
        out.push_str(&format!("densities = {}\n", densities.join(" ")));
        out.push_str(&format!("N = {}\n", self.n_particles));
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        out.push_str(&format!("seeds = {}\n", seeds.join(" ")));
        out.push_str(&format!("n_samples = {}\n", self.n_samples));
        out.push_str(&format!("n_burn_in = {}\n", self.n_burn_in));
        out.push_str(&format!("output_path = {}\n", self.output_path));
        out.push_str("\n[overrides]\n");
        out.push_str(&format!("t = {}\n", format_float(self.t)));
        if let Some(c1) = self.c1 {
            out.push_str(&format!("c1 = {}\n", format_float(c1)));
        }
        if let Some(c2) = self.c2 {
            out.push_str(&format!("c2 = {}\n", format_float(c2)));
        }
        out.push_str(&format!("const_C = {}\n", format_float(self.const_c)));
        out
    }

    /// Stable digest of the canonical form, stamped into output headers.
    pub fn digest(&self) -> u64 {
        fnv1a64(self.emit().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[potential]
segment = 0 1 2
R0 = 1

[experiment]
densities = 1e-4
seeds = 7
";

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.potential.segments, vec![(0.0, 1.0, 2.0)]);
        assert_eq!(cfg.n_particles, DEFAULT_N_PARTICLES);
        assert_eq!(cfg.n_samples, DEFAULT_N_SAMPLES);
        assert_eq!(cfg.t, DEFAULT_T);
        assert_eq!(cfg.c1, None);
        assert_eq!(cfg.output_path, DEFAULT_OUTPUT_PATH);
        cfg.potential();
    }

    #[test]
    fn density_out_of_range_reports_line() {
        let text = MINIMAL.replace("densities = 1e-4", "densities = 1.5");
        let errs = parse_config(&text).unwrap_err();
        let issue = errs
            .0
            .iter()
            .find(|i| i.kind == IssueKind::InvariantViolation)
            .unwrap();
        assert_eq!(issue.line, 6);
        assert!(issue.message.contains("1.5"));
    }

    #[test]
    fn duplicate_key_names_both_lines() {
        let text = format!("{MINIMAL}n_samples = 10\nn_samples = 20\n");
        let errs = parse_config(&text).unwrap_err();
        let issue = &errs.0[0];
        assert!(matches!(
            issue.kind,
            IssueKind::DuplicateKey { first_line: 8 }
        ));
        assert_eq!(issue.line, 9);
    }

    #[test]
    fn unknown_key_rejected() {
        let text = format!("{MINIMAL}wibble = 3\n");
        let errs = parse_config(&text).unwrap_err();
        assert!(errs.0.iter().any(|i| i.kind == IssueKind::UnknownKey));
    }

    #[test]
    fn all_violations_collected() {
        let text = "\
[potential]
segment = 0 1 nope
R0 = 1

[experiment]
densities = 2.0
seeds = -1
N = 1
";
        let errs = parse_config(text).unwrap_err();
        assert!(errs.0.len() >= 4, "got {:?}", errs);
    }

    #[test]
    fn potential_invariants_surface_with_segment_line() {
        let text = "\
[potential]
segment = 0 1 2
segment = 1.5 2 1
R0 = 2

[experiment]
densities = 1e-4
seeds = 1
";
        let errs = parse_config(text).unwrap_err();
        assert_eq!(errs.0.len(), 1);
        assert_eq!(errs.0[0].line, 3);
        assert_eq!(errs.0[0].kind, IssueKind::InvariantViolation);
    }

    #[test]
    fn round_trip_is_identity() {
        let text = "\
[potential]
segment = 0 0.5 50
segment = 0.5 1.25 -0.75
R0 = 1.25
r1 = 0.5
lambda_plus = 50
lambda_minus = 0.75

[experiment]
densities = 1e-3 1e-4 1e-5
N = 64
seeds = 1 2 3 4 5
n_samples = 1200
n_burn_in = 400
output_path = sweep.csv

[overrides]
t = 0.5
c1 = 12
const_C = 2
";
        let cfg = parse_config(text).unwrap();
        let cfg2 = parse_config(&cfg.emit()).unwrap();
        assert_eq!(cfg, cfg2);
        assert_eq!(cfg.digest(), cfg2.digest());
    }
}
