//! Batch driver: configuration, the study loop and its output files.
//!
//! Configuration sources, in decreasing precedence: command-line flags,
//! a `key=value` file given by `--config`, built-in defaults.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Parser;

use crate::adapt::{adaptive_solve, AdaptConfig, AdaptiveRun, LevelRecord, RefineMode};
use crate::error::{Error, Result};
use crate::linsolve::DEFAULT_TOL;
use crate::mesh::Mesh;
use crate::problems::{default_sigma, ProblemSpec, PROBLEM_NAMES};
use crate::space::DofMap;
use crate::vi_solver::PdasOptions;

pub const HISTORY_HEADER: &str = "level,ndof,h_max,eta,err_h,q1,q2,lambda_mass,lambda_gap,pdas_iters,wall_ms";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub degree: usize,
    pub sigma: f64,
    pub theta: f64,
    pub mode: RefineMode,
    pub max_dof: usize,
    pub out: PathBuf,
    pub dump_mesh: bool,
    pub dump_estimator: bool,
    pub solver_tol: f64,
    /// PDAS active-set constant; `None` selects the automatic scale.
    pub pdas_c: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: "example1".into(),
            degree: 2,
            sigma: default_sigma(2),
            theta: 0.5,
            mode: RefineMode::Adaptive,
            max_dof: 20_000,
            out: PathBuf::from("out"),
            dump_mesh: false,
            dump_estimator: false,
            solver_tol: DEFAULT_TOL,
            pdas_c: None,
        }
    }
}

/// Raw flags. Values stay strings so that every malformed entry can be
/// reported together with the validation errors.
#[derive(Debug, Default, Parser)]
#[command(name = "plate-afem", about = "Adaptive C0 interior penalty solver for plate obstacle problems")]
pub struct Flags {
    /// example1 | example2 | example3
    #[arg(long)]
    pub problem: Option<String>,
    /// Polynomial degree (2 or 3)
    #[arg(long)]
    pub degree: Option<String>,
    /// Penalty parameter (default 6 for degree 2, 18 for degree 3)
    #[arg(long)]
    pub sigma: Option<String>,
    /// Dörfler bulk fraction in (0, 1)
    #[arg(long)]
    pub theta: Option<String>,
    /// adaptive | uniform
    #[arg(long)]
    pub mode: Option<String>,
    /// Largest number of dofs to solve for
    #[arg(long = "max-dof")]
    pub max_dof: Option<String>,
    /// Output directory
    #[arg(long)]
    pub out: Option<String>,
    /// Write the mesh of every level
    #[arg(long = "dump-mesh")]
    pub dump_mesh: bool,
    /// Write the estimator breakdown of every level
    #[arg(long = "dump-estimator")]
    pub dump_estimator: bool,
    /// Relative residual tolerance of the linear solves
    #[arg(long = "solver-tol")]
    pub solver_tol: Option<String>,
    /// PDAS active-set constant
    #[arg(long = "pdas-c")]
    pub pdas_c: Option<String>,
    /// File of key=value lines
    #[arg(long)]
    pub config: Option<PathBuf>,
}

const FILE_KEYS: [&str; 11] = [
    "problem",
    "degree",
    "sigma",
    "theta",
    "mode",
    "max_dof",
    "out",
    "dump_mesh",
    "dump_estimator",
    "solver_tol",
    "pdas_c",
];

/// Parses `argv` (program name first) and the optional config file it names.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let flags = Flags::try_parse_from(argv).map_err(|e| Error::Config(vec![e.to_string().trim_end().to_string()]))?;
    let text = match &flags.config {
        Some(p) => Some(fs::read_to_string(p)?),
        None => None,
    };
    resolve(&flags, text.as_deref())
}

/// Merges flags over file entries over defaults and validates the result.
pub fn resolve(flags: &Flags, file: Option<&str>) -> Result<RunConfig> {
    let mut errors = Vec::new();
    let mut entries: Vec<(String, String)> = Vec::new();
    if let Some(text) = file {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    let key = k.trim().replace('-', "_");
                    if FILE_KEYS.contains(&key.as_str()) {
                        entries.push((key, v.trim().to_string()));
                    } else {
                        errors.push(format!("config line {}: unknown key '{}'", n + 1, k.trim()));
                    }
                }
                None => errors.push(format!("config line {}: expected key=value", n + 1)),
            }
        }
    }
    let pick = |key: &str, flag: &Option<String>| -> Option<String> {
        flag.clone()
            .or_else(|| entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.clone()))
    };
    let pick_bool = |key: &str, flag: bool, errors: &mut Vec<String>| -> bool {
        if flag {
            return true;
        }
        match entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str()) {
            None => false,
            Some("true") | Some("1") | Some("yes") => true,
            Some("false") | Some("0") | Some("no") => false,
            Some(v) => {
                errors.push(format!("{key}: expected true or false, got '{v}'"));
                false
            }
        }
    };

    let mut cfg = RunConfig::default();
    if let Some(p) = pick("problem", &flags.problem) {
        cfg.problem = p;
    }
    fn num<T: std::str::FromStr>(key: &str, v: Option<String>, errors: &mut Vec<String>) -> Option<T> {
        let v = v?;
        match v.parse() {
            Ok(x) => Some(x),
            Err(_) => {
                errors.push(format!("{key}: malformed value '{v}'"));
                None
            }
        }
    }
    if let Some(k) = num::<usize>("degree", pick("degree", &flags.degree), &mut errors) {
        cfg.degree = k;
    }
    cfg.sigma = num::<f64>("sigma", pick("sigma", &flags.sigma), &mut errors).unwrap_or_else(|| default_sigma(cfg.degree));
    if let Some(t) = num::<f64>("theta", pick("theta", &flags.theta), &mut errors) {
        cfg.theta = t;
    }
    if let Some(m) = pick("mode", &flags.mode) {
        match m.as_str() {
            "adaptive" => cfg.mode = RefineMode::Adaptive,
            "uniform" => cfg.mode = RefineMode::Uniform,
            _ => errors.push(format!("mode: expected adaptive or uniform, got '{m}'")),
        }
    }
    if let Some(n) = num::<usize>("max_dof", pick("max_dof", &flags.max_dof), &mut errors) {
        cfg.max_dof = n;
    }
    if let Some(o) = pick("out", &flags.out) {
        cfg.out = PathBuf::from(o);
    }
    cfg.dump_mesh = pick_bool("dump_mesh", flags.dump_mesh, &mut errors);
    cfg.dump_estimator = pick_bool("dump_estimator", flags.dump_estimator, &mut errors);
    if let Some(t) = num::<f64>("solver_tol", pick("solver_tol", &flags.solver_tol), &mut errors) {
        cfg.solver_tol = t;
    }
    cfg.pdas_c = num::<f64>("pdas_c", pick("pdas_c", &flags.pdas_c), &mut errors);

    errors.extend(cfg.validate());
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errors))
    }
}

impl RunConfig {
    /// Every violated constraint, one message each.
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let problem = ProblemSpec::by_name(&self.problem);
        if problem.is_none() {
            errors.push(format!("problem: expected one of {}, got '{}'", PROBLEM_NAMES.join(", "), self.problem));
        }
        let degree_ok = self.degree == 2 || self.degree == 3;
        if !degree_ok {
            errors.push(format!("degree: expected 2 or 3, got {}", self.degree));
        }
        if !(self.sigma >= 1.0) {
            errors.push(format!("sigma: must be at least 1, got {}", self.sigma));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            errors.push(format!("theta: must lie in (0, 1), got {}", self.theta));
        }
        if !(self.solver_tol > 0.0) {
            errors.push(format!("solver_tol: must be positive, got {}", self.solver_tol));
        }
        if let Some(c) = self.pdas_c {
            if !(c > 0.0) {
                errors.push(format!("pdas_c: must be positive, got {c}"));
            }
        }
        if let (Some(p), true) = (problem, degree_ok) {
            let initial = DofMap::new(&Mesh::build_initial(p.domain), self.degree).map(|d| d.num_dofs());
            if let Ok(n) = initial {
                if self.max_dof < n {
                    errors.push(format!("max_dof: must be at least the initial dof count {n}, got {}", self.max_dof));
                }
            }
        }
        errors
    }

    pub fn adapt_config(&self) -> AdaptConfig {
        let mut cfg = AdaptConfig::new(self.degree, self.sigma, self.mode, self.max_dof);
        cfg.theta = self.theta;
        cfg.pdas = PdasOptions {
            c: self.pdas_c,
            tol: self.solver_tol,
            ..PdasOptions::default()
        };
        cfg.reference_error = true;
        cfg.keep_levels = true;
        cfg
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

pub fn write_history<W: Write>(history: &[LevelRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{HISTORY_HEADER}")?;
    for r in history {
        writeln!(
            out,
            "{},{},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{},{},{:.16e}",
            r.level,
            r.ndof,
            r.h_max,
            r.eta,
            opt(r.err_h),
            r.q1,
            r.q2,
            r.lambda_mass,
            opt(r.lambda_gap),
            r.pdas_iters,
            r.wall_ms
        )?;
    }
    Ok(())
}

/// Parses a history written by [`write_history`].
pub fn read_history(text: &str) -> Result<Vec<LevelRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(HISTORY_HEADER) {
        return Err(Error::Config(vec!["history: unexpected header".into()]));
    }
    let bad = |n: usize| Error::Config(vec![format!("history line {}: malformed", n + 2)]);
    lines
        .enumerate()
        .map(|(n, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 11 {
                return Err(bad(n));
            }
            let float = |s: &str| s.parse::<f64>().map_err(|_| bad(n));
            let maybe = |s: &str| if s.is_empty() { Ok(None) } else { float(s).map(Some) };
            let int = |s: &str| s.parse::<usize>().map_err(|_| bad(n));
            Ok(LevelRecord {
                level: int(f[0])?,
                ndof: int(f[1])?,
                h_max: float(f[2])?,
                eta: float(f[3])?,
                err_h: maybe(f[4])?,
                q1: float(f[5])?,
                q2: float(f[6])?,
                lambda_mass: float(f[7])?,
                lambda_gap: maybe(f[8])?,
                pdas_iters: int(f[9])?,
                wall_ms: float(f[10])?,
            })
        })
        .collect()
}

/// Runs the configured study and writes its files into `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<AdaptiveRun> {
    let errors = cfg.validate();
    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    let problem = ProblemSpec::by_name(&cfg.problem).expect("validated problem name");
    let result = adaptive_solve(&problem, &cfg.adapt_config())?;
    fs::create_dir_all(&cfg.out)?;
    write_history(&result.history, BufWriter::new(fs::File::create(cfg.out.join("history.csv"))?))?;
    for (l, level) in result.levels.iter().enumerate() {
        if cfg.dump_mesh {
            level.mesh.write_text(BufWriter::new(fs::File::create(level_file(&cfg.out, "mesh", l, "txt"))?))?;
        }
        if cfg.dump_estimator {
            level.report.write_csv(BufWriter::new(fs::File::create(level_file(&cfg.out, "estimator", l, "csv"))?))?;
        }
    }
    Ok(result)
}

fn level_file(dir: &Path, stem: &str, level: usize, ext: &str) -> PathBuf {
    dir.join(format!("{stem}_level_{level:03}.{ext}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str], file: Option<&str>) -> Result<RunConfig> {
        let mut argv = vec!["plate-afem"];
        argv.extend_from_slice(args);
        let flags = Flags::try_parse_from(argv).unwrap();
        resolve(&flags, file)
    }

    #[test]
    fn defaults() {
        let c = parse(&[], None).unwrap();
        assert_eq!(c.problem, "example1");
        assert_eq!(c.degree, 2);
        assert_eq!(c.sigma, 6.0);
        assert_eq!(c.theta, 0.5);
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let c = parse(&["--sigma", "20"], Some("sigma=18\ndegree=3\n")).unwrap();
        assert_eq!(c.sigma, 20.0);
        assert_eq!(c.degree, 3);
        let c = parse(&["--degree", "3"], None).unwrap();
        assert_eq!(c.sigma, 18.0);
    }

    #[test]
    fn all_errors_are_reported() {
        let Err(Error::Config(errs)) = parse(&["--theta", "1.5", "--degree", "x"], Some("colour=red\n")) else {
            panic!("expected a config error");
        };
        assert!(errs.iter().any(|e| e.starts_with("theta")));
        assert!(errs.iter().any(|e| e.starts_with("degree")));
        assert!(errs.iter().any(|e| e.contains("colour")));
    }

    #[test]
    fn history_round_trip() {
        let rec = LevelRecord {
            level: 0,
            ndof: 81,
            h_max: 0.1 + 0.2,
            eta: 1.0 / 3.0,
            err_h: None,
            q1: 2f64.sqrt(),
            q2: 0.0,
            lambda_mass: 13.195_7,
            lambda_gap: Some(1e-300),
            pdas_iters: 3,
            wall_ms: 12.5,
        };
        let mut buf = Vec::new();
        write_history(&[rec.clone()], &mut buf).unwrap();
        let back = read_history(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, vec![rec]);
    }
}
