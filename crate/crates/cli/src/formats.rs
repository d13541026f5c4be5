//! On-disk formats: orbit files, estimate reports, verification reports,
//! solver configs and run manifests.
//!
//! All files are JSON. Floating-point values are written with 17 significant
//! digits so that every `f64` round-trips exactly; non-finite values become
//! `null`. Files are written to a temporary sibling and renamed into place.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dihedral_core::dynamics::VerificationReport;
use dihedral_core::estimates::EstimateReport;
use dihedral_core::solver::{InitialGuess, SolveConfig, SolveResult};
use dihedral_core::symmetry::choreography_classes;
use dihedral_core::{GeneratingLoop, SymmetryParams, Vec3};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

/// Pretty JSON with every float printed as `{:.16e}`.
struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Invalid arguments, parameters or configuration values.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf)?)
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).with_context(|| format!("cannot create directory {}", dir.display()))?;
    let mut tmp =
        tempfile::NamedTempFile::new_in(&dir).with_context(|| format!("cannot write in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("cannot move output into {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &to_json_string(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed file {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub n: usize,
    pub l: usize,
    pub s: usize,
    pub h: usize,
    #[serde(rename = "T")]
    pub period: f64,
}

impl From<&SymmetryParams> for ParamsRecord {
    fn from(p: &SymmetryParams) -> Self {
        ParamsRecord { n: p.n(), l: p.l(), s: p.s(), h: p.h(), period: p.period() }
    }
}

/// Sampled generating loop with its metadata. `nodes` holds `[t, x, y, z]`
/// rows on the fundamental domain `[0, T/2h]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitFile {
    pub n: usize,
    pub l: usize,
    pub s: usize,
    pub h: usize,
    #[serde(rename = "T")]
    pub period: f64,
    #[serde(rename = "N")]
    pub n_intervals: usize,
    pub nodes: Vec<[f64; 4]>,
    pub action: Option<f64>,
    pub min_pair_distance: Option<f64>,
    pub classes: Vec<Vec<usize>>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl OrbitFile {
    pub fn from_loop(lp: &GeneratingLoop, action: Option<f64>, min_pair_distance: Option<f64>) -> Self {
        let p = lp.params();
        OrbitFile {
            n: p.n(),
            l: p.l(),
            s: p.s(),
            h: p.h(),
            period: p.period(),
            n_intervals: lp.n_intervals(),
            nodes: lp.nodes().iter().enumerate().map(|(i, q)| [lp.time(i), q.x(), q.y(), q.z()]).collect(),
            action: action.and_then(finite),
            min_pair_distance: min_pair_distance.and_then(finite),
            classes: choreography_classes(p).classes,
        }
    }

    pub fn from_solve(result: &SolveResult) -> Self {
        Self::from_loop(&result.orbit, Some(result.action.total), Some(result.min_pair_distance))
    }

    /// Rebuilds the loop, checking the header against the node data.
    pub fn to_loop(&self) -> Result<GeneratingLoop> {
        let params = SymmetryParams::with_any_twist(self.n, self.s, self.period)?;
        if params.l() != self.l || params.h() != self.h {
            anyhow::bail!("header is inconsistent: n={} s={} imply l={} h={}", self.n, self.s, params.l(), params.h());
        }
        if self.nodes.len() != self.n_intervals + 1 {
            anyhow::bail!(
                "expected {} nodes for N={}, found {}",
                self.n_intervals + 1,
                self.n_intervals,
                self.nodes.len()
            );
        }
        let nodes = self.nodes.iter().map(|r| Vec3::new(r[1], r[2], r[3])).collect();
        Ok(GeneratingLoop::new(params, nodes)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub params: ParamsRecord,
    #[serde(rename = "N")]
    pub n_intervals: usize,
    pub test_loop: String,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "A_bound")]
    pub a_bound: f64,
    #[serde(rename = "A_numeric")]
    pub a_numeric: f64,
    pub ratio_bound: f64,
    pub ratio: f64,
    pub margin: f64,
    pub verdict: bool,
}

impl From<&EstimateReport> for EstimateRecord {
    fn from(r: &EstimateReport) -> Self {
        EstimateRecord {
            params: (&r.params).into(),
            n_intervals: r.n_intervals,
            test_loop: r.kind.name().to_string(),
            b: r.b,
            a_bound: r.a_bound,
            a_numeric: r.a_numeric,
            ratio_bound: r.ratio_bound,
            ratio: r.ratio,
            margin: r.margin,
            verdict: r.verdict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub params: ParamsRecord,
    #[serde(rename = "N")]
    pub n_intervals: usize,
    pub el_residual: Option<f64>,
    pub el_residual_relative: Option<f64>,
    pub el_at_joins: [Option<f64>; 2],
    pub closure_error: Option<f64>,
    pub energy_drift: Option<f64>,
    pub angular_momentum_drift: Option<f64>,
    pub min_pair_distance: Option<f64>,
    pub symmetry_drift: Option<f64>,
    pub integration: String,
    pub t_reached: f64,
    pub steps: usize,
    pub closure_tol: f64,
    pub el_tol: f64,
    pub passed: bool,
}

impl VerificationRecord {
    pub fn new(lp: &GeneratingLoop, v: &VerificationReport, closure_tol: f64, el_tol: f64) -> Self {
        let passed = v.closure_error < closure_tol && v.el_residual_relative < el_tol;
        VerificationRecord {
            params: lp.params().into(),
            n_intervals: lp.n_intervals(),
            el_residual: finite(v.el_residual),
            el_residual_relative: finite(v.el_residual_relative),
            el_at_joins: [finite(v.el_at_joins.0), finite(v.el_at_joins.1)],
            closure_error: finite(v.closure_error),
            energy_drift: finite(v.energy_drift),
            angular_momentum_drift: finite(v.angular_momentum_drift),
            min_pair_distance: finite(v.min_pair_distance),
            symmetry_drift: finite(v.symmetry_drift),
            integration: format!("{:?}", v.status).to_lowercase(),
            t_reached: v.t_reached,
            steps: v.steps,
            closure_tol,
            el_tol,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuessRecord {
    TestLoop,
    PerturbedTestLoop,
    File(PathBuf),
}

/// Solver configuration file. Missing fields take the library defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfigFile {
    pub n: usize,
    pub s: usize,
    #[serde(rename = "T", default = "one")]
    pub period: f64,
    #[serde(rename = "N", default = "default_grid")]
    pub n_intervals: usize,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub grad_tol: Option<f64>,
    #[serde(default)]
    pub initial_step: Option<f64>,
    #[serde(default)]
    pub backtrack: Option<f64>,
    #[serde(default)]
    pub armijo: Option<f64>,
    #[serde(default)]
    pub memory: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub perturbation: Option<f64>,
    #[serde(default)]
    pub initial_guess: Option<GuessRecord>,
    #[serde(default)]
    pub scheme: Option<String>,
}

fn one() -> f64 {
    1.0
}

fn default_grid() -> usize {
    512
}

impl SolveConfigFile {
    pub fn defaults(n: usize, s: usize) -> Self {
        SolveConfigFile {
            n,
            s,
            period: 1.0,
            n_intervals: default_grid(),
            max_iters: None,
            grad_tol: None,
            initial_step: None,
            backtrack: None,
            armijo: None,
            memory: None,
            seed: None,
            perturbation: None,
            initial_guess: None,
            scheme: None,
        }
    }

    /// Resolves the file into a solver configuration. Relative initial-guess
    /// paths are taken relative to `base`.
    pub fn resolve(&self, base: &Path, force: bool) -> Result<SolveConfig> {
        let params = if force {
            SymmetryParams::with_any_twist(self.n, self.s, self.period)?
        } else {
            SymmetryParams::new(self.n, self.s, self.period)?
        };
        let mut cfg = SolveConfig::new(params, self.n_intervals);
        macro_rules! take {
            ($($field:ident),*) => {$( if let Some(v) = self.$field { cfg.$field = v; } )*};
        }
        take!(max_iters, grad_tol, initial_step, backtrack, armijo, memory, seed, perturbation);
        if let Some(name) = &self.scheme {
            cfg.scheme = parse_scheme(name)?;
        }
        cfg.initial_guess = match &self.initial_guess {
            None | Some(GuessRecord::PerturbedTestLoop) => InitialGuess::PerturbedTestLoop,
            Some(GuessRecord::TestLoop) => InitialGuess::TestLoop,
            Some(GuessRecord::File(p)) => {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                let orbit: OrbitFile = read_json(&path)?;
                let lp = orbit.to_loop()?;
                if lp.params() != &params {
                    return Err(usage(format!("initial loop in {} has different symmetry parameters", path.display())));
                }
                let lp = if lp.n_intervals() == self.n_intervals {
                    lp
                } else if self.n_intervals.is_multiple_of(lp.n_intervals()) {
                    lp.upsample(self.n_intervals / lp.n_intervals())?
                } else {
                    return Err(usage(format!(
                        "grid N={} is not a multiple of the initial loop's N={}",
                        self.n_intervals,
                        lp.n_intervals()
                    )));
                };
                InitialGuess::Loop(lp)
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_scheme(name: &str) -> Result<dihedral_core::action::Scheme> {
    use dihedral_core::action::Scheme;
    match name {
        "trapezoid" => Ok(Scheme::Trapezoid),
        "corrected" => Ok(Scheme::Corrected),
        other => Err(usage(format!("unknown scheme {other:?}; expected \"trapezoid\" or \"corrected\""))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_time_s: f64,
    pub status: String,
    pub exit_code: i32,
    pub verdicts: serde_json::Map<String, serde_json::Value>,
    pub error: Option<String>,
}

/// `dir/stem.manifest.json` for an output `dir/stem.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    output.with_file_name(format!("{stem}.manifest.json"))
}
