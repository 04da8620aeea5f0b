//! Experiment runners behind the `conicond` binary.
//!
//! Every command takes a typed parameter block, a seed and a sample budget and
//! returns either a CSV table or a report. Output depends only on those inputs.

use std::fmt::Write as _;
use std::path::PathBuf;

use nalgebra::DVector;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use conicond::bounds::{
    analysis_statdim_bound, edge_thresholds, improved_bound, theorem_a_bounds, theorem_b_bound, theorem_b_min_m,
};
use conicond::condition::{
    classify_feasibility, empirical_gordon_check, empirical_kappa_ag, gordon_kappa_bound, kappa_bar,
    min_perturbation_to_primal, renegar, restricted_sv, ConditionReport, MethodChoice, RestrictedOptions,
};
use conicond::integral_geometry::{
    crofton_probability, verify_kinematic, verify_projection_formula, verify_tqc, IdentityCheckReport,
};
use conicond::numerics::{gaussian_matrix, gaussian_vector, kappa, orthonormal_basis, orthonormal_complement};
use conicond::regularizers::{
    descent_cone, finite_difference_matrix, parse_operator, AnalysisInstance, FdVariant, SubdifferentialModel,
};
use conicond::solvers::phase::{phase_transition_experiment, Family};
use conicond::statdim::{
    estimate_intrinsic_volumes, estimate_statdim, intrinsic_volumes, stojnic_recipe_l1, IVProfile, RecipeMode,
};
use conicond::{ConeRep, Estimate, Matrix, SeededStream, Vector};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_SAMPLES: usize = 1000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] conicond::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Config(msg.into()))
}

pub const COMMANDS: [&str; 8] = [
    "tv-statdim",
    "opt-m",
    "kappa-dg",
    "phase",
    "verify",
    "condition",
    "statdim",
    "project",
];

/// A complete run description, either assembled from flags or read from a file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    pub seed: u64,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(DEFAULT_SAMPLES)
    }

    /// Checks the command name and that the parameters match its schema.
    pub fn validate(&self) -> Result<()> {
        if self.samples == Some(0) {
            return config_err("samples must be positive");
        }
        match self.command.as_str() {
            "tv-statdim" => self.params::<TvStatdimParams>().map(drop),
            "opt-m" => self.params::<OptMParams>().map(drop),
            "kappa-dg" => self.params::<KappaDgParams>().map(drop),
            "phase" => self.params::<PhaseParams>().map(drop),
            "verify" => self.params::<VerifyParams>().map(drop),
            "condition" => self.params::<ConditionParams>().map(drop),
            "statdim" => self.params::<StatdimParams>().map(drop),
            "project" => self.params::<ProjectParams>().map(drop),
            other => config_err(format!(
                "unknown command {other:?}; expected one of {}",
                COMMANDS.join(", ")
            )),
        }
    }

    pub fn params<P: for<'de> Deserialize<'de>>(&self) -> Result<P> {
        serde_json::from_value(Value::Object(self.params.clone()))
            .map_err(|e| CliError::Config(format!("{} parameters: {e}", self.command)))
    }
}

/// Output of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub text: String,
    pub success: bool,
}

/// Runs the configured command; `json` selects machine-readable reports.
pub fn execute(cfg: &ExperimentConfig, json: bool) -> Result<RunOutput> {
    cfg.validate()?;
    let (seed, samples) = (cfg.seed, cfg.samples());
    let csv = |text: String| Ok(RunOutput { text, success: true });
    match cfg.command.as_str() {
        "tv-statdim" => csv(cmd_tv_statdim(&cfg.params()?, samples, seed)?),
        "opt-m" => csv(cmd_opt_m(&cfg.params()?, samples, seed)?),
        "kappa-dg" => csv(cmd_kappa_dg(&cfg.params()?, seed)?),
        "phase" => csv(cmd_phase(&cfg.params()?, samples, seed)?),
        "verify" => {
            let p: VerifyParams = cfg.params()?;
            let rep = cmd_verify(p.suite, samples, seed)?;
            let text = if json {
                serde_json::to_string_pretty(&rep)? + "\n"
            } else {
                rep.render()
            };
            Ok(RunOutput {
                text,
                success: rep.pass,
            })
        }
        "condition" => {
            let rep = cmd_condition(&cfg.params()?, seed)?;
            let text = if json {
                serde_json::to_string_pretty(&rep)? + "\n"
            } else {
                render_condition(&rep)
            };
            Ok(RunOutput { text, success: true })
        }
        "statdim" => {
            let rep = cmd_statdim(&cfg.params()?, samples, seed)?;
            let text = if json {
                serde_json::to_string_pretty(&rep)? + "\n"
            } else {
                let mut s = meta_line(seed, samples);
                let _ = writeln!(s, "# statdim={},stderr={}", rep.statdim.mean, rep.statdim.stderr);
                s + &rep.profile.to_csv()
            };
            Ok(RunOutput { text, success: true })
        }
        "project" => {
            let rep = cmd_project(&cfg.params()?)?;
            let text = if json {
                serde_json::to_string_pretty(&rep)? + "\n"
            } else {
                let mut s = meta_line(seed, samples) + "i,x,projection\n";
                for (i, (x, p)) in rep.x.iter().zip(&rep.point).enumerate() {
                    let _ = writeln!(s, "{i},{x},{p}");
                }
                let _ = writeln!(
                    s,
                    "# face_dim={},iterations={},converged={}",
                    rep.face_dim, rep.iterations, rep.converged
                );
                s
            };
            Ok(RunOutput { text, success: true })
        }
        other => config_err(format!("unknown command {other:?}")),
    }
}

pub fn meta_line(seed: u64, samples: usize) -> String {
    format!("# seed={seed},samples={samples},version={VERSION}\n")
}

/// Comma-separated table preceded by the metadata comment and a header row.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(seed: u64, samples: usize, header: &[&str]) -> Self {
        let mut text = meta_line(seed, samples);
        text.push_str(&header.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

fn cell<T: ToString>(v: T) -> String {
    v.to_string()
}

fn range(lo: usize, hi: usize, step: usize, what: &str) -> Result<Vec<usize>> {
    if step == 0 || lo > hi {
        return config_err(format!("empty {what} range {lo}..={hi} step {step}"));
    }
    Ok((lo..=hi).step_by(step).collect())
}

fn one() -> usize {
    1
}

/// A cosparse point of `D` with `s` nonzeros in `D x0` on a random support.
fn random_cosparse_instance<R: Rng>(d: &Matrix, s: usize, rng: &mut R) -> Result<AnalysisInstance> {
    let (p, n) = d.shape();
    if p != n {
        return config_err("random instances need a square operator");
    }
    if s == 0 || s > p {
        return config_err(format!("sparsity must lie in 1..={p}"));
    }
    let mut y0 = DVector::zeros(p);
    for i in sample(rng, p, s).into_iter() {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        y0[i] = sign * (1.0 + rng.random::<f64>());
    }
    let x0 = d
        .clone()
        .lu()
        .solve(&y0)
        .ok_or_else(|| CliError::Config("operator is singular".into()))?;
    Ok(AnalysisInstance::new(d.clone(), x0)?)
}

/// Statistical dimension of the l1 descent cone at `s` nonzeros in `R^p` via the recipe,
/// which never lies below the true value.
fn l1_recipe_upper(p: usize, s: usize) -> Result<f64> {
    let rv = stojnic_recipe_l1(p, s, RecipeMode::ClosedForm, 0, &SeededStream::new(0))?;
    Ok(rv.estimate.mean.min(p as f64))
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvStatdimParams {
    pub n: usize,
    #[serde(default = "one")]
    pub s_min: usize,
    #[serde(default)]
    pub s_max: Option<usize>,
    #[serde(default = "one")]
    pub s_step: usize,
}

/// Descent-cone statistical dimension of `|D x|_1` for square TV against the analysis bound.
pub fn cmd_tv_statdim(p: &TvStatdimParams, samples: usize, seed: u64) -> Result<String> {
    if p.n < 2 {
        return config_err("tv-statdim needs n >= 2");
    }
    let d = finite_difference_matrix(p.n, FdVariant::SquareBidiagonal)?;
    let grid = range(p.s_min, p.s_max.unwrap_or(p.n).min(p.n), p.s_step, "sparsity")?;
    let stream = SeededStream::new(seed);
    let mut csv = Csv::new(seed, samples, &["s", "statdim_mc", "stderr", "bound_prop13", "kappa_c"]);
    for s in grid {
        let row = stream.fork(s as u64);
        let inst = random_cosparse_instance(&d, s, &mut row.rng(0))?;
        let cone = descent_cone(&SubdifferentialModel::analysis(&inst)?);
        let est = estimate_statdim(&cone, samples, &row.fork(1))?;
        let (k, bound) = analysis_statdim_bound(&inst, l1_recipe_upper(p.n, s)?)?;
        csv.row(&[cell(s), cell(est.mean), cell(est.stderr), cell(bound), cell(k)]);
    }
    Ok(csv.finish())
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptMParams {
    pub n: usize,
    pub delta_c: f64,
    pub eta: f64,
    #[serde(default)]
    pub m_min: Option<usize>,
    #[serde(default)]
    pub m_max: Option<usize>,
    #[serde(default = "one")]
    pub m_step: usize,
    /// Defaults to `tv_square(n)`.
    #[serde(default)]
    pub operator: Option<String>,
    /// Use the inverse of the operator, as in the preconditioned bound.
    #[serde(default = "yes")]
    pub invert: bool,
}

fn yes() -> bool {
    true
}

/// `kbar2(m)` and the preconditioned bound over a grid of target dimensions.
pub fn cmd_opt_m(p: &OptMParams, samples: usize, seed: u64) -> Result<String> {
    let spec = p.operator.clone().unwrap_or_else(|| format!("tv_square({})", p.n));
    let mut a = parse_operator(&spec)?;
    if a.shape() != (p.n, p.n) {
        return config_err(format!("operator {spec} is not {0}x{0}", p.n));
    }
    if p.invert {
        a = a
            .try_inverse()
            .ok_or_else(|| CliError::Config(format!("operator {spec} is singular")))?;
    }
    let lo = p.m_min.unwrap_or_else(|| (p.delta_c.ceil() as usize).max(1));
    let grid = range(lo, p.m_max.unwrap_or(p.n).min(p.n), p.m_step, "m")?;
    let stream = SeededStream::new(seed);
    let mut csv = Csv::new(seed, samples, &["m", "kbar2", "stderr", "bound", "admissible"]);
    for m in grid {
        let need = theorem_b_min_m(p.delta_c, m, p.eta)?;
        let k = kappa_bar(&a, m, samples, &stream.fork(m as u64))?;
        let admissible = m as f64 >= need;
        let bound = k.mean * p.delta_c + (p.n - m) as f64 * p.eta;
        if admissible {
            let rep = theorem_b_bound(p.delta_c, k.mean, p.n, m, p.eta)?;
            debug_assert_eq!(rep.upper, Some(bound));
        }
        csv.row(&[
            cell(m),
            cell(k.mean),
            cell(k.stderr),
            cell(bound),
            cell(admissible as u8),
        ]);
    }
    Ok(csv.finish())
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaDgParams {
    #[serde(default = "default_rho")]
    pub rho: Vec<f64>,
    pub n_max: usize,
    #[serde(default = "default_n_step")]
    pub n_step: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

fn default_rho() -> Vec<f64> {
    vec![0.2, 0.4, 0.6, 0.8]
}

fn default_n_step() -> usize {
    50
}

fn default_trials() -> usize {
    50
}

/// Mean `kappa(D G)` for square TV `D` and Gaussian `G` with `m = floor(rho n)` columns.
pub fn cmd_kappa_dg(p: &KappaDgParams, seed: u64) -> Result<String> {
    if p.trials < 2 {
        return config_err("need at least 2 trials");
    }
    if p.rho.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
        return config_err("rho values must lie in (0, 1]");
    }
    let ns = range(p.n_step.max(2), p.n_max, p.n_step, "n")?;
    let stream = SeededStream::new(seed);
    let mut csv = Csv::new(
        seed,
        p.trials,
        &["n", "rho", "m", "mean_kappa", "stderr", "gordon_bound", "bound_valid"],
    );
    for &n in &ns {
        let d = finite_difference_matrix(n, FdVariant::SquareBidiagonal)?;
        for (j, &rho) in p.rho.iter().enumerate() {
            let m = ((rho * n as f64).floor() as usize).max(1);
            let est = empirical_kappa_ag(&d, m, p.trials, &stream.fork(n as u64).fork(j as u64))?;
            let (bound, valid) = match gordon_kappa_bound(&d, m) {
                Ok(b) if rho < 0.5 => (b, true),
                _ => (f64::NAN, false),
            };
            csv.row(&[
                cell(n),
                cell(rho),
                cell(m),
                cell(est.mean),
                cell(est.stderr),
                cell(bound),
                cell(valid as u8),
            ]);
        }
    }
    Ok(csv.finish())
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseParams {
    pub n: usize,
    pub s: usize,
    /// `l1`, `tv_square`, or an operator such as `tv_rect(n)`.
    #[serde(default = "default_family")]
    pub family: String,
    #[serde(default)]
    pub m_min: Option<usize>,
    #[serde(default)]
    pub m_max: Option<usize>,
    #[serde(default = "default_m_step")]
    pub m_step: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_family() -> String {
    "l1".into()
}

fn default_m_step() -> usize {
    2
}

fn default_eta() -> f64 {
    0.1
}

pub fn parse_family(name: &str) -> Result<Family> {
    Ok(match name {
        "l1" => Family::L1,
        "tv_square" => Family::TvSquare,
        other => Family::Analysis(parse_operator(other)?),
    })
}

/// Success rates of basis pursuit with the predicted transition window.
///
/// `recipe_delta` is the recipe value for l1 and a Monte Carlo descent-cone
/// statistical dimension at one random instance otherwise.
pub fn cmd_phase(p: &PhaseParams, samples: usize, seed: u64) -> Result<String> {
    let family = parse_family(&p.family)?;
    let grid = range(
        p.m_min.unwrap_or(p.m_step).max(1),
        p.m_max.unwrap_or(p.n).min(p.n),
        p.m_step,
        "m",
    )?;
    let stream = SeededStream::new(seed);
    let delta = match &family {
        Family::L1 => {
            stojnic_recipe_l1(p.n, p.s, RecipeMode::ClosedForm, 0, &stream)?
                .estimate
                .mean
        }
        Family::TvSquare | Family::Analysis(_) => {
            let d = match &family {
                Family::Analysis(d) => d.clone(),
                _ => finite_difference_matrix(p.n, FdVariant::SquareBidiagonal)?,
            };
            let inst = if d.nrows() == d.ncols() {
                random_cosparse_instance(&d, p.s, &mut stream.fork(2).rng(0))?
            } else {
                cosparse_instance_any(&d, p.s, &stream.fork(2))?
            };
            estimate_statdim(
                &descent_cone(&SubdifferentialModel::analysis(&inst)?),
                samples,
                &stream.fork(3),
            )?
            .mean
        }
    };
    let th = edge_thresholds(delta.clamp(0.0, p.n as f64), p.n, p.eta)?;
    let table = phase_transition_experiment(&family, p.n, p.s, &grid, p.trials, &stream.fork(1))?;
    let mut csv = Csv::new(
        seed,
        samples,
        &[
            "m",
            "rate",
            "wilson_lo",
            "wilson_hi",
            "m_succeed",
            "m_fail",
            "recipe_delta",
        ],
    );
    for pt in &table.points {
        csv.row(&[
            cell(pt.m),
            cell(pt.rate),
            cell(pt.wilson_lo),
            cell(pt.wilson_hi),
            cell(th.m_succeed.value),
            cell(th.m_fail.value),
            cell(delta),
        ]);
    }
    Ok(csv.finish())
}

/// For non-square operators: a Gaussian point in the null space of `p - s` random rows.
fn cosparse_instance_any(d: &Matrix, s: usize, stream: &SeededStream) -> Result<AnalysisInstance> {
    let (rows, n) = d.shape();
    if s == 0 || s > rows || rows - s >= n {
        return config_err(format!("cannot place {s} nonzeros for a {rows}x{n} operator"));
    }
    let mut rng = stream.rng(0);
    let zero = sample(&mut rng, rows, rows - s).into_vec();
    let sub = Matrix::from_fn(n, zero.len(), |i, j| d[(zero[j], i)]);
    let null = orthonormal_complement(&orthonormal_basis(&sub, 1e-12)?);
    let x0 = &null * gaussian_vector(null.ncols(), &mut rng);
    Ok(AnalysisInstance::new(d.clone(), x0)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Cones,
    Statdim,
    Kinematic,
    Condition,
    Bounds,
    Gordon,
}

impl std::str::FromStr for Suite {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.into())).map_err(|_| CliError::Config(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyParams {
    pub suite: Suite,
}

/// One verified property; `z` is present for Monte Carlo checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub z: Option<f64>,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn render(&self) -> String {
        let mut s = meta_line(self.seed, self.samples);
        for c in &self.checks {
            let z = c.z.map_or_else(|| "-".to_string(), |z| format!("{z:.3}"));
            let _ = writeln!(
                s,
                "{} {} z={} {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                z,
                c.detail
            );
        }
        let _ = writeln!(s, "{}", if self.pass { "ALL PASS" } else { "FAILED" });
        s
    }
}

const Z_MAX: f64 = 3.0;

fn z_check(name: impl Into<String>, z: f64, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        z: Some(z),
        pass: z.abs() <= Z_MAX,
        detail: detail.into(),
    }
}

fn flag_check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        z: None,
        pass,
        detail: detail.into(),
    }
}

fn z_of(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-9 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

fn identity_check(rep: &IdentityCheckReport) -> Check {
    let z = rep
        .z
        .iter()
        .copied()
        .fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
    Check {
        name: rep.identity.clone(),
        z: Some(z),
        pass: rep.pass,
        detail: format!(
            "{} indices, {} samples, {} failures",
            rep.z.len(),
            rep.samples,
            rep.failures
        ),
    }
}

pub fn cmd_verify(suite: Suite, samples: usize, seed: u64) -> Result<VerifyReport> {
    let stream = SeededStream::new(seed);
    let checks = match suite {
        Suite::Cones => verify_cones(&stream)?,
        Suite::Statdim => verify_statdim(samples, &stream)?,
        Suite::Kinematic => verify_kinematic_suite(samples, &stream)?,
        Suite::Condition => verify_condition(&stream)?,
        Suite::Bounds => verify_bounds(samples, &stream)?,
        Suite::Gordon => verify_gordon(samples, &stream)?,
    };
    let pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport {
        suite,
        seed,
        samples,
        checks,
        pass,
    })
}

fn cone_zoo(stream: &SeededStream) -> Result<Vec<(String, ConeRep)>> {
    let mut rng = stream.rng(0);
    let gens = gaussian_matrix(4, 6, &mut rng);
    let x0 = Vector::from_vec(vec![1.5, 0.0, -2.0, 0.0, 0.0, 0.7]);
    let l1 = descent_cone(&SubdifferentialModel::l1(&x0)?);
    let tv = finite_difference_matrix(5, FdVariant::SquareBidiagonal)?;
    let inst = AnalysisInstance::new(tv, Vector::from_vec(vec![0.0, 0.0, 1.0, 1.0, 1.0]))?;
    Ok(vec![
        ("orthant(5)".into(), ConeRep::orthant(5)),
        ("wedge".into(), ConeRep::planar_wedge(1.1, 0.4)),
        (
            "generators 4x6".into(),
            ConeRep::GeneratorCone {
                generators: gens.clone(),
            },
        ),
        (
            "polar generators".into(),
            ConeRep::GeneratorCone { generators: gens }.polar(),
        ),
        ("l1 descent".into(), l1),
        (
            "tv descent".into(),
            descent_cone(&SubdifferentialModel::analysis(&inst)?),
        ),
        (
            "product".into(),
            ConeRep::product(vec![ConeRep::orthant(2), ConeRep::planar_wedge(0.5, 1.0)]),
        ),
        ("subspace".into(), ConeRep::span(&gaussian_matrix(5, 2, &mut rng))?),
    ])
}

fn verify_cones(stream: &SeededStream) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (i, (name, cone)) in cone_zoo(stream)?.into_iter().enumerate() {
        let n = cone.ambient_dim();
        let (prep, polar) = (cone.prepare()?, cone.clone().polar().prepare()?);
        let mut rng = stream.fork(1).rng(i as u64);
        let (mut worst, mut dims_ok) = (0.0_f64, true);
        for _ in 0..20 {
            let x = gaussian_vector(n, &mut rng);
            let (p, q) = (prep.project(&x)?, polar.project(&x)?);
            let resid = (&x - &p.point - &q.point).norm() / x.norm();
            let orth = p.point.dot(&q.point).abs() / x.norm_squared();
            worst = worst.max(resid).max(orth);
            dims_ok &= p.face_dim + q.face_dim == n;
        }
        out.push(flag_check(
            format!("moreau {name}"),
            worst <= 1e-6 && dims_ok,
            format!("max residual {worst:e}, complementary face dims {dims_ok}"),
        ));
    }
    Ok(out)
}

fn verify_statdim(samples: usize, stream: &SeededStream) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let n = 6;
    let prof = estimate_intrinsic_volumes(&ConeRep::orthant(n), samples, &stream.fork(0))?;
    let exact = ConeRep::orthant(n)
        .exact_intrinsic_volumes()
        .expect("orthant volumes are known");
    let z = (0..=n)
        .map(|k| z_of(prof.v[k] - exact[k], prof.stderr[k]))
        .fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
    out.push(z_check("orthant(6) intrinsic volumes", z, "largest z over k"));

    let alpha = 1.2;
    let e = estimate_statdim(&ConeRep::planar_wedge(alpha, 0.3), samples, &stream.fork(1))?;
    let target = 0.5 + alpha / std::f64::consts::PI;
    out.push(z_check(
        "wedge statdim",
        z_of(e.mean - target, e.stderr),
        format!("{} vs {target}", e.mean),
    ));

    for i in 0..3u64 {
        let mut rng = stream.fork(2).rng(i);
        let dim = 3 + i as usize;
        let c = ConeRep::GeneratorCone {
            generators: gaussian_matrix(dim, dim + 2, &mut rng),
        };
        let a = estimate_statdim(&c, samples, &stream.fork(3 + 2 * i))?;
        let b = estimate_statdim(&c.clone().polar(), samples, &stream.fork(4 + 2 * i))?;
        let z = z_of(
            a.mean + b.mean - dim as f64,
            (a.stderr.powi(2) + b.stderr.powi(2)).sqrt(),
        );
        out.push(z_check(
            format!("complementarity n={dim}"),
            z,
            format!("{} + {}", a.mean, b.mean),
        ));
    }

    let prof = intrinsic_volumes(
        &ConeRep::GeneratorCone {
            generators: gaussian_matrix(4, 5, &mut stream.fork(9).rng(0)),
        },
        samples,
        &stream.fork(10),
    )?;
    let chi = prof.euler_characteristic();
    out.push(z_check(
        "gauss-bonnet",
        z_of(chi.mean, chi.stderr),
        "alternating sum of volumes",
    ));
    Ok(out)
}

fn verify_kinematic_suite(samples: usize, stream: &SeededStream) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let r2 = ConeRep::orthant(2);
    out.push(identity_check(&verify_kinematic(&r2, &r2, samples, &stream.fork(0))?));
    for (n, m) in [(2, 1), (3, 2)] {
        let rep = crofton_probability(&ConeRep::orthant(n), m, samples, &stream.fork(n as u64))?;
        out.push(z_check(
            format!("crofton orthant({n}) codim {m}"),
            rep.z,
            format!("{} vs {}", rep.estimate.mean, rep.target.mean),
        ));
    }
    out.push(identity_check(&verify_projection_formula(
        &ConeRep::orthant(4),
        2,
        samples,
        &stream.fork(5),
    )?));
    let t = Matrix::from_row_slice(2, 3, &[2.0, 0.0, 0.0, 0.0, 0.5, 0.0]);
    out.push(identity_check(&verify_tqc(
        &t,
        &ConeRep::orthant(3),
        samples,
        &stream.fork(6),
    )?));
    Ok(out)
}

fn verify_condition(stream: &SeededStream) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let opts = RestrictedOptions {
        method: MethodChoice::GridOracle,
        ..Default::default()
    };
    for i in 0..4u64 {
        let mut rng = stream.rng(i);
        let n = 2 + (i as usize % 2);
        let mut a = gaussian_matrix(n, n, &mut rng);
        if n == 3 {
            a = a.abs() + Matrix::identity(3, 3);
        }
        let full = ConeRep::full(n);
        let k = kappa(&a)?;
        let rep = renegar(&a, &full, &full, &opts)?;
        out.push(flag_check(
            format!("renegar of full spaces is kappa, n={n}"),
            (rep.renegar_r - k).abs() <= 1e-3 * k,
            format!("{} vs {k}", rep.renegar_r),
        ));
        let c = if n == 2 {
            ConeRep::planar_wedge(1.0, rng.random::<f64>() * 6.0)
        } else {
            ConeRep::orthant(3)
        };
        let d = ConeRep::orthant(n);
        let sv = restricted_sv(&a, &c, &d, &opts)?;
        let pert = min_perturbation_to_primal(&a, &c, &d, &opts)?;
        let feas = classify_feasibility(&(&a + &pert.delta), &c, &d, None, &opts)?;
        out.push(flag_check(
            format!("distance to primal feasibility, n={n}"),
            (pert.norm - sv.value).abs() <= 1e-3 && feas.primal(),
            format!("|dA| = {} vs sigma {}, {feas:?}", pert.norm, sv.value),
        ));
    }
    Ok(out)
}

fn verify_bounds(samples: usize, stream: &SeededStream) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let opts = RestrictedOptions {
        method: MethodChoice::GridOracle,
        ..Default::default()
    };
    for i in 0..4u64 {
        let mut rng = stream.rng(i);
        let alpha = 0.3 + 2.0 * rng.random::<f64>();
        let c = ConeRep::planar_wedge(alpha, rng.random::<f64>() * 6.0);
        let a = gaussian_matrix(2, 2, &mut rng);
        let r = match renegar(&a, &c, &ConeRep::full(2), &opts) {
            Ok(rep) => rep.renegar_r,
            Err(conicond::Error::IllPosed { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let delta_c = 0.5 + alpha / std::f64::consts::PI;
        let est = estimate_statdim(&ConeRep::image(a.clone(), c), samples, &stream.fork(10 + i))?;
        let th = theorem_a_bounds(delta_c, Some(r), Some(kappa(&a)?), 2)?;
        let upper = th.upper.expect("both numbers given");
        let lower = th.lower.expect("kappa given");
        out.push(z_check(
            format!("renegar upper bound, wedge {i}"),
            z_of(est.mean - upper, est.stderr).max(0.0),
            format!("{} <= {upper}", est.mean),
        ));
        out.push(z_check(
            format!("kappa lower bound, wedge {i}"),
            z_of(lower - est.mean, est.stderr).max(0.0),
            format!("{} >= {lower}", est.mean),
        ));
    }

    let n = 30;
    let d = finite_difference_matrix(n, FdVariant::SquareBidiagonal)?;
    let dinv = d.clone().try_inverse().expect("square TV is invertible");
    for s in [3usize, 15] {
        let inst = random_cosparse_instance(&d, s, &mut stream.fork(20).rng(s as u64))?;
        let est = estimate_statdim(
            &descent_cone(&SubdifferentialModel::analysis(&inst)?),
            samples,
            &stream.fork(21 + s as u64),
        )?;
        let delta_g = l1_recipe_upper(n, s)?;
        let bound = improved_bound(delta_g, kappa(&d)?, n)?;
        out.push(z_check(
            format!("improved bound, tv n={n} s={s}"),
            z_of(est.mean - bound, est.stderr).max(0.0),
            format!("{} <= {bound}", est.mean),
        ));
        let (_, b13) = analysis_statdim_bound(&inst, delta_g)?;
        out.push(z_check(
            format!("analysis bound, tv n={n} s={s}"),
            z_of(est.mean - b13, est.stderr).max(0.0),
            format!("{} <= {b13}", est.mean),
        ));
        let eta = 0.1;
        if let Some(m) = (1..=n).find(|&m| theorem_b_min_m(delta_g, m, eta).is_ok_and(|need| m as f64 >= need)) {
            let kb = kappa_bar(&dinv, m, samples.clamp(100, 400), &stream.fork(40 + s as u64))?;
            let rep = theorem_b_bound(delta_g, kb.mean, n, m, eta)?.with_estimate(est);
            out.push(z_check(
                format!("preconditioned bound, tv n={n} s={s} m={m}"),
                rep.z.unwrap_or(0.0).max(0.0),
                format!("{} <= {:?}", est.mean, rep.upper),
            ));
        }
    }
    let th = edge_thresholds(20.0, 400, 0.1)?;
    out.push(flag_check(
        "edge window ordering",
        th.m_fail.value <= 20.0 && 20.0 <= th.m_succeed.value,
        format!("[{}, {}]", th.m_fail.value, th.m_succeed.value),
    ));
    Ok(out)
}

fn verify_gordon(samples: usize, stream: &SeededStream) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let trials = samples.clamp(50, 200);
    let id = Matrix::identity(100, 100);
    let e = empirical_kappa_ag(&id, 25, trials, &stream.fork(0))?;
    let bound = gordon_kappa_bound(&id, 25)?;
    out.push(z_check(
        "kappa(G) below gordon bound, n=100 m=25",
        z_of(e.mean - bound, e.stderr).max(0.0),
        format!("{} <= {bound}", e.mean),
    ));
    for i in 0..4u64 {
        let mut rng = stream.fork(1).rng(i);
        let n = 40 + 20 * i as usize;
        let sigma: Vec<f64> = (0..n).map(|_| 0.1 + 0.9 * rng.random::<f64>()).collect();
        let m = 5 + 3 * i as usize;
        let rep = empirical_gordon_check(&sigma, m, trials, &stream.fork(2 + i))?;
        out.push(flag_check(
            format!("gordon inequalities, n={n} m={m}"),
            rep.lower_ok && rep.upper_ok,
            format!(
                "sigma_min {} >= {}, sigma_max {} <= {}",
                rep.sigma_min.mean, rep.lower_bound, rep.sigma_max.mean, rep.upper_bound
            ),
        ));
    }
    Ok(out)
}

fn parse_cone(v: &Value) -> Result<ConeRep> {
    Ok(ConeRep::from_json(&v.to_string())?)
}

fn parse_matrix(rows: &[Vec<f64>]) -> Result<Matrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return config_err("matrix must be a nonempty list of equal-length rows");
    }
    Ok(Matrix::from_fn(r, c, |i, j| rows[i][j]))
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionParams {
    /// Rows of `A`.
    pub a: Vec<Vec<f64>>,
    pub c: Value,
    /// Defaults to the whole space.
    #[serde(default)]
    pub d: Option<Value>,
    #[serde(default)]
    pub method: Option<MethodChoice>,
    #[serde(default)]
    pub starts: Option<usize>,
}

pub fn cmd_condition(p: &ConditionParams, seed: u64) -> Result<ConditionReport> {
    let a = parse_matrix(&p.a)?;
    let c = parse_cone(&p.c)?;
    let d = match &p.d {
        Some(v) => parse_cone(v)?,
        None => ConeRep::full(a.nrows()),
    };
    let defaults = RestrictedOptions::default();
    let opts = RestrictedOptions {
        method: p.method.unwrap_or(defaults.method),
        starts: p.starts.unwrap_or(defaults.starts),
        seed,
        ..defaults
    };
    Ok(renegar(&a, &c, &d, &opts)?)
}

fn render_condition(r: &ConditionReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "op_norm={}", r.op_norm);
    let _ = writeln!(s, "sigma_cd={}", r.sigma_cd);
    let _ = writeln!(s, "sigma_dc_transposed={}", r.sigma_dc_transposed);
    let _ = writeln!(s, "renegar_r={}", r.renegar_r);
    let _ = writeln!(s, "kappa={}", r.kappa);
    let _ = writeln!(s, "method={:?}", r.method);
    let _ = writeln!(s, "certified={}", r.certified);
    s
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatdimParams {
    pub cone: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct StatdimOutput {
    pub statdim: Estimate,
    pub profile: IVProfile,
}

pub fn cmd_statdim(p: &StatdimParams, samples: usize, seed: u64) -> Result<StatdimOutput> {
    let cone = parse_cone(&p.cone)?;
    let profile = intrinsic_volumes(&cone, samples, &SeededStream::new(seed))?;
    Ok(StatdimOutput {
        statdim: profile.mean(),
        profile,
    })
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectParams {
    pub cone: Value,
    pub x: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectOutput {
    pub x: Vec<f64>,
    pub point: Vec<f64>,
    pub face_dim: usize,
    pub iterations: usize,
    pub converged: bool,
}

pub fn cmd_project(p: &ProjectParams) -> Result<ProjectOutput> {
    let cone = parse_cone(&p.cone)?;
    if p.x.len() != cone.ambient_dim() {
        return config_err(format!(
            "x has length {}, cone lives in R^{}",
            p.x.len(),
            cone.ambient_dim()
        ));
    }
    let proj = cone.project(&Vector::from_vec(p.x.clone()))?;
    Ok(ProjectOutput {
        x: p.x.clone(),
        point: proj.point.iter().copied().collect(),
        face_dim: proj.face_dim,
        iterations: proj.iterations,
        converged: proj.converged,
    })
}
