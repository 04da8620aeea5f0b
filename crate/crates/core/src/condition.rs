//! Restricted norms and singular values, Renegar's condition number and Gordon-type bounds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cones::{ConeRep, PreparedCone};
use crate::error::{domain, mismatch, Error, Result};
use crate::numerics::{
    ensure_finite_matrix, gaussian_matrix, gaussian_vector, golden_section, haar_orthogonal, kappa, op_norm,
    orthonormal_complement, par_samples, svd, Estimate, Matrix, SeededStream, Vector,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    GridOracle,
    Multistart,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    /// Exact when the cones allow it, the grid oracle for `n <= 3`, multistart otherwise.
    Auto,
    Exact,
    GridOracle,
    Multistart,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RestrictedOptions {
    pub method: MethodChoice,
    pub starts: usize,
    pub seed: u64,
    pub tol: f64,
    /// Angular grid spacing for the oracle.
    pub grid_step: f64,
}

impl Default for RestrictedOptions {
    fn default() -> Self {
        Self {
            method: MethodChoice::Auto,
            starts: 50,
            seed: 0x5eed,
            tol: 1e-9,
            grid_step: 1e-3,
        }
    }
}

/// An extremum of `|Proj_D(A x)|` over `C ∩ S` with the point attaining it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RestrictedValue {
    pub value: f64,
    pub point: Vec<f64>,
    pub method: Method,
    /// False for multistart results, which are only one-sided bounds.
    pub certified: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Goal {
    Max,
    Min,
}

impl Goal {
    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Goal::Max => a > b,
            Goal::Min => a < b,
        }
    }

    fn worst(self) -> f64 {
        match self {
            Goal::Max => f64::NEG_INFINITY,
            Goal::Min => f64::INFINITY,
        }
    }
}

struct Problem<'a> {
    a: &'a Matrix,
    c: PreparedCone,
    d: PreparedCone,
    c_rep: &'a ConeRep,
    d_rep: &'a ConeRep,
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.a.ncols()
    }

    fn objective(&self, x: &Vector) -> Result<f64> {
        Ok(self.d.project(&(self.a * x))?.point.norm())
    }

    /// Nearest point of `C ∩ S` in direction `u`, or `None` when `u` is in the polar.
    fn retract(&self, u: &Vector) -> Result<Option<Vector>> {
        let p = self.c.project(u)?.point;
        let nrm = p.norm();
        if nrm <= 1e-12 * u.norm().max(f64::MIN_POSITIVE) {
            return Ok(None);
        }
        Ok(Some(p / nrm))
    }
}

fn setup<'a>(a: &'a Matrix, c: &'a ConeRep, d: &'a ConeRep) -> Result<Problem<'a>> {
    ensure_finite_matrix(a, "operator")?;
    if c.ambient_dim() != a.ncols() || d.ambient_dim() != a.nrows() {
        return mismatch(format!(
            "operator is {}x{} but cones live in R^{} and R^{}",
            a.nrows(),
            a.ncols(),
            c.ambient_dim(),
            d.ambient_dim()
        ));
    }
    Ok(Problem {
        a,
        c: c.prepare()?,
        d: d.prepare()?,
        c_rep: c,
        d_rep: d,
    })
}

/// `max_{x in C ∩ S} |Proj_D(A x)|`.
pub fn restricted_norm(a: &Matrix, c: &ConeRep, d: &ConeRep, opts: &RestrictedOptions) -> Result<RestrictedValue> {
    solve(a, c, d, opts, Goal::Max)
}

/// `min_{x in C ∩ S} |Proj_D(A x)|`.
pub fn restricted_sv(a: &Matrix, c: &ConeRep, d: &ConeRep, opts: &RestrictedOptions) -> Result<RestrictedValue> {
    solve(a, c, d, opts, Goal::Min)
}

fn solve(a: &Matrix, c: &ConeRep, d: &ConeRep, opts: &RestrictedOptions, goal: Goal) -> Result<RestrictedValue> {
    let prob = setup(a, c, d)?;
    let exact = exact_value(&prob, goal)?;
    let n = prob.n();
    let method = match opts.method {
        MethodChoice::Auto if exact.is_some() => Method::Exact,
        MethodChoice::Auto if n <= 3 => Method::GridOracle,
        MethodChoice::Auto => Method::Multistart,
        MethodChoice::Exact => Method::Exact,
        MethodChoice::GridOracle => Method::GridOracle,
        MethodChoice::Multistart => Method::Multistart,
    };
    let (value, point) = match method {
        Method::Exact => exact.ok_or_else(|| Error::Domain("no exact method for these cones".into()))?,
        Method::GridOracle => grid_oracle(&prob, goal, opts)?,
        Method::Multistart => multistart(&prob, goal, opts)?,
    };
    Ok(RestrictedValue {
        value,
        point: point.iter().copied().collect(),
        method,
        certified: method != Method::Multistart,
    })
}

fn exact_value(prob: &Problem, goal: Goal) -> Result<Option<(f64, Vector)>> {
    // A ray: the sphere section is a single point.
    if let ConeRep::GeneratorCone { generators } = prob.c_rep {
        if generators.ncols() == 1 {
            let g = generators.column(0).into_owned();
            let nrm = g.norm();
            if nrm == 0.0 {
                return domain("cone is {0}");
            }
            let x = g / nrm;
            return Ok(Some((prob.objective(&x)?, x)));
        }
    }
    let (ConeRep::Subspace { basis: bc }, ConeRep::Subspace { basis: bd }) = (prob.c_rep, prob.d_rep) else {
        return Ok(None);
    };
    let k = bc.ncols();
    if k == 0 {
        return domain("cone is {0}");
    }
    let m = bd.transpose() * prob.a * bc;
    if m.nrows() == 0 {
        return Ok(Some((0.0, bc.column(0).into_owned())));
    }
    let s = svd(&m)?;
    let r = s.singular_values.len();
    let (value, v) = match goal {
        Goal::Max => (s.singular_values[0], s.v_t.row(0).transpose()),
        Goal::Min if r >= k => (s.singular_values[r - 1], s.v_t.row(r - 1).transpose()),
        Goal::Min => {
            let null = orthonormal_complement(&s.v_t.transpose());
            (0.0, null.column(0).into_owned())
        }
    };
    Ok(Some((value, bc * v)))
}

fn grid_oracle(prob: &Problem, goal: Goal, opts: &RestrictedOptions) -> Result<(f64, Vector)> {
    let n = prob.n();
    let score = |x: &Vector| -> Result<f64> { prob.objective(x) };
    let mut best: Option<(f64, Vector)> = None;
    let consider = |val: f64, x: Vector, best: &mut Option<(f64, Vector)>| {
        if best.as_ref().map_or(true, |b| goal.better(val, b.0)) {
            *best = Some((val, x));
        }
    };
    match n {
        1 => {
            for s in [1.0, -1.0] {
                if let Some(x) = prob.retract(&Vector::from_element(1, s))? {
                    consider(score(&x)?, x, &mut best);
                }
            }
        }
        2 => {
            let steps = (2.0 * std::f64::consts::PI / opts.grid_step).ceil() as usize;
            let h = 2.0 * std::f64::consts::PI / steps as f64;
            let at = |t: f64| Vector::from_vec(vec![t.cos(), t.sin()]);
            let mut vals = Vec::with_capacity(steps);
            for i in 0..steps {
                let x = prob.retract(&at(i as f64 * h))?;
                let v = match &x {
                    Some(x) => score(x)?,
                    None => goal.worst(),
                };
                vals.push((v, x));
            }
            let mut order: Vec<usize> = (0..steps).filter(|&i| vals[i].1.is_some()).collect();
            order.sort_by(|&i, &j| match goal {
                Goal::Max => vals[j].0.total_cmp(&vals[i].0),
                Goal::Min => vals[i].0.total_cmp(&vals[j].0),
            });
            for &i in order.iter().take(8) {
                let (v, x) = vals[i].clone();
                consider(v, x.expect("filtered"), &mut best);
                let sign = if goal == Goal::Max { -1.0 } else { 1.0 };
                let f = |t: f64| match prob.retract(&at(t)) {
                    Ok(Some(x)) => score(&x).map(|v| sign * v).unwrap_or(f64::INFINITY),
                    _ => f64::INFINITY,
                };
                let t0 = i as f64 * h;
                let (t, _) = golden_section(f, t0 - h, t0 + h, 1e-12);
                if let Some(x) = prob.retract(&at(t))? {
                    consider(score(&x)?, x, &mut best);
                }
            }
        }
        3 => {
            // Fibonacci lattice with spacing about 0.02, then local pattern search.
            let spacing = 0.02;
            let count = (4.0 * std::f64::consts::PI / (spacing * spacing)).ceil() as usize;
            let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            let mut cands: Vec<(f64, Vector)> = Vec::new();
            for i in 0..count {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden_angle * i as f64;
                let u = Vector::from_vec(vec![r * phi.cos(), r * phi.sin(), z]);
                if let Some(x) = prob.retract(&u)? {
                    cands.push((score(&x)?, x));
                }
            }
            cands.sort_by(|a, b| match goal {
                Goal::Max => b.0.total_cmp(&a.0),
                Goal::Min => a.0.total_cmp(&b.0),
            });
            let mut seeds: Vec<Vector> = Vec::new();
            for (_, x) in &cands {
                if seeds.iter().all(|s| (s - x).norm() > 0.05) {
                    seeds.push(x.clone());
                }
                if seeds.len() == 8 {
                    break;
                }
            }
            for s in seeds {
                let (v, x) = pattern_search(prob, goal, s, 0.02)?;
                consider(v, x, &mut best);
            }
        }
        _ => return domain("grid oracle supports n <= 3 only"),
    }
    best.ok_or_else(|| Error::Domain("cone is {0}".into()))
}

/// Coordinate pattern search in the tangent plane, retracted onto `C ∩ S`.
fn pattern_search(prob: &Problem, goal: Goal, start: Vector, step: f64) -> Result<(f64, Vector)> {
    let n = start.len();
    let mut x = start;
    let mut fx = prob.objective(&x)?;
    let mut h = step;
    while h > 1e-11 {
        let frame = Matrix::from_column_slice(n, 1, x.as_slice());
        let tangent = orthonormal_complement(&frame);
        let mut improved = false;
        for j in 0..tangent.ncols() {
            for s in [1.0, -1.0] {
                let u = &x + tangent.column(j) * (s * h);
                if let Some(y) = prob.retract(&u)? {
                    let fy = prob.objective(&y)?;
                    if goal.better(fy, fx) {
                        x = y;
                        fx = fy;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    Ok((fx, x))
}

fn multistart(prob: &Problem, goal: Goal, opts: &RestrictedOptions) -> Result<(f64, Vector)> {
    let n = prob.n();
    let mut starts: Vec<Vector> = Vec::new();
    if let Some(g) = prob.c_rep.generators()? {
        for c in g.column_iter().take(opts.starts / 2) {
            if let Some(x) = prob.retract(&c.into_owned())? {
                starts.push(x);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut attempts = 0;
    while starts.len() < opts.starts.max(1) && attempts < 20 * opts.starts.max(1) {
        attempts += 1;
        if let Some(x) = prob.retract(&gaussian_vector(n, &mut rng))? {
            starts.push(x);
        }
    }
    if starts.is_empty() {
        return domain("cone is {0}");
    }
    let lipschitz = op_norm(prob.a)?.powi(2).max(f64::MIN_POSITIVE);
    let mut best: Option<(f64, Vector)> = None;
    for s in starts {
        let (v, x) = local_search(prob, goal, s, lipschitz, opts.tol)?;
        if best.as_ref().map_or(true, |b| goal.better(v, b.0)) {
            best = Some((v, x));
        }
    }
    Ok(best.expect("at least one start"))
}

fn local_search(prob: &Problem, goal: Goal, mut x: Vector, lipschitz: f64, tol: f64) -> Result<(f64, Vector)> {
    let mut fx = prob.objective(&x)?;
    for _ in 0..2000 {
        let grad = prob.a.transpose() * prob.d.project(&(prob.a * &x))?.point;
        let next = match goal {
            // Conditional gradient for a convex objective: monotone ascent.
            Goal::Max => prob.retract(&grad)?,
            Goal::Min => {
                let mut eta = 1.0 / lipschitz;
                let mut found = None;
                while eta > 1e-12 / lipschitz {
                    if let Some(y) = prob.retract(&(&x - &grad * eta))? {
                        if prob.objective(&y)? < fx {
                            found = Some(y);
                            break;
                        }
                    }
                    eta *= 0.5;
                }
                found
            }
        };
        let Some(y) = next else { break };
        let fy = prob.objective(&y)?;
        if !goal.better(fy, fx) && goal == Goal::Max {
            break;
        }
        let moved = (&y - &x).norm();
        x = y;
        fx = fy;
        if moved < tol {
            break;
        }
    }
    if x.len() <= 8 {
        let (v, y) = pattern_search(prob, goal, x.clone(), 1e-3)?;
        if goal.better(v, fx) {
            return Ok((v, y));
        }
    }
    Ok((fx, x))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionReport {
    pub op_norm: f64,
    pub sigma_cd: f64,
    pub sigma_dc_transposed: f64,
    pub renegar_r: f64,
    pub kappa: f64,
    pub method: Method,
    pub certified: bool,
    pub certificate_x: Vec<f64>,
    pub certificate_y: Vec<f64>,
}

/// `R_{C,D}(A) = |A| / max(sigma_{C->D}(A), sigma_{D->C}(-A^T))`.
pub fn renegar(a: &Matrix, c: &ConeRep, d: &ConeRep, opts: &RestrictedOptions) -> Result<ConditionReport> {
    let norm = op_norm(a)?;
    if norm == 0.0 {
        return domain("renegar condition of the zero operator");
    }
    let s1 = restricted_sv(a, c, d, opts)?;
    let s2 = restricted_sv(&(-a.transpose()), d, c, opts)?;
    let top = s1.value.max(s2.value);
    if top <= 1e-8 * norm {
        return Err(Error::IllPosed { distance: top });
    }
    Ok(ConditionReport {
        op_norm: norm,
        sigma_cd: s1.value,
        sigma_dc_transposed: s2.value,
        renegar_r: norm / top,
        kappa: kappa(a)?,
        method: s1.method.max(s2.method),
        certified: s1.certified && s2.certified,
        certificate_x: s1.point,
        certificate_y: s2.point,
    })
}

/// `R_C(A) = R_{C, R^m}(A)`.
pub fn renegar_single(a: &Matrix, c: &ConeRep, opts: &RestrictedOptions) -> Result<ConditionReport> {
    renegar(a, c, &ConeRep::full(a.nrows()), opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Feasibility {
    PrimalFeasible,
    DualFeasible,
    IllPosed,
    /// Neither restricted singular value vanished at the tolerance.
    Ambiguous {
        sigma_cd: f64,
        sigma_dc: f64,
    },
}

impl Feasibility {
    /// Membership in the primal feasible set, which contains the ill-posed instances.
    pub fn primal(&self) -> bool {
        matches!(self, Feasibility::PrimalFeasible | Feasibility::IllPosed)
    }
}

/// Classify by thresholding both restricted singular values; `tol` defaults to `1e-8 |A|`.
pub fn classify_feasibility(
    a: &Matrix,
    c: &ConeRep,
    d: &ConeRep,
    tol: Option<f64>,
    opts: &RestrictedOptions,
) -> Result<Feasibility> {
    let tol = match tol {
        Some(t) => t,
        None => 1e-8 * op_norm(a)?,
    };
    let s1 = restricted_sv(a, c, d, opts)?.value;
    let s2 = restricted_sv(&(-a.transpose()), d, c, opts)?.value;
    Ok(match (s1 <= tol, s2 <= tol) {
        (true, true) => Feasibility::IllPosed,
        (true, false) => Feasibility::PrimalFeasible,
        (false, true) => Feasibility::DualFeasible,
        (false, false) => Feasibility::Ambiguous {
            sigma_cd: s1,
            sigma_dc: s2,
        },
    })
}

#[derive(Clone, Debug)]
pub struct Perturbation {
    pub delta: Matrix,
    pub norm: f64,
    pub sigma: f64,
    pub x0: Vector,
    /// Norm of the rank-one update `-y0 y0^T A` with `y0` the normalized image direction.
    pub y0_form_norm: f64,
    pub method: Method,
}

/// Smallest rank-one `dA` with `A + dA` primal feasible: `dA = -Proj_D(A x0) x0^T`,
/// `x0` the restricted singular vector.
pub fn min_perturbation_to_primal(
    a: &Matrix,
    c: &ConeRep,
    d: &ConeRep,
    opts: &RestrictedOptions,
) -> Result<Perturbation> {
    let sv = restricted_sv(a, c, d, opts)?;
    let x0 = Vector::from_vec(sv.point.clone());
    let tol = 1e-8 * op_norm(a)?;
    if sv.value <= tol {
        return Ok(Perturbation {
            delta: Matrix::zeros(a.nrows(), a.ncols()),
            norm: 0.0,
            sigma: sv.value,
            x0,
            y0_form_norm: 0.0,
            method: sv.method,
        });
    }
    let z = d.prepare()?.project(&(a * &x0))?.point;
    let delta = -(&z * x0.transpose());
    let y0 = &z / z.norm();
    let rank_one = -(&y0 * (y0.transpose() * a));
    Ok(Perturbation {
        norm: op_norm(&delta)?,
        delta,
        sigma: sv.value,
        x0,
        y0_form_norm: op_norm(&rank_one)?,
        method: sv.method,
    })
}

/// `E_Q[kappa(P Q A)^2]` over Haar `Q`; rank-deficient draws are redrawn and counted in `failures`.
pub fn kappa_bar(a: &Matrix, m: usize, samples: usize, stream: &SeededStream) -> Result<Estimate> {
    let n = a.ncols();
    if a.nrows() != n {
        return mismatch("kappa_bar needs a square operator");
    }
    if m == 0 || m > n {
        return domain(format!("need 1 <= m <= n, got m={m}, n={n}"));
    }
    if !kappa(a)?.is_finite() {
        return domain("operator is rank deficient");
    }
    let raw = par_samples(stream, samples, |_, rng| -> Result<(f64, usize)> {
        let mut redraws = 0;
        loop {
            let q = haar_orthogonal(n, rng);
            let pqa = q.rows(0, m) * a;
            let k = kappa(&pqa)?;
            if k.is_finite() {
                return Ok((k * k, redraws));
            }
            redraws += 1;
            if redraws > 100 {
                return Err(Error::Numerical("projected operator keeps losing rank".into()));
            }
        }
    });
    let mut vals = Vec::with_capacity(samples);
    let mut redraws = 0;
    for r in raw {
        let (v, k) = r?;
        vals.push(v);
        redraws += k;
    }
    Ok(Estimate::from_values(&vals, redraws))
}

/// `(|A|_F + sqrt(m) |A|_2) / (|A|_F - sqrt(m) |A|_2)`, an upper bound on `E kappa(A G)`.
pub fn gordon_kappa_bound(a: &Matrix, m: usize) -> Result<f64> {
    let f = a.norm();
    let s = (m as f64).sqrt() * op_norm(a)?;
    if f <= s {
        return domain(format!("bound is vacuous: |A|_F = {f} <= sqrt(m)|A| = {s}"));
    }
    Ok((f + s) / (f - s))
}

/// Mean of `kappa(A G)` for Gaussian `G` with `m` columns.
pub fn empirical_kappa_ag(a: &Matrix, m: usize, trials: usize, stream: &SeededStream) -> Result<Estimate> {
    let n = a.ncols();
    let vals = par_samples(stream, trials, |_, rng| kappa(&(a * gaussian_matrix(n, m, rng))));
    let vals = vals.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(Estimate::from_values(&vals, 0))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GordonReport {
    pub frobenius: f64,
    pub spectral: f64,
    pub m: usize,
    pub sigma_min: Estimate,
    pub sigma_max: Estimate,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

/// Checks `E sigma_min(Sigma G) >= |Sigma|_F - sqrt(m)|Sigma|` and
/// `E |Sigma G| <= |Sigma|_F + sqrt(m)|Sigma|` at three standard errors.
pub fn empirical_gordon_check(sigma: &[f64], m: usize, trials: usize, stream: &SeededStream) -> Result<GordonReport> {
    let n = sigma.len();
    if sigma.iter().any(|s| !s.is_finite() || s.abs() > 1.0 + 1e-12) {
        return domain("diagonal entries must satisfy |sigma_i| <= 1");
    }
    if m == 0 || m > n {
        return domain(format!("need 1 <= m <= n, got m={m}, n={n}"));
    }
    let diag = Matrix::from_diagonal(&Vector::from_column_slice(sigma));
    let frob = diag.norm();
    let spectral = sigma.iter().fold(0.0f64, |a, s| a.max(s.abs()));
    let raw = par_samples(stream, trials, |_, rng| {
        let sv = crate::numerics::singular_values(&(&diag * gaussian_matrix(n, m, rng)))?;
        Ok((sv[sv.len() - 1], sv[0]))
    });
    let pairs = raw.into_iter().collect::<Result<Vec<(f64, f64)>>>()?;
    let lo: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let hi: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let sigma_min = Estimate::from_values(&lo, 0);
    let sigma_max = Estimate::from_values(&hi, 0);
    let sm = (m as f64).sqrt() * spectral;
    let lower_bound = frob - sm;
    let upper_bound = frob + sm;
    Ok(GordonReport {
        frobenius: frob,
        spectral,
        m,
        lower_ok: sigma_min.upper(3.0) >= lower_bound - 1e-12,
        upper_ok: sigma_max.lower(3.0) <= upper_bound + 1e-12,
        sigma_min,
        sigma_max,
        lower_bound,
        upper_bound,
    })
}
