//! Monte Carlo checks of the kinematic, Crofton, projection and TQC identities.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cones::{ConeRep, PreparedCone};
use crate::error::{domain, mismatch, Error, Result};
use crate::numerics::{
    check_failures, gaussian_vector, haar_orthogonal, orthonormal_basis, par_samples, rank, Estimate, Matrix,
    SeededStream,
};
use crate::solvers::nnls::nnls;
use crate::statdim::{intrinsic_volumes, IVProfile};

const MIN_SAMPLES: usize = 100;

/// Per-index comparison of an estimated left-hand side against a target.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdentityCheckReport {
    pub identity: String,
    pub lhs: Vec<Estimate>,
    pub rhs: Vec<Estimate>,
    pub z: Vec<f64>,
    pub samples: usize,
    pub failures: usize,
    pub pass: bool,
}

fn z_score(a: &Estimate, b: &Estimate) -> f64 {
    let diff = a.mean - b.mean;
    let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    if diff.abs() <= 1e-12 {
        0.0
    } else if se == 0.0 {
        diff.signum() * f64::INFINITY
    } else {
        diff / se
    }
}

impl IdentityCheckReport {
    fn new(identity: &str, lhs: Vec<Estimate>, rhs: Vec<Estimate>, samples: usize, failures: usize) -> Self {
        let z: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| z_score(a, b)).collect();
        Self {
            identity: identity.to_string(),
            pass: z.iter().all(|z| z.abs() <= 3.0),
            lhs,
            rhs,
            z,
            samples,
            failures,
        }
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return domain(format!("need at least {MIN_SAMPLES} samples, got {samples}"));
    }
    Ok(())
}

/// Sum of profile entries over `range`, with a binomial standard error for estimated profiles.
fn mass(profile: &IVProfile, range: impl Iterator<Item = usize>) -> Estimate {
    let p: f64 = range.filter(|&k| k < profile.v.len()).map(|k| profile.v[k]).sum();
    if profile.samples == 0 {
        return Estimate::exact(p);
    }
    Estimate {
        mean: p,
        stderr: (p * (1.0 - p) / profile.samples as f64).max(0.0).sqrt(),
        samples: profile.samples,
        failures: profile.failures,
    }
}

fn lhs_estimates(profile: &IVProfile) -> Vec<Estimate> {
    profile
        .v
        .iter()
        .zip(&profile.stderr)
        .map(|(&mean, &stderr)| Estimate {
            mean,
            stderr,
            samples: profile.samples,
            failures: profile.failures,
        })
        .collect()
}

/// `Q K` in the cheapest representation for later intersections.
fn rotate(q: &Matrix, k: &ConeRep) -> Result<ConeRep> {
    Ok(match k {
        ConeRep::Subspace { basis } => ConeRep::Subspace { basis: q * basis },
        _ => match k.inequality_normals()? {
            Some(w) => ConeRep::InequalityCone { normals: q * w },
            None => ConeRep::image(q.clone(), k.clone()),
        },
    })
}

/// `M K` for a general linear map.
fn image_cone(map: &Matrix, k: &ConeRep) -> Result<ConeRep> {
    Ok(match k {
        ConeRep::Subspace { basis } => ConeRep::Subspace {
            basis: orthonormal_basis(&(map * basis), 1e-10)?,
        },
        _ => match k.generators()? {
            Some(g) => {
                let mut g = map * g;
                for mut col in g.column_iter_mut() {
                    let nrm = col.norm();
                    if nrm > 0.0 {
                        col /= nrm;
                    }
                }
                ConeRep::GeneratorCone { generators: g }
            }
            None => ConeRep::image(map.clone(), k.clone()),
        },
    })
}

/// Face dimensions of one Gaussian projection per random cone.
fn random_cone_profile<F>(dim: usize, samples: usize, stream: &SeededStream, build: F) -> Result<IVProfile>
where
    F: Fn(&mut ChaCha8Rng) -> Result<ConeRep> + Sync,
{
    let dims = par_samples(stream, samples, |_, rng| -> Result<Option<usize>> {
        let cone = build(rng)?;
        let prep: PreparedCone = cone.prepare()?;
        let g = gaussian_vector(dim, rng);
        Ok(match prep.project(&g) {
            Ok(p) if p.converged => Some(p.face_dim),
            Ok(_) | Err(Error::NonConvergence { .. }) => None,
            Err(e) => return Err(e),
        })
    });
    let dims = dims.into_iter().collect::<Result<Vec<_>>>()?;
    IVProfile::from_face_dims(&dims, dim)
}

fn product_profile(c: &ConeRep, d: &ConeRep, samples: usize, stream: &SeededStream) -> Result<IVProfile> {
    let prod = ConeRep::product(vec![c.clone(), d.clone()]);
    intrinsic_volumes(&prod, samples, &stream.fork(0xC0DE))
}

fn same_ambient(c: &ConeRep, d: &ConeRep) -> Result<usize> {
    let n = c.ambient_dim();
    if d.ambient_dim() != n {
        return mismatch(format!("cones live in R^{n} and R^{}", d.ambient_dim()));
    }
    Ok(n)
}

/// `E v_k(C ∩ Q D) = v_{n+k}(C x D)` for `k > 0` and `E v_0 = sum_{j <= n} v_j(C x D)`.
pub fn verify_kinematic(
    c: &ConeRep,
    d: &ConeRep,
    samples: usize,
    stream: &SeededStream,
) -> Result<IdentityCheckReport> {
    check_samples(samples)?;
    let n = same_ambient(c, d)?;
    let lhs = random_cone_profile(n, samples, stream, |rng| {
        let q = haar_orthogonal(n, rng);
        c.clone().intersect(rotate(&q, d)?)
    })?;
    let prod = product_profile(c, d, samples, stream)?;
    let rhs: Vec<Estimate> = (0..=n)
        .map(|k| {
            if k == 0 {
                mass(&prod, 0..=n)
            } else {
                mass(&prod, n + k..n + k + 1)
            }
        })
        .collect();
    Ok(IdentityCheckReport::new(
        "kinematic",
        lhs_estimates(&lhs),
        rhs,
        lhs.samples,
        lhs.failures,
    ))
}

/// `E v_j(C + Q D) = v_j(C x D)` for `j < n` and `E v_n = sum_{j >= n} v_j(C x D)`,
/// with `C + Q D` computed as the polar of `C° ∩ Q D°`.
pub fn verify_polar_kinematic(
    c: &ConeRep,
    d: &ConeRep,
    samples: usize,
    stream: &SeededStream,
) -> Result<IdentityCheckReport> {
    check_samples(samples)?;
    let n = same_ambient(c, d)?;
    let (cp, dp) = (c.clone().polar(), d.clone().polar());
    let lhs = random_cone_profile(n, samples, stream, |rng| {
        let q = haar_orthogonal(n, rng);
        Ok(cp.clone().intersect(rotate(&q, &dp)?)?.polar())
    })?;
    let prod = product_profile(c, d, samples, stream)?;
    let rhs: Vec<Estimate> = (0..=n)
        .map(|j| {
            if j == n {
                mass(&prod, n..=2 * n)
            } else {
                mass(&prod, j..j + 1)
            }
        })
        .collect();
    Ok(IdentityCheckReport::new(
        "polar kinematic",
        lhs_estimates(&lhs),
        rhs,
        lhs.samples,
        lhs.failures,
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CroftonReport {
    pub codim: usize,
    pub estimate: Estimate,
    /// `h_{m+1}(C)`.
    pub target: Estimate,
    pub z: f64,
    pub pass: bool,
}

/// `P{C ∩ Q L != 0} = h_{m+1}(C)` for a subspace `L` of codimension `m`.
///
/// Hits are decided on a generator description: `C ∩ Q L != 0` iff some convex
/// combination of normalized generators lies in `Q L`.
pub fn crofton_probability(c: &ConeRep, m: usize, samples: usize, stream: &SeededStream) -> Result<CroftonReport> {
    check_samples(samples)?;
    let n = c.ambient_dim();
    if c.is_subspace() {
        return domain("cone is a subspace");
    }
    if m == 0 || m >= n {
        return domain(format!("codimension must lie in 1..{n}"));
    }
    let Some(mut gens) = c.generators()? else {
        return domain("hit test needs a generator description");
    };
    for mut col in gens.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= nrm;
        }
    }
    let k = gens.ncols();
    let hits = par_samples(stream, samples, |_, rng| -> Result<f64> {
        let q = haar_orthogonal(n, rng);
        // Rows spanning (Q L)^perp.
        let normal = q.columns(n - m, m).transpose();
        let mut sys = Matrix::zeros(m + 1, k);
        sys.rows_mut(0, m).copy_from(&(normal * &gens));
        sys.row_mut(m).fill(1.0);
        let mut rhs = crate::numerics::Vector::zeros(m + 1);
        rhs[m] = 1.0;
        let sol = nnls(&sys, &rhs)?;
        Ok(if sol.residual_norm <= 1e-9 { 1.0 } else { 0.0 })
    });
    let hits = hits.into_iter().collect::<Result<Vec<_>>>()?;
    let estimate = Estimate::from_values(&hits, 0);
    let profile = intrinsic_volumes(c, samples, &stream.fork(0xC0F7))?;
    let half = mass(&profile, (m + 1..=n).step_by(2));
    let target = Estimate {
        mean: 2.0 * half.mean,
        stderr: 2.0 * half.stderr,
        ..half
    };
    let z = z_score(&estimate, &target);
    Ok(CroftonReport {
        codim: m,
        estimate,
        target,
        z,
        pass: z.abs() <= 3.0,
    })
}

fn projection_targets(profile: &IVProfile, m: usize) -> Vec<Estimate> {
    let n = profile.ambient();
    (0..=m)
        .map(|k| {
            if k == m {
                mass(profile, m..=n)
            } else {
                mass(profile, k..k + 1)
            }
        })
        .collect()
}

/// `E v_k(P Q C) = v_k(C)` for `k < m` and `E v_m(P Q C) = t_m(C)`.
pub fn verify_projection_formula(
    c: &ConeRep,
    m: usize,
    samples: usize,
    stream: &SeededStream,
) -> Result<IdentityCheckReport> {
    let n = c.ambient_dim();
    if m == 0 || m > n {
        return domain(format!("need 1 <= m <= {n}"));
    }
    let p = crate::numerics::row_projection(m, n)?;
    let mut rep = verify_tqc(&p, c, samples, stream)?;
    rep.identity = "projection".into();
    Ok(rep)
}

/// `E v_k(T Q C) = v_k(C)` for `k < m` and `E v_m(T Q C) = t_m(C)`, `T` of full row rank `m`.
pub fn verify_tqc(t: &Matrix, c: &ConeRep, samples: usize, stream: &SeededStream) -> Result<IdentityCheckReport> {
    check_samples(samples)?;
    let (m, n) = t.shape();
    if n != c.ambient_dim() {
        return mismatch(format!("T has {n} columns, cone lives in R^{}", c.ambient_dim()));
    }
    if m == 0 || m > n || rank(t, 1e-14)? < m {
        return domain("T must have full row rank");
    }
    let lhs = random_cone_profile(m, samples, stream, |rng| {
        let q = haar_orthogonal(n, rng);
        image_cone(&(t * q), c)
    })?;
    let profile = intrinsic_volumes(c, samples, &stream.fork(0x7AC))?;
    Ok(IdentityCheckReport::new(
        "tqc",
        lhs_estimates(&lhs),
        projection_targets(&profile, m),
        lhs.samples,
        lhs.failures,
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProjectedStatdimReport {
    pub m: usize,
    pub estimate: Estimate,
    pub delta: Estimate,
    /// Smallest `eta` with `m >= delta + 2 sqrt(log(2 / eta)) sqrt(m)`, when the margin is positive.
    pub eta: Option<f64>,
    pub lower: Option<f64>,
    pub upper: f64,
}

/// `E_Q delta(P Q C)`, bracketed by `delta(C) - (n - m) eta <= . <= delta(C)`.
pub fn projected_statdim(
    c: &ConeRep,
    m: usize,
    samples: usize,
    stream: &SeededStream,
) -> Result<ProjectedStatdimReport> {
    check_samples(samples)?;
    let n = c.ambient_dim();
    if m == 0 || m > n {
        return domain(format!("need 1 <= m <= {n}"));
    }
    let profile = intrinsic_volumes(c, samples, &stream.fork(0xDE1))?;
    let delta = profile.mean();
    let p = crate::numerics::row_projection(m, n)?;
    let estimate = if m == n {
        delta
    } else {
        let vals = par_samples(stream, samples, |_, rng| -> Result<Option<f64>> {
            let q = haar_orthogonal(n, rng);
            let k = image_cone(&(&p * q), c)?;
            if let Some(v) = k.exact_intrinsic_volumes() {
                return Ok(Some(v.iter().enumerate().map(|(i, x)| i as f64 * x).sum()));
            }
            let g = gaussian_vector(m, rng);
            match k.prepare()?.project(&g) {
                Ok(pr) if pr.converged => Ok(Some(pr.point.norm_squared())),
                Ok(_) | Err(Error::NonConvergence { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        });
        let vals = vals.into_iter().collect::<Result<Vec<_>>>()?;
        let failed = vals.iter().filter(|v| v.is_none()).count();
        check_failures(failed, samples)?;
        let ok: Vec<f64> = vals.into_iter().flatten().collect();
        Estimate::from_values(&ok, failed)
    };
    let margin = (m as f64 - delta.mean) / (m as f64).sqrt();
    let eta = (margin > 0.0).then(|| (2.0 * (-margin * margin / 4.0).exp()).min(1.0));
    Ok(ProjectedStatdimReport {
        m,
        lower: eta.map(|e| delta.mean - (n - m) as f64 * e),
        upper: delta.mean,
        estimate,
        delta,
        eta,
    })
}

#[cfg(test)]
mod tests;
