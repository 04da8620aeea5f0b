//! Monte Carlo statistical dimension, moments, width and intrinsic volumes.

use serde::{Deserialize, Serialize};

use crate::cones::{ConeRep, L1Pattern, PreparedCone};
use crate::error::{domain, Result};
use crate::numerics::{
    check_failures, gaussian_vector, golden_section, monte_carlo, normal_cdf, normal_pdf, par_samples, Estimate,
    SeededStream,
};

const MIN_SAMPLES: usize = 100;

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return domain(format!("need at least {MIN_SAMPLES} samples, got {samples}"));
    }
    Ok(())
}

/// Estimated intrinsic volumes `v_0..v_n` with per-bin standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IVProfile {
    pub v: Vec<f64>,
    pub stderr: Vec<f64>,
    pub samples: usize,
    pub failures: usize,
}

impl IVProfile {
    pub fn exact(v: Vec<f64>) -> Self {
        let stderr = vec![0.0; v.len()];
        Self {
            v,
            stderr,
            samples: 0,
            failures: 0,
        }
    }

    /// Histogram of face dimensions; `None` entries are failed samples.
    pub fn from_face_dims(dims: &[Option<usize>], n: usize) -> Result<Self> {
        let total = dims.len();
        let failed = dims.iter().filter(|d| d.is_none()).count();
        check_failures(failed, total)?;
        let ok = (total - failed).max(1) as f64;
        let mut counts = vec![0usize; n + 1];
        for d in dims.iter().flatten() {
            counts[(*d).min(n)] += 1;
        }
        let v: Vec<f64> = counts.iter().map(|&c| c as f64 / ok).collect();
        let stderr = v.iter().map(|p| (p * (1.0 - p) / ok).sqrt()).collect();
        Ok(Self {
            v,
            stderr,
            samples: total - failed,
            failures: failed,
        })
    }

    pub fn ambient(&self) -> usize {
        self.v.len() - 1
    }

    /// Tail `t_k = sum_{i>=k} v_i` and half-tail `h_k = 2 sum_{even i} v_{k+i}` for `k = 0..=n`.
    pub fn tails(&self) -> (Vec<f64>, Vec<f64>) {
        tails(&self.v)
    }

    /// `sum_k k v_k`, the statistical dimension, with its standard error.
    pub fn mean(&self) -> Estimate {
        self.functional(|k| k as f64)
    }

    /// `sum_k (-1)^k v_k`, zero for cones that are not subspaces.
    pub fn euler_characteristic(&self) -> Estimate {
        self.functional(|k| if k % 2 == 0 { 1.0 } else { -1.0 })
    }

    fn functional(&self, f: impl Fn(usize) -> f64) -> Estimate {
        let m: f64 = self.v.iter().enumerate().map(|(k, p)| f(k) * p).sum();
        let m2: f64 = self.v.iter().enumerate().map(|(k, p)| f(k).powi(2) * p).sum();
        let var = (m2 - m * m).max(0.0);
        Estimate {
            mean: m,
            stderr: if self.samples > 0 {
                (var / self.samples as f64).sqrt()
            } else {
                0.0
            },
            samples: self.samples,
            failures: self.failures,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,v_k,stderr\n");
        for (k, (v, e)) in self.v.iter().zip(&self.stderr).enumerate() {
            s.push_str(&format!("{k},{v},{e}\n"));
        }
        s
    }
}

pub fn tails(v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = v.len();
    let mut t = vec![0.0; n];
    let mut h = vec![0.0; n];
    for k in (0..n).rev() {
        t[k] = v[k] + if k + 1 < n { t[k + 1] } else { 0.0 };
        h[k] = 2.0 * v[k] + if k + 2 < n { h[k + 2] } else { 0.0 };
    }
    (t, h)
}

/// Inverts the half-tails: `v_i = (h_i - h_{i+2}) / 2`.
pub fn from_half_tails(h: &[f64]) -> Vec<f64> {
    let n = h.len();
    (0..n)
        .map(|i| 0.5 * (h[i] - if i + 2 < n { h[i + 2] } else { 0.0 }))
        .collect()
}

fn projected_norm_power(cone: &PreparedCone, r: f64, samples: usize, stream: &SeededStream) -> Result<Estimate> {
    let n = cone.dim();
    monte_carlo(stream, samples, |rng| {
        let g = gaussian_vector(n, rng);
        let p = cone.project(&g)?;
        if !p.converged {
            return Ok(None);
        }
        Ok(Some(if r == 2.0 {
            p.point.norm_squared()
        } else {
            p.point.norm().powf(r)
        }))
    })
}

/// `delta(C) = E |Proj_C g|^2`.
pub fn estimate_statdim(cone: &ConeRep, samples: usize, stream: &SeededStream) -> Result<Estimate> {
    check_samples(samples)?;
    projected_norm_power(&cone.prepare()?, 2.0, samples, stream)
}

/// `nu_r(C) = E |Proj_C g|^r`.
pub fn estimate_moment(cone: &ConeRep, r: f64, samples: usize, stream: &SeededStream) -> Result<Estimate> {
    check_samples(samples)?;
    if !(r >= 1.0 && r.is_finite()) {
        return domain(format!("moment order must be at least 1, got {r}"));
    }
    projected_norm_power(&cone.prepare()?, r, samples, stream)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WidthReport {
    pub width: Estimate,
    pub statdim: Estimate,
    /// `w^2 <= delta <= w^2 + 1` within three combined standard errors.
    pub consistent: bool,
}

/// Gaussian width `w(C) = E |Proj_C g|`, with the sandwich against `delta(C)` checked on the same samples.
pub fn estimate_width(cone: &ConeRep, samples: usize, stream: &SeededStream) -> Result<WidthReport> {
    check_samples(samples)?;
    let prep = cone.prepare()?;
    let n = prep.dim();
    let raw = par_samples(stream, samples, |_, rng| -> Result<Option<f64>> {
        let p = prep.project(&gaussian_vector(n, rng))?;
        Ok(p.converged.then(|| p.point.norm()))
    });
    let mut norms = Vec::with_capacity(samples);
    let mut failed = 0;
    for r in raw {
        match r? {
            Some(v) => norms.push(v),
            None => failed += 1,
        }
    }
    check_failures(failed, samples)?;
    let width = Estimate::from_values(&norms, failed);
    let squares: Vec<f64> = norms.iter().map(|v| v * v).collect();
    let statdim = Estimate::from_values(&squares, failed);
    let se = (statdim.stderr.powi(2) + (2.0 * width.mean * width.stderr).powi(2)).sqrt();
    let w2 = width.mean * width.mean;
    let consistent = w2 <= statdim.mean + 3.0 * se && statdim.mean <= w2 + 1.0 + 3.0 * se;
    Ok(WidthReport {
        width,
        statdim,
        consistent,
    })
}

/// Histogram of the face dimension of `Proj_C(g)`.
pub fn estimate_intrinsic_volumes(cone: &ConeRep, samples: usize, stream: &SeededStream) -> Result<IVProfile> {
    check_samples(samples)?;
    let prep = cone.prepare()?;
    let n = prep.dim();
    let raw = par_samples(stream, samples, |_, rng| -> Result<Option<usize>> {
        let p = prep.project(&gaussian_vector(n, rng))?;
        Ok(p.converged.then_some(p.face_dim))
    });
    let dims = raw.into_iter().collect::<Result<Vec<_>>>()?;
    IVProfile::from_face_dims(&dims, n)
}

/// Exact profile when known in closed form, else a Monte Carlo estimate.
pub fn intrinsic_volumes(cone: &ConeRep, samples: usize, stream: &SeededStream) -> Result<IVProfile> {
    match cone.exact_intrinsic_volumes() {
        Some(v) => Ok(IVProfile::exact(v)),
        None => estimate_intrinsic_volumes(cone, samples, stream),
    }
}

/// `P{|X_C - delta| >= lambda} <= 2 exp(-(lambda^2/4) / (min(delta, delta°) + lambda/3))`.
pub fn concentration_bound(delta: f64, delta_polar: f64, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !delta.is_finite() || !delta_polar.is_finite() {
        return domain("concentration bound needs lambda >= 0 and finite dimensions");
    }
    let omega = delta.min(delta_polar);
    if lambda == 0.0 {
        return Ok(2.0);
    }
    Ok(2.0 * (-(lambda * lambda / 4.0) / (omega + lambda / 3.0)).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaFlavor {
    /// `2 sqrt(log(2/eta))`, from the approximate kinematic formula.
    Kinematic,
    /// `4 sqrt(log(4/eta))`, from the phase transition theorem.
    Edge,
}

pub fn a_eta(eta: f64, flavor: EtaFlavor) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return domain(format!("eta must lie in (0, 1), got {eta}"));
    }
    Ok(match flavor {
        EtaFlavor::Kinematic => 2.0 * (2.0 / eta).ln().sqrt(),
        EtaFlavor::Edge => 4.0 * (4.0 / eta).ln().sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipeMode {
    ClosedForm,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RecipeValue {
    pub estimate: Estimate,
    pub tau: f64,
}

/// `F(tau) = E dist^2(g, tau * subdiff |x|_1)` for an `s`-sparse point in `R^n`.
pub fn recipe_integrand_l1(n: usize, s: usize, tau: f64) -> f64 {
    let (n, s) = (n as f64, s as f64);
    let t2 = 1.0 + tau * tau;
    s * t2 + (n - s) * 2.0 * (t2 * normal_cdf(-tau) - tau * normal_pdf(tau))
}

fn recipe_bracket(n: usize) -> f64 {
    10.0 + 5.0 * (n as f64).ln().max(0.0).sqrt()
}

/// Stojnic's approximation `inf_tau E dist^2(g, tau * subdiff |x0|_1)`.
pub fn stojnic_recipe_l1(
    n: usize,
    s: usize,
    mode: RecipeMode,
    samples: usize,
    stream: &SeededStream,
) -> Result<RecipeValue> {
    if s == 0 || s > n {
        return domain(format!("need 1 <= s <= n, got s={s}, n={n}"));
    }
    let hi = recipe_bracket(n);
    match mode {
        RecipeMode::ClosedForm => {
            let (tau, value) = golden_section(|t| recipe_integrand_l1(n, s, t), 0.0, hi, 1e-10);
            let (tau, value) = if recipe_integrand_l1(n, s, 0.0) <= value {
                (0.0, recipe_integrand_l1(n, s, 0.0))
            } else {
                (tau, value)
            };
            Ok(RecipeValue {
                estimate: Estimate::exact(value),
                tau,
            })
        }
        RecipeMode::MonteCarlo => {
            check_samples(samples)?;
            let draws = par_samples(stream, samples, |_, rng| gaussian_vector(n, rng));
            let per_sample = |tau: f64| -> Vec<f64> {
                draws
                    .iter()
                    .map(|g| {
                        let mut d = 0.0;
                        for (i, x) in g.iter().enumerate() {
                            d += if i < s {
                                (x - tau).powi(2)
                            } else {
                                (x.abs() - tau).max(0.0).powi(2)
                            };
                        }
                        d
                    })
                    .collect()
            };
            let mean_at = |tau: f64| {
                let v = per_sample(tau);
                v.iter().sum::<f64>() / v.len() as f64
            };
            let grid: usize = 40;
            let step = hi / grid as f64;
            let best = (0..=grid)
                .map(|i| (i, mean_at(i as f64 * step)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("grid is nonempty")
                .0;
            let lo = best.saturating_sub(1) as f64 * step;
            let up = ((best + 1).min(grid)) as f64 * step;
            let (mut tau, mut val) = golden_section(mean_at, lo, up, 1e-10);
            let at_lo = mean_at(lo);
            if at_lo < val {
                tau = lo;
                val = at_lo;
            }
            let est = Estimate::from_values(&per_sample(tau), 0);
            debug_assert!((est.mean - val).abs() <= 1e-9 * val.abs().max(1.0));
            Ok(RecipeValue { estimate: est, tau })
        }
    }
}

/// Error bound on the recipe for l1: `2 sup|s| / f(x/|x|)`, minimized over points with the given support size.
pub fn recipe_gap_bound_l1(n: usize, s: usize) -> f64 {
    2.0 * (n as f64).sqrt() / (s as f64).sqrt()
}

/// `delta(D(|.|_1, x0)) = E min_t dist^2(g, t subdiff |x0|_1)`, exact per sample.
pub fn descent_statdim_l1(
    n: usize,
    support: &[usize],
    signs: &[i8],
    samples: usize,
    stream: &SeededStream,
) -> Result<Estimate> {
    check_samples(samples)?;
    let pattern = L1Pattern::new(n, support.to_vec(), signs.to_vec())?;
    monte_carlo(stream, samples, |rng| {
        let g = gaussian_vector(n, rng);
        Ok(Some(pattern.dist_sq(&g)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gaussian_matrix, haar_orthogonal, Matrix, Vector};
    use std::f64::consts::PI;

    fn within(e: &Estimate, target: f64, z: f64) -> bool {
        (e.mean - target).abs() <= z * e.stderr + 1e-12
    }

    #[test]
    fn statdim_examples() {
        let s = SeededStream::new(1);
        let sub = ConeRep::span(&gaussian_matrix(9, 5, &mut s.rng(0))).unwrap();
        let e = estimate_statdim(&sub, 4000, &s).unwrap();
        assert!(within(&e, 5.0, 3.0), "{e:?}");
        let e = estimate_statdim(&ConeRep::orthant(10), 4000, &s).unwrap();
        assert!(within(&e, 5.0, 3.0), "{e:?}");
        let e = estimate_statdim(&ConeRep::planar_wedge(PI / 3.0, 0.2), 20_000, &s).unwrap();
        assert!(within(&e, 0.5 + 1.0 / 3.0, 3.0), "{e:?}");
        assert!(estimate_statdim(&ConeRep::orthant(2), 99, &s).is_err());
    }

    #[test]
    fn moment_examples() {
        let s = SeededStream::new(2);
        let c = ConeRep::orthant(4);
        let a = estimate_moment(&c, 2.0, 500, &s).unwrap();
        let b = estimate_statdim(&c, 500, &s).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        let e = estimate_moment(&ConeRep::full(2), 1.0, 20_000, &s).unwrap();
        assert!(within(&e, (PI / 2.0).sqrt(), 3.0), "{e:?}");
        let ray = ConeRep::ray(&Vector::from_vec(vec![1.0, 1.0]));
        let e = estimate_moment(&ray, 2.0, 20_000, &s).unwrap();
        assert!(within(&e, 0.5, 3.0), "{e:?}");
        assert!(estimate_moment(&c, 0.5, 500, &s).is_err());
    }

    #[test]
    fn width_examples() {
        let s = SeededStream::new(3);
        let line = ConeRep::Subspace {
            basis: Matrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]),
        };
        let w = estimate_width(&line, 20_000, &s).unwrap();
        assert!(within(&w.width, (2.0 / PI).sqrt(), 3.0));
        assert!(w.consistent);
        let z = estimate_width(&ConeRep::zero(3), 200, &s).unwrap();
        assert_eq!((z.width.mean, z.statdim.mean), (0.0, 0.0));
        for i in 0..20 {
            let mut rng = s.fork(i).rng(0);
            let n = 2 + (i as usize % 4);
            let c = ConeRep::GeneratorCone {
                generators: gaussian_matrix(n, n + 1, &mut rng),
            };
            assert!(estimate_width(&c, 2000, &s.fork(100 + i)).unwrap().consistent);
        }
    }

    #[test]
    fn orthant_and_subspace_profiles() {
        let s = SeededStream::new(4);
        let p = estimate_intrinsic_volumes(&ConeRep::orthant(10), 20_000, &s).unwrap();
        let exact = ConeRep::orthant(10).exact_intrinsic_volumes().unwrap();
        for k in 0..=10 {
            assert!((p.v[k] - exact[k]).abs() <= 3.0 * p.stderr[k].max(1e-3), "bin {k}");
        }
        let sub = ConeRep::span(&gaussian_matrix(5, 3, &mut s.rng(0))).unwrap();
        let p = estimate_intrinsic_volumes(&sub, 500, &s).unwrap();
        assert_eq!(p.v, vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn chamber_cone_profile() {
        // {x1 <= x2 <= x3}
        let w = Matrix::from_row_slice(3, 2, &[1.0, 0.0, -1.0, 1.0, 0.0, -1.0]);
        let c = ConeRep::InequalityCone { normals: w };
        let s = SeededStream::new(5);
        let p = estimate_intrinsic_volumes(&c, 30_000, &s).unwrap();
        let target = [0.0, 1.0 / 3.0, 0.5, 1.0 / 6.0];
        for k in 0..4 {
            assert!(
                (p.v[k] - target[k]).abs() <= 3.0 * p.stderr[k] + 1e-12,
                "bin {k}: {:?}",
                p.v
            );
        }
    }

    #[test]
    fn tails_examples() {
        let (t, h) = tails(&[0.25, 0.5, 0.25]);
        assert_eq!(t[1], 0.75);
        assert_eq!(h[0], 1.0);
        assert_eq!(h[1], 1.0);
        let (t, _) = tails(&[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(t, vec![1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn half_tail_reconstruction_is_exact_on_estimates() {
        let s = SeededStream::new(6);
        let c = ConeRep::GeneratorCone {
            generators: gaussian_matrix(4, 4, &mut s.rng(0)),
        };
        let p = estimate_intrinsic_volumes(&c, 2000, &s).unwrap();
        let (t, h) = p.tails();
        let back = from_half_tails(&h);
        for k in 0..p.v.len() {
            assert!((back[k] - p.v[k]).abs() <= 4.0 * f64::EPSILON);
            if k >= 1 && k + 1 < t.len() {
                let slack = 3.0 * p.stderr[k - 1..].iter().map(|e| e * e).sum::<f64>().sqrt();
                assert!(t[k + 1] <= h[k] + slack && h[k] <= t[k - 1] + slack, "k={k}");
            }
        }
        let (t, h) = tails(&ConeRep::orthant(2).exact_intrinsic_volumes().unwrap());
        assert!(h[1] > t[1]);
        assert!(t[2] <= h[1] && h[1] <= t[0]);
        assert!((p.v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let e = p.euler_characteristic();
        assert!(within(&e, 0.0, 3.0), "{e:?}");
        assert!((h[0] - 1.0).abs() <= 3.0 * e.stderr + 1e-12);
        let mean = p.mean();
        let direct = estimate_statdim(&c, 2000, &s).unwrap();
        assert!((mean.mean - direct.mean).abs() <= 3.0 * (mean.stderr.powi(2) + direct.stderr.powi(2)).sqrt());
    }

    #[test]
    fn statdim_properties() {
        let s = SeededStream::new(7);
        let n_samp = 4000;
        for i in 0..20 {
            let mut rng = s.fork(i).rng(0);
            let n = 2 + (i as usize % 7);
            let c = ConeRep::GeneratorCone {
                generators: gaussian_matrix(n, 1 + i as usize % (n + 2), &mut rng),
            };
            let a = estimate_statdim(&c, n_samp, &s.fork(1000 + i)).unwrap();
            let b = estimate_statdim(&c.clone().polar(), n_samp, &s.fork(2000 + i)).unwrap();
            let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
            assert!((a.mean + b.mean - n as f64).abs() <= 3.0 * se, "complementarity {i}");
        }
        let c = ConeRep::planar_wedge(1.0, 0.0);
        let d = ConeRep::orthant(3);
        let prod = ConeRep::product(vec![c.clone(), d.clone()]);
        let ep = estimate_statdim(&prod, n_samp, &s.fork(1)).unwrap();
        let ec = estimate_statdim(&c, n_samp, &s.fork(2)).unwrap();
        let ed = estimate_statdim(&d, n_samp, &s.fork(3)).unwrap();
        let se = (ep.stderr.powi(2) + ec.stderr.powi(2) + ed.stderr.powi(2)).sqrt();
        assert!((ep.mean - ec.mean - ed.mean).abs() <= 3.0 * se);
        let q = haar_orthogonal(3, &mut s.rng(9));
        let base = ConeRep::GeneratorCone {
            generators: gaussian_matrix(3, 4, &mut s.rng(10)),
        };
        let e1 = estimate_statdim(&base, n_samp, &s.fork(4)).unwrap();
        let e2 = estimate_statdim(&ConeRep::image(q, base), n_samp, &s.fork(5)).unwrap();
        assert!((e1.mean - e2.mean).abs() <= 3.0 * (e1.stderr.powi(2) + e2.stderr.powi(2)).sqrt());
        let ray = ConeRep::planar_wedge(0.0, 0.3);
        let wedge = ConeRep::planar_wedge(1.2, 0.3);
        let half = ConeRep::GeneratorCone {
            generators: Matrix::from_row_slice(
                2,
                3,
                &[
                    0.3f64.cos(),
                    -0.3f64.cos(),
                    -0.3f64.sin(),
                    0.3f64.sin(),
                    -0.3f64.sin(),
                    0.3f64.cos(),
                ],
            ),
        };
        let vals: Vec<Estimate> = [ray, wedge, half]
            .iter()
            .map(|c| estimate_statdim(c, n_samp, &s.fork(6)).unwrap())
            .collect();
        for w in vals.windows(2) {
            assert!(w[0].mean <= w[1].mean + 3.0 * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt());
        }
    }

    #[test]
    fn concentration_examples() {
        assert_eq!(concentration_bound(3.0, 4.0, 0.0).unwrap(), 2.0);
        let v = concentration_bound(20.0, 380.0, 10.0).unwrap();
        assert!((v - 0.685038).abs() < 1e-6, "{v}");
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let b = concentration_bound(20.0, 380.0, i as f64 * 0.5).unwrap();
            assert!(b <= prev);
            prev = b;
        }
        assert!(concentration_bound(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn a_eta_examples() {
        assert!((a_eta(0.1, EtaFlavor::Kinematic).unwrap() - 3.4616).abs() < 1e-4);
        assert!((a_eta(0.1, EtaFlavor::Edge).unwrap() - 7.68258).abs() < 1e-5);
        assert!(a_eta(1.5, EtaFlavor::Kinematic).is_err());
        assert!(a_eta(0.0, EtaFlavor::Edge).is_err());
    }

    #[test]
    fn recipe_examples() {
        let s = SeededStream::new(8);
        let full = stojnic_recipe_l1(30, 30, RecipeMode::ClosedForm, 0, &s).unwrap();
        assert!((full.estimate.mean - 30.0).abs() < 1e-9 && full.tau < 1e-6);
        let cf = stojnic_recipe_l1(100, 10, RecipeMode::ClosedForm, 0, &s).unwrap();
        assert!(cf.tau > 0.0 && cf.estimate.mean < 100.0);
        let mc = stojnic_recipe_l1(100, 10, RecipeMode::MonteCarlo, 5000, &s).unwrap();
        assert!(
            (mc.estimate.mean - cf.estimate.mean).abs() <= 3.0 * mc.estimate.stderr,
            "{mc:?} {cf:?}"
        );
        let exact = descent_statdim_l1(100, &(0..10).collect::<Vec<_>>(), &[1; 10], 5000, &s).unwrap();
        assert!(cf.estimate.mean >= exact.mean - 3.0 * exact.stderr);
        assert!(cf.estimate.mean - exact.mean <= recipe_gap_bound_l1(100, 10) + 3.0 * exact.stderr);
        assert!(stojnic_recipe_l1(5, 0, RecipeMode::ClosedForm, 0, &s).is_err());
    }

    #[test]
    fn descent_examples() {
        let s = SeededStream::new(9);
        let e = descent_statdim_l1(1, &[0], &[1], 20_000, &s).unwrap();
        assert!(within(&e, 0.5, 3.0), "{e:?}");
        let pat = ConeRep::L1SubdiffCone(L1Pattern::new(12, vec![2, 7], vec![1, -1]).unwrap());
        let d = descent_statdim_l1(12, &[2, 7], &[1, -1], 5000, &s).unwrap();
        let c = estimate_statdim(&pat, 5000, &s.fork(1)).unwrap();
        assert!((d.mean - (12.0 - c.mean)).abs() <= 3.0 * (d.stderr.powi(2) + c.stderr.powi(2)).sqrt());
        let a = descent_statdim_l1(40, &[0, 1], &[1, 1], 3000, &s).unwrap();
        let b = descent_statdim_l1(40, &(0..8).collect::<Vec<_>>(), &[1; 8], 3000, &s).unwrap();
        assert!(a.mean < b.mean);
        assert!(descent_statdim_l1(4, &[], &[], 500, &s).is_err());
    }

    #[test]
    fn iv_csv_format() {
        let p = IVProfile::exact(vec![0.25, 0.5, 0.25]);
        assert_eq!(p.to_csv(), "k,v_k,stderr\n0,0.25,0\n1,0.5,0\n2,0.25,0\n");
    }
}
