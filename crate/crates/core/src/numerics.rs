//! Dense linear algebra helpers, random sampling and seeded streams.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, mismatch, Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn ensure_finite_matrix(m: &Matrix, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn ensure_finite_vector(v: &Vector, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Singular value decomposition with singular values sorted in descending order.
///
/// `u` is `m x r` and `v_t` is `r x n` with `r = min(m, n)`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    pub u: Matrix,
    pub v_t: Matrix,
}

pub fn svd(m: &Matrix) -> Result<Svd> {
    ensure_finite_matrix(m, "svd input")?;
    let (rows, cols) = m.shape();
    let r = rows.min(cols);
    if r == 0 {
        return Ok(Svd {
            singular_values: vec![],
            u: Matrix::zeros(rows, 0),
            v_t: Matrix::zeros(0, cols),
        });
    }
    let dec = m.clone().svd(true, true);
    let (u0, vt0) = match (dec.u, dec.v_t) {
        (Some(u), Some(v)) => (u, v),
        _ => return Err(Error::Numerical("svd".into())),
    };
    let sv = dec.singular_values;
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let mut u = Matrix::zeros(rows, r);
    let mut v_t = Matrix::zeros(r, cols);
    let mut values = Vec::with_capacity(r);
    for (k, &i) in order.iter().enumerate() {
        values.push(sv[i]);
        u.set_column(k, &u0.column(i));
        v_t.set_row(k, &vt0.row(i));
    }
    Ok(Svd {
        singular_values: values,
        u,
        v_t,
    })
}

/// Singular values in descending order.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    ensure_finite_matrix(m, "singular value input")?;
    if m.nrows().min(m.ncols()) == 0 {
        return Ok(vec![]);
    }
    let mut v: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

pub fn op_norm(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

pub fn frobenius(m: &Matrix) -> f64 {
    m.norm()
}

/// Numerical rank: singular values above `rel_tol * sigma_max`.
pub fn rank(m: &Matrix, rel_tol: f64) -> Result<usize> {
    let sv = singular_values(m)?;
    let top = sv.first().copied().unwrap_or(0.0);
    if top <= f64::MIN_POSITIVE {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > rel_tol * top).count())
}

/// Classical condition number `sigma_max / sigma_min(m, n)`; infinite when rank deficient.
pub fn kappa(m: &Matrix) -> Result<f64> {
    let sv = singular_values(m)?;
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => Ok(hi / lo),
        (Some(_), Some(_)) => Ok(f64::INFINITY),
        _ => domain("condition number of an empty matrix"),
    }
}

/// Orthonormal basis of the column span, dropping directions below `rel_tol`.
pub fn orthonormal_basis(m: &Matrix, rel_tol: f64) -> Result<Matrix> {
    let s = svd(m)?;
    let top = s.singular_values.first().copied().unwrap_or(0.0);
    let k = s
        .singular_values
        .iter()
        .filter(|&&v| top > f64::MIN_POSITIVE && v > rel_tol * top)
        .count();
    Ok(s.u.columns(0, k).into_owned())
}

/// Orthonormal basis of the orthogonal complement of the span of orthonormal columns.
pub fn orthonormal_complement(basis: &Matrix) -> Matrix {
    let n = basis.nrows();
    let mut cols: Vec<Vector> = basis.column_iter().map(|c| c.into_owned()).collect();
    let target = n.saturating_sub(basis.ncols());
    let mut out: Vec<Vector> = Vec::with_capacity(target);
    let mut used = vec![false; n];
    while out.len() < target {
        let mut best: Option<(usize, Vector, f64)> = None;
        for j in 0..n {
            if used[j] {
                continue;
            }
            let mut r = Vector::zeros(n);
            r[j] = 1.0;
            for _ in 0..2 {
                for c in cols.iter() {
                    let d = c.dot(&r);
                    r.axpy(-d, c, 1.0);
                }
            }
            let nr = r.norm();
            if best.as_ref().map_or(true, |b| nr > b.2) {
                best = Some((j, r, nr));
            }
        }
        let Some((j, r, nr)) = best else { break };
        used[j] = true;
        if nr < 1e-8 {
            break;
        }
        let q = r / nr;
        cols.push(q.clone());
        out.push(q);
    }
    let mut m = Matrix::zeros(n, out.len());
    for (k, c) in out.iter().enumerate() {
        m.set_column(k, c);
    }
    m
}

/// Left inverse `(A^T A)^{-1} A^T` of an injective matrix, or `None` when rank deficient.
pub fn left_inverse(a: &Matrix, rel_tol: f64) -> Result<Option<Matrix>> {
    let s = svd(a)?;
    let n = a.ncols();
    if s.singular_values.len() < n {
        return Ok(None);
    }
    let top = s.singular_values.first().copied().unwrap_or(0.0);
    if n > 0 && s.singular_values[n - 1] <= rel_tol * top {
        return Ok(None);
    }
    let mut vt = s.v_t.clone();
    for (i, mut row) in vt.row_iter_mut().enumerate() {
        row /= s.singular_values[i];
    }
    Ok(Some(vt.transpose() * s.u.transpose()))
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    // Column-major fill keeps the draw order independent of the nalgebra layout.
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Matrix::from_vec(rows, cols, data)
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs of `diag(R)` fixed.
pub fn haar_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    if n == 0 {
        return Matrix::zeros(0, 0);
    }
    let g = gaussian_matrix(n, n, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let mut c = q.column_mut(j);
            c.neg_mut();
        }
    }
    q
}

/// The coordinate projection onto the first `m` of `n` coordinates, as an `m x n` matrix.
pub fn row_projection(m: usize, n: usize) -> Result<Matrix> {
    if m > n {
        return mismatch(format!("row projection {m} > {n}"));
    }
    Ok(Matrix::from_fn(m, n, |i, j| if i == j { 1.0 } else { 0.0 }))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based random stream. Sample `i` always draws from the same ChaCha8
/// stream, so results do not depend on thread count or scheduling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeededStream {
    pub master_seed: u64,
    pub counter: u64,
}

impl SeededStream {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            counter: 0,
        }
    }

    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.master_seed);
        r.set_stream(self.counter.wrapping_add(index));
        r
    }

    /// Independent child stream for a labelled sub-experiment.
    pub fn fork(&self, label: u64) -> SeededStream {
        let mixed = splitmix64(self.master_seed ^ splitmix64(label ^ splitmix64(self.counter)));
        SeededStream::new(mixed)
    }

    pub fn advanced(&self, by: u64) -> SeededStream {
        SeededStream {
            master_seed: self.master_seed,
            counter: self.counter.wrapping_add(by),
        }
    }
}

/// Evaluate `f` on samples `0..count`, in parallel, returning results in index order.
pub fn par_samples<T, F>(stream: &SeededStream, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.rng(i);
            f(i, &mut rng)
        })
        .collect()
}

/// Monte Carlo mean with standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub failures: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            stderr: 0.0,
            samples: 0,
            failures: 0,
        }
    }

    pub fn from_values(values: &[f64], failures: usize) -> Self {
        let n = values.len();
        let mean = if n == 0 {
            f64::NAN
        } else {
            values.iter().sum::<f64>() / n as f64
        };
        let var = if n > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / n.max(1) as f64).sqrt(),
            samples: n,
            failures,
        }
    }

    /// Lower end of a one-sided `z`-sigma band.
    pub fn lower(&self, z: f64) -> f64 {
        self.mean - z * self.stderr
    }

    pub fn upper(&self, z: f64) -> f64 {
        self.mean + z * self.stderr
    }
}

/// Failures above this fraction abort an estimator.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

pub(crate) fn check_failures(failed: usize, total: usize) -> Result<()> {
    if failed as f64 > MAX_FAILURE_FRACTION * total as f64 {
        Err(Error::TooManyFailures { failed, total })
    } else {
        Ok(())
    }
}

/// Monte Carlo mean of `f`; `Ok(None)` marks a failed sample.
pub fn monte_carlo<F>(stream: &SeededStream, samples: usize, f: F) -> Result<Estimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Option<f64>> + Sync,
{
    let raw = par_samples(stream, samples, |_, rng| f(rng));
    let mut values = Vec::with_capacity(samples);
    let mut failed = 0;
    for r in raw {
        match r? {
            Some(v) => values.push(v),
            None => failed += 1,
        }
    }
    check_failures(failed, samples)?;
    Ok(Estimate::from_values(&values, failed))
}

/// Golden-section search for the minimum of a unimodal function on `[lo, hi]`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut guard = 0;
    while (b - a).abs() > tol && guard < 500 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        guard += 1;
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    let mut best = (x, fx);
    for (px, pv) in [(c, fc), (d, fd)] {
        if pv < best.1 {
            best = (px, pv);
        }
    }
    best
}

/// Standard normal cdf.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn haar_is_orthogonal() {
        let mut rng = SeededStream::new(7).rng(0);
        let q = haar_orthogonal(6, &mut rng);
        let e = &q.transpose() * &q - Matrix::identity(6, 6);
        assert!(e.amax() < 1e-12);
    }

    #[test]
    fn haar_first_column_mean_is_near_zero() {
        let s = SeededStream::new(11);
        let cols = par_samples(&s, 4000, |_, rng| haar_orthogonal(3, rng).column(0).into_owned());
        let mean = cols.iter().fold(Vector::zeros(3), |a, c| a + c) / 4000.0;
        // Each coordinate has variance 1/3, so the stderr is about 0.009.
        assert!(mean.amax() < 0.05, "{mean}");
    }

    #[test]
    fn streams_are_reproducible_and_forks_differ() {
        let s = SeededStream::new(42);
        let a: f64 = s.rng(3).sample(StandardNormal);
        let b: f64 = s.rng(3).sample(StandardNormal);
        let c: f64 = s.fork(1).rng(3).sample(StandardNormal);
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(a.to_bits(), c.to_bits());
    }

    #[test]
    fn svd_sorted_and_reconstructs() {
        let mut rng = SeededStream::new(1).rng(0);
        let m = gaussian_matrix(5, 3, &mut rng);
        let s = svd(&m).unwrap();
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let sig = Matrix::from_diagonal(&Vector::from_vec(s.singular_values.clone()));
        let r = &s.u * sig * &s.v_t;
        assert!((r - m).amax() < 1e-12);
    }

    #[test]
    fn complement_is_orthonormal_and_orthogonal() {
        let mut rng = SeededStream::new(2).rng(0);
        let b = orthonormal_basis(&gaussian_matrix(7, 3, &mut rng), 1e-12).unwrap();
        let n = orthonormal_complement(&b);
        assert_eq!(n.ncols(), 4);
        assert!((b.transpose() * &n).amax() < 1e-12);
        assert!((n.transpose() * &n - Matrix::identity(4, 4)).amax() < 1e-12);
    }

    #[test]
    fn golden_finds_quadratic_min() {
        let (x, v) = golden_section(|t| (t - 1.3).powi(2) + 2.0, 0.0, 5.0, 1e-10);
        assert_relative_eq!(x, 1.3, epsilon = 1e-6);
        assert_relative_eq!(v, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn kappa_of_diag() {
        let m = Matrix::from_diagonal(&Vector::from_vec(vec![4.0, 1.0, 0.5]));
        assert_relative_eq!(kappa(&m).unwrap(), 8.0, epsilon = 1e-12);
        assert_eq!(rank(&Matrix::zeros(3, 3), 1e-9).unwrap(), 0);
    }

    #[test]
    fn non_finite_rejected() {
        let mut m = Matrix::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(svd(&m), Err(Error::NonFinite(_))));
    }
}
