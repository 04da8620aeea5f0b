//! Empirical phase transitions for basis pursuit with l1 and analysis regularizers.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::{
    gaussian_matrix, gaussian_vector, orthonormal_basis, orthonormal_complement, par_samples, Matrix, SeededStream,
};
use crate::regularizers::{finite_difference_matrix, FdVariant};
use crate::solvers::lp::{BpAnalysis, DEFAULT_TOL};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959964;

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    L1,
    TvSquare,
    Analysis(Matrix),
}

impl Family {
    fn operator(&self, n: usize) -> Result<Matrix> {
        match self {
            Family::L1 => Ok(Matrix::identity(n, n)),
            Family::TvSquare => finite_difference_matrix(n, FdVariant::SquareBidiagonal),
            Family::Analysis(d) if d.ncols() == n => Ok(d.clone()),
            Family::Analysis(d) => domain(format!("operator has {} columns, expected {n}", d.ncols())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    /// Trials where the LP failed; these count as unsuccessful.
    pub solver_failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTable {
    pub n: usize,
    pub s: usize,
    pub points: Vec<PhasePoint>,
}

pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let nt = trials as f64;
    let p = successes as f64 / nt;
    let z2 = z * z;
    let denom = 1.0 + z2 / nt;
    let center = (p + z2 / (2.0 * nt)) / denom;
    let half = z / denom * (p * (1.0 - p) / nt + z2 / (4.0 * nt * nt)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

impl PhaseTable {
    /// First crossing of rate 1/2, linearly interpolated between grid points.
    pub fn crossing_point(&self) -> Option<f64> {
        let pts = &self.points;
        let i = pts.iter().position(|p| p.rate >= 0.5)?;
        if i == 0 {
            return None;
        }
        let (a, b) = (&pts[i - 1], &pts[i]);
        let t = (0.5 - a.rate) / (b.rate - a.rate);
        Some(a.m as f64 + t * (b.m as f64 - a.m as f64))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,trials,successes,rate,wilson_lo,wilson_hi\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.m, p.trials, p.successes, p.rate, p.wilson_lo, p.wilson_hi
            ));
        }
        out
    }
}

/// Random cosparse signal: `D x0` vanishes off a random set of `s` rows.
fn draw_signal<R: rand::Rng>(d: &Matrix, s: usize, rng: &mut R) -> Result<nalgebra::DVector<f64>> {
    let (p, n) = d.shape();
    let mut idx: Vec<usize> = (0..p).collect();
    for i in 0..p - s {
        let j = rng.random_range(i..p);
        idx.swap(i, j);
    }
    let cos = &idx[..p - s];
    let rows = Matrix::from_fn(cos.len(), n, |i, j| d[(cos[i], j)]);
    let null = if rows.nrows() == 0 {
        Matrix::identity(n, n)
    } else {
        orthonormal_complement(&orthonormal_basis(&rows.transpose(), 1e-10)?)
    };
    if null.ncols() == 0 {
        return domain(format!("no nonzero signal has {} zero analysis coefficients", p - s));
    }
    Ok(&null * gaussian_vector(null.ncols(), rng))
}

/// Success frequency of basis pursuit at each `m`. Every trial draws one signal and one
/// Gaussian matrix, whose leading `m` rows are the measurements at grid point `m`.
pub fn phase_transition_experiment(
    family: &Family,
    n: usize,
    s: usize,
    m_grid: &[usize],
    trials: usize,
    stream: &SeededStream,
) -> Result<PhaseTable> {
    if n == 0 {
        return domain("n must be positive");
    }
    let d = family.operator(n)?;
    if s == 0 || s > d.nrows() {
        return domain(format!("need 1 <= s <= {}, got {s}", d.nrows()));
    }
    if m_grid.is_empty() || m_grid.iter().any(|&m| m == 0 || m > n) {
        return domain(format!("grid values must lie in 1..={n}"));
    }
    if trials == 0 {
        return domain("need at least one trial");
    }
    let m_max = *m_grid.iter().max().expect("nonempty grid");
    let outcomes = par_samples(stream, trials, |_, rng| -> Result<Vec<Option<bool>>> {
        let x0 = draw_signal(&d, s, rng)?;
        let g = gaussian_matrix(m_max, n, rng);
        Ok(m_grid
            .iter()
            .map(|&m| {
                let a = g.rows(0, m).into_owned();
                let b = &a * &x0;
                BpAnalysis::new(&d, &a)
                    .and_then(|bp| bp.solve(&b, DEFAULT_TOL))
                    .ok()
                    .map(|out| out.recovers(&x0))
            })
            .collect())
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let points = m_grid
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let successes = outcomes.iter().filter(|o| o[k] == Some(true)).count();
            let solver_failures = outcomes.iter().filter(|o| o[k].is_none()).count();
            let (lo, hi) = wilson_interval(successes, trials, Z95);
            PhasePoint {
                m,
                trials,
                successes,
                rate: successes as f64 / trials as f64,
                wilson_lo: lo,
                wilson_hi: hi,
                solver_failures,
            }
        })
        .collect();
    Ok(PhaseTable { n, s, points })
}
