//! Dense primal-dual interior-point LP solver and basis pursuit with an analysis operator.

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::error::{domain, mismatch, Error, Result};
use crate::numerics::{ensure_finite_matrix, ensure_finite_vector, svd, Matrix, Vector};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 200;

/// `min c^T x` subject to `E x = d`, `x >= 0`.
#[derive(Clone, Debug)]
pub struct LpStandardForm {
    pub c: Vector,
    pub e: Matrix,
    pub d: Vector,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vector,
    pub dual: Vector,
    pub slack: Vector,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    /// `max_i x_i s_i`.
    pub complementarity: f64,
    pub iterations: usize,
}

impl LpStandardForm {
    pub fn new(c: Vector, e: Matrix, d: Vector) -> Result<Self> {
        ensure_finite_vector(&c, "objective")?;
        ensure_finite_matrix(&e, "constraint matrix")?;
        ensure_finite_vector(&d, "right-hand side")?;
        if e.ncols() != c.len() || e.nrows() != d.len() {
            return mismatch(format!(
                "E is {}x{}, c has {} entries and d has {}",
                e.nrows(),
                e.ncols(),
                c.len(),
                d.len()
            ));
        }
        Ok(Self { c, e, d })
    }

    /// Mehrotra predictor-corrector on the normal equations. `E` must have full row rank.
    pub fn solve(&self, tol: f64) -> Result<LpSolution> {
        let (e, c, d) = (&self.e, &self.c, &self.d);
        let nv = c.len();
        if e.nrows() == 0 {
            if c.iter().any(|&v| v < 0.0) {
                return domain("LP is unbounded");
            }
            return Ok(LpSolution {
                x: Vector::zeros(nv),
                dual: Vector::zeros(0),
                slack: c.clone(),
                objective: 0.0,
                primal_residual: 0.0,
                dual_residual: 0.0,
                gap: 0.0,
                complementarity: 0.0,
                iterations: 0,
            });
        }
        let eet = Cholesky::new(e * e.transpose())
            .ok_or_else(|| Error::Numerical("constraint matrix is rank deficient".into()))?;

        let mut x = e.transpose() * eet.solve(d);
        let mut lam = eet.solve(&(e * c));
        let mut s = c - e.transpose() * &lam;
        let dx = (-1.5 * x.min()).max(0.0);
        let ds = (-1.5 * s.min()).max(0.0);
        x.add_scalar_mut(dx);
        s.add_scalar_mut(ds);
        let xs = x.dot(&s);
        let dx = 0.5 * xs / s.sum().max(f64::MIN_POSITIVE);
        let ds = 0.5 * xs / x.sum().max(f64::MIN_POSITIVE);
        x.add_scalar_mut(dx.max(1e-4));
        s.add_scalar_mut(ds.max(1e-4));

        let (dn, cn) = (1.0 + d.norm(), 1.0 + c.norm());
        for it in 0..MAX_ITERATIONS {
            let rp = d - e * &x;
            let rd = c - e.transpose() * &lam - &s;
            let pobj = c.dot(&x);
            let dobj = d.dot(&lam);
            let gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
            if rp.norm() / dn <= tol && rd.norm() / cn <= tol && gap <= tol {
                return Ok(LpSolution {
                    complementarity: x.component_mul(&s).max(),
                    objective: pobj,
                    primal_residual: rp.norm(),
                    dual_residual: rd.norm(),
                    gap,
                    x,
                    dual: lam,
                    slack: s,
                    iterations: it,
                });
            }
            let mu = x.dot(&s) / nv as f64;
            let theta = x.component_div(&s);
            let mut normal = e * Matrix::from_diagonal(&theta) * e.transpose();
            let scale = normal.diagonal().amax().max(1.0);
            let chol = loop {
                if let Some(ch) = Cholesky::new(normal.clone()) {
                    break ch;
                }
                let bump = 1e-12 * scale;
                for i in 0..normal.nrows() {
                    normal[(i, i)] += bump.max(normal[(i, i)] * 1e-10);
                }
                if !normal.iter().all(|v| v.is_finite()) {
                    return Err(Error::Numerical("normal equations".into()));
                }
            };
            let step = |rc: &Vector| -> (Vector, Vector, Vector) {
                // S dx + X ds = rc, E dx = rp, E^T dl + ds = rd.
                let w = rc.component_div(&s) - theta.component_mul(&rd);
                let dl = chol.solve(&(&rp - e * &w));
                let dx = &w + theta.component_mul(&(e.transpose() * &dl));
                let ds = &rd - e.transpose() * &dl;
                (dx, dl, ds)
            };
            let xs = x.component_mul(&s);
            let (ax, _, as_) = step(&(-&xs));
            let ap = max_step(&x, &ax);
            let ad = max_step(&s, &as_);
            let mu_aff = (&x + &ax * ap).dot(&(&s + &as_ * ad)) / nv as f64;
            let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);
            let rc = -&xs - ax.component_mul(&as_) + Vector::from_element(nv, sigma * mu);
            let (px, pl, ps) = step(&rc);
            let eta = (1.0 - mu).clamp(0.9, 0.995);
            let ap = (eta * max_step(&x, &px)).min(1.0);
            let ad = (eta * max_step(&s, &ps)).min(1.0);
            x += &px * ap;
            lam += &pl * ad;
            s += &ps * ad;
            if !(x.iter().all(|v| v.is_finite()) && s.iter().all(|v| v.is_finite())) {
                return Err(Error::Numerical("interior point iterate is not finite".into()));
            }
        }
        let rp = (d - e * &x).norm();
        Err(Error::NonConvergence {
            solver: "interior point",
            iterations: MAX_ITERATIONS,
            residual: rp,
        })
    }
}

fn max_step(v: &Vector, dv: &Vector) -> f64 {
    let mut a = f64::INFINITY;
    for (x, d) in v.iter().zip(dv.iter()) {
        if *d < 0.0 {
            a = a.min(-x / d);
        }
    }
    a
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecoveryOutcome {
    pub x_hat: Vec<f64>,
    pub objective: f64,
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl RecoveryOutcome {
    /// `|x_hat - x0|_inf <= 1e-4 max(1, |x0|_inf)`.
    pub fn recovers(&self, x0: &Vector) -> bool {
        if !self.converged || x0.len() != self.x_hat.len() {
            return false;
        }
        let err = self
            .x_hat
            .iter()
            .zip(x0.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        err <= 1e-4 * x0.amax().max(1.0)
    }
}

/// Basis pursuit with an analysis operator reduced to a standard-form LP.
///
/// With `D = U S V^T`, the substitution `y = D x` turns `min |D x|_1, A x = b` into
/// `min |y|_1` over `y` in the range of `D` satisfying the projected measurements;
/// the kernel part of `x` is recovered by least squares afterwards.
#[derive(Clone, Debug)]
pub struct BpAnalysis {
    pinv: Matrix,
    kernel: Matrix,
    /// `(A K)^+` and the orthonormal complement of its range.
    ak_pinv: Matrix,
    ak_perp: Matrix,
    a: Matrix,
    rows: Matrix,
    rows_scale: Vec<f64>,
    rows_left: Matrix,
}

impl BpAnalysis {
    pub fn new(d: &Matrix, a: &Matrix) -> Result<Self> {
        ensure_finite_matrix(d, "analysis operator")?;
        ensure_finite_matrix(a, "measurement matrix")?;
        if d.ncols() != a.ncols() {
            return mismatch(format!("D has {} columns, A has {}", d.ncols(), a.ncols()));
        }
        let p = d.nrows();
        let dec = svd(d)?;
        let top = dec.singular_values.first().copied().unwrap_or(0.0);
        let r = dec.singular_values.iter().filter(|&&v| v > 1e-10 * top).count();
        let ur = dec.u.columns(0, r).into_owned();
        let vr = dec.v_t.rows(0, r).transpose();
        let inv_s = Matrix::from_diagonal(&Vector::from_iterator(
            r,
            dec.singular_values[..r].iter().map(|v| 1.0 / v),
        ));
        let pinv = &vr * inv_s * ur.transpose();
        let kernel = crate::numerics::orthonormal_complement(&vr);
        let range_perp = crate::numerics::orthonormal_complement(&ur);
        let ak = a * &kernel;
        let (ak_pinv, ak_perp) = if ak.ncols() == 0 {
            (Matrix::zeros(0, a.nrows()), Matrix::identity(a.nrows(), a.nrows()))
        } else {
            let s = svd(&ak)?;
            let scale = crate::numerics::op_norm(a)?.max(f64::MIN_POSITIVE);
            let q = s.singular_values.iter().filter(|&&v| v > 1e-10 * scale).count();
            if q < ak.ncols() {
                return domain("measurements do not determine the kernel of D");
            }
            let inv = crate::numerics::left_inverse(&ak, 1e-10)?
                .ok_or_else(|| Error::Numerical("kernel least squares".into()))?;
            (inv, crate::numerics::orthonormal_complement(&s.u))
        };
        // Constraints on y: ak_perp^T A D^+ y = ak_perp^T b and range_perp^T y = 0.
        let top_rows = ak_perp.transpose() * a * &pinv;
        let mut stacked = Matrix::zeros(top_rows.nrows() + range_perp.ncols(), p);
        stacked.rows_mut(0, top_rows.nrows()).copy_from(&top_rows);
        stacked
            .rows_mut(top_rows.nrows(), range_perp.ncols())
            .copy_from(&range_perp.transpose());
        let red = svd(&stacked)?;
        let big = red.singular_values.first().copied().unwrap_or(0.0);
        let q = red.singular_values.iter().filter(|&&v| v > 1e-10 * big).count();
        Ok(Self {
            pinv,
            kernel,
            ak_pinv,
            rows: red.v_t.rows(0, q).into_owned(),
            rows_scale: red.singular_values[..q].to_vec(),
            rows_left: red.u.columns(0, q).into_owned(),
            ak_perp,
            a: a.clone(),
        })
    }

    pub fn solve(&self, b: &Vector, tol: f64) -> Result<RecoveryOutcome> {
        ensure_finite_vector(b, "measurements")?;
        if b.len() != self.a.nrows() {
            return mismatch(format!("A has {} rows, b has {}", self.a.nrows(), b.len()));
        }
        let p = self.pinv.ncols();
        let top = self.ak_perp.transpose() * b;
        let mut g = Vector::zeros(self.rows_left.nrows());
        g.rows_mut(0, top.len()).copy_from(&top);
        // Reduce to orthonormal rows, checking consistency of the dropped part.
        let proj = self.rows_left.transpose() * &g;
        let lost = (&g - &self.rows_left * &proj).norm();
        if lost > 1e-8 * (1.0 + g.norm()) {
            return Err(Error::Domain(format!(
                "measurements are inconsistent (residual {lost:e})"
            )));
        }
        let h = Vector::from_iterator(proj.len(), proj.iter().zip(&self.rows_scale).map(|(v, s)| v / s));
        let e = {
            let mut e = Matrix::zeros(self.rows.nrows(), 2 * self.rows.ncols());
            e.columns_mut(0, self.rows.ncols()).copy_from(&self.rows);
            e.columns_mut(self.rows.ncols(), self.rows.ncols())
                .copy_from(&(-&self.rows));
            e
        };
        let lp = LpStandardForm::new(Vector::from_element(e.ncols(), 1.0), e, h)?;
        let sol = lp.solve(tol)?;
        let y = sol.x.rows(0, p) - sol.x.rows(p, p);
        let mut x = &self.pinv * &y;
        if self.kernel.ncols() > 0 {
            let w = &self.ak_pinv * (b - &self.a * &x);
            x += &self.kernel * w;
        }
        let residual = (&self.a * &x - b).norm();
        Ok(RecoveryOutcome {
            objective: y.iter().map(|v| v.abs()).sum(),
            x_hat: x.iter().copied().collect(),
            residual,
            converged: true,
            iterations: sol.iterations,
        })
    }
}

/// `min |D x|_1` subject to `A x = b`.
pub fn solve_bp_analysis(d: &Matrix, a: &Matrix, b: &Vector, tol: f64) -> Result<RecoveryOutcome> {
    BpAnalysis::new(d, a)?.solve(b, tol)
}

#[cfg(test)]
mod tests;
