//! Nonnegative least squares, `min ||G c - y||` subject to `c >= 0`.
//!
//! Lawson-Hanson active set method on the Gram matrix with an incrementally
//! grown Cholesky factor, followed by a QR solve on the final passive set.

use crate::error::Result;
use crate::numerics::{ensure_finite_matrix, ensure_finite_vector, Matrix, Vector};

#[derive(Clone, Debug)]
pub struct NnlsSolution {
    pub coef: Vector,
    pub residual_norm: f64,
    pub passive: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

/// NNLS solver with the Gram matrix of `g` cached for repeated right-hand sides.
#[derive(Clone, Debug)]
pub struct Nnls {
    g: Matrix,
    gram: Matrix,
    norms: Vec<f64>,
}

struct Chol {
    l: Matrix,
    dim: usize,
}

impl Chol {
    fn new(k: usize) -> Self {
        Self {
            l: Matrix::zeros(k, k),
            dim: 0,
        }
    }

    /// Append column `j`; false when it is numerically dependent on the current set.
    fn push(&mut self, gram: &Matrix, passive: &[usize], j: usize) -> bool {
        let p = self.dim;
        let mut l = vec![0.0; p];
        for i in 0..p {
            let mut v = gram[(passive[i], j)];
            for t in 0..i {
                v -= self.l[(i, t)] * l[t];
            }
            l[i] = v / self.l[(i, i)];
        }
        let d = gram[(j, j)] - l.iter().map(|v| v * v).sum::<f64>();
        if !(d > 1e-13 * gram[(j, j)]) {
            return false;
        }
        for (t, v) in l.iter().enumerate() {
            self.l[(p, t)] = *v;
        }
        self.l[(p, p)] = d.sqrt();
        self.dim += 1;
        true
    }

    fn rebuild(&mut self, gram: &Matrix, passive: &[usize]) -> Vec<usize> {
        self.dim = 0;
        let mut kept = Vec::with_capacity(passive.len());
        for &j in passive {
            if self.push(gram, &kept, j) {
                kept.push(j);
            }
        }
        kept
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let p = self.dim;
        let mut z = vec![0.0; p];
        for i in 0..p {
            let mut v = rhs[i];
            for t in 0..i {
                v -= self.l[(i, t)] * z[t];
            }
            z[i] = v / self.l[(i, i)];
        }
        for i in (0..p).rev() {
            let mut v = z[i];
            for t in i + 1..p {
                v -= self.l[(t, i)] * z[t];
            }
            z[i] = v / self.l[(i, i)];
        }
        z
    }
}

impl Nnls {
    pub fn new(g: Matrix) -> Result<Self> {
        ensure_finite_matrix(&g, "nnls matrix")?;
        let gram = g.transpose() * &g;
        let norms = g.column_iter().map(|c| c.norm()).collect();
        Ok(Self { g, gram, norms })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.g
    }

    pub fn solve(&self, y: &Vector) -> Result<NnlsSolution> {
        ensure_finite_vector(y, "nnls right-hand side")?;
        let k = self.g.ncols();
        let gty = self.g.transpose() * y;
        let ynorm = y.norm();
        let mut coef = Vector::zeros(k);
        if k == 0 || ynorm == 0.0 {
            return Ok(NnlsSolution {
                coef,
                residual_norm: ynorm,
                passive: vec![],
                iterations: 0,
                converged: true,
            });
        }
        let pick_tol = 1e-12 * ynorm;
        let mut in_p = vec![false; k];
        let mut blocked = vec![false; k];
        let mut passive: Vec<usize> = Vec::new();
        let mut chol = Chol::new(k);
        let mut w = gty.clone();
        let max_iter = 5 * k + 50;
        let mut iterations = 0;
        let mut converged = false;
        while iterations < max_iter {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..k {
                if in_p[j] || blocked[j] || self.norms[j] == 0.0 {
                    continue;
                }
                let score = w[j] / self.norms[j];
                if score > pick_tol && best.map_or(true, |b| score > b.1) {
                    best = Some((j, score));
                }
            }
            let Some((j, _)) = best else {
                converged = true;
                break;
            };
            iterations += 1;
            if !chol.push(&self.gram, &passive, j) {
                blocked[j] = true;
                continue;
            }
            passive.push(j);
            in_p[j] = true;
            loop {
                let rhs: Vec<f64> = passive.iter().map(|&i| gty[i]).collect();
                let s = chol.solve(&rhs);
                if s.iter().all(|&v| v > 0.0) {
                    for (t, &i) in passive.iter().enumerate() {
                        coef[i] = s[t];
                    }
                    break;
                }
                let mut alpha = f64::INFINITY;
                let mut blocking = passive[0];
                for (t, &i) in passive.iter().enumerate() {
                    if s[t] <= 0.0 {
                        let a = coef[i] / (coef[i] - s[t]);
                        if a < alpha {
                            alpha = a;
                            blocking = i;
                        }
                    }
                }
                for (t, &i) in passive.iter().enumerate() {
                    coef[i] += alpha * (s[t] - coef[i]);
                }
                coef[blocking] = 0.0;
                let scale = passive.iter().map(|&i| coef[i].abs()).fold(0.0, f64::max);
                let mut kept = Vec::with_capacity(passive.len());
                for &i in passive.iter() {
                    if coef[i] <= 1e-14 * scale {
                        coef[i] = 0.0;
                        in_p[i] = false;
                    } else {
                        kept.push(i);
                    }
                }
                blocked.iter_mut().for_each(|b| *b = false);
                passive = chol.rebuild(&self.gram, &kept);
                for &i in &kept {
                    if !passive.contains(&i) {
                        coef[i] = 0.0;
                        in_p[i] = false;
                    }
                }
                if passive.is_empty() {
                    break;
                }
            }
            w = &gty - &self.gram * &coef;
        }
        self.polish(y, &mut coef, &passive);
        let resid = y - &self.g * &coef;
        let residual_norm = resid.norm();
        if converged {
            let w = self.g.transpose() * &resid;
            let kkt = (0..k)
                .filter(|&j| self.norms[j] > 0.0)
                .map(|j| {
                    if coef[j] > 0.0 {
                        (w[j] / self.norms[j]).abs()
                    } else {
                        (w[j] / self.norms[j]).max(0.0)
                    }
                })
                .fold(0.0, f64::max);
            converged = kkt <= 1e-8 * ynorm.max(1e-300);
        }
        Ok(NnlsSolution {
            coef,
            residual_norm,
            passive,
            iterations,
            converged,
        })
    }

    fn polish(&self, y: &Vector, coef: &mut Vector, passive: &[usize]) {
        if passive.is_empty() {
            return;
        }
        let gp = self.g.select_columns(passive);
        let qr = gp.qr();
        let qty = qr.q().transpose() * y;
        if let Some(s) = qr.r().solve_upper_triangular(&qty) {
            if s.iter().all(|v| v.is_finite() && *v > 0.0) {
                for (t, &i) in passive.iter().enumerate() {
                    coef[i] = s[t];
                }
            }
        }
    }
}

/// One-shot NNLS.
pub fn nnls(g: &Matrix, y: &Vector) -> Result<NnlsSolution> {
    Nnls::new(g.clone())?.solve(y)
}
