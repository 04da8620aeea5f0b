//! Condition-number bounds on the statistical dimension of linear images and recovery thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::{kappa, Estimate};
use crate::regularizers::{build_bc_matrices, AnalysisInstance};
use crate::statdim::{a_eta, EtaFlavor};

/// Inputs, bound values and an optional Monte Carlo comparison.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub delta_c: f64,
    pub n: usize,
    pub m: Option<usize>,
    pub kappa: Option<f64>,
    pub kbar2: Option<f64>,
    pub renegar_r: Option<f64>,
    pub eta: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub preconditions_hold: bool,
    pub clipped: bool,
    pub estimate: Option<Estimate>,
    /// `(estimate - upper) / stderr`; at most 3 when the bound is respected.
    pub z: Option<f64>,
}

impl BoundReport {
    pub fn with_estimate(mut self, est: Estimate) -> Self {
        self.z = self.upper.map(|u| {
            let d = est.mean - u;
            if est.stderr > 0.0 {
                d / est.stderr
            } else if d > 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        });
        self.estimate = Some(est);
        self
    }

    /// True when there is no estimate or it lies below the upper bound plus three standard errors.
    pub fn consistent(&self) -> bool {
        self.z.is_none_or(|z| z <= 3.0)
    }
}

fn check_delta(delta_c: f64, n: usize) -> Result<()> {
    if !(delta_c.is_finite() && delta_c >= 0.0 && delta_c <= n as f64 + 1e-9) {
        return domain(format!("statistical dimension {delta_c} outside [0, {n}]"));
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 1.0) {
        return domain(format!("eta must lie in (0, 1), got {eta}"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremABounds {
    /// `delta(C) / kappa^2`.
    pub lower: Option<f64>,
    /// `R^2 delta(C)`.
    pub upper_r: Option<f64>,
    /// `kappa^2 delta(C)`.
    pub upper_kappa: Option<f64>,
    pub upper: Option<f64>,
}

pub fn theorem_a_bounds(delta_c: f64, renegar_r: Option<f64>, kappa: Option<f64>, n: usize) -> Result<TheoremABounds> {
    check_delta(delta_c, n)?;
    if renegar_r.is_none() && kappa.is_none() {
        return domain("need a Renegar condition number or a matrix condition number");
    }
    for (name, v) in [("renegar_r", renegar_r), ("kappa", kappa)] {
        if let Some(v) = v {
            if v.is_nan() || v < 1.0 - 1e-12 {
                return domain(format!("{name} must be at least 1, got {v}"));
            }
        }
    }
    let upper_r = renegar_r.map(|r| r * r * delta_c);
    let upper_kappa = kappa.map(|k| k * k * delta_c);
    let upper = match (upper_r, upper_kappa) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    Ok(TheoremABounds {
        lower: kappa.map(|k| delta_c / (k * k)),
        upper_r,
        upper_kappa,
        upper,
    })
}

/// `delta(C) / kappa^2 + (1 - 1 / kappa^2) n`, never above `n`.
pub fn improved_bound(delta_c: f64, kappa: f64, n: usize) -> Result<f64> {
    check_delta(delta_c, n)?;
    if kappa.is_nan() || kappa < 1.0 - 1e-12 {
        return domain(format!("kappa must be at least 1, got {kappa}"));
    }
    let inv = if kappa.is_infinite() {
        0.0
    } else {
        1.0 / (kappa * kappa)
    };
    Ok((inv * delta_c + (1.0 - inv) * n as f64).min(n as f64))
}

/// `delta(C) + 2 sqrt(log(2 / eta)) sqrt(m)`.
pub fn theorem_b_min_m(delta_c: f64, m: usize, eta: f64) -> Result<f64> {
    Ok(delta_c + a_eta(eta, EtaFlavor::Kinematic)? * (m as f64).sqrt())
}

/// `kbar2 delta(C) + (n - m) eta`, valid when `m >= delta(C) + 2 sqrt(log(2/eta) m)`.
pub fn theorem_b_bound(delta_c: f64, kbar2: f64, n: usize, m: usize, eta: f64) -> Result<BoundReport> {
    check_delta(delta_c, n)?;
    check_eta(eta)?;
    if m == 0 || m > n {
        return domain(format!("need 1 <= m <= {n}, got {m}"));
    }
    if !(kbar2.is_finite() && kbar2 >= 1.0 - 1e-12) {
        return domain(format!("kbar2 must be finite and at least 1, got {kbar2}"));
    }
    let need = theorem_b_min_m(delta_c, m, eta)?;
    if (m as f64) < need {
        return domain(format!("m = {m} is below the admissible threshold {need:.4}"));
    }
    Ok(BoundReport {
        name: "theorem_b".into(),
        delta_c,
        n,
        m: Some(m),
        kbar2: Some(kbar2),
        eta: Some(eta),
        upper: Some(kbar2 * delta_c + (n - m) as f64 * eta),
        preconditions_hold: true,
        ..BoundReport::default()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub m: usize,
    pub bound: f64,
    pub kbar2: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalM {
    pub m_star: usize,
    pub bound_star: f64,
    pub curve: Vec<CurvePoint>,
}

impl OptimalM {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,bound,kbar2,stderr\n");
        for p in &self.curve {
            out.push_str(&format!("{},{},{},{}\n", p.m, p.bound, p.kbar2, p.stderr));
        }
        out
    }
}

/// Minimize the Theorem B bound over the admissible values of `m` in `grid`
/// (all of `1..=n` when `grid` is empty). Ties go to the smaller `m`.
pub fn optimal_m_search<F>(delta_c: f64, n: usize, eta: f64, grid: &[usize], mut kbar2: F) -> Result<OptimalM>
where
    F: FnMut(usize) -> Result<Estimate>,
{
    check_delta(delta_c, n)?;
    check_eta(eta)?;
    let all: Vec<usize> = if grid.is_empty() {
        (1..=n).collect()
    } else {
        grid.to_vec()
    };
    let mut curve = Vec::new();
    for m in all {
        if m == 0 || m > n || (m as f64) < theorem_b_min_m(delta_c, m, eta)? {
            continue;
        }
        let k = kbar2(m)?;
        let bound = k.mean * delta_c + (n - m) as f64 * eta;
        curve.push(CurvePoint {
            m,
            bound,
            kbar2: k.mean,
            stderr: k.stderr * delta_c,
        });
    }
    let best = curve
        .iter()
        .min_by(|a, b| a.bound.total_cmp(&b.bound).then(a.m.cmp(&b.m)))
        .ok_or_else(|| crate::Error::Domain("no admissible m".into()))?;
    Ok(OptimalM {
        m_star: best.m,
        bound_star: best.bound,
        curve: curve.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub raw: f64,
    pub value: f64,
    pub clipped: bool,
}

fn clip(raw: f64, n: usize) -> Threshold {
    let value = raw.clamp(0.0, n as f64);
    Threshold {
        raw,
        value,
        clipped: value != raw,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisThreshold {
    pub kappa_c: f64,
    pub m_required: Threshold,
}

/// `kappa(C)^-2 delta_l1 + (1 - (p/n) kappa(C)^-2) n`, returned with `kappa(C)`,
/// where `delta_l1` is the statistical dimension of the l1 descent cone at `D x0`.
pub fn analysis_statdim_bound(inst: &AnalysisInstance, delta_l1: f64) -> Result<(f64, f64)> {
    let (p, n) = inst.d.shape();
    check_delta(delta_l1, p)?;
    let (_, c) = build_bc_matrices(inst)?;
    let k = kappa(&c)?;
    let inv = if k.is_finite() { 1.0 / (k * k) } else { 0.0 };
    Ok((k, inv * delta_l1 + (1.0 - p as f64 / n as f64 * inv) * n as f64))
}

/// The statistical dimension bound plus `a_eta sqrt(n)` with the edge `a_eta`.
pub fn l1_analysis_threshold(inst: &AnalysisInstance, delta_l1: f64, eta: f64) -> Result<AnalysisThreshold> {
    let n = inst.d.ncols();
    let (k, bound) = analysis_statdim_bound(inst, delta_l1)?;
    let raw = bound + a_eta(eta, EtaFlavor::Edge)? * (n as f64).sqrt();
    Ok(AnalysisThreshold {
        kappa_c: k,
        m_required: clip(raw, n),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeThresholds {
    pub m_succeed: Threshold,
    pub m_fail: Threshold,
}

/// `delta +- a_eta sqrt(n)` with the edge `a_eta`.
pub fn edge_thresholds(delta: f64, n: usize, eta: f64) -> Result<EdgeThresholds> {
    check_delta(delta, n)?;
    let w = a_eta(eta, EtaFlavor::Edge)? * (n as f64).sqrt();
    Ok(EdgeThresholds {
        m_succeed: clip(delta + w, n),
        m_fail: clip(delta - w, n),
    })
}

#[cfg(test)]
mod tests;
