//! Subdifferential cones of l1-type regularizers, finite-difference operators and their spectra.

use serde::{Deserialize, Serialize};

use crate::cones::{ConeRep, L1Pattern};
use crate::error::{domain, mismatch, Error, Result};
use crate::numerics::{ensure_finite_matrix, ensure_finite_vector, singular_values, Matrix, Vector};

/// Largest dimension accepted for named operators.
pub const MAX_OPERATOR_DIM: usize = 2048;

/// Relative threshold below which entries of `D x0` count as zero.
pub const SUPPORT_REL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    L1,
    WeightedL1,
    /// `x -> |D x|_1`, with the pattern taken in the coordinates of `D x`.
    L1Analysis(Matrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubdifferentialModel {
    pub family: Family,
    pub pattern: L1Pattern,
}

impl SubdifferentialModel {
    pub fn l1(x0: &Vector) -> Result<Self> {
        Ok(Self {
            family: Family::L1,
            pattern: pattern_of(x0, None)?,
        })
    }

    pub fn weighted_l1(x0: &Vector, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != x0.len() {
            return mismatch("weights length differs from x0");
        }
        Ok(Self {
            family: Family::WeightedL1,
            pattern: pattern_of(x0, Some(weights))?,
        })
    }

    pub fn analysis(inst: &AnalysisInstance) -> Result<Self> {
        Ok(Self {
            family: Family::L1Analysis(inst.d.clone()),
            pattern: inst.pattern()?,
        })
    }
}

fn pattern_of(y: &Vector, weights: Option<Vec<f64>>) -> Result<L1Pattern> {
    ensure_finite_vector(y, "anchor")?;
    let scale = y.amax();
    if scale == 0.0 {
        return domain("anchor is zero, so the descent cone is the whole space");
    }
    let support: Vec<usize> = (0..y.len())
        .filter(|&j| y[j].abs() >= SUPPORT_REL_TOL * scale)
        .collect();
    let signs = support.iter().map(|&j| if y[j] > 0.0 { 1 } else { -1 }).collect();
    match weights {
        None => L1Pattern::new(y.len(), support, signs),
        Some(w) => L1Pattern::weighted(y.len(), support, signs, w),
    }
}

/// `cone(subdiff f(x0))`, the polar of the descent cone.
pub fn subdiff_cone(model: &SubdifferentialModel) -> ConeRep {
    let inner = ConeRep::L1SubdiffCone(model.pattern.clone());
    match &model.family {
        Family::L1 | Family::WeightedL1 => inner,
        Family::L1Analysis(d) => ConeRep::image(d.transpose(), inner),
    }
}

/// Descent cone of the regularizer at the anchor.
pub fn descent_cone(model: &SubdifferentialModel) -> ConeRep {
    subdiff_cone(model).polar()
}

/// `D^T cone(subdiff |y0|_1)`.
pub fn analysis_subdiff_cone(inst: &AnalysisInstance) -> Result<ConeRep> {
    Ok(subdiff_cone(&SubdifferentialModel::analysis(inst)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FdVariant {
    /// `n x n`, `-1` on the diagonal and `+1` on the superdiagonal.
    SquareBidiagonal,
    /// `(n-1) x n` forward differences.
    Rect,
}

pub fn finite_difference_matrix(n: usize, variant: FdVariant) -> Result<Matrix> {
    if n == 0 || n > MAX_OPERATOR_DIM {
        return domain(format!("finite difference size {n}"));
    }
    let rows = match variant {
        FdVariant::SquareBidiagonal => n,
        FdVariant::Rect => n - 1,
    };
    Ok(Matrix::from_fn(rows, n, |i, j| {
        if i == j {
            -1.0
        } else if j == i + 1 {
            1.0
        } else {
            0.0
        }
    }))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TvSpectrum {
    pub n: usize,
    /// `sqrt(2 - 2 cos(k pi / (n + 1)))`, `k = 1..n`: the spectrum of the `(n+1) x n` difference matrix.
    pub padded_formula: Vec<f64>,
    /// Singular values of the square bidiagonal matrix, ascending.
    pub exact: Vec<f64>,
    /// `sqrt(2 - 2 cos((2k - 1) pi / (2n + 1)))`, `k = 1..n`.
    pub square_closed_form: Vec<f64>,
    pub max_discrepancy: f64,
    pub closed_form_error: f64,
    /// Sum of squares of the padded formula, `2n`.
    pub padded_frobenius_sq: f64,
    /// `|D|_F^2 = 2n - 1` for the square variant.
    pub square_frobenius_sq: f64,
}

pub fn tv_singular_values(n: usize) -> Result<TvSpectrum> {
    let d = finite_difference_matrix(n, FdVariant::SquareBidiagonal)?;
    let pi = std::f64::consts::PI;
    let padded: Vec<f64> = (1..=n)
        .map(|k| (2.0 - 2.0 * (k as f64 * pi / (n as f64 + 1.0)).cos()).sqrt())
        .collect();
    let closed: Vec<f64> = (1..=n)
        .map(|k| (2.0 - 2.0 * ((2 * k - 1) as f64 * pi / (2 * n + 1) as f64).cos()).sqrt())
        .collect();
    let mut exact = singular_values(&d)?;
    exact.reverse();
    let gap = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Ok(TvSpectrum {
        n,
        max_discrepancy: gap(&padded, &exact),
        closed_form_error: gap(&closed, &exact),
        padded_frobenius_sq: padded.iter().map(|s| s * s).sum(),
        square_frobenius_sq: d.norm_squared(),
        padded_formula: padded,
        exact,
        square_closed_form: closed,
    })
}

/// Parse `tv_square(n)`, `tv_rect(n)` or `identity(n)`.
pub fn parse_operator(spec: &str) -> Result<Matrix> {
    let s = spec.trim();
    let open = s
        .find('(')
        .ok_or_else(|| Error::Parse(format!("expected name(n), got {s:?}")))?;
    if !s.ends_with(')') {
        return Err(Error::Parse(format!("missing ')' in {s:?}")));
    }
    let name = s[..open].trim();
    let arg = s[open + 1..s.len() - 1].trim();
    let n: usize = arg
        .parse()
        .map_err(|_| Error::Parse(format!("bad size {arg:?} in {s:?}")))?;
    if n == 0 || n > MAX_OPERATOR_DIM {
        return Err(Error::Parse(format!("size {n} out of range 1..={MAX_OPERATOR_DIM}")));
    }
    match name {
        "tv_square" => finite_difference_matrix(n, FdVariant::SquareBidiagonal),
        "tv_rect" if n >= 2 => finite_difference_matrix(n, FdVariant::Rect),
        "identity" => Ok(Matrix::identity(n, n)),
        _ => Err(Error::Parse(format!("unknown operator {name:?}"))),
    }
}

/// An analysis-sparsity instance `f(x) = |D x|_1` anchored at `x0`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisInstance {
    pub d: Matrix,
    pub x0: Vector,
    pub y0: Vector,
    pub support: Vec<usize>,
    pub signs: Vec<i8>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OperatorField {
    Named(String),
    Dense(Vec<Vec<f64>>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceJson {
    #[serde(rename = "D")]
    d: OperatorField,
    x0: Vec<f64>,
}

impl AnalysisInstance {
    pub fn new(d: Matrix, x0: Vector) -> Result<Self> {
        ensure_finite_matrix(&d, "analysis operator")?;
        ensure_finite_vector(&x0, "x0")?;
        if d.ncols() != x0.len() {
            return mismatch(format!("D has {} columns but x0 has length {}", d.ncols(), x0.len()));
        }
        if d.nrows() == 0 {
            return domain("D has no rows");
        }
        let y0 = &d * &x0;
        let p = pattern_of(&y0, None)?;
        Ok(Self {
            d,
            x0,
            y0,
            support: p.support,
            signs: p.signs,
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: InstanceJson = serde_json::from_str(s)?;
        let d = match raw.d {
            OperatorField::Named(name) => parse_operator(&name)?,
            OperatorField::Dense(rows) => {
                if rows.len() > MAX_OPERATOR_DIM || rows.iter().any(|r| r.len() > MAX_OPERATOR_DIM) {
                    return domain("operator too large");
                }
                crate::cones::matrix_serde::from_rows(&rows).map_err(Error::Parse)?
            }
        };
        Self::new(d, Vector::from_vec(raw.x0))
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn pattern(&self) -> Result<L1Pattern> {
        L1Pattern::new(self.d.nrows(), self.support.clone(), self.signs.clone())
    }
}

/// `B = [e_j (j off the support), sum_{j in I} sgn_j e_j / sqrt(s)]` and `C = D^T B`.
pub fn build_bc_matrices(inst: &AnalysisInstance) -> Result<(Matrix, Matrix)> {
    if inst.d.nrows() < inst.d.ncols() {
        return domain("need p >= n");
    }
    let b = inst.pattern()?.reduction_basis();
    let c = inst.d.transpose() * &b;
    Ok((b, c))
}
