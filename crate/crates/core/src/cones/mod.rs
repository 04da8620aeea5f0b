//! Polyhedral cone representations, exact projections and face dimensions.

mod plan;

use serde::{Deserialize, Serialize};

use crate::error::{domain, mismatch, Error, Result};
use crate::numerics::{left_inverse, orthonormal_basis, orthonormal_complement, rank, Matrix, Vector};

pub use plan::{PreparedCone, Projection};

/// Largest ambient dimension accepted from untrusted input.
pub const MAX_AMBIENT: usize = 1 << 14;
const MAX_GENERATORS: usize = 1 << 14;

/// Matrices travel through JSON as arrays of rows.
pub mod matrix_serde {
    use super::Matrix;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        from_rows(&rows).map_err(D::Error::custom)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix, String> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err("ragged matrix rows".into());
        }
        if r.saturating_mul(c) > 1 << 24 {
            return Err("matrix too large".into());
        }
        Ok(Matrix::from_fn(r, c, |i, j| rows[i][j]))
    }
}

/// Support, sign pattern and weights describing `cone(subdiff of sum_j w_j |x_j|)` at a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1Pattern {
    pub ambient: usize,
    pub support: Vec<usize>,
    pub signs: Vec<i8>,
    #[serde(default)]
    pub weights: Vec<f64>,
}

impl L1Pattern {
    pub fn new(ambient: usize, support: Vec<usize>, signs: Vec<i8>) -> Result<Self> {
        let p = Self {
            ambient,
            support,
            signs,
            weights: vec![1.0; ambient],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn weighted(ambient: usize, support: Vec<usize>, signs: Vec<i8>, weights: Vec<f64>) -> Result<Self> {
        let p = Self {
            ambient,
            support,
            signs,
            weights,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn weight(&self, j: usize) -> f64 {
        if self.weights.is_empty() {
            1.0
        } else {
            self.weights[j]
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ambient == 0 || self.ambient > MAX_AMBIENT {
            return domain(format!("l1 ambient dimension {}", self.ambient));
        }
        if self.support.is_empty() {
            return domain("l1 support must be nonempty");
        }
        if self.support.len() != self.signs.len() {
            return mismatch("support and sign lengths differ");
        }
        let mut seen = vec![false; self.ambient];
        for &j in &self.support {
            if j >= self.ambient || seen[j] {
                return domain(format!("bad support index {j}"));
            }
            seen[j] = true;
        }
        if self.signs.iter().any(|&s| s != 1 && s != -1) {
            return domain("signs must be +1 or -1");
        }
        if !self.weights.is_empty() {
            if self.weights.len() != self.ambient {
                return mismatch("weights length differs from ambient dimension");
            }
            if self.weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                return domain("weights must be positive and finite");
            }
        }
        Ok(())
    }

    pub fn off_support(&self) -> Vec<usize> {
        let mut on = vec![false; self.ambient];
        for &j in &self.support {
            on[j] = true;
        }
        (0..self.ambient).filter(|&j| !on[j]).collect()
    }

    fn support_weight_norm(&self) -> f64 {
        self.support.iter().map(|&j| self.weight(j).powi(2)).sum::<f64>().sqrt()
    }

    /// Orthonormal `p x (p - s + 1)` basis: off-support coordinates, then the signed support direction.
    pub fn reduction_basis(&self) -> Matrix {
        let off = self.off_support();
        let mut b = Matrix::zeros(self.ambient, off.len() + 1);
        for (q, &j) in off.iter().enumerate() {
            b[(j, q)] = 1.0;
        }
        let wn = self.support_weight_norm();
        for (t, &j) in self.support.iter().enumerate() {
            b[(j, off.len())] = self.signs[t] as f64 * self.weight(j) / wn;
        }
        b
    }

    /// Inequality normals of the cone in reduction coordinates `(u, tau)`.
    pub fn reduced_normals(&self) -> Matrix {
        let off = self.off_support();
        let k = off.len();
        let wn = self.support_weight_norm();
        let mut w = Matrix::zeros(k + 1, 2 * k + 1);
        for (q, &j) in off.iter().enumerate() {
            let c = self.weight(j) / wn;
            w[(q, 2 * q)] = 1.0;
            w[(k, 2 * q)] = -c;
            w[(q, 2 * q + 1)] = -1.0;
            w[(k, 2 * q + 1)] = -c;
        }
        w[(k, 2 * k)] = -1.0;
        w
    }

    /// Extreme rays, available when the off-support is small.
    pub fn generators(&self) -> Option<Matrix> {
        let off = self.off_support();
        if off.len() > 12 {
            return None;
        }
        let count = 1usize << off.len();
        let mut g = Matrix::zeros(self.ambient, count);
        for mask in 0..count {
            for (t, &j) in self.support.iter().enumerate() {
                g[(j, mask)] = self.signs[t] as f64 * self.weight(j);
            }
            for (q, &j) in off.iter().enumerate() {
                let e = if mask & (1 << q) != 0 { 1.0 } else { -1.0 };
                g[(j, mask)] = e * self.weight(j);
            }
        }
        Some(g)
    }

    /// Exact projection by a breakpoint scan on the scale `t` of the subdifferential.
    /// Returns the projection and `t`.
    pub fn project(&self, x: &Vector) -> (Vector, f64) {
        let mut num = 0.0;
        let mut den = 0.0;
        for (t, &j) in self.support.iter().enumerate() {
            let w = self.weight(j);
            num += w * self.signs[t] as f64 * x[j];
            den += w * w;
        }
        let mut breaks: Vec<(f64, usize)> = self
            .off_support()
            .into_iter()
            .map(|j| (x[j].abs() / self.weight(j), j))
            .collect();
        breaks.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut t = num / den;
        for &(b, j) in &breaks {
            if t >= b {
                break;
            }
            let w = self.weight(j);
            num += w * x[j].abs();
            den += w * w;
            t = num / den;
        }
        let t = t.max(0.0);
        let mut p = Vector::zeros(self.ambient);
        for (s, &j) in self.support.iter().enumerate() {
            p[j] = t * self.signs[s] as f64 * self.weight(j);
        }
        for &(_, j) in &breaks {
            let cap = t * self.weight(j);
            p[j] = x[j].signum() * x[j].abs().min(cap);
        }
        (p, t)
    }

    /// Dimension of the face containing the projection of `x`.
    pub fn face_dim(&self, x: &Vector, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        1 + self
            .off_support()
            .into_iter()
            .filter(|&j| x[j].abs() < t * self.weight(j))
            .count()
    }

    /// Squared distance from `x` to the cone.
    pub fn dist_sq(&self, x: &Vector) -> f64 {
        let (p, _) = self.project(x);
        (x - p).norm_squared()
    }
}

/// A closed convex cone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum ConeRep {
    /// Column span of an orthonormal basis.
    Subspace {
        #[serde(with = "matrix_serde")]
        basis: Matrix,
    },
    NonnegOrthant {
        dim: usize,
    },
    /// Conic hull of the columns.
    GeneratorCone {
        #[serde(with = "matrix_serde")]
        generators: Matrix,
    },
    /// `{x : W^T x <= 0}` for the columns `w_j` of `W`.
    InequalityCone {
        #[serde(with = "matrix_serde")]
        normals: Matrix,
    },
    L1SubdiffCone(L1Pattern),
    /// `A K`.
    LinearImage {
        #[serde(with = "matrix_serde")]
        map: Matrix,
        inner: Box<ConeRep>,
    },
    Polar {
        inner: Box<ConeRep>,
    },
    ProductCone {
        factors: Vec<ConeRep>,
    },
    Intersection {
        cones: Vec<ConeRep>,
    },
}

impl ConeRep {
    pub fn full(n: usize) -> Self {
        ConeRep::Subspace {
            basis: Matrix::identity(n, n),
        }
    }

    pub fn zero(n: usize) -> Self {
        ConeRep::Subspace {
            basis: Matrix::zeros(n, 0),
        }
    }

    pub fn orthant(n: usize) -> Self {
        ConeRep::NonnegOrthant { dim: n }
    }

    /// Subspace spanned by arbitrary columns.
    pub fn span(vectors: &Matrix) -> Result<Self> {
        Ok(ConeRep::Subspace {
            basis: orthonormal_basis(vectors, 1e-10)?,
        })
    }

    pub fn ray(v: &Vector) -> Self {
        ConeRep::GeneratorCone {
            generators: Matrix::from_column_slice(v.len(), 1, v.as_slice()),
        }
    }

    /// Wedge of opening angle `alpha` in the plane, starting at angle `start`.
    pub fn planar_wedge(alpha: f64, start: f64) -> Self {
        let g = Matrix::from_row_slice(
            2,
            2,
            &[start.cos(), (start + alpha).cos(), start.sin(), (start + alpha).sin()],
        );
        ConeRep::GeneratorCone { generators: g }
    }

    pub fn image(map: Matrix, inner: ConeRep) -> Self {
        ConeRep::LinearImage {
            map,
            inner: Box::new(inner),
        }
    }

    /// Polar cone, simplified structurally where the polar has a direct representation.
    pub fn polar(self) -> Self {
        match self {
            ConeRep::Polar { inner } => *inner,
            ConeRep::Subspace { basis } => ConeRep::Subspace {
                basis: orthonormal_complement(&basis),
            },
            ConeRep::NonnegOrthant { dim } => ConeRep::InequalityCone {
                normals: Matrix::identity(dim, dim),
            },
            ConeRep::GeneratorCone { generators } => ConeRep::InequalityCone { normals: generators },
            ConeRep::InequalityCone { normals } => ConeRep::GeneratorCone { generators: normals },
            other => ConeRep::Polar { inner: Box::new(other) },
        }
    }

    pub fn product(factors: Vec<ConeRep>) -> Self {
        ConeRep::ProductCone { factors }
    }

    pub fn intersect(self, other: ConeRep) -> Result<Self> {
        if self.ambient_dim() != other.ambient_dim() {
            return mismatch("intersection of cones in different spaces");
        }
        Ok(ConeRep::Intersection {
            cones: vec![self, other],
        })
    }

    /// `A^{-1}(D°) = {x : A x in D°}`, represented as the polar of `A^T D`.
    pub fn preimage_cone(a: &Matrix, d: &ConeRep) -> Result<Self> {
        if a.nrows() != d.ambient_dim() {
            return mismatch(format!(
                "map has {} rows but the cone lives in R^{}",
                a.nrows(),
                d.ambient_dim()
            ));
        }
        Ok(ConeRep::Polar {
            inner: Box::new(ConeRep::image(a.transpose(), d.clone())),
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: ConeRep = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_json_bytes(b: &[u8]) -> Result<Self> {
        let c: ConeRep = serde_json::from_slice(b)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("cone serializes")
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            ConeRep::Subspace { basis } => basis.nrows(),
            ConeRep::NonnegOrthant { dim } => *dim,
            ConeRep::GeneratorCone { generators } => generators.nrows(),
            ConeRep::InequalityCone { normals } => normals.nrows(),
            ConeRep::L1SubdiffCone(p) => p.ambient,
            ConeRep::LinearImage { map, .. } => map.nrows(),
            ConeRep::Polar { inner } => inner.ambient_dim(),
            ConeRep::ProductCone { factors } => factors.iter().map(|f| f.ambient_dim()).sum(),
            ConeRep::Intersection { cones } => cones.first().map_or(0, |c| c.ambient_dim()),
        }
    }

    /// Structural checks; returns the ambient dimension.
    pub fn validate(&self) -> Result<usize> {
        let n = self.validate_inner(0)?;
        if n == 0 || n > MAX_AMBIENT {
            return domain(format!("ambient dimension {n} out of range"));
        }
        Ok(n)
    }

    fn validate_inner(&self, depth: usize) -> Result<usize> {
        if depth > 32 {
            return domain("cone nesting too deep");
        }
        let finite = |m: &Matrix| {
            if m.iter().all(|v| v.is_finite()) {
                Ok(())
            } else {
                Err(Error::NonFinite("cone matrix"))
            }
        };
        let n = match self {
            ConeRep::Subspace { basis } => {
                finite(basis)?;
                if basis.ncols() > basis.nrows() {
                    return domain("subspace basis has more columns than rows");
                }
                let gram = basis.transpose() * basis;
                let k = basis.ncols();
                if (gram - Matrix::identity(k, k)).iter().any(|v| v.abs() > 1e-8) {
                    return domain("subspace basis is not orthonormal");
                }
                basis.nrows()
            }
            ConeRep::NonnegOrthant { dim } => *dim,
            ConeRep::GeneratorCone { generators } => {
                finite(generators)?;
                if generators.ncols() > MAX_GENERATORS {
                    return domain("too many generators");
                }
                generators.nrows()
            }
            ConeRep::InequalityCone { normals } => {
                finite(normals)?;
                if normals.ncols() > MAX_GENERATORS {
                    return domain("too many normals");
                }
                normals.nrows()
            }
            ConeRep::L1SubdiffCone(p) => {
                p.validate()?;
                p.ambient
            }
            ConeRep::LinearImage { map, inner } => {
                finite(map)?;
                let k = inner.validate_inner(depth + 1)?;
                if map.ncols() != k {
                    return mismatch(format!("map has {} columns but inner cone lives in R^{k}", map.ncols()));
                }
                map.nrows()
            }
            ConeRep::Polar { inner } => inner.validate_inner(depth + 1)?,
            ConeRep::ProductCone { factors } => {
                if factors.is_empty() {
                    return domain("empty product");
                }
                let mut total = 0usize;
                for f in factors {
                    total = total.saturating_add(f.validate_inner(depth + 1)?);
                }
                total
            }
            ConeRep::Intersection { cones } => {
                if cones.is_empty() {
                    return domain("empty intersection");
                }
                let n = cones[0].validate_inner(depth + 1)?;
                for c in &cones[1..] {
                    if c.validate_inner(depth + 1)? != n {
                        return mismatch("intersection of cones in different spaces");
                    }
                }
                n
            }
        };
        if n > MAX_AMBIENT {
            return domain(format!("ambient dimension {n} out of range"));
        }
        Ok(n)
    }

    pub fn is_subspace(&self) -> bool {
        match self {
            ConeRep::Subspace { .. } => true,
            ConeRep::ProductCone { factors } => factors.iter().all(|f| f.is_subspace()),
            ConeRep::Polar { inner } => inner.is_subspace(),
            ConeRep::LinearImage { inner, .. } => inner.is_subspace(),
            _ => false,
        }
    }

    /// Conic generators (a V-description), when one is cheaply available.
    pub fn generators(&self) -> Result<Option<Matrix>> {
        Ok(match self {
            ConeRep::Subspace { basis } => Some(hcat(&[basis.clone(), -basis.clone()])),
            ConeRep::NonnegOrthant { dim } => Some(Matrix::identity(*dim, *dim)),
            ConeRep::GeneratorCone { generators } => Some(generators.clone()),
            ConeRep::InequalityCone { normals } => {
                let n = normals.nrows();
                if normals.ncols() == 0 {
                    return Ok(Some(hcat(&[Matrix::identity(n, n), -Matrix::identity(n, n)])));
                }
                match left_inverse(normals, 1e-10)? {
                    Some(pinv) => {
                        let range = orthonormal_basis(normals, 1e-10)?;
                        let comp = orthonormal_complement(&range);
                        Some(hcat(&[-pinv.transpose(), comp.clone(), -comp]))
                    }
                    None => None,
                }
            }
            ConeRep::L1SubdiffCone(p) => p.generators(),
            ConeRep::LinearImage { map, inner } => inner.generators()?.map(|g| map * g),
            ConeRep::Polar { inner } => inner.inequality_normals()?,
            ConeRep::ProductCone { factors } => {
                let mut blocks = Vec::with_capacity(factors.len());
                for f in factors {
                    match f.generators()? {
                        Some(g) => blocks.push(g),
                        None => return Ok(None),
                    }
                }
                Some(block_diag(&blocks))
            }
            ConeRep::Intersection { cones } if cones.len() == 1 => cones[0].generators()?,
            ConeRep::Intersection { .. } => None,
        })
    }

    /// Inequality normals `W` with the cone equal to `{x : W^T x <= 0}`, when available.
    pub fn inequality_normals(&self) -> Result<Option<Matrix>> {
        Ok(match self {
            ConeRep::Subspace { basis } => {
                let c = orthonormal_complement(basis);
                Some(hcat(&[c.clone(), -c]))
            }
            ConeRep::NonnegOrthant { dim } => Some(-Matrix::identity(*dim, *dim)),
            ConeRep::GeneratorCone { generators } => {
                let n = generators.nrows();
                if generators.ncols() == 0 {
                    return Ok(Some(hcat(&[Matrix::identity(n, n), -Matrix::identity(n, n)])));
                }
                match left_inverse(generators, 1e-10)? {
                    Some(pinv) => {
                        let range = orthonormal_basis(generators, 1e-10)?;
                        let comp = orthonormal_complement(&range);
                        Some(hcat(&[-pinv.transpose(), comp.clone(), -comp]))
                    }
                    None => None,
                }
            }
            ConeRep::InequalityCone { normals } => Some(normals.clone()),
            ConeRep::L1SubdiffCone(p) => {
                let b = p.reduction_basis();
                let comp = orthonormal_complement(&b);
                Some(hcat(&[&b * p.reduced_normals(), comp.clone(), -comp]))
            }
            ConeRep::LinearImage { map, inner } => {
                let (m, reduced) = reduce_image(map, inner);
                if m.ncols() == 0 {
                    let c = Matrix::identity(m.nrows(), m.nrows());
                    return Ok(Some(hcat(&[c.clone(), -c])));
                }
                let Some(pinv) = left_inverse(&m, 1e-10)? else {
                    return Ok(None);
                };
                let Some(w) = reduced.inequality_normals()? else {
                    return Ok(None);
                };
                let range = orthonormal_basis(&m, 1e-10)?;
                let comp = orthonormal_complement(&range);
                Some(hcat(&[pinv.transpose() * w, comp.clone(), -comp]))
            }
            ConeRep::Polar { inner } => inner.generators()?,
            ConeRep::ProductCone { factors } => {
                let mut blocks = Vec::with_capacity(factors.len());
                for f in factors {
                    match f.inequality_normals()? {
                        Some(w) => blocks.push(w),
                        None => return Ok(None),
                    }
                }
                Some(block_diag(&blocks))
            }
            ConeRep::Intersection { cones } => {
                let mut blocks = Vec::with_capacity(cones.len());
                for c in cones {
                    match c.inequality_normals()? {
                        Some(w) => blocks.push(w),
                        None => return Ok(None),
                    }
                }
                Some(hcat(&blocks))
            }
        })
    }

    /// Intrinsic volumes known in closed form, indexed `0..=n`.
    pub fn exact_intrinsic_volumes(&self) -> Option<Vec<f64>> {
        match self {
            ConeRep::Subspace { basis } => {
                let mut v = vec![0.0; basis.nrows() + 1];
                v[basis.ncols()] = 1.0;
                Some(v)
            }
            ConeRep::NonnegOrthant { dim } => {
                let n = *dim;
                let mut v = vec![0.0; n + 1];
                let mut c = 1.0f64;
                for (k, slot) in v.iter_mut().enumerate() {
                    *slot = c / 2f64.powi(n as i32);
                    c = c * (n - k) as f64 / (k + 1) as f64;
                }
                Some(v)
            }
            ConeRep::Polar { inner } => inner.exact_intrinsic_volumes().map(|mut v| {
                v.reverse();
                v
            }),
            ConeRep::ProductCone { factors } => {
                let mut acc = vec![1.0];
                for f in factors {
                    let v = f.exact_intrinsic_volumes()?;
                    acc = convolve(&acc, &v);
                }
                Some(acc)
            }
            ConeRep::LinearImage { map, inner } => {
                let k = map.ncols();
                if map.nrows() == k && (map.transpose() * map - Matrix::identity(k, k)).amax() < 1e-10 {
                    inner.exact_intrinsic_volumes()
                } else {
                    None
                }
            }
            ConeRep::GeneratorCone { generators } if generators.nrows() == 2 => planar_volumes(generators),
            ConeRep::L1SubdiffCone(p) if p.support.len() == p.ambient => {
                let mut v = vec![0.0; p.ambient + 1];
                v[0] = 0.5;
                v[1] = 0.5;
                Some(v)
            }
            _ => None,
        }
    }

    pub fn prepare(&self) -> Result<PreparedCone> {
        PreparedCone::new(self)
    }

    /// Projection and face dimension in one call; prefer [`ConeRep::prepare`] for repeated use.
    pub fn project(&self, x: &Vector) -> Result<Projection> {
        self.prepare()?.project(x)
    }
}

/// For `A K` with `K` an l1 subdifferential cone, rewrite as `(A B) K~` in reduced coordinates.
pub(crate) fn reduce_image(map: &Matrix, inner: &ConeRep) -> (Matrix, ConeRep) {
    match inner {
        ConeRep::L1SubdiffCone(p) => (
            map * p.reduction_basis(),
            ConeRep::InequalityCone {
                normals: p.reduced_normals(),
            },
        ),
        ConeRep::LinearImage { map: inner_map, inner } => reduce_image(&(map * inner_map), inner),
        other => (map.clone(), other.clone()),
    }
}

/// Opening angle and volumes of a cone in the plane given by generators.
/// Conic hull of planar generators, classified by the largest angular gap.
#[derive(Clone, Debug)]
pub(crate) enum PlanarShape {
    Zero,
    /// Pointed wedge from `a` counterclockwise to `b`, opening angle below pi.
    Wedge {
        a: Vector,
        b: Vector,
        alpha: f64,
    },
    Line(Vector),
    /// `{x : n^T x <= 0}`.
    HalfPlane(Vector),
    Plane,
}

pub(crate) fn planar_shape(g: &Matrix) -> PlanarShape {
    use std::f64::consts::PI;
    let mut angles: Vec<f64> = g
        .column_iter()
        .filter(|c| c.norm() > 1e-14)
        .map(|c| c[1].atan2(c[0]))
        .collect();
    if angles.is_empty() {
        return PlanarShape::Zero;
    }
    angles.sort_by(|a, b| a.total_cmp(b));
    let k = angles.len();
    // Gap after index i runs from angles[i] to angles[i + 1] (cyclically).
    let (mut gap, mut at) = (angles[0] + 2.0 * PI - angles[k - 1], k - 1);
    for i in 0..k - 1 {
        if angles[i + 1] - angles[i] > gap {
            gap = angles[i + 1] - angles[i];
            at = i;
        }
    }
    let alpha = 2.0 * PI - gap;
    let unit = |t: f64| Vector::from_vec(vec![t.cos(), t.sin()]);
    let eps = 1e-12;
    if alpha < PI - eps {
        let start = angles[(at + 1) % k];
        PlanarShape::Wedge {
            a: unit(start),
            b: unit(start + alpha),
            alpha,
        }
    } else if alpha <= PI + eps {
        let base = angles[0];
        let off_line = angles.iter().any(|a| {
            let d = (a - base).rem_euclid(PI);
            d > 1e-12 && d < PI - 1e-12
        });
        if off_line {
            PlanarShape::HalfPlane(unit(angles[at] + 0.5 * gap))
        } else {
            PlanarShape::Line(unit(base))
        }
    } else {
        PlanarShape::Plane
    }
}

fn planar_volumes(g: &Matrix) -> Option<Vec<f64>> {
    use std::f64::consts::PI;
    Some(match planar_shape(g) {
        PlanarShape::Zero => vec![1.0, 0.0, 0.0],
        PlanarShape::Wedge { alpha, .. } => vec![(PI - alpha) / (2.0 * PI), 0.5, alpha / (2.0 * PI)],
        PlanarShape::Line(_) => vec![0.0, 1.0, 0.0],
        PlanarShape::HalfPlane(_) => vec![0.0, 0.5, 0.5],
        PlanarShape::Plane => vec![0.0, 0.0, 1.0],
    })
}

pub(crate) fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub(crate) fn hcat(blocks: &[Matrix]) -> Matrix {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut m = Matrix::zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        m.view_mut((0, off), (rows, b.ncols())).copy_from(b);
        off += b.ncols();
    }
    m
}

pub(crate) fn block_diag(blocks: &[Matrix]) -> Matrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut m = Matrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        m.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    m
}

/// Numerical rank used for face dimensions.
pub(crate) fn face_rank(m: &Matrix) -> usize {
    if m.ncols() == 0 {
        return 0;
    }
    rank(m, 1e-9).unwrap_or(0)
}
