use super::{face_rank, planar_shape, reduce_image, ConeRep, L1Pattern, PlanarShape};
use crate::error::{mismatch, Result};
use crate::numerics::{ensure_finite_vector, orthonormal_basis, rank, singular_values, Matrix, Vector};
use crate::solvers::nnls::Nnls;

/// Result of projecting a point onto a cone.
#[derive(Clone, Debug)]
pub struct Projection {
    pub point: Vector,
    /// Dimension of the face of the cone whose relative interior contains `point`.
    pub face_dim: usize,
    pub iterations: usize,
    pub converged: bool,
}

const TIGHT_TOL: f64 = 1e-10;
const ITER_TOL: f64 = 1e-9;
const MAX_GRADIENT_ITERS: usize = 50_000;
const MAX_DYKSTRA_SWEEPS: usize = 10_000;

#[derive(Clone, Debug)]
struct GenPlan {
    nnls: Nnls,
    norms: Vec<f64>,
}

impl GenPlan {
    fn new(g: Matrix) -> Result<Self> {
        let keep: Vec<usize> = {
            let top = g.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
            (0..g.ncols()).filter(|&j| g.column(j).norm() > 1e-13 * top).collect()
        };
        let g = g.select_columns(&keep);
        let norms = g.column_iter().map(|c| c.norm()).collect();
        Ok(Self {
            nnls: Nnls::new(g)?,
            norms,
        })
    }

    fn g(&self) -> &Matrix {
        self.nnls.matrix()
    }

    /// Projection onto the conic hull and the generators tight against the residual.
    fn solve(&self, x: &Vector) -> Result<(Vector, Vec<usize>, Vec<usize>, usize, bool)> {
        let sol = self.nnls.solve(x)?;
        let p = self.g() * &sol.coef;
        let r = x - &p;
        let xn = x.norm();
        let w = self.g().transpose() * &r;
        let tight: Vec<usize> = (0..self.norms.len())
            .filter(|&j| w[j] >= -TIGHT_TOL * self.norms[j] * xn)
            .collect();
        Ok((p, tight, sol.passive, sol.iterations, sol.converged))
    }
}

#[derive(Clone, Debug)]
enum Plan {
    Subspace(Matrix),
    Orthant,
    Generators(GenPlan),
    Planar(PlanarShape),
    /// Moreau: project onto the polar (spanned by the normals) and subtract.
    Inequalities(GenPlan),
    L1(L1Pattern),
    /// Image under an isometry `Q`, with the inner plan in `Q`'s column space.
    Isometric {
        q: Matrix,
        inner: Box<Plan>,
    },
    Iterative(Box<IterPlan>),
    Polar(Box<Plan>),
    Product(Vec<(usize, Plan)>),
    Dykstra(Vec<Plan>),
}

#[derive(Clone, Debug)]
struct IterPlan {
    map: Matrix,
    inner: Plan,
    lipschitz: f64,
    strong: f64,
}

/// A cone compiled for repeated projections.
#[derive(Clone, Debug)]
pub struct PreparedCone {
    dim: usize,
    plan: Plan,
}

impl PreparedCone {
    pub fn new(cone: &ConeRep) -> Result<Self> {
        let dim = cone.validate()?;
        Ok(Self {
            dim,
            plan: compile(cone)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn project(&self, x: &Vector) -> Result<Projection> {
        if x.len() != self.dim {
            return mismatch(format!("point has length {} but cone lives in R^{}", x.len(), self.dim));
        }
        ensure_finite_vector(x, "projection input")?;
        if x.iter().all(|&v| v == 0.0) {
            return Ok(Projection {
                point: x.clone(),
                face_dim: 0,
                iterations: 0,
                converged: true,
            });
        }
        project_plan(&self.plan, x)
    }
}

fn compile(cone: &ConeRep) -> Result<Plan> {
    Ok(match cone {
        ConeRep::Subspace { basis } => Plan::Subspace(basis.clone()),
        ConeRep::NonnegOrthant { .. } => Plan::Orthant,
        ConeRep::GeneratorCone { generators } => generator_plan(generators.clone())?,
        ConeRep::InequalityCone { normals } => Plan::Inequalities(GenPlan::new(normals.clone())?),
        ConeRep::L1SubdiffCone(p) => Plan::L1(p.clone()),
        ConeRep::LinearImage { map, inner } => compile_image(map, inner)?,
        ConeRep::Polar { inner } => Plan::Polar(Box::new(compile(inner)?)),
        ConeRep::ProductCone { factors } => {
            let mut parts = Vec::with_capacity(factors.len());
            for f in factors {
                parts.push((f.ambient_dim(), compile(f)?));
            }
            Plan::Product(parts)
        }
        ConeRep::Intersection { cones } => {
            if cones.len() == 1 {
                compile(&cones[0])?
            } else if let Some(w) = cone.inequality_normals()? {
                Plan::Inequalities(GenPlan::new(w)?)
            } else {
                Plan::Dykstra(cones.iter().map(compile).collect::<Result<_>>()?)
            }
        }
    })
}

fn generator_plan(g: Matrix) -> Result<Plan> {
    if g.nrows() == 2 {
        return Ok(Plan::Planar(planar_shape(&g)));
    }
    Ok(Plan::Generators(GenPlan::new(g)?))
}

fn project_planar(shape: &PlanarShape, x: &Vector) -> (Vector, usize) {
    let cross = |u: &Vector, v: &Vector| u[0] * v[1] - u[1] * v[0];
    match shape {
        PlanarShape::Zero => (Vector::zeros(2), 0),
        PlanarShape::Plane => (x.clone(), 2),
        PlanarShape::Line(u) => (u * u.dot(x), 1),
        PlanarShape::HalfPlane(nrm) => {
            let t = nrm.dot(x);
            if t <= 0.0 {
                (x.clone(), 2)
            } else {
                (x - nrm * t, 1)
            }
        }
        PlanarShape::Wedge { a, b, .. } => {
            if cross(a, x) >= 0.0 && cross(x, b) >= 0.0 {
                return (x.clone(), 2);
            }
            let (ta, tb) = (a.dot(x), b.dot(x));
            if ta <= 0.0 && tb <= 0.0 {
                (Vector::zeros(2), 0)
            } else if ta >= tb {
                (a * ta, 1)
            } else {
                (b * tb, 1)
            }
        }
    }
}

fn compile_image(map: &Matrix, inner: &ConeRep) -> Result<Plan> {
    let (m, k) = reduce_image(map, inner);
    let n = m.nrows();
    if let ConeRep::Subspace { basis } = &k {
        return Ok(Plan::Subspace(orthonormal_basis(&(&m * basis), 1e-10)?));
    }
    let injective = m.ncols() <= n && rank(&m, 1e-10)? == m.ncols();
    if injective {
        if let Some(w) = k.inequality_normals()? {
            // m = Q R, so m K = Q (R K) and R K = {z : (R^{-T} W)^T z <= 0}.
            let qr = m.clone().qr();
            let q = qr.q();
            let r = qr.r();
            let rt = r.transpose();
            let normals = rt
                .solve_lower_triangular(&w)
                .ok_or_else(|| crate::Error::Numerical("triangular solve".into()))?;
            return Ok(Plan::Isometric {
                q,
                inner: Box::new(Plan::Inequalities(GenPlan::new(normals)?)),
            });
        }
    }
    let unreduced = ConeRep::LinearImage {
        map: map.clone(),
        inner: Box::new(inner.clone()),
    };
    if let Some(g) = unreduced.generators()? {
        if g.ncols() <= super::MAX_GENERATORS {
            return generator_plan(g);
        }
    }
    let sv = singular_values(&m)?;
    let lipschitz = sv.first().copied().unwrap_or(0.0).powi(2);
    let strong = if injective {
        sv.last().copied().unwrap_or(0.0).powi(2)
    } else {
        0.0
    };
    Ok(Plan::Iterative(Box::new(IterPlan {
        map: m,
        inner: compile(&k)?,
        lipschitz: lipschitz.max(f64::MIN_POSITIVE),
        strong,
    })))
}

fn project_plan(plan: &Plan, x: &Vector) -> Result<Projection> {
    let n = x.len();
    let done = |point: Vector, face_dim: usize| Projection {
        point,
        face_dim,
        iterations: 0,
        converged: true,
    };
    Ok(match plan {
        Plan::Subspace(b) => done(b * (b.transpose() * x), b.ncols()),
        Plan::Orthant => {
            let p = x.map(|v| v.max(0.0));
            let k = p.iter().filter(|&&v| v > 0.0).count();
            done(p, k)
        }
        Plan::Generators(gp) => {
            let (p, tight, passive, iterations, converged) = gp.solve(x)?;
            let face = if tight.len() == passive.len() {
                passive.len()
            } else {
                face_rank(&gp.g().select_columns(&tight))
            };
            Projection {
                point: p,
                face_dim: face,
                iterations,
                converged,
            }
        }
        Plan::Inequalities(gp) => {
            let (polar_part, _, _, iterations, converged) = gp.solve(x)?;
            let p = x - polar_part;
            let pn = x.norm();
            let w = gp.g().transpose() * &p;
            let tight: Vec<usize> = (0..gp.norms.len())
                .filter(|&j| w[j] >= -TIGHT_TOL * gp.norms[j] * pn)
                .collect();
            let face = n - face_rank(&gp.g().select_columns(&tight));
            Projection {
                point: p,
                face_dim: face,
                iterations,
                converged,
            }
        }
        Plan::Planar(shape) => {
            let (p, face) = project_planar(shape, x);
            done(p, face)
        }
        Plan::L1(pattern) => {
            let (p, t) = pattern.project(x);
            let face = pattern.face_dim(x, t);
            done(p, face)
        }
        Plan::Isometric { q, inner } => {
            let z = q.transpose() * x;
            if z.iter().all(|&v| v == 0.0) {
                return Ok(done(Vector::zeros(n), 0));
            }
            let r = project_plan(inner, &z)?;
            Projection {
                point: q * r.point,
                ..r
            }
        }
        Plan::Iterative(it) => project_iterative(it, x)?,
        Plan::Polar(inner) => {
            let r = project_plan(inner, x)?;
            Projection {
                point: x - &r.point,
                face_dim: n - r.face_dim.min(n),
                iterations: r.iterations,
                converged: r.converged,
            }
        }
        Plan::Product(parts) => {
            let mut point = Vector::zeros(n);
            let mut face = 0;
            let mut iterations = 0;
            let mut converged = true;
            let mut off = 0;
            for (d, part) in parts {
                let xi = x.rows(off, *d).into_owned();
                let r = if xi.iter().all(|&v| v == 0.0) {
                    done(xi, 0)
                } else {
                    project_plan(part, &xi)?
                };
                point.rows_mut(off, *d).copy_from(&r.point);
                face += r.face_dim;
                iterations = iterations.max(r.iterations);
                converged &= r.converged;
                off += d;
            }
            Projection {
                point,
                face_dim: face,
                iterations,
                converged,
            }
        }
        Plan::Dykstra(parts) => {
            let (p, iterations, converged) = dykstra(parts, x)?;
            let face = jacobian_trace(x, &p, |y| Ok(dykstra(parts, y)?.0))?;
            Projection {
                point: p,
                face_dim: face,
                iterations,
                converged,
            }
        }
    })
}

/// Accelerated projected gradient for `min_{v in K} |x - M v|^2 / 2`.
fn project_iterative(it: &IterPlan, x: &Vector) -> Result<Projection> {
    let k = it.map.ncols();
    let step = 1.0 / it.lipschitz;
    let mt_x = it.map.transpose() * x;
    let scale = mt_x.norm().max(f64::MIN_POSITIVE);
    let momentum_const = if it.strong > 0.0 {
        let (l, mu) = (it.lipschitz.sqrt(), it.strong.sqrt());
        Some((l - mu) / (l + mu))
    } else {
        None
    };
    let mut v = Vector::zeros(k);
    let mut y = v.clone();
    let mut t = 1.0f64;
    let mut face = 0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_GRADIENT_ITERS {
        iterations += 1;
        let grad = it.map.transpose() * (&it.map * &y) - &mt_x;
        let arg = &y - grad * step;
        let r = if arg.iter().all(|&a| a == 0.0) {
            Projection {
                point: arg.clone(),
                face_dim: 0,
                iterations: 0,
                converged: true,
            }
        } else {
            project_plan(&it.inner, &arg)?
        };
        let v_next = r.point;
        face = r.face_dim;
        let gap = (&v_next - &y).norm() * it.lipschitz;
        let beta = match momentum_const {
            Some(b) => b,
            None => {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                let b = (t - 1.0) / t_next;
                t = t_next;
                b
            }
        };
        y = &v_next + (&v_next - &v) * beta;
        v = v_next;
        if gap <= ITER_TOL * scale {
            converged = true;
            break;
        }
    }
    let point = &it.map * &v;
    let face_dim = if point.norm() <= 1e-12 * x.norm() {
        0
    } else {
        face.min(x.len())
    };
    Ok(Projection {
        point,
        face_dim,
        iterations,
        converged,
    })
}

fn dykstra(parts: &[Plan], x: &Vector) -> Result<(Vector, usize, bool)> {
    let n = x.len();
    let mut incs = vec![Vector::zeros(n); parts.len()];
    let mut cur = x.clone();
    let tol = ITER_TOL * x.norm().max(f64::MIN_POSITIVE);
    for sweep in 1..=MAX_DYKSTRA_SWEEPS {
        let start = cur.clone();
        let mut moved = 0.0f64;
        for (i, part) in parts.iter().enumerate() {
            let arg = &cur + &incs[i];
            let p = if arg.iter().all(|&a| a == 0.0) {
                arg.clone()
            } else {
                project_plan(part, &arg)?.point
            };
            let new_inc = &arg - &p;
            moved += (&new_inc - &incs[i]).norm_squared();
            incs[i] = new_inc;
            cur = p;
        }
        if (&cur - &start).norm() <= tol && moved.sqrt() <= tol * 10.0 {
            return Ok((cur, sweep, true));
        }
    }
    Ok((cur, MAX_DYKSTRA_SWEEPS, false))
}

/// The projection is locally the orthogonal projector onto the span of the active face,
/// so the trace of its Jacobian is the face dimension.
fn jacobian_trace<F: Fn(&Vector) -> Result<Vector>>(x: &Vector, p: &Vector, proj: F) -> Result<usize> {
    let h = 1e-5 * x.norm().max(1e-12);
    let mut tr = 0.0;
    for i in 0..x.len() {
        let mut y = x.clone();
        y[i] += h;
        let q = proj(&y)?;
        tr += (q[i] - p[i]) / h;
    }
    Ok(tr.round().max(0.0) as usize)
}

#[cfg(test)]
pub(crate) fn debug_plan_kind(c: &ConeRep) -> String {
    let p = compile(c).unwrap();
    let s = format!("{p:?}");
    s.split(['(', ' ', '{']).next().unwrap_or("").to_string()
}

/// Projection through the accelerated gradient route regardless of structure.
#[cfg(test)]
pub(crate) fn project_image_iteratively(map: &Matrix, inner: &ConeRep, x: &Vector) -> Result<Projection> {
    let sv = singular_values(map)?;
    let injective = map.ncols() <= map.nrows() && rank(map, 1e-10)? == map.ncols();
    let it = IterPlan {
        map: map.clone(),
        inner: compile(inner)?,
        lipschitz: sv[0] * sv[0],
        strong: if injective { sv[sv.len() - 1].powi(2) } else { 0.0 },
    };
    project_iterative(&it, x)
}
