//! Scalar fields on the ambient chart with value / gradient / Hessian access.
//!
//! Every consumer in this crate needs coordinate (partial-derivative)
//! gradients and Hessians at chart points; covariant corrections are applied
//! by the callers that need them. Analytic modes (quadratic, polynomial,
//! radial) return exact derivatives; the tabulated and closure modes fall
//! back to central finite differences and are correspondingly less accurate.

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaceform::Spaceform;

/// Trivariate polynomial with exact evaluation and differentiation.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly3 {
    /// `(coefficient, [i, j, k])` for the monomial `x^i y^j z^k`.
    pub terms: Vec<(f64, [u8; 3])>,
}

impl Poly3 {
    pub fn new(terms: Vec<(f64, [u8; 3])>) -> Self {
        Poly3 { terms }
    }

    pub fn constant(c: f64) -> Self {
        Poly3 { terms: vec![(c, [0, 0, 0])] }
    }

    pub fn eval(&self, p: Vector3<f64>) -> f64 {
        self.terms
            .iter()
            .map(|&(c, [i, j, k])| {
                c * p.x.powi(i as i32) * p.y.powi(j as i32) * p.z.powi(k as i32)
            })
            .sum()
    }

    /// Exact partial derivative along `axis` (0, 1, or 2).
    pub fn diff(&self, axis: usize) -> Poly3 {
        let terms = self
            .terms
            .iter()
            .filter(|(_, e)| e[axis] > 0)
            .map(|&(c, e)| {
                let mut d = e;
                d[axis] -= 1;
                (c * e[axis] as f64, d)
            })
            .collect();
        Poly3 { terms }
    }

    /// Random polynomial of total degree at most `deg` with coefficients in
    /// `[-1, 1]`.
    pub fn random(rng: &mut impl rand::Rng, deg: u8) -> Poly3 {
        let mut terms = Vec::new();
        for i in 0..=deg {
            for j in 0..=(deg - i) {
                for k in 0..=(deg - i - j) {
                    terms.push((rng.gen_range(-1.0..1.0), [i, j, k]));
                }
            }
        }
        Poly3 { terms }
    }
}

/// Regular-grid scalar table with trilinear interpolation. Derivatives come
/// from finite differences of the interpolant, so they are low-order; this
/// mode exists for externally supplied data, not for accuracy studies.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrilinearTable {
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub dims: [usize; 3],
    /// Row-major `data[(ix * ny + iy) * nz + iz]`.
    pub data: Vec<f64>,
}

impl TrilinearTable {
    pub fn validate(&self) -> Result<()> {
        let n = self.dims[0] * self.dims[1] * self.dims[2];
        if self.dims.iter().any(|&d| d < 2) {
            return Err(Error::Construction("table needs at least 2 samples per axis".into()));
        }
        if self.spacing.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::Construction("table spacing must be positive".into()));
        }
        if self.data.len() != n {
            return Err(Error::Construction(format!(
                "table data has {} entries, dims imply {n}",
                self.data.len()
            )));
        }
        Ok(())
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let t: TrilinearTable = serde_json::from_str(json)
            .map_err(|e| Error::Construction(format!("table JSON: {e}")))?;
        t.validate()?;
        Ok(t)
    }

    fn value(&self, p: Vector3<f64>) -> f64 {
        let mut idx = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let t = (p[a] - self.origin[a]) / self.spacing[a];
            let t = t.clamp(0.0, (self.dims[a] - 1) as f64 - 1e-12);
            let i = t.floor() as usize;
            idx[a] = i.min(self.dims[a] - 2);
            frac[a] = t - idx[a] as f64;
        }
        let at = |dx: usize, dy: usize, dz: usize| {
            self.data[((idx[0] + dx) * self.dims[1] + idx[1] + dy) * self.dims[2] + idx[2] + dz]
        };
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let c00 = lerp(at(0, 0, 0), at(1, 0, 0), frac[0]);
        let c10 = lerp(at(0, 1, 0), at(1, 1, 0), frac[0]);
        let c01 = lerp(at(0, 0, 1), at(1, 0, 1), frac[0]);
        let c11 = lerp(at(0, 1, 1), at(1, 1, 1), frac[0]);
        let c0 = lerp(c00, c10, frac[1]);
        let c1 = lerp(c01, c11, frac[1]);
        lerp(c0, c1, frac[2])
    }
}

type RadialProfile = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;
type ScalarFn = Arc<dyn Fn(Vector3<f64>) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    /// `f(x) = x^T A x + b . x + c` with `A` symmetric.
    Quadratic { a: Matrix3<f64>, b: Vector3<f64>, c: f64 },
    /// Polynomial with precomputed exact derivative polynomials.
    Poly {
        p: Poly3,
        grad: Box<[Poly3; 3]>,
        hess: Box<[Poly3; 6]>, // xx, xy, xz, yy, yz, zz
    },
    /// `f = profile(r)` of the geodesic radius; profile returns (f, f', f'').
    Radial { space: Spaceform, profile: RadialProfile },
    /// Trilinear table, finite-difference derivatives.
    Table { table: Arc<TrilinearTable>, step: f64 },
    /// Arbitrary closure, finite-difference derivatives.
    Custom { f: ScalarFn, step: f64 },
}

/// A scalar field on the chart, queried pointwise.
#[derive(Clone)]
pub struct AmbientField {
    kind: Kind,
}

impl std::fmt::Debug for AmbientField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self.kind {
            Kind::Quadratic { .. } => "Quadratic",
            Kind::Poly { .. } => "Poly",
            Kind::Radial { .. } => "Radial",
            Kind::Table { .. } => "Table",
            Kind::Custom { .. } => "Custom",
        };
        write!(f, "AmbientField::{name}")
    }
}

/// Default finite-difference step for the table and closure modes: balances
/// the O(h^2) truncation of the central stencils against the eps/h^2
/// round-off of the second-derivative stencil.
pub const FD_STEP: f64 = 1e-4;

impl AmbientField {
    pub fn constant(c: f64) -> Self {
        AmbientField {
            kind: Kind::Quadratic { a: Matrix3::zeros(), b: Vector3::zeros(), c },
        }
    }

    /// `f(x) = b . x + c`.
    pub fn linear(b: Vector3<f64>, c: f64) -> Self {
        AmbientField { kind: Kind::Quadratic { a: Matrix3::zeros(), b, c } }
    }

    /// `f(x) = x^T A x + b . x + c`; `A` is symmetrized.
    pub fn quadratic(a: Matrix3<f64>, b: Vector3<f64>, c: f64) -> Self {
        let a = 0.5 * (a + a.transpose());
        AmbientField { kind: Kind::Quadratic { a, b, c } }
    }

    pub fn polynomial(p: Poly3) -> Self {
        let grad = Box::new([p.diff(0), p.diff(1), p.diff(2)]);
        let hess = Box::new([
            grad[0].diff(0),
            grad[0].diff(1),
            grad[0].diff(2),
            grad[1].diff(1),
            grad[1].diff(2),
            grad[2].diff(2),
        ]);
        AmbientField { kind: Kind::Poly { p, grad, hess } }
    }

    /// Radial field: `profile(r)` must return `(f, f', f'')` at geodesic
    /// radius `r`. Derivatives convert through the chart bridge exactly.
    pub fn radial(
        space: Spaceform,
        profile: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static,
    ) -> Self {
        AmbientField { kind: Kind::Radial { space, profile: Arc::new(profile) } }
    }

    pub fn from_table(table: TrilinearTable) -> Result<Self> {
        table.validate()?;
        Ok(AmbientField {
            kind: Kind::Table { table: Arc::new(table), step: FD_STEP },
        })
    }

    /// Wrap a closure; derivatives by central differences with `step`
    /// (pass [`FD_STEP`] unless the field has unusual scales).
    pub fn from_fn(f: impl Fn(Vector3<f64>) -> f64 + Send + Sync + 'static, step: f64) -> Self {
        AmbientField { kind: Kind::Custom { f: Arc::new(f), step } }
    }

    pub fn value(&self, p: Vector3<f64>) -> f64 {
        match &self.kind {
            Kind::Quadratic { a, b, c } => (p.transpose() * a * p)[(0, 0)] + b.dot(&p) + c,
            Kind::Poly { p: poly, .. } => poly.eval(p),
            Kind::Radial { space, profile } => {
                let r = space.geodesic_radius(p.norm()).unwrap_or(f64::NAN);
                profile(r)[0]
            }
            Kind::Table { table, .. } => table.value(p),
            Kind::Custom { f, .. } => f(p),
        }
    }

    /// Coordinate (partial-derivative) gradient.
    pub fn gradient(&self, p: Vector3<f64>) -> Vector3<f64> {
        match &self.kind {
            Kind::Quadratic { a, b, .. } => 2.0 * a * p + b,
            Kind::Poly { grad, .. } => {
                Vector3::new(grad[0].eval(p), grad[1].eval(p), grad[2].eval(p))
            }
            Kind::Radial { space, profile } => {
                let s = p.norm();
                if s < 1e-8 {
                    return Vector3::zeros();
                }
                let r = space.geodesic_radius(s).unwrap_or(f64::NAN);
                let fp = profile(r)[1];
                fp * space.conf_factor(p) * (p / s)
            }
            Kind::Table { table, step } => {
                let f = |q: Vector3<f64>| table.value(q);
                fd_gradient(&f, p, *step)
            }
            Kind::Custom { f, step } => fd_gradient(f.as_ref(), p, *step),
        }
    }

    /// Coordinate (partial-derivative) Hessian; symmetric by construction.
    pub fn hessian(&self, p: Vector3<f64>) -> Matrix3<f64> {
        match &self.kind {
            Kind::Quadratic { a, .. } => 2.0 * a,
            Kind::Poly { hess, .. } => {
                let xx = hess[0].eval(p);
                let xy = hess[1].eval(p);
                let xz = hess[2].eval(p);
                let yy = hess[3].eval(p);
                let yz = hess[4].eval(p);
                let zz = hess[5].eval(p);
                Matrix3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz)
            }
            Kind::Radial { space, profile } => {
                let s = p.norm();
                let k = space.k();
                if s < 1e-8 {
                    // Smooth radial limit: Hessian is F''(0) * identity with
                    // F the profile as a function of chart radius.
                    let [_, _, fpp] = profile(space.geodesic_radius(s).unwrap_or(0.0));
                    let e0 = space.conf_factor(Vector3::zeros());
                    return Matrix3::identity() * (fpp * e0 * e0);
                }
                let r = space.geodesic_radius(s).unwrap_or(f64::NAN);
                let [_, fp, fpp] = profile(r);
                let ef = space.conf_factor(p);
                let dfds = fp * ef;
                let d2fds2 = (fpp - k * s * fp) * ef * ef;
                let xh = p / s;
                let proj = Matrix3::identity() - xh * xh.transpose();
                d2fds2 * (xh * xh.transpose()) + (dfds / s) * proj
            }
            Kind::Table { table, step } => {
                let f = |q: Vector3<f64>| table.value(q);
                fd_hessian(&f, p, *step)
            }
            Kind::Custom { f, step } => fd_hessian(f.as_ref(), p, *step),
        }
    }
}

fn fd_gradient(f: &dyn Fn(Vector3<f64>) -> f64, p: Vector3<f64>, h: f64) -> Vector3<f64> {
    let mut g = Vector3::zeros();
    for a in 0..3 {
        let mut hi = p;
        let mut lo = p;
        hi[a] += h;
        lo[a] -= h;
        g[a] = (f(hi) - f(lo)) / (2.0 * h);
    }
    g
}

fn fd_hessian(f: &dyn Fn(Vector3<f64>) -> f64, p: Vector3<f64>, h: f64) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    let f0 = f(p);
    for a in 0..3 {
        let mut hi = p;
        let mut lo = p;
        hi[a] += h;
        lo[a] -= h;
        m[(a, a)] = (f(hi) - 2.0 * f0 + f(lo)) / (h * h);
    }
    for a in 0..3 {
        for b in (a + 1)..3 {
            let mut pp = p;
            let mut pm = p;
            let mut mp = p;
            let mut mm = p;
            pp[a] += h;
            pp[b] += h;
            pm[a] += h;
            pm[b] -= h;
            mp[a] -= h;
            mp[b] += h;
            mm[a] -= h;
            mm[b] -= h;
            let v = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quadratic_derivatives_are_exact() {
        let a = Matrix3::new(1.0, 2.0, 0.0, 0.0, -1.0, 0.5, 0.0, 0.0, 3.0);
        let f = AmbientField::quadratic(a, Vector3::new(1.0, 0.0, -2.0), 4.0);
        let p = Vector3::new(0.3, -0.7, 0.2);
        // Symmetrized A.
        let s = 0.5 * (a + a.transpose());
        assert_relative_eq!(
            f.value(p),
            (p.transpose() * s * p)[(0, 0)] + p.x - 2.0 * p.z + 4.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(f.gradient(p), 2.0 * s * p + Vector3::new(1.0, 0.0, -2.0));
        assert_relative_eq!(f.hessian(p), 2.0 * s);
    }

    #[test]
    fn poly3_eval_and_diff() {
        // f = x^2 y + 3 z^4 - 2
        let p = Poly3::new(vec![(1.0, [2, 1, 0]), (3.0, [0, 0, 4]), (-2.0, [0, 0, 0])]);
        let at = Vector3::new(2.0, -1.0, 1.0);
        assert_relative_eq!(p.eval(at), -4.0 + 3.0 - 2.0);
        assert_relative_eq!(p.diff(0).eval(at), 2.0 * 2.0 * -1.0); // 2xy
        assert_relative_eq!(p.diff(1).eval(at), 4.0); // x^2
        assert_relative_eq!(p.diff(2).eval(at), 12.0); // 12 z^3
        let f = AmbientField::polynomial(p);
        let h = f.hessian(at);
        assert_relative_eq!(h[(0, 0)], -2.0); // 2y
        assert_relative_eq!(h[(0, 1)], 4.0); // 2x
        assert_relative_eq!(h[(2, 2)], 36.0); // 36 z^2
        assert_relative_eq!(h[(1, 1)], 0.0);
    }

    #[test]
    fn radial_euclidean_half_r_squared() {
        // f = r^2 / 2 in flat space: gradient x, Hessian identity.
        let f = AmbientField::radial(Spaceform::Euclidean, |r| [0.5 * r * r, r, 1.0]);
        let p = Vector3::new(0.4, -0.1, 0.9);
        assert_relative_eq!(f.value(p), 0.5 * p.norm_squared(), epsilon = 1e-14);
        assert_relative_eq!(f.gradient(p), p, epsilon = 1e-13);
        assert_relative_eq!(f.hessian(p), Matrix3::identity(), epsilon = 1e-12);
        // Near the origin the limit branch must agree.
        let q = Vector3::new(1e-10, 0.0, 0.0);
        assert_relative_eq!(f.hessian(q), Matrix3::identity(), epsilon = 1e-10);
    }

    #[test]
    fn radial_hyperbolic_matches_finite_differences() {
        // f = cosh r on hyperbolic space, checked against the closure mode
        // (which differentiates the composite chart expression numerically).
        let space = Spaceform::Hyperbolic;
        let fa = AmbientField::radial(space, |r| [r.cosh(), r.sinh(), r.cosh()]);
        let fn_ = AmbientField::from_fn(
            move |p| {
                let (r, _) = space.polar_from_point(p).unwrap();
                r.cosh()
            },
            FD_STEP,
        );
        for p in [
            Vector3::new(0.3, 0.1, -0.2),
            Vector3::new(0.0, 0.55, 0.1),
            Vector3::new(-0.4, 0.2, 0.35),
        ] {
            assert_relative_eq!(fa.value(p), fn_.value(p), epsilon = 1e-14);
            assert_relative_eq!(fa.gradient(p), fn_.gradient(p), epsilon = 1e-6);
            let ha = fa.hessian(p);
            let hf = fn_.hessian(p);
            for i in 0..3 {
                for j in 0..3 {
                    assert_relative_eq!(ha[(i, j)], hf[(i, j)], epsilon = 2e-6);
                }
            }
        }
    }

    #[test]
    fn closure_mode_derivatives() {
        let f = AmbientField::from_fn(|p| (p.x).sin() * (p.y).cos() + p.z, FD_STEP);
        let p = Vector3::new(0.5, 0.3, -1.0);
        let g = f.gradient(p);
        assert_relative_eq!(g.x, 0.5_f64.cos() * 0.3_f64.cos(), epsilon = 1e-8);
        assert_relative_eq!(g.y, -(0.5_f64.sin()) * 0.3_f64.sin(), epsilon = 1e-8);
        assert_relative_eq!(g.z, 1.0, epsilon = 1e-8);
        let h = f.hessian(p);
        assert_relative_eq!(h[(0, 0)], -(0.5_f64.sin()) * 0.3_f64.cos(), epsilon = 1e-6);
        assert_relative_eq!(h[(0, 1)], -(0.5_f64.cos()) * 0.3_f64.sin(), epsilon = 1e-6);
        assert_relative_eq!(h[(2, 2)], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn table_reproduces_linear_fields() {
        // Trilinear interpolation is exact on linear functions.
        let dims = [5, 4, 6];
        let origin = [-1.0, -1.0, -1.0];
        let spacing = [0.5, 0.7, 0.4];
        let lin = |x: f64, y: f64, z: f64| 2.0 * x - y + 0.5 * z + 3.0;
        let mut data = Vec::new();
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for k in 0..dims[2] {
                    data.push(lin(
                        origin[0] + spacing[0] * i as f64,
                        origin[1] + spacing[1] * j as f64,
                        origin[2] + spacing[2] * k as f64,
                    ));
                }
            }
        }
        let table = TrilinearTable { origin, spacing, dims, data };
        let f = AmbientField::from_table(table).unwrap();
        let p = Vector3::new(0.13, 0.42, 0.71);
        assert_relative_eq!(f.value(p), lin(p.x, p.y, p.z), epsilon = 1e-12);
        let g = f.gradient(p);
        assert_relative_eq!(g.x, 2.0, epsilon = 1e-9);
        assert_relative_eq!(g.y, -1.0, epsilon = 1e-9);
        assert_relative_eq!(g.z, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn table_json_roundtrip_and_validation() {
        let json = r#"{
            "origin": [0.0, 0.0, 0.0],
            "spacing": [1.0, 1.0, 1.0],
            "dims": [2, 2, 2],
            "data": [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]
        }"#;
        let t = TrilinearTable::from_json(json).unwrap();
        assert_eq!(t.dims, [2, 2, 2]);
        let bad = r#"{"origin":[0,0,0],"spacing":[1,1,1],"dims":[2,2,2],"data":[0.0]}"#;
        assert!(TrilinearTable::from_json(bad).is_err());
    }
}
